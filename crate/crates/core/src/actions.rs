//! Twisted Hamiltonian actions, momentum maps and deck transformations.
//!
//! An action is represented by its fundamental vector fields `ρ_a`, the
//! structure constants of the Lie algebra and optionally a list of finite
//! elements (group elements or deck transformations) given as maps of the
//! chart into itself. The sign convention is `[ρ_a, ρ_b] = −Σ_c c^c_{ab} ρ_c`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chart::{Chart, SmoothMap};
use crate::error::{Error, Result};
use crate::form::{lie_derivative, residual_and_scale, vanishing_residual, DifferentialForm, ScalarField, VectorField};
use crate::lcs::LcsStructure;
use crate::report::{Measurement, Verdict};

/// Structure constants `c^a_{bc}` with `[e_b, e_c] = Σ_a c^a_{bc} e_a`.
#[derive(Clone, Debug, PartialEq)]
pub struct StructureConstants {
    dim: usize,
    c: Vec<f64>,
}

impl StructureConstants {
    /// The abelian algebra of dimension `dim`.
    pub fn abelian(dim: usize) -> Self {
        StructureConstants { dim, c: vec![0.0; dim * dim * dim] }
    }

    /// From entries `(a, b, c, value)` meaning `c^a_{bc} = value`; the
    /// antisymmetric partner is filled in.
    pub fn from_entries(dim: usize, entries: &[(usize, usize, usize, f64)]) -> Result<Self> {
        let mut s = Self::abelian(dim);
        for &(a, b, c, v) in entries {
            if a >= dim || b >= dim || c >= dim {
                return Err(Error::InvalidInput(format!(
                    "structure constant index ({a},{b},{c}) out of range for dimension {dim}"
                )));
            }
            if b == c {
                if v != 0.0 {
                    return Err(Error::InvalidInput(format!("c^{a}_{{{b}{b}}} must vanish")));
                }
                continue;
            }
            let existing = s.get(a, b, c);
            if existing != 0.0 && existing != v {
                return Err(Error::InvalidInput(format!(
                    "conflicting values for c^{a}_{{{b}{c}}}: {existing} and {v}"
                )));
            }
            s.set(a, b, c, v);
            s.set(a, c, b, -v);
        }
        Ok(s)
    }

    /// `sl₂` in the basis `(e, f, h)`: `[e,f] = h`, `[h,e] = 2e`, `[h,f] = −2f`.
    pub fn sl2() -> Self {
        Self::from_entries(3, &[(2, 0, 1, 1.0), (0, 2, 0, 2.0), (1, 2, 1, -2.0)]).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, a: usize, b: usize, c: usize) -> usize {
        (a * self.dim + b) * self.dim + c
    }

    /// `c^a_{bc}`.
    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.c[self.idx(a, b, c)]
    }

    fn set(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let i = self.idx(a, b, c);
        self.c[i] = v;
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(|v| *v == 0.0)
    }

    /// Largest entry of `Σ_cyclic [[e_i, e_j], e_k]`.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    for m in 0..d {
                        let mut s = 0.0;
                        for l in 0..d {
                            s += self.get(l, i, j) * self.get(m, l, k)
                                + self.get(l, j, k) * self.get(m, l, i)
                                + self.get(l, k, i) * self.get(m, l, j);
                        }
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Whether `[g, g] = g`.
pub fn lie_algebra_perfect(c: &StructureConstants) -> Result<bool> {
    if c.jacobi_residual() > 1e-12 {
        return Err(Error::InvalidInput(format!(
            "structure constants violate the Jacobi identity (residual {:.3e})",
            c.jacobi_residual()
        )));
    }
    let d = c.dim();
    if d == 0 {
        return Ok(true);
    }
    let pairs: Vec<(usize, usize)> = (0..d).flat_map(|b| (b + 1..d).map(move |c| (b, c))).collect();
    if pairs.is_empty() {
        return Ok(false);
    }
    let m = DMatrix::from_fn(d, pairs.len(), |a, j| c.get(a, pairs[j].0, pairs[j].1));
    let svd = m.svd(false, false);
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return Ok(false);
    }
    Ok(svd.rank(1e-9 * smax) == d)
}

/// Fundamental fields, structure constants and finite elements of an action.
#[derive(Clone, Debug)]
pub struct ActionSpec {
    chart: Arc<Chart>,
    fields: Vec<VectorField>,
    constants: StructureConstants,
    elements: Vec<(String, SmoothMap)>,
}

impl ActionSpec {
    pub fn new(chart: &Arc<Chart>, fields: Vec<VectorField>, constants: StructureConstants) -> Result<Self> {
        if fields.len() != constants.dim() {
            return Err(Error::usage(format!(
                "{} fundamental fields for an algebra of dimension {}",
                fields.len(),
                constants.dim()
            )));
        }
        if fields.iter().any(|f| !f.chart().same_as(chart)) {
            return Err(Error::usage("fundamental fields must live on the action chart"));
        }
        Ok(ActionSpec { chart: chart.clone(), fields, constants, elements: Vec::new() })
    }

    /// Adds a finite element acting on the chart.
    pub fn with_element(mut self, name: &str, map: SmoothMap) -> Result<Self> {
        if !map.source().same_as(&self.chart) || !map.target().same_as(&self.chart) {
            return Err(Error::usage(format!("element `{name}` must map the chart to itself")));
        }
        self.elements.push((name.to_string(), map));
        Ok(self)
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.fields.len()
    }

    pub fn fields(&self) -> &[VectorField] {
        &self.fields
    }

    pub fn field(&self, a: usize) -> &VectorField {
        &self.fields[a]
    }

    pub fn constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn elements(&self) -> &[(String, SmoothMap)] {
        &self.elements
    }

    /// The fundamental field of `Σ vₐ eₐ`.
    pub fn generator(&self, v: &[f64]) -> VectorField {
        let mut out = VectorField::zero(&self.chart);
        for (f, &c) in self.fields.iter().zip(v) {
            out = &out + &f.scaled(c);
        }
        out
    }

    /// `max |[ρ_a, ρ_b] + Σ_c c^c_{ab} ρ_c|` over the points.
    pub fn bracket_relation(&self, pts: &[Vec<f64>]) -> Result<Measurement> {
        let d = self.dim();
        let mut combos = Vec::new();
        for a in 0..d {
            for b in a + 1..d {
                let mut rhs = VectorField::zero(&self.chart);
                for c in 0..d {
                    rhs = &rhs + &self.fields[c].scaled(self.constants.get(c, a, b));
                }
                combos.push(&self.fields[a].bracket(&self.fields[b])? + &rhs);
            }
        }
        Measurement::sweep(pts, |p| {
            let mut r = 0.0_f64;
            let mut s = 0.0_f64;
            for f in &self.fields {
                s = s.max(f.at(p)?.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            }
            for c in &combos {
                r = r.max(c.at(p)?.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
            }
            Ok((r, s))
        })
    }
}

/// Components `μ_a` of a momentum map.
#[derive(Clone, Debug)]
pub struct MomentumMap {
    components: Vec<ScalarField>,
}

impl MomentumMap {
    pub fn new(components: Vec<ScalarField>) -> Result<Self> {
        if components.iter().any(|c| c.degree() != 0) {
            return Err(Error::usage("momentum components are functions"));
        }
        Ok(MomentumMap { components })
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.components
    }

    pub fn component(&self, a: usize) -> &ScalarField {
        &self.components[a]
    }

    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// `μ_v = Σ vₐ μₐ`.
    pub fn paired(&self, v: &[f64]) -> Result<ScalarField> {
        let chart = self.components.first().ok_or_else(|| Error::usage("empty momentum map"))?.chart();
        let mut out = DifferentialForm::zero(chart, 0);
        for (m, &c) in self.components.iter().zip(v) {
            out = out.plus(&m.scaled(c))?;
        }
        Ok(out)
    }

    pub fn values(&self, p: &[f64]) -> Result<Vec<f64>> {
        self.components.iter().map(|m| m.value(p)).collect()
    }
}

/// The constant `θ(X)` with its spread over the samples.
#[derive(Clone, Debug, PartialEq)]
pub struct LeeValue {
    pub value: f64,
    pub spread: f64,
    /// `max |L_X θ|`.
    pub lie_residual: f64,
    /// `max |dθ|`.
    pub closedness_residual: f64,
    pub points: usize,
}

/// The Lee homomorphism `θ(X)`, which is constant when `L_X θ = 0` and `dθ = 0`.
pub fn lee_homomorphism(theta: &DifferentialForm, x: &VectorField, pts: &[Vec<f64>], tol: f64) -> Result<LeeValue> {
    let tx = theta.interior(x)?;
    let lie = lie_derivative(x, theta)?;
    let dtheta = theta.d();
    let mut values = Vec::new();
    let mut lie_residual = 0.0_f64;
    let mut closedness_residual = 0.0_f64;
    for p in pts {
        match tx.value(p) {
            Ok(v) => values.push(v),
            Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => continue,
            Err(e) => return Err(e),
        }
        lie_residual = lie_residual.max(vanishing_residual(&lie, p)?);
        closedness_residual = closedness_residual.max(vanishing_residual(&dtheta, p)?);
    }
    if values.is_empty() {
        return Err(Error::Sampling { chart: theta.chart().name().to_string(), wanted: pts.len(), found: 0 });
    }
    let (lo, hi) = values.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let spread = hi - lo;
    let value = values.iter().sum::<f64>() / values.len() as f64;
    if spread > tol * (1.0 + value.abs()) {
        return Err(Error::NonConstant { what: "θ(X)".into(), spread });
    }
    Ok(LeeValue { value, spread, lie_residual, closedness_residual, points: values.len() })
}

/// Residuals of `L_X ω − θ(X) ω` and of `L_X ω`.
#[derive(Clone, Debug)]
pub struct InvarianceDefect {
    pub twisted: Measurement,
    pub lie: Measurement,
}

pub fn invariance_defect(s: &LcsStructure, x: &VectorField, pts: &[Vec<f64>]) -> Result<InvarianceDefect> {
    let lie = lie_derivative(x, s.omega())?;
    let twisted = lie.minus(&s.omega().times(&s.lee().interior(x)?)?)?;
    let scale = |p: &[f64]| -> Result<f64> { vanishing_residual(s.omega(), p) };
    Ok(InvarianceDefect {
        twisted: Measurement::sweep(pts, |p| Ok((vanishing_residual(&twisted, p)?, scale(p)?)))?,
        lie: Measurement::sweep(pts, |p| Ok((vanishing_residual(&lie, p)?, scale(p)?)))?,
    })
}

/// `max |i_X ω − d_θ f|` with the coefficient scale of `i_X ω`.
pub fn hamiltonian_residual(s: &LcsStructure, x: &VectorField, f: &ScalarField, pts: &[Vec<f64>]) -> Result<Measurement> {
    let lhs = s.omega().interior(x)?;
    let rhs = s.d_theta(f)?;
    Measurement::sweep(pts, |p| {
        let u = lhs.coefficients(p)?;
        let v = rhs.coefficients(p)?;
        Ok(residual_and_scale(&u, &v))
    })
}

/// `μ_a = −η(ρ_a)` for an exact structure `ω = d_θ η` whose potential is
/// invariant and annihilated by the Lee homomorphism.
///
/// Returns the momentum map with the residual of `i_{ρ_a} ω = d_θ μ_a`.
pub fn momentum_from_potential(
    s: &LcsStructure,
    act: &ActionSpec,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<(MomentumMap, Measurement)> {
    let eta = s
        .potential()
        .ok_or_else(|| Error::usage("momentum_from_potential needs a structure with a potential"))?;
    let mut comps = Vec::new();
    let mut total: Option<Measurement> = None;
    for (a, rho) in act.fields().iter().enumerate() {
        let lie = lie_derivative(rho, eta)?;
        let m = Measurement::sweep(pts, |p| Ok((vanishing_residual(&lie, p)?, vanishing_residual(eta, p)?)))?;
        if !m.passes(tol) {
            return Err(Error::Precondition { what: format!("L_ρ{a} η = 0"), residual: m.residual });
        }
        let theta_rho = s.lee().interior(rho)?;
        let m = Measurement::sweep(pts, |p| Ok((theta_rho.value(p)?.abs(), 0.0)))?;
        if !m.passes(tol) {
            return Err(Error::Precondition { what: format!("θ(ρ{a}) = 0"), residual: m.residual });
        }
        let mu = -eta.interior(rho)?;
        let check = hamiltonian_residual(s, rho, &mu, pts)?;
        total = Some(match total {
            Some(t) => t.max(check),
            None => check,
        });
        comps.push(mu);
    }
    Ok((MomentumMap::new(comps)?, total.unwrap_or_else(|| Measurement::single(0.0))))
}

/// Per-generator data of [`verify_twisted_hamiltonian`].
#[derive(Clone, Debug)]
pub struct GeneratorReport {
    /// `i_{ρ_a} ω − d_θ μ_a`.
    pub hamiltonian: Measurement,
    /// `L_{ρ_a} ω`.
    pub invariance: Measurement,
    /// `L_{ρ_a} ω − θ(ρ_a) ω`.
    pub twisted_invariance: Measurement,
    /// Spread of `θ(ρ_a)`.
    pub lee_spread: f64,
    /// Mean of `θ(ρ_a)`.
    pub lee_value: f64,
}

#[derive(Clone, Debug)]
pub struct HamiltonianReport {
    pub generators: Vec<GeneratorReport>,
    pub tol: f64,
}

impl HamiltonianReport {
    pub fn verdict(&self) -> Verdict {
        let mut out = Verdict::Pass;
        for g in &self.generators {
            for m in [&g.hamiltonian, &g.invariance, &g.twisted_invariance] {
                match m.verdict(self.tol) {
                    Verdict::Inconclusive => return Verdict::Inconclusive,
                    Verdict::Fail => out = Verdict::Fail,
                    Verdict::Pass => {}
                }
            }
            if g.lee_spread > self.tol {
                out = Verdict::Fail;
            }
        }
        out
    }

    pub fn passes(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    /// Largest Hamiltonian residual over the generators.
    pub fn hamiltonian_residual(&self) -> f64 {
        self.generators.iter().fold(0.0, |m, g| m.max(g.hamiltonian.residual))
    }

    /// Worst residual among all the measured quantities.
    pub fn worst(&self) -> Measurement {
        let mut out = Measurement::single(0.0);
        out.points = usize::MAX;
        for g in &self.generators {
            out = out
                .max(g.hamiltonian.clone())
                .max(g.invariance.clone())
                .max(g.twisted_invariance.clone())
                .max(Measurement { residual: g.lee_spread, ..g.hamiltonian.clone() });
        }
        if out.points == usize::MAX {
            out.points = 0;
        }
        out
    }
}

pub fn verify_twisted_hamiltonian(
    s: &LcsStructure,
    act: &ActionSpec,
    mu: &MomentumMap,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<HamiltonianReport> {
    if mu.dim() != act.dim() {
        return Err(Error::usage("momentum map and action have different dimensions"));
    }
    let mut generators = Vec::new();
    for (rho, m) in act.fields().iter().zip(mu.components()) {
        let hamiltonian = hamiltonian_residual(s, rho, m, pts)?;
        let defect = invariance_defect(s, rho, pts)?;
        let tx = s.lee().interior(rho)?;
        let mut vals = Vec::new();
        for p in pts {
            if let Ok(v) = tx.value(p) {
                vals.push(v);
            }
        }
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        let (lee_spread, lee_value) = if vals.is_empty() {
            (f64::INFINITY, f64::NAN)
        } else {
            (hi - lo, vals.iter().sum::<f64>() / vals.len() as f64)
        };
        generators.push(GeneratorReport {
            hamiltonian,
            invariance: defect.lie,
            twisted_invariance: defect.twisted,
            lee_spread,
            lee_value,
        });
    }
    Ok(HamiltonianReport { generators, tol })
}

/// Result of [`bracket_hamiltonian_check`].
#[derive(Clone, Debug)]
pub struct BracketReport {
    /// `i_{[X,Y]} ω + d_θ(ω(X, Y))`.
    pub identity: Measurement,
    /// Worst of `L_X ω`, `L_Y ω`, `θ(X)`, `θ(Y)`.
    pub preconditions: Measurement,
    /// Largest `|ω(X, Y)|` seen.
    pub omega_xy: f64,
}

pub fn bracket_hamiltonian_check(
    s: &LcsStructure,
    x: &VectorField,
    y: &VectorField,
    pts: &[Vec<f64>],
) -> Result<BracketReport> {
    // ω(X, Y) = i_Y i_X ω
    let wxy = s.omega().interior(x)?.interior(y)?;
    let lhs = s.omega().interior(&x.bracket(y)?)?;
    let combo = lhs.plus(&s.d_theta(&wxy)?)?;
    let identity = Measurement::sweep(pts, |p| Ok((vanishing_residual(&combo, p)?, vanishing_residual(&lhs, p)?)))?;
    let lx = lie_derivative(x, s.omega())?;
    let ly = lie_derivative(y, s.omega())?;
    let tx = s.lee().interior(x)?;
    let ty = s.lee().interior(y)?;
    let preconditions = Measurement::sweep(pts, |p| {
        let r = vanishing_residual(&lx, p)?
            .max(vanishing_residual(&ly, p)?)
            .max(tx.value(p)?.abs())
            .max(ty.value(p)?.abs());
        Ok((r, vanishing_residual(s.omega(), p)?))
    })?;
    let mut omega_xy = 0.0_f64;
    for p in pts {
        if let Ok(v) = wxy.value(p) {
            omega_xy = omega_xy.max(v.abs());
        }
    }
    Ok(BracketReport { identity, preconditions, omega_xy })
}

/// The inference that an action of a perfect Lie algebra preserving `ω`
/// with vanishing Lee homomorphism is twisted Hamiltonian, with its
/// hypotheses checked numerically. The conclusion is asserted, not
/// constructed.
#[derive(Clone, Debug)]
pub struct PerfectInference {
    pub perfect: bool,
    pub invariance: Measurement,
    pub lee: f64,
    pub holds: bool,
    pub conclusion: &'static str,
}

pub fn perfect_algebra_inference(s: &LcsStructure, act: &ActionSpec, pts: &[Vec<f64>], tol: f64) -> Result<PerfectInference> {
    let perfect = lie_algebra_perfect(act.constants())?;
    let mut invariance = Measurement::single(0.0);
    let mut lee = 0.0_f64;
    for rho in act.fields() {
        invariance = invariance.max(invariance_defect(s, rho, pts)?.lie);
        let tx = s.lee().interior(rho)?;
        for p in pts {
            if let Ok(v) = tx.value(p) {
                lee = lee.max(v.abs());
            }
        }
    }
    let holds = perfect && invariance.passes(tol) && lee <= tol;
    Ok(PerfectInference {
        perfect,
        invariance,
        lee,
        holds,
        conclusion: "each i_{ρ_a} ω is d_θ-exact with primitive ω(ρ_b, ρ_c) combinations, so the action is twisted Hamiltonian",
    })
}

/// A deck transformation with its homothety factor `γ*Ω = c Ω`.
#[derive(Clone, Debug)]
pub struct DeckElement {
    pub name: String,
    pub map: SmoothMap,
    pub factor: f64,
    /// Spread of the pointwise ratio estimates.
    pub spread: f64,
    pub points: usize,
}

impl DeckElement {
    /// The composite `p ↦ self(other(p))`, with its factor refitted.
    pub fn compose(&self, other: &DeckElement, omega: &DifferentialForm, pts: &[Vec<f64>], tol: f64) -> Result<DeckElement> {
        let map = other.map.then(&self.map)?;
        let mut d = deck_homothety(&map, omega, pts, tol)?;
        d.name = format!("{}∘{}", self.name, other.name);
        Ok(d)
    }
}

/// Fits `c` with `γ*Ω = c Ω`, one least-squares ratio per point.
pub fn deck_homothety(gamma: &SmoothMap, omega: &DifferentialForm, pts: &[Vec<f64>], tol: f64) -> Result<DeckElement> {
    let pulled = omega.pullback(gamma)?;
    let mut ratios = Vec::new();
    for p in pts {
        if !gamma.valid_at(p) {
            continue;
        }
        let u = match pulled.coefficients(p) {
            Ok(u) => u,
            Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => continue,
            Err(e) => return Err(e),
        };
        let v = omega.coefficients(p)?;
        let vv: f64 = v.iter().map(|x| x * x).sum();
        if vv == 0.0 {
            continue;
        }
        let c = u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / vv;
        let resid = u.iter().zip(&v).map(|(a, b)| (a - c * b).abs()).fold(0.0, f64::max);
        let scale = v.iter().chain(&u).fold(0.0_f64, |m, x| m.max(x.abs()));
        if resid > tol * (1.0 + scale) {
            return Err(Error::NotHomothety { spread: resid });
        }
        ratios.push(c);
    }
    if ratios.is_empty() {
        return Err(Error::Sampling { chart: omega.chart().name().to_string(), wanted: pts.len(), found: 0 });
    }
    let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
    let factor = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let spread = hi - lo;
    if spread > tol * (1.0 + factor.abs()) {
        return Err(Error::NotHomothety { spread });
    }
    Ok(DeckElement { name: String::new(), map: gamma.clone(), factor, spread, points: ratios.len() })
}

/// `a_γ` for one deck element.
#[derive(Clone, Debug, PartialEq)]
pub struct AutomorphicEntry {
    pub name: String,
    pub c: f64,
    /// Mean of `f∘γ − c f`.
    pub a: f64,
    pub a_spread: f64,
    pub constant: bool,
    /// `a / (1 − c)`, absent when `c = 1`.
    pub k: Option<f64>,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AutomorphicReport {
    pub entries: Vec<AutomorphicEntry>,
    /// Spread of `k(γ)` over the entries that have one.
    pub k_spread: Option<f64>,
    pub tol: f64,
}

impl AutomorphicReport {
    /// Whether `f` passes as an automorphic Hamiltonian candidate: every
    /// `a_γ` constant and `k(γ)` independent of `γ`.
    pub fn consistent(&self) -> bool {
        self.entries.iter().all(|e| e.constant) && self.k_spread.is_none_or(|s| s <= self.tol)
    }

    /// Entries showing the obstruction: `a_γ` not constant, or `c_γ = 1`
    /// with `a_γ ≠ 0` so that `f` cannot be made invariant by a shift.
    pub fn obstructions(&self) -> Vec<&AutomorphicEntry> {
        self.entries
            .iter()
            .filter(|e| !e.constant || (e.k.is_none() && e.a.abs() > self.tol))
            .collect()
    }

    pub fn entry(&self, name: &str) -> Option<&AutomorphicEntry> {
        self.entries.iter().find(|e| e.name == name)
    }
}

/// `a_γ = f∘γ − c_γ f` and `k(γ) = a_γ / (1 − c_γ)` for each deck element.
pub fn automorphic_constants(gammas: &[DeckElement], f: &ScalarField, pts: &[Vec<f64>], tol: f64) -> Result<AutomorphicReport> {
    let mut entries = Vec::new();
    for g in gammas {
        let pulled = f.pullback(&g.map)?;
        let mut vals = Vec::new();
        for p in pts {
            if !g.map.valid_at(p) {
                continue;
            }
            match (pulled.value(p), f.value(p)) {
                (Ok(u), Ok(v)) => vals.push(u - g.factor * v),
                (Err(Error::Domain { .. } | Error::NonFinite { .. }), _)
                | (_, Err(Error::Domain { .. } | Error::NonFinite { .. })) => {}
                (Err(e), _) | (_, Err(e)) => return Err(e),
            }
        }
        if vals.is_empty() {
            return Err(Error::Sampling { chart: f.chart().name().to_string(), wanted: pts.len(), found: 0 });
        }
        let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        let a = vals.iter().sum::<f64>() / vals.len() as f64;
        let a_spread = hi - lo;
        let constant = a_spread <= tol * (1.0 + a.abs());
        let k = ((g.factor - 1.0).abs() > tol && constant).then(|| a / (1.0 - g.factor));
        entries.push(AutomorphicEntry {
            name: g.name.clone(),
            c: g.factor,
            a,
            a_spread,
            constant,
            k,
            points: vals.len(),
        });
    }
    let ks: Vec<f64> = entries.iter().filter_map(|e| e.k).collect();
    let k_spread = (!ks.is_empty()).then(|| {
        let (lo, hi) = ks.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(*v), h.max(*v)));
        hi - lo
    });
    Ok(AutomorphicReport { entries, k_spread, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::report::Sampling;
    use std::collections::BTreeMap;

    fn plane() -> Arc<Chart> {
        Chart::new("plane", &["x", "y"]).shared()
    }

    #[test]
    fn perfect_algebras() {
        assert!(!lie_algebra_perfect(&StructureConstants::abelian(2)).unwrap());
        assert!(lie_algebra_perfect(&StructureConstants::sl2()).unwrap());
        assert!(lie_algebra_perfect(&StructureConstants::abelian(0)).unwrap());
        assert!(StructureConstants::sl2().jacobi_residual() < 1e-15);
        let bad = StructureConstants::from_entries(3, &[(0, 0, 1, 1.0), (1, 1, 2, 1.0)]).unwrap();
        assert!(bad.jacobi_residual() > 0.0);
        assert!(matches!(lie_algebra_perfect(&bad), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn lee_homomorphism_on_cylinder() {
        let c = Chart::new("cyl", &["t", "phi"]).shared();
        let theta = DifferentialForm::dx(&c, 0);
        let pts = c.sample(16, 0).unwrap();
        let v = lee_homomorphism(&theta, &VectorField::coordinate(&c, 0), &pts, 1e-9).unwrap();
        assert_eq!(v.value, 1.0);
        let theta2 = DifferentialForm::one_form(&c, vec![c.var("phi"), Expr::constant(0.0)]).unwrap();
        let err = lee_homomorphism(&theta2, &VectorField::coordinate(&c, 0), &pts, 1e-9);
        assert!(matches!(err, Err(Error::NonConstant { .. })));
    }

    #[test]
    fn radial_field_defect() {
        let c = plane();
        let omega = DifferentialForm::dx(&c, 0).wedge(&DifferentialForm::dx(&c, 1)).unwrap();
        let s = LcsStructure::new(omega, DifferentialForm::zero(&c, 1)).unwrap();
        let x = VectorField::parse(&c, &["x", "y"], &BTreeMap::new()).unwrap();
        let pts = c.sample(8, 0).unwrap();
        let d = invariance_defect(&s, &x, &pts).unwrap();
        assert!((d.lie.raw - 2.0).abs() < 1e-14);
        let z = invariance_defect(&s, &VectorField::zero(&c), &pts).unwrap();
        assert_eq!(z.lie.raw, 0.0);
    }

    #[test]
    fn classical_bracket_identity() {
        let c = Chart::new("r4", &["q1", "p1", "q2", "p2"]).shared();
        let dx = |i| DifferentialForm::dx(&c, i);
        let omega = dx(0).wedge(&dx(1)).unwrap() + dx(2).wedge(&dx(3)).unwrap();
        let s = LcsStructure::new(omega, DifferentialForm::zero(&c, 1)).unwrap();
        let x = VectorField::coordinate(&c, 0);
        let y = VectorField::coordinate(&c, 3);
        let pts = Sampling::default();
        let pts = c.sample(pts.points, pts.seed).unwrap();
        let r = bracket_hamiltonian_check(&s, &x, &y, &pts).unwrap();
        assert!(r.identity.residual < 1e-12);
        assert!(r.preconditions.residual < 1e-12);
        let same = bracket_hamiltonian_check(&s, &x, &x, &pts).unwrap();
        assert_eq!(same.identity.raw, 0.0);
    }

    #[test]
    fn line_automorphic_example() {
        // γ(x) = 2x, Ω = dx has c = 2; f = x − 3 gives a = 3, k = −3.
        let c = Chart::new("line", &["x"]).shared();
        let gamma = SmoothMap::parse(&c, &c, &["2*x"], &BTreeMap::new()).unwrap();
        let pts = c.sample(32, 0).unwrap();
        let mut g = deck_homothety(&gamma, &DifferentialForm::dx(&c, 0), &pts, 1e-9).unwrap();
        g.name = "double".into();
        assert!((g.factor - 2.0).abs() < 1e-14);
        let f = DifferentialForm::scalar(&c, c.var("x") - 3.0);
        let rep = automorphic_constants(&[g], &f, &pts, 1e-9).unwrap();
        let e = rep.entry("double").unwrap();
        assert!((e.a - 3.0).abs() < 1e-12);
        assert!((e.k.unwrap() + 3.0).abs() < 1e-12);
        assert!(rep.consistent());
    }

    #[test]
    fn non_homothety_is_rejected() {
        let c = plane();
        let omega = DifferentialForm::dx(&c, 0).wedge(&DifferentialForm::dx(&c, 1)).unwrap();
        let m = SmoothMap::parse(&c, &c, &["x + y^2", "y"], &BTreeMap::new()).unwrap();
        let pts = c.sample(8, 0).unwrap();
        assert!(deck_homothety(&m, &omega, &pts, 1e-9).is_ok());
        let m = SmoothMap::parse(&c, &c, &["x^3 + x", "y"], &BTreeMap::new()).unwrap();
        assert!(matches!(deck_homothety(&m, &omega, &pts, 1e-9), Err(Error::NotHomothety { .. })));
    }
}
