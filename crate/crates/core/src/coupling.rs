//! Coupling forms on a local trivialization `U × F` of an associated bundle.
//!
//! A [`GaugeChart`] carries a connection potential `A = Σ A^a e_a` on a base
//! chart. Together with a twisted Hamiltonian action on an LCS fiber it
//! defines, on the product chart, the coupling form
//!
//! ```text
//! Ω((X,W),(Y,V)) = ω(W + A(X)ρ, V + A(Y)ρ) − Σ_a μ_a F^a(X,Y),    Θ(X,W) = θ(W)
//! ```
//!
//! Horizontal lifts are `X* = (X, −Σ A^a(X) ρ_a)`, so `[X*, Y*] − [X,Y]*`
//! is the vertical field `−Σ F^a(X,Y) ρ_a`, with `F = dA + ½[A ∧ A]` and
//! `[ρ_a, ρ_b] = −Σ c^c_{ab} ρ_c`. The minus sign on the curvature term
//! makes `Ω(X*, Y*)` the fiberwise Hamiltonian of that vertical field.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::actions::{verify_twisted_hamiltonian, ActionSpec, MomentumMap, StructureConstants};
use crate::chart::{Chart, SmoothMap};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::{
    apply_coefficients, DifferentialForm, EndoField, EndoKernel, FieldKernel, FormKernel, ScalarField, VectorField,
};
use crate::jet::{self, Jet};
use crate::lcs::{nondegeneracy, twisted_derivative, LcsStructure, NONDEGENERACY_THRESHOLD};
use crate::multiindex::{binom, indices, masks};
use crate::report::{CheckResult, Measurement, Provenance, Sampling, Verdict};

/// Sign of the curvature term on horizontal pairs.
pub const CURVATURE_SIGN: f64 = -1.0;

/// Minimum `|det Σ μ_a F^a|` for a point to count as fat.
pub const FATNESS_THRESHOLD: f64 = 1e-4;

/// A connection potential on a base chart.
#[derive(Clone, Debug)]
pub struct GaugeChart {
    base: Arc<Chart>,
    potentials: Vec<DifferentialForm>,
    constants: StructureConstants,
}

impl GaugeChart {
    pub fn new(base: &Arc<Chart>, potentials: Vec<DifferentialForm>, constants: StructureConstants) -> Result<Self> {
        if potentials.len() != constants.dim() {
            return Err(Error::usage(format!(
                "{} potentials for an algebra of dimension {}",
                potentials.len(),
                constants.dim()
            )));
        }
        if potentials.iter().any(|a| a.degree() != 1 || !a.chart().same_as(base)) {
            return Err(Error::usage("gauge potentials must be 1-forms on the base chart"));
        }
        Ok(GaugeChart { base: base.clone(), potentials, constants })
    }

    /// A circle connection.
    pub fn abelian(base: &Arc<Chart>, potential: DifferentialForm) -> Result<Self> {
        Self::new(base, vec![potential], StructureConstants::abelian(1))
    }

    /// The trivial connection `A = 0`.
    pub fn flat(base: &Arc<Chart>, constants: StructureConstants) -> Self {
        let potentials = (0..constants.dim()).map(|_| DifferentialForm::zero(base, 1)).collect();
        GaugeChart { base: base.clone(), potentials, constants }
    }

    pub fn base(&self) -> &Arc<Chart> {
        &self.base
    }

    pub fn potentials(&self) -> &[DifferentialForm] {
        &self.potentials
    }

    pub fn constants(&self) -> &StructureConstants {
        &self.constants
    }

    pub fn dim(&self) -> usize {
        self.potentials.len()
    }

    /// `F^a = dA^a + ½ Σ c^a_{bc} A^b ∧ A^c`.
    pub fn curvature(&self) -> Result<Vec<DifferentialForm>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for a in 0..d {
            let mut f = self.potentials[a].d();
            for b in 0..d {
                for c in b + 1..d {
                    let k = self.constants.get(a, b, c);
                    if k != 0.0 {
                        f = f.plus(&self.potentials[b].wedge(&self.potentials[c])?.scaled(k))?;
                    }
                }
            }
            out.push(f);
        }
        Ok(out)
    }

    /// The two terms `dF^a` and `Σ c^a_{bc} A^b ∧ F^c` of the Bianchi identity.
    fn bianchi_terms(&self) -> Result<Vec<(DifferentialForm, DifferentialForm)>> {
        let f = self.curvature()?;
        let d = self.dim();
        let mut out = Vec::with_capacity(d);
        for a in 0..d {
            let mut rest = DifferentialForm::zero(&self.base, 3);
            for b in 0..d {
                for c in 0..d {
                    let k = self.constants.get(a, b, c);
                    if k != 0.0 {
                        rest = rest.plus(&self.potentials[b].wedge(&f[c])?.scaled(k))?;
                    }
                }
            }
            out.push((f[a].d(), rest));
        }
        Ok(out)
    }

    /// `dF^a + Σ c^a_{bc} A^b ∧ F^c`, which vanishes identically.
    pub fn bianchi(&self) -> Result<Vec<DifferentialForm>> {
        self.bianchi_terms()?.into_iter().map(|(a, b)| a.plus(&b)).collect()
    }

    /// Largest Bianchi defect over the points, relative to its two terms.
    pub fn bianchi_residual(&self, pts: &[Vec<f64>]) -> Result<Measurement> {
        let terms = self.bianchi_terms()?;
        Measurement::sweep(pts, |p| {
            let mut r = 0.0_f64;
            let mut s = 0.0_f64;
            for (a, b) in &terms {
                let u = a.coefficients(p)?;
                let v = b.coefficients(p)?;
                for (x, y) in u.iter().zip(&v) {
                    r = r.max((x + y).abs());
                    s = s.max(x.abs()).max(y.abs());
                }
            }
            Ok((r, s))
        })
    }
}

/// A GaugeChart from a potential of a base 2-form: `A¹ = α` once `dα = ω`.
pub fn circle_fat_from_symplectic(
    omega_base: &DifferentialForm,
    alpha: &DifferentialForm,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<GaugeChart> {
    if omega_base.degree() != 2 || alpha.degree() != 1 || !omega_base.chart().same_as(alpha.chart()) {
        return Err(Error::usage("need a 2-form and a 1-form on the same chart"));
    }
    let da = alpha.d();
    let m = Measurement::sweep(pts, |p| {
        let u = da.coefficients(p)?;
        let v = omega_base.coefficients(p)?;
        Ok(crate::form::residual_and_scale(&u, &v))
    })?;
    if m.verdict(tol) != Verdict::Pass {
        return Err(Error::Precondition { what: "dα = ω on the base".into(), residual: m.residual });
    }
    GaugeChart::abelian(omega_base.chart(), alpha.clone())
}

fn skew(n: usize, c: &[Jet]) -> Vec<Vec<Jet>> {
    let mut m = vec![vec![Jet::zero(); n]; n];
    for (pos, mask) in masks(n, 2).into_iter().enumerate() {
        let ij = indices(mask);
        m[ij[0]][ij[1]] = c[pos].clone();
        m[ij[1]][ij[0]] = -&c[pos];
    }
    m
}

/// `mix[k] = Σ_a A^a(∂_k) ρ_a(y)`, the fiber part of the vertical projection
/// of the base direction `∂_k`.
fn mixing(potentials: &[DifferentialForm], rho: &[VectorField], u: &[Jet], y: &[Jet]) -> Result<Vec<Vec<Jet>>> {
    let m = u.len();
    let n = y.len();
    let mut out = vec![vec![Jet::zero(); n]; m];
    for (a, r) in potentials.iter().zip(rho) {
        if a.is_structurally_zero() || r.is_structurally_zero() {
            continue;
        }
        let ac = a.eval_jets(u)?;
        let rv = r.eval_jets(y)?;
        for k in 0..m {
            if ac[k].is_zero() {
                continue;
            }
            for l in 0..n {
                out[k][l] += &(&ac[k] * &rv[l]);
            }
        }
    }
    Ok(out)
}

#[derive(Debug)]
struct OmegaKernel {
    m: usize,
    n: usize,
    omega: DifferentialForm,
    rho: Vec<VectorField>,
    potentials: Vec<DifferentialForm>,
    momentum: Vec<ScalarField>,
    curvature: Vec<DifferentialForm>,
}

impl FormKernel for OmegaKernel {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let (m, n) = (self.m, self.n);
        let (u, y) = x.split_at(m);
        let w = skew(n, &self.omega.eval_jets(y)?);
        let mix = mixing(&self.potentials, &self.rho, u, y)?;
        // wm[k][l] = ω(mix_k, ∂_l)
        let wm: Vec<Vec<Jet>> = mix
            .iter()
            .map(|mk| {
                (0..n)
                    .map(|l| {
                        let mut s = Jet::zero();
                        for (lp, c) in mk.iter().enumerate() {
                            if !c.is_zero() {
                                s += &(c * &w[lp][l]);
                            }
                        }
                        s
                    })
                    .collect()
            })
            .collect();
        let mut hor = vec![vec![Jet::zero(); m]; m];
        for (f, mu) in self.curvature.iter().zip(&self.momentum) {
            let fv = skew(m, &f.eval_jets(u)?);
            let mv = mu.eval_jets(y)?.swap_remove(0).scale(CURVATURE_SIGN);
            for i in 0..m {
                for j in 0..m {
                    if !fv[i][j].is_zero() {
                        hor[i][j] += &(&mv * &fv[i][j]);
                    }
                }
            }
        }
        let mut out = Vec::with_capacity(binom(m + n, 2));
        for mask in masks(m + n, 2) {
            let ij = indices(mask);
            let (i, j) = (ij[0], ij[1]);
            let v = if i >= m {
                w[i - m][j - m].clone()
            } else if j >= m {
                wm[i][j - m].clone()
            } else {
                let mut s = hor[i][j].clone();
                for l in 0..n {
                    if !mix[j][l].is_zero() {
                        s += &(&wm[i][l] * &mix[j][l]);
                    }
                }
                s
            };
            out.push(v);
        }
        Ok(out)
    }
}

#[derive(Debug)]
struct LiftKernel {
    m: usize,
    field: VectorField,
    potentials: Vec<DifferentialForm>,
    rho: Vec<VectorField>,
}

impl FieldKernel for LiftKernel {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let (u, y) = x.split_at(self.m);
        let xv = self.field.eval_jets(u)?;
        let mut out = xv.clone();
        let mut fiber = vec![Jet::zero(); y.len()];
        for (a, r) in self.potentials.iter().zip(&self.rho) {
            if a.is_structurally_zero() {
                continue;
            }
            let ac = a.eval_jets(u)?;
            let mut ax = Jet::zero();
            for (c, v) in ac.iter().zip(&xv) {
                ax += &(c * v);
            }
            if ax.is_zero() {
                continue;
            }
            for (f, rv) in fiber.iter_mut().zip(r.eval_jets(y)?) {
                *f += &(&ax * &rv);
            }
        }
        out.extend(fiber.into_iter().map(|v| -v));
        Ok(out)
    }
}

#[derive(Debug)]
struct VerticalKernel {
    m: usize,
    field: VectorField,
}

impl FieldKernel for VerticalKernel {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let mut out = vec![Jet::zero(); self.m];
        out.extend(self.field.eval_jets(&x[self.m..])?);
        Ok(out)
    }
}

#[derive(Debug)]
struct TildeJKernel {
    m: usize,
    n: usize,
    j1: EndoField,
    jb: EndoField,
    potentials: Vec<DifferentialForm>,
    rho: Vec<VectorField>,
}

impl EndoKernel for TildeJKernel {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let (m, n) = (self.m, self.n);
        let (u, y) = x.split_at(m);
        let j1 = self.j1.eval_jets(u)?;
        let jb = self.jb.eval_jets(y)?;
        let mix = mixing(&self.potentials, &self.rho, u, y)?;
        // Horizontal lift of ∂_k has fiber part L[l][k] = −mix[k][l]; in the
        // basis (lifts, verticals) J̃ is block diagonal, so in coordinates the
        // lower-left block is L·J₁ − J_b·L.
        let size = m + n;
        let mut out = vec![Jet::zero(); size * size];
        for i in 0..m {
            for k in 0..m {
                out[i * size + k] = j1[i * m + k].clone();
            }
        }
        for l in 0..n {
            for lp in 0..n {
                out[(m + l) * size + m + lp] = jb[l * n + lp].clone();
            }
        }
        for l in 0..n {
            for k in 0..m {
                let mut s = Jet::zero();
                for kp in 0..m {
                    s += &(&(-&mix[kp][l]) * &j1[kp * m + k]);
                }
                for lp in 0..n {
                    s += &(&jb[l * n + lp] * &mix[k][lp]);
                }
                out[(m + l) * size + k] = s;
            }
        }
        Ok(out)
    }
}

/// Coupling data on a product chart `U × F`.
#[derive(Clone, Debug)]
pub struct CouplingChart {
    total: Arc<Chart>,
    gauge: GaugeChart,
    fiber: LcsStructure,
    action: ActionSpec,
    momentum: MomentumMap,
    omega: DifferentialForm,
    theta: DifferentialForm,
    curvature_term: bool,
}

fn assemble(
    gauge: &GaugeChart,
    fiber: &LcsStructure,
    action: &ActionSpec,
    momentum: &MomentumMap,
    curvature_term: bool,
) -> Result<CouplingChart> {
    let base = gauge.base();
    let m = base.dim();
    let n = fiber.chart().dim();
    let total = base.product(fiber.chart())?.shared();
    let proj = SmoothMap::projection(&total, fiber.chart(), &(m..m + n).collect::<Vec<_>>())?;
    let theta = fiber.lee().pullback(&proj)?;
    let kernel = OmegaKernel {
        m,
        n,
        omega: fiber.omega().clone(),
        rho: action.fields().to_vec(),
        potentials: gauge.potentials().to_vec(),
        momentum: momentum.components().to_vec(),
        curvature: if curvature_term { gauge.curvature()? } else { Vec::new() },
    };
    let omega = DifferentialForm::custom(&total, 2, Arc::new(kernel));
    Ok(CouplingChart {
        total,
        gauge: gauge.clone(),
        fiber: fiber.clone(),
        action: action.clone(),
        momentum: momentum.clone(),
        omega,
        theta,
        curvature_term,
    })
}

/// Builds `(Ω, Θ)` after checking that `(fiber, act, mu)` is twisted
/// Hamiltonian on sample points of the fiber chart.
pub fn build_coupling(
    gauge: &GaugeChart,
    fiber: &LcsStructure,
    act: &ActionSpec,
    mu: &MomentumMap,
    sampling: &Sampling,
) -> Result<CouplingChart> {
    if !act.chart().same_as(fiber.chart()) {
        return Err(Error::usage("the action must live on the fiber chart"));
    }
    if gauge.constants() != act.constants() {
        return Err(Error::usage("gauge and action use different structure constants"));
    }
    if mu.dim() != act.dim() || mu.components().iter().any(|f| !f.chart().same_as(fiber.chart())) {
        return Err(Error::usage("the momentum map must have one component per generator on the fiber chart"));
    }
    let pts = fiber.chart().sample(sampling.points, sampling.seed)?;
    let rep = verify_twisted_hamiltonian(fiber, act, mu, &pts, sampling.tol)?;
    if !rep.passes() {
        let w = rep.worst();
        return Err(Error::Precondition {
            what: format!(
                "fiber action is not twisted Hamiltonian for the momentum map ({:?} over {} points)",
                rep.verdict(),
                w.points
            ),
            residual: w.residual,
        });
    }
    assemble(gauge, fiber, act, mu, true)
}

/// The horizontal lift `(X, −Σ A^a(X) ρ_a)` on `total = base × fiber`.
pub fn horizontal_lift(total: &Arc<Chart>, g: &GaugeChart, act: &ActionSpec, x: &VectorField) -> Result<VectorField> {
    if g.constants() != act.constants() {
        return Err(Error::usage("gauge and action use different structure constants"));
    }
    if !x.chart().same_as(g.base()) {
        return Err(Error::usage("the field to lift must live on the base chart"));
    }
    let m = g.base().dim();
    if total.dim() != m + act.chart().dim() || total.coords()[..m] != g.base().coords()[..] {
        return Err(Error::usage("total chart must be base × fiber"));
    }
    if x.is_structurally_zero() {
        return Ok(VectorField::zero(total));
    }
    Ok(VectorField::custom(
        total,
        Arc::new(LiftKernel { m, field: x.clone(), potentials: g.potentials().to_vec(), rho: act.fields().to_vec() }),
    ))
}

/// Argument classes of `d_Θ Ω(X, Y, Z)` up to order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ArgClass {
    VerticalVerticalVertical,
    VerticalVerticalHorizontal,
    HorizontalHorizontalVertical,
    HorizontalHorizontalHorizontal,
}

impl ArgClass {
    pub const ALL: [ArgClass; 4] = [
        ArgClass::VerticalVerticalVertical,
        ArgClass::VerticalVerticalHorizontal,
        ArgClass::HorizontalHorizontalVertical,
        ArgClass::HorizontalHorizontalHorizontal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ArgClass::VerticalVerticalVertical => "vvv",
            ArgClass::VerticalVerticalHorizontal => "vvh",
            ArgClass::HorizontalHorizontalVertical => "hhv",
            ArgClass::HorizontalHorizontalHorizontal => "hhh",
        }
    }

    fn horizontal_count(self) -> usize {
        match self {
            ArgClass::VerticalVerticalVertical => 0,
            ArgClass::VerticalVerticalHorizontal => 1,
            ArgClass::HorizontalHorizontalVertical => 2,
            ArgClass::HorizontalHorizontalHorizontal => 3,
        }
    }
}

impl CouplingChart {
    pub fn total(&self) -> &Arc<Chart> {
        &self.total
    }

    pub fn base(&self) -> &Arc<Chart> {
        self.gauge.base()
    }

    pub fn fiber_chart(&self) -> &Arc<Chart> {
        self.fiber.chart()
    }

    pub fn gauge(&self) -> &GaugeChart {
        &self.gauge
    }

    pub fn fiber(&self) -> &LcsStructure {
        &self.fiber
    }

    pub fn action(&self) -> &ActionSpec {
        &self.action
    }

    pub fn momentum(&self) -> &MomentumMap {
        &self.momentum
    }

    pub fn omega(&self) -> &DifferentialForm {
        &self.omega
    }

    pub fn theta(&self) -> &DifferentialForm {
        &self.theta
    }

    /// `(Ω, Θ)` as an LCS candidate on the total chart.
    pub fn structure(&self) -> Result<LcsStructure> {
        LcsStructure::new(self.omega.clone(), self.theta.clone())
    }

    /// The same data with the curvature term dropped: a negative control
    /// that breaks closedness on horizontal–horizontal–vertical triples.
    pub fn without_curvature_term(&self) -> Result<CouplingChart> {
        assemble(&self.gauge, &self.fiber, &self.action, &self.momentum, false)
    }

    pub fn has_curvature_term(&self) -> bool {
        self.curvature_term
    }

    fn base_dim(&self) -> usize {
        self.gauge.base().dim()
    }

    /// Splits a total-chart point into base and fiber parts.
    pub fn split<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        p.split_at(self.base_dim())
    }

    pub fn horizontal_lift(&self, x: &VectorField) -> Result<VectorField> {
        horizontal_lift(&self.total, &self.gauge, &self.action, x)
    }

    /// `(0, V)` for a fiber field `V`.
    pub fn vertical(&self, v: &VectorField) -> Result<VectorField> {
        if !v.chart().same_as(self.fiber.chart()) {
            return Err(Error::usage("vertical fields come from the fiber chart"));
        }
        if v.is_structurally_zero() {
            return Ok(VectorField::zero(&self.total));
        }
        Ok(VectorField::custom(&self.total, Arc::new(VerticalKernel { m: self.base_dim(), field: v.clone() })))
    }

    /// Lifts of the base coordinate directions at `p`.
    pub fn horizontal_basis(&self, p: &[f64]) -> Result<Vec<Vec<f64>>> {
        let m = self.base_dim();
        let (u, y) = self.split(p);
        let mix = mixing(self.gauge.potentials(), self.action.fields(), &jet::constants(u), &jet::constants(y))?;
        Ok((0..m)
            .map(|k| {
                let mut v = vec![0.0; self.total.dim()];
                v[k] = 1.0;
                for (l, c) in mix[k].iter().enumerate() {
                    v[m + l] = -c.value();
                }
                v
            })
            .collect())
    }

    /// Fiber coordinate directions at any point.
    pub fn vertical_basis(&self) -> Vec<Vec<f64>> {
        let m = self.base_dim();
        (0..self.fiber.chart().dim())
            .map(|l| {
                let mut v = vec![0.0; self.total.dim()];
                v[m + l] = 1.0;
                v
            })
            .collect()
    }

    /// The almost complex structure equal to `J_b` on vertical vectors and to
    /// the lift of `J₁` on horizontal ones.
    pub fn tilde_j(&self, j1: &EndoField, jb: &EndoField) -> Result<EndoField> {
        if !j1.chart().same_as(self.base()) || !jb.chart().same_as(self.fiber_chart()) {
            return Err(Error::usage("J₁ lives on the base and J_b on the fiber"));
        }
        Ok(EndoField::custom(
            &self.total,
            Arc::new(TildeJKernel {
                m: self.base_dim(),
                n: self.fiber_chart().dim(),
                j1: j1.clone(),
                jb: jb.clone(),
                potentials: self.gauge.potentials().to_vec(),
                rho: self.action.fields().to_vec(),
            }),
        ))
    }

    /// The vertical vector `R(v, w) = −Σ_a F^a(v, w) ρ_a` at `p` for base
    /// vectors `v`, `w`, from the curvature formula.
    pub fn curvature_vector(&self, p: &[f64], v: &[f64], w: &[f64]) -> Result<Vec<f64>> {
        let (u, y) = self.split(p);
        let m = self.base_dim();
        let mut out = vec![0.0; self.fiber_chart().dim()];
        for (f, rho) in self.gauge.curvature()?.iter().zip(self.action.fields()) {
            let fv = apply_coefficients(m, &f.coefficients(u)?, &[v.to_vec(), w.to_vec()]);
            for (o, r) in out.iter_mut().zip(rho.at(y)?) {
                *o -= fv * r;
            }
        }
        Ok(out)
    }
}

/// Result of [`fatness_check`].
#[derive(Clone, Debug)]
pub struct FatnessReport {
    pub min_abs_det: f64,
    /// Base and fiber point of the minimum.
    pub worst: Option<(Vec<f64>, Vec<f64>)>,
    pub pairs: usize,
    pub skipped: usize,
    pub odd_dimension: bool,
    pub threshold: f64,
}

impl FatnessReport {
    pub fn verdict(&self) -> Verdict {
        if self.odd_dimension {
            return Verdict::Fail;
        }
        let total = self.pairs + self.skipped;
        if self.pairs == 0 || self.skipped as f64 > crate::report::MAX_SKIP_FRACTION * total as f64 {
            return Verdict::Inconclusive;
        }
        if self.min_abs_det > self.threshold {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passes(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    pub fn check(&self, id: &str, statement: &str, provenance: Provenance) -> CheckResult {
        let note = if self.odd_dimension {
            "base dimension is odd, so Σ μ_a F^a is degenerate".to_string()
        } else {
            format!("min |det| = {:.6e} over {} pairs; pass iff above the threshold", self.min_abs_det, self.pairs)
        };
        CheckResult {
            id: id.to_string(),
            paper_ref: statement.to_string(),
            residual: self.min_abs_det,
            threshold: self.threshold,
            verdict: self.verdict(),
            provenance,
            points: self.pairs,
            note: Some(note),
        }
    }
}

/// `det(Σ_a μ_a(y) F^a_u)` for one base point and one fiber point.
pub fn local_fatness_det(g: &GaugeChart, mu: &MomentumMap, u: &[f64], y: &[f64]) -> Result<f64> {
    let curv = g.curvature()?;
    let mats = curv.iter().map(|f| f.matrix(u)).collect::<Result<Vec<_>>>()?;
    let vals = mu.values(y)?;
    Ok(pairing(&mats, &vals).determinant())
}

fn pairing(mats: &[DMatrix<f64>], mu: &[f64]) -> DMatrix<f64> {
    let m = mats.first().map_or(0, DMatrix::nrows);
    let mut s = DMatrix::zeros(m, m);
    for (f, v) in mats.iter().zip(mu) {
        s += f * (CURVATURE_SIGN * v);
    }
    s
}

/// Minimum of `|det Σ_a μ_a(y) F^a_u|` over all pairs of base and fiber points.
pub fn fatness_check(
    g: &GaugeChart,
    mu: &MomentumMap,
    base_pts: &[Vec<f64>],
    fiber_pts: &[Vec<f64>],
) -> Result<FatnessReport> {
    if mu.dim() != g.dim() {
        return Err(Error::usage("momentum map and gauge have different dimensions"));
    }
    let m = g.base().dim();
    let mut report = FatnessReport {
        min_abs_det: 0.0,
        worst: None,
        pairs: 0,
        skipped: 0,
        odd_dimension: m % 2 == 1,
        threshold: FATNESS_THRESHOLD,
    };
    if report.odd_dimension {
        return Ok(report);
    }
    let curv = g.curvature()?;
    let mut mats = Vec::new();
    for u in base_pts {
        match curv.iter().map(|f| f.matrix(u)).collect::<Result<Vec<_>>>() {
            Ok(v) => mats.push(Some(v)),
            Err(Error::Domain { .. } | Error::NonFinite { .. }) => mats.push(None),
            Err(e) => return Err(e),
        }
    }
    let mut vals = Vec::new();
    for y in fiber_pts {
        match mu.values(y) {
            Ok(v) if v.iter().all(|x| x.is_finite()) => vals.push(Some(v)),
            Ok(_) | Err(Error::Domain { .. } | Error::NonFinite { .. }) => vals.push(None),
            Err(e) => return Err(e),
        }
    }
    let mut min = f64::INFINITY;
    for (u, fm) in base_pts.iter().zip(&mats) {
        for (y, mv) in fiber_pts.iter().zip(&vals) {
            let (Some(fm), Some(mv)) = (fm, mv) else {
                report.skipped += 1;
                continue;
            };
            report.pairs += 1;
            let d = pairing(fm, mv).determinant().abs();
            if d < min {
                min = d;
                report.worst = Some((u.clone(), y.clone()));
            }
        }
    }
    report.min_abs_det = if report.pairs == 0 { 0.0 } else { min };
    Ok(report)
}

/// Result of [`verify_coupling`].
#[derive(Clone, Debug)]
pub struct CouplingReport {
    /// `dΘ`.
    pub lee_closed: Measurement,
    /// All coefficients of `d_Θ Ω`.
    pub closedness: Measurement,
    /// `d_Θ Ω` on lifted/vertical basis triples, per argument class.
    pub cases: Vec<(ArgClass, Measurement)>,
    /// `d_ΘΩ(Y,X,Z) − d_Θ(Ω(Y,X))(Z) − Ω([X,Y],Z)` for lifted `X, Y`, vertical `Z`.
    pub lifted_identity: Measurement,
    /// `Ω − ω` on vertical pairs and `Θ − θ` on vertical vectors.
    pub fiber_restriction: Measurement,
    /// `Ω(X*, V)` for lifted `X*` and vertical `V`.
    pub orthogonality: Measurement,
    /// `Θ(X*)`.
    pub lee_horizontal: Measurement,
    pub min_normalized_det: f64,
    pub nondegeneracy_points: usize,
    pub base_dim: usize,
    pub fiber_dim: usize,
    pub tol: f64,
}

impl CouplingReport {
    pub fn nondegenerate(&self) -> bool {
        self.nondegeneracy_points > 0 && self.min_normalized_det > NONDEGENERACY_THRESHOLD
    }

    pub fn case(&self, class: ArgClass) -> &Measurement {
        &self.cases.iter().find(|(c, _)| *c == class).expect("all classes present").1
    }

    /// Closedness and all structural identities hold (nondegeneracy aside).
    pub fn closed(&self) -> bool {
        [&self.lee_closed, &self.closedness, &self.lifted_identity, &self.fiber_restriction, &self.orthogonality, &self.lee_horizontal]
            .iter()
            .all(|m| m.passes(self.tol))
            && self.cases.iter().all(|(_, m)| m.passes(self.tol))
    }

    pub fn checks(&self, prefix: &str, provenance: Provenance) -> Vec<CheckResult> {
        let t = self.tol;
        let mut out = vec![
            CheckResult::from_measurement(&format!("{prefix}.lee_closed"), "dΘ = 0", Provenance::Trivial, &self.lee_closed, t),
            CheckResult::from_measurement(&format!("{prefix}.closed"), "d_Θ Ω = 0 at all sample points", provenance, &self.closedness, t),
            CheckResult::from_measurement(
                &format!("{prefix}.lifted_identity"),
                "−d_Θ(Ω(Y,X))(Z) + d_ΘΩ(Y,X,Z) = Ω([X,Y],Z) for lifted X, Y and vertical Z",
                Provenance::Derived,
                &self.lifted_identity,
                t,
            ),
            CheckResult::from_measurement(
                &format!("{prefix}.fiber_restriction"),
                "Ω = ω and Θ = θ on vertical vectors",
                Provenance::Trivial,
                &self.fiber_restriction,
                t,
            ),
            CheckResult::from_measurement(
                &format!("{prefix}.orthogonality"),
                "Ω(horizontal lift, vertical) = 0",
                Provenance::Trivial,
                &self.orthogonality,
                t,
            ),
            CheckResult::from_measurement(
                &format!("{prefix}.lee_horizontal"),
                "Θ vanishes on horizontal lifts",
                Provenance::Trivial,
                &self.lee_horizontal,
                t,
            ),
        ];
        for (c, m) in &self.cases {
            let mut row = CheckResult::from_measurement(
                &format!("{prefix}.case.{}", c.name()),
                &format!("d_Θ Ω = 0 on {} triples", c.name()),
                provenance,
                m,
                t,
            );
            let h = c.horizontal_count();
            if h > self.base_dim || 3 - h > self.fiber_dim {
                row = row.with_note("no triples of this class for these dimensions");
            }
            out.push(row);
        }
        out.push(
            CheckResult::boolean(
                &format!("{prefix}.nondegenerate"),
                "Ω is nondegenerate at the sample points",
                provenance,
                self.nondegenerate(),
                self.nondegeneracy_points,
            )
            .with_note(format!("min normalized |det| = {:.6e}", self.min_normalized_det)),
        );
        out
    }
}

/// Closedness of `Θ` and `Ω`, per argument class, the lifted-pair
/// identity and the structural invariants, at total-chart points.
pub fn verify_coupling(c: &CouplingChart, pts: &[Vec<f64>], tol: f64) -> Result<CouplingReport> {
    let s = c.structure()?;
    let omega = c.omega();
    let theta = c.theta();
    let m = c.base_dim();
    let n = c.fiber_chart().dim();
    let big = m + n;
    let domega = omega.d();
    let tw = theta.wedge(omega)?;
    let dto = s.d_theta(omega)?;
    let lee_closed = Measurement::sweep(pts, |p| {
        Ok((crate::form::vanishing_residual(&theta.d(), p)?, crate::form::vanishing_residual(theta, p)?))
    })?;

    let vb = c.vertical_basis();
    let mut per_class = Measurement::sweep_many(pts, 5, |p| {
        let d = dto.coefficients(p)?;
        let scale = crate::form::vanishing_residual(&domega, p)?.max(crate::form::vanishing_residual(&tw, p)?);
        let hb = c.horizontal_basis(p)?;
        let mut r = [0.0_f64; 4];
        let combos = |h: usize| -> Vec<Vec<Vec<f64>>> {
            let mut out = Vec::new();
            for hm in masks(m, h) {
                for vm in masks(n, 3 - h) {
                    let mut vs: Vec<Vec<f64>> = indices(hm).into_iter().map(|k| hb[k].clone()).collect();
                    vs.extend(indices(vm).into_iter().map(|l| vb[l].clone()));
                    out.push(vs);
                }
            }
            out
        };
        for (slot, class) in ArgClass::ALL.iter().enumerate() {
            let h = class.horizontal_count();
            if h > m || 3 - h > n {
                continue;
            }
            for vs in combos(h) {
                r[slot] = r[slot].max(apply_coefficients(big, &d, &vs).abs());
            }
        }
        let all = d.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        Ok(vec![(r[0], scale), (r[1], scale), (r[2], scale), (r[3], scale), (all, scale)])
    })?;
    let closedness = per_class.pop().expect("five quantities");
    let cases = ArgClass::ALL.iter().copied().zip(per_class).collect();

    // Lifted coordinate fields against vertical coordinate fields.
    let mut triples = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let x = c.horizontal_lift(&VectorField::coordinate(c.base(), i))?;
            let y = c.horizontal_lift(&VectorField::coordinate(c.base(), j))?;
            let xy = x.bracket(&y)?;
            let oyx = omega.interior(&y)?.interior(&x)?;
            let dt_oyx = twisted_derivative(theta, &oyx)?;
            let dto_yx = dto.interior(&y)?.interior(&x)?;
            let o_xy = omega.interior(&xy)?;
            for l in 0..n {
                let z = c.vertical(&VectorField::coordinate(c.fiber_chart(), l))?;
                triples.push((dto_yx.interior(&z)?, dt_oyx.interior(&z)?, o_xy.interior(&z)?));
            }
        }
    }
    let lifted_identity = Measurement::sweep(pts, |p| {
        let mut r = 0.0_f64;
        let mut sc = 0.0_f64;
        for (a, b, rhs) in &triples {
            let (a, b, rhs) = (a.value(p)?, b.value(p)?, rhs.value(p)?);
            r = r.max((a - b - rhs).abs());
            sc = sc.max(a.abs()).max(b.abs()).max(rhs.abs());
        }
        Ok((r, sc))
    })?;

    let fiber_omega = c.fiber().omega();
    let fiber_theta = c.fiber().lee();
    let fiber_restriction = Measurement::sweep(pts, |p| {
        let (_, y) = c.split(p);
        let big_o = omega.matrix(p)?;
        let small = fiber_omega.matrix(y)?;
        let big_t = theta.coefficients(p)?;
        let small_t = fiber_theta.coefficients(y)?;
        let mut r = 0.0_f64;
        let mut sc = 0.0_f64;
        for a in 0..n {
            for b in 0..n {
                r = r.max((big_o[(m + a, m + b)] - small[(a, b)]).abs());
                sc = sc.max(small[(a, b)].abs());
            }
            r = r.max((big_t[m + a] - small_t[a]).abs());
            sc = sc.max(small_t[a].abs());
        }
        Ok((r, sc))
    })?;

    let mut orth = Measurement::sweep_many(pts, 2, |p| {
        let om = omega.matrix(p)?;
        let th = theta.coefficients(p)?;
        let hb = c.horizontal_basis(p)?;
        let (mut r, mut r2) = (0.0_f64, 0.0_f64);
        for h in &hb {
            let hv = nalgebra::DVector::from_column_slice(h);
            for v in &vb {
                let vv = nalgebra::DVector::from_column_slice(v);
                r = r.max((hv.transpose() * &om * vv)[(0, 0)].abs());
            }
            r2 = r2.max(h.iter().zip(&th).map(|(a, b)| a * b).sum::<f64>().abs());
        }
        Ok(vec![(r, om.amax()), (r2, th.iter().fold(0.0_f64, |a, v| a.max(v.abs())))])
    })?;
    let lee_horizontal = orth.pop().expect("two quantities");
    let orthogonality = orth.pop().expect("two quantities");

    let mut min_det = f64::INFINITY;
    let mut nd_points = 0;
    for p in pts {
        match nondegeneracy(omega, p) {
            Ok(nd) => {
                nd_points += 1;
                min_det = min_det.min(nd.normalized);
            }
            Err(Error::Domain { .. } | Error::NonFinite { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if nd_points == 0 {
        min_det = 0.0;
    }
    Ok(CouplingReport {
        lee_closed,
        closedness,
        cases,
        lifted_identity,
        fiber_restriction,
        orthogonality,
        lee_horizontal,
        min_normalized_det: min_det,
        nondegeneracy_points: nd_points,
        base_dim: m,
        fiber_dim: n,
        tol,
    })
}

/// `N_J(X,Y) = [X,Y] − [JX,JY] + J[JX,Y] + J[X,JY]` as a field.
pub fn nijenhuis(j: &EndoField, x: &VectorField, y: &VectorField) -> Result<VectorField> {
    let jx = j.apply(x)?;
    let jy = j.apply(y)?;
    let a = x.bracket(y)?;
    let b = jx.bracket(&jy)?;
    let c = j.apply(&jx.bracket(y)?)?;
    let d = j.apply(&x.bracket(&jy)?)?;
    a.minus(&b)?.plus(&c)?.plus(&d)
}

fn require_complex(j: &EndoField, p: &[f64], tol: f64) -> Result<()> {
    let defect = j.square_defect(p)?;
    let scale = j.matrix(p)?.amax();
    if defect > tol * (1.0 + scale * scale) {
        return Err(Error::InvalidStructure(format!("J∘J ≠ −id at {p:?} (defect {defect:.3e})")));
    }
    Ok(())
}

/// `N_J(X, Y)` at `p`, after checking `J² = −id` there.
pub fn nijenhuis_at(j: &EndoField, x: &VectorField, y: &VectorField, p: &[f64], tol: f64) -> Result<Vec<f64>> {
    require_complex(j, p, tol)?;
    nijenhuis(j, x, y)?.at(p)
}

/// `|N_J(X,Y)(p) − N_J(X',Y')(p)|` for extensions `X' = X + g W`,
/// `Y' = Y + h W'` with `g(p) = h(p) = 0`.
pub fn nijenhuis_tensoriality(j: &EndoField, x: &VectorField, y: &VectorField, p: &[f64]) -> Result<f64> {
    let chart = j.chart();
    let n = chart.dim();
    let shift = |i: usize| Expr::var(i) - Expr::constant(p[i]);
    let mut g = Expr::constant(0.0);
    for i in 0..n {
        g = g + shift(i) * Expr::constant(1.0 + i as f64);
    }
    let h = shift(0) * (Expr::constant(1.0) + Expr::var(n - 1).powi(2));
    let w = VectorField::from_exprs(chart, (0..n).map(|i| Expr::constant(1.0) + Expr::var((i + 1) % n)).collect())?;
    let w2 = VectorField::from_exprs(chart, (0..n).map(|i| Expr::var(i).sin()).collect())?;
    let x2 = x.plus(&w.times(&DifferentialForm::scalar(chart, g))?)?;
    let y2 = y.plus(&w2.times(&DifferentialForm::scalar(chart, h))?)?;
    let a = nijenhuis(j, x, y)?.at(p)?;
    let b = nijenhuis(j, &x2, &y2)?.at(p)?;
    Ok(a.iter().zip(&b).fold(0.0, |m, (u, v)| m.max((u - v).abs())))
}

/// Result of [`horizontal_nijenhuis_identity`].
#[derive(Clone, Debug)]
pub struct NijenhuisReport {
    /// `N_{J̃}(X*, Y*)` against the curvature expression.
    pub identity: Measurement,
    /// `Ω(J̃·, J̃·) − Ω`; zero iff `Ω` is of type (1,1).
    pub type11: Measurement,
    /// Largest `|N_{J̃}(X*, Y*)|` seen: nonzero means `J̃` is not integrable.
    pub max_horizontal_nijenhuis: f64,
    pub tol: f64,
}

/// Compares `N_{J̃}(X*, Y*)`, computed from brackets of lifted fields, with
/// `J(R(J₁X, Y) + R(X, J₁Y)) + R(X, Y) − R(J₁X, J₁Y)` computed from the
/// curvature, for base coordinate fields `X, Y`.
pub fn horizontal_nijenhuis_identity(
    c: &CouplingChart,
    j1: &EndoField,
    jb: &EndoField,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<NijenhuisReport> {
    let m = c.base_dim();
    let n = c.fiber_chart().dim();
    let base = c.base().clone();
    let coord = |i: usize| VectorField::coordinate(&base, i);
    for p in pts {
        let (u, y) = c.split(p);
        match require_complex(j1, u, tol).and_then(|_| require_complex(jb, y, tol)) {
            Ok(()) => {}
            Err(Error::Domain { .. } | Error::NonFinite { .. }) => continue,
            Err(e) => return Err(e),
        }
        for i in 0..m {
            for k in i + 1..m {
                let nv = nijenhuis(j1, &coord(i), &coord(k))?.at(u)?;
                let worst = nv.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
                let scale = j1.matrix(u)?.amax();
                if worst > tol * (1.0 + scale * scale) {
                    return Err(Error::Precondition { what: "J₁ is integrable on the base".into(), residual: worst });
                }
            }
        }
    }
    let jt = c.tilde_j(j1, jb)?;
    let mut fields = Vec::new();
    for i in 0..m {
        for k in i + 1..m {
            let x = c.horizontal_lift(&coord(i))?;
            let y = c.horizontal_lift(&coord(k))?;
            fields.push((i, k, nijenhuis(&jt, &x, &y)?));
        }
    }
    let mut max_nij = 0.0_f64;
    let identity = Measurement::sweep(pts, |p| {
        let (u, y) = c.split(p);
        let j1m = j1.matrix(u)?;
        let jbm = jb.matrix(y)?;
        let mut r = 0.0_f64;
        let mut sc = 0.0_f64;
        for (i, k, nf) in &fields {
            let lhs = nf.at(p)?;
            let mut ex = vec![0.0; m];
            ex[*i] = 1.0;
            let mut ey = vec![0.0; m];
            ey[*k] = 1.0;
            let jx: Vec<f64> = (0..m).map(|a| j1m[(a, *i)]).collect();
            let jy: Vec<f64> = (0..m).map(|a| j1m[(a, *k)]).collect();
            let r1 = c.curvature_vector(p, &jx, &ey)?;
            let r2 = c.curvature_vector(p, &ex, &jy)?;
            let r3 = c.curvature_vector(p, &ex, &ey)?;
            let r4 = c.curvature_vector(p, &jx, &jy)?;
            let sum: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| a + b).collect();
            let mut rhs = vec![0.0; m];
            for l in 0..n {
                let jsum: f64 = (0..n).map(|q| jbm[(l, q)] * sum[q]).sum();
                rhs.push(jsum + r3[l] - r4[l]);
            }
            for (a, b) in lhs.iter().zip(&rhs) {
                r = r.max((a - b).abs());
                sc = sc.max(a.abs()).max(b.abs());
            }
            max_nij = max_nij.max(lhs.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
        }
        Ok((r, sc))
    })?;
    let omega = c.omega();
    let type11 = Measurement::sweep(pts, |p| {
        let om = omega.matrix(p)?;
        let j = jt.matrix(p)?;
        let d = j.transpose() * &om * &j - &om;
        Ok((d.amax(), om.amax()))
    })?;
    Ok(NijenhuisReport { identity, type11, max_horizontal_nijenhuis: max_nij, tol })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lcs::exact_lcs;

    fn plane() -> Arc<Chart> {
        Chart::new("plane", &["x", "y"]).shared()
    }

    /// ℝ² with `ω = dp∧dq` and the translation `ρ = ∂q`, `μ = p`.
    fn line_fiber() -> (LcsStructure, ActionSpec, MomentumMap) {
        let f = Chart::new("fiber", &["p", "q"]).shared();
        let p = f.var("p");
        let theta = DifferentialForm::zero(&f, 1);
        let eta = DifferentialForm::one_form(&f, vec![0.0.into(), p.clone()]).unwrap();
        let s = exact_lcs(&theta, &eta).unwrap();
        let rho = VectorField::coordinate(&f, 1);
        let act = ActionSpec::new(&f, vec![rho], StructureConstants::abelian(1)).unwrap();
        // i_{∂q}(dp∧dq) = −dp, so μ = −p.
        let mu = MomentumMap::new(vec![DifferentialForm::scalar(&f, -p)]).unwrap();
        (s, act, mu)
    }

    #[test]
    fn abelian_curvature_by_hand() {
        let b = plane();
        let a = DifferentialForm::one_form(&b, vec![0.0.into(), b.var("x")]).unwrap();
        let g = GaugeChart::abelian(&b, a).unwrap();
        assert_eq!(g.curvature().unwrap()[0].coefficients(&[0.3, -0.2]).unwrap(), vec![1.0]);
    }

    #[test]
    fn lift_of_dy_at_two_zero() {
        let b = plane();
        let a = DifferentialForm::one_form(&b, vec![0.0.into(), b.var("x")]).unwrap();
        let g = GaugeChart::abelian(&b, a).unwrap();
        let (s, act, mu) = line_fiber();
        let c = build_coupling(&g, &s, &act, &mu, &Sampling::default().with_points(8)).unwrap();
        let lift = c.horizontal_lift(&VectorField::coordinate(&b, 1)).unwrap();
        assert_eq!(lift.at(&[2.0, 0.0, 0.5, 0.5]).unwrap(), vec![0.0, 1.0, 0.0, -2.0]);
    }

    #[test]
    fn abelian_plane_coupling_closes() {
        let b = plane();
        let a = DifferentialForm::one_form(&b, vec![0.0.into(), b.var("x")]).unwrap();
        let g = GaugeChart::abelian(&b, a).unwrap();
        let (s, act, mu) = line_fiber();
        let c = build_coupling(&g, &s, &act, &mu, &Sampling::default().with_points(8)).unwrap();
        let pts = c.total().sample(16, 3).unwrap();
        let r = verify_coupling(&c, &pts, 1e-10).unwrap();
        assert!(r.closed(), "{r:?}");
        let bad = verify_coupling(&c.without_curvature_term().unwrap(), &pts, 1e-10).unwrap();
        assert!(!bad.case(ArgClass::HorizontalHorizontalVertical).passes(1e-10));
        assert!(bad.lifted_identity.passes(1e-10));
    }

    #[test]
    fn flat_gauge_is_degenerate() {
        let b = plane();
        let g = GaugeChart::flat(&b, StructureConstants::abelian(1));
        let (s, act, mu) = line_fiber();
        let c = build_coupling(&g, &s, &act, &mu, &Sampling::default().with_points(8)).unwrap();
        let pts = c.total().sample(8, 1).unwrap();
        let r = verify_coupling(&c, &pts, 1e-10).unwrap();
        assert!(r.closed());
        assert!(!r.nondegenerate());
    }

    #[test]
    fn standard_j_is_integrable() {
        let b = plane();
        let j = EndoField::constant(&b, &DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0])).unwrap();
        let x = VectorField::parse(&b, &["x*y", "sin(x)"], &Default::default()).unwrap();
        let y = VectorField::parse(&b, &["exp(y)", "x^2"], &Default::default()).unwrap();
        let n = nijenhuis_at(&j, &x, &y, &[0.3, 0.7], 1e-12).unwrap();
        assert!(n.iter().all(|v| v.abs() < 1e-12), "{n:?}");
        assert!(nijenhuis_tensoriality(&j, &x, &y, &[0.3, 0.7]).unwrap() < 1e-12);
    }

    #[test]
    fn non_complex_j_is_rejected() {
        let b = plane();
        let j = EndoField::constant(&b, &DMatrix::identity(2, 2)).unwrap();
        let x = VectorField::coordinate(&b, 0);
        assert!(matches!(nijenhuis_at(&j, &x, &x, &[0.0, 0.0], 1e-9), Err(Error::InvalidStructure(_))));
    }

    #[test]
    fn symplectic_potential_mismatch() {
        let b = plane();
        let area = DifferentialForm::dx(&b, 0).wedge(&DifferentialForm::dx(&b, 1)).unwrap();
        let pts = b.sample(8, 0).unwrap();
        let zero = DifferentialForm::zero(&b, 1);
        assert!(matches!(circle_fat_from_symplectic(&area, &zero, &pts, 1e-8), Err(Error::Precondition { .. })));
        let alpha = DifferentialForm::one_form(&b, vec![0.0.into(), b.var("x")]).unwrap();
        assert!(circle_fat_from_symplectic(&area, &alpha, &pts, 1e-8).is_ok());
    }
}
