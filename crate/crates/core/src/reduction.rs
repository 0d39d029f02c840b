//! Checks around reduction at level zero for abelian twisted Hamiltonian
//! actions, on explicitly parametrized slices of the zero level.
//!
//! Quotients are never constructed. A [`LevelSlice`] is a map from a slice
//! chart into the fiber chart whose image lies in `μ⁻¹(0)` and meets each
//! orbit transversally; the reduced structure is the pullback of `(ω, θ)`.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::actions::{ActionSpec, MomentumMap};
use crate::chart::{Chart, SmoothMap};
use crate::coupling::CouplingChart;
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::{residual_and_scale, vanishing_residual, DifferentialForm, ScalarField, VectorField};
use crate::lcs::{verify_lcs_at, LcsReport, LcsStructure};
use crate::report::{CheckResult, Measurement, Provenance};

fn require_abelian(act: &ActionSpec) -> Result<()> {
    if act.constants().is_abelian() {
        Ok(())
    } else {
        Err(Error::Unsupported("reduction checks need an abelian action".into()))
    }
}

/// The one-parameter subgroup `v`: field `Σ vₐ ρₐ` with momentum `Σ vₐ μₐ`.
pub fn restrict_action(act: &ActionSpec, mu: &MomentumMap, v: &[f64]) -> Result<(ActionSpec, MomentumMap)> {
    require_abelian(act)?;
    if v.len() != act.dim() || mu.dim() != act.dim() {
        return Err(Error::usage(format!("need {} weights", act.dim())));
    }
    let field = act.generator(v);
    let sub = ActionSpec::new(act.chart(), vec![field], crate::actions::StructureConstants::abelian(1))?;
    Ok((sub, MomentumMap::new(vec![mu.paired(v)?])?))
}

/// Result of [`invariant_hamiltonian_check`].
#[derive(Clone, Debug)]
pub struct InvariantHamiltonianReport {
    /// `(element, generator, |g*μ_a − μ_a|)`.
    pub entries: Vec<(String, usize, Measurement)>,
    pub combined: Measurement,
}

/// `g*μ_a − μ_a` for every finite element `g` and generator `a`.
pub fn invariant_hamiltonian_check(
    act: &ActionSpec,
    mu: &MomentumMap,
    pts: &[Vec<f64>],
) -> Result<InvariantHamiltonianReport> {
    require_abelian(act)?;
    let mut entries = Vec::new();
    let mut combined = Measurement { residual: 0.0, raw: 0.0, points: pts.len(), skipped: 0, worst_point: None };
    for (name, g) in act.elements() {
        for (a, f) in mu.components().iter().enumerate() {
            let m = Measurement::sweep(pts, |p| {
                let q = g.try_apply(p)?;
                let (u, v) = (f.value(&q)?, f.value(p)?);
                Ok(((u - v).abs(), v.abs()))
            })?;
            combined = combined.max(m.clone());
            entries.push((name.clone(), a, m));
        }
    }
    Ok(InvariantHamiltonianReport { entries, combined })
}

/// Sign information of a momentum component over samples.
#[derive(Clone, Debug, PartialEq)]
pub struct LevelScan {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl LevelScan {
    /// No sign change and no value within `tol` of zero.
    pub fn empty(&self, tol: f64) -> bool {
        self.points > 0 && (self.min > tol || self.max < -tol)
    }
}

/// Range of `f` over the points.
pub fn level_scan(f: &ScalarField, pts: &[Vec<f64>]) -> Result<LevelScan> {
    let mut s = LevelScan { min: f64::INFINITY, max: f64::NEG_INFINITY, points: 0 };
    for p in pts {
        match f.value(p) {
            Ok(v) => {
                s.points += 1;
                s.min = s.min.min(v);
                s.max = s.max.max(v);
            }
            Err(Error::Domain { .. } | Error::NonFinite { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(s)
}

/// A parametrization of a slice of the zero level.
#[derive(Clone, Debug)]
pub struct LevelSlice {
    map: SmoothMap,
    level_of: Vec<usize>,
}

impl LevelSlice {
    /// `level_of` lists the momentum components that vanish on the image.
    pub fn new(map: SmoothMap, level_of: Vec<usize>) -> Self {
        LevelSlice { map, level_of }
    }

    pub fn map(&self) -> &SmoothMap {
        &self.map
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.map.source()
    }

    pub fn level_of(&self) -> &[usize] {
        &self.level_of
    }
}

/// Result of [`reduced_form_check`].
#[derive(Clone, Debug)]
pub struct ReducedReport {
    /// `max |μ_a ∘ φ|`, unnormalized.
    pub level: Measurement,
    /// `ω(ρ_a, w)` for `w` tangent to the level set.
    pub annihilation: Measurement,
    /// LCS axioms of the pulled-back structure on the slice chart.
    pub lcs: LcsReport,
    /// `|φ*θ|` over the samples: ≈ 0 means the reduced structure is symplectic.
    pub lee_size: f64,
    pub reduced: LcsStructure,
    pub tol: f64,
}

impl ReducedReport {
    pub fn symplectic(&self) -> bool {
        self.lee_size <= self.tol
    }

    pub fn checks(&self, prefix: &str, provenance: Provenance, level_tol: f64) -> Vec<CheckResult> {
        let mut out = vec![
            CheckResult::from_measurement(
                &format!("{prefix}.level"),
                "μ vanishes on the slice",
                Provenance::Derived,
                &self.level,
                level_tol,
            ),
            CheckResult::from_measurement(
                &format!("{prefix}.annihilation"),
                "i_ρ ω vanishes on vectors tangent to the zero level",
                provenance,
                &self.annihilation,
                self.tol,
            ),
        ];
        out.extend(self.lcs.checks(&format!("{prefix}.reduced"), "reduced structure", provenance));
        out
    }
}

/// Pulls `(ω, θ)` back to the slice and checks the reduced structure.
///
/// Fails with a precondition error when `[Dφ | ρ_a]` does not have full
/// column rank at some sample.
pub fn reduced_form_check(
    fiber: &LcsStructure,
    act: &ActionSpec,
    mu: &MomentumMap,
    slice: &LevelSlice,
    pts: &[Vec<f64>],
    tol: f64,
) -> Result<ReducedReport> {
    require_abelian(act)?;
    if !slice.map.target().same_as(fiber.chart()) || !act.chart().same_as(fiber.chart()) {
        return Err(Error::usage("slice and action must map into the fiber chart"));
    }
    if let Some(&a) = slice.level_of.iter().find(|&&a| a >= mu.dim()) {
        return Err(Error::usage(format!("momentum component {a} does not exist")));
    }
    let phi = &slice.map;
    let k = slice.chart().dim();
    let gens: Vec<&VectorField> =
        act.fields().iter().filter(|f| !f.is_structurally_zero()).collect();
    for s in pts {
        let Ok(q) = phi.try_apply(s) else { continue };
        let jac = phi.jacobian(s);
        let n = jac.nrows();
        let mut cols = DMatrix::zeros(n, k + gens.len());
        cols.view_mut((0, 0), (n, k)).copy_from(&jac);
        for (j, g) in gens.iter().enumerate() {
            let v = g.at(&q)?;
            for i in 0..n {
                cols[(i, k + j)] = v[i];
            }
        }
        let rank = crate::cohomology::rank(&cols);
        if rank < k + gens.len() {
            return Err(Error::Precondition {
                what: format!(
                    "slice is not transverse to the orbits at {s:?}: rank {rank} of {} columns",
                    k + gens.len()
                ),
                residual: cols.svd(false, false).singular_values.min(),
            });
        }
    }
    let level = Measurement::sweep(pts, |s| {
        let q = phi.try_apply(s)?;
        let mut r = 0.0_f64;
        for &a in &slice.level_of {
            r = r.max(mu.component(a).value(&q)?.abs());
        }
        Ok((r, 0.0))
    })?;
    let omega = fiber.omega();
    let annihilation = Measurement::sweep(pts, |s| {
        let q = phi.try_apply(s)?;
        let jac = phi.jacobian(s);
        let m = omega.matrix(&q)?;
        let mut tangents: Vec<Vec<f64>> = (0..k).map(|c| jac.column(c).iter().copied().collect()).collect();
        for g in &gens {
            tangents.push(g.at(&q)?);
        }
        let mut r = 0.0_f64;
        for g in &gens {
            let rv = nalgebra::DVector::from_vec(g.at(&q)?);
            for w in &tangents {
                let wv = nalgebra::DVector::from_column_slice(w);
                r = r.max((rv.transpose() * &m * wv)[(0, 0)].abs());
            }
        }
        Ok((r, m.amax()))
    })?;
    let reduced = LcsStructure::new(omega.pullback(phi)?, fiber.lee().pullback(phi)?)?;
    let lcs = verify_lcs_at(&reduced, pts, tol)?;
    let mut lee_size = 0.0_f64;
    for s in pts {
        if let Ok(c) = reduced.lee().coefficients(s) {
            lee_size = c.iter().fold(lee_size, |a, v| a.max(v.abs()));
        }
    }
    Ok(ReducedReport { level, annihilation, lcs, lee_size, reduced, tol })
}

/// The map `(u, y) ↦ (u, g(y))` on the total chart of a coupling.
fn fiberwise(c: &CouplingChart, g: &SmoothMap) -> Result<SmoothMap> {
    let m = c.base().dim();
    let mut comps: Vec<Expr> = (0..m).map(Expr::var).collect();
    comps.extend(g.components().iter().map(|e| e.shifted(m)));
    let mut out = SmoothMap::new(c.total(), c.total(), comps)?;
    for v in g.validity() {
        out = out.with_validity(v.shifted(m));
    }
    Ok(out)
}

/// Result of [`bundle_momentum_check`].
#[derive(Clone, Debug)]
pub struct BundleMomentumReport {
    /// `i_{(0,ρ_a)} Ω − d_Θ(μ_a ∘ pr)`.
    pub hamiltonian: Measurement,
    /// `(id × g)*Ω − Ω` over the fiber's finite elements.
    pub invariance: Measurement,
}

/// The fiber action, acting on the fiber factor only, is twisted
/// Hamiltonian for `Ω` with momentum `μ ∘ pr`.
pub fn bundle_momentum_check(
    c: &CouplingChart,
    mu: &MomentumMap,
    pts: &[Vec<f64>],
) -> Result<BundleMomentumReport> {
    require_abelian(c.action())?;
    if mu.dim() != c.action().dim() {
        return Err(Error::usage("momentum map and action have different dimensions"));
    }
    let s = c.structure()?;
    let m = c.base().dim();
    let n = c.fiber_chart().dim();
    let proj = SmoothMap::projection(c.total(), c.fiber_chart(), &(m..m + n).collect::<Vec<_>>())?;
    let mut pairs = Vec::new();
    for (rho, f) in c.action().fields().iter().zip(mu.components()) {
        let lifted = c.vertical(rho)?;
        let h = f.pullback(&proj)?;
        pairs.push((s.omega().interior(&lifted)?, s.d_theta(&h)?));
    }
    let hamiltonian = Measurement::sweep(pts, |p| {
        let mut r = 0.0_f64;
        let mut sc = 0.0_f64;
        for (a, b) in &pairs {
            let (x, y) = residual_and_scale(&a.coefficients(p)?, &b.coefficients(p)?);
            r = r.max(x);
            sc = sc.max(y);
        }
        Ok((r, sc))
    })?;
    let mut invariance = Measurement { residual: 0.0, raw: 0.0, points: pts.len(), skipped: 0, worst_point: None };
    for (_, g) in c.action().elements() {
        let map = fiberwise(c, g)?;
        let pulled = c.omega().pullback(&map)?;
        let m = Measurement::sweep(pts, |p| {
            let (r, _) = residual_and_scale(&pulled.coefficients(p)?, &c.omega().coefficients(p)?);
            Ok((r, vanishing_residual(c.omega(), p)?))
        })?;
        invariance = invariance.max(m);
    }
    Ok(BundleMomentumReport { hamiltonian, invariance })
}

/// Result of [`bundle_split_check`].
#[derive(Clone, Debug)]
pub struct BundleSplitReport {
    /// `|μ ∘ pr|` on the product slice: the zero level of the bundle
    /// momentum is `base × (fiber zero level)`.
    pub level: Measurement,
    /// Base–slice block of the pulled-back `Ω`.
    pub mixed: Measurement,
    /// Slice block of the pulled-back `Ω` against the reduced fiber form.
    pub fiber_block: Measurement,
    /// Largest entry of the base block.
    pub base_block: f64,
}

/// Pulls the coupling data back along `(u, s) ↦ (u, φ(s))` and compares the
/// blocks with the reduced fiber structure. `pts` are points of
/// `base × slice`.
pub fn bundle_split_check(
    c: &CouplingChart,
    mu: &MomentumMap,
    slice: &LevelSlice,
    pts: &[Vec<f64>],
) -> Result<BundleSplitReport> {
    require_abelian(c.action())?;
    let m = c.base().dim();
    let k = slice.chart().dim();
    let chart = c.base().product(slice.chart())?.shared();
    let mut comps: Vec<Expr> = (0..m).map(Expr::var).collect();
    comps.extend(slice.map().components().iter().map(|e| e.shifted(m)));
    let mut psi = SmoothMap::new(&chart, c.total(), comps)?;
    for v in slice.map().validity() {
        psi = psi.with_validity(v.shifted(m));
    }
    let pulled = c.omega().pullback(&psi)?;
    let reduced_fiber: DifferentialForm = c.fiber().omega().pullback(slice.map())?;
    let level = Measurement::sweep(pts, |p| {
        let q = psi.try_apply(p)?;
        let (_, y) = c.split(&q);
        let mut r = 0.0_f64;
        for &a in slice.level_of() {
            r = r.max(mu.component(a).value(y)?.abs());
        }
        Ok((r, 0.0))
    })?;
    let mut base_block = 0.0_f64;
    let mut parts = Measurement::sweep_many(pts, 2, |p| {
        let big = pulled.matrix(p)?;
        let small = reduced_fiber.matrix(&p[m..])?;
        let mut mixed = 0.0_f64;
        let mut fb = 0.0_f64;
        for i in 0..m {
            for j in 0..m {
                base_block = base_block.max(big[(i, j)].abs());
            }
            for j in 0..k {
                mixed = mixed.max(big[(i, m + j)].abs());
            }
        }
        for i in 0..k {
            for j in 0..k {
                fb = fb.max((big[(m + i, m + j)] - small[(i, j)]).abs());
            }
        }
        Ok(vec![(mixed, big.amax()), (fb, small.amax())])
    })?;
    let fiber_block = parts.pop().expect("two quantities");
    let mixed = parts.pop().expect("two quantities");
    Ok(BundleSplitReport { level, mixed, fiber_block, base_block })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::actions::StructureConstants;
    use crate::lcs::exact_lcs;

    #[test]
    fn trivial_action_reduces_to_original() {
        let f = Chart::new("plane4", &["a", "b", "c", "d"]).shared();
        let eta = DifferentialForm::one_form(&f, vec![f.var("b"), 0.0.into(), f.var("d"), 0.0.into()]).unwrap();
        let s = exact_lcs(&DifferentialForm::zero(&f, 1), &eta).unwrap();
        let act = ActionSpec::new(&f, vec![VectorField::zero(&f)], StructureConstants::abelian(1)).unwrap();
        let mu = MomentumMap::new(vec![DifferentialForm::constant(&f, 0.0)]).unwrap();
        let slice = LevelSlice::new(SmoothMap::identity(&f), vec![0]);
        let pts = f.sample(16, 0).unwrap();
        let r = reduced_form_check(&s, &act, &mu, &slice, &pts, 1e-10).unwrap();
        assert!(r.lcs.passes());
        assert!(r.symplectic());
        assert_eq!(r.reduced.omega().coefficients(&pts[0]).unwrap(), s.omega().coefficients(&pts[0]).unwrap());
    }

    #[test]
    fn sign_scan() {
        let c = Chart::new("line", &["x"]).shared();
        let f = DifferentialForm::scalar(&c, c.var("x").powi(2) + 1.0);
        let pts = c.sample(16, 0).unwrap();
        assert!(level_scan(&f, &pts).unwrap().empty(1e-10));
        let g = DifferentialForm::scalar(&c, c.var("x"));
        assert!(!level_scan(&g, &pts).unwrap().empty(1e-10));
    }

    #[test]
    fn non_abelian_is_unsupported() {
        let f = Chart::new("sl", &["a", "b", "c"]).shared();
        let z = VectorField::zero(&f);
        let act = ActionSpec::new(&f, vec![z.clone(), z.clone(), z], StructureConstants::sl2()).unwrap();
        let mu = MomentumMap::new(vec![DifferentialForm::constant(&f, 0.0); 3]).unwrap();
        assert!(matches!(invariant_hamiltonian_check(&act, &mu, &[]), Err(Error::Unsupported(_))));
    }
}
