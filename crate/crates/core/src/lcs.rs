//! The twisted differential and locally conformally symplectic structures.

use nalgebra::{DMatrix, DVector};

use crate::chart::Chart;
use crate::error::{Error, Result};
use crate::form::{pointwise_residual, residual_and_scale, DifferentialForm, ScalarField};
use crate::linalg::Svd;
use crate::multiindex::binom;
use crate::report::{CheckResult, Measurement, Provenance, Sampling, Verdict};

/// Default threshold on the row-normalized determinant.
pub const NONDEGENERACY_THRESHOLD: f64 = 1e-8;

/// `d_θ α = dα − θ ∧ α`.
///
/// The operator is defined for any 1-form `θ`; it squares to zero only when
/// `θ` is closed, which [`verify_lcs`] reports.
pub fn twisted_derivative(theta: &DifferentialForm, form: &DifferentialForm) -> Result<DifferentialForm> {
    if theta.degree() != 1 {
        return Err(Error::usage("the twisting form must be a 1-form"));
    }
    form.d().minus(&theta.wedge(form)?)
}

/// A pair `(ω, θ)` with `dω = θ ∧ ω`, and optionally `η` with `ω = d_θ η`.
#[derive(Clone, Debug)]
pub struct LcsStructure {
    omega: DifferentialForm,
    lee: DifferentialForm,
    potential: Option<DifferentialForm>,
}

impl LcsStructure {
    pub fn new(omega: DifferentialForm, lee: DifferentialForm) -> Result<Self> {
        if omega.degree() != 2 || lee.degree() != 1 {
            return Err(Error::usage("an LCS structure is a 2-form with a 1-form"));
        }
        if !omega.chart().same_as(lee.chart()) {
            return Err(Error::usage("ω and θ live on different charts"));
        }
        Ok(LcsStructure { omega, lee, potential: None })
    }

    pub fn with_potential(mut self, eta: DifferentialForm) -> Result<Self> {
        if eta.degree() != 1 || !eta.chart().same_as(self.omega.chart()) {
            return Err(Error::usage("the potential is a 1-form on the same chart"));
        }
        self.potential = Some(eta);
        Ok(self)
    }

    pub fn chart(&self) -> &std::sync::Arc<Chart> {
        self.omega.chart()
    }

    pub fn omega(&self) -> &DifferentialForm {
        &self.omega
    }

    pub fn lee(&self) -> &DifferentialForm {
        &self.lee
    }

    pub fn potential(&self) -> Option<&DifferentialForm> {
        self.potential.as_ref()
    }

    /// `d_θ` of this structure.
    pub fn d_theta(&self, form: &DifferentialForm) -> Result<DifferentialForm> {
        twisted_derivative(&self.lee, form)
    }
}

/// `ω = d_θ η`, with η recorded as the potential. Nondegeneracy is not
/// checked here.
pub fn exact_lcs(theta: &DifferentialForm, eta: &DifferentialForm) -> Result<LcsStructure> {
    let omega = twisted_derivative(theta, eta)?;
    LcsStructure::new(omega, theta.clone())?.with_potential(eta.clone())
}

/// `(e^f ω, θ + df)`; a potential `η` becomes `e^f η`.
pub fn conformal_rescale(s: &LcsStructure, f: &ScalarField) -> Result<LcsStructure> {
    let ef = f.exp()?;
    let out = LcsStructure::new(s.omega.times(&ef)?, s.lee.plus(&f.d())?)?;
    match &s.potential {
        Some(eta) => out.with_potential(eta.times(&ef)?),
        None => Ok(out),
    }
}

/// Pointwise nondegeneracy data of a 2-form.
#[derive(Clone, Debug, PartialEq)]
pub struct Nondegeneracy {
    /// `det ω_p`, the square of the Pfaffian.
    pub det: f64,
    /// `|det| / Π ‖rowᵢ‖`, in `[0, 1]`.
    pub normalized: f64,
    /// Set in odd dimension, where the determinant is zero.
    pub odd_dimension: bool,
}

/// Determinant data of the skew matrix of `ω` at `p`.
pub fn nondegeneracy(omega: &DifferentialForm, p: &[f64]) -> Result<Nondegeneracy> {
    let n = omega.chart().dim();
    let m = omega.matrix(p)?;
    if n % 2 == 1 {
        return Ok(Nondegeneracy { det: 0.0, normalized: 0.0, odd_dimension: true });
    }
    Ok(matrix_nondegeneracy(&m))
}

pub(crate) fn matrix_nondegeneracy(m: &DMatrix<f64>) -> Nondegeneracy {
    let n = m.nrows();
    if n % 2 == 1 {
        return Nondegeneracy { det: 0.0, normalized: 0.0, odd_dimension: true };
    }
    let det = m.clone().determinant();
    let mut norms = 1.0;
    for i in 0..n {
        norms *= m.row(i).norm();
    }
    let normalized = if norms > 0.0 { (det.abs() / norms).min(1.0) } else { 0.0 };
    Nondegeneracy { det, normalized, odd_dimension: false }
}

/// Pfaffian of the skew matrix of a 2-form at `p`; zero in odd dimension.
pub fn pfaffian(omega: &DifferentialForm, p: &[f64]) -> Result<f64> {
    let m = omega.matrix(p)?;
    Ok(matrix_pfaffian(&m))
}

pub(crate) fn matrix_pfaffian(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    if n % 2 == 1 {
        return 0.0;
    }
    let idx: Vec<usize> = (0..n).collect();
    pf(m, &idx)
}

fn pf(m: &DMatrix<f64>, idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 1.0;
    }
    let first = idx[0];
    let mut total = 0.0;
    for (j, &other) in idx.iter().enumerate().skip(1) {
        let a = m[(first, other)];
        if a == 0.0 {
            continue;
        }
        let rest: Vec<usize> = idx.iter().copied().filter(|&k| k != first && k != other).collect();
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        total += sign * a * pf(m, &rest);
    }
    total
}

/// A Lee covector recovered at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct LeeSolution {
    pub theta: Vec<f64>,
    /// `max |dω − θ ∧ ω|` at the solution.
    pub residual: f64,
}

/// Least-squares solution `θ_p` of `dω|_p = θ_p ∧ ω|_p`.
pub fn solve_lee_form(omega: &DifferentialForm, p: &[f64]) -> Result<LeeSolution> {
    let chart = omega.chart();
    let n = chart.dim();
    if n < 4 {
        return Err(Error::Unsupported(format!(
            "the Lee form is determined pointwise only in dimension ≥ 4 (chart has {n})"
        )));
    }
    if omega.degree() != 2 {
        return Err(Error::usage("solve_lee_form needs a 2-form"));
    }
    let rows = binom(n, 3);
    let mut a = DMatrix::<f64>::zeros(rows, n);
    for l in 0..n {
        let col = DifferentialForm::dx(chart, l).wedge(omega)?.coefficients(p)?;
        for (r, v) in col.into_iter().enumerate() {
            a[(r, l)] = v;
        }
    }
    let b = DVector::from_vec(omega.d().coefficients(p)?);
    let svd = Svd::new(&a)?;
    let t = 1e-12 * svd.max().max(f64::MIN_POSITIVE);
    let rank = svd.rank(t);
    if rank < n {
        return Err(Error::Degenerate(format!(
            "the linear system for θ has rank {rank} < {n}; ω is degenerate at {p:?}"
        )));
    }
    let theta = svd.solve(&b, t);
    let residual = (&a * &theta - &b).amax();
    Ok(LeeSolution { theta: theta.iter().copied().collect(), residual })
}

/// Result of [`verify_lcs`].
#[derive(Clone, Debug)]
pub struct LcsReport {
    /// `dθ = 0`.
    pub closedness: Measurement,
    /// `dω = θ ∧ ω`.
    pub lcs: Measurement,
    /// `ω = dη − θ ∧ η`, when a potential is present.
    pub potential: Option<Measurement>,
    /// Smallest row-normalized `|det ω|` over the samples.
    pub min_normalized_det: f64,
    pub odd_dimension: bool,
    pub nondegeneracy_threshold: f64,
    pub tol: f64,
}

impl LcsReport {
    pub fn nondegenerate(&self) -> bool {
        !self.odd_dimension && self.min_normalized_det > self.nondegeneracy_threshold
    }

    pub fn verdict(&self) -> Verdict {
        let parts = [
            self.closedness.verdict(self.tol),
            self.lcs.verdict(self.tol),
            self.potential.as_ref().map_or(Verdict::Pass, |m| m.verdict(self.tol)),
        ];
        if parts.contains(&Verdict::Inconclusive) {
            Verdict::Inconclusive
        } else if parts.iter().all(|v| *v == Verdict::Pass) && self.nondegenerate() {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passes(&self) -> bool {
        self.verdict() == Verdict::Pass
    }

    /// The report as rows `prefix.closed`, `prefix.lcs`, `prefix.nondegenerate`
    /// and, with a potential, `prefix.potential`.
    pub fn checks(&self, prefix: &str, what: &str, provenance: Provenance) -> Vec<CheckResult> {
        let mut out = vec![
            CheckResult::from_measurement(
                &format!("{prefix}.closed"),
                &format!("{what}: the Lee form is closed, dθ = 0"),
                provenance,
                &self.closedness,
                self.tol,
            ),
            CheckResult::from_measurement(
                &format!("{prefix}.lcs"),
                &format!("{what}: dω = θ ∧ ω"),
                provenance,
                &self.lcs,
                self.tol,
            ),
        ];
        if let Some(m) = &self.potential {
            out.push(CheckResult::from_measurement(
                &format!("{prefix}.potential"),
                &format!("{what}: ω = d_θ η"),
                provenance,
                m,
                self.tol,
            ));
        }
        let mut nd = CheckResult::boolean(
            &format!("{prefix}.nondegenerate"),
            &format!("{what}: ω is nondegenerate at every sample"),
            provenance,
            self.nondegenerate(),
            self.lcs.points,
        );
        nd.residual = self.min_normalized_det;
        nd.threshold = self.nondegeneracy_threshold;
        nd.note = Some(if self.odd_dimension {
            "odd dimension: skew matrices are singular".to_string()
        } else {
            "residual column holds the smallest normalized determinant".to_string()
        });
        out.push(nd);
        out
    }
}

/// Samples the chart and measures the LCS axioms.
pub fn verify_lcs(s: &LcsStructure, sampling: &Sampling) -> Result<LcsReport> {
    let pts = s.chart().sample(sampling.points, sampling.seed)?;
    verify_lcs_at(s, &pts, sampling.tol)
}

/// [`verify_lcs`] on given points.
pub fn verify_lcs_at(s: &LcsStructure, pts: &[Vec<f64>], tol: f64) -> Result<LcsReport> {
    let dtheta = s.lee.d();
    let closedness = Measurement::sweep(pts, |p| {
        let scale = s.lee.coefficients(p)?.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        let r = dtheta.coefficients(p)?.iter().fold(0.0_f64, |m, c| m.max(c.abs()));
        Ok((r, scale))
    })?;
    let domega = s.omega.d();
    let theta_omega = s.lee.wedge(&s.omega)?;
    let lcs = Measurement::sweep(pts, |p| {
        let (r, sc) = pointwise_residual(&domega, &theta_omega, p)?;
        let w = s.omega.coefficients(p)?;
        Ok((r, sc.max(w.iter().fold(0.0_f64, |m, c| m.max(c.abs())))))
    })?;
    let potential = match &s.potential {
        Some(eta) => {
            let rebuilt = twisted_derivative(&s.lee, eta)?;
            Some(Measurement::sweep(pts, |p| pointwise_residual(&s.omega, &rebuilt, p))?)
        }
        None => None,
    };
    let mut min_det = f64::INFINITY;
    let odd = s.chart().dim() % 2 == 1;
    for p in pts {
        match nondegeneracy(&s.omega, p) {
            Ok(nd) => min_det = min_det.min(nd.normalized),
            Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if !min_det.is_finite() {
        min_det = 0.0;
    }
    Ok(LcsReport {
        closedness,
        lcs,
        potential,
        min_normalized_det: min_det,
        odd_dimension: odd,
        nondegeneracy_threshold: NONDEGENERACY_THRESHOLD,
        tol,
    })
}

/// Largest deviation between the recovered Lee covector and `θ(p)`.
pub fn lee_recovery(s: &LcsStructure, pts: &[Vec<f64>]) -> Result<Measurement> {
    Measurement::sweep(pts, |p| {
        let sol = solve_lee_form(&s.omega, p)?;
        let theta = s.lee.coefficients(p)?;
        Ok(residual_and_scale(&sol.theta, &theta))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::Chart;
    use crate::expr::Expr;
    use std::sync::Arc;

    fn r4() -> Arc<Chart> {
        Chart::new("r4", &["x1", "y1", "x2", "y2"]).shared()
    }

    fn standard(c: &Arc<Chart>) -> DifferentialForm {
        let dx = |i| DifferentialForm::dx(c, i);
        dx(0).wedge(&dx(1)).unwrap() + dx(2).wedge(&dx(3)).unwrap()
    }

    #[test]
    fn standard_symplectic_passes() {
        let c = r4();
        let s = LcsStructure::new(standard(&c), DifferentialForm::zero(&c, 1)).unwrap();
        let rep = verify_lcs(&s, &Sampling::default()).unwrap();
        assert!(rep.passes());
        let nd = nondegeneracy(s.omega(), &[0.0; 4]).unwrap();
        assert_eq!(nd.det, 1.0);
        assert_eq!(pfaffian(s.omega(), &[0.0; 4]).unwrap(), 1.0);
        let sol = solve_lee_form(s.omega(), &[0.1, 0.2, 0.3, 0.4]).unwrap();
        assert!(sol.theta.iter().all(|v| v.abs() < 1e-14));
    }

    #[test]
    fn odd_dimension_flag() {
        let c = Chart::new("r3", &["x", "y", "z"]).shared();
        let w = DifferentialForm::dx(&c, 0).wedge(&DifferentialForm::dx(&c, 1)).unwrap();
        let nd = nondegeneracy(&w, &[0.0; 3]).unwrap();
        assert!(nd.odd_dimension);
        assert_eq!(nd.det, 0.0);
        assert!(matches!(solve_lee_form(&w, &[0.0; 3]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn twisted_square_vanishes_for_closed_theta() {
        let c = Chart::new("plane", &["x", "y"]).shared();
        let theta = DifferentialForm::dx(&c, 0).scaled(2.0);
        let xdy = DifferentialForm::from_components(&c, 1, vec![(vec![1], c.var("x"))]).unwrap();
        let dd = twisted_derivative(&theta, &twisted_derivative(&theta, &xdy).unwrap()).unwrap();
        let f = DifferentialForm::scalar(&c, c.var("x") * c.var("y"));
        let ff = twisted_derivative(&theta, &twisted_derivative(&theta, &f).unwrap()).unwrap();
        for p in c.sample(64, 0).unwrap() {
            assert!(dd.coefficients(&p).unwrap().iter().all(|v| v.abs() < 1e-14));
            assert!(ff.coefficients(&p).unwrap()[0].abs() < 1e-14);
        }
        let zero = DifferentialForm::zero(&c, 1);
        let (r, _) = pointwise_residual(&twisted_derivative(&zero, &f).unwrap(), &f.d(), &[0.5, 0.5]).unwrap();
        assert_eq!(r, 0.0);
    }

    #[test]
    fn rescaling_round_trip() {
        let c = r4();
        let s = LcsStructure::new(standard(&c), DifferentialForm::zero(&c, 1)).unwrap();
        let f = DifferentialForm::scalar(&c, c.var("x1") * c.var("y2") + Expr::constant(0.3));
        let r = conformal_rescale(&s, &f).unwrap();
        assert!(verify_lcs(&r, &Sampling::default()).unwrap().passes());
        let back = conformal_rescale(&r, &f.scaled(-1.0)).unwrap();
        for p in c.sample(16, 3).unwrap() {
            let (e, _) = pointwise_residual(back.omega(), s.omega(), &p).unwrap();
            assert!(e < 1e-12);
            let (e, _) = pointwise_residual(back.lee(), s.lee(), &p).unwrap();
            assert!(e < 1e-12);
        }
    }

    #[test]
    fn zero_potential_is_degenerate() {
        let c = r4();
        let theta = DifferentialForm::dx(&c, 0);
        let s = exact_lcs(&theta, &DifferentialForm::zero(&c, 1)).unwrap();
        let rep = verify_lcs(&s, &Sampling::default()).unwrap();
        assert!(!rep.nondegenerate());
        assert_eq!(rep.verdict(), Verdict::Fail);
    }
}
