//! Random polynomial forms, fields and maps, for property checks.
//!
//! Coefficients are uniform in `[−1, 1]`; monomials have total degree at
//! most [`MAX_DEGREE`].

use std::sync::Arc;

use rand::Rng;

use crate::chart::{Chart, SmoothMap};
use crate::error::Result;
use crate::expr::Expr;
use crate::form::{DifferentialForm, VectorField};
use crate::multiindex::binom;

pub const MAX_DEGREE: u32 = 3;

/// A polynomial in `n` variables with up to `terms` monomials.
pub fn polynomial<R: Rng + ?Sized>(n: usize, terms: usize, rng: &mut R) -> Expr {
    let mut e = Expr::constant(rng.random_range(-1.0..1.0));
    for _ in 0..terms {
        let mut m = Expr::constant(rng.random_range(-1.0..1.0));
        let mut left = rng.random_range(1..=MAX_DEGREE);
        while left > 0 {
            let k = rng.random_range(1..=left);
            m = m * Expr::var(rng.random_range(0..n)).powi(k as i32);
            left -= k;
        }
        e = e + m;
    }
    e
}

pub fn form<R: Rng + ?Sized>(chart: &Arc<Chart>, degree: usize, rng: &mut R) -> Result<DifferentialForm> {
    let n = chart.dim();
    let coeffs = (0..binom(n, degree)).map(|_| polynomial(n, 3, rng)).collect();
    DifferentialForm::from_exprs(chart, degree, coeffs)
}

pub fn field<R: Rng + ?Sized>(chart: &Arc<Chart>, rng: &mut R) -> Result<VectorField> {
    let n = chart.dim();
    VectorField::from_exprs(chart, (0..n).map(|_| polynomial(n, 3, rng)).collect())
}

/// A polynomial map between charts.
pub fn map<R: Rng + ?Sized>(source: &Arc<Chart>, target: &Arc<Chart>, rng: &mut R) -> Result<SmoothMap> {
    let n = source.dim();
    SmoothMap::new(source, target, (0..target.dim()).map(|_| polynomial(n, 3, rng)).collect())
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;

    #[test]
    fn polynomials_stay_in_range_of_variables() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = polynomial(4, 5, &mut rng);
            assert!(p.max_var().is_none_or(|v| v < 4));
        }
    }

    #[test]
    fn forms_have_the_right_degree() {
        let c = Chart::euclidean("r4", 4).shared();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let f = form(&c, 2, &mut rng).unwrap();
        assert_eq!(f.degree(), 2);
        assert_eq!(f.coefficients(&[0.1, 0.2, 0.3, 0.4]).unwrap().len(), 6);
    }
}
