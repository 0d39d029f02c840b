use std::sync::Arc;

use lcslab::form::{lie_derivative, pointwise_residual, vanishing_residual};
use lcslab::random;
use lcslab::{Chart, DifferentialForm, Expr, VectorField};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POINTS: usize = 16;

fn r4() -> Arc<Chart> {
    Chart::euclidean("r4", 4).shared()
}

fn pts(c: &Chart, seed: u64) -> Vec<Vec<f64>> {
    c.sample(POINTS, seed).unwrap()
}

fn close(a: &DifferentialForm, b: &DifferentialForm, pts: &[Vec<f64>]) -> f64 {
    pts.iter()
        .map(|p| {
            let (r, s) = pointwise_residual(a, b, p).unwrap();
            r / (1.0 + s)
        })
        .fold(0.0, f64::max)
}

/// A polynomial given by `(coefficient, exponents)` terms, with its gradient
/// computed term by term.
struct Poly {
    terms: Vec<(f64, [i32; 4])>,
}

impl Poly {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        let terms = (0..5)
            .map(|_| (rng.random_range(-1.0..1.0), [0; 4].map(|_: i32| rng.random_range(0..4))))
            .collect();
        Poly { terms }
    }

    fn expr(&self) -> Expr {
        let mut e = Expr::constant(0.0);
        for (c, ex) in &self.terms {
            let mut m = Expr::constant(*c);
            for (i, &k) in ex.iter().enumerate() {
                m = m * Expr::var(i).powi(k);
            }
            e = e + m;
        }
        e
    }

    fn gradient(&self, p: &[f64]) -> [f64; 4] {
        let mut g = [0.0; 4];
        for (c, ex) in &self.terms {
            for i in 0..4 {
                if ex[i] == 0 {
                    continue;
                }
                let mut v = c * f64::from(ex[i]);
                for j in 0..4 {
                    let k = if i == j { ex[j] - 1 } else { ex[j] };
                    v *= p[j].powi(k);
                }
                g[i] += v;
            }
        }
        g
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn d_squared_vanishes(seed in any::<u64>(), degree in 0usize..3) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::form(&c, degree, &mut rng).unwrap();
        let dd = a.d().d();
        for p in pts(&c, seed) {
            let scale = a.coefficients(&p).unwrap().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            prop_assert!(vanishing_residual(&dd, &p).unwrap() / scale < 1e-9);
        }
    }

    #[test]
    fn graded_leibniz(seed in any::<u64>(), p in 0usize..3, q in 0usize..2) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::form(&c, p, &mut rng).unwrap();
        let b = random::form(&c, q, &mut rng).unwrap();
        let lhs = a.wedge(&b).unwrap().d();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = a.d().wedge(&b).unwrap().plus(&a.wedge(&b.d()).unwrap().scaled(sign)).unwrap();
        prop_assert!(close(&lhs, &rhs, &pts(&c, seed)) < 1e-9);
    }

    #[test]
    fn lie_interior_commutator(seed in any::<u64>()) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random::form(&c, 2, &mut rng).unwrap();
        let x = random::field(&c, &mut rng).unwrap();
        let y = random::field(&c, &mut rng).unwrap();
        let lhs = lie_derivative(&x, &w.interior(&y).unwrap())
            .unwrap()
            .minus(&lie_derivative(&x, &w).unwrap().interior(&y).unwrap())
            .unwrap();
        let rhs = w.interior(&x.bracket(&y).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, &pts(&c, seed)) < 1e-9);
    }

    #[test]
    fn lie_derivative_of_one_form_on_a_field(seed in any::<u64>()) {
        // (L_X α)(Y) = X(α(Y)) − α([X, Y])
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random::form(&c, 1, &mut rng).unwrap();
        let x = random::field(&c, &mut rng).unwrap();
        let y = random::field(&c, &mut rng).unwrap();
        let lhs = lie_derivative(&x, &a).unwrap().interior(&y).unwrap();
        let rhs = x.apply_to(&a.interior(&y).unwrap()).unwrap().minus(&a.interior(&x.bracket(&y).unwrap()).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, &pts(&c, seed)) < 1e-9);
    }

    #[test]
    fn pullback_commutes_with_d(seed in any::<u64>(), degree in 0usize..3) {
        let src = Chart::euclidean("r3", 3).shared();
        let dst = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::map(&src, &dst, &mut rng).unwrap();
        let a = random::form(&dst, degree, &mut rng).unwrap();
        let lhs = a.d().pullback(&m).unwrap();
        let rhs = a.pullback(&m).unwrap().d();
        prop_assert!(close(&lhs, &rhs, &pts(&src, seed)) < 1e-9);
    }

    #[test]
    fn pullback_respects_wedge(seed in any::<u64>()) {
        let src = Chart::euclidean("r3", 3).shared();
        let dst = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random::map(&src, &dst, &mut rng).unwrap();
        let a = random::form(&dst, 1, &mut rng).unwrap();
        let b = random::form(&dst, 1, &mut rng).unwrap();
        let lhs = a.wedge(&b).unwrap().pullback(&m).unwrap();
        let rhs = a.pullback(&m).unwrap().wedge(&b.pullback(&m).unwrap()).unwrap();
        prop_assert!(close(&lhs, &rhs, &pts(&src, seed)) < 1e-9);
    }

    #[test]
    fn derivative_is_exact(seed in any::<u64>()) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let poly = Poly::random(&mut rng);
        let df = DifferentialForm::scalar(&c, poly.expr()).d();
        for p in pts(&c, seed) {
            let got = df.coefficients(&p).unwrap();
            let want = poly.gradient(&p);
            for i in 0..4 {
                prop_assert!((got[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i].abs()), "{} vs {}", got[i], want[i]);
            }
        }
    }

    #[test]
    fn bracket_is_antisymmetric_and_jacobi(seed in any::<u64>()) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random::field(&c, &mut rng).unwrap();
        let y = random::field(&c, &mut rng).unwrap();
        let z = random::field(&c, &mut rng).unwrap();
        let br = |a: &VectorField, b: &VectorField| a.bracket(b).unwrap();
        let sum = br(&x, &y).plus(&br(&y, &x)).unwrap();
        let jac = br(&x, &br(&y, &z)).plus(&br(&y, &br(&z, &x))).unwrap().plus(&br(&z, &br(&x, &y))).unwrap();
        for p in pts(&c, seed) {
            let s = br(&x, &br(&y, &z)).at(&p).unwrap().iter().fold(1.0_f64, |m, v| m.max(v.abs()));
            prop_assert!(sum.at(&p).unwrap().iter().all(|v| v.abs() < 1e-9 * s));
            prop_assert!(jac.at(&p).unwrap().iter().all(|v| v.abs() < 1e-9 * s));
        }
    }
}
