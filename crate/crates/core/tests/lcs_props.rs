use std::sync::Arc;

use lcslab::form::{pointwise_residual, vanishing_residual};
use lcslab::lcs::{conformal_rescale, solve_lee_form, twisted_derivative, verify_lcs_at, LcsStructure};
use lcslab::random;
use lcslab::{Chart, DifferentialForm};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn r4() -> Arc<Chart> {
    Chart::euclidean("r4", 4).shared()
}

/// `θ = dg` for a random polynomial `g`, closed by construction.
fn closed_one_form(c: &Arc<Chart>, rng: &mut ChaCha8Rng) -> DifferentialForm {
    random::form(c, 0, rng).unwrap().d()
}

/// `(e^g ω₀, dg)` with `ω₀ = dx₁∧dx₂ + dx₃∧dx₄`.
fn conformally_flat(c: &Arc<Chart>, rng: &mut ChaCha8Rng) -> LcsStructure {
    let g = random::form(c, 0, rng).unwrap().scaled(0.5);
    let dx = |i| DifferentialForm::dx(c, i);
    let w0 = dx(0).wedge(&dx(1)).unwrap().plus(&dx(2).wedge(&dx(3)).unwrap()).unwrap();
    LcsStructure::new(w0.times(&g.exp().unwrap()).unwrap(), g.d()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn twisted_d_squares_to_zero(seed in any::<u64>(), degree in 0usize..3) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = closed_one_form(&c, &mut rng);
        let a = random::form(&c, degree, &mut rng).unwrap();
        let dd = twisted_derivative(&theta, &twisted_derivative(&theta, &a).unwrap()).unwrap();
        for p in c.sample(16, seed).unwrap() {
            let scale = a.coefficients(&p).unwrap().iter().chain(&theta.coefficients(&p).unwrap()).fold(1.0_f64, |m, v| m.max(v.abs()));
            prop_assert!(vanishing_residual(&dd, &p).unwrap() < 1e-9 * scale * scale);
        }
    }

    #[test]
    fn twisted_leibniz(seed in any::<u64>(), p in 0usize..3, q in 0usize..2) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = closed_one_form(&c, &mut rng);
        let a = random::form(&c, p, &mut rng).unwrap();
        let b = random::form(&c, q, &mut rng).unwrap();
        let lhs = twisted_derivative(&theta, &a.wedge(&b).unwrap()).unwrap();
        let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
        let rhs = twisted_derivative(&theta, &a).unwrap().wedge(&b).unwrap().plus(&a.wedge(&b.d()).unwrap().scaled(sign)).unwrap();
        for x in c.sample(16, seed).unwrap() {
            let (r, s) = pointwise_residual(&lhs, &rhs, &x).unwrap();
            prop_assert!(r / (1.0 + s) < 1e-9);
        }
    }

    #[test]
    fn lee_form_is_recovered(seed in any::<u64>()) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = conformally_flat(&c, &mut rng);
        for p in c.sample(16, seed).unwrap() {
            let got = solve_lee_form(s.omega(), &p).unwrap().theta;
            let want = s.lee().coefficients(&p).unwrap();
            for (a, b) in got.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn conformal_rescaling_preserves_lcs(seed in any::<u64>()) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = conformally_flat(&c, &mut rng);
        let pts = c.sample(16, seed).unwrap();
        prop_assume!(verify_lcs_at(&s, &pts, 1e-8).unwrap().passes());
        let f = random::form(&c, 0, &mut rng).unwrap().scaled(0.5);
        let t = conformal_rescale(&s, &f).unwrap();
        prop_assert!(verify_lcs_at(&t, &pts, 1e-8).unwrap().passes());
    }

    #[test]
    fn exact_structures_satisfy_the_lcs_equation(seed in any::<u64>()) {
        let c = r4();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let theta = closed_one_form(&c, &mut rng);
        let eta = random::form(&c, 1, &mut rng).unwrap();
        let s = lcslab::lcs::exact_lcs(&theta, &eta).unwrap();
        let r = verify_lcs_at(&s, &c.sample(16, seed).unwrap(), 1e-8).unwrap();
        prop_assert!(r.lcs.passes(1e-8), "{:?}", r.lcs);
        prop_assert!(r.closedness.passes(1e-8));
    }
}
