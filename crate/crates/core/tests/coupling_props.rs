use lcslab::coupling::{fatness_check, local_fatness_det, verify_coupling};
use lcslab::gallery::S2Coupling;
use lcslab::lcs::nondegeneracy;
use lcslab::random;
use lcslab::report::Sampling;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn weights() -> impl Strategy<Value = Vec<f64>> {
    (0.5..3.0f64, 0.0..2.0f64).prop_map(|(a, d)| vec![a, a + d])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn vertical_arguments_see_the_fiber(w in weights(), seed in any::<u64>()) {
        let ex = S2Coupling::new(&w, &Sampling::default()).unwrap();
        let c = &ex.coupling;
        let m = c.base().dim();
        for p in c.total().sample(8, seed).unwrap() {
            let (_, y) = c.split(&p);
            let vb = c.vertical_basis();
            for (i, u) in vb.iter().enumerate() {
                for (j, v) in vb.iter().enumerate() {
                    let big = c.omega().eval_on(&p, &[u.clone(), v.clone()]).unwrap();
                    let small = c.fiber().omega().matrix(y).unwrap()[(i, j)];
                    prop_assert!((big - small).abs() <= 1e-12 * (1.0 + small.abs()));
                }
                let t = c.theta().eval_on(&p, std::slice::from_ref(u)).unwrap();
                prop_assert_eq!(t, c.fiber().lee().coefficients(y).unwrap()[i]);
            }
            prop_assert_eq!(p.len(), m + vb.len());
        }
    }

    #[test]
    fn horizontal_and_vertical_are_orthogonal(w in weights(), seed in any::<u64>()) {
        let ex = S2Coupling::new(&w, &Sampling::default()).unwrap();
        let c = &ex.coupling;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = c.horizontal_lift(&random::field(c.base(), &mut rng).unwrap()).unwrap();
        let v = c.vertical(&random::field(c.fiber_chart(), &mut rng).unwrap()).unwrap();
        for p in c.total().sample(8, seed).unwrap() {
            let (xp, vp) = (x.at(&p).unwrap(), v.at(&p).unwrap());
            let scale = xp.iter().chain(&vp).fold(1.0_f64, |m, a| m.max(a.abs()));
            let val = c.omega().eval_on(&p, &[xp, vp]).unwrap();
            prop_assert!(val.abs() < 1e-10 * scale * scale, "{val}");
        }
    }

    #[test]
    fn coupling_is_closed_and_fat(w in weights(), seed in any::<u64>()) {
        let s = Sampling::new(16, seed, 1e-8).unwrap();
        let ex = S2Coupling::new(&w, &s).unwrap();
        let c = &ex.coupling;
        let bp = c.base().sample(16, seed).unwrap();
        prop_assert!(c.gauge().bianchi_residual(&bp).unwrap().passes(1e-8));
        let pts = c.total().sample(16, seed).unwrap();
        let r = verify_coupling(c, &pts, 1e-8).unwrap();
        prop_assert!(r.closed());
        let fp = c.fiber_chart().sample(16, seed).unwrap();
        prop_assert!(fatness_check(c.gauge(), c.momentum(), &bp, &fp).unwrap().passes());
        // Where the local determinant clears the threshold, Ω is nondegenerate.
        for p in &pts {
            let (u, y) = c.split(p);
            if local_fatness_det(c.gauge(), c.momentum(), u, y).unwrap().abs() > 1e-4 {
                let nd = nondegeneracy(c.omega(), p).unwrap();
                prop_assert!(nd.normalized > lcslab::lcs::NONDEGENERACY_THRESHOLD, "{:?}", nd);
            }
        }
    }
}
