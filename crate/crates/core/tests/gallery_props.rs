use lcslab::actions::verify_twisted_hamiltonian;
use lcslab::gallery::{self, hopf_model, HopfParams, Params};
use lcslab::report::{Sampling, Verdict};
use proptest::prelude::*;

fn passes(report: &lcslab::report::Report, id: &str) -> bool {
    report.checks.iter().any(|c| c.id == id && c.verdict == Verdict::Pass)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn hopf_momentum_is_hamiltonian(a in 0.5..3.0f64, d in 0.0..2.0f64, seed in any::<u64>()) {
        let s = Sampling::new(24, seed, 1e-8).unwrap();
        let p = HopfParams { weights: vec![a, a + d], ..HopfParams::default() };
        let m = hopf_model(&p, &s).unwrap();
        let pts = m.chart.sample(24, seed).unwrap();
        let r = verify_twisted_hamiltonian(&m.lcs, &m.action, &m.momentum, &pts, 1e-8).unwrap();
        prop_assert!(r.passes());
        // Hamiltonian actions have θ(ρ) = 0.
        for x in m.action.fields() {
            let v = lcslab::actions::lee_homomorphism(m.lcs.lee(), x, &pts, 1e-8).unwrap();
            prop_assert!(v.value.abs() < 1e-8 && v.spread < 1e-8);
        }
        prop_assert!(m.action.bracket_relation(&pts).unwrap().passes(1e-8));
    }

    #[test]
    fn reduction_slices_lie_on_the_level(a in 0.5..3.0f64, d in 0.0..2.0f64, seed in any::<u64>()) {
        let w = format!("{a},{}", a + d);
        let m = gallery::build("reduction", &Params::from([("weights".to_string(), w)])).unwrap();
        let r = m.run(&Sampling::new(16, seed, 1e-8).unwrap());
        let name = &m.name;
        for id in ["slice.level", "slice.reduced.closed", "slice.reduced.nondegenerate", "bundle.level", "empty_level"] {
            prop_assert!(passes(&r, &format!("{name}.{id}")), "{id}\n{}", r.to_text());
        }
    }

    #[test]
    fn deck_constants_compose(seed in any::<u64>()) {
        let m = gallery::build("inoue", &Params::new()).unwrap();
        let r = m.run(&Sampling::new(16, seed, 1e-8).unwrap());
        prop_assert!(passes(&r, "inoue.deck.composition"));
        prop_assert!(passes(&r, "inoue.automorphic.cocycle"));
    }
}

#[test]
fn reports_are_deterministic() {
    for name in ["inoue", "cotangent", "reduction", "hopf"] {
        let m = gallery::build(name, &Params::new()).unwrap();
        let s = Sampling::new(16, 11, 1e-8).unwrap();
        assert_eq!(m.run(&s).to_json(), m.run(&s).to_json(), "{name}");
    }
}
