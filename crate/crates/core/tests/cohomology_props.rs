use lcslab::cohomology::{green_primitive, hodge_decompose, product_complex, Cochain, TwistedComplex};
use proptest::prelude::*;

fn alternating(b: &[usize]) -> i64 {
    b.iter().enumerate().map(|(i, &x)| if i % 2 == 0 { x as i64 } else { -(x as i64) }).sum()
}

/// A sphere `∂Δ^{d}` with a random exact local system, optionally crossed
/// with a circle of holonomy `h`.
fn complex(d: usize, phi: &[f64], h: Option<f64>) -> TwistedComplex {
    let s = TwistedComplex::simplex_boundary(d).gauge_transformed(&phi[..d + 1]).unwrap();
    match h {
        Some(h) => product_complex(&TwistedComplex::circle(h).unwrap(), &s).unwrap(),
        None => s,
    }
}

fn arb_complex() -> impl Strategy<Value = (TwistedComplex, Option<f64>)> {
    (2usize..4, prop::collection::vec(-1.0..1.0f64, 5), prop::option::of(-1.5..1.5f64))
        .prop_map(|(d, phi, h)| (complex(d, &phi, h), h))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10))]

    #[test]
    fn coboundary_squares_to_zero((k, _) in arb_complex()) {
        prop_assert!(k.square_residual() < 1e-12, "{}", k.square_residual());
    }

    #[test]
    fn gauge_leaves_betti_numbers((k, _) in arb_complex(), phi in prop::collection::vec(-1.0..1.0f64, 16)) {
        let g = k.gauge_transformed(&phi[..k.vertex_count()]).unwrap();
        prop_assert_eq!(g.betti(), k.betti());
    }

    #[test]
    fn euler_characteristic_and_harmonic_dims((k, h) in arb_complex()) {
        let b = k.betti();
        prop_assert_eq!(alternating(&b), k.euler_characteristic());
        let dims: Vec<usize> = (0..=k.dim()).map(|d| k.harmonic_dim(d)).collect();
        prop_assert_eq!(&dims, &b);
        if let Some(h) = h {
            prop_assert_eq!(k.euler_characteristic(), 0);
            if h.abs() > 0.1 {
                prop_assert!(b.iter().all(|&x| x == 0), "{:?}", b);
            }
        }
    }

    #[test]
    fn hodge_reconstructs_and_green_inverts((k, _) in arb_complex(), seed in 0u64..1000) {
        for deg in 1..=k.dim() {
            let vals = |n: usize, s: u64| (0..n).map(|i| (((i as u64 + 1) * (s + 7) * 2654435761) % 1000) as f64 / 500.0 - 1.0).collect::<Vec<_>>();
            let c = Cochain::new(deg, vals(k.count(deg), seed));
            let hd = hodge_decompose(&k, &c).unwrap();
            prop_assert!(hd.reconstruction_residual < 1e-9);
            prop_assert!(hd.orthogonality_residual < 1e-9);
            let a = Cochain::new(deg - 1, vals(k.count(deg - 1), seed + 1));
            let target = k.apply_coboundary(&a).unwrap();
            let psi = green_primitive(&k, &target).unwrap();
            let back = k.apply_coboundary(&psi).unwrap();
            let r = (&back.values - &target.values).amax();
            prop_assert!(r < 1e-9 * (1.0 + target.values.amax()));
        }
    }
}

#[test]
fn gallery_betti_numbers() {
    let l2 = 2f64.ln();
    let circle = |h| TwistedComplex::circle(h).unwrap();
    let s3 = TwistedComplex::simplex_boundary(4);
    assert_eq!(circle(l2).betti(), [0, 0]);
    assert_eq!(circle(0.0).betti(), [1, 1]);
    assert_eq!(product_complex(&circle(l2), &circle(0.0)).unwrap().betti(), [0, 0, 0]);
    assert_eq!(product_complex(&circle(0.0), &circle(0.0)).unwrap().betti(), [1, 2, 1]);
    assert_eq!(product_complex(&circle(0.0), &s3).unwrap().betti(), [1, 1, 0, 1, 1]);
    assert_eq!(product_complex(&circle(l2), &s3).unwrap().betti(), [0; 5]);
}
