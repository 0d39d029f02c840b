//! Finite twisted complexes: circles, a torus and `S¹ × S³`.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cohomology::{green_primitive, h0_vanishing, hodge_decompose, product_complex, Cochain, TwistedComplex};
use crate::decl::ComplexDoc;
use crate::error::Result;
use crate::report::{Measurement, Provenance, Sampling};

use super::{expect, ExampleManifest, Expected, Objects, Rows};

const PRODUCT_BUDGET: Duration = Duration::from_secs(60);

struct Case {
    name: &'static str,
    complex: TwistedComplex,
    betti: Vec<usize>,
    statement: &'static str,
    provenance: Provenance,
}

fn cases() -> Result<Vec<Case>> {
    let log2 = 2f64.ln();
    Ok(vec![
        Case {
            name: "circle_twisted",
            complex: TwistedComplex::circle(log2)?,
            betti: vec![0, 0],
            statement: "the circle with holonomy log 2 has H*_θ = 0",
            provenance: Provenance::Derived,
        },
        Case {
            name: "circle",
            complex: TwistedComplex::circle(0.0)?,
            betti: vec![1, 1],
            statement: "the untwisted circle has Betti numbers (1, 1)",
            provenance: Provenance::Trivial,
        },
        Case {
            name: "torus_twisted",
            complex: product_complex(&TwistedComplex::circle(log2)?, &TwistedComplex::circle(0.0)?)?,
            betti: vec![0, 0, 0],
            statement: "the torus twisted along one factor has H*_θ = 0",
            provenance: Provenance::Derived,
        },
        Case {
            name: "s1_s3",
            complex: product_complex(&TwistedComplex::circle(0.0)?, &TwistedComplex::simplex_boundary(4))?,
            betti: vec![1, 1, 0, 1, 1],
            statement: "S¹ × ∂Δ⁴ untwisted has Betti numbers (1, 1, 0, 1, 1)",
            provenance: Provenance::Derived,
        },
        Case {
            name: "s1_s3_twisted",
            complex: product_complex(&TwistedComplex::circle(log2)?, &TwistedComplex::simplex_boundary(4))?,
            betti: vec![0; 5],
            statement: "S¹ × ∂Δ⁴ twisted along the circle has H*_θ = 0",
            provenance: Provenance::Derived,
        },
    ])
}

fn expectations(cases: &[Case]) -> Vec<super::Expectation> {
    use Expected::*;
    use Provenance::*;
    let mut out = Vec::new();
    for c in cases {
        let n = c.name;
        out.push(expect(&format!("{n}.betti"), Pass, c.provenance, c.statement));
        out.push(expect(&format!("{n}.square"), Pass, Trivial, "δ_θ ∘ δ_θ = 0"));
        out.push(expect(&format!("{n}.hodge"), Pass, Literature, "c = h + δ_θ a + δ_θᵀ b reconstructs c"));
        out.push(expect(&format!("{n}.harmonic_dim"), Pass, Literature, "dim ker Δ_k equals the kth Betti number"));
        out.push(expect(&format!("{n}.green"), Pass, Literature, "the Green primitive ψ satisfies δ_θ ψ = c"));
        out.push(expect(&format!("{n}.green_independent"), Pass, Literature, "ψ does not depend on the primitive c was built from"));
        out.push(expect(&format!("{n}.gauge"), Pass, Trivial, "gauge transformations preserve the Betti numbers"));
        out.push(expect(&format!("{n}.euler"), Pass, Trivial, "Σ (−1)^k b_k equals the Euler characteristic"));
    }
    out.push(expect("circle_twisted.h0", Pass, Literature, "H⁰_θ = 0 when some loop has nonzero holonomy"));
    out.push(expect("circle.h0", Pass, Trivial, "H⁰_θ ≠ 0 without holonomy"));
    out.push(expect("s1_s3.euler_zero", Pass, Trivial, "χ(S¹ × S³) = 0"));
    out.push(expect("product_time", Pass, Trivial, "product complexes are built and ranked within 60 s"));
    out
}

pub fn complexes() -> Result<ExampleManifest> {
    let started = Instant::now();
    let list = cases()?;
    let built = started.elapsed();
    let mut objects = Objects::default();
    for c in &list {
        objects.declarations.insert(c.name.to_string(), ComplexDoc::from_complex(&c.complex).to_json());
        objects.complexes.insert(c.name.to_string(), c.complex.clone());
    }
    let expected = expectations(&list);
    Ok(ExampleManifest::new(
        "complexes",
        "twisted simplicial cohomology of circles, a torus and S¹ × S³",
        objects,
        expected,
        move |sampling, rows| {
            let started = Instant::now();
            for c in &list {
                rows.section(c.name, |rows| case_rows(c, sampling, rows));
            }
            rows.section("", |rows| {
                rows.boolean("circle_twisted.h0", h0_vanishing(&list[0].complex)?.vanishes, 1, "");
                let r = h0_vanishing(&list[1].complex)?;
                rows.boolean("circle.h0", !r.vanishes && r.consistent, 1, "");
                rows.boolean("s1_s3.euler_zero", list[3].complex.euler_characteristic() == 0, 1, "");
                Ok(())
            });
            let elapsed = built + started.elapsed();
            rows.boolean("product_time", elapsed < PRODUCT_BUDGET, 1, "");
        },
    ))
}

fn random_cochain(k: &TwistedComplex, degree: usize, rng: &mut ChaCha8Rng) -> Cochain {
    Cochain::new(degree, (0..k.count(degree)).map(|_| rng.random_range(-1.0..1.0)).collect())
}

fn case_rows(c: &Case, sampling: &Sampling, rows: &mut Rows) -> Result<()> {
    let k = &c.complex;
    let n = c.name;
    let betti = k.betti();
    rows.boolean(&format!("{n}.betti"), betti == c.betti, 1, format!("Betti numbers {betti:?}"));
    rows.measured(&format!("{n}.square"), &Measurement::single(k.square_residual()), 1e-12);

    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut hodge = Measurement::single(0.0);
    let mut dims = Vec::new();
    let mut green = Measurement::single(0.0);
    let mut independent = Measurement::single(0.0);
    for deg in 0..=k.dim() {
        let h = hodge_decompose(k, &random_cochain(k, deg, &mut rng))?;
        hodge = hodge.max(Measurement::single(h.reconstruction_residual));
        dims.push(k.harmonic_dim(deg));
        if deg == 0 || k.count(deg - 1) == 0 {
            continue;
        }
        // c = δ a and c = δ(a + δ b) must give the same primitive.
        let a = random_cochain(k, deg - 1, &mut rng);
        let target = k.apply_coboundary(&a)?;
        let psi = green_primitive(k, &target)?;
        let back = k.apply_coboundary(&psi)?;
        let r = (&back.values - &target.values).amax();
        green = green.max(Measurement::single(r / (1.0 + target.values.amax())));
        let mut a2 = a.clone();
        if deg >= 2 {
            let b = random_cochain(k, deg - 2, &mut rng);
            a2.values += k.apply_coboundary(&b)?.values;
        }
        let psi2 = green_primitive(k, &k.apply_coboundary(&a2)?)?;
        let r = (&psi2.values - &psi.values).amax();
        independent = independent.max(Measurement::single(r / (1.0 + psi.values.amax())));
    }
    rows.measured(&format!("{n}.hodge"), &hodge, 1e-9);
    rows.boolean(&format!("{n}.harmonic_dim"), dims == betti, 1, format!("harmonic dimensions {dims:?}"));
    rows.measured(&format!("{n}.green"), &green, 1e-9);
    rows.measured(&format!("{n}.green_independent"), &independent, 1e-9);

    let phi: Vec<f64> = (0..k.vertex_count()).map(|_| rng.random_range(-1.0..1.0)).collect();
    let g = k.gauge_transformed(&phi)?;
    rows.boolean(&format!("{n}.gauge"), g.betti() == betti, 1, "");
    let alt: i64 = betti.iter().enumerate().map(|(i, b)| if i % 2 == 0 { *b as i64 } else { -(*b as i64) }).sum();
    rows.boolean(&format!("{n}.euler"), alt == k.euler_characteristic(), 1, format!("χ = {}", k.euler_characteristic()));
    Ok(())
}
