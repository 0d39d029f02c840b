//! Coupling examples: the circle bundle over `S²` with fiber a weighted
//! Hopf manifold, and a flat base with a curved gauge where `J̃` is not
//! integrable.

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::actions::{MomentumMap, StructureConstants};
use crate::chart::{Chart, SmoothMap};
use crate::coupling::{
    build_coupling, circle_fat_from_symplectic, fatness_check, horizontal_nijenhuis_identity, local_fatness_det,
    nijenhuis, nijenhuis_at, nijenhuis_tensoriality, verify_coupling, ArgClass, CouplingChart, GaugeChart,
};
use crate::decl::{ActionDecl, ChartDecl, CouplingDoc, Document, Domain, FormDecl, GaugeDecl, Loaded, MomentumDecl};
use crate::error::Result;
use crate::form::{solve_jets, DifferentialForm, EndoField, EndoKernel, VectorField};
use crate::jet::Jet;
use crate::reduction::bundle_momentum_check;
use crate::report::{CheckResult, Measurement, Provenance, Sampling};

use super::hopf::{hopf_document, HopfParams};
use super::{expect, weights_tag, ExampleManifest, Expected, Objects, Rows};

fn s2_base_document() -> Document {
    let forms = BTreeMap::from([
        (
            "area".to_string(),
            FormDecl { degree: 2, coeffs: BTreeMap::from([("u1,u2".into(), "1/sqrt(1 - u1^2 - u2^2)".into())]) },
        ),
        (
            "A".to_string(),
            FormDecl {
                degree: 1,
                coeffs: BTreeMap::from([
                    ("u1".into(), "-u2/(1 + sqrt(1 - u1^2 - u2^2))".into()),
                    ("u2".into(), "u1/(1 + sqrt(1 - u1^2 - u2^2))".into()),
                ]),
            },
        ),
    ]);
    Document {
        chart: ChartDecl {
            name: "s2".into(),
            coords: vec!["u1".into(), "u2".into()],
            domain: Domain::One("0.9 - u1^2 - u2^2".into()),
            sample_box: None,
        },
        forms,
        ..Default::default()
    }
}

/// A Hopf fiber acted on by the rotation of the first coordinate alone.
fn circle_fiber(weights: &[f64]) -> Result<(Document, ActionDecl)> {
    let mut fiber = hopf_document(&HopfParams { n: 2, weights: weights.to_vec(), solved: 1 })?;
    let mut action = fiber.action.take().expect("declared");
    fiber.momentum = None;
    action.dim = 1;
    action.rho.truncate(1);
    action.elements.retain(|k, _| k == "r1");
    Ok((fiber, action))
}

/// The coupling over the upper cap of `S²`: `A = (u₁du₂ − u₂du₁)/(1 + u₃)`
/// with `dA` the area form, fiber `hopf(2, weights)` with `ρ₁`.
pub fn coupling_s2_document(weights: &[f64]) -> Result<CouplingDoc> {
    let (fiber, action) = circle_fiber(weights)?;
    Ok(CouplingDoc {
        base: s2_base_document(),
        gauge: GaugeDecl { a: vec!["A".into()] },
        fiber,
        action,
        momentum: MomentumDecl::Auto("auto".into()),
    })
}

/// `J₁` on the graph chart of `S²`: rotation by `π/2` in the tangent plane,
/// `J₁ v = u × v`, expressed in `(u₁, u₂)`.
pub fn s2_complex_structure(chart: &Arc<Chart>) -> Result<EndoField> {
    let e = |s: &str| chart.parse(s);
    let u3 = "sqrt(1 - u1^2 - u2^2)";
    EndoField::from_rows(
        chart,
        vec![
            vec![e(&format!("-u1*u2/{u3}"))?, e(&format!("-(u2^2 + ({u3})^2)/{u3}"))?],
            vec![e(&format!("(u1^2 + ({u3})^2)/{u3}"))?, e(&format!("u1*u2/{u3}"))?],
        ],
    )
}

/// `J_b = Dψ⁻¹ J₀ Dψ` for `ψ(t, z) = (e^{t aⱼ} zⱼ)` into `ℂⁿ` with its
/// standard structure `J₀`.
#[derive(Debug)]
struct PulledComplex {
    psi: SmoothMap,
}

impl EndoKernel for PulledComplex {
    fn eval(&self, x: &[Jet]) -> Result<Vec<Jet>> {
        let jac = self.psi.jacobian_jets(x);
        let n = jac.len();
        let mut rhs = vec![Vec::new(); n];
        for k in (0..n).step_by(2) {
            rhs[k] = jac[k + 1].iter().map(|v| -v).collect();
            rhs[k + 1] = jac[k].clone();
        }
        Ok(solve_jets(&jac, &rhs)?.into_iter().flatten().collect())
    }
}

/// The complex structure of `S¹ × S^{2n−1}` as a quotient of `ℂⁿ \ 0`, on the
/// graph chart of [`hopf_document`] for `p`.
pub fn hopf_complex_structure(chart: &Arc<Chart>, p: &HopfParams) -> Result<EndoField> {
    p.validate()?;
    let params: BTreeMap<String, f64> = (0..p.n).map(|j| (format!("a{}", j + 1), p.weights[j])).collect();
    let comps = (0..2 * p.n)
        .map(|k| chart.parse_with(&format!("exp(a{}*t)*{}", k / 2 + 1, p.z(k)), &params))
        .collect::<Result<Vec<_>>>()?;
    let target = Chart::euclidean("cn", 2 * p.n).shared();
    let psi = SmoothMap::new(chart, &target, comps)?;
    Ok(EndoField::custom(chart, Arc::new(PulledComplex { psi })))
}

/// The loaded `S²` coupling with its complex structures.
#[derive(Clone, Debug)]
pub struct S2Coupling {
    pub weights: Vec<f64>,
    pub document: CouplingDoc,
    pub base: Loaded,
    pub fiber: Loaded,
    pub coupling: CouplingChart,
    pub j1: EndoField,
    pub jb: EndoField,
}

impl S2Coupling {
    pub fn new(weights: &[f64], sampling: &Sampling) -> Result<Self> {
        let document = coupling_s2_document(weights)?;
        let (base, fiber, coupling) = document.load(sampling)?;
        let j1 = s2_complex_structure(&base.chart)?;
        let jb = hopf_complex_structure(&fiber.chart, &HopfParams { n: 2, weights: weights.to_vec(), solved: 1 })?;
        Ok(S2Coupling { weights: weights.to_vec(), document, base, fiber, coupling, j1, jb })
    }
}

fn s2_expectations() -> Vec<super::Expectation> {
    use Expected::*;
    use Provenance::*;
    let mut out = vec![
        expect("gauge.bianchi", Pass, Trivial, "dF = 0 for the circle"),
        expect("gauge.curvature_is_area", Pass, Literature, "the curvature of A is the area form of S²"),
        expect("coupling.lee_closed", Pass, Trivial, "dΘ = 0"),
        expect("coupling.closed", Pass, Literature, "d_Θ Ω = 0 on P ×_G F"),
        expect("coupling.lifted_identity", Pass, Derived, "the horizontal-horizontal-vertical identity for coordinate lifts"),
        expect("coupling.fiber_restriction", Pass, Trivial, "Ω restricts to ω on the fiber"),
        expect("coupling.orthogonality", Pass, Trivial, "horizontal lifts are Ω-orthogonal to the fiber"),
        expect("coupling.lee_horizontal", Pass, Trivial, "Θ vanishes on horizontal lifts"),
        expect("coupling.nondegenerate", Pass, Literature, "Ω is nondegenerate where the connection is fat"),
        expect("fatness", Pass, Literature, "μ₁ F is nondegenerate on the sampled region"),
        expect("fatness.det_formula", Pass, Derived, "det(−μ₁ F) = μ₁² / u₃²"),
        expect("fatness.flat_gauge", Fail, Trivial, "a flat connection is not fat"),
        expect("fatness.zero_momentum", Fail, Trivial, "fatness fails where μ₁ vanishes"),
        expect("fatness_implies_nondegenerate", Pass, Literature, "fatness gives a nondegenerate Ω"),
        expect("bundle.hamiltonian", Pass, Derived, "the fiber action on the bundle has momentum μ ∘ pr"),
        expect("bundle.invariance", Pass, Derived, "the fiber rotation preserves Ω"),
        expect("bundle.corrupted", Fail, Derived, "μ + 1 is not a momentum map on the bundle"),
        expect("flat.closed", Pass, Trivial, "with A = 0 the coupling form is closed"),
        expect("nijenhuis.identity", Pass, Derived, "N_{J̃}(X*, Y*) matches the curvature expression"),
        expect("nijenhuis.base_integrable", Pass, Trivial, "J₁ on S² is integrable"),
        expect("nijenhuis.fiber_integrable", Pass, Derived, "J_b pulled back from ℂ² is integrable"),
        expect("nijenhuis.fiber_complex", Pass, Derived, "J_b² = −1"),
        expect("nijenhuis.type11", Record, Derived, "Ω(J̃·, J̃·) = Ω"),
        expect("corrupted.hhv", Fail, Derived, "dropping the curvature term breaks closedness on hhv triples"),
    ];
    for c in ArgClass::ALL {
        out.push(expect(&format!("coupling.case.{}", c.name()), Pass, Literature, &format!("d_Θ Ω = 0 on {} triples", c.name())));
    }
    out
}

pub fn coupling_s2(weights: &[f64]) -> Result<ExampleManifest> {
    let document = coupling_s2_document(weights)?;
    let name = if weights == [1.0, 1.0] {
        "coupling_s2".to_string()
    } else {
        format!("coupling_s2-w{}", weights_tag(weights))
    };
    let mut objects = Objects::default();
    objects.declarations.insert("coupling".into(), document.to_json());
    let w = weights.to_vec();
    Ok(ExampleManifest::new(
        name,
        format!("circle bundle over S² with fiber hopf(2, {weights:?})"),
        objects,
        s2_expectations(),
        move |sampling, rows| s2_suite(&w, sampling, rows),
    ))
}

fn s2_suite(weights: &[f64], sampling: &Sampling, rows: &mut Rows) {
    let tol = sampling.tol;
    let ex = match S2Coupling::new(weights, sampling) {
        Ok(e) => e,
        Err(e) => return rows.section("", |_| Err(e)),
    };
    let c = &ex.coupling;
    let sample = |chart: &Arc<Chart>| chart.sample(sampling.points, sampling.seed);
    let (base_pts, fiber_pts, pts) = match (sample(c.base()), sample(c.fiber_chart()), sample(c.total())) {
        (Ok(a), Ok(b), Ok(t)) => (a, b, t),
        (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return rows.section("", |_| Err(e)),
    };
    rows.section("gauge", |rows| {
        let g = c.gauge();
        rows.measured("gauge.bianchi", &g.bianchi_residual(&base_pts)?, tol);
        let area = &ex.base.forms["area"];
        let f = &g.curvature()?[0];
        let m = Measurement::sweep(&base_pts, |p| crate::form::pointwise_residual(f, area, p))?;
        rows.measured("gauge.curvature_is_area", &m, tol);
        circle_fat_from_symplectic(area, &ex.base.forms["A"], &base_pts, tol)?;
        Ok(())
    });
    let mut nondegenerate = false;
    rows.section("coupling", |rows| {
        let r = verify_coupling(c, &pts, tol)?;
        nondegenerate = r.nondegenerate();
        rows.extend(r.checks("coupling", Provenance::Literature));
        Ok(())
    });
    rows.section("fatness", |rows| {
        let mu = c.momentum();
        let rep = fatness_check(c.gauge(), mu, &base_pts, &fiber_pts)?;
        rows.push(rep.check("fatness", "", Provenance::Literature));
        let m = Measurement::sweep_many(&base_pts, 1, |u| {
            let mut r = 0.0_f64;
            let mut sc = 0.0_f64;
            let u3sq = 1.0 - u[0] * u[0] - u[1] * u[1];
            for y in fiber_pts.iter().take(8) {
                let mu1 = mu.values(y)?[0];
                let want = mu1 * mu1 / u3sq;
                r = r.max((local_fatness_det(c.gauge(), mu, u, y)? - want).abs());
                sc = sc.max(want.abs());
            }
            Ok(vec![(r, sc)])
        })?;
        rows.measured("fatness.det_formula", &m[0], 1e-10);
        let flat = GaugeChart::flat(c.base(), StructureConstants::abelian(1));
        rows.push(fatness_check(&flat, mu, &base_pts, &fiber_pts)?.check("fatness.flat_gauge", "", Provenance::Trivial));
        // A chart solving x2 reaches z₁ = 0, where μ₁ = 0.
        let side = hopf_document(&HopfParams { n: 2, weights: weights.to_vec(), solved: 2 })?.load(sampling)?;
        let side_mu = side.momentum.expect("declared");
        let first = MomentumMap::new(vec![side_mu.component(0).clone()])?;
        let mut side_pts = side.chart.sample(sampling.points, sampling.seed)?;
        side_pts.push(vec![0.0; 4]);
        rows.push(fatness_check(c.gauge(), &first, &base_pts, &side_pts)?.check("fatness.zero_momentum", "", Provenance::Trivial));
        rows.boolean(
            "fatness_implies_nondegenerate",
            !rep.passes() || nondegenerate,
            pts.len(),
            format!("fat: {}, Ω nondegenerate: {nondegenerate}", rep.passes()),
        );
        Ok(())
    });
    rows.section("bundle", |rows| {
        let mu = c.momentum();
        let r = bundle_momentum_check(c, mu, &pts)?;
        rows.measured("bundle.hamiltonian", &r.hamiltonian, tol);
        rows.measured("bundle.invariance", &r.invariance, tol);
        let one = DifferentialForm::constant(c.fiber_chart(), 1.0);
        let shifted = MomentumMap::new(vec![mu.component(0).plus(&one)?])?;
        rows.measured("bundle.corrupted", &bundle_momentum_check(c, &shifted, &pts)?.hamiltonian, tol);
        Ok(())
    });
    rows.section("flat", |rows| {
        let flat = GaugeChart::flat(c.base(), StructureConstants::abelian(1));
        let fc = build_coupling(&flat, c.fiber(), c.action(), c.momentum(), sampling)?;
        let r = verify_coupling(&fc, &pts, tol)?;
        rows.boolean("flat.closed", r.closed(), pts.len(), "");
        Ok(())
    });
    rows.section("nijenhuis", |rows| {
        let r = horizontal_nijenhuis_identity(c, &ex.j1, &ex.jb, &pts, tol)?;
        rows.measured("nijenhuis.identity", &r.identity, 1e-7);
        let mut type11 = CheckResult::from_measurement("nijenhuis.type11", "", Provenance::Derived, &r.type11, tol);
        type11 = type11.with_note(format!("max |N_J̃(X*, Y*)| = {:.3e}", r.max_horizontal_nijenhuis));
        rows.push(type11);
        let bx = VectorField::coordinate(c.base(), 0);
        let by = VectorField::coordinate(c.base(), 1);
        let nb = nijenhuis(&ex.j1, &bx, &by)?;
        let m = Measurement::sweep(&base_pts, |p| {
            Ok((nb.at(p)?.iter().fold(0.0_f64, |a, v| a.max(v.abs())), ex.j1.matrix(p)?.amax().powi(2)))
        })?;
        rows.measured("nijenhuis.base_integrable", &m, 1e-9);
        let fpts: Vec<Vec<f64>> = fiber_pts.iter().take(16).cloned().collect();
        let mut fmax: Option<Measurement> = None;
        for i in 0..4 {
            for k in i + 1..4 {
                let nf = nijenhuis(
                    &ex.jb,
                    &VectorField::coordinate(c.fiber_chart(), i),
                    &VectorField::coordinate(c.fiber_chart(), k),
                )?;
                let m = Measurement::sweep(&fpts, |p| {
                    Ok((nf.at(p)?.iter().fold(0.0_f64, |a, v| a.max(v.abs())), ex.jb.matrix(p)?.amax().powi(2)))
                })?;
                fmax = Some(match fmax {
                    Some(f) => f.max(m),
                    None => m,
                });
            }
        }
        rows.measured("nijenhuis.fiber_integrable", &fmax.expect("six pairs"), 1e-8);
        let m = Measurement::sweep(&fpts, |p| Ok((ex.jb.square_defect(p)?, ex.jb.matrix(p)?.amax().powi(2))))?;
        rows.measured("nijenhuis.fiber_complex", &m, 1e-10);
        Ok(())
    });
    rows.section("corrupted", |rows| {
        let bad = c.without_curvature_term()?;
        let r = verify_coupling(&bad, &pts, tol)?;
        rows.measured("corrupted.hhv", r.case(ArgClass::HorizontalHorizontalVertical), tol);
        Ok(())
    });
}

fn r4_base_document() -> Document {
    Document {
        chart: ChartDecl {
            name: "r4".into(),
            coords: ["s1", "s2", "s3", "s4"].map(String::from).to_vec(),
            domain: Domain::None,
            sample_box: None,
        },
        forms: BTreeMap::from([(
            "A".to_string(),
            FormDecl { degree: 1, coeffs: BTreeMap::from([("s2".into(), "s1".into())]) },
        )]),
        ..Default::default()
    }
}

/// The standard structure on `ℝ⁴`: `J∂₁ = ∂₃`, `J∂₂ = ∂₄`.
fn standard_j(chart: &Arc<Chart>) -> Result<EndoField> {
    #[rustfmt::skip]
    let m = DMatrix::from_row_slice(4, 4, &[
        0.0, 0.0, -1.0, 0.0,
        0.0, 0.0, 0.0, -1.0,
        1.0, 0.0, 0.0, 0.0,
        0.0, 1.0, 0.0, 0.0,
    ]);
    EndoField::constant(chart, &m)
}

/// `ℝ⁴ × hopf(2, (1, 1))` with `A = s₁ ds₂`: the base and fiber structures
/// are integrable, `J̃` is not.
pub fn nonintegrable() -> Result<ExampleManifest> {
    let (fiber, action) = circle_fiber(&[1.0, 1.0])?;
    let doc = CouplingDoc {
        base: r4_base_document(),
        gauge: GaugeDecl { a: vec!["A".into()] },
        fiber,
        action,
        momentum: MomentumDecl::Auto("auto".into()),
    };
    use Expected::*;
    use Provenance::*;
    let expected = vec![
        expect("base.standard", Pass, Trivial, "the standard structure on ℝ⁴ has N_J = 0"),
        expect("tensoriality", Pass, Derived, "N_{J̃}(X*, Y*) at p depends only on X*(p), Y*(p)"),
        expect("antisymmetry", Pass, Trivial, "N(X, Y) = −N(Y, X)"),
        expect("identity", Pass, Derived, "N_{J̃}(X*, Y*) matches the curvature expression"),
        expect("horizontal", Pass, Derived, "N_{J̃}(∂₁*, ∂₂*) = (0, −ρ₁)"),
        expect("not_integrable", Pass, Derived, "J̃ is not integrable"),
    ];
    let mut objects = Objects::default();
    objects.declarations.insert("coupling".into(), doc.to_json());
    Ok(ExampleManifest::new(
        "nonintegrable",
        "flat base ℝ⁴ with curved gauge A = s₁ ds₂ and a Hopf fiber",
        objects,
        expected,
        move |sampling, rows| {
            rows.section("", |rows| nonintegrable_suite(&doc, sampling, rows));
        },
    ))
}

fn nonintegrable_suite(doc: &CouplingDoc, sampling: &Sampling, rows: &mut Rows) -> Result<()> {
    let tol = sampling.tol;
    let (base, fiber, c) = doc.load(sampling)?;
    let j1 = standard_j(&base.chart)?;
    let jb = hopf_complex_structure(&fiber.chart, &HopfParams::default())?;
    let pts = c.total().sample(sampling.points.min(16), sampling.seed)?;
    let bpts = base.chart.sample(sampling.points, sampling.seed)?;

    let x = VectorField::parse(&base.chart, &["s1*s2", "sin(s3)", "s4^2", "exp(s1)"], &Default::default())?;
    let y = VectorField::parse(&base.chart, &["cos(s2)", "s1*s3", "1", "s2*s4"], &Default::default())?;
    let mut worst = Measurement::single(0.0);
    worst.points = 0;
    for p in &bpts {
        let n = nijenhuis_at(&j1, &x, &y, p, tol)?;
        let mut m = Measurement::single(n.iter().fold(0.0_f64, |a, v| a.max(v.abs())));
        m.points = 1;
        worst = worst.max(m);
    }
    worst.points = bpts.len();
    rows.measured("base.standard", &worst, 1e-10);

    let jt = c.tilde_j(&j1, &jb)?;
    let dx1 = c.horizontal_lift(&VectorField::coordinate(c.base(), 0))?;
    let dx2 = c.horizontal_lift(&VectorField::coordinate(c.base(), 1))?;
    let mut tens = Measurement::single(0.0);
    for p in pts.iter().take(4) {
        tens = tens.max(Measurement::single(nijenhuis_tensoriality(&jt, &dx1, &dx2, p)?));
    }
    tens.points = pts.len().min(4);
    rows.measured("tensoriality", &tens, 1e-9);

    let n12 = nijenhuis(&jt, &dx1, &dx2)?;
    let n21 = nijenhuis(&jt, &dx2, &dx1)?;
    let m = Measurement::sweep(&pts, |p| {
        let (a, b) = (n12.at(p)?, n21.at(p)?);
        let r = a.iter().zip(&b).fold(0.0_f64, |m, (u, v)| m.max((u + v).abs()));
        Ok((r, a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))))
    })?;
    rows.measured("antisymmetry", &m, tol);

    let r = horizontal_nijenhuis_identity(&c, &j1, &jb, &pts, tol)?;
    rows.measured("identity", &r.identity, 1e-7);

    let rho = c.action().field(0);
    let m = Measurement::sweep(&pts, |p| {
        let (_, y) = c.split(p);
        let mut want = vec![0.0; 4];
        want.extend(rho.at(y)?.into_iter().map(|v| -v));
        let got = n12.at(p)?;
        Ok(crate::form::residual_and_scale(&got, &want))
    })?;
    rows.measured("horizontal", &m, 1e-8);
    rows.boolean(
        "not_integrable",
        r.max_horizontal_nijenhuis > 1e-3,
        pts.len(),
        format!("max |N_J̃(X*, Y*)| = {:.3e}", r.max_horizontal_nijenhuis),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn j1_squares_to_minus_one() {
        let d = s2_base_document().load(&Sampling::default()).unwrap();
        let j = s2_complex_structure(&d.chart).unwrap();
        for p in d.chart.sample(16, 2).unwrap() {
            assert!(j.square_defect(&p).unwrap() < 1e-12);
        }
    }

    #[test]
    fn document_round_trips() {
        let d = coupling_s2_document(&[1.0, 2.0]).unwrap();
        assert_eq!(CouplingDoc::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(matches!(coupling_s2(&[3.0, 1.0]), Err(Error::InvalidInput(_))));
    }
}
