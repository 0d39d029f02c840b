//! Reduction of `hopf(2, weights)` by the circle `v = (1, −1)` of the torus.

use std::collections::BTreeMap;

use crate::actions::{ActionSpec, MomentumMap, StructureConstants};
use crate::chart::SmoothMap;
use crate::decl::{ActionDecl, CouplingDoc, Document, ElementDecl, GaugeDecl, MomentumDecl, SliceDecl};
use crate::error::Result;
use crate::form::{DifferentialForm, VectorField};
use crate::reduction::{
    bundle_split_check, invariant_hamiltonian_check, level_scan, reduced_form_check, restrict_action, LevelSlice,
};
use crate::report::{CheckResult, Provenance, Sampling};

use super::hopf::{hopf_document, HopfParams, ROTATION_ANGLE};
use super::{expect, weights_tag, ExampleManifest, Expected, Objects, Rows};

/// Index of `y2` among the sphere coordinates.
const SOLVED_Y2: usize = 3;

fn params(weights: &[f64]) -> HopfParams {
    HopfParams { n: 2, weights: weights.to_vec(), solved: SOLVED_Y2 }
}

/// The Hopf document in the chart solving `y2`, with the full torus action
/// and an extra element mixing `x1` and `x2` that does not preserve `μ`.
fn torus_document(weights: &[f64]) -> Result<Document> {
    let mut doc = hopf_document(&params(weights))?;
    let (c, s) = (ROTATION_ANGLE.cos(), ROTATION_ANGLE.sin());
    let act = doc.action.as_mut().expect("declared");
    act.elements.insert("id".into(), ElementDecl { map: ["t", "x1", "y1", "x2"].map(String::from).to_vec(), valid: vec![] });
    act.elements.insert(
        "mix".into(),
        ElementDecl {
            map: vec!["t".into(), format!("{c:?}*x1 - {s:?}*x2"), "y1".into(), format!("{s:?}*x1 + {c:?}*x2")],
            valid: vec![],
        },
    );
    Ok(doc)
}

/// The Hopf document acted on by `ρ₁ − ρ₂`, with the slice
/// `(t, φ) ↦ (t, e^{iφ}/√2, i/√2)` of the zero level.
pub(crate) fn reduction_document(weights: &[f64]) -> Result<Document> {
    let mut doc = hopf_document(&params(weights))?;
    let r1 = doc.fields["rho1"].clone();
    let r2 = doc.fields["rho2"].clone();
    let rv = r1.iter().zip(&r2).map(|(a, b)| format!("({a}) - ({b})")).collect();
    doc.fields.insert("rho_v".into(), rv);
    let mut act = doc.action.take().expect("declared");
    act.dim = 1;
    act.rho = vec!["rho_v".into()];
    doc.action = Some(act);
    doc.momentum = Some(MomentumDecl::Auto("auto".into()));
    doc.slice = Some(SliceDecl {
        coords: vec!["t".into(), "phi".into()],
        map: ["t", "cos(phi)/sqrt(2)", "sin(phi)/sqrt(2)", "0"].map(String::from).to_vec(),
        level_of: vec!["mu_1".into()],
        sample_box: Some(vec![[-1.0, 1.0], [-std::f64::consts::PI, std::f64::consts::PI]]),
        domain: Default::default(),
    });
    Ok(doc)
}

fn bundle_document(weights: &[f64]) -> Result<CouplingDoc> {
    let mut fiber = reduction_document(weights)?;
    let action = fiber.action.take().expect("declared");
    fiber.momentum = None;
    fiber.slice = None;
    let base = super::coupling::coupling_s2_document(&[1.0, 1.0])?.base;
    Ok(CouplingDoc {
        base,
        gauge: GaugeDecl { a: vec!["A".into()] },
        fiber,
        action: ActionDecl { elements: BTreeMap::new(), ..action },
        momentum: MomentumDecl::Auto("auto".into()),
    })
}

fn expectations() -> Vec<super::Expectation> {
    use Expected::*;
    use Provenance::*;
    vec![
        expect("invariant.torus", Pass, Literature, "μ is invariant under the torus"),
        expect("invariant.identity", Pass, Trivial, "the identity preserves μ"),
        expect("invariant.noninvariant", Fail, Derived, "a rotation mixing z₁ and z₂ does not preserve μ"),
        expect("slice.level", Pass, Derived, "μ₁ − μ₂ vanishes on the slice"),
        expect("slice.annihilation", Pass, Literature, "ω(ρ, ·) vanishes on the zero level"),
        expect("slice.reduced.closed", Pass, Literature, "the reduced Lee form is closed"),
        expect("slice.reduced.lcs", Pass, Literature, "the reduced form is LCS"),
        expect("slice.reduced.nondegenerate", Pass, Literature, "the reduced form is nondegenerate"),
        expect("slice.value", Pass, Derived, "ω_red = dt ∧ dφ / (a₁ + a₂)"),
        expect("empty_level", Pass, Derived, "μ₁ + μ₂ has no zeros"),
        expect("trivial", Pass, Trivial, "reducing by the trivial action returns the original structure"),
        expect("non_transverse", Pass, Derived, "a slice along the orbits is rejected"),
        expect("bundle.level", Pass, Derived, "the bundle zero level is base × fiber zero level"),
        expect("bundle.mixed", Pass, Derived, "the reduced bundle form has no base–slice block"),
        expect("bundle.fiber_block", Pass, Derived, "the slice block is the reduced fiber form"),
        expect("bundle.base_block", Record, Derived, "largest entry of the base block"),
    ]
}

pub fn reduction(weights: &[f64]) -> Result<ExampleManifest> {
    let torus = torus_document(weights)?;
    let doc = reduction_document(weights)?;
    let bundle = bundle_document(weights)?;
    let name =
        if weights == [1.0, 1.0] { "reduction".to_string() } else { format!("reduction-w{}", weights_tag(weights)) };
    let mut objects = Objects::default();
    objects.declarations.insert("torus".into(), torus.to_json());
    objects.declarations.insert("reduction".into(), doc.to_json());
    objects.declarations.insert("bundle".into(), bundle.to_json());
    let w = weights.to_vec();
    Ok(ExampleManifest::new(
        name,
        format!("reduction of hopf(2, {weights:?}) by ρ₁ − ρ₂ at level zero"),
        objects,
        expectations(),
        move |sampling, rows| suite(&w, &torus, &doc, &bundle, sampling, rows),
    ))
}

fn suite(w: &[f64], torus: &Document, doc: &Document, bundle: &CouplingDoc, sampling: &Sampling, rows: &mut Rows) {
    let tol = sampling.tol;
    rows.section("invariant", |rows| {
        let l = torus.load(sampling)?;
        let act = l.action.expect("declared");
        let mu = l.momentum.expect("declared");
        let pts = l.chart.sample(sampling.points, sampling.seed)?;
        let r = invariant_hamiltonian_check(&act, &mu, &pts)?;
        let pick = |names: &[&str]| {
            r.entries.iter().filter(|(n, _, _)| names.contains(&n.as_str())).map(|(_, _, m)| m.clone()).reduce(|a, b| a.max(b))
        };
        rows.measured("invariant.torus", &pick(&["r1", "r2"]).expect("listed"), 1e-9);
        rows.measured("invariant.identity", &pick(&["id"]).expect("listed"), 1e-12);
        rows.measured("invariant.noninvariant", &pick(&["mix"]).expect("listed"), 1e-9);
        let (sub, sub_mu) = restrict_action(&act, &mu, &[1.0, 1.0])?;
        let scan = level_scan(sub_mu.component(0), &pts)?;
        rows.boolean(
            "empty_level",
            scan.empty(tol) && sub.dim() == 1,
            scan.points,
            format!("μ₁ + μ₂ ranges over [{:.6}, {:.6}]", scan.min, scan.max),
        );
        Ok(())
    });
    rows.section("slice", |rows| {
        let l = doc.load(sampling)?;
        let (s, act, mu, slice) = (
            l.lcs.expect("declared"),
            l.action.expect("declared"),
            l.momentum.expect("declared"),
            l.slice.expect("declared"),
        );
        let pts = slice.chart().sample(sampling.points, sampling.seed)?;
        let r = reduced_form_check(&s, &act, &mu, &slice, &pts, tol)?;
        rows.extend(r.checks("slice", Provenance::Literature, 1e-10));
        let got = r.reduced.omega().coefficients(&pts[0])?[0];
        rows.value("slice.value", got, 1.0 / (w[0] + w[1]), 1e-10);

        // The slice through the orbit of ρ₁ − ρ₂ itself.
        let bad_chart = crate::chart::Chart::new("orbit", &["t", "s"]).with_sample_range(1, -2.0, -1.0).shared();
        let bad = SmoothMap::parse(&bad_chart, &l.chart, &["t", "cos(s)/sqrt(2)", "sin(s)/sqrt(2)", "cos(s)/sqrt(2)"], &Default::default())?;
        let bad_pts = bad_chart.sample(8, sampling.seed)?;
        let err = reduced_form_check(&s, &act, &mu, &LevelSlice::new(bad, vec![0]), &bad_pts, tol);
        let ok = matches!(err, Err(crate::error::Error::Precondition { .. }));
        rows.boolean("non_transverse", ok, bad_pts.len(), match err {
            Err(e) => e.to_string(),
            Ok(_) => "accepted".into(),
        });

        let zero = ActionSpec::new(&l.chart, vec![VectorField::zero(&l.chart)], StructureConstants::abelian(1))?;
        let zmu = MomentumMap::new(vec![DifferentialForm::constant(&l.chart, 0.0)])?;
        let id = LevelSlice::new(SmoothMap::identity(&l.chart), vec![0]);
        let fpts = l.chart.sample(sampling.points.min(16), sampling.seed)?;
        let t = reduced_form_check(&s, &zero, &zmu, &id, &fpts, tol)?;
        let mut same = true;
        for p in &fpts {
            let (a, b) = (t.reduced.omega().coefficients(p)?, s.omega().coefficients(p)?);
            same &= crate::form::residual_and_scale(&a, &b).0 <= tol * (1.0 + b.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
        }
        rows.push(CheckResult::boolean("trivial", "", Provenance::Trivial, same && t.lcs.passes(), fpts.len()));
        Ok(())
    });
    rows.section("bundle", |rows| {
        let (_, _, c) = bundle.load(sampling)?;
        let l = doc.load(sampling)?;
        let slice = l.slice.expect("declared");
        // The slice was declared on its own copy of the fiber chart.
        let map = SmoothMap::new(slice.chart(), c.fiber_chart(), slice.map().components().to_vec())?;
        let slice = LevelSlice::new(map, slice.level_of().to_vec());
        let bp = c.base().sample(sampling.points, sampling.seed)?;
        let sp = slice.chart().sample(sampling.points, sampling.seed.wrapping_add(1))?;
        let pts: Vec<Vec<f64>> = bp.iter().zip(&sp).map(|(u, s)| u.iter().chain(s).copied().collect()).collect();
        let r = bundle_split_check(&c, c.momentum(), &slice, &pts)?;
        rows.measured("bundle.level", &r.level, 1e-10);
        rows.measured("bundle.mixed", &r.mixed, tol);
        rows.measured("bundle.fiber_block", &r.fiber_block, tol);
        let mut row = CheckResult::value("bundle.base_block", "", Provenance::Derived, r.base_block, 0.0, tol);
        row = row.with_note(format!("largest base-block entry {:.3e}", r.base_block));
        rows.push(row);
        Ok(())
    });
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_round_trip() {
        let d = reduction_document(&[1.0, 2.0]).unwrap();
        assert_eq!(Document::from_json(&d.to_json()).unwrap(), d);
        let b = bundle_document(&[1.0, 1.0]).unwrap();
        assert_eq!(CouplingDoc::from_json(&b.to_json()).unwrap(), b);
    }
}
