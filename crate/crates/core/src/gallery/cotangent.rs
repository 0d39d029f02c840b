//! Cotangent bundles `T*Q` with Lee form `π*α` and `ω = d_{π*α} λ`,
//! `λ = Σ pᵢ dqᵢ`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::actions::{lee_homomorphism, verify_twisted_hamiltonian};
use crate::decl::{ActionDecl, ChartDecl, Document, FormDecl, LcsDecl, MomentumDecl};
use crate::error::{Error, Result};
use crate::form::{pointwise_residual, vanishing_residual, DifferentialForm};
use crate::lcs::verify_lcs_at;
use crate::report::{CheckResult, Measurement, Provenance, Sampling};

use super::{expect, ExampleManifest, Expected, Objects, Rows};

/// The declaration of `T*ℝᵐ` with `α = Σ alpha[i] dqᵢ`. With `m = 2` the
/// cotangent lift of the rotation about the origin is included.
///
/// Fails with [`Error::InvalidInput`] when `dα` does not vanish on the
/// sampled chart.
pub fn cotangent_document(m: usize, alpha: &[&str]) -> Result<Document> {
    if m == 0 {
        return Err(Error::InvalidInput("the base needs dimension at least 1".into()));
    }
    if alpha.len() != m {
        return Err(Error::InvalidInput(format!("α needs {m} coefficients, got {}", alpha.len())));
    }
    let q = |i: usize| format!("q{}", i + 1);
    let p = |i: usize| format!("p{}", i + 1);
    let mut coords: Vec<String> = (0..m).map(q).collect();
    coords.extend((0..m).map(p));
    let qrange = if m == 1 { [-PI, PI] } else { [-1.0, 1.0] };
    let mut sample_box = vec![qrange; m];
    sample_box.extend(vec![[-1.0, 1.0]; m]);
    let lambda = FormDecl { degree: 1, coeffs: (0..m).map(|i| (q(i), p(i))).collect() };
    let alpha_decl = FormDecl {
        degree: 1,
        coeffs: (0..m).filter(|&i| alpha[i].trim() != "0").map(|i| (q(i), alpha[i].to_string())).collect(),
    };
    let mut doc = Document {
        params: BTreeMap::new(),
        chart: ChartDecl { name: format!("cotangent{m}"), coords, domain: Default::default(), sample_box: Some(sample_box) },
        forms: BTreeMap::from([("lambda".to_string(), lambda), ("alpha".to_string(), alpha_decl)]),
        fields: BTreeMap::new(),
        lcs: Some(LcsDecl { omega: None, lee: "alpha".into(), potential: Some("lambda".into()) }),
        action: None,
        momentum: None,
        slice: None,
    };
    if m == 2 {
        doc.fields.insert("rho".into(), ["-q2", "q1", "-p2", "p1"].map(String::from).to_vec());
        doc.action = Some(ActionDecl { dim: 1, rho: vec!["rho".into()], ..Default::default() });
    }
    let loaded = doc.load(&Sampling::default())?;
    let a = &loaded.forms["alpha"];
    for (i, src) in alpha.iter().enumerate() {
        let e = loaded.chart.parse(src)?;
        if let Some(v) = e.max_var() {
            if v >= m {
                return Err(Error::InvalidInput(format!("α[{i}] = `{src}` depends on a fiber coordinate")));
            }
        }
    }
    let pts = loaded.chart.sample(64, 0)?;
    let da = a.d();
    let m_closed = Measurement::sweep(&pts, |x| Ok((vanishing_residual(&da, x)?, 0.0)))?;
    if !m_closed.passes(1e-9) {
        return Err(Error::InvalidInput(format!("α is not closed: |dα| reaches {:.3e}", m_closed.raw)));
    }
    if m == 2 && doc.action.is_some() {
        // μ = −λ(ρ̃) needs θ(ρ̃) = 0; otherwise the lift is left out.
        let rho = &loaded.fields["rho"];
        let tr = a.interior(rho)?;
        let ok = Measurement::sweep(&pts, |x| Ok((tr.value(x)?.abs(), 0.0)))?.passes(1e-9);
        if ok {
            doc.momentum = Some(MomentumDecl::Auto("auto".into()));
        } else {
            doc.fields.clear();
            doc.action = None;
        }
    }
    Ok(doc)
}

fn lcs_expectations(prefix: &str, prov: Provenance, what: &str) -> Vec<super::Expectation> {
    ["closed", "lcs", "potential", "nondegenerate"]
        .iter()
        .map(|k| expect(&format!("{prefix}.lcs.{k}"), Expected::Pass, prov, &format!("{what}: {k}")))
        .collect()
}

/// A cotangent example for a custom closed `α` on `ℝᵐ`.
pub fn cotangent_with(m: usize, alpha: &[&str]) -> Result<ExampleManifest> {
    let doc = cotangent_document(m, alpha)?;
    let rotation = doc.momentum.is_some();
    let mut expected = lcs_expectations("custom", Provenance::Literature, "d_{π*α} λ is LCS");
    if rotation {
        expected.extend(rotation_expectations("custom"));
    }
    let mut objects = Objects::default();
    objects.declarations.insert("custom".into(), doc.to_json());
    Ok(ExampleManifest::new(
        "cotangent-custom",
        format!("T*ℝ^{m} with α = ({})", alpha.join(", ")),
        objects,
        expected,
        move |sampling, rows| {
            rows.section("custom", |rows| structure_rows("custom", &doc, sampling, rows));
        },
    ))
}

fn rotation_expectations(prefix: &str) -> Vec<super::Expectation> {
    use Expected::*;
    use Provenance::*;
    vec![
        expect(&format!("{prefix}.rotation.lee"), Pass, Derived, "θ vanishes on the lifted rotation"),
        expect(&format!("{prefix}.rotation.hamiltonian"), Pass, Derived, "the lifted rotation is twisted Hamiltonian with μ = −λ(ρ̃)"),
        expect(&format!("{prefix}.rotation.momentum"), Pass, Derived, "μ = q₂p₁ − q₁p₂"),
        expect(&format!("{prefix}.rotation.fixed_point"), Pass, Derived, "ρ̃ and μ vanish at the origin"),
    ]
}

/// The three standard cotangent examples.
pub fn cotangent() -> Result<ExampleManifest> {
    let docs = vec![
        ("flat", cotangent_document(2, &["0", "0"])?),
        ("circle", cotangent_document(1, &["0.5"])?),
        ("rotation", cotangent_document(2, &["2*q1", "2*q2"])?),
    ];
    let mut expected = lcs_expectations("flat", Provenance::Trivial, "λ with α = 0");
    expected.push(expect("flat.canonical", Expected::Pass, Provenance::Trivial, "α = 0 gives ω = dλ"));
    expected.extend(lcs_expectations("circle", Provenance::Derived, "m = 1, α = 0.5 dq"));
    expected.push(expect("circle.omega", Expected::Pass, Provenance::Derived, "d_α(p dq) = dp ∧ dq"));
    expected.extend(lcs_expectations("rotation", Provenance::Literature, "m = 2, α = d|q|²"));
    expected.extend(rotation_expectations("rotation"));
    let mut objects = Objects::default();
    for (n, d) in &docs {
        objects.declarations.insert(n.to_string(), d.to_json());
    }
    Ok(ExampleManifest::new(
        "cotangent",
        "cotangent bundles with Lee form π*α",
        objects,
        expected,
        move |sampling, rows| {
            for (n, d) in &docs {
                rows.section(n, |rows| structure_rows(n, d, sampling, rows));
            }
        },
    ))
}

fn structure_rows(prefix: &str, doc: &Document, sampling: &Sampling, rows: &mut Rows) -> Result<()> {
    let tol = sampling.tol;
    let l = doc.load(sampling)?;
    let chart = l.chart.clone();
    let s = l.lcs.clone().expect("declared");
    let pts = chart.sample(sampling.points, sampling.seed)?;
    let what = format!("{prefix} cotangent structure");
    rows.extend(verify_lcs_at(&s, &pts, tol)?.checks(&format!("{prefix}.lcs"), &what, Provenance::Derived));
    let m = chart.dim() / 2;
    // Hand expansions of ω.
    match prefix {
        "flat" => {
            let dl = l.forms["lambda"].d();
            let r = Measurement::sweep(&pts, |p| pointwise_residual(s.omega(), &dl, p))?;
            rows.measured("flat.canonical", &r, tol);
        }
        "circle" => {
            let want = DifferentialForm::dx(&chart, 1).wedge(&DifferentialForm::dx(&chart, 0))?;
            let r = Measurement::sweep(&pts, |p| pointwise_residual(s.omega(), &want, p))?;
            rows.measured("circle.omega", &r, tol);
        }
        _ => {}
    }
    if let (Some(act), Some(mu)) = (&l.action, &l.momentum) {
        let rho = act.field(0);
        let v = lee_homomorphism(s.lee(), rho, &pts, 1e-9)?;
        let mut lm = Measurement::single(v.spread.max(v.value.abs()));
        lm.points = v.points;
        rows.measured(&format!("{prefix}.rotation.lee"), &lm, 1e-9);
        let r = verify_twisted_hamiltonian(&s, act, mu, &pts, tol)?;
        let mut row = CheckResult::from_measurement(&format!("{prefix}.rotation.hamiltonian"), "", Provenance::Derived, &r.worst(), tol);
        row.verdict = r.verdict();
        rows.push(row);
        let formula = DifferentialForm::scalar(&chart, chart.parse("q2*p1 - q1*p2")?);
        let r = Measurement::sweep(&pts, |p| pointwise_residual(mu.component(0), &formula, p))?;
        rows.measured(&format!("{prefix}.rotation.momentum"), &r, tol);
        let origin = vec![0.0; 2 * m];
        let at = rho.at(&origin)?;
        let size = at.iter().fold(mu.component(0).value(&origin)?.abs(), |a, x| a.max(x.abs()));
        rows.value(&format!("{prefix}.rotation.fixed_point"), size, 0.0, 1e-14);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_closed_alpha() {
        let e = cotangent_with(2, &["q2", "-q1"]).unwrap_err();
        assert!(matches!(e, Error::InvalidInput(_)), "{e}");
        assert!(matches!(cotangent_with(1, &["p1"]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn non_invariant_alpha_drops_the_lift() {
        let d = cotangent_document(2, &["1", "0"]).unwrap();
        assert!(d.action.is_none());
    }
}
