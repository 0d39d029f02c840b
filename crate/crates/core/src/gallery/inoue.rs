//! The Inoue surface `S⁺` on its cover `ℍ × ℂ`.

use std::collections::BTreeMap;

use crate::actions::{automorphic_constants, deck_homothety, lee_homomorphism, verify_twisted_hamiltonian, DeckElement, MomentumMap};
use crate::decl::{ActionDecl, ChartDecl, Document, Domain, ElementDecl, FormDecl, LcsDecl, MomentumDecl};
use crate::error::{Error, Result};
use crate::form::{pointwise_residual, DifferentialForm};
use crate::lcs::{conformal_rescale, lee_recovery, nondegeneracy, pfaffian, solve_lee_form, verify_lcs_at};
use crate::report::{CheckResult, Measurement, Provenance, Sampling};

use super::{expect, ExampleManifest, Expected, Objects, Rows};

/// Parameters of the deck group: `g₀(w, z) = (αw, z + t)`,
/// `gᵢ(w, z) = (w + aᵢ, z + bᵢw + cᵢ)` and `g₃(w, z) = (w, z + s)`.
#[derive(Clone, Debug, PartialEq)]
pub struct InoueParams {
    pub alpha: f64,
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub c: [f64; 2],
    pub t: f64,
    pub s: f64,
}

impl Default for InoueParams {
    /// `N = [[2, 1], [1, 1]]` with eigenvalue `α = (3 + √5)/2`, eigenvector
    /// `a = (1, α − 2)` and `b = (2 − α, 1)`.
    fn default() -> Self {
        let alpha = (3.0 + 5f64.sqrt()) / 2.0;
        let a = [1.0, alpha - 2.0];
        let b = [2.0 - alpha, 1.0];
        InoueParams { alpha, a, b, c: [0.0, 0.0], t: 0.5, s: b[0] * a[1] - b[1] * a[0] }
    }
}

impl InoueParams {
    fn validate(&self) -> Result<()> {
        let all = [self.alpha, self.a[0], self.a[1], self.b[0], self.b[1], self.c[0], self.c[1], self.t, self.s];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("parameters must be finite".into()));
        }
        if self.alpha <= 1.0 {
            return Err(Error::InvalidInput(format!("alpha = {} must exceed 1", self.alpha)));
        }
        Ok(())
    }
}

fn coeffs(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
    pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

/// `ω̃` and `θ = dw₂/w₂` in real coordinates `w = w₁ + i w₂`, `z = z₁ + i z₂`,
/// with `ρ = ∂z₁` and the four deck generators as action elements.
pub fn inoue_document(p: &InoueParams) -> Result<Document> {
    p.validate()?;
    let mut forms = BTreeMap::new();
    forms.insert(
        "omega".to_string(),
        FormDecl {
            degree: 2,
            coeffs: coeffs(&[
                ("w1,w2", "-2*(1 + z2^2)/w2^2"),
                ("w1,z2", "2*z2/w2"),
                ("w2,z1", "-2*z2/w2"),
                ("z1,z2", "-2"),
            ]),
        },
    );
    forms.insert("theta".to_string(), FormDecl { degree: 1, coeffs: coeffs(&[("w2", "1/w2")]) });
    forms.insert("h".to_string(), FormDecl { degree: 0, coeffs: coeffs(&[("", "-2*z2/w2")]) });
    let el = |m: [&str; 4]| ElementDecl { map: m.iter().map(|s| s.to_string()).collect(), valid: vec![] };
    let elements = BTreeMap::from([
        ("g0".to_string(), el(["alpha*w1", "alpha*w2", "z1 + t", "z2"])),
        ("g1".to_string(), el(["w1 + a1", "w2", "z1 + b1*w1 + c1", "z2 + b1*w2"])),
        ("g2".to_string(), el(["w1 + a2", "w2", "z1 + b2*w1 + c2", "z2 + b2*w2"])),
        ("g3".to_string(), el(["w1", "w2", "z1 + s", "z2"])),
    ]);
    let params = BTreeMap::from([
        ("alpha".to_string(), p.alpha),
        ("a1".to_string(), p.a[0]),
        ("a2".to_string(), p.a[1]),
        ("b1".to_string(), p.b[0]),
        ("b2".to_string(), p.b[1]),
        ("c1".to_string(), p.c[0]),
        ("c2".to_string(), p.c[1]),
        ("t".to_string(), p.t),
        ("s".to_string(), p.s),
    ]);
    Ok(Document {
        params,
        chart: ChartDecl {
            name: "inoue".into(),
            coords: ["w1", "w2", "z1", "z2"].map(String::from).to_vec(),
            domain: Domain::One("w2".into()),
            sample_box: Some(vec![[-1.0, 1.0], [0.5, 3.0], [-1.0, 1.0], [-1.0, 1.0]]),
        },
        forms,
        fields: BTreeMap::from([("rho".to_string(), ["0", "0", "1", "0"].map(String::from).to_vec())]),
        lcs: Some(LcsDecl { omega: Some("omega".into()), lee: "theta".into(), potential: None }),
        action: Some(ActionDecl { dim: 1, rho: vec!["rho".into()], structure_constants: vec![], elements }),
        momentum: Some(MomentumDecl::Components(vec!["h".into()])),
        slice: None,
    })
}

fn expectations() -> Vec<super::Expectation> {
    use Expected::*;
    use Provenance::*;
    vec![
        expect("lcs.closed", Pass, Literature, "the Lee form dw₂/w₂ is closed"),
        expect("lcs.lcs", Pass, Literature, "dω̃ = (dw₂/w₂) ∧ ω̃"),
        expect("lcs.nondegenerate", Pass, Literature, "ω̃ is nondegenerate"),
        expect("lcs.at_base_point", Pass, Literature, "(θ ∧ ω̃)(∂w₂, ∂z₁, ∂z₂) = dω̃(∂w₂, ∂z₁, ∂z₂) at (0, 1, 0, 0)"),
        expect("lee_recovery", Pass, Literature, "the Lee form is recovered from ω̃ alone"),
        expect("lee_recovery.base_point", Pass, Literature, "the recovered Lee covector at (0, 1, 0, 0) is (0, 1, 0, 0)"),
        expect("det", Pass, Derived, "det ω̃ at (0, 1, 0, 0) is 16"),
        expect("pfaffian", Pass, Derived, "the Pfaffian of ω̃ at (0, 1, 0, 0) is 4"),
        expect("lee.rho", Pass, Literature, "θ(∂z₁) = 0"),
        expect("cover.lee", Pass, Literature, "rescaling by e^{−log w₂} leaves the closed form (1/w₂)ω̃ with zero Lee form"),
        expect("cover.closed", Pass, Literature, "(1/w₂)ω̃ is closed"),
        expect("hamiltonian", Pass, Literature, "i_{∂z₁}((1/w₂)ω̃) = d(−2z₂/w₂)"),
        expect("twisted_candidate", Fail, Derived, "−2z₂/w₂ is not a twisted Hamiltonian for ∂z₁ with respect to (ω̃, dw₂/w₂)"),
        expect("deck.g0", Pass, Derived, "g₀ scales (1/w₂)ω̃ by 1/α"),
        expect("deck.g1", Pass, Derived, "g₁ preserves (1/w₂)ω̃"),
        expect("deck.g2", Pass, Derived, "g₂ preserves (1/w₂)ω̃"),
        expect("deck.g3", Pass, Derived, "g₃ preserves (1/w₂)ω̃"),
        expect("deck.g2.lee", Pass, Derived, "g₂ pulls dw₂/w₂ back to itself"),
        expect("deck.composition", Pass, Derived, "c(g₀∘g₂) = c(g₀) c(g₂)"),
        expect("automorphic.g2.obstruction", Pass, Literature, "−2z₂/w₂ is not preserved by g₂"),
        expect("automorphic.g2.a", Pass, Derived, "a(g₂) = −2b₂"),
        expect("automorphic.g3", Record, Literature, "−2z₂/w₂ under g₃"),
        expect("automorphic.cocycle", Pass, Derived, "a(g₀∘g₂) = c(g₀) a(g₂) + a(g₀)"),
    ]
}

pub fn inoue(p: &InoueParams) -> Result<ExampleManifest> {
    let doc = inoue_document(p)?;
    let name = if *p == InoueParams::default() { "inoue".to_string() } else { "inoue-custom".to_string() };
    let mut objects = Objects::default();
    objects.declarations.insert("inoue".into(), doc.to_json());
    let params = p.clone();
    Ok(ExampleManifest::new(
        name,
        format!("Inoue surface S⁺ with α = {:.6}, Lee form dw₂/w₂", p.alpha),
        objects,
        expectations(),
        move |sampling, rows| suite(&params, &doc, sampling, rows),
    ))
}

const BASE_POINT: [f64; 4] = [0.0, 1.0, 0.0, 0.0];

fn suite(p: &InoueParams, doc: &Document, sampling: &Sampling, rows: &mut Rows) {
    let tol = sampling.tol;
    let loaded = match doc.load(sampling) {
        Ok(l) => l,
        Err(e) => return rows.section("", |_| Err(e)),
    };
    let chart = loaded.chart.clone();
    let s = loaded.lcs.clone().expect("declared");
    let act = loaded.action.clone().expect("declared");
    let h = loaded.forms["h"].clone();
    let pts = match chart.sample(sampling.points, sampling.seed) {
        Ok(p) => p,
        Err(e) => return rows.section("", |_| Err(e)),
    };
    rows.section("lcs", |rows| {
        rows.extend(verify_lcs_at(&s, &pts, tol)?.checks("lcs", "Inoue structure", Provenance::Literature));
        let lhs = s.lee().wedge(s.omega())?.component(&BASE_POINT, &[1, 2, 3])?;
        let rhs = s.omega().d().component(&BASE_POINT, &[1, 2, 3])?;
        rows.value("lcs.at_base_point", lhs, rhs, 1e-10);
        Ok(())
    });
    rows.section("lee_recovery", |rows| {
        rows.measured("lee_recovery", &lee_recovery(&s, &pts)?, 1e-7);
        let sol = solve_lee_form(s.omega(), &BASE_POINT)?;
        let err = sol.theta.iter().zip(BASE_POINT).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
        rows.value("lee_recovery.base_point", err, 0.0, 1e-10);
        Ok(())
    });
    rows.section("det", |rows| {
        rows.value("det", nondegeneracy(s.omega(), &BASE_POINT)?.det, 16.0, 1e-10);
        Ok(())
    });
    rows.section("pfaffian", |rows| {
        rows.value("pfaffian", pfaffian(s.omega(), &BASE_POINT)?, 4.0, 1e-10);
        Ok(())
    });
    rows.section("lee.rho", |rows| {
        let v = lee_homomorphism(s.lee(), act.field(0), &pts, 1e-9)?;
        let mut m = Measurement::single(v.spread.max(v.value.abs()));
        m.points = v.points;
        rows.measured("lee.rho", &m, 1e-9);
        Ok(())
    });
    let f = DifferentialForm::scalar(&chart, -chart.var("w2").ln());
    let cover = match conformal_rescale(&s, &f) {
        Ok(c) => c,
        Err(e) => return rows.section("cover", |_| Err(e)),
    };
    rows.section("cover", |rows| {
        let m = Measurement::sweep(&pts, |q| {
            let c = cover.lee().coefficients(q)?;
            Ok((c.iter().fold(0.0_f64, |m, x| m.max(x.abs())), 0.0))
        })?;
        rows.measured("cover.lee", &m, 1e-10);
        let m = Measurement::sweep(&pts, |q| Ok((crate::form::vanishing_residual(&cover.omega().d(), q)?, 0.0)))?;
        rows.measured("cover.closed", &m, tol);
        Ok(())
    });
    let mu = match MomentumMap::new(vec![h.clone()]) {
        Ok(m) => m,
        Err(e) => return rows.section("", |_| Err(e)),
    };
    rows.section("hamiltonian", |rows| {
        let r = verify_twisted_hamiltonian(&cover, &act, &mu, &pts, 1e-9)?;
        let mut row = CheckResult::from_measurement("hamiltonian", "", Provenance::Literature, &r.worst(), 1e-9);
        row.verdict = r.verdict();
        rows.push(row);
        let r = verify_twisted_hamiltonian(&s, &act, &mu, &pts, tol)?;
        let mut row = CheckResult::from_measurement("twisted_candidate", "", Provenance::Derived, &r.worst(), tol);
        row.verdict = r.verdict();
        rows.push(row);
        Ok(())
    });
    rows.section("deck", |rows| {
        let omega = cover.omega();
        let mut deck: BTreeMap<&str, DeckElement> = BTreeMap::new();
        for (name, map) in act.elements() {
            let mut g = deck_homothety(map, omega, &pts, tol)?;
            g.name = name.clone();
            deck.insert(name.as_str(), g);
        }
        rows.value("deck.g0", deck["g0"].factor, 1.0 / p.alpha, 1e-8);
        for g in ["g1", "g2", "g3"] {
            rows.value(&format!("deck.{g}"), deck[g].factor, 1.0, 1e-8);
        }
        let lee = s.lee().pullback(&deck["g2"].map)?;
        let m = Measurement::sweep(&pts, |q| pointwise_residual(&lee, s.lee(), q))?;
        rows.measured("deck.g2.lee", &m, tol);
        let g02 = deck["g0"].compose(&deck["g2"], omega, &pts, tol)?;
        rows.value("deck.composition", g02.factor, deck["g0"].factor * deck["g2"].factor, 1e-8);

        let list = [deck["g0"].clone(), deck["g2"].clone(), deck["g3"].clone(), g02];
        let rep = automorphic_constants(&list, &h, &pts, tol)?;
        let g2 = rep.entry("g2").expect("listed");
        let blocked = rep.obstructions().iter().any(|e| e.name == "g2");
        rows.push(
            CheckResult::boolean("automorphic.g2.obstruction", "", Provenance::Literature, blocked, g2.points).with_note(
                format!("c = {:.3e}, a = {:.6}, spread of a = {:.3e}", g2.c, g2.a, g2.a_spread),
            ),
        );
        rows.value("automorphic.g2.a", g2.a, -2.0 * p.b[1], 1e-8);
        let g3 = rep.entry("g3").expect("listed");
        let g3_blocked = rep.obstructions().iter().any(|e| e.name == "g3");
        rows.push(
            CheckResult::boolean("automorphic.g3", "", Provenance::Literature, g3_blocked, g3.points)
                .with_note(format!("obstruction {g3_blocked}: c = {:.6}, a = {:.3e}", g3.c, g3.a)),
        );
        let g0 = rep.entry("g0").expect("listed");
        let both = rep.entry("g0∘g2").expect("listed");
        rows.value("automorphic.cocycle", both.a, g0.c * g2.a + g0.a, 1e-8);
        Ok(())
    });
}

/// The spread of `a(g₂)` for `h = −2z₂/w₂`, sampled in the default chart.
pub fn g2_spread(p: &InoueParams, sampling: &Sampling) -> Result<f64> {
    let doc = inoue_document(p)?;
    let l = doc.load(sampling)?;
    let s = l.lcs.expect("declared");
    let f = DifferentialForm::scalar(&l.chart, -l.chart.var("w2").ln());
    let cover = conformal_rescale(&s, &f)?;
    let pts = l.chart.sample(sampling.points, sampling.seed)?;
    let map = &l.action.as_ref().expect("declared").elements().iter().find(|(n, _)| n == "g2").expect("declared").1;
    let mut g = deck_homothety(map, cover.omega(), &pts, sampling.tol)?;
    g.name = "g2".into();
    let rep = automorphic_constants(&[g], &l.forms["h"], &pts, sampling.tol)?;
    Ok(rep.entries[0].a_spread)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_satisfies_the_matrix_relation() {
        // (a, b) are eigenvectors of N = [[2, 1], [1, 1]] for α and 1/α.
        let p = InoueParams::default();
        assert!((2.0 * p.a[0] + p.a[1] - p.alpha * p.a[0]).abs() < 1e-12);
        assert!((p.a[0] + p.a[1] - p.alpha * p.a[1]).abs() < 1e-12);
        assert!((2.0 * p.b[0] + p.b[1] - p.b[0] / p.alpha).abs() < 1e-12);
        assert!((p.b[0] + p.b[1] - p.b[1] / p.alpha).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_alpha() {
        let p = InoueParams { alpha: 0.5, ..InoueParams::default() };
        assert!(matches!(inoue(&p), Err(Error::InvalidInput(_))));
    }
}
