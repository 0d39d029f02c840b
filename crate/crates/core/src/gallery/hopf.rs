//! Weighted Hopf manifolds `S¹ × S^{2n−1}` in graph charts.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::actions::{
    automorphic_constants, bracket_hamiltonian_check, deck_homothety, lee_homomorphism, verify_twisted_hamiltonian,
    ActionSpec, MomentumMap,
};
use crate::chart::{Chart, SmoothMap};
use crate::decl::{ActionDecl, ChartDecl, Document, Domain, ElementDecl, FormDecl, LcsDecl, Loaded, MomentumDecl};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::{pointwise_residual, DifferentialForm};
use crate::lcs::{verify_lcs_at, LcsStructure};
use crate::report::{Measurement, Provenance, Sampling};

use super::{expect, weights_tag, ExampleManifest, Expected, Objects, Rows};

/// Angle of the rotations used as finite elements.
pub(crate) const ROTATION_ANGLE: f64 = 0.25;

/// The chart keeps `Σ others² < 0.95`, away from the equator of the graph.
pub(crate) const GRAPH_MARGIN: f64 = 0.95;

#[derive(Clone, Debug, PartialEq)]
pub struct HopfParams {
    pub n: usize,
    pub weights: Vec<f64>,
    /// Index among `x1, y1, …, xn, yn` of the coordinate solved as
    /// `+sqrt(1 − Σ others²)`.
    pub solved: usize,
}

impl Default for HopfParams {
    fn default() -> Self {
        HopfParams { n: 2, weights: vec![1.0, 1.0], solved: 1 }
    }
}

pub(crate) fn z_name(k: usize) -> String {
    format!("{}{}", if k.is_multiple_of(2) { "x" } else { "y" }, k / 2 + 1)
}

/// `"y1"` to its index among the sphere coordinates.
pub(crate) fn ambient_index(name: &str, n: usize) -> Result<usize> {
    (0..2 * n)
        .find(|&k| z_name(k) == name)
        .ok_or_else(|| Error::InvalidInput(format!("`{name}` is not one of x1, y1, …, x{n}, y{n}")))
}

impl HopfParams {
    pub(crate) fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput("n must be at least 2".into()));
        }
        if self.weights.len() != self.n {
            return Err(Error::InvalidInput(format!("{} weights for n = {}", self.weights.len(), self.n)));
        }
        if self.weights.iter().any(|a| !(a.is_finite() && *a > 0.0)) {
            return Err(Error::InvalidInput("weights must be positive".into()));
        }
        if self.weights.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput("weights must be nondecreasing, a₁ ≤ … ≤ aₙ".into()));
        }
        if self.solved >= 2 * self.n {
            return Err(Error::InvalidInput(format!("solved coordinate {} out of range", self.solved)));
        }
        Ok(())
    }

    pub(crate) fn others(&self) -> Vec<usize> {
        (0..2 * self.n).filter(|&k| k != self.solved).collect()
    }

    pub(crate) fn solved_src(&self) -> String {
        let sq: Vec<String> = self.others().iter().map(|&k| format!("{}^2", z_name(k))).collect();
        format!("sqrt(1 - ({}))", sq.join(" + "))
    }

    /// The ambient coordinate `k` in chart coordinates.
    pub(crate) fn z(&self, k: usize) -> String {
        if k == self.solved {
            format!("({})", self.solved_src())
        } else {
            z_name(k)
        }
    }

    pub(crate) fn weighted_norm(&self) -> String {
        let terms: Vec<String> = (0..self.n)
            .map(|j| format!("a{}*({}^2 + {}^2)", j + 1, self.z(2 * j), self.z(2 * j + 1)))
            .collect();
        format!("({})", terms.join(" + "))
    }

    pub(crate) fn chart_name(&self) -> String {
        format!("hopf{}-{}", self.n, z_name(self.solved))
    }
}

/// The declaration of `hopf(n, weights)` in the chart solving `solved`.
///
/// In ambient coordinates `η₀ = Σ yⱼ dxⱼ − xⱼ dyⱼ`, `η_a = η₀ / Σ aⱼ|zⱼ|²`,
/// `θ = dt` and `ω = d_θ η_a`. On the graph chart the solved coordinate `s`
/// has `ds = −Σ (o / s) do` over the other coordinates `o`.
pub fn hopf_document(p: &HopfParams) -> Result<Document> {
    p.validate()?;
    let others = p.others();
    let q = p.weighted_norm();
    let amb = |k: usize| -> String {
        if k.is_multiple_of(2) {
            format!("{}/{q}", p.z(k + 1))
        } else {
            format!("-{}/{q}", p.z(k - 1))
        }
    };
    let s = p.solved_src();
    let mut eta = BTreeMap::new();
    for &k in &others {
        eta.insert(z_name(k), format!("{} + ({})*(-{}/({s}))", amb(k), amb(p.solved), z_name(k)));
    }
    let mut forms = BTreeMap::new();
    forms.insert("eta".to_string(), FormDecl { degree: 1, coeffs: eta });
    forms.insert(
        "theta".to_string(),
        FormDecl { degree: 1, coeffs: BTreeMap::from([("t".to_string(), "1".to_string())]) },
    );
    let mut fields = BTreeMap::new();
    let mut elements = BTreeMap::new();
    let (c, sn) = (ROTATION_ANGLE.cos(), ROTATION_ANGLE.sin());
    for j in 0..p.n {
        let (xj, yj) = (2 * j, 2 * j + 1);
        let mut comps = vec!["0".to_string()];
        let mut map = vec!["t".to_string()];
        for &k in &others {
            comps.push(if k == xj {
                format!("-{}", p.z(yj))
            } else if k == yj {
                p.z(xj)
            } else {
                "0".to_string()
            });
            map.push(if k == xj {
                format!("{c:?}*{} - {sn:?}*{}", p.z(xj), p.z(yj))
            } else if k == yj {
                format!("{sn:?}*{} + {c:?}*{}", p.z(xj), p.z(yj))
            } else {
                z_name(k)
            });
        }
        let mut valid = Vec::new();
        if p.solved == xj {
            valid.push(format!("{c:?}*{} - {sn:?}*{}", p.z(xj), p.z(yj)));
        } else if p.solved == yj {
            valid.push(format!("{sn:?}*{} + {c:?}*{}", p.z(xj), p.z(yj)));
        }
        fields.insert(format!("rho{}", j + 1), comps);
        elements.insert(format!("r{}", j + 1), ElementDecl { map, valid });
    }
    let mut coords = vec!["t".to_string()];
    coords.extend(others.iter().map(|&k| z_name(k)));
    let sq: Vec<String> = others.iter().map(|&k| format!("{}^2", z_name(k))).collect();
    Ok(Document {
        params: (0..p.n).map(|j| (format!("a{}", j + 1), p.weights[j])).collect(),
        chart: ChartDecl {
            name: p.chart_name(),
            domain: Domain::One(format!("{GRAPH_MARGIN:?} - ({})", sq.join(" + "))),
            sample_box: Some(vec![[-1.0, 1.0]; coords.len()]),
            coords,
        },
        forms,
        fields,
        lcs: Some(LcsDecl { omega: None, lee: "theta".into(), potential: Some("eta".into()) }),
        action: Some(ActionDecl {
            dim: p.n,
            rho: (1..=p.n).map(|j| format!("rho{j}")).collect(),
            structure_constants: vec![],
            elements,
        }),
        momentum: Some(MomentumDecl::Auto("auto".into())),
        slice: None,
    })
}

/// A loaded Hopf example.
#[derive(Clone, Debug)]
pub struct HopfModel {
    pub params: HopfParams,
    pub document: Document,
    pub chart: Arc<Chart>,
    pub lcs: LcsStructure,
    pub action: ActionSpec,
    pub momentum: MomentumMap,
}

impl HopfModel {
    /// `|zⱼ|² / Σ aᵢ|zᵢ|²`, written independently of the potential.
    pub fn momentum_formula(&self, j: usize) -> Result<DifferentialForm> {
        let p = &self.params;
        let src = format!("({}^2 + {}^2)/{}", p.z(2 * j), p.z(2 * j + 1), p.weighted_norm());
        Ok(DifferentialForm::scalar(&self.chart, self.chart.parse_with(&src, &self.document.params)?))
    }

    /// Chart coordinates of the ambient point `(t, z)`, if it lies in the chart.
    pub fn chart_point(&self, t: f64, z: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![t];
        out.extend(self.params.others().iter().map(|&k| z[k]));
        (z[self.params.solved] > 0.0 && self.chart.contains(&out)).then_some(out)
    }
}

pub fn hopf_model(p: &HopfParams, sampling: &Sampling) -> Result<HopfModel> {
    let document = hopf_document(p)?;
    let Loaded { chart, lcs, action, momentum, .. } = document.load(sampling)?;
    Ok(HopfModel {
        params: p.clone(),
        document,
        chart,
        lcs: lcs.expect("declared"),
        action: action.expect("declared"),
        momentum: momentum.expect("declared"),
    })
}

fn expectations(p: &HopfParams) -> Vec<super::Expectation> {
    use Expected::*;
    use Provenance::*;
    let mut out = vec![
        expect("lcs.closed", Pass, Trivial, "θ = dt is closed"),
        expect("lcs.lcs", Pass, Literature, "ω = d_θ η_a satisfies dω = θ ∧ ω"),
        expect("lcs.potential", Pass, Trivial, "ω = d_θ η_a"),
        expect("lcs.nondegenerate", Pass, Literature, "ω is nondegenerate: η_a deforms the standard contact form"),
        expect("hamiltonian", Pass, Literature, "the torus action is twisted Hamiltonian with μ_j = −η_a(ρ_j)"),
        expect("bracket_relation", Pass, Derived, "[ρ_a, ρ_b] = 0 for the torus"),
        expect("bracket_hamiltonian", Pass, Derived, "i_[ρ1,ρ2] ω + d_θ(ω(ρ1, ρ2)) = 0"),
        expect("momentum.probe_z10", Pass, Derived, "μ₁ at z = (1, 0) equals 1/a₁"),
        expect("momentum.probe_z01", Pass, Derived, "μ₁ at z = (0, 1) equals 0"),
        expect("deck.factor", Pass, Derived, "t ↦ t + 1 scales the cover form e^{−t}ω by 1/e"),
        expect("deck.composition", Pass, Derived, "factors multiply under composition"),
        expect("deck.automorphic", Pass, Trivial, "e^{−t}μ₁ is automorphic with a = 0"),
    ];
    for j in 1..=p.n {
        out.push(expect(&format!("lee.rho{j}"), Pass, Literature, &format!("θ(ρ_{j}) = 0: the S¹-component of ρ_{j} vanishes")));
        out.push(expect(&format!("momentum.formula{j}"), Pass, Derived, &format!("μ_{j} = |z_{j}|² / Σ aᵢ|zᵢ|²")));
    }
    if p.n > 2 && p.solved < 2 {
        out.push(expect("restriction.contact", Pass, Literature, "the contact form of S^{2n−1} restricts to that of S³"));
        out.push(expect("restriction.lee", Pass, Trivial, "dt restricts to dt"));
    }
    out
}

/// The example `hopf(n, weights)`.
pub fn hopf(p: &HopfParams) -> Result<ExampleManifest> {
    let doc = hopf_document(p)?;
    let name = if *p == HopfParams::default() {
        "hopf".to_string()
    } else {
        format!("hopf-n{}-w{}", p.n, weights_tag(&p.weights))
    };
    let mut objects = Objects::default();
    objects.declarations.insert(p.chart_name(), doc.to_json());
    let params = p.clone();
    Ok(ExampleManifest::new(
        name,
        format!("S¹ × S^{} with weights {:?}, torus action by rotations", 2 * p.n - 1, p.weights),
        objects,
        expectations(p),
        move |sampling, rows| suite(&params, sampling, rows),
    ))
}

fn suite(p: &HopfParams, sampling: &Sampling, rows: &mut Rows) {
    let tol = sampling.tol;
    let model = match hopf_model(p, sampling) {
        Ok(m) => m,
        Err(e) => return rows.section("", |_| Err(e)),
    };
    let pts = match model.chart.sample(sampling.points, sampling.seed) {
        Ok(p) => p,
        Err(e) => return rows.section("", |_| Err(e)),
    };
    let s = &model.lcs;
    rows.section("lcs", |rows| {
        rows.extend(verify_lcs_at(s, &pts, tol)?.checks("lcs", "Hopf structure", Provenance::Literature));
        Ok(())
    });
    rows.section("lee", |rows| {
        for (j, rho) in model.action.fields().iter().enumerate() {
            let v = lee_homomorphism(s.lee(), rho, &pts, 1e-9)?;
            let mut m = Measurement::single(v.spread.max(v.value.abs()));
            m.points = v.points;
            rows.measured(&format!("lee.rho{}", j + 1), &m, 1e-9);
        }
        Ok(())
    });
    rows.section("hamiltonian", |rows| {
        let r = verify_twisted_hamiltonian(s, &model.action, &model.momentum, &pts, tol)?;
        let mut row = crate::report::CheckResult::from_measurement("hamiltonian", "", Provenance::Literature, &r.worst(), tol);
        row.verdict = r.verdict();
        rows.push(row);
        Ok(())
    });
    rows.section("bracket_relation", |rows| {
        rows.measured("bracket_relation", &model.action.bracket_relation(&pts)?, tol);
        Ok(())
    });
    rows.section("bracket_hamiltonian", |rows| {
        let r = bracket_hamiltonian_check(s, model.action.field(0), model.action.field(1), &pts)?;
        rows.measured("bracket_hamiltonian", &r.identity, tol);
        Ok(())
    });
    rows.section("momentum", |rows| {
        for j in 0..p.n {
            let f = model.momentum_formula(j)?;
            let mu = model.momentum.component(j);
            let m = Measurement::sweep(&pts, |q| pointwise_residual(mu, &f, q))?;
            rows.measured(&format!("momentum.formula{}", j + 1), &m, 1e-9);
        }
        // μ₁ where the default chart does not reach: z = (1, 0) needs a
        // chart solving x1, z = (0, 1) one solving x2.
        let mut z = vec![0.0; 2 * p.n];
        z[0] = 1.0;
        let side = hopf_model(&HopfParams { solved: 0, ..p.clone() }, sampling)?;
        let at = side.chart_point(0.0, &z).expect("z = (1, 0) is in the x1 chart");
        rows.value("momentum.probe_z10", side.momentum.component(0).value(&at)?, 1.0 / p.weights[0], 1e-9);
        let mut z = vec![0.0; 2 * p.n];
        z[2] = 1.0;
        let side = hopf_model(&HopfParams { solved: 2, ..p.clone() }, sampling)?;
        let at = side.chart_point(0.0, &z).expect("z = (0, 1) is in the x2 chart");
        rows.value("momentum.probe_z01", side.momentum.component(0).value(&at)?, 0.0, 1e-9);
        Ok(())
    });
    rows.section("deck", |rows| {
        let chart = &model.chart;
        let t = DifferentialForm::scalar(chart, -Expr::var(0));
        let cover = s.omega().times(&t.exp()?)?;
        let mut comps: Vec<Expr> = (0..chart.dim()).map(Expr::var).collect();
        comps[0] = Expr::var(0) + 1.0;
        let gamma = SmoothMap::new(chart, chart, comps)?;
        let mut g = deck_homothety(&gamma, &cover, &pts, tol)?;
        g.name = "shift".into();
        rows.value("deck.factor", g.factor, (-1.0f64).exp(), 1e-8);
        let gg = g.compose(&g, &cover, &pts, tol)?;
        rows.value("deck.composition", gg.factor, g.factor * g.factor, 1e-8);
        let f = model.momentum.component(0).times(&t.exp()?)?;
        let rep = automorphic_constants(&[g], &f, &pts, tol)?;
        let e = &rep.entries[0];
        let mut m = Measurement::single(e.a.abs().max(e.a_spread));
        m.points = e.points;
        rows.measured("deck.automorphic", &m, tol);
        Ok(())
    });
    if p.n > 2 && p.solved < 2 {
        rows.section("restriction", |rows| restriction(&model, sampling, rows));
    }
}

/// Pulls `η_a` and `θ` back along `S¹ × S³ → S¹ × S^{2n−1}`,
/// `(t, z₁, z₂) ↦ (t, z₁, z₂, 0, …)`.
fn restriction(big: &HopfModel, sampling: &Sampling, rows: &mut Rows) -> Result<()> {
    let p = &big.params;
    let small_p = HopfParams { n: 2, weights: p.weights[..2].to_vec(), solved: p.solved };
    let small = hopf_model(&small_p, sampling)?;
    let (src, dst) = (&small.chart, &big.chart);
    let comps: Vec<Expr> = dst
        .coords()
        .iter()
        .map(|c| src.coord_index(c).map_or(Expr::constant(0.0), Expr::var))
        .collect();
    let inclusion = SmoothMap::new(src, dst, comps)?;
    let pts = src.sample(sampling.points, sampling.seed)?;
    let eta_big = big.lcs.potential().expect("exact");
    let eta_small = small.lcs.potential().expect("exact");
    let pulled = eta_big.pullback(&inclusion)?;
    let m = Measurement::sweep(&pts, |q| pointwise_residual(&pulled, eta_small, q))?;
    rows.measured("restriction.contact", &m, 1e-8);
    let lee = big.lcs.lee().pullback(&inclusion)?;
    let m = Measurement::sweep(&pts, |q| pointwise_residual(&lee, small.lcs.lee(), q))?;
    rows.measured("restriction.lee", &m, 1e-8);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_weights() {
        for w in [vec![2.0, 1.0], vec![0.0, 1.0], vec![1.0]] {
            let p = HopfParams { weights: w, ..HopfParams::default() };
            assert!(matches!(hopf(&p), Err(Error::InvalidInput(_))));
        }
    }

    #[test]
    fn document_round_trips() {
        let d = hopf_document(&HopfParams::default()).unwrap();
        assert_eq!(Document::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn potential_matches_ambient_values() {
        // η₀ at z = (cos a, sin a, 0, 0)·… evaluated on ∂x1 in the y1 chart:
        // η(∂x1) = y1 + (−x1)(−x1/y1) = 1/y1 when |z1| = 1 and S = 1.
        let m = hopf_model(&HopfParams::default(), &Sampling::default().with_points(8)).unwrap();
        let (x1, y1) = (0.6_f64, 0.8_f64);
        let p = m.chart_point(0.0, &[x1, y1, 0.0, 0.0]).unwrap();
        let c = m.lcs.potential().unwrap().coefficients(&p).unwrap();
        assert!((c[1] - 1.0 / y1).abs() < 1e-14, "{c:?}");
    }
}
