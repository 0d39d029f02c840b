//! JSON declarations of charts, forms, structures, actions, slices,
//! couplings and complexes.
//!
//! A structure document looks like
//!
//! ```json
//! {
//!   "params": {"c": 0.5},
//!   "chart": {"name": "plane", "coords": ["q", "p"], "domain": "1 - q^2"},
//!   "forms": {
//!     "eta": {"degree": 1, "coeffs": {"q": "p"}},
//!     "theta": {"degree": 1, "coeffs": {"q": "c"}}
//!   },
//!   "lcs": {"lee": "theta", "potential": "eta"}
//! }
//! ```
//!
//! Coefficient keys list the form's indices, separated by commas, as
//! coordinate names or 0-based positions; `""` is the key of a function.
//! `omega` may be omitted when a potential is given, in which case
//! `ω = d_θ η`.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::actions::{momentum_from_potential, ActionSpec, MomentumMap, StructureConstants};
use crate::chart::{Chart, SmoothMap};
use crate::cohomology::TwistedComplex;
use crate::coupling::{build_coupling, CouplingChart, GaugeChart};
use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::form::{DifferentialForm, VectorField};
use crate::lcs::{exact_lcs, LcsStructure};
use crate::reduction::LevelSlice;
use crate::report::Sampling;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartDecl {
    pub name: String,
    pub coords: Vec<String>,
    /// Conditions `expr > 0`.
    #[serde(default, skip_serializing_if = "Domain::is_empty")]
    pub domain: Domain,
    /// `[lo, hi]` per coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<[f64; 2]>>,
}

/// One condition or a list of them.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Domain {
    #[default]
    None,
    One(String),
    Many(Vec<String>),
}

impl Domain {
    fn is_empty(&self) -> bool {
        matches!(self, Domain::None) || matches!(self, Domain::Many(v) if v.is_empty())
    }

    fn conditions(&self) -> Vec<&str> {
        match self {
            Domain::None => vec![],
            Domain::One(s) => vec![s.as_str()],
            Domain::Many(v) => v.iter().map(String::as_str).collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FormDecl {
    pub degree: usize,
    #[serde(default)]
    pub coeffs: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LcsDecl {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<String>,
    pub lee: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ElementDecl {
    pub map: Vec<String>,
    /// Extra conditions `expr > 0` on source points.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub valid: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ActionDecl {
    pub dim: usize,
    /// Field names from the document's `fields`, or `"0"`.
    pub rho: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub structure_constants: Vec<(usize, usize, usize, f64)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub elements: BTreeMap<String, ElementDecl>,
}

/// `"auto"` (from the potential) or one function per generator, each a
/// form name or an expression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MomentumDecl {
    Auto(String),
    Components(Vec<String>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SliceDecl {
    pub coords: Vec<String>,
    pub map: Vec<String>,
    /// Momentum components, `mu_1` for the first.
    pub level_of: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sample_box: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Domain::is_empty")]
    pub domain: Domain,
}

/// A structure document: one chart with its forms, and optionally an LCS
/// structure, an action with momentum map and a slice of the zero level.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Document {
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub params: BTreeMap<String, f64>,
    pub chart: ChartDecl,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub forms: BTreeMap<String, FormDecl>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fields: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lcs: Option<LcsDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<ActionDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub momentum: Option<MomentumDecl>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice: Option<SliceDecl>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaugeDecl {
    /// Names of 1-forms on the base document.
    #[serde(rename = "A")]
    pub a: Vec<String>,
}

/// A coupling configuration. The action and momentum live on the fiber.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingDoc {
    pub base: Document,
    pub gauge: GaugeDecl,
    pub fiber: Document,
    pub action: ActionDecl,
    pub momentum: MomentumDecl,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexDoc {
    pub vertices: usize,
    pub simplices: Vec<Vec<usize>>,
    /// `"u,v"` to the value on the edge `[u, v]`.
    #[serde(default)]
    pub theta: BTreeMap<String, f64>,
}

fn decl_err(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Declaration(format!("{path}: {msg}"))
}

fn parse_json<T: for<'de> Deserialize<'de>>(src: &str) -> Result<T> {
    serde_json::from_str(src).map_err(|e| {
        Error::Declaration(e.to_string())
    })
}

impl Document {
    pub fn from_json(src: &str) -> Result<Self> {
        parse_json(src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

impl CouplingDoc {
    pub fn from_json(src: &str) -> Result<Self> {
        parse_json(src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }
}

impl ComplexDoc {
    pub fn from_json(src: &str) -> Result<Self> {
        parse_json(src)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn from_complex(k: &TwistedComplex) -> Self {
        // Maximal simplices only; the loader closes downward.
        let mut all = Vec::new();
        for d in 0..=k.dim() {
            for s in k.simplices_of(d) {
                if !k.simplices_of(d + 1).iter().any(|t| s.iter().all(|v| t.contains(v))) {
                    all.push(s.clone());
                }
            }
        }
        let theta = k.theta_values().iter().map(|((u, v), t)| (format!("{u},{v}"), *t)).collect();
        ComplexDoc { vertices: k.vertex_count(), simplices: all, theta }
    }

    pub fn load(&self) -> Result<TwistedComplex> {
        let theta = parse_theta(&self.theta)?;
        TwistedComplex::new(self.vertices, &self.simplices, &theta)
    }
}

/// Parses `"u,v"` edge keys.
pub fn parse_theta(src: &BTreeMap<String, f64>) -> Result<BTreeMap<(usize, usize), f64>> {
    src.iter().map(|(k, v)| Ok((parse_edge(k)?, *v))).collect()
}

fn parse_edge(key: &str) -> Result<(usize, usize)> {
    let parts: Vec<&str> = key.split(',').map(str::trim).collect();
    let bad = || decl_err(&format!("theta[\"{key}\"]"), "edge keys look like \"0,1\"");
    if parts.len() != 2 {
        return Err(bad());
    }
    let u = parts[0].parse().map_err(|_| bad())?;
    let v = parts[1].parse().map_err(|_| bad())?;
    Ok((u, v))
}

/// Parses the CLI override `"0,1:0.693;1,2:0"`.
pub fn parse_theta_override(src: &str) -> Result<BTreeMap<(usize, usize), f64>> {
    let mut out = BTreeMap::new();
    for item in src.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (edge, val) = item
            .split_once(':')
            .ok_or_else(|| decl_err("--theta", format!("`{item}` is not of the form u,v:value")))?;
        let v: f64 = val
            .trim()
            .parse()
            .map_err(|_| decl_err("--theta", format!("`{val}` is not a number")))?;
        out.insert(parse_edge(edge)?, v);
    }
    Ok(out)
}

/// Objects built from a [`Document`].
#[derive(Clone, Debug)]
pub struct Loaded {
    pub chart: Arc<Chart>,
    pub forms: BTreeMap<String, DifferentialForm>,
    pub fields: BTreeMap<String, VectorField>,
    pub lcs: Option<LcsStructure>,
    pub action: Option<ActionSpec>,
    pub momentum: Option<MomentumMap>,
    pub slice: Option<LevelSlice>,
}

fn expr(chart: &Chart, path: &str, src: &str, params: &BTreeMap<String, f64>) -> Result<Expr> {
    chart.parse_with(src, params).map_err(|e| match e {
        Error::Parse(p) => decl_err(path, format!("column {}: {}", p.column, p.kind)),
        e => e,
    })
}

fn build_chart(c: &ChartDecl, params: &BTreeMap<String, f64>) -> Result<Chart> {
    if c.coords.is_empty() {
        return Err(decl_err("chart.coords", "a chart needs at least one coordinate"));
    }
    for (i, name) in c.coords.iter().enumerate() {
        if c.coords[..i].contains(name) {
            return Err(decl_err("chart.coords", format!("coordinate `{name}` repeats")));
        }
    }
    let refs: Vec<&str> = c.coords.iter().map(String::as_str).collect();
    let mut chart = Chart::new(&c.name, &refs);
    for (i, d) in c.domain.conditions().into_iter().enumerate() {
        let e = expr(&chart, &format!("chart.domain[{i}]"), d, params)?;
        chart = chart.with_domain(e);
    }
    if let Some(b) = &c.sample_box {
        if b.len() != c.coords.len() {
            return Err(decl_err("chart.sample_box", format!("needs {} ranges", c.coords.len())));
        }
        if let Some(r) = b.iter().find(|r| !(r[0] <= r[1])) {
            return Err(decl_err("chart.sample_box", format!("empty range {r:?}")));
        }
        chart = chart.with_sample_box(&b.iter().map(|r| (r[0], r[1])).collect::<Vec<_>>());
    }
    Ok(chart)
}

fn index_key(chart: &Chart, path: &str, key: &str, degree: usize) -> Result<Vec<usize>> {
    let parts: Vec<&str> = if key.trim().is_empty() { vec![] } else { key.split(',').map(str::trim).collect() };
    if parts.len() != degree {
        return Err(decl_err(path, format!("key `{key}` does not have {degree} indices")));
    }
    parts
        .into_iter()
        .map(|p| {
            chart
                .coord_index(p)
                .or_else(|| p.parse::<usize>().ok().filter(|&i| i < chart.dim()))
                .ok_or_else(|| decl_err(path, format!("`{p}` is neither a coordinate nor an index")))
        })
        .collect()
}

fn build_form(chart: &Arc<Chart>, name: &str, f: &FormDecl, params: &BTreeMap<String, f64>) -> Result<DifferentialForm> {
    let path = format!("forms.{name}");
    if f.degree > chart.dim() && !f.coeffs.is_empty() {
        return Err(decl_err(&path, format!("degree {} exceeds the chart dimension", f.degree)));
    }
    if f.degree > chart.dim() {
        return Ok(DifferentialForm::zero(chart, f.degree));
    }
    let mut terms = Vec::new();
    for (k, src) in &f.coeffs {
        let p = format!("{path}.coeffs[\"{k}\"]");
        let idx = index_key(chart, &p, k, f.degree)?;
        terms.push((idx, expr(chart, &p, src, params)?));
    }
    DifferentialForm::from_components(chart, f.degree, terms).map_err(|e| decl_err(&path, e))
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, path: &str, what: &str, name: &str) -> Result<&'a T> {
    map.get(name).ok_or_else(|| decl_err(path, format!("no {what} named `{name}`")))
}

/// Builds the action; field names resolve against `fields`.
pub fn build_action(
    chart: &Arc<Chart>,
    a: &ActionDecl,
    fields: &BTreeMap<String, VectorField>,
    params: &BTreeMap<String, f64>,
) -> Result<ActionSpec> {
    if a.rho.len() != a.dim {
        return Err(decl_err("action.rho", format!("{} fields for dimension {}", a.rho.len(), a.dim)));
    }
    let rho = a
        .rho
        .iter()
        .map(|n| {
            if n == "0" {
                Ok(VectorField::zero(chart))
            } else {
                lookup(fields, "action.rho", "field", n).cloned()
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let constants = StructureConstants::from_entries(a.dim, &a.structure_constants)
        .map_err(|e| decl_err("action.structure_constants", e))?;
    let mut act = ActionSpec::new(chart, rho, constants).map_err(|e| decl_err("action", e))?;
    for (name, el) in &a.elements {
        let path = format!("action.elements.{name}");
        let comps = el
            .map
            .iter()
            .enumerate()
            .map(|(i, s)| expr(chart, &format!("{path}.map[{i}]"), s, params))
            .collect::<Result<Vec<_>>>()?;
        let mut map = SmoothMap::new(chart, chart, comps).map_err(|e| decl_err(&path, e))?;
        for (i, v) in el.valid.iter().enumerate() {
            map = map.with_validity(expr(chart, &format!("{path}.valid[{i}]"), v, params)?);
        }
        act = act.with_element(name, map)?;
    }
    Ok(act)
}

fn build_momentum(
    chart: &Arc<Chart>,
    m: &MomentumDecl,
    lcs: Option<&LcsStructure>,
    act: &ActionSpec,
    forms: &BTreeMap<String, DifferentialForm>,
    params: &BTreeMap<String, f64>,
    sampling: &Sampling,
) -> Result<MomentumMap> {
    match m {
        MomentumDecl::Auto(s) if s == "auto" => {
            let s = lcs.ok_or_else(|| decl_err("momentum", "\"auto\" needs an lcs structure"))?;
            let pts = chart.sample(sampling.points, sampling.seed)?;
            Ok(momentum_from_potential(s, act, &pts, sampling.tol)?.0)
        }
        MomentumDecl::Auto(s) => Err(decl_err("momentum", format!("expected \"auto\" or a list, got \"{s}\""))),
        MomentumDecl::Components(v) => {
            if v.len() != act.dim() {
                return Err(decl_err("momentum", format!("{} components for {} generators", v.len(), act.dim())));
            }
            let comps = v
                .iter()
                .enumerate()
                .map(|(i, s)| match forms.get(s) {
                    Some(f) if f.degree() == 0 => Ok(f.clone()),
                    Some(_) => Err(decl_err(&format!("momentum[{i}]"), format!("form `{s}` is not a function"))),
                    None => Ok(DifferentialForm::scalar(chart, expr(chart, &format!("momentum[{i}]"), s, params)?)),
                })
                .collect::<Result<Vec<_>>>()?;
            MomentumMap::new(comps)
        }
    }
}

fn build_slice(target: &Arc<Chart>, s: &SliceDecl, mu_dim: usize, params: &BTreeMap<String, f64>) -> Result<LevelSlice> {
    let decl = ChartDecl {
        name: format!("{}-slice", target.name()),
        coords: s.coords.clone(),
        domain: s.domain.clone(),
        sample_box: s.sample_box.clone(),
    };
    let chart = build_chart(&decl, params).map_err(|e| match e {
        Error::Declaration(m) => Error::Declaration(format!("slice.{m}")),
        e => e,
    })?;
    let chart = chart.shared();
    let comps = s
        .map
        .iter()
        .enumerate()
        .map(|(i, src)| expr(&chart, &format!("slice.map[{i}]"), src, params))
        .collect::<Result<Vec<_>>>()?;
    let map = SmoothMap::new(&chart, target, comps).map_err(|e| decl_err("slice.map", e))?;
    let level_of = s
        .level_of
        .iter()
        .map(|l| {
            l.strip_prefix("mu_")
                .and_then(|k| k.parse::<usize>().ok())
                .filter(|&k| k >= 1 && k <= mu_dim)
                .map(|k| k - 1)
                .ok_or_else(|| decl_err("slice.level_of", format!("`{l}` does not name a momentum component")))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LevelSlice::new(map, level_of))
}

impl Document {
    /// Builds every object. `"auto"` momentum maps sample the chart with
    /// `sampling`.
    pub fn load(&self, sampling: &Sampling) -> Result<Loaded> {
        let params = &self.params;
        let chart = build_chart(&self.chart, params)?.shared();
        let mut forms = BTreeMap::new();
        for (name, f) in &self.forms {
            forms.insert(name.clone(), build_form(&chart, name, f, params)?);
        }
        let mut fields = BTreeMap::new();
        for (name, comps) in &self.fields {
            let path = format!("fields.{name}");
            if comps.len() != chart.dim() {
                return Err(decl_err(&path, format!("needs {} components", chart.dim())));
            }
            let es = comps
                .iter()
                .enumerate()
                .map(|(i, s)| expr(&chart, &format!("{path}[{i}]"), s, params))
                .collect::<Result<Vec<_>>>()?;
            fields.insert(name.clone(), VectorField::from_exprs(&chart, es)?);
        }
        let lcs = match &self.lcs {
            None => None,
            Some(l) => {
                let get = |n: &str, deg: usize, role: &str| -> Result<DifferentialForm> {
                    let f = lookup(&forms, &format!("lcs.{role}"), "form", n)?;
                    if f.degree() != deg {
                        return Err(decl_err(&format!("lcs.{role}"), format!("`{n}` has degree {}, need {deg}", f.degree())));
                    }
                    Ok(f.clone())
                };
                let lee = get(&l.lee, 1, "lee")?;
                let s = match (&l.omega, &l.potential) {
                    (None, None) => return Err(decl_err("lcs", "give omega, potential or both")),
                    (None, Some(p)) => exact_lcs(&lee, &get(p, 1, "potential")?)?,
                    (Some(o), p) => {
                        let s = LcsStructure::new(get(o, 2, "omega")?, lee)?;
                        match p {
                            Some(p) => s.with_potential(get(p, 1, "potential")?)?,
                            None => s,
                        }
                    }
                };
                Some(s)
            }
        };
        let action = self.action.as_ref().map(|a| build_action(&chart, a, &fields, params)).transpose()?;
        let momentum = match (&self.momentum, &action) {
            (None, _) => None,
            (Some(_), None) => return Err(decl_err("momentum", "a momentum map needs an action")),
            (Some(m), Some(a)) => Some(build_momentum(&chart, m, lcs.as_ref(), a, &forms, params, sampling)?),
        };
        let slice = match &self.slice {
            None => None,
            Some(s) => {
                let dim = momentum.as_ref().map_or(0, MomentumMap::dim);
                Some(build_slice(&chart, s, dim, params)?)
            }
        };
        Ok(Loaded { chart, forms, fields, lcs, action, momentum, slice })
    }
}

impl CouplingDoc {
    pub fn load(&self, sampling: &Sampling) -> Result<(Loaded, Loaded, CouplingChart)> {
        let base = self.base.load(sampling).map_err(|e| prefixed("base", e))?;
        let mut fiber_doc = self.fiber.clone();
        fiber_doc.action = None;
        fiber_doc.momentum = None;
        let fiber = fiber_doc.load(sampling).map_err(|e| prefixed("fiber", e))?;
        let s = fiber.lcs.clone().ok_or_else(|| decl_err("fiber", "the fiber needs an lcs structure"))?;
        let act = build_action(&fiber.chart, &self.action, &fiber.fields, &self.fiber.params)?;
        let mu = build_momentum(&fiber.chart, &self.momentum, Some(&s), &act, &fiber.forms, &self.fiber.params, sampling)?;
        let pots = self
            .gauge
            .a
            .iter()
            .map(|n| lookup(&base.forms, "gauge.A", "base form", n).cloned())
            .collect::<Result<Vec<_>>>()?;
        let g = GaugeChart::new(&base.chart, pots, act.constants().clone()).map_err(|e| decl_err("gauge", e))?;
        let c = build_coupling(&g, &s, &act, &mu, sampling)?;
        Ok((base, fiber, c))
    }
}

fn prefixed(p: &str, e: Error) -> Error {
    match e {
        Error::Declaration(m) => Error::Declaration(format!("{p}.{m}")),
        e => e,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{
        "params": {"c": 0.5},
        "chart": {"name": "plane", "coords": ["q", "p"]},
        "forms": {
            "eta": {"degree": 1, "coeffs": {"q": "p"}},
            "theta": {"degree": 1, "coeffs": {"0": "c"}}
        },
        "lcs": {"lee": "theta", "potential": "eta"}
    }"#;

    #[test]
    fn loads_exact_structure() {
        let d = Document::from_json(DOC).unwrap();
        let l = d.load(&Sampling::default()).unwrap();
        let s = l.lcs.unwrap();
        // d_θ(p dq) = dp∧dq − c dq∧p dq = −dq∧dp.
        assert_eq!(s.omega().coefficients(&[0.2, 0.3]).unwrap(), vec![-1.0]);
        assert_eq!(Document::from_json(&d.to_json()).unwrap(), d);
    }

    #[test]
    fn errors_carry_positions() {
        let e = Document::from_json("{\"chart\": {\"name\": }").unwrap_err();
        assert!(e.to_string().contains("at line 1 column"), "{e}");
        let bad = DOC.replace("\"p\"}}", "\"p +* q\"}}");
        let e = Document::from_json(&bad).unwrap().load(&Sampling::default()).unwrap_err();
        assert!(e.to_string().contains("forms.eta.coeffs[\"q\"]: column"), "{e}");
        let bad = DOC.replace("\"q\": \"p\"", "\"r\": \"p\"");
        let e = Document::from_json(&bad).unwrap().load(&Sampling::default()).unwrap_err();
        assert!(matches!(e, Error::Declaration(_)), "{e}");
    }

    #[test]
    fn theta_override() {
        let t = parse_theta_override("0,1:0.693; 1,2:-1").unwrap();
        assert_eq!(t[&(0, 1)], 0.693);
        assert_eq!(t[&(1, 2)], -1.0);
        assert!(parse_theta_override("0-1:2").is_err());
    }

    #[test]
    fn complex_round_trip() {
        let k = TwistedComplex::circle(0.7).unwrap();
        let doc = ComplexDoc::from_complex(&k);
        let back = ComplexDoc::from_json(&doc.to_json()).unwrap().load().unwrap();
        assert_eq!(back.f_vector(), k.f_vector());
        assert_eq!(back.betti(), k.betti());
    }
}
