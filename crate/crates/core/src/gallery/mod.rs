//! Built-in examples with their expected results.
//!
//! Each [`ExampleManifest`] owns the objects of one example and a list of
//! [`Expectation`]s. [`ExampleManifest::run`] evaluates the example's checks
//! and reports one row per expectation.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::chart::Chart;
use crate::cohomology::TwistedComplex;
use crate::error::{Error, Result};
use crate::lcs::LcsStructure;
use crate::report::{CheckResult, Measurement, Provenance, Report, Sampling, Verdict};

mod complexes;
mod cotangent;
mod coupling;
mod hopf;
mod inoue;
mod reduction;

pub use complexes::complexes;
pub use cotangent::{cotangent, cotangent_document, cotangent_with};
pub use coupling::{
    coupling_s2, coupling_s2_document, hopf_complex_structure, nonintegrable, s2_complex_structure, S2Coupling,
};
pub use hopf::{hopf, hopf_document, hopf_model, HopfModel, HopfParams};
pub use inoue::{g2_spread, inoue, inoue_document, InoueParams};
pub use reduction::reduction;

/// What an expectation asserts about its check.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expected {
    Pass,
    /// A negative control: the check must fail.
    Fail,
    /// Reported without a verdict on the outcome.
    Record,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expectation {
    pub id: String,
    pub expected: Expected,
    pub provenance: Provenance,
    pub statement: String,
}

pub(crate) fn expect(id: &str, expected: Expected, provenance: Provenance, statement: &str) -> Expectation {
    Expectation { id: id.to_string(), expected, provenance, statement: statement.to_string() }
}

/// Objects making up an example.
#[derive(Clone, Debug, Default)]
pub struct Objects {
    /// Declarations in the JSON formats of [`crate::decl`], by name.
    pub declarations: BTreeMap<String, String>,
    pub charts: Vec<Arc<Chart>>,
    pub structures: BTreeMap<String, LcsStructure>,
    pub complexes: BTreeMap<String, TwistedComplex>,
}

/// Rows produced by an example suite. Sections that fail with an error
/// are remembered so that their missing rows can carry the message.
#[derive(Debug, Default)]
pub struct Rows {
    rows: BTreeMap<String, CheckResult>,
    errors: Vec<(String, String)>,
}

impl Rows {
    pub fn push(&mut self, r: CheckResult) {
        self.rows.insert(r.id.clone(), r);
    }

    pub fn extend(&mut self, rs: impl IntoIterator<Item = CheckResult>) {
        for r in rs {
            self.push(r);
        }
    }

    /// A row from a measurement.
    pub fn measured(&mut self, id: &str, m: &Measurement, tol: f64) {
        self.push(CheckResult::from_measurement(id, "", Provenance::Derived, m, tol));
    }

    pub fn value(&mut self, id: &str, got: f64, expected: f64, tol: f64) {
        self.push(CheckResult::value(id, "", Provenance::Derived, got, expected, tol));
    }

    pub fn boolean(&mut self, id: &str, ok: bool, points: usize, note: impl Into<String>) {
        self.push(CheckResult::boolean(id, "", Provenance::Derived, ok, points).with_note(note));
    }

    /// Runs `f`; an error is recorded against every row under `prefix`.
    pub fn section(&mut self, prefix: &str, f: impl FnOnce(&mut Rows) -> Result<()>) {
        if let Err(e) = f(self) {
            self.errors.push((prefix.to_string(), e.to_string()));
        }
    }

    pub fn get(&self, id: &str) -> Option<&CheckResult> {
        self.rows.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    pub fn errors(&self) -> &[(String, String)] {
        &self.errors
    }

    fn error_for(&self, id: &str) -> Option<&str> {
        self.errors
            .iter()
            .filter(|(p, _)| id == p || id.starts_with(&format!("{p}.")) || p.is_empty())
            .map(|(_, e)| e.as_str())
            .next()
    }
}

type Suite = dyn Fn(&Sampling, &mut Rows) + Send + Sync;

/// An example with its expected results.
#[derive(Clone)]
pub struct ExampleManifest {
    pub name: String,
    pub description: String,
    pub objects: Objects,
    pub expected: Vec<Expectation>,
    suite: Arc<Suite>,
}

impl std::fmt::Debug for ExampleManifest {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ExampleManifest")
            .field("name", &self.name)
            .field("expected", &self.expected.len())
            .finish_non_exhaustive()
    }
}

impl ExampleManifest {
    pub(crate) fn new(
        name: impl Into<String>,
        description: impl Into<String>,
        objects: Objects,
        expected: Vec<Expectation>,
        suite: impl Fn(&Sampling, &mut Rows) + Send + Sync + 'static,
    ) -> Self {
        ExampleManifest {
            name: name.into(),
            description: description.into(),
            objects,
            expected,
            suite: Arc::new(suite),
        }
    }

    /// All rows the suite produces, before expectations are applied.
    pub fn raw(&self, sampling: &Sampling) -> Rows {
        let mut rows = Rows::default();
        (self.suite)(sampling, &mut rows);
        rows
    }

    /// One row per expectation, with ids prefixed by the example name.
    pub fn run(&self, sampling: &Sampling) -> Report {
        let rows = self.raw(sampling);
        Report::new(self.expected.iter().map(|e| self.apply(e, &rows)).collect())
    }

    fn apply(&self, e: &Expectation, rows: &Rows) -> CheckResult {
        let id = format!("{}.{}", self.name, e.id);
        let Some(row) = rows.get(&e.id) else {
            let msg = rows.error_for(&e.id).unwrap_or("the suite did not produce this check");
            return CheckResult::errored(&id, &e.statement, e.provenance, &Error::InvalidInput(msg.to_string()));
        };
        let mut row = row.clone();
        row.id = id;
        row.provenance = e.provenance;
        if !e.statement.is_empty() {
            row.paper_ref = e.statement.clone();
        }
        match e.expected {
            Expected::Pass => row,
            Expected::Fail => row.expect_failure(),
            Expected::Record => {
                let outcome = match row.verdict {
                    Verdict::Pass => "within threshold",
                    Verdict::Fail => "above threshold",
                    Verdict::Inconclusive => "inconclusive",
                };
                let note = match row.note.take() {
                    Some(n) => format!("recorded, not asserted ({outcome}); {n}"),
                    None => format!("recorded, not asserted ({outcome})"),
                };
                row.verdict = Verdict::Pass;
                row.with_note(note)
            }
        }
    }
}

/// Names accepted by [`build`].
pub const NAMES: &[&str] =
    &["complexes", "cotangent", "coupling_s2", "hopf", "inoue", "nonintegrable", "reduction"];

/// CLI-style parameters (`key=value`) for [`build`].
pub type Params = BTreeMap<String, String>;

pub(crate) fn param_f64(params: &Params, key: &str, default: f64) -> Result<f64> {
    match params.get(key) {
        None => Ok(default),
        Some(v) => v.trim().parse().map_err(|_| Error::InvalidInput(format!("parameter {key}: `{v}` is not a number"))),
    }
}

pub(crate) fn param_list(params: &Params, key: &str, default: &[f64]) -> Result<Vec<f64>> {
    match params.get(key) {
        None => Ok(default.to_vec()),
        Some(v) => v
            .split(',')
            .map(|s| {
                s.trim()
                    .parse()
                    .map_err(|_| Error::InvalidInput(format!("parameter {key}: `{s}` is not a number")))
            })
            .collect(),
    }
}

fn check_known(params: &Params, known: &[&str]) -> Result<()> {
    match params.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(Error::InvalidInput(format!("unknown parameter `{k}` (known: {})", known.join(", ")))),
        None => Ok(()),
    }
}

/// Builds a named example from `key=value` parameters.
pub fn build(name: &str, params: &Params) -> Result<ExampleManifest> {
    match name {
        "hopf" => {
            check_known(params, &["n", "weights", "solved"])?;
            let n = param_f64(params, "n", 2.0)?;
            if n.fract() != 0.0 || n < 2.0 {
                return Err(Error::InvalidInput(format!("n = {n} must be an integer ≥ 2")));
            }
            let n = n as usize;
            let weights = param_list(params, "weights", &vec![1.0; n])?;
            let solved = match params.get("solved") {
                None => HopfParams::default().solved,
                Some(s) => hopf::ambient_index(s, n)?,
            };
            hopf(&HopfParams { n, weights, solved })
        }
        "inoue" => {
            check_known(params, &["alpha", "a", "b", "c", "t", "s"])?;
            let d = InoueParams::default();
            let alpha = param_f64(params, "alpha", d.alpha)?;
            let pair = |k: &str, def: [f64; 2]| -> Result<[f64; 2]> {
                let v = param_list(params, k, &def)?;
                <[f64; 2]>::try_from(v).map_err(|_| Error::InvalidInput(format!("parameter {k} needs two values")))
            };
            let (a, b, c) = (pair("a", d.a)?, pair("b", d.b)?, pair("c", d.c)?);
            let t = param_f64(params, "t", d.t)?;
            let s = param_f64(params, "s", b[0] * a[1] - b[1] * a[0])?;
            inoue(&InoueParams { alpha, a, b, c, t, s })
        }
        "cotangent" => {
            check_known(params, &[])?;
            cotangent()
        }
        "coupling_s2" => {
            check_known(params, &["weights"])?;
            let w = param_list(params, "weights", &[1.0, 1.0])?;
            coupling_s2(&w)
        }
        "nonintegrable" => {
            check_known(params, &[])?;
            nonintegrable()
        }
        "reduction" => {
            check_known(params, &["weights"])?;
            reduction(&param_list(params, "weights", &[1.0, 1.0])?)
        }
        "complexes" => {
            check_known(params, &[])?;
            complexes()
        }
        _ => Err(Error::InvalidInput(format!("no example named `{name}` (known: {})", NAMES.join(", ")))),
    }
}

/// The full gallery: every example, including the parameter variants the
/// acceptance suite runs.
pub fn all() -> Result<Vec<ExampleManifest>> {
    Ok(vec![
        complexes()?,
        cotangent()?,
        coupling_s2(&[1.0, 1.0])?,
        coupling_s2(&[1.0, 2.0])?,
        hopf(&HopfParams::default())?,
        hopf(&HopfParams { weights: vec![1.0, 2.0], ..HopfParams::default() })?,
        hopf(&HopfParams { weights: vec![2.0, 3.0], ..HopfParams::default() })?,
        hopf(&HopfParams { n: 4, weights: vec![1.0; 4], ..HopfParams::default() })?,
        inoue(&InoueParams::default())?,
        nonintegrable()?,
        reduction(&[1.0, 1.0])?,
    ])
}

/// Runs several manifests into one report.
pub fn run_all(manifests: &[ExampleManifest], sampling: &Sampling) -> Report {
    Report::new(manifests.iter().flat_map(|m| m.run(sampling).checks).collect())
}

/// A name fragment for a weight vector, `1_2` for `(1, 2)`.
pub(crate) fn weights_tag(w: &[f64]) -> String {
    w.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join("_")
}
