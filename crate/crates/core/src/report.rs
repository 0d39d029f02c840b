//! Sampled measurements, check results and reports.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sampling and tolerance settings shared by every check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sampling {
    pub points: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling { points: 64, seed: 0, tol: 1e-8 }
    }
}

impl Sampling {
    pub fn new(points: usize, seed: u64, tol: f64) -> Result<Self> {
        if points == 0 {
            return Err(Error::usage("at least one sample point is required"));
        }
        if !(tol > 0.0) {
            return Err(Error::usage("tolerance must be positive"));
        }
        Ok(Sampling { points, seed, tol })
    }

    pub fn with_tol(self, tol: f64) -> Self {
        Sampling { tol, ..self }
    }

    pub fn with_points(self, points: usize) -> Self {
        Sampling { points, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Inconclusive,
}

/// Where an expected value comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    /// Stated in the literature the example is taken from.
    Literature,
    /// Follows from definitions.
    Trivial,
    /// Computed by hand or by an independent route.
    Derived,
}

/// Fraction of failed evaluations above which a sweep is inconclusive.
pub const MAX_SKIP_FRACTION: f64 = 0.2;

/// Maximum of a pointwise residual over a set of sample points.
///
/// Each point contributes `residual / (1 + scale)`, where `scale` is the
/// largest coefficient magnitude involved there, so forms that blow up
/// toward a chart boundary are judged relative to their size.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    /// Largest scale-normalized residual.
    pub residual: f64,
    /// Largest raw residual.
    pub raw: f64,
    /// Points that evaluated successfully.
    pub points: usize,
    /// Points skipped because evaluation left a domain or overflowed.
    pub skipped: usize,
    pub worst_point: Option<Vec<f64>>,
}

impl Measurement {
    /// Evaluates `f` at every point; domain and overflow errors are skipped
    /// and counted, other errors abort.
    pub fn sweep(
        points: &[Vec<f64>],
        mut f: impl FnMut(&[f64]) -> Result<(f64, f64)>,
    ) -> Result<Measurement> {
        let mut m = Measurement { residual: 0.0, raw: 0.0, points: 0, skipped: 0, worst_point: None };
        for p in points {
            match f(p) {
                Ok((r, s)) => {
                    let normalized = if r.is_finite() && s.is_finite() { r / (1.0 + s) } else { f64::INFINITY };
                    m.points += 1;
                    m.raw = m.raw.max(r);
                    if normalized > m.residual || m.worst_point.is_none() {
                        m.residual = m.residual.max(normalized);
                        m.worst_point = Some(p.clone());
                    }
                }
                Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => m.skipped += 1,
                Err(e) => return Err(e),
            }
        }
        Ok(m)
    }

    /// Like [`Measurement::sweep`] for `k` quantities computed together.
    pub fn sweep_many(
        points: &[Vec<f64>],
        k: usize,
        mut f: impl FnMut(&[f64]) -> Result<Vec<(f64, f64)>>,
    ) -> Result<Vec<Measurement>> {
        let mut values: Vec<Option<Vec<(f64, f64)>>> = Vec::with_capacity(points.len());
        for p in points {
            match f(p) {
                Ok(v) if v.len() == k => values.push(Some(v)),
                Ok(_) => return Err(Error::usage("sweep_many: wrong number of quantities")),
                Err(Error::Domain { .. }) | Err(Error::NonFinite { .. }) => values.push(None),
                Err(e) => return Err(e),
            }
        }
        (0..k)
            .map(|q| {
                let mut it = values.iter();
                Measurement::sweep(points, |_| match it.next().and_then(Option::as_ref) {
                    Some(v) => Ok(v[q]),
                    None => Err(Error::non_finite("skipped point")),
                })
            })
            .collect()
    }

    /// A measurement from an already computed scalar.
    pub fn single(residual: f64) -> Measurement {
        Measurement { residual, raw: residual, points: 1, skipped: 0, worst_point: None }
    }

    pub fn inconclusive(&self) -> bool {
        let total = self.points + self.skipped;
        total == 0 || self.points == 0 || self.skipped as f64 > MAX_SKIP_FRACTION * total as f64
    }

    pub fn verdict(&self, tol: f64) -> Verdict {
        if self.inconclusive() {
            Verdict::Inconclusive
        } else if self.residual <= tol {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.verdict(tol) == Verdict::Pass
    }

    /// Combines two sweeps over the same points, keeping the worst.
    pub fn max(self, other: Measurement) -> Measurement {
        let worse = other.residual > self.residual;
        Measurement {
            residual: self.residual.max(other.residual),
            raw: self.raw.max(other.raw),
            points: self.points.min(other.points),
            skipped: self.skipped.max(other.skipped),
            worst_point: if worse { other.worst_point } else { self.worst_point },
        }
    }
}

/// One row of a report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub id: String,
    /// The statement being checked.
    pub paper_ref: String,
    pub residual: f64,
    pub threshold: f64,
    pub verdict: Verdict,
    pub provenance: Provenance,
    pub points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckResult {
    /// A check whose underlying measurement is expected to pass.
    pub fn from_measurement(
        id: &str,
        statement: &str,
        provenance: Provenance,
        m: &Measurement,
        tol: f64,
    ) -> Self {
        CheckResult {
            id: id.to_string(),
            paper_ref: statement.to_string(),
            residual: m.residual,
            threshold: tol,
            verdict: m.verdict(tol),
            provenance,
            points: m.points,
            note: (m.skipped > 0).then(|| format!("{} points skipped", m.skipped)),
        }
    }

    /// A yes/no check: the residual reports 0 or 1.
    pub fn boolean(id: &str, statement: &str, provenance: Provenance, ok: bool, points: usize) -> Self {
        CheckResult {
            id: id.to_string(),
            paper_ref: statement.to_string(),
            residual: if ok { 0.0 } else { 1.0 },
            threshold: 0.5,
            verdict: if ok { Verdict::Pass } else { Verdict::Fail },
            provenance,
            points,
            note: None,
        }
    }

    /// Compares a computed value against an expected one.
    pub fn value(
        id: &str,
        statement: &str,
        provenance: Provenance,
        got: f64,
        expected: f64,
        tol: f64,
    ) -> Self {
        let r = (got - expected).abs();
        CheckResult {
            id: id.to_string(),
            paper_ref: statement.to_string(),
            residual: r,
            threshold: tol,
            verdict: if r <= tol { Verdict::Pass } else { Verdict::Fail },
            provenance,
            points: 1,
            note: Some(format!("computed {got:.12e}, expected {expected:.12e}")),
        }
    }

    /// A check whose underlying measurement is expected to exceed the
    /// threshold (negative control). Passes when it does.
    pub fn expect_failure(mut self) -> Self {
        self.verdict = match self.verdict {
            Verdict::Fail => Verdict::Pass,
            Verdict::Pass => Verdict::Fail,
            Verdict::Inconclusive => Verdict::Inconclusive,
        };
        let note = "negative control: the underlying check is expected to fail";
        self.note = Some(match self.note.take() {
            Some(n) => format!("{n}; {note}"),
            None => note.to_string(),
        });
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// The check turned into a failure carrying the error that stopped it.
    pub fn errored(id: &str, statement: &str, provenance: Provenance, err: &Error) -> Self {
        CheckResult {
            id: id.to_string(),
            paper_ref: statement.to_string(),
            residual: f64::INFINITY,
            threshold: 0.0,
            verdict: Verdict::Fail,
            provenance,
            points: 0,
            note: Some(err.to_string()),
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub checks: usize,
    pub passed: usize,
    pub failed: usize,
    pub inconclusive: usize,
    pub text: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn new(mut checks: Vec<CheckResult>) -> Self {
        checks.sort_by(|a, b| a.id.cmp(&b.id));
        Report { checks }
    }

    pub fn summary(&self) -> Summary {
        let n = self.checks.len();
        let passed = self.checks.iter().filter(|c| c.verdict == Verdict::Pass).count();
        let failed = self.checks.iter().filter(|c| c.verdict == Verdict::Fail).count();
        let inconclusive = n - passed - failed;
        let text = if n == 0 {
            "0 checks".to_string()
        } else {
            let mut t = format!("{n} checks: {passed} passed, {failed} failed");
            if inconclusive > 0 {
                let _ = write!(t, ", {inconclusive} inconclusive");
            }
            t
        };
        Summary { checks: n, passed, failed, inconclusive, text }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(CheckResult::passed)
    }

    /// 0 when every check passed, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            checks: Vec<JsonCheck<'a>>,
            summary: Summary,
        }
        #[derive(Serialize)]
        struct JsonCheck<'a> {
            id: &'a str,
            paper_ref: &'a str,
            residual: Option<f64>,
            threshold: f64,
            verdict: Verdict,
            provenance: Provenance,
            points: usize,
            #[serde(skip_serializing_if = "Option::is_none")]
            note: Option<&'a str>,
        }
        let doc = Doc {
            checks: self
                .checks
                .iter()
                .map(|c| JsonCheck {
                    id: &c.id,
                    paper_ref: &c.paper_ref,
                    residual: c.residual.is_finite().then_some(c.residual),
                    threshold: c.threshold,
                    verdict: c.verdict,
                    provenance: c.provenance,
                    points: c.points,
                    note: c.note.as_deref(),
                })
                .collect(),
            summary: self.summary(),
        };
        serde_json::to_string_pretty(&doc).expect("report serializes")
    }

    pub fn to_text(&self) -> String {
        let width = self.checks.iter().map(|c| c.id.len()).max().unwrap_or(2).max(5);
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<width$}  {:<12}  {:>11}  {:>9}  {:>6}  {:<10}",
            "check", "verdict", "residual", "threshold", "points", "source"
        );
        for c in &self.checks {
            let verdict = match c.verdict {
                Verdict::Pass => "pass",
                Verdict::Fail => "FAIL",
                Verdict::Inconclusive => "inconclusive",
            };
            let prov = match c.provenance {
                Provenance::Literature => "literature",
                Provenance::Trivial => "trivial",
                Provenance::Derived => "derived",
            };
            let _ = writeln!(
                out,
                "{:<width$}  {:<12}  {:>11.3e}  {:>9.1e}  {:>6}  {:<10}",
                c.id, verdict, c.residual, c.threshold, c.points, prov
            );
            let _ = writeln!(out, "{:<width$}    {}", "", c.paper_ref);
            if let Some(n) = &c.note {
                let _ = writeln!(out, "{:<width$}    note: {}", "", n);
            }
        }
        let _ = writeln!(out, "{}", self.summary().text);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_report() {
        let r = Report::default();
        assert_eq!(r.summary().text, "0 checks");
        assert_eq!(r.exit_code(), 0);
        assert!(r.to_json().contains("\"0 checks\""));
    }

    #[test]
    fn one_failure_sets_exit_code() {
        let bad = CheckResult::value("b", "two is three", Provenance::Trivial, 2.0, 3.0, 1e-9);
        let good = CheckResult::boolean("a", "true", Provenance::Trivial, true, 1);
        let r = Report::new(vec![bad, good]);
        assert_eq!(r.checks[0].id, "a");
        let s = r.summary();
        assert_eq!((s.passed, s.failed), (1, 1));
        assert_eq!(r.exit_code(), 1);
    }

    #[test]
    fn sweep_skips_domain_errors() {
        let pts: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let m = Measurement::sweep(&pts, |p| {
            if p[0] < 1.0 {
                Err(Error::Domain { chart: "c".into(), point: p.to_vec() })
            } else {
                Ok((p[0] * 1e-10, 0.0))
            }
        })
        .unwrap();
        assert_eq!((m.points, m.skipped), (9, 1));
        assert_eq!(m.verdict(1e-8), Verdict::Pass);

        let m = Measurement::sweep(&pts, |p| {
            if p[0] < 3.0 {
                Err(Error::NonFinite { what: "x".into() })
            } else {
                Ok((0.0, 0.0))
            }
        })
        .unwrap();
        assert_eq!(m.verdict(1e-8), Verdict::Inconclusive);
    }

    #[test]
    fn residual_is_scale_normalized() {
        let m = Measurement::sweep(&[vec![0.0]], |_| Ok((1e-7, 99.0))).unwrap();
        assert!((m.residual - 1e-9).abs() < 1e-20);
        assert_eq!(m.raw, 1e-7);
    }

    #[test]
    fn negative_control_inverts() {
        let c = CheckResult::value("x", "", Provenance::Derived, 1.0, 0.0, 1e-8).expect_failure();
        assert!(c.passed());
    }
}
