//! Batch runs over declaration files and gallery examples.
//!
//! [`run`] returns a [`Report`] or an error. Callers map the report to exit
//! code 0 or 1 with [`Report::exit_code`] and errors to [`EXIT_INVALID`].

use std::fs;
use std::path::{Path, PathBuf};

use crate::actions::{lee_homomorphism, verify_twisted_hamiltonian};
use crate::cohomology::{hodge_decompose, Cochain, TwistedComplex};
use crate::coupling::{fatness_check, verify_coupling};
use crate::decl::{parse_theta_override, ComplexDoc, CouplingDoc, Document};
use crate::error::{Error, Result};
use crate::gallery::{self, Params};
use crate::lcs::{lee_recovery, verify_lcs_at};
use crate::reduction::{bundle_momentum_check, invariant_hamiltonian_check, reduced_form_check};
use crate::report::{CheckResult, Measurement, Provenance, Report, Sampling};

/// Exit code for inputs that do not parse or validate.
pub const EXIT_INVALID: i32 = 2;

/// Lee recovery solves a linear system per point and loses a few digits.
const LEE_RECOVERY_TOL: f64 = 1e-7;

/// Environment variable read when no seed is given.
pub const SEED_ENV: &str = "LCSLAB_SEED";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            _ => Err(Error::usage(format!("unknown format `{s}` (text or json)"))),
        }
    }
}

/// What to run.
#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    /// Structure, coupling or complex declarations, told apart by their keys.
    Verify(Vec<PathBuf>),
    Example { name: String, params: Params },
    Cohomology { path: PathBuf, theta: Option<String> },
    Coupling(PathBuf),
    Reduce(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub input: Input,
    pub sampling: Sampling,
    pub format: Format,
}

impl RunConfig {
    /// Defaults: 64 points, tolerance `1e−8`, and the seed from
    /// `LCSLAB_SEED` or 0.
    pub fn new(input: Input) -> Result<Self> {
        let d = Sampling::default();
        Ok(RunConfig { input, sampling: Sampling::new(d.points, env_seed()?.unwrap_or(0), d.tol)?, format: Format::Text })
    }
}

/// The seed in `LCSLAB_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::usage(format!("{SEED_ENV}=`{s}` is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Output of [`run`].
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Report,
    /// Printed before the table in text mode, e.g. a Betti table.
    pub preamble: Option<String>,
}

impl Outcome {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = self.report.to_json();
                s.push('\n');
                s
            }
            Format::Text => match &self.preamble {
                Some(p) => format!("{p}\n{}", self.report.to_text()),
                None => self.report.to_text(),
            },
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.report.exit_code()
    }
}

pub fn run(config: &RunConfig) -> Result<Outcome> {
    let s = &config.sampling;
    let report = |r| Ok(Outcome { report: r, preamble: None });
    match &config.input {
        Input::Verify(paths) => {
            if paths.is_empty() {
                return Err(Error::usage("verify needs at least one file"));
            }
            let mut checks = Vec::new();
            let mut preamble = Vec::new();
            for p in paths {
                let src = read(p)?;
                let mut rows = match kind(&src)? {
                    Kind::Structure => verify_document(&Document::from_json(&src)?, s)?.checks,
                    Kind::Coupling => verify_coupling_document(&CouplingDoc::from_json(&src)?, s)?.checks,
                    Kind::Complex => {
                        let k = ComplexDoc::from_json(&src)?.load()?;
                        let (r, table) = cohomology_report(&k, s)?;
                        preamble.push(table);
                        r.checks
                    }
                };
                if let Some(prefix) = stem(p, paths.len()) {
                    for c in &mut rows {
                        c.id = format!("{prefix}/{}", c.id);
                    }
                }
                checks.extend(rows);
            }
            let preamble = (!preamble.is_empty()).then(|| preamble.join("\n"));
            Ok(Outcome { report: Report::new(checks), preamble })
        }
        Input::Example { name, params } => report(gallery::build(name, params)?.run(s)),
        Input::Cohomology { path, theta } => {
            let mut k = ComplexDoc::from_json(&read(path)?)?.load()?;
            if let Some(t) = theta {
                k = k.with_theta(&parse_theta_override(t)?)?;
            }
            let (r, table) = cohomology_report(&k, s)?;
            Ok(Outcome { report: r, preamble: Some(table) })
        }
        Input::Coupling(path) => report(verify_coupling_document(&CouplingDoc::from_json(&read(path)?)?, s)?),
        Input::Reduce(path) => report(reduce_document(&Document::from_json(&read(path)?)?, s)?),
    }
}

fn read(p: &Path) -> Result<String> {
    fs::read_to_string(p).map_err(|e| Error::InvalidInput(format!("{}: {e}", p.display())))
}

/// With several files, ids are prefixed by the file stem.
fn stem(p: &Path, files: usize) -> Option<String> {
    (files > 1).then(|| p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default())
}

#[derive(Debug)]
enum Kind {
    Structure,
    Coupling,
    Complex,
}

fn kind(src: &str) -> Result<Kind> {
    let v: serde_json::Value = serde_json::from_str(src)
        .map_err(|e| Error::Declaration(e.to_string()))?;
    let Some(obj) = v.as_object() else {
        return Err(Error::Declaration("a declaration is a JSON object".into()));
    };
    Ok(if obj.contains_key("vertices") {
        Kind::Complex
    } else if obj.contains_key("gauge") {
        Kind::Coupling
    } else {
        Kind::Structure
    })
}

/// LCS axioms, Lee recovery and, when declared, the action and slice
/// checks of a structure document.
pub fn verify_document(doc: &Document, sampling: &Sampling) -> Result<Report> {
    let tol = sampling.tol;
    let l = doc.load(sampling)?;
    let s = l.lcs.as_ref().ok_or_else(|| Error::InvalidInput("the document declares no `lcs` structure".into()))?;
    let pts = l.chart.sample(sampling.points, sampling.seed)?;
    let name = &doc.chart.name;
    let mut out = verify_lcs_at(s, &pts, tol)?.checks("lcs", name, Provenance::Derived);
    if l.chart.dim() >= 4 {
        let m = lee_recovery(s, &pts)?;
        out.push(CheckResult::from_measurement("lee_recovery", "θ is recovered from ω alone", Provenance::Trivial, &m, LEE_RECOVERY_TOL));
    }
    if let Some(act) = &l.action {
        for (a, x) in act.fields().iter().enumerate() {
            let v = lee_homomorphism(s.lee(), x, &pts, tol)?;
            let mut m = Measurement::single(v.spread);
            m.points = v.points;
            let row = CheckResult::from_measurement(
                &format!("action.lee{a}"),
                "θ(ρ(v)) is constant",
                Provenance::Derived,
                &m,
                tol,
            );
            out.push(row.with_note(format!("θ(ρ(e_{a})) = {:.12}", v.value)));
        }
        out.push(CheckResult::from_measurement(
            "action.bracket",
            "ρ is a Lie algebra homomorphism",
            Provenance::Trivial,
            &act.bracket_relation(&pts)?,
            tol,
        ));
        if let Some(mu) = &l.momentum {
            let r = verify_twisted_hamiltonian(s, act, mu, &pts, tol)?;
            let mut row = CheckResult::from_measurement(
                "action.hamiltonian",
                "i_{ρ(v)} ω = d_θ μ(v) and L_{ρ(v)} ω = 0",
                Provenance::Derived,
                &r.worst(),
                tol,
            );
            row.verdict = r.verdict();
            out.push(row);
        }
    }
    if l.slice.is_some() {
        out.extend(reduce_loaded(&l, sampling)?);
    }
    Ok(Report::new(out))
}

/// Reduction of a document with an abelian action, a momentum map and a
/// slice of the zero level.
pub fn reduce_document(doc: &Document, sampling: &Sampling) -> Result<Report> {
    let l = doc.load(sampling)?;
    Ok(Report::new(reduce_loaded(&l, sampling)?))
}

fn reduce_loaded(l: &crate::decl::Loaded, sampling: &Sampling) -> Result<Vec<CheckResult>> {
    let missing = |what: &str| Error::InvalidInput(format!("reduction needs a declared `{what}`"));
    let s = l.lcs.as_ref().ok_or_else(|| missing("lcs"))?;
    let act = l.action.as_ref().ok_or_else(|| missing("action"))?;
    let mu = l.momentum.as_ref().ok_or_else(|| missing("momentum"))?;
    let slice = l.slice.as_ref().ok_or_else(|| missing("slice"))?;
    let mut out = Vec::new();
    if !act.elements().is_empty() {
        let pts = l.chart.sample(sampling.points, sampling.seed)?;
        let r = invariant_hamiltonian_check(act, mu, &pts)?;
        out.push(CheckResult::from_measurement(
            "reduce.invariant",
            "g*μ = μ for the declared elements",
            Provenance::Literature,
            &r.combined,
            sampling.tol,
        ));
    }
    let pts = slice.chart().sample(sampling.points, sampling.seed)?;
    let r = reduced_form_check(s, act, mu, slice, &pts, sampling.tol)?;
    out.extend(r.checks("reduce", Provenance::Literature, 1e-10));
    Ok(out)
}

/// Closedness, fatness and the bundle momentum relation of a coupling.
pub fn verify_coupling_document(doc: &CouplingDoc, sampling: &Sampling) -> Result<Report> {
    let tol = sampling.tol;
    let (_, _, c) = doc.load(sampling)?;
    let base_pts = c.base().sample(sampling.points, sampling.seed)?;
    let fiber_pts = c.fiber_chart().sample(sampling.points, sampling.seed)?;
    let pts = c.total().sample(sampling.points, sampling.seed)?;
    let mut out = vec![CheckResult::from_measurement(
        "gauge.bianchi",
        "d_A F = 0",
        Provenance::Literature,
        &c.gauge().bianchi_residual(&base_pts)?,
        tol,
    )];
    out.extend(verify_coupling(&c, &pts, tol)?.checks("coupling", Provenance::Literature));
    out.push(fatness_check(c.gauge(), c.momentum(), &base_pts, &fiber_pts)?.check(
        "fatness",
        "⟨μ, F⟩ is nondegenerate on horizontal spaces",
        Provenance::Literature,
    ));
    let r = bundle_momentum_check(&c, c.momentum(), &pts)?;
    out.push(CheckResult::from_measurement(
        "bundle.hamiltonian",
        "i_{(0,ρ)} Ω = d_Θ(μ ∘ pr)",
        Provenance::Literature,
        &r.hamiltonian,
        tol,
    ));
    if !c.action().elements().is_empty() {
        out.push(CheckResult::from_measurement(
            "bundle.invariance",
            "(id × g)*Ω = Ω",
            Provenance::Literature,
            &r.invariance,
            tol,
        ));
    }
    Ok(Report::new(out))
}

/// Betti numbers with consistency checks, and the Betti table.
pub fn cohomology_report(k: &TwistedComplex, sampling: &Sampling) -> Result<(Report, String)> {
    use rand::{Rng, SeedableRng};
    let betti = k.betti();
    let mut out = vec![CheckResult::from_measurement(
        "cohomology.square",
        "δ_θ ∘ δ_θ = 0",
        Provenance::Trivial,
        &Measurement::single(k.square_residual()),
        1e-12,
    )];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut hodge = None::<Measurement>;
    let mut dims = Vec::new();
    for deg in 0..=k.dim() {
        let c = Cochain::new(deg, (0..k.count(deg)).map(|_| rng.random_range(-1.0..1.0)).collect());
        let m = Measurement::single(hodge_decompose(k, &c)?.reconstruction_residual);
        hodge = Some(match hodge {
            Some(h) => h.max(m),
            None => m,
        });
        dims.push(k.harmonic_dim(deg));
    }
    let hodge = hodge.expect("degree 0 exists");
    out.push(CheckResult::from_measurement(
        "cohomology.hodge",
        "c = h + δ_θ a + δ_θᵀ b",
        Provenance::Literature,
        &hodge,
        1e-9,
    ));
    out.push(
        CheckResult::boolean(
            "cohomology.harmonic_dim",
            "dim ker Δ_k equals the kth Betti number",
            Provenance::Literature,
            dims == betti,
            dims.len(),
        )
        .with_note(format!("harmonic dimensions {dims:?}")),
    );
    let alt: i64 = betti.iter().enumerate().map(|(i, &b)| if i % 2 == 0 { b as i64 } else { -(b as i64) }).sum();
    out.push(CheckResult::boolean(
        "cohomology.euler",
        "Σ (−1)^k b_k equals the Euler characteristic",
        Provenance::Trivial,
        alt == k.euler_characteristic(),
        betti.len(),
    ));
    out.push(
        CheckResult::boolean("cohomology.betti", "twisted Betti numbers", Provenance::Derived, true, betti.len())
            .with_note(format!("Betti numbers {betti:?}")),
    );
    Ok((Report::new(out), betti_table(k, &betti)))
}

pub fn betti_table(k: &TwistedComplex, betti: &[usize]) -> String {
    use std::fmt::Write;
    let mut s = String::from("degree  simplices  betti\n");
    for (d, b) in betti.iter().enumerate() {
        let _ = writeln!(s, "{d:>6}  {:>9}  {b:>5}", k.count(d));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_table() {
        let k = TwistedComplex::circle(2f64.ln()).unwrap();
        let (r, t) = cohomology_report(&k, &Sampling::default()).unwrap();
        assert!(r.all_passed(), "{}", r.to_text());
        assert!(t.contains("     0          3      0"), "{t}");
    }

    #[test]
    fn format_parses() {
        assert_eq!("json".parse::<Format>().unwrap(), Format::Json);
        assert!("yaml".parse::<Format>().is_err());
    }

    #[test]
    fn documents_are_told_apart() {
        assert!(matches!(kind(r#"{"vertices": 2, "simplices": []}"#).unwrap(), Kind::Complex));
        assert!(matches!(kind(r#"{"gauge": {}}"#).unwrap(), Kind::Coupling));
        assert!(matches!(kind("{\n  \"chart\": ,").unwrap_err(), Error::Declaration(_)));
    }
}
