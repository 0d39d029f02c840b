use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lcslab::gallery::{self, Expected, Params};
use lcslab::report::Sampling;
use lcslab::runner::{self, Format, Input, RunConfig, EXIT_INVALID, SEED_ENV};
use lcslab::Error;

/// Pointwise verifier for locally conformally symplectic structures.
#[derive(Debug, Parser)]
#[command(name = "lcslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Debug, Args)]
struct Opts {
    /// Sample points per check.
    #[arg(long, global = true, default_value_t = 64)]
    points: usize,
    /// Sampling seed.
    #[arg(long, global = true, env = SEED_ENV, default_value_t = 0)]
    seed: u64,
    /// Residual tolerance.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// `text` or `json`.
    #[arg(long, global = true, default_value = "text")]
    format: Format,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Verify structure, coupling or complex declarations.
    Verify {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Show, run or export a gallery example.
    Example {
        name: String,
        /// Parameters as key=value.
        params: Vec<String>,
        #[arg(long)]
        run: bool,
        /// Print the example's declarations as JSON.
        #[arg(long, conflicts_with = "run")]
        export: bool,
    },
    /// Twisted Betti numbers of a complex file.
    Cohomology {
        file: PathBuf,
        /// Edge values overriding the file, e.g. "0,1:0.693;1,2:0".
        #[arg(long)]
        theta: Option<String>,
    },
    /// Verify a coupling declaration.
    Coupling { file: PathBuf },
    /// Check the reduction of a structure declaration with a slice.
    Reduce { file: PathBuf },
    /// List the gallery examples.
    List,
}

fn parse_params(raw: &[String]) -> Result<Params, Error> {
    raw.iter()
        .map(|kv| match kv.split_once('=') {
            Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
            _ => Err(Error::Usage(format!("parameter `{kv}` is not of the form key=value"))),
        })
        .collect()
}

fn list() -> Result<String, Error> {
    let mut out = String::new();
    for name in gallery::NAMES {
        let m = gallery::build(name, &Params::new())?;
        out.push_str(&format!("{name:<14} {}\n", m.description));
    }
    Ok(out)
}

fn show(name: &str, params: &Params) -> Result<String, Error> {
    let m = gallery::build(name, params)?;
    let mut out = format!("{}: {}\n", m.name, m.description);
    let width = m.expected.iter().map(|e| e.id.len()).max().unwrap_or(0);
    for e in &m.expected {
        let what = match e.expected {
            Expected::Pass => "pass",
            Expected::Fail => "fail",
            Expected::Record => "record",
        };
        out.push_str(&format!("  {:<width$}  {what:<6}  {}\n", e.id, e.statement));
    }
    out.push_str(&format!("{} expectations; run with --run\n", m.expected.len()));
    Ok(out)
}

fn export(name: &str, params: &Params) -> Result<String, Error> {
    let m = gallery::build(name, params)?;
    let mut obj = serde_json::Map::new();
    for (k, v) in &m.objects.declarations {
        obj.insert(k.clone(), serde_json::from_str(v)?);
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(obj))?;
    s.push('\n');
    Ok(s)
}

fn execute(cli: Cli) -> Result<(String, i32), Error> {
    let o = &cli.opts;
    let sampling = Sampling::new(o.points, o.seed, o.tol)?;
    let input = match cli.command {
        Command::List => return Ok((list()?, 0)),
        Command::Example { name, params, run, export: exp } => {
            let params = parse_params(&params)?;
            if exp {
                return Ok((export(&name, &params)?, 0));
            }
            if !run {
                return Ok((show(&name, &params)?, 0));
            }
            Input::Example { name, params }
        }
        Command::Verify { files } => Input::Verify(files),
        Command::Cohomology { file, theta } => Input::Cohomology { path: file, theta },
        Command::Coupling { file } => Input::Coupling(file),
        Command::Reduce { file } => Input::Reduce(file),
    };
    let config = RunConfig { input, sampling, format: o.format };
    let outcome = runner::run(&config)?;
    Ok((outcome.render(config.format), outcome.exit_code()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INVALID as u8)
        }
    }
}
