//! Command-line front end: `norm`, `estimate` and `verify`.
//!
//! Tables go to standard output, JSON to the `--output` path. Exit status is
//! 0 on success, 1 when a verification suite fails and 2 on bad input.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::nseq::{NSeq, Shape};
use crate::optim::OptBudget;
use crate::seqclass::{ClassSpec, Engine, NormResult};
use crate::summing::{estimate_lower, SummingEstimate, SummingProblem};
use crate::verify::{self, CheckConfig, CheckReport, PropertyId};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "sumnorm", version, about = "Sequence-class norms and multiple summing operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate a class norm of an n-sequence.
    Norm {
        /// ClassSpec JSON file.
        #[arg(long)]
        spec: PathBuf,
        /// NSeq JSON file, or a bare nested array of scalars.
        #[arg(long)]
        seq: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Lower-bound the summing norm of a multilinear operator.
    Estimate {
        /// SummingProblem JSON file.
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run property checks.
    Verify {
        /// `all`, or a comma-separated list of property ids.
        #[arg(long, default_value = "all")]
        suite: String,
        /// CheckConfig JSON file; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Samples per preset or engine group.
        #[arg(long)]
        samples: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    seed: Option<u64>,
    /// Where to write the JSON result.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    iters: Option<usize>,
    /// Optimizer tolerance for `norm`/`estimate`; optimizer-path check tolerance for `verify`.
    #[arg(long)]
    tol: Option<f64>,
}

impl Common {
    fn apply(&self, budget: &mut OptBudget) {
        if let Some(s) = self.seed {
            budget.seed = s;
        }
        if let Some(s) = self.starts {
            budget.starts = s;
        }
        if let Some(i) = self.iters {
            budget.iterations = i;
        }
        if let Some(t) = self.tol {
            budget.tolerance = t;
        }
    }
}

/// An input problem, reported on stderr with exit status 2.
struct InputError(String);

impl From<crate::error::Error> for InputError {
    fn from(e: crate::error::Error) -> Self {
        InputError(e.to_string())
    }
}

/// Runs with the process's standard streams.
pub fn run<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs with explicit output streams; `argv[0]` is the program name.
pub fn run_with<I, S>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{text}");
                    EXIT_INPUT
                }
            };
        }
    };
    match dispatch(cli.command, out) {
        Ok(code) => code,
        Err(InputError(msg)) => {
            let _ = writeln!(err, "error: {msg}");
            EXIT_INPUT
        }
    }
}

fn dispatch(cmd: Command, out: &mut dyn Write) -> Result<i32, InputError> {
    match cmd {
        Command::Norm { spec, seq, common } => {
            let spec: ClassSpec = read_json(&spec)?;
            let x = read_seq(&seq)?;
            let mut budget = OptBudget::default();
            common.apply(&mut budget);
            let seed = budget.seed;
            let result = verify::with_pool(|| Engine::new(budget).norm(&spec, &x))??;
            emit(out, &norm_table(seed, &result))?;
            write_json(common.output.as_deref(), &result)?;
            Ok(EXIT_OK)
        }
        Command::Estimate { problem, common } => {
            let mut prob: SummingProblem = read_json(&problem)?;
            common.apply(&mut prob.budget);
            let seed = prob.budget.seed;
            let est = verify::with_pool(|| estimate_lower(&prob))??;
            emit(out, &estimate_table(seed, &prob, &est))?;
            write_json(common.output.as_deref(), &est)?;
            Ok(EXIT_OK)
        }
        Command::Verify { suite, config, samples, common } => {
            let mut cfg: CheckConfig = match &config {
                Some(p) => read_json(p)?,
                None => CheckConfig::default(),
            };
            if let Some(s) = common.seed {
                cfg.seed = s;
            }
            if let Some(n) = samples {
                cfg.samples = n;
            }
            if let Some(s) = common.starts {
                cfg.budget.starts = s;
            }
            if let Some(i) = common.iters {
                cfg.budget.iterations = i;
            }
            if let Some(t) = common.tol {
                cfg.tolerances.optimized = t;
            }
            let ids = parse_suite(&suite)?;
            let report: CheckReport = verify::run_properties(&ids, &cfg)?;
            emit(out, &report.to_table())?;
            write_json(common.output.as_deref(), &report)?;
            Ok(if report.passed { EXIT_OK } else { EXIT_CHECK_FAILED })
        }
    }
}

fn parse_suite(suite: &str) -> Result<Vec<PropertyId>, InputError> {
    if suite.trim().eq_ignore_ascii_case("all") {
        return Ok(PropertyId::ALL.to_vec());
    }
    suite
        .split(',')
        .map(|s| s.trim().parse::<PropertyId>().map_err(|e| InputError(format!("--suite: {e}"))))
        .collect()
}

fn read_text(path: &Path) -> Result<String, InputError> {
    std::fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

/// Parses `path` as `T`, naming the offending field, line and column on failure.
fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let text = read_text(path)?;
    parse_json(&text).map_err(|msg| InputError(format!("{}: {msg}", path.display())))
}

fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, String> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let mut parts = Vec::new();
        if !(field.is_empty() || field == "." || field == "?") {
            parts.push(format!("field `{field}`"));
        }
        if inner.line() > 0 {
            parts.push(format!("line {} column {}", inner.line(), inner.column()));
        }
        // serde_json already appends the position to its own message.
        let msg = inner.to_string();
        let msg = match msg.rfind(" at line ") {
            Some(k) if inner.line() > 0 => msg[..k].to_string(),
            _ => msg,
        };
        parts.push(msg);
        parts.join(", ")
    })?;
    de.end().map_err(|e| format!("line {} column {}: {e}", e.line(), e.column()))?;
    Ok(value)
}

/// A full NSeq document, or a bare rectangular array read as a scalar n-sequence.
fn read_seq(path: &Path) -> Result<NSeq, InputError> {
    let text = read_text(path)?;
    let fail = |msg: String| InputError(format!("{}: {msg}", path.display()));
    let value: Value = parse_json(&text).map_err(fail)?;
    if value.is_array() {
        let dims = crate::json::infer_dims(&value);
        let shape = Shape::new(dims.clone()).map_err(|e| fail(e.to_string()))?;
        let data = crate::json::flatten(&value, &dims, "entries").map_err(|e| fail(e.to_string()))?;
        return NSeq::scalars(shape.bounds().to_vec(), data).map_err(|e| fail(e.to_string()));
    }
    parse_json(&text).map_err(fail)
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), InputError> {
    out.write_all(text.as_bytes()).map_err(|e| InputError(format!("stdout: {e}")))
}

fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<(), InputError> {
    let Some(path) = path else { return Ok(()) };
    let mut text = serde_json::to_string_pretty(value).map_err(|e| InputError(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn norm_table(seed: u64, r: &NormResult) -> String {
    let mut s = format!("# seed {seed}\n");
    s.push_str(&format!("spec       {}\n", r.spec));
    s.push_str(&format!("value      {:.12}\n", r.value));
    s.push_str(&format!("mode       {}\n", mode_name(&r.mode)));
    s.push_str(&format!("converged  {}\n", r.converged));
    if let Some(n) = r.truncation {
        s.push_str(&format!("truncation {n}\n"));
    }
    s
}

fn estimate_table(seed: u64, prob: &SummingProblem, e: &SummingEstimate) -> String {
    let mut s = format!("# seed {seed}\n");
    let inputs: Vec<String> = prob.input_specs.iter().map(ToString::to_string).collect();
    s.push_str(&format!("inputs     {}\n", inputs.join(" ")));
    s.push_str(&format!("output     {}\n", prob.output_spec));
    s.push_str(&format!("caps       {:?}\n", prob.caps()));
    s.push_str(&format!("value      {:.12}\n", e.value));
    s.push_str("bound      lower\n");
    let modes: Vec<&str> = e.modes.iter().map(mode_name).collect();
    s.push_str(&format!("modes      {}\n", modes.join(" ")));
    s.push_str(&format!("converged  {}\n", e.converged));
    for (i, w) in e.witnesses.iter().enumerate() {
        s.push_str(&format!("witness {}  length {}\n", i + 1, w.len()));
    }
    s
}

fn mode_name(m: &crate::seqclass::Mode) -> &'static str {
    match m {
        crate::seqclass::Mode::Exact => "EXACT",
        crate::seqclass::Mode::LowerBound => "LOWER_BOUND",
        crate::seqclass::Mode::UpperBound => "UPPER_BOUND",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_parsing() {
        assert_eq!(parse_suite("all").ok().unwrap().len(), PropertyId::ALL.len());
        let ids = parse_suite("unit_norm, CH1").ok().unwrap();
        assert_eq!(ids, vec![PropertyId::UnitNorm, PropertyId::Ch1]);
        assert!(parse_suite("NOPE").is_err());
    }

    #[test]
    fn json_diagnostics_name_field_and_line() {
        let msg = parse_json::<ClassSpec>("{\n  \"kind\": \"LP\",\n  \"p\": \"two\"\n}").err().unwrap();
        assert!(msg.contains("line 3"), "{msg}");
        let msg = parse_json::<SummingProblem>("{\"operator\": 3}").err().unwrap();
        assert!(msg.contains("operator"), "{msg}");
    }
}
