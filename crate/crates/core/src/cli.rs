//! The `fcmon` command line: `parse`, `run` and `check`.
//!
//! Exit codes: 0 on success or a passing check, 1 when a checked property
//! fails, 2 on usage, I/O, parse or validation errors. Constants given with
//! `--set` take precedence over the scenario file's `[constants]`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use crate::lang::{desugar, parse, pretty_print, ParseErrors};
use crate::monitors::{check_entry, entry, CheckError, CorpusEntry, CorpusError};
use crate::netsim::{parse_literal, render_events, run, ScenarioConfig, ScenarioError, SimError, TraceFormat};

#[derive(Debug, Parser)]
#[command(
    name = "fcmon",
    version,
    about = "Field-calculus interpreter, network simulator and monitor checker"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a program and print its desugared core form.
    Parse {
        #[arg(long)]
        program: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate a program under a scenario and write the trace.
    Run {
        /// Defaults to the scenario's `program` entry, relative to the scenario file.
        #[arg(long)]
        program: Option<PathBuf>,
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: Output,
        /// Append the event structure, its edges and each event's export.
        #[arg(long)]
        dump_events: bool,
    },
    /// Run a corpus entry and compare it with its oracle.
    Check {
        /// Bundled entry name or path to an entry's `.meta.toml`.
        entry: String,
        /// Replace the entry's program.
        #[arg(long)]
        program: Option<PathBuf>,
        /// Replace the entry's scenario.
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Apply the entry's documented single-token mutation.
        #[arg(long)]
        mutate: bool,
        #[command(flatten)]
        overrides: Overrides,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Args)]
pub struct Overrides {
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub rounds: Option<u32>,
    /// Set a constant, e.g. `--set DELAY=5`; repeatable.
    #[arg(long = "set", value_name = "NAME=VALUE")]
    pub set: Vec<String>,
}

#[derive(Debug, Args)]
pub struct Output {
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Records,
}

impl From<Format> for TraceFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Text => TraceFormat::Text,
            Format::Records => TraceFormat::Records,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:\n{errors}")]
    Parse { path: String, errors: ParseErrors },
    #[error("no --program given and the scenario names none")]
    NoProgram,
    #[error("bad --set '{0}': expected NAME=VALUE")]
    Set(String),
    #[error("bad --set value: {0}")]
    SetValue(String),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Check(#[from] CheckError),
}

/// Parse `args` (program name first) and execute, printing to stdout and
/// stderr. Returns the exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_cli_with(args, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_cli`] with explicit output streams.
pub fn run_cli_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{}", e.render());
            return code;
        }
    };
    match execute(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e);
            2
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn emit(text: &str, to: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    match to {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.display().to_string(),
            source,
        }),
        None => out.write_all(text.as_bytes()).map_err(|source| CliError::Io {
            path: "<stdout>".into(),
            source,
        }),
    }
}

fn apply(overrides: &Overrides, cfg: &mut ScenarioConfig) -> Result<(), CliError> {
    if let Some(seed) = overrides.seed {
        cfg.seed = seed;
    }
    if let Some(rounds) = overrides.rounds {
        cfg.rounds = Some(rounds);
    }
    for item in &overrides.set {
        let (name, value) = item.split_once('=').ok_or_else(|| CliError::Set(item.clone()))?;
        let value = parse_literal(value.trim()).map_err(CliError::SetValue)?;
        cfg.set_constant(name.trim(), value);
    }
    cfg.validate()?;
    Ok(())
}

fn resolve_entry(name: &str) -> Result<CorpusEntry, CliError> {
    let path = Path::new(name);
    if name.ends_with(".toml") || path.is_file() {
        Ok(CorpusEntry::from_meta_file(path)?)
    } else {
        Ok(entry(name)?)
    }
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match &cli.command {
        Command::Parse { program, out: to } => {
            let source = read(program)?;
            let parsed = parse(&source).map_err(|errors| CliError::Parse {
                path: program.display().to_string(),
                errors,
            })?;
            let mut text = pretty_print(&desugar(&parsed));
            if !text.ends_with('\n') {
                text.push('\n');
            }
            emit(&text, to.as_deref(), out)?;
            Ok(0)
        }
        Command::Run {
            program,
            scenario,
            overrides,
            output,
            dump_events,
        } => {
            let mut cfg = ScenarioConfig::from_file(scenario)?;
            apply(overrides, &mut cfg)?;
            let program = match (program, &cfg.program) {
                (Some(p), _) => p.clone(),
                (None, Some(rel)) => scenario.parent().unwrap_or(Path::new(".")).join(rel),
                (None, None) => return Err(CliError::NoProgram),
            };
            let source = read(&program)?;
            let loaded =
                crate::lang::load_program(&source, &cfg.constants_map()).map_err(|errors| CliError::Parse {
                    path: program.display().to_string(),
                    errors,
                })?;
            let result = run(&loaded, &cfg)?;
            let format = output.format.into();
            let mut text = result.trace.render(format);
            if *dump_events {
                text.push_str(&render_events(&result.events, &result.exports, format));
            }
            emit(&text, output.out.as_deref(), out)?;
            Ok(0)
        }
        Command::Check {
            entry: name,
            program,
            scenario,
            mutate,
            overrides,
            output,
        } => {
            let mut e = resolve_entry(name)?;
            if let Some(p) = program {
                e.source = read(p)?;
            }
            if *mutate {
                e = e.mutated()?;
            }
            let mut cfg = match scenario {
                Some(p) => ScenarioConfig::from_file(p)?,
                None => e.scenario_config()?,
            };
            apply(overrides, &mut cfg)?;
            let (_, report) = check_entry(&e, &cfg)?;
            emit(&report.render(output.format.into()), output.out.as_deref(), out)?;
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run_cli_with(std::iter::once("fcmon").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn usage_errors_exit_two() {
        assert_eq!(call(&[]).0, 2);
        assert_eq!(call(&["frobnicate"]).0, 2);
        assert_eq!(call(&["run", "--program", "x.fc"]).0, 2);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn check_unknown_and_bad_set() {
        let (code, _, err) = call(&["check", "no-such-entry"]);
        assert_eq!(code, 2);
        assert!(err.contains("no-such-entry"));
        assert_eq!(call(&["check", "parity", "--set", "WIDTH"]).0, 2);
        assert_eq!(call(&["check", "parity", "--set", "WIDTH=nbr{1}"]).0, 2);
    }

    #[test]
    fn check_pass_and_mutant() {
        assert_eq!(call(&["check", "parity"]).0, 0);
        let (code, out, _) = call(&["check", "parity", "--mutate", "--format", "records"]);
        assert_eq!(code, 1);
        assert!(out.lines().last().unwrap().contains("verdict"));
    }
}
