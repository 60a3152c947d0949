//! Experiment driver: spec files in, CSV tables and JSON traces out.
//!
//! ```text
//! covact <generate|solve|bench|roc> <spec.ini> [--stdout] [--traces] [--quiet]
//!        [--sequential] [--section.key=value ...]
//! ```
//!
//! Exit status is 0 when every run reached the residual tolerance, 1 when
//! some run hit the iteration cap or failed, and 2 on configuration or I/O
//! errors.

pub mod output;
pub mod run;
pub mod spec;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};
use covact::parallel::Execution;

use run::{Outcome, RunOptions};
use spec::{ExperimentSpec, Override};

const SECTIONS: [&str; 3] = ["scenario", "solver", "experiment"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Write one scenario container per trial.
    Generate,
    /// Per-trial detection results for each algorithm and threshold.
    Solve,
    /// Sequential timing over the sweep.
    Bench,
    /// Detection rates averaged over trials for each threshold.
    Roc,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Solve => "solve",
            Command::Bench => "bench",
            Command::Roc => "roc",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "covact", version, about = "Covariance-based activity detection experiments")]
#[command(after_help = "Any spec key can be overridden as --section.key=value, e.g. --scenario.antennas=128.")]
pub struct Cli {
    pub command: Command,
    /// Spec file (INI with [scenario], [solver] and [experiment] sections).
    pub spec: PathBuf,
    /// Write the CSV to standard output instead of the output directory.
    #[arg(long)]
    pub stdout: bool,
    /// Also write per-run residual, objective and active-set traces (JSON lines).
    #[arg(long)]
    pub traces: bool,
    /// No progress messages.
    #[arg(long, short)]
    pub quiet: bool,
    /// Run untimed trials on one thread.
    #[arg(long)]
    pub sequential: bool,
}

/// Splits `--section.key=value` overrides from the arguments clap handles.
pub fn split_overrides(args: impl IntoIterator<Item = String>) -> Result<(Vec<String>, Vec<Override>)> {
    let mut rest = Vec::new();
    let mut overrides = Vec::new();
    for arg in args {
        let is_override = arg
            .strip_prefix("--")
            .and_then(|a| a.split_once('.'))
            .is_some_and(|(section, _)| SECTIONS.contains(&section));
        if is_override {
            overrides.push(arg.parse()?);
        } else {
            rest.push(arg);
        }
    }
    Ok((rest, overrides))
}

/// Runs the CLI on `args` (program name first) and returns the exit status.
pub fn run_cli(args: impl IntoIterator<Item = String>) -> i32 {
    let result = split_overrides(args).and_then(|(rest, overrides)| {
        let cli = match Cli::try_parse_from(rest) {
            Ok(cli) => cli,
            Err(e) => {
                let _ = e.print();
                return Ok(if e.use_stderr() { 2 } else { 0 });
            }
        };
        execute(&cli, &overrides)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            2
        }
    }
}

fn execute(cli: &Cli, overrides: &[Override]) -> Result<i32> {
    let spec = ExperimentSpec::load(&cli.spec, overrides)?;
    let opts = RunOptions {
        quiet: cli.quiet,
        traces: cli.traces,
        execution: if cli.sequential { Execution::Sequential } else { Execution::Parallel },
    };
    let outcome = match cli.command {
        Command::Generate => run::cmd_generate(&spec, &opts)?,
        Command::Solve => run::cmd_solve(&spec, &opts)?,
        Command::Bench => run::cmd_bench(&spec, &opts)?,
        Command::Roc => run::cmd_roc(&spec, &opts)?,
    };
    if cli.command != Command::Generate {
        write_outputs(cli, &spec, &outcome)?;
    }
    if !outcome.success() {
        eprintln!("{} run(s) did not reach the residual tolerance", outcome.incomplete_runs);
        return Ok(1);
    }
    Ok(0)
}

fn create(path: &PathBuf) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn write_table(cli: &Cli, outcome: &Outcome, w: impl Write) -> Result<()> {
    match cli.command {
        Command::Bench => output::write_bench(w, &outcome.bench),
        _ => output::write_results(w, &outcome.results),
    }
}

fn write_outputs(cli: &Cli, spec: &ExperimentSpec, outcome: &Outcome) -> Result<()> {
    let stem = format!("{}_{}", spec.name, cli.command.name());
    if cli.stdout {
        write_table(cli, outcome, std::io::stdout().lock())?;
    } else {
        let path = spec.output_dir.join(format!("{stem}.csv"));
        write_table(cli, outcome, create(&path)?).with_context(|| format!("writing {}", path.display()))?;
        if !cli.quiet {
            eprintln!("wrote {}", path.display());
        }
    }
    if cli.traces {
        let path = spec.output_dir.join(format!("{stem}_traces.jsonl"));
        output::write_traces(create(&path)?, &outcome.traces).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}
