// SPDX-License-Identifier: Apache-2.0

//! `ledp`: run private k-core and triangle-counting experiments and write
//! tidy metric rows.
//!
//! Exit status is 0 on success (skipped runs included), 1 for configuration
//! errors and 2 when any run timed out or failed.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use ledp_core::experiment::{run_experiment, Algo, ExperimentReport, RunConfig, RunRecord};
use ledp_core::fixtures;
use ledp_core::kcore::LevelBias;
use ledp_core::Graph;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BiasMode {
    Literal,
    Capped,
    Off,
}

impl From<BiasMode> for LevelBias {
    fn from(m: BiasMode) -> Self {
        match m {
            BiasMode::Literal => LevelBias::Literal,
            BiasMode::Capped => LevelBias::Capped,
            BiasMode::Off => LevelBias::Off,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ledp", version, about = "Edge-private k-core and triangle-counting experiments")]
struct Cli {
    /// kcored, kcore-baseline, kcore-rr, tcount or tcount-rr.
    #[arg(long, value_parser = parse_algo)]
    algo: Algo,

    /// Edge list or binary cache file, or a built-in graph such as
    /// `builtin:petersen`, `builtin:complete:6` or `builtin:gnp:200:0.05:7`.
    #[arg(long)]
    dataset: String,

    /// Name written to the dataset column; defaults to the file stem.
    #[arg(long)]
    name: Option<String>,

    /// Privacy budgets to sweep, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1.0")]
    eps: Vec<f64>,

    /// Share of ε spent on level moving.
    #[arg(long, short = 'f', default_value_t = 0.8)]
    fraction: f64,

    /// Threshold bias b.
    #[arg(long, short = 'b', default_value_t = 8.0)]
    bias: f64,

    #[arg(long, default_value_t = 3.625)]
    eta: f64,

    #[arg(long, short = 'M', default_value_t = 8)]
    workers: usize,

    #[arg(long, env = "LEDP_SEED", default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 5)]
    runs: u64,

    /// Wall-clock limit per run, in seconds.
    #[arg(long, default_value_t = 14_400.0)]
    timeout: f64,

    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Output file; standard output when omitted.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,

    /// Regenerate randomized-response bits on demand instead of storing the matrix.
    #[arg(long)]
    rr_row_streaming: bool,

    #[arg(long, value_enum, default_value_t = BiasMode::Literal)]
    level_bias: BiasMode,

    /// Replace every noise draw by zero (budgets are still charged).
    #[arg(long)]
    noiseless: bool,

    /// Directory for per-run estimate files.
    #[arg(long, value_name = "DIR")]
    dump_estimates: Option<PathBuf>,

    /// Directory for per-run privacy ledger dumps.
    #[arg(long, value_name = "DIR")]
    ledger_dump: Option<PathBuf>,

    /// Directory for per-round level snapshots.
    #[arg(long, value_name = "DIR")]
    lds_trace: Option<PathBuf>,
}

fn parse_algo(s: &str) -> Result<Algo, String> {
    s.parse().map_err(|e: ledp_core::experiment::ExperimentError| e.to_string())
}

fn builtin(spec: &str) -> Result<Graph> {
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |i: usize| -> Result<&str> {
        parts.get(i).copied().with_context(|| format!("built-in graph {spec:?} is missing a parameter"))
    };
    Ok(match parts[0] {
        "petersen" => fixtures::petersen(),
        "layered" => fixtures::layered_cores(),
        "complete" => fixtures::complete(num(1)?.parse()?),
        "cycle" => fixtures::cycle(num(1)?.parse()?),
        "gnp" => fixtures::gnp(num(1)?.parse()?, num(2)?.parse()?, num(3)?.parse()?),
        other => bail!("unknown built-in graph {other:?}"),
    })
}

fn load_dataset(cli: &Cli) -> Result<(Graph, String)> {
    if let Some(spec) = cli.dataset.strip_prefix("builtin:") {
        let g = builtin(spec)?;
        return Ok((g, cli.name.clone().unwrap_or_else(|| spec.replace(':', "-"))));
    }
    let path = Path::new(&cli.dataset);
    let g = Graph::load(path).with_context(|| format!("cannot load dataset {}", path.display()))?;
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    Ok((g, cli.name.clone().or(stem).unwrap_or_else(|| cli.dataset.clone())))
}

fn run_config(cli: &Cli, dataset: String) -> Result<RunConfig> {
    if !(cli.timeout.is_finite() && cli.timeout > 0.0) {
        bail!("timeout must be a positive number of seconds, got {}", cli.timeout);
    }
    Ok(RunConfig {
        algo: cli.algo,
        dataset,
        eps: cli.eps.clone(),
        fraction: cli.fraction,
        bias: cli.bias,
        eta: cli.eta,
        workers: cli.workers,
        seed: cli.seed,
        runs: cli.runs,
        timeout: Some(Duration::from_secs_f64(cli.timeout)),
        level_bias: cli.level_bias.into(),
        streaming: cli.rr_row_streaming,
        noise: !cli.noiseless,
        keep_estimates: cli.dump_estimates.is_some(),
        keep_ledger: cli.ledger_dump.is_some(),
        keep_trace: cli.lds_trace.is_some(),
    })
}

fn write_artifact(dir: &Path, algo: Algo, rec: &RunRecord, kind: &str, value: &impl serde::Serialize) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(format!("{algo}_eps{}_run{}_{kind}.json", rec.eps, rec.run));
    let file = File::create(&path).with_context(|| format!("cannot create {}", path.display()))?;
    serde_json::to_writer(BufWriter::new(file), value)?;
    Ok(())
}

fn write_artifacts(cli: &Cli, report: &ExperimentReport) -> Result<()> {
    for rec in &report.runs {
        let a = &rec.artifacts;
        if let (Some(dir), Some(x)) = (&cli.dump_estimates, &a.estimates) {
            write_artifact(dir, cli.algo, rec, "estimates", x)?;
        }
        if let (Some(dir), Some(x)) = (&cli.ledger_dump, &a.ledger) {
            write_artifact(dir, cli.algo, rec, "ledger", x)?;
        }
        if let (Some(dir), Some(x)) = (&cli.lds_trace, &a.trace) {
            write_artifact(dir, cli.algo, rec, "levels", x)?;
        }
    }
    Ok(())
}

fn write_report(cli: &Cli, report: &ExperimentReport) -> Result<()> {
    let out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match cli.format {
        Format::Csv => report.write_csv(out)?,
        Format::Json => report.write_json(out)?,
    }
    Ok(())
}

/// Everything that can go wrong before the first run starts.
fn prepare(cli: &Cli) -> Result<(Graph, RunConfig)> {
    let (g, name) = load_dataset(cli)?;
    let cfg = run_config(cli, name)?;
    cfg.validate(&g)?;
    Ok((g, cfg))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let (g, cfg) = match prepare(&cli) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(1);
        }
    };
    let result = run_experiment(&g, &cfg)
        .map_err(anyhow::Error::from)
        .and_then(|report| {
            write_report(&cli, &report)?;
            write_artifacts(&cli, &report)?;
            Ok(report)
        });
    match result {
        Ok(report) => {
            let mut failed = false;
            for rec in &report.runs {
                if let Some(msg) = &rec.message {
                    eprintln!("eps={} run={}: {}: {msg}", rec.eps, rec.run, rec.status.label());
                }
                failed |= rec.status.is_failure();
            }
            if failed {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
