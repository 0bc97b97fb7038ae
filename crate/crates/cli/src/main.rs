use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use ostar_vlc::experiments::{
    load_config, optimize_cell, run_oracle, run_scenario, summarize, write_oracle_rows, write_outputs,
    ExperimentConfig, ScenarioId,
};

#[derive(Parser)]
#[command(name = "ostar-vlc", version, about = "Two-room VLC with a mirror/LC relay panel: sweeps and optimizer checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write its CSV, summary and metadata.
    Run(RunArgs),
    /// Parse and validate a JSON config without running anything.
    ValidateConfig { path: PathBuf },
    /// Compare the optimizer against an exhaustive lattice search.
    Oracle(OracleArgs),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: ScenarioId,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the optimizer trace of trial 0, first series, first swept value.
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct OracleArgs {
    #[command(flatten)]
    common: Common,
    /// Number of frozen scenes per scheme.
    #[arg(long, default_value_t = 5)]
    scenes: usize,
    /// Lattice points per axis.
    #[arg(long, default_value_t = 21)]
    points: usize,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => load_config(path)?,
            None => ExperimentConfig::default(),
        };
        cfg.scenario = self.scenario;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = args.common.config()?;
    if let Some(trials) = args.trials {
        cfg.trials = trials;
    }
    if let Some(out) = args.out {
        cfg.out_dir = Some(out);
    }
    cfg.validate()?;
    let out_dir = cfg.out_dir.clone().unwrap_or_else(|| PathBuf::from("results"));

    let rows = run_scenario(&cfg)?;
    let files = write_outputs(&cfg, &rows, &out_dir)
        .with_context(|| format!("writing results to {}", out_dir.display()))?;
    for s in summarize(&rows) {
        println!(
            "{:<18} {:>8} sum rate {:.6e} ± {:.2e} b/s   SEE {:.6e} b/J",
            s.scheme, s.swept_value, s.sum_rate_mean, s.sum_rate_stderr, s.see_mean
        );
    }
    println!("wrote {}", files.rows.display());

    if let Some(path) = args.trace {
        let (_, outcome) = optimize_cell(&cfg, 0, 0, 0)?;
        write_file(&path, |f| Ok(outcome.write_trace_csv(f)?))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn write_file(path: &Path, body: impl FnOnce(fs::File) -> Result<()>) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    let f = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    body(f)
}

fn oracle(args: OracleArgs) -> Result<()> {
    let cfg = args.common.config()?;
    let rows = run_oracle(&cfg, args.scenes, args.points)?;
    match &args.out {
        Some(path) => write_file(path, |f| Ok(write_oracle_rows(&rows, f)?))?,
        None => write_oracle_rows(&rows, io::stdout().lock())?,
    }
    let worst = rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
    eprintln!("{} comparisons, worst optimizer/lattice ratio {worst:.6}", rows.len());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::ValidateConfig { path } => load_config(&path).map(|cfg| {
            println!("{}: ok ({} trials, scenario {})", path.display(), cfg.trials, cfg.scenario);
        }).map_err(Into::into),
        Command::Oracle(args) => oracle(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
