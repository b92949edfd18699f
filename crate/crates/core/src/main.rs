use std::ops::Range;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use optomem::config::Config;
use optomem::experiments::{run_experiment, Experiment, ExperimentError, Manifest};

#[derive(Parser, Debug)]
#[command(name = "optomem", version, about = "Electro-optical memristor simulator")]
struct Cli {
    #[command(flatten)]
    opts: Overrides,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// TOML config file; flags below take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, env = "OPTOMEM_OUT_DIR", default_value = "optomem-out")]
    out: PathBuf,
    /// Run each seed in `a..b` (end exclusive) into `<out>/seed-<n>`.
    #[arg(long, global = true, value_parser = parse_seed_range)]
    seeds: Option<Range<u64>>,
    /// Illumination for the I-V sweep (W).
    #[arg(long, global = true)]
    power: Option<f64>,
    /// Target wavelength for the cavity design (nm).
    #[arg(long, global = true)]
    target: Option<f64>,
    /// Number of maze training trials.
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Device profile for the I-V sweep and latency statistics.
    #[arg(long, global = true)]
    profile: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    IvSweep,
    LatencyStats,
    CavityDesign,
    MazeTrain,
    Xor,
    /// Run an experiment by name (iv_sweep, latency_stats, cavity_design, maze_train, xor).
    Run {
        experiment: Experiment,
    },
    /// Print the effective configuration as TOML.
    PrintConfig,
}

fn parse_seed_range(s: &str) -> Result<Range<u64>, String> {
    let (a, b) = s.split_once("..").ok_or("expected a..b")?;
    let a: u64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    if a >= b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok(a..b)
}

fn build_config(o: &Overrides) -> Result<Config, ExperimentError> {
    let mut c = match &o.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = o.seed {
        c.seed = seed;
    }
    if let Some(p) = o.power {
        c.iv_sweep.power = p;
    }
    if let Some(t) = o.target {
        c.cavity_design.target_nm = t;
    }
    if let Some(n) = o.trials {
        c.maze_train.trials = n;
    }
    if let Some(p) = &o.profile {
        c.iv_sweep.profile = p.clone();
        c.latency_stats.profile = p.clone();
    }
    c.validate()?;
    Ok(c)
}

fn run(experiment: Experiment, o: &Overrides) -> Result<(), ExperimentError> {
    let config = build_config(o)?;
    match &o.seeds {
        None => report(&run_experiment(experiment, &config, &o.out)?, &o.out),
        Some(range) => {
            let results: Vec<_> = range
                .clone()
                .into_par_iter()
                .map(|seed| {
                    let cfg = Config { seed, ..config.clone() };
                    let dir = o.out.join(format!("seed-{seed}"));
                    run_experiment(experiment, &cfg, &dir).map(|m| (m, dir))
                })
                .collect();
            for r in results {
                let (m, dir) = r?;
                report(&m, &dir);
            }
        }
    }
    Ok(())
}

fn report(m: &Manifest, dir: &Path) {
    println!("{} seed={} -> {}", m.experiment, m.seed, dir.display());
    println!("{}", serde_json::to_string(&m.summary).unwrap_or_default());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::PrintConfig => build_config(&cli.opts).map(|c| print!("{}", c.to_toml())),
        Command::IvSweep => run(Experiment::IvSweep, &cli.opts),
        Command::LatencyStats => run(Experiment::LatencyStats, &cli.opts),
        Command::CavityDesign => run(Experiment::CavityDesign, &cli.opts),
        Command::MazeTrain => run(Experiment::MazeTrain, &cli.opts),
        Command::Xor => run(Experiment::Xor, &cli.opts),
        Command::Run { experiment } => run(experiment, &cli.opts),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
