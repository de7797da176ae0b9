//! `anonqcd`: run change-detection experiments from config files.

mod commands;
mod config;
mod error;
mod plot;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{ExperimentConfig, RawConfig};
use crate::error::CliError;

#[derive(Parser, Debug)]
#[command(name = "anonqcd", version, about = "Quickest change detection with anonymized sensor samples")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write one statistic trajectory and its plot.
    Path(RunArgs),
    /// WADD and WARL over a threshold grid, per detector.
    Sweep(RunArgs),
    /// Threshold guaranteeing a target run length for the efficient test.
    Calibrate(RunArgs),
    /// Per-step wall-clock time over a ladder of network sizes.
    Bench(RunArgs),
    /// Shipped experiment configurations.
    Presets {
        #[command(subcommand)]
        action: PresetAction,
    },
}

#[derive(Subcommand, Debug)]
enum PresetAction {
    /// Print preset names and titles.
    List,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// Config file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Shipped preset name (see `presets list`).
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory; created if missing.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for replications.
    #[arg(long)]
    threads: Option<usize>,
    /// Replications per sweep point.
    #[arg(long)]
    reps: Option<usize>,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let text = match (&args.config, &args.preset) {
        (Some(path), _) => std::fs::read_to_string(path)?,
        (None, Some(name)) => presets::find(name)
            .ok_or_else(|| CliError::Usage(format!("unknown preset `{name}`")))?
            .to_string(),
        (None, None) => return Err(CliError::Usage("give --config <file> or --preset <name>".into())),
    };
    let mut raw = RawConfig::parse(&text)?;
    if let Some(seed) = args.seed {
        raw.set("seed", seed.to_string())?;
    }
    if let Some(out) = &args.out {
        raw.set("out", out.to_string_lossy())?;
    }
    if let Some(threads) = args.threads {
        raw.set("threads", threads.to_string())?;
    }
    if let Some(reps) = args.reps {
        raw.set("sweep.reps", reps.to_string())?;
    }
    let cfg = ExperimentConfig::from_raw(&raw)?;
    if let Some(k) = cfg.threads {
        // fails only if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(cfg)
}

fn print_written(paths: &[PathBuf]) {
    for p in paths {
        println!("wrote {}", p.display());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Path(args) => print_written(&commands::cmd_path(&load(&args)?)?),
        Command::Sweep(args) => print_written(&commands::cmd_sweep(&load(&args)?)?),
        Command::Bench(args) => print_written(&commands::cmd_bench(&load(&args)?)?),
        Command::Calibrate(args) => {
            let (cal, paths) = commands::cmd_calibrate(&load(&args)?)?;
            println!("b = {}", cal.threshold_b);
            println!("h = {}", cal.h);
            println!("guaranteed_warl = {}", cal.guaranteed_warl);
            println!("conservative = {}", cal.conservative_flag);
            print_written(&paths);
        }
        Command::Presets { action: PresetAction::List } => {
            for (name, text) in presets::PRESETS {
                println!("{name:<6} {}", presets::title(text));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.kind());
            ExitCode::FAILURE
        }
    }
}
