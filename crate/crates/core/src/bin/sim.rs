use std::path::PathBuf;
use std::process::ExitCode;

use beamspace_noma::harness::config::{parse_list, parse_schemes};
use beamspace_noma::harness::{run_to_files, Mode, SystemConfig};
use clap::{Args, Parser, Subcommand};

/// Beamspace MIMO-NOMA Monte Carlo runner.
#[derive(Parser)]
#[command(name = "sim", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Every scheme over an SNR grid.
    SweepSnr(Flags),
    /// Every scheme over a list of user counts.
    SweepUsers(Flags),
    /// Per-iteration sum rate of the power allocation.
    Convergence(Flags),
    /// Per-user rates under a minimum rate (1 bps/Hz at 20 dB unless set).
    Fairness(Flags),
}

#[derive(Args)]
struct Flags {
    /// Flat `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// `start:stop:step` in dB, or a single value.
    #[arg(long)]
    snr: Option<String>,
    /// Comma-separated user counts.
    #[arg(long)]
    users: Option<String>,
    /// Comma-separated: noma, fully-digital, beamspace-mimo, oma, or all.
    #[arg(long)]
    schemes: Option<String>,
    /// Equivalent channel: strongest or svd.
    #[arg(long)]
    variant: Option<String>,
    /// Minimum per-user rate in bps/Hz.
    #[arg(long)]
    rmin: Option<f64>,
    /// Iteration cap of the power allocation.
    #[arg(long)]
    iters: Option<usize>,
    /// Record CSV path; the JSON summary is written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(mode: Mode, flags: &Flags) -> beamspace_noma::Result<SystemConfig> {
    let mut cfg = match &flags.config {
        Some(path) => SystemConfig::load(path)?,
        None => SystemConfig::default(),
    };
    if mode == Mode::Fairness {
        if flags.rmin.is_none() && cfg.min_rate == 0.0 {
            cfg.min_rate = 1.0;
        }
        if flags.snr.is_none() && flags.config.is_none() {
            cfg.snr = "20".parse()?;
        }
    }
    if matches!(mode, Mode::SweepUsers | Mode::Convergence) && flags.snr.is_none() && flags.config.is_none() {
        cfg.snr = "10".parse()?;
    }
    if let Some(v) = flags.seed {
        cfg.seed = v;
    }
    if let Some(v) = flags.trials {
        cfg.trials = v;
    }
    if let Some(v) = &flags.snr {
        cfg.snr = v.parse()?;
    }
    if let Some(v) = &flags.users {
        cfg.users = parse_list("users", v)?;
    }
    if let Some(v) = &flags.schemes {
        cfg.schemes = parse_schemes(v)?;
    }
    if let Some(v) = &flags.variant {
        cfg.variant = v.parse()?;
    }
    if let Some(v) = flags.rmin {
        cfg.min_rate = v;
    }
    if let Some(v) = flags.iters {
        cfg.max_iterations = v;
    }
    if let Some(v) = &flags.out {
        cfg.out = Some(v.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(mode: Mode, flags: &Flags) -> beamspace_noma::Result<()> {
    let cfg = build_config(mode, flags)?;
    let out = cfg
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", mode.as_str())));
    let (result, paths) = run_to_files(&cfg, mode, &out)?;
    for row in &result.summary {
        println!(
            "k={:<3} snr={:>5.1} dB {:<15} se={:8.3} (+-{:.3}) ee={:8.3} dropped={}",
            row.k, row.snr_db, row.scheme, row.mean_se, row.stderr_se, row.mean_ee, row.dropped
        );
    }
    eprintln!("wrote {}", paths.records.display());
    eprintln!("wrote {}", paths.summary.display());
    if let Some(extra) = &paths.extra {
        eprintln!("wrote {}", extra.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, flags) = match &cli.command {
        Command::SweepSnr(f) => (Mode::SweepSnr, f),
        Command::SweepUsers(f) => (Mode::SweepUsers, f),
        Command::Convergence(f) => (Mode::Convergence, f),
        Command::Fairness(f) => (Mode::Fairness, f),
    };
    match run(mode, flags) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
