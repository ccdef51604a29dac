//! `simulate`: runs one rate sweep and writes its CSV and run manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result, bail};
use clap::Parser;
use irs_antijam::disco::{clt_diagnostics, write_clt_csv};
use irs_antijam::harness::{self, BenchmarkId, SweepKind};
use irs_antijam::rng::{stream_rng, tag};
use irs_antijam::scenario::{Profile, ScenarioConfig, build_geometry};

/// DIRS sizes covered by the CLT diagnostics, besides the configured one.
const CLT_SMALL_DIRS: usize = 64;
const CLT_DRAWS: usize = 1000;

#[derive(Debug, Parser)]
#[command(name = "simulate", version, about = "Ergodic-rate sweeps for IRS anti-jamming precoding")]
struct Cli {
    /// Scenario file (TOML) applied on top of the profile.
    #[arg(long)]
    config: PathBuf,
    /// Swept variable.
    #[arg(long, value_parser = parse_sweep)]
    sweep: SweepKind,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value = "desk", value_parser = parse_profile)]
    profile: Profile,
    /// Comma-separated benchmark list (default: all five).
    #[arg(long, value_delimiter = ',', value_parser = parse_benchmark)]
    benchmarks: Option<Vec<BenchmarkId>>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Comma-separated grid values replacing the sweep's default grid.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    grid: Option<Vec<f64>>,
    /// Also write the RCG trace of trial 0 and CLT diagnostics.
    #[arg(long)]
    emit_diagnostics: bool,
}

fn parse_sweep(s: &str) -> Result<SweepKind, String> {
    s.parse().map_err(|e: irs_antijam::Error| e.to_string())
}

fn parse_profile(s: &str) -> Result<Profile, String> {
    s.parse().map_err(|e: irs_antijam::Error| e.to_string())
}

fn parse_benchmark(s: &str) -> Result<BenchmarkId, String> {
    s.trim().parse().map_err(|e: irs_antijam::Error| e.to_string())
}

fn load_config(cli: &Cli) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(&cli.config)
        .with_context(|| format!("cannot read scenario file {}", cli.config.display()))?;
    let mut cfg = ScenarioConfig::parse_overrides(&ScenarioConfig::for_profile(cli.profile), &text)
        .with_context(|| format!("invalid scenario file {}", cli.config.display()))?;
    if let Some(t) = cli.trials {
        cfg.trials = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_diagnostics(cfg: &ScenarioConfig, kind: SweepKind, grid: &[f64], out: &Path) -> Result<()> {
    let first = kind.apply(cfg, grid[0])?;
    let outcome = harness::run_trial(&first, 0, &[BenchmarkId::Proposed])?;
    if let Some(trace) = &outcome.rcg_trace {
        trace.write_csv(&out.join("rcg_trace.csv"))?;
    }

    let mut sizes = vec![CLT_SMALL_DIRS, cfg.n_dirs];
    sizes.dedup();
    let mut reports = Vec::with_capacity(sizes.len());
    for n_dirs in sizes {
        let mut c = cfg.clone();
        c.n_dirs = n_dirs;
        let g = build_geometry(&c, &mut stream_rng(cfg.seed, &[tag::GEOMETRY]))?;
        let mut rng = stream_rng(cfg.seed, &[tag::DIAGNOSTICS, n_dirs as u64]);
        reports.push(clt_diagnostics(&c, &g, CLT_DRAWS, &mut rng)?);
    }
    write_clt_csv(&out.join("clt_diagnostics.csv"), &reports)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let cfg = load_config(&cli)?;
    let grid = cli.grid.clone().unwrap_or_else(|| cli.sweep.default_grid());
    if grid.is_empty() {
        bail!("sweep grid is empty");
    }
    let benchmarks = cli.benchmarks.clone().unwrap_or_else(|| BenchmarkId::ALL.to_vec());
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));

    let report = harness::sweep(cli.sweep, &grid, &cfg, &benchmarks, workers)?;
    fs::create_dir_all(&cli.out).with_context(|| format!("cannot create {}", cli.out.display()))?;
    let csv_path = cli.out.join(format!("{}.csv", cli.sweep.as_str()));
    harness::emit_report(&report, &csv_path)?;
    if cli.emit_diagnostics {
        write_diagnostics(&cfg, cli.sweep, &grid, &cli.out)?;
    }

    for p in &report.points {
        println!(
            "{} {:>8} {:<15} {:.4} ± {:.4}",
            report.sweep, p.value, p.benchmark, p.mean_rate, p.stderr
        );
    }
    println!("wrote {}", csv_path.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
