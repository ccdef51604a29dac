//! Monte Carlo campaigns over the five benchmarks.
//!
//! Every trial derives its random streams from `(seed, trial index, purpose)`
//! only, so all benchmarks and all grid points of a sweep see the same users,
//! channels and DIRS draws, and results do not depend on the worker count.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::channels::{draw_channel_set, ChannelSet};
use crate::disco::{AcaStatistics, DirsDraws, PhaseDistribution, ReflectionVector};
use crate::error::{invalid, Error, Result};
use crate::manifold::{optimize_irs, project_discrete, rcg_optimize, IrsDesign, PassiveProblem, RcgTrace};
use crate::precoding::{anti_jamming_precoder, effective_channels, sjnr_from_draws, PrecoderMatrix};
use crate::rng::{stream_rng, tag, SimRng};
use crate::scenario::{build_geometry, distance, pathloss_gain, GeometryLayout, LinkKind, ScenarioConfig};

pub const VERSION: &str = concat!("irs-antijam ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BenchmarkId {
    NoJamming,
    Proposed,
    Ajp,
    FpjNoDefense,
    ActiveJammer,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 5] = [
        BenchmarkId::NoJamming,
        BenchmarkId::Proposed,
        BenchmarkId::Ajp,
        BenchmarkId::FpjNoDefense,
        BenchmarkId::ActiveJammer,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BenchmarkId::NoJamming => "no-jamming",
            BenchmarkId::Proposed => "proposed",
            BenchmarkId::Ajp => "ajp",
            BenchmarkId::FpjNoDefense => "fpj-no-defense",
            BenchmarkId::ActiveJammer => "active-jammer",
        }
    }

    /// Parses a comma-separated list, keeping the given order and dropping repeats.
    pub fn parse_list(s: &str) -> Result<Vec<BenchmarkId>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let id: BenchmarkId = part.parse()?;
            if !out.contains(&id) {
                out.push(id);
            }
        }
        if out.is_empty() {
            return Err(invalid("benchmark list is empty"));
        }
        Ok(out)
    }

    fn uses_optimized_irs(self) -> bool {
        matches!(self, BenchmarkId::NoJamming | BenchmarkId::Proposed | BenchmarkId::ActiveJammer)
    }

    fn dirs_active(self) -> bool {
        matches!(self, BenchmarkId::Proposed | BenchmarkId::Ajp | BenchmarkId::FpjNoDefense)
    }

    fn loads_aca(self) -> bool {
        matches!(self, BenchmarkId::Proposed | BenchmarkId::Ajp)
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BenchmarkId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkId::ALL
            .into_iter()
            .find(|b| b.as_str() == s)
            .ok_or_else(|| invalid(format!("unknown benchmark `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    /// Transmit power per user, dBm.
    Power,
    /// Number of IRS elements.
    NIrs,
    /// IRS phase quantization bits.
    Bits,
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepKind::Power => "power",
            SweepKind::NIrs => "n-irs",
            SweepKind::Bits => "bits",
        }
    }

    pub fn default_grid(self) -> Vec<f64> {
        match self {
            SweepKind::Power => vec![-10.0, -5.0, 0.0, 5.0, 10.0],
            SweepKind::NIrs => vec![32.0, 64.0, 128.0],
            SweepKind::Bits => vec![1.0, 2.0, 3.0, 4.0],
        }
    }

    /// Copy of `base` with the sweep variable set to `value`.
    pub fn apply(self, base: &ScenarioConfig, value: f64) -> Result<ScenarioConfig> {
        let mut cfg = base.clone();
        let count = |v: f64| {
            if v >= 1.0 && v.fract() == 0.0 && v < 1e9 {
                Ok(v as usize)
            } else {
                Err(invalid(format!("{} grid value {v} is not a positive integer", self.as_str())))
            }
        };
        match self {
            SweepKind::Power => {
                if !value.is_finite() {
                    return Err(invalid(format!("power grid value {value} is not finite")));
                }
                cfg.set_power_per_user_dbm(value);
            }
            SweepKind::NIrs => cfg.n_irs = count(value)?,
            SweepKind::Bits => cfg.irs_alphabet_bits = count(value)? as u32,
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SweepKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "power" => Ok(SweepKind::Power),
            "n-irs" => Ok(SweepKind::NIrs),
            "bits" => Ok(SweepKind::Bits),
            _ => Err(invalid(format!("unknown sweep `{s}` (power|n-irs|bits)"))),
        }
    }
}

/// Rates of one trial, in the order of the requested benchmarks.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialOutcome {
    pub trial: usize,
    /// Ergodic SJNR rate per user, bits/s/Hz.
    pub rates: Vec<(BenchmarkId, f64)>,
    /// Trace of the passive design, when one ran.
    pub rcg_trace: Option<RcgTrace>,
}

impl TrialOutcome {
    pub fn rate(&self, id: BenchmarkId) -> Option<f64> {
        self.rates.iter().find(|(b, _)| *b == id).map(|(_, r)| *r)
    }
}

fn trial_rng(config: &ScenarioConfig, trial: usize, purpose: u64) -> SimRng {
    stream_rng(config.seed, &[tag::TRIAL, trial as u64, purpose])
}

/// User drop for a trial; frozen drops reuse trial 0's stream.
pub fn trial_geometry(config: &ScenarioConfig, trial: usize) -> Result<GeometryLayout> {
    let mut rng = if config.freeze_users {
        stream_rng(config.seed, &[tag::GEOMETRY])
    } else {
        trial_rng(config, trial, tag::GEOMETRY)
    };
    build_geometry(config, &mut rng)
}

pub fn trial_channels(config: &ScenarioConfig, geometry: &GeometryLayout, trial: usize) -> Result<ChannelSet<f64>> {
    draw_channel_set(config, geometry, &mut trial_rng(config, trial, tag::CHANNELS))
}

/// Optimized IRS design of a trial.
fn design_irs(
    config: &ScenarioConfig,
    channels: &ChannelSet<f64>,
    trial: usize,
) -> Result<IrsDesign<f64>> {
    let problem = PassiveProblem::effective_power(channels)?;
    optimize_irs(
        &problem,
        &config.rcg,
        &config.irs_phase_alphabet()?,
        &mut trial_rng(config, trial, tag::IRS_INIT),
    )
}

fn alternate(
    config: &ScenarioConfig,
    channels: &ChannelSet<f64>,
    design: &IrsDesign<f64>,
    beta_est: &[f64],
    noise: f64,
    power: f64,
) -> Result<(ReflectionVector<f64>, PrecoderMatrix<f64>)> {
    let alphabet = config.irs_phase_alphabet()?;
    let mut continuous = design.continuous.clone();
    let mut discrete = design.discrete.clone();
    let mut w = anti_jamming_precoder(&effective_channels(channels, Some(&discrete))?, beta_est, noise, power)?;
    for _ in 0..config.alternating_rounds {
        let problem = PassiveProblem::signal_power(channels, &w)?;
        let (v, _) = rcg_optimize(&problem, &config.rcg, &continuous)?;
        continuous = v;
        discrete = project_discrete(&continuous, &alphabet);
        w = anti_jamming_precoder(&effective_channels(channels, Some(&discrete))?, beta_est, noise, power)?;
    }
    Ok((discrete, w))
}

/// Received active-jamming power `P_J·|g_k|²` per user.
fn active_jamming_power(config: &ScenarioConfig, geometry: &GeometryLayout, trial: usize) -> Result<Vec<f64>> {
    let p_j = config.jammer_power_watts();
    let mut rng = trial_rng(config, trial, tag::JAMMER);
    geometry
        .users
        .iter()
        .map(|u| {
            let g: num_complex::Complex<f64> = crate::rng::complex_normal(&mut rng);
            let d = distance(&config.jammer_position, u);
            Ok(p_j * pathloss_gain(LinkKind::NlosLike, d)? * g.norm_sqr())
        })
        .collect()
}

/// Runs one trial of every requested benchmark on shared draws.
pub fn run_trial(config: &ScenarioConfig, trial: usize, benchmarks: &[BenchmarkId]) -> Result<TrialOutcome> {
    let geometry = trial_geometry(config, trial)?;
    let channels = trial_channels(config, &geometry, trial)?;
    let noise = config.noise_power_watts()?;
    let power = config.power_budget_watts();
    let users = config.n_users;
    let aca = AcaStatistics::from_large_scale(&channels.large_scale, channels.n_dirs());
    let beta_est: Vec<f64> = aca.beta.iter().map(|b| b * config.beta_estimate_scale).collect();
    let zeros = vec![0.0; users];

    let design = if benchmarks.iter().any(|b| b.uses_optimized_irs()) {
        Some(design_irs(config, &channels, trial)?)
    } else {
        None
    };
    let baseline_irs = match config.baseline_irs {
        crate::scenario::BaselineIrs::Absent => None,
        crate::scenario::BaselineIrs::RandomPhase => {
            let alphabet = config.irs_phase_alphabet()?;
            let mut rng = stream_rng(config.seed, &[tag::TRIAL, trial as u64, tag::IRS_INIT, 1]);
            let idx: Vec<usize> = (0..config.n_irs).map(|_| rng.random_range(0..alphabet.len())).collect();
            Some(ReflectionVector::from_indices(&idx, alphabet)?)
        }
    };
    let draws = if benchmarks.iter().any(|b| b.dirs_active()) {
        let n = if config.dirs_redraw_per_symbol { config.dirs_draws } else { 1 };
        Some(DirsDraws::draw(
            config.n_dirs,
            n,
            &config.dirs_phase_alphabet()?,
            &PhaseDistribution::Uniform,
            &mut trial_rng(config, trial, tag::DIRS),
        )?)
    } else {
        None
    };

    let mut rates = Vec::with_capacity(benchmarks.len());
    for &id in benchmarks {
        let beta = if id.loads_aca() { &beta_est } else { &zeros };
        let (eff, w) = if id.uses_optimized_irs() {
            let design = design.as_ref().expect("design computed above");
            let (irs, w) = alternate(config, &channels, design, beta, noise, power)?;
            (effective_channels(&channels, Some(&irs))?, w)
        } else {
            let eff = effective_channels(&channels, baseline_irs.as_ref())?;
            let w = anti_jamming_precoder(&eff, beta, noise, power)?;
            (eff, w)
        };
        let extra = if id == BenchmarkId::ActiveJammer {
            Some(active_jamming_power(config, &geometry, trial)?)
        } else {
            None
        };
        let d = if id.dirs_active() { draws.as_ref() } else { None };
        let rep = sjnr_from_draws(&eff, &channels, &w, noise, d, extra.as_deref())?;
        rates.push((id, rep.rate_per_user()));
    }
    Ok(TrialOutcome {
        trial,
        rates,
        rcg_trace: design.map(|d| d.trace),
    })
}

/// Rate per user of one benchmark on one trial.
pub fn run_benchmark(id: BenchmarkId, config: &ScenarioConfig, trial: usize) -> Result<f64> {
    Ok(run_trial(config, trial, &[id])?.rates[0].1)
}

/// Runs `config.trials` trials on a pool of `workers` threads, ordered by trial index.
pub fn run_trials(config: &ScenarioConfig, benchmarks: &[BenchmarkId], workers: usize) -> Result<Vec<TrialOutcome>> {
    config.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    pool.install(|| {
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(config, t, benchmarks))
            .collect()
    })
}

/// Aggregated rate of one benchmark at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct RatePoint {
    pub value: f64,
    pub benchmark: BenchmarkId,
    pub mean_rate: f64,
    pub stderr: f64,
    pub trials: usize,
    /// Per-trial rates, by trial index.
    pub samples: Vec<f64>,
}

/// Mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub sweep: SweepKind,
    pub grid: Vec<f64>,
    pub benchmarks: Vec<BenchmarkId>,
    pub points: Vec<RatePoint>,
    pub seed: u64,
    pub trials: usize,
    /// Resolved base configuration (before the sweep variable is applied).
    pub config: ScenarioConfig,
    pub config_hash: String,
    pub version: String,
}

impl RateReport {
    pub fn point(&self, value: f64, id: BenchmarkId) -> Option<&RatePoint> {
        self.points.iter().find(|p| p.value == value && p.benchmark == id)
    }

    /// Mean and standard error of the per-trial difference `a − b` at one grid
    /// point (common random numbers make the pairing meaningful).
    pub fn paired_gap(&self, value: f64, a: BenchmarkId, b: BenchmarkId) -> Option<(f64, f64)> {
        let pa = self.point(value, a)?;
        let pb = self.point(value, b)?;
        let d: Vec<f64> = pa.samples.iter().zip(&pb.samples).map(|(x, y)| x - y).collect();
        Some(mean_stderr(&d))
    }

    /// Paired difference of one benchmark between two grid points (`v1 − v0`).
    pub fn paired_step(&self, id: BenchmarkId, v0: f64, v1: f64) -> Option<(f64, f64)> {
        let p0 = self.point(v0, id)?;
        let p1 = self.point(v1, id)?;
        let d: Vec<f64> = p1.samples.iter().zip(&p0.samples).map(|(x, y)| x - y).collect();
        Some(mean_stderr(&d))
    }
}

pub fn config_hash(config: &ScenarioConfig) -> String {
    let digest = Sha256::digest(config.to_scenario_text().as_bytes());
    format!("sha256:{}", hex::encode(digest))
}

/// Runs every benchmark at every grid point with shared per-trial draws.
pub fn sweep(
    kind: SweepKind,
    grid: &[f64],
    config: &ScenarioConfig,
    benchmarks: &[BenchmarkId],
    workers: usize,
) -> Result<RateReport> {
    if grid.is_empty() {
        return Err(invalid("sweep grid is empty"));
    }
    if benchmarks.is_empty() {
        return Err(invalid("no benchmarks selected"));
    }
    config.validate()?;
    let configs = grid.iter().map(|&v| kind.apply(config, v)).collect::<Result<Vec<_>>>()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| invalid(format!("cannot start worker pool: {e}")))?;
    let jobs: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|g| (0..config.trials).map(move |t| (g, t)))
        .collect();
    let outcomes: Vec<TrialOutcome> = pool.install(|| {
        jobs.par_iter()
            .map(|&(g, t)| run_trial(&configs[g], t, benchmarks))
            .collect::<Result<Vec<_>>>()
    })?;

    let mut points = Vec::with_capacity(grid.len() * benchmarks.len());
    for (g, &value) in grid.iter().enumerate() {
        let block = &outcomes[g * config.trials..(g + 1) * config.trials];
        for (b, &id) in benchmarks.iter().enumerate() {
            let samples: Vec<f64> = block.iter().map(|o| o.rates[b].1).collect();
            let (mean_rate, stderr) = mean_stderr(&samples);
            points.push(RatePoint {
                value,
                benchmark: id,
                mean_rate,
                stderr,
                trials: samples.len(),
                samples,
            });
        }
    }
    Ok(RateReport {
        sweep: kind,
        grid: grid.to_vec(),
        benchmarks: benchmarks.to_vec(),
        points,
        seed: config.seed,
        trials: config.trials,
        config: config.clone(),
        config_hash: config_hash(config),
        version: VERSION.to_string(),
    })
}

pub const CSV_HEADER: [&str; 7] = ["sweep_var", "value", "benchmark", "mean_rate", "stderr", "trials", "seed"];

/// Sidecar manifest path for a report CSV: `rates.csv` → `rates.manifest.toml`.
pub fn manifest_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    csv_path.with_file_name(format!("{stem}.manifest.toml"))
}

/// Writes the report CSV and its manifest. The manifest is a valid scenario
/// file holding the resolved configuration, with run metadata in comments.
pub fn emit_report(report: &RateReport, path: &Path) -> Result<()> {
    if report.grid.is_empty() || report.points.is_empty() {
        return Err(invalid("report has an empty grid"));
    }
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for p in &report.points {
        w.write_record([
            report.sweep.as_str().to_string(),
            p.value.to_string(),
            p.benchmark.as_str().to_string(),
            p.mean_rate.to_string(),
            p.stderr.to_string(),
            p.trials.to_string(),
            report.seed.to_string(),
        ])?;
    }
    w.flush()?;

    let grid: Vec<String> = report.grid.iter().map(|v| v.to_string()).collect();
    let benches: Vec<&str> = report.benchmarks.iter().map(|b| b.as_str()).collect();
    let manifest = format!(
        "# version: {}\n# config_hash: {}\n# sweep: {}\n# grid: {}\n# benchmarks: {}\n# trials: {}\n# seed: {}\n{}",
        report.version,
        report.config_hash,
        report.sweep,
        grid.join(", "),
        benches.join(","),
        report.trials,
        report.seed,
        report.config.to_scenario_text()
    );
    fs::write(manifest_path(path), manifest)?;
    Ok(())
}

/// One parsed CSV row.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub sweep_var: String,
    pub value: f64,
    pub benchmark: BenchmarkId,
    pub mean_rate: f64,
    pub stderr: f64,
    pub trials: usize,
    pub seed: u64,
}

/// Reads a CSV written by [`emit_report`].
pub fn read_report_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != CSV_HEADER {
        return Err(invalid(format!("unexpected CSV header {header:?}")));
    }
    let num = |s: &str| s.parse::<f64>().map_err(|e| invalid(format!("bad number `{s}`: {e}")));
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        out.push(CsvRow {
            sweep_var: rec[0].to_string(),
            value: num(&rec[1])?,
            benchmark: rec[2].parse()?,
            mean_rate: num(&rec[3])?,
            stderr: num(&rec[4])?,
            trials: rec[5].parse().map_err(|e| invalid(format!("bad trial count: {e}")))?,
            seed: rec[6].parse().map_err(|e| invalid(format!("bad seed: {e}")))?,
        });
    }
    Ok(out)
}
