//! Scenario configuration, large-scale propagation and 3-D geometry.
//!
//! Everything in here is plain `f64`: the scenario describes physical
//! constants, not the working precision of the channel math.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::Rng;

use crate::disco::PhaseAlphabet;
use crate::error::{invalid, Error, Result};
use crate::manifold::RcgSettings;

pub type Point3 = [f64; 3];

pub fn distance(a: &Point3, b: &Point3) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Noise spectral density used by the noise-power formula, dBm/Hz.
pub const NOISE_DENSITY_DBM_PER_HZ: f64 = -170.0;

/// Propagation class of a link, selecting the pathloss law.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinkKind {
    /// `35.6 + 22·log10(d)`; AP–DIRS, AP–IRS and IRS–user links.
    LosLike,
    /// `32.6 + 36.7·log10(d)`; AP–user and DIRS–user links.
    NlosLike,
}

pub fn pathloss_db(kind: LinkKind, distance_m: f64) -> Result<f64> {
    if !(distance_m > 0.0) || !distance_m.is_finite() {
        return Err(invalid(format!("pathloss distance must be positive, got {distance_m}")));
    }
    let lg = distance_m.log10();
    Ok(match kind {
        LinkKind::LosLike => 35.6 + 22.0 * lg,
        LinkKind::NlosLike => 32.6 + 36.7 * lg,
    })
}

/// Linear power gain for a pathloss given in dB.
pub fn pathloss_gain(kind: LinkKind, distance_m: f64) -> Result<f64> {
    Ok(10f64.powf(-pathloss_db(kind, distance_m)? / 10.0))
}

pub fn noise_power_dbm(bandwidth_hz: f64) -> Result<f64> {
    if !(bandwidth_hz > 0.0) || !bandwidth_hz.is_finite() {
        return Err(invalid(format!("bandwidth must be positive, got {bandwidth_hz}")));
    }
    Ok(NOISE_DENSITY_DBM_PER_HZ + 10.0 * bandwidth_hz.log10())
}

pub fn noise_power_watts(bandwidth_hz: f64) -> Result<f64> {
    Ok(dbm_to_watts(noise_power_dbm(bandwidth_hz)?))
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(w: f64) -> f64 {
    10.0 * w.log10() + 30.0
}

/// How the benchmarks that do not optimize the legitimate IRS treat it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselineIrs {
    /// The IRS is not part of the benchmark's channel.
    Absent,
    /// The IRS is present with uniformly random discrete phases.
    RandomPhase,
}

impl BaselineIrs {
    pub fn as_str(self) -> &'static str {
        match self {
            BaselineIrs::Absent => "absent",
            BaselineIrs::RandomPhase => "random",
        }
    }
}

impl FromStr for BaselineIrs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "absent" | "none" => Ok(BaselineIrs::Absent),
            "random" => Ok(BaselineIrs::RandomPhase),
            _ => Err(invalid(format!("unknown baseline IRS mode `{s}` (absent|random)"))),
        }
    }
}

/// Built-in parameter sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Profile {
    /// Small system that runs a full sweep in seconds.
    Desk,
    /// The full-scale reference system (32 antennas, 16 users, 128/2048 elements).
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(invalid(format!("unknown profile `{s}` (desk|paper)"))),
        }
    }
}

/// Complete description of one simulated system.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub n_antennas: usize,
    pub n_irs: usize,
    pub n_dirs: usize,
    pub n_users: usize,
    /// Total transmit power budget P0 over all users, dBm.
    pub power_budget_dbm: f64,
    pub bandwidth_hz: f64,
    pub carrier_wavelength_m: f64,
    pub element_spacing_m: f64,
    pub ap_center: Point3,
    pub irs_center: Point3,
    pub dirs_center: Point3,
    pub user_region_center: Point3,
    pub user_region_radius_m: f64,
    /// DIRS phase alphabet, radians in `[0, 2π)`.
    pub dirs_alphabet: Vec<f64>,
    pub dirs_alphabet_bits: u32,
    pub irs_alphabet_bits: u32,
    pub rician_ad: f64,
    pub rician_ai: f64,
    pub rician_iu: f64,
    pub seed: u64,
    pub trials: usize,
    /// Fresh DIRS state for every transmitted symbol; otherwise one state per
    /// coherence interval.
    pub dirs_redraw_per_symbol: bool,
    /// DIRS draws behind every Monte Carlo SJNR estimate.
    pub dirs_draws: usize,
    /// Keep the same user drop in every trial.
    pub freeze_users: bool,
    pub jammer_position: Point3,
    /// Active-jammer power; `-inf` disables it.
    pub jammer_power_dbm: f64,
    /// Multiplier applied to the true ACA variances to form the precoder's estimates.
    pub beta_estimate_scale: f64,
    pub baseline_irs: BaselineIrs,
    pub rcg: RcgSettings,
    /// Extra IRS/precoder alternation rounds after the one-pass design (experimental).
    pub alternating_rounds: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self::paper()
    }
}

impl ScenarioConfig {
    pub fn paper() -> Self {
        let wavelength = 0.06;
        let n_users = 16;
        Self {
            n_antennas: 32,
            n_irs: 128,
            n_dirs: 2048,
            n_users,
            // 0 dBm per user
            power_budget_dbm: 10.0 * (n_users as f64).log10(),
            bandwidth_hz: 180e3,
            carrier_wavelength_m: wavelength,
            element_spacing_m: wavelength / 2.0,
            ap_center: [2.0, 0.0, 5.0],
            irs_center: [10.0, 280.0, 5.0],
            dirs_center: [2.0, 0.0, 2.0],
            user_region_center: [0.0, 300.0, 0.0],
            user_region_radius_m: 20.0,
            dirs_alphabet: vec![PI / 9.0, 6.0 * PI / 5.0],
            dirs_alphabet_bits: 1,
            irs_alphabet_bits: 2,
            rician_ad: 3.0,
            rician_ai: 3.0,
            rician_iu: 3.0,
            seed: 1,
            trials: 200,
            dirs_redraw_per_symbol: true,
            dirs_draws: 500,
            freeze_users: false,
            jammer_position: [2.0, 0.0, 5.0],
            jammer_power_dbm: 0.0,
            beta_estimate_scale: 1.0,
            baseline_irs: BaselineIrs::Absent,
            rcg: RcgSettings::default(),
            alternating_rounds: 0,
        }
    }

    pub fn desk() -> Self {
        let n_users = 4;
        Self {
            n_antennas: 8,
            n_irs: 32,
            n_dirs: 256,
            n_users,
            power_budget_dbm: 10.0 * (n_users as f64).log10(),
            ..Self::paper()
        }
    }

    pub fn for_profile(profile: Profile) -> Self {
        match profile {
            Profile::Desk => Self::desk(),
            Profile::Paper => Self::paper(),
        }
    }

    pub fn power_budget_watts(&self) -> f64 {
        dbm_to_watts(self.power_budget_dbm)
    }

    pub fn power_per_user_dbm(&self) -> f64 {
        self.power_budget_dbm - 10.0 * (self.n_users as f64).log10()
    }

    pub fn set_power_per_user_dbm(&mut self, dbm: f64) {
        self.power_budget_dbm = dbm + 10.0 * (self.n_users as f64).log10();
    }

    pub fn noise_power_watts(&self) -> Result<f64> {
        noise_power_watts(self.bandwidth_hz)
    }

    pub fn jammer_power_watts(&self) -> f64 {
        dbm_to_watts(self.jammer_power_dbm)
    }

    pub fn dirs_phase_alphabet(&self) -> Result<PhaseAlphabet> {
        PhaseAlphabet::new(self.dirs_alphabet.clone())
    }

    pub fn irs_phase_alphabet(&self) -> Result<PhaseAlphabet> {
        PhaseAlphabet::uniform(self.irs_alphabet_bits)
    }

    pub fn irs_shape(&self) -> (usize, usize) {
        planar_shape(self.n_irs)
    }

    pub fn dirs_shape(&self) -> (usize, usize) {
        planar_shape(self.n_dirs)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidScenario(m));
        for (name, v) in [
            ("n_antennas", self.n_antennas),
            ("n_irs", self.n_irs),
            ("n_dirs", self.n_dirs),
            ("n_users", self.n_users),
            ("trials", self.trials),
            ("dirs_draws", self.dirs_draws),
        ] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if !self.power_budget_dbm.is_finite() {
            return bad(format!("power budget must be finite, got {}", self.power_budget_dbm));
        }
        for (name, v) in [
            ("bandwidth_hz", self.bandwidth_hz),
            ("carrier_wavelength_m", self.carrier_wavelength_m),
            ("element_spacing_m", self.element_spacing_m),
            ("user_region_radius_m", self.user_region_radius_m),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(format!("{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [
            ("rician_ad", self.rician_ad),
            ("rician_ai", self.rician_ai),
            ("rician_iu", self.rician_iu),
            ("beta_estimate_scale", self.beta_estimate_scale),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return bad(format!("{name} must be non-negative and finite, got {v}"));
            }
        }
        if self.jammer_power_dbm.is_nan() || self.jammer_power_dbm == f64::INFINITY {
            return bad(format!("jammer power must be finite or -inf, got {}", self.jammer_power_dbm));
        }
        for p in [
            &self.ap_center,
            &self.irs_center,
            &self.dirs_center,
            &self.user_region_center,
            &self.jammer_position,
        ] {
            if p.iter().any(|c| !c.is_finite()) {
                return bad(format!("non-finite coordinate in {p:?}"));
            }
        }
        if self.dirs_alphabet_bits > 16 || self.irs_alphabet_bits == 0 || self.irs_alphabet_bits > 16 {
            return bad("alphabet bit widths must lie in 1..=16 (0 allowed for the DIRS only)".into());
        }
        let alphabet = self
            .dirs_phase_alphabet()
            .map_err(|e| Error::InvalidScenario(format!("DIRS alphabet: {e}")))?;
        if alphabet.len() != 1usize << self.dirs_alphabet_bits {
            return bad(format!(
                "DIRS alphabet has {} phases but dirs bits = {} requires {}",
                alphabet.len(),
                self.dirs_alphabet_bits,
                1usize << self.dirs_alphabet_bits
            ));
        }
        self.rcg.validate()?;
        Ok(())
    }

    /// Parses a scenario file on top of `base`. Unknown keys are rejected.
    pub fn parse_overrides(base: &ScenarioConfig, text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|s| text[..s.start.min(text.len())].lines().count().max(1))
                .unwrap_or(0);
            Error::ScenarioParse {
                line,
                message: e.message().to_string(),
            }
        })?;
        let mut flat = BTreeMap::new();
        flatten("", &table, &mut flat);
        let mut cfg = base.clone();
        for (key, value) in &flat {
            cfg.apply(key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_scenario_text(text: &str) -> Result<Self> {
        Self::parse_overrides(&Self::paper(), text)
    }

    fn apply(&mut self, key: &str, v: &toml::Value) -> Result<()> {
        match key {
            "system.n_antennas" => self.n_antennas = as_count(key, v)?,
            "system.n_irs" => self.n_irs = as_count(key, v)?,
            "system.n_dirs" => self.n_dirs = as_count(key, v)?,
            "system.n_users" => self.n_users = as_count(key, v)?,
            "system.power_budget_dbm" => self.power_budget_dbm = as_f64(key, v)?,
            "system.bandwidth_hz" => self.bandwidth_hz = as_f64(key, v)?,
            "system.wavelength_m" => self.carrier_wavelength_m = as_f64(key, v)?,
            "system.element_spacing_m" => self.element_spacing_m = as_f64(key, v)?,
            "geometry.ap_center" => self.ap_center = as_point(key, v)?,
            "geometry.irs_center" => self.irs_center = as_point(key, v)?,
            "geometry.dirs_center" => self.dirs_center = as_point(key, v)?,
            "geometry.user_region_center" => self.user_region_center = as_point(key, v)?,
            "geometry.user_region_radius_m" => self.user_region_radius_m = as_f64(key, v)?,
            "geometry.freeze_users" => self.freeze_users = as_bool(key, v)?,
            "dirs.alphabet" => self.dirs_alphabet = as_f64_list(key, v)?,
            "dirs.bits" => self.dirs_alphabet_bits = as_count(key, v)? as u32,
            "dirs.redraw_per_symbol" => self.dirs_redraw_per_symbol = as_bool(key, v)?,
            "dirs.draws" => self.dirs_draws = as_count(key, v)?,
            "irs.bits" => self.irs_alphabet_bits = as_count(key, v)? as u32,
            "irs.in_baselines" => self.baseline_irs = as_str(key, v)?.parse()?,
            "channel.rician_ad" => self.rician_ad = as_f64(key, v)?,
            "channel.rician_ai" => self.rician_ai = as_f64(key, v)?,
            "channel.rician_iu" => self.rician_iu = as_f64(key, v)?,
            "jammer.position" => self.jammer_position = as_point(key, v)?,
            "jammer.power_dbm" => self.jammer_power_dbm = as_f64(key, v)?,
            "precoder.beta_estimate_scale" => self.beta_estimate_scale = as_f64(key, v)?,
            "precoder.alternating_rounds" => self.alternating_rounds = as_count(key, v)?,
            "rcg.max_iters" => self.rcg.max_iters = as_count(key, v)?,
            "rcg.grad_tol" => self.rcg.grad_tol = as_f64(key, v)?,
            "rcg.armijo_init_step" => self.rcg.armijo_init_step = as_f64(key, v)?,
            "rcg.armijo_contraction" => self.rcg.armijo_contraction = as_f64(key, v)?,
            "rcg.armijo_slope" => self.rcg.armijo_slope = as_f64(key, v)?,
            "rcg.max_backtracks" => self.rcg.max_backtracks = as_count(key, v)?,
            "rcg.restart_period" => self.rcg.restart_period = as_count(key, v)?,
            "rcg.restarts" => self.rcg.restarts = as_count(key, v)?,
            "sim.seed" => self.seed = as_u64(key, v)?,
            "sim.trials" => self.trials = as_count(key, v)?,
            _ => return Err(Error::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    /// Serializes every field in the flat dotted-key format accepted by
    /// [`ScenarioConfig::from_scenario_text`].
    pub fn to_scenario_text(&self) -> String {
        let mut s = String::new();
        let mut line = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        line("system.n_antennas", self.n_antennas.to_string());
        line("system.n_irs", self.n_irs.to_string());
        line("system.n_dirs", self.n_dirs.to_string());
        line("system.n_users", self.n_users.to_string());
        line("system.power_budget_dbm", fmt_f64(self.power_budget_dbm));
        line("system.bandwidth_hz", fmt_f64(self.bandwidth_hz));
        line("system.wavelength_m", fmt_f64(self.carrier_wavelength_m));
        line("system.element_spacing_m", fmt_f64(self.element_spacing_m));
        line("geometry.ap_center", fmt_list(&self.ap_center));
        line("geometry.irs_center", fmt_list(&self.irs_center));
        line("geometry.dirs_center", fmt_list(&self.dirs_center));
        line("geometry.user_region_center", fmt_list(&self.user_region_center));
        line("geometry.user_region_radius_m", fmt_f64(self.user_region_radius_m));
        line("geometry.freeze_users", self.freeze_users.to_string());
        line("dirs.alphabet", fmt_list(&self.dirs_alphabet));
        line("dirs.bits", self.dirs_alphabet_bits.to_string());
        line("dirs.redraw_per_symbol", self.dirs_redraw_per_symbol.to_string());
        line("dirs.draws", self.dirs_draws.to_string());
        line("irs.bits", self.irs_alphabet_bits.to_string());
        line("irs.in_baselines", format!("\"{}\"", self.baseline_irs.as_str()));
        line("channel.rician_ad", fmt_f64(self.rician_ad));
        line("channel.rician_ai", fmt_f64(self.rician_ai));
        line("channel.rician_iu", fmt_f64(self.rician_iu));
        line("jammer.position", fmt_list(&self.jammer_position));
        line("jammer.power_dbm", fmt_f64(self.jammer_power_dbm));
        line("precoder.beta_estimate_scale", fmt_f64(self.beta_estimate_scale));
        line("precoder.alternating_rounds", self.alternating_rounds.to_string());
        line("rcg.max_iters", self.rcg.max_iters.to_string());
        line("rcg.grad_tol", fmt_f64(self.rcg.grad_tol));
        line("rcg.armijo_init_step", fmt_f64(self.rcg.armijo_init_step));
        line("rcg.armijo_contraction", fmt_f64(self.rcg.armijo_contraction));
        line("rcg.armijo_slope", fmt_f64(self.rcg.armijo_slope));
        line("rcg.max_backtracks", self.rcg.max_backtracks.to_string());
        line("rcg.restart_period", self.rcg.restart_period.to_string());
        line("rcg.restarts", self.rcg.restarts.to_string());
        if self.seed > i64::MAX as u64 {
            line("sim.seed", format!("\"{}\"", self.seed));
        } else {
            line("sim.seed", self.seed.to_string());
        }
        line("sim.trials", self.trials.to_string());
        s
    }
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut BTreeMap<String, toml::Value>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            toml::Value::Table(t) => flatten(&key, t, out),
            other => {
                out.insert(key, other.clone());
            }
        }
    }
}

fn type_error(key: &str, expected: &str, v: &toml::Value) -> Error {
    Error::InvalidScenario(format!("`{key}` expects {expected}, got {}", v.type_str()))
}

fn as_f64(key: &str, v: &toml::Value) -> Result<f64> {
    match v {
        toml::Value::Float(x) => Ok(*x),
        toml::Value::Integer(i) => Ok(*i as f64),
        _ => Err(type_error(key, "a number", v)),
    }
}

fn as_u64(key: &str, v: &toml::Value) -> Result<u64> {
    match v {
        toml::Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        // seeds above i64::MAX are written as strings
        toml::Value::String(s) => s
            .parse()
            .map_err(|_| Error::InvalidScenario(format!("`{key}` is not a u64: {s}"))),
        _ => Err(type_error(key, "a non-negative integer", v)),
    }
}

fn as_count(key: &str, v: &toml::Value) -> Result<usize> {
    Ok(as_u64(key, v)? as usize)
}

fn as_bool(key: &str, v: &toml::Value) -> Result<bool> {
    v.as_bool().ok_or_else(|| type_error(key, "a boolean", v))
}

fn as_str<'a>(key: &str, v: &'a toml::Value) -> Result<&'a str> {
    v.as_str().ok_or_else(|| type_error(key, "a string", v))
}

fn as_f64_list(key: &str, v: &toml::Value) -> Result<Vec<f64>> {
    let arr = v.as_array().ok_or_else(|| type_error(key, "a list of numbers", v))?;
    arr.iter().map(|x| as_f64(key, x)).collect()
}

fn as_point(key: &str, v: &toml::Value) -> Result<Point3> {
    let xs = as_f64_list(key, v)?;
    <[f64; 3]>::try_from(xs.as_slice())
        .map_err(|_| Error::InvalidScenario(format!("`{key}` expects 3 coordinates, got {}", xs.len())))
}

fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        // Debug is the shortest representation that round-trips and always
        // carries a '.' or exponent, so it stays a TOML float.
        format!("{x:?}")
    }
}

fn fmt_list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| fmt_f64(x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Rows × columns of a planar array with `n` elements: the factorization with
/// `rows >= cols` closest to square from the side of a 2:1 aspect, falling back
/// to a single column when no such factorization exists.
pub fn planar_shape(n: usize) -> (usize, usize) {
    if n == 0 {
        return (0, 0);
    }
    let mut c = (n as f64).sqrt().floor() as usize;
    while c >= 1 {
        if n % c == 0 && n / c <= 2 * c {
            return (n / c, c);
        }
        c -= 1;
    }
    (n, 1)
}

/// Far-field bearing angles of a direction seen from a surface in the x–z plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteeringSpec {
    /// Azimuth ϑ, measured from +y toward +x.
    pub azimuth: f64,
    /// Polar angle θ from +z.
    pub elevation: f64,
}

impl SteeringSpec {
    pub fn from_direction(from: &Point3, to: &Point3) -> Self {
        let d = distance(from, to);
        let u = [(to[0] - from[0]) / d, (to[1] - from[1]) / d, (to[2] - from[2]) / d];
        Self {
            azimuth: u[0].atan2(u[1]),
            elevation: u[2].clamp(-1.0, 1.0).acos(),
        }
    }

    /// Direction cosines along the array's row (x) and column (z) axes.
    pub fn direction_cosines(&self) -> (f64, f64) {
        (self.azimuth.sin() * self.elevation.sin(), self.elevation.cos())
    }
}

/// Element coordinates and derived link distances for one user drop.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryLayout {
    pub ap_center: Point3,
    pub irs_center: Point3,
    pub dirs_center: Point3,
    pub ap_elements: Vec<Point3>,
    pub irs_elements: Vec<Point3>,
    pub dirs_elements: Vec<Point3>,
    pub irs_shape: (usize, usize),
    pub dirs_shape: (usize, usize),
    pub users: Vec<Point3>,
    pub wavelength_m: f64,
    /// Element spacing in wavelengths.
    pub spacing_wavelengths: f64,
    pub d_ad: f64,
    pub d_ai: f64,
    pub d_iu: Vec<f64>,
    pub d_au: Vec<f64>,
    pub d_du: Vec<f64>,
    /// `D_n^r`, row-major over (DIRS element r, antenna n).
    pub dirs_element_distances: Vec<f64>,
    /// `D_n`, distance from antenna n to the DIRS center.
    pub dirs_center_distances: Vec<f64>,
}

impl GeometryLayout {
    pub fn n_antennas(&self) -> usize {
        self.ap_elements.len()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    /// `D_n^r − D_n` for DIRS element `r` and antenna `n`.
    pub fn near_field_path_difference(&self, r: usize, n: usize) -> f64 {
        self.dirs_element_distances[r * self.n_antennas() + n] - self.dirs_center_distances[n]
    }

    /// Bearing of the AP as seen from the IRS.
    pub fn irs_to_ap(&self) -> SteeringSpec {
        SteeringSpec::from_direction(&self.irs_center, &self.ap_center)
    }

    pub fn irs_to_user(&self, k: usize) -> SteeringSpec {
        SteeringSpec::from_direction(&self.irs_center, &self.users[k])
    }

    /// Sine of the angle off broadside of the AP array (along x) toward the IRS.
    pub fn ap_to_irs_sine(&self) -> f64 {
        (self.irs_center[0] - self.ap_center[0]) / self.d_ai
    }
}

fn linear_array(center: &Point3, n: usize, spacing: f64) -> Vec<Point3> {
    let mid = (n as f64 - 1.0) / 2.0;
    (0..n)
        .map(|i| [center[0] + (i as f64 - mid) * spacing, center[1], center[2]])
        .collect()
}

/// Uniform planar array in the x–z plane; element index = row·cols + col,
/// rows along x and columns along z.
fn planar_array(center: &Point3, shape: (usize, usize), spacing: f64) -> Vec<Point3> {
    let (rows, cols) = shape;
    let mr = (rows as f64 - 1.0) / 2.0;
    let mc = (cols as f64 - 1.0) / 2.0;
    let mut out = Vec::with_capacity(rows * cols);
    for i in 0..rows {
        for j in 0..cols {
            out.push([
                center[0] + (i as f64 - mr) * spacing,
                center[1],
                center[2] + (j as f64 - mc) * spacing,
            ]);
        }
    }
    out
}

/// Uniform point in a horizontal disk.
pub fn sample_disk<R: Rng + ?Sized>(center: &Point3, radius: f64, rng: &mut R) -> Point3 {
    let r = radius * rng.random::<f64>().sqrt();
    let t = std::f64::consts::TAU * rng.random::<f64>();
    [center[0] + r * t.cos(), center[1] + r * t.sin(), center[2]]
}

pub fn build_geometry<R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<GeometryLayout> {
    config.validate()?;
    let users: Vec<Point3> = (0..config.n_users)
        .map(|_| sample_disk(&config.user_region_center, config.user_region_radius_m, rng))
        .collect();
    layout_with_users(config, users)
}

/// Builds the layout for a fixed set of user positions.
pub fn layout_with_users(config: &ScenarioConfig, users: Vec<Point3>) -> Result<GeometryLayout> {
    let spacing = config.element_spacing_m;
    let ap_elements = linear_array(&config.ap_center, config.n_antennas, spacing);
    let irs_shape = config.irs_shape();
    let dirs_shape = config.dirs_shape();
    let irs_elements = planar_array(&config.irs_center, irs_shape, spacing);
    let dirs_elements = planar_array(&config.dirs_center, dirs_shape, spacing);

    let d_ad = distance(&config.ap_center, &config.dirs_center);
    let d_ai = distance(&config.ap_center, &config.irs_center);
    let d_iu: Vec<f64> = users.iter().map(|u| distance(&config.irs_center, u)).collect();
    let d_au: Vec<f64> = users.iter().map(|u| distance(&config.ap_center, u)).collect();
    let d_du: Vec<f64> = users.iter().map(|u| distance(&config.dirs_center, u)).collect();

    let mut dirs_element_distances = Vec::with_capacity(dirs_elements.len() * ap_elements.len());
    for e in &dirs_elements {
        for a in &ap_elements {
            dirs_element_distances.push(distance(a, e));
        }
    }
    let dirs_center_distances: Vec<f64> =
        ap_elements.iter().map(|a| distance(a, &config.dirs_center)).collect();

    let degenerate = |what: &str| Err(Error::InvalidScenario(format!("degenerate geometry: {what} is zero")));
    if !(d_ad > 0.0) {
        return degenerate("AP–DIRS distance");
    }
    if !(d_ai > 0.0) {
        return degenerate("AP–IRS distance");
    }
    if d_iu.iter().chain(&d_au).chain(&d_du).any(|d| !(*d > 0.0)) {
        return degenerate("a user distance");
    }
    if dirs_element_distances
        .iter()
        .chain(&dirs_center_distances)
        .any(|d| !(*d > 0.0))
    {
        return degenerate("an antenna–DIRS element distance");
    }

    Ok(GeometryLayout {
        ap_center: config.ap_center,
        irs_center: config.irs_center,
        dirs_center: config.dirs_center,
        ap_elements,
        irs_elements,
        dirs_elements,
        irs_shape,
        dirs_shape,
        users,
        wavelength_m: config.carrier_wavelength_m,
        spacing_wavelengths: spacing / config.carrier_wavelength_m,
        d_ad,
        d_ai,
        d_iu,
        d_au,
        d_du,
        dirs_element_distances,
        dirs_center_distances,
    })
}
