//! Reflection states and the randomly reconfigured ("disco") jamming surface.
//!
//! The jamming surface redraws its phases independently per element and per
//! symbol. Averaged over those draws, each entry of the jammed channel behaves
//! like a zero-mean complex Gaussian with per-user variance
//! `β_k = L_AD·L_DU,k·N_D`.

use std::path::Path;

use num_complex::Complex;
use num_traits::Zero;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::channels::{assemble_rician, draw_rayleigh, near_field_los_ad, scale_columns, LargeScale};
use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::scalar::{unit_phasor, wrap_phase, Real};
use crate::scenario::{GeometryLayout, ScenarioConfig};

/// Two phases closer than this are considered equal.
pub const PHASE_EPS: f64 = 1e-12;

/// Shortest angular distance between two phases.
pub fn angular_distance(a: f64, b: f64) -> f64 {
    let d = wrap_phase(a - b);
    d.min(std::f64::consts::TAU - d)
}

/// Ordered set of allowed phases.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseAlphabet {
    phases: Vec<f64>,
}

impl PhaseAlphabet {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if phases.is_empty() {
            return Err(invalid("phase alphabet is empty"));
        }
        if phases.len() > u16::MAX as usize + 1 {
            return Err(invalid(format!("phase alphabet too large ({})", phases.len())));
        }
        for (i, &p) in phases.iter().enumerate() {
            if !(0.0..std::f64::consts::TAU).contains(&p) {
                return Err(invalid(format!("phase {p} is outside [0, 2π)")));
            }
            if phases[..i].iter().any(|&q| angular_distance(p, q) < PHASE_EPS) {
                return Err(invalid(format!("phase {p} appears twice")));
            }
        }
        Ok(Self { phases })
    }

    /// `2^bits` phases `2π·i/2^bits`, starting at 0.
    pub fn uniform(bits: u32) -> Result<Self> {
        if bits > 16 {
            return Err(invalid(format!("{bits}-bit alphabet is too large")));
        }
        let m = 1usize << bits;
        Self::new((0..m).map(|i| std::f64::consts::TAU * i as f64 / m as f64).collect())
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn values<T: Real>(&self) -> Vec<Complex<T>> {
        self.phases.iter().map(|&p| unit_phasor(p)).collect()
    }

    /// Index of the alphabet entry nearest in angle; near-ties go to the
    /// smaller index.
    pub fn nearest_index(&self, phase: f64) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, &p) in self.phases.iter().enumerate() {
            let d = angular_distance(phase, p);
            if d < best_d - PHASE_EPS {
                best = i;
                best_d = d;
            }
        }
        best
    }

    pub fn contains(&self, phase: f64) -> bool {
        self.phases.iter().any(|&p| angular_distance(p, phase) < PHASE_EPS)
    }
}

/// Unit-modulus reflection coefficients of a surface, with their phases and
/// (when discrete) the alphabet they are drawn from.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionVector<T> {
    phases: Vec<f64>,
    alphabet: Option<PhaseAlphabet>,
    values: Vec<Complex<T>>,
}

impl<T: Real> ReflectionVector<T> {
    /// Continuous-phase vector.
    pub fn from_phases(phases: Vec<f64>) -> Self {
        let phases: Vec<f64> = phases.into_iter().map(wrap_phase).collect();
        let values = phases.iter().map(|&p| unit_phasor(p)).collect();
        Self {
            phases,
            alphabet: None,
            values,
        }
    }

    /// Discrete vector; every phase must be an alphabet member.
    pub fn discrete(phases: Vec<f64>, alphabet: PhaseAlphabet) -> Result<Self> {
        if let Some(p) = phases.iter().find(|&&p| !alphabet.contains(p)) {
            return Err(invalid(format!("phase {p} is not in the alphabet")));
        }
        let mut v = Self::from_phases(phases);
        v.alphabet = Some(alphabet);
        Ok(v)
    }

    pub fn from_indices(indices: &[usize], alphabet: PhaseAlphabet) -> Result<Self> {
        let phases = indices
            .iter()
            .map(|&i| {
                alphabet
                    .phases()
                    .get(i)
                    .copied()
                    .ok_or_else(|| invalid(format!("alphabet index {i} out of range")))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut v = Self::from_phases(phases);
        v.alphabet = Some(alphabet);
        Ok(v)
    }

    /// Normalizes arbitrary nonzero complex entries onto the unit circle.
    pub fn from_values(values: &[Complex<T>]) -> Result<Self> {
        if let Some(z) = values.iter().find(|z| !(z.norm() > T::zero()) || !z.norm().is_finite()) {
            return Err(invalid(format!("cannot take the phase of {z}")));
        }
        Ok(Self::from_phases(values.iter().map(|z| z.arg().as_f64()).collect()))
    }

    /// All phases zero, i.e. the identity reflection.
    pub fn identity(n: usize) -> Self {
        Self::from_phases(vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn alphabet(&self) -> Option<&PhaseAlphabet> {
        self.alphabet.as_ref()
    }

    pub fn is_discrete(&self) -> bool {
        self.alphabet.is_some()
    }
}

/// Distribution of each DIRS element's phase over the alphabet.
#[derive(Debug, Clone, PartialEq, Default)]
pub enum PhaseDistribution {
    #[default]
    Uniform,
    /// Relative weights, one per alphabet entry.
    Weighted(Vec<f64>),
}

enum IndexSampler {
    Uniform(usize),
    Weighted(WeightedIndex<f64>),
}

impl IndexSampler {
    fn new(alphabet: &PhaseAlphabet, dist: &PhaseDistribution) -> Result<Self> {
        match dist {
            PhaseDistribution::Uniform => Ok(Self::Uniform(alphabet.len())),
            PhaseDistribution::Weighted(w) => {
                if w.len() != alphabet.len() {
                    return Err(invalid(format!(
                        "{} weights for an alphabet of {}",
                        w.len(),
                        alphabet.len()
                    )));
                }
                WeightedIndex::new(w)
                    .map(Self::Weighted)
                    .map_err(|e| invalid(format!("bad phase weights: {e}")))
            }
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match self {
            Self::Uniform(m) => rng.random_range(0..*m),
            Self::Weighted(w) => w.sample(rng),
        }
    }
}

/// Draws one DIRS state of `n` elements.
pub fn draw_reflection_state<T: Real, R: Rng + ?Sized>(
    n: usize,
    alphabet: &PhaseAlphabet,
    dist: &PhaseDistribution,
    rng: &mut R,
) -> Result<ReflectionVector<T>> {
    let sampler = IndexSampler::new(alphabet, dist)?;
    let idx: Vec<usize> = (0..n).map(|_| sampler.sample(rng)).collect();
    ReflectionVector::from_indices(&idx, alphabet.clone())
}

/// One DIRS state drawn uniformly from the configured alphabet.
pub fn draw_dirs_state<T: Real, R: Rng + ?Sized>(config: &ScenarioConfig, rng: &mut R) -> Result<ReflectionVector<T>> {
    draw_reflection_state(config.n_dirs, &config.dirs_phase_alphabet()?, &PhaseDistribution::Uniform, rng)
}

/// Batch of DIRS states stored as alphabet indices, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DirsDraws {
    alphabet: PhaseAlphabet,
    n_dirs: usize,
    indices: Vec<u16>,
}

impl DirsDraws {
    pub fn draw<R: Rng + ?Sized>(
        n_dirs: usize,
        n_draws: usize,
        alphabet: &PhaseAlphabet,
        dist: &PhaseDistribution,
        rng: &mut R,
    ) -> Result<Self> {
        let sampler = IndexSampler::new(alphabet, dist)?;
        let indices = (0..n_dirs * n_draws).map(|_| sampler.sample(rng) as u16).collect();
        Ok(Self {
            alphabet: alphabet.clone(),
            n_dirs,
            indices,
        })
    }

    pub fn n_dirs(&self) -> usize {
        self.n_dirs
    }

    pub fn n_draws(&self) -> usize {
        if self.n_dirs == 0 {
            0
        } else {
            self.indices.len() / self.n_dirs
        }
    }

    pub fn alphabet(&self) -> &PhaseAlphabet {
        &self.alphabet
    }

    pub fn indices(&self, draw: usize) -> &[u16] {
        &self.indices[draw * self.n_dirs..(draw + 1) * self.n_dirs]
    }

    pub fn state<T: Real>(&self, draw: usize) -> ReflectionVector<T> {
        let idx: Vec<usize> = self.indices(draw).iter().map(|&i| i as usize).collect();
        ReflectionVector::from_indices(&idx, self.alphabet.clone()).expect("indices drawn from the alphabet")
    }

    /// For every draw, computes `Σ_r e^{jφ_r}·terms[r, ·]` and passes it to
    /// `f(draw, row)`. Terms are grouped by alphabet letter first, so the
    /// per-draw cost is additions only.
    pub fn for_each_weighted_sum<T: Real>(
        &self,
        terms: &CMatrix<T>,
        mut f: impl FnMut(usize, &[Complex<T>]),
    ) -> Result<()> {
        if terms.rows() != self.n_dirs {
            return Err(Error::DimensionMismatch {
                context: "DirsDraws::for_each_weighted_sum",
                expected: format!("{} rows", self.n_dirs),
                actual: format!("{}", terms.rows()),
            });
        }
        let m = terms.cols();
        let letters = self.alphabet.len();
        let values: Vec<Complex<T>> = self.alphabet.values();
        let mut buckets = vec![Complex::<T>::zero(); letters * m];
        let mut out = vec![Complex::<T>::zero(); m];
        for d in 0..self.n_draws() {
            buckets.iter_mut().for_each(|b| *b = Complex::zero());
            for (r, &a) in self.indices(d).iter().enumerate() {
                let bucket = &mut buckets[a as usize * m..(a as usize + 1) * m];
                for (b, t) in bucket.iter_mut().zip(terms.row(r)) {
                    *b += t;
                }
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o = (0..letters).map(|a| values[a] * buckets[a * m + j]).sum();
            }
            f(d, &out);
        }
        Ok(())
    }
}

/// Jammed channel rows: row k is `h_DU,kᴴ·diag(state)·H_AD` (K×N_A).
pub fn jammed_channel<T: Real>(h_ad: &CMatrix<T>, h_du: &CMatrix<T>, state: &[Complex<T>]) -> Result<CMatrix<T>> {
    let n_d = h_ad.rows();
    if h_du.rows() != n_d || state.len() != n_d {
        return Err(Error::DimensionMismatch {
            context: "jammed_channel",
            expected: format!("{n_d} DIRS elements everywhere"),
            actual: format!("h_du has {}, state has {}", h_du.rows(), state.len()),
        });
    }
    let (k, n_a) = (h_du.cols(), h_ad.cols());
    let mut out = CMatrix::zeros(k, n_a);
    for r in 0..n_d {
        let ad = h_ad.row(r);
        for (u, du) in h_du.row(r).iter().enumerate() {
            let c = du.conj() * state[r];
            for (o, a) in out.row_mut(u).iter_mut().zip(ad) {
                *o += c * a;
            }
        }
    }
    Ok(out)
}

/// Asymptotic per-user variance of the jammed channel entries.
#[derive(Debug, Clone, PartialEq)]
pub struct AcaStatistics {
    pub beta: Vec<f64>,
    pub n_dirs: usize,
    pub l_ad: f64,
    pub l_du: Vec<f64>,
}

impl AcaStatistics {
    pub fn from_large_scale(large_scale: &LargeScale, n_dirs: usize) -> Self {
        Self {
            beta: large_scale
                .l_du
                .iter()
                .map(|l| large_scale.l_ad * l * n_dirs as f64)
                .collect(),
            n_dirs,
            l_ad: large_scale.l_ad,
            l_du: large_scale.l_du.clone(),
        }
    }
}

pub fn aca_variance(config: &ScenarioConfig, geometry: &GeometryLayout) -> Result<AcaStatistics> {
    let _ = config;
    Ok(AcaStatistics::from_large_scale(
        &LargeScale::from_geometry(geometry)?,
        geometry.dirs_elements.len(),
    ))
}

/// Empirical statistics of one jammed-channel entry.
#[derive(Debug, Clone, PartialEq)]
pub struct CltRow {
    pub n_dirs: usize,
    pub k: usize,
    pub n: usize,
    pub mean: Complex<f64>,
    pub variance: f64,
    pub beta: f64,
    /// `E|x−μ|⁴ / (E|x−μ|²)²` over phase-only redraws; 2 for a circular Gaussian.
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CltReport {
    pub n_dirs: usize,
    pub n_draws: usize,
    pub rows: Vec<CltRow>,
}

impl CltReport {
    /// Mean over entries of empirical variance / β_k.
    pub fn pooled_variance_ratio(&self) -> f64 {
        self.rows.iter().map(|r| r.variance / r.beta).sum::<f64>() / self.rows.len() as f64
    }

    /// Largest `|mean|² / β_k` over entries.
    pub fn max_mean_power_ratio(&self) -> f64 {
        self.rows
            .iter()
            .map(|r| r.mean.norm_sqr() / r.beta)
            .fold(0.0, f64::max)
    }

    /// `|mean kurtosis − 2|`.
    pub fn kurtosis_gap(&self) -> f64 {
        let m = self.rows.iter().map(|r| r.kurtosis).sum::<f64>() / self.rows.len() as f64;
        (m - 2.0).abs()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        write_clt_csv(path, std::slice::from_ref(self))
    }
}

/// Writes several reports into one CSV file.
pub fn write_clt_csv(path: &Path, reports: &[CltReport]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    write_clt_rows(&mut w, reports)?;
    w.flush()?;
    Ok(())
}

/// Writes the header and every row of several reports.
pub fn write_clt_rows<W: std::io::Write>(w: &mut csv::Writer<W>, reports: &[CltReport]) -> Result<()> {
    w.write_record(["n_dirs", "k", "n", "emp_mean_re", "emp_mean_im", "emp_var", "beta", "kurtosis"])?;
    for rep in reports {
        for r in &rep.rows {
            w.write_record([
                r.n_dirs.to_string(),
                r.k.to_string(),
                r.n.to_string(),
                format!("{:e}", r.mean.re),
                format!("{:e}", r.mean.im),
                format!("{:e}", r.variance),
                format!("{:e}", r.beta),
                format!("{}", r.kurtosis),
            ])?;
        }
    }
    Ok(())
}

/// Monte Carlo check of the Gaussian limit of the jammed channel.
///
/// `H_AD` is drawn once. Mean and variance use joint redraws of the
/// DIRS–user small-scale fading and the DIRS phases. Kurtosis holds the
/// DIRS–user fading fixed and redraws phases only, which is where the
/// non-Gaussianity at small N_D lives.
pub fn clt_diagnostics<R: Rng + ?Sized>(
    config: &ScenarioConfig,
    geometry: &GeometryLayout,
    n_draws: usize,
    rng: &mut R,
) -> Result<CltReport> {
    if n_draws < 1000 {
        return Err(invalid(format!("CLT diagnostics need at least 1000 draws, got {n_draws}")));
    }
    let n_d = geometry.dirs_elements.len();
    let n_a = geometry.n_antennas();
    let k = geometry.n_users();
    let ls = LargeScale::from_geometry(geometry)?;
    let stats = AcaStatistics::from_large_scale(&ls, n_d);
    let alphabet = config.dirs_phase_alphabet()?;
    let dist = PhaseDistribution::Uniform;

    let h_ad: CMatrix<f64> = assemble_rician(
        &near_field_los_ad(geometry),
        &draw_rayleigh(n_d, n_a, rng),
        config.rician_ad,
        ls.l_ad,
    )?;

    // joint draws: first and second moments
    let mut sum = vec![Complex::<f64>::zero(); k * n_a];
    let mut sum_sq = vec![0.0f64; k * n_a];
    let sampler = IndexSampler::new(&alphabet, &dist)?;
    let values: Vec<Complex<f64>> = alphabet.values();
    let mut state = vec![Complex::zero(); n_d];
    for _ in 0..n_draws {
        let h_du = scale_columns(draw_rayleigh::<f64, _>(n_d, k, rng), &ls.l_du);
        for s in state.iter_mut() {
            *s = values[sampler.sample(rng)];
        }
        let hd = jammed_channel(&h_ad, &h_du, &state)?;
        for (i, z) in hd.as_slice().iter().enumerate() {
            sum[i] += z;
            sum_sq[i] += z.norm_sqr();
        }
    }

    // phase-only draws: fourth moment around the conditional mean
    let h_du = scale_columns(draw_rayleigh::<f64, _>(n_d, k, rng), &ls.l_du);
    let mut terms = CMatrix::zeros(n_d, k * n_a);
    for r in 0..n_d {
        for u in 0..k {
            let c = h_du[(r, u)].conj();
            for n in 0..n_a {
                terms[(r, u * n_a + n)] = c * h_ad[(r, n)];
            }
        }
    }
    let draws = DirsDraws::draw(n_d, n_draws, &alphabet, &dist, rng)?;
    let mut samples = vec![Complex::<f64>::zero(); n_draws * k * n_a];
    draws.for_each_weighted_sum(&terms, |d, row| {
        samples[d * k * n_a..(d + 1) * k * n_a].copy_from_slice(row);
    })?;
    let nf = n_draws as f64;
    let mut rows = Vec::with_capacity(k * n_a);
    for u in 0..k {
        for n in 0..n_a {
            let i = u * n_a + n;
            let mean = sum[i] / nf;
            let variance = (sum_sq[i] - nf * mean.norm_sqr()) / (nf - 1.0);
            let cm: Complex<f64> = (0..n_draws).map(|d| samples[d * k * n_a + i]).sum::<Complex<f64>>() / nf;
            let (mut m2, mut m4) = (0.0, 0.0);
            for d in 0..n_draws {
                let e = (samples[d * k * n_a + i] - cm).norm_sqr();
                m2 += e;
                m4 += e * e;
            }
            m2 /= nf;
            m4 /= nf;
            rows.push(CltRow {
                n_dirs: n_d,
                k: u,
                n,
                mean,
                variance,
                beta: stats.beta[u],
                kurtosis: m4 / (m2 * m2),
            });
        }
    }
    Ok(CltReport {
        n_dirs: n_d,
        n_draws,
        rows,
    })
}
