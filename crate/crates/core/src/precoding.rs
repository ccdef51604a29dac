//! Effective channels, the jamming-aware leakage precoder and SJNR evaluation.
//!
//! The precoder for user k maximizes
//! `wᴴ(h_k h_kᴴ + β̃_k I)w / wᴴ(H̃_k H̃_kᴴ + c_k I)w` with
//! `c_k = σ²K/P0 + Σ_{u≠k} β̃_u`, a Hermitian-definite generalized eigenproblem.

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;

use crate::channels::ChannelSet;
use crate::disco::{DirsDraws, PhaseAlphabet, PhaseDistribution, ReflectionVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::{CMatrix, Cholesky};
use crate::scalar::{norm, norm_sqr, Real};

/// Legitimate end-to-end channels, one column per user (N_A×K), such that user
/// k receives `h_L,kᴴ·x` from transmit vector `x`.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannels<T> {
    h_l: CMatrix<T>,
}

impl<T: Real> EffectiveChannels<T> {
    pub fn from_matrix(h_l: CMatrix<T>) -> Self {
        Self { h_l }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.h_l
    }

    pub fn n_antennas(&self) -> usize {
        self.h_l.rows()
    }

    pub fn n_users(&self) -> usize {
        self.h_l.cols()
    }

    pub fn user(&self, k: usize) -> Vec<Complex<T>> {
        self.h_l.column(k)
    }

    /// The other users' channels in their original order (N_A×(K−1)).
    pub fn leave_one_out(&self, k: usize) -> CMatrix<T> {
        let keep: Vec<usize> = (0..self.n_users()).filter(|&u| u != k).collect();
        CMatrix::from_fn(self.n_antennas(), keep.len(), |r, c| self.h_l[(r, keep[c])])
    }
}

/// `h_L,k = H_AIᴴ·Φᴴ·h_IU,k + h_AU,k`; without an IRS state only the direct path remains.
pub fn effective_channels<T: Real>(
    channels: &ChannelSet<T>,
    irs: Option<&ReflectionVector<T>>,
) -> Result<EffectiveChannels<T>> {
    let mut h_l = channels.h_au.clone();
    let Some(irs) = irs else {
        return Ok(EffectiveChannels { h_l });
    };
    let n_i = channels.n_irs();
    if irs.len() != n_i || channels.h_iu.rows() != n_i || channels.h_ai.cols() != h_l.rows() {
        return Err(Error::DimensionMismatch {
            context: "effective_channels",
            expected: format!("{n_i} IRS elements"),
            actual: format!("state of length {}", irs.len()),
        });
    }
    let v = irs.values();
    for r in 0..n_i {
        let ai = channels.h_ai.row(r);
        for (k, iu) in channels.h_iu.row(r).iter().enumerate() {
            let c = v[r].conj() * iu;
            for (n, a) in ai.iter().enumerate() {
                h_l[(n, k)] += a.conj() * c;
            }
        }
    }
    Ok(EffectiveChannels { h_l })
}

/// Hermitian-definite pencil `(numerator, denominator)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Pencil<T> {
    pub numerator: CMatrix<T>,
    pub denominator: CMatrix<T>,
}

impl<T: Real> Pencil<T> {
    /// Ordinary Hermitian eigenproblem for `a`.
    pub fn standard(a: CMatrix<T>) -> Self {
        let n = a.rows();
        Self {
            numerator: a,
            denominator: CMatrix::identity(n),
        }
    }
}

fn check_user_inputs<T: Real>(k: usize, eff: &EffectiveChannels<T>, beta_est: &[T], noise: T, power: T) -> Result<()> {
    let users = eff.n_users();
    if k >= users {
        return Err(invalid(format!("user index {k} out of range for {users} users")));
    }
    if beta_est.len() != users {
        return Err(Error::DimensionMismatch {
            context: "precoder ACA estimates",
            expected: format!("{users} values"),
            actual: format!("{}", beta_est.len()),
        });
    }
    if beta_est.iter().any(|b| !(*b >= T::zero()) || !b.is_finite()) {
        return Err(invalid("ACA variance estimates must be non-negative and finite"));
    }
    if !(noise >= T::zero()) || !noise.is_finite() {
        return Err(invalid(format!("noise power must be non-negative, got {noise}")));
    }
    if !(power > T::zero()) || !power.is_finite() {
        return Err(invalid(format!("power budget must be positive, got {power}")));
    }
    Ok(())
}

/// Signal and leakage-plus-loading matrices of user `k`.
pub fn build_pencil<T: Real>(
    k: usize,
    eff: &EffectiveChannels<T>,
    beta_est: &[T],
    noise: T,
    power: T,
) -> Result<Pencil<T>> {
    check_user_inputs(k, eff, beta_est, noise, power)?;
    let users = eff.n_users();
    let h = eff.user(k);
    let mut numerator = CMatrix::outer(&h, &h);
    numerator.add_to_diagonal(beta_est[k]);
    let others = eff.leave_one_out(k);
    let mut denominator = others.matmul(&others.adjoint())?;
    let loading = noise * T::of(users as f64) / power
        + (0..users).filter(|&u| u != k).map(|u| beta_est[u]).sum::<T>();
    denominator.add_to_diagonal(loading);
    denominator.hermitize();
    Ok(Pencil {
        numerator,
        denominator,
    })
}

/// `A_k = numerator · denominator⁻¹`, evaluated through Cholesky solves.
pub fn build_a<T: Real>(
    k: usize,
    eff: &EffectiveChannels<T>,
    beta_est: &[T],
    noise: T,
    power: T,
) -> Result<CMatrix<T>> {
    let p = build_pencil(k, eff, beta_est, noise, power)?;
    let ch = Cholesky::new(&p.denominator)?;
    // N B⁻¹ = (B⁻¹ N)ᴴ for Hermitian N and B
    Ok(ch.solve_matrix(&p.numerator)?.adjoint())
}

/// Dominant generalized eigenpair.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair<T> {
    pub value: T,
    /// Unit norm, largest-magnitude entry real and positive.
    pub vector: Vec<Complex<T>>,
    /// `‖Cz − λz‖ / ‖C‖_F` in the whitened problem.
    pub residual: T,
    pub iterations: usize,
}

const MAX_SQUARINGS: usize = 64;
const MAX_POLISH: usize = 500;

fn default_tolerance<T: Real>() -> T {
    T::epsilon().powf(T::of(0.6))
}

/// Largest eigenpair of `numerator·y = λ·denominator·y`.
///
/// Whitens with the Cholesky factor of the denominator, isolates the dominant
/// eigenspace of the whitened matrix by repeated trace-normalized squaring,
/// then polishes with power iteration.
pub fn max_eigvec<T: Real>(pencil: &Pencil<T>) -> Result<Eigenpair<T>> {
    let n = pencil.numerator.rows();
    if pencil.numerator.cols() != n || pencil.denominator.shape() != (n, n) {
        return Err(Error::DimensionMismatch {
            context: "max_eigvec",
            expected: "two square matrices of equal size".into(),
            actual: format!("{:?} and {:?}", pencil.numerator.shape(), pencil.denominator.shape()),
        });
    }
    if n == 0 {
        return Err(invalid("empty eigenproblem"));
    }
    let ch = Cholesky::new(&pencil.denominator)?;
    let c = ch.whiten(&pencil.numerator)?;
    let c_norm = c.frobenius_norm();
    let tol = default_tolerance::<T>();

    let (mut z, value, residual, iterations) = if c_norm == T::zero() {
        let mut e = vec![Complex::zero(); n];
        e[0] = Complex::one();
        (e, T::zero(), T::zero(), 0)
    } else {
        dominant_hermitian(&c, c_norm, tol)?
    };

    z = ch.solve_upper(&z);
    let zn = norm(&z);
    z.iter_mut().for_each(|x| *x = *x / zn);
    fix_phase(&mut z);
    Ok(Eigenpair {
        value,
        vector: z,
        residual,
        iterations,
    })
}

fn dominant_hermitian<T: Real>(c: &CMatrix<T>, c_norm: T, tol: T) -> Result<(Vec<Complex<T>>, T, T, usize)> {
    let n = c.rows();
    let mut q = c.scale(T::one() / c_norm);
    let mut squarings = 0;
    for _ in 0..MAX_SQUARINGS {
        let mut q2 = q.matmul(&q)?;
        let tr = q2.trace().re;
        if !(tr > T::zero()) {
            break;
        }
        q2 = q2.scale(T::one() / tr);
        q2.hermitize();
        let change = q2.sub(&q)?.frobenius_norm();
        q = q2;
        squarings += 1;
        if change <= tol {
            break;
        }
    }
    let best = (0..n)
        .max_by(|&a, &b| {
            let na = norm_sqr(&q.column(a));
            let nb = norm_sqr(&q.column(b));
            na.partial_cmp(&nb).unwrap_or(std::cmp::Ordering::Equal)
        })
        .expect("n > 0");
    let mut z = q.column(best);
    let zn = norm(&z);
    if !(zn > T::zero()) || !zn.is_finite() {
        z = vec![Complex::zero(); n];
        z[0] = Complex::one();
    } else {
        z.iter_mut().for_each(|x| *x = *x / zn);
    }

    let mut residual = T::infinity();
    for it in 0..MAX_POLISH {
        let x = c.mul_vec(&z)?;
        let value: T = z.iter().zip(&x).map(|(a, b)| (a.conj() * b).re).sum();
        residual = x
            .iter()
            .zip(&z)
            .map(|(xi, zi)| (xi - zi * value).norm_sqr())
            .sum::<T>()
            .sqrt()
            / c_norm;
        if residual <= tol {
            return Ok((z, value, residual, squarings + it));
        }
        let xn = norm(&x);
        if !(xn > T::zero()) {
            break;
        }
        z = x.into_iter().map(|v| v / xn).collect();
    }
    Err(Error::EigenNotConverged {
        iterations: squarings + MAX_POLISH,
        residual: residual.as_f64(),
    })
}

/// Rotates `v` so its largest-magnitude entry is real and positive.
pub fn fix_phase<T: Real>(v: &mut [Complex<T>]) {
    let mut best = 0;
    let mut best_mag = T::neg_infinity();
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mag * (T::one() + T::of(1e-12)) {
            best = i;
            best_mag = m;
        }
    }
    if best_mag > T::zero() {
        let rot = v[best].conj() / best_mag;
        v.iter_mut().for_each(|z| *z = *z * rot);
        v[best].im = T::zero();
    }
}

/// Transmit precoder, one column per user.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderMatrix<T> {
    pub w: CMatrix<T>,
    /// Total power budget P0, watts.
    pub power_budget: T,
}

impl<T: Real> PrecoderMatrix<T> {
    pub fn total_power(&self) -> T {
        self.w.frobenius_norm_sqr()
    }

    pub fn column(&self, k: usize) -> Vec<Complex<T>> {
        self.w.column(k)
    }
}

/// Per-user generalized-eigenvector precoder with an equal split `‖w_k‖² = P0/K`.
/// All-zero ACA estimates give the classical leakage-based precoder.
pub fn anti_jamming_precoder<T: Real>(
    eff: &EffectiveChannels<T>,
    beta_est: &[T],
    noise: T,
    power: T,
) -> Result<PrecoderMatrix<T>> {
    let users = eff.n_users();
    let mut w = CMatrix::zeros(eff.n_antennas(), users);
    let scale = (power / T::of(users as f64)).sqrt();
    for k in 0..users {
        let pair = max_eigvec(&build_pencil(k, eff, beta_est, noise, power)?)?;
        let col: Vec<Complex<T>> = pair.vector.iter().map(|z| z * scale).collect();
        w.set_column(k, &col);
    }
    Ok(PrecoderMatrix {
        w,
        power_budget: power,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SjnrMethod {
    MonteCarlo,
    ClosedForm,
    Deterministic,
}

/// Per-user SJNR and the resulting SJNR rate.
#[derive(Debug, Clone, PartialEq)]
pub struct SjnrReport {
    pub eta: Vec<f64>,
    /// Standard error of each `eta` (Monte Carlo only, needs at least two draws).
    pub eta_stderr: Option<Vec<f64>>,
    /// `Σ log2(1 + η_k)`, bits/s/Hz.
    pub rate: f64,
    pub method: SjnrMethod,
}

impl SjnrReport {
    fn new(eta: Vec<f64>, eta_stderr: Option<Vec<f64>>, method: SjnrMethod) -> Self {
        let rate = eta.iter().map(|e| (1.0 + e).log2()).sum();
        Self {
            eta,
            eta_stderr,
            rate,
            method,
        }
    }

    pub fn rate_per_user(&self) -> f64 {
        self.rate / self.eta.len() as f64
    }
}

fn check_precoder<T: Real>(eff: &EffectiveChannels<T>, w: &PrecoderMatrix<T>) -> Result<()> {
    if w.w.shape() != eff.matrix().shape() {
        return Err(Error::DimensionMismatch {
            context: "SJNR evaluation",
            expected: format!("precoder of shape {:?}", eff.matrix().shape()),
            actual: format!("{:?}", w.w.shape()),
        });
    }
    Ok(())
}

/// `G[u, k] = h_L,uᴴ·w_k`.
fn gains<T: Real>(eff: &EffectiveChannels<T>, w: &PrecoderMatrix<T>) -> Result<CMatrix<T>> {
    eff.matrix().adjoint().matmul(&w.w)
}

/// Closed-form SJNR with the ACA variance of the target user in every
/// denominator term:
/// `η_k = (|h_kᴴw_k|² + β_k‖w_k‖²) / (Σ_{u≠k}(|h_uᴴw_k|² + β_k‖w_k‖²) + σ²)`.
pub fn sjnr_closed_form<T: Real>(
    eff: &EffectiveChannels<T>,
    w: &PrecoderMatrix<T>,
    beta: &[f64],
    noise: f64,
) -> Result<SjnrReport> {
    check_precoder(eff, w)?;
    let users = eff.n_users();
    if beta.len() != users {
        return Err(Error::DimensionMismatch {
            context: "sjnr_closed_form",
            expected: format!("{users} ACA variances"),
            actual: format!("{}", beta.len()),
        });
    }
    let g = gains(eff, w)?;
    let eta = (0..users)
        .map(|k| {
            let wk = norm_sqr(&w.column(k)).as_f64();
            let jam = beta[k] * wk;
            let signal = g[(k, k)].norm_sqr().as_f64() + jam;
            let leak: f64 = (0..users)
                .filter(|&u| u != k)
                .map(|u| g[(u, k)].norm_sqr().as_f64() + jam)
                .sum();
            signal / (leak + noise)
        })
        .collect();
    Ok(SjnrReport::new(eta, None, SjnrMethod::ClosedForm))
}

/// SJNR averaged over DIRS states:
/// `η_k = E|h_DT,kᴴw_k|² / (Σ_{u≠k} E|h_DT,uᴴw_k|² + σ² + extra_k)` with
/// `h_DT,uᴴ = h_L,uᴴ + h_DU,uᴴ·Φ_D·H_AD`.
///
/// `extra_noise[k]`, when given, is added to user k's denominator. Without
/// draws (or with an empty jamming surface) the SJNR is deterministic.
pub fn sjnr_from_draws<T: Real>(
    eff: &EffectiveChannels<T>,
    channels: &ChannelSet<T>,
    w: &PrecoderMatrix<T>,
    noise: f64,
    draws: Option<&DirsDraws>,
    extra_noise: Option<&[f64]>,
) -> Result<SjnrReport> {
    check_precoder(eff, w)?;
    let users = eff.n_users();
    let extra = match extra_noise {
        Some(x) if x.len() != users => {
            return Err(Error::DimensionMismatch {
                context: "sjnr_from_draws extra noise",
                expected: format!("{users} values"),
                actual: format!("{}", x.len()),
            })
        }
        Some(x) => x.to_vec(),
        None => vec![0.0; users],
    };
    let base = gains(eff, w)?;
    let n_d = channels.n_dirs();
    let draws = draws.filter(|d| n_d > 0 && d.n_draws() > 0);

    let Some(draws) = draws else {
        let eta = (0..users)
            .map(|k| {
                let signal = base[(k, k)].norm_sqr().as_f64();
                let leak: f64 = (0..users).filter(|&u| u != k).map(|u| base[(u, k)].norm_sqr().as_f64()).sum();
                signal / (leak + noise + extra[k])
            })
            .collect();
        return Ok(SjnrReport::new(eta, None, SjnrMethod::Deterministic));
    };
    if draws.n_dirs() != n_d || channels.h_ad.cols() != eff.n_antennas() || channels.h_du.cols() != users {
        return Err(Error::DimensionMismatch {
            context: "sjnr_from_draws",
            expected: format!("{n_d} DIRS elements"),
            actual: format!("draws over {}", draws.n_dirs()),
        });
    }

    // terms[r, u·K + k] = conj(h_DU[r, u])·(H_AD W)[r, k]
    let ad_w = channels.h_ad.matmul(&w.w)?;
    let mut terms = CMatrix::zeros(n_d, users * users);
    for r in 0..n_d {
        let aw = ad_w.row(r);
        let du = channels.h_du.row(r);
        let row = terms.row_mut(r);
        for u in 0..users {
            let c = du[u].conj();
            for k in 0..users {
                row[u * users + k] = c * aw[k];
            }
        }
    }

    let n = draws.n_draws();
    // per user: Σa, Σb, Σa², Σb², Σab over draws
    let mut acc = vec![[0.0f64; 5]; users];
    draws.for_each_weighted_sum(&terms, |_, jam| {
        for k in 0..users {
            let mut a = 0.0;
            let mut b = 0.0;
            for u in 0..users {
                let p = (base[(u, k)] + jam[u * users + k]).norm_sqr().as_f64();
                if u == k {
                    a = p;
                } else {
                    b += p;
                }
            }
            let s = &mut acc[k];
            s[0] += a;
            s[1] += b;
            s[2] += a * a;
            s[3] += b * b;
            s[4] += a * b;
        }
    })?;

    let nf = n as f64;
    let mut eta = Vec::with_capacity(users);
    let mut se = Vec::with_capacity(users);
    for k in 0..users {
        let [sa, sb, saa, sbb, sab] = acc[k];
        let (ma, mb) = (sa / nf, sb / nf);
        let den = mb + noise + extra[k];
        let e = ma / den;
        eta.push(e);
        if n > 1 {
            // delta method for a ratio of means: Var(a − η·b) / (n·den²)
            let var_a = (saa - nf * ma * ma) / (nf - 1.0);
            let var_b = (sbb - nf * mb * mb) / (nf - 1.0);
            let cov = (sab - nf * ma * mb) / (nf - 1.0);
            let v = (var_a - 2.0 * e * cov + e * e * var_b).max(0.0);
            se.push((v / nf).sqrt() / den);
        }
    }
    let stderr = (n > 1).then_some(se);
    Ok(SjnrReport::new(eta, stderr, SjnrMethod::MonteCarlo))
}

/// Monte Carlo SJNR with `n_draws` fresh uniform DIRS states.
#[allow(clippy::too_many_arguments)]
pub fn sjnr_monte_carlo<T: Real, R: Rng + ?Sized>(
    channels: &ChannelSet<T>,
    irs: Option<&ReflectionVector<T>>,
    w: &PrecoderMatrix<T>,
    noise: f64,
    alphabet: &PhaseAlphabet,
    n_draws: usize,
    rng: &mut R,
) -> Result<SjnrReport> {
    if n_draws == 0 {
        return Err(invalid("Monte Carlo SJNR needs at least one draw"));
    }
    let eff = effective_channels(channels, irs)?;
    let draws = DirsDraws::draw(channels.n_dirs(), n_draws, alphabet, &PhaseDistribution::Uniform, rng)?;
    sjnr_from_draws(&eff, channels, w, noise, Some(&draws), None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::LargeScale;
    use crate::rng::{complex_normal, stream_rng};

    fn random(rows: usize, cols: usize, seed: u64) -> CMatrix<f64> {
        let mut rng = stream_rng(seed, &[]);
        CMatrix::from_fn(rows, cols, |_, _| complex_normal(&mut rng))
    }

    fn channel_set(n_a: usize, n_i: usize, n_d: usize, k: usize, seed: u64) -> ChannelSet<f64> {
        ChannelSet {
            h_ai: random(n_i, n_a, seed),
            h_iu: random(n_i, k, seed + 1),
            h_au: random(n_a, k, seed + 2),
            h_ad: random(n_d, n_a, seed + 3),
            h_du: random(n_d, k, seed + 4),
            large_scale: LargeScale {
                l_ai: 1.0,
                l_ad: 1.0,
                l_iu: vec![1.0; k],
                l_au: vec![1.0; k],
                l_du: vec![1.0; k],
            },
        }
    }

    #[test]
    fn effective_channel_matches_loop_expansion() {
        let ch = channel_set(4, 5, 2, 3, 10);
        let irs = ReflectionVector::<f64>::from_phases(vec![0.1, 2.0, 3.3, 4.1, 5.9]);
        let eff = effective_channels(&ch, Some(&irs)).unwrap();
        for k in 0..3 {
            for n in 0..4 {
                // row form: h_IU,kᴴ Φ H_AI, conjugated into the column convention
                let mut row = Complex::<f64>::new(0.0, 0.0);
                for r in 0..5 {
                    row += ch.h_iu[(r, k)].conj() * irs.values()[r] * ch.h_ai[(r, n)];
                }
                let want = row.conj() + ch.h_au[(n, k)];
                assert!((eff.matrix()[(n, k)] - want).norm() < 1e-12);
            }
        }
        let direct = effective_channels(&ch, None).unwrap();
        assert_eq!(direct.matrix(), &ch.h_au);
        let ident = effective_channels(&ch, Some(&ReflectionVector::identity(5))).unwrap();
        let cascade = ch.h_ai.adjoint().matmul(&ch.h_iu).unwrap().add(&ch.h_au).unwrap();
        assert!(ident.matrix().sub(&cascade).unwrap().frobenius_norm() < 1e-12);
        assert!(effective_channels(&ch, Some(&ReflectionVector::identity(4))).is_err());
    }

    #[test]
    fn leave_one_out_is_order_stable() {
        let eff = EffectiveChannels::from_matrix(random(3, 4, 1));
        let h = eff.leave_one_out(1);
        assert_eq!(h.column(0), eff.user(0));
        assert_eq!(h.column(1), eff.user(2));
        assert_eq!(h.column(2), eff.user(3));
    }

    #[test]
    fn build_a_single_user_is_scaled_outer_product() {
        let eff = EffectiveChannels::from_matrix(random(4, 1, 2));
        let (noise, power) = (0.5, 2.0);
        let a = build_a(0, &eff, &[0.0], noise, power).unwrap();
        let h = eff.user(0);
        let want = CMatrix::outer(&h, &h).scale(power / noise);
        assert!(a.sub(&want).unwrap().frobenius_norm() < 1e-12 * want.frobenius_norm());
    }

    #[test]
    fn build_a_residual() {
        let eff = EffectiveChannels::from_matrix(random(4, 3, 3));
        let beta = [0.2, 0.1, 0.3];
        let a = build_a(1, &eff, &beta, 0.4, 3.0).unwrap();
        let p = build_pencil(1, &eff, &beta, 0.4, 3.0).unwrap();
        let r = a.matmul(&p.denominator).unwrap().sub(&p.numerator).unwrap();
        assert!(r.frobenius_norm() <= 1e-10);
    }

    #[test]
    fn build_a_zero_channel_is_scaled_inverse() {
        let mut m = random(4, 3, 4);
        for r in 0..4 {
            m[(r, 0)] = Complex::zero();
        }
        let eff = EffectiveChannels::from_matrix(m);
        let beta = [0.7, 0.0, 0.0];
        let a = build_a(0, &eff, &beta, 1.0, 3.0).unwrap();
        let p = build_pencil(0, &eff, &beta, 1.0, 3.0).unwrap();
        // A·B = 0.7·I
        let ab = a.matmul(&p.denominator).unwrap();
        assert!(ab.sub(&CMatrix::scaled_identity(4, 0.7)).unwrap().frobenius_norm() < 1e-12);
        let asym = a.sub(&a.adjoint()).unwrap().frobenius_norm();
        assert!(asym < 1e-12 * a.frobenius_norm());
    }

    #[test]
    fn max_eigvec_diagonal() {
        let mut a = CMatrix::<f64>::zeros(2, 2);
        a[(0, 0)] = Complex::new(2.0, 0.0);
        a[(1, 1)] = Complex::new(1.0, 0.0);
        let e = max_eigvec(&Pencil::standard(a)).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
        assert!((e.vector[0] - Complex::new(1.0, 0.0)).norm() < 1e-9);
        assert!(e.vector[1].norm() < 1e-9);
    }

    #[test]
    fn single_user_precoder_is_mrt() {
        let eff = EffectiveChannels::from_matrix(random(6, 1, 5));
        let w = anti_jamming_precoder(&eff, &[0.0], 1e-3, 2.0).unwrap();
        let h = eff.user(0);
        let hn = norm(&h);
        let mut mrt: Vec<Complex<f64>> = h.iter().map(|z| z / hn).collect();
        fix_phase(&mut mrt);
        let s = 2f64.sqrt();
        for (a, b) in w.column(0).iter().zip(&mrt) {
            assert!((a - b * s).norm() < 1e-9);
        }
    }

    #[test]
    fn precoder_power_is_exact() {
        let eff = EffectiveChannels::from_matrix(random(8, 4, 6));
        let w = anti_jamming_precoder(&eff, &[0.1, 0.2, 0.3, 0.4], 0.01, 5.0).unwrap();
        assert!((w.total_power() - 5.0).abs() <= 1e-9 * 5.0);
        for k in 0..4 {
            assert!((norm_sqr(&w.column(k)) - 1.25).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_loading_makes_direction_independent_of_own_channel() {
        // own loading dominates: direction tends to the least-interference one
        let m = random(3, 3, 7);
        let noise = 1e-2;
        let beta = vec![1e9 * noise, 0.0, 0.0];
        let eff = EffectiveChannels::from_matrix(m.clone());
        let mut m2 = m.clone();
        for r in 0..3 {
            m2[(r, 0)] = m2[(r, 0)] * 3.0 + Complex::new(0.5, -1.0);
        }
        let eff2 = EffectiveChannels::from_matrix(m2);
        let w1 = anti_jamming_precoder(&eff, &beta, noise, 1.0).unwrap().column(0);
        let w2 = anti_jamming_precoder(&eff2, &beta, noise, 1.0).unwrap().column(0);
        let overlap: Complex<f64> = w1.iter().zip(&w2).map(|(a, b)| a.conj() * b).sum();
        // |⟨w1, w2⟩| / (‖w1‖‖w2‖) → 1
        assert!(overlap.norm() / (norm(&w1) * norm(&w2)) > 1.0 - 1e-6);
    }

    #[test]
    fn closed_form_trivial_cases() {
        let h = random(3, 1, 8);
        let eff = EffectiveChannels::from_matrix(h.clone());
        let w = PrecoderMatrix {
            w: random(3, 1, 9),
            power_budget: 1.0,
        };
        let rep = sjnr_closed_form(&eff, &w, &[0.0], 0.3).unwrap();
        let g: Complex<f64> = h.column(0).iter().zip(&w.column(0)).map(|(a, b)| a.conj() * b).sum();
        assert!((rep.eta[0] - g.norm_sqr() / 0.3).abs() < 1e-12);
        assert!((rep.rate - (1.0 + rep.eta[0]).log2()).abs() < 1e-15);

        // precoder orthogonal to everyone else
        let mut m = CMatrix::<f64>::zeros(2, 2);
        m[(0, 0)] = Complex::new(1.0, 0.0);
        m[(1, 1)] = Complex::new(2.0, 0.0);
        let eff = EffectiveChannels::from_matrix(m);
        let w = PrecoderMatrix {
            w: CMatrix::identity(2),
            power_budget: 2.0,
        };
        let rep = sjnr_closed_form(&eff, &w, &[0.0, 0.0], 0.5).unwrap();
        assert!((rep.eta[0] - 1.0 / 0.5).abs() < 1e-15);
        assert!((rep.eta[1] - 4.0 / 0.5).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_without_dirs_is_deterministic() {
        let ch = channel_set(4, 3, 0, 2, 20);
        let eff = effective_channels(&ch, None).unwrap();
        let w = anti_jamming_precoder(&eff, &[0.0, 0.0], 0.1, 1.0).unwrap();
        let alphabet = PhaseAlphabet::uniform(1).unwrap();
        let mc = sjnr_monte_carlo(&ch, None, &w, 0.1, &alphabet, 100, &mut stream_rng(1, &[])).unwrap();
        let cf = sjnr_closed_form(&eff, &w, &[0.0, 0.0], 0.1).unwrap();
        assert_eq!(mc.method, SjnrMethod::Deterministic);
        for (a, b) in mc.eta.iter().zip(&cf.eta) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn monte_carlo_matches_explicit_jammed_channel_average() {
        let ch = channel_set(3, 2, 6, 2, 30);
        let eff = effective_channels(&ch, None).unwrap();
        let w = anti_jamming_precoder(&eff, &[0.5, 0.5], 0.1, 1.0).unwrap();
        let alphabet = PhaseAlphabet::uniform(1).unwrap();
        let draws = DirsDraws::draw(6, 50, &alphabet, &PhaseDistribution::Uniform, &mut stream_rng(2, &[])).unwrap();
        let rep = sjnr_from_draws(&eff, &ch, &w, 0.1, Some(&draws), Some(&[0.2, 0.0])).unwrap();
        let mut num = [0.0f64; 2];
        let mut den = [0.0f64; 2];
        for d in 0..50 {
            let st: ReflectionVector<f64> = draws.state(d);
            let hd = crate::disco::jammed_channel(&ch.h_ad, &ch.h_du, st.values()).unwrap();
            for k in 0..2 {
                for u in 0..2 {
                    // (h_L,uᴴ + h_D,u)·w_k
                    let mut s = Complex::<f64>::new(0.0, 0.0);
                    for n in 0..3 {
                        s += (eff.matrix()[(n, u)].conj() + hd[(u, n)]) * w.w[(n, k)];
                    }
                    if u == k {
                        num[k] += s.norm_sqr() / 50.0;
                    } else {
                        den[k] += s.norm_sqr() / 50.0;
                    }
                }
            }
        }
        let want = [num[0] / (den[0] + 0.1 + 0.2), num[1] / (den[1] + 0.1)];
        for k in 0..2 {
            assert!((rep.eta[k] - want[k]).abs() < 1e-10 * want[k]);
        }
        assert!(rep.eta_stderr.is_some());
    }
}
