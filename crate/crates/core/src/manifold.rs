//! Passive beamforming on the complex circle manifold.
//!
//! Objectives have the form `P(v) = ‖Aᵀv + b‖²` with `|v_r| = 1`. The
//! effective channel power uses `A[r, k·N_A + n] = conj(h_IU[r,k])·H_AI[r,n]`
//! and `b[k·N_A + n] = conj(h_AU[n,k])`, so that block k of `Aᵀv + b` is the
//! conjugate of user k's effective channel.
//!
//! With `∇P = 2·conj(A)·(Aᵀv + b)` the first-order expansion is
//! `P(v+δ) ≈ P(v) + Re⟨∇P, δ⟩`, i.e. `∂P/∂Re v_r = Re ∇_r` and
//! `∂P/∂Im v_r = Im ∇_r`.

use std::path::Path;

use num_complex::Complex;
use rand::Rng;

use crate::channels::ChannelSet;
use crate::disco::{PhaseAlphabet, ReflectionVector};
use crate::error::{invalid, Error, Result};
use crate::linalg::CMatrix;
use crate::precoding::PrecoderMatrix;
use crate::scalar::{norm, real_inner, Real};

/// Riemannian conjugate-gradient parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RcgSettings {
    pub max_iters: usize,
    /// Stop once the Riemannian gradient norm of the normalized objective is
    /// below `grad_tol·√N_I`.
    pub grad_tol: f64,
    /// First Armijo trial, as the phase move (radians) of the element with the
    /// largest search-direction entry.
    pub armijo_init_step: f64,
    pub armijo_contraction: f64,
    pub armijo_slope: f64,
    pub max_backtracks: usize,
    /// Reset the conjugate direction every this many iterations; 0 means N_I.
    pub restart_period: usize,
    /// Best-of-R starts; the first start is the identity reflection.
    pub restarts: usize,
}

impl Default for RcgSettings {
    fn default() -> Self {
        Self {
            max_iters: 500,
            grad_tol: 1e-6,
            armijo_init_step: 1.0,
            armijo_contraction: 0.5,
            armijo_slope: 1e-4,
            max_backtracks: 50,
            restart_period: 0,
            restarts: 1,
        }
    }
}

impl RcgSettings {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidScenario(format!("rcg: {m}")));
        if self.max_iters == 0 {
            return bad("max_iters must be positive");
        }
        if !(self.grad_tol > 0.0) || !self.grad_tol.is_finite() {
            return bad("grad_tol must be positive");
        }
        if !(self.armijo_init_step > 0.0) || !self.armijo_init_step.is_finite() {
            return bad("armijo_init_step must be positive");
        }
        if !(self.armijo_contraction > 0.0 && self.armijo_contraction < 1.0) {
            return bad("armijo_contraction must lie in (0, 1)");
        }
        if !(self.armijo_slope > 0.0 && self.armijo_slope < 1.0) {
            return bad("armijo_slope must lie in (0, 1)");
        }
        if self.max_backtracks == 0 {
            return bad("max_backtracks must be positive");
        }
        if self.restarts == 0 {
            return bad("restarts must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::MaxIterations => "max-iterations",
            Termination::LineSearchFailed => "line-search-failed",
        }
    }
}

/// Per-iteration record of one optimizer run. Entry 0 is the starting point,
/// with step 0.
#[derive(Debug, Clone, PartialEq)]
pub struct RcgTrace {
    pub objective: Vec<f64>,
    pub grad_norm: Vec<f64>,
    pub step: Vec<f64>,
    pub termination: Termination,
}

impl RcgTrace {
    pub fn iterations(&self) -> usize {
        self.objective.len().saturating_sub(1)
    }

    pub fn is_monotone(&self) -> bool {
        self.objective.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        write_trace_rows(&mut w, &[("", self)], false)?;
        w.flush()?;
        Ok(())
    }
}

/// Writes traces as `(iter, P_E, grad_norm, step)` rows, optionally prefixed
/// with a label column.
pub fn write_trace_rows<W: std::io::Write>(
    w: &mut csv::Writer<W>,
    traces: &[(&str, &RcgTrace)],
    labelled: bool,
) -> Result<()> {
    let mut header = vec!["iter", "P_E", "grad_norm", "step"];
    if labelled {
        header.insert(0, "run");
    }
    w.write_record(&header)?;
    for (label, t) in traces {
        for i in 0..t.objective.len() {
            let mut rec = vec![
                i.to_string(),
                format!("{:e}", t.objective[i]),
                format!("{:e}", t.grad_norm[i]),
                format!("{:e}", t.step[i]),
            ];
            if labelled {
                rec.insert(0, label.to_string());
            }
            w.write_record(&rec)?;
        }
    }
    Ok(())
}

/// `P(v) = ‖Aᵀv + b‖²` over unit-modulus `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct PassiveProblem<T> {
    a: CMatrix<T>,
    b: Vec<Complex<T>>,
    scale: T,
}

impl<T: Real> PassiveProblem<T> {
    pub fn new(a: CMatrix<T>, b: Vec<Complex<T>>) -> Result<Self> {
        if a.cols() != b.len() {
            return Err(Error::DimensionMismatch {
                context: "PassiveProblem::new",
                expected: format!("offset of length {}", a.cols()),
                actual: format!("{}", b.len()),
            });
        }
        let s = a.frobenius_norm_sqr() + b.iter().map(|z| z.norm_sqr()).sum::<T>();
        let scale = if s > T::zero() { s } else { T::one() };
        Ok(Self { a, b, scale })
    }

    /// Effective channel power `Σ_k ‖h_L,k‖²`.
    pub fn effective_power(channels: &ChannelSet<T>) -> Result<Self> {
        let n_i = channels.n_irs();
        let n_a = channels.n_antennas();
        let k = channels.n_users();
        if channels.h_ai.shape() != (n_i, n_a) || channels.h_iu.shape() != (n_i, k) {
            return Err(Error::DimensionMismatch {
                context: "PassiveProblem::effective_power",
                expected: format!("h_ai {n_i}x{n_a}, h_iu {n_i}x{k}"),
                actual: format!("{:?}, {:?}", channels.h_ai.shape(), channels.h_iu.shape()),
            });
        }
        let a = CMatrix::from_fn(n_i, k * n_a, |r, j| {
            channels.h_iu[(r, j / n_a)].conj() * channels.h_ai[(r, j % n_a)]
        });
        let b = (0..k * n_a).map(|j| channels.h_au[(j % n_a, j / n_a)].conj()).collect();
        Self::new(a, b)
    }

    /// Intended-signal power `Σ_k |h_L,kᴴ w_k|²` for a fixed precoder.
    pub fn signal_power(channels: &ChannelSet<T>, w: &PrecoderMatrix<T>) -> Result<Self> {
        let full = Self::effective_power(channels)?;
        let n_a = channels.n_antennas();
        let k = channels.n_users();
        if w.w.shape() != (n_a, k) {
            return Err(Error::DimensionMismatch {
                context: "PassiveProblem::signal_power",
                expected: format!("precoder {n_a}x{k}"),
                actual: format!("{:?}", w.w.shape()),
            });
        }
        let a = CMatrix::from_fn(channels.n_irs(), k, |r, u| {
            (0..n_a).map(|n| full.a[(r, u * n_a + n)] * w.w[(n, u)]).sum()
        });
        let b = (0..k)
            .map(|u| (0..n_a).map(|n| full.b[u * n_a + n] * w.w[(n, u)]).sum())
            .collect();
        Self::new(a, b)
    }

    pub fn dim(&self) -> usize {
        self.a.rows()
    }

    /// Normalization applied inside the optimizer (`‖A‖_F² + ‖b‖²`).
    pub fn scale(&self) -> T {
        self.scale
    }

    fn residual(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        let mut u = self.b.clone();
        for (r, vr) in v.iter().enumerate() {
            for (o, a) in u.iter_mut().zip(self.a.row(r)) {
                *o += a * vr;
            }
        }
        u
    }

    pub fn value(&self, v: &[Complex<T>]) -> T {
        assert_eq!(v.len(), self.dim());
        self.residual(v).iter().map(|z| z.norm_sqr()).sum()
    }

    /// Euclidean gradient `2·conj(A)·(Aᵀv + b)`.
    pub fn gradient(&self, v: &[Complex<T>]) -> Vec<Complex<T>> {
        assert_eq!(v.len(), self.dim());
        let u = self.residual(v);
        let two = T::of(2.0);
        (0..self.dim())
            .map(|r| self.a.row(r).iter().zip(&u).map(|(a, x)| a.conj() * x).sum::<Complex<T>>() * two)
            .collect()
    }
}

fn check_unit_modulus<T: Real>(v: &[Complex<T>]) -> Result<()> {
    let tol = T::epsilon().sqrt();
    if let Some((r, z)) = v.iter().enumerate().find(|(_, z)| (z.norm() - T::one()).abs() > tol) {
        return Err(invalid(format!("entry {r} has modulus {} (expected 1)", z.norm())));
    }
    Ok(())
}

/// `Σ_k ‖h_L,k‖²` for IRS state `v`; rejects entries off the unit circle.
pub fn effective_power<T: Real>(v: &[Complex<T>], channels: &ChannelSet<T>) -> Result<T> {
    check_unit_modulus(v)?;
    let p = PassiveProblem::effective_power(channels)?;
    if v.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "effective_power",
            expected: format!("{} IRS elements", p.dim()),
            actual: format!("{}", v.len()),
        });
    }
    Ok(p.value(v))
}

pub fn euclidean_gradient<T: Real>(v: &[Complex<T>], channels: &ChannelSet<T>) -> Result<Vec<Complex<T>>> {
    check_unit_modulus(v)?;
    let p = PassiveProblem::effective_power(channels)?;
    if v.len() != p.dim() {
        return Err(Error::DimensionMismatch {
            context: "euclidean_gradient",
            expected: format!("{} IRS elements", p.dim()),
            actual: format!("{}", v.len()),
        });
    }
    Ok(p.gradient(v))
}

/// Projection onto the tangent space at `v`: `x − Re{x ⊙ v*} ⊙ v`.
pub fn tangent_projection<T: Real>(x: &[Complex<T>], v: &[Complex<T>]) -> Vec<Complex<T>> {
    x.iter()
        .zip(v)
        .map(|(xr, vr)| xr - vr * (xr * vr.conj()).re)
        .collect()
}

pub fn riemannian_gradient<T: Real>(euclid: &[Complex<T>], v: &[Complex<T>]) -> Vec<Complex<T>> {
    tangent_projection(euclid, v)
}

/// Polak–Ribière+ conjugate direction at `v`. Previous quantities are
/// transported by tangent projection; a negative coefficient restarts.
pub fn conjugate_direction<T: Real>(
    grad: &[Complex<T>],
    prev_dir: &[Complex<T>],
    prev_grad: &[Complex<T>],
    v: &[Complex<T>],
) -> Vec<Complex<T>> {
    let prev_sq = real_inner(prev_grad, prev_grad);
    let steepest: Vec<Complex<T>> = grad.iter().map(|g| -g).collect();
    if !(prev_sq > T::zero()) {
        return tangent_projection(&steepest, v);
    }
    let tg = tangent_projection(prev_grad, v);
    let diff: Vec<Complex<T>> = grad.iter().zip(&tg).map(|(a, b)| a - b).collect();
    let rho = (real_inner(grad, &diff) / prev_sq).max(T::zero());
    if rho == T::zero() {
        return tangent_projection(&steepest, v);
    }
    let td = tangent_projection(prev_dir, v);
    let d: Vec<Complex<T>> = steepest.iter().zip(&td).map(|(s, t)| s + t * rho).collect();
    tangent_projection(&d, v)
}

/// Entry-wise normalization of `v + step·direction`. Halves the step if an
/// entry would vanish; returns `v` unchanged if that never resolves.
pub fn retract_step<T: Real>(v: &[Complex<T>], direction: &[Complex<T>], step: T) -> Vec<Complex<T>> {
    let mut t = step;
    for _ in 0..64 {
        let moved: Vec<Complex<T>> = v.iter().zip(direction).map(|(a, d)| a + d * t).collect();
        if moved.iter().all(|z| z.norm() > T::min_positive_value().sqrt()) {
            return moved.into_iter().map(|z| z / z.norm()).collect();
        }
        t = t * T::of(0.5);
    }
    v.to_vec()
}

/// Maximizes `problem` over the complex circle starting from `init`.
pub fn rcg_optimize<T: Real>(
    problem: &PassiveProblem<T>,
    settings: &RcgSettings,
    init: &ReflectionVector<T>,
) -> Result<(ReflectionVector<T>, RcgTrace)> {
    settings.validate()?;
    let n = problem.dim();
    if init.len() != n {
        return Err(Error::DimensionMismatch {
            context: "rcg_optimize",
            expected: format!("{n} elements"),
            actual: format!("{}", init.len()),
        });
    }
    let scale = problem.scale();
    let f = |v: &[Complex<T>]| -problem.value(v) / scale;
    let rgrad = |v: &[Complex<T>]| {
        let e: Vec<Complex<T>> = problem.gradient(v).into_iter().map(|g| -g / scale).collect();
        riemannian_gradient(&e, v)
    };
    let tol = T::of(settings.grad_tol * (n as f64).sqrt());
    let period = if settings.restart_period == 0 {
        n.max(1)
    } else {
        settings.restart_period
    };
    let c = T::of(settings.armijo_slope);
    let shrink = T::of(settings.armijo_contraction);

    let mut v = init.values().to_vec();
    let mut fv = f(&v);
    let mut g = rgrad(&v);
    let mut d: Vec<Complex<T>> = g.iter().map(|x| -x).collect();
    let mut trace = RcgTrace {
        objective: vec![(-fv * scale).as_f64()],
        grad_norm: vec![(norm(&g) * scale).as_f64()],
        step: vec![0.0],
        termination: Termination::MaxIterations,
    };

    let mut iter = 0;
    loop {
        if norm(&g) <= tol {
            trace.termination = Termination::GradientTolerance;
            break;
        }
        if iter >= settings.max_iters {
            trace.termination = Termination::MaxIterations;
            break;
        }
        let mut slope = real_inner(&g, &d);
        if !(slope < T::zero()) {
            d = g.iter().map(|x| -x).collect();
            slope = -real_inner(&g, &g);
        }
        let mut accepted = None;
        for attempt in 0..2 {
            let d_max = d.iter().map(|z| z.norm()).fold(T::zero(), T::max);
            let mut t = T::of(settings.armijo_init_step) / d_max;
            for _ in 0..settings.max_backtracks {
                let cand = retract_step(&v, &d, t);
                let fc = f(&cand);
                if fc <= fv + c * t * slope {
                    accepted = Some((cand, fc, t));
                    break;
                }
                t = t * shrink;
            }
            if accepted.is_some() || attempt == 1 {
                break;
            }
            // fall back to steepest descent once
            d = g.iter().map(|x| -x).collect();
            slope = -real_inner(&g, &g);
        }
        let Some((v_new, f_new, t)) = accepted else {
            trace.termination = Termination::LineSearchFailed;
            break;
        };
        let g_new = rgrad(&v_new);
        iter += 1;
        d = if iter % period == 0 {
            g_new.iter().map(|x| -x).collect()
        } else {
            conjugate_direction(&g_new, &d, &g, &v_new)
        };
        v = v_new;
        fv = f_new;
        g = g_new;
        trace.objective.push((-fv * scale).as_f64());
        trace.grad_norm.push((norm(&g) * scale).as_f64());
        trace.step.push(t.as_f64());
    }
    Ok((ReflectionVector::from_values(&v)?, trace))
}

/// Nearest alphabet phase per element (angular distance, ties to the lower index).
pub fn project_discrete<T: Real>(v: &ReflectionVector<T>, alphabet: &PhaseAlphabet) -> ReflectionVector<T> {
    let idx: Vec<usize> = v.phases().iter().map(|&p| alphabet.nearest_index(p)).collect();
    ReflectionVector::from_indices(&idx, alphabet.clone()).expect("indices come from the alphabet")
}

/// Result of the passive design stage.
#[derive(Debug, Clone, PartialEq)]
pub struct IrsDesign<T> {
    pub continuous: ReflectionVector<T>,
    pub discrete: ReflectionVector<T>,
    /// Trace of the start that produced `continuous`.
    pub trace: RcgTrace,
}

/// Best-of-R RCG (identity start first, then uniformly random phases),
/// followed by projection onto the alphabet.
pub fn optimize_irs<T: Real, R: Rng + ?Sized>(
    problem: &PassiveProblem<T>,
    settings: &RcgSettings,
    alphabet: &PhaseAlphabet,
    rng: &mut R,
) -> Result<IrsDesign<T>> {
    let n = problem.dim();
    let mut best: Option<(ReflectionVector<T>, RcgTrace)> = None;
    for start in 0..settings.restarts {
        let init = if start == 0 {
            ReflectionVector::identity(n)
        } else {
            ReflectionVector::from_phases((0..n).map(|_| rng.random::<f64>() * std::f64::consts::TAU).collect())
        };
        let (v, trace) = rcg_optimize(problem, settings, &init)?;
        let better = match &best {
            None => true,
            Some((_, bt)) => trace.objective.last() > bt.objective.last(),
        };
        if better {
            best = Some((v, trace));
        }
    }
    let (continuous, trace) = best.expect("at least one start");
    let discrete = project_discrete(&continuous, alphabet);
    Ok(IrsDesign {
        continuous,
        discrete,
        trace,
    })
}

/// Exhaustive maximum of `problem` over all `|alphabet|^N_I` discrete states.
/// Only sensible for tiny surfaces.
pub fn exhaustive_discrete<T: Real>(problem: &PassiveProblem<T>, alphabet: &PhaseAlphabet) -> Result<(ReflectionVector<T>, T)> {
    let n = problem.dim();
    let m = alphabet.len();
    let total = (m as f64).powi(n as i32);
    if total > 1e8 {
        return Err(invalid(format!("{total} configurations is too many for exhaustive search")));
    }
    let values: Vec<Complex<T>> = alphabet.values();
    let mut idx = vec![0usize; n];
    let mut best_idx = idx.clone();
    let mut best = T::neg_infinity();
    let mut v = vec![values[0]; n];
    loop {
        let p = problem.value(&v);
        if p > best {
            best = p;
            best_idx.copy_from_slice(&idx);
        }
        // odometer increment
        let mut pos = 0;
        loop {
            if pos == n {
                let best_v = ReflectionVector::from_indices(&best_idx, alphabet.clone())?;
                return Ok((best_v, best));
            }
            idx[pos] += 1;
            if idx[pos] < m {
                v[pos] = values[idx[pos]];
                break;
            }
            idx[pos] = 0;
            v[pos] = values[0];
            pos += 1;
        }
    }
}
