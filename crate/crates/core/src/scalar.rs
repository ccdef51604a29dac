//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All channel, precoding and manifold math is written against [`Real`], so the
//! same code runs in `f64` (the default, used by the harness and CLI) and in
//! `f32` for throughput experiments. Configuration and geometry stay in `f64`.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real floating-point type usable as the base field of the complex math.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Sum
    + NumAssign
    + 'static
{
    /// Lossy conversion from `f64`.
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("f64 is representable in every Real type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("Real values convert to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `e^{j·phase}` with the phase given in `f64` radians.
#[inline]
pub fn unit_phasor<T: Real>(phase: f64) -> Complex<T> {
    Complex::new(T::of(phase.cos()), T::of(phase.sin()))
}

/// Real inner product `Re(aᴴb)` on ℂⁿ viewed as ℝ²ⁿ.
pub fn real_inner<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum()
}

pub fn norm_sqr<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum()
}

pub fn norm<T: Real>(a: &[Complex<T>]) -> T {
    norm_sqr(a).sqrt()
}

/// Wraps an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = phase.rem_euclid(tau);
    // rem_euclid can round up to exactly tau for tiny negative inputs
    if w >= tau {
        0.0
    } else {
        w
    }
}
