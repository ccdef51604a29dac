//! Anti-jamming precoding with a legitimate IRS against a randomly
//! reconfigured jamming surface.
//!
//! The numerical core is generic over the real scalar type ([`Real`], for
//! `f32` and `f64`). Configuration, geometry and reported rates are `f64`.
//!
//! Pipeline of one trial: [`scenario::build_geometry`] →
//! [`channels::draw_channel_set`] → [`manifold::optimize_irs`] →
//! [`precoding::anti_jamming_precoder`] → [`precoding::sjnr_from_draws`].
//! [`harness`] repeats that over trials, benchmarks and sweeps.

pub mod channels;
pub mod disco;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod manifold;
pub mod precoding;
pub mod rng;
pub mod scalar;
pub mod scenario;

pub use channels::{ChannelSet, LargeScale};
pub use disco::{AcaStatistics, CltReport, DirsDraws, PhaseAlphabet, PhaseDistribution, ReflectionVector};
pub use error::{Error, Result};
pub use harness::{BenchmarkId, RateReport, SweepKind};
pub use linalg::{CMatrix, Cholesky};
pub use manifold::{PassiveProblem, RcgSettings, RcgTrace};
pub use precoding::{EffectiveChannels, Eigenpair, Pencil, PrecoderMatrix, SjnrMethod, SjnrReport};
pub use scalar::Real;
pub use scenario::{GeometryLayout, Profile, ScenarioConfig};

pub type Complex64 = num_complex::Complex<f64>;
pub type Complex32 = num_complex::Complex<f32>;

pub type CMatrix64 = CMatrix<f64>;
pub type CMatrix32 = CMatrix<f32>;
pub type ChannelSet64 = ChannelSet<f64>;
pub type ChannelSet32 = ChannelSet<f32>;
pub type ReflectionVector64 = ReflectionVector<f64>;
pub type ReflectionVector32 = ReflectionVector<f32>;
pub type EffectiveChannels64 = EffectiveChannels<f64>;
pub type EffectiveChannels32 = EffectiveChannels<f32>;
pub type PrecoderMatrix64 = PrecoderMatrix<f64>;
pub type PrecoderMatrix32 = PrecoderMatrix<f32>;
pub type PassiveProblem64 = PassiveProblem<f64>;
pub type PassiveProblem32 = PassiveProblem<f32>;
