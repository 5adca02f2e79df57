//! Time-frequency localization operators on sampled periodic signals.
//!
//! The transform layer (grids, STFT, windows, weights, mixed norms, symbols)
//! is generic over [`Real`]; the operator layer works in `f64` on dense
//! complex matrices.

pub mod error;
pub mod fourier;
pub mod scalar;
pub mod signal;
pub mod stft;
pub mod weights;
pub mod windows;
pub mod modspace;
pub mod symbol;
pub mod linalg;
pub mod locop;
pub mod calculus;
pub mod fredholm;

pub use error::{Error, Result};
pub use scalar::Real;
pub use weights::WeightSpec;

pub type Grid = signal::Grid<f64>;
pub type PhasePoint = signal::PhasePoint<f64>;
pub type Signal = signal::SampledSignal<f64>;
pub type PhasePlane = stft::PhasePlaneArray<f64>;
