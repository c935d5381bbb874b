//! Simulation and detection for generalized optical MIMO links: Lambertian
//! line-of-sight channels, GOSM/GOSMP codecs, joint ML and zero-forcing
//! detectors, and a from-scratch neural detector that works without channel
//! knowledge.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below fix the double-precision instantiation used by the tools.

pub mod channel;
pub mod detectors;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod modulation;
pub mod neural;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub use scalar::Scalar;

pub type Matrix = linalg::Matrix<f64>;
pub type ChannelMatrix = channel::ChannelMatrix<f64>;
pub type GomimoScheme = modulation::GomimoScheme<f64>;
pub type Codebook = modulation::Codebook<f64>;
pub type Detector = detectors::Detector<f64>;
pub type FrontEnd = detectors::FrontEnd<f64>;
pub type MlpParams = neural::MlpParams<f64>;

pub type MatrixF32 = linalg::Matrix<f32>;
pub type ChannelMatrixF32 = channel::ChannelMatrix<f32>;
pub type GomimoSchemeF32 = modulation::GomimoScheme<f32>;
pub type DetectorF32 = detectors::Detector<f32>;
pub type MlpParamsF32 = neural::MlpParams<f32>;
