//! Location-aware channel estimation for RIS-aided mmWave MIMO links.
//!
//! The crate simulates beam training with and without knowledge of the
//! BS/RIS geometry, applies RIS beamwidth adaptation, and recovers the
//! effective cascaded channel by 1D, 2D, or 3D atomic norm minimization,
//! each solved as a structured SDP with an ADMM engine.
//!
//! Numeric code is generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below name the double-precision instantiations used by the
//! harness and CLI.

// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anm;
pub mod beamtrain;
pub mod channel;
pub mod error;
pub mod harness;
pub mod scalar;
pub mod sdpsolver;
mod selfcheck;
pub mod tensorops;

pub use anm::{AnmMode, AnmProblem, AnmSolution};
pub use error::{Error, Result};
pub use scalar::Real;
pub use sdpsolver::{AdmmSettings, AdmmStats, KktResiduals};
pub use tensorops::{CMatrix, CVector, SpatialFrequency, ToeplitzLevels};

pub type Complex64 = num_complex::Complex<f64>;
pub type ComplexMatrix = CMatrix<f64>;
pub type ComplexVector = CVector<f64>;
pub type ComplexMatrix32 = CMatrix<f32>;
pub type AnmProblem64 = AnmProblem<f64>;
pub type AnmSolution64 = AnmSolution<f64>;
pub type ChannelPair64 = channel::ChannelPair<f64>;
pub type FrameCapture64 = beamtrain::FrameCapture<f64>;
pub type PathSet64 = channel::PathSet<f64>;
pub type RisCodebook64 = beamtrain::RisCodebook<f64>;
