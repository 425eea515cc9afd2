//! Multigroup multicast precoding for cell-free massive MIMO.
//!
//! The crate contains a correlated-fading channel generator, a small
//! primal-dual interior-point solver for complex semidefinite programs, the
//! successive elimination algorithm for rank-one max-min fair multicast
//! precoders with SDR baselines, a low-complexity phase-alignment heuristic,
//! and a Monte Carlo harness. Numeric code is generic over [`Real`]; the
//! aliases below fix the scalar for everyday use.

pub mod channel;
pub mod convex;
pub mod error;
pub mod harness;
pub mod heuristic;
pub mod metrics;
pub mod mmf_sdr;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type ChannelSet = channel::ChannelSet<f64>;
pub type HermitianMatrix = convex::HermitianMatrix<f64>;
pub type ConicProblem = convex::ConicProblem<f64>;
pub type ConicSolution = convex::ConicSolution<f64>;
pub type MMFResult = mmf_sdr::MMFResult<f64>;
pub type HeuristicResult = heuristic::HeuristicResult<f64>;
pub type CVec = scalar::CVec<f64>;
pub type CMat = scalar::CMat<f64>;

pub type ChannelSetF32 = channel::ChannelSet<f32>;
pub type HeuristicResultF32 = heuristic::HeuristicResult<f32>;
