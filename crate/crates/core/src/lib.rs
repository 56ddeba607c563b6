//! Simulation and inference for exchangeable Gibbs partitions whose weights
//! are mixtures of Ewens–Pitman weights over the strength parameter θ.
//!
//! The crate is organised bottom-up:
//!
//! * [`mixing`]: the mixing distribution μ, its discretisation, and the tilted
//!   measures that give the predictive weight ratios.
//! * [`partition`]: the sequential sampler, sufficient statistics, the true
//!   predictive simplex and an exact enumeration oracle for small `n`.
//! * [`sibuya`]: the limiting block-size law, its Fisher information and the
//!   score functions Ψ and Ψₙ.
//! * [`qmle`]: quasi-maximum-likelihood estimation of the discount α.
//! * [`predict`]: simplex estimators, f-divergences and confidence intervals.
//! * [`harness`]: replicated Monte Carlo experiments and their outputs.

pub mod error;
pub mod harness;
pub mod mixing;
pub mod partition;
pub mod predict;
pub mod qmle;
pub mod quadrature;
pub mod rng;
pub mod sibuya;
pub mod stats;

pub use error::{Error, Result};
pub use mixing::{MixingKind, MixingSpec, ParticleMeasure};
pub use partition::{Assignment, PartitionState, SuffStats};
pub use predict::{EstimatorKind, SimplexPair, SubsetCi};
pub use qmle::{qmle, Boundary, QmleResult};
pub use sibuya::FisherInfo;
