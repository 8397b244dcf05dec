//! Performance and robustness analysis of stochastic jump linear systems
//! (SJLS) with the order-2 Wasserstein distance.
//!
//! A SJLS is a family of mode matrices `{A_j}` together with a stochastic
//! jump process that at every step picks one mode according to an occupation
//! probability vector `pi(k)`. Starting from a Gaussian-mixture state PDF,
//! the state distribution stays a Gaussian mixture, but its component count
//! grows like `m^k`. This crate provides:
//!
//! - closed-form Wasserstein distances between Gaussians and to a Dirac at
//!   the origin ([`wasserstein`]),
//! - the exact exponential mixture propagation used as a ground-truth oracle
//!   ([`propagation::exact_propagate`]),
//! - the split-and-merge loop that tracks a single synthetic Gaussian whose
//!   distance to the Dirac equals the exact mixture distance at every step,
//!   in constant memory ([`propagation::analyze`]),
//! - Monte-Carlo path simulation tying the distance to the empirical
//!   mean-square norm ([`monte_carlo`]),
//! - i.i.d. / Markov / semi-Markov jump processes ([`jump_process`]), and
//! - a builder for networked-control-system models with random delays,
//!   including the inverted-pendulum preset ([`model_builder`]).

pub mod error;
pub mod gaussian_mixture;
pub mod jump_process;
pub mod model_builder;
pub mod monte_carlo;
pub mod numerics;
pub mod propagation;
pub mod wasserstein;

pub use error::Error;
pub use gaussian_mixture::{Gaussian, GaussianMixture, MixtureSampler};
pub use jump_process::{
    IidProcess, JumpProcess, MarkovProcess, OccupationVector, SemiMarkovProcess,
};
pub use model_builder::{AugmentedSjls, DelayedNcs, InitKind, JumpKind};
pub use monte_carlo::{MomentEstimate, Semantics, SimulationConfig, StabilityVerdict};
pub use propagation::{PathWeightedMixture, Sjls, TrajectoryStep, WassersteinTrajectory};
pub use wasserstein::Distance;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;
