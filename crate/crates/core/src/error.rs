//! Error type shared by all modules.

use thiserror::Error;

/// Everything that can go wrong while building or analyzing a jump system.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Operand shapes are incompatible.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A matrix required to be symmetric positive semidefinite is not.
    #[error("matrix is not positive semidefinite (eigenvalue {min_eigenvalue} below floor)")]
    NotPsd {
        /// Smallest eigenvalue found.
        min_eigenvalue: f64,
    },

    /// A matrix required to be symmetric is not.
    #[error("matrix is not symmetric: |S({row},{col}) - S({col},{row})| = {deviation}")]
    NotSymmetric {
        row: usize,
        col: usize,
        deviation: f64,
    },

    /// A row of a stochastic matrix does not sum to one.
    #[error("row {row} of stochastic matrix sums to {sum}")]
    StochasticRowSum { row: usize, sum: f64 },

    /// An entry of a stochastic matrix is outside [0, 1].
    #[error("entry ({row},{col}) = {value} of stochastic matrix is outside [0, 1]")]
    StochasticEntryRange { row: usize, col: usize, value: f64 },

    /// An occupation or mixture weight vector is not on the simplex.
    #[error("invalid weights: {0}")]
    WeightInvalid(String),

    /// A semi-Markov kernel violates its invariants.
    #[error("invalid semi-Markov kernel: {0}")]
    KernelInvalid(String),

    /// The exact propagation engine would exceed its component budget.
    #[error("component explosion: {required} mixture components exceed limit {limit}")]
    ComponentExplosion { required: u128, limit: u64 },

    /// Jump processes of different classes cannot be composed.
    #[error("jump process class mismatch: {0}")]
    ClassMismatch(String),

    /// The requested sampling semantics do not apply to this jump process.
    #[error("sampling semantics unsupported: {0}")]
    SemanticsUnsupported(String),

    /// The stability-check window does not fit the trajectory.
    #[error("window of {window} steps invalid for trajectory of {len} steps")]
    WindowTooLarge { window: usize, len: usize },
}
