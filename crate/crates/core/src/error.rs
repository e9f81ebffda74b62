//! Crate-wide error type.
//!
//! Numeric payloads are stored as `f64` regardless of the working scalar so
//! the error type stays non-generic.

use thiserror::Error;

/// Everything that can go wrong while building grids, kernels, or predictors.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Knot coordinates must be strictly increasing.
    #[error("knots are not strictly increasing at index {index} ({left} >= {right})")]
    NonIncreasingKnots { index: usize, left: f64, right: f64 },

    /// A knot coordinate was NaN or infinite.
    #[error("knot at index {index} is not finite")]
    NonFiniteKnot { index: usize },

    /// Too few points for the requested construction.
    #[error("grid has {len} knots but at least {min} are required")]
    GridTooSmall { len: usize, min: usize },

    /// A matrix expected to be square was not.
    #[error("matrix is {rows}x{cols}, expected square")]
    NotSquare { rows: usize, cols: usize },

    /// Symmetry violated beyond the relative tolerance.
    #[error("matrix is not symmetric: max relative deviation {max_rel_dev:.3e} exceeds {tol:.3e}")]
    NotSymmetric { max_rel_dev: f64, tol: f64 },

    /// Vector/matrix sizes do not line up.
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// A factorization hit a pivot below the admissible threshold.
    #[error("factorization failed: pivot {index} is {value:.3e}, below the threshold {threshold:.3e}")]
    SingularPivot {
        index: usize,
        value: f64,
        threshold: f64,
    },

    /// Trend columns restricted to the observation rows are linearly dependent.
    #[error("trend columns are rank deficient on the first {n} rows (rank {rank} < {q})")]
    RankDeficientTrend { n: usize, rank: usize, q: usize },

    /// More trend columns than observation points.
    #[error("trend has {q} columns but only {n} observation rows; q <= n is required")]
    TrendTooWide { q: usize, n: usize },

    /// Weights were supposed to satisfy the trend constraints but do not.
    #[error("constraint {index} violated: residual {residual:.3e} exceeds tolerance {tol:.3e}")]
    ConstraintViolated {
        index: usize,
        residual: f64,
        tol: f64,
    },

    /// Evaluation point lies outside the knot range.
    #[error("argument {t} is outside the knot range [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    /// A rolling run with no usable records.
    #[error("rolling run contains no successful predictions")]
    EmptyRun,

    /// Two rolling runs do not cover the same fold indices.
    #[error("rolling runs are misaligned: record {index} has r={left} vs r={right}")]
    MisalignedRuns {
        index: usize,
        left: usize,
        right: usize,
    },

    /// A configuration that the library cannot honor.
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// A construction finished but violated one of its declared invariants.
    #[error("invariant violated in {what}: {detail}")]
    InvariantViolation { what: &'static str, detail: String },
}

pub type Result<T> = std::result::Result<T, Error>;
