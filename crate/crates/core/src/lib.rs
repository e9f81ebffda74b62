//! Min-max (worst-case optimal) linear prediction of the next value of a time
//! series, the cubic-spline kernel family, and data-driven kernel selection.
//!
//! Given values `f(x_1), ..., f(x_n)` and a symmetric kernel matrix over the
//! grid including the prediction point `x_{n+1}`, the min-max weights minimize
//! the worst squared prediction error over the unit ball of the kernel norm.
//! The same weights solve the kriging / BLUP problem, optionally under exact
//! reproduction constraints for trend functions such as `{1, t}`.
//!
//! Three kernels derived from natural cubic splines come built in:
//!
//! * `K0` — inverse of the L2 Gram matrix of the cardinal natural splines,
//! * `K1` — `R Q^{-1} R^T` from the bending-energy matrix `Q`; predicting
//!   with it under the affine trend is exactly the bending-energy-minimizing
//!   spline completion,
//! * `K2` — `R Q R^T`, the same construction with the energy un-inverted.
//!
//! [`selection`] ranks kernels on a series by rolling-origin evaluation under
//! mean squared error, maximum error, and pairwise win fractions.
//!
//! ```
//! use kerncast::{KnotGrid64, kernel_set, constrained_weights};
//!
//! // Knots include the prediction point; values cover all but the last knot.
//! let grid = KnotGrid64::new(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
//! let values = [1.0, 3.0, 2.0, 4.0];
//! let set = kernel_set(&grid).unwrap();
//! let mut result = constrained_weights(&set.k1, &set.trend).unwrap();
//! let prediction = result.apply(&values).unwrap();
//! assert!(prediction.is_finite());
//! ```

pub mod error;
pub mod kernels;
pub mod linalg;
pub mod predictor;
pub mod scalar;
pub mod selection;
pub mod spline;

pub use error::{Error, Result};
pub use kernels::{
    default_pivot_tol, dual_norm_sq, validate_kernel, worst_case_error, Classification,
    DualFunctional, Kernel, KnotGrid,
};
pub use linalg::Matrix;
pub use predictor::{
    blup_predict, constrained_weights, constraint_solution_space, interpolant_coefficients,
    interpolant_predict, interpolation_error, minmax_weights, predict, reduced_kernel,
    reduced_predict, semikernel_worst_error, ConstraintSolutionSpace, PredictionResult,
    ReducedKernel, SemiKernel, SolveOptions, Trend,
};
pub use scalar::Scalar;
pub use selection::{
    maxpe, mspe, rolling_predict, statistical_compare, tournament, CriteriaReport, KernelSpec,
    RollingMode, RollingRun, TournamentConfig, TrendMode,
};
pub use spline::{
    basis_002, bending_energy, curvature_map, energy_matrix, kernel_set, l2_gram,
    natural_interpolant, pspline_predict, spline_from_002, value_energy, SplineKernelSet,
    SplineModel,
};

/// `f64` aliases for the main types; the generic forms accept any [`Scalar`].
pub type KnotGrid64 = kernels::KnotGrid<f64>;
pub type Kernel64 = kernels::Kernel<f64>;
pub type DualFunctional64 = kernels::DualFunctional<f64>;
pub type Matrix64 = linalg::Matrix<f64>;
pub type Trend64 = predictor::Trend<f64>;
pub type PredictionResult64 = predictor::PredictionResult<f64>;
pub type SplineModel64 = spline::SplineModel<f64>;
pub type SplineKernelSet64 = spline::SplineKernelSet<f64>;
pub type CriteriaReport64 = selection::CriteriaReport<f64>;

/// `f32` aliases; usable for experiments, with tolerances adjusted by the
/// caller.
pub type KnotGrid32 = kernels::KnotGrid<f32>;
pub type Kernel32 = kernels::Kernel<f32>;
pub type Matrix32 = linalg::Matrix<f32>;
pub type Trend32 = predictor::Trend<f32>;
pub type SplineModel32 = spline::SplineModel<f32>;
