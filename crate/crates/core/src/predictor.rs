//! Linear predictors of the next series value.
//!
//! The unconstrained min-max weights solve the normal system
//! `K_n w = k_{n+1}`; the trend-constrained weights solve the saddle system
//! with Lagrange multipliers; the reduced-kernel path reparametrizes the
//! constraint set and solves an unconstrained problem of size `n-q`; the
//! semi-kernel path evaluates the worst-case form `(-w,1) R Q^{-1} R^T (-w,1)^T`
//! of a positive-semidefinite energy with a trend null space. All of them
//! agree on the prediction whenever more than one applies, and the test suite
//! holds them to that.

use crate::error::{Error, Result};
use crate::kernels::{default_pivot_tol, worst_case_error, Kernel};
use crate::linalg::{cholesky, cond_one, dot, lu, qr_full, Matrix, QrFull};
use crate::scalar::{cast, to_f64, Scalar};

/// Absolute-plus-relative tolerance for checking trend constraints.
pub fn constraint_tol<T: Scalar>() -> T {
    cast(1e-8)
}

/// Condition-estimate threshold above which results carry a warning.
pub fn condition_warn_threshold<T: Scalar>() -> T {
    cast(1e12)
}

/// Trend columns `p_1, ..., p_q` evaluated on the grid (including the
/// prediction point in the last row).
#[derive(Debug, Clone)]
pub struct Trend<T> {
    columns: Matrix<T>,
}

impl<T: Scalar> Trend<T> {
    /// Validate and wrap an `(n+1) x q` column matrix.
    pub fn new(columns: Matrix<T>) -> Result<Self> {
        let q = columns.cols();
        let rows = columns.rows();
        if q == 0 {
            return Err(Error::InvalidConfig(
                "trend must have at least one column; use no trend instead".into(),
            ));
        }
        if rows < 2 || q > rows - 1 {
            return Err(Error::TrendTooWide { q, n: rows.saturating_sub(1) });
        }
        let trend = Trend { columns };
        trend.top_qr(rows - 1)?;
        Ok(trend)
    }

    /// The constant trend `p(x) = 1`.
    pub fn constant(rows: usize) -> Result<Self> {
        Trend::new(Matrix::from_fn(rows, 1, |_, _| T::one()))
    }

    /// The affine trend `{1, t}`.
    pub fn affine(times: &[T]) -> Result<Self> {
        Trend::new(Matrix::from_fn(times.len(), 2, |i, j| {
            if j == 0 {
                T::one()
            } else {
                times[i]
            }
        }))
    }

    pub fn columns(&self) -> &Matrix<T> {
        &self.columns
    }

    pub fn q(&self) -> usize {
        self.columns.cols()
    }

    pub fn rows(&self) -> usize {
        self.columns.rows()
    }

    /// Trend restricted to the first `k` grid points.
    pub fn top_rows(&self, k: usize) -> Result<Self> {
        Trend::new(self.columns.top_rows(k))
    }

    /// QR of the first `n` rows with a full-rank check.
    fn top_qr(&self, n: usize) -> Result<QrFull<T>> {
        let q = self.q();
        if q > n {
            return Err(Error::TrendTooWide { q, n });
        }
        let top = self.columns.top_rows(n);
        let f = qr_full(&top);
        let scale = (0..q)
            .map(|k| f.r[(k, k)].abs())
            .fold(T::zero(), T::max)
            .max(T::min_positive_value());
        let tol = T::epsilon() * cast::<T>(n.max(q) as f64) * scale;
        let rank = (0..q).filter(|&k| f.r[(k, k)].abs() > tol).count();
        if rank < q {
            return Err(Error::RankDeficientTrend { n, rank, q });
        }
        Ok(f)
    }

    /// Orthonormal basis of the weight vectors on the first `n` points that
    /// annihilate every trend column: `{w : P_n^T w = 0}`.
    pub fn weight_null_basis(&self, n: usize) -> Result<Matrix<T>> {
        let f = self.top_qr(n)?;
        let q = self.q();
        Ok(Matrix::from_fn(n, n - q, |i, j| f.q[(i, q + j)]))
    }

    /// Residuals of the inhomogeneous constraints at `weights`:
    /// `sum_i w_i p_k(x_i) - p_k(x_{n+1})` for each column `k`.
    pub fn constraint_residuals(&self, weights: &[T]) -> Result<Vec<T>> {
        let n = self.rows() - 1;
        if weights.len() != n {
            return Err(Error::DimensionMismatch {
                what: "weights vs trend rows minus one",
                expected: n,
                found: weights.len(),
            });
        }
        Ok((0..self.q())
            .map(|k| {
                let lhs: T = (0..n).map(|i| weights[i] * self.columns[(i, k)]).sum();
                lhs - self.columns[(n, k)]
            })
            .collect())
    }

    fn check_constraints(&self, weights: &[T], tol: T) -> Result<()> {
        let n = self.rows() - 1;
        for (k, res) in self.constraint_residuals(weights)?.iter().enumerate() {
            let scale = T::one() + self.columns[(n, k)].abs();
            if res.abs() > tol * scale {
                return Err(Error::ConstraintViolated {
                    index: k,
                    residual: to_f64(res.abs()),
                    tol: to_f64(tol * scale),
                });
            }
        }
        Ok(())
    }
}

/// Options shared by the weight solvers.
#[derive(Debug, Clone)]
pub struct SolveOptions<T> {
    /// Added to the diagonal of the leading kernel block before factorizing.
    /// Off by default; factorization failures are reported, never patched.
    pub jitter: Option<T>,
}

impl<T> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions { jitter: None }
    }
}

/// Weights, multipliers, and diagnostics of a solved prediction problem.
#[derive(Debug, Clone)]
pub struct PredictionResult<T> {
    pub weights: Vec<T>,
    /// Lagrange multipliers; empty for unconstrained problems.
    pub multipliers: Vec<T>,
    /// Filled once the weights have been applied to observed values.
    pub predicted: Option<T>,
    /// Squared worst-case error `(-w,1) K (-w,1)^T`.
    pub worst_error: T,
    /// Interpolant coefficients, when the dual form was solved.
    pub alpha: Option<Vec<T>>,
    /// One-norm condition estimate of the solved system.
    pub condition: Option<T>,
}

impl<T: Scalar> PredictionResult<T> {
    /// Apply the weights to observed values, store and return the prediction.
    pub fn apply(&mut self, values: &[T]) -> Result<T> {
        let p = predict(&self.weights, values)?;
        self.predicted = Some(p);
        Ok(p)
    }

    /// True when the solved system's condition estimate crossed the warning
    /// threshold.
    pub fn is_ill_conditioned(&self) -> bool {
        match self.condition {
            Some(c) => c > condition_warn_threshold(),
            None => false,
        }
    }
}

/// Particular + homogeneous solutions of the constraint system on weights.
#[derive(Debug, Clone)]
pub struct ConstraintSolutionSpace<T> {
    particular: Vec<T>,
    homogeneous: Matrix<T>,
}

impl<T: Scalar> ConstraintSolutionSpace<T> {
    /// Minimum-norm particular solution `z1`.
    pub fn particular(&self) -> &[T] {
        &self.particular
    }

    /// Orthonormal columns spanning the homogeneous solutions.
    pub fn homogeneous(&self) -> &Matrix<T> {
        &self.homogeneous
    }

    pub fn n(&self) -> usize {
        self.particular.len()
    }

    pub fn null_dim(&self) -> usize {
        self.homogeneous.cols()
    }
}

/// Positive-semidefinite energy with a trend null space, expressed through a
/// basis that starts with the null-space columns.
#[derive(Debug, Clone)]
pub struct SemiKernel<T> {
    form: Matrix<T>,
    null_basis: Matrix<T>,
    complement_basis: Matrix<T>,
}

impl<T: Scalar> SemiKernel<T> {
    /// `form` is the SPD Gram of the complement basis under the energy;
    /// `null_basis` spans the energy's null space; `complement_basis` holds
    /// the remaining basis columns evaluated on the grid.
    pub fn new(form: Matrix<T>, null_basis: Matrix<T>, complement_basis: Matrix<T>) -> Result<Self> {
        let rows = null_basis.rows();
        if complement_basis.rows() != rows {
            return Err(Error::DimensionMismatch {
                what: "complement basis rows vs null basis rows",
                expected: rows,
                found: complement_basis.rows(),
            });
        }
        if form.rows() != complement_basis.cols() || !form.is_square() {
            return Err(Error::DimensionMismatch {
                what: "form size vs complement basis columns",
                expected: complement_basis.cols(),
                found: form.rows(),
            });
        }
        if null_basis.cols() + complement_basis.cols() != rows {
            return Err(Error::DimensionMismatch {
                what: "basis column count vs grid size",
                expected: rows,
                found: null_basis.cols() + complement_basis.cols(),
            });
        }
        cholesky(&form, default_pivot_tol())?;
        // The combined basis must actually be a basis; this also guarantees
        // the induced semi-norm vanishes exactly on the null span.
        let combined = Matrix::from_fn(rows, rows, |i, j| {
            if j < null_basis.cols() {
                null_basis[(i, j)]
            } else {
                complement_basis[(i, j - null_basis.cols())]
            }
        });
        lu(&combined)?;
        Ok(SemiKernel {
            form,
            null_basis,
            complement_basis,
        })
    }

    pub fn form(&self) -> &Matrix<T> {
        &self.form
    }

    pub fn null_basis(&self) -> &Matrix<T> {
        &self.null_basis
    }

    pub fn complement_basis(&self) -> &Matrix<T> {
        &self.complement_basis
    }
}

/// Reduced kernel on the constraint parametrization, `(n+1-q) x (n+1-q)`.
#[derive(Debug, Clone)]
pub struct ReducedKernel<T> {
    matrix: Matrix<T>,
}

impl<T: Scalar> ReducedKernel<T> {
    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn size(&self) -> usize {
        self.matrix.rows()
    }
}

/// Optimal unconstrained min-max weights: solve `K_n w = k_{n+1}`.
pub fn minmax_weights<T: Scalar>(kernel: &Kernel<T>) -> Result<PredictionResult<T>> {
    minmax_weights_with(kernel, &SolveOptions::default())
}

pub fn minmax_weights_with<T: Scalar>(
    kernel: &Kernel<T>,
    opts: &SolveOptions<T>,
) -> Result<PredictionResult<T>> {
    let n = kernel.size() - 1;
    let mut kn = kernel.matrix().principal(n);
    if let Some(eps) = opts.jitter {
        for i in 0..n {
            kn[(i, i)] += eps;
        }
    }
    let rhs: Vec<T> = (0..n).map(|i| kernel.matrix()[(i, n)]).collect();
    let factor = cholesky(&kn, default_pivot_tol())?;
    let weights = factor.solve(&rhs);
    let worst_error = worst_case_error(kernel, &weights)?;
    let condition = cond_one(&kn);
    Ok(PredictionResult {
        weights,
        multipliers: Vec::new(),
        predicted: None,
        worst_error,
        alpha: None,
        condition,
    })
}

/// Apply weights to observed values: `sum_i w_i f(x_i)`.
pub fn predict<T: Scalar>(weights: &[T], values: &[T]) -> Result<T> {
    if weights.len() != values.len() {
        return Err(Error::DimensionMismatch {
            what: "weights vs observed values",
            expected: weights.len(),
            found: values.len(),
        });
    }
    Ok(dot(weights, values))
}

/// Coefficients of the kernel interpolant: solve `K_n alpha = f`.
pub fn interpolant_coefficients<T: Scalar>(kernel: &Kernel<T>, values: &[T]) -> Result<Vec<T>> {
    let n = kernel.size() - 1;
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            what: "values vs kernel size minus one",
            expected: n,
            found: values.len(),
        });
    }
    let kn = kernel.matrix().principal(n);
    let factor = cholesky(&kn, default_pivot_tol())?;
    Ok(factor.solve(values))
}

/// Dual-form prediction `sum_j alpha_j k(x_{n+1}, x_j)`.
pub fn interpolant_predict<T: Scalar>(kernel: &Kernel<T>, values: &[T]) -> Result<T> {
    let alpha = interpolant_coefficients(kernel, values)?;
    let n = kernel.size() - 1;
    Ok((0..n).map(|j| alpha[j] * kernel.matrix()[(n, j)]).sum())
}

/// Exact interpolation error from the inverse-kernel expansion:
/// `[(K^{-1} f)_{n+1}] * [k(x_{n+1},x_{n+1}) - sum_i w*_i k(x_i,x_{n+1})]`.
///
/// Diagnostic form: requires the full kernel to be invertible and all `n+1`
/// values known.
pub fn interpolation_error<T: Scalar>(kernel: &Kernel<T>, values: &[T]) -> Result<T> {
    let size = kernel.size();
    if values.len() != size {
        return Err(Error::DimensionMismatch {
            what: "values vs kernel size",
            expected: size,
            found: values.len(),
        });
    }
    let n = size - 1;
    let factor = lu(kernel.matrix())?;
    let coefficient = factor.solve(values)[n];
    let weights = minmax_weights(kernel)?.weights;
    let mut power = kernel.matrix()[(n, n)];
    for i in 0..n {
        power = power - weights[i] * kernel.matrix()[(i, n)];
    }
    Ok(coefficient * power)
}

/// Trend-constrained min-max weights via the Lagrange saddle system.
pub fn constrained_weights<T: Scalar>(
    kernel: &Kernel<T>,
    trend: &Trend<T>,
) -> Result<PredictionResult<T>> {
    constrained_weights_with(kernel, trend, &SolveOptions::default())
}

pub fn constrained_weights_with<T: Scalar>(
    kernel: &Kernel<T>,
    trend: &Trend<T>,
    opts: &SolveOptions<T>,
) -> Result<PredictionResult<T>> {
    let size = kernel.size();
    if trend.rows() != size {
        return Err(Error::DimensionMismatch {
            what: "trend rows vs kernel size",
            expected: size,
            found: trend.rows(),
        });
    }
    let n = size - 1;
    let q = trend.q();
    if q > n {
        return Err(Error::TrendTooWide { q, n });
    }
    let jitter = opts.jitter.unwrap_or_else(T::zero);
    let saddle = Matrix::from_fn(n + q, n + q, |i, j| {
        if i < n && j < n {
            let base = kernel.matrix()[(i, j)];
            if i == j {
                base + jitter
            } else {
                base
            }
        } else if i < n {
            trend.columns()[(i, j - n)]
        } else if j < n {
            trend.columns()[(j, i - n)]
        } else {
            T::zero()
        }
    });
    let mut rhs: Vec<T> = (0..n).map(|i| kernel.matrix()[(i, n)]).collect();
    rhs.extend((0..q).map(|k| trend.columns()[(n, k)]));
    let factor = lu(&saddle)?;
    let solution = factor.solve(&rhs);
    let weights = solution[..n].to_vec();
    let multipliers = solution[n..].to_vec();
    trend.check_constraints(&weights, constraint_tol())?;
    let worst_error = worst_case_error(kernel, &weights)?;
    let condition = cond_one(&saddle);
    Ok(PredictionResult {
        weights,
        multipliers,
        predicted: None,
        worst_error,
        alpha: None,
        condition,
    })
}

/// Minimum-norm particular solution and orthonormal homogeneous basis of the
/// constraint system `sum_i w_i p_k(x_i) = p_k(x_{n+1})`.
pub fn constraint_solution_space<T: Scalar>(trend: &Trend<T>) -> Result<ConstraintSolutionSpace<T>> {
    let n = trend.rows() - 1;
    let q = trend.q();
    let f = trend.top_qr(n)?;
    // Solve R^T y = p(x_{n+1}) by forward substitution, then z1 = Q_1 y is the
    // minimum-norm solution.
    let rhs: Vec<T> = (0..q).map(|k| trend.columns()[(n, k)]).collect();
    let mut y = vec![T::zero(); q];
    for i in 0..q {
        let mut s = rhs[i];
        for k in 0..i {
            s = s - f.r[(k, i)] * y[k];
        }
        y[i] = s / f.r[(i, i)];
    }
    let particular: Vec<T> = (0..n)
        .map(|i| (0..q).map(|k| f.q[(i, k)] * y[k]).sum())
        .collect();
    let homogeneous = Matrix::from_fn(n, n - q, |i, j| f.q[(i, q + j)]);
    Ok(ConstraintSolutionSpace {
        particular,
        homogeneous,
    })
}

/// Reduced kernel `M^T K M` where the columns of `M` carry the homogeneous
/// solutions padded with a zero and the residual functional of the particular
/// solution.
pub fn reduced_kernel<T: Scalar>(
    kernel: &Kernel<T>,
    space: &ConstraintSolutionSpace<T>,
) -> Result<ReducedKernel<T>> {
    let size = kernel.size();
    let n = space.n();
    if n + 1 != size {
        return Err(Error::DimensionMismatch {
            what: "solution space size vs kernel size",
            expected: size - 1,
            found: n,
        });
    }
    let m_cols = space.null_dim() + 1;
    let m = Matrix::from_fn(size, m_cols, |i, j| {
        if j < space.null_dim() {
            if i < n {
                space.homogeneous()[(i, j)]
            } else {
                T::zero()
            }
        } else if i < n {
            -space.particular()[i]
        } else {
            T::one()
        }
    });
    let mut reduced = m.transpose().matmul(&kernel.matrix().matmul(&m));
    reduced.symmetrize();
    Ok(ReducedKernel { matrix: reduced })
}

/// Prediction through the reduced kernel; coincides with the Lagrange path.
pub fn reduced_predict<T: Scalar>(
    ktilde: &ReducedKernel<T>,
    space: &ConstraintSolutionSpace<T>,
    values: &[T],
) -> Result<T> {
    let n = space.n();
    if values.len() != n {
        return Err(Error::DimensionMismatch {
            what: "values vs solution space size",
            expected: n,
            found: values.len(),
        });
    }
    let m = ktilde.size();
    if m != space.null_dim() + 1 {
        return Err(Error::DimensionMismatch {
            what: "reduced kernel size vs null dimension plus one",
            expected: space.null_dim() + 1,
            found: m,
        });
    }
    let mut prediction = dot(space.particular(), values);
    if m > 1 {
        let lead = ktilde.matrix().principal(m - 1);
        let rhs: Vec<T> = (0..m - 1).map(|l| ktilde.matrix()[(l, m - 1)]).collect();
        let factor = cholesky(&lead, default_pivot_tol())?;
        let wtilde = factor.solve(&rhs);
        for (l, &w) in wtilde.iter().enumerate() {
            let projected: T = (0..n).map(|i| space.homogeneous()[(i, l)] * values[i]).sum();
            prediction = prediction + w * projected;
        }
    }
    Ok(prediction)
}

/// Worst-case squared error of constrained weights under a semi-kernel:
/// `(-w,1) R Q^{-1} R^T (-w,1)^T` with `R` the complement basis columns.
pub fn semikernel_worst_error<T: Scalar>(sk: &SemiKernel<T>, weights: &[T]) -> Result<T> {
    let rows = sk.null_basis().rows();
    let n = rows - 1;
    if weights.len() != n {
        return Err(Error::DimensionMismatch {
            what: "weights vs semi-kernel grid size minus one",
            expected: n,
            found: weights.len(),
        });
    }
    // Precondition: the weights reproduce the null-space functions.
    let trend = Trend::new(sk.null_basis().clone())?;
    trend.check_constraints(weights, constraint_tol())?;

    let mut c: Vec<T> = weights.iter().map(|&w| -w).collect();
    c.push(T::one());
    let e = sk.complement_basis().tr_matvec(&c);
    let factor = cholesky(sk.form(), default_pivot_tol())?;
    let y = factor.solve(&e);
    Ok(dot(&e, &y))
}

/// Best linear unbiased predictor: alias for the constrained path, because
/// the variance objective is the same quadratic form as the worst-case error.
pub fn blup_predict<T: Scalar>(kernel: &Kernel<T>, trend: &Trend<T>, values: &[T]) -> Result<T> {
    let mut result = constrained_weights(kernel, trend)?;
    result.apply(values)
}
