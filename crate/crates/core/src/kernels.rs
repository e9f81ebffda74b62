//! Kernel matrices, dual functionals, and the worst-case-error quadratic form.
//!
//! A kernel here is a symmetric matrix of pairwise values `k(x_i, x_j)` over a
//! knot grid. The squared worst-case error of a linear prediction with weights
//! `w` over the unit ball of the kernel norm is the quadratic form
//! `(-w, 1) K (-w, 1)^T`; every predictor in this crate minimizes that form
//! under some constraint set.

use crate::error::{Error, Result};
use crate::linalg::{cholesky, Matrix};
use crate::predictor::Trend;
use crate::scalar::{cast, to_f64, Scalar};

/// Default relative pivot threshold for definiteness tests.
pub fn default_pivot_tol<T: Scalar>() -> T {
    cast(1e-10)
}

/// Relative symmetry tolerance enforced on every kernel matrix.
pub fn symmetry_tol<T: Scalar>() -> T {
    cast(1e-12)
}

/// Strictly increasing time coordinates with their gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct KnotGrid<T> {
    knots: Vec<T>,
    gaps: Vec<T>,
}

impl<T: Scalar> KnotGrid<T> {
    pub fn new(knots: Vec<T>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::GridTooSmall {
                len: knots.len(),
                min: 2,
            });
        }
        for (i, &t) in knots.iter().enumerate() {
            if !t.is_finite() {
                return Err(Error::NonFiniteKnot { index: i });
            }
        }
        let mut gaps = Vec::with_capacity(knots.len() - 1);
        for i in 0..knots.len() - 1 {
            let h = knots[i + 1] - knots[i];
            if !(h > T::zero()) {
                return Err(Error::NonIncreasingKnots {
                    index: i,
                    left: to_f64(knots[i]),
                    right: to_f64(knots[i + 1]),
                });
            }
            gaps.push(h);
        }
        Ok(KnotGrid { knots, gaps })
    }

    /// Uniform grid `start, start+step, ...` with `len` knots.
    pub fn uniform(start: T, step: T, len: usize) -> Result<Self> {
        let knots = (0..len)
            .map(|i| start + step * cast::<T>(i as f64))
            .collect();
        KnotGrid::new(knots)
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Number of intervals (`n` when the grid has `n+1` knots).
    pub fn intervals(&self) -> usize {
        self.gaps.len()
    }

    pub fn knots(&self) -> &[T] {
        &self.knots
    }

    pub fn gaps(&self) -> &[T] {
        &self.gaps
    }

    pub fn first(&self) -> T {
        self.knots[0]
    }

    pub fn last(&self) -> T {
        *self.knots.last().unwrap()
    }

    /// Grid restricted to the first `k` knots.
    pub fn prefix(&self, k: usize) -> Result<Self> {
        KnotGrid::new(self.knots[..k].to_vec())
    }

    /// Grid extended by one knot past the end.
    pub fn extended(&self, next: T) -> Result<Self> {
        let mut knots = self.knots.clone();
        knots.push(next);
        KnotGrid::new(knots)
    }
}

/// Definiteness classification of a kernel matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    PositiveDefinite,
    /// Positive definite on the weight space annihilated by the trend.
    ConditionallyPositive,
    Indefinite,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::PositiveDefinite => "positive-definite",
            Classification::ConditionallyPositive => "conditionally-positive",
            Classification::Indefinite => "indefinite",
        };
        f.write_str(s)
    }
}

/// Symmetric kernel matrix with its classification and a label for reports.
#[derive(Debug, Clone)]
pub struct Kernel<T> {
    matrix: Matrix<T>,
    classification: Classification,
    label: String,
}

impl<T: Scalar> Kernel<T> {
    /// Build and classify a kernel without trend information.
    pub fn new(matrix: Matrix<T>, label: impl Into<String>) -> Result<Self> {
        let classification = validate_kernel(&matrix, None, default_pivot_tol())?;
        Ok(Kernel {
            matrix,
            classification,
            label: label.into(),
        })
    }

    /// Build and classify a kernel against a trend.
    pub fn with_trend(matrix: Matrix<T>, trend: &Trend<T>, label: impl Into<String>) -> Result<Self> {
        let classification = validate_kernel(&matrix, Some(trend), default_pivot_tol())?;
        Ok(Kernel {
            matrix,
            classification,
            label: label.into(),
        })
    }

    pub fn matrix(&self) -> &Matrix<T> {
        &self.matrix
    }

    pub fn classification(&self) -> Classification {
        self.classification
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Side length of the kernel matrix (`n+1` in prediction problems).
    pub fn size(&self) -> usize {
        self.matrix.rows()
    }

    /// Kernel on the leading `k` knots, reclassified against the restricted
    /// trend when one is given.
    pub fn principal(&self, k: usize, trend: Option<&Trend<T>>, label: impl Into<String>) -> Result<Self> {
        let sub = self.matrix.principal(k);
        match trend {
            Some(tr) => Kernel::with_trend(sub, &tr.top_rows(k)?, label),
            None => Kernel::new(sub, label),
        }
    }
}

/// A linear combination of point evaluations over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DualFunctional<T> {
    coefficients: Vec<T>,
}

impl<T: Scalar> DualFunctional<T> {
    pub fn new(coefficients: Vec<T>) -> Self {
        DualFunctional { coefficients }
    }

    /// The residual functional of a prediction with weights `w`:
    /// coefficients `(-w_1, ..., -w_n, 1)`.
    pub fn prediction_residual(weights: &[T]) -> Self {
        let mut c: Vec<T> = weights.iter().map(|&w| -w).collect();
        c.push(T::one());
        DualFunctional { coefficients: c }
    }

    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn coefficients(&self) -> &[T] {
        &self.coefficients
    }

    /// Apply the functional to values on the grid.
    pub fn apply(&self, values: &[T]) -> T {
        crate::linalg::dot(&self.coefficients, values)
    }
}

/// Classify a symmetric matrix as positive definite, conditionally positive
/// with respect to a trend, or neither.
///
/// Positive definiteness means a Cholesky factorization succeeds with every
/// pivot above `tol` times the largest diagonal entry. Conditional positivity
/// is tested constructively: an orthonormal basis `Z` of the weight vectors
/// annihilated by the trend (on the first `n` rows) is built and the projected
/// matrix `Z^T K_n Z` is factored the same way.
pub fn validate_kernel<T: Scalar>(
    matrix: &Matrix<T>,
    trend: Option<&Trend<T>>,
    tol: T,
) -> Result<Classification> {
    if !matrix.is_square() {
        return Err(Error::NotSquare {
            rows: matrix.rows(),
            cols: matrix.cols(),
        });
    }
    let sym_dev = matrix.asymmetry();
    if sym_dev > symmetry_tol() {
        return Err(Error::NotSymmetric {
            max_rel_dev: to_f64(sym_dev),
            tol: to_f64(symmetry_tol::<T>()),
        });
    }
    if let Some(tr) = trend {
        if tr.rows() != matrix.rows() {
            return Err(Error::DimensionMismatch {
                what: "trend rows vs kernel size",
                expected: matrix.rows(),
                found: tr.rows(),
            });
        }
    }

    if cholesky(matrix, tol).is_ok() {
        return Ok(Classification::PositiveDefinite);
    }

    if let Some(tr) = trend {
        let n = matrix.rows() - 1;
        let z = tr.weight_null_basis(n)?;
        if z.cols() == 0 {
            // q = n: the homogeneous constraint system only admits w = 0.
            return Ok(Classification::ConditionallyPositive);
        }
        let kn = matrix.principal(n);
        let mut projected = z.transpose().matmul(&kn.matmul(&z));
        projected.symmetrize();
        if cholesky(&projected, tol).is_ok() {
            return Ok(Classification::ConditionallyPositive);
        }
    }
    Ok(Classification::Indefinite)
}

/// Squared dual norm `c^T K c` of a functional with coefficients `c`.
pub fn dual_norm_sq<T: Scalar>(kernel: &Kernel<T>, mu: &DualFunctional<T>) -> Result<T> {
    if mu.len() != kernel.size() {
        return Err(Error::DimensionMismatch {
            what: "dual functional length vs kernel size",
            expected: kernel.size(),
            found: mu.len(),
        });
    }
    Ok(kernel.matrix().quad_form(mu.coefficients(), mu.coefficients()))
}

/// Squared worst-case prediction error of weights `w` over the unit ball of
/// the kernel norm: `(-w, 1) K (-w, 1)^T`.
pub fn worst_case_error<T: Scalar>(kernel: &Kernel<T>, weights: &[T]) -> Result<T> {
    if weights.len() + 1 != kernel.size() {
        return Err(Error::DimensionMismatch {
            what: "weight length vs kernel size minus one",
            expected: kernel.size() - 1,
            found: weights.len(),
        });
    }
    let residual = DualFunctional::prediction_residual(weights);
    dual_norm_sq(kernel, &residual)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{sym_eigen, sym_sqrt};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn kernel(rows: &[Vec<f64>]) -> Kernel<f64> {
        Kernel::new(Matrix::from_rows(rows), "test").unwrap()
    }

    #[test]
    fn grid_rejects_unordered_knots() {
        assert!(matches!(
            KnotGrid::new(vec![0.0, 1.0, 1.0]),
            Err(Error::NonIncreasingKnots { index: 1, .. })
        ));
        assert!(KnotGrid::new(vec![0.0, 0.5, 2.0]).is_ok());
    }

    #[test]
    fn identity_is_positive_definite() {
        let c = validate_kernel(&Matrix::<f64>::identity(3), None, 1e-10).unwrap();
        assert_eq!(c, Classification::PositiveDefinite);
    }

    #[test]
    fn negative_pivot_is_indefinite() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]);
        assert_eq!(
            validate_kernel(&m, None, 1e-10).unwrap(),
            Classification::Indefinite
        );
    }

    #[test]
    fn all_ones_with_constant_trend_has_vanishing_projected_form() {
        // Hand oracle: the weight space annihilated by the constant trend on
        // the first two rows is span{(1,-1)/sqrt(2)}, and the projected form
        // of the all-ones matrix there is (w1+w2)^2 = 0. Eigendecomposing the
        // projected 1x1 form gives the single eigenvalue 0, so the matrix is
        // not positive on the constrained weight space and cannot classify as
        // conditionally positive.
        let ones = Matrix::from_fn(3, 3, |_, _| 1.0);
        let trend = Trend::constant(3).unwrap();
        let z = trend.weight_null_basis(2).unwrap();
        let projected = z.transpose().matmul(&ones.principal(2).matmul(&z));
        let (eigs, _) = sym_eigen(&projected);
        assert!(eigs.iter().all(|e| e.abs() < 1e-14));
        assert_eq!(
            validate_kernel(&ones, Some(&trend), 1e-10).unwrap(),
            Classification::Indefinite
        );
    }

    #[test]
    fn singular_psd_with_positive_projected_form_is_conditionally_positive() {
        let m = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 0.0],
        ]);
        let trend = Trend::constant(3).unwrap();
        assert_eq!(
            validate_kernel(&m, Some(&trend), 1e-10).unwrap(),
            Classification::ConditionallyPositive
        );
    }

    #[test]
    fn asymmetric_input_is_a_structural_error() {
        let m = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 1.0]]);
        assert!(matches!(
            validate_kernel(&m, None, 1e-10),
            Err(Error::NotSymmetric { .. })
        ));
        let m = Matrix::from_fn(2, 3, |_, _| 1.0);
        assert!(matches!(
            validate_kernel(&m, None, 1e-10),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn dual_norm_examples() {
        let id = kernel(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        let mu = DualFunctional::new(vec![0.0, 0.0, 1.0]);
        assert_eq!(dual_norm_sq(&id, &mu).unwrap(), 1.0);

        // Direct arithmetic oracle: c^T K c expanded by hand.
        let k = kernel(&[vec![2.0, 1.0], vec![1.0, 2.0]]);
        let c = [-0.5, 1.0];
        let by_hand =
            2.0 * c[0] * c[0] + 1.0 * c[0] * c[1] + 1.0 * c[1] * c[0] + 2.0 * c[1] * c[1];
        assert!((by_hand - 1.5).abs() < 1e-15);
        let mu = DualFunctional::new(c.to_vec());
        assert!((dual_norm_sq(&k, &mu).unwrap() - 1.5).abs() < 1e-15);

        // Homogeneity in K.
        let k4 = kernel(&[vec![8.0, 4.0], vec![4.0, 8.0]]);
        assert!((dual_norm_sq(&k4, &mu).unwrap() - 4.0 * 1.5).abs() < 1e-14);
    }

    #[test]
    fn dual_norm_rejects_dimension_mismatch() {
        let id = kernel(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let mu = DualFunctional::new(vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            dual_norm_sq(&id, &mu),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn worst_case_error_examples() {
        let id = kernel(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert_eq!(worst_case_error(&id, &[0.0, 0.0]).unwrap(), 1.0);

        // Direct matrix-vector oracle for the 3x3 case.
        let k = kernel(&[
            vec![2.0, 1.0, 1.0],
            vec![1.0, 2.0, 1.0],
            vec![1.0, 1.0, 2.0],
        ]);
        let w = [1.0 / 3.0, 1.0 / 3.0];
        let got = worst_case_error(&k, &w).unwrap();
        assert!((got - 4.0 / 3.0).abs() < 1e-15);

        // Radius-r ball multiplies the worst squared error by r^2, i.e. the
        // form itself scales linearly with the kernel.
        let k2 = kernel(&[
            vec![4.0, 2.0, 2.0],
            vec![2.0, 4.0, 2.0],
            vec![2.0, 2.0, 4.0],
        ]);
        let scaled = worst_case_error(&k2, &w).unwrap();
        assert!((scaled - 2.0 * got).abs() < 1e-14);
    }

    #[test]
    fn worst_case_error_is_a_tight_supremum() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n1 = 6usize;
        let a = Matrix::from_fn(n1, n1, |_, _| rng.gen_range(-1.0..1.0));
        let mut k = a.matmul(&a.transpose());
        for i in 0..n1 {
            k[(i, i)] += 0.5;
        }
        k.symmetrize();
        let kernel = Kernel::new(k.clone(), "random").unwrap();
        let w: Vec<f64> = (0..n1 - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let bound = worst_case_error(&kernel, &w).unwrap();
        assert!(bound >= 0.0);

        let c = DualFunctional::prediction_residual(&w);
        let root = sym_sqrt(&k);
        // Sampled functions in the unit ball never beat the bound.
        for _ in 0..500 {
            let mut g: Vec<f64> = (0..n1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let norm = crate::linalg::norm2(&g);
            if norm > 0.0 {
                let r = rng.gen_range(0.0..1.0) / norm;
                g.iter_mut().for_each(|x| *x *= r);
            }
            let f = root.matvec(&g);
            let err = c.apply(&f).powi(2);
            assert!(err <= bound + 1e-9);
        }
        // The maximizer built from K c attains the bound.
        let kc = k.matvec(c.coefficients());
        let scale = bound.sqrt();
        let f_star: Vec<f64> = kc.iter().map(|x| x / scale).collect();
        let attained = c.apply(&f_star).powi(2);
        assert!(attained >= bound * (1.0 - 1e-8));
    }
}
