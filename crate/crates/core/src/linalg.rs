//! Dense linear algebra over a generic scalar.
//!
//! Sized for the problems this crate builds: dense symmetric matrices of at
//! most a few hundred rows. Factorizations report the failing pivot index
//! because callers surface it in their error messages.

use crate::error::{Error, Result};
use crate::scalar::{cast, to_f64, Scalar};

/// Dense row-major matrix.
#[derive(Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut m = Matrix::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix {
            rows: r,
            cols: c,
            data: rows.iter().flatten().copied().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix<T> {
        Matrix::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    /// Leading `k`x`k` principal submatrix.
    pub fn principal(&self, k: usize) -> Matrix<T> {
        assert!(k <= self.rows && k <= self.cols);
        Matrix::from_fn(k, k, |i, j| self[(i, j)])
    }

    /// First `k` rows.
    pub fn top_rows(&self, k: usize) -> Matrix<T> {
        assert!(k <= self.rows);
        Matrix::from_fn(k, self.cols, |i, j| self[(i, j)])
    }

    pub fn matmul(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == T::zero() {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), v)).collect()
    }

    /// `self^T * v` without materializing the transpose.
    pub fn tr_matvec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.rows, v.len(), "tr_matvec dimension mismatch");
        let mut out = vec![T::zero(); self.cols];
        for i in 0..self.rows {
            let vi = v[i];
            for j in 0..self.cols {
                out[j] += self[(i, j)] * vi;
            }
        }
        out
    }

    /// Quadratic form `x^T A y`.
    pub fn quad_form(&self, x: &[T], y: &[T]) -> T {
        dot(x, &self.matvec(y))
    }

    pub fn scale(&self, c: T) -> Matrix<T> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| x * c).collect(),
        }
    }

    pub fn add(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| a + b)
                .collect(),
        }
    }

    /// Replace the matrix by `(A + A^T)/2`; removes rounding asymmetry after
    /// sandwich products.
    pub fn symmetrize(&mut self) {
        assert!(self.is_square());
        let half = cast::<T>(0.5);
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                let m = (self[(i, j)] + self[(j, i)]) * half;
                self[(i, j)] = m;
                self[(j, i)] = m;
            }
        }
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
    }

    pub fn max_diag(&self) -> T {
        (0..self.rows.min(self.cols))
            .map(|i| self[(i, i)])
            .fold(T::neg_infinity(), T::max)
    }

    /// Largest asymmetry `|a_ij - a_ji|` relative to the largest entry.
    pub fn asymmetry(&self) -> T {
        assert!(self.is_square());
        let mut dev = T::zero();
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                dev = dev.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        let scale = self.max_abs();
        if scale > T::zero() {
            dev / scale
        } else {
            dev
        }
    }

    /// One-norm (maximum absolute column sum).
    pub fn norm_one(&self) -> T {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self[(i, j)].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &T {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl<T: std::fmt::Debug> std::fmt::Debug for Matrix<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                write!(f, "{:?} ", self.data[i * self.cols + j])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    assert_eq!(a.len(), b.len(), "dot dimension mismatch");
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

pub fn norm2<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Cholesky factorization `A = L L^T` with a relative pivot threshold.
///
/// Each pivot (the diagonal value before the square root) must exceed
/// `rel_tol * max(diag(A), 0)`; the first one that does not names itself in
/// the error.
pub struct Cholesky<T> {
    l: Matrix<T>,
}

pub fn cholesky<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> Result<Cholesky<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let threshold = rel_tol * a.max_diag().max(T::zero());
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let mut d = a[(j, j)];
        for k in 0..j {
            d -= l[(j, k)] * l[(j, k)];
        }
        if !(d > threshold) || !d.is_finite() {
            return Err(Error::SingularPivot {
                index: j,
                value: to_f64(d),
                threshold: to_f64(threshold),
            });
        }
        let dj = d.sqrt();
        l[(j, j)] = dj;
        for i in (j + 1)..n {
            let mut s = a[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)];
            }
            l[(i, j)] = s / dj;
        }
    }
    Ok(Cholesky { l })
}

impl<T: Scalar> Cholesky<T> {
    pub fn factor(&self) -> &Matrix<T> {
        &self.l
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.l.rows();
        assert_eq!(b.len(), n);
        let mut y = b.to_vec();
        for i in 0..n {
            for k in 0..i {
                let t = self.l[(i, k)] * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.l[(k, i)] * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / self.l[(i, i)];
        }
        y
    }

    pub fn solve_mat(&self, b: &Matrix<T>) -> Matrix<T> {
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve(&b.col(j));
            for i in 0..b.rows() {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.l.rows();
        let mut inv = self.solve_mat(&Matrix::identity(n));
        inv.symmetrize();
        inv
    }
}

/// LU factorization with partial pivoting.
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
}

pub fn lu<T: Scalar>(a: &Matrix<T>) -> Result<Lu<T>> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let n = a.rows();
    let threshold = a.max_abs() * T::epsilon() * cast::<T>(n.max(1) as f64);
    let mut m = a.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let mut p = k;
        let mut best = m[(k, k)].abs();
        for i in (k + 1)..n {
            let v = m[(i, k)].abs();
            if v > best {
                best = v;
                p = i;
            }
        }
        if !(best > threshold) || !best.is_finite() {
            return Err(Error::SingularPivot {
                index: k,
                value: to_f64(best),
                threshold: to_f64(threshold),
            });
        }
        if p != k {
            perm.swap(k, p);
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
        }
        let piv = m[(k, k)];
        for i in (k + 1)..n {
            let f = m[(i, k)] / piv;
            m[(i, k)] = f;
            for j in (k + 1)..n {
                let t = f * m[(k, j)];
                m[(i, j)] = m[(i, j)] - t;
            }
        }
    }
    Ok(Lu { lu: m, perm })
}

impl<T: Scalar> Lu<T> {
    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.rows();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for k in 0..i {
                let t = self.lu[(i, k)] * y[k];
                y[i] = y[i] - t;
            }
        }
        for i in (0..n).rev() {
            for k in (i + 1)..n {
                let t = self.lu[(i, k)] * y[k];
                y[i] = y[i] - t;
            }
            y[i] = y[i] / self.lu[(i, i)];
        }
        y
    }

    pub fn inverse(&self) -> Matrix<T> {
        let n = self.lu.rows();
        let mut out = Matrix::zeros(n, n);
        let mut e = vec![T::zero(); n];
        for j in 0..n {
            e[j] = T::one();
            let x = self.solve(&e);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
            e[j] = T::zero();
        }
        out
    }
}

/// One-norm condition estimate via the explicit inverse (fine at these sizes).
pub fn cond_one<T: Scalar>(a: &Matrix<T>) -> Option<T> {
    let f = lu(a).ok()?;
    Some(a.norm_one() * f.inverse().norm_one())
}

/// Thomas algorithm for a tridiagonal system.
///
/// `sub` and `sup` have length `n-1`; callers only pass diagonally dominant
/// systems, so no pivoting. A vanishing pivot is still reported.
pub fn solve_tridiagonal<T: Scalar>(
    sub: &[T],
    diag: &[T],
    sup: &[T],
    rhs: &[T],
) -> Result<Vec<T>> {
    let n = diag.len();
    assert_eq!(rhs.len(), n);
    assert_eq!(sub.len(), n.saturating_sub(1));
    assert_eq!(sup.len(), n.saturating_sub(1));
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut c = vec![T::zero(); n];
    let mut d = vec![T::zero(); n];
    let mut piv = diag[0];
    if piv == T::zero() || !piv.is_finite() {
        return Err(Error::SingularPivot {
            index: 0,
            value: to_f64(piv),
            threshold: 0.0,
        });
    }
    c[0] = if n > 1 { sup[0] / piv } else { T::zero() };
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = diag[i] - sub[i - 1] * c[i - 1];
        if piv == T::zero() || !piv.is_finite() {
            return Err(Error::SingularPivot {
                index: i,
                value: to_f64(piv),
                threshold: 0.0,
            });
        }
        if i < n - 1 {
            c[i] = sup[i] / piv;
        }
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        let t = c[i] * d[i + 1];
        d[i] = d[i] - t;
    }
    Ok(d)
}

/// Householder QR with the full orthogonal factor, `A = Q R` with `Q` m-by-m.
pub struct QrFull<T> {
    pub q: Matrix<T>,
    pub r: Matrix<T>,
}

pub fn qr_full<T: Scalar>(a: &Matrix<T>) -> QrFull<T> {
    let m = a.rows();
    let n = a.cols();
    let mut r = a.clone();
    let mut q = Matrix::identity(m);
    let two = cast::<T>(2.0);
    for k in 0..n.min(m.saturating_sub(1)) {
        // Householder vector for column k below the diagonal.
        let mut norm = T::zero();
        for i in k..m {
            norm += r[(i, k)] * r[(i, k)];
        }
        let norm = norm.sqrt();
        if norm == T::zero() {
            continue;
        }
        let alpha = if r[(k, k)] >= T::zero() { -norm } else { norm };
        let mut v = vec![T::zero(); m];
        v[k] = r[(k, k)] - alpha;
        for i in (k + 1)..m {
            v[i] = r[(i, k)];
        }
        let vtv = dot(&v, &v);
        if vtv == T::zero() {
            continue;
        }
        let beta = two / vtv;
        // R := (I - beta v v^T) R
        for j in k..n {
            let mut s = T::zero();
            for i in k..m {
                s += v[i] * r[(i, j)];
            }
            s = s * beta;
            for i in k..m {
                let t = s * v[i];
                r[(i, j)] = r[(i, j)] - t;
            }
        }
        // Q := Q (I - beta v v^T)
        for i in 0..m {
            let mut s = T::zero();
            for j in k..m {
                s += q[(i, j)] * v[j];
            }
            s = s * beta;
            for j in k..m {
                let t = s * v[j];
                q[(i, j)] = q[(i, j)] - t;
            }
        }
    }
    // Clean the strictly lower triangle of R.
    for i in 0..m {
        for j in 0..n.min(i) {
            r[(i, j)] = T::zero();
        }
    }
    QrFull { q, r }
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvector columns, `A = V diag(w) V^T`.
pub fn sym_eigen<T: Scalar>(a: &Matrix<T>) -> (Vec<T>, Matrix<T>) {
    assert!(a.is_square());
    let n = a.rows();
    let mut m = a.clone();
    m.symmetrize();
    let mut v = Matrix::identity(n);
    let tol = T::epsilon() * cast::<T>(n.max(1) as f64);
    let half = cast::<T>(0.5);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in (i + 1)..n {
                off = off.max(m[(i, j)].abs());
            }
        }
        let scale = m.max_abs().max(T::min_positive_value());
        if off <= tol * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq.abs() <= tol * scale {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) * half / apq;
                // Stable tangent of the rotation angle.
                let t = {
                    let s = (theta * theta + T::one()).sqrt();
                    if theta >= T::zero() {
                        T::one() / (theta + s)
                    } else {
                        T::one() / (theta - s)
                    }
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        m[(i, i)]
            .partial_cmp(&m[(j, j)])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values: Vec<T> = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    (values, vectors)
}

/// Symmetric positive semidefinite square root via the eigendecomposition.
/// Slightly negative eigenvalues from rounding are clamped to zero.
pub fn sym_sqrt<T: Scalar>(a: &Matrix<T>) -> Matrix<T> {
    let (w, v) = sym_eigen(a);
    let n = a.rows();
    let mut out = Matrix::zeros(n, n);
    for (k, &wk) in w.iter().enumerate() {
        let s = wk.max(T::zero()).sqrt();
        if s == T::zero() {
            continue;
        }
        for i in 0..n {
            let vik = v[(i, k)] * s;
            for j in 0..n {
                out[(i, j)] += vik * v[(j, k)];
            }
        }
    }
    out.symmetrize();
    out
}

/// Count of eigenvalues exceeding `rel_tol` times the largest magnitude.
pub fn sym_rank<T: Scalar>(a: &Matrix<T>, rel_tol: T) -> usize {
    let (w, _) = sym_eigen(a);
    let scale = w
        .iter()
        .fold(T::zero(), |acc, &x| acc.max(x.abs()))
        .max(T::min_positive_value());
    w.iter().filter(|&&x| x.abs() > rel_tol * scale).count()
}

/// Nodes and weights of the 4-point Gauss-Legendre rule on [-1, 1]
/// (exact through degree 7).
pub fn gauss_legendre_4<T: Scalar>() -> [(T, T); 4] {
    let three: T = cast(3.0);
    let seven: T = cast(7.0);
    let six_fifths: T = cast(6.0 / 5.0);
    let s = six_fifths.sqrt();
    let inner = ((three - (s + s)) / seven).sqrt();
    let outer = ((three + (s + s)) / seven).sqrt();
    let thirty: T = cast(30.0);
    let w_inner = (cast::<T>(18.0) + thirty.sqrt()) / cast::<T>(36.0);
    let w_outer = (cast::<T>(18.0) - thirty.sqrt()) / cast::<T>(36.0);
    [
        (-outer, w_outer),
        (-inner, w_inner),
        (inner, w_inner),
        (outer, w_outer),
    ]
}
