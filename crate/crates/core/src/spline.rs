//! Cubic splines on a knot grid and the kernels derived from them.
//!
//! A spline is stored by its knot values and derivatives `(p, q, u, v)`; the
//! parametrization `(p_1, p_2, u_1, ..., u_{n+1})` determines the rest through
//! the C^2 continuity recursion. From the natural splines of a grid we build:
//!
//! * the curvature energy matrix `Q` with `u^T Q u = integral of |s''|^2`,
//! * the map `U` from knot values to interior curvatures,
//! * the value-space energy `P = U^T Q U` (null space: affine sequences),
//! * the L2 Gram matrix `Q0` of the cardinal natural splines,
//!
//! and the three kernels `K0 = Q0^{-1}`, `K1 = R Q^{-1} R^T`, `K2 = R Q R^T`,
//! where `R` collects the natural basis columns attached to the interior
//! curvature parameters.

use crate::error::{Error, Result};
use crate::kernels::{default_pivot_tol, Classification, Kernel, KnotGrid};
use crate::linalg::{cholesky, gauss_legendre_4, solve_tridiagonal, Matrix};
use crate::predictor::{SemiKernel, Trend};
use crate::scalar::{cast, to_f64, Scalar};

/// Piecewise cubic with values `p`, slopes `q`, curvatures `u`, and
/// right-sided third derivatives `v` at the knots.
#[derive(Debug, Clone)]
pub struct SplineModel<T> {
    grid: KnotGrid<T>,
    p: Vec<T>,
    q: Vec<T>,
    u: Vec<T>,
    v: Vec<T>,
}

impl<T: Scalar> SplineModel<T> {
    pub fn grid(&self) -> &KnotGrid<T> {
        &self.grid
    }

    /// Knot values `s(t_i)`.
    pub fn values(&self) -> &[T] {
        &self.p
    }

    /// Knot slopes `s'(t_i)`.
    pub fn slopes(&self) -> &[T] {
        &self.q
    }

    /// Knot curvatures `s''(t_i)`.
    pub fn curvatures(&self) -> &[T] {
        &self.u
    }

    /// Right-sided third derivatives per interval.
    pub fn third_derivatives(&self) -> &[T] {
        &self.v
    }

    pub fn is_natural(&self, tol: T) -> bool {
        let scale = self
            .u
            .iter()
            .fold(T::zero(), |acc, &x| acc.max(x.abs()))
            .max(T::one());
        self.u[0].abs() <= tol * scale && self.u[self.u.len() - 1].abs() <= tol * scale
    }

    /// Cubic of interval `i` evaluated at `t`.
    fn piece(&self, i: usize, t: T) -> T {
        let dt = t - self.grid.knots()[i];
        let half = cast::<T>(0.5);
        let sixth = cast::<T>(1.0 / 6.0);
        self.p[i] + dt * (self.q[i] + dt * (half * self.u[i] + dt * sixth * self.v[i]))
    }

    /// Evaluate inside the knot range; exact at the knots.
    pub fn evaluate(&self, t: T) -> Result<T> {
        let knots = self.grid.knots();
        let last = knots.len() - 1;
        if t < knots[0] || t > knots[last] {
            return Err(Error::OutOfRange {
                t: to_f64(t),
                lo: to_f64(knots[0]),
                hi: to_f64(knots[last]),
            });
        }
        if t == knots[last] {
            return Ok(self.p[last]);
        }
        let idx = knots.partition_point(|&k| k <= t) - 1;
        if knots[idx] == t {
            return Ok(self.p[idx]);
        }
        Ok(self.piece(idx, t))
    }

    /// Value of the natural C^2 extension past the boundary knots: linear
    /// continuation with the boundary slope. Falls back to `evaluate` inside
    /// the range.
    pub fn linear_extension(&self, t: T) -> T {
        let knots = self.grid.knots();
        let last = knots.len() - 1;
        if t > knots[last] {
            self.p[last] + self.q[last] * (t - knots[last])
        } else if t < knots[0] {
            self.p[0] + self.q[0] * (t - knots[0])
        } else {
            self.evaluate(t).expect("t is inside the knot range")
        }
    }
}

/// Build a spline from the `(p_1, p_2, u_1, ..., u_{n+1})` parameters.
///
/// The third derivatives come from the curvature differences, the first slope
/// from the continuity relation on the first interval, and the remaining
/// values and slopes from the forward recursion.
pub fn spline_from_002<T: Scalar>(
    grid: &KnotGrid<T>,
    p1: T,
    p2: T,
    u: &[T],
) -> Result<SplineModel<T>> {
    let n = grid.intervals();
    if u.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            what: "curvature parameters vs knot count",
            expected: n + 1,
            found: u.len(),
        });
    }
    let h = grid.gaps();
    let half = cast::<T>(0.5);
    let sixth = cast::<T>(1.0 / 6.0);
    let v: Vec<T> = (0..n).map(|i| (u[i + 1] - u[i]) / h[i]).collect();
    let mut p = vec![T::zero(); n + 1];
    let mut q = vec![T::zero(); n + 1];
    p[0] = p1;
    q[0] = (p2 - p1 - half * u[0] * h[0] * h[0] - sixth * v[0] * h[0] * h[0] * h[0]) / h[0];
    for i in 0..n {
        let hi = h[i];
        p[i + 1] = p[i] + q[i] * hi + half * u[i] * hi * hi + sixth * v[i] * hi * hi * hi;
        q[i + 1] = q[i] + u[i] * hi + half * v[i] * hi * hi;
    }
    Ok(SplineModel {
        grid: grid.clone(),
        p,
        q,
        u: u.to_vec(),
        v,
    })
}

/// Knot values of all `n+3` basis splines of the `(p_1, p_2, u)` parameters,
/// one column per unit parameter vector. Columns 1-2 span the affine
/// sequences.
pub fn basis_002<T: Scalar>(grid: &KnotGrid<T>) -> Result<Matrix<T>> {
    let n = grid.intervals();
    let mut basis = Matrix::zeros(n + 1, n + 3);
    let zeros = vec![T::zero(); n + 1];
    for j in 0..n + 3 {
        let model = match j {
            0 => spline_from_002(grid, T::one(), T::zero(), &zeros)?,
            1 => spline_from_002(grid, T::zero(), T::one(), &zeros)?,
            _ => {
                let mut u = zeros.clone();
                u[j - 2] = T::one();
                spline_from_002(grid, T::zero(), T::zero(), &u)?
            }
        };
        for i in 0..n + 1 {
            basis[(i, j)] = model.values()[i];
        }
    }
    Ok(basis)
}

/// Natural C^2 interpolant of the knot values: interior curvatures solve the
/// tridiagonal system with `u_1 = u_{n+1} = 0`.
pub fn natural_interpolant<T: Scalar>(grid: &KnotGrid<T>, values: &[T]) -> Result<SplineModel<T>> {
    let n = grid.intervals();
    if values.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            what: "values vs knot count",
            expected: n + 1,
            found: values.len(),
        });
    }
    let h = grid.gaps();
    let mut u = vec![T::zero(); n + 1];
    if n >= 2 {
        let third = cast::<T>(1.0 / 3.0);
        let sixth = cast::<T>(1.0 / 6.0);
        let diag: Vec<T> = (0..n - 1).map(|j| (h[j] + h[j + 1]) * third).collect();
        let off: Vec<T> = (0..n - 2).map(|j| h[j + 1] * sixth).collect();
        let rhs: Vec<T> = (0..n - 1)
            .map(|j| {
                (values[j + 2] - values[j + 1]) / h[j + 1] - (values[j + 1] - values[j]) / h[j]
            })
            .collect();
        let interior = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        u[1..n].copy_from_slice(&interior);
    }
    let half = cast::<T>(0.5);
    let sixth = cast::<T>(1.0 / 6.0);
    let two = cast::<T>(2.0);
    let v: Vec<T> = (0..n).map(|i| (u[i + 1] - u[i]) / h[i]).collect();
    let mut q = vec![T::zero(); n + 1];
    for i in 0..n {
        q[i] = (values[i + 1] - values[i]) / h[i] - h[i] * (two * u[i] + u[i + 1]) * sixth;
    }
    q[n] = q[n - 1] + u[n - 1] * h[n - 1] + half * v[n - 1] * h[n - 1] * h[n - 1];
    Ok(SplineModel {
        grid: grid.clone(),
        p: values.to_vec(),
        q,
        u,
        v,
    })
}

/// Curvature energy matrix: `u^T Q u` is the bending energy of a natural
/// spline with interior curvatures `u`. Tridiagonal, `(n-1) x (n-1)`, with
/// the cross terms split symmetrically.
pub fn energy_matrix<T: Scalar>(grid: &KnotGrid<T>) -> Result<Matrix<T>> {
    let n = grid.intervals();
    if n < 2 {
        return Err(Error::GridTooSmall {
            len: grid.len(),
            min: 3,
        });
    }
    let h = grid.gaps();
    let third = cast::<T>(1.0 / 3.0);
    let sixth = cast::<T>(1.0 / 6.0);
    let mut q = Matrix::zeros(n - 1, n - 1);
    for j in 0..n - 1 {
        q[(j, j)] = (h[j] + h[j + 1]) * third;
        if j + 1 < n - 1 {
            q[(j, j + 1)] = h[j + 1] * sixth;
            q[(j + 1, j)] = h[j + 1] * sixth;
        }
    }
    Ok(q)
}

/// Map from knot values to interior curvatures of the natural interpolant,
/// materialized as an `(n-1) x (n+1)` matrix.
pub fn curvature_map<T: Scalar>(grid: &KnotGrid<T>) -> Result<Matrix<T>> {
    let n = grid.intervals();
    if n < 2 {
        return Err(Error::GridTooSmall {
            len: grid.len(),
            min: 3,
        });
    }
    let h = grid.gaps();
    let third = cast::<T>(1.0 / 3.0);
    let sixth = cast::<T>(1.0 / 6.0);
    let diag: Vec<T> = (0..n - 1).map(|j| (h[j] + h[j + 1]) * third).collect();
    let off: Vec<T> = (0..n - 2).map(|j| h[j + 1] * sixth).collect();
    let mut u = Matrix::zeros(n - 1, n + 1);
    let mut rhs = vec![T::zero(); n - 1];
    for col in 0..n + 1 {
        for (j, r) in rhs.iter_mut().enumerate() {
            // Second difference of the unit vector e_col at interior knot j+1.
            let e = |idx: usize| if idx == col { T::one() } else { T::zero() };
            *r = (e(j + 2) - e(j + 1)) / h[j + 1] - (e(j + 1) - e(j)) / h[j];
        }
        let x = solve_tridiagonal(&off, &diag, &off, &rhs)?;
        for j in 0..n - 1 {
            u[(j, col)] = x[j];
        }
    }
    Ok(u)
}

/// Exact piecewise integral of `|s''|^2`; `s''` is linear on each interval,
/// so each term is a closed-form polynomial in `(u_i, v_i, h_i)`.
pub fn bending_energy<T: Scalar>(model: &SplineModel<T>) -> T {
    let h = model.grid().gaps();
    let third = cast::<T>(1.0 / 3.0);
    let u = model.curvatures();
    let v = model.third_derivatives();
    let mut total = T::zero();
    for i in 0..h.len() {
        let hi = h[i];
        total = total + hi * (u[i] * u[i] + u[i] * v[i] * hi + v[i] * v[i] * hi * hi * third);
    }
    total
}

/// Value-space energy `P = U^T Q U`: `p^T P p` is the bending energy of the
/// natural interpolant of `p`. Annihilates affine sequences.
pub fn value_energy<T: Scalar>(energy: &Matrix<T>, map: &Matrix<T>) -> Matrix<T> {
    assert_eq!(energy.rows(), map.rows(), "Q and U built on different grids");
    let mut p = map.transpose().matmul(&energy.matmul(map));
    p.symmetrize();
    p
}

/// L2 Gram matrix of the cardinal natural splines:
/// `Q0[i,j] = integral of L_i(t) L_j(t)` over the knot range, computed with
/// 4-point Gauss-Legendre per interval (exact: the integrand has degree 6).
pub fn l2_gram<T: Scalar>(grid: &KnotGrid<T>) -> Result<Matrix<T>> {
    let n = grid.intervals();
    let size = n + 1;
    let mut cardinals = Vec::with_capacity(size);
    for i in 0..size {
        let mut e = vec![T::zero(); size];
        e[i] = T::one();
        cardinals.push(natural_interpolant(grid, &e)?);
    }
    let rule = gauss_legendre_4::<T>();
    let half = cast::<T>(0.5);
    let knots = grid.knots();
    let mut gram = Matrix::zeros(size, size);
    let mut at_node = vec![T::zero(); size];
    for k in 0..n {
        let hk = grid.gaps()[k];
        for &(xi, wq) in rule.iter() {
            let t = knots[k] + hk * half * (xi + T::one());
            let weight = wq * hk * half;
            for (i, card) in cardinals.iter().enumerate() {
                at_node[i] = card.piece(k, t);
            }
            for i in 0..size {
                let wi = weight * at_node[i];
                for j in 0..size {
                    gram[(i, j)] += wi * at_node[j];
                }
            }
        }
    }
    gram.symmetrize();
    Ok(gram)
}

/// The derived matrices and kernels of a grid.
#[derive(Debug, Clone)]
pub struct SplineKernelSet<T> {
    pub grid: KnotGrid<T>,
    /// Curvature energy matrix (`(n-1) x (n-1)`, SPD, tridiagonal).
    pub energy: Matrix<T>,
    /// Values-to-interior-curvatures map (`(n-1) x (n+1)`).
    pub curvature_map: Matrix<T>,
    /// Value-space energy (`(n+1) x (n+1)`, PSD, annihilates affine).
    pub value_energy: Matrix<T>,
    /// Natural basis columns of the interior curvature parameters
    /// (`(n+1) x (n-1)`).
    pub curvature_columns: Matrix<T>,
    /// L2 Gram matrix of the cardinal natural splines (SPD).
    pub l2_gram: Matrix<T>,
    /// `K0 = Q0^{-1}`, positive definite.
    pub k0: Kernel<T>,
    /// `K1 = R Q^{-1} R^T`, conditionally positive w.r.t. the affine trend.
    pub k1: Kernel<T>,
    /// `K2 = R Q R^T`, conditionally positive w.r.t. the affine trend.
    pub k2: Kernel<T>,
    /// The affine trend `{1, t}` on the grid.
    pub trend: Trend<T>,
}

impl<T: Scalar> SplineKernelSet<T> {
    /// The bending-energy semi-kernel of the grid: form `Q`, null space
    /// spanned by `{1, t}`, complement basis `R`. Its worst-case form equals
    /// `(-w,1) K1 (-w,1)^T`.
    pub fn semi_kernel(&self) -> Result<SemiKernel<T>> {
        let size = self.grid.len();
        let knots = self.grid.knots();
        let null = Matrix::from_fn(size, 2, |i, j| {
            if j == 0 {
                T::one()
            } else {
                knots[i]
            }
        });
        SemiKernel::new(self.energy.clone(), null, self.curvature_columns.clone())
    }
}

/// Assemble every matrix and kernel for a grid and verify the structural
/// invariants before returning.
pub fn kernel_set<T: Scalar>(grid: &KnotGrid<T>) -> Result<SplineKernelSet<T>> {
    let n = grid.intervals();
    if n < 2 {
        return Err(Error::GridTooSmall {
            len: grid.len(),
            min: 3,
        });
    }
    let energy = energy_matrix(grid)?;
    let map = curvature_map(grid)?;
    let value = value_energy(&energy, &map);
    let basis = basis_002(grid)?;
    // Columns of the interior curvature parameters u_2 .. u_n.
    let columns = Matrix::from_fn(n + 1, n - 1, |i, j| basis[(i, 3 + j)]);
    let gram = l2_gram(grid)?;

    let energy_chol = cholesky(&energy, default_pivot_tol())?;
    let gram_chol = cholesky(&gram, default_pivot_tol())?;

    let k0_matrix = gram_chol.inverse();
    let mut k1_matrix = columns.matmul(&energy_chol.solve_mat(&columns.transpose()));
    k1_matrix.symmetrize();
    let mut k2_matrix = columns.matmul(&energy.matmul(&columns.transpose()));
    k2_matrix.symmetrize();

    let trend = Trend::affine(grid.knots())?;
    let k0 = Kernel::new(k0_matrix, "K0")?;
    let k1 = Kernel::with_trend(k1_matrix, &trend, "K1")?;
    let k2 = Kernel::with_trend(k2_matrix, &trend, "K2")?;

    // Structural invariants.
    if k0.classification() != Classification::PositiveDefinite {
        return Err(Error::InvariantViolation {
            what: "kernel_set",
            detail: format!("K0 classified as {}", k0.classification()),
        });
    }
    for k in [&k1, &k2] {
        if k.classification() == Classification::Indefinite {
            return Err(Error::InvariantViolation {
                what: "kernel_set",
                detail: format!("{} classified as indefinite", k.label()),
            });
        }
    }
    let knots = grid.knots();
    let t_scale = knots
        .iter()
        .fold(T::zero(), |acc, &t| acc.max(t.abs()))
        .max(T::one());
    let p_scale = value.max_abs() * t_scale;
    let annihilation_tol = cast::<T>(1e-10) * p_scale;
    let ones = vec![T::one(); n + 1];
    for (label, vector) in [("1", &ones), ("t", &knots.to_vec())] {
        let image = value.matvec(vector);
        let dev = image.iter().fold(T::zero(), |acc, &x| acc.max(x.abs()));
        if dev > annihilation_tol {
            return Err(Error::InvariantViolation {
                what: "kernel_set",
                detail: format!(
                    "value energy does not annihilate {label}: deviation {:.3e}",
                    to_f64(dev)
                ),
            });
        }
    }

    Ok(SplineKernelSet {
        grid: grid.clone(),
        energy,
        curvature_map: map,
        value_energy: value,
        curvature_columns: columns,
        l2_gram: gram,
        k0,
        k1,
        k2,
        trend,
    })
}

/// Closed-form minimizer of `f^T P f` over the final value with the leading
/// values fixed: the prediction of the energy-minimizing spline completion.
pub fn pspline_predict<T: Scalar>(value_energy: &Matrix<T>, values: &[T]) -> Result<T> {
    let size = value_energy.rows();
    if values.len() + 1 != size {
        return Err(Error::DimensionMismatch {
            what: "values vs energy size minus one",
            expected: size - 1,
            found: values.len(),
        });
    }
    let last = size - 1;
    let denom = value_energy[(last, last)];
    let threshold = value_energy.max_abs() * T::epsilon() * cast::<T>(size as f64);
    if !(denom > threshold) {
        return Err(Error::SingularPivot {
            index: last,
            value: to_f64(denom),
            threshold: to_f64(threshold),
        });
    }
    let mut num = T::zero();
    for j in 0..last {
        num += value_energy[(last, j)] * values[j];
    }
    Ok(-num / denom)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::worst_case_error;
    use crate::linalg::sym_rank;
    use crate::predictor::{constrained_weights, semikernel_worst_error};
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn grid(points: &[f64]) -> KnotGrid<f64> {
        KnotGrid::new(points.to_vec()).unwrap()
    }

    fn random_grid(n_intervals: usize, rng: &mut impl Rng) -> KnotGrid<f64> {
        let mut t = 0.0;
        let mut knots = vec![t];
        for _ in 0..n_intervals {
            t += rng.gen_range(0.3..1.7);
            knots.push(t);
        }
        grid(&knots)
    }

    /// Largest violation of the continuity relations across interior knots.
    fn continuity_violation(model: &SplineModel<f64>) -> f64 {
        let h = model.grid().gaps();
        let (p, q, u, v) = (
            model.values(),
            model.slopes(),
            model.curvatures(),
            model.third_derivatives(),
        );
        let mut worst: f64 = 0.0;
        for i in 0..h.len() {
            let hi = h[i];
            let c0 = p[i] + q[i] * hi + u[i] * hi * hi / 2.0 + v[i] * hi.powi(3) / 6.0 - p[i + 1];
            let c1 = q[i] + u[i] * hi + v[i] * hi * hi / 2.0 - q[i + 1];
            let c2 = v[i] - (u[i + 1] - u[i]) / hi;
            let scale = 1.0 + p[i].abs().max(q[i].abs()).max(u[i].abs());
            worst = worst.max(c0.abs() / scale).max(c1.abs() / scale).max(c2.abs() / scale);
        }
        worst
    }

    #[test]
    fn zero_curvature_gives_a_line() {
        let g = grid(&[0.0, 1.0, 2.0, 3.0]);
        let m = spline_from_002(&g, 0.0, 1.0, &[0.0; 4]).unwrap();
        assert_eq!(m.values(), &[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(m.slopes(), &[1.0, 1.0, 1.0, 1.0]);
        assert!(m.third_derivatives().iter().all(|&v| v == 0.0));

        let c = spline_from_002(&g, 2.5, 2.5, &[0.0; 4]).unwrap();
        assert!(c.values().iter().all(|&p| p == 2.5));
    }

    #[test]
    fn parametrized_spline_matches_hand_evaluation() {
        // Oracle: with p1 = p2 = 0 and u = (0, 6, 0) on knots (0, 1, 2) the
        // piecewise cubic is t^3 - t on [0,1] and 2T + 3T^2 - T^3 (T = t-1)
        // on [1,2]; its knot values are (0, 0, 4).
        let g = grid(&[0.0, 1.0, 2.0]);
        let m = spline_from_002(&g, 0.0, 0.0, &[0.0, 6.0, 0.0]).unwrap();
        assert_eq!(m.third_derivatives(), &[6.0, -6.0]);
        assert!((m.slopes()[0] + 1.0).abs() < 1e-15);
        assert!(m.values()[1].abs() < 1e-15);
        assert!((m.values()[2] - 4.0).abs() < 1e-14);
        for (t, want) in [(0.5, 0.5f64.powi(3) - 0.5), (1.5, 2.0 * 0.5 + 3.0 * 0.25 - 0.125)] {
            let got = m.evaluate(t).unwrap();
            assert!((got - want).abs() < 1e-14);
        }
        assert!(continuity_violation(&m) < 1e-14);
    }

    #[test]
    fn basis_columns_span_affine_and_unit_curvatures() {
        let g = grid(&[0.0, 1.0, 2.0]);
        let b = basis_002(&g).unwrap();
        assert_eq!((b.rows(), b.cols()), (3, 5));
        // First parameter column starts with knot values (1, 0).
        assert_eq!(b[(0, 0)], 1.0);
        assert_eq!(b[(1, 0)], 0.0);
        // Columns 1-2 reproduce any affine sequence via a unique pair.
        let (a0, a1) = (3.0, -2.0);
        // Solve [b0 b1] c = a0 + a1 t at the first two knots.
        let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
        let y0 = a0 + a1 * 0.0;
        let y1 = a0 + a1 * 1.0;
        let c0 = (y0 * b[(1, 1)] - b[(0, 1)] * y1) / det;
        let c1 = (b[(0, 0)] * y1 - y0 * b[(1, 0)]) / det;
        for i in 0..3 {
            let got = c0 * b[(i, 0)] + c1 * b[(i, 1)];
            let want = a0 + a1 * g.knots()[i];
            assert!((got - want).abs() < 1e-13);
        }
        // Column of the first interior curvature parameter matches the
        // hand-evaluated model above, scaled from u_2 = 6 down to 1.
        for (i, want) in [0.0, 0.0, 4.0 / 6.0].iter().enumerate() {
            assert!((b[(i, 3)] - want).abs() < 1e-14);
        }
    }

    #[test]
    fn natural_interpolant_examples() {
        let g = grid(&[0.0, 1.0, 2.0]);
        // Affine data has zero curvature everywhere.
        let m = natural_interpolant(&g, &[1.0, 3.0, 5.0]).unwrap();
        assert!(m.curvatures().iter().all(|&u| u.abs() < 1e-14));
        assert!(m.is_natural(1e-12));

        // Oracle: the single interior equation is (2/3) u_2 = -2.
        let m = natural_interpolant(&g, &[0.0, 1.0, 0.0]).unwrap();
        assert!((m.curvatures()[1] + 3.0).abs() < 1e-13);
        assert_eq!(m.values(), &[0.0, 1.0, 0.0]);
        assert!(continuity_violation(&m) < 1e-14);

        // Evaluation between knots from the recovered coefficients.
        let got = m.evaluate(0.5).unwrap();
        assert!((got - 0.6875).abs() < 1e-14);
        // Knots evaluate exactly.
        assert_eq!(m.evaluate(1.0).unwrap(), 1.0);
        assert!(m.evaluate(2.5).is_err());
    }

    #[test]
    fn curvature_map_annihilates_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = random_grid(6, &mut rng);
        let u = curvature_map(&g).unwrap();
        let ones = vec![1.0; 7];
        let t = g.knots().to_vec();
        for image in [u.matvec(&ones), u.matvec(&t)] {
            assert!(image.iter().all(|x| x.abs() < 1e-12));
        }
        // Consistency with the interpolant path.
        let p: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m = natural_interpolant(&g, &p).unwrap();
        let mapped = u.matvec(&p);
        for j in 0..5 {
            assert!((mapped[j] - m.curvatures()[j + 1]).abs() < 1e-11);
        }
    }

    #[test]
    fn energy_matrix_examples() {
        let g = grid(&[0.0, 1.0, 2.0, 3.0]);
        let q = energy_matrix(&g).unwrap();
        assert_eq!((q.rows(), q.cols()), (2, 2));
        assert!((q[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q[(0, 1)] - 1.0 / 6.0).abs() < 1e-15);
        assert!((q[(1, 0)] - 1.0 / 6.0).abs() < 1e-15);
        assert!((q[(1, 1)] - 2.0 / 3.0).abs() < 1e-15);

        let g = grid(&[0.0, 0.5, 2.0]);
        let q = energy_matrix(&g).unwrap();
        assert_eq!((q.rows(), q.cols()), (1, 1));
        assert!((q[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..5 {
            let g = random_grid(7, &mut rng);
            let q = energy_matrix(&g).unwrap();
            assert!(cholesky(&q, 1e-12).is_ok());
        }
    }

    #[test]
    fn bending_energy_matches_matrix_form() {
        let g = grid(&[0.0, 1.0, 2.0]);
        let affine = spline_from_002(&g, 0.0, 1.0, &[0.0; 3]).unwrap();
        assert_eq!(bending_energy(&affine), 0.0);

        // Hand oracle: each interval contributes (u_i^2+u_i u_{i+1}+u_{i+1}^2)h/3.
        let m = spline_from_002(&g, 0.0, 0.0, &[0.0, 6.0, 0.0]).unwrap();
        let analytic = bending_energy(&m);
        assert!((analytic - 24.0).abs() < 1e-13);
        let q = energy_matrix(&g).unwrap();
        let u2 = m.curvatures()[1];
        assert!((analytic - q[(0, 0)] * u2 * u2).abs() < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..10 {
            let g = random_grid(6, &mut rng);
            let p: Vec<f64> = (0..7).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let m = natural_interpolant(&g, &p).unwrap();
            let q = energy_matrix(&g).unwrap();
            let interior: Vec<f64> = m.curvatures()[1..6].to_vec();
            let matrix_form = q.quad_form(&interior, &interior);
            let analytic = bending_energy(&m);
            assert!((matrix_form - analytic).abs() <= 1e-10 * (1.0 + analytic.abs()));
        }
    }

    #[test]
    fn value_energy_examples() {
        let g = grid(&[0.0, 1.0, 2.0]);
        let q = energy_matrix(&g).unwrap();
        let u = curvature_map(&g).unwrap();
        let p = value_energy(&q, &u);
        // Affine values cost nothing.
        let affine = [1.0, 1.5, 2.0];
        assert!(p.quad_form(&affine, &affine).abs() < 1e-14);
        // Oracle via the natural interpolant of (0,1,0): energy = 6.
        let vals = [0.0, 1.0, 0.0];
        assert!((p.quad_form(&vals, &vals) - 6.0).abs() < 1e-13);

        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..5 {
            let g = random_grid(5, &mut rng);
            let p = value_energy(&energy_matrix(&g).unwrap(), &curvature_map(&g).unwrap());
            assert_eq!(sym_rank(&p, 1e-9), 4);
        }
    }

    #[test]
    fn l2_gram_integrates_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let g = random_grid(5, &mut rng);
        let gram = l2_gram(&g).unwrap();
        let range = g.last() - g.first();
        let ones = vec![1.0; 6];
        let total = gram.quad_form(&ones, &ones);
        assert!((total - range).abs() < 1e-12 * (1.0 + range));
        let t = g.knots().to_vec();
        let mixed = gram.quad_form(&ones, &t);
        let want = (g.last() * g.last() - g.first() * g.first()) / 2.0;
        assert!((mixed - want).abs() < 1e-11 * (1.0 + want.abs()));

        // Independent quadrature oracle: composite Simpson with 200 panels
        // per interval on the evaluated spline square.
        let p: Vec<f64> = (0..6).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m = natural_interpolant(&g, &p).unwrap();
        let mut integral = 0.0;
        for k in 0..5 {
            let a = g.knots()[k];
            let h = g.gaps()[k];
            let panels = 200;
            let dt = h / panels as f64;
            for s in 0..panels {
                let t0 = a + s as f64 * dt;
                let f0 = m.evaluate(t0).unwrap().powi(2);
                let f1 = m.evaluate(t0 + dt / 2.0).unwrap().powi(2);
                let f2 = m.evaluate((t0 + dt).min(g.last())).unwrap().powi(2);
                integral += dt / 6.0 * (f0 + 4.0 * f1 + f2);
            }
        }
        let quad_form = gram.quad_form(&p, &p);
        assert!((quad_form - integral).abs() <= 1e-8 * (1.0 + integral.abs()));
    }

    #[test]
    fn kernel_set_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_grid(6, &mut rng);
        let set = kernel_set(&g).unwrap();
        assert_eq!(set.k0.classification(), Classification::PositiveDefinite);
        assert_eq!(set.k1.classification(), Classification::ConditionallyPositive);
        assert_eq!(set.k2.classification(), Classification::ConditionallyPositive);
        assert_eq!(sym_rank(set.k1.matrix(), 1e-9), 5);
        assert_eq!(sym_rank(set.k2.matrix(), 1e-9), 5);
        assert_eq!(sym_rank(&set.value_energy, 1e-9), 5);
    }

    #[test]
    fn basis_consistency_reproduces_the_interpolant() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let g = random_grid(6, &mut rng);
        let set = kernel_set(&g).unwrap();
        let b = basis_002(&g).unwrap();
        let p: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let m = natural_interpolant(&g, &p).unwrap();
        // Natural columns times (p1, p2, u_2..u_n) reproduce the knot values.
        let interior: Vec<f64> = m.curvatures()[1..6].to_vec();
        let from_columns = set.curvature_columns.matvec(&interior);
        for i in 0..7 {
            let affine_part = b[(i, 0)] * p[0] + b[(i, 1)] * p[1];
            let got = affine_part + from_columns[i];
            assert!((got - p[i]).abs() < 1e-10 * (1.0 + p[i].abs()));
        }
    }

    #[test]
    fn pspline_prediction_equals_constrained_k1_prediction() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..5 {
            let g = random_grid(7, &mut rng);
            let set = kernel_set(&g).unwrap();
            let f: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let by_energy = pspline_predict(&set.value_energy, &f).unwrap();
            let mut r = constrained_weights(&set.k1, &set.trend).unwrap();
            let by_kernel = r.apply(&f).unwrap();
            assert!(
                (by_energy - by_kernel).abs() <= 1e-8 * (1.0 + by_kernel.abs()),
                "{by_energy} vs {by_kernel}"
            );
        }
    }

    #[test]
    fn semi_kernel_path_matches_worst_case_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let g = random_grid(6, &mut rng);
        let set = kernel_set(&g).unwrap();
        let sk = set.semi_kernel().unwrap();
        let w = constrained_weights(&set.k1, &set.trend).unwrap().weights;
        let by_semi = semikernel_worst_error(&sk, &w).unwrap();
        let by_kernel = worst_case_error(&set.k1, &w).unwrap();
        assert!((by_semi - by_kernel).abs() <= 1e-9 * (1.0 + by_kernel.abs()));
    }

    #[test]
    fn natural_spline_data_is_recovered_by_the_energy_minimizer() {
        // Series whose withheld point lies on the natural extension of the
        // spline through the observed knots: the energy minimizer returns it.
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        for _ in 0..5 {
            let g = random_grid(7, &mut rng);
            let observed: Vec<f64> = (0..7).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let observed_grid = g.prefix(7).unwrap();
            let m = natural_interpolant(&observed_grid, &observed).unwrap();
            let truth = m.linear_extension(g.last());
            let set = kernel_set(&g).unwrap();
            let got = pspline_predict(&set.value_energy, &observed).unwrap();
            assert!((got - truth).abs() <= 1e-7 * (1.0 + truth.abs()));
        }
    }
}
