//! Rolling-origin evaluation and kernel selection criteria.
//!
//! For each fold `r`, the first `r` series values predict the `(r+1)`-th
//! through the kernel restricted to the leading `(r+1) x (r+1)` block (or,
//! in rebuild mode, reconstructed from scratch on the first `r+1` knots).
//! Kernels are then compared by mean squared prediction error, maximum
//! absolute prediction error, and the pairwise fraction of strictly better
//! folds.

use crate::error::{Error, Result};
use crate::kernels::{Kernel, KnotGrid};
use crate::predictor::{constrained_weights, minmax_weights, predict, Trend};
use crate::scalar::{cast, Scalar};
use crate::spline::kernel_set;

/// Which kernel a rolling sweep evaluates.
#[derive(Debug, Clone)]
pub enum KernelSpec<T> {
    /// Inverse L2-Gram kernel of the spline family.
    SplineK0,
    /// `R Q^{-1} R^T` spline kernel (needs the affine trend).
    SplineK1,
    /// `R Q R^T` spline kernel (needs the affine trend).
    SplineK2,
    /// User-supplied kernel over the full grid.
    Custom(Kernel<T>),
}

impl<T: Scalar> KernelSpec<T> {
    pub fn label(&self) -> String {
        match self {
            KernelSpec::SplineK0 => "K0".into(),
            KernelSpec::SplineK1 => "K1".into(),
            KernelSpec::SplineK2 => "K2".into(),
            KernelSpec::Custom(k) => k.label().to_string(),
        }
    }

    /// The trend each kernel carries by default: none for `K0` and custom
    /// kernels, affine for `K1`/`K2`.
    fn default_uses_affine(&self) -> bool {
        matches!(self, KernelSpec::SplineK1 | KernelSpec::SplineK2)
    }
}

/// Trend applied during a sweep. `Auto` resolves per kernel.
#[derive(Debug, Clone)]
pub enum TrendMode<T> {
    Auto,
    None,
    Affine,
    Custom(Trend<T>),
}

/// Whether fold kernels are principal submatrices of the full-grid kernel or
/// rebuilt from scratch on the truncated grid. The two differ for every
/// spline kernel (most visibly for the inverse Gram).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RollingMode {
    Submatrix,
    Rebuild,
}

/// Outcome of one fold.
#[derive(Debug, Clone)]
pub enum RecordOutcome<T> {
    Predicted {
        predicted: T,
        actual: T,
        abs_error: T,
    },
    /// Solver failure for this fold; excluded from every criterion.
    Failed { reason: String },
}

#[derive(Debug, Clone)]
pub struct RollingRecord<T> {
    /// Number of known values when predicting value `r+1`.
    pub r: usize,
    pub outcome: RecordOutcome<T>,
}

/// All folds of one kernel over one series.
#[derive(Debug, Clone)]
pub struct RollingRun<T> {
    pub kernel_label: String,
    pub records: Vec<RollingRecord<T>>,
}

impl<T: Scalar> RollingRun<T> {
    pub fn successes(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.records.iter().filter_map(|rec| match &rec.outcome {
            RecordOutcome::Predicted { abs_error, .. } => Some((rec.r, *abs_error)),
            RecordOutcome::Failed { .. } => None,
        })
    }

    pub fn prediction_count(&self) -> usize {
        self.successes().count()
    }

    pub fn failure_count(&self) -> usize {
        self.records.len() - self.prediction_count()
    }
}

fn resolve_trend<T: Scalar>(
    spec: &KernelSpec<T>,
    mode: &TrendMode<T>,
    grid: &KnotGrid<T>,
) -> Result<Option<Trend<T>>> {
    match mode {
        TrendMode::Auto => {
            if spec.default_uses_affine() {
                Ok(Some(Trend::affine(grid.knots())?))
            } else {
                Ok(None)
            }
        }
        TrendMode::None => Ok(None),
        TrendMode::Affine => Ok(Some(Trend::affine(grid.knots())?)),
        TrendMode::Custom(t) => {
            if t.rows() != grid.len() {
                return Err(Error::DimensionMismatch {
                    what: "custom trend rows vs grid size",
                    expected: grid.len(),
                    found: t.rows(),
                });
            }
            Ok(Some(t.clone()))
        }
    }
}

fn full_kernel<T: Scalar>(
    spec: &KernelSpec<T>,
    grid: &KnotGrid<T>,
    trend: Option<&Trend<T>>,
) -> Result<Kernel<T>> {
    match spec {
        KernelSpec::SplineK0 | KernelSpec::SplineK1 | KernelSpec::SplineK2 => {
            let set = kernel_set(grid)?;
            let base = match spec {
                KernelSpec::SplineK0 => set.k0,
                KernelSpec::SplineK1 => set.k1,
                _ => set.k2,
            };
            // Reclassify only when the sweep's trend differs from the set's.
            match trend {
                Some(t) => Kernel::with_trend(base.matrix().clone(), t, base.label()),
                None => Ok(base),
            }
        }
        KernelSpec::Custom(k) => {
            if k.size() != grid.len() {
                return Err(Error::DimensionMismatch {
                    what: "custom kernel size vs grid size",
                    expected: grid.len(),
                    found: k.size(),
                });
            }
            Ok(k.clone())
        }
    }
}

/// One fold: predict `series[r]` from `series[..r]` on the truncated problem.
fn fold_prediction<T: Scalar>(
    series: &[T],
    grid: &KnotGrid<T>,
    spec: &KernelSpec<T>,
    full: Option<&Kernel<T>>,
    trend: Option<&Trend<T>>,
    r: usize,
    mode: RollingMode,
) -> Result<T> {
    let m = r + 1;
    let (kernel_r, trend_r) = match mode {
        RollingMode::Submatrix => {
            let full = full.expect("submatrix mode carries the full kernel");
            let trend_r = match trend {
                Some(t) => Some(t.top_rows(m)?),
                None => None,
            };
            let kernel_r = full.principal(m, trend_r.as_ref(), full.label())?;
            (kernel_r, trend_r)
        }
        RollingMode::Rebuild => {
            let sub_grid = grid.prefix(m)?;
            let set = kernel_set(&sub_grid)?;
            let base = match spec {
                KernelSpec::SplineK0 => set.k0,
                KernelSpec::SplineK1 => set.k1,
                KernelSpec::SplineK2 => set.k2,
                KernelSpec::Custom(_) => unreachable!("rebuild rejects custom kernels upfront"),
            };
            let trend_r = match trend {
                Some(t) => Some(t.top_rows(m)?),
                None => None,
            };
            let kernel_r = match trend_r.as_ref() {
                Some(t) => Kernel::with_trend(base.matrix().clone(), t, base.label())?,
                None => base,
            };
            (kernel_r, trend_r)
        }
    };
    let result = match trend_r.as_ref() {
        Some(t) => constrained_weights(&kernel_r, t)?,
        None => minmax_weights(&kernel_r)?,
    };
    predict(&result.weights, &series[..r])
}

/// Rolling-origin sweep of one kernel: predict `f(x_{r+1})` from the first
/// `r` values for `r = r_min .. n-1`. Per-fold solver failures are recorded,
/// not fatal.
pub fn rolling_predict<T: Scalar>(
    series: &[T],
    grid: &KnotGrid<T>,
    spec: &KernelSpec<T>,
    trend_mode: &TrendMode<T>,
    r_min: usize,
    mode: RollingMode,
) -> Result<RollingRun<T>> {
    let n = series.len();
    if n != grid.len() {
        return Err(Error::DimensionMismatch {
            what: "series length vs grid size",
            expected: grid.len(),
            found: n,
        });
    }
    if r_min < 2 {
        return Err(Error::InvalidConfig(format!(
            "r_min must be at least 2, got {r_min}"
        )));
    }
    if n < r_min + 1 {
        return Err(Error::InvalidConfig(format!(
            "series of length {n} admits no folds with r_min {r_min}"
        )));
    }
    if mode == RollingMode::Rebuild && matches!(spec, KernelSpec::Custom(_)) {
        return Err(Error::InvalidConfig(
            "rebuild mode cannot reconstruct a file-supplied kernel".into(),
        ));
    }
    let trend = resolve_trend(spec, trend_mode, grid)?;
    let full = match mode {
        RollingMode::Submatrix => Some(full_kernel(spec, grid, trend.as_ref())?),
        RollingMode::Rebuild => None,
    };
    let mut records = Vec::with_capacity(n - r_min);
    for r in r_min..n {
        let outcome =
            match fold_prediction(series, grid, spec, full.as_ref(), trend.as_ref(), r, mode) {
                Ok(predicted) => {
                    let actual = series[r];
                    RecordOutcome::Predicted {
                        predicted,
                        actual,
                        abs_error: (actual - predicted).abs(),
                    }
                }
                Err(err) => RecordOutcome::Failed {
                    reason: err.to_string(),
                },
            };
        records.push(RollingRecord { r, outcome });
    }
    Ok(RollingRun {
        kernel_label: spec.label(),
        records,
    })
}

/// Mean squared prediction error over the folds actually produced.
pub fn mspe<T: Scalar>(run: &RollingRun<T>) -> Result<T> {
    let mut sum = T::zero();
    let mut count = 0usize;
    for (_, err) in run.successes() {
        sum += err * err;
        count += 1;
    }
    if count == 0 {
        return Err(Error::EmptyRun);
    }
    Ok(sum / cast::<T>(count as f64))
}

/// Maximum absolute prediction error.
pub fn maxpe<T: Scalar>(run: &RollingRun<T>) -> Result<T> {
    let mut best: Option<T> = None;
    for (_, err) in run.successes() {
        best = Some(match best {
            Some(b) => b.max(err),
            None => err,
        });
    }
    best.ok_or(Error::EmptyRun)
}

fn compare_counts<T: Scalar>(
    a: &RollingRun<T>,
    b: &RollingRun<T>,
    tie_tol: T,
) -> Result<(usize, usize, usize)> {
    if a.records.len() != b.records.len() {
        return Err(Error::MisalignedRuns {
            index: a.records.len().min(b.records.len()),
            left: a.records.len(),
            right: b.records.len(),
        });
    }
    let mut wins_a = 0usize;
    let mut wins_b = 0usize;
    let mut common = 0usize;
    for (i, (ra, rb)) in a.records.iter().zip(&b.records).enumerate() {
        if ra.r != rb.r {
            return Err(Error::MisalignedRuns {
                index: i,
                left: ra.r,
                right: rb.r,
            });
        }
        if let (
            RecordOutcome::Predicted { abs_error: ea, .. },
            RecordOutcome::Predicted { abs_error: eb, .. },
        ) = (&ra.outcome, &rb.outcome)
        {
            common += 1;
            if *ea < *eb - tie_tol {
                wins_a += 1;
            } else if *eb < *ea - tie_tol {
                wins_b += 1;
            }
        }
    }
    if common == 0 {
        return Err(Error::EmptyRun);
    }
    Ok((wins_a, wins_b, common))
}

/// Fraction of common folds where run `a` beats run `b` by more than
/// `tie_tol`. `a` is declared statistically better when this exceeds 1/2.
pub fn statistical_compare<T: Scalar>(
    a: &RollingRun<T>,
    b: &RollingRun<T>,
    tie_tol: T,
) -> Result<T> {
    let (wins_a, _, common) = compare_counts(a, b, tie_tol)?;
    Ok(cast::<T>(wins_a as f64) / cast::<T>(common as f64))
}

/// Per-kernel summary of a tournament.
#[derive(Debug, Clone)]
pub struct KernelCriteria<T> {
    pub label: String,
    pub mspe: T,
    pub maxpe: T,
    pub predictions: usize,
    pub failures: usize,
}

/// All criteria plus the pairwise win/tie counts.
///
/// Counts are integers so the antisymmetry identity
/// `wins[a][b] + wins[b][a] + ties[a][b] = common[a][b]` holds exactly;
/// fractions are derived views.
#[derive(Debug, Clone)]
pub struct CriteriaReport<T> {
    pub kernels: Vec<KernelCriteria<T>>,
    pub wins: Vec<Vec<usize>>,
    pub ties: Vec<Vec<usize>>,
    pub common: Vec<Vec<usize>>,
    pub tie_tol: T,
}

impl<T: Scalar> CriteriaReport<T> {
    pub fn win_fraction(&self, a: usize, b: usize) -> T {
        if a == b || self.common[a][b] == 0 {
            return T::zero();
        }
        cast::<T>(self.wins[a][b] as f64) / cast::<T>(self.common[a][b] as f64)
    }

    pub fn tie_fraction(&self, a: usize, b: usize) -> T {
        if a == b || self.common[a][b] == 0 {
            return T::zero();
        }
        cast::<T>(self.ties[a][b] as f64) / cast::<T>(self.common[a][b] as f64)
    }

    /// Criterion 3: strictly better on more than half of the common folds.
    pub fn statistically_better(&self, a: usize, b: usize) -> bool {
        2 * self.wins[a][b] > self.common[a][b]
    }
}

/// Tournament configuration; `Default` matches the evaluation protocol of the
/// spline kernels (r_min 2, submatrix folds, per-kernel trends, exact ties).
#[derive(Debug, Clone)]
pub struct TournamentConfig<T> {
    pub r_min: usize,
    pub mode: RollingMode,
    pub trend: TrendMode<T>,
    pub tie_tol: T,
}

impl<T: Scalar> Default for TournamentConfig<T> {
    fn default() -> Self {
        TournamentConfig {
            r_min: 2,
            mode: RollingMode::Submatrix,
            trend: TrendMode::Auto,
            tie_tol: T::zero(),
        }
    }
}

/// Run every kernel's sweep and assemble all three criteria.
pub fn tournament<T: Scalar>(
    series: &[T],
    grid: &KnotGrid<T>,
    specs: &[KernelSpec<T>],
    config: &TournamentConfig<T>,
) -> Result<CriteriaReport<T>> {
    if specs.len() < 2 {
        return Err(Error::InvalidConfig(
            "a tournament needs at least two kernels".into(),
        ));
    }
    if config.tie_tol < T::zero() {
        return Err(Error::InvalidConfig("tie_tol must be nonnegative".into()));
    }
    let runs: Vec<RollingRun<T>> = specs
        .iter()
        .map(|spec| rolling_predict(series, grid, spec, &config.trend, config.r_min, config.mode))
        .collect::<Result<_>>()?;
    tournament_from_runs(&runs, config.tie_tol)
}

/// Assemble a report from already-computed sweeps.
pub fn tournament_from_runs<T: Scalar>(
    runs: &[RollingRun<T>],
    tie_tol: T,
) -> Result<CriteriaReport<T>> {
    let k = runs.len();
    let mut kernels = Vec::with_capacity(k);
    for run in runs {
        kernels.push(KernelCriteria {
            label: run.kernel_label.clone(),
            mspe: mspe(run)?,
            maxpe: maxpe(run)?,
            predictions: run.prediction_count(),
            failures: run.failure_count(),
        });
    }
    let mut wins = vec![vec![0usize; k]; k];
    let mut ties = vec![vec![0usize; k]; k];
    let mut common = vec![vec![0usize; k]; k];
    for a in 0..k {
        for b in (a + 1)..k {
            let (wa, wb, c) = compare_counts(&runs[a], &runs[b], tie_tol)?;
            wins[a][b] = wa;
            wins[b][a] = wb;
            ties[a][b] = c - wa - wb;
            ties[b][a] = ties[a][b];
            common[a][b] = c;
            common[b][a] = c;
        }
    }
    Ok(CriteriaReport {
        kernels,
        wins,
        ties,
        common,
        tie_tol,
    })
}
