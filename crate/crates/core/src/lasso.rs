//! L1-regularized feature selection.
//!
//! A Lasso regression is fit against the 0/1 labels by cyclic coordinate
//! descent. The regularization strength is picked by repeated balanced
//! cross-validation: ten rounds of majority under-sampling, each choosing
//! the alpha with the lowest out-of-fold MSE, then a mode vote. When the
//! vote lands on an edge of the search grid the grid shifts a decade in
//! that direction and the vote reruns (at most five shifts). The final fit
//! uses the full, unbalanced training rows; features with non-zero
//! coefficients survive.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::metrics::mse;
use crate::seeding::{sub_seed, Domain};
use crate::split::{stratified_kfold, undersample_majority};
use crate::standardize::standardize;

/// One converged (or abandoned) coordinate-descent solution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LassoFit {
    pub alpha: f64,
    /// Coefficients in standardized feature space.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub n_iterations: usize,
    pub converged: bool,
}

impl LassoFit {
    /// Predict regression outputs for standardized rows.
    pub fn predict(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| {
                self.intercept
                    + r.iter()
                        .zip(&self.coefficients)
                        .map(|(x, b)| x * b)
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.iter().filter(|c| **c != 0.0).count()
    }
}

/// Default coordinate-descent tolerance.
pub const LASSO_TOL: f64 = 1e-6;
/// Default coordinate-descent sweep cap.
pub const LASSO_MAX_ITER: usize = 10_000;
/// Default number of balanced voting repetitions.
pub const SELECTION_REPETITIONS: usize = 10;
/// Maximum number of grid-edge expansions.
pub const MAX_GRID_EXPANSIONS: usize = 5;

fn soft_threshold(value: f64, threshold: f64) -> f64 {
    if value > threshold {
        value - threshold
    } else if value < -threshold {
        value + threshold
    } else {
        0.0
    }
}

/// Column-major copy plus per-column mean-square norms.
struct Columns {
    cols: Vec<Vec<f64>>,
    /// z_j = (1/n)·Σ x_ij² — the curvature of coordinate j.
    z: Vec<f64>,
    n: usize,
}

impl Columns {
    fn build(rows: &[Vec<f64>]) -> Columns {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut cols = vec![vec![0.0; n]; m];
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                cols[j][i] = v;
            }
        }
        let z = cols
            .iter()
            .map(|c| c.iter().map(|v| v * v).sum::<f64>() / n as f64)
            .collect();
        Columns { cols, z, n }
    }
}

/// Dot product accumulated in four independent lanes so the sum does not
/// serialize on one addition chain. The summation order is fixed, so
/// results stay deterministic.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let chunks = a.len() / 4 * 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    let mut i = 0;
    while i < chunks {
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
        i += 4;
    }
    let mut tail = 0.0;
    for k in chunks..a.len() {
        tail += a[k] * b[k];
    }
    (s0 + s1) + (s2 + s3) + tail
}

/// One coordinate update; returns |Δβ_j|.
fn update_coordinate(
    columns: &Columns,
    n: f64,
    alpha: f64,
    j: usize,
    beta: &mut [f64],
    residual: &mut [f64],
) -> f64 {
    let z = columns.z[j];
    if z == 0.0 {
        return 0.0;
    }
    let col = &columns.cols[j];
    let rho = dot4(col, residual) / n + z * beta[j];
    let updated = soft_threshold(rho, alpha) / z;
    let delta = updated - beta[j];
    if delta != 0.0 {
        for (r, x) in residual.iter_mut().zip(col) {
            *r -= delta * x;
        }
        beta[j] = updated;
    }
    delta.abs()
}

/// Cyclic coordinate descent on (1/2n)·‖y − Xβ − b‖² + α·‖β‖₁ with the
/// intercept pinned at ȳ (exact for mean-centered columns). `beta` carries
/// the warm start in and the solution out; `residual` must equal
/// y − ȳ − Xβ on entry.
///
/// Between full passes, iteration narrows to the coordinates that are
/// currently non-zero until they settle; convergence is only ever declared
/// by a full pass, so the stopping criterion is the same as sweeping every
/// coordinate each time.
fn coordinate_descent(
    columns: &Columns,
    alpha: f64,
    tol: f64,
    max_iter: usize,
    beta: &mut [f64],
    residual: &mut [f64],
) -> (usize, bool) {
    let n = columns.n as f64;
    let mut active: Vec<usize> = Vec::with_capacity(beta.len());
    let mut sweep = 0;
    while sweep < max_iter {
        sweep += 1;
        let mut max_delta: f64 = 0.0;
        active.clear();
        for j in 0..beta.len() {
            max_delta = max_delta.max(update_coordinate(columns, n, alpha, j, beta, residual));
            if beta[j] != 0.0 {
                active.push(j);
            }
        }
        if max_delta < tol {
            return (sweep, true);
        }
        while sweep < max_iter {
            sweep += 1;
            let mut inner: f64 = 0.0;
            for &j in &active {
                inner = inner.max(update_coordinate(columns, n, alpha, j, beta, residual));
            }
            if inner < tol {
                break;
            }
        }
    }
    (max_iter, false)
}

/// Fit one Lasso at a single alpha from a cold start.
pub fn lasso_fit(
    rows: &[Vec<f64>],
    y: &[f64],
    alpha: f64,
    tol: f64,
    max_iter: usize,
) -> LassoFit {
    let columns = Columns::build(rows);
    let intercept = y.iter().sum::<f64>() / y.len() as f64;
    let mut beta = vec![0.0; columns.cols.len()];
    let mut residual: Vec<f64> = y.iter().map(|v| v - intercept).collect();
    let (n_iterations, converged) =
        coordinate_descent(&columns, alpha, tol, max_iter, &mut beta, &mut residual);
    LassoFit {
        alpha,
        coefficients: beta,
        intercept,
        n_iterations,
        converged,
    }
}

/// Fit a whole alpha path with warm starts. `alphas` must be descending;
/// each solution seeds the next, which is much cheaper than cold starts.
pub fn lasso_path(
    rows: &[Vec<f64>],
    y: &[f64],
    alphas: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<LassoFit> {
    debug_assert!(alphas.windows(2).all(|w| w[0] >= w[1]), "path wants descending alphas");
    let columns = Columns::build(rows);
    let intercept = y.iter().sum::<f64>() / y.len() as f64;
    let mut beta = vec![0.0; columns.cols.len()];
    let mut residual: Vec<f64> = y.iter().map(|v| v - intercept).collect();
    let mut fits = Vec::with_capacity(alphas.len());
    for &alpha in alphas {
        let (n_iterations, converged) =
            coordinate_descent(&columns, alpha, tol, max_iter, &mut beta, &mut residual);
        fits.push(LassoFit {
            alpha,
            coefficients: beta.clone(),
            intercept,
            n_iterations,
            converged,
        });
    }
    fits
}

/// Largest violation of the soft-threshold stationarity conditions; a
/// converged fit should keep this within a few multiples of the tolerance.
pub fn stationarity_gap(fit: &LassoFit, rows: &[Vec<f64>], y: &[f64]) -> f64 {
    let columns = Columns::build(rows);
    let n = columns.n as f64;
    let mut residual: Vec<f64> = y.iter().map(|v| v - fit.intercept).collect();
    for (j, col) in columns.cols.iter().enumerate() {
        let b = fit.coefficients[j];
        if b != 0.0 {
            for (r, x) in residual.iter_mut().zip(col) {
                *r -= b * x;
            }
        }
    }
    let mut gap: f64 = 0.0;
    for (j, col) in columns.cols.iter().enumerate() {
        if columns.z[j] == 0.0 {
            continue;
        }
        let grad: f64 = col.iter().zip(&residual).map(|(x, r)| x * r).sum::<f64>() / n;
        let b = fit.coefficients[j];
        let violation = if b != 0.0 {
            (grad - fit.alpha * b.signum()).abs()
        } else {
            (grad.abs() - fit.alpha).max(0.0)
        };
        gap = gap.max(violation);
    }
    gap
}

/// 50 log-spaced alphas across [1e-4, 1e1].
pub fn default_alpha_grid() -> Vec<f64> {
    log_grid(-4.0, 1.0, 50)
}

/// Log-spaced grid between two positive endpoints (inclusive).
pub fn alpha_grid(min: f64, max: f64, points: usize) -> Result<Vec<f64>> {
    if !(min > 0.0) || !(max > min) || points < 2 {
        return Err(Error::Selection(format!(
            "invalid alpha grid: min {min}, max {max}, {points} points"
        )));
    }
    Ok(log_grid(min.log10(), max.log10(), points))
}

fn log_grid(lo_exp: f64, hi_exp: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| {
            let t = i as f64 / (points - 1) as f64;
            10f64.powf(lo_exp + t * (hi_exp - lo_exp))
        })
        .collect()
}

/// Pick the alpha with the lowest mean out-of-fold MSE over a stratified
/// K-fold of (already balanced) training rows. Ties go to the smaller
/// alpha. The grid must be ascending.
pub fn alpha_search(matrix: &FeatureMatrix, grid: &[f64], k: usize, seed: u64) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Selection("alpha grid is empty".into()));
    }
    let indices: Vec<usize> = (0..matrix.n_rows()).collect();
    let plan = stratified_kfold(&indices, &matrix.labels, k, seed)?;

    let mut grid_desc: Vec<f64> = grid.to_vec();
    grid_desc.reverse();
    let mut fold_mse = vec![0.0; grid.len()];
    for fold in 0..plan.k() {
        let train_rows_idx = plan.training(fold);
        let val_rows_idx = plan.validation(fold);
        let train = matrix.subset_rows(&train_rows_idx);
        let val = matrix.subset_rows(val_rows_idx);
        let (train_std, stats) = standardize(&train.rows);
        let val_std = stats.transform(&val.rows);

        let fits = lasso_path(&train_std, &train.labels, &grid_desc, LASSO_TOL, LASSO_MAX_ITER);
        for (path_pos, fit) in fits.iter().enumerate() {
            let grid_pos = grid.len() - 1 - path_pos;
            let predictions = fit.predict(&val_std);
            fold_mse[grid_pos] += mse(&val.labels, &predictions)?;
        }
    }

    let mut best = 0;
    for i in 1..grid.len() {
        if fold_mse[i] < fold_mse[best] {
            best = i;
        }
    }
    Ok(grid[best])
}

/// One voting round over a fixed grid, for the audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRound {
    pub grid_min: f64,
    pub grid_max: f64,
    pub n_points: usize,
    pub votes: Vec<f64>,
    pub mode_alpha: f64,
}

/// Outcome of the full selection protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Best alpha per repetition in the final voting round.
    pub alpha_votes: Vec<f64>,
    pub final_alpha: f64,
    pub selected_indices: Vec<usize>,
    pub selected_feature_names: Vec<String>,
    /// Final-fit coefficients for every input feature (standardized space).
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub search_grid_history: Vec<GridRound>,
    pub warnings: Vec<String>,
}

/// Most frequent vote; ties break toward the smallest alpha.
pub fn vote_mode(votes: &[f64]) -> f64 {
    let mut sorted = votes.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best_value = sorted[0];
    let mut best_count = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        if j - i > best_count {
            best_count = j - i;
            best_value = sorted[i];
        }
        i = j;
    }
    best_value
}

/// Run the repeated balanced vote + final fit and return the surviving
/// feature set. `seed` drives every random choice; identical inputs give
/// identical output.
pub fn select_features(
    matrix: &FeatureMatrix,
    repetitions: usize,
    k: usize,
    seed: u64,
) -> Result<SelectionResult> {
    select_features_with_grid(matrix, repetitions, k, &default_alpha_grid(), seed)
}

/// Like [`select_features`] but starting from a caller-chosen alpha grid
/// (ascending). The grid may still drift by whole decades if the votes
/// land on its edges.
pub fn select_features_with_grid(
    matrix: &FeatureMatrix,
    repetitions: usize,
    k: usize,
    starting_grid: &[f64],
    seed: u64,
) -> Result<SelectionResult> {
    use rayon::prelude::*;

    if repetitions == 0 {
        return Err(Error::Selection("need at least one repetition".into()));
    }
    if starting_grid.is_empty() {
        return Err(Error::Selection("alpha grid is empty".into()));
    }
    let indices: Vec<usize> = (0..matrix.n_rows()).collect();
    let mut grid = starting_grid.to_vec();
    let mut history: Vec<GridRound> = Vec::new();
    let mut warnings: Vec<String> = Vec::new();

    let (final_alpha, final_votes) = loop {
        let round = history.len() as u64;
        let votes: Vec<f64> = (0..repetitions)
            .into_par_iter()
            .map(|r| -> Result<f64> {
                let tag = round * repetitions as u64 + r as u64;
                let balanced_idx = undersample_majority(
                    &indices,
                    &matrix.labels,
                    sub_seed(seed, Domain::SelectionUndersample, tag),
                )?;
                let balanced = matrix.subset_rows(&balanced_idx);
                alpha_search(
                    &balanced,
                    &grid,
                    k,
                    sub_seed(seed, Domain::SelectionAlphaSearch, tag),
                )
            })
            .collect::<Result<Vec<f64>>>()?;

        let mode = vote_mode(&votes);
        history.push(GridRound {
            grid_min: grid[0],
            grid_max: *grid.last().unwrap(),
            n_points: grid.len(),
            votes: votes.clone(),
            mode_alpha: mode,
        });

        let at_min = mode == grid[0];
        let at_max = mode == *grid.last().unwrap();
        if (at_min || at_max) && history.len() <= MAX_GRID_EXPANSIONS {
            // The optimum may lie outside the searched range: shift the
            // whole grid one decade toward the edge the vote landed on.
            let factor = if at_min { 0.1 } else { 10.0 };
            for a in &mut grid {
                *a *= factor;
            }
            continue;
        }
        if at_min || at_max {
            warnings.push(format!(
                "alpha vote still at grid edge after {MAX_GRID_EXPANSIONS} expansions; keeping {mode}"
            ));
        }
        break (mode, votes);
    };

    // Final fit on the full (unbalanced) training rows.
    let (rows_std, _) = standardize(&matrix.rows);
    let fit = lasso_fit(&rows_std, &matrix.labels, final_alpha, LASSO_TOL, LASSO_MAX_ITER);
    if !fit.converged {
        return Err(Error::Selection(format!(
            "final Lasso fit at alpha {final_alpha} did not converge in {LASSO_MAX_ITER} sweeps"
        )));
    }

    let mut selected_indices: Vec<usize> = (0..matrix.n_cols())
        .filter(|&j| fit.coefficients[j] != 0.0)
        .collect();
    if selected_indices.is_empty() {
        warnings.push(format!(
            "Lasso at alpha {final_alpha} kept zero features; falling back to all {}",
            matrix.n_cols()
        ));
        selected_indices = (0..matrix.n_cols()).collect();
    }
    let selected_feature_names = selected_indices
        .iter()
        .map(|&j| matrix.schema[j].clone())
        .collect();

    Ok(SelectionResult {
        alpha_votes: final_votes,
        final_alpha,
        selected_indices,
        selected_feature_names,
        coefficients: fit.coefficients,
        intercept: fit.intercept,
        search_grid_history: history,
        warnings,
    })
}
