//! Default ridge level and cross-validation of the threshold constant `c`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScreenError};
use crate::linalg::{fit_with_intercept, select_columns, select_entries, select_rows, LinearFit};
use crate::links::{inverse_link, transform_response, transform_response_with_n, LinkSpec};
use crate::screening::{tdf_select_many, TransformedProblem, MIN_THRESHOLD_ROWS};

/// `λ = 4·(log p / n)^{1/4}`.
pub fn default_lambda(n: usize, p: usize) -> Result<f64> {
    if p < 2 {
        return Err(ScreenError::param("p", format!("default lambda needs p >= 2, got {p}")));
    }
    if n == 0 {
        return Err(ScreenError::param("n", "default lambda needs n >= 1"));
    }
    Ok(4.0 * ((p as f64).ln() / n as f64).powf(0.25))
}

/// `count` values spaced evenly in log scale over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}

/// Scale on which held-out prediction error is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorScale {
    /// `(y − g⁻¹(η̂))²` on the original response.
    #[default]
    Response,
    /// `(y* − η̂)²` on the link scale.
    Transformed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvOptions {
    pub grid: Vec<f64>,
    pub folds: usize,
    pub seed: u64,
    /// Fixed `λ`; when absent it is recomputed from each training fold's size.
    pub lambda: Option<f64>,
    pub error_scale: ErrorScale,
    pub max_steps: Option<usize>,
}

impl Default for CvOptions {
    fn default() -> Self {
        CvOptions {
            grid: log_grid(1e-3, 10.0, 20),
            folds: 10,
            seed: 0,
            lambda: None,
            error_scale: ErrorScale::Response,
            max_steps: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub c_grid: Vec<f64>,
    /// `fold_errors[g][f]`: mean squared error of grid value `g` on fold `f`.
    pub fold_errors: Vec<Vec<f64>>,
    pub mean_errors: Vec<f64>,
    pub chosen_c: f64,
}

/// Held-out row indices for each fold after a seeded shuffle. Fold sizes
/// differ by at most one.
pub fn fold_partition(n: usize, folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rows: Vec<usize> = (0..n).collect();
    rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = vec![Vec::with_capacity(n / folds.max(1) + 1); folds];
    for (pos, row) in rows.into_iter().enumerate() {
        out[pos % folds].push(row);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

/// Index of the smallest finite value; ties and non-finite values resolve to
/// the earliest position.
pub(crate) fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best] || (!values[best].is_finite() && v.is_finite()) {
            best = i;
        }
    }
    best
}

/// Chooses `c` by K-fold cross-validation of the full T-DF pipeline.
pub fn cv_select_c(x: &DMatrix<f64>, y: &DVector<f64>, link: LinkSpec, opts: &CvOptions) -> Result<CvReport> {
    let n = x.nrows();
    if y.len() != n {
        return Err(ScreenError::Shape(format!("X has {n} rows, y has {}", y.len())));
    }
    if opts.grid.is_empty() {
        return Err(ScreenError::param("c_grid", "must not be empty"));
    }
    if opts.folds < 2 {
        return Err(ScreenError::param(
            "folds",
            format!("need at least 2, got {}", opts.folds),
        ));
    }
    if opts.folds > n {
        return Err(ScreenError::param(
            "folds",
            format!("{} folds for {n} rows", opts.folds),
        ));
    }
    let smallest_train = n - n.div_ceil(opts.folds);
    if smallest_train < MIN_THRESHOLD_ROWS {
        return Err(ScreenError::param(
            "folds",
            format!("training folds have {smallest_train} rows; the threshold needs at least {MIN_THRESHOLD_ROWS}"),
        ));
    }

    let partition = fold_partition(n, opts.folds, opts.seed);
    let per_fold: Vec<Result<Vec<f64>>> = partition
        .par_iter()
        .map(|test| fold_errors(x, y, link, opts, test))
        .collect();
    let mut by_fold = Vec::with_capacity(opts.folds);
    for r in per_fold {
        by_fold.push(r?);
    }

    let fold_errors: Vec<Vec<f64>> = (0..opts.grid.len())
        .map(|g| by_fold.iter().map(|f| f[g]).collect())
        .collect();
    let mean_errors: Vec<f64> = fold_errors
        .iter()
        .map(|row| row.iter().sum::<f64>() / row.len() as f64)
        .collect();
    let chosen_c = opts.grid[argmin_first(&mean_errors)];
    Ok(CvReport {
        c_grid: opts.grid.clone(),
        fold_errors,
        mean_errors,
        chosen_c,
    })
}

fn fold_errors(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    link: LinkSpec,
    opts: &CvOptions,
    test: &[usize],
) -> Result<Vec<f64>> {
    let (n, p) = x.shape();
    let mut held_out = vec![false; n];
    for &i in test {
        held_out[i] = true;
    }
    let train: Vec<usize> = (0..n).filter(|&i| !held_out[i]).collect();
    let x_tr = select_rows(x, &train);
    let y_tr = select_entries(y, &train);
    let x_te = select_rows(x, test);
    let y_te = select_entries(y, test);
    let n_tr = train.len();

    let response = transform_response(&y_tr, link)?;
    let lambda = match opts.lambda {
        Some(l) => l,
        None => default_lambda(n_tr, p)?,
    };
    let problem = TransformedProblem::decorrelate(&x_tr, &response, lambda)?;
    let budget = opts.max_steps.unwrap_or(usize::MAX).min(problem.max_steps()).max(1);
    let selections = tdf_select_many(&problem, &opts.grid, budget)?;

    let target = match opts.error_scale {
        ErrorScale::Response => y_te.clone(),
        ErrorScale::Transformed => transform_response_with_n(&y_te, link, n_tr)?.ystar,
    };
    // distinct supports are prefixes of one path, so cache fits by size
    let mut cache: Vec<Option<f64>> = vec![None; problem.max_steps() + 1];
    let mut errors = Vec::with_capacity(selections.len());
    for sel in &selections {
        let size = sel.selected.len();
        let err = match cache[size] {
            Some(e) => e,
            None => {
                let fit = fit_with_intercept(&select_columns(&x_tr, &sel.selected), &response.ystar)?;
                let e = held_out_error(
                    &fit,
                    &select_columns(&x_te, &sel.selected),
                    &target,
                    link,
                    opts.error_scale,
                );
                cache[size] = Some(e);
                e
            }
        };
        errors.push(err);
    }
    Ok(errors)
}

fn held_out_error(
    fit: &LinearFit,
    x_te: &DMatrix<f64>,
    target: &DVector<f64>,
    link: LinkSpec,
    scale: ErrorScale,
) -> f64 {
    let eta = fit.predict(x_te);
    let sse: f64 = eta
        .iter()
        .zip(target.iter())
        .map(|(&e, &t)| {
            let pred = match scale {
                ErrorScale::Response => inverse_link(e, link),
                ErrorScale::Transformed => e,
            };
            (t - pred).powi(2)
        })
        .sum();
    sse / target.len() as f64
}
