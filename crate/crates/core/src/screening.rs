//! Decorrelated forward (DF) paths and the thresholded T-DF selector.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScreenError};
use crate::linalg::{apply_decorrelator, best_candidate, build_decorrelator, IncrementalForward};
use crate::links::{transform_response, LinkSpec, TransformedResponse};
use crate::tuning::{cv_select_c, default_lambda, CvOptions, CvReport};

/// Relative residual level at which the forward search has nothing left to fit.
pub const RESIDUAL_FLOOR: f64 = 1e-12;

/// Smallest sample size for which `log(log(n^{1/3}))` is positive.
pub const MIN_THRESHOLD_ROWS: usize = 21;

/// Decorrelated design and response, ready for forward selection.
#[derive(Debug, Clone)]
pub struct TransformedProblem {
    pub xdec: DMatrix<f64>,
    pub ydec: DVector<f64>,
    pub psi_op_norm_sq: f64,
    pub lambda: f64,
    pub identity_transform: bool,
}

impl TransformedProblem {
    pub fn new(
        xdec: DMatrix<f64>,
        ydec: DVector<f64>,
        psi_op_norm_sq: f64,
        lambda: f64,
        identity_transform: bool,
    ) -> Result<Self> {
        if xdec.nrows() != ydec.len() {
            return Err(ScreenError::Shape(format!(
                "design has {} rows, response has {}",
                xdec.nrows(),
                ydec.len()
            )));
        }
        if psi_op_norm_sq.is_nan() || psi_op_norm_sq <= 0.0 {
            return Err(ScreenError::param("psi_op_norm_sq", "must be positive"));
        }
        Ok(TransformedProblem {
            xdec,
            ydec,
            psi_op_norm_sq,
            lambda,
            identity_transform,
        })
    }

    /// Builds `Ψ` from `x` and applies it to `x` and `Y*`.
    pub fn decorrelate(x: &DMatrix<f64>, response: &TransformedResponse, lambda: f64) -> Result<Self> {
        let op = build_decorrelator(x, lambda)?;
        let (xdec, ydec) = apply_decorrelator(&op, x, &response.ystar)?;
        Self::new(xdec, ydec, op.psi_op_norm_sq(), lambda, response.identity_transform)
    }

    pub fn n(&self) -> usize {
        self.xdec.nrows()
    }

    pub fn p(&self) -> usize {
        self.xdec.ncols()
    }

    pub fn max_steps(&self) -> usize {
        self.n().min(self.p())
    }
}

/// Selection order with the residual sum of squares after every step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningPath {
    pub order: Vec<usize>,
    /// `rss_per_step[0]` is `‖Y‖²`; entry `k` is the RSS after `k` selections.
    pub rss_per_step: Vec<f64>,
    /// `decrements[k-1] = rss_per_step[k-1] − rss_per_step[k]`, clipped at zero.
    pub decrements: Vec<f64>,
}

impl ScreeningPath {
    pub(crate) fn start(rss0: f64) -> Self {
        ScreeningPath {
            order: Vec::new(),
            rss_per_step: vec![rss0],
            decrements: Vec::new(),
        }
    }

    pub(crate) fn push(&mut self, index: usize, rss: f64) {
        let prev = *self.rss_per_step.last().expect("path starts with rss0");
        let rss = rss.min(prev);
        self.order.push(index);
        self.rss_per_step.push(rss);
        self.decrements.push((prev - rss).max(0.0));
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }
}

/// Lazily extends a DF path one selection at a time.
pub struct PathWalker<'a> {
    engine: IncrementalForward<'a>,
    path: ScreeningPath,
    budget: usize,
    floor: f64,
    exhausted: bool,
}

impl<'a> PathWalker<'a> {
    pub fn new(xdec: &'a DMatrix<f64>, ydec: &DVector<f64>, budget: usize) -> Result<Self> {
        let engine = IncrementalForward::new(xdec, ydec)?;
        let rss0 = engine.state().rss();
        Ok(PathWalker {
            engine,
            path: ScreeningPath::start(rss0),
            budget,
            floor: RESIDUAL_FLOOR * rss0,
            exhausted: false,
        })
    }

    /// Takes one step; `None` once the budget is spent, the residual is
    /// numerically zero, or every remaining candidate is degenerate.
    pub fn advance(&mut self) -> Result<Option<usize>> {
        if self.exhausted || self.path.len() >= self.budget {
            self.exhausted = true;
            return Ok(None);
        }
        if self.engine.state().rss() <= self.floor {
            self.exhausted = true;
            return Ok(None);
        }
        let Some(best) = best_candidate(&self.engine.candidates()) else {
            self.exhausted = true;
            return Ok(None);
        };
        self.engine.extend(best.index)?;
        self.path.push(best.index, self.engine.state().rss());
        Ok(Some(best.index))
    }

    pub fn path(&self) -> &ScreeningPath {
        &self.path
    }

    pub fn into_path(self) -> ScreeningPath {
        self.path
    }
}

pub(crate) fn check_budget(max_steps: usize, n: usize, p: usize) -> Result<()> {
    if max_steps == 0 || max_steps > n.min(p) {
        return Err(ScreenError::param(
            "max_steps",
            format!("must be in 1..={} (min(n, p)), got {max_steps}", n.min(p)),
        ));
    }
    Ok(())
}

/// Greedy path on the decorrelated problem: each step adds the column with the
/// smallest DRSS (ties to the smaller index).
pub fn df_path(problem: &TransformedProblem, max_steps: usize) -> Result<ScreeningPath> {
    check_budget(max_steps, problem.n(), problem.p())?;
    let mut walker = PathWalker::new(&problem.xdec, &problem.ydec, max_steps)?;
    while walker.advance()?.is_some() {}
    Ok(walker.into_path())
}

/// `c_{n,k} = c·k·‖Ψ‖₂²·log(log(n^{1/3}))·log(p)·m`, with `m = 1` when
/// `Y* = Y` and `m = √log p` otherwise.
pub fn tdf_threshold(
    c: f64,
    k: usize,
    psi_op_norm_sq: f64,
    n: usize,
    p: usize,
    identity_transform: bool,
) -> Result<f64> {
    Ok(c * k as f64 * threshold_unit(psi_op_norm_sq, n, p, identity_transform)?)
}

/// The threshold for `c = 1, k = 1`.
pub(crate) fn threshold_unit(psi_op_norm_sq: f64, n: usize, p: usize, identity_transform: bool) -> Result<f64> {
    if n < MIN_THRESHOLD_ROWS {
        return Err(ScreenError::param(
            "n",
            format!("threshold needs n >= {MIN_THRESHOLD_ROWS} so that log(log(n^(1/3))) > 0, got {n}"),
        ));
    }
    if p == 0 {
        return Err(ScreenError::param("p", "threshold needs at least one column"));
    }
    if psi_op_norm_sq.is_nan() || psi_op_norm_sq <= 0.0 {
        return Err(ScreenError::param("psi_op_norm_sq", "must be positive"));
    }
    let log_p = (p as f64).ln();
    let loglog = (n as f64).cbrt().ln().ln();
    let m = if identity_transform { 1.0 } else { log_p.sqrt() };
    Ok(psi_op_norm_sq * loglog * log_p * m)
}

/// Verdict of the thresholded search with its audit trail.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    pub selected: Vec<usize>,
    /// Step `k` at which `ℓ_k ≤ c_{n,k}` fired; `None` if the path ended first.
    pub stop_step: Option<usize>,
    pub thresholds: Vec<f64>,
    pub path: ScreeningPath,
    pub lambda: f64,
    pub c: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cv: Option<CvReport>,
}

/// Applies the stopping rule to an already computed path prefix.
///
/// Returns `None` when the path is still open and the rule has not fired on
/// the available steps, so the caller must extend the path.
fn stop_on_path(path: &ScreeningPath, c: f64, unit: f64, complete: bool) -> Option<(Option<usize>, Vec<f64>)> {
    let mut thresholds = Vec::with_capacity(path.len());
    for (i, &ell) in path.decrements.iter().enumerate() {
        let k = i + 1;
        let threshold = c * k as f64 * unit;
        thresholds.push(threshold);
        if ell <= threshold {
            return Some((Some(k), thresholds));
        }
    }
    complete.then_some((None, thresholds))
}

fn finish(path: ScreeningPath, stop_step: Option<usize>, thresholds: Vec<f64>, lambda: f64, c: f64) -> SelectionResult {
    let selected = match stop_step {
        Some(k) => path.order[..k - 1].to_vec(),
        None => path.order.clone(),
    };
    SelectionResult {
        selected,
        stop_step,
        thresholds,
        path,
        lambda,
        c,
        cv: None,
    }
}

/// Runs the DF loop and stops at the first step whose decrement does not
/// exceed its threshold; that step's index stays in the audit path only.
pub fn tdf_select(problem: &TransformedProblem, c: f64, max_steps: usize) -> Result<SelectionResult> {
    if !c.is_finite() || c <= 0.0 {
        return Err(ScreenError::param("c", format!("must be positive and finite, got {c}")));
    }
    check_budget(max_steps, problem.n(), problem.p())?;
    let unit = threshold_unit(
        problem.psi_op_norm_sq,
        problem.n(),
        problem.p(),
        problem.identity_transform,
    )?;

    let mut walker = PathWalker::new(&problem.xdec, &problem.ydec, max_steps)?;
    loop {
        let stepped = walker.advance()?.is_some();
        let path = walker.path();
        if stepped {
            let k = path.len();
            let ell = path.decrements[k - 1];
            if ell <= c * k as f64 * unit {
                let (stop, thresholds) = stop_on_path(path, c, unit, true).expect("rule fired");
                return Ok(finish(walker.into_path(), stop, thresholds, problem.lambda, c));
            }
        } else {
            let (stop, thresholds) = stop_on_path(path, c, unit, true).expect("complete path");
            return Ok(finish(walker.into_path(), stop, thresholds, problem.lambda, c));
        }
    }
}

/// Applies the T-DF rule for many values of `c` on one shared path, which is
/// extended only as far as the smallest `c` requires.
pub fn tdf_select_many(problem: &TransformedProblem, cs: &[f64], max_steps: usize) -> Result<Vec<SelectionResult>> {
    if cs.is_empty() {
        return Ok(Vec::new());
    }
    if let Some(bad) = cs.iter().find(|c| !c.is_finite() || **c <= 0.0) {
        return Err(ScreenError::param(
            "c",
            format!("must be positive and finite, got {bad}"),
        ));
    }
    check_budget(max_steps, problem.n(), problem.p())?;
    let unit = threshold_unit(
        problem.psi_op_norm_sq,
        problem.n(),
        problem.p(),
        problem.identity_transform,
    )?;
    let c_min = cs.iter().copied().fold(f64::INFINITY, f64::min);

    let mut walker = PathWalker::new(&problem.xdec, &problem.ydec, max_steps)?;
    while walker.advance()?.is_some() {
        let path = walker.path();
        let k = path.len();
        if path.decrements[k - 1] <= c_min * k as f64 * unit {
            break;
        }
    }
    let path = walker.into_path();
    Ok(cs
        .iter()
        .map(|&c| {
            // Every c >= c_min fires no later than c_min, so the prefix is enough.
            let (stop, thresholds) = stop_on_path(&path, c, unit, true).expect("complete prefix");
            finish(path.clone(), stop, thresholds, problem.lambda, c)
        })
        .collect())
}

/// Options for the end-to-end [`screen`] pipeline.
#[derive(Debug, Clone)]
pub struct ScreenOptions {
    pub link: LinkSpec,
    pub lambda: Option<f64>,
    pub c: Option<f64>,
    pub standardize: bool,
    pub cv: CvOptions,
    /// Defaults to `min(n, p)`.
    pub max_steps: Option<usize>,
}

impl ScreenOptions {
    pub fn new(link: LinkSpec) -> Self {
        ScreenOptions {
            link,
            lambda: None,
            c: None,
            standardize: false,
            cv: CvOptions::default(),
            max_steps: None,
        }
    }
}

/// Centers each column and scales it to unit sample variance. Constant
/// columns become zero.
pub fn standardize_columns(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let mut out = x.clone();
    if n < 2 {
        return out;
    }
    for (j, mut col) in out.column_iter_mut().enumerate() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
        let var = col.norm_squared() / (n - 1) as f64;
        if var > 0.0 {
            col /= var.sqrt();
        } else {
            log::warn!("column {j} is constant; it is zeroed by standardization");
            col.fill(0.0);
        }
    }
    out
}

/// Full T-DF pipeline: optional standardization, response transform, default
/// `λ`, decorrelation, cross-validated `c` and the thresholded search.
pub fn screen(x: &DMatrix<f64>, y: &DVector<f64>, options: &ScreenOptions) -> Result<SelectionResult> {
    let (n, p) = x.shape();
    if y.len() != n {
        return Err(ScreenError::Shape(format!("X has {n} rows, y has {}", y.len())));
    }
    let standardized;
    let x = if options.standardize {
        standardized = standardize_columns(x);
        &standardized
    } else {
        x
    };
    let response = transform_response(y, options.link)?;
    let lambda = match options.lambda {
        Some(l) => l,
        None => default_lambda(n, p)?,
    };
    let problem = TransformedProblem::decorrelate(x, &response, lambda)?;
    let max_steps = options.max_steps.unwrap_or_else(|| problem.max_steps());

    let (c, report) = match options.c {
        Some(c) => (c, None),
        None => {
            let mut cv = options.cv.clone();
            cv.lambda = options.lambda;
            let report = cv_select_c(x, y, options.link, &cv)?;
            (report.chosen_c, Some(report))
        }
    };
    log::debug!("screen: n={n} p={p} lambda={lambda} c={c}");
    let mut result = tdf_select(&problem, c, max_steps)?;
    result.cv = report;
    Ok(result)
}
