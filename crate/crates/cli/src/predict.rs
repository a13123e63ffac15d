//! Split-sample prediction error with cross-fitting between the two halves.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use dfscreen::linalg::{fit_with_intercept, select_columns, select_entries, select_rows, LinearFit};
use dfscreen::screening::MIN_THRESHOLD_ROWS;
use dfscreen::simgen::{replication_seed, Summary};
use dfscreen::{
    inverse_link, run_method, transform_response, DMatrix, DVector, LinkSpec, Method, MethodSettings, ScreenError,
};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Per-repeat results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitOutcome {
    /// Cross-fitted mean squared prediction error of each repeat.
    pub errors: Vec<f64>,
    /// Same protocol with an intercept-only model.
    pub baseline_errors: Vec<f64>,
    /// Size of every selected model (two per repeat).
    pub sizes: Vec<usize>,
}

struct HalfFit {
    support: Vec<usize>,
    fit: LinearFit,
    baseline: LinearFit,
}

fn fit_half(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    link: LinkSpec,
    method: Method,
    settings: &MethodSettings,
    seed: u64,
) -> dfscreen::Result<HalfFit> {
    let support = run_method(method, x, y, link, settings, seed)?;
    let ystar = transform_response(y, link)?.ystar;
    let fit = fit_with_intercept(&select_columns(x, &support), &ystar)?;
    let baseline = fit_with_intercept(&DMatrix::zeros(x.nrows(), 0), &ystar)?;
    Ok(HalfFit { support, fit, baseline })
}

fn squared_error(fit: &LinearFit, x: &DMatrix<f64>, y: &DVector<f64>, link: LinkSpec) -> f64 {
    fit.predict(x)
        .iter()
        .zip(y.iter())
        .map(|(&eta, &yi)| (yi - inverse_link(eta, link)).powi(2))
        .sum()
}

/// Repeatedly splits the rows in half, screens and fits on each half, and
/// scores each half with the other half's model.
pub fn predict_split(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    link: LinkSpec,
    method: Method,
    settings: &MethodSettings,
    seed: u64,
    repeats: usize,
) -> dfscreen::Result<SplitOutcome> {
    let n = x.nrows();
    if y.len() != n {
        return Err(ScreenError::Shape(format!("X has {n} rows, y has {}", y.len())));
    }
    if n < 2 * MIN_THRESHOLD_ROWS {
        return Err(ScreenError::Parameter {
            name: "n",
            reason: format!("split-sample evaluation needs n >= {}, got {n}", 2 * MIN_THRESHOLD_ROWS),
        });
    }
    if repeats == 0 {
        return Err(ScreenError::Parameter {
            name: "repeats",
            reason: "must be positive".into(),
        });
    }
    let per_repeat: Vec<dfscreen::Result<(f64, f64, [usize; 2])>> = (0..repeats)
        .into_par_iter()
        .map(|r| {
            let seed = replication_seed(seed, r);
            let mut rows: Vec<usize> = (0..n).collect();
            rows.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (a, b) = rows.split_at(n / 2);
            let halves = [a, b];
            let parts: Vec<(DMatrix<f64>, DVector<f64>)> = halves
                .iter()
                .map(|h| (select_rows(x, h), select_entries(y, h)))
                .collect();
            let fits = parts
                .iter()
                .map(|(xh, yh)| fit_half(xh, yh, link, method, settings, seed))
                .collect::<dfscreen::Result<Vec<_>>>()?;
            let (mut err, mut base) = (0.0, 0.0);
            for k in 0..2 {
                let other = &fits[1 - k];
                let (xh, yh) = &parts[k];
                err += squared_error(&other.fit, &select_columns(xh, &other.support), yh, link);
                base += squared_error(&other.baseline, &DMatrix::zeros(xh.nrows(), 0), yh, link);
            }
            Ok((
                err / n as f64,
                base / n as f64,
                [fits[0].support.len(), fits[1].support.len()],
            ))
        })
        .collect();

    let mut out = SplitOutcome {
        errors: Vec::with_capacity(repeats),
        baseline_errors: Vec::with_capacity(repeats),
        sizes: Vec::with_capacity(2 * repeats),
    };
    for (r, res) in per_repeat.into_iter().enumerate() {
        let (e, b, sizes) = res.map_err(|e| ScreenError::Replication {
            replication: r,
            seed: replication_seed(seed, r),
            source: Box::new(e),
        })?;
        out.errors.push(e);
        out.baseline_errors.push(b);
        out.sizes.extend(sizes);
    }
    Ok(out)
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSummary {
    pub repeats: usize,
    pub error: Summary,
    pub quartiles: [f64; 5],
    pub baseline_error: Summary,
    /// Share of repeats in which the screened model beat the intercept-only one.
    pub beats_baseline: f64,
    pub size_counts: BTreeMap<usize, usize>,
}

impl SplitSummary {
    pub fn of(outcome: &SplitOutcome) -> Self {
        let mut sorted = outcome.errors.clone();
        sorted.sort_by(f64::total_cmp);
        let quartiles = [0.0, 0.25, 0.5, 0.75, 1.0].map(|q| quantile(&sorted, q));
        let wins = outcome
            .errors
            .iter()
            .zip(&outcome.baseline_errors)
            .filter(|(e, b)| e < b)
            .count();
        let mut size_counts = BTreeMap::new();
        for &s in &outcome.sizes {
            *size_counts.entry(s).or_insert(0) += 1;
        }
        SplitSummary {
            repeats: outcome.errors.len(),
            error: Summary::of(&outcome.errors),
            quartiles,
            baseline_error: Summary::of(&outcome.baseline_errors),
            beats_baseline: wins as f64 / outcome.errors.len() as f64,
            size_counts,
        }
    }

    /// Two-column `statistic,value` CSV.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("statistic,value\n");
        let mut row = |k: &str, v: String| {
            let _ = writeln!(out, "{k},{v}");
        };
        row("repeats", self.repeats.to_string());
        row("error_mean", self.error.mean.to_string());
        row("error_sd", self.error.sd.to_string());
        for (name, q) in ["error_min", "error_q1", "error_median", "error_q3", "error_max"]
            .iter()
            .zip(self.quartiles)
        {
            row(name, q.to_string());
        }
        row("baseline_error_mean", self.baseline_error.mean.to_string());
        row("beats_baseline", self.beats_baseline.to_string());
        for (size, count) in &self.size_counts {
            row(&format!("model_size_{size}"), count.to_string());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quartiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&v, 0.5), 3.0);
        assert_eq!(quantile(&v, 0.25), 2.0);
        assert_eq!(quantile(&[1.0, 2.0], 0.5), 1.5);
        assert_eq!(quantile(&[7.0], 0.75), 7.0);
    }

    #[test]
    fn too_few_rows() {
        let x = DMatrix::zeros(41, 3);
        let y = DVector::zeros(41);
        let e = predict_split(
            &x,
            &y,
            LinkSpec::Identity,
            Method::Tdf,
            &MethodSettings::default(),
            0,
            1,
        )
        .unwrap_err();
        assert!(e.is_contract_violation());
    }

    #[test]
    fn summary_csv_layout() {
        let s = SplitSummary::of(&SplitOutcome {
            errors: vec![1.0, 3.0],
            baseline_errors: vec![2.0, 2.0],
            sizes: vec![2, 2, 3, 2],
        });
        let csv = s.to_csv();
        assert!(csv.starts_with("statistic,value\nrepeats,2\nerror_mean,2\n"));
        assert!(csv.contains("beats_baseline,0.5\n"));
        assert!(csv.contains("model_size_2,3\nmodel_size_3,1\n"));
    }
}
