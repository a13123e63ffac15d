//! Comparison screeners: SIS, ridge-HOLP, weighted ridge-HOLP, classical
//! forward regression, and EBIC model choice along a ranking.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScreenError};
use crate::linalg::{brute_force_drss, build_decorrelator, select_columns, DEGENERACY_TOL};
use crate::screening::{check_budget, ScreeningPath, RESIDUAL_FLOOR};

const STANDARDIZED_TOL: f64 = 1e-6;

/// Per-column scores with the columns sorted by descending score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedScreen {
    pub scores: Vec<f64>,
    pub order: Vec<usize>,
}

impl RankedScreen {
    pub fn from_scores(scores: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        // stable sort keeps smaller indices first among equal scores
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        RankedScreen { scores, order }
    }

    pub fn top(&self, k: usize) -> Vec<usize> {
        self.order.iter().take(k).copied().collect()
    }
}

fn check_rows(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<()> {
    if x.nrows() != y.len() {
        return Err(ScreenError::Shape(format!(
            "X has {} rows, y* has {}",
            x.nrows(),
            y.len()
        )));
    }
    Ok(())
}

/// Rejects the first column whose mean is not ~0 or sample variance not ~1.
pub fn check_standardized(x: &DMatrix<f64>) -> Result<()> {
    let n = x.nrows();
    if n < 2 {
        return Err(ScreenError::Shape("standardization needs at least 2 rows".into()));
    }
    for (j, col) in x.column_iter().enumerate() {
        let mean = col.mean();
        let variance = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        if mean.abs() > STANDARDIZED_TOL || (variance - 1.0).abs() > STANDARDIZED_TOL {
            return Err(ScreenError::NotStandardized {
                column: j,
                mean,
                variance,
            });
        }
    }
    Ok(())
}

/// Marginal screening: `|Xᵀ Y*|` on standardized columns.
pub fn sis_rank(x: &DMatrix<f64>, ystar: &DVector<f64>) -> Result<RankedScreen> {
    check_rows(x, ystar)?;
    check_standardized(x)?;
    let scores = x.tr_mul(ystar).iter().map(|v| v.abs()).collect();
    Ok(RankedScreen::from_scores(scores))
}

/// Ridge-HOLP: `|Xᵀ Ψ² Y*|` with `Ψ² = (XXᵀ/p + λI)^{-1}`.
pub fn holp_rank(x: &DMatrix<f64>, ystar: &DVector<f64>, lambda: f64) -> Result<RankedScreen> {
    check_rows(x, ystar)?;
    let op = build_decorrelator(x, lambda)?;
    let z = op.apply_psi_squared(ystar);
    let scores = x.tr_mul(&z).iter().map(|v| v.abs()).collect();
    Ok(RankedScreen::from_scores(scores))
}

/// Weighted ridge-HOLP: HOLP scores divided by `(X_jᵀ Ψ² X_j)^{1/2}`. Its top
/// column is the first pick of the DF search.
pub fn wrh_rank(x: &DMatrix<f64>, ystar: &DVector<f64>, lambda: f64) -> Result<RankedScreen> {
    check_rows(x, ystar)?;
    let op = build_decorrelator(x, lambda)?;
    let z = op.apply_psi_squared(ystar);
    let psi_sq_x = op.apply_psi_squared_mat(x);
    let mut scores = Vec::with_capacity(x.ncols());
    for j in 0..x.ncols() {
        let xj = x.column(j);
        let weight = xj.dot(&psi_sq_x.column(j));
        if weight.is_nan() || weight <= 0.0 {
            return Err(ScreenError::Degenerate {
                column: j,
                reason: "zero column has no weighted HOLP score".into(),
            });
        }
        scores.push(xj.dot(&z).abs() / weight.sqrt());
    }
    Ok(RankedScreen::from_scores(scores))
}

/// Classical forward regression on `(X, Y*)`.
///
/// Candidates are residualized against the selected columns through the
/// normal equations of the current support, so this path is computed
/// independently of the orthonormal-basis engine used by the DF search.
pub fn fr_path(x: &DMatrix<f64>, ystar: &DVector<f64>, max_steps: usize) -> Result<ScreeningPath> {
    check_rows(x, ystar)?;
    let (n, p) = x.shape();
    check_budget(max_steps, n, p)?;

    let rss0 = ystar.norm_squared();
    let floor = RESIDUAL_FLOOR * rss0;
    let col_norm_sq: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    let mut path = ScreeningPath::start(rss0);
    let mut selected: Vec<usize> = Vec::new();
    let mut residual = ystar.clone();
    let mut rss = rss0;

    while selected.len() < max_steps && rss > floor {
        // coefficients of every column regressed on the current support
        let resid_cols = if selected.is_empty() {
            x.clone()
        } else {
            let xs = select_columns(x, &selected);
            let gram = xs.transpose() * &xs;
            let chol = gram
                .cholesky()
                .ok_or_else(|| ScreenError::Numerical("selected Gram matrix is not positive definite".into()))?;
            let coef = chol.solve(&xs.tr_mul(x));
            x - &xs * coef
        };

        let mut best: Option<(f64, usize)> = None;
        for j in (0..p).filter(|j| !selected.contains(j)) {
            let u = resid_cols.column(j);
            let u_norm_sq = u.norm_squared();
            if u_norm_sq <= DEGENERACY_TOL * col_norm_sq[j] || u_norm_sq == 0.0 {
                continue;
            }
            let proj = u.dot(&residual);
            let drss = (rss - proj * proj / u_norm_sq).max(0.0);
            if best.is_none_or(|(b, _)| drss < b) {
                best = Some((drss, j));
            }
        }
        let Some((_, j)) = best else { break };
        selected.push(j);

        let xs = select_columns(x, &selected);
        let beta = (xs.transpose() * &xs)
            .cholesky()
            .ok_or_else(|| ScreenError::Numerical("selected Gram matrix is not positive definite".into()))?
            .solve(&xs.tr_mul(ystar));
        residual = ystar - &xs * beta;
        rss = residual.norm_squared().min(rss);
        path.push(j, rss);
    }
    Ok(path)
}

/// EBIC along a nested ranking.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EbicChoice {
    pub selected: Vec<usize>,
    /// `scores[k]` is the EBIC of the first `k` entries.
    pub scores: Vec<f64>,
}

/// `n·log(RSS/n) + k·(log n + 2γ·log p)`.
pub fn ebic_score(rss: f64, n: usize, p: usize, k: usize, gamma: f64) -> f64 {
    let nf = n as f64;
    nf * (rss / nf).ln() + k as f64 * (nf.ln() + 2.0 * gamma * (p as f64).ln())
}

/// Picks the prefix of `order` minimizing EBIC, over sizes `0..=max_size`
/// (shorter if `order` is shorter). Ties go to the smaller model.
pub fn ebic_select(
    order: &[usize],
    x: &DMatrix<f64>,
    ystar: &DVector<f64>,
    gamma: f64,
    max_size: usize,
) -> Result<EbicChoice> {
    check_rows(x, ystar)?;
    let (n, p) = x.shape();
    if !(0.0..=1.0).contains(&gamma) {
        return Err(ScreenError::param("gamma", format!("must lie in [0, 1], got {gamma}")));
    }
    if n < 3 || max_size == 0 || max_size > (n - 2).min(p) {
        return Err(ScreenError::param(
            "max_size",
            format!(
                "must be in 1..={} (min(n-2, p)), got {max_size}",
                n.saturating_sub(2).min(p)
            ),
        ));
    }
    if let Some(&bad) = order.iter().find(|&&j| j >= p) {
        return Err(ScreenError::param("order", format!("column {bad} out of range")));
    }
    let floor = (1e-12 * ystar.norm_squared()).max(f64::MIN_POSITIVE);
    let kmax = max_size.min(order.len());
    let scores: Vec<f64> = (0..=kmax)
        .map(|k| {
            let rss = brute_force_drss(&select_columns(x, &order[..k]), ystar).max(floor);
            ebic_score(rss, n, p, k, gamma)
        })
        .collect();
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = k;
        }
    }
    Ok(EbicChoice {
        selected: order[..best].to_vec(),
        scores,
    })
}

/// Conventional screening size `⌈n / log n⌉`.
pub fn default_top_k(n: usize) -> usize {
    if n < 3 {
        return n.max(1);
    }
    (n as f64 / (n as f64).ln()).ceil() as usize
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{apply_decorrelator, best_candidate, ForwardState};
    use crate::screening::{df_path, TransformedProblem};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    fn standardized(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        crate::screening::standardize_columns(&gaussian(n, p, seed))
    }

    #[test]
    fn sis_orthogonal_design() {
        let a = 1.0 / (4.0f64 / 3.0).sqrt();
        let x = DMatrix::from_column_slice(4, 2, &[a, -a, a, -a, a, a, -a, -a]);
        let y = x.column(0).into_owned();
        let r = sis_rank(&x, &y).unwrap();
        assert!((r.scores[0] - 3.0).abs() < 1e-12);
        assert!(r.scores[1].abs() < 1e-12);
        assert_eq!(r.order, vec![0, 1]);
    }

    #[test]
    fn sis_zero_response_keeps_identity_order() {
        let x = standardized(30, 6, 1);
        let r = sis_rank(&x, &DVector::zeros(30)).unwrap();
        assert!(r.scores.iter().all(|&s| s == 0.0));
        assert_eq!(r.order, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn sis_matches_per_column_dot_products() {
        let x = standardized(50, 200, 2);
        let y = DVector::from_fn(50, |i, _| (i as f64 * 0.37).sin());
        let r = sis_rank(&x, &y).unwrap();
        for j in 0..200 {
            let dot: f64 = (0..50).map(|i| x[(i, j)] * y[i]).sum();
            assert!((r.scores[j] - dot.abs()).abs() < 1e-10);
        }
        assert!(r.order.windows(2).all(|w| r.scores[w[0]] >= r.scores[w[1]]));
    }

    #[test]
    fn sis_rejects_unstandardized_column() {
        let mut x = standardized(20, 4, 3);
        for i in 0..20 {
            x[(i, 2)] *= 2.0;
        }
        match sis_rank(&x, &DVector::zeros(20)) {
            Err(ScreenError::NotStandardized { column, .. }) => assert_eq!(column, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn holp_on_orthogonal_rows_halves_sis_scores() {
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0]);
        let y = DVector::from_vec(vec![0.3, -1.2]);
        let h = holp_rank(&x, &y, 1.0).unwrap();
        let raw: Vec<f64> = x.tr_mul(&y).iter().map(|v| v.abs() / 2.0).collect();
        for (a, b) in h.scores.iter().zip(&raw) {
            assert!((a - b).abs() < 1e-12);
        }
        let w = wrh_rank(&x, &y, 1.0).unwrap();
        assert_eq!(w.order, h.order);
    }

    #[test]
    fn holp_matches_linear_solve() {
        let x = gaussian(20, 60, 4);
        let y = DVector::from_fn(20, |i, _| i as f64 - 10.0);
        let lambda = 0.4;
        let h = holp_rank(&x, &y, lambda).unwrap();
        let a = &x * x.transpose() / 60.0 + DMatrix::<f64>::identity(20, 20) * lambda;
        let z = a.lu().solve(&y).unwrap();
        let direct = x.tr_mul(&z);
        for j in 0..60 {
            assert!((h.scores[j] - direct[j].abs()).abs() < 1e-8);
        }
        assert!(holp_rank(&x, &y, 0.0).is_err());
        let zero = holp_rank(&x, &DVector::zeros(20), 1.0).unwrap();
        assert!(zero.scores.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn wrh_top_equals_first_df_pick() {
        for seed in 0..20 {
            let x = gaussian(25, 60, 100 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(200 + seed);
            let y = DVector::from_fn(25, |i, _| {
                x[(i, 3)] + Distribution::<f64>::sample(&StandardNormal, &mut rng)
            });
            let lambda = 0.8;
            let w = wrh_rank(&x, &y, lambda).unwrap();
            let op = build_decorrelator(&x, lambda).unwrap();
            let (xd, yd) = apply_decorrelator(&op, &x, &y).unwrap();
            let first = best_candidate(&ForwardState::init(&yd).drss_candidates(&xd))
                .unwrap()
                .index;
            assert_eq!(w.order[0], first, "seed {seed}");
        }
    }

    #[test]
    fn wrh_rejects_zero_column() {
        let mut x = gaussian(10, 5, 5);
        x.column_mut(3).fill(0.0);
        assert!(matches!(
            wrh_rank(&x, &DVector::from_element(10, 1.0), 1.0),
            Err(ScreenError::Degenerate { column: 3, .. })
        ));
    }

    #[test]
    fn fr_examples() {
        let x = DMatrix::<f64>::identity(3, 3);
        let path = fr_path(&x, &DVector::from_vec(vec![0.0, 2.0, 0.0]), 3).unwrap();
        assert_eq!(path.order, vec![1]);
        assert!(fr_path(&x, &DVector::zeros(3), 3).unwrap().is_empty());
    }

    #[test]
    fn fr_equals_df_under_identity_operator() {
        for seed in 0..20 {
            let x = gaussian(30, 50, 300 + seed);
            let mut rng = ChaCha8Rng::seed_from_u64(400 + seed);
            let y = DVector::from_fn(30, |i, _| {
                2.0 * x[(i, 0)] - x[(i, 7)] + Distribution::<f64>::sample(&StandardNormal, &mut rng)
            });
            let fr = fr_path(&x, &y, 15).unwrap();
            let problem = TransformedProblem::new(x.clone(), y.clone(), 1.0, 1.0, true).unwrap();
            let df = df_path(&problem, 15).unwrap();
            assert_eq!(fr.order, df.order, "seed {seed}");
            for (a, b) in fr.rss_per_step.iter().zip(&df.rss_per_step) {
                assert!((a - b).abs() < 1e-8 * (1.0 + b));
            }
        }
    }

    #[test]
    fn ebic_noiseless_two_column_fit() {
        let x = gaussian(40, 30, 6);
        let y = DVector::from_fn(40, |i, _| 1.5 * x[(i, 4)] - 2.0 * x[(i, 9)]);
        let order = [4usize, 9, 0, 1, 2, 3];
        let choice = ebic_select(&order, &x, &y, 1.0, 6).unwrap();
        assert_eq!(choice.selected, vec![4, 9]);
    }

    #[test]
    fn ebic_gamma_zero_is_bic() {
        let x = gaussian(40, 30, 7);
        let y = DVector::from_fn(40, |i, _| x[(i, 0)] + 0.5 * (i as f64).cos());
        let order: Vec<usize> = (0..8).collect();
        let choice = ebic_select(&order, &x, &y, 0.0, 8).unwrap();
        for (k, &s) in choice.scores.iter().enumerate() {
            let rss = brute_force_drss(&select_columns(&x, &order[..k]), &y);
            let bic = 40.0 * (rss / 40.0).ln() + k as f64 * 40f64.ln();
            assert!((s - bic).abs() < 1e-9);
        }
        assert!(order.starts_with(&choice.selected));
    }

    #[test]
    fn ebic_parameter_errors() {
        let x = gaussian(10, 20, 8);
        let y = DVector::from_element(10, 1.0);
        assert!(ebic_select(&[0, 1], &x, &y, 1.5, 2).is_err());
        assert!(ebic_select(&[0, 1], &x, &y, 1.0, 9).is_err());
        assert!(ebic_select(&[0, 1], &x, &y, 1.0, 8).is_ok());
    }

    #[test]
    fn top_k_default() {
        assert_eq!(default_top_k(200), 38);
        assert_eq!(default_top_k(100), 22);
    }
}
