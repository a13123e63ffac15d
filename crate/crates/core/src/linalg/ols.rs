use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ScreenError};

const SVD_EPS: f64 = 1e-10;

/// Least-squares fit `y ≈ b₀ + X b` with a minimum-norm solution when the
/// columns are collinear.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub intercept: f64,
    pub coefficients: DVector<f64>,
}

impl LinearFit {
    pub fn predict(&self, x: &DMatrix<f64>) -> DVector<f64> {
        let mut eta = if self.coefficients.is_empty() {
            DVector::zeros(x.nrows())
        } else {
            x * &self.coefficients
        };
        eta.add_scalar_mut(self.intercept);
        eta
    }
}

pub fn fit_with_intercept(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<LinearFit> {
    let (n, k) = x.shape();
    if y.len() != n {
        return Err(ScreenError::Shape(format!("X has {n} rows, y has {}", y.len())));
    }
    if n == 0 {
        return Err(ScreenError::Shape("empty training set".into()));
    }
    if k == 0 {
        return Ok(LinearFit {
            intercept: y.mean(),
            coefficients: DVector::zeros(0),
        });
    }
    // Center, solve the slopes, then recover the intercept.
    let means: Vec<f64> = x.column_iter().map(|c| c.mean()).collect();
    let ymean = y.mean();
    let centered = DMatrix::from_fn(n, k, |i, j| x[(i, j)] - means[j]);
    let yc = y.add_scalar(-ymean);
    let svd = centered.svd(true, true);
    let smax = svd.singular_values.max();
    let coefficients = if smax == 0.0 {
        DVector::zeros(k)
    } else {
        svd.solve(&yc, SVD_EPS * smax)
            .map_err(|e| ScreenError::Numerical(format!("least squares solve failed: {e}")))?
    };
    let intercept = ymean - means.iter().zip(coefficients.iter()).map(|(m, b)| m * b).sum::<f64>();
    Ok(LinearFit {
        intercept,
        coefficients,
    })
}

/// Columns `idx` of `x`, in the given order.
pub fn select_columns(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(x.nrows(), idx.len(), |i, k| x[(i, idx[k])])
}

/// Rows `idx` of `x`, in the given order.
pub fn select_rows(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), x.ncols(), |k, j| x[(idx[k], j)])
}

pub fn select_entries(v: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
    DVector::from_iterator(idx.len(), idx.iter().map(|&i| v[i]))
}
