use nalgebra::{DMatrix, DVector};

/// Relative singular-value cutoff used to decide numerical rank.
const RANK_TOL: f64 = 1e-10;

/// `‖y − P(cols) y‖²` through a rank-revealing SVD, so rank-deficient column
/// sets are projected onto their true span.
pub fn brute_force_drss(cols: &DMatrix<f64>, y: &DVector<f64>) -> f64 {
    assert_eq!(cols.nrows(), y.len(), "row mismatch in brute_force_drss");
    if cols.ncols() == 0 {
        return y.norm_squared();
    }
    let svd = cols.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let smax = svd.singular_values.max();
    if smax == 0.0 {
        return y.norm_squared();
    }
    let mut fitted = DVector::zeros(y.len());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if s > RANK_TOL * smax {
            let uk = u.column(k);
            fitted.axpy(uk.dot(y), &uk, 1.0);
        }
    }
    (y - fitted).norm_squared()
}
