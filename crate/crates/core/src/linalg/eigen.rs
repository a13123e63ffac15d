use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Result, ScreenError};

const SYMMETRY_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 10_000;

/// Spectrum of a real symmetric matrix, eigenvalues in descending order.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub eigenvalues: DVector<f64>,
    /// Orthogonal matrix whose columns pair with `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
}

impl SymEig {
    /// `Q · diag(f(e)) · Qᵀ` for an arbitrary spectral map `f`.
    pub fn spectral_map(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (mut col, &e) in scaled.column_iter_mut().zip(self.eigenvalues.iter()) {
            col *= f(e);
        }
        let mut out = &scaled * q.transpose();
        symmetrize(&mut out);
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.spectral_map(|e| e)
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Largest absolute entry of `m - mᵀ`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in (j + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Overwrites `m` with `(m + mᵀ)/2`.
pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in (j + 1)..n {
            let avg = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// Symmetric eigendecomposition with eigenvalues sorted in descending order.
///
/// The asymmetry tolerance is `1e-12` scaled by `max(1, max|m_ij|)`, so a Gram
/// matrix assembled by a blocked product is not rejected for rounding noise.
pub fn sym_eig(m: &DMatrix<f64>) -> Result<SymEig> {
    let n = m.nrows();
    if n == 0 || m.ncols() != n {
        return Err(ScreenError::Shape(format!(
            "sym_eig needs a non-empty square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asym = asymmetry(m);
    if asym > SYMMETRY_TOL * scale {
        return Err(ScreenError::NotSymmetric { asymmetry: asym });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(ScreenError::Numerical("non-finite entry in symmetric matrix".into()));
    }

    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = SymmetricEigen::try_new(sym, f64::EPSILON, MAX_SWEEPS)
        .ok_or(ScreenError::NoConvergence { iterations: MAX_SWEEPS })?;

    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let eigenvalues = DVector::from_iterator(n, idx.iter().map(|&k| eig.eigenvalues[k]));
    let eigenvectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, idx[j])]);
    Ok(SymEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Principal square root of a symmetric positive semi-definite matrix.
/// Negative rounding noise in the spectrum is clipped to zero.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(m)?;
    Ok(eig.spectral_map(|e| e.max(0.0).sqrt()))
}
