use nalgebra::{DMatrix, DVector};

use super::eigen::{sym_eig, symmetrize, SymEig};
use crate::error::{Result, ScreenError};

/// The operator `Ψ = (XXᵀ/p + λI)^{-1/2}` together with the spectrum it was
/// built from.
#[derive(Debug, Clone)]
pub struct DecorrelationOperator {
    psi: DMatrix<f64>,
    psi_op_norm_sq: f64,
    lambda: f64,
    gram_spectrum: SymEig,
}

impl DecorrelationOperator {
    pub fn psi(&self) -> &DMatrix<f64> {
        &self.psi
    }

    /// `‖Ψ‖₂² = 1 / (λ_min(XXᵀ/p) + λ)`.
    pub fn psi_op_norm_sq(&self) -> f64 {
        self.psi_op_norm_sq
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn dim(&self) -> usize {
        self.psi.nrows()
    }

    /// Spectrum of `XXᵀ/p` with eigenvalues already floored at zero.
    pub fn gram_spectrum(&self) -> &SymEig {
        &self.gram_spectrum
    }

    /// `Ψ² v = (XXᵀ/p + λI)^{-1} v`, applied through the spectrum.
    pub fn apply_psi_squared(&self, v: &DVector<f64>) -> DVector<f64> {
        let q = &self.gram_spectrum.eigenvectors;
        let mut coords = q.tr_mul(v);
        for (c, &e) in coords.iter_mut().zip(self.gram_spectrum.eigenvalues.iter()) {
            *c /= e + self.lambda;
        }
        q * coords
    }

    /// `Ψ² M` for a matrix right-hand side.
    pub fn apply_psi_squared_mat(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let q = &self.gram_spectrum.eigenvectors;
        let mut coords = q.tr_mul(m);
        for (mut row, &e) in coords.row_iter_mut().zip(self.gram_spectrum.eigenvalues.iter()) {
            row /= e + self.lambda;
        }
        q * coords
    }
}

/// Builds `Ψ` spectrally from the row Gram matrix `XXᵀ/p`.
pub fn build_decorrelator(x: &DMatrix<f64>, lambda: f64) -> Result<DecorrelationOperator> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(ScreenError::param(
            "lambda",
            format!("must be positive and finite, got {lambda}"),
        ));
    }
    let (n, p) = x.shape();
    if n == 0 || p == 0 {
        return Err(ScreenError::Shape(format!("design matrix is {n}x{p}")));
    }

    let mut gram = x * x.transpose();
    gram /= p as f64;
    symmetrize(&mut gram);
    let mut spectrum = sym_eig(&gram)?;
    for e in spectrum.eigenvalues.iter_mut() {
        *e = e.max(0.0);
    }

    let smallest = spectrum.eigenvalues[n - 1] + lambda;
    if smallest.is_nan() || smallest <= 0.0 {
        return Err(ScreenError::Numerical(format!(
            "shifted Gram spectrum is not positive (min {smallest:e})"
        )));
    }
    let psi = spectrum.spectral_map(|e| 1.0 / (e + lambda).sqrt());

    Ok(DecorrelationOperator {
        psi,
        psi_op_norm_sq: 1.0 / smallest,
        lambda,
        gram_spectrum: spectrum,
    })
}

/// Returns `(ΨX, ΨY*)`.
pub fn apply_decorrelator(
    op: &DecorrelationOperator,
    x: &DMatrix<f64>,
    ystar: &DVector<f64>,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = op.dim();
    if x.nrows() != n || ystar.len() != n {
        return Err(ScreenError::Shape(format!(
            "operator is {n}x{n} but X has {} rows and y* has {} entries",
            x.nrows(),
            ystar.len()
        )));
    }
    Ok((op.psi() * x, op.psi() * ystar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))
    }

    #[test]
    fn zero_design_gives_scaled_identity() {
        let x = DMatrix::<f64>::zeros(3, 4);
        let op = build_decorrelator(&x, 0.25).unwrap();
        assert!((op.psi() - DMatrix::<f64>::identity(3, 3) * 2.0).amax() < 1e-12);
        assert!((op.psi_op_norm_sq() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_rows_give_constant_operator() {
        // rows of a 2x4 Hadamard block: XXᵀ = 4·I = p·I
        let x = DMatrix::from_row_slice(2, 4, &[1.0, 1.0, 1.0, 1.0, 1.0, -1.0, 1.0, -1.0]);
        let op = build_decorrelator(&x, 1.0).unwrap();
        let expected = DMatrix::<f64>::identity(2, 2) * (0.5_f64).sqrt();
        assert!((op.psi() - expected).amax() < 1e-12);
    }

    #[test]
    fn psi_squared_inverts_shifted_gram() {
        let x = gaussian(5, 8, 5);
        let lambda = 0.1;
        let op = build_decorrelator(&x, lambda).unwrap();
        let shifted = &x * x.transpose() / 8.0 + DMatrix::<f64>::identity(5, 5) * lambda;
        let product = op.psi() * op.psi() * shifted;
        assert!((product - DMatrix::<f64>::identity(5, 5)).amax() < 1e-8);
    }

    #[test]
    fn op_norm_matches_smallest_eigenvalue() {
        let x = gaussian(6, 9, 12);
        let lambda = 0.3;
        let op = build_decorrelator(&x, lambda).unwrap();
        let gram = &x * x.transpose() / 9.0;
        let min_eig = gram.symmetric_eigenvalues().min();
        let expected = 1.0 / (min_eig.max(0.0) + lambda);
        assert!((op.psi_op_norm_sq() - expected).abs() / expected < 1e-10);
        // also equals the largest eigenvalue of Ψ²
        let top = (op.psi() * op.psi()).symmetric_eigenvalues().max();
        assert!((top - expected).abs() / expected < 1e-10);
    }

    #[test]
    fn rejects_non_positive_lambda() {
        let x = gaussian(3, 3, 1);
        assert!(matches!(
            build_decorrelator(&x, 0.0),
            Err(ScreenError::Parameter { .. })
        ));
        assert!(matches!(
            build_decorrelator(&x, -1.0),
            Err(ScreenError::Parameter { .. })
        ));
    }

    #[test]
    fn identity_and_scalar_application() {
        let x = DMatrix::from_element(2, 2, 1.0);
        let y = DVector::from_vec(vec![1.0, 0.0]);
        let zero = DMatrix::<f64>::zeros(2, 2);
        // λ = 1 on a zero design gives Ψ = I
        let op = build_decorrelator(&zero, 1.0).unwrap();
        let (xd, yd) = apply_decorrelator(&op, &x, &y).unwrap();
        assert!((xd - &x).amax() < 1e-15);
        assert!((yd - &y).amax() < 1e-15);
        // λ = 1/4 gives Ψ = 2I
        let op = build_decorrelator(&zero, 0.25).unwrap();
        let (xd, yd) = apply_decorrelator(&op, &x, &y).unwrap();
        assert!((xd - DMatrix::from_element(2, 2, 2.0)).amax() < 1e-12);
        assert!((yd - DVector::from_vec(vec![2.0, 0.0])).amax() < 1e-12);
    }

    #[test]
    fn application_matches_per_column_products() {
        let x = gaussian(5, 8, 21);
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let y = DVector::from_fn(5, |_, _| StandardNormal.sample(&mut rng));
        let op = build_decorrelator(&x, 0.1).unwrap();
        let (xd, yd) = apply_decorrelator(&op, &x, &y).unwrap();
        let psi = op.psi();
        for j in 0..8 {
            for i in 0..5 {
                let mut acc = 0.0;
                for k in 0..5 {
                    acc += psi[(i, k)] * x[(k, j)];
                }
                assert!((xd[(i, j)] - acc).abs() < 1e-12);
            }
        }
        for i in 0..5 {
            let acc: f64 = (0..5).map(|k| psi[(i, k)] * y[k]).sum();
            assert!((yd[i] - acc).abs() < 1e-12);
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let x = gaussian(4, 3, 2);
        let op = build_decorrelator(&x, 1.0).unwrap();
        let bad_y = DVector::<f64>::zeros(3);
        assert!(matches!(
            apply_decorrelator(&op, &x, &bad_y),
            Err(ScreenError::Shape(_))
        ));
    }

    #[test]
    fn psi_squared_application_agrees_with_explicit_square() {
        let x = gaussian(6, 10, 31);
        let op = build_decorrelator(&x, 0.5).unwrap();
        let v = DVector::from_fn(6, |i, _| i as f64 - 2.0);
        let explicit = op.psi() * op.psi() * &v;
        assert!((op.apply_psi_squared(&v) - explicit).amax() < 1e-10);
        let m = gaussian(6, 3, 32);
        let explicit = op.psi() * op.psi() * &m;
        assert!((op.apply_psi_squared_mat(&m) - explicit).amax() < 1e-10);
    }
}
