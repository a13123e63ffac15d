//! Incremental orthogonal projections for forward selection.
//!
//! [`ForwardState`] is the plain state: selected columns, an orthonormal basis
//! of their span and the current residual. [`IncrementalForward`] wraps a state
//! with a deflated copy of the design so that scoring all candidates costs
//! `O(np)` per step instead of `O(npk)`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, ScreenError};

/// A candidate column is degenerate when the squared norm of its component
/// orthogonal to the current basis is at most this fraction of its squared norm.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// DRSS of one candidate column given the current selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub index: usize,
    pub drss: f64,
    pub degenerate: bool,
}

#[derive(Debug, Clone)]
pub struct ForwardState {
    selected: Vec<usize>,
    basis: Vec<DVector<f64>>,
    residual: DVector<f64>,
    rss: f64,
}

impl ForwardState {
    /// Empty selection; the residual is the response itself.
    pub fn init(ydec: &DVector<f64>) -> Self {
        ForwardState {
            selected: Vec::new(),
            basis: Vec::new(),
            residual: ydec.clone(),
            rss: ydec.norm_squared(),
        }
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn residual(&self) -> &DVector<f64> {
        &self.residual
    }

    pub fn rss(&self) -> f64 {
        self.rss
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn nrows(&self) -> usize {
        self.residual.len()
    }

    /// The orthonormal basis as an `n × k` matrix.
    pub fn basis(&self) -> DMatrix<f64> {
        if self.basis.is_empty() {
            DMatrix::zeros(self.nrows(), 0)
        } else {
            DMatrix::from_columns(&self.basis)
        }
    }

    /// Component of `v` orthogonal to the basis: modified Gram–Schmidt followed
    /// by one full reorthogonalization pass.
    fn orthogonal_component(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut u = v.clone();
        for _ in 0..2 {
            for q in &self.basis {
                let c = q.dot(&u);
                u.axpy(-c, q, 1.0);
            }
        }
        u
    }

    /// DRSS of every unselected column of `xdec`, computed from scratch
    /// against the stored basis.
    pub fn drss_candidates(&self, xdec: &DMatrix<f64>) -> Vec<Candidate> {
        let mut taken = vec![false; xdec.ncols()];
        for &j in &self.selected {
            taken[j] = true;
        }
        (0..xdec.ncols())
            .filter(|&j| !taken[j])
            .map(|j| {
                let col = xdec.column(j).into_owned();
                let u = self.orthogonal_component(&col);
                score(j, &u, col.norm_squared(), &self.residual, self.rss)
            })
            .collect()
    }

    /// Adds column `j` of `xdec` to the selection.
    pub fn extend(&self, xdec: &DMatrix<f64>, j: usize) -> Result<ForwardState> {
        if j >= xdec.ncols() {
            return Err(ScreenError::param("j", format!("column {j} out of range")));
        }
        if xdec.nrows() != self.nrows() {
            return Err(ScreenError::Shape(format!(
                "state has {} rows, design has {}",
                self.nrows(),
                xdec.nrows()
            )));
        }
        if self.selected.contains(&j) {
            return Err(ScreenError::param("j", format!("column {j} is already selected")));
        }
        let col = xdec.column(j).into_owned();
        let u = self.orthogonal_component(&col);
        self.push_direction(j, u, col.norm_squared())
    }

    fn push_direction(&self, j: usize, u: DVector<f64>, col_norm_sq: f64) -> Result<ForwardState> {
        let u_norm_sq = u.norm_squared();
        if u_norm_sq <= DEGENERACY_TOL * col_norm_sq || u_norm_sq == 0.0 {
            return Err(ScreenError::Degenerate {
                column: j,
                reason: "lies in the span of the selected columns".into(),
            });
        }
        let q = u / u_norm_sq.sqrt();
        let mut residual = self.residual.clone();
        let c = q.dot(&residual);
        residual.axpy(-c, &q, 1.0);
        let rss = residual.norm_squared().min(self.rss);

        let mut selected = self.selected.clone();
        selected.push(j);
        let mut basis = self.basis.clone();
        basis.push(q);
        Ok(ForwardState {
            selected,
            basis,
            residual,
            rss,
        })
    }
}

fn score(index: usize, u: &DVector<f64>, col_norm_sq: f64, residual: &DVector<f64>, rss: f64) -> Candidate {
    let u_norm_sq = u.norm_squared();
    if u_norm_sq <= DEGENERACY_TOL * col_norm_sq || u_norm_sq == 0.0 {
        return Candidate {
            index,
            drss: rss,
            degenerate: true,
        };
    }
    let proj = u.dot(residual);
    Candidate {
        index,
        drss: (rss - proj * proj / u_norm_sq).max(0.0),
        degenerate: false,
    }
}

/// Smallest DRSS among non-degenerate candidates; ties go to the smaller index.
pub fn best_candidate(candidates: &[Candidate]) -> Option<Candidate> {
    let mut best: Option<Candidate> = None;
    for c in candidates.iter().filter(|c| !c.degenerate) {
        best = match best {
            None => Some(*c),
            Some(b) if c.drss < b.drss || (c.drss == b.drss && c.index < b.index) => Some(*c),
            keep => keep,
        };
    }
    best
}

/// Forward-selection engine that keeps every column deflated against the
/// current basis.
#[derive(Debug, Clone)]
pub struct IncrementalForward<'a> {
    xdec: &'a DMatrix<f64>,
    state: ForwardState,
    deflated: DMatrix<f64>,
    col_norm_sq: Vec<f64>,
    taken: Vec<bool>,
}

impl<'a> IncrementalForward<'a> {
    pub fn new(xdec: &'a DMatrix<f64>, ydec: &DVector<f64>) -> Result<Self> {
        if xdec.nrows() != ydec.len() {
            return Err(ScreenError::Shape(format!(
                "design has {} rows, response has {}",
                xdec.nrows(),
                ydec.len()
            )));
        }
        let col_norm_sq = xdec.column_iter().map(|c| c.norm_squared()).collect();
        Ok(IncrementalForward {
            xdec,
            state: ForwardState::init(ydec),
            deflated: xdec.clone(),
            col_norm_sq,
            taken: vec![false; xdec.ncols()],
        })
    }

    pub fn state(&self) -> &ForwardState {
        &self.state
    }

    /// The undeflated design the engine was built from.
    pub fn design(&self) -> &'a DMatrix<f64> {
        self.xdec
    }

    pub fn into_state(self) -> ForwardState {
        self.state
    }

    pub fn candidates(&self) -> Vec<Candidate> {
        let r = &self.state.residual;
        let rss = self.state.rss;
        let proj = self.deflated.tr_mul(r);
        (0..self.deflated.ncols())
            .filter(|&j| !self.taken[j])
            .map(|j| {
                let u_norm_sq = self.deflated.column(j).norm_squared();
                if u_norm_sq <= DEGENERACY_TOL * self.col_norm_sq[j] || u_norm_sq == 0.0 {
                    Candidate {
                        index: j,
                        drss: rss,
                        degenerate: true,
                    }
                } else {
                    Candidate {
                        index: j,
                        drss: (rss - proj[j] * proj[j] / u_norm_sq).max(0.0),
                        degenerate: false,
                    }
                }
            })
            .collect()
    }

    pub fn extend(&mut self, j: usize) -> Result<()> {
        if j >= self.deflated.ncols() {
            return Err(ScreenError::param("j", format!("column {j} out of range")));
        }
        if self.taken[j] {
            return Err(ScreenError::param("j", format!("column {j} is already selected")));
        }
        let mut u = self.deflated.column(j).into_owned();
        // one cleanup pass against the full basis before normalizing
        for q in &self.state.basis {
            let c = q.dot(&u);
            u.axpy(-c, q, 1.0);
        }
        let next = self.state.push_direction(j, u, self.col_norm_sq[j])?;
        let q = next.basis.last().expect("basis grew by one column");

        // deflated ← deflated − q (qᵀ deflated)
        let coeffs = self.deflated.tr_mul(q);
        self.deflated.ger(-1.0, q, &coeffs, 1.0);

        self.taken[j] = true;
        self.state = next;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::brute_force_drss;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn gaussian(n: usize, p: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(rng))
    }

    fn columns(x: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(x.nrows(), idx.len(), |i, k| x[(i, idx[k])])
    }

    #[test]
    fn init_norms() {
        let s = ForwardState::init(&DVector::from_vec(vec![3.0, 4.0]));
        assert_eq!(s.rss(), 25.0);
        assert!(s.is_empty());
        assert_eq!(s.basis().ncols(), 0);
        let s = ForwardState::init(&DVector::zeros(4));
        assert_eq!(s.rss(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let y = DVector::from_fn(10, |_, _| StandardNormal.sample(&mut rng));
        let direct: f64 = y.iter().map(|v| v * v).sum();
        assert!((ForwardState::init(&y).rss() - direct).abs() < 1e-12);
    }

    #[test]
    fn parallel_and_orthogonal_columns() {
        let y = DVector::from_vec(vec![1.0, 2.0, 0.0]);
        let x = DMatrix::from_column_slice(3, 2, &[2.0, 4.0, 0.0, 0.0, 0.0, 5.0]);
        let s = ForwardState::init(&y);
        let c = s.drss_candidates(&x);
        assert!(c[0].drss.abs() < 1e-12);
        assert!((c[1].drss - 5.0).abs() < 1e-12);

        let after = s.extend(&x, 0).unwrap();
        assert!(after.rss() < 1e-12);
        let after = s.extend(&x, 1).unwrap();
        assert!((after.rss() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_columns_report_no_reduction() {
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let s = ForwardState::init(&y).extend(&x, 0).unwrap();
        let c = s.drss_candidates(&x);
        assert_eq!(c.len(), 1);
        assert!(c[0].degenerate);
        assert_eq!(c[0].drss, s.rss());
        assert!(matches!(
            s.extend(&x, 1),
            Err(ScreenError::Degenerate { column: 1, .. })
        ));
        assert!(best_candidate(&c).is_none());
    }

    #[test]
    fn drss_matches_projection_oracle_after_three_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(2050);
        let x = gaussian(20, 50, &mut rng);
        let y = DVector::from_fn(20, |_, _| StandardNormal.sample(&mut rng));
        let chosen = [7usize, 19, 33];
        let mut state = ForwardState::init(&y);
        for &j in &chosen {
            state = state.extend(&x, j).unwrap();
        }
        for cand in state.drss_candidates(&x) {
            let mut idx = chosen.to_vec();
            idx.push(cand.index);
            let oracle = brute_force_drss(&columns(&x, &idx), &y);
            assert!(
                (cand.drss - oracle).abs() < 1e-8,
                "col {}: {} vs {}",
                cand.index,
                cand.drss,
                oracle
            );
        }
        let oracle = brute_force_drss(&columns(&x, &chosen), &y);
        assert!((state.rss() - oracle).abs() < 1e-8);
    }

    #[test]
    fn basis_stays_orthonormal_and_residual_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let x = gaussian(15, 30, &mut rng);
        let y = DVector::from_fn(15, |_, _| StandardNormal.sample(&mut rng));
        let mut state = ForwardState::init(&y);
        let mut prev = state.rss();
        for j in [3usize, 8, 1, 22, 9, 14] {
            state = state.extend(&x, j).unwrap();
            let b = state.basis();
            let gram = b.transpose() * &b;
            assert!((gram - DMatrix::<f64>::identity(b.ncols(), b.ncols())).amax() < 1e-8);
            assert!((b.transpose() * state.residual()).amax() < 1e-8);
            assert!(state.rss() <= prev);
            prev = state.rss();
        }
    }

    #[test]
    fn incremental_engine_agrees_with_plain_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let x = gaussian(20, 40, &mut rng);
        let y = DVector::from_fn(20, |_, _| StandardNormal.sample(&mut rng));
        let mut engine = IncrementalForward::new(&x, &y).unwrap();
        let mut plain = ForwardState::init(&y);
        for _ in 0..8 {
            let a = engine.candidates();
            let b = plain.drss_candidates(&x);
            assert_eq!(a.len(), b.len());
            for (ca, cb) in a.iter().zip(&b) {
                assert_eq!(ca.index, cb.index);
                assert!((ca.drss - cb.drss).abs() < 1e-9);
            }
            let pick = best_candidate(&a).unwrap().index;
            engine.extend(pick).unwrap();
            plain = plain.extend(&x, pick).unwrap();
            assert!((engine.state().rss() - plain.rss()).abs() < 1e-9);
        }
    }

    #[test]
    fn ties_go_to_smaller_index() {
        let c = [
            Candidate {
                index: 4,
                drss: 1.0,
                degenerate: false,
            },
            Candidate {
                index: 2,
                drss: 1.0,
                degenerate: false,
            },
            Candidate {
                index: 0,
                drss: 0.5,
                degenerate: true,
            },
        ];
        assert_eq!(best_candidate(&c).unwrap().index, 2);
    }

    #[test]
    fn extending_twice_is_rejected() {
        let x = DMatrix::<f64>::identity(3, 3);
        let y = DVector::from_vec(vec![1.0, 1.0, 1.0]);
        let s = ForwardState::init(&y).extend(&x, 1).unwrap();
        assert!(s.extend(&x, 1).is_err());
        let mut e = IncrementalForward::new(&x, &y).unwrap();
        e.extend(1).unwrap();
        assert!(e.extend(1).is_err());
    }
}
