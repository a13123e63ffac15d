//! Dense symmetric linear algebra behind the screening engine.

mod decorrelate;
mod eigen;
mod forward;
mod ols;
mod oracle;

pub use decorrelate::{apply_decorrelator, build_decorrelator, DecorrelationOperator};
pub use eigen::{asymmetry, sym_eig, sym_sqrt, symmetrize, SymEig};
pub use forward::{best_candidate, Candidate, ForwardState, IncrementalForward, DEGENERACY_TOL};
pub use ols::{fit_with_intercept, select_columns, select_entries, select_rows, LinearFit};
pub use oracle::brute_force_drss;
