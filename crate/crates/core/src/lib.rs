//! Decorrelated forward screening for high-dimensional generalized mean
//! regression.
//!
//! The response is mapped to the link scale, the design and response are
//! multiplied by `Ψ = (XXᵀ/p + λI)^{-1/2}`, and columns are added greedily by
//! smallest residual sum of squares on the decorrelated problem. The
//! thresholded variant stops once a step's RSS decrement falls below a
//! `c`-scaled threshold, with `c` chosen by cross-validation.
//!
//! ```
//! use dfscreen::{screen, DMatrix, DVector, LinkSpec, ScreenOptions};
//!
//! let x = DMatrix::from_fn(40, 60, |i, j| ((i * 7 + j * 13) % 11) as f64 - 5.0 + (i == j) as u8 as f64);
//! let y = DVector::from_fn(40, |i, _| 2.0 * x[(i, 3)]);
//! let mut opts = ScreenOptions::new(LinkSpec::Identity);
//! opts.c = Some(1.0);
//! let result = screen(&x, &y, &opts).unwrap();
//! assert_eq!(result.selected.first(), Some(&3));
//! ```

pub mod baselines;
pub mod error;
pub mod linalg;
pub mod links;
pub mod methods;
pub mod screening;
pub mod simgen;
pub mod tuning;

pub use nalgebra::{DMatrix, DVector};

pub use baselines::{ebic_select, fr_path, holp_rank, sis_rank, wrh_rank, EbicChoice, RankedScreen};
pub use error::{Result, ScreenError};
pub use links::{inverse_link, project_response, transform_response, LinkSpec, PowerExponent, TransformedResponse};
pub use methods::{run_method, Method, MethodSettings};
pub use screening::{
    df_path, screen, standardize_columns, tdf_select, tdf_threshold, ScreenOptions, ScreeningPath, SelectionResult,
    TransformedProblem,
};
pub use simgen::{evaluate, run_experiment, Evaluation, ExperimentConfig, ExperimentReport, Metrics, ScenarioConfig};
pub use tuning::{cv_select_c, default_lambda, CvOptions, CvReport, ErrorScale};
