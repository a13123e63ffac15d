use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::baselines::{default_top_k, ebic_select, fr_path, holp_rank, sis_rank, wrh_rank};
use crate::error::{Result, ScreenError};
use crate::links::{transform_response, LinkSpec};
use crate::screening::{screen, standardize_columns, ScreenOptions};
use crate::tuning::{default_lambda, CvOptions};

/// Screening procedures the harness can compare.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "TDF")]
    Tdf,
    #[serde(rename = "FBIC")]
    Fbic,
    #[serde(rename = "HOLP_EBIC")]
    HolpEbic,
    #[serde(rename = "SIS_TOPK")]
    SisTopk,
    #[serde(rename = "WRH_TOPK")]
    WrhTopk,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Tdf,
        Method::Fbic,
        Method::HolpEbic,
        Method::SisTopk,
        Method::WrhTopk,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Method::Tdf => "TDF",
            Method::Fbic => "FBIC",
            Method::HolpEbic => "HOLP_EBIC",
            Method::SisTopk => "SIS_TOPK",
            Method::WrhTopk => "WRH_TOPK",
        }
    }

    /// Display label used in printed tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Tdf => "T-DF",
            Method::Fbic => "FBIC",
            Method::HolpEbic => "HOLP-EBIC",
            Method::SisTopk => "SIS",
            Method::WrhTopk => "WRH",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Method {
    type Err = ScreenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "tdf" | "t-df" => Ok(Method::Tdf),
            "fbic" => Ok(Method::Fbic),
            "holp" | "holp_ebic" | "holp-ebic" => Ok(Method::HolpEbic),
            "sis" | "sis_topk" => Ok(Method::SisTopk),
            "wrh" | "wrh_topk" => Ok(Method::WrhTopk),
            other => Err(ScreenError::param(
                "method",
                format!("unknown method `{other}` (expected tdf, fbic, holp, sis or wrh)"),
            )),
        }
    }
}

/// Knobs shared by all methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MethodSettings {
    pub ebic_gamma: f64,
    /// Largest model EBIC may pick; defaults to `min(⌈n/log n⌉, n − 2, p)`.
    pub ebic_max_size: Option<usize>,
    /// Size kept by SIS and WRH; defaults to `⌈n/log n⌉`.
    pub top_k: Option<usize>,
    pub cv: CvOptions,
}

impl Default for MethodSettings {
    fn default() -> Self {
        MethodSettings {
            ebic_gamma: 1.0,
            ebic_max_size: None,
            top_k: None,
            cv: CvOptions::default(),
        }
    }
}

impl MethodSettings {
    fn ebic_cap(&self, n: usize, p: usize) -> usize {
        self.ebic_max_size
            .unwrap_or_else(|| default_top_k(n))
            .min(n.saturating_sub(2))
            .min(p)
            .max(1)
    }

    fn top_k(&self, n: usize, p: usize) -> usize {
        self.top_k.unwrap_or_else(|| default_top_k(n)).min(p)
    }
}

/// Runs one screening method and returns the selected columns in the order
/// the method ranked them.
pub fn run_method(
    method: Method,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    link: LinkSpec,
    settings: &MethodSettings,
    seed: u64,
) -> Result<Vec<usize>> {
    let (n, p) = x.shape();
    match method {
        Method::Tdf => {
            let mut opts = ScreenOptions::new(link);
            opts.cv = settings.cv.clone();
            opts.cv.seed = seed;
            Ok(screen(x, y, &opts)?.selected)
        }
        Method::Fbic => {
            let ystar = transform_response(y, link)?.ystar;
            let cap = settings.ebic_cap(n, p);
            let path = fr_path(x, &ystar, cap)?;
            Ok(ebic_select(&path.order, x, &ystar, settings.ebic_gamma, cap)?.selected)
        }
        Method::HolpEbic => {
            let ystar = transform_response(y, link)?.ystar;
            let rank = holp_rank(x, &ystar, default_lambda(n, p)?)?;
            let cap = settings.ebic_cap(n, p);
            Ok(ebic_select(&rank.order[..cap], x, &ystar, settings.ebic_gamma, cap)?.selected)
        }
        Method::SisTopk => {
            let ystar = transform_response(y, link)?.ystar;
            let rank = sis_rank(&standardize_columns(x), &ystar)?;
            Ok(rank.top(settings.top_k(n, p)))
        }
        Method::WrhTopk => {
            let ystar = transform_response(y, link)?.ystar;
            let rank = wrh_rank(x, &ystar, default_lambda(n, p)?)?;
            Ok(rank.top(settings.top_k(n, p)))
        }
    }
}
