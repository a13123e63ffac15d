//! Link functions and the response projection that makes `g(Y)` well defined.
//!
//! | link        | projection of `y`                         | `g(t)`              |
//! |-------------|-------------------------------------------|---------------------|
//! | `identity`  | `y`                                       | `t`                 |
//! | `logit`     | `0 ↦ n^{-1/2}`, `1 ↦ 1 − n^{-1/2}`        | `log(t / (1 − t))`  |
//! | `log`       | `0 ↦ n^{-1/2}`, otherwise `y`             | `log t`             |
//! | `power:1/a` | `y`                                       | `t^a` (a = 3 or 5)  |

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScreenError};

/// Exponent `α` of a power mean model `g⁻¹(t) = t^α`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PowerExponent {
    OneThird,
    OneFifth,
}

impl PowerExponent {
    pub fn alpha(self) -> f64 {
        match self {
            PowerExponent::OneThird => 1.0 / 3.0,
            PowerExponent::OneFifth => 1.0 / 5.0,
        }
    }

    /// The integer `1/α`.
    pub fn degree(self) -> i32 {
        match self {
            PowerExponent::OneThird => 3,
            PowerExponent::OneFifth => 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum LinkSpec {
    Identity,
    Logit,
    Log,
    Power(PowerExponent),
}

impl fmt::Display for LinkSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LinkSpec::Identity => f.write_str("identity"),
            LinkSpec::Logit => f.write_str("logit"),
            LinkSpec::Log => f.write_str("log"),
            LinkSpec::Power(PowerExponent::OneThird) => f.write_str("power:1/3"),
            LinkSpec::Power(PowerExponent::OneFifth) => f.write_str("power:1/5"),
        }
    }
}

impl FromStr for LinkSpec {
    type Err = ScreenError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "identity" => Ok(LinkSpec::Identity),
            "logit" => Ok(LinkSpec::Logit),
            "log" => Ok(LinkSpec::Log),
            "power:1/3" => Ok(LinkSpec::Power(PowerExponent::OneThird)),
            "power:1/5" => Ok(LinkSpec::Power(PowerExponent::OneFifth)),
            other => Err(ScreenError::param(
                "link",
                format!("unknown link `{other}` (expected identity, logit, log, power:1/3 or power:1/5)"),
            )),
        }
    }
}

impl TryFrom<String> for LinkSpec {
    type Error = ScreenError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<LinkSpec> for String {
    fn from(l: LinkSpec) -> String {
        l.to_string()
    }
}

impl LinkSpec {
    /// Whether `Y* = Y` for every valid response under this link.
    pub fn is_identity(self) -> bool {
        matches!(self, LinkSpec::Identity)
    }

    /// `g(t)` on the projected domain.
    pub fn link(self, t: f64) -> f64 {
        match self {
            LinkSpec::Identity => t,
            LinkSpec::Logit => (t / (1.0 - t)).ln(),
            LinkSpec::Log => t.ln(),
            LinkSpec::Power(a) => t.powi(a.degree()),
        }
    }
}

/// `Π_{Y*}(y)` for a sample of size `n`.
pub fn project_response(y: f64, link: LinkSpec, n: usize) -> Result<f64> {
    project_at(y, link, n, 0)
}

fn project_at(y: f64, link: LinkSpec, n: usize, row: usize) -> Result<f64> {
    let domain = || ScreenError::Domain {
        row,
        value: y,
        link: link.to_string(),
    };
    if !y.is_finite() {
        return Err(domain());
    }
    match link {
        LinkSpec::Identity | LinkSpec::Power(_) => Ok(y),
        LinkSpec::Logit => {
            if n <= 4 {
                return Err(ScreenError::param(
                    "n",
                    format!("logit projection needs n >= 5, got {n}"),
                ));
            }
            let edge = 1.0 / (n as f64).sqrt();
            if y == 0.0 {
                Ok(edge)
            } else if y == 1.0 {
                Ok(1.0 - edge)
            } else {
                Err(domain())
            }
        }
        LinkSpec::Log => {
            if n == 0 {
                return Err(ScreenError::param("n", "sample size must be positive"));
            }
            if y < 0.0 {
                Err(domain())
            } else if y == 0.0 {
                Ok(1.0 / (n as f64).sqrt())
            } else {
                Ok(y)
            }
        }
    }
}

/// `Y*` together with the flag recording whether the transform is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedResponse {
    pub ystar: DVector<f64>,
    pub identity_transform: bool,
}

/// `Y*ᵢ = g(Π(Yᵢ))` with the projection sized by the sample length.
pub fn transform_response(y: &DVector<f64>, link: LinkSpec) -> Result<TransformedResponse> {
    transform_response_with_n(y, link, y.len())
}

/// As [`transform_response`] but with the projection constant taken from a
/// sample of size `n` (used when scoring held-out rows).
pub fn transform_response_with_n(y: &DVector<f64>, link: LinkSpec, n: usize) -> Result<TransformedResponse> {
    let mut ystar = DVector::zeros(y.len());
    for (row, (&yi, out)) in y.iter().zip(ystar.iter_mut()).enumerate() {
        *out = link.link(project_at(yi, link, n, row)?);
        if !out.is_finite() {
            return Err(ScreenError::Domain {
                row,
                value: yi,
                link: link.to_string(),
            });
        }
    }
    Ok(TransformedResponse {
        ystar,
        identity_transform: link.is_identity(),
    })
}

/// `g⁻¹(t)`.
pub fn inverse_link(t: f64, link: LinkSpec) -> f64 {
    match link {
        LinkSpec::Identity => t,
        LinkSpec::Logit => {
            if t >= 0.0 {
                1.0 / (1.0 + (-t).exp())
            } else {
                let e = t.exp();
                e / (1.0 + e)
            }
        }
        LinkSpec::Log => t.exp(),
        LinkSpec::Power(PowerExponent::OneThird) => t.cbrt(),
        LinkSpec::Power(a) => t.signum() * t.abs().powf(a.alpha()),
    }
}
