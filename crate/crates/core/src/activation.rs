//! Pointwise activations and the symmetry flags each one carries.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{domain, Error};

/// Activation applied after every hidden affine map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Relu,
    /// `max(a x, x)` with slope `a > 0` on the negative side.
    LeakyRelu(f64),
    Tanh,
    Sigmoid,
    Identity,
}

impl Activation {
    /// Activations that appear in the equivalence table, used by random suites.
    pub const TABLE: [Activation; 4] = [
        Activation::Sigmoid,
        Activation::Tanh,
        Activation::Relu,
        Activation::LeakyRelu(0.1),
    ];

    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    x
                } else {
                    a * x
                }
            }
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Identity => x,
        }
    }

    /// Derivative; the ReLU family uses the subgradient at 0 given by the
    /// negative branch (0 for ReLU, `a` for LeakyReLU).
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu(a) => {
                if x > 0.0 {
                    1.0
                } else {
                    a
                }
            }
            Activation::Tanh => {
                let t = x.tanh();
                1.0 - t * t
            }
            Activation::Sigmoid => {
                let s = Activation::Sigmoid.apply(x);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
        }
    }

    /// Lipschitz constant on `[-m, m]`.
    ///
    /// Every supported activation attains its maximal slope at the origin or
    /// is piecewise linear, so the constant does not shrink with `m`.
    pub fn lipschitz_on(self, _m: f64) -> f64 {
        match self {
            Activation::Relu | Activation::Identity | Activation::Tanh => 1.0,
            Activation::LeakyRelu(a) => a.max(1.0),
            Activation::Sigmoid => 0.25,
        }
    }

    /// `σ(λx) = λσ(x)` for all `λ > 0`.
    pub fn is_positive_homogeneous(self) -> bool {
        matches!(
            self,
            Activation::Relu | Activation::LeakyRelu(_) | Activation::Identity
        )
    }

    /// `σ(-x) = -σ(x)`.
    pub fn is_odd(self) -> bool {
        matches!(self, Activation::Tanh | Activation::Identity)
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::LeakyRelu(_) => "leaky_relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::Identity => "identity",
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Activation::LeakyRelu(a) => write!(f, "leaky_relu:{a}"),
            other => f.write_str(other.name()),
        }
    }
}

impl FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "relu" => return Ok(Activation::Relu),
            "tanh" => return Ok(Activation::Tanh),
            "sigmoid" => return Ok(Activation::Sigmoid),
            "identity" | "linear" => return Ok(Activation::Identity),
            "leaky_relu" | "leakyrelu" => return Ok(Activation::LeakyRelu(0.01)),
            _ => {}
        }
        if let Some(slope) = s
            .strip_prefix("leaky_relu:")
            .or_else(|| s.strip_prefix("leakyrelu:"))
        {
            let a: f64 = slope
                .parse()
                .map_err(|_| domain(format!("bad leaky_relu slope `{slope}`")))?;
            if !(a > 0.0 && a.is_finite()) {
                return Err(domain("leaky_relu slope must be positive and finite"));
            }
            return Ok(Activation::LeakyRelu(a));
        }
        Err(domain(format!("unknown activation `{s}`")))
    }
}

impl Serialize for Activation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Activation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
