//! Scalar concave increasing utilities with `u(0) = 0`.
//!
//! Besides evaluation each kind carries its concave conjugate
//! `u*(z) = inf_x { x z - u(x) }` in closed form, and the perspective
//! `psi(zeta, w) = w u*(zeta / w)` that the penalty functions are built from.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extended::ExtReal;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Utility {
    /// `u(x) = slope * x`.
    Linear {
        #[serde(default = "unit_slope")]
        slope: f64,
    },
    /// `u(x) = min(x, cap)`.
    LinearCapped { cap: f64 },
    /// `u(x) = 1 - exp(-gamma x)`.
    Exponential { gamma: f64 },
    /// `u(x) = ((1 + x)^(1 - eta) - 1) / (1 - eta)` for `x >= 0` and `u(x) = x` below zero.
    Power { eta: f64 },
}

fn unit_slope() -> f64 {
    1.0
}

impl Utility {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Utility::Linear { slope } => slope.is_finite() && slope > 0.0,
            Utility::LinearCapped { cap } => cap.is_finite() && cap >= 0.0,
            Utility::Exponential { gamma } => gamma.is_finite() && gamma > 0.0,
            Utility::Power { eta } => eta.is_finite() && eta > 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::validation(
                "utility parameters",
                format!("{self:?} is not increasing and concave"),
            ))
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Utility::Linear { .. } => "linear",
            Utility::LinearCapped { .. } => "linear_capped",
            Utility::Exponential { .. } => "exponential",
            Utility::Power { .. } => "power",
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Utility::Linear { slope } => slope * x,
            Utility::LinearCapped { cap } => x.min(cap),
            Utility::Exponential { gamma } => -(-gamma * x).exp_m1(),
            Utility::Power { eta } => {
                if x >= 0.0 {
                    ((1.0 + x).powf(1.0 - eta) - 1.0) / (1.0 - eta)
                } else {
                    x
                }
            }
        }
    }

    /// A supergradient at `x`. At the kink of the capped utility the left derivative is used.
    pub fn derivative(&self, x: f64) -> f64 {
        match *self {
            Utility::Linear { slope } => slope,
            Utility::LinearCapped { cap } => {
                if x <= cap {
                    1.0
                } else {
                    0.0
                }
            }
            Utility::Exponential { gamma } => gamma * (-gamma * x).exp(),
            Utility::Power { eta } => {
                if x >= 0.0 {
                    (1.0 + x).powf(-eta)
                } else {
                    1.0
                }
            }
        }
    }

    /// Marginal utility at zero, used to size weights and dominance slopes.
    pub fn slope_at_zero(&self) -> f64 {
        match *self {
            Utility::Linear { slope } => slope,
            Utility::LinearCapped { .. } => 1.0,
            Utility::Exponential { gamma } => gamma,
            Utility::Power { .. } => 1.0,
        }
    }

    pub fn supremum(&self) -> f64 {
        match *self {
            Utility::Linear { .. } => f64::INFINITY,
            Utility::LinearCapped { cap } => cap,
            Utility::Exponential { .. } => 1.0,
            Utility::Power { eta } => 1.0 / (eta - 1.0),
        }
    }

    pub fn is_piecewise_linear(&self) -> bool {
        matches!(self, Utility::Linear { .. } | Utility::LinearCapped { .. })
    }

    pub fn is_positively_homogeneous(&self) -> bool {
        match *self {
            Utility::Linear { .. } => true,
            Utility::LinearCapped { cap } => cap == 0.0,
            _ => false,
        }
    }

    /// Affine pieces `(slope, intercept)` whose pointwise minimum is `u`.
    /// Only meaningful for piecewise linear kinds.
    pub fn pieces(&self) -> Vec<(f64, f64)> {
        match *self {
            Utility::Linear { slope } => vec![(slope, 0.0)],
            Utility::LinearCapped { cap } => vec![(1.0, 0.0), (0.0, cap)],
            _ => Vec::new(),
        }
    }

    /// Closed interval `[lo, hi]` on which the conjugate is finite.
    pub fn conjugate_domain(&self) -> (f64, f64) {
        match *self {
            Utility::Linear { slope } => (slope, slope),
            Utility::LinearCapped { .. } => (0.0, 1.0),
            Utility::Exponential { .. } => (0.0, f64::INFINITY),
            Utility::Power { .. } => (0.0, 1.0),
        }
    }

    pub fn conjugate(&self, z: f64) -> ExtReal {
        match *self {
            Utility::Linear { slope } => {
                if z == slope {
                    ExtReal::ZERO
                } else {
                    ExtReal::NegInf
                }
            }
            Utility::LinearCapped { cap } => {
                if (0.0..=1.0).contains(&z) {
                    ExtReal::Finite(cap * (z - 1.0))
                } else {
                    ExtReal::NegInf
                }
            }
            Utility::Exponential { gamma } => {
                if z < 0.0 {
                    ExtReal::NegInf
                } else if z == 0.0 {
                    ExtReal::Finite(-1.0)
                } else {
                    let r = z / gamma;
                    ExtReal::Finite(r - r * r.ln() - 1.0)
                }
            }
            Utility::Power { eta } => {
                if !(0.0..=1.0).contains(&z) {
                    ExtReal::NegInf
                } else {
                    let r = (eta - 1.0) / eta;
                    ExtReal::Finite(eta / (eta - 1.0) * z.powf(r) - z - 1.0 / (eta - 1.0))
                }
            }
        }
    }

    /// Derivative of the conjugate in the interior of its domain.
    pub fn conjugate_derivative(&self, z: f64) -> f64 {
        match *self {
            Utility::Linear { .. } => 0.0,
            Utility::LinearCapped { cap } => cap,
            Utility::Exponential { gamma } => -(z / gamma).ln() / gamma,
            Utility::Power { eta } => z.powf(-1.0 / eta) - 1.0,
        }
    }

    /// `w u*(zeta / w)` for `w > 0`; at `w = 0` the value is `0` if `zeta = 0` and `-inf` otherwise.
    pub fn perspective(&self, zeta: f64, w: f64) -> ExtReal {
        if w < 0.0 || zeta < 0.0 && !matches!(self, Utility::Linear { .. }) {
            return ExtReal::NegInf;
        }
        if w == 0.0 {
            return if zeta == 0.0 {
                ExtReal::ZERO
            } else {
                ExtReal::NegInf
            };
        }
        match *self {
            Utility::Linear { slope } => {
                if zeta == slope * w {
                    ExtReal::ZERO
                } else {
                    ExtReal::NegInf
                }
            }
            Utility::LinearCapped { cap } => {
                if zeta <= w {
                    ExtReal::Finite(cap * (zeta - w))
                } else {
                    ExtReal::NegInf
                }
            }
            Utility::Exponential { gamma } => {
                if zeta == 0.0 {
                    ExtReal::Finite(-w)
                } else {
                    let r = zeta / gamma;
                    ExtReal::Finite(r - r * (r / w).ln() - w)
                }
            }
            Utility::Power { eta } => {
                if zeta > w {
                    ExtReal::NegInf
                } else {
                    let r = (eta - 1.0) / eta;
                    let c = eta / (eta - 1.0);
                    ExtReal::Finite(c * zeta.powf(r) * w.powf(1.0 - r) - zeta - w / (eta - 1.0))
                }
            }
        }
    }

    /// Partial derivative of the perspective in `w`, for `w > 0` inside the domain.
    pub fn perspective_dw(&self, zeta: f64, w: f64) -> f64 {
        match *self {
            Utility::Linear { .. } => 0.0,
            Utility::LinearCapped { cap } => -cap,
            Utility::Exponential { gamma } => zeta / (gamma * w) - 1.0,
            Utility::Power { eta } => ((zeta / w).powf((eta - 1.0) / eta) - 1.0) / (eta - 1.0),
        }
    }
}
