//! Weight re-mapping functions.
//!
//! A re-mapping function squeezes a real-valued trainable weight into the
//! rotation domain `[-pi, pi]` before the weight reaches a gate. Only the
//! forward pass sees the mapped value; gradient descent keeps updating the
//! raw weight, so every map comes with its exact derivative for the chain
//! rule.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "remap";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RemapFunction {
    /// No re-mapping, `phi(t) = t`. The baseline.
    #[serde(rename = "none")]
    Identity,
    /// Hard clip to `[-pi, pi]`.
    Clamp,
    /// `pi * tanh(t)`
    Tanh,
    /// `2 * atan(2t)`
    Arctan,
    /// Logistic rescaled onto `(-pi, pi)`.
    Sigmoid,
    /// ELU with `alpha = pi`; unbounded above.
    Elu,
    /// `pi * sin(t / 2)`, period `4 pi`.
    Sin,
}

impl RemapFunction {
    pub const ALL: [RemapFunction; 7] = [
        RemapFunction::Identity,
        RemapFunction::Clamp,
        RemapFunction::Tanh,
        RemapFunction::Arctan,
        RemapFunction::Sigmoid,
        RemapFunction::Elu,
        RemapFunction::Sin,
    ];

    /// Canonical lowercase name used on the command line and in output files.
    pub fn name(self) -> &'static str {
        match self {
            RemapFunction::Identity => "none",
            RemapFunction::Clamp => "clamp",
            RemapFunction::Tanh => "tanh",
            RemapFunction::Arctan => "arctan",
            RemapFunction::Sigmoid => "sigmoid",
            RemapFunction::Elu => "elu",
            RemapFunction::Sin => "sin",
        }
    }

    /// Approach label in result tables: `VQC` for the baseline, `VQC-<name>`
    /// otherwise.
    pub fn approach_label(self) -> String {
        match self {
            RemapFunction::Identity => "VQC".to_string(),
            other => format!("VQC-{}", other.name()),
        }
    }

    pub fn apply(self, theta: f64) -> Result<f64> {
        check_finite(theta)?;
        Ok(self.apply_unchecked(theta))
    }

    pub fn derivative(self, theta: f64) -> Result<f64> {
        check_finite(theta)?;
        Ok(self.derivative_unchecked(theta))
    }

    #[inline]
    pub(crate) fn apply_unchecked(self, theta: f64) -> f64 {
        match self {
            RemapFunction::Identity => theta,
            RemapFunction::Clamp => theta.clamp(-PI, PI),
            RemapFunction::Tanh => PI * theta.tanh(),
            RemapFunction::Arctan => 2.0 * (2.0 * theta).atan(),
            RemapFunction::Sigmoid => 2.0 * PI / (1.0 + (-theta).exp()) - PI,
            RemapFunction::Elu => {
                if theta < 0.0 {
                    PI * theta.exp_m1()
                } else {
                    theta
                }
            }
            RemapFunction::Sin => PI * (theta / 2.0).sin(),
        }
    }

    #[inline]
    pub(crate) fn derivative_unchecked(self, theta: f64) -> f64 {
        match self {
            RemapFunction::Identity => 1.0,
            // closed interval: the boundary keeps slope 1
            RemapFunction::Clamp => {
                if theta.abs() <= PI {
                    1.0
                } else {
                    0.0
                }
            }
            RemapFunction::Tanh => {
                let t = theta.tanh();
                PI * (1.0 - t * t)
            }
            RemapFunction::Arctan => 4.0 / (1.0 + 4.0 * theta * theta),
            RemapFunction::Sigmoid => {
                // 2 pi s (1 - s) with s = 1 / (1 + e^-t)
                let s = 1.0 / (1.0 + (-theta).exp());
                2.0 * PI * s * (1.0 - s)
            }
            RemapFunction::Elu => {
                if theta < 0.0 {
                    PI * theta.exp()
                } else {
                    1.0
                }
            }
            RemapFunction::Sin => PI / 2.0 * (theta / 2.0).cos(),
        }
    }
}

impl fmt::Display for RemapFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RemapFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RemapFunction::ALL
            .into_iter()
            .find(|r| r.name() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| {
                Error::config(
                    MODULE,
                    format!(
                        "unknown remap '{s}' (expected one of none, clamp, tanh, arctan, sigmoid, elu, sin)"
                    ),
                )
            })
    }
}

fn check_finite(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(Error::numeric(MODULE, format!("non-finite weight {theta}")))
    }
}
