//! Parameter-matched classical baseline: 4 inputs, 6 ELU hidden units, one
//! sigmoid output, trained with binary cross-entropy. 37 parameters.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MODULE: &str = "mlp";

pub const INPUTS: usize = 4;
pub const HIDDEN: usize = 6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    /// `[HIDDEN][INPUTS]`
    pub w1: [[f64; INPUTS]; HIDDEN],
    pub b1: [f64; HIDDEN],
    pub w2: [f64; HIDDEN],
    pub b2: f64,
}

/// Gradient with the same layout as the model.
pub type MlpGradient = MlpModel;

impl MlpModel {
    pub fn zeros() -> Self {
        MlpModel { w1: [[0.0; INPUTS]; HIDDEN], b1: [0.0; HIDDEN], w2: [0.0; HIDDEN], b2: 0.0 }
    }

    /// Fan-in uniform init: every parameter of a layer drawn from
    /// `U(-1/sqrt(fan_in), 1/sqrt(fan_in))`.
    pub fn initialized<R: Rng>(rng: &mut R) -> Self {
        let mut m = Self::zeros();
        let a1 = 1.0 / (INPUTS as f64).sqrt();
        let a2 = 1.0 / (HIDDEN as f64).sqrt();
        for row in &mut m.w1 {
            for w in row.iter_mut() {
                *w = rng.gen_range(-a1..=a1);
            }
        }
        for b in &mut m.b1 {
            *b = rng.gen_range(-a1..=a1);
        }
        for w in &mut m.w2 {
            *w = rng.gen_range(-a2..=a2);
        }
        m.b2 = rng.gen_range(-a2..=a2);
        m
    }

    pub fn parameter_count(&self) -> usize {
        HIDDEN * INPUTS + HIDDEN + HIDDEN + 1
    }

    /// Flat view: `w1` row-major, `b1`, `w2`, `b2`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.parameter_count());
        v.extend(self.w1.iter().flatten());
        v.extend(&self.b1);
        v.extend(&self.w2);
        v.push(self.b2);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        let mut m = Self::zeros();
        if flat.len() != m.parameter_count() {
            return Err(Error::config(
                MODULE,
                format!("{} values for a {}-parameter network", flat.len(), m.parameter_count()),
            ));
        }
        let mut it = flat.iter().copied();
        for w in m.w1.iter_mut().flatten() {
            *w = it.next().unwrap();
        }
        for b in &mut m.b1 {
            *b = it.next().unwrap();
        }
        for w in &mut m.w2 {
            *w = it.next().unwrap();
        }
        m.b2 = it.next().unwrap();
        Ok(m)
    }

    fn check_input(features: &[f64]) -> Result<&[f64; INPUTS]> {
        features.try_into().map_err(|_| {
            Error::config(MODULE, format!("expected {INPUTS} features, got {}", features.len()))
        })
    }

    fn hidden_pre(&self, x: &[f64; INPUTS]) -> [f64; HIDDEN] {
        let mut z = self.b1;
        for (zi, row) in z.iter_mut().zip(&self.w1) {
            *zi += row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>();
        }
        z
    }

    /// `P(y = 1 | x)`
    pub fn forward(&self, features: &[f64]) -> Result<f64> {
        let x = Self::check_input(features)?;
        let h = self.hidden_pre(x).map(elu);
        let out = self.b2 + self.w2.iter().zip(&h).map(|(w, hi)| w * hi).sum::<f64>();
        Ok(sigmoid(out))
    }

    /// Binary cross-entropy for `label` in `{0, 1}`.
    pub fn loss(&self, features: &[f64], label: usize) -> Result<f64> {
        let p = self.forward(features)?;
        Ok(bce(p, label))
    }

    /// Exact gradient of the binary cross-entropy, with the loss.
    pub fn backward(&self, features: &[f64], label: usize) -> Result<(f64, MlpGradient)> {
        if label > 1 {
            return Err(Error::config(MODULE, format!("binary label expected, got {label}")));
        }
        let x = Self::check_input(features)?;
        let z1 = self.hidden_pre(x);
        let h = z1.map(elu);
        let out = self.b2 + self.w2.iter().zip(&h).map(|(w, hi)| w * hi).sum::<f64>();
        let p = sigmoid(out);
        let y = label as f64;
        // dL/dout for sigmoid + BCE
        let d_out = p - y;
        let mut g = Self::zeros();
        g.b2 = d_out;
        for j in 0..HIDDEN {
            g.w2[j] = d_out * h[j];
            let d_z1 = d_out * self.w2[j] * elu_derivative(z1[j]);
            g.b1[j] = d_z1;
            for (gw, xi) in g.w1[j].iter_mut().zip(x) {
                *gw = d_z1 * xi;
            }
        }
        Ok((bce(p, label), g))
    }
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// ELU with `alpha = 1`.
pub fn elu(z: f64) -> f64 {
    if z < 0.0 {
        z.exp_m1()
    } else {
        z
    }
}

fn elu_derivative(z: f64) -> f64 {
    if z < 0.0 {
        z.exp()
    } else {
        1.0
    }
}

fn bce(p: f64, label: usize) -> f64 {
    let q = if label == 1 { p } else { 1.0 - p };
    -q.max(f64::MIN_POSITIVE).ln()
}
