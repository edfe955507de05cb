//! Flat circuit representation with trainable rotation slots, and
//! parameter-shift differentiation over it.

use std::f64::consts::FRAC_PI_2;

use crate::embedding::Reupload;
use crate::error::{Error, Result};
use crate::statevector::{Gate, RotationAxis, StateVector};

const MODULE: &str = "circuit";

#[derive(Debug, Clone, PartialEq)]
pub enum Op<'a> {
    Fixed(Gate),
    /// Rotation whose angle is `angles[param]` at evaluation time.
    Param { axis: RotationAxis, qubit: usize, param: usize },
    Reupload(&'a Reupload),
}

impl Op<'_> {
    fn apply(&self, state: &mut StateVector, angles: &[f64]) -> Result<()> {
        match self {
            Op::Fixed(g) => state.apply(g),
            Op::Param { axis, qubit, param } => state.apply(&Gate::Rotation {
                axis: *axis,
                qubit: *qubit,
                angle: angles[*param],
            }),
            Op::Reupload(r) => r.apply(state),
        }
    }
}

/// A sequence of operations acting on a prepared initial state.
#[derive(Debug, Clone)]
pub struct Circuit<'a> {
    pub ops: Vec<Op<'a>>,
    pub n_params: usize,
}

impl<'a> Circuit<'a> {
    pub fn new(ops: Vec<Op<'a>>) -> Self {
        let n_params = ops
            .iter()
            .filter_map(|op| match op {
                Op::Param { param, .. } => Some(param + 1),
                _ => None,
            })
            .max()
            .unwrap_or(0);
        Circuit { ops, n_params }
    }

    fn check_angles(&self, angles: &[f64]) -> Result<()> {
        if angles.len() < self.n_params {
            return Err(Error::config(
                MODULE,
                format!("circuit has {} parameters, got {} angles", self.n_params, angles.len()),
            ));
        }
        Ok(())
    }

    /// Runs every op on `state`.
    pub fn run(&self, mut state: StateVector, angles: &[f64]) -> Result<StateVector> {
        self.check_angles(angles)?;
        for op in &self.ops {
            op.apply(&mut state, angles)?;
        }
        Ok(state)
    }

    /// `<Z_q>` for each `q` in `measured` after running the circuit.
    pub fn expectations(
        &self,
        initial: StateVector,
        angles: &[f64],
        measured: &[usize],
    ) -> Result<Vec<f64>> {
        let state = self.run(initial, angles)?;
        measured.iter().map(|&q| state.expectation_z(q)).collect()
    }

    /// Expectations together with their Jacobian with respect to every gate
    /// angle, computed with the two-term parameter-shift rule
    /// `d<Z>/da = (<Z>(a + pi/2) - <Z>(a - pi/2)) / 2`.
    ///
    /// `jacobian[p][j]` is the derivative of `<Z_measured[j]>` with respect to
    /// `angles[p]`. A parameter used by several gates accumulates the
    /// contribution of each.
    pub fn parameter_shift(
        &self,
        initial: StateVector,
        angles: &[f64],
        measured: &[usize],
    ) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        self.check_angles(angles)?;
        let mut jacobian = vec![vec![0.0; measured.len()]; self.n_params];
        let mut state = initial;
        for (i, op) in self.ops.iter().enumerate() {
            if let Op::Param { axis, qubit, param } = *op {
                let angle = angles[param];
                let mut shifted: [Vec<f64>; 2] = Default::default();
                for (slot, shift) in shifted.iter_mut().zip([FRAC_PI_2, -FRAC_PI_2]) {
                    let mut branch = state.clone();
                    branch.apply(&Gate::Rotation { axis, qubit, angle: angle + shift })?;
                    for rest in &self.ops[i + 1..] {
                        rest.apply(&mut branch, angles)?;
                    }
                    *slot = measured
                        .iter()
                        .map(|&q| branch.expectation_z(q))
                        .collect::<Result<Vec<_>>>()?;
                }
                for (j, d) in jacobian[param].iter_mut().enumerate() {
                    *d += (shifted[0][j] - shifted[1][j]) / 2.0;
                }
            }
            op.apply(&mut state, angles)?;
        }
        let values = measured.iter().map(|&q| state.expectation_z(q)).collect::<Result<_>>()?;
        Ok((values, jacobian))
    }
}
