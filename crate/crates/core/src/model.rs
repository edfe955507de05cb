//! The layered variational classifier.
//!
//! Circuit: embedding `S_x`, then `n_layers` layers `L_l`, each made of a
//! `RZ RY RZ` rotation triple per qubit followed by a ring of CNOTs with
//! target `(i + l) mod n`. With re-uploading, `S_x` is applied again before
//! every layer: `L_L S_x ... L_1 S_x |0...0>`. The first `n_classes` qubits
//! are measured in Z, a bias is added per class and a softmax yields class
//! probabilities.
//!
//! Every rotation weight passes through the model's [`RemapFunction`] before
//! it reaches a gate.

use std::f64::consts::PI;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, Op};
use crate::embedding::{EmbeddingKind, EmbeddingSpec, Reupload};
use crate::error::{Error, Result};
use crate::remap::RemapFunction;
use crate::statevector::{Gate, RotationAxis, StateVector, MAX_QUBITS};

const MODULE: &str = "model";

/// Rotation axes of the per-qubit triple, in application order.
pub const LAYER_AXES: [RotationAxis; 3] = [RotationAxis::Z, RotationAxis::Y, RotationAxis::Z];

/// Variational classifier parameters and architecture.
///
/// `weights` is stored row-major as `[layer][qubit][3]`; this is also the
/// layout of the `weights` array in checkpoint files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqcModel {
    pub embedding: EmbeddingSpec,
    /// Register width: the embedding's qubits, widened to `n_classes` if needed.
    pub n_qubits: usize,
    pub n_layers: usize,
    pub n_classes: usize,
    pub remap: RemapFunction,
    pub reupload: bool,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Forward {
    /// Softmax class probabilities.
    pub probs: Vec<f64>,
    /// Raw `<Z_j>` for the measured qubits.
    pub expectations: Vec<f64>,
}

impl Forward {
    pub fn predicted(&self) -> usize {
        argmax(&self.probs)
    }
}

impl VqcModel {
    /// Model with all weights and biases zero.
    pub fn new(
        embedding: EmbeddingSpec,
        n_classes: usize,
        n_layers: usize,
        remap: RemapFunction,
        reupload: bool,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::config(MODULE, "need at least one class"));
        }
        if n_layers == 0 {
            return Err(Error::config(MODULE, "need at least one layer"));
        }
        let n_qubits = embedding.n_qubits.max(n_classes);
        if n_qubits > MAX_QUBITS {
            return Err(Error::config(
                MODULE,
                format!("{n_qubits} qubits exceeds the simulator limit of {MAX_QUBITS}"),
            ));
        }
        if n_qubits > embedding.n_qubits {
            log::warn!(
                "{n_classes} classes exceed the {} embedding qubits; register widened to {n_qubits}",
                embedding.n_qubits
            );
        }
        Ok(VqcModel {
            embedding,
            n_qubits,
            n_layers,
            n_classes,
            remap,
            reupload,
            weights: vec![0.0; 3 * n_qubits * n_layers],
            biases: vec![0.0; n_classes],
        })
    }

    /// Rotation weights i.i.d. uniform on `[-pi, pi]`, biases zero.
    pub fn initialized<R: Rng>(
        embedding: EmbeddingSpec,
        n_classes: usize,
        n_layers: usize,
        remap: RemapFunction,
        reupload: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let mut model = Self::new(embedding, n_classes, n_layers, remap, reupload)?;
        for w in &mut model.weights {
            *w = rng.gen_range(-PI..=PI);
        }
        Ok(model)
    }

    /// `3 * n_qubits * n_layers + n_classes`
    pub fn parameter_count(&self) -> usize {
        self.weights.len() + self.biases.len()
    }

    pub fn weight_index(&self, layer: usize, qubit: usize, k: usize) -> usize {
        (layer * self.n_qubits + qubit) * 3 + k
    }

    /// Rotation weights after re-mapping, as the gates see them.
    pub fn mapped_weights(&self) -> Result<Vec<f64>> {
        self.weights.iter().map(|&w| self.remap.apply(w)).collect()
    }

    fn reupload_op(&self, features: &[f64]) -> Result<Option<Reupload>> {
        if self.reupload && self.n_layers > 1 {
            self.embedding.reupload_op(features).map(Some)
        } else {
            Ok(None)
        }
    }

    /// Ops after the initial embedding; rotation slots index into the flat
    /// weight vector.
    fn circuit<'a>(&self, reupload: Option<&'a Reupload>) -> Circuit<'a> {
        let n = self.n_qubits;
        let mut ops = Vec::with_capacity(self.n_layers * 4 * n);
        for layer in 0..self.n_layers {
            if layer > 0 {
                if let Some(r) = reupload {
                    ops.push(Op::Reupload(r));
                }
            }
            for qubit in 0..n {
                for (k, axis) in LAYER_AXES.into_iter().enumerate() {
                    ops.push(Op::Param { axis, qubit, param: self.weight_index(layer, qubit, k) });
                }
            }
            ops.extend(entangler_pairs(n, layer + 1).into_iter().map(|(c, t)| Op::Fixed(Gate::cnot(c, t))));
        }
        Circuit::new(ops)
    }

    fn measured(&self) -> Vec<usize> {
        (0..self.n_classes).collect()
    }

    /// Measured expectations with the rotation gates fed `angles` verbatim.
    pub fn expectations_with_angles(&self, features: &[f64], angles: &[f64]) -> Result<Vec<f64>> {
        let initial = self.embedding.prepare(features, self.n_qubits)?;
        let reupload = self.reupload_op(features)?;
        self.circuit(reupload.as_ref()).expectations(initial, angles, &self.measured())
    }

    pub fn forward(&self, features: &[f64]) -> Result<Forward> {
        let angles = self.mapped_weights()?;
        let expectations = self.expectations_with_angles(features, &angles)?;
        let probs = self.head(&expectations);
        Ok(Forward { probs, expectations })
    }

    pub(crate) fn head(&self, expectations: &[f64]) -> Vec<f64> {
        let logits: Vec<f64> = expectations.iter().zip(&self.biases).map(|(e, b)| e + b).collect();
        softmax(&logits)
    }

    /// Expectations and `d<Z_j>/d phi(theta_p)` for every rotation weight,
    /// by parameter shift on the mapped angles.
    pub fn expectation_jacobian(&self, features: &[f64]) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let angles = self.mapped_weights()?;
        let initial = self.embedding.prepare(features, self.n_qubits)?;
        let reupload = self.reupload_op(features)?;
        self.circuit(reupload.as_ref()).parameter_shift(initial, &angles, &self.measured())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::format(path, e.to_string()))?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let model: VqcModel =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        model.validate().map_err(|e| Error::format(path, e.to_string()))?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        let fresh = VqcModel::new(self.embedding, self.n_classes, self.n_layers, self.remap, self.reupload)?;
        if fresh.n_qubits != self.n_qubits
            || fresh.weights.len() != self.weights.len()
            || fresh.biases.len() != self.biases.len()
        {
            return Err(Error::config(MODULE, "checkpoint shape does not match its architecture"));
        }
        Ok(())
    }

    /// The embedding kind, for labelling.
    pub fn embedding_kind(&self) -> EmbeddingKind {
        self.embedding.kind
    }
}

/// CNOT `(control, target)` pairs of layer `layer_index` (1-based) on `n`
/// qubits: control `i`, target `(i + l) mod n`, skipping self-loops.
pub fn entangler_pairs(n: usize, layer_index: usize) -> Vec<(usize, usize)> {
    (0..n)
        .map(|i| (i, (i + layer_index) % n))
        .filter(|(c, t)| c != t)
        .collect()
}

/// Applies one variational layer with already re-mapped weights
/// `layer_weights[qubit] = [rz, ry, rz]`.
pub fn apply_layer(
    state: &mut StateVector,
    layer_weights: &[[f64; 3]],
    layer_index: usize,
) -> Result<()> {
    if layer_index < 1 {
        return Err(Error::config(MODULE, "layer index starts at 1"));
    }
    let n = state.n_qubits();
    if layer_weights.len() != n {
        return Err(Error::config(
            MODULE,
            format!("{} weight triples for {n} qubits", layer_weights.len()),
        ));
    }
    for (qubit, triple) in layer_weights.iter().enumerate() {
        for (axis, &angle) in LAYER_AXES.into_iter().zip(triple) {
            state.apply(&Gate::Rotation { axis, qubit, angle })?;
        }
    }
    for (c, t) in entangler_pairs(n, layer_index) {
        state.apply(&Gate::cnot(c, t))?;
    }
    Ok(())
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the first maximum.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
