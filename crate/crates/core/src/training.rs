//! Loss, gradients, SGD and the epoch loop.
//!
//! VQC gradients use the parameter-shift rule on the re-mapped angle
//! `phi(theta)` and multiply by `phi'(theta)`:
//!
//! ```text
//! dL/dtheta = phi'(theta) * sum_j dL/de_j * (e_j(phi + pi/2) - e_j(phi - pi/2)) / 2
//! ```
//!
//! The softmax head is differentiated classically, `dL/de_j = dL/db_j = p_j - [j == y]`.
//! SGD updates the raw weights; re-mapping only ever happens in the forward pass.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{Split, SplitData};
use crate::embedding::EmbeddingKind;
use crate::error::{Error, Result};
use crate::mlp::MlpModel;
use crate::model::VqcModel;
use crate::remap::RemapFunction;
use crate::seeding::{rng_for, RngStream};

const MODULE: &str = "training";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainingConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub n_epochs: usize,
    pub seed: u64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig { learning_rate: 0.01, batch_size: 5, n_epochs: 30, seed: 0 }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config(MODULE, format!("learning rate {} must be positive", self.learning_rate)));
        }
        if self.batch_size == 0 {
            return Err(Error::config(MODULE, "batch size must be at least 1"));
        }
        if self.n_epochs == 0 {
            return Err(Error::config(MODULE, "need at least one epoch"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Vqc,
    Mlp,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Vqc => "vqc",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "vqc" => Ok(ModelKind::Vqc),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::config(MODULE, format!("unknown model '{other}' (expected vqc or mlp)"))),
        }
    }
}

/// Identity of a training run.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RunKey {
    pub dataset: String,
    pub embedding: EmbeddingKind,
    pub remap: RemapFunction,
    pub reupload: bool,
    pub model: ModelKind,
    pub seed: u64,
}

impl RunKey {
    /// Table label: `VQC`, `VQC-tanh`, `VQC-tanh-reupload`, `MLP`.
    pub fn approach(&self) -> String {
        match self.model {
            ModelKind::Mlp => "MLP".to_string(),
            ModelKind::Vqc if self.reupload => format!("{}-reupload", self.remap.approach_label()),
            ModelKind::Vqc => self.remap.approach_label(),
        }
    }

    /// File-name stem, unique per key.
    pub fn stem(&self) -> String {
        match self.model {
            ModelKind::Mlp => format!("{}__mlp__seed{}", self.dataset, self.seed),
            ModelKind::Vqc => format!(
                "{}__{}__{}{}__seed{}",
                self.dataset,
                self.embedding,
                self.remap,
                if self.reupload { "-reupload" } else { "" },
                self.seed
            ),
        }
    }
}

/// Per-epoch curves and the final test result of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainRecord {
    pub key: RunKey,
    pub train_loss: Vec<f64>,
    pub train_acc: Vec<f64>,
    pub valid_loss: Vec<f64>,
    pub valid_acc: Vec<f64>,
    pub test_acc: f64,
    /// Per test sample: was the prediction correct.
    pub test_correct: Vec<bool>,
    /// Largest `|theta|` of any raw rotation weight over the whole run,
    /// initial weights included. Zero for models without rotation weights.
    pub max_abs_weight: f64,
}

impl TrainRecord {
    pub fn n_epochs(&self) -> usize {
        self.valid_loss.len()
    }

    /// True when every raw rotation weight stayed inside `[-pi, pi]`.
    pub fn weights_stayed_in_domain(&self) -> bool {
        self.max_abs_weight <= std::f64::consts::PI
    }
}

/// `-ln(probs[label])`
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or_else(|| {
        Error::index(MODULE, format!("label {label} for {} classes", probs.len()))
    })?;
    Ok(-p.max(f64::MIN_POSITIVE).ln())
}

/// Gradient of the per-sample loss with the model's parameter layout.
#[derive(Debug, Clone, PartialEq)]
pub struct VqcGradient {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl VqcGradient {
    pub fn to_flat(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.biases).copied().collect()
    }
}

/// Chains `dL/de` through a circuit Jacobian taken at the mapped angles and
/// through the re-mapping derivative at the raw weights.
pub fn chain_through_remap(
    remap: RemapFunction,
    raw_weights: &[f64],
    jacobian: &[Vec<f64>],
    dloss_dexp: &[f64],
) -> Result<Vec<f64>> {
    raw_weights
        .iter()
        .zip(jacobian)
        .map(|(&w, row)| {
            let d_angle: f64 = row.iter().zip(dloss_dexp).map(|(j, g)| j * g).sum();
            Ok(remap.derivative(w)? * d_angle)
        })
        .collect()
}

/// Loss and exact gradient for one sample.
pub fn vqc_gradient(model: &VqcModel, features: &[f64], label: usize) -> Result<(f64, VqcGradient)> {
    if label >= model.n_classes {
        return Err(Error::index(MODULE, format!("label {label} for {} classes", model.n_classes)));
    }
    let (expectations, jacobian) = model.expectation_jacobian(features)?;
    let probs = model.head(&expectations);
    let loss = cross_entropy(&probs, label)?;
    let dlogits: Vec<f64> = probs
        .iter()
        .enumerate()
        .map(|(j, p)| p - if j == label { 1.0 } else { 0.0 })
        .collect();
    let weights = chain_through_remap(model.remap, &model.weights, &jacobian, &dlogits)?;
    Ok((loss, VqcGradient { weights, biases: dlogits }))
}

/// `params -= lr * mean(batch_grads)`.
pub fn sgd_step(params: &mut [f64], batch_grads: &[Vec<f64>], learning_rate: f64) -> Result<()> {
    if batch_grads.is_empty() {
        return Err(Error::config(MODULE, "empty gradient batch"));
    }
    if let Some(g) = batch_grads.iter().find(|g| g.len() != params.len()) {
        return Err(Error::config(
            MODULE,
            format!("gradient of length {} for {} parameters", g.len(), params.len()),
        ));
    }
    let scale = learning_rate / batch_grads.len() as f64;
    for (i, p) in params.iter_mut().enumerate() {
        let sum: f64 = batch_grads.iter().map(|g| g[i]).sum();
        *p -= scale * sum;
    }
    Ok(())
}

/// Result of evaluating one sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub loss: f64,
    pub correct: bool,
}

/// Anything the epoch loop can train.
pub trait Classifier: Clone + Send + Sync {
    fn evaluate(&self, features: &[f64], label: usize) -> Result<Evaluation>;
    /// Flat per-sample gradient in [`Classifier::params`] order.
    fn gradient(&self, features: &[f64], label: usize) -> Result<Vec<f64>>;
    fn params(&self) -> Vec<f64>;
    fn set_params(&mut self, params: &[f64]) -> Result<()>;
    /// Raw rotation weights, if the model has any.
    fn rotation_weights(&self) -> &[f64] {
        &[]
    }
}

impl Classifier for VqcModel {
    fn evaluate(&self, features: &[f64], label: usize) -> Result<Evaluation> {
        let f = self.forward(features)?;
        Ok(Evaluation { loss: cross_entropy(&f.probs, label)?, correct: f.predicted() == label })
    }

    fn gradient(&self, features: &[f64], label: usize) -> Result<Vec<f64>> {
        Ok(vqc_gradient(self, features, label)?.1.to_flat())
    }

    fn params(&self) -> Vec<f64> {
        self.weights.iter().chain(&self.biases).copied().collect()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.parameter_count() {
            return Err(Error::config(MODULE, "parameter vector length mismatch"));
        }
        let (w, b) = params.split_at(self.weights.len());
        self.weights.copy_from_slice(w);
        self.biases.copy_from_slice(b);
        Ok(())
    }

    fn rotation_weights(&self) -> &[f64] {
        &self.weights
    }
}

impl Classifier for MlpModel {
    fn evaluate(&self, features: &[f64], label: usize) -> Result<Evaluation> {
        let p = self.forward(features)?;
        let predicted = usize::from(p >= 0.5);
        Ok(Evaluation { loss: self.loss(features, label)?, correct: predicted == label })
    }

    fn gradient(&self, features: &[f64], label: usize) -> Result<Vec<f64>> {
        Ok(self.backward(features, label)?.1.to_flat())
    }

    fn params(&self) -> Vec<f64> {
        self.to_flat()
    }

    fn set_params(&mut self, params: &[f64]) -> Result<()> {
        *self = MlpModel::from_flat(params)?;
        Ok(())
    }
}

/// Mean loss and accuracy over a split plus per-sample correctness.
pub fn evaluate_split<M: Classifier>(model: &M, split: &Split) -> Result<(f64, f64, Vec<bool>)> {
    if split.is_empty() {
        return Err(Error::config(MODULE, "cannot evaluate an empty split"));
    }
    let evals: Vec<Evaluation> = split
        .features
        .par_iter()
        .zip(split.labels.par_iter())
        .map(|(x, &y)| model.evaluate(x, y))
        .collect::<Result<_>>()?;
    let n = evals.len() as f64;
    let loss = evals.iter().map(|e| e.loss).sum::<f64>() / n;
    let correct: Vec<bool> = evals.iter().map(|e| e.correct).collect();
    let acc = correct.iter().filter(|&&c| c).count() as f64 / n;
    Ok((loss, acc, correct))
}

fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// Trains `model` in place and returns the run record.
///
/// Each epoch shuffles the training split with the run's shuffle stream,
/// takes SGD steps on consecutive batches (the last one may be short), then
/// evaluates the full training and validation splits. Per-sample gradients
/// may be computed in parallel; they are reduced in sample order, so the
/// result is independent of the thread count.
pub fn train<M: Classifier>(
    model: &mut M,
    splits: &SplitData,
    config: &TrainingConfig,
    key: RunKey,
) -> Result<TrainRecord> {
    config.validate()?;
    for (name, split) in [("train", &splits.train), ("valid", &splits.valid), ("test", &splits.test)] {
        if split.is_empty() {
            return Err(Error::config(MODULE, format!("{name} split is empty")));
        }
    }
    let mut rng = rng_for(config.seed, RngStream::Shuffle);
    let mut order: Vec<usize> = (0..splits.train.len()).collect();
    let mut record = TrainRecord {
        key,
        train_loss: Vec::with_capacity(config.n_epochs),
        train_acc: Vec::with_capacity(config.n_epochs),
        valid_loss: Vec::with_capacity(config.n_epochs),
        valid_acc: Vec::with_capacity(config.n_epochs),
        test_acc: 0.0,
        test_correct: Vec::new(),
        max_abs_weight: max_abs(model.rotation_weights()),
    };
    let mut params = model.params();

    for epoch in 0..config.n_epochs {
        order.shuffle(&mut rng);
        for batch in order.chunks(config.batch_size) {
            let current: &M = model;
            let grads: Vec<Vec<f64>> = batch
                .par_iter()
                .map(|&i| current.gradient(&splits.train.features[i], splits.train.labels[i]))
                .collect::<Result<_>>()?;
            sgd_step(&mut params, &grads, config.learning_rate)?;
            model.set_params(&params)?;
            record.max_abs_weight = record.max_abs_weight.max(max_abs(model.rotation_weights()));
        }
        let (tl, ta, _) = evaluate_split(model, &splits.train)?;
        let (vl, va, _) = evaluate_split(model, &splits.valid)?;
        log::debug!("{} epoch {}: train {tl:.4}/{ta:.3} valid {vl:.4}/{va:.3}", record.key.stem(), epoch + 1);
        record.train_loss.push(tl);
        record.train_acc.push(ta);
        record.valid_loss.push(vl);
        record.valid_acc.push(va);
    }
    let (_, test_acc, test_correct) = evaluate_split(model, &splits.test)?;
    record.test_acc = test_acc;
    record.test_correct = test_correct;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{Circuit, Op};
    use crate::embedding::EmbeddingSpec;
    use crate::statevector::{RotationAxis, StateVector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn cross_entropy_examples() {
        assert!((cross_entropy(&[0.5, 0.5], 0).unwrap() - 2f64.ln()).abs() < 1e-15);
        let eps = 1e-9;
        assert!((cross_entropy(&[1.0 - eps, eps], 0).unwrap() - eps).abs() < 1e-15);
        assert!((cross_entropy(&[0.1, 0.9], 0).unwrap() - 10f64.ln()).abs() < 1e-14);
        assert!(cross_entropy(&[0.5, 0.5], 2).is_err());
    }

    #[test]
    fn sgd_examples() {
        let mut p = vec![1.0, -2.0];
        sgd_step(&mut p, &[vec![0.0, 0.0]], 0.5).unwrap();
        assert_eq!(p, vec![1.0, -2.0]);
        let mut p = vec![1.0];
        sgd_step(&mut p, &[vec![2.0]], 0.01).unwrap();
        assert!((p[0] - 0.98).abs() < 1e-15);
        let mut p = vec![1.0];
        sgd_step(&mut p, &[vec![1.0], vec![3.0]], 0.01).unwrap();
        assert!((p[0] - 0.98).abs() < 1e-15);
        assert!(sgd_step(&mut p, &[vec![1.0, 2.0]], 0.01).is_err());
        assert!(sgd_step(&mut p, &[], 0.01).is_err());
    }

    #[test]
    fn config_validation() {
        assert!(TrainingConfig::default().validate().is_ok());
        assert!(TrainingConfig { learning_rate: 0.0, ..Default::default() }.validate().is_err());
        assert!(TrainingConfig { batch_size: 0, ..Default::default() }.validate().is_err());
        assert!(TrainingConfig { n_epochs: 0, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn toy_rx_gradient_is_sine() {
        // L = 1 - <Z> after RX(theta) on |0>, identity remap: dL/dtheta = sin(theta).
        let circuit = Circuit::new(vec![Op::Param { axis: RotationAxis::X, qubit: 0, param: 0 }]);
        for theta in [-2.5, -1.0, 0.2, 1.3, 3.0] {
            let (_, jac) = circuit.parameter_shift(StateVector::zero(1).unwrap(), &[theta], &[0]).unwrap();
            let g = chain_through_remap(RemapFunction::Identity, &[theta], &jac, &[-1.0]).unwrap();
            assert!((g[0] - theta.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn clamp_outside_domain_has_zero_gradient() {
        let spec = EmbeddingSpec::new(EmbeddingKind::Angle, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = VqcModel::initialized(spec, 2, 2, RemapFunction::Clamp, false, &mut rng).unwrap();
        m.weights[4] = 5.0;
        let (_, g) = vqc_gradient(&m, &[0.4, 1.1], 1).unwrap();
        assert_eq!(g.weights[4], 0.0);
        assert!(g.weights.iter().any(|&v| v != 0.0));
    }

    fn full_loss(m: &VqcModel, x: &[f64], y: usize) -> f64 {
        cross_entropy(&m.forward(x).unwrap().probs, y).unwrap()
    }

    #[test]
    fn gradient_matches_finite_differences_for_every_remap() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let h = 1e-5;
        for kind in EmbeddingKind::ALL {
            let spec = EmbeddingSpec::new(kind, if kind == EmbeddingKind::Angle { 2 } else { 4 }).unwrap();
            for reupload in [false, true] {
                for remap in RemapFunction::ALL {
                    let mut m = VqcModel::initialized(spec, 2, 2, remap, reupload, &mut rng).unwrap();
                    m.biases = vec![rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)];
                    let x: Vec<f64> = (0..spec.n_features).map(|_| rng.gen_range(0.05..3.0)).collect();
                    let y = rng.gen_range(0..2);
                    let (_, g) = vqc_gradient(&m, &x, y).unwrap();
                    let flat = g.to_flat();
                    let params = m.params();
                    for (i, analytic) in flat.iter().enumerate() {
                        let mut plus = m.clone();
                        let mut p = params.clone();
                        p[i] += h;
                        plus.set_params(&p).unwrap();
                        let mut minus = m.clone();
                        p[i] -= 2.0 * h;
                        minus.set_params(&p).unwrap();
                        let fd = (full_loss(&plus, &x, y) - full_loss(&minus, &x, y)) / (2.0 * h);
                        assert!(
                            (analytic - fd).abs() < 1e-4,
                            "{kind} reupload={reupload} {remap} param {i}: {analytic} vs {fd}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn run_key_labels() {
        let key = RunKey {
            dataset: "iris".into(),
            embedding: EmbeddingKind::Angle,
            remap: RemapFunction::Tanh,
            reupload: true,
            model: ModelKind::Vqc,
            seed: 3,
        };
        assert_eq!(key.approach(), "VQC-tanh-reupload");
        assert_eq!(key.stem(), "iris__angle__tanh-reupload__seed3");
        let mlp = RunKey { model: ModelKind::Mlp, ..key };
        assert_eq!(mlp.approach(), "MLP");
        assert_eq!("MLP".parse::<ModelKind>().unwrap(), ModelKind::Mlp);
        assert!("svm".parse::<ModelKind>().is_err());
    }
}
