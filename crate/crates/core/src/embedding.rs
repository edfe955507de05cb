//! Classical-to-quantum feature encodings.
//!
//! * Angle embedding: feature `i` becomes an `RX(x_i)` on qubit `i`.
//! * Amplitude embedding: the feature vector, zero-padded to `2^n` entries and
//!   L2-normalized, becomes the amplitude vector of an `n`-qubit register.
//!
//! When the circuit register is wider than the embedding (extra measurement
//! qubits), the embedding acts on the leading qubits and the rest stay `|0>`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::statevector::{Gate, StateVector, MAX_QUBITS};

const MODULE: &str = "embedding";

/// Largest amplitude-embedding register for which re-uploading is supported;
/// re-uploading applies a dense `2^k x 2^k` preparation unitary.
pub const MAX_AMPLITUDE_REUPLOAD_QUBITS: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Angle,
    Amplitude,
}

impl EmbeddingKind {
    pub const ALL: [EmbeddingKind; 2] = [EmbeddingKind::Angle, EmbeddingKind::Amplitude];

    pub fn name(self) -> &'static str {
        match self {
            EmbeddingKind::Angle => "angle",
            EmbeddingKind::Amplitude => "amplitude",
        }
    }
}

impl fmt::Display for EmbeddingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EmbeddingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "angle" => Ok(EmbeddingKind::Angle),
            "amplitude" => Ok(EmbeddingKind::Amplitude),
            other => Err(Error::config(
                MODULE,
                format!("unknown embedding '{other}' (expected angle or amplitude)"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub kind: EmbeddingKind,
    pub n_features: usize,
    /// Qubits the embedding itself occupies.
    pub n_qubits: usize,
}

impl EmbeddingSpec {
    pub fn new(kind: EmbeddingKind, n_features: usize) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::config(MODULE, "embedding needs at least one feature"));
        }
        let n_qubits = match kind {
            EmbeddingKind::Angle => n_features,
            EmbeddingKind::Amplitude => amplitude_qubits(n_features),
        };
        if n_qubits > MAX_QUBITS {
            return Err(Error::config(
                MODULE,
                format!("{n_features} features need {n_qubits} qubits (max {MAX_QUBITS})"),
            ));
        }
        Ok(EmbeddingSpec { kind, n_features, n_qubits })
    }

    fn check_features(&self, features: &[f64]) -> Result<()> {
        if features.len() != self.n_features {
            return Err(Error::config(
                MODULE,
                format!("got {} features, embedding expects {}", features.len(), self.n_features),
            ));
        }
        Ok(())
    }

    /// Prepares the embedded state on a register of `register_qubits`
    /// (`>= self.n_qubits`), starting from `|0...0>`.
    pub fn prepare(&self, features: &[f64], register_qubits: usize) -> Result<StateVector> {
        self.check_features(features)?;
        if register_qubits < self.n_qubits {
            return Err(Error::config(
                MODULE,
                format!("register of {register_qubits} qubits cannot hold a {}-qubit embedding", self.n_qubits),
            ));
        }
        match self.kind {
            EmbeddingKind::Angle => {
                let mut state = StateVector::zero(register_qubits)?;
                apply_angle_gates(&mut state, features)?;
                Ok(state)
            }
            EmbeddingKind::Amplitude => {
                let amps = padded_normalized(features, self.n_qubits)?;
                let inner = 1usize << (register_qubits - self.n_qubits);
                let mut full = vec![Complex64::new(0.0, 0.0); 1 << register_qubits];
                for (k, a) in amps.into_iter().enumerate() {
                    full[k * inner] = Complex64::new(a, 0.0);
                }
                StateVector::from_amplitudes(register_qubits, full)
            }
        }
    }

    /// Builds the operator that re-uploads `features` onto an arbitrary
    /// current state.
    pub fn reupload_op(&self, features: &[f64]) -> Result<Reupload> {
        self.check_features(features)?;
        match self.kind {
            EmbeddingKind::Angle => Ok(Reupload::Gates(
                features.iter().enumerate().map(|(q, &x)| Gate::rx(q, x)).collect(),
            )),
            EmbeddingKind::Amplitude => {
                if self.n_qubits > MAX_AMPLITUDE_REUPLOAD_QUBITS {
                    return Err(Error::config(
                        MODULE,
                        format!(
                            "amplitude re-uploading supports at most {MAX_AMPLITUDE_REUPLOAD_QUBITS} embedding qubits, got {}",
                            self.n_qubits
                        ),
                    ));
                }
                let psi = padded_normalized(features, self.n_qubits)?;
                Ok(Reupload::Block { qubits: self.n_qubits, matrix: householder_preparation(&psi) })
            }
        }
    }
}

/// A re-upload step of the data-encoding circuit.
#[derive(Debug, Clone, PartialEq)]
pub enum Reupload {
    Gates(Vec<Gate>),
    /// Dense unitary on the leading `qubits` of the register.
    Block { qubits: usize, matrix: Vec<Complex64> },
}

impl Reupload {
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            Reupload::Gates(gates) => gates.iter().try_for_each(|g| state.apply(g)),
            Reupload::Block { qubits, matrix } => state.apply_leading(*qubits, matrix),
        }
    }
}

/// `ceil(log2(max(n_features, 2)))`
pub fn amplitude_qubits(n_features: usize) -> usize {
    let n = n_features.max(2);
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

/// Angle embedding on its own register: `prod_i RX(x_i)|0...0>`.
pub fn embed_angle(features: &[f64]) -> Result<StateVector> {
    EmbeddingSpec::new(EmbeddingKind::Angle, features.len())?.prepare(features, features.len())
}

/// Amplitude embedding on `ceil(log2(max(len, 2)))` qubits.
pub fn embed_amplitude(features: &[f64]) -> Result<StateVector> {
    let spec = EmbeddingSpec::new(EmbeddingKind::Amplitude, features.len())?;
    spec.prepare(features, spec.n_qubits)
}

fn apply_angle_gates(state: &mut StateVector, features: &[f64]) -> Result<()> {
    for (q, &x) in features.iter().enumerate() {
        if !x.is_finite() {
            return Err(Error::numeric(MODULE, format!("feature {q} is {x}")));
        }
        state.apply(&Gate::rx(q, x))?;
    }
    Ok(())
}

/// Zero-pads to `2^n_qubits` entries and L2-normalizes.
pub fn padded_normalized(features: &[f64], n_qubits: usize) -> Result<Vec<f64>> {
    let dim = 1usize << n_qubits;
    if features.len() > dim {
        return Err(Error::config(
            MODULE,
            format!("{} features do not fit {n_qubits} qubits", features.len()),
        ));
    }
    if let Some(bad) = features.iter().find(|x| !x.is_finite()) {
        return Err(Error::numeric(MODULE, format!("non-finite feature {bad}")));
    }
    let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(Error::degenerate(MODULE, "all-zero feature vector cannot be normalized"));
    }
    let mut out = vec![0.0; dim];
    for (o, x) in out.iter_mut().zip(features) {
        *o = x / norm;
    }
    Ok(out)
}

/// Real orthogonal (hence unitary) Householder reflection whose first column
/// is `psi`, i.e. it maps `|0...0>` to `psi`. Returned row-major.
fn householder_preparation(psi: &[f64]) -> Vec<Complex64> {
    let dim = psi.len();
    // v = e0 - psi, H = I - 2 v v^T / (v^T v)
    let mut v: Vec<f64> = psi.iter().map(|x| -x).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let mut matrix = vec![Complex64::new(0.0, 0.0); dim * dim];
    for r in 0..dim {
        for c in 0..dim {
            let id = if r == c { 1.0 } else { 0.0 };
            let refl = if vv > 1e-30 { 2.0 * v[r] * v[c] / vv } else { 0.0 };
            matrix[r * dim + c] = Complex64::new(id - refl, 0.0);
        }
    }
    matrix
}
