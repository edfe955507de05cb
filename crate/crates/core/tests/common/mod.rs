//! Dense-matrix reference implementation of the classifier circuit.
//!
//! Every gate is expanded to a full `2^n x 2^n` matrix with Kronecker
//! products and multiplied onto the state; nothing here goes through the
//! strided simulator.

#![allow(dead_code)]

use num_complex::Complex64 as C;
use qwmap_core::{EmbeddingKind, VqcModel};

pub type Matrix = Vec<Vec<C>>;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn identity(dim: usize) -> Matrix {
    (0..dim).map(|r| (0..dim).map(|col| if r == col { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()).collect()
}

pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    let (ra, rb) = (a.len(), b.len());
    let mut out = vec![vec![c(0.0, 0.0); ra * rb]; ra * rb];
    for i in 0..ra {
        for j in 0..ra {
            for k in 0..rb {
                for l in 0..rb {
                    out[i * rb + k][j * rb + l] = a[i][j] * b[k][l];
                }
            }
        }
    }
    out
}

pub fn matmul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = a.len();
    (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * b[k][j]).sum()).collect()).collect()
}

pub fn matvec(a: &Matrix, v: &[C]) -> Vec<C> {
    a.iter().map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum()).collect()
}

pub fn rx(t: f64) -> Matrix {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(0.0, -s)], vec![c(0.0, -s), c(co, 0.0)]]
}

pub fn ry(t: f64) -> Matrix {
    let (s, co) = (t / 2.0).sin_cos();
    vec![vec![c(co, 0.0), c(-s, 0.0)], vec![c(s, 0.0), c(co, 0.0)]]
}

pub fn rz(t: f64) -> Matrix {
    vec![vec![C::from_polar(1.0, -t / 2.0), c(0.0, 0.0)], vec![c(0.0, 0.0), C::from_polar(1.0, t / 2.0)]]
}

/// `gate` on qubit `q` of `n`; qubit 0 is the leftmost Kronecker factor.
pub fn on_qubit(n: usize, q: usize, gate: &Matrix) -> Matrix {
    let id2 = identity(2);
    let mut full = identity(1);
    for i in 0..n {
        full = kron(&full, if i == q { gate } else { &id2 });
    }
    full
}

pub fn cnot(n: usize, control: usize, target: usize) -> Matrix {
    let dim = 1 << n;
    let bit = |q: usize| 1usize << (n - 1 - q);
    let mut m = vec![vec![c(0.0, 0.0); dim]; dim];
    for (row, entries) in m.iter_mut().enumerate() {
        // CNOT is its own inverse, so the source column of `row` is found the same way
        let col = if row & bit(control) != 0 { row ^ bit(target) } else { row };
        entries[col] = c(1.0, 0.0);
    }
    m
}

pub fn expectation_z(state: &[C], n: usize, q: usize) -> f64 {
    state
        .iter()
        .enumerate()
        .map(|(i, a)| if (i >> (n - 1 - q)) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

fn normalized_padded(features: &[f64], dim: usize) -> Vec<f64> {
    let norm = features.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut v: Vec<f64> = features.iter().map(|x| x / norm).collect();
    v.resize(dim, 0.0);
    v
}

/// Reflection `I - 2 v v^T / v^T v` with `v = e0 - psi`.
fn householder(psi: &[f64]) -> Matrix {
    let mut v: Vec<f64> = psi.iter().map(|x| -x).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    let dim = psi.len();
    (0..dim)
        .map(|r| {
            (0..dim)
                .map(|col| {
                    let id = if r == col { 1.0 } else { 0.0 };
                    let refl = if vv > 1e-30 { 2.0 * v[r] * v[col] / vv } else { 0.0 };
                    c(id - refl, 0.0)
                })
                .collect()
        })
        .collect()
}

/// `<Z_j>` for the measured qubits of `model` on `features`.
pub fn model_expectations(model: &VqcModel, features: &[f64]) -> Vec<f64> {
    let n = model.n_qubits;
    let dim = 1 << n;
    let angles: Vec<f64> = model.weights.iter().map(|&w| model.remap.apply(w).unwrap()).collect();
    let emb_qubits = model.embedding.n_qubits;

    let encode: Matrix = match model.embedding.kind {
        EmbeddingKind::Angle => features
            .iter()
            .enumerate()
            .fold(identity(dim), |acc, (q, &x)| matmul(&on_qubit(n, q, &rx(x)), &acc)),
        EmbeddingKind::Amplitude => {
            let psi = normalized_padded(features, 1 << emb_qubits);
            kron(&householder(&psi), &identity(1 << (n - emb_qubits)))
        }
    };
    let mut state = vec![c(0.0, 0.0); dim];
    state[0] = c(1.0, 0.0);
    state = matvec(&encode, &state);

    for layer in 0..model.n_layers {
        if layer > 0 && model.reupload {
            state = matvec(&encode, &state);
        }
        let mut unitary = identity(dim);
        for q in 0..n {
            let w = |k: usize| angles[(layer * n + q) * 3 + k];
            let local = matmul(&rz(w(2)), &matmul(&ry(w(1)), &rz(w(0))));
            unitary = matmul(&on_qubit(n, q, &local), &unitary);
        }
        for i in 0..n {
            let t = (i + layer + 1) % n;
            if t != i {
                unitary = matmul(&cnot(n, i, t), &unitary);
            }
        }
        state = matvec(&unitary, &state);
    }
    (0..model.n_classes).map(|j| expectation_z(&state, n, j)).collect()
}
