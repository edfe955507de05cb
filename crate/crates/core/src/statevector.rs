//! Dense statevector simulation.
//!
//! Basis-state indices use big-endian qubit order: qubit 0 is the most
//! significant bit of the index, so `|q0 q1 ... q(n-1)>` reads top-to-bottom
//! like a circuit diagram. Embedding, layers and measurement all rely on it.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest register the simulator accepts (2^16 amplitudes).
pub const MAX_QUBITS: usize = 16;

const MODULE: &str = "statevector";

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Axis of a single-qubit rotation `exp(-i angle P / 2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RotationAxis {
    X,
    Y,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    Rotation { axis: RotationAxis, qubit: usize, angle: f64 },
    Cnot { control: usize, target: usize },
}

impl Gate {
    pub fn rx(qubit: usize, angle: f64) -> Self {
        Gate::Rotation { axis: RotationAxis::X, qubit, angle }
    }

    pub fn ry(qubit: usize, angle: f64) -> Self {
        Gate::Rotation { axis: RotationAxis::Y, qubit, angle }
    }

    pub fn rz(qubit: usize, angle: f64) -> Self {
        Gate::Rotation { axis: RotationAxis::Z, qubit, angle }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Gate::Cnot { control, target }
    }

    /// The gate undoing this one: negated angle for rotations, CNOT itself.
    pub fn inverse(&self) -> Self {
        match *self {
            Gate::Rotation { axis, qubit, angle } => Gate::Rotation { axis, qubit, angle: -angle },
            cnot @ Gate::Cnot { .. } => cnot,
        }
    }

    /// Checks the gate's qubit indices against a register of `n_qubits`.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        match *self {
            Gate::Rotation { qubit, .. } if qubit >= n_qubits => Err(Error::index(
                MODULE,
                format!("rotation on qubit {qubit} of a {n_qubits}-qubit register"),
            )),
            Gate::Cnot { control, target } if control >= n_qubits || target >= n_qubits => {
                Err(Error::index(
                    MODULE,
                    format!("CNOT({control}->{target}) on a {n_qubits}-qubit register"),
                ))
            }
            Gate::Cnot { control, target } if control == target => Err(Error::index(
                MODULE,
                format!("CNOT control and target are both qubit {control}"),
            )),
            _ => Ok(()),
        }
    }
}

/// 2x2 matrix of a rotation, row-major.
pub fn rotation_matrix(axis: RotationAxis, angle: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        RotationAxis::X => [
            [Complex64::new(c, 0.0), Complex64::new(0.0, -s)],
            [Complex64::new(0.0, -s), Complex64::new(c, 0.0)],
        ],
        RotationAxis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        RotationAxis::Z => [
            [Complex64::new(c, -s), ZERO],
            [ZERO, Complex64::new(c, s)],
        ],
    }
}

/// State of an n-qubit register as 2^n complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        check_register_size(n_qubits)?;
        let mut amplitudes = vec![ZERO; 1 << n_qubits];
        amplitudes[0] = ONE;
        Ok(StateVector { n_qubits, amplitudes })
    }

    /// Wraps an amplitude vector. The length must be `2^n_qubits` and the
    /// vector must be normalized to within 1e-10.
    pub fn from_amplitudes(n_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self> {
        check_register_size(n_qubits)?;
        if amplitudes.len() != 1 << n_qubits {
            return Err(Error::config(
                MODULE,
                format!("{} amplitudes for {n_qubits} qubits", amplitudes.len()),
            ));
        }
        let state = StateVector { n_qubits, amplitudes };
        let norm = state.norm_sqr();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::numeric(MODULE, format!("state has squared norm {norm}")));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    /// Consuming variant of [`StateVector::apply`].
    pub fn applied(mut self, gate: &Gate) -> Result<Self> {
        self.apply(gate)?;
        Ok(self)
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        match *gate {
            Gate::Rotation { axis: RotationAxis::Z, qubit, angle } => {
                let (s, c) = (angle / 2.0).sin_cos();
                let lo = Complex64::new(c, -s);
                let hi = Complex64::new(c, s);
                let stride = self.stride(qubit);
                for_each_pair(&mut self.amplitudes, stride, |a, b| {
                    *a *= lo;
                    *b *= hi;
                });
            }
            Gate::Rotation { axis, qubit, angle } => {
                let [[m00, m01], [m10, m11]] = rotation_matrix(axis, angle);
                let stride = self.stride(qubit);
                for_each_pair(&mut self.amplitudes, stride, |a, b| {
                    let (x, y) = (*a, *b);
                    *a = m00 * x + m01 * y;
                    *b = m10 * x + m11 * y;
                });
            }
            Gate::Cnot { control, target } => {
                let cmask = self.stride(control);
                let tmask = self.stride(target);
                for i in 0..self.amplitudes.len() {
                    if i & cmask != 0 && i & tmask == 0 {
                        self.amplitudes.swap(i, i | tmask);
                    }
                }
            }
        }
    }

    /// Applies a `2^k x 2^k` row-major matrix to the `k` leading qubits
    /// (qubits `0..k`), leaving the remaining qubits untouched.
    pub fn apply_leading(&mut self, k: usize, matrix: &[Complex64]) -> Result<()> {
        if k == 0 || k > self.n_qubits {
            return Err(Error::index(
                MODULE,
                format!("{k}-qubit block on a {}-qubit register", self.n_qubits),
            ));
        }
        let dim = 1 << k;
        if matrix.len() != dim * dim {
            return Err(Error::config(
                MODULE,
                format!("block matrix has {} entries, expected {}", matrix.len(), dim * dim),
            ));
        }
        let inner = 1 << (self.n_qubits - k);
        let mut column = vec![ZERO; dim];
        for lo in 0..inner {
            for (hi, c) in column.iter_mut().enumerate() {
                *c = self.amplitudes[hi * inner + lo];
            }
            for row in 0..dim {
                let coeffs = &matrix[row * dim..(row + 1) * dim];
                self.amplitudes[row * inner + lo] =
                    coeffs.iter().zip(&column).map(|(m, c)| m * c).sum();
            }
        }
        Ok(())
    }

    /// `<Z>` on `qubit`.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        if qubit >= self.n_qubits {
            return Err(Error::index(
                MODULE,
                format!("measuring qubit {qubit} of a {}-qubit register", self.n_qubits),
            ));
        }
        Ok(self.expectation_z_unchecked(qubit))
    }

    pub(crate) fn expectation_z_unchecked(&self, qubit: usize) -> f64 {
        let mask = self.stride(qubit);
        let value: f64 = self
            .amplitudes
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == 0 { a.norm_sqr() } else { -a.norm_sqr() })
            .sum();
        value.clamp(-1.0, 1.0)
    }

    /// Bit mask of `qubit` in a basis-state index.
    fn stride(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }
}

fn check_register_size(n_qubits: usize) -> Result<()> {
    if (1..=MAX_QUBITS).contains(&n_qubits) {
        Ok(())
    } else {
        Err(Error::config(
            MODULE,
            format!("register size {n_qubits} outside 1..={MAX_QUBITS}"),
        ))
    }
}

/// Calls `f` on every amplitude pair that differs only in the bit `stride`.
#[inline]
fn for_each_pair(
    amplitudes: &mut [Complex64],
    stride: usize,
    mut f: impl FnMut(&mut Complex64, &mut Complex64),
) {
    for block in amplitudes.chunks_exact_mut(2 * stride) {
        let (zeros, ones) = block.split_at_mut(stride);
        for (a, b) in zeros.iter_mut().zip(ones.iter_mut()) {
            f(a, b);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_close(a: &[Complex64], b: &[Complex64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).norm() < tol, "{x} vs {y}");
        }
    }

    #[test]
    fn zero_state_shapes() {
        assert_eq!(StateVector::zero(1).unwrap().amplitudes(), &[ONE, ZERO]);
        assert_eq!(StateVector::zero(2).unwrap().amplitudes(), &[ONE, ZERO, ZERO, ZERO]);
        assert!(matches!(StateVector::zero(17), Err(Error::Config { .. })));
        assert!(StateVector::zero(0).is_err());
    }

    #[test]
    fn rx_pi_flips_with_phase() {
        let s = StateVector::zero(1).unwrap().applied(&Gate::rx(0, PI)).unwrap();
        assert_close(s.amplitudes(), &[c(0.0, 0.0), c(0.0, -1.0)], 1e-15);
    }

    #[test]
    fn rz_leaves_z_expectation() {
        for theta in [-3.0, -0.4, 0.0, 1.1, 2.9, 10.0] {
            let s = StateVector::zero(1).unwrap().applied(&Gate::rz(0, theta)).unwrap();
            assert!((s.expectation_z(0).unwrap().abs() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn cnot_truth_table() {
        // |10>: qubit 0 set, which is the most significant bit -> index 2.
        let s = StateVector::from_amplitudes(2, vec![ZERO, ZERO, ONE, ZERO]).unwrap();
        let s = s.applied(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.amplitudes(), &[ZERO, ZERO, ZERO, ONE]);
        // control clear -> untouched
        let s = StateVector::from_amplitudes(2, vec![ZERO, ONE, ZERO, ZERO]).unwrap();
        let s = s.applied(&Gate::cnot(0, 1)).unwrap();
        assert_eq!(s.amplitudes(), &[ZERO, ONE, ZERO, ZERO]);
    }

    #[test]
    fn expectation_examples() {
        assert_eq!(StateVector::zero(1).unwrap().expectation_z(0).unwrap(), 1.0);
        for theta in [0.3, 1.0, 2.5, -1.7] {
            let s = StateVector::zero(1).unwrap().applied(&Gate::rx(0, theta)).unwrap();
            assert!((s.expectation_z(0).unwrap() - theta.cos()).abs() < 1e-14);
        }
        let uniform = StateVector::from_amplitudes(2, vec![c(0.5, 0.0); 4]).unwrap();
        assert_eq!(uniform.expectation_z(1).unwrap(), 0.0);
    }

    #[test]
    fn index_errors() {
        let mut s = StateVector::zero(2).unwrap();
        assert!(matches!(s.apply(&Gate::rx(2, 0.1)), Err(Error::Index { .. })));
        assert!(matches!(s.apply(&Gate::cnot(1, 1)), Err(Error::Index { .. })));
        assert!(matches!(s.apply(&Gate::cnot(0, 5)), Err(Error::Index { .. })));
        assert!(matches!(s.expectation_z(2), Err(Error::Index { .. })));
    }

    #[test]
    fn from_amplitudes_rejects_bad_input() {
        assert!(StateVector::from_amplitudes(2, vec![ONE; 3]).is_err());
        assert!(StateVector::from_amplitudes(1, vec![ONE, ONE]).is_err());
    }

    #[test]
    fn leading_block_identity_and_swap() {
        let mut s = StateVector::zero(3).unwrap();
        s.apply(&Gate::ry(2, 0.7)).unwrap();
        let before = s.clone();
        // identity on qubits 0..2
        let mut id = vec![ZERO; 16];
        for i in 0..4 {
            id[i * 4 + i] = ONE;
        }
        s.apply_leading(2, &id).unwrap();
        assert_close(s.amplitudes(), before.amplitudes(), 1e-15);
        // X on qubit 0 as a 1-qubit leading block equals RX(pi) up to phase -i
        let x = [ZERO, ONE, ONE, ZERO];
        let mut a = before.clone();
        a.apply_leading(1, &x).unwrap();
        let b = before.applied(&Gate::rx(0, PI)).unwrap();
        let phased: Vec<_> = b.amplitudes().iter().map(|v| v * c(0.0, 1.0)).collect();
        assert_close(a.amplitudes(), &phased, 1e-15);
    }

    fn arb_gate(n: usize) -> impl Strategy<Value = Gate> {
        let rot = (0..3usize, 0..n, -10.0..10.0f64).prop_map(|(a, q, t)| match a {
            0 => Gate::rx(q, t),
            1 => Gate::ry(q, t),
            _ => Gate::rz(q, t),
        });
        let cnot = (0..n, 1..n).prop_map(move |(c, off)| Gate::cnot(c, (c + off) % n));
        prop_oneof![3 => rot, 1 => cnot]
    }

    fn arb_circuit() -> impl Strategy<Value = (usize, Vec<Gate>)> {
        (2..=6usize).prop_flat_map(|n| (Just(n), prop::collection::vec(arb_gate(n), 0..=100)))
    }

    proptest! {
        #[test]
        fn norm_is_preserved((n, gates) in arb_circuit()) {
            let mut s = StateVector::zero(n).unwrap();
            for g in &gates {
                s.apply(g).unwrap();
            }
            prop_assert!((s.norm_sqr() - 1.0).abs() < 1e-10);
            for q in 0..n {
                let e = s.expectation_z(q).unwrap();
                prop_assert!((-1.0..=1.0).contains(&e));
            }
        }

        #[test]
        fn inverse_undoes_gate((n, gates) in arb_circuit(), g_idx in 0usize..100) {
            let mut s = StateVector::zero(n).unwrap();
            for g in &gates {
                s.apply(g).unwrap();
            }
            let Some(g) = gates.get(g_idx % gates.len().max(1)) else { return Ok(()); };
            let mut t = s.clone();
            t.apply(g).unwrap();
            t.apply(&g.inverse()).unwrap();
            for (x, y) in s.amplitudes().iter().zip(t.amplitudes()) {
                prop_assert!((x - y).norm() < 1e-10);
            }
        }
    }
}
