//! Dense statevector storage and gate application.
//!
//! Qubit `q` maps to bit `q` of the basis index (qubit 0 is the least
//! significant bit). Bitstring labels are written with qubit 0 leftmost.

use num_complex::Complex64;

use super::SimError;
use crate::circuit::GateKind;

/// Complex amplitude vector of length `2^n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>` on `n_qubits`.
    pub fn zero(n_qubits: usize) -> StateVector {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    pub fn from_amplitudes(n_qubits: usize, amps: Vec<Complex64>) -> Result<StateVector, SimError> {
        if amps.len() != 1 << n_qubits {
            return Err(SimError::Dimension {
                expected: 1 << n_qubits,
                got: amps.len(),
            });
        }
        Ok(StateVector { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    /// `|<self|other>|^2`.
    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    /// Probability of measuring basis state `index`.
    pub fn probability(&self, index: usize) -> f64 {
        self.amps[index].norm_sqr()
    }

    pub fn apply_1q_matrix(&mut self, m: &[[Complex64; 2]; 2], q: usize) {
        let bit = 1usize << q;
        let dim = self.amps.len();
        let mut i = 0;
        while i < dim {
            if i & bit == 0 {
                let j = i | bit;
                let a0 = self.amps[i];
                let a1 = self.amps[j];
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[j] = m[1][0] * a0 + m[1][1] * a1;
            }
            i += 1;
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let cb = 1usize << control;
        let tb = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cb != 0 && i & tb == 0 {
                self.amps.swap(i, i | tb);
            }
        }
    }

    fn apply_cz(&mut self, a: usize, b: usize) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    fn apply_rzz(&mut self, a: usize, b: usize, angle: f64) {
        let pa = 1usize << a;
        let pb = 1usize << b;
        let even = Complex64::from_polar(1.0, -angle / 2.0);
        let odd = Complex64::from_polar(1.0, angle / 2.0);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            let parity = ((i & pa != 0) as u8) ^ ((i & pb != 0) as u8);
            *amp *= if parity == 0 { even } else { odd };
        }
    }

    /// Apply one gate of the vocabulary. `angle` must be `Some` exactly for
    /// parametric kinds.
    pub fn apply_gate(&mut self, kind: GateKind, qubits: &[usize], angle: Option<f64>) {
        match kind {
            GateKind::Cnot => self.apply_cnot(qubits[0], qubits[1]),
            GateKind::Cz => self.apply_cz(qubits[0], qubits[1]),
            GateKind::Rzz => self.apply_rzz(qubits[0], qubits[1], angle.expect("rzz angle")),
            _ => {
                let m = gate_matrix_1q(kind, angle);
                self.apply_1q_matrix(&m, qubits[0]);
            }
        }
    }

    /// Per-qubit Pauli-Z expectation values.
    pub fn z_expectations(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_qubits];
        for (i, amp) in self.amps.iter().enumerate() {
            let p = amp.norm_sqr();
            for (q, slot) in out.iter_mut().enumerate() {
                *slot += if i & (1 << q) == 0 { p } else { -p };
            }
        }
        out
    }
}

/// 2x2 unitary for a single-qubit kind.
pub fn gate_matrix_1q(kind: GateKind, angle: Option<f64>) -> [[Complex64; 2]; 2] {
    let zero = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match kind {
        GateKind::I => [[one, zero], [zero, one]],
        GateKind::X => [[zero, one], [one, zero]],
        GateKind::H => {
            let s = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [[s, s], [s, -s]]
        }
        GateKind::S => [[one, zero], [zero, i]],
        GateKind::Sdg => [[one, zero], [zero, -i]],
        GateKind::Rx => {
            let t = angle.expect("rx angle") / 2.0;
            let (c, s) = (Complex64::new(t.cos(), 0.0), Complex64::new(0.0, -t.sin()));
            [[c, s], [s, c]]
        }
        GateKind::Ry => {
            let t = angle.expect("ry angle") / 2.0;
            let (c, s) = (Complex64::new(t.cos(), 0.0), Complex64::new(t.sin(), 0.0));
            [[c, -s], [s, c]]
        }
        GateKind::Rz => {
            let t = angle.expect("rz angle") / 2.0;
            [
                [Complex64::from_polar(1.0, -t), zero],
                [zero, Complex64::from_polar(1.0, t)],
            ]
        }
        GateKind::Cnot | GateKind::Cz | GateKind::Rzz => {
            unreachable!("{kind} is not a single-qubit gate")
        }
    }
}

/// Bitstring label with qubit 0 leftmost.
pub fn basis_label(index: usize, n_qubits: usize) -> String {
    (0..n_qubits)
        .map(|q| if index & (1 << q) == 0 { '0' } else { '1' })
        .collect()
}
