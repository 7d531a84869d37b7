//! Weighted Pauli strings: observables and Hamiltonians.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use super::state::StateVector;
use super::SimError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PauliOp {
    X,
    Y,
    Z,
}

/// A single Pauli word with a real coefficient. Identity positions are omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub ops: BTreeMap<usize, PauliOp>,
    pub coefficient: f64,
}

impl PauliString {
    pub fn new(coefficient: f64, ops: impl IntoIterator<Item = (usize, PauliOp)>) -> PauliString {
        PauliString {
            ops: ops.into_iter().collect(),
            coefficient,
        }
    }

    pub fn identity(coefficient: f64) -> PauliString {
        PauliString {
            ops: BTreeMap::new(),
            coefficient,
        }
    }

    pub fn z(qubit: usize, coefficient: f64) -> PauliString {
        PauliString::new(coefficient, [(qubit, PauliOp::Z)])
    }

    pub fn zz(a: usize, b: usize, coefficient: f64) -> PauliString {
        PauliString::new(coefficient, [(a, PauliOp::Z), (b, PauliOp::Z)])
    }

    fn masks(&self) -> (usize, usize, u32) {
        let mut flip = 0usize; // qubits where the basis index flips (X or Y)
        let mut sign = 0usize; // qubits contributing (-1)^bit (Y or Z)
        let mut n_y = 0u32;
        for (&q, &op) in &self.ops {
            match op {
                PauliOp::X => flip |= 1 << q,
                PauliOp::Y => {
                    flip |= 1 << q;
                    sign |= 1 << q;
                    n_y += 1;
                }
                PauliOp::Z => sign |= 1 << q,
            }
        }
        (flip, sign, n_y)
    }
}

/// Hermitian observable: a list of Pauli strings over `n_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    terms: Vec<PauliString>,
    n_qubits: usize,
}

impl PauliSum {
    pub fn new(n_qubits: usize, terms: Vec<PauliString>) -> Result<PauliSum, SimError> {
        for t in &terms {
            if let Some((&q, _)) = t.ops.iter().next_back() {
                if q >= n_qubits {
                    return Err(SimError::QubitMismatch {
                        state: n_qubits,
                        observable: q + 1,
                    });
                }
            }
        }
        Ok(PauliSum { terms, n_qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliString] {
        &self.terms
    }
}

/// `<state|obs|state>` by direct dense accumulation.
pub fn expectation(state: &StateVector, obs: &PauliSum) -> Result<f64, SimError> {
    if state.n_qubits() != obs.n_qubits() {
        return Err(SimError::QubitMismatch {
            state: state.n_qubits(),
            observable: obs.n_qubits(),
        });
    }
    let amps = state.amplitudes();
    let mut total = Complex64::new(0.0, 0.0);
    for term in obs.terms() {
        let (flip, sign, n_y) = term.masks();
        let y_phase = Complex64::i().powu(n_y);
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, &a) in amps.iter().enumerate() {
            let s = if (i & sign).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            acc += amps[i ^ flip].conj() * (a * s);
        }
        total += acc * y_phase * term.coefficient;
    }
    debug_assert!(
        total.im.abs() < 1e-8 * total.re.abs().max(1.0),
        "imaginary residue {} on Hermitian expectation",
        total.im
    );
    Ok(total.re)
}

/// Dense matrix of the observable, for reference computations.
pub fn dense_matrix(obs: &PauliSum) -> Vec<Vec<Complex64>> {
    let dim = 1usize << obs.n_qubits();
    let mut m = vec![vec![Complex64::new(0.0, 0.0); dim]; dim];
    for term in obs.terms() {
        let (flip, sign, n_y) = term.masks();
        let y_phase = Complex64::i().powu(n_y);
        for col in 0..dim {
            let s = if (col & sign).count_ones() % 2 == 0 {
                1.0
            } else {
                -1.0
            };
            m[col ^ flip][col] += y_phase * (term.coefficient * s);
        }
    }
    m
}

/// Minimum eigenvalue of the dense Hermitian matrix of `obs`.
///
/// The complex Hermitian `H = A + iB` is embedded as the real symmetric
/// `[[A, -B], [B, A]]`, whose spectrum equals that of `H` with doubled
/// multiplicity.
pub fn exact_ground_energy(obs: &PauliSum) -> Result<f64, SimError> {
    if obs.n_qubits() > 10 {
        return Err(SimError::TooManyQubits {
            n_qubits: obs.n_qubits(),
            limit: 10,
        });
    }
    let dim = 1usize << obs.n_qubits();
    let h = dense_matrix(obs);
    let m = nalgebra::DMatrix::<f64>::from_fn(2 * dim, 2 * dim, |r, c| {
        let (ri, rb) = (r % dim, r / dim);
        let (ci, cb) = (c % dim, c / dim);
        match (rb, cb) {
            (0, 0) | (1, 1) => h[ri][ci].re,
            (0, 1) => -h[ri][ci].im,
            _ => h[ri][ci].im,
        }
    });
    let eigen = m.symmetric_eigen();
    Ok(eigen.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Parse a Hamiltonian file: one `coefficient pauli_word` per line, where the
/// word's character at position `q` names the operator on qubit `q`
/// (`I`, `X`, `Y`, `Z`). `#` comments and blank lines are ignored.
pub fn parse_pauli_sum(text: &str) -> Result<PauliSum, SimError> {
    let mut terms = Vec::new();
    let mut n_qubits: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let coeff_text = fields.next().unwrap();
        let coefficient: f64 = coeff_text.parse().map_err(|_| SimError::HamiltonianParse {
            line: lineno + 1,
            msg: format!("cannot parse coefficient `{coeff_text}`"),
        })?;
        let word = fields.next().ok_or_else(|| SimError::HamiltonianParse {
            line: lineno + 1,
            msg: "missing pauli word".into(),
        })?;
        if fields.next().is_some() {
            return Err(SimError::HamiltonianParse {
                line: lineno + 1,
                msg: "trailing tokens after pauli word".into(),
            });
        }
        match n_qubits {
            None => n_qubits = Some(word.len()),
            Some(n) if n != word.len() => {
                return Err(SimError::HamiltonianParse {
                    line: lineno + 1,
                    msg: format!("pauli word length {} != {}", word.len(), n),
                })
            }
            _ => {}
        }
        let mut ops = BTreeMap::new();
        for (q, ch) in word.chars().enumerate() {
            let op = match ch {
                'I' => None,
                'X' => Some(PauliOp::X),
                'Y' => Some(PauliOp::Y),
                'Z' => Some(PauliOp::Z),
                other => {
                    return Err(SimError::HamiltonianParse {
                        line: lineno + 1,
                        msg: format!("unknown pauli letter `{other}`"),
                    })
                }
            };
            if let Some(op) = op {
                ops.insert(q, op);
            }
        }
        terms.push(PauliString { ops, coefficient });
    }
    let n = n_qubits.ok_or(SimError::HamiltonianParse {
        line: 1,
        msg: "empty hamiltonian file".into(),
    })?;
    PauliSum::new(n, terms)
}

/// Inverse of [`parse_pauli_sum`] on its canonical form.
pub fn serialize_pauli_sum(obs: &PauliSum) -> String {
    let mut out = String::new();
    for term in obs.terms() {
        let mut word = vec!['I'; obs.n_qubits()];
        for (&q, &op) in &term.ops {
            word[q] = match op {
                PauliOp::X => 'X',
                PauliOp::Y => 'Y',
                PauliOp::Z => 'Z',
            };
        }
        writeln!(
            out,
            "{} {}",
            term.coefficient,
            word.iter().collect::<String>()
        )
        .unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateKind;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};

    fn random_state(n: usize, seed: u64) -> StateVector {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let mut amps: Vec<Complex64> = (0..1usize << n)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        for a in &mut amps {
            *a /= norm;
        }
        StateVector::from_amplitudes(n, amps).unwrap()
    }

    #[test]
    fn z_on_zero_state() {
        let s = StateVector::zero(1);
        let obs = PauliSum::new(1, vec![PauliString::z(0, 1.0)]).unwrap();
        assert_abs_diff_eq!(expectation(&s, &obs).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn z_on_plus_state() {
        let mut s = StateVector::zero(1);
        s.apply_gate(GateKind::H, &[0], None);
        let obs = PauliSum::new(1, vec![PauliString::z(0, 1.0)]).unwrap();
        assert_abs_diff_eq!(expectation(&s, &obs).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn expectation_matches_dense_matrix_oracle() {
        // Oracle: build the full 8x8 matrix and compute <psi|H|psi> directly.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        for trial in 0..20 {
            let state = random_state(3, 100 + trial);
            let terms: Vec<PauliString> = (0..4)
                .map(|_| {
                    let ops: Vec<_> = (0..3)
                        .filter_map(|q| match rng.gen_range(0..4) {
                            0 => None,
                            1 => Some((q, PauliOp::X)),
                            2 => Some((q, PauliOp::Y)),
                            _ => Some((q, PauliOp::Z)),
                        })
                        .collect();
                    PauliString::new(rng.gen_range(-1.0..1.0), ops)
                })
                .collect();
            let obs = PauliSum::new(3, terms).unwrap();
            let m = dense_matrix(&obs);
            let amps = state.amplitudes();
            let mut want = Complex64::new(0.0, 0.0);
            for r in 0..8 {
                for c in 0..8 {
                    want += amps[r].conj() * m[r][c] * amps[c];
                }
            }
            let got = expectation(&state, &obs).unwrap();
            assert_abs_diff_eq!(got, want.re, epsilon = 1e-10);
            assert!(want.im.abs() < 1e-10);
        }
    }

    #[test]
    fn qubit_mismatch_rejected() {
        let s = StateVector::zero(1);
        let obs = PauliSum::new(2, vec![PauliString::z(1, 1.0)]).unwrap();
        assert!(matches!(
            expectation(&s, &obs),
            Err(SimError::QubitMismatch { .. })
        ));
    }

    #[test]
    fn ground_energy_single_z() {
        let obs = PauliSum::new(1, vec![PauliString::z(0, 1.0)]).unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&obs).unwrap(), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn ground_energy_two_half_z() {
        let obs = PauliSum::new(
            2,
            vec![PauliString::z(0, 0.5), PauliString::z(1, 0.5)],
        )
        .unwrap();
        assert_abs_diff_eq!(exact_ground_energy(&obs).unwrap(), -1.0, epsilon = 1e-10);
    }

    #[test]
    fn ground_energy_matches_power_iteration_oracle() {
        // Independent route: shifted power iteration on the complex matrix.
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(7);
        let terms: Vec<PauliString> = (0..6)
            .map(|_| {
                let ops: Vec<_> = (0..3)
                    .filter_map(|q| match rng.gen_range(0..4) {
                        0 => None,
                        1 => Some((q, PauliOp::X)),
                        2 => Some((q, PauliOp::Y)),
                        _ => Some((q, PauliOp::Z)),
                    })
                    .collect();
                PauliString::new(rng.gen_range(-1.0..1.0), ops)
            })
            .collect();
        let obs = PauliSum::new(3, terms).unwrap();
        let m = dense_matrix(&obs);
        let dim = 8;
        // Gershgorin bound gives a shift that makes (shift*I - H) PSD with the
        // ground state dominant.
        let shift: f64 = (0..dim)
            .map(|r| (0..dim).map(|c| m[r][c].norm()).sum::<f64>())
            .fold(0.0, f64::max)
            + 1.0;
        let mut v: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        let mut eig = 0.0;
        for _ in 0..20000 {
            let mut w = vec![Complex64::new(0.0, 0.0); dim];
            for (r, slot) in w.iter_mut().enumerate() {
                let mut acc = Complex64::new(0.0, 0.0);
                for c in 0..dim {
                    acc += (if r == c {
                        Complex64::new(shift, 0.0) - m[r][c]
                    } else {
                        -m[r][c]
                    }) * v[c];
                }
                *slot = acc;
            }
            let norm = w.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
            for a in &mut w {
                *a /= norm;
            }
            eig = norm;
            v = w;
        }
        let oracle_min = shift - eig;
        let got = exact_ground_energy(&obs).unwrap();
        assert_abs_diff_eq!(got, oracle_min, epsilon = 1e-8);
    }

    #[test]
    fn parse_serialize_round_trip() {
        let text = "0.5 ZI\n-0.25 XY\n1 IZ\n";
        let obs = parse_pauli_sum(text).unwrap();
        assert_eq!(obs.n_qubits(), 2);
        assert_eq!(obs.terms().len(), 3);
        let back = parse_pauli_sum(&serialize_pauli_sum(&obs)).unwrap();
        assert_eq!(back, obs);
    }

    #[test]
    fn parse_rejects_ragged_words() {
        assert!(parse_pauli_sum("1.0 ZZ\n1.0 Z\n").is_err());
    }
}
