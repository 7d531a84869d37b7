//! Dense statevector simulation with Pauli-noise trajectory sampling,
//! observable expectations, parameter-shift gradients, and exact
//! diagonalization references.
//!
//! Noise is realized stochastically: after each gate, an X/Y/Z error is
//! inserted on each operand qubit with the profile's probabilities, so one
//! `run` under noise is one trajectory. Channel quantities are obtained by
//! averaging trajectories.

mod noise;
mod pauli;
mod state;

pub use noise::{NoiseProfile, ReadoutFlip};
pub use pauli::{
    dense_matrix, exact_ground_energy, expectation, parse_pauli_sum, serialize_pauli_sum, PauliOp,
    PauliString, PauliSum,
};
pub use state::{basis_label, gate_matrix_1q, StateVector};

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateKind};

/// Hard cap on simulated register width.
pub const MAX_SIM_QUBITS: usize = 12;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("dimension mismatch: expected {expected} amplitudes, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("state has {state} qubits but observable acts on {observable}")]
    QubitMismatch { state: usize, observable: usize },
    #[error("{n_qubits} qubits exceeds the limit of {limit}")]
    TooManyQubits { n_qubits: usize, limit: usize },
    #[error("norm drifted to {norm} (tolerance 1e-8)")]
    NormDrift { norm: f64 },
    #[error("invalid noise profile: {msg}")]
    InvalidNoise { msg: String },
    #[error("hamiltonian line {line}: {msg}")]
    HamiltonianParse { line: usize, msg: String },
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// How loss values are evaluated inside gradient estimation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ShotsPolicy {
    /// Exact expectation values.
    Exact,
    /// Per-term sampled estimates with this many shots.
    Sampled { shots: u64 },
}

/// Measurement record: counts per bitstring label (qubit 0 leftmost).
#[derive(Debug, Clone, PartialEq)]
pub struct ShotResult {
    pub counts: BTreeMap<String, u64>,
    pub total_shots: u64,
}

impl ShotResult {
    pub fn count_of(&self, label: &str) -> u64 {
        self.counts.get(label).copied().unwrap_or(0)
    }

    pub fn frequency(&self, label: &str) -> f64 {
        self.count_of(label) as f64 / self.total_shots as f64
    }
}

fn apply_pauli(state: &mut StateVector, which: usize, qubit: usize) {
    // which: 0 = X, 1 = Y, 2 = Z
    match which {
        0 => state.apply_gate(GateKind::X, &[qubit], None),
        1 => {
            let i = num_complex::Complex64::new(0.0, 1.0);
            let zero = num_complex::Complex64::new(0.0, 0.0);
            state.apply_1q_matrix(&[[zero, -i], [i, zero]], qubit);
        }
        _ => {
            let one = num_complex::Complex64::new(1.0, 0.0);
            let zero = num_complex::Complex64::new(0.0, 0.0);
            state.apply_1q_matrix(&[[one, zero], [zero, -one]], qubit);
        }
    }
}

fn maybe_inject_noise(
    state: &mut StateVector,
    probs: &[f64; 3],
    qubits: &[usize],
    rng: &mut ChaCha12Rng,
) {
    for &q in qubits {
        let u: f64 = rng.gen();
        if u < probs[0] {
            apply_pauli(state, 0, q);
        } else if u < probs[0] + probs[1] {
            apply_pauli(state, 1, q);
        } else if u < probs[0] + probs[1] + probs[2] {
            apply_pauli(state, 2, q);
        }
    }
}

/// Apply `c` with angles `theta` to `|0...0>`. With a noise profile, one
/// Pauli trajectory is sampled from `seed`; without one the run is
/// deterministic. Aborts if the norm drifts by more than 1e-8.
pub fn run(
    c: &Circuit,
    theta: &[f64],
    noise: Option<&NoiseProfile>,
    seed: u64,
) -> Result<StateVector, SimError> {
    if c.n_qubits() > MAX_SIM_QUBITS {
        return Err(SimError::TooManyQubits {
            n_qubits: c.n_qubits(),
            limit: MAX_SIM_QUBITS,
        });
    }
    if theta.len() != c.n_params() {
        return Err(SimError::Circuit(CircuitError::ThetaLength {
            expected: c.n_params(),
            got: theta.len(),
        }));
    }
    let mut state = StateVector::zero(c.n_qubits());
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for g in c.gates() {
        state.apply_gate(g.kind, &g.qubits, g.angle(theta));
        if let Some(profile) = noise {
            let probs = if g.kind.arity() == 1 {
                &profile.p1
            } else {
                &profile.p2
            };
            maybe_inject_noise(&mut state, probs, &g.qubits, &mut rng);
        }
        let norm = state.norm();
        if (norm - 1.0).abs() > 1e-8 {
            return Err(SimError::NormDrift { norm });
        }
    }
    Ok(state)
}

/// Apply `c` noiselessly to an existing state (no norm bookkeeping).
pub fn apply_circuit(
    state: &mut StateVector,
    c: &Circuit,
    theta: &[f64],
) -> Result<(), SimError> {
    if theta.len() != c.n_params() {
        return Err(SimError::Circuit(CircuitError::ThetaLength {
            expected: c.n_params(),
            got: theta.len(),
        }));
    }
    for g in c.gates() {
        state.apply_gate(g.kind, &g.qubits, g.angle(theta));
    }
    Ok(())
}

/// Draw `shots` measurement outcomes from `|amplitude|^2`, flipping each bit
/// independently with its readout probability. Deterministic under `seed`.
pub fn sample(state: &StateVector, shots: u64, readout_flip: &[f64], seed: u64) -> ShotResult {
    assert!(shots >= 1, "need at least one shot");
    let n = state.n_qubits();
    let mut cumulative = Vec::with_capacity(state.amplitudes().len());
    let mut acc = 0.0;
    for a in state.amplitudes() {
        acc += a.norm_sqr();
        cumulative.push(acc);
    }
    let total = acc;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut counts: BTreeMap<String, u64> = BTreeMap::new();
    let any_flip = readout_flip.iter().any(|&p| p > 0.0);
    for _ in 0..shots {
        let u: f64 = rng.gen::<f64>() * total;
        let mut outcome = cumulative.partition_point(|&c| c <= u);
        if outcome >= cumulative.len() {
            outcome = cumulative.len() - 1;
        }
        if any_flip {
            for (q, &p) in readout_flip.iter().enumerate().take(n) {
                if p > 0.0 && rng.gen::<f64>() < p {
                    outcome ^= 1 << q;
                }
            }
        }
        *counts.entry(basis_label(outcome, n)).or_insert(0) += 1;
    }
    ShotResult {
        counts,
        total_shots: shots,
    }
}

/// Estimate `<obs>` on `state` from `shots` samples per Pauli term, applying
/// the standard basis rotations (H for X, Sdg-H for Y) before measuring.
pub fn estimate_expectation_sampled(
    state: &StateVector,
    obs: &PauliSum,
    shots: u64,
    readout_flip: &[f64],
    seed: u64,
) -> Result<f64, SimError> {
    if state.n_qubits() != obs.n_qubits() {
        return Err(SimError::QubitMismatch {
            state: state.n_qubits(),
            observable: obs.n_qubits(),
        });
    }
    let mut total = 0.0;
    for (t, term) in obs.terms().iter().enumerate() {
        if term.ops.is_empty() {
            total += term.coefficient;
            continue;
        }
        let mut rotated = state.clone();
        let mut mask = 0usize;
        for (&q, &op) in &term.ops {
            match op {
                PauliOp::X => rotated.apply_gate(GateKind::H, &[q], None),
                PauliOp::Y => {
                    rotated.apply_gate(GateKind::Sdg, &[q], None);
                    rotated.apply_gate(GateKind::H, &[q], None);
                }
                PauliOp::Z => {}
            }
            mask |= 1 << q;
        }
        let result = sample(&rotated, shots, readout_flip, seed.wrapping_add(t as u64));
        let mut parity_sum = 0i64;
        for (label, count) in &result.counts {
            let ones = label
                .chars()
                .enumerate()
                .filter(|(q, ch)| mask & (1 << q) != 0 && *ch == '1')
                .count();
            parity_sum += if ones % 2 == 0 {
                *count as i64
            } else {
                -(*count as i64)
            };
        }
        total += term.coefficient * parity_sum as f64 / shots as f64;
    }
    Ok(total)
}

/// Parameter-shift gradient of `<obs>` w.r.t. each free angle of `c`:
/// component `k` is `(L(theta + pi/2 e_k) - L(theta - pi/2 e_k)) / 2`.
///
/// All parametric kinds in the vocabulary are Pauli rotations, for which the
/// rule is exact. Under a noise profile each evaluation is one trajectory
/// seeded deterministically from `seed`.
pub fn param_shift_grad(
    c: &Circuit,
    theta: &[f64],
    obs: &PauliSum,
    noise: Option<&NoiseProfile>,
    policy: ShotsPolicy,
    seed: u64,
) -> Result<Vec<f64>, SimError> {
    use std::f64::consts::FRAC_PI_2;
    let eval = |shifted: &[f64], eval_seed: u64| -> Result<f64, SimError> {
        let state = run(c, shifted, noise, eval_seed)?;
        match policy {
            ShotsPolicy::Exact => expectation(&state, obs),
            ShotsPolicy::Sampled { shots } => {
                let flips = noise
                    .map(|p| p.readout_flip.per_qubit(c.n_qubits()))
                    .unwrap_or_else(|| vec![0.0; c.n_qubits()]);
                estimate_expectation_sampled(&state, obs, shots, &flips, eval_seed ^ 0x9e37)
            }
        }
    };
    let mut grad = vec![0.0; c.n_params()];
    let mut shifted = theta.to_vec();
    for k in 0..c.n_params() {
        let base = theta[k];
        shifted[k] = base + FRAC_PI_2;
        let plus = eval(&shifted, seed.wrapping_add(2 * k as u64))?;
        shifted[k] = base - FRAC_PI_2;
        let minus = eval(&shifted, seed.wrapping_add(2 * k as u64 + 1))?;
        shifted[k] = base;
        grad[k] = 0.5 * (plus - minus);
    }
    Ok(grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{parse_circuit, Circuit, GateInstance, GateParam};
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use std::f64::consts::PI;

    fn gate(kind: GateKind, qubits: Vec<usize>, param: GateParam) -> GateInstance {
        GateInstance::new(kind, qubits, param)
    }

    #[test]
    fn empty_circuit_is_ground_state() {
        let s = run(&Circuit::empty(3), &[], None, 0).unwrap();
        assert_abs_diff_eq!(s.probability(0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn hadamard_run() {
        let c = parse_circuit("qubits 1\nh 0\n").unwrap();
        let s = run(&c, &[], None, 0).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert_abs_diff_eq!(s.amplitudes()[0].re, r, epsilon = 1e-12);
        assert_abs_diff_eq!(s.amplitudes()[1].re, r, epsilon = 1e-12);
    }

    #[test]
    fn qubit_cap_enforced() {
        assert!(matches!(
            run(&Circuit::empty(13), &[], None, 0),
            Err(SimError::TooManyQubits { .. })
        ));
    }

    #[test]
    fn unitarity_over_many_random_gates() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let kinds = [
            GateKind::X,
            GateKind::H,
            GateKind::S,
            GateKind::Sdg,
            GateKind::Rx,
            GateKind::Ry,
            GateKind::Rz,
            GateKind::Cnot,
            GateKind::Cz,
            GateKind::Rzz,
        ];
        let n = 4;
        let mut state = StateVector::zero(n);
        for _ in 0..1500 {
            let kind = kinds[rng.gen_range(0..kinds.len())];
            let qubits: Vec<usize> = if kind.arity() == 1 {
                vec![rng.gen_range(0..n)]
            } else {
                let a = rng.gen_range(0..n);
                let b = (a + rng.gen_range(1..n)) % n;
                vec![a, b]
            };
            let angle = kind.parametric().then(|| rng.gen_range(-PI..PI));
            state.apply_gate(kind, &qubits, angle);
            assert!((state.norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn inverse_round_trip_random_circuits() {
        // inverse_circuit(c) after c must return |0...0> for every kind.
        use crate::circuit::inverse_circuit;
        let mut rng = ChaCha12Rng::seed_from_u64(19);
        let kinds = GateKind::ALL;
        for _ in 0..50 {
            let n = rng.gen_range(1..5usize);
            let mut gates = Vec::new();
            let mut slot = 0;
            for _ in 0..5 {
                let kind = kinds[rng.gen_range(0..kinds.len())];
                if kind.arity() == 2 && n < 2 {
                    continue;
                }
                let qubits = if kind.arity() == 1 {
                    vec![rng.gen_range(0..n)]
                } else {
                    let a = rng.gen_range(0..n);
                    let b = (a + rng.gen_range(1..n)) % n;
                    vec![a, b]
                };
                let param = if kind.parametric() {
                    slot += 1;
                    GateParam::Slot(slot - 1)
                } else {
                    GateParam::None
                };
                gates.push(gate(kind, qubits, param));
            }
            let c = Circuit::new(n, gates).unwrap();
            let theta: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
            let inv = inverse_circuit(&c, &theta).unwrap();
            let mut state = run(&c, &theta, None, 0).unwrap();
            for g in inv.gates() {
                state.apply_gate(g.kind, &g.qubits, g.angle(&[]));
            }
            assert!(state.probability(0) >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn sample_zero_state_all_zeros() {
        let s = StateVector::zero(3);
        let r = sample(&s, 100, &[0.0; 3], 1);
        assert_eq!(r.count_of("000"), 100);
        assert_eq!(r.total_shots, 100);
        assert_eq!(r.counts.values().sum::<u64>(), r.total_shots);
    }

    #[test]
    fn sample_plus_state_binomial_bound() {
        let mut s = StateVector::zero(1);
        s.apply_gate(GateKind::H, &[0], None);
        let r = sample(&s, 100_000, &[0.0], 7);
        assert!((r.frequency("0") - 0.5).abs() < 0.01);
        assert!((r.frequency("1") - 0.5).abs() < 0.01);
    }

    #[test]
    fn sample_readout_flip_binomial_bound() {
        let s = StateVector::zero(1);
        let r = sample(&s, 100_000, &[0.1], 11);
        assert!((r.frequency("1") - 0.1).abs() < 0.01);
    }

    #[test]
    fn sample_reproducible_under_seed() {
        let mut s = StateVector::zero(2);
        s.apply_gate(GateKind::H, &[0], None);
        s.apply_gate(GateKind::Cnot, &[0, 1], None);
        let a = sample(&s, 1000, &[0.05, 0.05], 42);
        let b = sample(&s, 1000, &[0.05, 0.05], 42);
        assert_eq!(a, b);
    }

    #[test]
    fn grad_at_cos_extremum_is_zero() {
        let c = parse_circuit("qubits 1\nrx 0\n").unwrap();
        let obs = PauliSum::new(1, vec![PauliString::z(0, 1.0)]).unwrap();
        let g = param_shift_grad(&c, &[0.0], &obs, None, ShotsPolicy::Exact, 0).unwrap();
        assert_abs_diff_eq!(g[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn grad_matches_cosine_derivative() {
        // <Z> after Rx(theta) is cos(theta); derivative at pi/2 is -1.
        let c = parse_circuit("qubits 1\nrx 0\n").unwrap();
        let obs = PauliSum::new(1, vec![PauliString::z(0, 1.0)]).unwrap();
        let g = param_shift_grad(&c, &[PI / 2.0], &obs, None, ShotsPolicy::Exact, 0).unwrap();
        assert_abs_diff_eq!(g[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn grad_matches_finite_differences_on_random_circuits() {
        let mut rng = ChaCha12Rng::seed_from_u64(23);
        for trial in 0..5 {
            let n = 4;
            let text = format!(
                "qubits {n}\nrx 0\nry 1\ncnot 0 1\nrz 2\nrzz 2 3\nh 3\nrx 3\ncz 1 2\nry 0\n"
            );
            let c = parse_circuit(&text).unwrap();
            let theta: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
            let terms = vec![
                PauliString::z(0, 0.7),
                PauliString::zz(1, 2, -0.4),
                PauliString::new(0.3, [(3, PauliOp::X)]),
            ];
            let obs = PauliSum::new(n, terms).unwrap();
            let grad = param_shift_grad(&c, &theta, &obs, None, ShotsPolicy::Exact, trial).unwrap();
            let h = 1e-4;
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                tp[k] += h;
                let mut tm = theta.clone();
                tm[k] -= h;
                let fp = expectation(&run(&c, &tp, None, 0).unwrap(), &obs).unwrap();
                let fm = expectation(&run(&c, &tm, None, 0).unwrap(), &obs).unwrap();
                let fd = (fp - fm) / (2.0 * h);
                let denom = grad[k].abs().max(fd.abs()).max(1.0);
                assert!(
                    ((grad[k] - fd) / denom).abs() < 1e-5,
                    "k={k}: shift {} vs fd {}",
                    grad[k],
                    fd
                );
            }
        }
    }

    #[test]
    fn trajectory_average_matches_channel_oracle() {
        // [H] then a Z error with probability p: <X> = (1-p) - p = 1 - 2p.
        let p = 0.2;
        let profile = NoiseProfile {
            name: "z_only".into(),
            p1: [0.0, 0.0, p],
            p2: [0.0; 3],
            readout_flip: ReadoutFlip::Uniform(0.0),
        };
        let c = parse_circuit("qubits 1\nh 0\n").unwrap();
        let obs_x = PauliSum::new(1, vec![PauliString::new(1.0, [(0, PauliOp::X)])]).unwrap();
        let obs_z = PauliSum::new(1, vec![PauliString::z(0, 1.0)]).unwrap();
        let n_traj = 20_000;
        let mut mean_x = 0.0;
        let mut mean_z = 0.0;
        for t in 0..n_traj {
            let s = run(&c, &[], Some(&profile), t).unwrap();
            mean_x += expectation(&s, &obs_x).unwrap();
            mean_z += expectation(&s, &obs_z).unwrap();
        }
        mean_x /= n_traj as f64;
        mean_z /= n_traj as f64;
        let se = (4.0 * p * (1.0 - p) / n_traj as f64).sqrt();
        assert!(
            (mean_x - (1.0 - 2.0 * p)).abs() < 3.0 * se,
            "mean_x = {mean_x}, se = {se}"
        );
        // <Z> of |+> is 0 under any Z-error rate.
        assert_abs_diff_eq!(mean_z, 0.0, epsilon = 1e-10);
    }

    #[test]
    fn sampled_expectation_estimator_converges() {
        let c = parse_circuit("qubits 2\nh 0\ncnot 0 1\n").unwrap();
        let s = run(&c, &[], None, 0).unwrap();
        // Bell state: <ZZ> = 1, <XX> = 1, <ZI> = 0.
        let obs = PauliSum::new(
            2,
            vec![
                PauliString::zz(0, 1, 1.0),
                PauliString::new(1.0, [(0, PauliOp::X), (1, PauliOp::X)]),
                PauliString::z(0, 1.0),
            ],
        )
        .unwrap();
        let est = estimate_expectation_sampled(&s, &obs, 100_000, &[0.0, 0.0], 5).unwrap();
        assert!((est - 2.0).abs() < 0.02, "est = {est}");
    }
}
