//! Post-search circuit optimizer.
//!
//! Three rewrite passes are iterated to a fixpoint: commutation reordering
//! (pushing single-qubit gates left through compatible two-qubit gates and
//! into a canonical qubit order), rotation fusion (summing adjacent same-axis
//! angles; the aggressive mode first converts `x`, `s`, `sdg` to rotations),
//! and redundancy elimination (inverse pairs, self-inverting two-qubit pairs,
//! identities, negligible rotations). Every rewrite is unitary-preserving up
//! to a global phase tracked in the report, and [`verify_equivalence`] checks
//! the result against the input by state overlap.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, CircuitError, GateInstance, GateKind, GateParam};
use crate::sim::{apply_circuit, SimError, StateVector};

use std::f64::consts::PI;

#[derive(Debug, Error)]
pub enum OptError {
    #[error("optimizer requires fixed angles; circuit has {0} free parameters")]
    FreeParameters(usize),
    #[error("equivalence check supports at most 10 qubits, got {0}")]
    TooManyQubits(usize),
    #[error("circuits act on {0} and {1} qubits")]
    QubitMismatch(usize, usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptMode {
    /// Merge only existing rotation gates.
    Conservative,
    /// Convert `x` to `rx(pi)`, `s`/`sdg` to `rz(+-pi/2)` first to expose
    /// more fusions.
    Aggressive,
}

impl std::str::FromStr for OptMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "conservative" => Ok(OptMode::Conservative),
            "aggressive" => Ok(OptMode::Aggressive),
            other => Err(format!("unknown optimizer mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptConfig {
    pub mode: OptMode,
    /// Rotations with |angle mod 2pi| below this are pruned.
    pub angle_epsilon: f64,
    pub max_passes: usize,
    /// Run the state-overlap equivalence check when the register is small
    /// enough.
    pub verify: bool,
}

impl Default for OptConfig {
    fn default() -> OptConfig {
        OptConfig {
            mode: OptMode::Conservative,
            angle_epsilon: 1e-8,
            max_passes: 32,
            verify: true,
        }
    }
}

impl OptConfig {
    pub fn aggressive() -> OptConfig {
        OptConfig {
            mode: OptMode::Aggressive,
            ..OptConfig::default()
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PassCounts {
    pub reorders: usize,
    pub fusions: usize,
    pub eliminations: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptReport {
    pub passes: Vec<PassCounts>,
    pub before_gate_count: usize,
    pub before_depth: usize,
    pub after_gate_count: usize,
    pub after_depth: usize,
    /// Accumulated global phase angle (mod 2pi) discarded by rewrites.
    pub global_phase: f64,
    pub reached_fixpoint: bool,
    /// `None` when the register is too wide or verification is disabled.
    pub equivalent: Option<bool>,
}

fn fixed_angle(g: &GateInstance) -> Option<f64> {
    match g.param {
        GateParam::Fixed(a) => Some(a),
        _ => None,
    }
}

fn is_diagonal_1q(g: &GateInstance) -> bool {
    matches!(g.kind, GateKind::Rz | GateKind::S | GateKind::Sdg | GateKind::I)
}

fn is_x_axis_1q(g: &GateInstance) -> bool {
    matches!(g.kind, GateKind::Rx | GateKind::X | GateKind::I)
}

fn disjoint(a: &GateInstance, b: &GateInstance) -> bool {
    a.qubits.iter().all(|q| !b.qubits.contains(q))
}

/// Sound commutation test for an adjacent pair.
pub fn commutes(a: &GateInstance, b: &GateInstance) -> bool {
    if disjoint(a, b) {
        return true;
    }
    let (one_q, two_q) = match (a.kind.arity(), b.kind.arity()) {
        (1, 2) => (a, b),
        (2, 1) => (b, a),
        (1, 1) => {
            // Same qubit: commute iff both diagonal or both X-axis.
            return (is_diagonal_1q(a) && is_diagonal_1q(b))
                || (is_x_axis_1q(a) && is_x_axis_1q(b));
        }
        _ => return false, // overlapping 2q pairs: keep conservative
    };
    let q = one_q.qubits[0];
    match two_q.kind {
        GateKind::Cnot => {
            let (control, target) = (two_q.qubits[0], two_q.qubits[1]);
            (q == control && is_diagonal_1q(one_q)) || (q == target && is_x_axis_1q(one_q))
        }
        GateKind::Cz | GateKind::Rzz => is_diagonal_1q(one_q),
        _ => false,
    }
}

/// One left-to-right bubble sweep: swap an adjacent commuting pair when it
/// pushes a single-qubit gate ahead of a two-qubit gate, or orders disjoint
/// single-qubit gates by qubit index. Output is unitarily equivalent to the
/// input.
pub fn reorder_commute(c: &Circuit) -> (Circuit, usize) {
    let mut gates: Vec<GateInstance> = c.gates().to_vec();
    let mut swaps = 0;
    let mut i = 0;
    while i + 1 < gates.len() {
        let (a, b) = (&gates[i], &gates[i + 1]);
        let should_swap = if b.kind.arity() == 1 && a.kind.arity() == 2 {
            commutes(a, b)
        } else if b.kind.arity() == 1 && a.kind.arity() == 1 {
            disjoint(a, b) && b.qubits[0] < a.qubits[0]
        } else {
            false
        };
        if should_swap {
            gates.swap(i, i + 1);
            swaps += 1;
        }
        i += 1;
    }
    let out = Circuit::new(c.n_qubits(), gates).expect("reorder preserves validity");
    (out, swaps)
}

/// Wrap into `(-pi, pi]`, returning the wrapped angle and the number of
/// full turns removed (each turn contributes a global phase of pi).
fn wrap_angle(a: f64) -> (f64, i64) {
    let k = ((a + PI) / (2.0 * PI)).floor() as i64;
    let wrapped = a - 2.0 * PI * k as f64;
    (wrapped, k)
}

fn same_rotation_site(a: &GateInstance, b: &GateInstance) -> bool {
    if a.kind != b.kind || !a.kind.parametric() {
        return false;
    }
    if a.kind.symmetric() {
        let mut qa = a.qubits.clone();
        let mut qb = b.qubits.clone();
        qa.sort_unstable();
        qb.sort_unstable();
        qa == qb
    } else {
        a.qubits == b.qubits
    }
}

/// Merge adjacent same-axis rotations on the same operands by summing angles
/// (wrapped into `(-pi, pi]`). Returns the rewritten circuit, the fusion
/// count, and the global phase shed by conversions and angle wrapping.
pub fn fuse_rotations(c: &Circuit, config: &OptConfig) -> Result<(Circuit, usize, f64), OptError> {
    if c.n_params() != 0 {
        return Err(OptError::FreeParameters(c.n_params()));
    }
    let mut phase = 0.0;
    let mut out: Vec<GateInstance> = Vec::with_capacity(c.gate_count());
    let mut fusions = 0;
    for g in c.gates() {
        let g = if config.mode == OptMode::Aggressive {
            match g.kind {
                GateKind::X => {
                    phase += PI / 2.0;
                    GateInstance::new(GateKind::Rx, g.qubits.clone(), GateParam::Fixed(PI))
                }
                GateKind::S => {
                    phase += PI / 4.0;
                    GateInstance::new(GateKind::Rz, g.qubits.clone(), GateParam::Fixed(PI / 2.0))
                }
                GateKind::Sdg => {
                    phase -= PI / 4.0;
                    GateInstance::new(GateKind::Rz, g.qubits.clone(), GateParam::Fixed(-PI / 2.0))
                }
                _ => g.clone(),
            }
        } else {
            g.clone()
        };
        let mut current = g;
        while let Some(last) = out.last() {
            if !same_rotation_site(last, &current) {
                break;
            }
            let sum = fixed_angle(last).expect("fixed") + fixed_angle(&current).expect("fixed");
            let (wrapped, turns) = wrap_angle(sum);
            phase += PI * turns as f64;
            let qubits = out.pop().expect("non-empty").qubits;
            current = GateInstance::new(current.kind, qubits, GateParam::Fixed(wrapped));
            fusions += 1;
        }
        out.push(current);
    }
    let circuit = Circuit::new(c.n_qubits(), out)?;
    Ok((circuit, fusions, phase))
}

/// Remove inverse pairs (`s`/`sdg`, `h`/`h`), identical self-inverting
/// two-qubit pairs (`cnot` on the same ordered operands, `cz` on the same
/// pair), identity gates, and rotations whose wrapped angle is below
/// `angle_epsilon`.
pub fn eliminate_redundant(
    c: &Circuit,
    config: &OptConfig,
) -> Result<(Circuit, usize, f64), OptError> {
    if c.n_params() != 0 {
        return Err(OptError::FreeParameters(c.n_params()));
    }
    let mut phase = 0.0;
    let mut out: Vec<GateInstance> = Vec::with_capacity(c.gate_count());
    let mut eliminations = 0;
    for g in c.gates() {
        if g.kind == GateKind::I {
            eliminations += 1;
            continue;
        }
        if let Some(a) = fixed_angle(g) {
            let (wrapped, turns) = wrap_angle(a);
            if wrapped.abs() < config.angle_epsilon {
                phase += PI * turns as f64;
                eliminations += 1;
                continue;
            }
        }
        let cancels = out.last().is_some_and(|last| match (last.kind, g.kind) {
            (GateKind::S, GateKind::Sdg) | (GateKind::Sdg, GateKind::S) => {
                last.qubits == g.qubits
            }
            (GateKind::H, GateKind::H) => last.qubits == g.qubits,
            (GateKind::Cnot, GateKind::Cnot) => last.qubits == g.qubits,
            (GateKind::Cz, GateKind::Cz) => {
                let mut qa = last.qubits.clone();
                let mut qb = g.qubits.clone();
                qa.sort_unstable();
                qb.sort_unstable();
                qa == qb
            }
            _ => false,
        });
        if cancels {
            out.pop();
            eliminations += 1;
            continue;
        }
        out.push(g.clone());
    }
    let circuit = Circuit::new(c.n_qubits(), out)?;
    Ok((circuit, eliminations, phase))
}

/// Iterate reorder, fuse, eliminate until a full pass changes nothing or
/// `max_passes` is reached. Gate count is non-increasing across passes.
pub fn optimize_fixpoint(c: &Circuit, config: &OptConfig) -> Result<(Circuit, OptReport), OptError> {
    if c.n_params() != 0 {
        return Err(OptError::FreeParameters(c.n_params()));
    }
    let before = (c.gate_count(), c.depth());
    let mut current = c.clone();
    let mut passes = Vec::new();
    let mut phase = 0.0;
    let mut reached_fixpoint = false;
    for _ in 0..config.max_passes {
        let (reordered, reorders) = reorder_commute(&current);
        let (fused, fusions, ph_f) = fuse_rotations(&reordered, config)?;
        let (pruned, eliminations, ph_e) = eliminate_redundant(&fused, config)?;
        phase += ph_f + ph_e;
        passes.push(PassCounts {
            reorders,
            fusions,
            eliminations,
        });
        debug_assert!(pruned.gate_count() <= current.gate_count());
        if pruned == current {
            reached_fixpoint = true;
            break;
        }
        current = pruned;
    }
    let equivalent = if config.verify && c.n_qubits() <= 10 {
        Some(verify_equivalence(c, &current, &[])?)
    } else {
        None
    };
    let report = OptReport {
        passes,
        before_gate_count: before.0,
        before_depth: before.1,
        after_gate_count: current.gate_count(),
        after_depth: current.depth(),
        global_phase: wrap_angle(phase).0,
        reached_fixpoint,
        equivalent,
    };
    Ok((current, report))
}

fn random_product_state(n: usize, rng: &mut ChaCha12Rng) -> StateVector {
    let mut amps = vec![Complex64::new(1.0, 0.0)];
    for _ in 0..n {
        let theta: f64 = rng.gen_range(0.0..PI);
        let phi: f64 = rng.gen_range(0.0..2.0 * PI);
        let a0 = Complex64::new((theta / 2.0).cos(), 0.0);
        let a1 = Complex64::from_polar((theta / 2.0).sin(), phi);
        let mut next = Vec::with_capacity(amps.len() * 2);
        // The new qubit becomes the highest-index bit.
        for &b in [a0, a1].iter() {
            for &amp in &amps {
                next.push(amp * b);
            }
        }
        amps = next;
    }
    StateVector::from_amplitudes(n, amps).expect("product state has the right length")
}

/// State-overlap equivalence up to global phase: `|<psi_a|psi_b>| = 1` within
/// 1e-9 from `|0...0>` and from 16 seeded random product states.
pub fn verify_equivalence(a: &Circuit, b: &Circuit, theta: &[f64]) -> Result<bool, OptError> {
    if a.n_qubits() != b.n_qubits() {
        return Err(OptError::QubitMismatch(a.n_qubits(), b.n_qubits()));
    }
    if a.n_qubits() > 10 {
        return Err(OptError::TooManyQubits(a.n_qubits()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(0x455155);
    let mut states = vec![StateVector::zero(a.n_qubits())];
    for _ in 0..16 {
        states.push(random_product_state(a.n_qubits(), &mut rng));
    }
    for init in states {
        let mut sa = init.clone();
        apply_circuit(&mut sa, a, theta)?;
        let mut sb = init;
        apply_circuit(&mut sb, b, theta)?;
        if (sa.inner(&sb).norm() - 1.0).abs() > 1e-9 {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{build_pool, parse_circuit, realize_circuit, DeviceTopology};

    fn fixed(kind: GateKind, qubits: Vec<usize>, angle: f64) -> GateInstance {
        GateInstance::new(kind, qubits, GateParam::Fixed(angle))
    }

    fn plain(kind: GateKind, qubits: Vec<usize>) -> GateInstance {
        GateInstance::new(kind, qubits, GateParam::None)
    }

    /// Dense unitary of a circuit by columns, for commutator oracles.
    fn unitary(c: &Circuit) -> Vec<Vec<Complex64>> {
        let n = c.n_qubits();
        let dim = 1 << n;
        let mut cols = Vec::with_capacity(dim);
        for basis in 0..dim {
            let mut amps = vec![Complex64::new(0.0, 0.0); dim];
            amps[basis] = Complex64::new(1.0, 0.0);
            let mut s = StateVector::from_amplitudes(n, amps).unwrap();
            apply_circuit(&mut s, c, &[]).unwrap();
            cols.push(s.amplitudes().to_vec());
        }
        cols
    }

    fn unitaries_equal(a: &Circuit, b: &Circuit) -> bool {
        let (ua, ub) = (unitary(a), unitary(b));
        ua.iter().flatten().zip(ub.iter().flatten()).all(|(x, y)| (x - y).norm() < 1e-10)
    }

    #[test]
    fn rz_commutes_through_cnot_control() {
        let a = Circuit::new(
            2,
            vec![fixed(GateKind::Rz, vec![0], 0.4), plain(GateKind::Cnot, vec![0, 1])],
        )
        .unwrap();
        let b = Circuit::new(
            2,
            vec![plain(GateKind::Cnot, vec![0, 1]), fixed(GateKind::Rz, vec![0], 0.4)],
        )
        .unwrap();
        assert!(verify_equivalence(&a, &b, &[]).unwrap());
        assert!(commutes(&a.gates()[0], &a.gates()[1]));
    }

    #[test]
    fn rx_on_target_commutes_matrix_oracle() {
        // 4x4 commutator oracle: both orders produce the same unitary.
        let ab = Circuit::new(
            2,
            vec![fixed(GateKind::Rx, vec![1], 0.7), plain(GateKind::Cnot, vec![0, 1])],
        )
        .unwrap();
        let ba = Circuit::new(
            2,
            vec![plain(GateKind::Cnot, vec![0, 1]), fixed(GateKind::Rx, vec![1], 0.7)],
        )
        .unwrap();
        assert!(unitaries_equal(&ab, &ba));
        assert!(commutes(&ab.gates()[0], &ab.gates()[1]));
    }

    #[test]
    fn rx_on_control_does_not_commute() {
        let ab = Circuit::new(
            2,
            vec![fixed(GateKind::Rx, vec![0], 0.7), plain(GateKind::Cnot, vec![0, 1])],
        )
        .unwrap();
        let ba = Circuit::new(
            2,
            vec![plain(GateKind::Cnot, vec![0, 1]), fixed(GateKind::Rx, vec![0], 0.7)],
        )
        .unwrap();
        assert!(!unitaries_equal(&ab, &ba));
        assert!(!commutes(&ab.gates()[0], &ab.gates()[1]));
        // The pass must leave the order unchanged.
        let (out, swaps) = reorder_commute(&ab);
        assert_eq!(swaps, 0);
        assert_eq!(out.gates(), ab.gates());
    }

    #[test]
    fn reorder_pulls_rotation_before_cnot() {
        let c = Circuit::new(
            2,
            vec![plain(GateKind::Cnot, vec![0, 1]), fixed(GateKind::Rz, vec![0], 0.3)],
        )
        .unwrap();
        let (out, swaps) = reorder_commute(&c);
        assert_eq!(swaps, 1);
        assert_eq!(out.gates()[0].kind, GateKind::Rz);
        assert!(verify_equivalence(&c, &out, &[]).unwrap());
    }

    #[test]
    fn fuse_adjacent_rz() {
        let c = Circuit::new(
            1,
            vec![fixed(GateKind::Rz, vec![0], 0.3), fixed(GateKind::Rz, vec![0], 0.4)],
        )
        .unwrap();
        let (out, fusions, _) = fuse_rotations(&c, &OptConfig::default()).unwrap();
        assert_eq!(fusions, 1);
        assert_eq!(out.gate_count(), 1);
        match out.gates()[0].param {
            GateParam::Fixed(a) => assert!((a - 0.7).abs() < 1e-12),
            _ => panic!("expected fixed angle"),
        }
    }

    #[test]
    fn different_axes_do_not_fuse() {
        let c = Circuit::new(
            1,
            vec![fixed(GateKind::Rz, vec![0], 0.3), fixed(GateKind::Rx, vec![0], 0.1)],
        )
        .unwrap();
        let (out, fusions, _) = fuse_rotations(&c, &OptConfig::default()).unwrap();
        assert_eq!(fusions, 0);
        assert_eq!(out.gate_count(), 2);
    }

    #[test]
    fn aggressive_x_plus_rx_pi_vanishes_with_phase() {
        let c = Circuit::new(
            1,
            vec![plain(GateKind::X, vec![0]), fixed(GateKind::Rx, vec![0], PI)],
        )
        .unwrap();
        let (out, report) = optimize_fixpoint(&c, &OptConfig::aggressive()).unwrap();
        assert_eq!(out.gate_count(), 0);
        // Matrix oracle: Rx(pi) X = -i I, so the shed phase is -pi/2 mod 2pi.
        assert!(
            (report.global_phase - (-PI / 2.0)).abs() < 1e-9,
            "phase {}",
            report.global_phase
        );
        assert_eq!(report.equivalent, Some(true));
    }

    #[test]
    fn eliminate_cnot_pair() {
        let c = Circuit::new(
            2,
            vec![plain(GateKind::Cnot, vec![0, 1]), plain(GateKind::Cnot, vec![0, 1])],
        )
        .unwrap();
        let (out, n, _) = eliminate_redundant(&c, &OptConfig::default()).unwrap();
        assert_eq!(out.gate_count(), 0);
        assert_eq!(n, 1);
    }

    #[test]
    fn opposite_direction_cnots_survive() {
        let c = Circuit::new(
            2,
            vec![plain(GateKind::Cnot, vec![0, 1]), plain(GateKind::Cnot, vec![1, 0])],
        )
        .unwrap();
        let (out, n, _) = eliminate_redundant(&c, &OptConfig::default()).unwrap();
        assert_eq!(out.gate_count(), 2);
        assert_eq!(n, 0);
    }

    #[test]
    fn tiny_rotation_pruned() {
        let c = Circuit::new(1, vec![fixed(GateKind::Rx, vec![0], 1e-12)]).unwrap();
        let (out, n, _) = eliminate_redundant(&c, &OptConfig::default()).unwrap();
        assert_eq!(out.gate_count(), 0);
        assert_eq!(n, 1);
    }

    #[test]
    fn s_sdg_and_hh_cancel() {
        let c = Circuit::new(
            1,
            vec![
                plain(GateKind::S, vec![0]),
                plain(GateKind::Sdg, vec![0]),
                plain(GateKind::H, vec![0]),
                plain(GateKind::H, vec![0]),
            ],
        )
        .unwrap();
        let (out, _, _) = eliminate_redundant(&c, &OptConfig::default()).unwrap();
        assert_eq!(out.gate_count(), 0);
    }

    #[test]
    fn cascade_reaches_fused_fixpoint() {
        // Rotations on the cnot control separated by the cnot must meet and
        // fuse after reordering.
        let c = Circuit::new(
            2,
            vec![
                fixed(GateKind::Rz, vec![0], 0.3),
                plain(GateKind::Cnot, vec![0, 1]),
                fixed(GateKind::Rz, vec![0], 0.4),
                plain(GateKind::Cnot, vec![0, 1]),
            ],
        )
        .unwrap();
        let (out, report) = optimize_fixpoint(&c, &OptConfig::default()).unwrap();
        assert!(report.reached_fixpoint);
        assert_eq!(report.equivalent, Some(true));
        // One fused rz and the cnot pair cancelled.
        assert_eq!(out.gate_count(), 1);
        assert_eq!(out.gates()[0].kind, GateKind::Rz);
    }

    #[test]
    fn already_minimal_circuit_unchanged() {
        let c = Circuit::new(
            2,
            vec![fixed(GateKind::Ry, vec![0], 0.5), plain(GateKind::Cnot, vec![0, 1])],
        )
        .unwrap();
        let (out, report) = optimize_fixpoint(&c, &OptConfig::default()).unwrap();
        assert_eq!(out, c);
        assert!(report.reached_fixpoint);
    }

    #[test]
    fn conservative_preserves_kind_multiset_modulo_listed_rules() {
        // In conservative mode, no x/s/sdg may turn into rotations.
        let c = Circuit::new(
            2,
            vec![
                plain(GateKind::X, vec![0]),
                plain(GateKind::S, vec![1]),
                fixed(GateKind::Rx, vec![0], 0.4),
            ],
        )
        .unwrap();
        let (out, _) = optimize_fixpoint(&c, &OptConfig::default()).unwrap();
        let kinds: Vec<GateKind> = out.gates().iter().map(|g| g.kind).collect();
        assert!(kinds.contains(&GateKind::X));
        assert!(kinds.contains(&GateKind::S));
    }

    #[test]
    fn soundness_and_monotonicity_on_random_circuits() {
        let mut rng = ChaCha12Rng::seed_from_u64(2024);
        let topo = DeviceTopology::line(4);
        let kinds = [GateKind::X, GateKind::Rx, GateKind::Rz, GateKind::Cz];
        let pool = build_pool(&topo, &kinds.into_iter().collect()).unwrap();
        for mode in [OptMode::Conservative, OptMode::Aggressive] {
            let config = OptConfig {
                mode,
                ..OptConfig::default()
            };
            for _ in 0..100 {
                let len = rng.gen_range(1..40);
                let sel: Vec<usize> = (0..len).map(|_| rng.gen_range(0..pool.size())).collect();
                let free = realize_circuit(&pool, &sel, 4).unwrap();
                let theta: Vec<f64> =
                    (0..free.n_params()).map(|_| rng.gen_range(-PI..PI)).collect();
                let c = free.bind(&theta).unwrap();
                let (out, report) = optimize_fixpoint(&c, &config).unwrap();
                assert_eq!(report.equivalent, Some(true), "mode {mode:?}");
                assert!(out.gate_count() <= c.gate_count());
                // Idempotence: a second run changes nothing.
                let (again, report2) = optimize_fixpoint(&out, &config).unwrap();
                assert_eq!(again, out);
                assert!(report2.reached_fixpoint);
            }
        }
    }

    #[test]
    fn equivalence_examples() {
        let a = Circuit::new(1, vec![plain(GateKind::X, vec![0])]).unwrap();
        assert!(verify_equivalence(&a, &a, &[]).unwrap());
        let b = Circuit::new(1, vec![fixed(GateKind::Rx, vec![0], PI)]).unwrap();
        assert!(verify_equivalence(&a, &b, &[]).unwrap());
        let c1 = Circuit::new(1, vec![fixed(GateKind::Rz, vec![0], 0.7)]).unwrap();
        let c2 = Circuit::new(
            1,
            vec![fixed(GateKind::Rz, vec![0], 0.3), fixed(GateKind::Rz, vec![0], 0.4)],
        )
        .unwrap();
        assert!(verify_equivalence(&c1, &c2, &[]).unwrap());
        let d = Circuit::new(1, vec![fixed(GateKind::Ry, vec![0], 0.2)]).unwrap();
        assert!(!verify_equivalence(&a, &d, &[]).unwrap());
    }

    #[test]
    fn free_parameters_rejected() {
        let c = parse_circuit("qubits 1\nrx 0\n").unwrap();
        assert!(matches!(
            optimize_fixpoint(&c, &OptConfig::default()),
            Err(OptError::FreeParameters(1))
        ));
    }
}
