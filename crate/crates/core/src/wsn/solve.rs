//! Subgraph solvers and global solution assembly.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::qubo::{assignment_to_spins, Demand, IsingModel, RoutingQubo};
use super::{transmission_cost, Network, NodeRole, Subgraph, WsnError};
use crate::circuit::{
    build_pool, Circuit, DeviceTopology, GateInstance, GateKind, GateParam,
};
use crate::encoder::EncoderConfig;
use crate::search::{run_search, HardwareAwareEvaluator, SearchConfig};
use crate::sim::{self, PauliString, PauliSum};
use crate::vqe::{run_vqe, MolecularProblem, ThetaInit, VqeConfig};

/// Ising spins map to qubits as `s_i = -Z_i`: the qubit state `|x_i>` has
/// `Z = 1 - 2 x_i` while `x = (1 + s) / 2` gives `s = 2x - 1`.
pub fn ising_to_pauli_sum(ising: &IsingModel) -> PauliSum {
    let mut terms = Vec::new();
    if ising.offset != 0.0 {
        terms.push(PauliString::identity(ising.offset));
    }
    for (i, &h) in ising.h.iter().enumerate() {
        if h != 0.0 {
            terms.push(PauliString::z(i, -h));
        }
    }
    for (&(i, j), &jij) in &ising.j {
        if jij != 0.0 {
            terms.push(PauliString::zz(i, j, jij));
        }
    }
    PauliSum::new(ising.n_spins(), terms).expect("ising indices are in range")
}

/// Standard alternating ansatz with `p` layers: a Hadamard layer, then per
/// layer a problem block (`cnot - rz - cnot` per coupling, `rz` per local
/// field) and an `rx` mixer per qubit. Every rotation owns its parameter
/// slot.
pub fn qaoa_ansatz(ising: &IsingModel, layers: usize) -> Circuit {
    let n = ising.n_spins();
    let mut gates = Vec::new();
    for q in 0..n {
        gates.push(GateInstance::new(GateKind::H, vec![q], GateParam::None));
    }
    let mut slot = 0;
    let mut take_slot = || {
        slot += 1;
        GateParam::Slot(slot - 1)
    };
    for _ in 0..layers {
        for (&(i, j), _) in &ising.j {
            gates.push(GateInstance::new(GateKind::Cnot, vec![i, j], GateParam::None));
            gates.push(GateInstance::new(GateKind::Rz, vec![j], take_slot()));
            gates.push(GateInstance::new(GateKind::Cnot, vec![i, j], GateParam::None));
        }
        for (i, &h) in ising.h.iter().enumerate() {
            if h != 0.0 {
                gates.push(GateInstance::new(GateKind::Rz, vec![i], take_slot()));
            }
        }
        for q in 0..n {
            gates.push(GateInstance::new(GateKind::Rx, vec![q], take_slot()));
        }
    }
    Circuit::new(n, gates).expect("qaoa ansatz is valid")
}

/// Where the variational ansatz comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnsatzSource {
    /// Architecture search over the `{h, rx, rz, rzz}` pool.
    QbsaSearch,
    /// The standard alternating ansatz.
    Qaoa,
    /// Exhaustive enumeration.
    BruteForce,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub qaoa_layers: usize,
    pub vqe_iters: usize,
    pub vqe_learning_rate: f64,
    /// Independent VQE restarts; the best decoded assignment wins.
    pub restarts: usize,
    /// Search budget for the discovered-ansatz mode.
    pub search_steps: usize,
    pub search_batch: usize,
    pub search_depth: usize,
    pub seed: u64,
}

impl Default for SolveConfig {
    fn default() -> SolveConfig {
        SolveConfig {
            qaoa_layers: 2,
            vqe_iters: 200,
            vqe_learning_rate: 0.1,
            restarts: 3,
            search_steps: 40,
            search_batch: 4,
            search_depth: 10,
            seed: 0,
        }
    }
}

fn decode_most_probable(
    ansatz: &Circuit,
    theta: &[f64],
    n_vars: usize,
) -> Result<Vec<bool>, WsnError> {
    let state = sim::run(ansatz, theta, None, 0)?;
    let (mut best_idx, mut best_p) = (0usize, -1.0);
    for i in 0..state.amplitudes().len() {
        let p = state.probability(i);
        if p > best_p {
            best_p = p;
            best_idx = i;
        }
    }
    Ok((0..n_vars).map(|q| best_idx & (1 << q) != 0).collect())
}

fn variational_assignment(
    ising: &IsingModel,
    ansatzes: &[&Circuit],
    config: &SolveConfig,
    seed: u64,
) -> Result<Vec<bool>, WsnError> {
    let obs = ising_to_pauli_sum(ising);
    let problem = MolecularProblem {
        name: "ising".into(),
        n_qubits: obs.n_qubits(),
        reference_energy: f64::NEG_INFINITY, // not needed for decoding
        hamiltonian: obs,
    };
    let mut best: Option<(f64, Vec<bool>)> = None;
    for restart in 0..config.restarts.max(1) {
        for (a, ansatz) in ansatzes.iter().enumerate() {
            let vqe_config = VqeConfig {
                max_iters: config.vqe_iters,
                learning_rate: config.vqe_learning_rate,
                init: ThetaInit::Uniform,
                noise: None,
                n_trajectories: 1,
                seed: seed.wrapping_add(1 + 31 * restart as u64 + a as u64),
            };
            let result = run_vqe(&problem, ansatz, &vqe_config)?;
            let x = decode_most_probable(ansatz, &result.best_theta, ising.n_spins())?;
            let e = ising.energy(&assignment_to_spins(&x));
            if best.as_ref().is_none_or(|(be, _)| e < *be) {
                best = Some((e, x));
            }
        }
    }
    Ok(best.expect("at least one restart").1)
}

/// Solve one Ising instance, returning a binary edge assignment.
pub fn solve_subgraph(
    ising: &IsingModel,
    source: AnsatzSource,
    config: &SolveConfig,
) -> Result<Vec<bool>, WsnError> {
    let m = ising.n_spins();
    match source {
        AnsatzSource::BruteForce => {
            if m > 20 {
                return Err(WsnError::TooManyVariables {
                    got: m,
                    limit: 20,
                    solver: "brute force",
                });
            }
            let mut best = (vec![false; m], f64::INFINITY);
            for bits in 0..(1u64 << m) {
                let x: Vec<bool> = (0..m).map(|i| bits & (1 << i) != 0).collect();
                let e = ising.energy(&assignment_to_spins(&x));
                if e < best.1 {
                    best = (x, e);
                }
            }
            Ok(best.0)
        }
        AnsatzSource::Qaoa => {
            if m > 12 {
                return Err(WsnError::TooManyVariables {
                    got: m,
                    limit: 12,
                    solver: "qaoa",
                });
            }
            let ansatz = qaoa_ansatz(ising, config.qaoa_layers);
            variational_assignment(ising, &[&ansatz], config, config.seed)
        }
        AnsatzSource::QbsaSearch => {
            if m > 12 {
                return Err(WsnError::TooManyVariables {
                    got: m,
                    limit: 12,
                    solver: "discovered ansatz",
                });
            }
            // Couple qubits along the problem's own interaction graph, so
            // the pool's rzz entries sit exactly on the Ising couplings.
            let topology = if ising.j.is_empty() {
                DeviceTopology::line(m)
            } else {
                DeviceTopology::new(
                    m,
                    ising.j.keys().copied(),
                    GateKind::ALL.iter().copied().filter(|k| k.arity() == 1),
                    GateKind::ALL.iter().copied().filter(|k| k.arity() == 2),
                )?
            };
            let kinds = [GateKind::H, GateKind::Rx, GateKind::Rz, GateKind::Rzz]
                .into_iter()
                .collect();
            let pool = build_pool(&topology, &kinds)?;
            let search_config = SearchConfig {
                depth: config.search_depth,
                steps: config.search_steps,
                batch: config.search_batch,
                tau0: 1.0,
                tau_decay: 0.99,
                learning_rate: 0.1,
                n_pairs: 150,
                pst_shots: 64,
                seed: config.seed,
                ..SearchConfig::default()
            };
            let mut encoder_config = EncoderConfig::defaults(pool.size());
            encoder_config.n_feat_qubits = 2;
            encoder_config.l_qsl = 1;
            let evaluator = HardwareAwareEvaluator::from_config(&search_config, None);
            let outcome = run_search(&pool, &search_config, &encoder_config, &evaluator)?;
            // Both decoded structures are cheap to try; VQE restarts are
            // split across them and the best decoded assignment wins.
            variational_assignment(
                ising,
                &[&outcome.best_circuit, &outcome.final_circuit],
                config,
                config.seed,
            )
        }
    }
}

/// Assembled global routing: selected intra-cluster edges, the inter-cluster
/// backbone, any out-of-range patched links, the total transmission cost,
/// and per-node feasibility flags.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoutingSolution {
    pub intra_edges: Vec<(usize, usize)>,
    pub backbone_edges: Vec<(usize, usize)>,
    pub patched_edges: Vec<(usize, usize)>,
    pub total_energy: f64,
    /// Flow-conservation satisfaction per fixed-demand node.
    pub flow_feasible: BTreeMap<usize, bool>,
    /// Energy-capacity satisfaction per finite-energy node.
    pub energy_feasible: BTreeMap<usize, bool>,
    pub unpatchable: bool,
}

impl RoutingSolution {
    pub fn all_selected_edges(&self) -> impl Iterator<Item = &(usize, usize)> {
        self.intra_edges
            .iter()
            .chain(&self.backbone_edges)
            .chain(&self.patched_edges)
    }
}

fn feasibility_flags(
    network: &Network,
    solution: &mut RoutingSolution,
    qubos: &[&RoutingQubo],
    assignments: &[&[bool]],
) {
    for (qubo, x) in qubos.iter().zip(assignments) {
        for (&node, d) in &qubo.demand {
            let Demand::Fixed(b) = d else { continue };
            let mut net_flow = 0.0;
            for (v, &(from, to)) in qubo.var_edges.iter().enumerate() {
                if x[v] {
                    if from == node {
                        net_flow += 1.0;
                    }
                    if to == node {
                        net_flow -= 1.0;
                    }
                }
            }
            solution
                .flow_feasible
                .insert(node, (net_flow - b).abs() < 1e-9);
        }
    }
    let mut spend: BTreeMap<usize, f64> = BTreeMap::new();
    let selected: Vec<(usize, usize)> = solution.all_selected_edges().copied().collect();
    for (from, to) in selected {
        *spend.entry(from).or_insert(0.0) += transmission_cost(from, to, network);
    }
    for node in &network.nodes {
        if node.energy.is_finite() {
            let used = spend.get(&node.id).copied().unwrap_or(0.0);
            solution.energy_feasible.insert(node.id, used <= node.energy);
        }
    }
}

/// Stitch per-subgraph assignments into a global solution. The backbone
/// greedily connects each cluster (preferring its cluster heads) to the
/// component containing the base station with the cheapest in-range link;
/// when no in-range link exists the cheapest out-of-range link is patched in.
pub fn assemble_solution(
    network: &Network,
    subgraphs: &[Subgraph],
    qubos: &[RoutingQubo],
    assignments: &[Vec<bool>],
) -> Result<RoutingSolution, WsnError> {
    assert_eq!(subgraphs.len(), assignments.len(), "one assignment per subgraph");
    assert_eq!(subgraphs.len(), qubos.len(), "one qubo per subgraph");
    let mut solution = RoutingSolution {
        intra_edges: Vec::new(),
        backbone_edges: Vec::new(),
        patched_edges: Vec::new(),
        total_energy: 0.0,
        flow_feasible: BTreeMap::new(),
        energy_feasible: BTreeMap::new(),
        unpatchable: false,
    };
    for (qubo, x) in qubos.iter().zip(assignments) {
        for (v, &edge) in qubo.var_edges.iter().enumerate() {
            if x[v] {
                solution.intra_edges.push(edge);
            }
        }
    }

    // Greedy backbone over cluster components, rooted at the base station.
    // Link preference per unconnected cluster: in-range from a cluster head,
    // then in-range from any node, then the cheapest out-of-range patch.
    let bs = network.bs_index();
    let cluster_of: BTreeMap<usize, usize> = subgraphs
        .iter()
        .enumerate()
        .flat_map(|(c, s)| s.nodes.iter().map(move |&n| (n, c)))
        .collect();
    let mut connected: BTreeSet<usize> = [cluster_of[&bs]].into();
    let r2 = network.comm_range * network.comm_range;
    while connected.len() < subgraphs.len() {
        // (tier, cost, cluster, from, to); lower tier wins, then cost.
        let mut best: Option<(u8, f64, usize, usize, usize)> = None;
        for (c, sub) in subgraphs.iter().enumerate() {
            if connected.contains(&c) {
                continue;
            }
            for &u in &sub.nodes {
                let is_ch = network.nodes[u].role == NodeRole::Ch;
                for (&v, &cv) in &cluster_of {
                    if !connected.contains(&cv) {
                        continue;
                    }
                    let cost = transmission_cost(u, v, network);
                    let d2 = cost / network.epsilon.max(f64::MIN_POSITIVE);
                    let tier = if d2 <= r2 && is_ch {
                        0
                    } else if d2 <= r2 {
                        1
                    } else {
                        2
                    };
                    let entry = (tier, cost, c, u, v);
                    if best.is_none_or(|(bt, bc, ..)| (tier, cost) < (bt, bc)) {
                        best = Some(entry);
                    }
                }
            }
        }
        match best {
            Some((tier, _, c, u, v)) => {
                if tier < 2 {
                    solution.backbone_edges.push((u, v));
                } else {
                    solution.patched_edges.push((u, v));
                }
                connected.insert(c);
            }
            None => {
                solution.unpatchable = true;
                break;
            }
        }
    }

    solution.total_energy = solution
        .all_selected_edges()
        .map(|&(a, b)| transmission_cost(a, b, network))
        .sum();
    let qubo_refs: Vec<&RoutingQubo> = qubos.iter().collect();
    let assignment_refs: Vec<&[bool]> = assignments.iter().map(|a| a.as_slice()).collect();
    feasibility_flags(network, &mut solution, &qubo_refs, &assignment_refs);
    Ok(solution)
}

/// Classical per-node baseline: every non-base-station node takes its
/// cheapest in-range link to a neighbor strictly closer to the base station;
/// nodes with no such neighbor are patched straight to the base station.
pub fn greedy_baseline(network: &Network) -> RoutingSolution {
    let bs = network.bs_index();
    let bs_node = &network.nodes[bs];
    let dist_to_bs = |i: usize| -> f64 {
        (network.nodes[i].x - bs_node.x).powi(2) + (network.nodes[i].y - bs_node.y).powi(2)
    };
    let mut solution = RoutingSolution {
        intra_edges: Vec::new(),
        backbone_edges: Vec::new(),
        patched_edges: Vec::new(),
        total_energy: 0.0,
        flow_feasible: BTreeMap::new(),
        energy_feasible: BTreeMap::new(),
        unpatchable: false,
    };
    for node in &network.nodes {
        if node.role == NodeRole::Bs {
            continue;
        }
        let my_d = dist_to_bs(node.id);
        let next_hop = network
            .edges
            .iter()
            .filter(|&&(a, b)| a == node.id && dist_to_bs(b) < my_d)
            .min_by(|&&(a, b), &&(c, d)| {
                transmission_cost(a, b, network)
                    .partial_cmp(&transmission_cost(c, d, network))
                    .expect("finite costs")
            });
        match next_hop {
            Some(&(a, b)) => solution.intra_edges.push((a, b)),
            None => solution.patched_edges.push((node.id, bs)),
        }
    }
    solution.total_energy = solution
        .all_selected_edges()
        .map(|&(a, b)| transmission_cost(a, b, network))
        .sum();
    feasibility_flags(network, &mut solution, &[], &[]);
    solution
}
