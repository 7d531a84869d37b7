//! Edge-selection QUBO for intra-cluster routing, and its Ising form.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{transmission_cost, Network, NodeRole, Subgraph, WsnError};

/// Net-flow requirement of one node. `Sink` nodes absorb any amount and
/// carry no flow penalty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Demand {
    Fixed(f64),
    Sink,
}

/// Binary quadratic form over subgraph edges:
/// `offset + sum l_i x_i + sum_(i<j) q_ij x_i x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingQubo {
    /// Variable index to directed edge.
    pub var_edges: Vec<(usize, usize)>,
    pub linear: Vec<f64>,
    pub quadratic: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
    pub lambda_flow: f64,
    pub lambda_energy: f64,
    /// The demand table this QUBO encodes, for decode-time feasibility
    /// checks.
    pub demand: BTreeMap<usize, Demand>,
}

impl RoutingQubo {
    pub fn n_vars(&self) -> usize {
        self.var_edges.len()
    }

    pub fn energy(&self, x: &[bool]) -> f64 {
        assert_eq!(x.len(), self.n_vars(), "assignment length");
        let mut e = self.offset;
        for (i, &xi) in x.iter().enumerate() {
            if xi {
                e += self.linear[i];
            }
        }
        for (&(i, j), &q) in &self.quadratic {
            if x[i] && x[j] {
                e += q;
            }
        }
        e
    }

    /// Brute-force optimum (up to 20 variables).
    pub fn brute_force(&self) -> Result<(Vec<bool>, f64), WsnError> {
        let m = self.n_vars();
        if m > 20 {
            return Err(WsnError::TooManyVariables {
                got: m,
                limit: 20,
                solver: "brute force",
            });
        }
        let mut best = (Vec::new(), f64::INFINITY);
        for bits in 0..(1u64 << m) {
            let x: Vec<bool> = (0..m).map(|i| bits & (1 << i) != 0).collect();
            let e = self.energy(&x);
            if e < best.1 {
                best = (x, e);
            }
        }
        Ok(best)
    }
}

/// Default demand table: sensors source one unit; the base station is the
/// sink when present, otherwise the cluster heads absorb; a cluster with
/// neither gets its node nearest the base station as sink. Cluster heads in
/// base-station clusters relay (`Fixed(0)`).
pub fn default_demand(network: &Network, subgraph: &Subgraph) -> BTreeMap<usize, Demand> {
    let mut demand = BTreeMap::new();
    let has_bs = subgraph
        .nodes
        .iter()
        .any(|&i| network.nodes[i].role == NodeRole::Bs);
    let has_ch = subgraph
        .nodes
        .iter()
        .any(|&i| network.nodes[i].role == NodeRole::Ch);
    let bs = network.bs_index();
    let fallback_sink = subgraph
        .nodes
        .iter()
        .copied()
        .min_by(|&a, &b| {
            let da = (network.nodes[a].x - network.nodes[bs].x).powi(2)
                + (network.nodes[a].y - network.nodes[bs].y).powi(2);
            let db = (network.nodes[b].x - network.nodes[bs].x).powi(2)
                + (network.nodes[b].y - network.nodes[bs].y).powi(2);
            da.partial_cmp(&db).expect("finite coords")
        })
        .expect("subgraph is non-empty");
    for &i in &subgraph.nodes {
        let d = match network.nodes[i].role {
            NodeRole::Bs => Demand::Sink,
            NodeRole::Ch if has_bs => Demand::Fixed(0.0),
            NodeRole::Ch => Demand::Sink,
            NodeRole::Sensor => Demand::Fixed(1.0),
        };
        demand.insert(i, d);
    }
    if !has_bs && !has_ch {
        demand.insert(fallback_sink, Demand::Sink);
    }
    demand
}

/// Penalty weight that dominates any route cost: twice the maximum
/// single-path cost. For small subgraphs the costliest simple path is found
/// exactly by depth-first search; larger ones fall back to the total edge
/// cost, which bounds every simple path.
pub fn default_penalty(network: &Network, subgraph: &Subgraph) -> f64 {
    let mut seen = BTreeMap::new();
    for &(a, b) in &subgraph.edges {
        let key = (a.min(b), a.max(b));
        seen.entry(key)
            .or_insert_with(|| transmission_cost(a, b, network));
    }
    let total: f64 = seen.values().sum();
    if seen.len() > 12 {
        return 2.0 * total.max(1.0);
    }
    let adjacency: Vec<(usize, usize, f64)> = seen
        .iter()
        .map(|(&(a, b), &c)| (a, b, c))
        .collect();
    fn dfs(
        node: usize,
        visited: &mut Vec<usize>,
        adjacency: &[(usize, usize, f64)],
    ) -> f64 {
        let mut best = 0.0f64;
        for &(a, b, c) in adjacency {
            let next = if a == node && !visited.contains(&b) {
                b
            } else if b == node && !visited.contains(&a) {
                a
            } else {
                continue;
            };
            visited.push(next);
            best = best.max(c + dfs(next, visited, adjacency));
            visited.pop();
        }
        best
    }
    let mut max_path = 0.0f64;
    for &node in &subgraph.nodes {
        let mut visited = vec![node];
        max_path = max_path.max(dfs(node, &mut visited, &adjacency));
    }
    2.0 * max_path.max(1.0)
}

/// Build the routing QUBO for one subgraph: transmission-cost objective,
/// squared flow-conservation penalties for nodes with fixed demand, and a
/// quadratic energy-capacity surrogate `lambda_energy * (sum c x / E_i)^2`
/// per finite-energy node.
pub fn build_qubo(
    network: &Network,
    subgraph: &Subgraph,
    lambda_flow: f64,
    lambda_energy: f64,
    demand: &BTreeMap<usize, Demand>,
) -> Result<RoutingQubo, WsnError> {
    assert!(lambda_flow >= 0.0 && lambda_energy >= 0.0, "penalties must be nonnegative");
    if subgraph.edges.is_empty() {
        return Err(WsnError::NoEdges);
    }
    let var_edges = subgraph.edges.clone();
    let var_of: BTreeMap<(usize, usize), usize> = var_edges
        .iter()
        .enumerate()
        .map(|(v, &e)| (e, v))
        .collect();
    let m = var_edges.len();
    let mut linear = vec![0.0; m];
    let mut quadratic: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut offset = 0.0;
    let add_quad = |quadratic: &mut BTreeMap<(usize, usize), f64>, a: usize, b: usize, w: f64| {
        let key = (a.min(b), a.max(b));
        *quadratic.entry(key).or_insert(0.0) += w;
    };

    // Objective: transmission costs.
    for (v, &(a, b)) in var_edges.iter().enumerate() {
        linear[v] += transmission_cost(a, b, network);
    }

    // Flow conservation (out - in - b_i)^2 for constrained nodes.
    for &i in &subgraph.nodes {
        let Some(Demand::Fixed(b)) = demand.get(&i) else {
            continue;
        };
        let mut signed: Vec<(usize, f64)> = Vec::new();
        for (&(from, to), &v) in &var_of {
            if from == i {
                signed.push((v, 1.0));
            } else if to == i {
                signed.push((v, -1.0));
            }
        }
        offset += lambda_flow * b * b;
        for &(v, s) in &signed {
            // s^2 x^2 = x folds into the linear part.
            linear[v] += lambda_flow * (1.0 - 2.0 * b * s);
        }
        for (idx, &(v, s)) in signed.iter().enumerate() {
            for &(w, t) in &signed[idx + 1..] {
                add_quad(&mut quadratic, v, w, 2.0 * lambda_flow * s * t);
            }
        }
    }

    // Energy-capacity surrogate per finite-energy node.
    if lambda_energy > 0.0 {
        for &i in &subgraph.nodes {
            let e_i = network.nodes[i].energy;
            if !e_i.is_finite() {
                continue;
            }
            let outgoing: Vec<(usize, f64)> = var_edges
                .iter()
                .enumerate()
                .filter(|(_, &(from, _))| from == i)
                .map(|(v, &(a, b))| (v, transmission_cost(a, b, network) / e_i))
                .collect();
            for &(v, c) in &outgoing {
                linear[v] += lambda_energy * c * c;
            }
            for (idx, &(v, c)) in outgoing.iter().enumerate() {
                for &(w, d) in &outgoing[idx + 1..] {
                    add_quad(&mut quadratic, v, w, 2.0 * lambda_energy * c * d);
                }
            }
        }
    }

    quadratic.retain(|_, w| *w != 0.0);
    Ok(RoutingQubo {
        var_edges,
        linear,
        quadratic,
        offset,
        lambda_flow,
        lambda_energy,
        demand: demand.clone(),
    })
}

/// Ising model over spins `s in {-1,+1}`:
/// `offset + sum h_i s_i + sum_(i<j) J_ij s_i s_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct IsingModel {
    pub h: Vec<f64>,
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn n_spins(&self) -> usize {
        self.h.len()
    }

    pub fn energy(&self, s: &[i8]) -> f64 {
        assert_eq!(s.len(), self.n_spins());
        let mut e = self.offset;
        for (i, &si) in s.iter().enumerate() {
            e += self.h[i] * si as f64;
        }
        for (&(i, j), &jij) in &self.j {
            e += jij * (s[i] as f64) * (s[j] as f64);
        }
        e
    }
}

/// Substitute `x = (1 + s) / 2`; energies agree for every assignment.
pub fn qubo_to_ising(q: &RoutingQubo) -> IsingModel {
    let m = q.n_vars();
    let mut h = vec![0.0; m];
    let mut j: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut offset = q.offset;
    for (i, &l) in q.linear.iter().enumerate() {
        offset += l / 2.0;
        h[i] += l / 2.0;
    }
    for (&(a, b), &w) in &q.quadratic {
        offset += w / 4.0;
        h[a] += w / 4.0;
        h[b] += w / 4.0;
        *j.entry((a, b)).or_insert(0.0) += w / 4.0;
    }
    j.retain(|_, w| *w != 0.0);
    IsingModel { h, j, offset }
}

/// Spin vector of a binary assignment under `x = (1 + s) / 2`.
pub fn assignment_to_spins(x: &[bool]) -> Vec<i8> {
    x.iter().map(|&b| if b { 1 } else { -1 }).collect()
}
