//! Scratch probe for subgraph solver quality (not shipped behavior).
use qas_core::wsn::{
    assignment_to_spins, build_qubo, default_demand, default_penalty, partition, qubo_to_ising,
    AnsatzSource, Network, SolveConfig,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(40);
    let depth: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(10);
    let iters: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(200);
    let restarts: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(3);

    let text = std::fs::read_to_string("/root/crate/docs/layouts/desk.json").unwrap();
    let net = Network::from_layout_json(&text).unwrap();
    let subs = partition(&net, 3, 1).unwrap();
    let t0 = std::time::Instant::now();
    let mut hits = 0;
    for (i, sub) in subs.iter().enumerate() {
        let demand = default_demand(&net, sub);
        let q = build_qubo(&net, sub, default_penalty(&net, sub), 0.0, &demand).unwrap();
        let ising = qubo_to_ising(&q);
        let (_, opt) = q.brute_force().unwrap();
        let config = SolveConfig {
            search_steps: steps,
            search_depth: depth,
            vqe_iters: iters,
            restarts,
            seed: 100 + i as u64,
            ..SolveConfig::default()
        };
        let x = qas_core::wsn::solve_subgraph(&ising, AnsatzSource::QbsaSearch, &config).unwrap();
        let e = ising.energy(&assignment_to_spins(&x));
        let hit = (e - opt).abs() < 1e-6;
        hits += hit as usize;
        println!(
            "cluster {i}: m={} qbsa energy {e:.2} vs optimum {opt:.2} {}",
            q.n_vars(),
            if hit { "HIT" } else { "miss" }
        );
    }
    println!("{hits}/3 optimal, {:.1?}", t0.elapsed());
}
