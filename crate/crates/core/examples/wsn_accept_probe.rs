//! Scratch probe for acceptance-style random subgraph solves (not shipped).
use qas_core::wsn::{
    assignment_to_spins, build_qubo, default_demand, default_penalty, partition, qubo_to_ising,
    AnsatzSource, Network, SolveConfig,
};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let steps: usize = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(60);
    let depth_mult: usize = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2);
    let iters: usize = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(300);
    let restarts: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(3);
    let lr: f64 = args.get(5).map(|s| s.parse().unwrap()).unwrap_or(0.1);

    let t0 = std::time::Instant::now();
    let mut qbsa_hits = 0;
    let mut qaoa_hits = 0;
    let mut total = 0;
    let mut seed = 0u64;
    while total < 20 {
        seed += 1;
        let Ok(net) = Network::random(7, 1, 26.0, 18.0, 11.0, 1.0, seed) else { continue };
        let Ok(subs) = partition(&net, 2, seed) else { continue };
        for sub in subs.iter().filter(|s| !s.edges.is_empty() && s.edges.len() <= 10) {
            if total >= 20 { break }
            let demand = default_demand(&net, sub);
            let q = build_qubo(&net, sub, default_penalty(&net, sub), 0.0, &demand).unwrap();
            let ising = qubo_to_ising(&q);
            let (_, opt) = q.brute_force().unwrap();
            let config = SolveConfig {
                search_steps: steps,
                search_depth: depth_mult * q.n_vars(),
                vqe_iters: iters,
                vqe_learning_rate: lr,
                restarts,
                seed: 7000 + seed,
                ..SolveConfig::default()
            };
            let xq = qas_core::wsn::solve_subgraph(&ising, AnsatzSource::QbsaSearch, &config).unwrap();
            let eq = ising.energy(&assignment_to_spins(&xq));
            let xa = qas_core::wsn::solve_subgraph(&ising, AnsatzSource::Qaoa, &config).unwrap();
            let ea = ising.energy(&assignment_to_spins(&xa));
            assert!(eq >= opt - 1e-6 && ea >= opt - 1e-6);
            let hit_q = (eq - opt).abs() < 1e-6;
            let hit_a = (ea - opt).abs() < 1e-6;
            qbsa_hits += hit_q as usize;
            qaoa_hits += hit_a as usize;
            total += 1;
            println!(
                "#{total} m={} qbsa {} qaoa {}",
                q.n_vars(),
                if hit_q { "HIT " } else { "miss" },
                if hit_a { "HIT " } else { "miss" },
            );
        }
    }
    println!(
        "qbsa {qbsa_hits}/{total}, qaoa {qaoa_hits}/{total}, {:.1?}",
        t0.elapsed()
    );
}
