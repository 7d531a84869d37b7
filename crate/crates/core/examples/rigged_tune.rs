//! Scratch harness for tuning rigged-pool convergence (not shipped behavior).
use qas_core::circuit::{build_pool, DeviceTopology, GateKind};
use qas_core::encoder::EncoderConfig;
use qas_core::search::{run_search, RiggedEvaluator, SearchConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let lr: f64 = args.get(1).map(|s| s.parse().unwrap()).unwrap_or(0.05);
    let tau0: f64 = args.get(2).map(|s| s.parse().unwrap()).unwrap_or(2.0);
    let decay: f64 = args.get(3).map(|s| s.parse().unwrap()).unwrap_or(0.99);
    let batch: usize = args.get(4).map(|s| s.parse().unwrap()).unwrap_or(8);
    let mode: String = args.get(5).cloned().unwrap_or_else(|| "identity".into());
    let seed: u64 = args.get(6).map(|s| s.parse().unwrap()).unwrap_or(5);

    // 2-qubit line with {rx, rz, cz}: C = 6 like the acceptance harness.
    let pool = build_pool(
        &DeviceTopology::line(2),
        &[GateKind::Rx, GateKind::Rz, GateKind::Cz, GateKind::X]
            .into_iter()
            .collect(),
    )
    .unwrap();
    println!("pool size C = {}", pool.size());
    let config = SearchConfig {
        depth: 4,
        steps: 200,
        batch,
        tau0,
        tau_decay: decay,
        learning_rate: lr,
        seed,
        ..SearchConfig::default()
    };
    let mut enc = EncoderConfig::defaults(pool.size());
    enc.mode = mode.parse().unwrap();
    enc.n_feat_qubits = 2;
    enc.l_qsl = 1;
    let evaluator = RiggedEvaluator { target_column: 2 };
    let t0 = std::time::Instant::now();
    let out = run_search(&pool, &config, &enc, &evaluator).unwrap();
    for r in out.trace.records.iter().step_by(20) {
        println!(
            "step {:3}  temp {:.3}  loss {:+.4}  p[target] {:.4}",
            r.step, r.temperature, r.loss_total, r.column_probs[2]
        );
    }
    let last = out.trace.records.last().unwrap();
    println!(
        "FINAL p[target] = {:.4}  ({} steps, {:.1?})",
        last.column_probs[2],
        out.trace.records.len(),
        t0.elapsed()
    );
}
