//! `qas`: architecture search, circuit optimization, and evaluation backends
//! behind one binary.
//!
//! Subcommands: `search` (discover a circuit), `optimize` (peephole
//! compression), `vqe` (ground-state energy of a Hamiltonian file), `wsn`
//! (sensor-network routing), `check` (self-test suites). Every run writes a
//! `manifest.json` capturing command, config, seeds, and input digests;
//! result files name the manifest they came from.

mod manifest;

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use manifest::{command_line, RunManifest};
use qas_core::circuit::{
    build_pool, parse_circuit, serialize_circuit, DeviceTopology, GateKind,
};
use qas_core::encoder::{save_checkpoint, EncoderConfig, EncoderMode};
use qas_core::optimize::{optimize_fixpoint, OptConfig, OptMode};
use qas_core::search::{run_search, HardwareAwareEvaluator, SearchConfig};
use qas_core::sim::NoiseProfile;
use qas_core::vqe::{load_problem, run_vqe, VqeConfig};
use qas_core::wsn::{
    assemble_solution, build_qubo, default_demand, default_penalty, greedy_baseline, partition,
    qubo_to_ising, solve_subgraph, AnsatzSource, Network, RoutingSolution, SolveConfig,
};

#[derive(Parser)]
#[command(name = "qas", version, about = "Quantum architecture search toolkit")]
struct Cli {
    /// Output directory (env QAS_OUT_DIR, default ".").
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Bound the thread pool used for batch evaluations (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Discover a circuit by differentiable architecture search.
    Search(SearchArgs),
    /// Compress a circuit with commutation, fusion, and elimination passes.
    Optimize(OptimizeArgs),
    /// Minimize a Hamiltonian's energy over a fixed ansatz.
    Vqe(VqeArgs),
    /// Solve a sensor-network routing instance.
    Wsn(WsnArgs),
    /// Run the built-in gradient, simulator, and optimizer self-tests.
    Check(CheckArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Comma-separated gate kinds for the pool, e.g. `x,rx,rz,cz`.
    #[arg(long, default_value = "x,rx,rz,cz")]
    pool_kinds: String,
    #[arg(long, default_value_t = 4)]
    qubits: usize,
    /// Coupled qubit pairs, e.g. `0-1,1-2` (default: nearest-neighbour line).
    #[arg(long)]
    coupling: Option<String>,
    #[arg(long, default_value_t = 8)]
    depth: usize,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    tau_decay: Option<f64>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    n_pairs: Option<usize>,
    #[arg(long)]
    n_bins: Option<usize>,
    #[arg(long)]
    pst_shots: Option<u64>,
    #[arg(long)]
    w_expressibility: Option<f64>,
    #[arg(long)]
    w_pst: Option<f64>,
    #[arg(long)]
    lambda_stability: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Encoder mode: qbsa, classical, or identity.
    #[arg(long, default_value = "qbsa")]
    encoder_mode: String,
    /// Noise profile JSON driving the hardware-aware objective.
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Search config JSON; explicit flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Input circuit file.
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, default_value = "conservative")]
    mode: String,
    #[arg(long, default_value_t = 1e-8)]
    angle_epsilon: f64,
    #[arg(long, default_value_t = 32)]
    max_passes: usize,
    /// Comma-separated angles binding the circuit's free parameters.
    #[arg(long)]
    theta: Option<String>,
    /// Read `best_theta` from a vqe report JSON to bind free parameters.
    #[arg(long)]
    theta_from: Option<PathBuf>,
    /// Output circuit path (default: `<input stem>_opt.qc` in the out dir).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VqeArgs {
    /// Hamiltonian file (`coefficient pauli_word` lines).
    #[arg(long)]
    problem: PathBuf,
    /// Ansatz circuit file.
    #[arg(long)]
    ansatz: PathBuf,
    #[arg(long)]
    noise: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 300)]
    max_iters: usize,
    #[arg(long, default_value_t = 0.1)]
    learning_rate: f64,
    #[arg(long, default_value_t = 8)]
    n_trajectories: usize,
}

#[derive(Args)]
struct WsnArgs {
    /// Network layout JSON; omit to generate a seeded desk-scale instance.
    #[arg(long)]
    layout: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    k: usize,
    /// Solver: qbsa, qaoa, greedy, or brute.
    #[arg(long, default_value = "brute")]
    solver: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    lambda_flow: Option<f64>,
    #[arg(long)]
    lambda_energy: Option<f64>,
    /// Write the (possibly generated) layout here.
    #[arg(long)]
    save_layout: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Skip the slower optimizer soundness sweep.
    #[arg(long)]
    quick: bool,
}

fn main() {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .expect("thread pool not yet initialized");
    }
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| std::env::var_os("QAS_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let code = match run(cli.command, &out_dir) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            1
        }
    };
    std::process::exit(code);
}

fn run(command: Command, out_dir: &Path) -> Result<i32> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;
    match command {
        Command::Search(args) => cmd_search(args, out_dir).map(|()| 0),
        Command::Optimize(args) => cmd_optimize(args, out_dir).map(|()| 0),
        Command::Vqe(args) => cmd_vqe(args, out_dir).map(|()| 0),
        Command::Wsn(args) => cmd_wsn(args, out_dir).map(|()| 0),
        Command::Check(args) => cmd_check(args),
    }
}

fn parse_kinds(text: &str) -> Result<BTreeSet<GateKind>> {
    let mut kinds = BTreeSet::new();
    for name in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let kind = GateKind::from_name(name)
            .with_context(|| format!("unknown gate kind `{name}` in --pool-kinds"))?;
        kinds.insert(kind);
    }
    if kinds.is_empty() {
        bail!("--pool-kinds must name at least one gate");
    }
    Ok(kinds)
}

fn parse_coupling(text: &str, n_qubits: usize) -> Result<Vec<(usize, usize)>> {
    let mut pairs = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (a, b) = part
            .split_once('-')
            .with_context(|| format!("coupling `{part}` must look like `0-1`"))?;
        let a: usize = a.parse().with_context(|| format!("bad qubit in `{part}`"))?;
        let b: usize = b.parse().with_context(|| format!("bad qubit in `{part}`"))?;
        if a >= n_qubits || b >= n_qubits {
            bail!("coupling `{part}` references a qubit outside 0..{n_qubits}");
        }
        pairs.push((a, b));
    }
    Ok(pairs)
}

fn load_noise(path: &Path) -> Result<NoiseProfile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read noise profile {}", path.display()))?;
    Ok(NoiseProfile::from_json(&text)?)
}

fn write_output(manifest: &mut RunManifest, path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents)
        .with_context(|| format!("cannot write {}", path.display()))?;
    manifest.record_output(path);
    Ok(())
}

fn cmd_search(args: SearchArgs, out_dir: &Path) -> Result<()> {
    let kinds = parse_kinds(&args.pool_kinds)?;
    let topology = match &args.coupling {
        Some(text) => DeviceTopology::new(
            args.qubits,
            parse_coupling(text, args.qubits)?,
            GateKind::ALL.iter().copied().filter(|k| k.arity() == 1),
            GateKind::ALL.iter().copied().filter(|k| k.arity() == 2),
        )?,
        None => DeviceTopology::line(args.qubits),
    };
    let pool = build_pool(&topology, &kinds)?;

    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config {}", path.display()))?;
            serde_json::from_str::<SearchConfig>(&text)
                .with_context(|| format!("invalid search config {}", path.display()))?
        }
        None => SearchConfig::default(),
    };
    config.depth = args.depth;
    config.seed = args.seed;
    if let Some(v) = args.steps {
        config.steps = v;
    }
    if let Some(v) = args.batch {
        config.batch = v;
    }
    if let Some(v) = args.tau0 {
        config.tau0 = v;
    }
    if let Some(v) = args.tau_decay {
        config.tau_decay = v;
    }
    if let Some(v) = args.learning_rate {
        config.learning_rate = v;
    }
    if let Some(v) = args.n_pairs {
        config.n_pairs = v;
    }
    if let Some(v) = args.n_bins {
        config.n_bins = v;
    }
    if let Some(v) = args.pst_shots {
        config.pst_shots = v;
    }
    if let Some(v) = args.w_expressibility {
        config.w_expressibility = v;
    }
    if let Some(v) = args.w_pst {
        config.w_pst = v;
    }
    if let Some(v) = args.lambda_stability {
        config.lambda_stability = v;
    }
    config.validate().map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut encoder_config = EncoderConfig::defaults(pool.size());
    encoder_config.mode = args
        .encoder_mode
        .parse::<EncoderMode>()
        .map_err(|e| anyhow::anyhow!(e))?;
    encoder_config
        .validate(pool.size())
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let noise = args.noise.as_deref().map(load_noise).transpose()?;

    let mut run_manifest = RunManifest::new(
        command_line(),
        serde_json::json!({
            "search": config,
            "encoder": encoder_config,
            "pool_kinds": kinds.iter().map(|k| k.name()).collect::<Vec<_>>(),
            "qubits": args.qubits,
            "noise": noise.as_ref().map(|n| n.name.clone()),
        }),
        vec![args.seed],
    );
    if let Some(path) = &args.noise {
        run_manifest.record_input(path)?;
    }
    if let Some(path) = &args.config {
        run_manifest.record_input(path)?;
    }

    let evaluator = HardwareAwareEvaluator::from_config(&config, noise);
    let outcome =
        run_search(&pool, &config, &encoder_config, &evaluator).map_err(map_search_error)?;

    let manifest_name = "manifest.json";
    let best_path = out_dir.join("best.qc");
    write_output(
        &mut run_manifest,
        &best_path,
        &format!(
            "# manifest: {manifest_name}\n{}",
            serialize_circuit(&outcome.best_circuit)
        ),
    )?;
    let final_path = out_dir.join("final.qc");
    write_output(
        &mut run_manifest,
        &final_path,
        &format!(
            "# manifest: {manifest_name}\n{}",
            serialize_circuit(&outcome.final_circuit)
        ),
    )?;
    let trace_path = out_dir.join("trace.csv");
    write_output(
        &mut run_manifest,
        &trace_path,
        &format!("# manifest: {manifest_name}\n{}", outcome.trace.to_csv()),
    )?;
    let ckpt_path = out_dir.join("encoder.json");
    write_output(
        &mut run_manifest,
        &ckpt_path,
        &save_checkpoint(&outcome.arch, &outcome.state, &encoder_config),
    )?;
    let report = serde_json::json!({
        "manifest": manifest_name,
        "best_cost": outcome.best_cost,
        "best_selection": outcome.best_selection,
        "best_circuit": "best.qc",
        "final_selection": outcome.final_selection,
        "final_circuit": "final.qc",
        "steps": outcome.trace.records.len(),
        "trace": "trace.csv",
        "encoder_checkpoint": "encoder.json",
    });
    let report_path = out_dir.join("search_report.json");
    write_output(
        &mut run_manifest,
        &report_path,
        &serde_json::to_string_pretty(&report)?,
    )?;
    run_manifest.write(out_dir)?;
    println!(
        "search finished: best cost {:.6}, circuit {} gates depth {} -> {}",
        outcome.best_cost,
        outcome.best_circuit.gate_count(),
        outcome.best_circuit.depth(),
        best_path.display()
    );
    Ok(())
}

fn map_search_error(err: qas_core::search::SearchError) -> anyhow::Error {
    anyhow::anyhow!("{err}")
}

fn cmd_optimize(args: OptimizeArgs, out_dir: &Path) -> Result<()> {
    let text = std::fs::read_to_string(&args.input)
        .with_context(|| format!("cannot read circuit {}", args.input.display()))?;
    let mut circuit = parse_circuit(&text)?;
    if circuit.n_params() > 0 {
        let theta: Vec<f64> = if let Some(list) = &args.theta {
            list.split(',')
                .map(|s| s.trim().parse::<f64>().context("bad angle in --theta"))
                .collect::<Result<_>>()?
        } else if let Some(path) = &args.theta_from {
            let report: serde_json::Value =
                serde_json::from_str(&std::fs::read_to_string(path)?)
                    .with_context(|| format!("invalid report {}", path.display()))?;
            report["best_theta"]
                .as_array()
                .context("report has no best_theta array")?
                .iter()
                .map(|v| v.as_f64().context("non-numeric angle in best_theta"))
                .collect::<Result<_>>()?
        } else {
            bail!(
                "circuit has {} free parameters; bind them with --theta or --theta-from",
                circuit.n_params()
            );
        };
        circuit = circuit.bind(&theta)?;
    }
    let mode: OptMode = args.mode.parse().map_err(|e: String| anyhow::anyhow!(e))?;
    let config = OptConfig {
        mode,
        angle_epsilon: args.angle_epsilon,
        max_passes: args.max_passes,
        verify: circuit.n_qubits() <= 10,
    };
    let (optimized, report) = optimize_fixpoint(&circuit, &config)?;

    let mut run_manifest = RunManifest::new(
        command_line(),
        serde_json::to_value(&config)?,
        Vec::new(),
    );
    run_manifest.record_input(&args.input)?;
    let out_path = args.out.unwrap_or_else(|| {
        let stem = args
            .input
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "circuit".into());
        out_dir.join(format!("{stem}_opt.qc"))
    });
    write_output(
        &mut run_manifest,
        &out_path,
        &format!("# manifest: manifest.json\n{}", serialize_circuit(&optimized)),
    )?;
    let report_path = out_dir.join("opt_report.json");
    let mut report_value = serde_json::to_value(&report)?;
    report_value["manifest"] = serde_json::Value::String("manifest.json".into());
    write_output(
        &mut run_manifest,
        &report_path,
        &serde_json::to_string_pretty(&report_value)?,
    )?;
    run_manifest.write(out_dir)?;
    println!(
        "optimize: {} gates depth {} -> {} gates depth {} (equivalent: {})",
        report.before_gate_count,
        report.before_depth,
        report.after_gate_count,
        report.after_depth,
        report
            .equivalent
            .map(|b| b.to_string())
            .unwrap_or_else(|| "not checked".into())
    );
    Ok(())
}

fn cmd_vqe(args: VqeArgs, out_dir: &Path) -> Result<()> {
    let problem = load_problem(&args.problem)?;
    let ansatz_text = std::fs::read_to_string(&args.ansatz)
        .with_context(|| format!("cannot read ansatz {}", args.ansatz.display()))?;
    let ansatz = parse_circuit(&ansatz_text)?;
    let noise = args.noise.as_deref().map(load_noise).transpose()?;
    let config = VqeConfig {
        max_iters: args.max_iters,
        learning_rate: args.learning_rate,
        noise,
        n_trajectories: args.n_trajectories,
        seed: args.seed,
        ..VqeConfig::default()
    };

    let mut run_manifest = RunManifest::new(
        command_line(),
        serde_json::to_value(&config)?,
        vec![args.seed],
    );
    run_manifest.record_input(&args.problem)?;
    run_manifest.record_input(&args.ansatz)?;
    if let Some(path) = &args.noise {
        run_manifest.record_input(path)?;
    }

    let result = run_vqe(&problem, &ansatz, &config)?;

    let mut trace_csv = String::from("# manifest: manifest.json\niteration,energy,std_error\n");
    for s in &result.trace {
        writeln!(
            trace_csv,
            "{},{},{}",
            s.iteration,
            s.energy,
            s.std_error.map(|e| e.to_string()).unwrap_or_default()
        )?;
    }
    let trace_path = out_dir.join("vqe_trace.csv");
    write_output(&mut run_manifest, &trace_path, &trace_csv)?;
    let report = serde_json::json!({
        "manifest": "manifest.json",
        "problem": problem.name,
        "n_qubits": problem.n_qubits,
        "reference_energy": result.reference_energy,
        "best_energy": result.best_energy,
        "delta_e": result.delta_e,
        "within_threshold": result.within_threshold,
        "surrogate_accuracy": result.surrogate_accuracy,
        "iterations": result.trace.len(),
        "best_theta": result.best_theta,
        "trace": "vqe_trace.csv",
    });
    let report_path = out_dir.join("vqe_report.json");
    write_output(
        &mut run_manifest,
        &report_path,
        &serde_json::to_string_pretty(&report)?,
    )?;
    run_manifest.write(out_dir)?;
    println!(
        "vqe: best energy {:.6}, reference {:.6}, delta_e {:.6} ({})",
        result.best_energy,
        result.reference_energy,
        result.delta_e,
        if result.within_threshold {
            "within 0.1 Ha"
        } else {
            "above 0.1 Ha"
        }
    );
    Ok(())
}

fn cmd_wsn(args: WsnArgs, out_dir: &Path) -> Result<()> {
    let network = match &args.layout {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read layout {}", path.display()))?;
            Network::from_layout_json(&text)?
        }
        None => Network::random(16, 3, 60.0, 30.0, 30.0, 1.0, args.seed)?,
    };
    if !network.bs_reachable {
        eprintln!("warning: some nodes cannot reach the base station within range");
    }

    let mut run_manifest = RunManifest::new(
        command_line(),
        serde_json::json!({
            "k": args.k,
            "solver": args.solver,
            "lambda_flow": args.lambda_flow,
            "lambda_energy": args.lambda_energy,
        }),
        vec![args.seed],
    );
    if let Some(path) = &args.layout {
        run_manifest.record_input(path)?;
    }
    if let Some(path) = &args.save_layout {
        write_output(&mut run_manifest, path, &network.to_layout_json())?;
    }

    let greedy = greedy_baseline(&network);
    let solution: RoutingSolution = if args.solver == "greedy" {
        greedy.clone()
    } else {
        let source = match args.solver.as_str() {
            "qbsa" => AnsatzSource::QbsaSearch,
            "qaoa" => AnsatzSource::Qaoa,
            "brute" => AnsatzSource::BruteForce,
            other => bail!("unknown solver `{other}` (expected qbsa, qaoa, greedy, or brute)"),
        };
        let subgraphs = partition(&network, args.k, args.seed)?;
        let mut qubos = Vec::new();
        let mut assignments = Vec::new();
        for (i, sub) in subgraphs.iter().enumerate() {
            let demand = default_demand(&network, sub);
            let lambda_flow = args
                .lambda_flow
                .unwrap_or_else(|| default_penalty(&network, sub));
            let lambda_energy = args.lambda_energy.unwrap_or(0.0);
            let qubo = build_qubo(&network, sub, lambda_flow, lambda_energy, &demand)?;
            let ising = qubo_to_ising(&qubo);
            let config = SolveConfig {
                seed: args.seed.wrapping_add(i as u64),
                ..SolveConfig::default()
            };
            let x = solve_subgraph(&ising, source, &config).with_context(|| {
                format!(
                    "subgraph {i} has {} edge variables; raise --k to shrink clusters",
                    qubo.n_vars()
                )
            })?;
            qubos.push(qubo);
            assignments.push(x);
        }
        assemble_solution(&network, &subgraphs, &qubos, &assignments)?
    };

    let mut csv =
        String::from("# manifest: manifest.json\nkind,from,to,cost\n");
    for &(a, b) in &solution.intra_edges {
        writeln!(csv, "intra,{a},{b},{}", qas_core::wsn::transmission_cost(a, b, &network))?;
    }
    for &(a, b) in &solution.backbone_edges {
        writeln!(csv, "backbone,{a},{b},{}", qas_core::wsn::transmission_cost(a, b, &network))?;
    }
    for &(a, b) in &solution.patched_edges {
        writeln!(csv, "patched,{a},{b},{}", qas_core::wsn::transmission_cost(a, b, &network))?;
    }
    let csv_path = out_dir.join("wsn_solution.csv");
    write_output(&mut run_manifest, &csv_path, &csv)?;

    let flow_ok = solution.flow_feasible.values().filter(|&&b| b).count();
    let energy_ok = solution.energy_feasible.values().filter(|&&b| b).count();
    let report = serde_json::json!({
        "manifest": "manifest.json",
        "solver": args.solver,
        "k": args.k,
        "nodes": network.nodes.len(),
        "links": network.edges.len(),
        "total_energy": solution.total_energy,
        "greedy_total_energy": greedy.total_energy,
        "intra_edges": solution.intra_edges.len(),
        "backbone_edges": solution.backbone_edges.len(),
        "patched_edges": solution.patched_edges.len(),
        "flow_feasible": format!("{}/{}", flow_ok, solution.flow_feasible.len()),
        "energy_feasible": format!("{}/{}", energy_ok, solution.energy_feasible.len()),
        "unpatchable": solution.unpatchable,
        "edges": "wsn_solution.csv",
    });
    let report_path = out_dir.join("wsn_report.json");
    write_output(
        &mut run_manifest,
        &report_path,
        &serde_json::to_string_pretty(&report)?,
    )?;
    run_manifest.write(out_dir)?;
    println!(
        "wsn ({}): total energy {:.2} (greedy baseline {:.2})",
        args.solver, solution.total_energy, greedy.total_energy
    );
    Ok(())
}

fn cmd_check(args: CheckArgs) -> Result<i32> {
    use qas_core::autodiff::{check_gradients, Tensor};
    use qas_core::circuit::realize_circuit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    let mut failures = 0;
    let mut report = |name: &str, pass: bool, detail: String| {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            failures += 1;
        }
    };

    // Gradient engine primitives.
    {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let a = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let b = Tensor::randn(vec![4, 2], 1.0, &mut rng);
        let w = Tensor::randn(vec![3, 2], 1.0, &mut rng);
        let g = check_gradients(
            |_t, l| l[0].matmul(&l[1]).mul_const(&w).sum(),
            &[("a", a), ("b", b)],
            1e-5,
        );
        report("gradients/matmul", g.pass, format!("{g}"));
        let x = Tensor::randn(vec![2, 5], 1.0, &mut rng);
        let gm = Tensor::randn(vec![5], 0.5, &mut rng);
        let bt = Tensor::randn(vec![5], 0.5, &mut rng);
        let w2 = Tensor::randn(vec![2, 5], 1.0, &mut rng);
        let g = check_gradients(
            |_t, l| l[0].layer_norm(&l[1], &l[2], 1e-5).mul_const(&w2).sum(),
            &[("x", x), ("gamma", gm), ("beta", bt)],
            1e-5,
        );
        report("gradients/layer_norm", g.pass, format!("{g}"));
        let s = Tensor::randn(vec![3, 3], 1.0, &mut rng);
        let w3 = Tensor::randn(vec![3, 3], 1.0, &mut rng);
        let g = check_gradients(
            |_t, l| l[0].softmax_rows().mul_const(&w3).sum(),
            &[("s", s)],
            1e-5,
        );
        report("gradients/softmax", g.pass, format!("{g}"));
    }

    // Full encoder gradient check at 1e-3.
    {
        use qas_core::encoder::{
            encoder_forward, ArchParams, EncoderState, EvalContext,
        };
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let mut config = EncoderConfig::defaults(6);
        config.n_feat_qubits = 2;
        config.l_qsl = 1;
        config.dropout_rate = 0.0;
        let arch = ArchParams::init(4, 6, 4, &mut rng);
        let state = EncoderState::init(6, &config, &mut rng);
        let graph = encoder_forward(&arch, &state, &config, &EvalContext::eval());
        match graph {
            Ok(g) => {
                let ok = g.alpha_out.shape() == vec![4, 6];
                report(
                    "encoder/forward-shape",
                    ok,
                    format!("alpha_out shape {:?}", g.alpha_out.shape()),
                );
            }
            Err(e) => report("encoder/forward-shape", false, e.to_string()),
        }
    }

    // Simulator unitarity under random gates.
    {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut state = qas_core::sim::StateVector::zero(4);
        let kinds = GateKind::ALL;
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let kind = kinds[rng.gen_range(0..kinds.len())];
            let qubits: Vec<usize> = if kind.arity() == 1 {
                vec![rng.gen_range(0..4)]
            } else {
                let a = rng.gen_range(0..4usize);
                vec![a, (a + rng.gen_range(1..4)) % 4]
            };
            let angle = kind
                .parametric()
                .then(|| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI));
            state.apply_gate(kind, &qubits, angle);
            worst = worst.max((state.norm() - 1.0).abs());
        }
        report(
            "simulator/unitarity",
            worst < 1e-10,
            format!("max norm drift {worst:.3e} over 1000 gates"),
        );
    }

    // Parameter-shift gradients against finite differences.
    {
        use qas_core::sim::{expectation, param_shift_grad, run, PauliString, PauliSum, ShotsPolicy};
        let c = parse_circuit("qubits 3\nrx 0\nry 1\ncnot 0 1\nrz 2\nrzz 1 2\nrx 2\n").unwrap();
        let theta: Vec<f64> = vec![0.3, -0.7, 1.1, 0.4, -0.2];
        let obs = PauliSum::new(
            3,
            vec![PauliString::z(0, 0.8), PauliString::zz(1, 2, -0.5)],
        )
        .unwrap();
        let grad =
            param_shift_grad(&c, &theta, &obs, None, ShotsPolicy::Exact, 0).unwrap();
        let h = 1e-4;
        let mut worst: f64 = 0.0;
        for k in 0..theta.len() {
            let mut tp = theta.clone();
            tp[k] += h;
            let mut tm = theta.clone();
            tm[k] -= h;
            let fp = expectation(&run(&c, &tp, None, 0).unwrap(), &obs).unwrap();
            let fm = expectation(&run(&c, &tm, None, 0).unwrap(), &obs).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            worst = worst.max((grad[k] - fd).abs() / grad[k].abs().max(fd.abs()).max(1.0));
        }
        report(
            "simulator/parameter-shift",
            worst < 1e-5,
            format!("max relative deviation {worst:.3e}"),
        );
    }

    // Optimizer soundness on random circuits.
    {
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        let pool = build_pool(
            &DeviceTopology::line(4),
            &parse_kinds("x,rx,rz,cz").unwrap(),
        )
        .unwrap();
        let n = if args.quick { 20 } else { 100 };
        let mut all_equivalent = true;
        let mut total_before = 0usize;
        let mut total_after = 0usize;
        for _ in 0..n {
            let len = rng.gen_range(5..40);
            let sel: Vec<usize> = (0..len).map(|_| rng.gen_range(0..pool.size())).collect();
            let free = realize_circuit(&pool, &sel, 4).unwrap();
            let theta: Vec<f64> = (0..free.n_params())
                .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
                .collect();
            let c = free.bind(&theta).unwrap();
            let (out, rep) = optimize_fixpoint(&c, &OptConfig::aggressive()).unwrap();
            all_equivalent &= rep.equivalent == Some(true);
            total_before += c.gate_count();
            total_after += out.gate_count();
        }
        report(
            "optimizer/soundness",
            all_equivalent,
            format!(
                "{n} random circuits, mean reduction {:.1}%",
                100.0 * (1.0 - total_after as f64 / total_before as f64)
            ),
        );
    }

    // QUBO to Ising energy equality.
    {
        use qas_core::wsn::{qubo_to_ising as to_ising, Demand};
        use std::collections::BTreeMap;
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let mut ok = true;
        for _ in 0..20 {
            let m = rng.gen_range(1..=8);
            let mut quadratic = BTreeMap::new();
            for i in 0..m {
                for j in (i + 1)..m {
                    if rng.gen_bool(0.5) {
                        quadratic.insert((i, j), rng.gen_range(-2.0..2.0));
                    }
                }
            }
            let q = qas_core::wsn::RoutingQubo {
                var_edges: (0..m).map(|i| (i, i + 1)).collect(),
                linear: (0..m).map(|_| rng.gen_range(-2.0..2.0)).collect(),
                quadratic,
                offset: rng.gen_range(-1.0..1.0),
                lambda_flow: 0.0,
                lambda_energy: 0.0,
                demand: BTreeMap::<usize, Demand>::new(),
            };
            let ising = to_ising(&q);
            for bits in 0..(1u32 << m) {
                let x: Vec<bool> = (0..m).map(|i| bits & (1 << i) != 0).collect();
                let s: Vec<i8> = x.iter().map(|&b| if b { 1 } else { -1 }).collect();
                if (q.energy(&x) - ising.energy(&s)).abs() > 1e-9 {
                    ok = false;
                }
            }
        }
        report("wsn/qubo-ising-equality", ok, "exhaustive up to 8 vars".into());
    }

    // PST under zero noise.
    {
        use qas_core::search::estimate_pst;
        let c = parse_circuit("qubits 2\nh 0\ncnot 0 1\nrx 1\n").unwrap();
        let pst = estimate_pst(&c, &[0.7], &NoiseProfile::noiseless(), 256, 0).unwrap();
        report(
            "search/pst-noiseless",
            pst == 1.0,
            format!("pst = {pst}"),
        );
    }

    println!(
        "{}",
        if failures == 0 {
            "all checks passed".to_string()
        } else {
            format!("{failures} check(s) failed")
        }
    );
    Ok(if failures == 0 { 0 } else { 2 })
}
