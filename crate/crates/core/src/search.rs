//! Differentiable architecture search.
//!
//! Each step builds the encoder graph, draws a batch of candidate circuits by
//! Gumbel-perturbed argmax over the output logits (gradients flow through the
//! temperature-softened distribution), scores every candidate on
//! expressibility and inverse-echo survival (PST) under the configured noise
//! profile, and updates all encoder parameters with Adam on the
//! cost-weighted log-probability loss plus a stability penalty between
//! consecutive encoder outputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::Tensor;
use crate::circuit::{inverse_circuit, realize_circuit, Circuit, CircuitError, OperationPool};
use crate::encoder::{
    encoder_forward, ArchParams, EncoderConfig, EncoderError, EncoderState, EvalContext,
};
use crate::optim::Adam;
use crate::sim::{self, NoiseProfile, SimError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search config: {0}")]
    Config(String),
    #[error("loss became non-finite at step {step}")]
    NonFiniteLoss { step: usize, trace: Box<SearchTrace> },
    #[error(transparent)]
    Encoder(#[from] EncoderError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Autodiff(#[from] crate::autodiff::AutodiffError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Circuit depth D (selections per candidate).
    pub depth: usize,
    /// Factorization rank of the logit matrix.
    pub rank: usize,
    /// Training steps T.
    pub steps: usize,
    /// Candidates per step B.
    pub batch: usize,
    /// Initial Gumbel temperature.
    pub tau0: f64,
    /// Multiplicative temperature decay per step.
    pub tau_decay: f64,
    /// Weight of expressibility in the candidate cost.
    pub w_expressibility: f64,
    /// Weight of (1 - PST) in the candidate cost.
    pub w_pst: f64,
    pub lambda_stability: f64,
    /// Parameter-vector pairs sampled for the fidelity histogram.
    pub n_pairs: usize,
    pub n_bins: usize,
    /// Trajectory pairs averaged per fidelity sample under noise.
    pub noise_trajectories: usize,
    pub pst_shots: u64,
    pub learning_rate: f64,
    /// Subtract a running-mean cost baseline in the loss (off by default).
    pub use_reward_baseline: bool,
    pub seed: u64,
}

impl Default for SearchConfig {
    fn default() -> SearchConfig {
        SearchConfig {
            depth: 8,
            rank: 4,
            steps: 200,
            batch: 8,
            tau0: 5.0,
            tau_decay: 0.985,
            w_expressibility: 1.0,
            w_pst: 1.0,
            lambda_stability: 0.1,
            n_pairs: 1000,
            n_bins: 75,
            noise_trajectories: 4,
            pst_shots: 1024,
            learning_rate: 0.01,
            use_reward_baseline: false,
            seed: 0,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        if self.tau0 <= 0.0 {
            return Err(SearchError::Config("tau0 must be positive".into()));
        }
        if !(0.0 < self.tau_decay && self.tau_decay <= 1.0) {
            return Err(SearchError::Config("tau_decay must lie in (0, 1]".into()));
        }
        if self.w_expressibility < 0.0 || self.w_pst < 0.0 {
            return Err(SearchError::Config("cost weights must be nonnegative".into()));
        }
        if self.n_bins < 2 {
            return Err(SearchError::Config("n_bins must be at least 2".into()));
        }
        if self.depth == 0 || self.steps == 0 || self.batch == 0 || self.rank == 0 {
            return Err(SearchError::Config(
                "depth, rank, steps, and batch must be positive".into(),
            ));
        }
        if self.n_pairs == 0 || self.pst_shots == 0 {
            return Err(SearchError::Config(
                "n_pairs and pst_shots must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Temperature at 1-based step `t`: monotone non-increasing.
    pub fn temperature(&self, t: usize) -> f64 {
        self.tau0 * self.tau_decay.powi(t as i32 - 1)
    }
}

fn mix_seed(master: u64, a: u64, b: u64) -> u64 {
    // splitmix64 over a combined tag
    let mut z = master
        .wrapping_add(a.wrapping_mul(0x9E3779B97F4A7C15))
        .wrapping_add(b.wrapping_mul(0xBF58476D1CE4E5B9));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
    z ^ (z >> 31)
}

/// Gumbel(0,1) noise tensor.
fn gumbel_noise(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Tensor {
    let data = (0..rows * cols)
        .map(|_| {
            let u: f64 = rng.gen::<f64>().max(1e-300);
            -(-u.ln()).ln()
        })
        .collect();
    Tensor::new(vec![rows, cols], data)
}

/// Perturb each logit row with Gumbel noise and temperature-soften it.
/// Returns the hard per-row argmax selection and the soft distribution the
/// straight-through gradient flows through.
pub fn gumbel_sample(alpha_out: &Tensor, temperature: f64, seed: u64) -> (Vec<usize>, Tensor) {
    assert!(temperature > 0.0, "temperature must be positive");
    let (rows, cols) = (alpha_out.shape()[0], alpha_out.shape()[1]);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let noise = gumbel_noise(rows, cols, &mut rng);
    let perturbed = alpha_out.zip(&noise, |a, g| a + g);
    let mut selection = Vec::with_capacity(rows);
    let mut soft = Tensor::zeros(vec![rows, cols]);
    for r in 0..rows {
        let row: Vec<f64> = (0..cols).map(|c| perturbed.at2(r, c)).collect();
        let argmax = row
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).expect("finite logits"))
            .map(|(i, _)| i)
            .expect("non-empty row");
        selection.push(argmax);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&x| ((x - max) / temperature).exp()).collect();
        let denom: f64 = exps.iter().sum();
        for c in 0..cols {
            soft.data_mut()[r * cols + c] = exps[c] / denom;
        }
    }
    (selection, soft)
}

/// Mean softmax probability of one pool column across depth rows, i.e. the
/// marginal chance that Gumbel-perturbed argmax selects that column.
pub fn column_probability(alpha_out: &Tensor, column: usize) -> f64 {
    let (rows, cols) = (alpha_out.shape()[0], alpha_out.shape()[1]);
    let mut total = 0.0;
    for r in 0..rows {
        let row: Vec<f64> = (0..cols).map(|c| alpha_out.at2(r, c)).collect();
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row.iter().map(|&x| (x - max).exp()).collect();
        let denom: f64 = exps.iter().sum();
        total += exps[column] / denom;
    }
    total / rows as f64
}

/// Kullback-Leibler divergence (base 2) between the circuit's sampled
/// pairwise-fidelity histogram and the Haar fidelity density
/// `(N-1)(1-F)^(N-2)`. Lower is more expressive. A parameterless circuit
/// yields a point mass at F = 1 and hence the maximal divergence.
pub fn estimate_expressibility(
    c: &Circuit,
    noise: Option<&NoiseProfile>,
    n_pairs: usize,
    n_bins: usize,
    noise_trajectories: usize,
    seed: u64,
) -> Result<f64, SimError> {
    let tau = std::f64::consts::TAU;
    let fidelities: Vec<f64> = (0..n_pairs)
        .into_par_iter()
        .map(|i| -> Result<f64, SimError> {
            let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, i as u64, 1));
            let theta_a: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(0.0..tau)).collect();
            let theta_b: Vec<f64> = (0..c.n_params()).map(|_| rng.gen_range(0.0..tau)).collect();
            match noise {
                None => {
                    let sa = sim::run(c, &theta_a, None, 0)?;
                    let sb = sim::run(c, &theta_b, None, 0)?;
                    Ok(sa.fidelity(&sb))
                }
                Some(profile) => {
                    let mut acc = 0.0;
                    for t in 0..noise_trajectories.max(1) {
                        let sa =
                            sim::run(c, &theta_a, Some(profile), mix_seed(seed, i as u64, 2 + 2 * t as u64))?;
                        let sb =
                            sim::run(c, &theta_b, Some(profile), mix_seed(seed, i as u64, 3 + 2 * t as u64))?;
                        acc += sa.fidelity(&sb);
                    }
                    Ok(acc / noise_trajectories.max(1) as f64)
                }
            }
        })
        .collect::<Result<_, _>>()?;

    let mut counts = vec![0usize; n_bins];
    for f in fidelities {
        let bin = ((f * n_bins as f64) as usize).min(n_bins - 1);
        counts[bin] += 1;
    }
    let eps = 1e-10;
    let total = n_pairs as f64 + n_bins as f64 * eps;
    let dim = (1usize << c.n_qubits()) as f64;
    let mut kl = 0.0;
    for (bin, &count) in counts.iter().enumerate() {
        let q = (count as f64 + eps) / total;
        let lo = bin as f64 / n_bins as f64;
        let hi = (bin + 1) as f64 / n_bins as f64;
        // Integral of (N-1)(1-F)^(N-2) over the bin.
        let p = ((1.0 - lo).powf(dim - 1.0) - (1.0 - hi).powf(dim - 1.0)).max(1e-300);
        kl += q * (q / p).log2();
    }
    Ok(kl)
}

/// Probability of Successful Trials: fraction of shots in which the circuit
/// followed by its inverse returns the all-zeros state under the noise
/// profile, readout flips included.
pub fn estimate_pst(
    c: &Circuit,
    theta: &[f64],
    noise: &NoiseProfile,
    shots: u64,
    seed: u64,
) -> Result<f64, SimError> {
    assert!(shots >= 1, "need at least one shot");
    let bound = c.bind(theta)?;
    let inverse = inverse_circuit(c, theta)?;
    let mut gates = bound.gates().to_vec();
    gates.extend_from_slice(inverse.gates());
    let echo = Circuit::new(c.n_qubits(), gates)?;
    let zeros_label = sim::basis_label(0, c.n_qubits());
    let flips = noise.readout_flip.per_qubit(c.n_qubits());

    if noise.is_gate_noiseless() {
        let state = sim::run(&echo, &[], None, 0)?;
        let result = sim::sample(&state, shots, &flips, mix_seed(seed, 0, 4));
        return Ok(result.count_of(&zeros_label) as f64 / shots as f64);
    }

    let hits: u64 = (0..shots)
        .into_par_iter()
        .map(|shot| -> Result<u64, SimError> {
            let state = sim::run(&echo, &[], Some(noise), mix_seed(seed, shot, 5))?;
            let result = sim::sample(&state, 1, &flips, mix_seed(seed, shot, 6));
            Ok(u64::from(result.count_of(&zeros_label) == 1))
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(hits as f64 / shots as f64)
}

/// One scored candidate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Candidate {
    pub selection: Vec<usize>,
    /// Soft selection probabilities at the chosen entries, one per depth row.
    pub soft_probs: Vec<f64>,
    pub cost: f64,
    pub expressibility: f64,
    pub pst: f64,
}

/// Batch-averaged cost-weighted log-probability loss plus the stability
/// penalty `max |F_t - F_prev|` (zero on the first step).
pub fn compute_loss(
    candidates: &[Candidate],
    f_t: &Tensor,
    f_prev: Option<&Tensor>,
    lambda_stability: f64,
) -> f64 {
    let b = candidates.len() as f64;
    let cost_term: f64 = candidates
        .iter()
        .map(|c| c.cost * c.soft_probs.iter().map(|&p| p.ln()).sum::<f64>())
        .sum();
    let stability = match f_prev {
        Some(prev) => f_t
            .data()
            .iter()
            .zip(prev.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max),
        None => 0.0,
    };
    (cost_term + lambda_stability * stability) / b
}

/// Scores one realized candidate. The production evaluator combines
/// expressibility and PST; tests substitute controlled stubs.
pub trait CandidateEvaluator: Sync {
    fn evaluate(&self, circuit: &Circuit, selection: &[usize], seed: u64) -> EvalMetrics;
}

#[derive(Debug, Clone, Copy)]
pub struct EvalMetrics {
    pub cost: f64,
    pub expressibility: f64,
    pub pst: f64,
}

/// The hardware-aware objective: `w1 * expressibility + w2 * (1 - PST)` with
/// PST evaluated at zero-initialized angles.
pub struct HardwareAwareEvaluator {
    pub noise: NoiseProfile,
    pub w_expressibility: f64,
    pub w_pst: f64,
    pub n_pairs: usize,
    pub n_bins: usize,
    pub noise_trajectories: usize,
    pub pst_shots: u64,
}

impl HardwareAwareEvaluator {
    pub fn from_config(config: &SearchConfig, noise: Option<NoiseProfile>) -> HardwareAwareEvaluator {
        HardwareAwareEvaluator {
            noise: noise.unwrap_or_else(NoiseProfile::noiseless),
            w_expressibility: config.w_expressibility,
            w_pst: config.w_pst,
            n_pairs: config.n_pairs,
            n_bins: config.n_bins,
            noise_trajectories: config.noise_trajectories,
            pst_shots: config.pst_shots,
        }
    }
}

impl CandidateEvaluator for HardwareAwareEvaluator {
    fn evaluate(&self, circuit: &Circuit, _selection: &[usize], seed: u64) -> EvalMetrics {
        let gate_noise = (!self.noise.is_gate_noiseless()).then_some(&self.noise);
        let expressibility = estimate_expressibility(
            circuit,
            gate_noise,
            self.n_pairs,
            self.n_bins,
            self.noise_trajectories,
            mix_seed(seed, 0, 7),
        )
        .unwrap_or(f64::INFINITY);
        let theta = vec![0.0; circuit.n_params()];
        let pst = estimate_pst(
            circuit,
            &theta,
            &self.noise,
            self.pst_shots,
            mix_seed(seed, 0, 8),
        )
        .unwrap_or(0.0);
        EvalMetrics {
            cost: self.w_expressibility * expressibility + self.w_pst * (1.0 - pst),
            expressibility,
            pst,
        }
    }
}

/// Controlled-convergence harness: one pool column is free, every other
/// selection costs its depth share. Used to validate that the search
/// concentrates probability on the cheap column.
pub struct RiggedEvaluator {
    pub target_column: usize,
}

impl CandidateEvaluator for RiggedEvaluator {
    fn evaluate(&self, _circuit: &Circuit, selection: &[usize], _seed: u64) -> EvalMetrics {
        let misses = selection.iter().filter(|&&s| s != self.target_column).count();
        let cost = misses as f64 / selection.len() as f64;
        EvalMetrics {
            cost,
            expressibility: cost,
            pst: 1.0,
        }
    }
}

/// One step of the trace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub temperature: f64,
    pub loss_total: f64,
    pub stability: f64,
    pub candidates: Vec<Candidate>,
    /// Mean softmax probability per pool column, over depth rows.
    pub column_probs: Vec<f64>,
    pub best_cost_so_far: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SearchTrace {
    pub records: Vec<StepRecord>,
}

impl SearchTrace {
    /// One row per step. Per-candidate fields are `;`-joined within a
    /// candidate and `|`-joined across candidates.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "step,temperature,loss_total,stability,min_cost,mean_cost,best_cost_so_far,mean_expressibility,mean_pst,selections,column_probs\n",
        );
        for r in &self.records {
            let n = r.candidates.len().max(1) as f64;
            let min_cost = r
                .candidates
                .iter()
                .map(|c| c.cost)
                .fold(f64::INFINITY, f64::min);
            let mean_cost: f64 = r.candidates.iter().map(|c| c.cost).sum::<f64>() / n;
            let mean_expr: f64 = r.candidates.iter().map(|c| c.expressibility).sum::<f64>() / n;
            let mean_pst: f64 = r.candidates.iter().map(|c| c.pst).sum::<f64>() / n;
            let selections = r
                .candidates
                .iter()
                .map(|c| {
                    c.selection
                        .iter()
                        .map(|s| s.to_string())
                        .collect::<Vec<_>>()
                        .join(";")
                })
                .collect::<Vec<_>>()
                .join("|");
            let col_probs = r
                .column_probs
                .iter()
                .map(|p| format!("{p}"))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                r.step,
                r.temperature,
                r.loss_total,
                r.stability,
                min_cost,
                mean_cost,
                r.best_cost_so_far,
                mean_expr,
                mean_pst,
                selections,
                col_probs
            ));
        }
        out
    }
}

/// Search result: the lowest-cost circuit ever evaluated, the final-step
/// argmax decode, the trained parameters, and the full trace.
pub struct SearchOutcome {
    pub best_circuit: Circuit,
    pub best_selection: Vec<usize>,
    pub best_cost: f64,
    pub final_circuit: Circuit,
    pub final_selection: Vec<usize>,
    pub trace: SearchTrace,
    pub arch: ArchParams,
    pub state: EncoderState,
}

/// Run the full search loop over `pool` with the given evaluator.
pub fn run_search(
    pool: &OperationPool,
    config: &SearchConfig,
    encoder_config: &EncoderConfig,
    evaluator: &dyn CandidateEvaluator,
) -> Result<SearchOutcome, SearchError> {
    config.validate()?;
    encoder_config.validate(pool.size())?;
    let n_qubits = pool.n_qubits();
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut arch = ArchParams::init(config.depth, pool.size(), config.rank, &mut rng);
    let mut state = EncoderState::init(pool.size(), encoder_config, &mut rng);
    let mut adam = Adam::new(config.learning_rate);
    let mut trace = SearchTrace::default();
    let mut f_prev: Option<Tensor> = None;
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut cost_mean = 0.0;
    let mut cost_count = 0u64;
    let mut final_alpha = Tensor::zeros(vec![config.depth, pool.size()]);

    for t in 1..=config.steps {
        let temperature = config.temperature(t);
        let graph = encoder_forward(
            &arch,
            &state,
            encoder_config,
            &EvalContext::train(mix_seed(config.seed, t as u64, 9)),
        )?;
        let alpha_out = graph.alpha_out.data();

        // Draw the batch and realize candidate circuits.
        let mut drawn = Vec::with_capacity(config.batch);
        for b in 0..config.batch {
            let noise_seed = mix_seed(config.seed, t as u64, 1000 + b as u64);
            let mut noise_rng = ChaCha12Rng::seed_from_u64(noise_seed);
            let noise = gumbel_noise(config.depth, pool.size(), &mut noise_rng);
            let perturbed = alpha_out.zip(&noise, |a, g| a + g);
            let selection: Vec<usize> = (0..config.depth)
                .map(|r| {
                    (0..pool.size())
                        .max_by(|&a, &b| {
                            perturbed
                                .at2(r, a)
                                .partial_cmp(&perturbed.at2(r, b))
                                .expect("finite logits")
                        })
                        .expect("non-empty pool")
                })
                .collect();
            let circuit = realize_circuit(pool, &selection, n_qubits)?;
            drawn.push((selection, circuit, noise));
        }

        // Score candidates in parallel; order is preserved.
        let metrics: Vec<EvalMetrics> = drawn
            .par_iter()
            .enumerate()
            .map(|(b, (selection, circuit, _))| {
                evaluator.evaluate(circuit, selection, mix_seed(config.seed, t as u64, 2000 + b as u64))
            })
            .collect();

        // Cost-weighted log-probability loss through the soft distributions.
        let mut loss_value = None;
        let mut candidates = Vec::with_capacity(config.batch);
        for ((selection, _, noise), m) in drawn.iter().zip(&metrics) {
            let soft = graph
                .alpha_out
                .add_const(noise)
                .scale(1.0 / temperature)
                .softmax_rows();
            let picked = soft.gather_per_row(selection);
            let effective_cost = if config.use_reward_baseline && cost_count > 0 {
                m.cost - cost_mean
            } else {
                m.cost
            };
            cost_count += 1;
            cost_mean += (m.cost - cost_mean) / cost_count as f64;
            let term = picked.log().sum().scale(effective_cost);
            loss_value = Some(match loss_value {
                None => term,
                Some(acc) => term.add(&acc),
            });
            candidates.push(Candidate {
                selection: selection.clone(),
                soft_probs: picked.data().data().to_vec(),
                cost: m.cost,
                expressibility: m.expressibility,
                pst: m.pst,
            });
        }

        let stability_value = match &f_prev {
            Some(prev) => graph.alpha_out.add_const(&prev.map(|x| -x)).max_abs(),
            None => graph.tape.leaf(Tensor::scalar(0.0)),
        };
        let loss = loss_value
            .expect("batch is non-empty")
            .add(&stability_value.scale(config.lambda_stability))
            .scale(1.0 / config.batch as f64);

        let loss_total = loss.data().item();
        let stability = stability_value.data().item();

        for c in &candidates {
            if best.as_ref().is_none_or(|(bc, _)| c.cost < *bc) {
                best = Some((c.cost, c.selection.clone()));
            }
        }
        let record = StepRecord {
            step: t,
            temperature,
            loss_total,
            stability,
            candidates,
            column_probs: (0..pool.size())
                .map(|c| column_probability(&alpha_out, c))
                .collect(),
            best_cost_so_far: best.as_ref().map(|(c, _)| *c).expect("best set"),
        };
        trace.records.push(record);

        if !loss_total.is_finite() {
            return Err(SearchError::NonFiniteLoss {
                step: t,
                trace: Box::new(trace),
            });
        }

        loss.backward()?;
        adam.begin_step();
        for (name, tensor) in crate::encoder::visit_params_mut(&mut arch, &mut state) {
            let grad = graph.gradient(&name);
            adam.update(&name, tensor.data_mut(), grad.data());
        }

        f_prev = Some(alpha_out.clone());
        final_alpha = alpha_out;
    }

    let (best_cost, best_selection) = best.expect("at least one step ran");
    let best_circuit = realize_circuit(pool, &best_selection, n_qubits)?;
    let final_selection: Vec<usize> = (0..config.depth)
        .map(|r| {
            (0..pool.size())
                .max_by(|&a, &b| {
                    final_alpha
                        .at2(r, a)
                        .partial_cmp(&final_alpha.at2(r, b))
                        .expect("finite logits")
                })
                .expect("non-empty pool")
        })
        .collect();
    let final_circuit = realize_circuit(pool, &final_selection, n_qubits)?;
    Ok(SearchOutcome {
        best_circuit,
        best_selection,
        best_cost,
        final_circuit,
        final_selection,
        trace,
        arch,
        state,
    })
}
