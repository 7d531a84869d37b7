//! Quantum feature-map self-attention encoder.
//!
//! Transforms architecture logits `alpha` (depth x pool-size) into
//! context-enriched logits through three stages:
//!
//! 1. preprocessing: a cubic feature-interaction map `(a a^T) a` plus
//!    sinusoidal positional encoding over depth positions;
//! 2. multi-head attention whose similarity logits come from quantum feature
//!    maps (per-qubit Z expectations of a data-encoding circuit) plus a
//!    phase-controlled interference term, instead of dot products;
//! 3. a position-wise feed-forward stage built from a Hadamard-initialized
//!    data-reuploading circuit, with residual connections and layer
//!    normalization around both stages.
//!
//! A `classical_attention` mode swaps stage 2's logits for scaled dot
//! products, and an `identity` mode passes `alpha` through untouched; both
//! serve as search baselines.

use std::collections::BTreeMap;

use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::{
    concat_cols, quantum_node, stack_rows, AngleExpr, QuantumTemplate, Tape, TemplateGate, Tensor,
    Value,
};
use crate::circuit::GateKind;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("invalid encoder config: {0}")]
    Config(String),
    #[error("parameter {name} has shape {got:?}, expected {expected:?}")]
    ParamShape {
        name: String,
        expected: Vec<usize>,
        got: Vec<usize>,
    },
    #[error("checkpoint error: {0}")]
    Checkpoint(String),
}

/// Low-rank factors of the architecture logit matrix: per-depth products
/// `alpha[d] = P[d] Q[d]` with `P` of shape `[D,1,K']` and `Q` of `[D,K',C]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchParams {
    pub p_factor: Tensor,
    pub q_factor: Tensor,
}

impl ArchParams {
    pub fn init(depth: usize, pool_size: usize, rank: usize, rng: &mut ChaCha12Rng) -> ArchParams {
        ArchParams {
            p_factor: Tensor::randn(vec![depth, 1, rank], 0.3, rng),
            q_factor: Tensor::randn(vec![depth, rank, pool_size], 0.3, rng),
        }
    }

    pub fn depth(&self) -> usize {
        self.p_factor.shape()[0]
    }

    pub fn pool_size(&self) -> usize {
        self.q_factor.shape()[2]
    }

    pub fn rank(&self) -> usize {
        self.p_factor.shape()[2]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    Qbsa,
    ClassicalAttention,
    Identity,
}

impl std::str::FromStr for EncoderMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "qbsa" => Ok(EncoderMode::Qbsa),
            "classical" | "classical_attention" => Ok(EncoderMode::ClassicalAttention),
            "identity" => Ok(EncoderMode::Identity),
            other => Err(format!("unknown encoder mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub n_heads: usize,
    pub head_dim: usize,
    pub d_model: usize,
    /// Attention temperature in the scaled softmax.
    pub tau_attn: f64,
    /// Width of the feature-map and feed-forward circuits.
    pub n_feat_qubits: usize,
    /// Feed-forward circuit depth.
    pub l_qsl: usize,
    pub dropout_rate: f64,
    pub mode: EncoderMode,
    pub use_positional_encoding: bool,
    /// When false (default), `d_model` must equal the pool size and the input
    /// projection is the identity.
    pub learned_projection: bool,
}

impl EncoderConfig {
    /// Defaults sized for desk-scale search over a pool of width `pool_size`.
    pub fn defaults(pool_size: usize) -> EncoderConfig {
        let d_model = pool_size;
        // Largest head count up to 2 that divides d_model.
        let n_heads = if d_model % 2 == 0 { 2 } else { 1 };
        EncoderConfig {
            n_heads,
            head_dim: d_model / n_heads,
            d_model,
            tau_attn: 1.0,
            n_feat_qubits: 4,
            l_qsl: 2,
            dropout_rate: 0.1,
            mode: EncoderMode::Qbsa,
            use_positional_encoding: true,
            learned_projection: false,
        }
    }

    pub fn validate(&self, pool_size: usize) -> Result<(), EncoderError> {
        if self.n_heads * self.head_dim != self.d_model {
            return Err(EncoderError::Config(format!(
                "n_heads ({}) * head_dim ({}) != d_model ({})",
                self.n_heads, self.head_dim, self.d_model
            )));
        }
        if self.tau_attn <= 0.0 {
            return Err(EncoderError::Config("tau_attn must be positive".into()));
        }
        if self.l_qsl < 1 {
            return Err(EncoderError::Config("l_qsl must be at least 1".into()));
        }
        if self.n_feat_qubits < 1 {
            return Err(EncoderError::Config("n_feat_qubits must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(EncoderError::Config("dropout_rate must lie in [0,1)".into()));
        }
        if !self.learned_projection && self.d_model != pool_size {
            return Err(EncoderError::Config(format!(
                "identity projection requires d_model ({}) == pool size ({pool_size})",
                self.d_model
            )));
        }
        Ok(())
    }
}

/// Per-head projections, feature-map parameters, and interference phase.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeadParams {
    pub w_q: Tensor,
    pub w_k: Tensor,
    pub w_v: Tensor,
    /// Maps projected rows (width `head_dim`) to feature-map inputs
    /// (width `n_feat_qubits`).
    pub w_feat: Tensor,
    pub theta0: Tensor,
    pub theta1: Tensor,
    /// Interference phase, shape `[1]`.
    pub phase: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FfnParams {
    pub w_down: Tensor,
    pub b_down: Tensor,
    /// Ry scales, shape `[l_qsl, n_feat_qubits]`.
    pub theta: Tensor,
    /// Rz scales, same shape.
    pub phi: Tensor,
    pub w_up: Tensor,
    pub b_up: Tensor,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerNormParams {
    pub gamma: Tensor,
    pub beta: Tensor,
}

impl LayerNormParams {
    fn init(width: usize) -> LayerNormParams {
        LayerNormParams {
            gamma: Tensor::filled(vec![width], 1.0),
            beta: Tensor::zeros(vec![width]),
        }
    }
}

/// All trainable parameters of the encoder apart from the logit factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncoderState {
    pub heads: Vec<HeadParams>,
    pub w_out: Tensor,
    pub b_out: Tensor,
    pub ln_attn: LayerNormParams,
    pub ffn: FfnParams,
    pub ln_ffn: LayerNormParams,
    /// `(weight [C, d_model], bias [d_model])`, present only with a learned
    /// input projection.
    pub input_proj: Option<(Tensor, Tensor)>,
    /// `(weight [d_model, C], bias [C])`, present only when `d_model != C`.
    pub output_proj: Option<(Tensor, Tensor)>,
}

fn xavier(rows: usize, cols: usize, rng: &mut ChaCha12Rng) -> Tensor {
    let std = (2.0 / (rows + cols) as f64).sqrt();
    Tensor::randn(vec![rows, cols], std, rng)
}

impl EncoderState {
    pub fn init(pool_size: usize, config: &EncoderConfig, rng: &mut ChaCha12Rng) -> EncoderState {
        let dm = config.d_model;
        let dh = config.head_dim;
        let nf = config.n_feat_qubits;
        let heads = (0..config.n_heads)
            .map(|_| HeadParams {
                w_q: xavier(dm, dh, rng),
                w_k: xavier(dm, dh, rng),
                w_v: xavier(dm, dh, rng),
                w_feat: xavier(dh, nf, rng),
                theta0: Tensor::randn(vec![nf], 0.5, rng),
                theta1: Tensor::randn(vec![nf], 0.5, rng),
                phase: Tensor::scalar(std::f64::consts::FRAC_PI_4),
            })
            .collect();
        let projections = config.learned_projection.then(|| {
            (
                (xavier(pool_size, dm, rng), Tensor::zeros(vec![dm])),
                (xavier(dm, pool_size, rng), Tensor::zeros(vec![pool_size])),
            )
        });
        let (input_proj, output_proj) = match projections {
            Some((i, o)) => (Some(i), Some(o)),
            None => (None, None),
        };
        EncoderState {
            heads,
            w_out: xavier(dm, dm, rng),
            b_out: Tensor::zeros(vec![dm]),
            ln_attn: LayerNormParams::init(dm),
            ffn: FfnParams {
                w_down: xavier(dm, nf, rng),
                b_down: Tensor::zeros(vec![nf]),
                theta: Tensor::randn(vec![config.l_qsl, nf], 0.5, rng),
                phi: Tensor::randn(vec![config.l_qsl, nf], 0.5, rng),
                w_up: xavier(nf, dm, rng),
                b_up: Tensor::zeros(vec![dm]),
            },
            ln_ffn: LayerNormParams::init(dm),
            input_proj,
            output_proj,
        }
    }
}

/// Stable iteration over every trainable tensor, keyed by name.
pub fn visit_params<'a>(
    arch: &'a ArchParams,
    state: &'a EncoderState,
) -> Vec<(String, &'a Tensor)> {
    let mut out: Vec<(String, &Tensor)> = vec![
        ("arch.p".into(), &arch.p_factor),
        ("arch.q".into(), &arch.q_factor),
    ];
    for (h, head) in state.heads.iter().enumerate() {
        out.push((format!("head{h}.w_q"), &head.w_q));
        out.push((format!("head{h}.w_k"), &head.w_k));
        out.push((format!("head{h}.w_v"), &head.w_v));
        out.push((format!("head{h}.w_feat"), &head.w_feat));
        out.push((format!("head{h}.theta0"), &head.theta0));
        out.push((format!("head{h}.theta1"), &head.theta1));
        out.push((format!("head{h}.phase"), &head.phase));
    }
    out.push(("attn.w_out".into(), &state.w_out));
    out.push(("attn.b_out".into(), &state.b_out));
    out.push(("ln_attn.gamma".into(), &state.ln_attn.gamma));
    out.push(("ln_attn.beta".into(), &state.ln_attn.beta));
    out.push(("ffn.w_down".into(), &state.ffn.w_down));
    out.push(("ffn.b_down".into(), &state.ffn.b_down));
    out.push(("ffn.theta".into(), &state.ffn.theta));
    out.push(("ffn.phi".into(), &state.ffn.phi));
    out.push(("ffn.w_up".into(), &state.ffn.w_up));
    out.push(("ffn.b_up".into(), &state.ffn.b_up));
    out.push(("ln_ffn.gamma".into(), &state.ln_ffn.gamma));
    out.push(("ln_ffn.beta".into(), &state.ln_ffn.beta));
    if let Some((w, b)) = &state.input_proj {
        out.push(("proj_in.w".into(), w));
        out.push(("proj_in.b".into(), b));
    }
    if let Some((w, b)) = &state.output_proj {
        out.push(("proj_out.w".into(), w));
        out.push(("proj_out.b".into(), b));
    }
    out
}

/// Mutable counterpart of [`visit_params`]; names and order match.
pub fn visit_params_mut<'a>(
    arch: &'a mut ArchParams,
    state: &'a mut EncoderState,
) -> Vec<(String, &'a mut Tensor)> {
    let mut out: Vec<(String, &mut Tensor)> = vec![
        ("arch.p".into(), &mut arch.p_factor),
        ("arch.q".into(), &mut arch.q_factor),
    ];
    for (h, head) in state.heads.iter_mut().enumerate() {
        out.push((format!("head{h}.w_q"), &mut head.w_q));
        out.push((format!("head{h}.w_k"), &mut head.w_k));
        out.push((format!("head{h}.w_v"), &mut head.w_v));
        out.push((format!("head{h}.w_feat"), &mut head.w_feat));
        out.push((format!("head{h}.theta0"), &mut head.theta0));
        out.push((format!("head{h}.theta1"), &mut head.theta1));
        out.push((format!("head{h}.phase"), &mut head.phase));
    }
    out.push(("attn.w_out".into(), &mut state.w_out));
    out.push(("attn.b_out".into(), &mut state.b_out));
    out.push(("ln_attn.gamma".into(), &mut state.ln_attn.gamma));
    out.push(("ln_attn.beta".into(), &mut state.ln_attn.beta));
    out.push(("ffn.w_down".into(), &mut state.ffn.w_down));
    out.push(("ffn.b_down".into(), &mut state.ffn.b_down));
    out.push(("ffn.theta".into(), &mut state.ffn.theta));
    out.push(("ffn.phi".into(), &mut state.ffn.phi));
    out.push(("ffn.w_up".into(), &mut state.ffn.w_up));
    out.push(("ffn.b_up".into(), &mut state.ffn.b_up));
    out.push(("ln_ffn.gamma".into(), &mut state.ln_ffn.gamma));
    out.push(("ln_ffn.beta".into(), &mut state.ln_ffn.beta));
    if let Some((w, b)) = &mut state.input_proj {
        out.push(("proj_in.w".into(), w));
        out.push(("proj_in.b".into(), b));
    }
    if let Some((w, b)) = &mut state.output_proj {
        out.push(("proj_out.w".into(), w));
        out.push(("proj_out.b".into(), b));
    }
    out
}

/// Sinusoidal positional encoding over `depth` positions and `width` dims.
pub fn positional_encoding(depth: usize, width: usize) -> Tensor {
    let mut pe = Tensor::zeros(vec![depth, width]);
    for pos in 0..depth {
        for i in 0..width.div_ceil(2) {
            let rate = (pos as f64) / 10000f64.powf(2.0 * i as f64 / width as f64);
            pe.data_mut()[pos * width + 2 * i] = rate.sin();
            if 2 * i + 1 < width {
                pe.data_mut()[pos * width + 2 * i + 1] = rate.cos();
            }
        }
    }
    pe
}

/// Feature-interaction preprocessing `(a a^T) a`, plus positional encoding
/// when `pe` is given.
pub fn preprocess(alpha: &Value, pe: Option<&Tensor>) -> Value {
    let fit = alpha.matmul(&alpha.transpose()).matmul(alpha);
    match pe {
        Some(pe) => fit.add_const(pe),
        None => fit,
    }
}

/// Data-encoding feature-map circuit (width `n`): `Rz(u_i^2)` and
/// `Rx(theta0_i u_i)` per qubit, a CNOT chain, `Ry(theta1_i u_i)` per qubit,
/// and a second CNOT chain. Parameters are packed `[theta0; theta1]`.
pub fn feature_map_template(n: usize) -> QuantumTemplate {
    let mut gates = Vec::new();
    for q in 0..n {
        gates.push(TemplateGate {
            kind: GateKind::Rz,
            qubits: vec![q],
            angle: Some(AngleExpr::InputSquared { input: q }),
        });
    }
    for q in 0..n {
        gates.push(TemplateGate {
            kind: GateKind::Rx,
            qubits: vec![q],
            angle: Some(AngleExpr::ParamTimesInput { param: q, input: q }),
        });
    }
    for q in 0..n.saturating_sub(1) {
        gates.push(TemplateGate {
            kind: GateKind::Cnot,
            qubits: vec![q, q + 1],
            angle: None,
        });
    }
    for q in 0..n {
        gates.push(TemplateGate {
            kind: GateKind::Ry,
            qubits: vec![q],
            angle: Some(AngleExpr::ParamTimesInput {
                param: n + q,
                input: q,
            }),
        });
    }
    for q in 0..n.saturating_sub(1) {
        gates.push(TemplateGate {
            kind: GateKind::Cnot,
            qubits: vec![q, q + 1],
            angle: None,
        });
    }
    QuantumTemplate::new(n, gates, n, 2 * n).expect("feature-map template is shiftable")
}

/// Feed-forward circuit (width `n`, depth `l`): a Hadamard layer, then per
/// layer `Rz(phi_{l,i} z_i)` and `Ry(theta_{l,i} z_i)` per qubit followed by a
/// CNOT chain. Parameters are packed `[theta (row-major); phi (row-major)]`.
pub fn ffn_template(n: usize, layers: usize) -> QuantumTemplate {
    let mut gates = Vec::new();
    for q in 0..n {
        gates.push(TemplateGate {
            kind: GateKind::H,
            qubits: vec![q],
            angle: None,
        });
    }
    for l in 0..layers {
        for q in 0..n {
            gates.push(TemplateGate {
                kind: GateKind::Rz,
                qubits: vec![q],
                angle: Some(AngleExpr::ParamTimesInput {
                    param: layers * n + l * n + q,
                    input: q,
                }),
            });
            gates.push(TemplateGate {
                kind: GateKind::Ry,
                qubits: vec![q],
                angle: Some(AngleExpr::ParamTimesInput {
                    param: l * n + q,
                    input: q,
                }),
            });
        }
        for q in 0..n.saturating_sub(1) {
            gates.push(TemplateGate {
                kind: GateKind::Cnot,
                qubits: vec![q, q + 1],
                angle: None,
            });
        }
    }
    QuantumTemplate::new(n, gates, n, 2 * layers * n).expect("ffn template is shiftable")
}

/// Per-qubit Z expectations of the feature-map circuit at concrete values.
/// `u` must already have feature width (projected rows of the query/key
/// matrices).
pub fn quantum_feature_map(u: &[f64], head: &HeadParams) -> Vec<f64> {
    let n = head.theta0.len();
    assert_eq!(u.len(), n, "feature input width {} != {}", u.len(), n);
    let template = feature_map_template(n);
    let params: Vec<f64> = head
        .theta0
        .data()
        .iter()
        .chain(head.theta1.data())
        .copied()
        .collect();
    template.forward(u, &params)
}

/// Evaluation context: dropout activity and the seed its mask derives from.
#[derive(Debug, Clone, Copy)]
pub struct EvalContext {
    pub train: bool,
    pub seed: u64,
}

impl EvalContext {
    pub fn eval() -> EvalContext {
        EvalContext {
            train: false,
            seed: 0,
        }
    }

    pub fn train(seed: u64) -> EvalContext {
        EvalContext { train: true, seed }
    }
}

/// One recorded encoder forward pass. Leaves are keyed by the names of
/// [`visit_params`]; gradients are available after `backward` on a scalar
/// derived from [`EncoderGraph::alpha_out`].
pub struct EncoderGraph {
    pub tape: Tape,
    /// Raw logits `alpha = P Q`, shape `[D, C]`.
    pub alpha: Value,
    /// Encoder output, shape `[D, C]`.
    pub alpha_out: Value,
    leaves: BTreeMap<String, Value>,
}

impl EncoderGraph {
    pub fn leaf(&self, name: &str) -> &Value {
        self.leaves
            .get(name)
            .unwrap_or_else(|| panic!("unknown parameter `{name}`"))
    }

    /// Gradient of the backward-seeded scalar w.r.t. a named parameter.
    pub fn gradient(&self, name: &str) -> Tensor {
        self.leaf(name).grad()
    }

    pub fn param_names(&self) -> impl Iterator<Item = &String> {
        self.leaves.keys()
    }
}

struct HeadLeaves {
    w_q: Value,
    w_k: Value,
    w_v: Value,
    w_feat: Value,
    feat_params: Value,
    phase: Value,
}

/// Per-head attention plus residual/LayerNorm fusion. Returns
/// `(alpha_mid, per-head logits, per-head attention weights)`.
fn attention_stage(
    x: &Value,
    heads: &[HeadLeaves],
    w_out: &Value,
    b_out: &Value,
    ln: (&Value, &Value),
    config: &EncoderConfig,
) -> (Value, Vec<Value>, Vec<Value>) {
    let depth = x.shape()[0];
    let scale = 1.0 / ((config.head_dim as f64).sqrt() * config.tau_attn);
    let template = feature_map_template(config.n_feat_qubits);
    let mut outputs = Vec::with_capacity(heads.len());
    let mut logits_all = Vec::with_capacity(heads.len());
    let mut weights_all = Vec::with_capacity(heads.len());
    for head in heads {
        let q_proj = x.matmul(&head.w_q);
        let k_proj = x.matmul(&head.w_k);
        let v_proj = x.matmul(&head.w_v);
        let logits = match config.mode {
            EncoderMode::ClassicalAttention => q_proj.matmul(&k_proj.transpose()),
            _ => {
                let feat_in_q = q_proj.matmul(&head.w_feat);
                let feat_in_k = k_proj.matmul(&head.w_feat);
                let phi_of = |m: &Value| -> Value {
                    let rows: Vec<Value> = (0..depth)
                        .map(|i| quantum_node(&template, &m.row(i), &head.feat_params))
                        .collect();
                    stack_rows(&rows)
                };
                let phi_q = phi_of(&feat_in_q);
                let phi_k = phi_of(&feat_in_k);
                let similarity = phi_q.matmul(&phi_k.transpose());
                let norm_q = phi_q.square().sum_rows().sqrt();
                let norm_k = phi_k.square().sum_rows().sqrt();
                let interference = norm_q
                    .reshape(vec![depth, 1])
                    .matmul(&norm_k.reshape(vec![1, depth]))
                    .scale(config.n_heads as f64)
                    .scale_by(&head.phase.cos());
                similarity.add(&interference)
            }
        };
        let weights = logits.scale(scale).softmax_rows();
        outputs.push(weights.matmul(&v_proj));
        logits_all.push(logits);
        weights_all.push(weights);
    }
    let merged = concat_cols(&outputs)
        .matmul(w_out)
        .add_row_bias(b_out);
    let alpha_mid = x.add(&merged).layer_norm(ln.0, ln.1, 1e-5);
    (alpha_mid, logits_all, weights_all)
}

/// Position-wise quantum transformation plus residual/LayerNorm fusion.
fn ffn_stage(
    alpha_mid: &Value,
    w_down: &Value,
    b_down: &Value,
    angles: &Value,
    w_up: &Value,
    b_up: &Value,
    ln: (&Value, &Value),
    config: &EncoderConfig,
    dropout: Option<&Tensor>,
) -> Value {
    let depth = alpha_mid.shape()[0];
    let template = ffn_template(config.n_feat_qubits, config.l_qsl);
    let z = alpha_mid.matmul(w_down).add_row_bias(b_down);
    let rows: Vec<Value> = (0..depth)
        .map(|i| quantum_node(&template, &z.row(i), angles))
        .collect();
    let s = stack_rows(&rows);
    let transformed = s.matmul(w_up).add_row_bias(b_up);
    let dropped = match dropout {
        Some(mask) => transformed.mul_const(mask),
        None => transformed,
    };
    alpha_mid.add(&dropped).layer_norm(ln.0, ln.1, 1e-5)
}

fn pack_feat_params(theta0: &Value, theta1: &Value) -> Value {
    let n = theta0.shape()[0];
    concat_cols(&[
        theta0.reshape(vec![1, n]),
        theta1.reshape(vec![1, n]),
    ])
    .reshape(vec![2 * n])
}

fn pack_ffn_angles(theta: &Value, phi: &Value, layers: usize, n: usize) -> Value {
    concat_cols(&[
        theta.reshape(vec![1, layers * n]),
        phi.reshape(vec![1, layers * n]),
    ])
    .reshape(vec![2 * layers * n])
}

/// Record a full encoder forward pass: logits from the low-rank factors,
/// preprocessing, attention, and the feed-forward stage, honoring
/// `config.mode`.
pub fn encoder_forward(
    arch: &ArchParams,
    state: &EncoderState,
    config: &EncoderConfig,
    ctx: &EvalContext,
) -> Result<EncoderGraph, EncoderError> {
    let pool_size = arch.pool_size();
    let depth = arch.depth();
    config.validate(pool_size)?;
    check_state_shapes(state, config, pool_size)?;

    let tape = Tape::new();
    let mut leaves = BTreeMap::new();
    for (name, tensor) in visit_params(arch, state) {
        leaves.insert(name, tape.leaf(tensor.clone()));
    }

    let alpha = leaves["arch.p"]
        .bmm(&leaves["arch.q"])
        .reshape(vec![depth, pool_size]);

    if config.mode == EncoderMode::Identity {
        return Ok(EncoderGraph {
            tape,
            alpha_out: alpha.clone(),
            alpha,
            leaves,
        });
    }

    let pe = config
        .use_positional_encoding
        .then(|| positional_encoding(depth, pool_size));
    let alpha_in = preprocess(&alpha, pe.as_ref());

    let x = match &state.input_proj {
        Some(_) => alpha_in
            .matmul(&leaves["proj_in.w"])
            .add_row_bias(&leaves["proj_in.b"]),
        None => alpha_in,
    };

    let head_leaves: Vec<HeadLeaves> = (0..config.n_heads)
        .map(|h| HeadLeaves {
            w_q: leaves[&format!("head{h}.w_q")].clone(),
            w_k: leaves[&format!("head{h}.w_k")].clone(),
            w_v: leaves[&format!("head{h}.w_v")].clone(),
            w_feat: leaves[&format!("head{h}.w_feat")].clone(),
            feat_params: pack_feat_params(
                &leaves[&format!("head{h}.theta0")],
                &leaves[&format!("head{h}.theta1")],
            ),
            phase: leaves[&format!("head{h}.phase")].clone(),
        })
        .collect();

    let (alpha_mid, _, _) = attention_stage(
        &x,
        &head_leaves,
        &leaves["attn.w_out"],
        &leaves["attn.b_out"],
        (&leaves["ln_attn.gamma"], &leaves["ln_attn.beta"]),
        config,
    );

    let dropout_mask = (ctx.train && config.dropout_rate > 0.0).then(|| {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(ctx.seed ^ 0x64726f70);
        Tensor::dropout_mask(
            vec![depth, config.d_model],
            config.dropout_rate,
            &mut rng,
        )
    });

    let ffn_angles = pack_ffn_angles(
        &leaves["ffn.theta"],
        &leaves["ffn.phi"],
        config.l_qsl,
        config.n_feat_qubits,
    );
    let fused = ffn_stage(
        &alpha_mid,
        &leaves["ffn.w_down"],
        &leaves["ffn.b_down"],
        &ffn_angles,
        &leaves["ffn.w_up"],
        &leaves["ffn.b_up"],
        (&leaves["ln_ffn.gamma"], &leaves["ln_ffn.beta"]),
        config,
        dropout_mask.as_ref(),
    );

    let alpha_out = match &state.output_proj {
        Some(_) => fused
            .matmul(&leaves["proj_out.w"])
            .add_row_bias(&leaves["proj_out.b"]),
        None => fused,
    };

    Ok(EncoderGraph {
        tape,
        alpha,
        alpha_out,
        leaves,
    })
}

fn check_state_shapes(
    state: &EncoderState,
    config: &EncoderConfig,
    pool_size: usize,
) -> Result<(), EncoderError> {
    let expect = |name: &str, got: &[usize], want: Vec<usize>| -> Result<(), EncoderError> {
        if got != want.as_slice() {
            return Err(EncoderError::ParamShape {
                name: name.into(),
                expected: want,
                got: got.to_vec(),
            });
        }
        Ok(())
    };
    if state.heads.len() != config.n_heads {
        return Err(EncoderError::Config(format!(
            "state has {} heads, config expects {}",
            state.heads.len(),
            config.n_heads
        )));
    }
    let (dm, dh, nf, l) = (
        config.d_model,
        config.head_dim,
        config.n_feat_qubits,
        config.l_qsl,
    );
    for (h, head) in state.heads.iter().enumerate() {
        expect(&format!("head{h}.w_q"), head.w_q.shape(), vec![dm, dh])?;
        expect(&format!("head{h}.w_k"), head.w_k.shape(), vec![dm, dh])?;
        expect(&format!("head{h}.w_v"), head.w_v.shape(), vec![dm, dh])?;
        expect(&format!("head{h}.w_feat"), head.w_feat.shape(), vec![dh, nf])?;
        expect(&format!("head{h}.theta0"), head.theta0.shape(), vec![nf])?;
        expect(&format!("head{h}.theta1"), head.theta1.shape(), vec![nf])?;
        expect(&format!("head{h}.phase"), head.phase.shape(), vec![1])?;
    }
    expect("attn.w_out", state.w_out.shape(), vec![dm, dm])?;
    expect("attn.b_out", state.b_out.shape(), vec![dm])?;
    expect("ffn.w_down", state.ffn.w_down.shape(), vec![dm, nf])?;
    expect("ffn.b_down", state.ffn.b_down.shape(), vec![nf])?;
    expect("ffn.theta", state.ffn.theta.shape(), vec![l, nf])?;
    expect("ffn.phi", state.ffn.phi.shape(), vec![l, nf])?;
    expect("ffn.w_up", state.ffn.w_up.shape(), vec![nf, dm])?;
    expect("ffn.b_up", state.ffn.b_up.shape(), vec![dm])?;
    if config.learned_projection {
        let (w, b) = state.input_proj.as_ref().ok_or_else(|| {
            EncoderError::Config("learned projection configured but input_proj missing".into())
        })?;
        expect("proj_in.w", w.shape(), vec![pool_size, dm])?;
        expect("proj_in.b", b.shape(), vec![dm])?;
        let (w, b) = state.output_proj.as_ref().ok_or_else(|| {
            EncoderError::Config("learned projection configured but output_proj missing".into())
        })?;
        expect("proj_out.w", w.shape(), vec![dm, pool_size])?;
        expect("proj_out.b", b.shape(), vec![pool_size])?;
    }
    Ok(())
}

/// Attention stage outputs at concrete values, for inspection and tests.
pub struct AttentionOutput {
    pub alpha_mid: Tensor,
    /// Per-head combined logits before the scaled softmax.
    pub logits: Vec<Tensor>,
    /// Per-head attention weight matrices (rows sum to 1).
    pub weights: Vec<Tensor>,
}

/// Run the attention stage alone on a concrete `alpha_in` (already at
/// `d_model` width).
pub fn attention_forward(
    alpha_in: &Tensor,
    state: &EncoderState,
    config: &EncoderConfig,
) -> Result<AttentionOutput, EncoderError> {
    let tape = Tape::new();
    let x = tape.leaf(alpha_in.clone());
    let head_leaves: Vec<HeadLeaves> = state
        .heads
        .iter()
        .map(|h| HeadLeaves {
            w_q: tape.leaf(h.w_q.clone()),
            w_k: tape.leaf(h.w_k.clone()),
            w_v: tape.leaf(h.w_v.clone()),
            w_feat: tape.leaf(h.w_feat.clone()),
            feat_params: pack_feat_params(&tape.leaf(h.theta0.clone()), &tape.leaf(h.theta1.clone())),
            phase: tape.leaf(h.phase.clone()),
        })
        .collect();
    let w_out = tape.leaf(state.w_out.clone());
    let b_out = tape.leaf(state.b_out.clone());
    let gamma = tape.leaf(state.ln_attn.gamma.clone());
    let beta = tape.leaf(state.ln_attn.beta.clone());
    let (alpha_mid, logits, weights) =
        attention_stage(&x, &head_leaves, &w_out, &b_out, (&gamma, &beta), config);
    Ok(AttentionOutput {
        alpha_mid: alpha_mid.data(),
        logits: logits.iter().map(Value::data).collect(),
        weights: weights.iter().map(Value::data).collect(),
    })
}

/// Run the feed-forward stage alone on a concrete `alpha_mid`.
pub fn quantum_ffn(
    alpha_mid: &Tensor,
    state: &EncoderState,
    config: &EncoderConfig,
    ctx: &EvalContext,
) -> Tensor {
    let tape = Tape::new();
    let x = tape.leaf(alpha_mid.clone());
    let w_down = tape.leaf(state.ffn.w_down.clone());
    let b_down = tape.leaf(state.ffn.b_down.clone());
    let angles = pack_ffn_angles(
        &tape.leaf(state.ffn.theta.clone()),
        &tape.leaf(state.ffn.phi.clone()),
        config.l_qsl,
        config.n_feat_qubits,
    );
    let w_up = tape.leaf(state.ffn.w_up.clone());
    let b_up = tape.leaf(state.ffn.b_up.clone());
    let gamma = tape.leaf(state.ln_ffn.gamma.clone());
    let beta = tape.leaf(state.ln_ffn.beta.clone());
    let dropout = (ctx.train && config.dropout_rate > 0.0).then(|| {
        use rand::SeedableRng;
        let mut rng = ChaCha12Rng::seed_from_u64(ctx.seed ^ 0x64726f70);
        Tensor::dropout_mask(
            vec![alpha_mid.shape()[0], config.d_model],
            config.dropout_rate,
            &mut rng,
        )
    });
    ffn_stage(
        &x,
        &w_down,
        &b_down,
        &angles,
        &w_up,
        &b_up,
        (&gamma, &beta),
        config,
        dropout.as_ref(),
    )
    .data()
}

/// Versioned JSON checkpoint of all encoder parameters.
#[derive(Debug, Serialize, Deserialize)]
pub struct Checkpoint {
    pub version: u32,
    pub config: EncoderConfig,
    pub arch: ArchParams,
    pub state: EncoderState,
}

pub const CHECKPOINT_VERSION: u32 = 1;

pub fn save_checkpoint(arch: &ArchParams, state: &EncoderState, config: &EncoderConfig) -> String {
    serde_json::to_string_pretty(&Checkpoint {
        version: CHECKPOINT_VERSION,
        config: config.clone(),
        arch: arch.clone(),
        state: state.clone(),
    })
    .expect("checkpoint serializes")
}

pub fn load_checkpoint(json: &str) -> Result<Checkpoint, EncoderError> {
    let ckpt: Checkpoint =
        serde_json::from_str(json).map_err(|e| EncoderError::Checkpoint(e.to_string()))?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(EncoderError::Checkpoint(format!(
            "unsupported checkpoint version {}",
            ckpt.version
        )));
    }
    check_state_shapes(&ckpt.state, &ckpt.config, ckpt.arch.pool_size())?;
    Ok(ckpt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;

    fn small_setup(mode: EncoderMode) -> (ArchParams, EncoderState, EncoderConfig) {
        let mut rng = ChaCha12Rng::seed_from_u64(42);
        let (d, c) = (3, 4);
        let mut config = EncoderConfig::defaults(c);
        config.mode = mode;
        config.n_feat_qubits = 2;
        config.l_qsl = 1;
        config.dropout_rate = 0.0;
        let arch = ArchParams::init(d, c, 2, &mut rng);
        let state = EncoderState::init(c, &config, &mut rng);
        (arch, state, config)
    }

    #[test]
    fn fit_of_zeros_is_positional_encoding() {
        let tape = Tape::new();
        let alpha = tape.leaf(Tensor::zeros(vec![3, 4]));
        let pe = positional_encoding(3, 4);
        let out = preprocess(&alpha, Some(&pe));
        assert_eq!(out.data(), pe);
    }

    #[test]
    fn fit_of_orthonormal_rows_is_identity_map() {
        let tape = Tape::new();
        let eye = Tensor::new(vec![2, 2], vec![1.0, 0.0, 0.0, 1.0]);
        let alpha = tape.leaf(eye.clone());
        let out = preprocess(&alpha, None);
        assert_eq!(out.data(), eye);
    }

    #[test]
    fn fit_matches_triple_product_oracle() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let a = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let tape = Tape::new();
        let alpha = tape.leaf(a.clone());
        let got = preprocess(&alpha, None).data();
        // Oracle: explicit triple loop for (a a^T) a.
        let mut aat = vec![[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..4 {
                    aat[i][j] += a.at2(i, k) * a.at2(j, k);
                }
            }
        }
        for i in 0..3 {
            for j in 0..4 {
                let mut want = 0.0;
                for k in 0..3 {
                    want += aat[i][k] * a.at2(k, j);
                }
                assert_abs_diff_eq!(got.at2(i, j), want, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn positional_encoding_matches_formula() {
        let pe = positional_encoding(5, 6);
        for pos in 0..5 {
            for i in 0..3 {
                let rate = pos as f64 / 10000f64.powf(2.0 * i as f64 / 6.0);
                assert_abs_diff_eq!(pe.at2(pos, 2 * i), rate.sin(), epsilon = 1e-12);
                assert_abs_diff_eq!(pe.at2(pos, 2 * i + 1), rate.cos(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn feature_map_of_zero_input_is_all_ones() {
        let (_, state, _) = small_setup(EncoderMode::Qbsa);
        let phi = quantum_feature_map(&[0.0, 0.0], &state.heads[0]);
        for z in phi {
            assert_abs_diff_eq!(z, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn feature_map_single_qubit_matrix_oracle() {
        // u = pi, theta0 = 1, theta1 = 0: state Rx(pi) Rz(pi^2) |0>, <Z> = -1.
        let head = HeadParams {
            w_q: Tensor::zeros(vec![1, 1]),
            w_k: Tensor::zeros(vec![1, 1]),
            w_v: Tensor::zeros(vec![1, 1]),
            w_feat: Tensor::zeros(vec![1, 1]),
            theta0: Tensor::new(vec![1], vec![1.0]),
            theta1: Tensor::new(vec![1], vec![0.0]),
            phase: Tensor::scalar(0.0),
        };
        let phi = quantum_feature_map(&[std::f64::consts::PI], &head);
        assert_abs_diff_eq!(phi[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn feature_map_matches_statevector_oracle() {
        // Independent route: build the same circuit on the simulator.
        use crate::circuit::{Circuit, GateInstance, GateParam};
        use crate::sim;
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let (_, state, _) = small_setup(EncoderMode::Qbsa);
        let head = &state.heads[0];
        for trial in 0..5 {
            let u =
                Tensor::randn(vec![2], 1.0, &mut rng);
            let u = u.data();
            let mut gates = Vec::new();
            for q in 0..2 {
                gates.push(GateInstance::new(
                    GateKind::Rz,
                    vec![q],
                    GateParam::Fixed(u[q] * u[q]),
                ));
            }
            for q in 0..2 {
                gates.push(GateInstance::new(
                    GateKind::Rx,
                    vec![q],
                    GateParam::Fixed(head.theta0.data()[q] * u[q]),
                ));
            }
            gates.push(GateInstance::new(GateKind::Cnot, vec![0, 1], GateParam::None));
            for q in 0..2 {
                gates.push(GateInstance::new(
                    GateKind::Ry,
                    vec![q],
                    GateParam::Fixed(head.theta1.data()[q] * u[q]),
                ));
            }
            gates.push(GateInstance::new(GateKind::Cnot, vec![0, 1], GateParam::None));
            let c = Circuit::new(2, gates).unwrap();
            let sv = sim::run(&c, &[], None, trial).unwrap();
            let want = sv.z_expectations();
            let got = quantum_feature_map(u, head);
            for q in 0..2 {
                assert_abs_diff_eq!(got[q], want[q], epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn feature_map_components_bounded() {
        let mut rng = ChaCha12Rng::seed_from_u64(17);
        let (_, state, _) = small_setup(EncoderMode::Qbsa);
        for _ in 0..50 {
            let u = Tensor::randn(vec![2], 2.0, &mut rng);
            let phi = quantum_feature_map(u.data(), &state.heads[0]);
            for z in phi {
                assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&z));
            }
        }
    }

    #[test]
    fn attention_rows_are_probability_vectors() {
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let (_, state, config) = small_setup(EncoderMode::Qbsa);
        let alpha_in = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let out = attention_forward(&alpha_in, &state, &config).unwrap();
        for a in &out.weights {
            for r in 0..3 {
                let row_sum: f64 = (0..3).map(|c| a.at2(r, c)).sum();
                assert_abs_diff_eq!(row_sum, 1.0, epsilon = 1e-10);
                for c in 0..3 {
                    assert!(a.at2(r, c) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn identical_rows_give_uniform_attention() {
        let (_, state, config) = small_setup(EncoderMode::Qbsa);
        let row = [0.4, -0.2, 0.9, 0.1];
        let alpha_in = Tensor::new(vec![3, 4], row.iter().cycle().take(12).copied().collect());
        let out = attention_forward(&alpha_in, &state, &config).unwrap();
        for a in &out.weights {
            for r in 0..3 {
                for c in 0..3 {
                    assert_abs_diff_eq!(a.at2(r, c), 1.0 / 3.0, epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn phase_half_pi_zeroes_interference() {
        let mut rng = ChaCha12Rng::seed_from_u64(6);
        let (_, mut state, config) = small_setup(EncoderMode::Qbsa);
        for head in &mut state.heads {
            head.phase = Tensor::scalar(std::f64::consts::FRAC_PI_2);
        }
        let alpha_in = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let out = attention_forward(&alpha_in, &state, &config).unwrap();
        // With cos(phase) = 0 the logits must equal the pure feature
        // similarity phi(Q_i) . phi(K_j).
        for (h, head) in state.heads.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    let project = |r: usize, w: &Tensor| -> Vec<f64> {
                        let mut row = vec![0.0; config.head_dim];
                        for (cc, slot) in row.iter_mut().enumerate() {
                            for k in 0..4 {
                                *slot += alpha_in.at2(r, k) * w.at2(k, cc);
                            }
                        }
                        let mut feat = vec![0.0; config.n_feat_qubits];
                        for (f, slot) in feat.iter_mut().enumerate() {
                            for (cc, &val) in row.iter().enumerate() {
                                *slot += val * head.w_feat.at2(cc, f);
                            }
                        }
                        feat
                    };
                    let phi_q = quantum_feature_map(&project(i, &head.w_q), head);
                    let phi_k = quantum_feature_map(&project(j, &head.w_k), head);
                    let s: f64 = phi_q.iter().zip(&phi_k).map(|(a, b)| a * b).sum();
                    assert_abs_diff_eq!(out.logits[h].at2(i, j), s, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn ffn_zero_token_depends_only_on_circuit_structure() {
        let (_, state, config) = small_setup(EncoderMode::Qbsa);
        // Zero rows with zero down-projection bias give z = 0, so the circuit
        // output is the Hadamard+CNOT fixed point (<Z> = 0 per qubit) and
        // every token maps identically.
        let alpha_mid = Tensor::zeros(vec![3, 4]);
        let out = quantum_ffn(&alpha_mid, &state, &config, &EvalContext::eval());
        for r in 1..3 {
            for c in 0..4 {
                assert_abs_diff_eq!(out.at2(r, c), out.at2(0, c), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn ffn_matches_statevector_oracle() {
        use crate::circuit::{Circuit, GateInstance, GateParam};
        use crate::sim;
        let (_, state, config) = small_setup(EncoderMode::Qbsa);
        let template = ffn_template(2, 1);
        let z = [0.7, -0.3];
        let params: Vec<f64> = state
            .ffn
            .theta
            .data()
            .iter()
            .chain(state.ffn.phi.data())
            .copied()
            .collect();
        let got = template.forward(&z, &params);
        let mut gates = vec![
            GateInstance::new(GateKind::H, vec![0], GateParam::None),
            GateInstance::new(GateKind::H, vec![1], GateParam::None),
        ];
        for q in 0..2 {
            gates.push(GateInstance::new(
                GateKind::Rz,
                vec![q],
                GateParam::Fixed(state.ffn.phi.at2(0, q) * z[q]),
            ));
            gates.push(GateInstance::new(
                GateKind::Ry,
                vec![q],
                GateParam::Fixed(state.ffn.theta.at2(0, q) * z[q]),
            ));
        }
        gates.push(GateInstance::new(GateKind::Cnot, vec![0, 1], GateParam::None));
        let c = Circuit::new(2, gates).unwrap();
        let sv = sim::run(&c, &[], None, 0).unwrap();
        let want = sv.z_expectations();
        for q in 0..2 {
            assert_abs_diff_eq!(got[q], want[q], epsilon = 1e-10);
        }
        let _ = config;
    }

    #[test]
    fn identity_mode_returns_alpha() {
        let (arch, state, mut config) = small_setup(EncoderMode::Identity);
        config.mode = EncoderMode::Identity;
        let graph = encoder_forward(&arch, &state, &config, &EvalContext::eval()).unwrap();
        assert_eq!(graph.alpha.data(), graph.alpha_out.data());
    }

    #[test]
    fn output_shape_is_depth_by_pool_for_all_modes() {
        for mode in [
            EncoderMode::Qbsa,
            EncoderMode::ClassicalAttention,
            EncoderMode::Identity,
        ] {
            let (arch, state, config) = small_setup(mode);
            let graph = encoder_forward(&arch, &state, &config, &EvalContext::eval()).unwrap();
            assert_eq!(graph.alpha_out.shape(), vec![3, 4], "{mode:?}");
        }
    }

    #[test]
    fn attention_is_depth_equivariant_without_pe_and_not_with_pe() {
        let mut rng = ChaCha12Rng::seed_from_u64(15);
        let (_, state, config) = small_setup(EncoderMode::Qbsa);
        let alpha_in = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        // Permutation: rotate rows by one.
        let perm = [2usize, 0, 1];
        let permuted = {
            let mut t = Tensor::zeros(vec![3, 4]);
            for (r, &pr) in perm.iter().enumerate() {
                for c in 0..4 {
                    t.data_mut()[r * 4 + c] = alpha_in.at2(pr, c);
                }
            }
            t
        };
        let base = attention_forward(&alpha_in, &state, &config).unwrap();
        let swapped = attention_forward(&permuted, &state, &config).unwrap();
        // Without PE in play here, permuting inputs permutes outputs.
        for (r, &pr) in perm.iter().enumerate() {
            for c in 0..4 {
                assert_abs_diff_eq!(
                    swapped.alpha_mid.at2(r, c),
                    base.alpha_mid.at2(pr, c),
                    epsilon = 1e-9
                );
            }
        }
        // With PE added, equivariance must break.
        let pe = positional_encoding(3, 4);
        let with_pe = |t: &Tensor| {
            let mut out = t.clone();
            out.add_assign(&pe);
            out
        };
        let base_pe = attention_forward(&with_pe(&alpha_in), &state, &config).unwrap();
        let swapped_pe = attention_forward(&with_pe(&permuted), &state, &config).unwrap();
        let mut any_diff = false;
        for (r, &pr) in perm.iter().enumerate() {
            for c in 0..4 {
                if (swapped_pe.alpha_mid.at2(r, c) - base_pe.alpha_mid.at2(pr, c)).abs() > 1e-6 {
                    any_diff = true;
                }
            }
        }
        assert!(any_diff, "positional encoding should break equivariance");
    }

    #[test]
    fn heads_own_independent_parameters() {
        let (arch, state, config) = small_setup(EncoderMode::Qbsa);
        let graph = encoder_forward(&arch, &state, &config, &EvalContext::eval()).unwrap();
        graph.alpha_out.sum().backward().unwrap();
        // Both heads' projections receive their own gradients.
        let g0 = graph.gradient("head0.w_q");
        let g1 = graph.gradient("head1.w_q");
        assert_ne!(g0.data(), g1.data());
    }

    #[test]
    fn full_encoder_gradients_match_finite_differences() {
        use crate::autodiff::check_gradients;
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let (arch, state, config) = small_setup(EncoderMode::Qbsa);
        let weights = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let params: Vec<(String, Tensor)> = visit_params(&arch, &state)
            .into_iter()
            .map(|(n, t)| (n, t.clone()))
            .collect();
        let named: Vec<(&str, Tensor)> = params
            .iter()
            .map(|(n, t)| (n.as_str(), t.clone()))
            .collect();
        let (depth, pool) = (arch.depth(), arch.pool_size());
        let report = check_gradients(
            |_tape, leaves| build_for_check(leaves, &config, depth, pool, &weights),
            &named,
            1e-3,
        );
        assert!(report.pass, "{report}");
        let _ = params;
    }

    /// Rebuild the encoder forward pass directly from leaves, in
    /// `visit_params` order, for the gradient check.
    fn build_for_check(
        leaves: &[Value],
        config: &EncoderConfig,
        depth: usize,
        pool: usize,
        weights: &Tensor,
    ) -> Value {
        let mut map = BTreeMap::new();
        let names = [
            "arch.p", "arch.q", "head0.w_q", "head0.w_k", "head0.w_v", "head0.w_feat",
            "head0.theta0", "head0.theta1", "head0.phase", "head1.w_q", "head1.w_k",
            "head1.w_v", "head1.w_feat", "head1.theta0", "head1.theta1", "head1.phase",
            "attn.w_out", "attn.b_out", "ln_attn.gamma", "ln_attn.beta", "ffn.w_down",
            "ffn.b_down", "ffn.theta", "ffn.phi", "ffn.w_up", "ffn.b_up", "ln_ffn.gamma",
            "ln_ffn.beta",
        ];
        assert_eq!(leaves.len(), names.len());
        for (name, leaf) in names.iter().zip(leaves) {
            map.insert(name.to_string(), leaf.clone());
        }
        let alpha = map["arch.p"].bmm(&map["arch.q"]).reshape(vec![depth, pool]);
        let pe = positional_encoding(depth, pool);
        let x = preprocess(&alpha, Some(&pe));
        let head_leaves: Vec<HeadLeaves> = (0..2)
            .map(|h| HeadLeaves {
                w_q: map[&format!("head{h}.w_q")].clone(),
                w_k: map[&format!("head{h}.w_k")].clone(),
                w_v: map[&format!("head{h}.w_v")].clone(),
                w_feat: map[&format!("head{h}.w_feat")].clone(),
                feat_params: pack_feat_params(
                    &map[&format!("head{h}.theta0")],
                    &map[&format!("head{h}.theta1")],
                ),
                phase: map[&format!("head{h}.phase")].clone(),
            })
            .collect();
        let (alpha_mid, _, _) = attention_stage(
            &x,
            &head_leaves,
            &map["attn.w_out"],
            &map["attn.b_out"],
            (&map["ln_attn.gamma"], &map["ln_attn.beta"]),
            config,
        );
        let angles = pack_ffn_angles(
            &map["ffn.theta"],
            &map["ffn.phi"],
            config.l_qsl,
            config.n_feat_qubits,
        );
        let out = ffn_stage(
            &alpha_mid,
            &map["ffn.w_down"],
            &map["ffn.b_down"],
            &angles,
            &map["ffn.w_up"],
            &map["ffn.b_up"],
            (&map["ln_ffn.gamma"], &map["ln_ffn.beta"]),
            config,
            None,
        );
        out.mul_const(weights).sum()
    }

    #[test]
    fn checkpoint_round_trip() {
        let (arch, state, config) = small_setup(EncoderMode::Qbsa);
        let json = save_checkpoint(&arch, &state, &config);
        let ckpt = load_checkpoint(&json).unwrap();
        assert_eq!(ckpt.arch, arch);
        assert_eq!(ckpt.state, state);
        assert_eq!(ckpt.config, config);
    }

    #[test]
    fn config_validation_catches_bad_shapes() {
        let (_, _, mut config) = small_setup(EncoderMode::Qbsa);
        config.head_dim = 3;
        assert!(config.validate(4).is_err());
        config.head_dim = 2;
        config.tau_attn = 0.0;
        assert!(config.validate(4).is_err());
    }
}
