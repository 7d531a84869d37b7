//! Gate-level circuit representation, hardware-aware operation pools, and
//! structural metrics.
//!
//! A [`Circuit`] is an ordered list of [`GateInstance`]s over a fixed qubit
//! register. Parametric gates reference either a slot in an external angle
//! vector or a fixed angle in radians. Pools enumerate the concrete
//! (gate kind, operand) choices admissible on a [`DeviceTopology`].

mod text;

pub use text::{parse_circuit, serialize_circuit};

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors produced by circuit construction and manipulation.
#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("qubit index {qubit} out of range for {n_qubits} qubits")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("duplicate qubit operand {0}")]
    DuplicateOperand(usize),
    #[error("gate {kind} expects {expected} qubit operands, got {got}")]
    ArityMismatch {
        kind: GateKind,
        expected: usize,
        got: usize,
    },
    #[error("gate {0} is parametric and needs exactly one angle source")]
    MissingAngle(GateKind),
    #[error("gate {0} is non-parametric but carries an angle source")]
    UnexpectedAngle(GateKind),
    #[error("parameter slot {slot} is never referenced (circuit declares {n_params} slots)")]
    UnreferencedSlot { slot: usize, n_params: usize },
    #[error("operation pool is empty: no admissible (kind, operand) entries")]
    EmptyPool,
    #[error("gate kind {kind} is not native to the topology")]
    NotNative { kind: GateKind },
    #[error("selection index {index} out of range for pool of size {pool_size}")]
    SelectionOutOfRange { index: usize, pool_size: usize },
    #[error("parameter vector has length {got}, circuit expects {expected}")]
    ThetaLength { expected: usize, got: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// The gate vocabulary. Arity, parametricity and inverses are fixed per kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GateKind {
    I,
    X,
    H,
    S,
    Sdg,
    Rx,
    Ry,
    Rz,
    Cnot,
    Cz,
    Rzz,
}

impl GateKind {
    pub const ALL: [GateKind; 11] = [
        GateKind::I,
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

    /// Number of qubit operands.
    pub fn arity(self) -> usize {
        match self {
            GateKind::Cnot | GateKind::Cz | GateKind::Rzz => 2,
            _ => 1,
        }
    }

    /// True for gates that take one rotation angle.
    pub fn parametric(self) -> bool {
        matches!(
            self,
            GateKind::Rx | GateKind::Ry | GateKind::Rz | GateKind::Rzz
        )
    }

    pub fn param_count(self) -> usize {
        usize::from(self.parametric())
    }

    /// True for two-qubit gates whose action is independent of operand order.
    pub fn symmetric(self) -> bool {
        matches!(self, GateKind::Cz | GateKind::Rzz)
    }

    /// Lowercase text-format name.
    pub fn name(self) -> &'static str {
        match self {
            GateKind::I => "i",
            GateKind::X => "x",
            GateKind::H => "h",
            GateKind::S => "s",
            GateKind::Sdg => "sdg",
            GateKind::Rx => "rx",
            GateKind::Ry => "ry",
            GateKind::Rz => "rz",
            GateKind::Cnot => "cnot",
            GateKind::Cz => "cz",
            GateKind::Rzz => "rzz",
        }
    }

    pub fn from_name(name: &str) -> Option<GateKind> {
        GateKind::ALL.iter().copied().find(|k| k.name() == name)
    }

    /// The inverse kind. Rotations invert by negating the angle, which is
    /// handled separately.
    pub fn inverse_kind(self) -> GateKind {
        match self {
            GateKind::S => GateKind::Sdg,
            GateKind::Sdg => GateKind::S,
            other => other,
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Angle source for a gate instance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GateParam {
    /// Non-parametric gate.
    None,
    /// Index into an external parameter vector.
    Slot(usize),
    /// Fixed angle in radians.
    Fixed(f64),
}

/// One placed gate: a kind bound to concrete qubit operands and an angle source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateInstance {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param: GateParam,
}

impl GateInstance {
    pub fn new(kind: GateKind, qubits: Vec<usize>, param: GateParam) -> Self {
        GateInstance {
            kind,
            qubits,
            param,
        }
    }

    /// Resolve this gate's angle against a parameter vector.
    pub fn angle(&self, theta: &[f64]) -> Option<f64> {
        match self.param {
            GateParam::None => None,
            GateParam::Slot(s) => Some(theta[s]),
            GateParam::Fixed(a) => Some(a),
        }
    }
}

/// An ordered gate list over `n_qubits` qubits with `n_params` free angle slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<GateInstance>,
    n_params: usize,
}

impl Circuit {
    /// Validates operands, angle sources, and slot coverage. The number of
    /// free parameters is the number of distinct slots, which must be exactly
    /// `0..=max_slot` with every slot referenced at least once.
    pub fn new(n_qubits: usize, gates: Vec<GateInstance>) -> Result<Circuit, CircuitError> {
        assert!(n_qubits > 0, "circuit needs at least one qubit");
        let mut slots = BTreeSet::new();
        for g in &gates {
            if g.qubits.len() != g.kind.arity() {
                return Err(CircuitError::ArityMismatch {
                    kind: g.kind,
                    expected: g.kind.arity(),
                    got: g.qubits.len(),
                });
            }
            for (i, &q) in g.qubits.iter().enumerate() {
                if q >= n_qubits {
                    return Err(CircuitError::QubitOutOfRange { qubit: q, n_qubits });
                }
                if g.qubits[..i].contains(&q) {
                    return Err(CircuitError::DuplicateOperand(q));
                }
            }
            match (g.kind.parametric(), g.param) {
                (true, GateParam::None) => return Err(CircuitError::MissingAngle(g.kind)),
                (false, GateParam::Slot(_)) | (false, GateParam::Fixed(_)) => {
                    return Err(CircuitError::UnexpectedAngle(g.kind))
                }
                _ => {}
            }
            if let GateParam::Slot(s) = g.param {
                slots.insert(s);
            }
        }
        let n_params = slots.iter().next_back().map_or(0, |&m| m + 1);
        for s in 0..n_params {
            if !slots.contains(&s) {
                return Err(CircuitError::UnreferencedSlot { slot: s, n_params });
            }
        }
        Ok(Circuit {
            n_qubits,
            gates,
            n_params,
        })
    }

    /// An empty circuit on `n_qubits`.
    pub fn empty(n_qubits: usize) -> Circuit {
        Circuit::new(n_qubits, Vec::new()).expect("empty circuit is valid")
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[GateInstance] {
        &self.gates
    }

    pub fn gate_count(&self) -> usize {
        self.gates.len()
    }

    /// Greedy qubit-overlap layering: a gate enters the earliest layer after
    /// every gate that shares one of its qubits.
    pub fn depth(&self) -> usize {
        let mut frontier = vec![0usize; self.n_qubits];
        let mut depth = 0;
        for g in &self.gates {
            let layer = g.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
            for &q in &g.qubits {
                frontier[q] = layer;
            }
            depth = depth.max(layer);
        }
        depth
    }

    /// Replace every slot reference by its value from `theta`, producing a
    /// circuit with fixed angles only.
    pub fn bind(&self, theta: &[f64]) -> Result<Circuit, CircuitError> {
        if theta.len() != self.n_params {
            return Err(CircuitError::ThetaLength {
                expected: self.n_params,
                got: theta.len(),
            });
        }
        let gates = self
            .gates
            .iter()
            .map(|g| {
                let param = match g.param {
                    GateParam::Slot(s) => GateParam::Fixed(theta[s]),
                    p => p,
                };
                GateInstance::new(g.kind, g.qubits.clone(), param)
            })
            .collect();
        Circuit::new(self.n_qubits, gates)
    }
}

/// `(gate_count, depth)` of a circuit.
pub fn circuit_metrics(c: &Circuit) -> (usize, usize) {
    (c.gate_count(), c.depth())
}

/// Reverse the gate list and invert each gate. Rotations negate their angle,
/// `S`/`Sdg` swap, self-inverse kinds pass through. The result carries fixed
/// angles only; `theta` supplies values for any free slots of the input.
pub fn inverse_circuit(c: &Circuit, theta: &[f64]) -> Result<Circuit, CircuitError> {
    if theta.len() != c.n_params() {
        return Err(CircuitError::ThetaLength {
            expected: c.n_params(),
            got: theta.len(),
        });
    }
    let gates = c
        .gates()
        .iter()
        .rev()
        .map(|g| {
            let param = match g.angle(theta) {
                Some(a) => GateParam::Fixed(-a),
                None => GateParam::None,
            };
            GateInstance::new(g.kind.inverse_kind(), g.qubits.clone(), param)
        })
        .collect();
    Circuit::new(c.n_qubits(), gates)
}

/// Qubit connectivity and native gate sets of a target device.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceTopology {
    pub n_qubits: usize,
    /// Unordered coupled pairs, stored with the smaller index first.
    pub coupling: BTreeSet<(usize, usize)>,
    pub native_1q: BTreeSet<GateKind>,
    pub native_2q: BTreeSet<GateKind>,
}

impl DeviceTopology {
    pub fn new(
        n_qubits: usize,
        coupling: impl IntoIterator<Item = (usize, usize)>,
        native_1q: impl IntoIterator<Item = GateKind>,
        native_2q: impl IntoIterator<Item = GateKind>,
    ) -> Result<DeviceTopology, CircuitError> {
        let mut pairs = BTreeSet::new();
        for (a, b) in coupling {
            if a >= n_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: a, n_qubits });
            }
            if b >= n_qubits {
                return Err(CircuitError::QubitOutOfRange { qubit: b, n_qubits });
            }
            if a == b {
                return Err(CircuitError::DuplicateOperand(a));
            }
            pairs.insert((a.min(b), a.max(b)));
        }
        Ok(DeviceTopology {
            n_qubits,
            coupling: pairs,
            native_1q: native_1q.into_iter().collect(),
            native_2q: native_2q.into_iter().collect(),
        })
    }

    /// Linear nearest-neighbour chain with all vocabulary kinds native.
    pub fn line(n_qubits: usize) -> DeviceTopology {
        DeviceTopology::new(
            n_qubits,
            (0..n_qubits.saturating_sub(1)).map(|i| (i, i + 1)),
            GateKind::ALL.iter().copied().filter(|k| k.arity() == 1),
            GateKind::ALL.iter().copied().filter(|k| k.arity() == 2),
        )
        .expect("line topology is valid")
    }
}

/// One admissible operation choice: a kind bound to concrete operands.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
}

impl fmt::Display for PoolEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind)?;
        for q in &self.qubits {
            write!(f, " {q}")?;
        }
        Ok(())
    }
}

/// Ordered set of operation choices; its length is the logit-matrix width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperationPool {
    entries: Vec<PoolEntry>,
    n_qubits: usize,
}

impl OperationPool {
    pub fn entries(&self) -> &[PoolEntry] {
        &self.entries
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }
}

/// Enumerate the pool for `kinds` on `topology`: one entry per
/// (1q kind, qubit) and per (2q kind, coupled pair). Directed two-qubit kinds
/// (`cnot`) produce both operand orders; symmetric kinds one entry per pair.
/// Ordering is kind order, then qubit indices ascending.
pub fn build_pool(
    topology: &DeviceTopology,
    kinds: &BTreeSet<GateKind>,
) -> Result<OperationPool, CircuitError> {
    for &k in kinds {
        let native = if k.arity() == 1 {
            topology.native_1q.contains(&k)
        } else {
            topology.native_2q.contains(&k)
        };
        if !native {
            return Err(CircuitError::NotNative { kind: k });
        }
    }
    let mut entries = Vec::new();
    for &kind in kinds {
        if kind.arity() == 1 {
            for q in 0..topology.n_qubits {
                entries.push(PoolEntry {
                    kind,
                    qubits: vec![q],
                });
            }
        } else {
            for &(a, b) in &topology.coupling {
                entries.push(PoolEntry {
                    kind,
                    qubits: vec![a, b],
                });
                if !kind.symmetric() {
                    entries.push(PoolEntry {
                        kind,
                        qubits: vec![b, a],
                    });
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(CircuitError::EmptyPool);
    }
    Ok(OperationPool {
        entries,
        n_qubits: topology.n_qubits,
    })
}

/// Turn a depth-ordered selection of pool indices into a circuit. Parametric
/// gates receive fresh consecutive parameter slots in selection order.
pub fn realize_circuit(
    pool: &OperationPool,
    selection: &[usize],
    n_qubits: usize,
) -> Result<Circuit, CircuitError> {
    let mut gates = Vec::with_capacity(selection.len());
    let mut next_slot = 0;
    for &idx in selection {
        let entry = pool
            .entries
            .get(idx)
            .ok_or(CircuitError::SelectionOutOfRange {
                index: idx,
                pool_size: pool.size(),
            })?;
        let param = if entry.kind.parametric() {
            let slot = next_slot;
            next_slot += 1;
            GateParam::Slot(slot)
        } else {
            GateParam::None
        };
        gates.push(GateInstance::new(entry.kind, entry.qubits.clone(), param));
    }
    Circuit::new(n_qubits, gates)
}
