//! Line-based circuit text format.
//!
//! ```text
//! # comment
//! qubits 2
//! rx(0.5) 0
//! ry 1
//! cnot 0 1
//! ```
//!
//! One gate per line: `name(angle?) q0 [q1]`, lowercase names, angles in
//! radians as decimal literals. `#` starts a comment, blank lines are
//! ignored. Parametric gates written without an angle receive free parameter
//! slots in order of appearance.

use super::{Circuit, CircuitError, GateInstance, GateKind, GateParam};
use std::fmt::Write as _;

fn parse_err(line: usize, msg: impl Into<String>) -> CircuitError {
    CircuitError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Parse the text format. Errors carry 1-based line numbers.
pub fn parse_circuit(text: &str) -> Result<Circuit, CircuitError> {
    let mut n_qubits: Option<usize> = None;
    let mut gates = Vec::new();
    let mut next_slot = 0usize;

    for (lineno, raw) in text.lines().enumerate() {
        let lineno = lineno + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let head = fields.next().expect("non-empty line has a first field");

        if n_qubits.is_none() {
            if head != "qubits" {
                return Err(parse_err(lineno, "expected header line `qubits N`"));
            }
            let n: usize = fields
                .next()
                .ok_or_else(|| parse_err(lineno, "missing qubit count"))?
                .parse()
                .map_err(|_| parse_err(lineno, "qubit count is not a positive integer"))?;
            if n == 0 {
                return Err(parse_err(lineno, "qubit count must be positive"));
            }
            if fields.next().is_some() {
                return Err(parse_err(lineno, "trailing tokens after qubit count"));
            }
            n_qubits = Some(n);
            continue;
        }

        let (name, angle) = match head.find('(') {
            Some(open) => {
                let close = head
                    .rfind(')')
                    .ok_or_else(|| parse_err(lineno, "unterminated angle parenthesis"))?;
                if close != head.len() - 1 || close < open {
                    return Err(parse_err(lineno, "malformed angle parenthesis"));
                }
                let angle_text = &head[open + 1..close];
                let angle: f64 = angle_text.parse().map_err(|_| {
                    parse_err(lineno, format!("cannot parse angle `{angle_text}`"))
                })?;
                if !angle.is_finite() {
                    return Err(parse_err(lineno, "angle must be finite"));
                }
                (&head[..open], Some(angle))
            }
            None => (head, None),
        };

        let kind = GateKind::from_name(name)
            .ok_or_else(|| parse_err(lineno, format!("unknown gate `{name}`")))?;

        let mut qubits = Vec::with_capacity(kind.arity());
        for tok in fields {
            let q: usize = tok
                .parse()
                .map_err(|_| parse_err(lineno, format!("bad qubit operand `{tok}`")))?;
            qubits.push(q);
        }
        if qubits.len() != kind.arity() {
            return Err(parse_err(
                lineno,
                format!(
                    "gate `{}` expects {} operand(s), got {}",
                    kind,
                    kind.arity(),
                    qubits.len()
                ),
            ));
        }
        for (i, &q) in qubits.iter().enumerate() {
            if qubits[..i].contains(&q) {
                return Err(parse_err(lineno, format!("duplicate operand {q}")));
            }
            if q >= n_qubits.unwrap() {
                return Err(parse_err(
                    lineno,
                    format!("qubit {q} out of range for {} qubits", n_qubits.unwrap()),
                ));
            }
        }

        let param = match (kind.parametric(), angle) {
            (true, Some(a)) => GateParam::Fixed(a),
            (true, None) => {
                let slot = next_slot;
                next_slot += 1;
                GateParam::Slot(slot)
            }
            (false, None) => GateParam::None,
            (false, Some(_)) => {
                return Err(parse_err(
                    lineno,
                    format!("gate `{kind}` does not take an angle"),
                ))
            }
        };
        gates.push(GateInstance::new(kind, qubits, param));
    }

    let n = n_qubits.ok_or_else(|| parse_err(1, "missing `qubits N` header"))?;
    Circuit::new(n, gates)
}

/// Canonical serialization; `parse_circuit(serialize_circuit(c))` round-trips
/// any circuit whose slots are numbered in appearance order.
pub fn serialize_circuit(c: &Circuit) -> String {
    let mut out = String::new();
    writeln!(out, "qubits {}", c.n_qubits()).unwrap();
    for g in c.gates() {
        match g.param {
            GateParam::Fixed(a) => write!(out, "{}({})", g.kind, a).unwrap(),
            _ => write!(out, "{}", g.kind).unwrap(),
        }
        for q in &g.qubits {
            write!(out, " {q}").unwrap();
        }
        out.push('\n');
    }
    out
}
