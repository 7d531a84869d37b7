//! Quantum circuit nodes for the gradient engine.
//!
//! A [`QuantumTemplate`] is a fixed gate sequence whose rotation angles are
//! simple expressions over an input vector `u` and a parameter vector `w`
//! (products `w_i * u_j`, squares `u_j^2`, or bare entries). The node's
//! forward value is the vector of per-qubit Z expectations; its backward rule
//! differentiates each angle with the parameter-shift rule and chains through
//! the angle expressions.

use std::f64::consts::FRAC_PI_2;

use super::tape::Value;
use super::tensor::Tensor;
use super::AutodiffError;
use crate::circuit::GateKind;
use crate::sim::StateVector;

/// Angle of one template gate as a function of `(inputs, params)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AngleExpr {
    /// `w[p] * u[i]`
    ParamTimesInput { param: usize, input: usize },
    /// `u[i]^2`
    InputSquared { input: usize },
    /// `w[p]`
    Param { param: usize },
    /// `u[i]`
    Input { input: usize },
    Const(f64),
}

impl AngleExpr {
    fn eval(&self, inputs: &[f64], params: &[f64]) -> f64 {
        match *self {
            AngleExpr::ParamTimesInput { param, input } => params[param] * inputs[input],
            AngleExpr::InputSquared { input } => inputs[input] * inputs[input],
            AngleExpr::Param { param } => params[param],
            AngleExpr::Input { input } => inputs[input],
            AngleExpr::Const(c) => c,
        }
    }

    /// `(d angle / d input[i], d angle / d param[p])` as sparse entries.
    fn partials(&self, inputs: &[f64], params: &[f64]) -> (Option<(usize, f64)>, Option<(usize, f64)>) {
        match *self {
            AngleExpr::ParamTimesInput { param, input } => (
                Some((input, params[param])),
                Some((param, inputs[input])),
            ),
            AngleExpr::InputSquared { input } => (Some((input, 2.0 * inputs[input])), None),
            AngleExpr::Param { param } => (None, Some((param, 1.0))),
            AngleExpr::Input { input } => (Some((input, 1.0)), None),
            AngleExpr::Const(_) => (None, None),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TemplateGate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub angle: Option<AngleExpr>,
}

/// A fixed-structure circuit with expression-valued angles.
#[derive(Debug, Clone)]
pub struct QuantumTemplate {
    n_qubits: usize,
    gates: Vec<TemplateGate>,
    n_inputs: usize,
    n_params: usize,
}

impl QuantumTemplate {
    pub fn new(
        n_qubits: usize,
        gates: Vec<TemplateGate>,
        n_inputs: usize,
        n_params: usize,
    ) -> Result<QuantumTemplate, AutodiffError> {
        for g in &gates {
            if g.angle.is_some() && !g.kind.parametric() {
                return Err(AutodiffError::NonShiftable(g.kind));
            }
            if g.angle.is_none() && g.kind.parametric() {
                return Err(AutodiffError::NonShiftable(g.kind));
            }
        }
        Ok(QuantumTemplate {
            n_qubits,
            gates,
            n_inputs,
            n_params,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    fn angles(&self, inputs: &[f64], params: &[f64]) -> Vec<Option<f64>> {
        self.gates
            .iter()
            .map(|g| g.angle.map(|e| e.eval(inputs, params)))
            .collect()
    }

    /// Simulate with one angle overridden (for the shift rule).
    fn z_expectations_with(&self, angles: &[Option<f64>]) -> Vec<f64> {
        let mut state = StateVector::zero(self.n_qubits);
        for (g, angle) in self.gates.iter().zip(angles) {
            state.apply_gate(g.kind, &g.qubits, *angle);
        }
        state.z_expectations()
    }

    /// Per-qubit Z expectations at concrete input/param values.
    pub fn forward(&self, inputs: &[f64], params: &[f64]) -> Vec<f64> {
        self.z_expectations_with(&self.angles(inputs, params))
    }
}

/// Record a quantum node on the tape: forward is the Z-expectation vector,
/// backward applies the parameter-shift rule per angle and the chain rule
/// through each angle expression.
pub fn quantum_node(template: &QuantumTemplate, inputs: &Value, params: &Value) -> Value {
    let u = inputs.data();
    let w = params.data();
    assert_eq!(
        u.len(),
        template.n_inputs,
        "template expects {} inputs, got {}",
        template.n_inputs,
        u.len()
    );
    assert_eq!(
        w.len(),
        template.n_params,
        "template expects {} params, got {}",
        template.n_params,
        w.len()
    );
    let template = template.clone();
    let base_angles = template.angles(u.data(), w.data());
    let out = Tensor::new(
        vec![template.n_qubits],
        template.z_expectations_with(&base_angles),
    );
    let u_vals = u.data().to_vec();
    let w_vals = w.data().to_vec();
    inputs.binop(params, out, move |g| {
        let mut d_inputs = Tensor::zeros(vec![u_vals.len()]);
        let mut d_params = Tensor::zeros(vec![w_vals.len()]);
        for (gi, gate) in template.gates.iter().enumerate() {
            let Some(expr) = gate.angle else { continue };
            let (d_in, d_par) = expr.partials(&u_vals, &w_vals);
            if d_in.is_none() && d_par.is_none() {
                continue;
            }
            let base = base_angles[gi].expect("parametric gate has an angle");
            let mut shifted = base_angles.clone();
            shifted[gi] = Some(base + FRAC_PI_2);
            let plus = template.z_expectations_with(&shifted);
            shifted[gi] = Some(base - FRAC_PI_2);
            let minus = template.z_expectations_with(&shifted);
            // dL/d angle = sum_q g_q * (plus_q - minus_q) / 2
            let dl_dangle: f64 = g
                .data()
                .iter()
                .zip(plus.iter().zip(&minus))
                .map(|(&gq, (&p, &m))| gq * 0.5 * (p - m))
                .sum();
            if let Some((i, coeff)) = d_in {
                d_inputs.data_mut()[i] += dl_dangle * coeff;
            }
            if let Some((p, coeff)) = d_par {
                d_params.data_mut()[p] += dl_dangle * coeff;
            }
        }
        (d_inputs, d_params)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use approx::assert_abs_diff_eq;

    /// Data-encoding feature map on n qubits (Rz(u^2), Rx(w0*u), chain,
    /// Ry(w1*u), chain). Mirrors the encoder's construction for tests.
    fn feature_template(n: usize) -> QuantumTemplate {
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
        QuantumTemplate::new(n, gates, n, 2 * n).unwrap()
    }

    #[test]
    fn zero_input_gives_all_ones_and_no_param_grad() {
        let tape = Tape::new();
        let t = feature_template(3);
        let u = tape.leaf(Tensor::zeros(vec![3]));
        let w = tape.leaf(Tensor::new(vec![6], vec![0.3; 6]));
        let phi = quantum_node(&t, &u, &w);
        for &z in phi.data().data() {
            assert_abs_diff_eq!(z, 1.0, epsilon = 1e-12);
        }
        phi.sum().backward().unwrap();
        for &gw in w.grad().data() {
            assert_abs_diff_eq!(gw, 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_qubit_matches_matrix_oracle() {
        // u = pi, w0 = 1, w1 = 0: state is Rx(pi) Rz(pi^2) |0>, <Z> = -1.
        let tape = Tape::new();
        let t = feature_template(1);
        let u = tape.leaf(Tensor::new(vec![1], vec![std::f64::consts::PI]));
        let w = tape.leaf(Tensor::new(vec![2], vec![1.0, 0.0]));
        let phi = quantum_node(&t, &u, &w);
        assert_abs_diff_eq!(phi.data().data()[0], -1.0, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(77);
        let t = feature_template(2);
        let u0: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let w0: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.5..1.5)).collect();
        let weights: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.0..1.0)).collect();

        let loss = |uv: &[f64], wv: &[f64]| -> f64 {
            let tape = Tape::new();
            let u = tape.leaf(Tensor::new(vec![2], uv.to_vec()));
            let w = tape.leaf(Tensor::new(vec![4], wv.to_vec()));
            let phi = quantum_node(&t, &u, &w);
            phi.mul_const(&Tensor::new(vec![2], weights.clone()))
                .sum()
                .data()
                .item()
        };

        let tape = Tape::new();
        let u = tape.leaf(Tensor::new(vec![2], u0.clone()));
        let w = tape.leaf(Tensor::new(vec![4], w0.clone()));
        let phi = quantum_node(&t, &u, &w);
        let y = phi.mul_const(&Tensor::new(vec![2], weights.clone())).sum();
        y.backward().unwrap();

        let h = 1e-5;
        for k in 0..2 {
            let mut up = u0.clone();
            up[k] += h;
            let mut um = u0.clone();
            um[k] -= h;
            let fd = (loss(&up, &w0) - loss(&um, &w0)) / (2.0 * h);
            let an = u.grad().data()[k];
            assert!(
                (an - fd).abs() / an.abs().max(fd.abs()).max(1.0) < 1e-4,
                "input {k}: {an} vs {fd}"
            );
        }
        for k in 0..4 {
            let mut wp = w0.clone();
            wp[k] += h;
            let mut wm = w0.clone();
            wm[k] -= h;
            let fd = (loss(&u0, &wp) - loss(&u0, &wm)) / (2.0 * h);
            let an = w.grad().data()[k];
            assert!(
                (an - fd).abs() / an.abs().max(fd.abs()).max(1.0) < 1e-4,
                "param {k}: {an} vs {fd}"
            );
        }
    }

    #[test]
    fn template_rejects_angle_on_clifford() {
        let bad = QuantumTemplate::new(
            1,
            vec![TemplateGate {
                kind: GateKind::H,
                qubits: vec![0],
                angle: Some(AngleExpr::Const(0.5)),
            }],
            0,
            0,
        );
        assert!(matches!(bad, Err(AutodiffError::NonShiftable(_))));
    }
}
