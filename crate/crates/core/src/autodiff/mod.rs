//! Reverse-mode gradient engine for the encoder's computation graph.
//!
//! Classical primitives record backward rules on a [`Tape`]; quantum circuit
//! evaluations enter the graph through [`quantum_node`], which differentiates
//! gate angles with the parameter-shift rule. [`check_gradients`] verifies
//! any recorded scalar computation against central finite differences.

mod gradcheck;
mod quantum;
mod tape;
mod tensor;

pub use gradcheck::{check_gradients, GradCheckReport, FD_STEP};
pub use quantum::{quantum_node, AngleExpr, QuantumTemplate, TemplateGate};
pub use tape::{concat_cols, stack_rows, Tape, Value};
pub use tensor::Tensor;

use thiserror::Error;

use crate::circuit::GateKind;

#[derive(Debug, Error)]
pub enum AutodiffError {
    #[error("backward already ran on this tape")]
    BackwardConsumed,
    #[error("backward requires a scalar output, got shape {0:?}")]
    NonScalarOutput(Vec<usize>),
    #[error("gate kind {0} cannot carry a shift-differentiable angle")]
    NonShiftable(GateKind),
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Every primitive passes the finite-difference check on randomized
    /// shapes at 1e-5.
    #[test]
    fn primitives_pass_gradcheck() {
        let mut rng = ChaCha12Rng::seed_from_u64(100);
        let x23 = Tensor::randn(vec![2, 3], 1.0, &mut rng);
        let y23 = Tensor::randn(vec![2, 3], 1.0, &mut rng);
        let x34 = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let b3 = Tensor::randn(vec![3], 1.0, &mut rng);
        let w23 = Tensor::randn(vec![2, 3], 1.0, &mut rng);
        let w24 = Tensor::randn(vec![2, 4], 1.0, &mut rng);
        let w26 = Tensor::randn(vec![2, 6], 1.0, &mut rng);
        let p3 = Tensor::randn(vec![2, 2, 3], 1.0, &mut rng);
        let q3 = Tensor::randn(vec![2, 3, 2], 1.0, &mut rng);
        let w222 = Tensor::randn(vec![2, 2, 2], 1.0, &mut rng);
        let pos = x23.map(|v| v.abs() + 0.5);
        let mask = Tensor::dropout_mask(vec![2, 3], 0.4, &mut rng);

        let cases: Vec<(&str, Box<dyn Fn(&Tape, &[Value]) -> Value>, Vec<(&str, Tensor)>)> = vec![
            (
                "add",
                Box::new(move |_t, l| l[0].add(&l[1]).square().sum()),
                vec![("a", x23.clone()), ("b", y23.clone())],
            ),
            (
                "sub_mul",
                Box::new(move |_t, l| l[0].sub(&l[1]).mul(&l[0]).sum()),
                vec![("a", x23.clone()), ("b", y23.clone())],
            ),
            (
                "matmul",
                Box::new({
                    let w24 = w24.clone();
                    move |_t, l| l[0].matmul(&l[1]).mul_const(&w24).sum()
                }),
                vec![("a", x23.clone()), ("b", x34.clone())],
            ),
            (
                "bmm",
                Box::new({
                    let w222 = w222.clone();
                    move |_t, l| l[0].bmm(&l[1]).mul_const(&w222).sum()
                }),
                vec![("p", p3.clone()), ("q", q3.clone())],
            ),
            (
                "transpose_scale",
                Box::new(move |_t, l| l[0].transpose().scale(1.7).square().sum()),
                vec![("a", x23.clone())],
            ),
            (
                "softmax_rows",
                Box::new({
                    let w23 = w23.clone();
                    move |_t, l| l[0].softmax_rows().mul_const(&w23).sum()
                }),
                vec![("a", x23.clone())],
            ),
            (
                "layer_norm",
                Box::new({
                    let w23 = w23.clone();
                    move |_t, l| {
                        l[0].layer_norm(&l[1], &l[2], 1e-5).mul_const(&w23).sum()
                    }
                }),
                vec![
                    ("x", x23.clone()),
                    ("gamma", b3.clone()),
                    ("beta", Tensor::randn(vec![3], 1.0, &mut rng)),
                ],
            ),
            (
                "concat_slice",
                Box::new({
                    let w26 = w26.clone();
                    move |_t, l| {
                        let c = concat_cols(&[l[0].clone(), l[1].clone()]);
                        c.slice_cols(1, 5)
                            .square()
                            .sum()
                            .add(&c.mul_const(&w26).sum())
                    }
                }),
                vec![("a", x23.clone()), ("b", y23.clone())],
            ),
            (
                "sin_cos_square",
                Box::new(move |_t, l| l[0].sin().add(&l[0].cos()).add(&l[0].square()).sum()),
                vec![("a", x23.clone())],
            ),
            (
                "sqrt_log",
                Box::new(move |_t, l| l[0].sqrt().add(&l[0].log()).sum()),
                vec![("a", pos.clone())],
            ),
            (
                "dropout_mask",
                Box::new({
                    let mask = mask.clone();
                    move |_t, l| l[0].mul_const(&mask).square().sum()
                }),
                vec![("a", x23.clone())],
            ),
            (
                "row_bias_gather",
                Box::new(move |_t, l| {
                    l[0].add_row_bias(&l[1]).gather_per_row(&[2, 0]).square().sum()
                }),
                vec![("a", x23.clone()), ("b", b3.clone())],
            ),
            (
                "sum_rows_sqrt",
                Box::new(move |_t, l| l[0].square().sum_rows().sqrt().sum()),
                vec![("a", x23.clone())],
            ),
            (
                "max_abs",
                Box::new(move |_t, l| l[0].max_abs()),
                vec![("a", x23.clone())],
            ),
            (
                "scale_by",
                Box::new(move |_t, l| {
                    let s = l[1].sum();
                    l[0].scale_by(&s).square().sum()
                }),
                vec![("a", x23.clone()), ("s", Tensor::scalar(0.8))],
            ),
            (
                "stack_rows",
                Box::new(move |_t, l| {
                    stack_rows(&[l[0].row(0), l[0].row(1)]).square().sum()
                }),
                vec![("a", x23.clone())],
            ),
        ];

        for (name, f, params) in cases {
            let report = check_gradients(|t, l| f(t, l), &params, 1e-5);
            assert!(report.pass, "{name}: {report}");
        }
    }
}
