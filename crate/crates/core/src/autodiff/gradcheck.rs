//! Finite-difference verification of recorded gradients.

use super::tape::{Tape, Value};
use super::tensor::Tensor;

/// Central-difference step.
pub const FD_STEP: f64 = 1e-4;

/// Outcome of one gradient check.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_deviation: f64,
    /// `(parameter name, flat element index)` of the worst deviation.
    pub worst: Option<(String, usize)>,
    pub tolerance: f64,
    pub pass: bool,
}

impl std::fmt::Display for GradCheckReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: max relative deviation {:.3e} (tolerance {:.1e})",
            if self.pass { "pass" } else { "FAIL" },
            self.max_rel_deviation,
            self.tolerance
        )?;
        if let Some((name, idx)) = &self.worst {
            write!(f, " at {name}[{idx}]")?;
        }
        Ok(())
    }
}

/// Compare backward gradients of a scalar function against central finite
/// differences over every element of every named parameter.
///
/// `f` must rebuild the same computation for any parameter values; it is
/// called once for the recorded pass and twice per parameter element for the
/// differences.
pub fn check_gradients<F>(f: F, params: &[(&str, Tensor)], tolerance: f64) -> GradCheckReport
where
    F: Fn(&Tape, &[Value]) -> Value,
{
    let eval = |tensors: &[Tensor]| -> f64 {
        let tape = Tape::new();
        let leaves: Vec<Value> = tensors.iter().map(|t| tape.leaf(t.clone())).collect();
        f(&tape, &leaves).data().item()
    };

    let tape = Tape::new();
    let leaves: Vec<Value> = params.iter().map(|(_, t)| tape.leaf(t.clone())).collect();
    let out = f(&tape, &leaves);
    out.backward().expect("gradient check output must be scalar");
    let analytic: Vec<Tensor> = leaves.iter().map(|v| v.grad()).collect();

    let mut tensors: Vec<Tensor> = params.iter().map(|(_, t)| t.clone()).collect();
    let mut max_rel = 0.0f64;
    let mut worst = None;
    for (pi, (name, _)) in params.iter().enumerate() {
        for e in 0..tensors[pi].len() {
            let orig = tensors[pi].data()[e];
            tensors[pi].data_mut()[e] = orig + FD_STEP;
            let plus = eval(&tensors);
            tensors[pi].data_mut()[e] = orig - FD_STEP;
            let minus = eval(&tensors);
            tensors[pi].data_mut()[e] = orig;
            let fd = (plus - minus) / (2.0 * FD_STEP);
            let an = analytic[pi].data()[e];
            let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(1.0);
            if rel > max_rel {
                max_rel = rel;
                worst = Some((name.to_string(), e));
            }
        }
    }
    GradCheckReport {
        max_rel_deviation: max_rel,
        worst,
        tolerance,
        pass: max_rel <= tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn linear_model_is_machine_precise() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let w = Tensor::randn(vec![3, 2], 1.0, &mut rng);
        let x = Tensor::randn(vec![2, 3], 1.0, &mut rng);
        let report = check_gradients(
            |_tape, leaves| leaves[1].matmul(&leaves[0]).sum(),
            &[("w", w), ("x", x)],
            1e-8,
        );
        assert!(report.pass, "{report}");
    }

    #[test]
    fn corrupted_backward_rule_fails() {
        // stop_gradient makes the recorded gradient disagree with finite
        // differences on purpose.
        let report = check_gradients(
            |_tape, leaves| leaves[0].square().add(&leaves[0].stop_gradient()).sum(),
            &[("x", Tensor::new(vec![2], vec![0.7, -0.2]))],
            1e-3,
        );
        assert!(!report.pass, "{report}");
    }

    #[test]
    fn matmul_gradient_within_tolerance() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let a = Tensor::randn(vec![3, 4], 1.0, &mut rng);
        let b = Tensor::randn(vec![4, 2], 1.0, &mut rng);
        let weights = Tensor::randn(vec![3, 2], 1.0, &mut rng);
        let report = check_gradients(
            |_t, l| l[0].matmul(&l[1]).mul_const(&weights).sum(),
            &[("a", a), ("b", b)],
            1e-6,
        );
        assert!(report.pass, "{report}");
    }

    #[test]
    fn layer_norm_gradient_matches_fd() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x = Tensor::randn(vec![3, 5], 1.0, &mut rng);
        let gamma = Tensor::randn(vec![5], 0.5, &mut rng);
        let beta = Tensor::randn(vec![5], 0.5, &mut rng);
        let weights = Tensor::randn(vec![3, 5], 1.0, &mut rng);
        let report = check_gradients(
            |_t, l| {
                l[0].layer_norm(&l[1], &l[2], 1e-5)
                    .mul_const(&weights)
                    .sum()
            },
            &[("x", x), ("gamma", gamma), ("beta", beta)],
            1e-5,
        );
        assert!(report.pass, "{report}");
    }
}
