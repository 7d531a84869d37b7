//! Tape-based reverse-mode differentiation.
//!
//! A [`Tape`] records one forward pass as a topologically ordered node list;
//! [`Value::backward`] walks it once in reverse, accumulating gradients into
//! each node. Backward rules capture the tensors they need by value, so the
//! tape itself stays borrow-free during the sweep.

use std::cell::RefCell;
use std::rc::Rc;

use super::tensor::Tensor;
use super::AutodiffError;

type BackwardFn = Box<dyn Fn(&Tensor) -> Vec<Tensor>>;

struct Node {
    data: Tensor,
    grad: Tensor,
    parents: Vec<usize>,
    backward: Option<BackwardFn>,
}

#[derive(Default)]
struct TapeInner {
    nodes: Vec<Node>,
    backward_done: bool,
}

/// Recording context for one forward pass.
#[derive(Clone, Default)]
pub struct Tape {
    inner: Rc<RefCell<TapeInner>>,
}

impl Tape {
    pub fn new() -> Tape {
        Tape::default()
    }

    pub fn len(&self) -> usize {
        self.inner.borrow().nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// A differentiable leaf holding `data`.
    pub fn leaf(&self, data: Tensor) -> Value {
        self.push(data, Vec::new(), None)
    }

    fn push(&self, data: Tensor, parents: Vec<usize>, backward: Option<BackwardFn>) -> Value {
        let mut inner = self.inner.borrow_mut();
        let grad = Tensor::zeros(data.shape().to_vec());
        inner.nodes.push(Node {
            data,
            grad,
            parents,
            backward,
        });
        Value {
            tape: self.clone(),
            idx: inner.nodes.len() - 1,
        }
    }
}

/// Handle to one tape node.
#[derive(Clone)]
pub struct Value {
    tape: Tape,
    idx: usize,
}

impl Value {
    pub fn data(&self) -> Tensor {
        self.tape.inner.borrow().nodes[self.idx].data.clone()
    }

    pub fn shape(&self) -> Vec<usize> {
        self.tape.inner.borrow().nodes[self.idx].data.shape().to_vec()
    }

    /// Accumulated gradient (zeros before backward has run).
    pub fn grad(&self) -> Tensor {
        self.tape.inner.borrow().nodes[self.idx].grad.clone()
    }

    pub fn tape(&self) -> &Tape {
        &self.tape
    }

    fn unop(
        &self,
        data: Tensor,
        backward: impl Fn(&Tensor) -> Tensor + 'static,
    ) -> Value {
        self.tape.push(
            data,
            vec![self.idx],
            Some(Box::new(move |g| vec![backward(g)])),
        )
    }

    pub(crate) fn binop(
        &self,
        other: &Value,
        data: Tensor,
        backward: impl Fn(&Tensor) -> (Tensor, Tensor) + 'static,
    ) -> Value {
        assert!(
            Rc::ptr_eq(&self.tape.inner, &other.tape.inner),
            "values live on different tapes"
        );
        self.tape.push(
            data,
            vec![self.idx, other.idx],
            Some(Box::new(move |g| {
                let (a, b) = backward(g);
                vec![a, b]
            })),
        )
    }

    /// Reverse sweep from this scalar node. Each node's rule runs exactly
    /// once; running backward twice on one tape is an error.
    pub fn backward(&self) -> Result<(), AutodiffError> {
        let mut inner = self.tape.inner.borrow_mut();
        if inner.backward_done {
            return Err(AutodiffError::BackwardConsumed);
        }
        inner.backward_done = true;
        let out_shape = inner.nodes[self.idx].data.shape().to_vec();
        if inner.nodes[self.idx].data.len() != 1 {
            return Err(AutodiffError::NonScalarOutput(out_shape));
        }
        inner.nodes[self.idx].grad = Tensor::scalar(1.0);
        for i in (0..=self.idx).rev() {
            let Some(rule) = inner.nodes[i].backward.take() else {
                continue;
            };
            let grad = inner.nodes[i].grad.clone();
            let parents = inner.nodes[i].parents.clone();
            let contribs = rule(&grad);
            debug_assert_eq!(parents.len(), contribs.len());
            for (pid, contrib) in parents.into_iter().zip(contribs) {
                inner.nodes[pid].grad.add_assign(&contrib);
            }
        }
        Ok(())
    }

    // ---- elementwise ----

    pub fn add(&self, other: &Value) -> Value {
        let data = self.data().zip(&other.data(), |a, b| a + b);
        self.binop(other, data, |g| (g.clone(), g.clone()))
    }

    pub fn sub(&self, other: &Value) -> Value {
        let data = self.data().zip(&other.data(), |a, b| a - b);
        self.binop(other, data, |g| (g.clone(), g.map(|x| -x)))
    }

    pub fn mul(&self, other: &Value) -> Value {
        let a = self.data();
        let b = other.data();
        let data = a.zip(&b, |x, y| x * y);
        self.binop(other, data, move |g| (g.zip(&b, |u, v| u * v), g.zip(&a, |u, v| u * v)))
    }

    pub fn neg(&self) -> Value {
        self.unop(self.data().map(|x| -x), |g| g.map(|x| -x))
    }

    /// Multiply by a compile-time constant.
    pub fn scale(&self, k: f64) -> Value {
        self.unop(self.data().map(|x| k * x), move |g| g.map(|x| k * x))
    }

    /// Elementwise multiply by a constant tensor (no gradient to the
    /// constant). Dropout is this with a sampled mask.
    pub fn mul_const(&self, mask: &Tensor) -> Value {
        let data = self.data().zip(mask, |x, m| x * m);
        let mask = mask.clone();
        self.unop(data, move |g| g.zip(&mask, |u, m| u * m))
    }

    /// Elementwise add of a constant tensor.
    pub fn add_const(&self, c: &Tensor) -> Value {
        let data = self.data().zip(c, |x, y| x + y);
        self.unop(data, |g| g.clone())
    }

    /// Forward identity with zero backward.
    pub fn stop_gradient(&self) -> Value {
        let shape = self.shape();
        self.unop(self.data(), move |_| Tensor::zeros(shape.clone()))
    }

    /// Multiply every entry by a scalar value; gradients flow to both sides.
    pub fn scale_by(&self, scalar: &Value) -> Value {
        assert_eq!(scalar.data().len(), 1, "scale_by expects a scalar value");
        let a = self.data();
        let s = scalar.data().item();
        let data = a.map(|x| s * x);
        self.binop(scalar, data, move |g| {
            let da = g.map(|x| s * x);
            let ds = g
                .data()
                .iter()
                .zip(a.data())
                .map(|(&u, &v)| u * v)
                .sum::<f64>();
            (da, Tensor::scalar(ds))
        })
    }

    pub fn sin(&self) -> Value {
        let a = self.data();
        self.unop(a.map(f64::sin), move |g| g.zip(&a, |u, x| u * x.cos()))
    }

    pub fn cos(&self) -> Value {
        let a = self.data();
        self.unop(a.map(f64::cos), move |g| g.zip(&a, |u, x| -u * x.sin()))
    }

    pub fn square(&self) -> Value {
        let a = self.data();
        self.unop(a.map(|x| x * x), move |g| g.zip(&a, |u, x| 2.0 * u * x))
    }

    pub fn sqrt(&self) -> Value {
        let y = self.data().map(f64::sqrt);
        let y_back = y.clone();
        self.unop(y, move |g| g.zip(&y_back, |u, s| 0.5 * u / s.max(1e-300)))
    }

    pub fn log(&self) -> Value {
        let a = self.data();
        self.unop(a.map(f64::ln), move |g| g.zip(&a, |u, x| u / x))
    }

    // ---- shape ----

    pub fn reshape(&self, shape: Vec<usize>) -> Value {
        let data = self.data();
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "reshape to {shape:?} from {:?}",
            data.shape()
        );
        let old = data.shape().to_vec();
        let out = Tensor::new(shape, data.data().to_vec());
        self.unop(out, move |g| {
            Tensor::new(old.clone(), g.data().to_vec())
        })
    }

    /// Rank-2 transpose.
    pub fn transpose(&self) -> Value {
        let a = self.data();
        assert_eq!(a.rank(), 2, "transpose expects rank 2");
        let (n, m) = (a.shape()[0], a.shape()[1]);
        let mut out = Tensor::zeros(vec![m, n]);
        for r in 0..n {
            for c in 0..m {
                out.data_mut()[c * n + r] = a.at2(r, c);
            }
        }
        self.unop(out, move |g| {
            let mut gt = Tensor::zeros(vec![n, m]);
            for r in 0..m {
                for c in 0..n {
                    gt.data_mut()[c * m + r] = g.at2(r, c);
                }
            }
            gt
        })
    }

    // ---- linear algebra ----

    /// Rank-2 matrix product `[n,k] x [k,m] -> [n,m]`.
    pub fn matmul(&self, other: &Value) -> Value {
        let a = self.data();
        let b = other.data();
        assert_eq!(a.rank(), 2, "matmul lhs rank");
        assert_eq!(b.rank(), 2, "matmul rhs rank");
        let (n, k) = (a.shape()[0], a.shape()[1]);
        let (k2, m) = (b.shape()[0], b.shape()[1]);
        assert_eq!(k, k2, "matmul inner dims {k} vs {k2}");
        let data = matmul_raw(&a, &b);
        self.binop(other, data, move |g| {
            // dA = g . B^T, dB = A^T . g
            let mut da = Tensor::zeros(vec![n, k]);
            for r in 0..n {
                for c in 0..k {
                    let mut acc = 0.0;
                    for j in 0..m {
                        acc += g.at2(r, j) * b.at2(c, j);
                    }
                    da.data_mut()[r * k + c] = acc;
                }
            }
            let mut db = Tensor::zeros(vec![k, m]);
            for r in 0..k {
                for c in 0..m {
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += a.at2(i, r) * g.at2(i, c);
                    }
                    db.data_mut()[r * m + c] = acc;
                }
            }
            (da, db)
        })
    }

    /// Batched rank-3 matrix product `[b,n,k] x [b,k,m] -> [b,n,m]`.
    pub fn bmm(&self, other: &Value) -> Value {
        let a = self.data();
        let b = other.data();
        assert_eq!(a.rank(), 3, "bmm lhs rank");
        assert_eq!(b.rank(), 3, "bmm rhs rank");
        let (batch, n, k) = (a.shape()[0], a.shape()[1], a.shape()[2]);
        let (batch2, k2, m) = (b.shape()[0], b.shape()[1], b.shape()[2]);
        assert_eq!(batch, batch2, "bmm batch dims");
        assert_eq!(k, k2, "bmm inner dims");
        let mut out = Tensor::zeros(vec![batch, n, m]);
        for t in 0..batch {
            for r in 0..n {
                for c in 0..m {
                    let mut acc = 0.0;
                    for j in 0..k {
                        acc += a.data()[t * n * k + r * k + j] * b.data()[t * k * m + j * m + c];
                    }
                    out.data_mut()[t * n * m + r * m + c] = acc;
                }
            }
        }
        self.binop(other, out, move |g| {
            let mut da = Tensor::zeros(vec![batch, n, k]);
            let mut db = Tensor::zeros(vec![batch, k, m]);
            for t in 0..batch {
                for r in 0..n {
                    for j in 0..k {
                        let mut acc = 0.0;
                        for c in 0..m {
                            acc += g.data()[t * n * m + r * m + c] * b.data()[t * k * m + j * m + c];
                        }
                        da.data_mut()[t * n * k + r * k + j] = acc;
                    }
                }
                for j in 0..k {
                    for c in 0..m {
                        let mut acc = 0.0;
                        for r in 0..n {
                            acc += a.data()[t * n * k + r * k + j] * g.data()[t * n * m + r * m + c];
                        }
                        db.data_mut()[t * k * m + j * m + c] = acc;
                    }
                }
            }
            (da, db)
        })
    }

    /// Broadcast-add a rank-1 bias over the rows of a rank-2 value.
    pub fn add_row_bias(&self, bias: &Value) -> Value {
        let a = self.data();
        let b = bias.data();
        assert_eq!(a.rank(), 2);
        assert_eq!(b.rank(), 1);
        let (n, m) = (a.shape()[0], a.shape()[1]);
        assert_eq!(b.shape()[0], m, "bias width");
        let mut out = a.clone();
        for r in 0..n {
            for c in 0..m {
                out.data_mut()[r * m + c] += b.data()[c];
            }
        }
        self.binop(bias, out, move |g| {
            let mut db = Tensor::zeros(vec![m]);
            for r in 0..n {
                for c in 0..m {
                    db.data_mut()[c] += g.at2(r, c);
                }
            }
            (g.clone(), db)
        })
    }

    // ---- reductions and row ops ----

    pub fn sum(&self) -> Value {
        let a = self.data();
        let shape = a.shape().to_vec();
        let total: f64 = a.data().iter().sum();
        self.unop(Tensor::scalar(total), move |g| {
            Tensor::filled(shape.clone(), g.item())
        })
    }

    /// Row sums of a rank-2 value: `[n,m] -> [n]`.
    pub fn sum_rows(&self) -> Value {
        let a = self.data();
        assert_eq!(a.rank(), 2);
        let (n, m) = (a.shape()[0], a.shape()[1]);
        let data: Vec<f64> = (0..n)
            .map(|r| (0..m).map(|c| a.at2(r, c)).sum())
            .collect();
        self.unop(Tensor::new(vec![n], data), move |g| {
            let mut out = Tensor::zeros(vec![n, m]);
            for r in 0..n {
                for c in 0..m {
                    out.data_mut()[r * m + c] = g.data()[r];
                }
            }
            out
        })
    }

    /// Largest absolute entry as a scalar; the gradient routes to the first
    /// attaining element with the element's sign.
    pub fn max_abs(&self) -> Value {
        let a = self.data();
        let shape = a.shape().to_vec();
        let (mut best_idx, mut best) = (0usize, 0.0f64);
        for (i, &x) in a.data().iter().enumerate() {
            if x.abs() > best {
                best = x.abs();
                best_idx = i;
            }
        }
        let sign = if a.data()[best_idx] >= 0.0 { 1.0 } else { -1.0 };
        self.unop(Tensor::scalar(best), move |g| {
            let mut out = Tensor::zeros(shape.clone());
            out.data_mut()[best_idx] = sign * g.item();
            out
        })
    }

    /// Row-wise softmax of a rank-2 value.
    pub fn softmax_rows(&self) -> Value {
        let a = self.data();
        assert_eq!(a.rank(), 2, "softmax_rows expects rank 2");
        let (n, m) = (a.shape()[0], a.shape()[1]);
        let mut out = Tensor::zeros(vec![n, m]);
        for r in 0..n {
            let row_max = (0..m).map(|c| a.at2(r, c)).fold(f64::NEG_INFINITY, f64::max);
            let mut denom = 0.0;
            for c in 0..m {
                let e = (a.at2(r, c) - row_max).exp();
                out.data_mut()[r * m + c] = e;
                denom += e;
            }
            for c in 0..m {
                out.data_mut()[r * m + c] /= denom;
            }
        }
        let y = out.clone();
        self.unop(out, move |g| {
            let mut dx = Tensor::zeros(vec![n, m]);
            for r in 0..n {
                let dot: f64 = (0..m).map(|c| g.at2(r, c) * y.at2(r, c)).sum();
                for c in 0..m {
                    dx.data_mut()[r * m + c] = y.at2(r, c) * (g.at2(r, c) - dot);
                }
            }
            dx
        })
    }

    /// Row-wise layer normalization with learnable affine parameters:
    /// `y = gamma * (x - mean) / sqrt(var + eps) + beta` per row.
    pub fn layer_norm(&self, gamma: &Value, beta: &Value, eps: f64) -> Value {
        let x = self.data();
        assert_eq!(x.rank(), 2, "layer_norm expects rank 2");
        let (n, m) = (x.shape()[0], x.shape()[1]);
        let gm = gamma.data();
        let bt = beta.data();
        assert_eq!(gm.shape(), &[m], "gamma width");
        assert_eq!(bt.shape(), &[m], "beta width");

        let mut xhat = Tensor::zeros(vec![n, m]);
        let mut inv_std = vec![0.0; n];
        let mut out = Tensor::zeros(vec![n, m]);
        for r in 0..n {
            let mean: f64 = (0..m).map(|c| x.at2(r, c)).sum::<f64>() / m as f64;
            let var: f64 = (0..m)
                .map(|c| (x.at2(r, c) - mean).powi(2))
                .sum::<f64>()
                / m as f64;
            let istd = 1.0 / (var + eps).sqrt();
            inv_std[r] = istd;
            for c in 0..m {
                let xh = (x.at2(r, c) - mean) * istd;
                xhat.data_mut()[r * m + c] = xh;
                out.data_mut()[r * m + c] = gm.data()[c] * xh + bt.data()[c];
            }
        }

        assert!(
            Rc::ptr_eq(&self.tape.inner, &gamma.tape.inner)
                && Rc::ptr_eq(&self.tape.inner, &beta.tape.inner),
            "layer_norm operands live on different tapes"
        );
        let parents = vec![self.idx, gamma.idx, beta.idx];
        self.tape.push(
            out,
            parents,
            Some(Box::new(move |g| {
                let mut dgamma = Tensor::zeros(vec![m]);
                let mut dbeta = Tensor::zeros(vec![m]);
                let mut dx = Tensor::zeros(vec![n, m]);
                for r in 0..n {
                    for c in 0..m {
                        dgamma.data_mut()[c] += g.at2(r, c) * xhat.at2(r, c);
                        dbeta.data_mut()[c] += g.at2(r, c);
                    }
                    // dxhat = g * gamma; dx via the standard LN backward.
                    let dxhat: Vec<f64> =
                        (0..m).map(|c| g.at2(r, c) * gm.data()[c]).collect();
                    let mean_dx: f64 = dxhat.iter().sum::<f64>() / m as f64;
                    let mean_dxx: f64 = (0..m)
                        .map(|c| dxhat[c] * xhat.at2(r, c))
                        .sum::<f64>()
                        / m as f64;
                    for c in 0..m {
                        dx.data_mut()[r * m + c] = inv_std[r]
                            * (dxhat[c] - mean_dx - xhat.at2(r, c) * mean_dxx);
                    }
                }
                vec![dx, dgamma, dbeta]
            })),
        )
    }

    /// Column slice `[.., a..b)` of a rank-2 value.
    pub fn slice_cols(&self, a: usize, b: usize) -> Value {
        let x = self.data();
        assert_eq!(x.rank(), 2);
        let (n, m) = (x.shape()[0], x.shape()[1]);
        assert!(a < b && b <= m, "slice bounds {a}..{b} of width {m}");
        let w = b - a;
        let mut out = Tensor::zeros(vec![n, w]);
        for r in 0..n {
            for c in 0..w {
                out.data_mut()[r * w + c] = x.at2(r, a + c);
            }
        }
        self.unop(out, move |g| {
            let mut dx = Tensor::zeros(vec![n, m]);
            for r in 0..n {
                for c in 0..w {
                    dx.data_mut()[r * m + a + c] = g.at2(r, c);
                }
            }
            dx
        })
    }

    /// Extract one row of a rank-2 value as a rank-1 value.
    pub fn row(&self, r: usize) -> Value {
        let x = self.data();
        assert_eq!(x.rank(), 2);
        let (n, m) = (x.shape()[0], x.shape()[1]);
        assert!(r < n);
        let data: Vec<f64> = (0..m).map(|c| x.at2(r, c)).collect();
        self.unop(Tensor::new(vec![m], data), move |g| {
            let mut dx = Tensor::zeros(vec![n, m]);
            for c in 0..m {
                dx.data_mut()[r * m + c] = g.data()[c];
            }
            dx
        })
    }

    /// Per-row gather of a rank-2 value: output `[n]` with `y_r = x[r, idx_r]`.
    pub fn gather_per_row(&self, indices: &[usize]) -> Value {
        let x = self.data();
        assert_eq!(x.rank(), 2);
        let (n, m) = (x.shape()[0], x.shape()[1]);
        assert_eq!(indices.len(), n, "one index per row");
        let idx = indices.to_vec();
        let data: Vec<f64> = idx.iter().enumerate().map(|(r, &c)| x.at2(r, c)).collect();
        self.unop(Tensor::new(vec![n], data), move |g| {
            let mut dx = Tensor::zeros(vec![n, m]);
            for (r, &c) in idx.iter().enumerate() {
                dx.data_mut()[r * m + c] = g.data()[r];
            }
            dx
        })
    }
}

/// Concatenate rank-2 values along columns.
pub fn concat_cols(parts: &[Value]) -> Value {
    assert!(!parts.is_empty(), "concat of nothing");
    let tape = parts[0].tape.clone();
    let datas: Vec<Tensor> = parts.iter().map(|p| p.data()).collect();
    let n = datas[0].shape()[0];
    for d in &datas {
        assert_eq!(d.rank(), 2, "concat_cols expects rank 2");
        assert_eq!(d.shape()[0], n, "concat_cols row mismatch");
    }
    let widths: Vec<usize> = datas.iter().map(|d| d.shape()[1]).collect();
    let total: usize = widths.iter().sum();
    let mut out = Tensor::zeros(vec![n, total]);
    let mut offset = 0;
    for d in &datas {
        let w = d.shape()[1];
        for r in 0..n {
            for c in 0..w {
                out.data_mut()[r * total + offset + c] = d.at2(r, c);
            }
        }
        offset += w;
    }
    let parents: Vec<usize> = parts.iter().map(|p| p.idx).collect();
    tape.push(
        out,
        parents,
        Some(Box::new(move |g| {
            let mut grads = Vec::with_capacity(widths.len());
            let mut offset = 0;
            for &w in &widths {
                let mut dp = Tensor::zeros(vec![n, w]);
                for r in 0..n {
                    for c in 0..w {
                        dp.data_mut()[r * w + c] = g.at2(r, offset + c);
                    }
                }
                grads.push(dp);
                offset += w;
            }
            grads
        })),
    )
}

/// Stack rank-1 values of equal length into the rows of a rank-2 value.
pub fn stack_rows(rows: &[Value]) -> Value {
    assert!(!rows.is_empty(), "stack of nothing");
    let tape = rows[0].tape.clone();
    let datas: Vec<Tensor> = rows.iter().map(|r| r.data()).collect();
    let m = datas[0].len();
    let n = datas.len();
    let mut out = Tensor::zeros(vec![n, m]);
    for (r, d) in datas.iter().enumerate() {
        assert_eq!(d.rank(), 1, "stack_rows expects rank-1 rows");
        assert_eq!(d.len(), m, "stack_rows width mismatch");
        out.data_mut()[r * m..(r + 1) * m].copy_from_slice(d.data());
    }
    let parents: Vec<usize> = rows.iter().map(|r| r.idx).collect();
    tape.push(
        out,
        parents,
        Some(Box::new(move |g| {
            (0..n)
                .map(|r| {
                    Tensor::new(vec![m], g.data()[r * m..(r + 1) * m].to_vec())
                })
                .collect()
        })),
    )
}

/// Raw rank-2 matrix product used by forward passes.
pub(crate) fn matmul_raw(a: &Tensor, b: &Tensor) -> Tensor {
    let (n, k) = (a.shape()[0], a.shape()[1]);
    let m = b.shape()[1];
    let mut out = Tensor::zeros(vec![n, m]);
    for r in 0..n {
        for j in 0..k {
            let av = a.at2(r, j);
            if av == 0.0 {
                continue;
            }
            for c in 0..m {
                out.data_mut()[r * m + c] += av * b.at2(j, c);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn square_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2], vec![3.0, -1.5]));
        let y = x.square().sum();
        y.backward().unwrap();
        assert_abs_diff_eq!(x.grad().data()[0], 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.grad().data()[1], -3.0, epsilon = 1e-12);
    }

    #[test]
    fn shared_parent_accumulates() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(2.0));
        let y = x.mul(&x).sum(); // d(x^2)/dx = 2x
        y.backward().unwrap();
        assert_abs_diff_eq!(x.grad().item(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn backward_twice_is_error() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(1.0));
        let y = x.square();
        y.backward().unwrap();
        assert!(matches!(
            y.backward(),
            Err(AutodiffError::BackwardConsumed)
        ));
    }

    #[test]
    fn backward_requires_scalar() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2], vec![1.0, 2.0]));
        assert!(matches!(
            x.backward(),
            Err(AutodiffError::NonScalarOutput(_))
        ));
    }

    #[test]
    fn softmax_of_equal_logits_is_uniform_with_zero_sum_grad() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![1, 2], vec![0.0, 0.0]));
        let y = x.softmax_rows();
        assert_abs_diff_eq!(y.data().data()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(y.data().data()[1], 0.5, epsilon = 1e-12);
        let s = y.sum();
        s.backward().unwrap();
        // Softmax rows sum to 1 identically, so the gradient of the sum is 0.
        assert_abs_diff_eq!(x.grad().data()[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(x.grad().data()[1], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn layer_norm_of_constant_row_is_beta() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![1, 4], vec![3.0; 4]));
        let gamma = tape.leaf(Tensor::new(vec![4], vec![1.0; 4]));
        let beta = tape.leaf(Tensor::zeros(vec![4]));
        let y = x.layer_norm(&gamma, &beta, 1e-5);
        for &v in y.data().data() {
            assert_abs_diff_eq!(v, 0.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn gather_per_row_scatters_gradient() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::new(vec![2, 3], vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]));
        let y = x.gather_per_row(&[2, 0]);
        assert_eq!(y.data().data(), &[3.0, 4.0]);
        y.sum().backward().unwrap();
        assert_eq!(x.grad().data(), &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn stop_gradient_blocks_backward() {
        let tape = Tape::new();
        let x = tape.leaf(Tensor::scalar(3.0));
        let y = x.stop_gradient().square();
        y.backward().unwrap();
        assert_eq!(x.grad().item(), 0.0);
    }
}
