//! Dense row-major real tensors up to rank 3.

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Shape-tagged `f64` buffer. Indexing is row-major; rank is at most 3.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TensorRepr", into = "TensorRepr")]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TensorRepr {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl TryFrom<TensorRepr> for Tensor {
    type Error = String;
    fn try_from(r: TensorRepr) -> Result<Tensor, String> {
        if r.shape.len() > 3 {
            return Err(format!("tensor rank {} above 3", r.shape.len()));
        }
        if r.shape.iter().product::<usize>() != r.data.len() {
            return Err(format!(
                "shape {:?} does not match {} elements",
                r.shape,
                r.data.len()
            ));
        }
        Ok(Tensor {
            shape: r.shape,
            data: r.data,
        })
    }
}

impl From<Tensor> for TensorRepr {
    fn from(t: Tensor) -> TensorRepr {
        TensorRepr {
            shape: t.shape,
            data: t.data,
        }
    }
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Tensor {
        assert!(shape.len() <= 3, "rank above 3 is unsupported");
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {shape:?} does not match {} elements",
            data.len()
        );
        Tensor { shape, data }
    }

    pub fn zeros(shape: Vec<usize>) -> Tensor {
        let len = shape.iter().product();
        Tensor::new(shape, vec![0.0; len])
    }

    pub fn scalar(x: f64) -> Tensor {
        Tensor::new(vec![1], vec![x])
    }

    pub fn filled(shape: Vec<usize>, x: f64) -> Tensor {
        let len = shape.iter().product();
        Tensor::new(shape, vec![x; len])
    }

    /// Gaussian entries with the given standard deviation.
    pub fn randn(shape: Vec<usize>, std: f64, rng: &mut ChaCha12Rng) -> Tensor {
        let len = shape.iter().product();
        let data = (0..len)
            .map(|_| {
                // Box-Muller
                let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
                let u2: f64 = rng.gen();
                std * (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
            })
            .collect();
        Tensor::new(shape, data)
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn item(&self) -> f64 {
        assert_eq!(self.len(), 1, "item() on non-scalar tensor");
        self.data[0]
    }

    /// Rank-2 element access.
    pub fn at2(&self, r: usize, c: usize) -> f64 {
        debug_assert_eq!(self.rank(), 2);
        self.data[r * self.shape[1] + c]
    }

    pub fn add_assign(&mut self, other: &Tensor) {
        assert_eq!(self.shape, other.shape, "add_assign shape mismatch");
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Tensor {
        Tensor::new(self.shape.clone(), self.data.iter().map(|&x| f(x)).collect())
    }

    pub fn zip(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Tensor {
        assert_eq!(self.shape, other.shape, "zip shape mismatch");
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Tensor::new(self.shape.clone(), data)
    }

    /// Inverted-dropout mask: entries are `1/(1-rate)` with probability
    /// `1-rate`, else `0`. Rate 0 yields the all-ones mask.
    pub fn dropout_mask(shape: Vec<usize>, rate: f64, rng: &mut ChaCha12Rng) -> Tensor {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0,1)");
        let len: usize = shape.iter().product();
        let keep = 1.0 - rate;
        let data = (0..len)
            .map(|_| {
                if rate == 0.0 || rng.gen::<f64>() < keep {
                    1.0 / keep
                } else {
                    0.0
                }
            })
            .collect();
        Tensor::new(shape, data)
    }
}
