use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::{NumericsError, Parameter, Tensor2};

/// Forward-pass mode. Train samples noise/dropout, eval is deterministic.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Fully connected layer, `y = x W + b` with `W: (in, out)`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Parameter,
    pub b: Parameter,
}

impl Dense {
    /// Weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), biases zero.
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut w = Tensor2::zeros(fan_in, fan_out);
        for v in w.data_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        Dense {
            w: Parameter::new(w),
            b: Parameter::new(Tensor2::zeros(1, fan_out)),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w.value.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.w.value.cols()
    }

    pub fn forward(&self, x: &Tensor2) -> Result<Tensor2, NumericsError> {
        x.matmul(&self.w.value)?.add_row_broadcast(&self.b.value)
    }

    /// Accumulates dW, db and returns dL/dx.
    pub fn backward(&mut self, x: &Tensor2, d_out: &Tensor2) -> Result<Tensor2, NumericsError> {
        let dw = x.transpose().matmul(d_out)?;
        self.w.grad.add_assign(&dw)?;
        self.b.grad.add_assign(&d_out.col_sums())?;
        d_out.matmul(&self.w.value.transpose())
    }
}

/// Per-layer forward cache for one pass through a [`Chain`].
#[derive(Debug)]
pub struct ChainRecord {
    pub input: Tensor2,
    pub preact: Tensor2,
    pub dropout_mask: Option<Vec<f64>>,
}

/// Tape recorded by [`Chain::forward`]; consumed by [`Chain::backward`].
#[derive(Debug)]
pub struct ChainTape {
    pub records: Vec<ChainRecord>,
    pub output_shape: (usize, usize),
}

/// Sequence of Dense layers with ReLU after each one and optional
/// inverted dropout after the activation (train mode only).
#[derive(Debug, Clone)]
pub struct Chain {
    pub layers: Vec<Dense>,
    pub dropout: f64,
}

impl Chain {
    pub fn new(widths: &[usize], rng: &mut ChaCha8Rng) -> Self {
        assert!(widths.len() >= 2, "chain needs at least input and output width");
        let layers = widths
            .windows(2)
            .map(|w| Dense::new(w[0], w[1], rng))
            .collect();
        Chain {
            layers,
            dropout: 0.0,
        }
    }

    pub fn out_width(&self) -> usize {
        self.layers.last().expect("non-empty chain").fan_out()
    }

    pub fn forward(
        &self,
        x: &Tensor2,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor2, ChainTape), NumericsError> {
        let mut records = Vec::with_capacity(self.layers.len());
        let mut cur = x.clone();
        for layer in &self.layers {
            let preact = layer.forward(&cur)?;
            let mut act = preact.relu();
            let mask = if mode == Mode::Train && self.dropout > 0.0 {
                let keep = 1.0 - self.dropout;
                let mask: Vec<f64> = act
                    .data()
                    .iter()
                    .map(|_| if rng.gen::<f64>() < keep { 1.0 / keep } else { 0.0 })
                    .collect();
                for (a, m) in act.data_mut().iter_mut().zip(&mask) {
                    *a *= m;
                }
                Some(mask)
            } else {
                None
            };
            records.push(ChainRecord {
                input: cur,
                preact,
                dropout_mask: mask,
            });
            cur = act;
        }
        cur.check_finite("chain forward")?;
        let tape = ChainTape {
            records,
            output_shape: cur.shape(),
        };
        Ok((cur, tape))
    }

    /// Backpropagates `loss_grad` through the recorded pass, accumulating
    /// into each layer's parameter grads. Returns dL/d input.
    pub fn backward(
        &mut self,
        tape: &ChainTape,
        loss_grad: &Tensor2,
    ) -> Result<Tensor2, NumericsError> {
        if loss_grad.shape() != tape.output_shape {
            return Err(NumericsError::ShapeMismatch {
                op: "chain backward",
                lhs: loss_grad.shape(),
                rhs: tape.output_shape,
            });
        }
        let mut d = loss_grad.clone();
        for (layer, rec) in self.layers.iter_mut().zip(tape.records.iter()).rev() {
            if let Some(mask) = &rec.dropout_mask {
                for (g, m) in d.data_mut().iter_mut().zip(mask) {
                    *g *= m;
                }
            }
            for (g, &z) in d.data_mut().iter_mut().zip(rec.preact.data()) {
                if z <= 0.0 {
                    *g = 0.0;
                }
            }
            d = layer.backward(&rec.input, &d)?;
        }
        Ok(d)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        self.layers
            .iter_mut()
            .flat_map(|l| [&mut l.w, &mut l.b])
            .collect()
    }

    pub fn params(&self) -> Vec<&Parameter> {
        self.layers.iter().flat_map(|l| [&l.w, &l.b]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn affine_zero_input_gives_bias() {
        let mut r = rng();
        let mut layer = Dense::new(3, 2, &mut r);
        layer.b.value.set(0, 0, 1.5);
        layer.b.value.set(0, 1, -0.5);
        let x = Tensor2::zeros(1, 3);
        let y = layer.forward(&x).unwrap();
        assert_eq!(y.data(), &[1.5, -0.5]);
    }

    #[test]
    fn affine_sum_case() {
        let mut r = rng();
        let mut layer = Dense::new(2, 1, &mut r);
        layer.w.value = Tensor2::from_vec(2, 1, vec![1.0, 1.0]).unwrap();
        let x = Tensor2::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        assert_eq!(layer.forward(&x).unwrap().data(), &[2.0]);
    }

    #[test]
    fn affine_batch_shape() {
        let mut r = rng();
        let layer = Dense::new(4, 2, &mut r);
        let x = Tensor2::zeros(3, 4);
        assert_eq!(layer.forward(&x).unwrap().shape(), (3, 2));
    }

    #[test]
    fn bias_grad_is_ones_for_sum_loss() {
        // loss = sum(xW + b) over a single affine layer => db = batch row count
        let mut r = rng();
        let mut layer = Dense::new(3, 2, &mut r);
        let x = Tensor2::from_vec(1, 3, vec![0.3, -0.2, 0.9]).unwrap();
        let y = layer.forward(&x).unwrap();
        let ones = Tensor2::from_vec(y.rows(), y.cols(), vec![1.0; y.rows() * y.cols()]).unwrap();
        layer.backward(&x, &ones).unwrap();
        assert_eq!(layer.b.grad.data(), &[1.0, 1.0]);
    }

    #[test]
    fn weight_grad_matches_xt_ones() {
        // loss = sum(xW): dW = x^T * 1
        let mut r = rng();
        let mut layer = Dense::new(2, 2, &mut r);
        layer.b.value = Tensor2::zeros(1, 2);
        let x = Tensor2::from_vec(1, 2, vec![2.0, -3.0]).unwrap();
        let ones = Tensor2::from_vec(1, 2, vec![1.0, 1.0]).unwrap();
        layer.backward(&x, &ones).unwrap();
        let expected = x.transpose().matmul(&ones).unwrap();
        assert_eq!(layer.w.grad, expected);
    }
}
