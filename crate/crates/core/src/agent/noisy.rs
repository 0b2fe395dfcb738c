//! Noisy affine layer with factorized Gaussian parameter noise,
//! `W = W_mu + W_sigma ⊙ (f(eps_in) f(eps_out)^T)`, `f(x) = sign(x) sqrt(|x|)`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{NumericsError, Parameter, Tensor2};

#[derive(Debug, Clone)]
pub struct NoisyDense {
    pub w_mu: Parameter,
    pub w_sigma: Parameter,
    pub b_mu: Parameter,
    pub b_sigma: Parameter,
}

fn scale_noise(eps: f64) -> f64 {
    eps.signum() * eps.abs().sqrt()
}

fn std_normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

impl NoisyDense {
    /// Mu weights uniform in (-1/sqrt(fan_in), 1/sqrt(fan_in)), mu biases
    /// zero, sigmas constant at `sigma_init / sqrt(fan_in)`.
    pub fn new(fan_in: usize, fan_out: usize, sigma_init: f64, rng: &mut ChaCha8Rng) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut w = Tensor2::zeros(fan_in, fan_out);
        for v in w.data_mut() {
            *v = rng.gen_range(-bound..bound);
        }
        let sigma = sigma_init / (fan_in as f64).sqrt();
        let mut ws = Tensor2::zeros(fan_in, fan_out);
        for v in ws.data_mut() {
            *v = sigma;
        }
        let mut bs = Tensor2::zeros(1, fan_out);
        for v in bs.data_mut() {
            *v = sigma;
        }
        NoisyDense {
            w_mu: Parameter::new(w),
            w_sigma: Parameter::new(ws),
            b_mu: Parameter::new(Tensor2::zeros(1, fan_out)),
            b_sigma: Parameter::new(bs),
        }
    }

    pub fn fan_in(&self) -> usize {
        self.w_mu.value.rows()
    }

    pub fn fan_out(&self) -> usize {
        self.w_mu.value.cols()
    }

    /// Factorized noise for one forward pass, already through `f`.
    pub fn sample_noise(&self, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
        let f_in = (0..self.fan_in()).map(|_| scale_noise(std_normal(rng))).collect();
        let f_out = (0..self.fan_out()).map(|_| scale_noise(std_normal(rng))).collect();
        (f_in, f_out)
    }

    pub fn zero_noise(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![0.0; self.fan_in()], vec![0.0; self.fan_out()])
    }

    /// Effective weight matrix for the given frozen noise.
    pub fn effective_w(&self, f_in: &[f64], f_out: &[f64]) -> Tensor2 {
        let (rows, cols) = self.w_mu.value.shape();
        let mut w = self.w_mu.value.clone();
        for r in 0..rows {
            for c in 0..cols {
                let noise = f_in[r] * f_out[c];
                let v = w.get(r, c) + self.w_sigma.value.get(r, c) * noise;
                w.set(r, c, v);
            }
        }
        w
    }

    /// `y = x W_eff + b_eff`. With zero noise this is exactly the plain
    /// affine layer on (w_mu, b_mu).
    pub fn forward(
        &self,
        x: &Tensor2,
        f_in: &[f64],
        f_out: &[f64],
    ) -> Result<(Tensor2, Tensor2), NumericsError> {
        let w_eff = self.effective_w(f_in, f_out);
        let mut b_eff = self.b_mu.value.clone();
        for (c, b) in b_eff.data_mut().iter_mut().enumerate() {
            *b += self.b_sigma.value.get(0, c) * f_out[c];
        }
        let y = x.matmul(&w_eff)?.add_row_broadcast(&b_eff)?;
        Ok((y, w_eff))
    }

    /// Accumulates grads for mu and sigma parameters; returns dL/dx.
    pub fn backward(
        &mut self,
        x: &Tensor2,
        f_in: &[f64],
        f_out: &[f64],
        w_eff: &Tensor2,
        d_out: &Tensor2,
    ) -> Result<Tensor2, NumericsError> {
        let dw = x.transpose().matmul(d_out)?;
        self.w_mu.grad.add_assign(&dw)?;
        let (rows, cols) = dw.shape();
        for r in 0..rows {
            for c in 0..cols {
                let g = self.w_sigma.grad.get(r, c) + dw.get(r, c) * f_in[r] * f_out[c];
                self.w_sigma.grad.set(r, c, g);
            }
        }
        let db = d_out.col_sums();
        self.b_mu.grad.add_assign(&db)?;
        for c in 0..db.cols() {
            let g = self.b_sigma.grad.get(0, c) + db.get(0, c) * f_out[c];
            self.b_sigma.grad.set(0, c, g);
        }
        d_out.matmul(&w_eff.transpose())
    }

    pub fn params_mut(&mut self) -> [&mut Parameter; 4] {
        [
            &mut self.w_mu,
            &mut self.w_sigma,
            &mut self.b_mu,
            &mut self.b_sigma,
        ]
    }

    pub fn params(&self) -> [&Parameter; 4] {
        [&self.w_mu, &self.w_sigma, &self.b_mu, &self.b_sigma]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn zero_noise_equals_plain_affine() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layer = NoisyDense::new(4, 3, 0.5, &mut rng);
        let x = Tensor2::from_vec(2, 4, (0..8).map(|i| i as f64 * 0.1).collect()).unwrap();
        let (f_in, f_out) = layer.zero_noise();
        let (y, _) = layer.forward(&x, &f_in, &f_out).unwrap();
        let plain = x
            .matmul(&layer.w_mu.value)
            .unwrap()
            .add_row_broadcast(&layer.b_mu.value)
            .unwrap();
        assert_eq!(y, plain);
    }

    #[test]
    fn sigma_init_scaling() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let layer = NoisyDense::new(16, 3, 0.5, &mut rng);
        let expected = 0.5 / 4.0;
        assert!(layer
            .w_sigma
            .value
            .data()
            .iter()
            .all(|&v| (v - expected).abs() < 1e-15));
    }

    #[test]
    fn noise_is_zero_mean_per_entry() {
        // E[f(e_i) f(e_j)] = E[f(e_i)] E[f(e_j)] = 0: the effective weight
        // averaged over draws converges to w_mu
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let layer = NoisyDense::new(3, 2, 0.5, &mut rng);
        let draws = 20_000;
        let mut acc = Tensor2::zeros(3, 2);
        for _ in 0..draws {
            let (f_in, f_out) = layer.sample_noise(&mut rng);
            acc.add_assign(&layer.effective_w(&f_in, &f_out)).unwrap();
        }
        let mean = acc.scale(1.0 / draws as f64);
        for (m, w) in mean.data().iter().zip(layer.w_mu.value.data()) {
            assert!((m - w).abs() < 0.02, "noisy mean {m} vs mu {w}");
        }
    }
}
