use super::tensor::{NumericsError, Parameter};

/// Adam with bias correction. One instance per network; `t` is shared
/// across all parameters it updates.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
}

impl Adam {
    pub fn new(lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
        }
    }

    /// Applies one update to every parameter, then zeroes their grads.
    pub fn step(&mut self, params: &mut [&mut Parameter]) -> Result<(), NumericsError> {
        for p in params.iter() {
            p.grad.check_finite("adam step gradient")?;
        }
        self.t += 1;
        let t = self.t as f64;
        let bc1 = 1.0 - self.beta1.powf(t);
        let bc2 = 1.0 - self.beta2.powf(t);
        for p in params.iter_mut() {
            let n = p.value.data().len();
            for i in 0..n {
                let g = p.grad.data()[i];
                let m = self.beta1 * p.adam_m.data()[i] + (1.0 - self.beta1) * g;
                let v = self.beta2 * p.adam_v.data()[i] + (1.0 - self.beta2) * g * g;
                p.adam_m.data_mut()[i] = m;
                p.adam_v.data_mut()[i] = v;
                let m_hat = m / bc1;
                let v_hat = v / bc2;
                p.value.data_mut()[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
            }
            p.value.check_finite("adam step value")?;
            p.zero_grad();
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Tensor2;

    #[test]
    fn zero_gradient_is_fixed_point() {
        let mut p = Parameter::new(Tensor2::from_vec(1, 2, vec![0.7, -0.3]).unwrap());
        let before = p.value.clone();
        let mut opt = Adam::new(0.01);
        for _ in 0..5 {
            opt.step(&mut [&mut p]).unwrap();
        }
        assert_eq!(p.value, before);
    }

    #[test]
    fn constant_gradient_moves_opposite_sign() {
        let mut p = Parameter::new(Tensor2::from_vec(1, 1, vec![0.0]).unwrap());
        let mut opt = Adam::new(0.001);
        for _ in 0..50 {
            p.grad.data_mut()[0] = 2.5;
            opt.step(&mut [&mut p]).unwrap();
        }
        assert!(p.value.data()[0] < 0.0);
    }

    #[test]
    fn first_step_bias_corrected() {
        // p = 0, g = 1, lr = 0.001: m_hat = 1, v_hat = 1 => p ~ -0.001
        let mut p = Parameter::new(Tensor2::from_vec(1, 1, vec![0.0]).unwrap());
        let mut opt = Adam::new(0.001);
        p.grad.data_mut()[0] = 1.0;
        opt.step(&mut [&mut p]).unwrap();
        let expected = -0.001 / (1.0 + 1e-8);
        assert!((p.value.data()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn non_finite_grad_is_error() {
        let mut p = Parameter::new(Tensor2::zeros(1, 1));
        p.grad.data_mut()[0] = f64::NAN;
        let mut opt = Adam::new(0.001);
        assert!(opt.step(&mut [&mut p]).is_err());
    }
}
