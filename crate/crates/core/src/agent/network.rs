//! Noisy dueling quantile network.
//!
//! Trunk: plain affine ReLU chain. Two heads (value, advantage), each two
//! noisy hidden layers with ReLU followed by a plain output layer. Outputs
//! are aggregated per quantile as `Q = V + A - mean_a A`.

use rand_chacha::ChaCha8Rng;

use crate::numerics::{Chain, ChainTape, Dense, Mode, NumericsError, Parameter, Tensor2};

use super::noisy::NoisyDense;
use super::AgentError;

/// Per-action quantile rows for one state: entry (a, j) is the j-th
/// return quantile of action a.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    n_actions: usize,
    n_quantiles: usize,
    values: Vec<f64>,
}

impl QuantileTable {
    pub fn from_flat(n_actions: usize, n_quantiles: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), n_actions * n_quantiles);
        QuantileTable {
            n_actions,
            n_quantiles,
            values,
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_quantiles(&self) -> usize {
        self.n_quantiles
    }

    pub fn row(&self, action: usize) -> &[f64] {
        &self.values[action * self.n_quantiles..(action + 1) * self.n_quantiles]
    }
}

/// Dueling head: noisy -> ReLU -> noisy -> ReLU -> plain affine.
#[derive(Debug, Clone)]
pub struct Head {
    pub h1: NoisyDense,
    pub h2: NoisyDense,
    pub out: Dense,
}

#[derive(Debug)]
pub struct HeadTape {
    x0: Tensor2,
    noise1: (Vec<f64>, Vec<f64>),
    w_eff1: Tensor2,
    z1: Tensor2,
    a1: Tensor2,
    noise2: (Vec<f64>, Vec<f64>),
    w_eff2: Tensor2,
    z2: Tensor2,
    a2: Tensor2,
}

impl Head {
    pub fn new(
        in_width: usize,
        hidden: (usize, usize),
        out_width: usize,
        sigma_init: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Head {
            h1: NoisyDense::new(in_width, hidden.0, sigma_init, rng),
            h2: NoisyDense::new(hidden.0, hidden.1, sigma_init, rng),
            out: Dense::new(hidden.1, out_width, rng),
        }
    }

    pub fn forward(
        &self,
        x: &Tensor2,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor2, HeadTape), NumericsError> {
        let noise1 = if mode == Mode::Train {
            self.h1.sample_noise(rng)
        } else {
            self.h1.zero_noise()
        };
        let (z1, w_eff1) = self.h1.forward(x, &noise1.0, &noise1.1)?;
        let a1 = z1.relu();
        let noise2 = if mode == Mode::Train {
            self.h2.sample_noise(rng)
        } else {
            self.h2.zero_noise()
        };
        let (z2, w_eff2) = self.h2.forward(&a1, &noise2.0, &noise2.1)?;
        let a2 = z2.relu();
        let y = self.out.forward(&a2)?;
        Ok((
            y,
            HeadTape {
                x0: x.clone(),
                noise1,
                w_eff1,
                z1,
                a1,
                noise2,
                w_eff2,
                z2,
                a2,
            },
        ))
    }

    /// Returns dL/d(head input).
    pub fn backward(&mut self, tape: &HeadTape, d_out: &Tensor2) -> Result<Tensor2, NumericsError> {
        let mut d = self.out.backward(&tape.a2, d_out)?;
        for (g, &z) in d.data_mut().iter_mut().zip(tape.z2.data()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let mut d = self.h2.backward(&tape.a1, &tape.noise2.0, &tape.noise2.1, &tape.w_eff2, &d)?;
        for (g, &z) in d.data_mut().iter_mut().zip(tape.z1.data()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        self.h1.backward(&tape.x0, &tape.noise1.0, &tape.noise1.1, &tape.w_eff1, &d)
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out: Vec<&mut Parameter> = self.h1.params_mut().into();
        out.extend(self.h2.params_mut());
        out.push(&mut self.out.w);
        out.push(&mut self.out.b);
        out
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out: Vec<&Parameter> = self.h1.params().into();
        out.extend(self.h2.params());
        out.push(&self.out.w);
        out.push(&self.out.b);
        out
    }
}

#[derive(Debug)]
pub struct NetTape {
    trunk: ChainTape,
    value: HeadTape,
    adv: HeadTape,
    batch: usize,
}

#[derive(Debug, Clone)]
pub struct QuantileNetwork {
    pub state_dim: usize,
    pub n_actions: usize,
    pub n_quantiles: usize,
    trunk: Chain,
    value_head: Head,
    adv_head: Head,
}

impl QuantileNetwork {
    pub fn new(
        state_dim: usize,
        n_actions: usize,
        n_quantiles: usize,
        trunk_widths: &[usize],
        head_hidden: (usize, usize),
        sigma_init: f64,
        dropout: f64,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let mut widths = vec![state_dim];
        widths.extend_from_slice(trunk_widths);
        let mut trunk = Chain::new(&widths, rng);
        trunk.dropout = dropout;
        let feat = trunk.out_width();
        let value_head = Head::new(feat, head_hidden, n_quantiles, sigma_init, rng);
        let adv_head = Head::new(feat, head_hidden, n_actions * n_quantiles, sigma_init, rng);
        QuantileNetwork {
            state_dim,
            n_actions,
            n_quantiles,
            trunk,
            value_head,
            adv_head,
        }
    }

    /// Batched forward. Rows of `x` are states; output row i holds the
    /// flattened (action, quantile) table for state i.
    pub fn forward(
        &self,
        x: &Tensor2,
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Tensor2, NetTape), AgentError> {
        if x.cols() != self.state_dim {
            return Err(AgentError::Dimension(format!(
                "state width {} does not match configured dimension {}",
                x.cols(),
                self.state_dim
            )));
        }
        let (feat, trunk_tape) = self.trunk.forward(x, mode, rng)?;
        let (v, value_tape) = self.value_head.forward(&feat, mode, rng)?;
        let (adv, adv_tape) = self.adv_head.forward(&feat, mode, rng)?;

        let batch = x.rows();
        let n = self.n_quantiles;
        let a_count = self.n_actions;
        let mut out = Tensor2::zeros(batch, a_count * n);
        for i in 0..batch {
            let v_row = v.row(i);
            let adv_row = adv.row(i);
            let out_row = out.row_mut(i);
            for j in 0..n {
                let mut mean_adv = 0.0;
                for a in 0..a_count {
                    mean_adv += adv_row[a * n + j];
                }
                mean_adv /= a_count as f64;
                for a in 0..a_count {
                    out_row[a * n + j] = v_row[j] + adv_row[a * n + j] - mean_adv;
                }
            }
        }
        out.check_finite("network forward")?;
        Ok((
            out,
            NetTape {
                trunk: trunk_tape,
                value: value_tape,
                adv: adv_tape,
                batch,
            },
        ))
    }

    /// Single-state forward that also exposes the value stream, for
    /// checking the dueling aggregation.
    pub fn forward_decomposed(
        &self,
        state: &[f64],
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<(Vec<f64>, QuantileTable), AgentError> {
        let x = Tensor2::row_from_slice(state);
        if x.cols() != self.state_dim {
            return Err(AgentError::Dimension(format!(
                "state width {} does not match configured dimension {}",
                x.cols(),
                self.state_dim
            )));
        }
        let (feat, _) = self.trunk.forward(&x, mode, rng)?;
        let (v, _) = self.value_head.forward(&feat, mode, rng)?;
        let (adv, _) = self.adv_head.forward(&feat, mode, rng)?;
        let n = self.n_quantiles;
        let a_count = self.n_actions;
        let mut values = vec![0.0; a_count * n];
        for j in 0..n {
            let mean_adv: f64 =
                (0..a_count).map(|a| adv.get(0, a * n + j)).sum::<f64>() / a_count as f64;
            for a in 0..a_count {
                values[a * n + j] = v.get(0, j) + adv.get(0, a * n + j) - mean_adv;
            }
        }
        Ok((
            v.row(0).to_vec(),
            QuantileTable::from_flat(a_count, n, values),
        ))
    }

    /// Quantile table for a single state.
    pub fn forward_table(
        &self,
        state: &[f64],
        mode: Mode,
        rng: &mut ChaCha8Rng,
    ) -> Result<QuantileTable, AgentError> {
        let x = Tensor2::row_from_slice(state);
        let (out, _) = self.forward(&x, mode, rng)?;
        Ok(QuantileTable::from_flat(
            self.n_actions,
            self.n_quantiles,
            out.data().to_vec(),
        ))
    }

    /// Backpropagates through the dueling aggregation, both heads, and
    /// the trunk, accumulating parameter grads.
    pub fn backward(&mut self, tape: &NetTape, d_out: &Tensor2) -> Result<(), AgentError> {
        let n = self.n_quantiles;
        let a_count = self.n_actions;
        if d_out.shape() != (tape.batch, a_count * n) {
            return Err(AgentError::Dimension(format!(
                "loss grad shape {:?} does not match output ({}, {})",
                d_out.shape(),
                tape.batch,
                a_count * n
            )));
        }
        let mut d_v = Tensor2::zeros(tape.batch, n);
        let mut d_adv = Tensor2::zeros(tape.batch, a_count * n);
        for i in 0..tape.batch {
            let g_row = d_out.row(i);
            for j in 0..n {
                let mut sum = 0.0;
                for a in 0..a_count {
                    sum += g_row[a * n + j];
                }
                d_v.set(i, j, sum);
                let mean = sum / a_count as f64;
                for a in 0..a_count {
                    d_adv.set(i, a * n + j, g_row[a * n + j] - mean);
                }
            }
        }
        let d_feat_v = self.value_head.backward(&tape.value, &d_v)?;
        let d_feat_a = self.adv_head.backward(&tape.adv, &d_adv)?;
        let d_feat = d_feat_v.add(&d_feat_a)?;
        self.trunk.backward(&tape.trunk, &d_feat)?;
        Ok(())
    }

    pub fn params_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = self.trunk.params_mut();
        out.extend(self.value_head.params_mut());
        out.extend(self.adv_head.params_mut());
        out
    }

    pub fn params(&self) -> Vec<&Parameter> {
        let mut out = self.trunk.params();
        out.extend(self.value_head.params());
        out.extend(self.adv_head.params());
        out
    }

    /// Hard copy of all parameter values (not optimizer state).
    pub fn copy_params_from(&mut self, other: &QuantileNetwork) {
        let src: Vec<Tensor2> = other.params().iter().map(|p| p.value.clone()).collect();
        for (dst, v) in self.params_mut().into_iter().zip(src) {
            dst.value = v;
        }
    }

    /// Parameter tensors in checkpoint order.
    pub fn param_tensors(&self) -> Vec<&Tensor2> {
        self.params().iter().map(|p| &p.value).collect()
    }

    pub fn load_param_tensors(&mut self, tensors: Vec<Tensor2>) -> Result<(), AgentError> {
        let mut params = self.params_mut();
        if tensors.len() != params.len() {
            return Err(AgentError::Checkpoint(format!(
                "checkpoint holds {} tensors, network has {} parameters",
                tensors.len(),
                params.len()
            )));
        }
        for (i, (p, t)) in params.iter_mut().zip(tensors).enumerate() {
            if p.value.shape() != t.shape() {
                return Err(AgentError::Checkpoint(format!(
                    "tensor {i}: shape {:?} does not match expected {:?}",
                    t.shape(),
                    p.value.shape()
                )));
            }
            p.value = t;
        }
        Ok(())
    }
}
