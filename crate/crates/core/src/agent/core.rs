use std::io::{Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numerics::{self, Adam, Mode, Tensor2};
use crate::replay::ReplayBuffer;

use super::network::QuantileNetwork;
use super::risk::{risk_value, RiskProfile};
use super::{quantile_huber_loss, quantile_midpoints, AgentError, QuantileTable};

const CHECKPOINT_MAGIC: &[u8; 8] = b"CBMAGENT";

#[derive(Debug, Clone)]
pub struct AgentHyper {
    pub n_units: usize,
    pub history_len: usize,
    pub n_quantiles: usize,
    pub trunk_widths: Vec<usize>,
    pub head_hidden: (usize, usize),
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub kappa: f64,
    pub sigma_init: f64,
    pub dropout: f64,
    pub target_sync_interval: u64,
    pub warmup_transitions: usize,
    pub double_dqn: bool,
    /// Optional epsilon-greedy fallback; noisy layers are the primary
    /// exploration mechanism and this defaults to 0.
    pub epsilon_greedy: f64,
}

impl AgentHyper {
    pub fn state_dim(&self) -> usize {
        3 * self.n_units + self.history_len
    }

    pub fn n_actions(&self) -> usize {
        3usize.pow(self.n_units as u32)
    }
}

#[derive(Debug, Clone)]
pub struct TrainStats {
    pub mean_loss: f64,
    pub td_errors: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub hyper: AgentHyper,
    online: QuantileNetwork,
    target: QuantileNetwork,
    optimizer: Adam,
    midpoints: Vec<f64>,
    rng: ChaCha8Rng,
    train_steps: u64,
    syncs: u64,
}

impl Agent {
    pub fn new(hyper: AgentHyper, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let online = QuantileNetwork::new(
            hyper.state_dim(),
            hyper.n_actions(),
            hyper.n_quantiles,
            &hyper.trunk_widths,
            hyper.head_hidden,
            hyper.sigma_init,
            hyper.dropout,
            &mut rng,
        );
        // target initialized as a copy of the online network
        let target = online.clone();
        let optimizer = Adam::new(hyper.learning_rate);
        let midpoints = quantile_midpoints(hyper.n_quantiles);
        Agent {
            hyper,
            online,
            target,
            optimizer,
            midpoints,
            rng,
            train_steps: 0,
            syncs: 0,
        }
    }

    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn online(&self) -> &QuantileNetwork {
        &self.online
    }

    pub fn target(&self) -> &QuantileNetwork {
        &self.target
    }

    pub fn train_steps(&self) -> u64 {
        self.train_steps
    }

    pub fn syncs(&self) -> u64 {
        self.syncs
    }

    pub fn forward_table(&mut self, state: &[f64], mode: Mode) -> Result<QuantileTable, AgentError> {
        self.online.forward_table(state, mode, &mut self.rng)
    }

    /// Argmax over risk-adjusted action values; ties break to the
    /// smallest action index. Train mode draws fresh layer noise.
    pub fn select_action(
        &mut self,
        state: &[f64],
        profile: RiskProfile,
        mode: Mode,
    ) -> Result<usize, AgentError> {
        if mode == Mode::Train && self.hyper.epsilon_greedy > 0.0 {
            if self.rng.gen::<f64>() < self.hyper.epsilon_greedy {
                return Ok(self.rng.gen_range(0..self.hyper.n_actions()));
            }
        }
        let table = self.online.forward_table(state, mode, &mut self.rng)?;
        let mut best = 0usize;
        let mut best_value = f64::NEG_INFINITY;
        for a in 0..table.n_actions() {
            let v = risk_value(table.row(a), &self.midpoints, profile)?;
            if v > best_value {
                best_value = v;
                best = a;
            }
        }
        Ok(best)
    }

    /// Target quantile rows for a batch: Double-DQN action selection on
    /// the online network's full-mean values, bootstrapped from the target
    /// network. Both forwards are noise-free; no gradient flows here.
    pub fn compute_targets(
        &mut self,
        rewards: &[f64],
        dones: &[bool],
        next_states: &Tensor2,
    ) -> Result<Vec<Vec<f64>>, AgentError> {
        let n = self.hyper.n_quantiles;
        let a_count = self.hyper.n_actions();
        let gamma = self.hyper.gamma;
        let (target_out, _) = self.target.forward(next_states, Mode::Eval, &mut self.rng)?;
        let online_out = if self.hyper.double_dqn {
            Some(self.online.forward(next_states, Mode::Eval, &mut self.rng)?.0)
        } else {
            None
        };
        let mut targets = Vec::with_capacity(rewards.len());
        for i in 0..rewards.len() {
            if dones[i] || gamma == 0.0 {
                targets.push(vec![rewards[i]; n]);
                continue;
            }
            let selector = online_out.as_ref().unwrap_or(&target_out).row(i);
            let mut best = 0usize;
            let mut best_mean = f64::NEG_INFINITY;
            for a in 0..a_count {
                let mean: f64 = selector[a * n..(a + 1) * n].iter().sum::<f64>() / n as f64;
                if mean > best_mean {
                    best_mean = mean;
                    best = a;
                }
            }
            let boot = &target_out.row(i)[best * n..(best + 1) * n];
            targets.push(boot.iter().map(|&q| rewards[i] + gamma * q).collect());
        }
        Ok(targets)
    }

    /// One prioritized, importance-weighted training step.
    pub fn train_step(&mut self, buffer: &mut ReplayBuffer, beta: f64) -> Result<TrainStats, AgentError> {
        let batch = buffer.sample(self.hyper.batch_size, beta)?;
        let b = batch.records.len();
        let d = self.hyper.state_dim();
        let n = self.hyper.n_quantiles;
        let a_count = self.hyper.n_actions();

        let mut states = Tensor2::zeros(b, d);
        let mut next_states = Tensor2::zeros(b, d);
        let mut rewards = Vec::with_capacity(b);
        let mut dones = Vec::with_capacity(b);
        for (i, rec) in batch.records.iter().enumerate() {
            states.row_mut(i).copy_from_slice(&rec.state);
            next_states.row_mut(i).copy_from_slice(&rec.next_state);
            rewards.push(rec.reward);
            dones.push(rec.done);
        }

        let targets = self.compute_targets(&rewards, &dones, &next_states)?;

        let (out, tape) = self.online.forward(&states, Mode::Train, &mut self.rng)?;
        let mut d_out = Tensor2::zeros(b, a_count * n);
        let mut mean_loss = 0.0;
        let mut td_errors = Vec::with_capacity(b);
        for i in 0..b {
            let a = batch.records[i].action_index;
            let pred = &out.row(i)[a * n..(a + 1) * n];
            let (loss, grad) = quantile_huber_loss(pred, &targets[i], &self.midpoints, self.hyper.kappa);
            let w = batch.weights[i];
            mean_loss += w * loss / b as f64;
            let scale = w / b as f64;
            let d_row = d_out.row_mut(i);
            for (j, g) in grad.iter().enumerate() {
                d_row[a * n + j] = g * scale;
            }
            let pred_mean: f64 = pred.iter().sum::<f64>() / n as f64;
            let target_mean: f64 = targets[i].iter().sum::<f64>() / targets[i].len() as f64;
            td_errors.push((target_mean - pred_mean).abs());
        }
        if !mean_loss.is_finite() {
            return Err(AgentError::NonFiniteLoss);
        }

        self.online.backward(&tape, &d_out)?;
        let mut params = self.online.params_mut();
        self.optimizer.step(&mut params)?;

        buffer.update_priorities(&batch.ids, &td_errors);

        self.train_steps += 1;
        if self.train_steps % self.hyper.target_sync_interval == 0 {
            self.sync_target();
        }
        Ok(TrainStats { mean_loss, td_errors })
    }

    /// Hard copy of the online parameters into the target network.
    pub fn sync_target(&mut self) {
        self.target.copy_params_from(&self.online);
        self.syncs += 1;
    }

    /// Writes the architecture header and all online parameters.
    pub fn save<W: Write>(&self, w: &mut W, strategy_name: &str) -> Result<(), AgentError> {
        let io_err = |e: std::io::Error| AgentError::Checkpoint(e.to_string());
        w.write_all(CHECKPOINT_MAGIC).map_err(io_err)?;
        let write_u32 = |w: &mut W, v: u32| w.write_all(&v.to_le_bytes()).map_err(io_err);
        write_u32(w, self.hyper.n_units as u32)?;
        write_u32(w, self.hyper.history_len as u32)?;
        write_u32(w, self.hyper.n_quantiles as u32)?;
        write_u32(w, self.hyper.trunk_widths.len() as u32)?;
        for &width in &self.hyper.trunk_widths {
            write_u32(w, width as u32)?;
        }
        write_u32(w, self.hyper.head_hidden.0 as u32)?;
        write_u32(w, self.hyper.head_hidden.1 as u32)?;
        let name = strategy_name.as_bytes();
        write_u32(w, name.len() as u32)?;
        w.write_all(name).map_err(io_err)?;
        numerics::write_tensors(w, &self.online.param_tensors()).map_err(io_err)?;
        Ok(())
    }

    /// Loads a checkpoint into a fresh agent; every header field must
    /// match `hyper` or loading fails naming the offending field.
    pub fn load<R: Read>(r: &mut R, hyper: AgentHyper, seed: u64) -> Result<(Agent, String), AgentError> {
        let io_err = |e: std::io::Error| AgentError::Checkpoint(e.to_string());
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io_err)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(AgentError::Checkpoint("not an agent checkpoint".into()));
        }
        let read_u32 = |r: &mut R| -> Result<u32, AgentError> {
            let mut buf = [0u8; 4];
            r.read_exact(&mut buf).map_err(io_err)?;
            Ok(u32::from_le_bytes(buf))
        };
        let check = |field: &str, got: u32, expected: usize| -> Result<(), AgentError> {
            if got as usize != expected {
                Err(AgentError::Checkpoint(format!(
                    "{field}: checkpoint has {got}, configuration expects {expected}"
                )))
            } else {
                Ok(())
            }
        };
        check("n_units", read_u32(r)?, hyper.n_units)?;
        check("history_len", read_u32(r)?, hyper.history_len)?;
        check("n_quantiles", read_u32(r)?, hyper.n_quantiles)?;
        check("trunk depth", read_u32(r)?, hyper.trunk_widths.len())?;
        for (i, &width) in hyper.trunk_widths.iter().enumerate() {
            check(&format!("trunk width {i}"), read_u32(r)?, width)?;
        }
        check("head hidden 0", read_u32(r)?, hyper.head_hidden.0)?;
        check("head hidden 1", read_u32(r)?, hyper.head_hidden.1)?;
        let name_len = read_u32(r)? as usize;
        let mut name_buf = vec![0u8; name_len];
        r.read_exact(&mut name_buf).map_err(io_err)?;
        let strategy = String::from_utf8(name_buf)
            .map_err(|_| AgentError::Checkpoint("strategy name is not utf-8".into()))?;
        let tensors = numerics::read_tensors(r)
            .map_err(|e| AgentError::Checkpoint(e.to_string()))?;
        let mut agent = Agent::new(hyper, seed);
        agent.online.load_param_tensors(tensors)?;
        agent.sync_target();
        agent.syncs = 0;
        Ok((agent, strategy))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::replay::TransitionRecord;

    fn small_hyper() -> AgentHyper {
        AgentHyper {
            n_units: 1,
            history_len: 2,
            n_quantiles: 5,
            trunk_widths: vec![8],
            head_hidden: (6, 4),
            learning_rate: 0.01,
            gamma: 0.9,
            batch_size: 4,
            kappa: 1.0,
            sigma_init: 0.5,
            dropout: 0.0,
            target_sync_interval: 50,
            warmup_transitions: 4,
            double_dqn: true,
            epsilon_greedy: 0.0,
        }
    }

    fn zero_params(agent: &mut Agent) {
        let zeroed: Vec<Tensor2> = agent
            .online
            .param_tensors()
            .into_iter()
            .map(|t| Tensor2::zeros(t.rows(), t.cols()))
            .collect();
        agent.online.load_param_tensors(zeroed).unwrap();
        agent.sync_target();
    }

    #[test]
    fn select_action_matches_risk_argmax() {
        let mut agent = Agent::new(small_hyper(), 11);
        let state = vec![0.3, 0.4, 0.1, 0.0, 0.0];
        for profile in [
            RiskProfile::FullMean,
            RiskProfile::LowerTail { cutoff: 0.4 },
            RiskProfile::UpperTail { cutoff: 0.6 },
        ] {
            let table = agent.forward_table(&state, Mode::Eval).unwrap();
            let mut expected = 0usize;
            let mut best = f64::NEG_INFINITY;
            for a in 0..table.n_actions() {
                let v = risk_value(table.row(a), agent.midpoints(), profile).unwrap();
                if v > best {
                    best = v;
                    expected = a;
                }
            }
            let chosen = agent.select_action(&state, profile, Mode::Eval).unwrap();
            assert_eq!(chosen, expected);
        }
    }

    #[test]
    fn select_action_ties_break_to_lowest_index() {
        let mut agent = Agent::new(small_hyper(), 12);
        zero_params(&mut agent);
        // all-zero parameters give identical action values
        let state = vec![0.2; 5];
        let a = agent
            .select_action(&state, RiskProfile::FullMean, Mode::Eval)
            .unwrap();
        assert_eq!(a, 0);
    }

    #[test]
    fn terminal_targets_broadcast_reward() {
        let mut agent = Agent::new(small_hyper(), 13);
        let next = Tensor2::zeros(2, 5);
        let targets = agent
            .compute_targets(&[10.5, -2.0], &[true, true], &next)
            .unwrap();
        assert_eq!(targets[0], vec![10.5; 5]);
        assert_eq!(targets[1], vec![-2.0; 5]);
    }

    #[test]
    fn zero_gamma_targets_broadcast_reward() {
        let mut hyper = small_hyper();
        hyper.gamma = 0.0;
        let mut agent = Agent::new(hyper, 14);
        let next = Tensor2::zeros(1, 5);
        let targets = agent.compute_targets(&[3.25], &[false], &next).unwrap();
        assert_eq!(targets[0], vec![3.25; 5]);
    }

    #[test]
    fn nonterminal_targets_bootstrap_from_target_net() {
        let mut agent = Agent::new(small_hyper(), 15);
        let n = agent.hyper.n_quantiles;
        let gamma = agent.hyper.gamma;
        let mut next = Tensor2::zeros(1, 5);
        next.row_mut(0).copy_from_slice(&[0.1, 0.9, 0.5, 0.0, 0.3]);

        // replicate the selection: argmax of online full-mean, bootstrap
        // from the target network's row at that action
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let online_out = agent.online.forward(&next, Mode::Eval, &mut rng).unwrap().0;
        let target_out = agent.target.forward(&next, Mode::Eval, &mut rng).unwrap().0;
        let mut best = 0usize;
        let mut best_mean = f64::NEG_INFINITY;
        for a in 0..agent.hyper.n_actions() {
            let mean: f64 =
                online_out.row(0)[a * n..(a + 1) * n].iter().sum::<f64>() / n as f64;
            if mean > best_mean {
                best_mean = mean;
                best = a;
            }
        }
        let expected: Vec<f64> = target_out.row(0)[best * n..(best + 1) * n]
            .iter()
            .map(|&q| 2.0 + gamma * q)
            .collect();

        let targets = agent.compute_targets(&[2.0], &[false], &next).unwrap();
        assert_eq!(targets[0], expected);
    }

    #[test]
    fn sync_interval_is_respected() {
        let hyper = small_hyper();
        let interval = hyper.target_sync_interval;
        let mut agent = Agent::new(hyper, 16);
        let mut buffer = ReplayBuffer::new(64, 0.6, 1e-3, 5);
        for i in 0..16 {
            buffer.push(TransitionRecord {
                state: vec![0.1 * i as f64; 5],
                action_index: i % 3,
                reward: (i as f64).sin(),
                next_state: vec![0.1 * (i + 1) as f64; 5],
                done: i % 8 == 7,
            });
        }
        for step in 1..=(interval + 5) {
            agent.train_step(&mut buffer, 0.5).unwrap();
            assert_eq!(agent.syncs(), step / interval);
        }
    }

    #[test]
    fn overfits_a_fixed_batch() {
        let mut agent = Agent::new(small_hyper(), 17);
        let mut buffer = ReplayBuffer::new(8, 0.6, 1e-3, 6);
        // one repeated terminal transition: the quantile rows must collapse
        // onto the constant reward
        for _ in 0..8 {
            buffer.push(TransitionRecord {
                state: vec![0.5, 0.2, 0.8, 0.1, 0.4],
                action_index: 1,
                reward: 1.0,
                next_state: vec![0.0; 5],
                done: true,
            });
        }
        let first = agent.train_step(&mut buffer, 1.0).unwrap().mean_loss;
        let mut last = first;
        for _ in 0..400 {
            last = agent.train_step(&mut buffer, 1.0).unwrap().mean_loss;
        }
        assert!(
            last < first * 0.1 && last < 0.05,
            "loss failed to shrink: first {first}, last {last}"
        );
    }

    #[test]
    fn checkpoint_roundtrip_preserves_policy() {
        let mut agent = Agent::new(small_hyper(), 18);
        let mut bytes = Vec::new();
        agent.save(&mut bytes, "balanced").unwrap();
        let (mut loaded, name) =
            Agent::load(&mut bytes.as_slice(), small_hyper(), 99).unwrap();
        assert_eq!(name, "balanced");

        let state = vec![0.7, 0.1, 0.3, 0.2, 0.9];
        let a = agent.forward_table(&state, Mode::Eval).unwrap();
        let b = loaded.forward_table(&state, Mode::Eval).unwrap();
        for action in 0..a.n_actions() {
            for (x, y) in a.row(action).iter().zip(b.row(action)) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
        }
    }

    #[test]
    fn checkpoint_mismatch_names_field() {
        let agent = Agent::new(small_hyper(), 19);
        let mut bytes = Vec::new();
        agent.save(&mut bytes, "balanced").unwrap();
        let mut other = small_hyper();
        other.n_quantiles = 7;
        let err = Agent::load(&mut bytes.as_slice(), other, 99).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("n_quantiles"), "got: {msg}");

        let err = Agent::load(&mut b"NOTMAGIC".as_slice(), small_hyper(), 99).unwrap_err();
        assert!(err.to_string().contains("checkpoint"));
    }
}
