//! QR-DQN agent: noisy dueling quantile network, risk-profiled action
//! selection, quantile Huber loss with Double-DQN targets, and target
//! synchronization.

mod core;
mod loss;
mod network;
mod noisy;
mod risk;

use std::fmt;

use crate::numerics::NumericsError;
use crate::replay::ReplayError;

pub use self::core::{Agent, AgentHyper, TrainStats};
pub use loss::quantile_huber_loss;
pub use network::{NetTape, QuantileNetwork, QuantileTable};
pub use noisy::NoisyDense;
pub use risk::{risk_value, risk_values, RiskProfile};

#[derive(Debug)]
pub enum AgentError {
    Dimension(String),
    Config(String),
    Numerics(NumericsError),
    Replay(ReplayError),
    NonFiniteLoss,
    Checkpoint(String),
}

impl fmt::Display for AgentError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AgentError::Dimension(m) => write!(f, "dimension error: {m}"),
            AgentError::Config(m) => write!(f, "agent configuration error: {m}"),
            AgentError::Numerics(e) => write!(f, "numerics error: {e}"),
            AgentError::Replay(e) => write!(f, "replay error: {e}"),
            AgentError::NonFiniteLoss => write!(f, "training aborted: non-finite loss"),
            AgentError::Checkpoint(m) => write!(f, "checkpoint error: {m}"),
        }
    }
}

impl std::error::Error for AgentError {}

impl From<NumericsError> for AgentError {
    fn from(e: NumericsError) -> Self {
        AgentError::Numerics(e)
    }
}

impl From<ReplayError> for AgentError {
    fn from(e: ReplayError) -> Self {
        AgentError::Replay(e)
    }
}

/// Quantile midpoints `(2i - 1) / 2N` for `i = 1..N`; strictly increasing,
/// inside (0,1), symmetric about one half.
pub fn quantile_midpoints(n: usize) -> Vec<f64> {
    (1..=n).map(|i| (2 * i - 1) as f64 / (2 * n) as f64).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn midpoints_properties() {
        for n in [1usize, 2, 17, 49, 51] {
            let m = quantile_midpoints(n);
            assert_eq!(m.len(), n);
            assert!(m.windows(2).all(|w| w[0] < w[1]));
            assert!(m.iter().all(|&t| t > 0.0 && t < 1.0));
            // symmetric about 0.5
            for i in 0..n {
                assert!((m[i] + m[n - 1 - i] - 1.0).abs() < 1e-12);
            }
        }
    }
}
