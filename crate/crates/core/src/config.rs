//! Run configuration: TOML schema mirroring the environment, equipment,
//! agent, and training settings, with the three-pump testbed as default.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::env::{EnvConfig, EquipmentSpec};

#[derive(Debug)]
pub enum ConfigError {
    Io(String),
    Parse(String),
    Invalid(String),
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io(m) => write!(f, "config io error: {m}"),
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "invalid config: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSettings {
    pub learning_rate: f64,
    pub gamma: f64,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub n_quantiles: usize,
    pub kappa: f64,
    pub sigma_init: f64,
    pub dropout: f64,
    pub target_sync_interval: u64,
    pub warmup_transitions: usize,
    pub double_dqn: bool,
    pub epsilon_greedy: f64,
    pub trunk_widths: Vec<usize>,
    pub head_hidden: Vec<usize>,
    pub per_alpha: f64,
    pub per_beta_start: f64,
    pub per_beta_end: f64,
    pub per_epsilon: f64,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings {
            learning_rate: 5e-4,
            gamma: 0.95,
            batch_size: 128,
            buffer_capacity: 200_000,
            n_quantiles: 51,
            kappa: 1.0,
            sigma_init: 0.5,
            dropout: 0.0,
            target_sync_interval: 500,
            warmup_transitions: 5_000,
            double_dqn: true,
            epsilon_greedy: 0.0,
            trunk_widths: vec![256, 128, 64],
            head_hidden: vec![64, 32],
            per_alpha: 0.6,
            per_beta_start: 0.4,
            per_beta_end: 1.0,
            per_epsilon: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    pub episodes: usize,
    /// Episodes at the end of a run used for summary statistics.
    pub eval_tail: usize,
    pub early_stop_window: usize,
    /// Relative improvement of the window mean below which training stops.
    pub early_stop_min_improvement: f64,
    pub early_stop_enabled: bool,
}

impl Default for TrainingSettings {
    fn default() -> Self {
        TrainingSettings {
            episodes: 3_000,
            eval_tail: 100,
            early_stop_window: 200,
            early_stop_min_improvement: 0.01,
            early_stop_enabled: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub env: EnvConfig,
    pub equipment: Vec<EquipmentSpec>,
    #[serde(default)]
    pub agent: AgentSettings,
    #[serde(default)]
    pub training: TrainingSettings,
}

impl Default for Config {
    /// The three-pump testbed: a legacy dosing pump, a mature cooling
    /// water pump, and a near-new dosing pump.
    fn default() -> Self {
        Config {
            env: EnvConfig {
                n_units: 3,
                history_len: 12,
                r_normal: 20.0,
                r_anomalous: -10.0,
                cost_weight_lambda: 0.1,
                sim_discount: 0.1,
                leveling_weight_alpha: 1.0,
                variance_threshold: 15.0,
                safety_weight: 10.0,
                action_weight: 5.0,
                episode_length: 60,
                lifecycle_horizon_years: 25.0,
                repair_success_prob: 0.9,
                seed: 0,
            },
            equipment: vec![
                EquipmentSpec {
                    id: "CP-1".into(),
                    install_age_years: 19.7,
                    aging_coeff: 0.018,
                    repair_cost: 50.0,
                    replace_cost: 200.0,
                    base_fail_prob: 0.06,
                },
                EquipmentSpec {
                    id: "CDP-0".into(),
                    install_age_years: 3.0,
                    aging_coeff: 0.005,
                    repair_cost: 80.0,
                    replace_cost: 400.0,
                    base_fail_prob: 0.04,
                },
                EquipmentSpec {
                    id: "CP-2".into(),
                    install_age_years: 0.5,
                    aging_coeff: 0.003,
                    repair_cost: 40.0,
                    replace_cost: 150.0,
                    base_fail_prob: 0.03,
                },
            ],
            agent: AgentSettings::default(),
            training: TrainingSettings::default(),
        }
    }
}

impl Config {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        // toml errors carry line/column context in their Display output
        let cfg: Config = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::Io(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.env
            .validate()
            .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        if self.equipment.len() != self.env.n_units {
            return Err(ConfigError::Invalid(format!(
                "{} equipment entries for n_units = {}",
                self.equipment.len(),
                self.env.n_units
            )));
        }
        for spec in &self.equipment {
            spec.validate()
                .map_err(|e| ConfigError::Invalid(e.to_string()))?;
        }
        if self.agent.n_quantiles == 0 {
            return Err(ConfigError::Invalid("n_quantiles must be >= 1".into()));
        }
        if self.agent.head_hidden.len() != 2 {
            return Err(ConfigError::Invalid(
                "head_hidden must list exactly two widths".into(),
            ));
        }
        if self.agent.trunk_widths.is_empty() {
            return Err(ConfigError::Invalid("trunk_widths must be non-empty".into()));
        }
        if self.agent.batch_size == 0 || self.agent.buffer_capacity < self.agent.batch_size {
            return Err(ConfigError::Invalid(
                "buffer_capacity must be >= batch_size >= 1".into(),
            ));
        }
        if self.agent.target_sync_interval == 0 {
            return Err(ConfigError::Invalid(
                "target_sync_interval must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_roundtrips_through_toml() {
        let cfg = Config::default();
        let text = cfg.to_toml_string();
        let back = Config::from_toml_str(&text).unwrap();
        assert_eq!(back.env.n_units, 3);
        assert_eq!(back.equipment[0].id, "CP-1");
        assert_eq!(back.agent.n_quantiles, 51);
    }

    #[test]
    fn parse_error_carries_line_context() {
        let err = Config::from_toml_str("[env]\nn_units = \"three\"\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 2") || msg.contains("2,"), "got: {msg}");
    }

    #[test]
    fn mismatched_equipment_count_rejected() {
        let mut cfg = Config::default();
        cfg.equipment.pop();
        assert!(cfg.validate().is_err());
    }
}
