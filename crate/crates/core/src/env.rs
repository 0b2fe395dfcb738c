//! Multi-equipment condition-based maintenance environment.
//!
//! Each unit carries a (condition, normalized temperature, normalized age)
//! triple; the flat state vector is the per-unit triples followed by a
//! scaled window of recent maintenance spend, dimension `3n + h`.

use std::collections::VecDeque;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

#[derive(Debug)]
pub enum EnvError {
    Config(String),
    EpisodeDone,
    NegativeAge(f64),
}

impl fmt::Display for EnvError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EnvError::Config(msg) => write!(f, "environment configuration error: {msg}"),
            EnvError::EpisodeDone => write!(f, "step called on a finished episode"),
            EnvError::NegativeAge(a) => write!(f, "negative equipment age: {a}"),
        }
    }
}

impl std::error::Error for EnvError {}

/// Static identity of one equipment unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EquipmentSpec {
    pub id: String,
    pub install_age_years: f64,
    /// Aging coefficient scaling failure probability growth with age.
    pub aging_coeff: f64,
    pub repair_cost: f64,
    pub replace_cost: f64,
    /// Baseline per-step probability of turning anomalous under no action.
    pub base_fail_prob: f64,
}

impl EquipmentSpec {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(0.0..=1.0).contains(&self.base_fail_prob) {
            return Err(EnvError::Config(format!(
                "{}: base_fail_prob {} outside [0,1]",
                self.id, self.base_fail_prob
            )));
        }
        if self.repair_cost >= self.replace_cost {
            return Err(EnvError::Config(format!(
                "{}: repair_cost {} must be below replace_cost {}",
                self.id, self.repair_cost, self.replace_cost
            )));
        }
        if self.aging_coeff < 0.0 {
            return Err(EnvError::Config(format!(
                "{}: aging_coeff {} must be >= 0",
                self.id, self.aging_coeff
            )));
        }
        if self.install_age_years < 0.0 {
            return Err(EnvError::Config(format!(
                "{}: install_age_years {} must be >= 0",
                self.id, self.install_age_years
            )));
        }
        Ok(())
    }
}

/// Dynamic per-unit state.
#[derive(Debug, Clone, PartialEq)]
pub struct EquipmentState {
    /// false = normal, true = anomalous.
    pub anomalous: bool,
    pub temp_norm: f64,
    pub age_norm: f64,
    pub age_years: f64,
}

/// Per-unit maintenance action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaintAction {
    DoNothing,
    Repair,
    Replace,
}

impl MaintAction {
    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(MaintAction::DoNothing),
            1 => Some(MaintAction::Repair),
            2 => Some(MaintAction::Replace),
            _ => None,
        }
    }

    pub fn code(self) -> u8 {
        match self {
            MaintAction::DoNothing => 0,
            MaintAction::Repair => 1,
            MaintAction::Replace => 2,
        }
    }

    pub fn cost(self, spec: &EquipmentSpec) -> f64 {
        match self {
            MaintAction::DoNothing => 0.0,
            MaintAction::Repair => spec.repair_cost,
            MaintAction::Replace => spec.replace_cost,
        }
    }
}

/// One action per unit; the joint space has cardinality 3^n.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JointAction {
    pub per_unit: Vec<MaintAction>,
}

impl JointAction {
    pub fn num_joint_actions(n: usize) -> usize {
        3usize.pow(n as u32)
    }

    /// Base-3 decode, unit 0 in the least significant digit.
    pub fn from_index(index: usize, n: usize) -> Self {
        let mut per_unit = Vec::with_capacity(n);
        let mut rest = index;
        for _ in 0..n {
            per_unit.push(MaintAction::from_code((rest % 3) as u8).expect("mod 3"));
            rest /= 3;
        }
        JointAction { per_unit }
    }

    pub fn to_index(&self) -> usize {
        self.per_unit
            .iter()
            .rev()
            .fold(0usize, |acc, a| acc * 3 + a.code() as usize)
    }

    pub fn all_do_nothing(n: usize) -> Self {
        JointAction {
            per_unit: vec![MaintAction::DoNothing; n],
        }
    }
}

/// Additive reward decomposition; `total` is always the exact sum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub risk: f64,
    pub cost: f64,
    pub leveling: f64,
    pub safety: f64,
    pub action: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(risk: f64, cost: f64, leveling: f64, safety: f64, action: f64) -> Self {
        RewardBreakdown {
            risk,
            cost,
            leveling,
            safety,
            action,
            total: risk + cost + leveling + safety + action,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvConfig {
    pub n_units: usize,
    pub history_len: usize,
    pub r_normal: f64,
    pub r_anomalous: f64,
    pub cost_weight_lambda: f64,
    /// Discount applied to maintenance cost when >= 2 units are serviced
    /// in the same step.
    pub sim_discount: f64,
    pub leveling_weight_alpha: f64,
    pub variance_threshold: f64,
    pub safety_weight: f64,
    pub action_weight: f64,
    pub episode_length: usize,
    pub lifecycle_horizon_years: f64,
    pub repair_success_prob: f64,
    pub seed: u64,
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if self.n_units == 0 {
            return Err(EnvError::Config("n_units must be >= 1".into()));
        }
        if !(self.r_normal > 0.0 && self.r_anomalous < 0.0) {
            return Err(EnvError::Config(format!(
                "expected r_normal > 0 > r_anomalous, got {} and {}",
                self.r_normal, self.r_anomalous
            )));
        }
        if !(0.0..1.0).contains(&self.sim_discount) {
            return Err(EnvError::Config(format!(
                "sim_discount {} outside [0,1)",
                self.sim_discount
            )));
        }
        if self.variance_threshold < 0.0 {
            return Err(EnvError::Config(format!(
                "variance_threshold {} must be >= 0",
                self.variance_threshold
            )));
        }
        if !(0.0..=1.0).contains(&self.repair_success_prob) {
            return Err(EnvError::Config(format!(
                "repair_success_prob {} outside [0,1]",
                self.repair_success_prob
            )));
        }
        if self.lifecycle_horizon_years <= 0.0 {
            return Err(EnvError::Config(
                "lifecycle_horizon_years must be > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        3 * self.n_units + self.history_len
    }
}

/// Lifecycle multiplier by installation-age class. Lower values raise
/// the estimated failure rate.
pub fn aging_multiplier(age_years: f64) -> Result<f64, EnvError> {
    if age_years < 0.0 {
        return Err(EnvError::NegativeAge(age_years));
    }
    Ok(if age_years <= 2.0 {
        1.05
    } else if age_years <= 10.0 {
        1.00
    } else if age_years <= 20.0 {
        0.95
    } else {
        0.85
    })
}

/// Probability that the unit is anomalous after applying `action`.
/// `repair_success_prob` comes from the environment config.
pub fn transition_prob(
    spec: &EquipmentSpec,
    state: &EquipmentState,
    action: MaintAction,
    repair_success_prob: f64,
) -> f64 {
    match (action, state.anomalous) {
        (MaintAction::Replace, _) => 0.0,
        (MaintAction::Repair, true) => 1.0 - repair_success_prob,
        (MaintAction::DoNothing, true) => 1.0,
        // do-nothing from normal, and repair of an already-normal unit
        (MaintAction::DoNothing, false) | (MaintAction::Repair, false) => {
            let mult = aging_multiplier(state.age_years).unwrap_or(1.0);
            let p = spec.base_fail_prob * (1.0 + spec.aging_coeff * state.age_years) / mult;
            p.clamp(0.0, 1.0)
        }
    }
}

/// Sum of the per-unit condition rewards on the realized conditions.
pub fn reward_risk(anomalous: &[bool], cfg: &EnvConfig) -> f64 {
    anomalous
        .iter()
        .map(|&a| if a { cfg.r_anomalous } else { cfg.r_normal })
        .sum()
}

/// Cost penalty with the simultaneous-maintenance discount; the discount
/// applies only when two or more units receive a non-zero action.
pub fn reward_cost(action: &JointAction, specs: &[EquipmentSpec], cfg: &EnvConfig) -> f64 {
    let spend: f64 = action
        .per_unit
        .iter()
        .zip(specs)
        .map(|(a, s)| a.cost(s))
        .sum();
    let active = action
        .per_unit
        .iter()
        .filter(|a| **a != MaintAction::DoNothing)
        .count();
    let factor = if active >= 2 {
        1.0 - cfg.sim_discount
    } else {
        1.0
    };
    -cfg.cost_weight_lambda * spend * factor
}

/// Population variance of the window.
pub fn cost_variance(hist: &[f64]) -> f64 {
    if hist.is_empty() {
        return 0.0;
    }
    let mean = hist.iter().sum::<f64>() / hist.len() as f64;
    hist.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / hist.len() as f64
}

/// Penalty on spend variance exceeding the threshold.
pub fn reward_leveling(hist: &[f64], cfg: &EnvConfig) -> f64 {
    -cfg.leveling_weight_alpha * (cost_variance(hist) - cfg.variance_threshold).max(0.0)
}

/// Safety bonus proportional to the fraction of normal units.
pub fn reward_safety(anomalous: &[bool], cfg: &EnvConfig) -> f64 {
    if anomalous.is_empty() {
        return 0.0;
    }
    let normal = anomalous.iter().filter(|a| !**a).count() as f64;
    cfg.safety_weight * normal / anomalous.len() as f64
}

/// Appropriateness bonus: +1 per unit for maintaining an anomalous unit
/// or leaving a normal unit alone, judged on the pre-transition condition.
pub fn reward_action(anomalous_before: &[bool], action: &JointAction, cfg: &EnvConfig) -> f64 {
    anomalous_before
        .iter()
        .zip(&action.per_unit)
        .map(|(&anom, &a)| {
            let appropriate = if anom {
                a == MaintAction::Repair || a == MaintAction::Replace
            } else {
                a == MaintAction::DoNothing
            };
            if appropriate { cfg.action_weight } else { 0.0 }
        })
        .sum()
}

/// Flat encoding: per-unit triples in unit order, then the spend history
/// oldest-to-newest scaled by 1/max(replace cost).
pub fn encode_state(units: &[EquipmentState], hist: &[f64], cost_scale: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(3 * units.len() + hist.len());
    for u in units {
        out.push(if u.anomalous { 1.0 } else { 0.0 });
        out.push(u.temp_norm);
        out.push(u.age_norm);
    }
    for &h in hist {
        out.push(h * cost_scale);
    }
    out
}

/// Per-step observables surfaced for logging.
#[derive(Debug, Clone, Serialize)]
pub struct StepInfo {
    pub anomalous_before: Vec<bool>,
    pub anomalous_after: Vec<bool>,
    pub spend: f64,
    pub transition_probs: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub state: Vec<f64>,
    pub reward: RewardBreakdown,
    pub done: bool,
    pub info: StepInfo,
}

const MONTHS_PER_YEAR: f64 = 12.0;

#[derive(Debug, Clone)]
pub struct Environment {
    cfg: EnvConfig,
    specs: Vec<EquipmentSpec>,
    units: Vec<EquipmentState>,
    history: VecDeque<f64>,
    step_count: usize,
    done: bool,
    started: bool,
    rng: ChaCha8Rng,
    max_replace_cost: f64,
}

impl Environment {
    pub fn new(cfg: EnvConfig, specs: Vec<EquipmentSpec>) -> Result<Self, EnvError> {
        cfg.validate()?;
        if specs.len() != cfg.n_units {
            return Err(EnvError::Config(format!(
                "{} equipment specs for n_units = {}",
                specs.len(),
                cfg.n_units
            )));
        }
        for s in &specs {
            s.validate()?;
        }
        let max_replace_cost = specs
            .iter()
            .map(|s| s.replace_cost)
            .fold(f64::MIN, f64::max);
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Ok(Environment {
            units: Vec::new(),
            history: VecDeque::new(),
            step_count: 0,
            done: true,
            started: false,
            rng,
            max_replace_cost,
            cfg,
            specs,
        })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn specs(&self) -> &[EquipmentSpec] {
        &self.specs
    }

    fn draw_temp(&mut self, anomalous: bool) -> f64 {
        // warmer and noisier when anomalous
        let (mean, sd) = if anomalous { (0.70, 0.08) } else { (0.40, 0.05) };
        let t = mean + sd * sample_std_normal(&mut self.rng);
        t.clamp(0.0, 1.0)
    }

    fn age_norm(&self, age_years: f64) -> f64 {
        (age_years / self.cfg.lifecycle_horizon_years).min(1.0)
    }

    pub fn reset(&mut self) -> Vec<f64> {
        self.units.clear();
        for i in 0..self.cfg.n_units {
            let age = self.specs[i].install_age_years;
            let temp = self.draw_temp(false);
            self.units.push(EquipmentState {
                anomalous: false,
                temp_norm: temp,
                age_norm: self.age_norm(age),
                age_years: age,
            });
        }
        self.history = std::iter::repeat(0.0).take(self.cfg.history_len).collect();
        self.step_count = 0;
        self.done = false;
        self.started = true;
        self.encode()
    }

    pub fn encode(&self) -> Vec<f64> {
        let scale = if self.max_replace_cost > 0.0 {
            1.0 / self.max_replace_cost
        } else {
            1.0
        };
        let hist: Vec<f64> = self.history.iter().copied().collect();
        encode_state(&self.units, &hist, scale)
    }

    /// Transition probability with the environment's repair success rate.
    pub fn unit_transition_prob(&self, idx: usize, action: MaintAction) -> f64 {
        transition_prob(
            &self.specs[idx],
            &self.units[idx],
            action,
            self.cfg.repair_success_prob,
        )
    }

    /// Scenario injection for tests and what-if analysis.
    pub fn force_condition(&mut self, idx: usize, anomalous: bool) {
        self.units[idx].anomalous = anomalous;
    }

    pub fn step(&mut self, action: &JointAction) -> Result<StepOutcome, EnvError> {
        if !self.started || self.done {
            return Err(EnvError::EpisodeDone);
        }
        if action.per_unit.len() != self.cfg.n_units {
            return Err(EnvError::Config(format!(
                "joint action has {} entries for {} units",
                action.per_unit.len(),
                self.cfg.n_units
            )));
        }

        let anomalous_before: Vec<bool> = self.units.iter().map(|u| u.anomalous).collect();
        let mut transition_probs = Vec::with_capacity(self.cfg.n_units);
        let mut anomalous_after = Vec::with_capacity(self.cfg.n_units);

        for i in 0..self.cfg.n_units {
            let a = action.per_unit[i];
            let p = self.unit_transition_prob(i, a);
            transition_probs.push(p);
            let next_anomalous = self.rng.gen::<f64>() < p;
            anomalous_after.push(next_anomalous);

            let base_age = if a == MaintAction::Replace {
                0.0
            } else {
                self.units[i].age_years
            };
            let new_age = base_age + 1.0 / MONTHS_PER_YEAR;
            let temp = self.draw_temp(next_anomalous);
            let unit = &mut self.units[i];
            unit.anomalous = next_anomalous;
            unit.age_years = new_age;
            unit.temp_norm = temp;
        }
        for i in 0..self.cfg.n_units {
            self.units[i].age_norm = self.age_norm(self.units[i].age_years);
        }

        let spend: f64 = action
            .per_unit
            .iter()
            .zip(&self.specs)
            .map(|(a, s)| a.cost(s))
            .sum();
        if self.cfg.history_len > 0 {
            self.history.pop_front();
            self.history.push_back(spend);
        }
        let hist: Vec<f64> = self.history.iter().copied().collect();

        let reward = RewardBreakdown::new(
            reward_risk(&anomalous_after, &self.cfg),
            reward_cost(action, &self.specs, &self.cfg),
            reward_leveling(&hist, &self.cfg),
            reward_safety(&anomalous_after, &self.cfg),
            reward_action(&anomalous_before, action, &self.cfg),
        );

        self.step_count += 1;
        self.done = self.step_count >= self.cfg.episode_length;

        Ok(StepOutcome {
            state: self.encode(),
            reward,
            done: self.done,
            info: StepInfo {
                anomalous_before,
                anomalous_after,
                spend,
                transition_probs,
            },
        })
    }
}

fn sample_std_normal(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per sample, the second draw is discarded.
    let u1: f64 = rng.gen::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
