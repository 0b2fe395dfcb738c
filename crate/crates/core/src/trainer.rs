//! Episode orchestration: named strategies, the training loop, early
//! stopping, stability and ROI scoring, and multi-scenario comparison.

use std::fmt;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentError, AgentHyper, RiskProfile};
use crate::config::Config;
use crate::env::{EnvError, Environment, JointAction, MaintAction, RewardBreakdown};
use crate::numerics::Mode;
use crate::replay::{ReplayBuffer, TransitionRecord};

#[derive(Debug)]
pub enum TrainError {
    Env(EnvError),
    Agent(AgentError),
    Domain(String),
    /// Training aborted mid-run; partial metrics are preserved.
    Aborted {
        message: String,
        partial: Vec<EpisodeMetrics>,
    },
}

impl fmt::Display for TrainError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrainError::Env(e) => write!(f, "{e}"),
            TrainError::Agent(e) => write!(f, "{e}"),
            TrainError::Domain(m) => write!(f, "{m}"),
            TrainError::Aborted { message, partial } => {
                write!(f, "training aborted after {} episodes: {message}", partial.len())
            }
        }
    }
}

impl std::error::Error for TrainError {}

impl From<EnvError> for TrainError {
    fn from(e: EnvError) -> Self {
        TrainError::Env(e)
    }
}

impl From<AgentError> for TrainError {
    fn from(e: AgentError) -> Self {
        TrainError::Agent(e)
    }
}

/// Named bundle of risk profile, reward-weight overrides, and budget.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub name: String,
    pub risk_profile: RiskProfile,
    pub lambda_mult: f64,
    pub safety_mult: f64,
    pub episode_budget: usize,
    pub early_stop: Option<EarlyStop>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EarlyStop {
    pub window: usize,
    pub min_improvement: f64,
}

pub const STRATEGY_NAMES: [&str; 3] = ["safety-first", "balanced", "cost-efficient"];

/// The three declared strategies. Budget and early stopping come from the
/// training settings.
pub fn strategy_by_name(name: &str, cfg: &Config) -> Option<StrategyConfig> {
    let early_stop = if cfg.training.early_stop_enabled {
        Some(EarlyStop {
            window: cfg.training.early_stop_window,
            min_improvement: cfg.training.early_stop_min_improvement,
        })
    } else {
        None
    };
    let base = StrategyConfig {
        name: name.to_string(),
        risk_profile: RiskProfile::FullMean,
        lambda_mult: 1.0,
        safety_mult: 1.0,
        episode_budget: cfg.training.episodes,
        early_stop,
    };
    match name {
        "safety-first" => Some(StrategyConfig {
            risk_profile: RiskProfile::LowerTail { cutoff: 0.25 },
            lambda_mult: 0.5,
            safety_mult: 1.5,
            ..base
        }),
        "balanced" => Some(base),
        "cost-efficient" => Some(StrategyConfig {
            risk_profile: RiskProfile::UpperTail { cutoff: 0.75 },
            lambda_mult: 2.0,
            safety_mult: 0.5,
            ..base
        }),
        _ => None,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeMetrics {
    pub episode: usize,
    pub total_reward: f64,
    pub total_cost: f64,
    /// Unit-steps spent anomalous (post-transition).
    pub anomalous_steps: usize,
    pub components: RewardBreakdown,
    /// Maintenance actions issued to units that were anomalous.
    pub maint_on_anomalous: usize,
    /// Unit-steps where a unit entered the step anomalous.
    pub anomalous_before_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub strategy: String,
    pub episodes_run: usize,
    pub avg_reward_tail: f64,
    pub reward_std_tail: f64,
    pub cv_percent: f64,
    pub stability_score: f64,
    pub avg_cost_tail: f64,
    pub total_cost: f64,
    pub roi: Option<f64>,
    pub stopped_early: bool,
}

#[derive(Debug)]
pub struct TrainingRun {
    pub summary: RunSummary,
    pub episodes: Vec<EpisodeMetrics>,
    pub agent: Agent,
}

/// Stability rating in [0, 100]: piecewise linear inside the CV bands,
/// continuous at the 10/20/50 boundaries, 100 at CV = 0.
pub fn stability_score(cv_percent: f64) -> Result<f64, TrainError> {
    if cv_percent < 0.0 || !cv_percent.is_finite() {
        return Err(TrainError::Domain(format!(
            "coefficient of variation must be finite and >= 0, got {cv_percent}"
        )));
    }
    Ok(if cv_percent < 10.0 {
        100.0 - cv_percent
    } else if cv_percent < 20.0 {
        90.0 - 2.0 * (cv_percent - 10.0)
    } else if cv_percent < 50.0 {
        70.0 - (4.0 / 3.0) * (cv_percent - 20.0)
    } else {
        (30.0 - 0.6 * (cv_percent - 50.0)).max(0.0)
    })
}

/// Cost efficiency ratio: average episode reward per unit of average
/// episode maintenance spend.
pub fn roi(avg_reward_tail: f64, avg_cost_tail: f64) -> Result<f64, TrainError> {
    if avg_cost_tail <= 0.0 {
        return Err(TrainError::Domain(format!(
            "ROI undefined for non-positive cost {avg_cost_tail}"
        )));
    }
    Ok(avg_reward_tail / avg_cost_tail)
}

/// True when training should stop: the mean reward of the latest window
/// improved over the previous window by less than `min_improvement`
/// (relative). Checked only on window boundaries, never before two
/// full windows exist.
pub fn early_stop_check(rewards: &[f64], window: usize, min_improvement: f64) -> bool {
    if window == 0 || rewards.len() < 2 * window || rewards.len() % window != 0 {
        return false;
    }
    let n = rewards.len();
    let last: f64 = rewards[n - window..].iter().sum::<f64>() / window as f64;
    let prev: f64 = rewards[n - 2 * window..n - window].iter().sum::<f64>() / window as f64;
    let improvement = (last - prev) / prev.abs().max(1e-12);
    improvement < min_improvement
}

fn summarize(
    strategy: &str,
    episodes: &[EpisodeMetrics],
    eval_tail: usize,
    stopped_early: bool,
) -> Result<RunSummary, TrainError> {
    if episodes.is_empty() {
        return Ok(RunSummary {
            strategy: strategy.to_string(),
            episodes_run: 0,
            avg_reward_tail: 0.0,
            reward_std_tail: 0.0,
            cv_percent: 0.0,
            stability_score: stability_score(0.0)?,
            avg_cost_tail: 0.0,
            total_cost: 0.0,
            roi: None,
            stopped_early,
        });
    }
    let tail_len = eval_tail.max(1).min(episodes.len());
    let tail = &episodes[episodes.len() - tail_len..];
    let avg_reward = tail.iter().map(|e| e.total_reward).sum::<f64>() / tail_len as f64;
    let var = tail
        .iter()
        .map(|e| (e.total_reward - avg_reward).powi(2))
        .sum::<f64>()
        / tail_len as f64;
    let std = var.sqrt();
    let cv = if avg_reward != 0.0 {
        (std / avg_reward.abs()) * 100.0
    } else {
        0.0
    };
    let avg_cost = tail.iter().map(|e| e.total_cost).sum::<f64>() / tail_len as f64;
    let total_cost = episodes.iter().map(|e| e.total_cost).sum::<f64>();
    Ok(RunSummary {
        strategy: strategy.to_string(),
        episodes_run: episodes.len(),
        avg_reward_tail: avg_reward,
        reward_std_tail: std,
        cv_percent: cv,
        stability_score: stability_score(cv)?,
        avg_cost_tail: avg_cost,
        total_cost,
        roi: roi(avg_reward, avg_cost).ok(),
        stopped_early,
    })
}

fn agent_hyper(cfg: &Config) -> AgentHyper {
    AgentHyper {
        n_units: cfg.env.n_units,
        history_len: cfg.env.history_len,
        n_quantiles: cfg.agent.n_quantiles,
        trunk_widths: cfg.agent.trunk_widths.clone(),
        head_hidden: (cfg.agent.head_hidden[0], cfg.agent.head_hidden[1]),
        learning_rate: cfg.agent.learning_rate,
        gamma: cfg.agent.gamma,
        batch_size: cfg.agent.batch_size,
        kappa: cfg.agent.kappa,
        sigma_init: cfg.agent.sigma_init,
        dropout: cfg.agent.dropout,
        target_sync_interval: cfg.agent.target_sync_interval,
        warmup_transitions: cfg.agent.warmup_transitions,
        double_dqn: cfg.agent.double_dqn,
        epsilon_greedy: cfg.agent.epsilon_greedy,
    }
}

/// Environment with the strategy's reward-weight overrides applied.
pub fn build_env(cfg: &Config, strategy: &StrategyConfig, seed: u64) -> Result<Environment, EnvError> {
    let mut env_cfg = cfg.env.clone();
    env_cfg.cost_weight_lambda *= strategy.lambda_mult;
    env_cfg.safety_weight *= strategy.safety_mult;
    env_cfg.seed = seed;
    Environment::new(env_cfg, cfg.equipment.clone())
}

fn record_episode(
    episode: usize,
    reward_sum: RewardBreakdown,
    total_cost: f64,
    anomalous_steps: usize,
    maint_on_anomalous: usize,
    anomalous_before_steps: usize,
) -> EpisodeMetrics {
    EpisodeMetrics {
        episode,
        total_reward: reward_sum.total,
        total_cost,
        anomalous_steps,
        components: reward_sum,
        maint_on_anomalous,
        anomalous_before_steps,
    }
}

fn accumulate(sum: &mut RewardBreakdown, r: &RewardBreakdown) {
    sum.risk += r.risk;
    sum.cost += r.cost;
    sum.leveling += r.leveling;
    sum.safety += r.safety;
    sum.action += r.action;
    sum.total += r.total;
}

const ZERO_BREAKDOWN: RewardBreakdown = RewardBreakdown {
    risk: 0.0,
    cost: 0.0,
    leveling: 0.0,
    safety: 0.0,
    action: 0.0,
    total: 0.0,
};

/// Full training loop: reset, act, step, store, learn, sync. Metrics are
/// recorded per episode; the summary covers the final evaluation tail.
pub fn run_training(
    cfg: &Config,
    strategy: &StrategyConfig,
    seed: u64,
) -> Result<TrainingRun, TrainError> {
    let mut env = build_env(cfg, strategy, seed)?;
    let mut agent = Agent::new(agent_hyper(cfg), seed.wrapping_add(1));
    let mut buffer = ReplayBuffer::new(
        cfg.agent.buffer_capacity,
        cfg.agent.per_alpha,
        cfg.agent.per_epsilon,
        seed.wrapping_add(2),
    );
    let n = cfg.env.n_units;
    let budget = strategy.episode_budget;
    let mut episodes: Vec<EpisodeMetrics> = Vec::with_capacity(budget);
    let mut stopped_early = false;

    for ep in 0..budget {
        let beta = beta_schedule(cfg.agent.per_beta_start, cfg.agent.per_beta_end, ep, budget);
        let mut state = env.reset();
        let mut reward_sum = ZERO_BREAKDOWN;
        let mut total_cost = 0.0;
        let mut anomalous_steps = 0usize;
        let mut maint_on_anomalous = 0usize;
        let mut anomalous_before_steps = 0usize;
        loop {
            let action_index = agent
                .select_action(&state, strategy.risk_profile, Mode::Train)
                .map_err(|e| abort(e.to_string(), &episodes))?;
            let action = JointAction::from_index(action_index, n);
            let out = env.step(&action).map_err(|e| abort(e.to_string(), &episodes))?;

            for (i, &was_anom) in out.info.anomalous_before.iter().enumerate() {
                if was_anom {
                    anomalous_before_steps += 1;
                    if action.per_unit[i] != MaintAction::DoNothing {
                        maint_on_anomalous += 1;
                    }
                }
            }
            anomalous_steps += out.info.anomalous_after.iter().filter(|a| **a).count();
            total_cost += out.info.spend;
            accumulate(&mut reward_sum, &out.reward);

            buffer.push(TransitionRecord {
                state: std::mem::take(&mut state),
                action_index,
                reward: out.reward.total,
                next_state: out.state.clone(),
                done: out.done,
            });
            state = out.state;

            if buffer.len() >= cfg.agent.warmup_transitions {
                agent
                    .train_step(&mut buffer, beta)
                    .map_err(|e| abort(e.to_string(), &episodes))?;
            }
            if out.done {
                break;
            }
        }
        episodes.push(record_episode(
            ep,
            reward_sum,
            total_cost,
            anomalous_steps,
            maint_on_anomalous,
            anomalous_before_steps,
        ));

        if let Some(es) = &strategy.early_stop {
            let rewards: Vec<f64> = episodes.iter().map(|e| e.total_reward).collect();
            if early_stop_check(&rewards, es.window, es.min_improvement) {
                stopped_early = true;
                break;
            }
        }
    }

    let summary = summarize(&strategy.name, &episodes, cfg.training.eval_tail, stopped_early)?;
    Ok(TrainingRun {
        summary,
        episodes,
        agent,
    })
}

fn abort(message: String, episodes: &[EpisodeMetrics]) -> TrainError {
    TrainError::Aborted {
        message,
        partial: episodes.to_vec(),
    }
}

fn beta_schedule(start: f64, end: f64, episode: usize, budget: usize) -> f64 {
    if budget <= 1 {
        return end;
    }
    let frac = episode as f64 / (budget - 1) as f64;
    start + (end - start) * frac.clamp(0.0, 1.0)
}

/// Greedy (eval-mode, noise-free) rollouts of a trained agent.
pub fn run_evaluation(
    cfg: &Config,
    strategy: &StrategyConfig,
    agent: &mut Agent,
    episodes: usize,
    seed: u64,
) -> Result<(RunSummary, Vec<EpisodeMetrics>), TrainError> {
    let mut env = build_env(cfg, strategy, seed)?;
    let n = cfg.env.n_units;
    let mut metrics = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        let mut state = env.reset();
        let mut reward_sum = ZERO_BREAKDOWN;
        let mut total_cost = 0.0;
        let mut anomalous_steps = 0usize;
        let mut maint_on_anomalous = 0usize;
        let mut anomalous_before_steps = 0usize;
        loop {
            let action_index = agent.select_action(&state, strategy.risk_profile, Mode::Eval)?;
            let action = JointAction::from_index(action_index, n);
            let out = env.step(&action)?;
            for (i, &was_anom) in out.info.anomalous_before.iter().enumerate() {
                if was_anom {
                    anomalous_before_steps += 1;
                    if action.per_unit[i] != MaintAction::DoNothing {
                        maint_on_anomalous += 1;
                    }
                }
            }
            anomalous_steps += out.info.anomalous_after.iter().filter(|a| **a).count();
            total_cost += out.info.spend;
            accumulate(&mut reward_sum, &out.reward);
            state = out.state;
            if out.done {
                break;
            }
        }
        metrics.push(record_episode(
            ep,
            reward_sum,
            total_cost,
            anomalous_steps,
            maint_on_anomalous,
            anomalous_before_steps,
        ));
    }
    let summary = summarize(&strategy.name, &metrics, metrics.len().max(1), false)?;
    Ok((summary, metrics))
}

/// Uniform-random policy baseline over the same environment.
pub fn run_random_policy(
    cfg: &Config,
    strategy: &StrategyConfig,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeMetrics>, TrainError> {
    let mut env = build_env(cfg, strategy, seed)?;
    let n = cfg.env.n_units;
    let n_actions = JointAction::num_joint_actions(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(77));
    let mut metrics = Vec::with_capacity(episodes);
    for ep in 0..episodes {
        env.reset();
        let mut reward_sum = ZERO_BREAKDOWN;
        let mut total_cost = 0.0;
        let mut anomalous_steps = 0usize;
        loop {
            let action = JointAction::from_index(rng.gen_range(0..n_actions), n);
            let out = env.step(&action)?;
            anomalous_steps += out.info.anomalous_after.iter().filter(|a| **a).count();
            total_cost += out.info.spend;
            accumulate(&mut reward_sum, &out.reward);
            if out.done {
                break;
            }
        }
        metrics.push(record_episode(ep, reward_sum, total_cost, anomalous_steps, 0, 0));
    }
    Ok(metrics)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScenarioRow {
    pub strategy: String,
    pub summary: Option<RunSummary>,
    pub error: Option<String>,
    /// Fraction of anomalous unit-steps answered with repair/replace.
    pub maintenance_rate_on_anomalous: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub rows: Vec<ScenarioRow>,
    pub rank_by_roi: Vec<String>,
    pub rank_by_stability: Vec<String>,
    pub rank_by_reward: Vec<String>,
    pub recommendation: Option<String>,
}

pub struct Comparison {
    pub runs: Vec<(StrategyConfig, Result<TrainingRun, TrainError>)>,
    pub report: ComparisonReport,
}

/// Runs every strategy independently (one thread each, seeds base + index)
/// and ranks the outcomes. A failed run is reported and does not sink the
/// others.
pub fn compare_scenarios(
    cfg: &Config,
    strategies: &[StrategyConfig],
    base_seed: u64,
) -> Comparison {
    let results: Vec<(StrategyConfig, Result<TrainingRun, TrainError>)> =
        std::thread::scope(|scope| {
            let handles: Vec<_> = strategies
                .iter()
                .enumerate()
                .map(|(i, strategy)| {
                    let seed = base_seed.wrapping_add(i as u64);
                    scope.spawn(move || {
                        let result = run_training(cfg, strategy, seed);
                        (strategy.clone(), result)
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("run thread")).collect()
        });

    let report = build_report(&results);
    Comparison {
        runs: results,
        report,
    }
}

pub fn maintenance_rate_on_anomalous(episodes: &[EpisodeMetrics]) -> Option<f64> {
    let before: usize = episodes.iter().map(|e| e.anomalous_before_steps).sum();
    if before == 0 {
        return None;
    }
    let maint: usize = episodes.iter().map(|e| e.maint_on_anomalous).sum();
    Some(maint as f64 / before as f64)
}

fn build_report(results: &[(StrategyConfig, Result<TrainingRun, TrainError>)]) -> ComparisonReport {
    let rows: Vec<ScenarioRow> = results
        .iter()
        .map(|(s, r)| match r {
            Ok(run) => ScenarioRow {
                strategy: s.name.clone(),
                summary: Some(run.summary.clone()),
                error: None,
                maintenance_rate_on_anomalous: maintenance_rate_on_anomalous(&run.episodes),
            },
            Err(e) => ScenarioRow {
                strategy: s.name.clone(),
                summary: None,
                error: Some(e.to_string()),
                maintenance_rate_on_anomalous: None,
            },
        })
        .collect();

    let rank = |key: &dyn Fn(&RunSummary) -> f64| -> Vec<String> {
        let mut ranked: Vec<(&ScenarioRow, f64)> = rows
            .iter()
            .filter_map(|r| r.summary.as_ref().map(|s| (r, key(s))))
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
        ranked.into_iter().map(|(r, _)| r.strategy.clone()).collect()
    };

    let rank_by_roi = rank(&|s: &RunSummary| s.roi.unwrap_or(f64::NEG_INFINITY));
    let rank_by_stability = rank(&|s: &RunSummary| s.stability_score);
    let rank_by_reward = rank(&|s: &RunSummary| s.avg_reward_tail);
    let recommendation = rank_by_roi.first().cloned();

    ComparisonReport {
        rows,
        rank_by_roi,
        rank_by_stability,
        rank_by_reward,
        recommendation,
    }
}

/// Human-readable comparison table mirroring the summary columns.
pub fn format_report(report: &ComparisonReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<16} {:>12} {:>10} {:>14} {:>12} {:>8}\n",
        "Strategy", "AvgReward", "Stability", "TotalCost", "AvgCost", "ROI"
    ));
    for row in &report.rows {
        match (&row.summary, &row.error) {
            (Some(s), _) => {
                let roi_text = s
                    .roi
                    .map(|r| format!("{r:.2}"))
                    .unwrap_or_else(|| "n/a".to_string());
                out.push_str(&format!(
                    "{:<16} {:>12.2} {:>10.2} {:>14.2} {:>12.2} {:>8}\n",
                    s.strategy, s.avg_reward_tail, s.stability_score, s.total_cost, s.avg_cost_tail, roi_text
                ));
            }
            (None, Some(e)) => {
                out.push_str(&format!("{:<16} FAILED: {e}\n", row.strategy));
            }
            (None, None) => unreachable!("row has neither summary nor error"),
        }
    }
    match &report.recommendation {
        Some(name) => out.push_str(&format!("Recommendation: {name} (highest ROI)\n")),
        None => out.push_str("Recommendation: none (no run completed)\n"),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_reference_pairs() {
        assert!((stability_score(4.3).unwrap() - 95.7).abs() < 1e-12);
        assert!((stability_score(3.3).unwrap() - 96.7).abs() < 1e-12);
        assert_eq!(stability_score(0.0).unwrap(), 100.0);
        assert_eq!(stability_score(20.0).unwrap(), 70.0);
        assert!(stability_score(-1.0).is_err());
    }

    #[test]
    fn stability_bands_and_continuity() {
        for (cv, lo, hi) in [(5.0, 90.0, 100.0), (15.0, 70.0, 90.0), (35.0, 30.0, 70.0), (60.0, 0.0, 30.0)] {
            let s = stability_score(cv).unwrap();
            assert!(s >= lo && s < hi + 1e-9, "cv {cv} -> {s} not in [{lo},{hi})");
        }
        for edge in [10.0, 20.0, 50.0] {
            let below = stability_score(edge - 1e-9).unwrap();
            let above = stability_score(edge + 1e-9).unwrap();
            assert!((below - above).abs() < 1e-6);
        }
        // monotone non-increasing
        let mut prev = 101.0;
        let mut cv = 0.0;
        while cv < 120.0 {
            let s = stability_score(cv).unwrap();
            assert!(s <= prev + 1e-12 && (0.0..=100.0).contains(&s));
            prev = s;
            cv += 0.25;
        }
    }

    #[test]
    fn roi_reference_ratios() {
        assert!((roi(7891.0, 2016.0).unwrap() - 3.914).abs() < 5e-3);
        assert!((roi(6354.0, 4378.0).unwrap() - 1.451).abs() < 5e-3);
        assert!((roi(3129.0, 1536.0).unwrap() - 2.037).abs() < 5e-3);
        assert!(roi(1.0, 0.0).is_err());
    }

    #[test]
    fn early_stop_rules() {
        // strictly increasing: continue
        let rising: Vec<f64> = (0..40).map(|i| i as f64).collect();
        assert!(!early_stop_check(&rising, 10, 0.01));
        // flat over two windows: stop
        let flat = vec![5.0; 20];
        assert!(early_stop_check(&flat, 10, 0.01));
        // too short: continue
        assert!(!early_stop_check(&flat[..15], 10, 0.01));
        // off-boundary length: continue
        assert!(!early_stop_check(&vec![5.0; 25], 10, 0.01));
    }

    #[test]
    fn zero_budget_is_noop() {
        let mut cfg = Config::default();
        cfg.agent.warmup_transitions = 10;
        let mut strategy = strategy_by_name("balanced", &cfg).unwrap();
        strategy.episode_budget = 0;
        let run = run_training(&cfg, &strategy, 3).unwrap();
        assert_eq!(run.summary.episodes_run, 0);
        assert!(run.episodes.is_empty());
        assert!(run.summary.roi.is_none());
    }

    #[test]
    fn strategy_lookup() {
        let cfg = Config::default();
        assert!(strategy_by_name("safety-first", &cfg).is_some());
        assert!(strategy_by_name("balanced", &cfg).is_some());
        assert!(strategy_by_name("cost-efficient", &cfg).is_some());
        assert!(strategy_by_name("yolo", &cfg).is_none());
        let sf = strategy_by_name("safety-first", &cfg).unwrap();
        assert!(matches!(sf.risk_profile, RiskProfile::LowerTail { .. }));
    }
}
