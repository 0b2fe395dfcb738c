//! Randomized invariants over the environment, replay weights, and the
//! risk-adjusted value summaries.

use proptest::prelude::*;

use cbm::agent::{quantile_huber_loss, quantile_midpoints, risk_value, RiskProfile};
use cbm::env::{
    transition_prob, EnvConfig, Environment, EquipmentSpec, EquipmentState, JointAction,
    MaintAction, RewardBreakdown,
};
use cbm::replay::{ReplayBuffer, TransitionRecord};

fn spec_for(i: usize) -> EquipmentSpec {
    EquipmentSpec {
        id: format!("U-{i}"),
        install_age_years: 1.5 * i as f64,
        aging_coeff: 0.004 * (i + 1) as f64,
        repair_cost: 40.0 + 10.0 * i as f64,
        replace_cost: 160.0 + 40.0 * i as f64,
        base_fail_prob: 0.02 + 0.01 * (i % 4) as f64,
    }
}

fn env_config(n: usize, h: usize, seed: u64) -> EnvConfig {
    EnvConfig {
        n_units: n,
        history_len: h,
        r_normal: 20.0,
        r_anomalous: -10.0,
        cost_weight_lambda: 0.1,
        sim_discount: 0.1,
        leveling_weight_alpha: 1.0,
        variance_threshold: 15.0,
        safety_weight: 10.0,
        action_weight: 5.0,
        episode_length: 8,
        lifecycle_horizon_years: 25.0,
        repair_success_prob: 0.9,
        seed,
    }
}

proptest! {
    #[test]
    fn state_vector_length_is_3n_plus_h(
        n in 1usize..=8,
        h in 0usize..=24,
        seed in 0u64..1000,
        steps in 0usize..8,
    ) {
        let specs: Vec<EquipmentSpec> = (0..n).map(spec_for).collect();
        let mut env = Environment::new(env_config(n, h, seed), specs).unwrap();
        let mut state = env.reset();
        prop_assert_eq!(state.len(), 3 * n + h);
        for k in 0..steps {
            let action = JointAction::from_index(k % JointAction::num_joint_actions(n), n);
            state = env.step(&action).unwrap().state;
            prop_assert_eq!(state.len(), 3 * n + h);
        }
    }

    #[test]
    fn reward_components_respect_bounds(
        n in 1usize..=4,
        seed in 0u64..500,
        action_seed in 0usize..81,
    ) {
        let specs: Vec<EquipmentSpec> = (0..n).map(spec_for).collect();
        let cfg = env_config(n, 12, seed);
        let mut env = Environment::new(cfg.clone(), specs).unwrap();
        env.reset();
        let action = JointAction::from_index(
            action_seed % JointAction::num_joint_actions(n), n);
        let out = env.step(&action).unwrap();
        let r = out.reward;
        prop_assert!(r.cost <= 0.0);
        prop_assert!(r.leveling <= 0.0);
        prop_assert!(r.safety >= 0.0 && r.safety <= cfg.safety_weight);
        prop_assert!(r.action >= 0.0 && r.action <= n as f64 * cfg.action_weight);
        prop_assert_eq!(r.total, r.risk + r.cost + r.leveling + r.safety + r.action);
    }

    #[test]
    fn breakdown_total_is_exact_sum(
        risk in -1e6f64..1e6,
        cost in -1e6f64..0.0,
        leveling in -1e6f64..0.0,
        safety in 0f64..100.0,
        bonus in 0f64..100.0,
    ) {
        let b = RewardBreakdown::new(risk, cost, leveling, safety, bonus);
        prop_assert_eq!(b.total, risk + cost + leveling + safety + bonus);
    }

    #[test]
    fn transition_prob_in_unit_interval_and_monotone(
        age in 0f64..60.0,
        base in 0f64..=1.0,
        coeff in 0f64..0.1,
        anomalous in any::<bool>(),
        action_code in 0u8..3,
    ) {
        let mut spec = spec_for(0);
        spec.base_fail_prob = base;
        spec.aging_coeff = coeff;
        let state = EquipmentState {
            anomalous,
            temp_norm: 0.4,
            age_norm: (age / 25.0).min(1.0),
            age_years: age,
        };
        let action = MaintAction::from_code(action_code).unwrap();
        let p = transition_prob(&spec, &state, action, 0.9);
        prop_assert!((0.0..=1.0).contains(&p));

        // aging never helps under do-nothing
        if !anomalous {
            let older = EquipmentState { age_years: age + 1.0, ..state.clone() };
            let p_old = transition_prob(&spec, &older, MaintAction::DoNothing, 0.9);
            let p_now = transition_prob(&spec, &state, MaintAction::DoNothing, 0.9);
            prop_assert!(p_old >= p_now - 1e-12);
        }
    }

    #[test]
    fn importance_weights_are_normalized(
        beta in 0f64..=1.0,
        tds in prop::collection::vec(0f64..10.0, 8..32),
    ) {
        let mut buffer = ReplayBuffer::new(64, 0.6, 1e-3, 42);
        let mut ids = Vec::new();
        for (i, _) in tds.iter().enumerate() {
            ids.push(buffer.push(TransitionRecord {
                state: vec![i as f64],
                action_index: 0,
                reward: 0.0,
                next_state: vec![0.0],
                done: false,
            }));
        }
        buffer.update_priorities(&ids, &tds);
        let batch = buffer.sample(8, beta).unwrap();
        for &w in &batch.weights {
            prop_assert!(w > 0.0 && w <= 1.0 + 1e-12, "weight {w} outside (0, 1]");
        }
    }

    #[test]
    fn risk_values_bounded_by_row_extremes(
        row in prop::collection::vec(-100f64..100.0, 4..64),
        cutoff in 0.05f64..=1.0,
    ) {
        let midpoints = quantile_midpoints(row.len());
        let min = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for profile in [
            RiskProfile::FullMean,
            RiskProfile::LowerTail { cutoff },
            RiskProfile::UpperTail { cutoff: 1.0 - cutoff.min(0.95) },
        ] {
            if let Ok(v) = risk_value(&row, &midpoints, profile) {
                prop_assert!(v >= min - 1e-9 && v <= max + 1e-9);
            }
        }
    }

    #[test]
    fn quantile_loss_nonnegative_and_zero_on_degenerate_match(
        n in 2usize..16,
        value in -10f64..10.0,
        kappa in 0.1f64..3.0,
    ) {
        let midpoints = quantile_midpoints(n);
        let pred = vec![value; n];
        let targets = vec![value; n];
        let (loss, grad) = quantile_huber_loss(&pred, &targets, &midpoints, kappa);
        prop_assert_eq!(loss, 0.0);
        prop_assert!(grad.iter().all(|g| *g == 0.0));
    }
}
