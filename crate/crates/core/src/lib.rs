//! Condition-based-maintenance simulator and distributional RL agent.
//!
//! A fleet of equipment units degrades stochastically; a QR-DQN agent with
//! dueling heads, noisy exploration layers, and prioritized replay learns
//! joint repair/replace schedules. Everything is seeded and deterministic,
//! down to byte-identical metric files across reruns.

pub mod agent;
pub mod cli;
pub mod config;
pub mod env;
pub mod numerics;
pub mod replay;
pub mod trainer;
