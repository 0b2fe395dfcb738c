//! Command-line workflows: train, evaluate, compare, export.
//!
//! Artifacts are written under the chosen output directory and never
//! silently overwritten — a numeric suffix is appended instead. Everything
//! except the `run.log` sidecar (which carries wall-clock timestamps) is
//! byte-identical across reruns with the same config and seed.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentHyper};
use crate::config::Config;
use crate::trainer::{
    self, format_report, strategy_by_name, EpisodeMetrics, StrategyConfig, TrainError,
    STRATEGY_NAMES,
};

#[derive(Debug, Parser)]
#[command(name = "cbm", version, about = "Condition-based maintenance training and evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one strategy and write metrics, summary, and checkpoint.
    Train {
        /// TOML config file; omit to use the built-in three-unit testbed.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long, default_value = "balanced")]
        strategy: String,
        /// Override the configured episode budget.
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Roll out a saved checkpoint greedily (no exploration, no learning).
    Evaluate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        /// Risk profile to evaluate under; defaults to the one stored in
        /// the checkpoint.
        #[arg(long)]
        strategy: Option<String>,
    },
    /// Train several strategies in parallel and rank the outcomes.
    Compare {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
        /// Repeatable; defaults to all three built-in strategies.
        #[arg(long)]
        strategy: Vec<String>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Convert a metrics file between formats.
    Export {
        /// Existing metrics file (CSV or JSON, detected by content).
        metrics: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportFormat::Json)]
        format: ExportFormat,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExportFormat {
    Csv,
    Json,
}

/// One metrics row with the stable export schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub episode: u64,
    pub total_reward: f64,
    pub total_cost: f64,
    pub risk: f64,
    pub cost: f64,
    pub leveling: f64,
    pub safety: f64,
    pub action: f64,
    pub anomalous_steps: u64,
}

pub const METRICS_HEADER: &str =
    "episode,total_reward,total_cost,risk,cost,leveling,safety,action,anomalous_steps";

pub fn rows_from_episodes(episodes: &[EpisodeMetrics]) -> Vec<MetricsRow> {
    episodes
        .iter()
        .map(|e| MetricsRow {
            episode: e.episode as u64,
            total_reward: e.total_reward,
            total_cost: e.total_cost,
            risk: e.components.risk,
            cost: e.components.cost,
            leveling: e.components.leveling,
            safety: e.components.safety,
            action: e.components.action,
            anomalous_steps: e.anomalous_steps as u64,
        })
        .collect()
}

/// Shortest-roundtrip float text; parses back to the same bits.
pub fn metrics_csv(rows: &[MetricsRow]) -> String {
    let mut out = String::from(METRICS_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.episode,
            r.total_reward,
            r.total_cost,
            r.risk,
            r.cost,
            r.leveling,
            r.safety,
            r.action,
            r.anomalous_steps
        ));
    }
    out
}

/// Parses the metrics CSV; errors carry 1-based row numbers.
pub fn parse_metrics_csv(text: &str) -> Result<Vec<MetricsRow>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| anyhow!("metrics file is empty (row 1: missing header)"))?;
    if header.trim() != METRICS_HEADER {
        bail!("row 1: unexpected header {header:?}, expected {METRICS_HEADER:?}");
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let row_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            bail!("row {row_no}: expected 9 fields, found {}", fields.len());
        }
        let f = |i: usize| -> Result<f64> {
            fields[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| anyhow!("row {row_no}: field {}: {e}", i + 1))
        };
        let u = |i: usize| -> Result<u64> {
            fields[i]
                .trim()
                .parse::<u64>()
                .map_err(|e| anyhow!("row {row_no}: field {}: {e}", i + 1))
        };
        rows.push(MetricsRow {
            episode: u(0)?,
            total_reward: f(1)?,
            total_cost: f(2)?,
            risk: f(3)?,
            cost: f(4)?,
            leveling: f(5)?,
            safety: f(6)?,
            action: f(7)?,
            anomalous_steps: u(8)?,
        });
    }
    Ok(rows)
}

/// First free path among `stem.ext`, `stem-1.ext`, `stem-2.ext`, ...
pub fn unique_path(dir: &Path, stem: &str, ext: &str) -> PathBuf {
    let direct = dir.join(format!("{stem}.{ext}"));
    if !direct.exists() {
        return direct;
    }
    for i in 1u32.. {
        let candidate = dir.join(format!("{stem}-{i}.{ext}"));
        if !candidate.exists() {
            return candidate;
        }
    }
    unreachable!("u32 suffix space exhausted")
}

fn load_config(path: &Option<PathBuf>) -> Result<Config> {
    match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            let cfg = Config::from_toml_str(&text)
                .map_err(|e| anyhow!("{}: {e}", p.display()))?;
            Ok(cfg)
        }
        None => Ok(Config::default()),
    }
}

fn lookup_strategy(name: &str, cfg: &Config) -> Result<StrategyConfig> {
    strategy_by_name(name, cfg).ok_or_else(|| {
        anyhow!(
            "unknown strategy {name:?}; valid options: {}",
            STRATEGY_NAMES.join(", ")
        )
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

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write_run_log(dir: &Path, lines: &[String]) -> Result<PathBuf> {
    let path = unique_path(dir, "run", "log");
    let mut f = fs::File::create(&path)?;
    for line in lines {
        writeln!(f, "{line}")?;
    }
    Ok(path)
}

fn write_metrics(dir: &Path, stem: &str, episodes: &[EpisodeMetrics]) -> Result<PathBuf> {
    let path = unique_path(dir, stem, "csv");
    fs::write(&path, metrics_csv(&rows_from_episodes(episodes)))
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_summary<T: Serialize>(dir: &Path, stem: &str, value: &T) -> Result<PathBuf> {
    let path = unique_path(dir, stem, "json");
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn write_checkpoint(dir: &Path, agent: &Agent, strategy_name: &str) -> Result<PathBuf> {
    let path = unique_path(dir, "checkpoint", "bin");
    let mut f = fs::File::create(&path)?;
    agent
        .save(&mut f, strategy_name)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            strategy,
            episodes,
        } => cmd_train(&config, seed, &out, &strategy, episodes),
        Command::Evaluate {
            config,
            seed,
            out,
            checkpoint,
            episodes,
            strategy,
        } => cmd_evaluate(&config, seed, &out, &checkpoint, episodes, strategy.as_deref()),
        Command::Compare {
            config,
            seed,
            out,
            strategy,
            episodes,
        } => cmd_compare(&config, seed, &out, &strategy, episodes),
        Command::Export {
            metrics,
            format,
            out,
        } => cmd_export(&metrics, format, &out),
    }
}

fn cmd_train(
    config: &Option<PathBuf>,
    seed: u64,
    out: &Path,
    strategy_name: &str,
    episodes: Option<usize>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let mut strategy = lookup_strategy(strategy_name, &cfg)?;
    if let Some(budget) = episodes {
        strategy.episode_budget = budget;
    }
    fs::create_dir_all(out)?;
    let started = unix_now();

    match trainer::run_training(&cfg, &strategy, seed) {
        Ok(run) => {
            let metrics_path = write_metrics(out, "metrics", &run.episodes)?;
            let summary_path = write_summary(out, "summary", &run.summary)?;
            let ckpt_path = write_checkpoint(out, &run.agent, &strategy.name)?;
            write_run_log(
                out,
                &[
                    format!("command: train strategy={} seed={seed}", strategy.name),
                    format!("started_unix: {started}"),
                    format!("finished_unix: {}", unix_now()),
                    format!("metrics: {}", metrics_path.display()),
                    format!("summary: {}", summary_path.display()),
                    format!("checkpoint: {}", ckpt_path.display()),
                ],
            )?;
            Ok(())
        }
        Err(TrainError::Aborted { message, partial }) => {
            let metrics_path = write_metrics(out, "metrics", &partial)?;
            write_run_log(
                out,
                &[
                    format!("command: train strategy={} seed={seed}", strategy.name),
                    format!("started_unix: {started}"),
                    format!("aborted: {message}"),
                    format!("partial_metrics: {}", metrics_path.display()),
                ],
            )?;
            Err(anyhow!(
                "training aborted after {} episodes: {message} (partial metrics at {})",
                partial.len(),
                metrics_path.display()
            ))
        }
        Err(e) => Err(e.into()),
    }
}

fn cmd_evaluate(
    config: &Option<PathBuf>,
    seed: u64,
    out: &Path,
    checkpoint: &Path,
    episodes: usize,
    strategy_override: Option<&str>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let mut f = fs::File::open(checkpoint)
        .with_context(|| format!("opening checkpoint {}", checkpoint.display()))?;
    let (mut agent, stored_name) = Agent::load(&mut f, agent_hyper(&cfg), seed.wrapping_add(1))
        .map_err(|e| anyhow!("checkpoint {}: {e}", checkpoint.display()))?;

    let name = strategy_override.unwrap_or(&stored_name);
    let strategy = lookup_strategy(name, &cfg)?;
    fs::create_dir_all(out)?;
    let started = unix_now();

    let (summary, metrics) = trainer::run_evaluation(&cfg, &strategy, &mut agent, episodes, seed)?;
    let metrics_path = write_metrics(out, "metrics", &metrics)?;
    let summary_path = write_summary(out, "summary", &summary)?;
    write_run_log(
        out,
        &[
            format!("command: evaluate strategy={name} seed={seed} episodes={episodes}"),
            format!("checkpoint: {}", checkpoint.display()),
            format!("started_unix: {started}"),
            format!("finished_unix: {}", unix_now()),
            format!("metrics: {}", metrics_path.display()),
            format!("summary: {}", summary_path.display()),
        ],
    )?;
    Ok(())
}

fn cmd_compare(
    config: &Option<PathBuf>,
    seed: u64,
    out: &Path,
    strategy_names: &[String],
    episodes: Option<usize>,
) -> Result<()> {
    let cfg = load_config(config)?;
    let names: Vec<String> = if strategy_names.is_empty() {
        STRATEGY_NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        strategy_names.to_vec()
    };
    let mut strategies = Vec::with_capacity(names.len());
    for name in &names {
        let mut s = lookup_strategy(name, &cfg)?;
        if let Some(budget) = episodes {
            s.episode_budget = budget;
        }
        strategies.push(s);
    }
    fs::create_dir_all(out)?;
    let started = unix_now();

    let comparison = trainer::compare_scenarios(&cfg, &strategies, seed);

    let mut failures = Vec::new();
    for (strategy, result) in &comparison.runs {
        let sub = out.join(&strategy.name);
        fs::create_dir_all(&sub)?;
        match result {
            Ok(run) => {
                write_metrics(&sub, "metrics", &run.episodes)?;
                write_summary(&sub, "summary", &run.summary)?;
                write_checkpoint(&sub, &run.agent, &strategy.name)?;
            }
            Err(TrainError::Aborted { message, partial }) => {
                write_metrics(&sub, "metrics", partial)?;
                failures.push(format!("{}: {message}", strategy.name));
            }
            Err(e) => failures.push(format!("{}: {e}", strategy.name)),
        }
    }

    let report_txt = unique_path(out, "report", "txt");
    fs::write(&report_txt, format_report(&comparison.report))?;
    let report_json = write_summary(out, "report", &comparison.report)?;
    write_run_log(
        out,
        &[
            format!("command: compare strategies={} seed={seed}", names.join(",")),
            format!("started_unix: {started}"),
            format!("finished_unix: {}", unix_now()),
            format!("report: {} / {}", report_txt.display(), report_json.display()),
        ],
    )?;

    if failures.is_empty() {
        Ok(())
    } else {
        Err(anyhow!("{} run(s) failed: {}", failures.len(), failures.join("; ")))
    }
}

fn cmd_export(metrics: &Path, format: ExportFormat, out: &Path) -> Result<()> {
    let text = fs::read_to_string(metrics)
        .with_context(|| format!("reading metrics {}", metrics.display()))?;
    let rows = if text.trim_start().starts_with('[') {
        serde_json::from_str::<Vec<MetricsRow>>(&text)
            .with_context(|| format!("parsing JSON metrics {}", metrics.display()))?
    } else {
        parse_metrics_csv(&text).with_context(|| format!("parsing {}", metrics.display()))?
    };
    fs::create_dir_all(out)?;
    let path = match format {
        ExportFormat::Csv => {
            let path = unique_path(out, "metrics", "csv");
            fs::write(&path, metrics_csv(&rows))?;
            path
        }
        ExportFormat::Json => {
            let path = unique_path(out, "metrics", "json");
            let mut text = serde_json::to_string_pretty(&rows)?;
            text.push('\n');
            fs::write(&path, text)?;
            path
        }
    };
    println!("wrote {}", path.display());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<MetricsRow> {
        vec![
            MetricsRow {
                episode: 0,
                total_reward: -123.456,
                total_cost: 250.0,
                risk: -5.0,
                cost: -25.0,
                leveling: -0.5,
                safety: -90.0,
                action: -3.0,
                anomalous_steps: 7,
            },
            MetricsRow {
                episode: 1,
                total_reward: 0.1 + 0.2, // deliberately non-representable
                total_cost: 0.0,
                risk: 0.0,
                cost: 0.0,
                leveling: 0.0,
                safety: 0.0,
                action: 0.0,
                anomalous_steps: 0,
            },
        ]
    }

    #[test]
    fn csv_roundtrip_is_bit_exact() {
        let rows = sample_rows();
        let text = metrics_csv(&rows);
        let parsed = parse_metrics_csv(&text).unwrap();
        assert_eq!(rows.len(), parsed.len());
        for (a, b) in rows.iter().zip(&parsed) {
            assert_eq!(a.total_reward.to_bits(), b.total_reward.to_bits());
            assert_eq!(a.leveling.to_bits(), b.leveling.to_bits());
        }
        // and the re-serialized text is identical
        assert_eq!(text, metrics_csv(&parsed));
    }

    #[test]
    fn header_only_file_parses_empty() {
        let rows = parse_metrics_csv(&format!("{METRICS_HEADER}\n")).unwrap();
        assert!(rows.is_empty());
    }

    #[test]
    fn parse_errors_carry_row_numbers() {
        let text = format!("{METRICS_HEADER}\n0,1,2,3,4,5,6,7,8\nbad,row\n");
        let err = parse_metrics_csv(&text).unwrap_err().to_string();
        assert!(err.contains("row 3"), "got: {err}");

        let err = parse_metrics_csv("nope\n").unwrap_err().to_string();
        assert!(err.contains("row 1"), "got: {err}");
    }

    #[test]
    fn unique_path_suffixes() {
        let dir = tempfile::tempdir().unwrap();
        let first = unique_path(dir.path(), "metrics", "csv");
        assert_eq!(first, dir.path().join("metrics.csv"));
        fs::write(&first, "x").unwrap();
        let second = unique_path(dir.path(), "metrics", "csv");
        assert_eq!(second, dir.path().join("metrics-1.csv"));
        fs::write(&second, "y").unwrap();
        let third = unique_path(dir.path(), "metrics", "csv");
        assert_eq!(third, dir.path().join("metrics-2.csv"));
    }

    #[test]
    fn unknown_strategy_message_lists_options() {
        let cfg = Config::default();
        let err = lookup_strategy("mystery", &cfg).unwrap_err().to_string();
        for name in STRATEGY_NAMES {
            assert!(err.contains(name), "missing {name} in: {err}");
        }
    }
}
