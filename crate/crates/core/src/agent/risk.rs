//! Risk-profiled aggregation of a quantile row into a scalar action value.

use serde::{Deserialize, Serialize};

use super::{AgentError, QuantileTable};

/// Which part of the return distribution drives action selection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RiskProfile {
    /// CVaR-style pessimism: mean of quantiles with midpoint <= cutoff.
    LowerTail { cutoff: f64 },
    FullMean,
    /// Optimism: mean of quantiles with midpoint >= cutoff.
    UpperTail { cutoff: f64 },
}

/// Aggregates one action's quantile row. The row is sorted ascending
/// first; network outputs are not guaranteed monotone across midpoints.
pub fn risk_value(row: &[f64], midpoints: &[f64], profile: RiskProfile) -> Result<f64, AgentError> {
    debug_assert_eq!(row.len(), midpoints.len());
    let mut sorted = row.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite quantiles"));
    let n = sorted.len();
    let (start, end) = match profile {
        RiskProfile::FullMean => (0, n),
        RiskProfile::LowerTail { cutoff } => {
            let k = midpoints.iter().filter(|&&t| t <= cutoff).count();
            if k == 0 {
                return Err(AgentError::Config(format!(
                    "lower-tail cutoff {cutoff} selects no quantiles (smallest midpoint {})",
                    midpoints[0]
                )));
            }
            (0, k)
        }
        RiskProfile::UpperTail { cutoff } => {
            let k = midpoints.iter().filter(|&&t| t >= cutoff).count();
            if k == 0 {
                return Err(AgentError::Config(format!(
                    "upper-tail cutoff {cutoff} selects no quantiles (largest midpoint {})",
                    midpoints[n - 1]
                )));
            }
            (n - k, n)
        }
    };
    Ok(sorted[start..end].iter().sum::<f64>() / (end - start) as f64)
}

/// Per-action risk-adjusted values for a whole table.
pub fn risk_values(
    table: &QuantileTable,
    midpoints: &[f64],
    profile: RiskProfile,
) -> Result<Vec<f64>, AgentError> {
    (0..table.n_actions())
        .map(|a| risk_value(table.row(a), midpoints, profile))
        .collect()
}
