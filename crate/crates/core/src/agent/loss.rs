//! Quantile Huber loss and its gradient with respect to the predictions.

/// `L = (1/N') sum_j sum_k |tau_j - 1{u<0}| * L_kappa(u)/kappa` with
/// `u = target_k - pred_j` and Huber `L_kappa(u) = u^2/2` for `|u| <= kappa`,
/// else `kappa (|u| - kappa/2)`.
///
/// Returns the loss and `dL/dpred_j`.
pub fn quantile_huber_loss(
    pred: &[f64],
    targets: &[f64],
    midpoints: &[f64],
    kappa: f64,
) -> (f64, Vec<f64>) {
    debug_assert!(kappa > 0.0);
    debug_assert_eq!(pred.len(), midpoints.len());
    let n_targets = targets.len() as f64;
    let mut loss = 0.0;
    let mut grad = vec![0.0; pred.len()];
    for (j, (&p, &tau)) in pred.iter().zip(midpoints).enumerate() {
        for &t in targets {
            let u = t - p;
            let weight = (tau - if u < 0.0 { 1.0 } else { 0.0 }).abs();
            let (huber, dhuber_du) = if u.abs() <= kappa {
                (0.5 * u * u, u)
            } else {
                (kappa * (u.abs() - 0.5 * kappa), kappa * u.signum())
            };
            loss += weight * huber / kappa;
            // du/dpred = -1
            grad[j] -= weight * dhuber_du / kappa;
        }
    }
    loss /= n_targets;
    for g in &mut grad {
        *g /= n_targets;
    }
    (loss, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::quantile_midpoints;

    #[test]
    fn zero_residuals_zero_loss() {
        // degenerate distribution: every pairwise residual vanishes
        let m = quantile_midpoints(9);
        let row = vec![4.2; 9];
        let (loss, grad) = quantile_huber_loss(&row, &row, &m, 1.0);
        assert_eq!(loss, 0.0);
        assert!(grad.iter().all(|&g| g == 0.0));
    }

    #[test]
    fn median_quantile_is_symmetric() {
        let m = quantile_midpoints(1); // single midpoint 0.5
        let delta = 0.01;
        let (above, _) = quantile_huber_loss(&[0.0], &[delta], &m, 1.0);
        let (below, _) = quantile_huber_loss(&[0.0], &[-delta], &m, 1.0);
        assert!((above - below).abs() < 1e-15);
    }

    #[test]
    fn hand_evaluated_quadratic_zone() {
        // tau = 0.9, u = 0.5, kappa = 1: 0.9 * (0.5 * 0.25) = 0.1125
        let (loss, grad) = quantile_huber_loss(&[0.0], &[0.5], &[0.9], 1.0);
        assert!((loss - 0.1125).abs() < 1e-15);
        // dL/dp = -0.9 * u = -0.45
        assert!((grad[0] + 0.45).abs() < 1e-15);
    }

    #[test]
    fn loss_is_non_negative() {
        let m = quantile_midpoints(7);
        let pred: Vec<f64> = (0..7).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let targets = vec![-2.0, 0.5, 3.0];
        let (loss, _) = quantile_huber_loss(&pred, &targets, &m, 1.0);
        assert!(loss > 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = quantile_midpoints(5);
        let pred = vec![0.3, -0.8, 1.4, 0.05, 2.0];
        let targets = vec![0.0, 1.0, -1.5, 0.4];
        let (_, grad) = quantile_huber_loss(&pred, &targets, &m, 1.0);
        let h = 1e-6;
        for j in 0..pred.len() {
            let mut plus = pred.clone();
            plus[j] += h;
            let mut minus = pred.clone();
            minus[j] -= h;
            let (lp, _) = quantile_huber_loss(&plus, &targets, &m, 1.0);
            let (lm, _) = quantile_huber_loss(&minus, &targets, &m, 1.0);
            let fd = (lp - lm) / (2.0 * h);
            assert!(
                (fd - grad[j]).abs() < 1e-6 * fd.abs().max(1.0),
                "quantile {j}: analytic {} vs fd {fd}",
                grad[j]
            );
        }
    }
}
