//! Exponential weights over a finite action set with exact expected play,
//! and its regret against the best fixed action in hindsight.

use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::losses::softmax;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegretReport {
    pub horizon: usize,
    pub num_actions: usize,
    /// Uniform bound `B` on `|f_t(z)|` observed in the sequence.
    pub loss_bound: f64,
    pub eta: f64,
    /// `sum_t E_{P_t}[f_t] - min_z sum_t f_t(z)`.
    pub realized: f64,
    /// `2 B sqrt(T) (ln |Z| + 1)`.
    pub bound: f64,
    /// False when `eta` exceeds `1 / (2 B sqrt(T))`.
    pub bound_guaranteed: bool,
}

impl RegretReport {
    pub fn within_bound(&self) -> bool {
        self.realized <= self.bound
    }
}

/// `1 / (2 B sqrt(T))`.
pub fn default_eta(loss_bound: f64, horizon: usize) -> f64 {
    1.0 / (2.0 * loss_bound * (horizon as f64).sqrt())
}

/// Runs EXP on `losses[t][z]` (to be minimized) and reports expected regret.
pub fn exp_weights_regret_harness(losses: &[Vec<f64>], eta: Option<f64>) -> Result<RegretReport> {
    let horizon = losses.len();
    if horizon == 0 {
        return Err(invalid_arg("losses", "need at least one round"));
    }
    let num_actions = losses[0].len();
    if num_actions == 0 || losses.iter().any(|l| l.len() != num_actions) {
        return Err(invalid_arg("losses", "every round needs the same non-empty action set"));
    }
    if losses.iter().flatten().any(|v| !v.is_finite()) {
        return Err(invalid_arg("losses", "non-finite loss"));
    }
    let observed = losses.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let loss_bound = if observed > 0.0 { observed } else { 1.0 };
    let limit = default_eta(loss_bound, horizon);
    let eta = eta.unwrap_or(limit);
    if !eta.is_finite() || eta < 0.0 {
        return Err(invalid_arg("eta", format!("must be finite and non-negative, got {eta}")));
    }

    let mut cumulative = vec![0.0; num_actions];
    let mut learner = 0.0;
    let mut logits = vec![0.0; num_actions];
    for round in losses {
        for (l, c) in logits.iter_mut().zip(&cumulative) {
            *l = -eta * c;
        }
        let p = softmax(&logits);
        learner += p.iter().zip(round).map(|(p, f)| p * f).sum::<f64>();
        for (c, f) in cumulative.iter_mut().zip(round) {
            *c += f;
        }
    }
    let best = cumulative.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RegretReport {
        horizon,
        num_actions,
        loss_bound: observed,
        eta,
        realized: learner - best,
        bound: 2.0 * observed * (horizon as f64).sqrt() * ((num_actions as f64).ln() + 1.0),
        bound_guaranteed: eta <= limit * (1.0 + 1e-12),
    })
}

/// Losses `(1, 0), (0, 1), ...` on two actions.
pub fn alternating_losses(horizon: usize) -> Vec<Vec<f64>> {
    (0..horizon)
        .map(|t| if t % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] })
        .collect()
}

/// An adaptive adversary against EXP with rate `eta`: each round it charges
/// loss `b` to the action EXP currently favours most (lowest index on ties)
/// and `-b` to the others.
pub fn adaptive_adversary_losses(num_actions: usize, horizon: usize, b: f64, eta: f64) -> Vec<Vec<f64>> {
    let mut cumulative = vec![0.0; num_actions];
    let mut out = Vec::with_capacity(horizon);
    for _ in 0..horizon {
        let logits: Vec<f64> = cumulative.iter().map(|c| -eta * c).collect();
        let p = softmax(&logits);
        let mut target = 0;
        for (z, &pz) in p.iter().enumerate() {
            if pz > p[target] {
                target = z;
            }
        }
        let round: Vec<f64> = (0..num_actions).map(|z| if z == target { b } else { -b }).collect();
        for (c, f) in cumulative.iter_mut().zip(&round) {
            *c += f;
        }
        out.push(round);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_and_zero_losses_have_no_regret() {
        let constant = vec![vec![0.7; 5]; 40];
        let r = exp_weights_regret_harness(&constant, None).unwrap();
        assert!(r.realized.abs() < 1e-12);
        let zero = vec![vec![0.0; 3]; 10];
        let r = exp_weights_regret_harness(&zero, None).unwrap();
        assert_eq!(r.realized, 0.0);
        assert!(r.within_bound());
    }

    #[test]
    fn alternating_two_actions() {
        let r = exp_weights_regret_harness(&alternating_losses(100), None).unwrap();
        assert!((r.bound - 20.0 * (2f64.ln() + 1.0)).abs() < 1e-12);
        assert!((r.bound - 33.86).abs() < 0.01);
        assert!(r.within_bound());
        assert!(r.bound_guaranteed);
    }

    #[test]
    fn large_eta_flags_bound() {
        let r = exp_weights_regret_harness(&alternating_losses(100), Some(1.0)).unwrap();
        assert!(!r.bound_guaranteed);
    }
}
