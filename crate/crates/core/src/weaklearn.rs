//! Weak-learning-condition certificates on finite instances.
//!
//! Both conditions are min-max edges: the adversary picks a distribution over
//! (sample, rival label[, perturbation]) tuples and the best hypothesis in
//! the class earns `E[1(correct)] - E[1(rival)]` against it. The MRBoost
//! condition evaluates the indicators at each perturbation separately; the
//! RobBoost condition quantifies over the whole grid inside the indicator.

use serde::{Deserialize, Serialize};

use crate::domain::{
    AugmentedSpace, Dataset, HypothesisClass, IntervalHypothesis, PerturbationModel, PredictionTable,
    INTERVAL_TOL,
};
use crate::error::{invalid_arg, Result};
use crate::game::{matrix_game_value_lp, solve_matrix_game, PayoffMatrix, DEFAULT_PAYOFF_CAP};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WlCondition {
    MrBoost,
    RobBoost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WlCertificate {
    pub condition: WlCondition,
    /// Largest edge guaranteed against every adversary distribution; the
    /// condition holds with parameter `tau` iff `value >= tau`.
    pub value: f64,
    /// Adversary distribution attaining the minimum (over the augmented or
    /// reduced space, depending on the condition).
    pub witness_distribution: Vec<f64>,
    /// Best hypothesis against the witness distribution, when the edge is
    /// positive.
    pub witness_hypothesis: Option<usize>,
}

impl WlCertificate {
    pub fn holds(&self, tau: f64) -> bool {
        self.value >= tau && self.value > 0.0
    }
}

pub fn wl_mrboost_value(
    class: &HypothesisClass,
    dataset: &Dataset,
    perturbations: &PerturbationModel,
    lp_cap: usize,
) -> Result<WlCertificate> {
    perturbations.require_grid("the MRBoost weak-learning check")?;
    let table = PredictionTable::build(class, dataset, perturbations)?;
    let payoffs = PayoffMatrix::build(&table, dataset, DEFAULT_PAYOFF_CAP)?;
    let sol = matrix_game_value_lp(&payoffs, lp_cap)?;
    let edges = payoffs.margin_matrix();
    Ok(certificate(WlCondition::MrBoost, &edges, sol.value, sol.col_strategy))
}

/// Edge matrix `[h][(i, y')] = 1(h correct at every grid point of x_i)
/// - 1(h predicts y' at some grid point of x_i)`.
pub fn robboost_edge_matrix(table: &PredictionTable, dataset: &Dataset) -> Vec<Vec<f64>> {
    let space = AugmentedSpace::with_grid_size(dataset, 1);
    let g = table.num_perturbations();
    (0..table.num_hypotheses())
        .map(|h| {
            space
                .entries()
                .iter()
                .map(|e| {
                    let preds = (0..g).map(|k| table.prediction(h, e.sample, k));
                    let all_correct = preds.clone().all(|p| p == e.label);
                    let any_rival = preds.into_iter().any(|p| p == e.rival);
                    f64::from(u8::from(all_correct)) - f64::from(u8::from(any_rival))
                })
                .collect()
        })
        .collect()
}

pub fn wl_robboost_value(
    class: &HypothesisClass,
    dataset: &Dataset,
    perturbations: &PerturbationModel,
    lp_cap: usize,
) -> Result<WlCertificate> {
    perturbations.require_grid("the RobBoost weak-learning check")?;
    let table = PredictionTable::build(class, dataset, perturbations)?;
    let edges = robboost_edge_matrix(&table, dataset);
    let sol = solve_matrix_game(&edges, lp_cap)?;
    Ok(certificate(WlCondition::RobBoost, &edges, sol.value, sol.col_strategy))
}

fn certificate(condition: WlCondition, edges: &[Vec<f64>], value: f64, witness: Vec<f64>) -> WlCertificate {
    let witness_hypothesis = (value > 0.0).then(|| {
        let mut best = 0;
        let mut best_edge = f64::NEG_INFINITY;
        for (h, row) in edges.iter().enumerate() {
            let e: f64 = row.iter().zip(&witness).map(|(a, p)| a * p).sum();
            if e > best_edge {
                best = h;
                best_edge = e;
            }
        }
        best
    });
    WlCertificate {
        condition,
        value,
        witness_distribution: witness,
        witness_hypothesis,
    }
}

/// Width of each interval in the separation fixture.
pub const FIXTURE_INTERVAL_WIDTH: f64 = 0.1;

/// The separation instance: one sample `x = 0` with label 1, radius 1, and
/// interval classifiers predicting 0 on `[theta, theta + 0.1]` and 1
/// elsewhere, with `theta` on `{-1, -1 + step, ..., 0.9}`. The perturbation
/// grid covers `[-1, 1]` at the same spacing.
pub fn interval_class_fixture(
    grid_step: f64,
) -> Result<(HypothesisClass, Dataset, PerturbationModel)> {
    if grid_step.is_nan() || grid_step <= 0.0 || grid_step > FIXTURE_INTERVAL_WIDTH + INTERVAL_TOL {
        return Err(invalid_arg(
            "grid_step",
            format!("must lie in (0, {FIXTURE_INTERVAL_WIDTH}], got {grid_step}"),
        ));
    }
    let last_theta = 1.0 - FIXTURE_INTERVAL_WIDTH;
    let count = ((last_theta + 1.0) / grid_step + INTERVAL_TOL).floor() as usize;
    let intervals = (0..=count)
        .map(|k| {
            let lo = -1.0 + k as f64 * grid_step;
            IntervalHypothesis {
                lo,
                hi: lo + FIXTURE_INTERVAL_WIDTH,
                inside: 0,
                outside: 1,
            }
        })
        .collect();
    let class = HypothesisClass::intervals(2, intervals)?;
    let dataset = Dataset::new(vec![vec![0.0]], vec![1], 2)?;
    let grid = PerturbationModel::uniform_1d(1.0, grid_step)?;
    Ok((class, dataset, grid))
}
