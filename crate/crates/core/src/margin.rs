//! Margins of hypothesis ensembles: the pairwise 0-1 margin loss, the
//! ensemble margin at a point, and minimum (robust) margins over a finite
//! perturbation grid.

use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, EnsembleWeights, HypothesisClass, PerturbationModel, PredictionTable};
use crate::error::{Error, Result};

/// `1(pred != y) - 1(pred != y')`: -1 when the prediction is the true label,
/// +1 when it is the rival, 0 otherwise.
pub fn pairwise_margin_loss(predicted: usize, y: usize, y_prime: usize) -> Result<i8> {
    if y == y_prime {
        return Err(Error::InvalidLabel(format!("true and rival label coincide ({y})")));
    }
    Ok(if predicted == y {
        -1
    } else if predicted == y_prime {
        1
    } else {
        0
    })
}

/// `score[y] - max_{j != y} score[j]`.
pub fn ensemble_margin(score: &[f64], y: usize) -> Result<f64> {
    if score.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "margin needs at least 2 classes, got {}",
            score.len()
        )));
    }
    if y >= score.len() {
        return Err(Error::InvalidLabel(format!("label {y} out of {}", score.len())));
    }
    let rival = score
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != y)
        .map(|(_, &s)| s)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(score[y] - rival)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginReport {
    /// Minimum margin of each sample over the perturbation grid.
    pub per_sample_min_margin: Vec<f64>,
    pub min_robust_margin: f64,
    /// Fraction of samples with strictly positive unperturbed margin.
    pub clean_accuracy: Option<f64>,
    /// Fraction of samples with strictly positive margin at every grid point.
    pub adversarial_accuracy: f64,
}

impl MarginReport {
    pub fn from_table(table: &PredictionTable, q: &EnsembleWeights, dataset: &Dataset) -> Result<Self> {
        if table.num_samples() != dataset.len() {
            return Err(Error::ShapeMismatch("table and dataset sizes differ".into()));
        }
        let mut per_sample = Vec::with_capacity(dataset.len());
        let mut clean_correct = 0usize;
        for i in 0..dataset.len() {
            let y = dataset.y(i);
            let mut worst = f64::INFINITY;
            for k in 0..table.num_perturbations() {
                let m = ensemble_margin(&table.ensemble_score(q, i, k)?, y)?;
                worst = worst.min(m);
            }
            per_sample.push(worst);
            if let Some(score) = table.clean_score(q, i)? {
                if ensemble_margin(&score, y)? > 0.0 {
                    clean_correct += 1;
                }
            }
        }
        let n = dataset.len() as f64;
        Ok(Self::assemble(
            per_sample,
            table.has_clean().then_some(clean_correct as f64 / n),
        ))
    }

    pub(crate) fn assemble(per_sample_min_margin: Vec<f64>, clean_accuracy: Option<f64>) -> Self {
        let n = per_sample_min_margin.len() as f64;
        let min_robust_margin = per_sample_min_margin
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let robust = per_sample_min_margin.iter().filter(|&&m| m > 0.0).count();
        Self {
            per_sample_min_margin,
            min_robust_margin,
            clean_accuracy,
            adversarial_accuracy: robust as f64 / n,
        }
    }
}

pub fn margin_report(
    class: &HypothesisClass,
    q: &EnsembleWeights,
    dataset: &Dataset,
    perturbations: &PerturbationModel,
) -> Result<MarginReport> {
    perturbations.require_grid("exact margin computation")?;
    let table = PredictionTable::build(class, dataset, perturbations)?;
    MarginReport::from_table(&table, q, dataset)
}

/// Exact minimum of the ensemble margin over every sample and grid point.
pub fn min_robust_margin(
    class: &HypothesisClass,
    q: &EnsembleWeights,
    dataset: &Dataset,
    perturbations: &PerturbationModel,
) -> Result<f64> {
    Ok(margin_report(class, q, dataset, perturbations)?.min_robust_margin)
}

/// Fraction of samples whose margin is strictly positive at every grid point.
pub fn robust_accuracy(
    class: &HypothesisClass,
    q: &EnsembleWeights,
    dataset: &Dataset,
    perturbations: &PerturbationModel,
) -> Result<f64> {
    Ok(margin_report(class, q, dataset, perturbations)?.adversarial_accuracy)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_loss_cases() {
        assert_eq!(pairwise_margin_loss(1, 1, 2).unwrap(), -1);
        assert_eq!(pairwise_margin_loss(2, 1, 2).unwrap(), 1);
        assert_eq!(pairwise_margin_loss(0, 1, 2).unwrap(), 0);
        assert!(pairwise_margin_loss(0, 1, 1).is_err());
    }

    #[test]
    fn margin_cases() {
        assert_eq!(ensemble_margin(&[0.0, 1.0, 0.0], 1).unwrap(), 1.0);
        assert_eq!(ensemble_margin(&[0.5, 0.5], 0).unwrap(), 0.0);
        let m = ensemble_margin(&[2.0 / 3.0, 1.0 / 3.0], 0).unwrap();
        assert!((m - 1.0 / 3.0).abs() < 1e-15);
        assert!(ensemble_margin(&[1.0], 0).is_err());
    }

    #[test]
    fn zero_grid_is_plain_minimum_margin() {
        let ds = Dataset::new(vec![vec![0.0], vec![1.0]], vec![0, 1], 2).unwrap();
        let class = HypothesisClass::table(2, vec![vec![0, 1], vec![0, 0]]).unwrap();
        let q = EnsembleWeights::uniform(2).unwrap();
        let zero = PerturbationModel::zero(1);
        let r = margin_report(&class, &q, &ds, &zero).unwrap();
        assert_eq!(r.per_sample_min_margin, vec![1.0, 0.0]);
        assert_eq!(r.min_robust_margin, 0.0);
        // the zero-margin tie counts as incorrect
        assert_eq!(r.adversarial_accuracy, 0.5);
        assert_eq!(r.clean_accuracy, Some(0.5));
    }

    #[test]
    fn always_correct_point_mass() {
        let ds = Dataset::new(vec![vec![0.0]], vec![1], 2).unwrap();
        let grid = PerturbationModel::uniform_1d(1.0, 0.5).unwrap();
        let class = HypothesisClass::table(2, vec![vec![1; 5]]).unwrap();
        let q = EnsembleWeights::point_mass(1, 0).unwrap();
        assert_eq!(min_robust_margin(&class, &q, &ds, &grid).unwrap(), 1.0);
        assert_eq!(robust_accuracy(&class, &q, &ds, &grid).unwrap(), 1.0);
    }

    #[test]
    fn continuous_mode_is_rejected() {
        let ds = Dataset::new(vec![vec![0.0]], vec![1], 2).unwrap();
        let class = HypothesisClass::table(2, vec![vec![1]]).unwrap();
        let q = EnsembleWeights::point_mass(1, 0).unwrap();
        let cont = PerturbationModel::continuous(0.1).unwrap();
        assert!(matches!(
            min_robust_margin(&class, &q, &ds, &cont),
            Err(Error::ContinuousNotSupported(_))
        ));
    }
}
