//! Attacks, samplers, adversarial-training baselines, and robust-accuracy
//! evaluation for score networks and their ensembles.

pub mod attack;
pub mod sampler;
pub mod training;

use serde::{Deserialize, Serialize};

use crate::domain::Dataset;
use crate::error::{invalid_arg, Error, Result};
use crate::losses::LossKind;
use crate::nn::{argmax, LinearCombination, LogitModel, MlpParams};

pub use attack::{
    fgsm, fgsm_ce, pgd, pgd_attack, sample_rng, AttackConfig, AttackOutcome, LossObjective, MixtureProbabilityObjective,
    Objective,
};
pub use sampler::{
    exp_sampling_distribution, sampler_all, sampler_exp, sampler_max, sampler_rnd, CandidatePool, SampledTuple,
};
pub use training::{
    adversarial_training, layer_sizes, pinot_pair, robboost_greedy, AtLoss, InitRule, RobBoostConfig, StageLoss,
};

/// Two networks combined by sampling: predict with `g1` with probability
/// `w`, else with `g2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomizedEnsemble {
    g1: MlpParams,
    g2: MlpParams,
    w: f64,
}

impl RandomizedEnsemble {
    pub fn new(g1: MlpParams, g2: MlpParams, w: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&w) {
            return Err(invalid_arg("w", format!("mixing weight must lie in [0, 1], got {w}")));
        }
        if g1.sizes().first() != g2.sizes().first() || g1.num_classes() != g2.num_classes() {
            return Err(Error::ShapeMismatch("ensemble members disagree on shape".into()));
        }
        Ok(Self { g1, g2, w })
    }

    pub fn g1(&self) -> &MlpParams {
        &self.g1
    }

    pub fn g2(&self) -> &MlpParams {
        &self.g2
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    /// Probability that the randomized prediction at `x` equals `y`.
    pub fn expected_correct(&self, x: &[f64], y: usize) -> f64 {
        let c1 = f64::from(u8::from(argmax(&self.g1.logits(x)) == y));
        let c2 = f64::from(u8::from(argmax(&self.g2.logits(x)) == y));
        self.w * c1 + (1.0 - self.w) * c2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationLevel {
    /// Cross-entropy of `w g1 + (1 - w) g2`.
    Logit,
    /// Negative log of the mixture probability of the true class.
    Probability,
}

/// PGD against a randomized ensemble at the chosen aggregation level.
pub fn randomized_ensemble_attack(
    ensemble: &RandomizedEnsemble,
    x: &[f64],
    y: usize,
    config: &AttackConfig,
    level: AggregationLevel,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<AttackOutcome> {
    config.validate()?;
    check_label(y, ensemble.g1.num_classes())?;
    Ok(match level {
        AggregationLevel::Logit => {
            let combo = LinearCombination::new(vec![(&ensemble.g1, ensemble.w), (&ensemble.g2, 1.0 - ensemble.w)])?;
            pgd(&LossObjective::new(&combo, y, LossKind::Ce), x, config, rng)
        }
        AggregationLevel::Probability => {
            let objective = MixtureProbabilityObjective {
                g1: &ensemble.g1,
                g2: &ensemble.g2,
                w: ensemble.w,
                y,
            };
            pgd(&objective, x, config, rng)
        }
    })
}

fn check_label(y: usize, k: usize) -> Result<()> {
    if y >= k {
        return Err(Error::InvalidLabel(format!("label {y} outside 0..{k}")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointEvaluation {
    /// Correctness (or expected correctness under a randomized rule) at `x`.
    pub clean: f64,
    /// Correctness at the worse of `x` and the attack output.
    pub adversarial: f64,
    /// Best attack objective found.
    pub objective: f64,
    pub x_adv: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobustEvaluation {
    pub clean_accuracy: f64,
    pub robust_accuracy: f64,
    /// Empirical adversarial risk, `1 - robust_accuracy`; a lower bound on
    /// the true risk since the attack may miss the worst perturbation.
    pub adversarial_risk: f64,
    pub points: Vec<PointEvaluation>,
}

impl RobustEvaluation {
    fn from_points(points: Vec<PointEvaluation>) -> Self {
        let n = points.len().max(1) as f64;
        let clean_accuracy = points.iter().map(|p| p.clean).sum::<f64>() / n;
        let robust_accuracy = points.iter().map(|p| p.adversarial).sum::<f64>() / n;
        Self {
            clean_accuracy,
            robust_accuracy,
            adversarial_risk: 1.0 - robust_accuracy,
            points,
        }
    }
}

fn check_model(dataset: &Dataset, input_dim: usize, k: usize) -> Result<()> {
    if input_dim != dataset.dim() || k != dataset.num_classes() {
        return Err(Error::ShapeMismatch("model shape does not match the dataset".into()));
    }
    Ok(())
}

/// Accuracy of the argmax of `model` under a PGD attack on `attack.loss`.
/// A point counts as robust only when both the clean input and the attack
/// output are classified correctly, since `delta = 0` is admissible.
pub fn evaluate_robust_accuracy(
    model: &dyn LogitModel,
    dataset: &Dataset,
    attack: &AttackConfig,
) -> Result<RobustEvaluation> {
    attack.validate()?;
    check_model(dataset, model.input_dim(), model.num_classes())?;
    let mut points = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let (x, y) = (dataset.x(i), dataset.y(i));
        let adv = pgd_attack(model, x, y, attack.loss, attack, &mut sample_rng(attack.seed, i as u64));
        let clean = f64::from(u8::from(argmax(&model.logits(x)) == y));
        let at_adv = f64::from(u8::from(argmax(&model.logits(&adv.x_adv)) == y));
        points.push(PointEvaluation {
            clean,
            adversarial: clean.min(at_adv),
            objective: adv.objective,
            x_adv: adv.x_adv,
        });
    }
    Ok(RobustEvaluation::from_points(points))
}

/// Expected accuracy of the randomized prediction rule, in closed form, at
/// the perturbations found by the attack at `level`.
pub fn evaluate_randomized_accuracy(
    ensemble: &RandomizedEnsemble,
    dataset: &Dataset,
    attack: &AttackConfig,
    level: AggregationLevel,
) -> Result<RobustEvaluation> {
    check_model(dataset, ensemble.g1.input_dim(), ensemble.g1.num_classes())?;
    let mut points = Vec::with_capacity(dataset.len());
    for i in 0..dataset.len() {
        let (x, y) = (dataset.x(i), dataset.y(i));
        let adv = randomized_ensemble_attack(ensemble, x, y, attack, level, &mut sample_rng(attack.seed, i as u64))?;
        let clean = ensemble.expected_correct(x, y);
        let at_adv = ensemble.expected_correct(&adv.x_adv, y);
        points.push(PointEvaluation {
            clean,
            adversarial: clean.min(at_adv),
            objective: adv.objective,
            x_adv: adv.x_adv,
        });
    }
    Ok(RobustEvaluation::from_points(points))
}
