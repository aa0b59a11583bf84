//! Adversarial-training baselines: AT with cross-entropy, AT with the
//! averaged MCE, the greedy stagewise RobBoost ensemble, and the two-member
//! randomized ensemble trained on the first member's adversarial examples.
//!
//! All loops share [`train_stage`], so two procedures that draw the same
//! batches and build the same examples produce bit-identical parameters.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attack::{pgd, sample_rng, AttackConfig, LossObjective};
use super::sampler::{call_seed, sampler_all};
use super::RandomizedEnsemble;
use crate::domain::Dataset;
use crate::error::{Error, Result};
use crate::losses::LossKind;
use crate::nn::{batch_gradient, LinearCombination, LogitModel, MlpParams, ScoreEnsemble, Sgd, SgdConfig, TrainExample};

const INIT_SALT: u64 = 0xA5A5_5A5A_0F0F_F0F0;

/// Xavier initialization for stage `stage` under `seed`.
pub(crate) fn init_params(sizes: &[usize], seed: u64, stage: u64) -> Result<MlpParams> {
    MlpParams::xavier(sizes, &mut sample_rng(seed ^ INIT_SALT, stage))
}

/// `[d, hidden..., K]` for a dataset.
pub fn layer_sizes(dataset: &Dataset, hidden: &[usize]) -> Vec<usize> {
    let mut sizes = vec![dataset.dim()];
    sizes.extend_from_slice(hidden);
    sizes.push(dataset.num_classes());
    sizes
}

/// Sampler call id for SGD step `step` of stage `stage`; distinct across a run.
pub(crate) fn call_id(stage: u64, step: usize) -> u64 {
    (stage << 32) | step as u64
}

/// Runs `sgd.iterations` momentum-SGD steps. Each step draws `batch_size`
/// indices uniformly with replacement from the stage's own stream, asks
/// `make_batch` for the training examples, and descends on their mean loss
/// evaluated at `offset + scale * g(x)`.
pub(crate) fn train_stage<F>(
    dataset: &Dataset,
    params: &mut MlpParams,
    sgd: &SgdConfig,
    stage: u64,
    scale: f64,
    mut make_batch: F,
) -> Result<()>
where
    F: FnMut(&MlpParams, &[usize], u64) -> Result<Vec<TrainExample>>,
{
    let mut opt = Sgd::new(sgd.clone(), params)?;
    let mut rng: ChaCha8Rng = sample_rng(sgd.seed, stage);
    let n = dataset.len();
    for step in 0..sgd.iterations {
        let batch: Vec<usize> = (0..sgd.batch_size).map(|_| rng.random_range(0..n)).collect();
        let examples = make_batch(params, &batch, call_id(stage, step))?;
        let (_, grad) = batch_gradient(params, &examples, scale)?;
        opt.step(params, &grad);
        if !params.is_finite() {
            return Err(Error::Diverged(format!("non-finite parameters at stage {stage}, step {step}")));
        }
    }
    Ok(())
}

/// PGD on cross-entropy of `model` for every index in `batch`.
fn ce_adversarial_batch(
    dataset: &Dataset,
    model: &dyn LogitModel,
    batch: &[usize],
    attack: &AttackConfig,
    call: u64,
) -> Vec<(usize, Vec<f64>)> {
    let seed = call_seed(attack, call);
    batch
        .iter()
        .enumerate()
        .map(|(slot, &i)| {
            let objective = LossObjective::new(model, dataset.y(i), LossKind::Ce);
            let adv = pgd(&objective, dataset.x(i), attack, &mut sample_rng(seed, slot as u64));
            (i, adv.x_adv)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AtLoss {
    /// PGD on cross-entropy, train on cross-entropy.
    Ce,
    /// All-rivals perturbations, train on the averaged MCE.
    MceA,
}

fn check_training(dataset: &Dataset, sgd: &SgdConfig, attack: &AttackConfig) -> Result<()> {
    sgd.validate()?;
    attack.validate()?;
    if dataset.is_empty() {
        return Err(Error::InvalidDataset("training set is empty".into()));
    }
    Ok(())
}

/// Trains `params` in place as one adversarial-training stage.
pub(crate) fn adversarial_training_stage(
    dataset: &Dataset,
    params: &mut MlpParams,
    sgd: &SgdConfig,
    attack: &AttackConfig,
    loss: AtLoss,
    stage: u64,
) -> Result<()> {
    match loss {
        AtLoss::Ce => train_stage(dataset, params, sgd, stage, 1.0, |model, batch, call| {
            Ok(ce_adversarial_batch(dataset, model, batch, attack, call)
                .into_iter()
                .map(|(i, x)| TrainExample::new(x, dataset.y(i), LossKind::Ce))
                .collect())
        }),
        AtLoss::MceA => train_stage(dataset, params, sgd, stage, 1.0, |model, batch, call| {
            Ok(sampler_all(dataset, model, batch, attack, call)?
                .into_iter()
                .map(|t| TrainExample::new(t.x_adv, t.y, LossKind::Mce { rival: t.rival }))
                .collect())
        }),
    }
}

/// A single adversarially trained network. With `steps == 0` or
/// `epsilon == 0` this is standard training.
pub fn adversarial_training(
    dataset: &Dataset,
    hidden: &[usize],
    sgd: &SgdConfig,
    attack: &AttackConfig,
    loss: AtLoss,
) -> Result<MlpParams> {
    check_training(dataset, sgd, attack)?;
    let mut params = init_params(&layer_sizes(dataset, hidden), sgd.seed, 0)?;
    adversarial_training_stage(dataset, &mut params, sgd, attack, loss, 0)?;
    Ok(params)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageLoss {
    /// Loss on the running average of the ensemble including the new member.
    Whole,
    /// Loss on the new member alone; the attack still targets the ensemble.
    Ind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitRule {
    /// Fresh Xavier initialization per stage.
    Rnd,
    /// Start each stage from the previous member.
    Per,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobBoostConfig {
    pub rounds: usize,
    pub hidden: Vec<usize>,
    pub sgd: SgdConfig,
    pub attack: AttackConfig,
    pub init: InitRule,
    pub stage_loss: StageLoss,
}

/// Greedy stagewise robust boosting. Stage `t` minimizes the adversarial
/// cross-entropy of the uniform average of all `t` members, `(1/t)` times
/// the sum of the frozen members plus `(1/t) g_theta`, solved with AT.
pub fn robboost_greedy(dataset: &Dataset, config: &RobBoostConfig) -> Result<ScoreEnsemble> {
    check_training(dataset, &config.sgd, &config.attack)?;
    if config.rounds == 0 {
        return Err(crate::error::invalid_arg("rounds", "must be at least 1"));
    }
    let sizes = layer_sizes(dataset, &config.hidden);
    let mut members: Vec<MlpParams> = Vec::with_capacity(config.rounds);
    for stage in 0..config.rounds as u64 {
        let mut params = match (config.init, members.last()) {
            (InitRule::Per, Some(prev)) => prev.clone(),
            _ => init_params(&sizes, config.sgd.seed, stage)?,
        };
        if members.is_empty() {
            adversarial_training_stage(dataset, &mut params, &config.sgd, &config.attack, AtLoss::Ce, stage)?;
        } else {
            let t = (members.len() + 1) as f64;
            let scale = match config.stage_loss {
                StageLoss::Whole => 1.0 / t,
                StageLoss::Ind => 1.0,
            };
            let frozen = &members;
            train_stage(dataset, &mut params, &config.sgd, stage, scale, |model, batch, call| {
                let mut terms: Vec<(&MlpParams, f64)> = frozen.iter().map(|m| (m, 1.0 / t)).collect();
                terms.push((model, 1.0 / t));
                let combo = LinearCombination::new(terms)?;
                let prefix = LinearCombination::new(frozen.iter().map(|m| (m, 1.0 / t)).collect())?;
                Ok(ce_adversarial_batch(dataset, &combo, batch, &config.attack, call)
                    .into_iter()
                    .map(|(i, x)| {
                        let offset = match config.stage_loss {
                            StageLoss::Whole => Some(prefix.logits(&x)),
                            StageLoss::Ind => None,
                        };
                        TrainExample {
                            x,
                            y: dataset.y(i),
                            loss: LossKind::Ce,
                            offset,
                        }
                    })
                    .collect())
            })?;
        }
        members.push(params);
    }
    ScoreEnsemble::new(members)
}

/// Two-member randomized ensemble: `g1` adversarially trained with
/// cross-entropy, `g2` trained normally on `g1`'s PGD examples.
pub fn pinot_pair(
    dataset: &Dataset,
    hidden: &[usize],
    sgd: &SgdConfig,
    attack: &AttackConfig,
    w: f64,
) -> Result<RandomizedEnsemble> {
    check_training(dataset, sgd, attack)?;
    let g1 = adversarial_training(dataset, hidden, sgd, attack, AtLoss::Ce)?;
    let all: Vec<usize> = (0..dataset.len()).collect();
    let adv_features: Vec<Vec<f64>> = ce_adversarial_batch(dataset, &g1, &all, attack, u64::MAX)
        .into_iter()
        .map(|(_, x)| x)
        .collect();
    let adv_set = Dataset::new(adv_features, dataset.labels().to_vec(), dataset.num_classes())?;
    let mut g2 = init_params(&layer_sizes(dataset, hidden), sgd.seed, 1)?;
    train_stage(&adv_set, &mut g2, sgd, 1, 1.0, |_, batch, _| {
        Ok(batch
            .iter()
            .map(|&i| TrainExample::new(adv_set.x(i).to_vec(), adv_set.y(i), LossKind::Ce))
            .collect())
    })?;
    RandomizedEnsemble::new(g1, g2, w)
}
