//! The neural boosting loop: each round trains one score network with SGD
//! on MCE over mini-batches drawn by a sampler, and the output is the
//! uniform logit average of all rounds.

use serde::{Deserialize, Serialize};

use super::{LinearCombination, LogitModel, MlpParams, ScoreEnsemble, SgdConfig, TrainExample};
use crate::domain::Dataset;
use crate::error::{invalid_arg, Result};
use crate::losses::LossKind;
use crate::robust::attack::{sample_rng, AttackConfig};
use crate::robust::sampler::{
    exp_sampling_distribution, sampler_all, sampler_exp, sampler_max, sampler_rnd, CandidatePool, SampledTuple,
};
use crate::robust::training::{init_params, layer_sizes, train_stage};
use crate::robust::evaluate_robust_accuracy;

pub use crate::robust::training::InitRule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplerKind {
    Exp,
    All,
    Rnd,
    Max,
}

impl std::str::FromStr for SamplerKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exp" => Ok(Self::Exp),
            "all" => Ok(Self::All),
            "rnd" => Ok(Self::Rnd),
            "max" => Ok(Self::Max),
            other => Err(invalid_arg("sampler", format!("expected exp, all, rnd or max, got `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnBoostConfig {
    pub rounds: usize,
    pub hidden: Vec<usize>,
    pub sgd: SgdConfig,
    pub sampler: SamplerKind,
    pub init: InitRule,
    /// Attack used by the samplers during training.
    pub attack: AttackConfig,
    /// Temperature of the soft sampler; `1 / (2 sqrt(T))` when absent.
    pub eta: Option<f64>,
    /// Random feasible perturbations per `(x, y, y')` in the soft sampler's pool.
    pub pool_random: usize,
    /// Include the member being trained in the attacked ensemble.
    pub aggressive: bool,
}

impl NnBoostConfig {
    pub fn new(rounds: usize, sampler: SamplerKind, init: InitRule, sgd: SgdConfig, attack: AttackConfig) -> Self {
        Self {
            rounds,
            hidden: super::DEFAULT_HIDDEN.to_vec(),
            sgd,
            sampler,
            init,
            attack,
            eta: None,
            pool_random: 8,
            aggressive: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(invalid_arg("rounds", "must be at least 1"));
        }
        if self.hidden.contains(&0) {
            return Err(invalid_arg("hidden", "layer widths must be positive"));
        }
        if let Some(eta) = self.eta {
            if !eta.is_finite() || eta < 0.0 {
                return Err(invalid_arg("eta", "must be finite and non-negative"));
            }
        }
        self.sgd.validate()?;
        self.attack.validate()
    }

    pub fn resolved_eta(&self) -> f64 {
        self.eta.unwrap_or(1.0 / (2.0 * (self.rounds as f64).sqrt()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnRoundMetrics {
    pub t: usize,
    pub clean_accuracy: f64,
    pub adversarial_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnBoostRun {
    pub ensemble: ScoreEnsemble,
    /// One entry per round when an evaluation set was supplied.
    pub metrics: Vec<NnRoundMetrics>,
}

const POOL_SALT: u64 = 0x3C6E_F372_FE94_F82B;
const EXP_DRAW_SALT: u64 = 0xBB67_AE85_84CA_A73B;

fn tuples_to_examples(tuples: Vec<SampledTuple>) -> Vec<TrainExample> {
    tuples
        .into_iter()
        .map(|t| TrainExample::new(t.x_adv, t.y, LossKind::Mce { rival: t.rival }))
        .collect()
}

/// Runs the boosting loop on `train`. When `eval` is given, the ensemble
/// of the first `t` members is evaluated after every round.
pub fn mrboost_nn_run(
    train: &Dataset,
    eval: Option<(&Dataset, &AttackConfig)>,
    config: &NnBoostConfig,
) -> Result<NnBoostRun> {
    config.validate()?;
    if let Some((_, a)) = eval {
        a.validate()?;
    }
    let sizes = layer_sizes(train, &config.hidden);
    let eta = config.resolved_eta();
    let mut pool = match config.sampler {
        SamplerKind::Exp => Some(CandidatePool::initial(
            train,
            config.attack.epsilon,
            config.pool_random,
            &mut sample_rng(config.attack.seed ^ POOL_SALT, 0),
        )),
        _ => None,
    };
    let mut members: Vec<MlpParams> = Vec::with_capacity(config.rounds);
    let mut metrics = Vec::new();
    for stage in 0..config.rounds as u64 {
        let mut params = match (config.init, members.last()) {
            (InitRule::Per, Some(prev)) => prev.clone(),
            _ => init_params(&sizes, config.sgd.seed, stage)?,
        };
        let t = (members.len() + 1) as f64;
        match &pool {
            Some(pool) => {
                // the soft distribution depends only on past members
                let probs = exp_sampling_distribution(&pool.scores(&members)?, eta);
                let batch_size = config.sgd.batch_size;
                train_stage(train, &mut params, &config.sgd, stage, 1.0, |_, _, call| {
                    let mut rng = sample_rng(config.attack.seed ^ EXP_DRAW_SALT, call);
                    Ok(tuples_to_examples(sampler_exp(pool, &probs, batch_size, &mut rng)?))
                })?;
            }
            None => {
                let past = &members;
                train_stage(train, &mut params, &config.sgd, stage, 1.0, |model, batch, call| {
                    let tuples = if past.is_empty() {
                        hard_sample(config.sampler, train, model, batch, &config.attack, call)?
                    } else if config.aggressive {
                        let mut terms: Vec<(&MlpParams, f64)> = past.iter().map(|m| (m, 1.0 / t)).collect();
                        terms.push((model, 1.0 / t));
                        let combo = LinearCombination::new(terms)?;
                        hard_sample(config.sampler, train, &combo, batch, &config.attack, call)?
                    } else {
                        let combo = LinearCombination::uniform(past)?;
                        hard_sample(config.sampler, train, &combo, batch, &config.attack, call)?
                    };
                    Ok(tuples_to_examples(tuples))
                })?;
            }
        }
        members.push(params);
        if let Some(pool) = pool.as_mut() {
            let avg = LinearCombination::uniform(&members)?;
            pool.add_pgd_round(train, &avg, &config.attack, stage)?;
        }
        if let Some((data, attack)) = eval {
            let ensemble = ScoreEnsemble::new(members.clone())?;
            let ev = evaluate_robust_accuracy(&ensemble, data, attack)?;
            metrics.push(NnRoundMetrics {
                t: members.len(),
                clean_accuracy: ev.clean_accuracy,
                adversarial_accuracy: ev.robust_accuracy,
            });
        }
    }
    Ok(NnBoostRun {
        ensemble: ScoreEnsemble::new(members)?,
        metrics,
    })
}

fn hard_sample(
    kind: SamplerKind,
    dataset: &Dataset,
    model: &dyn LogitModel,
    batch: &[usize],
    attack: &AttackConfig,
    call: u64,
) -> Result<Vec<SampledTuple>> {
    match kind {
        SamplerKind::All => sampler_all(dataset, model, batch, attack, call),
        SamplerKind::Rnd => sampler_rnd(dataset, model, batch, attack, call),
        SamplerKind::Max => sampler_max(dataset, model, batch, attack, call),
        SamplerKind::Exp => unreachable!("soft sampler handled by the pool branch"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robust::training::{adversarial_training, AtLoss};

    fn toy() -> Dataset {
        Dataset::new(
            vec![vec![-1.0, 0.0], vec![-0.8, 0.3], vec![1.0, 0.1], vec![0.9, -0.2], vec![0.0, 1.0]],
            vec![0, 0, 1, 1, 2],
            3,
        )
        .unwrap()
    }

    fn sgd(iterations: usize) -> SgdConfig {
        SgdConfig {
            iterations,
            batch_size: 4,
            seed: 21,
            ..Default::default()
        }
    }

    #[test]
    fn single_round_all_sampler_is_mce_adversarial_training() {
        let d = toy();
        let attack = AttackConfig::pgd(0.2, 3);
        let mut cfg = NnBoostConfig::new(1, SamplerKind::All, InitRule::Rnd, sgd(10), attack.clone());
        cfg.hidden = vec![5];
        let run = mrboost_nn_run(&d, None, &cfg).unwrap();
        let at = adversarial_training(&d, &[5], &sgd(10), &attack, AtLoss::MceA).unwrap();
        assert_eq!(run.ensemble.members(), &[at]);
    }

    #[test]
    fn persistent_init_without_steps_copies_first_member() {
        let d = toy();
        let mut cfg = NnBoostConfig::new(3, SamplerKind::Rnd, InitRule::Per, sgd(0), AttackConfig::pgd(0.2, 2));
        cfg.hidden = vec![4];
        let run = mrboost_nn_run(&d, None, &cfg).unwrap();
        let m = run.ensemble.members();
        assert_eq!(m.len(), 3);
        assert!(m.iter().all(|p| p == &m[0]));
        let x = [0.3, -0.4];
        let (a, b) = (run.ensemble.logits(&x), m[0].logits(&x));
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).abs() < 1e-12);
        }
    }

    #[test]
    fn every_sampler_runs_and_reports_metrics() {
        let d = toy();
        let eval_attack = AttackConfig::pgd(0.2, 4);
        for kind in [SamplerKind::Exp, SamplerKind::All, SamplerKind::Rnd, SamplerKind::Max] {
            let mut cfg = NnBoostConfig::new(2, kind, InitRule::Per, sgd(5), AttackConfig::pgd(0.2, 2));
            cfg.hidden = vec![4];
            cfg.pool_random = 2;
            let run = mrboost_nn_run(&d, Some((&d, &eval_attack)), &cfg).unwrap();
            assert_eq!(run.metrics.len(), 2);
            assert!(run.metrics.iter().all(|m| m.adversarial_accuracy <= m.clean_accuracy));
        }
    }

    #[test]
    fn deterministic_runs() {
        let d = toy();
        let mut cfg = NnBoostConfig::new(2, SamplerKind::Exp, InitRule::Rnd, sgd(6), AttackConfig::pgd(0.1, 2));
        cfg.hidden = vec![4];
        let a = mrboost_nn_run(&d, None, &cfg).unwrap();
        let b = mrboost_nn_run(&d, None, &cfg).unwrap();
        assert_eq!(a.ensemble, b.ensemble);
    }

    #[test]
    fn sampler_names() {
        assert_eq!("max".parse::<SamplerKind>().unwrap(), SamplerKind::Max);
        assert!("best".parse::<SamplerKind>().is_err());
    }
}
