//! Mini-batch samplers producing `(x, y, y', x + delta)` tuples for the
//! neural boosting loop.
//!
//! The hard-weight samplers (`all`, `rnd`, `max`) attack the supplied model
//! with PGD on an MCE objective. The soft sampler (`exp`) draws from a finite
//! candidate pool with probabilities proportional to `exp(eta * mce)` of the
//! summed logits of the previous members.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use super::attack::{pgd, project, sample_rng, AttackConfig, LossObjective};
use crate::domain::Dataset;
use crate::error::{invalid_arg, Error, Result};
use crate::losses::{softmax, LossKind};
use crate::nn::{LinearCombination, LogitModel, MlpParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledTuple {
    pub index: usize,
    pub y: usize,
    pub rival: usize,
    /// The perturbed input `x + delta`.
    pub x_adv: Vec<f64>,
}

fn check_model(dataset: &Dataset, model: &dyn LogitModel) -> Result<()> {
    if model.input_dim() != dataset.dim() || model.num_classes() != dataset.num_classes() {
        return Err(Error::ShapeMismatch("model shape does not match the dataset".into()));
    }
    Ok(())
}

const RIVAL_STREAM_SALT: u64 = 0x5DEE_CE66_D1CE_4E5B;

/// Seed for the PGD stream of the `call`-th sampler invocation.
pub(crate) fn call_seed(config: &AttackConfig, call: u64) -> u64 {
    config.seed ^ call.wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// One PGD run per sample maximizing the summed MCE over all rivals; emits
/// `K - 1` tuples sharing the perturbation.
pub fn sampler_all(
    dataset: &Dataset,
    model: &dyn LogitModel,
    batch: &[usize],
    config: &AttackConfig,
    call: u64,
) -> Result<Vec<SampledTuple>> {
    check_model(dataset, model)?;
    let k = dataset.num_classes();
    let seed = call_seed(config, call);
    let mut out = Vec::with_capacity(batch.len() * (k - 1));
    for (slot, &i) in batch.iter().enumerate() {
        let y = dataset.y(i);
        let objective = LossObjective::new(model, y, LossKind::MceSum);
        let adv = pgd(&objective, dataset.x(i), config, &mut sample_rng(seed, slot as u64));
        for rival in (0..k).filter(|&r| r != y) {
            out.push(SampledTuple {
                index: i,
                y,
                rival,
                x_adv: adv.x_adv.clone(),
            });
        }
    }
    Ok(out)
}

/// Draws one rival uniformly per sample and attacks the pairwise MCE.
pub fn sampler_rnd(
    dataset: &Dataset,
    model: &dyn LogitModel,
    batch: &[usize],
    config: &AttackConfig,
    call: u64,
) -> Result<Vec<SampledTuple>> {
    check_model(dataset, model)?;
    let k = dataset.num_classes();
    let seed = call_seed(config, call);
    batch
        .iter()
        .enumerate()
        .map(|(slot, &i)| {
            let y = dataset.y(i);
            // label draw on its own stream so the PGD start matches the other samplers
            let mut label_rng = sample_rng(seed ^ RIVAL_STREAM_SALT, slot as u64);
            let mut rival = label_rng.random_range(0..k - 1);
            if rival >= y {
                rival += 1;
            }
            let objective = LossObjective::new(model, y, LossKind::Mce { rival });
            let adv = pgd(&objective, dataset.x(i), config, &mut sample_rng(seed, slot as u64));
            Ok(SampledTuple {
                index: i,
                y,
                rival,
                x_adv: adv.x_adv,
            })
        })
        .collect()
}

/// Attacks every rival separately and keeps the pair with the highest MCE
/// (lowest rival on ties).
pub fn sampler_max(
    dataset: &Dataset,
    model: &dyn LogitModel,
    batch: &[usize],
    config: &AttackConfig,
    call: u64,
) -> Result<Vec<SampledTuple>> {
    check_model(dataset, model)?;
    let k = dataset.num_classes();
    let seed = call_seed(config, call);
    batch
        .iter()
        .enumerate()
        .map(|(slot, &i)| {
            let y = dataset.y(i);
            let mut best: Option<(f64, usize, Vec<f64>)> = None;
            for rival in (0..k).filter(|&r| r != y) {
                let objective = LossObjective::new(model, y, LossKind::Mce { rival });
                let adv = pgd(&objective, dataset.x(i), config, &mut sample_rng(seed, slot as u64));
                if best.as_ref().is_none_or(|(v, _, _)| adv.objective > *v) {
                    best = Some((adv.objective, rival, adv.x_adv));
                }
            }
            let (_, rival, x_adv) = best.expect("at least one rival");
            Ok(SampledTuple {
                index: i,
                y,
                rival,
                x_adv,
            })
        })
        .collect()
}

/// Finite support for the soft sampler: per `(x, y, y')`, the clean point,
/// `r` random feasible perturbations, and the PGD perturbation found against
/// each past ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidatePool {
    entries: Vec<SampledTuple>,
}

impl CandidatePool {
    pub fn initial<R: Rng + ?Sized>(dataset: &Dataset, epsilon: f64, random: usize, rng: &mut R) -> Self {
        let k = dataset.num_classes();
        let mut entries = Vec::new();
        for i in 0..dataset.len() {
            let y = dataset.y(i);
            for rival in (0..k).filter(|&r| r != y) {
                entries.push(SampledTuple {
                    index: i,
                    y,
                    rival,
                    x_adv: dataset.x(i).to_vec(),
                });
                for _ in 0..random {
                    let x = dataset.x(i);
                    let mut x_adv: Vec<f64> = x
                        .iter()
                        .map(|v| {
                            let d: f64 = if epsilon > 0.0 { rng.random_range(-epsilon..=epsilon) } else { 0.0 };
                            v + d
                        })
                        .collect();
                    project(x, &mut x_adv, epsilon, None);
                    entries.push(SampledTuple { index: i, y, rival, x_adv });
                }
            }
        }
        Self { entries }
    }

    pub fn from_entries(entries: Vec<SampledTuple>) -> Result<Self> {
        if entries.is_empty() {
            return Err(invalid_arg("pool", "candidate pool is empty"));
        }
        Ok(Self { entries })
    }

    /// Adds the best pairwise-MCE PGD perturbation against `model` for every
    /// `(x, y, y')`.
    pub fn add_pgd_round(&mut self, dataset: &Dataset, model: &dyn LogitModel, config: &AttackConfig, call: u64) -> Result<()> {
        check_model(dataset, model)?;
        let k = dataset.num_classes();
        let seed = call_seed(config, call);
        let mut slot = 0u64;
        for i in 0..dataset.len() {
            let y = dataset.y(i);
            for rival in (0..k).filter(|&r| r != y) {
                let objective = LossObjective::new(model, y, LossKind::Mce { rival });
                let adv = pgd(&objective, dataset.x(i), config, &mut sample_rng(seed, slot));
                slot += 1;
                self.entries.push(SampledTuple {
                    index: i,
                    y,
                    rival,
                    x_adv: adv.x_adv,
                });
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> &[SampledTuple] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Pairwise MCE of the summed logits of `members` at every candidate;
    /// all zeros when there are no members yet.
    pub fn scores(&self, members: &[MlpParams]) -> Result<Vec<f64>> {
        if members.is_empty() {
            return Ok(vec![0.0; self.entries.len()]);
        }
        let sum = LinearCombination::new(members.iter().map(|m| (m, 1.0)).collect())?;
        self.entries
            .iter()
            .map(|e| LossKind::Mce { rival: e.rival }.value(&sum.logits(&e.x_adv), e.y))
            .collect()
    }
}

/// `P(c) ∝ exp(eta * score(c))`.
pub fn exp_sampling_distribution(scores: &[f64], eta: f64) -> Vec<f64> {
    let scaled: Vec<f64> = scores.iter().map(|s| eta * s).collect();
    softmax(&scaled)
}

/// Draws `batch_size` pool entries with replacement from `probabilities`.
pub fn sampler_exp<R: Rng + ?Sized>(
    pool: &CandidatePool,
    probabilities: &[f64],
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<SampledTuple>> {
    if pool.is_empty() {
        return Err(invalid_arg("pool", "candidate pool is empty"));
    }
    if probabilities.len() != pool.len() {
        return Err(Error::ShapeMismatch("one probability per pool entry required".into()));
    }
    let dist = WeightedIndex::new(probabilities).map_err(|e| invalid_arg("probabilities", e.to_string()))?;
    Ok((0..batch_size)
        .map(|_| pool.entries[dist.sample(rng)].clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(k: usize) -> (Dataset, MlpParams) {
        let ds = Dataset::new(
            vec![vec![0.1, 0.2], vec![-0.3, 0.4], vec![0.9, -0.1]],
            vec![0, 1 % k, 2 % k],
            k,
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = MlpParams::xavier(&[2, 6, k], &mut rng).unwrap();
        (ds, m)
    }

    #[test]
    fn tuple_counts() {
        let (ds, m) = setup(3);
        let cfg = AttackConfig::pgd(0.1, 3);
        assert_eq!(sampler_all(&ds, &m, &[0, 1, 2, 0], &cfg, 0).unwrap().len(), 8);
        assert_eq!(sampler_rnd(&ds, &m, &[0, 1, 2, 0], &cfg, 0).unwrap().len(), 4);
        assert_eq!(sampler_max(&ds, &m, &[0, 1], &cfg, 0).unwrap().len(), 2);
    }

    #[test]
    fn rnd_is_reproducible_and_never_true_label() {
        let (ds, m) = setup(3);
        let cfg = AttackConfig::pgd(0.1, 2);
        let a = sampler_rnd(&ds, &m, &[0, 1, 2, 1, 0], &cfg, 7).unwrap();
        let b = sampler_rnd(&ds, &m, &[0, 1, 2, 1, 0], &cfg, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|t| t.rival != t.y));
    }

    #[test]
    fn exp_distribution_examples() {
        assert_eq!(exp_sampling_distribution(&[3.0, -1.0, 0.5], 0.0), vec![1.0 / 3.0; 3]);
        let p = exp_sampling_distribution(&[1.0, -1.0], 0.5);
        assert!((p[0] - 0.731_058_578_630_004_9).abs() < 1e-15);
    }

    #[test]
    fn empty_pool_rejected() {
        assert!(CandidatePool::from_entries(vec![]).is_err());
        let pool = CandidatePool { entries: vec![] };
        assert!(sampler_exp(&pool, &[], 3, &mut ChaCha8Rng::seed_from_u64(0)).is_err());
    }

    #[test]
    fn initial_pool_size() {
        let (ds, _) = setup(3);
        let pool = CandidatePool::initial(&ds, 0.1, 4, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(pool.len(), 3 * 2 * 5);
        for e in pool.entries() {
            for (a, b) in e.x_adv.iter().zip(ds.x(e.index)) {
                assert!((a - b).abs() <= 0.1);
            }
        }
    }
}
