//! l-infinity gradient-sign attacks (FGSM and PGD with best-so-far
//! tracking) over arbitrary differentiable objectives of the logits.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid_arg, Result};
use crate::losses::{log_sum_exp, softmax, LossKind};
use crate::nn::{LogitModel, MlpParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub epsilon: f64,
    pub step_size: f64,
    pub steps: usize,
    pub random_start: bool,
    pub seed: u64,
    /// Optional valid-input box applied after the ball projection.
    pub input_box: Option<(f64, f64)>,
    /// Objective for evaluation attacks; samplers pick their own.
    #[serde(default = "default_loss")]
    pub loss: LossKind,
}

fn default_loss() -> LossKind {
    LossKind::Ce
}

impl AttackConfig {
    /// PGD-`steps` with step size `epsilon / 4` and a random start.
    pub fn pgd(epsilon: f64, steps: usize) -> Self {
        Self {
            epsilon,
            step_size: epsilon / 4.0,
            steps,
            random_start: true,
            seed: 0,
            input_box: None,
            loss: LossKind::Ce,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// `steps == 0` is allowed and means "no attack".
    pub fn validate(&self) -> Result<()> {
        if !self.epsilon.is_finite() || self.epsilon < 0.0 {
            return Err(invalid_arg("epsilon", "must be finite and non-negative"));
        }
        if self.steps > 0 && self.epsilon > 0.0 && (self.step_size.is_nan() || self.step_size <= 0.0) {
            return Err(invalid_arg("step_size", "must be positive"));
        }
        if self.steps > 0 && !self.step_size.is_finite() {
            return Err(invalid_arg("step_size", "must be finite"));
        }
        if let Some((lo, hi)) = self.input_box {
            if lo.is_nan() || hi.is_nan() || lo > hi {
                return Err(invalid_arg("input_box", "lower bound exceeds upper bound"));
            }
        }
        Ok(())
    }

    pub(crate) fn is_noop(&self) -> bool {
        self.steps == 0 || self.epsilon == 0.0
    }
}

/// Independent random stream for sample `index` under `seed`, so results do
/// not depend on evaluation order.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A scalar function of the input to be maximized.
pub trait Objective {
    fn value(&self, x: &[f64]) -> f64;
    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>);
}

/// A surrogate loss of a model's logits at a fixed label.
pub struct LossObjective<'a, M: LogitModel + ?Sized> {
    pub model: &'a M,
    pub y: usize,
    pub loss: LossKind,
}

impl<'a, M: LogitModel + ?Sized> LossObjective<'a, M> {
    pub fn new(model: &'a M, y: usize, loss: LossKind) -> Self {
        Self { model, y, loss }
    }
}

impl<M: LogitModel + ?Sized> Objective for LossObjective<'_, M> {
    fn value(&self, x: &[f64]) -> f64 {
        self.loss
            .value(&self.model.logits(x), self.y)
            .expect("label validated by caller")
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let mut value = 0.0;
        let (_, grad) = self.model.logits_and_input_grad(x, &mut |z| {
            let (v, g) = self.loss.value_and_grad(z, self.y).expect("label validated by caller");
            value = v;
            g
        });
        (value, grad)
    }
}

/// `-log([w softmax(g1) + (1 - w) softmax(g2)]_y)`: the loss of a randomized
/// two-member ensemble aggregated at the probability level.
pub struct MixtureProbabilityObjective<'a> {
    pub g1: &'a MlpParams,
    pub g2: &'a MlpParams,
    pub w: f64,
    pub y: usize,
}

impl MixtureProbabilityObjective<'_> {
    fn log_terms(&self, z1: &[f64], z2: &[f64]) -> (f64, f64) {
        let l1 = self.w.ln() + z1[self.y] - log_sum_exp(z1);
        let l2 = (1.0 - self.w).ln() + z2[self.y] - log_sum_exp(z2);
        (l1, l2)
    }
}

impl Objective for MixtureProbabilityObjective<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let (l1, l2) = self.log_terms(&self.g1.logits(x), &self.g2.logits(x));
        -log_sum_exp(&[l1, l2])
    }

    fn value_and_grad(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let (z1, z2) = (self.g1.logits(x), self.g2.logits(x));
        let (l1, l2) = self.log_terms(&z1, &z2);
        let log_mix = log_sum_exp(&[l1, l2]);
        // responsibilities of each member for the true-class mass
        let (r1, r2) = ((l1 - log_mix).exp(), (l2 - log_mix).exp());
        let head = |z: &[f64], r: f64| -> Vec<f64> {
            let mut g: Vec<f64> = softmax(z).into_iter().map(|p| r * p).collect();
            g[self.y] -= r;
            g
        };
        let mut grad = vec![0.0; x.len()];
        for (model, z, r) in [(self.g1, &z1, r1), (self.g2, &z2, r2)] {
            if r == 0.0 {
                continue;
            }
            let (_, gx) = model.logits_and_input_grad(x, &mut |_| head(z, r));
            for (a, b) in grad.iter_mut().zip(gx) {
                *a += b;
            }
        }
        (-log_mix, grad)
    }
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Per-coordinate interval `[lo, hi]` around `x` whose endpoints satisfy
/// `|endpoint - x| <= eps` when evaluated in floating point.
fn ball_bounds(x: f64, eps: f64, input_box: Option<(f64, f64)>) -> (f64, f64) {
    let mut lo = x - eps;
    while x - lo > eps {
        lo = lo.next_up();
    }
    let mut hi = x + eps;
    while hi - x > eps {
        hi = hi.next_down();
    }
    if let Some((blo, bhi)) = input_box {
        lo = lo.max(blo.min(x));
        hi = hi.min(bhi.max(x));
    }
    (lo, hi)
}

pub(crate) fn project(x: &[f64], candidate: &mut [f64], eps: f64, input_box: Option<(f64, f64)>) {
    for (c, &xi) in candidate.iter_mut().zip(x) {
        let (lo, hi) = ball_bounds(xi, eps, input_box);
        *c = c.clamp(lo, hi);
    }
}

/// One signed-gradient step of size `epsilon` from `x`.
pub fn fgsm<O: Objective + ?Sized>(objective: &O, x: &[f64], epsilon: f64, input_box: Option<(f64, f64)>) -> Vec<f64> {
    let (_, g) = objective.value_and_grad(x);
    let mut out: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi + epsilon * sign(*gi)).collect();
    project(x, &mut out, epsilon, input_box);
    out
}

/// FGSM on the cross-entropy of a single network.
pub fn fgsm_ce(params: &MlpParams, x: &[f64], y: usize, config: &AttackConfig) -> Vec<f64> {
    fgsm(&LossObjective::new(params, y, LossKind::Ce), x, config.epsilon, config.input_box)
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    /// Perturbed input with the highest objective seen.
    pub x_adv: Vec<f64>,
    pub objective: f64,
    /// Best-so-far objective after the start point and after each step.
    pub history: Vec<f64>,
}

/// Projected gradient-sign ascent; returns the best iterate seen.
pub fn pgd<O: Objective + ?Sized, R: Rng + ?Sized>(
    objective: &O,
    x: &[f64],
    config: &AttackConfig,
    rng: &mut R,
) -> AttackOutcome {
    let eps = config.epsilon;
    let mut current = x.to_vec();
    if config.random_start && eps > 0.0 && config.steps > 0 {
        for c in &mut current {
            *c += rng.random_range(-eps..=eps);
        }
    }
    project(x, &mut current, eps, config.input_box);
    if config.is_noop() {
        let v = objective.value(&current);
        return AttackOutcome {
            x_adv: current,
            objective: v,
            history: vec![v],
        };
    }
    let (mut value, mut grad) = objective.value_and_grad(&current);
    let mut best = (value, current.clone());
    let mut history = Vec::with_capacity(config.steps + 1);
    history.push(value);
    for step in 0..config.steps {
        for (c, g) in current.iter_mut().zip(&grad) {
            *c += config.step_size * sign(*g);
        }
        project(x, &mut current, eps, config.input_box);
        if step + 1 == config.steps {
            value = objective.value(&current);
        } else {
            (value, grad) = objective.value_and_grad(&current);
        }
        if value > best.0 {
            best = (value, current.clone());
        }
        history.push(best.0);
    }
    AttackOutcome {
        x_adv: best.1,
        objective: best.0,
        history,
    }
}

/// PGD on `loss` of any logit model.
pub fn pgd_attack<M: LogitModel + ?Sized>(
    model: &M,
    x: &[f64],
    y: usize,
    loss: LossKind,
    config: &AttackConfig,
    rng: &mut ChaCha8Rng,
) -> AttackOutcome {
    pgd(&LossObjective::new(model, y, loss), x, config, rng)
}
