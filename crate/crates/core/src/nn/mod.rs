//! A small fully connected score network with hand-written reverse-mode
//! gradients, uniform logit-averaging ensembles, and momentum SGD.

pub mod boost;
pub mod checkpoint;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::losses::LossKind;

pub use boost::{mrboost_nn_run, InitRule, NnBoostConfig, NnBoostRun, NnRoundMetrics, SamplerKind};

/// Default hidden architecture for the toy experiments.
pub const DEFAULT_HIDDEN: [usize; 2] = [64, 64];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub fan_in: usize,
    pub fan_out: usize,
    /// Row-major `fan_out x fan_in`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Layer {
    fn zeros(fan_in: usize, fan_out: usize) -> Self {
        Self {
            fan_in,
            fan_out,
            weights: vec![0.0; fan_in * fan_out],
            bias: vec![0.0; fan_out],
        }
    }

    fn affine(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for (row, b) in self.weights.chunks_exact(self.fan_in).zip(&self.bias) {
            out.push(row.iter().zip(input).map(|(w, x)| w * x).sum::<f64>() + b);
        }
    }
}

/// Rectifier network: ReLU on hidden layers, identity on the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    layers: Vec<Layer>,
}

impl MlpParams {
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        check_sizes(sizes)?;
        Ok(Self {
            layers: sizes.windows(2).map(|w| Layer::zeros(w[0], w[1])).collect(),
        })
    }

    /// Xavier-uniform weights on `(-a, a)`, `a = sqrt(6 / (fan_in + fan_out))`,
    /// and zero biases.
    pub fn xavier<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut params = Self::zeros(sizes)?;
        for layer in &mut params.layers {
            let a = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-a..a);
            }
        }
        Ok(params)
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::ShapeMismatch("network needs at least one layer".into()));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.fan_in == 0 || l.fan_out == 0 || l.weights.len() != l.fan_in * l.fan_out || l.bias.len() != l.fan_out {
                return Err(Error::ShapeMismatch(format!("layer {i} has inconsistent shapes")));
            }
            if i > 0 && layers[i - 1].fan_out != l.fan_in {
                return Err(Error::ShapeMismatch(format!("layer {i} input does not match layer {}", i - 1)));
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.layers[0].fan_in];
        s.extend(self.layers.iter().map(|l| l.fan_out));
        s
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.values().all(|v| v.is_finite())
    }

    fn values(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias))
    }

    fn values_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.bias.iter_mut()))
    }

    /// Flat copy of all parameters, layer by layer, weights before biases.
    pub fn to_flat(&self) -> Vec<f64> {
        self.values().copied().collect()
    }

    pub fn set_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                self.num_params()
            )));
        }
        for (p, v) in self.values_mut().zip(flat) {
            *p = *v;
        }
        Ok(())
    }

    /// `self += scale * other`.
    pub fn add_scaled(&mut self, other: &Self, scale: f64) {
        for (a, b) in self.values_mut().zip(other.values()) {
            *a += scale * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values_mut().for_each(|v| *v *= s);
    }

    pub fn norm(&self) -> f64 {
        self.values().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn forward(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        Ok(self.trace(x).logits().to_vec())
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.input_dim() {
            return Err(Error::ShapeMismatch(format!(
                "input has dimension {}, network expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        Ok(())
    }

    fn trace(&self, x: &[f64]) -> Trace {
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(x.to_vec());
        let last = self.layers.len() - 1;
        for (l, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::with_capacity(layer.fan_out);
            layer.affine(&acts[l], &mut z);
            if l < last {
                z.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(z);
        }
        Trace { acts }
    }

    /// Back-propagates `upstream = dL/dlogits`. Accumulates `scale * dL/dθ`
    /// into `param_grad` when given, and returns `dL/dx`.
    fn backward(&self, trace: &Trace, upstream: &[f64], mut param_grad: Option<(&mut MlpParams, f64)>) -> Vec<f64> {
        let mut delta = upstream.to_vec();
        for l in (0..self.layers.len()).rev() {
            let layer = &self.layers[l];
            let input = &trace.acts[l];
            if let Some((grad, scale)) = param_grad.as_mut() {
                let gl = &mut grad.layers[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    let sd = *scale * d;
                    gl.bias[o] += sd;
                    for (gw, &a) in gl.weights[o * layer.fan_in..(o + 1) * layer.fan_in].iter_mut().zip(input) {
                        *gw += sd * a;
                    }
                }
            }
            let mut prev = vec![0.0; layer.fan_in];
            for (o, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (p, &w) in prev.iter_mut().zip(&layer.weights[o * layer.fan_in..(o + 1) * layer.fan_in]) {
                    *p += w * d;
                }
            }
            if l > 0 {
                // ReLU mask from the stored post-activation
                for (p, &a) in prev.iter_mut().zip(input) {
                    if a <= 0.0 {
                        *p = 0.0;
                    }
                }
            }
            delta = prev;
        }
        delta
    }
}

fn check_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 || sizes.contains(&0) {
        return Err(Error::ShapeMismatch(format!("invalid layer sizes {sizes:?}")));
    }
    Ok(())
}

struct Trace {
    acts: Vec<Vec<f64>>,
}

impl Trace {
    fn logits(&self) -> &[f64] {
        self.acts.last().expect("non-empty")
    }
}

/// Anything producing logits that can be differentiated with respect to its
/// input.
pub trait LogitModel {
    fn input_dim(&self) -> usize;
    fn num_classes(&self) -> usize;
    fn logits(&self, x: &[f64]) -> Vec<f64>;
    /// Evaluates the logits, asks `head` for `dL/dlogits`, and returns the
    /// logits together with `dL/dx`.
    fn logits_and_input_grad(&self, x: &[f64], head: &mut dyn FnMut(&[f64]) -> Vec<f64>) -> (Vec<f64>, Vec<f64>);
}

impl LogitModel for MlpParams {
    fn input_dim(&self) -> usize {
        MlpParams::input_dim(self)
    }

    fn num_classes(&self) -> usize {
        MlpParams::num_classes(self)
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.trace(x).logits().to_vec()
    }

    fn logits_and_input_grad(&self, x: &[f64], head: &mut dyn FnMut(&[f64]) -> Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        let trace = self.trace(x);
        let up = head(trace.logits());
        let gx = self.backward(&trace, &up, None);
        (trace.logits().to_vec(), gx)
    }
}

/// `sum_i c_i g_i(x)` over borrowed networks.
#[derive(Debug, Clone)]
pub struct LinearCombination<'a> {
    pub terms: Vec<(&'a MlpParams, f64)>,
}

impl<'a> LinearCombination<'a> {
    pub fn new(terms: Vec<(&'a MlpParams, f64)>) -> Result<Self> {
        let Some((first, _)) = terms.first() else {
            return Err(Error::ShapeMismatch("empty combination".into()));
        };
        let (d, k) = (first.input_dim(), first.num_classes());
        if terms.iter().any(|(m, _)| m.input_dim() != d || m.num_classes() != k) {
            return Err(Error::ShapeMismatch("combined networks disagree on shape".into()));
        }
        Ok(Self { terms })
    }

    pub fn uniform(members: &'a [MlpParams]) -> Result<Self> {
        let w = 1.0 / members.len().max(1) as f64;
        Self::new(members.iter().map(|m| (m, w)).collect())
    }
}

impl LogitModel for LinearCombination<'_> {
    fn input_dim(&self) -> usize {
        self.terms[0].0.input_dim()
    }

    fn num_classes(&self) -> usize {
        self.terms[0].0.num_classes()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.num_classes()];
        for (m, c) in &self.terms {
            for (o, v) in out.iter_mut().zip(m.trace(x).logits()) {
                *o += c * v;
            }
        }
        out
    }

    fn logits_and_input_grad(&self, x: &[f64], head: &mut dyn FnMut(&[f64]) -> Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        let traces: Vec<Trace> = self.terms.iter().map(|(m, _)| m.trace(x)).collect();
        let mut logits = vec![0.0; self.num_classes()];
        for ((_, c), t) in self.terms.iter().zip(&traces) {
            for (o, v) in logits.iter_mut().zip(t.logits()) {
                *o += c * v;
            }
        }
        let up = head(&logits);
        let mut gx = vec![0.0; self.input_dim()];
        for ((m, c), t) in self.terms.iter().zip(&traces) {
            if *c == 0.0 {
                continue;
            }
            let scaled: Vec<f64> = up.iter().map(|u| c * u).collect();
            for (g, v) in gx.iter_mut().zip(m.backward(t, &scaled, None)) {
                *g += v;
            }
        }
        (logits, gx)
    }
}

/// Uniform average of member logits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreEnsemble {
    members: Vec<MlpParams>,
}

impl ScoreEnsemble {
    pub fn new(members: Vec<MlpParams>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::ShapeMismatch("ensemble needs at least one member".into()));
        }
        LinearCombination::uniform(&members)?;
        Ok(Self { members })
    }

    pub fn members(&self) -> &[MlpParams] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn push(&mut self, member: MlpParams) -> Result<()> {
        let first = &self.members[0];
        if member.input_dim() != first.input_dim() || member.num_classes() != first.num_classes() {
            return Err(Error::ShapeMismatch("new member disagrees on shape".into()));
        }
        self.members.push(member);
        Ok(())
    }

    pub fn as_combination(&self) -> LinearCombination<'_> {
        LinearCombination::uniform(&self.members).expect("validated on construction")
    }

    /// The first `len` members as an ensemble.
    pub fn prefix(&self, len: usize) -> Result<Self> {
        Self::new(self.members[..len.min(self.members.len())].to_vec())
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }
}

impl LogitModel for ScoreEnsemble {
    fn input_dim(&self) -> usize {
        self.members[0].input_dim()
    }

    fn num_classes(&self) -> usize {
        self.members[0].num_classes()
    }

    fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.as_combination().logits(x)
    }

    fn logits_and_input_grad(&self, x: &[f64], head: &mut dyn FnMut(&[f64]) -> Vec<f64>) -> (Vec<f64>, Vec<f64>) {
        self.as_combination().logits_and_input_grad(x, head)
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    crate::domain::argmax_classify(v).unwrap_or(0)
}

/// Loss value and `dL/dθ` at one example.
pub fn grad_wrt_params(params: &MlpParams, loss: LossKind, x: &[f64], y: usize) -> Result<(f64, MlpParams)> {
    params.check_input(x)?;
    let trace = params.trace(x);
    let (value, up) = loss.value_and_grad(trace.logits(), y)?;
    let mut grad = MlpParams::zeros(&params.sizes())?;
    params.backward(&trace, &up, Some((&mut grad, 1.0)));
    Ok((value, grad))
}

/// Loss value and `dL/dx` at one example.
pub fn grad_wrt_input(params: &MlpParams, loss: LossKind, x: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
    params.check_input(x)?;
    let trace = params.trace(x);
    let (value, up) = loss.value_and_grad(trace.logits(), y)?;
    Ok((value, params.backward(&trace, &up, None)))
}

/// One training example: the loss is evaluated on
/// `offset + scale * g_θ(x)` (offset defaults to zero).
#[derive(Debug, Clone, PartialEq)]
pub struct TrainExample {
    pub x: Vec<f64>,
    pub y: usize,
    pub loss: LossKind,
    pub offset: Option<Vec<f64>>,
}

impl TrainExample {
    pub fn new(x: Vec<f64>, y: usize, loss: LossKind) -> Self {
        Self { x, y, loss, offset: None }
    }
}

/// Mean loss and mean gradient over a batch, accumulated in batch order.
pub fn batch_gradient(params: &MlpParams, batch: &[TrainExample], scale: f64) -> Result<(f64, MlpParams)> {
    let mut grad = MlpParams::zeros(&params.sizes())?;
    if batch.is_empty() {
        return Ok((0.0, grad));
    }
    let inv = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    for ex in batch {
        params.check_input(&ex.x)?;
        let trace = params.trace(&ex.x);
        let z: Vec<f64> = match &ex.offset {
            Some(off) => off.iter().zip(trace.logits()).map(|(o, g)| o + scale * g).collect(),
            None => trace.logits().iter().map(|g| scale * g).collect(),
        };
        let (value, up) = ex.loss.value_and_grad(&z, ex.y)?;
        total += value;
        params.backward(&trace, &up, Some((&mut grad, scale * inv)));
    }
    Ok((total * inv, grad))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SgdConfig {
    pub step_size: f64,
    pub iterations: usize,
    pub batch_size: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            step_size: 0.05,
            iterations: 2000,
            batch_size: 64,
            momentum: 0.9,
            weight_decay: 0.0,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        use crate::error::invalid_arg;
        if !self.step_size.is_finite() || self.step_size <= 0.0 {
            return Err(invalid_arg("step_size", "must be positive"));
        }
        if self.batch_size == 0 {
            return Err(invalid_arg("batch_size", "must be at least 1"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(invalid_arg("momentum", "must lie in [0, 1)"));
        }
        if self.weight_decay.is_nan() || self.weight_decay < 0.0 {
            return Err(invalid_arg("weight_decay", "must be non-negative"));
        }
        Ok(())
    }
}

/// Heavy-ball SGD with L2 weight decay.
#[derive(Debug, Clone)]
pub struct Sgd {
    config: SgdConfig,
    velocity: MlpParams,
}

impl Sgd {
    pub fn new(config: SgdConfig, params: &MlpParams) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            velocity: MlpParams::zeros(&params.sizes())?,
            config,
        })
    }

    pub fn step(&mut self, params: &mut MlpParams, grad: &MlpParams) {
        let c = &self.config;
        self.velocity.scale(c.momentum);
        self.velocity.add_scaled(grad, 1.0);
        if c.weight_decay > 0.0 {
            self.velocity.add_scaled(params, c.weight_decay);
        }
        params.add_scaled(&self.velocity, -c.step_size);
    }
}
