//! Cross-entropy and margin cross-entropy losses on logit vectors, with
//! closed-form gradients. Every exponential goes through [`log_sum_exp`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `log sum_j exp(v_j)` with max subtraction.
pub fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Max-shifted softmax; normalizes by the sum rather than by `exp(lse)` so
/// large common offsets cancel exactly.
pub fn softmax(v: &[f64]) -> Vec<f64> {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = v.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}

/// Which surrogate loss to evaluate on a logit vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Ce,
    /// MCE against one rival label.
    Mce { rival: usize },
    /// MCE averaged over all rival labels.
    MceA,
    /// MCE summed over all rival labels, `(K - 1) * MceA`.
    MceSum,
}

impl LossKind {
    pub fn value(self, g: &[f64], y: usize) -> Result<f64> {
        check_label(g, y)?;
        match self {
            Self::Ce => Ok(ce_loss(g, y)),
            Self::Mce { rival } => mce_loss(g, y, rival),
            Self::MceA => Ok(mce_a_loss(g, y)),
            Self::MceSum => Ok(mce_a_loss(g, y) * (g.len() - 1) as f64),
        }
    }

    pub fn value_and_grad(self, g: &[f64], y: usize) -> Result<(f64, Vec<f64>)> {
        check_label(g, y)?;
        match self {
            Self::Ce => Ok((ce_loss(g, y), ce_grad(g, y))),
            Self::Mce { rival } => Ok((mce_loss(g, y, rival)?, mce_grad(g, y, rival)?)),
            Self::MceA => Ok((mce_a_loss(g, y), mce_a_grad(g, y))),
            Self::MceSum => {
                let s = (g.len() - 1) as f64;
                let grad = mce_a_grad(g, y).into_iter().map(|v| v * s).collect();
                Ok((mce_a_loss(g, y) * s, grad))
            }
        }
    }
}

fn check_label(g: &[f64], y: usize) -> Result<()> {
    if g.len() < 2 {
        return Err(Error::ShapeMismatch(format!("need at least 2 logits, got {}", g.len())));
    }
    if y >= g.len() {
        return Err(Error::InvalidLabel(format!("label {y} out of {}", g.len())));
    }
    Ok(())
}

/// `-g_y + log sum_j exp(g_j)`.
pub fn ce_loss(g: &[f64], y: usize) -> f64 {
    (log_sum_exp(g) - g[y]).max(0.0)
}

/// `softmax(g) - onehot(y)`.
pub fn ce_grad(g: &[f64], y: usize) -> Vec<f64> {
    let mut p = softmax(g);
    p[y] -= 1.0;
    p
}

fn negated(g: &[f64]) -> Vec<f64> {
    g.iter().map(|v| -v).collect()
}

/// `ce(g, y) + ce(-g, y')`.
pub fn mce_loss(g: &[f64], y: usize, rival: usize) -> Result<f64> {
    check_rival(g, y, rival)?;
    Ok(ce_loss(g, y) + ce_loss(&negated(g), rival))
}

pub fn mce_grad(g: &[f64], y: usize, rival: usize) -> Result<Vec<f64>> {
    check_rival(g, y, rival)?;
    let reflected = ce_grad(&negated(g), rival);
    Ok(ce_grad(g, y)
        .into_iter()
        .zip(reflected)
        .map(|(a, b)| a - b)
        .collect())
}

fn check_rival(g: &[f64], y: usize, rival: usize) -> Result<()> {
    if y == rival {
        return Err(Error::InvalidLabel(format!("rival label equals true label ({y})")));
    }
    if rival >= g.len() || y >= g.len() {
        return Err(Error::InvalidLabel(format!("labels ({y}, {rival}) out of {}", g.len())));
    }
    Ok(())
}

/// `(1 / (K - 1)) sum_{y' != y} mce(g, y, y')`.
pub fn mce_a_loss(g: &[f64], y: usize) -> f64 {
    let k = g.len();
    let neg = negated(g);
    let lse_neg = log_sum_exp(&neg);
    let reflected: f64 = (0..k).filter(|&j| j != y).map(|j| (lse_neg - neg[j]).max(0.0)).sum();
    ce_loss(g, y) + reflected / (k - 1) as f64
}

pub fn mce_a_grad(g: &[f64], y: usize) -> Vec<f64> {
    let k = g.len();
    let scale = 1.0 / (k - 1) as f64;
    // d/dg of ce(-g, j) is onehot(j) - softmax(-g)
    let q = softmax(&negated(g));
    let mut grad = ce_grad(g, y);
    for (j, gj) in grad.iter_mut().enumerate() {
        let hits = if j == y { 0.0 } else { 1.0 };
        *gj += scale * (hits - (k - 1) as f64 * q[j]);
    }
    grad
}
