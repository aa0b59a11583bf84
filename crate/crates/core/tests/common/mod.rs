//! Independent reference implementations used as test oracles. Nothing here
//! calls the library routine it is meant to check.

#![allow(dead_code, clippy::needless_range_loop)]

use mrboost::nn::MlpParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Plain triple-loop forward pass; also returns every hidden pre-activation.
pub fn naive_forward(p: &MlpParams, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a = x.to_vec();
    let mut pre_acts = Vec::new();
    let n = p.layers().len();
    for (l, layer) in p.layers().iter().enumerate() {
        let mut z = vec![0.0; layer.fan_out];
        for o in 0..layer.fan_out {
            let mut s = layer.bias[o];
            for i in 0..layer.fan_in {
                s += layer.weights[o * layer.fan_in + i] * a[i];
            }
            z[o] = s;
        }
        if l + 1 < n {
            pre_acts.extend_from_slice(&z);
            for v in &mut z {
                if *v < 0.0 {
                    *v = 0.0;
                }
            }
        }
        a = z;
    }
    (a, pre_acts)
}

/// Textbook cross-entropy: `-ln(exp(g_y) / sum exp(g_j))` in extended
/// precision-free naive form (inputs kept moderate by the callers).
pub fn naive_ce(g: &[f64], y: usize) -> f64 {
    let z: f64 = g.iter().map(|v| v.exp()).sum();
    -(g[y].exp() / z).ln()
}

pub fn naive_mce(g: &[f64], y: usize, r: usize) -> f64 {
    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
    naive_ce(g, y) + naive_ce(&neg, r)
}

pub fn naive_mce_a(g: &[f64], y: usize) -> f64 {
    let k = g.len();
    (0..k).filter(|&r| r != y).map(|r| naive_mce(g, y, r)).sum::<f64>() / (k - 1) as f64
}

/// Central differences of `f` at `x`.
pub fn central_diff(f: &mut dyn FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut probe = x.to_vec();
    for j in 0..x.len() {
        probe[j] = x[j] + h;
        let up = f(&probe);
        probe[j] = x[j] - h;
        let down = f(&probe);
        probe[j] = x[j];
        out.push((up - down) / (2.0 * h));
    }
    out
}

/// `||a - b|| / max(||a||, ||b||)`, zero when both vanish.
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let scale = norm(a).max(norm(b));
    if scale == 0.0 {
        0.0
    } else {
        norm(&diff) / scale
    }
}

/// Fictitious play on `a` (rows maximize). Returns the lower and upper
/// value estimates `min_j (x_avg A)_j` and `max_i (A y_avg)_i`.
pub fn fictitious_play(a: &[Vec<f64>], rounds: usize) -> (f64, f64) {
    let (m, n) = (a.len(), a[0].len());
    // row_payoff[i] = sum over past column plays of a[i][j]
    let mut row_payoff = vec![0.0; m];
    let mut col_payoff = vec![0.0; n];
    let (mut i, mut j) = (0usize, 0usize);
    for _ in 0..rounds {
        for (r, rp) in row_payoff.iter_mut().enumerate() {
            *rp += a[r][j];
        }
        for (c, cp) in col_payoff.iter_mut().enumerate() {
            *cp += a[i][c];
        }
        i = argmax(&row_payoff);
        j = argmin(&col_payoff);
    }
    let t = rounds as f64;
    let lower = col_payoff.iter().fold(f64::INFINITY, |m, v| m.min(*v)) / t;
    let upper = row_payoff.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v)) / t;
    (lower, upper)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = k;
        }
    }
    best
}

fn argmin(v: &[f64]) -> usize {
    let mut best = 0;
    for (k, x) in v.iter().enumerate() {
        if *x < v[best] {
            best = k;
        }
    }
    best
}

pub fn random_matrix(r: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<Vec<f64>> {
    (0..rows)
        .map(|_| (0..cols).map(|_| r.random_range(-1.0..=1.0)).collect())
        .collect()
}

/// Random point of the simplex (normalized exponentials).
pub fn random_simplex(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..n).map(|_| -r.random_range(1e-12f64..1.0).ln()).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// `eta <P, c> - KL(P || uniform)` with `0 ln 0 = 0`.
pub fn gibbs_objective(p: &[f64], cumulative: &[f64], eta: f64) -> f64 {
    let n = p.len() as f64;
    let linear: f64 = p.iter().zip(cumulative).map(|(a, c)| a * c).sum();
    let kl: f64 = p.iter().filter(|&&a| a > 0.0).map(|a| a * (a * n).ln()).sum();
    eta * linear - kl
}
