//! Exact value of a finite two-player zero-sum matrix game through the
//! standard game LP, solved with a dense tableau simplex under Bland's rule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default limit on `rows * cols` accepted by [`solve_matrix_game`].
pub const DEFAULT_LP_CAP: usize = 4_000_000;

/// Duality gap a returned solution must certify.
pub const CERTIFICATE_TOL: f64 = 1e-9;

const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameSolution {
    /// `max_q min_p q^T A p`.
    pub value: f64,
    /// Optimal mixed strategy of the (maximizing) row player.
    pub row_strategy: Vec<f64>,
    /// Optimal mixed strategy of the (minimizing) column player.
    pub col_strategy: Vec<f64>,
    /// `min_j (q^T A)_j`, guaranteed by the row strategy.
    pub lower: f64,
    /// `max_i (A p)_i`, guaranteed by the column strategy.
    pub upper: f64,
    pub pivots: usize,
}

/// Solves `max_{q in simplex} min_{p in simplex} q^T A p` where rows are the
/// maximizer's pure strategies.
pub fn solve_matrix_game(a: &[Vec<f64>], cap: usize) -> Result<GameSolution> {
    let rows = a.len();
    if rows == 0 || a[0].is_empty() {
        return Err(Error::ShapeMismatch("empty payoff matrix".into()));
    }
    let cols = a[0].len();
    if a.iter().any(|r| r.len() != cols) {
        return Err(Error::ShapeMismatch("ragged payoff matrix".into()));
    }
    if a.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Solver("payoff matrix has non-finite entries".into()));
    }
    let needed = rows.saturating_mul(cols);
    if needed > cap {
        return Err(Error::SizeCap {
            what: "the game LP",
            needed,
            cap,
        });
    }

    // Shift every entry to be >= 1 so the game value is positive; then
    //   max sum(w)  s.t.  A' w <= 1, w >= 0
    // has optimum 1 / value', with the row player's strategy read off the
    // slack duals.
    let min_entry = a.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min_entry;

    let width = cols + rows + 1;
    let mut tab = vec![0.0; rows * width];
    for (i, row) in a.iter().enumerate() {
        let t = &mut tab[i * width..(i + 1) * width];
        for (j, &v) in row.iter().enumerate() {
            t[j] = v + shift;
        }
        t[cols + i] = 1.0;
        t[width - 1] = 1.0;
    }
    // reduced costs c_j - z_j; positive means the column can improve
    let mut reduced = vec![0.0; cols + rows];
    reduced[..cols].iter_mut().for_each(|r| *r = 1.0);
    let mut objective = 0.0;
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let max_pivots = 50 * (rows + cols) * (rows + cols).max(10);
    let mut pivots = 0;
    while let Some(enter) = reduced.iter().position(|&r| r > PIVOT_EPS) {
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..rows {
            let coef = tab[i * width + enter];
            if coef > PIVOT_EPS {
                let ratio = tab[i * width + width - 1] / coef;
                leave = match leave {
                    None => Some((i, ratio)),
                    Some((l, best)) => {
                        if ratio < best - PIVOT_EPS
                            || ((ratio - best).abs() <= PIVOT_EPS && basis[i] < basis[l])
                        {
                            Some((i, ratio))
                        } else {
                            Some((l, best))
                        }
                    }
                };
            }
        }
        let Some((pivot_row, _)) = leave else {
            return Err(Error::Solver("LP unbounded; the shifted game LP should be bounded".into()));
        };
        pivot(&mut tab, width, pivot_row, enter, &mut reduced, &mut objective);
        basis[pivot_row] = enter;
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::Solver(format!("no convergence after {pivots} pivots")));
        }
    }

    let mut w = vec![0.0; cols];
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            w[b] = tab[i * width + width - 1].max(0.0);
        }
    }
    let u: Vec<f64> = (0..rows).map(|i| (-reduced[cols + i]).max(0.0)).collect();
    let col_strategy = normalize(w)?;
    let row_strategy = normalize(u)?;

    let lower = (0..cols)
        .map(|j| (0..rows).map(|i| row_strategy[i] * a[i][j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    let upper = a
        .iter()
        .map(|r| r.iter().zip(&col_strategy).map(|(x, p)| x * p).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let scale = 1.0 + a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    if upper - lower > CERTIFICATE_TOL * scale {
        return Err(Error::Solver(format!(
            "strategies certify only [{lower}, {upper}]"
        )));
    }
    Ok(GameSolution {
        value: 0.5 * (lower + upper),
        row_strategy,
        col_strategy,
        lower,
        upper,
        pivots,
    })
}

fn pivot(
    tab: &mut [f64],
    width: usize,
    pivot_row: usize,
    enter: usize,
    reduced: &mut [f64],
    objective: &mut f64,
) {
    let rows = tab.len() / width;
    let p = tab[pivot_row * width + enter];
    for v in &mut tab[pivot_row * width..(pivot_row + 1) * width] {
        *v /= p;
    }
    let prow: Vec<f64> = tab[pivot_row * width..(pivot_row + 1) * width].to_vec();
    for i in (0..rows).filter(|&i| i != pivot_row) {
        let f = tab[i * width + enter];
        if f != 0.0 {
            for (v, pv) in tab[i * width..(i + 1) * width].iter_mut().zip(&prow) {
                *v -= f * pv;
            }
            tab[i * width + enter] = 0.0;
        }
    }
    let f = reduced[enter];
    for (r, pv) in reduced.iter_mut().zip(&prow) {
        *r -= f * pv;
    }
    reduced[enter] = 0.0;
    *objective += f * prow[width - 1];
}

fn normalize(mut v: Vec<f64>) -> Result<Vec<f64>> {
    let s: f64 = v.iter().sum();
    if s.is_nan() || s <= 0.0 {
        return Err(Error::Solver("degenerate strategy with zero mass".into()));
    }
    v.iter_mut().for_each(|x| *x /= s);
    Ok(v)
}
