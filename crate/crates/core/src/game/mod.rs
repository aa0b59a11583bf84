//! The zero-sum margin game between an ensemble (min player, choosing base
//! hypotheses by best response) and an adversary mixing over the augmented
//! space with exponential weights.
//!
//! Payoff convention: entry `[h][e]` is the pairwise 0-1 margin loss of `h`
//! at augmented entry `e`, so the min player wants it small. The margin of a
//! distribution `Q` at entry `e` is `-sum_h Q(h) [h][e]`, and the max-margin
//! value is the LP value of the negated matrix.

pub mod lp;
pub mod regret;

use serde::{Deserialize, Serialize};

use crate::domain::{AugmentedSpace, Dataset, EnsembleWeights, PredictionTable};
use crate::error::{invalid_arg, Error, Result};
use crate::losses::softmax;
use crate::margin::{pairwise_margin_loss, MarginReport};

pub use lp::{solve_matrix_game, GameSolution, DEFAULT_LP_CAP};
pub use regret::{exp_weights_regret_harness, RegretReport};

/// Default limit on `|H| * M` payoff cells.
pub const DEFAULT_PAYOFF_CAP: usize = 50_000_000;

/// `3 (ln M + 1) / sqrt(T)`: the convergence tolerance of MRBoost on a
/// finite augmented space of size `M`.
pub fn xi_finite(rounds: usize, space_size: usize) -> f64 {
    3.0 * ((space_size as f64).ln() + 1.0) / (rounds as f64).sqrt()
}

/// `1 / (2 sqrt(T))`.
pub fn default_eta(rounds: usize) -> f64 {
    1.0 / (2.0 * (rounds as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct PayoffMatrix {
    rows: Vec<Vec<i8>>,
    space: AugmentedSpace,
}

impl PayoffMatrix {
    pub fn build(table: &PredictionTable, dataset: &Dataset, cap: usize) -> Result<Self> {
        if table.num_samples() != dataset.len() {
            return Err(Error::ShapeMismatch("table and dataset sizes differ".into()));
        }
        let space = AugmentedSpace::with_grid_size(dataset, table.num_perturbations());
        let needed = table.num_hypotheses().saturating_mul(space.len());
        if needed > cap {
            return Err(Error::SizeCap {
                what: "the payoff matrix",
                needed,
                cap,
            });
        }
        let rows = (0..table.num_hypotheses())
            .map(|h| {
                space
                    .entries()
                    .iter()
                    .map(|e| {
                        let pred = table.prediction(h, e.sample, e.perturbation);
                        pairwise_margin_loss(pred, e.label, e.rival)
                    })
                    .collect::<Result<Vec<i8>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, space })
    }

    /// Wraps an explicit matrix; `space` supplies the entry semantics.
    pub fn from_rows(rows: Vec<Vec<i8>>, space: AugmentedSpace) -> Result<Self> {
        if rows.is_empty() || rows.iter().any(|r| r.len() != space.len()) {
            return Err(Error::ShapeMismatch("payoff rows must match the augmented space".into()));
        }
        if rows.iter().flatten().any(|v| !(-1..=1).contains(v)) {
            return Err(Error::ShapeMismatch("payoff entries must lie in {-1, 0, 1}".into()));
        }
        Ok(Self { rows, space })
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.rows
    }

    pub fn num_hypotheses(&self) -> usize {
        self.rows.len()
    }

    pub fn num_entries(&self) -> usize {
        self.space.len()
    }

    pub fn space(&self) -> &AugmentedSpace {
        &self.space
    }

    /// `-payoff` as reals: the margin each hypothesis earns at each entry.
    pub fn margin_matrix(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| r.iter().map(|&v| -(v as f64)).collect())
            .collect()
    }

    fn expected_loss(&self, h: usize, p: &[f64]) -> f64 {
        self.rows[h]
            .iter()
            .zip(p)
            .map(|(&v, &pe)| v as f64 * pe)
            .sum()
    }
}

/// Exponential-weights state of the max player.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameState {
    eta: f64,
    cumulative: Vec<f64>,
    chosen: Vec<usize>,
}

impl GameState {
    pub fn new(num_entries: usize, eta: f64) -> Result<Self> {
        if num_entries == 0 {
            return Err(invalid_arg("num_entries", "augmented space is empty"));
        }
        check_eta(eta)?;
        Ok(Self {
            eta,
            cumulative: vec![0.0; num_entries],
            chosen: Vec::new(),
        })
    }

    /// A state with given cumulative losses and no recorded history.
    pub fn from_cumulative(cumulative: Vec<f64>, eta: f64) -> Result<Self> {
        if cumulative.is_empty() || cumulative.iter().any(|c| !c.is_finite()) {
            return Err(invalid_arg("cumulative", "must be non-empty and finite"));
        }
        check_eta(eta)?;
        Ok(Self {
            eta,
            cumulative,
            chosen: Vec::new(),
        })
    }

    /// Completed rounds.
    pub fn round(&self) -> usize {
        self.chosen.len()
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn chosen(&self) -> &[usize] {
        &self.chosen
    }

    /// Plays hypothesis `h`, adding its payoff row to the running sums.
    pub fn record(&mut self, payoffs: &PayoffMatrix, h: usize) {
        for (c, &v) in self.cumulative.iter_mut().zip(&payoffs.rows[h]) {
            *c += v as f64;
        }
        self.chosen.push(h);
    }
}

fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(invalid_arg("eta", format!("must be finite and non-negative, got {eta}")));
    }
    Ok(())
}

/// `P(e) ∝ exp(eta * cumulative(e))`, stabilized by max subtraction.
pub fn exp_weights_distribution(state: &GameState) -> Vec<f64> {
    let scaled: Vec<f64> = state.cumulative.iter().map(|c| state.eta * c).collect();
    softmax(&scaled)
}

/// The hypothesis minimizing expected pairwise loss under `p`; ties go to
/// the lowest index.
pub fn best_response(payoffs: &PayoffMatrix, p: &[f64]) -> usize {
    let mut best = 0;
    let mut best_loss = f64::INFINITY;
    for h in 0..payoffs.num_hypotheses() {
        let loss = payoffs.expected_loss(h, p);
        if loss < best_loss {
            best = h;
            best_loss = loss;
        }
    }
    best
}

/// Exact max-min margin value via the game LP: returns the value, the
/// optimal distribution over hypotheses and the adversary's optimal
/// distribution over augmented entries.
pub fn matrix_game_value_lp(payoffs: &PayoffMatrix, cap: usize) -> Result<GameSolution> {
    solve_matrix_game(&payoffs.margin_matrix(), cap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameCertificate {
    /// Minimum margin of the uniform ensemble over the chosen hypotheses.
    pub lower: f64,
    /// Best margin any single hypothesis achieves against the averaged
    /// adversary distribution.
    pub upper: f64,
    pub gap: f64,
    pub lp_value: Option<f64>,
    pub xi_finite: f64,
    /// `E_{P_avg}[avg_t m(h_t)]`.
    pub avg_adversary_loss: f64,
    /// `max_e avg_t m(h_t at e)`.
    pub max_entry_loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundMetrics {
    pub t: usize,
    pub chosen: usize,
    pub min_robust_margin: f64,
    pub clean_accuracy: Option<f64>,
    pub adversarial_accuracy: f64,
    pub lower: f64,
    pub upper: f64,
    pub ne_gap: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MrBoostConfig {
    pub rounds: usize,
    /// Defaults to `1 / (2 sqrt(T))`.
    pub eta: Option<f64>,
    pub payoff_cap: usize,
    /// LP oracle is skipped when `|H| * M` exceeds this.
    pub lp_cap: usize,
}

impl MrBoostConfig {
    pub fn new(rounds: usize) -> Self {
        Self {
            rounds,
            eta: None,
            payoff_cap: DEFAULT_PAYOFF_CAP,
            lp_cap: DEFAULT_LP_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MrBoostRun {
    pub weights: EnsembleWeights,
    pub chosen: Vec<usize>,
    pub eta: f64,
    pub certificate: GameCertificate,
    pub rounds: Vec<RoundMetrics>,
    pub final_report: MarginReport,
    /// Average of the adversary's distributions `P_1..P_T`.
    pub p_avg: Vec<f64>,
}

/// Runs `T` rounds of best response against exponential weights over the
/// augmented space and returns the uniform ensemble over the chosen
/// hypotheses.
pub fn mrboost_run(table: &PredictionTable, dataset: &Dataset, config: &MrBoostConfig) -> Result<MrBoostRun> {
    let payoffs = PayoffMatrix::build(table, dataset, config.payoff_cap)?;
    let lp_value = if payoffs.num_hypotheses().saturating_mul(payoffs.num_entries()) <= config.lp_cap {
        Some(matrix_game_value_lp(&payoffs, config.lp_cap)?.value)
    } else {
        None
    };
    mrboost_run_with_payoffs(&payoffs, table, dataset, config, lp_value)
}

pub fn mrboost_run_with_payoffs(
    payoffs: &PayoffMatrix,
    table: &PredictionTable,
    dataset: &Dataset,
    config: &MrBoostConfig,
    lp_value: Option<f64>,
) -> Result<MrBoostRun> {
    if config.rounds == 0 {
        return Err(invalid_arg("rounds", "T must be at least 1"));
    }
    let eta = config.eta.unwrap_or_else(|| default_eta(config.rounds));
    let m = payoffs.num_entries();
    let k = dataset.num_classes();
    let n = dataset.len();
    let mut state = GameState::new(m, eta)?;
    let mut p_sum = vec![0.0; m];
    let mut clean_votes = vec![vec![0usize; k]; n];
    let mut rounds = Vec::with_capacity(config.rounds);
    let sample_of: Vec<usize> = payoffs.space().entries().iter().map(|e| e.sample).collect();

    for t in 1..=config.rounds {
        let p = exp_weights_distribution(&state);
        let h = best_response(payoffs, &p);
        state.record(payoffs, h);
        for (s, pe) in p_sum.iter_mut().zip(&p) {
            *s += pe;
        }
        if table.has_clean() {
            for (i, votes) in clean_votes.iter_mut().enumerate() {
                votes[table.clean_prediction(h, i).unwrap_or(0)] += 1;
            }
        }

        let tf = t as f64;
        let per_sample = per_sample_margins(state.cumulative(), &sample_of, n, tf);
        let clean = table.has_clean().then(|| clean_accuracy(&clean_votes, dataset));
        let report = MarginReport::assemble(per_sample, clean);
        let p_avg: Vec<f64> = p_sum.iter().map(|s| s / tf).collect();
        let upper = (0..payoffs.num_hypotheses())
            .map(|h| -payoffs.expected_loss(h, &p_avg))
            .fold(f64::NEG_INFINITY, f64::max);
        let lower = report.min_robust_margin;
        rounds.push(RoundMetrics {
            t,
            chosen: h,
            min_robust_margin: lower,
            clean_accuracy: report.clean_accuracy,
            adversarial_accuracy: report.adversarial_accuracy,
            lower,
            upper,
            ne_gap: upper - lower,
        });
    }

    let tf = config.rounds as f64;
    let p_avg: Vec<f64> = p_sum.iter().map(|s| s / tf).collect();
    let avg_adversary_loss = state
        .cumulative()
        .iter()
        .zip(&p_avg)
        .map(|(c, p)| p * c / tf)
        .sum();
    let max_entry_loss = state
        .cumulative()
        .iter()
        .fold(f64::NEG_INFINITY, |acc, c| acc.max(c / tf));
    let last = rounds.last().expect("at least one round");
    let certificate = GameCertificate {
        lower: last.lower,
        upper: last.upper,
        gap: last.ne_gap,
        lp_value,
        xi_finite: xi_finite(config.rounds, m),
        avg_adversary_loss,
        max_entry_loss,
    };
    let weights = EnsembleWeights::from_counts(payoffs.num_hypotheses(), state.chosen())?;
    let final_report = MarginReport::assemble(
        per_sample_margins(state.cumulative(), &sample_of, n, tf),
        last.clean_accuracy,
    );
    Ok(MrBoostRun {
        weights,
        chosen: state.chosen().to_vec(),
        eta,
        certificate,
        rounds,
        final_report,
        p_avg,
    })
}

// Margin of the uniform ensemble at entry e is -cumulative(e) / t.
fn per_sample_margins(cumulative: &[f64], sample_of: &[usize], n: usize, t: f64) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; n];
    for (&c, &i) in cumulative.iter().zip(sample_of) {
        out[i] = out[i].min(-c / t);
    }
    out
}

fn clean_accuracy(votes: &[Vec<usize>], dataset: &Dataset) -> f64 {
    let correct = votes
        .iter()
        .enumerate()
        .filter(|(i, v)| {
            let y = dataset.y(*i);
            v.iter().enumerate().all(|(j, &c)| j == y || c < v[y])
        })
        .count();
    correct as f64 / dataset.len() as f64
}
