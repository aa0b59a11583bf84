//! Shared domain types: labeled samples, the perturbation set, the augmented
//! sample space, finite hypothesis classes with their cached predictions, and
//! distributions over hypotheses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when testing whether a perturbed coordinate falls inside a
/// closed interval. Grid points are produced by `k * step` arithmetic, so
/// exact comparisons would flip on rounding.
pub const INTERVAL_TOL: f64 = 1e-9;

/// Default upper bound on the number of sign-pattern grid points.
pub const DEFAULT_GRID_CAP: usize = 729;

/// The empirical sample `S`: feature rows with integer labels in `0..K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, num_classes: usize) -> Result<Self> {
        if features.is_empty() {
            return Err(Error::InvalidDataset("dataset must contain at least one sample".into()));
        }
        if features.len() != labels.len() {
            return Err(Error::InvalidDataset(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if num_classes < 2 {
            return Err(Error::InvalidDataset(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        let dim = features[0].len();
        if dim == 0 {
            return Err(Error::InvalidDataset("feature dimension must be positive".into()));
        }
        for (i, row) in features.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::InvalidDataset(format!(
                    "row {i} has dimension {}, expected {dim}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidDataset(format!("row {i} has a non-finite feature")));
            }
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= num_classes) {
            return Err(Error::InvalidDataset(format!(
                "label {y} at row {i} is not below num_classes = {num_classes}"
            )));
        }
        Ok(Self {
            features,
            labels,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn x(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn y(&self, i: usize) -> usize {
        self.labels[i]
    }

    /// Rows selected by `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let features = indices.iter().map(|&i| self.features[i].clone()).collect();
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        Self::new(features, labels, self.num_classes)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum PerturbationKind {
    Continuous,
    Grid { points: Vec<Vec<f64>> },
}

/// An l-infinity ball of radius `epsilon`, either continuous (attacked with
/// gradient methods) or represented by a finite grid of perturbations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationModel {
    epsilon: f64,
    kind: PerturbationKind,
}

impl PerturbationModel {
    pub fn continuous(epsilon: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        Ok(Self {
            epsilon,
            kind: PerturbationKind::Continuous,
        })
    }

    /// A user-supplied grid. Every point must satisfy `|delta_j| <= epsilon`
    /// exactly and points must be distinct.
    pub fn grid(epsilon: f64, points: Vec<Vec<f64>>) -> Result<Self> {
        check_epsilon(epsilon)?;
        if points.is_empty() {
            return Err(Error::InvalidPerturbation("grid must contain at least one point".into()));
        }
        let dim = points[0].len();
        for (k, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::InvalidPerturbation(format!(
                    "grid point {k} has dimension {}, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite() || v.abs() > epsilon) {
                return Err(Error::InvalidPerturbation(format!(
                    "grid point {k} violates the l-inf bound {epsilon}"
                )));
            }
        }
        for a in 0..points.len() {
            for b in (a + 1)..points.len() {
                if points[a] == points[b] {
                    return Err(Error::InvalidPerturbation(format!(
                        "grid points {a} and {b} are duplicates"
                    )));
                }
            }
        }
        Ok(Self {
            epsilon,
            kind: PerturbationKind::Grid { points },
        })
    }

    /// `B(0) = {0}` in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        Self {
            epsilon: 0.0,
            kind: PerturbationKind::Grid {
                points: vec![vec![0.0; dim]],
            },
        }
    }

    /// Sign patterns `{-eps, 0, +eps}^dim`, the zero vector first, truncated to
    /// `cap` points in lexicographic order of the remaining patterns.
    pub fn sign_grid(epsilon: f64, dim: usize, cap: usize) -> Result<Self> {
        check_epsilon(epsilon)?;
        if dim == 0 {
            return Err(Error::InvalidPerturbation("dimension must be positive".into()));
        }
        if cap == 0 {
            return Err(Error::InvalidPerturbation("grid cap must be positive".into()));
        }
        if epsilon == 0.0 {
            return Ok(Self::zero(dim));
        }
        let mut points = vec![vec![0.0; dim]];
        let levels = [-epsilon, 0.0, epsilon];
        let mut digits = vec![0usize; dim];
        'outer: loop {
            if points.len() >= cap {
                break;
            }
            let p: Vec<f64> = digits.iter().map(|&d| levels[d]).collect();
            if p.iter().any(|&v| v != 0.0) {
                points.push(p);
            }
            for pos in (0..dim).rev() {
                digits[pos] += 1;
                if digits[pos] < 3 {
                    continue 'outer;
                }
                digits[pos] = 0;
            }
            break;
        }
        Self::grid(epsilon, points)
    }

    /// Uniform one-dimensional grid on `[-epsilon, epsilon]` with the given
    /// spacing. The right endpoint is always included.
    pub fn uniform_1d(epsilon: f64, step: f64) -> Result<Self> {
        check_epsilon(epsilon)?;
        if step.is_nan() || step <= 0.0 {
            return Err(Error::InvalidPerturbation(format!("grid step must be positive, got {step}")));
        }
        if epsilon == 0.0 {
            return Ok(Self::zero(1));
        }
        let count = ((2.0 * epsilon) / step + INTERVAL_TOL).floor() as usize;
        let mut points: Vec<Vec<f64>> = (0..=count)
            .map(|k| vec![(-epsilon + k as f64 * step).clamp(-epsilon, epsilon)])
            .collect();
        let last = points.last().map(|p| p[0]).unwrap_or(-epsilon);
        if (epsilon - last).abs() > INTERVAL_TOL {
            points.push(vec![epsilon]);
        } else if let Some(p) = points.last_mut() {
            p[0] = epsilon;
        }
        Self::grid(epsilon, points)
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn kind(&self) -> &PerturbationKind {
        &self.kind
    }

    pub fn is_continuous(&self) -> bool {
        matches!(self.kind, PerturbationKind::Continuous)
    }

    pub fn grid_points(&self) -> Option<&[Vec<f64>]> {
        match &self.kind {
            PerturbationKind::Grid { points } => Some(points),
            PerturbationKind::Continuous => None,
        }
    }

    pub(crate) fn require_grid(&self, what: &'static str) -> Result<&[Vec<f64>]> {
        self.grid_points().ok_or(Error::ContinuousNotSupported(what))
    }

    /// Index of the zero perturbation, if the grid contains it.
    pub fn zero_index(&self) -> Option<usize> {
        self.grid_points()?
            .iter()
            .position(|p| p.iter().all(|&v| v == 0.0))
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(Error::InvalidPerturbation(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }
    Ok(())
}

/// One element `(x_i, y_i, y', delta_k)` of the augmented space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AugEntry {
    pub sample: usize,
    pub label: usize,
    pub rival: usize,
    pub perturbation: usize,
}

/// The augmented space, enumerated sample-major, then rival label, then
/// perturbation.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSpace {
    entries: Vec<AugEntry>,
    num_samples: usize,
    num_classes: usize,
    num_perturbations: usize,
}

impl AugmentedSpace {
    pub fn build(dataset: &Dataset, perturbations: &PerturbationModel) -> Result<Self> {
        let grid = perturbations.require_grid("the augmented space")?;
        Ok(Self::with_grid_size(dataset, grid.len()))
    }

    pub(crate) fn with_grid_size(dataset: &Dataset, num_perturbations: usize) -> Self {
        let k = dataset.num_classes();
        let mut entries = Vec::with_capacity(dataset.len() * (k - 1) * num_perturbations);
        for (sample, &label) in dataset.labels().iter().enumerate() {
            for rival in (0..k).filter(|&r| r != label) {
                for perturbation in 0..num_perturbations {
                    entries.push(AugEntry {
                        sample,
                        label,
                        rival,
                        perturbation,
                    });
                }
            }
        }
        Self {
            entries,
            num_samples: dataset.len(),
            num_classes: k,
            num_perturbations,
        }
    }

    pub fn entries(&self) -> &[AugEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_perturbations(&self) -> usize {
        self.num_perturbations
    }

    /// The reduced space `(x, y, y')` obtained by dropping the perturbation.
    pub fn reduced(&self) -> Vec<(usize, usize, usize)> {
        self.entries
            .iter()
            .filter(|e| e.perturbation == 0)
            .map(|e| (e.sample, e.label, e.rival))
            .collect()
    }
}

/// Free-function form of [`AugmentedSpace::build`].
pub fn build_augmented_space(
    dataset: &Dataset,
    perturbations: &PerturbationModel,
) -> Result<AugmentedSpace> {
    AugmentedSpace::build(dataset, perturbations)
}

/// Axis-aligned threshold classifier: `below` when `x[coord] <= threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stump {
    pub coord: usize,
    pub threshold: f64,
    pub below: usize,
    pub above: usize,
}

impl Stump {
    pub fn predict(&self, x: &[f64]) -> usize {
        if x[self.coord] <= self.threshold {
            self.below
        } else {
            self.above
        }
    }
}

/// One-dimensional interval classifier: `inside` on `[lo, hi]`, `outside`
/// elsewhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntervalHypothesis {
    pub lo: f64,
    pub hi: f64,
    pub inside: usize,
    pub outside: usize,
}

impl IntervalHypothesis {
    pub fn predict(&self, x: &[f64]) -> usize {
        let v = x[0];
        if v >= self.lo - INTERVAL_TOL && v <= self.hi + INTERVAL_TOL {
            self.inside
        } else {
            self.outside
        }
    }
}

/// A finite set of base classifiers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HypothesisClass {
    /// Explicit predictions indexed `[hypothesis][sample * |grid| + k]`.
    /// `clean` optionally holds predictions on the unperturbed samples,
    /// indexed `[hypothesis][sample]`.
    Table {
        num_classes: usize,
        predictions: Vec<Vec<usize>>,
        clean: Option<Vec<Vec<usize>>>,
    },
    Stump {
        num_classes: usize,
        stumps: Vec<Stump>,
    },
    Interval {
        num_classes: usize,
        intervals: Vec<IntervalHypothesis>,
    },
}

impl HypothesisClass {
    pub fn table(num_classes: usize, predictions: Vec<Vec<usize>>) -> Result<Self> {
        let class = Self::Table {
            num_classes,
            predictions,
            clean: None,
        };
        class.validate()?;
        Ok(class)
    }

    pub fn stumps(num_classes: usize, stumps: Vec<Stump>) -> Result<Self> {
        let class = Self::Stump {
            num_classes,
            stumps,
        };
        class.validate()?;
        Ok(class)
    }

    pub fn intervals(num_classes: usize, intervals: Vec<IntervalHypothesis>) -> Result<Self> {
        let class = Self::Interval {
            num_classes,
            intervals,
        };
        class.validate()?;
        Ok(class)
    }

    /// All stumps with thresholds at midpoints between consecutive distinct
    /// feature values (plus one below the minimum), for every ordered pair of
    /// distinct labels.
    pub fn stumps_from_data(dataset: &Dataset) -> Result<Self> {
        let k = dataset.num_classes();
        let mut stumps = Vec::new();
        for coord in 0..dataset.dim() {
            let mut values: Vec<f64> = dataset.features().iter().map(|x| x[coord]).collect();
            values.sort_by(f64::total_cmp);
            values.dedup();
            let mut thresholds = vec![values[0] - 1.0];
            thresholds.extend(values.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            for &threshold in &thresholds {
                for below in 0..k {
                    for above in (0..k).filter(|&a| a != below) {
                        stumps.push(Stump {
                            coord,
                            threshold,
                            below,
                            above,
                        });
                    }
                }
            }
        }
        Self::stumps(k, stumps)
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Self::Table { num_classes, .. }
            | Self::Stump { num_classes, .. }
            | Self::Interval { num_classes, .. } => *num_classes,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::Table { predictions, .. } => predictions.len(),
            Self::Stump { stumps, .. } => stumps.len(),
            Self::Interval { intervals, .. } => intervals.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn validate(&self) -> Result<()> {
        let k = self.num_classes();
        if k < 2 {
            return Err(Error::InvalidHypothesisClass(format!("need at least 2 classes, got {k}")));
        }
        if self.is_empty() {
            return Err(Error::InvalidHypothesisClass("class must be non-empty".into()));
        }
        let bad = |v: usize| v >= k;
        match self {
            Self::Table {
                predictions, clean, ..
            } => {
                let width = predictions[0].len();
                for (h, row) in predictions.iter().enumerate() {
                    if row.len() != width {
                        return Err(Error::InvalidHypothesisClass(format!(
                            "table row {h} has {} columns, expected {width}",
                            row.len()
                        )));
                    }
                    if row.iter().any(|&p| bad(p)) {
                        return Err(Error::InvalidHypothesisClass(format!(
                            "table row {h} has a prediction outside 0..{k}"
                        )));
                    }
                }
                if let Some(clean) = clean {
                    if clean.len() != predictions.len()
                        || clean.iter().flatten().any(|&p| bad(p))
                    {
                        return Err(Error::InvalidHypothesisClass(
                            "clean prediction table is inconsistent".into(),
                        ));
                    }
                }
            }
            Self::Stump { stumps, .. } => {
                if stumps.iter().any(|s| bad(s.below) || bad(s.above) || !s.threshold.is_finite()) {
                    return Err(Error::InvalidHypothesisClass("stump with invalid label or threshold".into()));
                }
            }
            Self::Interval { intervals, .. } => {
                if intervals
                    .iter()
                    .any(|h| bad(h.inside) || bad(h.outside) || h.lo.is_nan() || h.hi.is_nan() || h.lo > h.hi)
                {
                    return Err(Error::InvalidHypothesisClass("malformed interval hypothesis".into()));
                }
            }
        }
        Ok(())
    }

    /// Evaluates hypothesis `h` at an arbitrary point. Table classes have no
    /// functional form and return `None`.
    pub fn predict(&self, h: usize, x: &[f64]) -> Option<usize> {
        match self {
            Self::Table { .. } => None,
            Self::Stump { stumps, .. } => Some(stumps[h].predict(x)),
            Self::Interval { intervals, .. } => Some(intervals[h].predict(x)),
        }
    }
}

/// Predictions of every hypothesis on every perturbed training point,
/// computed once and re-read by the boosting rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionTable {
    num_classes: usize,
    num_samples: usize,
    num_perturbations: usize,
    /// `[h][sample * num_perturbations + k]`
    perturbed: Vec<Vec<usize>>,
    /// `[h][sample]`; absent only for table classes without clean data and
    /// without a zero grid point.
    clean: Option<Vec<Vec<usize>>>,
}

impl PredictionTable {
    pub fn build(
        class: &HypothesisClass,
        dataset: &Dataset,
        perturbations: &PerturbationModel,
    ) -> Result<Self> {
        let grid = perturbations.require_grid("a prediction table")?;
        if class.num_classes() != dataset.num_classes() {
            return Err(Error::ShapeMismatch(format!(
                "class has {} labels, dataset has {}",
                class.num_classes(),
                dataset.num_classes()
            )));
        }
        if grid[0].len() != dataset.dim() {
            return Err(Error::ShapeMismatch(format!(
                "grid dimension {} differs from feature dimension {}",
                grid[0].len(),
                dataset.dim()
            )));
        }
        let n = dataset.len();
        let g = grid.len();
        let (perturbed, clean) = match class {
            HypothesisClass::Table {
                predictions, clean, ..
            } => {
                if predictions[0].len() != n * g {
                    return Err(Error::ShapeMismatch(format!(
                        "table has {} columns, expected n * |grid| = {}",
                        predictions[0].len(),
                        n * g
                    )));
                }
                let clean = match (clean, perturbations.zero_index()) {
                    (Some(c), _) => {
                        if c.iter().any(|row| row.len() != n) {
                            return Err(Error::ShapeMismatch("clean table width differs from n".into()));
                        }
                        Some(c.clone())
                    }
                    (None, Some(z)) => Some(
                        predictions
                            .iter()
                            .map(|row| (0..n).map(|i| row[i * g + z]).collect())
                            .collect(),
                    ),
                    (None, None) => None,
                };
                (predictions.clone(), clean)
            }
            _ => {
                let mut shifted = vec![0.0; dataset.dim()];
                let perturbed = (0..class.len())
                    .map(|h| {
                        let mut row = Vec::with_capacity(n * g);
                        for x in dataset.features() {
                            for delta in grid {
                                for (s, (a, b)) in shifted.iter_mut().zip(x.iter().zip(delta)) {
                                    *s = a + b;
                                }
                                row.push(class.predict(h, &shifted).expect("functional class"));
                            }
                        }
                        row
                    })
                    .collect();
                let clean = (0..class.len())
                    .map(|h| {
                        dataset
                            .features()
                            .iter()
                            .map(|x| class.predict(h, x).expect("functional class"))
                            .collect()
                    })
                    .collect();
                (perturbed, Some(clean))
            }
        };
        Ok(Self {
            num_classes: dataset.num_classes(),
            num_samples: n,
            num_perturbations: g,
            perturbed,
            clean,
        })
    }

    pub fn num_hypotheses(&self) -> usize {
        self.perturbed.len()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn num_samples(&self) -> usize {
        self.num_samples
    }

    pub fn num_perturbations(&self) -> usize {
        self.num_perturbations
    }

    pub fn prediction(&self, h: usize, sample: usize, perturbation: usize) -> usize {
        self.perturbed[h][sample * self.num_perturbations + perturbation]
    }

    pub fn clean_prediction(&self, h: usize, sample: usize) -> Option<usize> {
        self.clean.as_ref().map(|c| c[h][sample])
    }

    pub fn has_clean(&self) -> bool {
        self.clean.is_some()
    }

    /// Score vector of the Q-ensemble at a perturbed training point: entry
    /// `j` is the Q-mass of hypotheses predicting `j`.
    pub fn ensemble_score(
        &self,
        q: &EnsembleWeights,
        sample: usize,
        perturbation: usize,
    ) -> Result<Vec<f64>> {
        self.check_weights(q)?;
        if sample >= self.num_samples || perturbation >= self.num_perturbations {
            return Err(Error::ShapeMismatch(format!(
                "point ({sample}, {perturbation}) outside {} samples x {} perturbations",
                self.num_samples, self.num_perturbations
            )));
        }
        let mut score = vec![0.0; self.num_classes];
        for (h, &w) in q.as_slice().iter().enumerate() {
            if w > 0.0 {
                score[self.prediction(h, sample, perturbation)] += w;
            }
        }
        Ok(score)
    }

    /// Score vector on the unperturbed sample.
    pub fn clean_score(&self, q: &EnsembleWeights, sample: usize) -> Result<Option<Vec<f64>>> {
        self.check_weights(q)?;
        let Some(clean) = &self.clean else {
            return Ok(None);
        };
        let mut score = vec![0.0; self.num_classes];
        for (h, &w) in q.as_slice().iter().enumerate() {
            if w > 0.0 {
                score[clean[h][sample]] += w;
            }
        }
        Ok(Some(score))
    }

    fn check_weights(&self, q: &EnsembleWeights) -> Result<()> {
        if q.len() != self.num_hypotheses() {
            return Err(Error::ShapeMismatch(format!(
                "weights over {} hypotheses, class has {}",
                q.len(),
                self.num_hypotheses()
            )));
        }
        Ok(())
    }
}

/// Convenience wrapper building the table on the fly; prefer caching a
/// [`PredictionTable`] when scoring many points.
pub fn ensemble_score(
    class: &HypothesisClass,
    q: &EnsembleWeights,
    dataset: &Dataset,
    perturbations: &PerturbationModel,
    sample: usize,
    perturbation: usize,
) -> Result<Vec<f64>> {
    PredictionTable::build(class, dataset, perturbations)?.ensemble_score(q, sample, perturbation)
}

/// A probability distribution `Q` over a finite hypothesis class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleWeights(Vec<f64>);

impl EnsembleWeights {
    pub const SUM_TOL: f64 = 1e-12;

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidWeights("weights must be finite and non-negative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > Self::SUM_TOL {
            return Err(Error::InvalidWeights(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(weights))
    }

    pub fn uniform(len: usize) -> Result<Self> {
        if len == 0 {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        Ok(Self(vec![1.0 / len as f64; len]))
    }

    pub fn point_mass(len: usize, index: usize) -> Result<Self> {
        if index >= len {
            return Err(Error::InvalidWeights(format!("index {index} out of {len}")));
        }
        let mut w = vec![0.0; len];
        w[index] = 1.0;
        Ok(Self(w))
    }

    /// Uniform over a multiset of hypothesis indices (multiplicity counts).
    pub fn from_counts(len: usize, picks: &[usize]) -> Result<Self> {
        if picks.is_empty() {
            return Err(Error::InvalidWeights("no hypotheses picked".into()));
        }
        let mut w = vec![0.0; len];
        for &h in picks {
            if h >= len {
                return Err(Error::InvalidWeights(format!("index {h} out of {len}")));
            }
            w[h] += 1.0;
        }
        let total = picks.len() as f64;
        w.iter_mut().for_each(|v| *v /= total);
        Ok(Self(w))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax_classify(score: &[f64]) -> Result<usize> {
    if score.is_empty() {
        return Err(Error::ShapeMismatch("argmax of an empty score vector".into()));
    }
    let mut best = 0;
    for (j, &s) in score.iter().enumerate().skip(1) {
        if s > score[best] {
            best = j;
        }
    }
    Ok(best)
}
