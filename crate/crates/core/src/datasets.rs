//! Seeded synthetic datasets and their CSV form (`x0,...,x{d-1},label`,
//! values written with 17 significant digits so files re-read bit-exactly).

use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::domain::{Dataset, HypothesisClass, PerturbationModel};
use crate::error::{invalid_arg, Error, Result};
use crate::nn::checkpoint::format_f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    TwoMoons,
    Blobs,
    XorGrid,
}

impl std::str::FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_moons" => Ok(Self::TwoMoons),
            "blobs" => Ok(Self::Blobs),
            "xor_grid" => Ok(Self::XorGrid),
            other => Err(invalid_arg(
                "generator",
                format!("expected two_moons, blobs or xor_grid, got `{other}`"),
            )),
        }
    }
}

fn gaussian(noise: f64) -> Result<Normal<f64>> {
    if !noise.is_finite() || noise < 0.0 {
        return Err(invalid_arg("noise", "must be finite and non-negative"));
    }
    Normal::new(0.0, noise).map_err(|e| invalid_arg("noise", e.to_string()))
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid_arg("n", "must be at least 1"));
    }
    Ok(())
}

/// Two interleaving half circles; the first `ceil(n/2)` points are class 0.
pub fn two_moons(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let normal = gaussian(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n0 = n.div_ceil(2);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (label, j, count) = if i < n0 { (0, i, n0) } else { (1, i - n0, n - n0) };
        let t = if count > 1 {
            std::f64::consts::PI * j as f64 / (count - 1) as f64
        } else {
            0.0
        };
        let (x, y) = if label == 0 {
            (t.cos(), t.sin())
        } else {
            (1.0 - t.cos(), 0.5 - t.sin())
        };
        features.push(vec![x + normal.sample(&mut rng), y + normal.sample(&mut rng)]);
        labels.push(label);
    }
    Dataset::new(features, labels, 2)
}

/// `k` isotropic Gaussian clusters with centers evenly spaced on a circle
/// of radius 3; point `i` belongs to class `i mod k`.
pub fn blobs(n: usize, k: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    if k < 2 {
        return Err(invalid_arg("classes", "must be at least 2"));
    }
    let normal = gaussian(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let label = i % k;
        let angle = std::f64::consts::TAU * label as f64 / k as f64;
        features.push(vec![
            3.0 * angle.cos() + normal.sample(&mut rng),
            3.0 * angle.sin() + normal.sample(&mut rng),
        ]);
        labels.push(label);
    }
    Dataset::new(features, labels, k)
}

/// Uniform points on `[-1, 1]^2` labeled by the sign pattern XOR, then
/// jittered by Gaussian noise.
pub fn xor_grid(n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    check_n(n)?;
    let normal = gaussian(noise)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut features = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0));
        labels.push(usize::from((a > 0.0) != (b > 0.0)));
        features.push(vec![a + normal.sample(&mut rng), b + normal.sample(&mut rng)]);
    }
    Dataset::new(features, labels, 2)
}

pub fn generate(generator: Generator, n: usize, classes: usize, noise: f64, seed: u64) -> Result<Dataset> {
    match generator {
        Generator::TwoMoons => two_moons(n, noise, seed),
        Generator::Blobs => blobs(n, classes, noise, seed),
        Generator::XorGrid => xor_grid(n, noise, seed),
    }
}

/// A random finite instance for the exact game: `n` one-dimensional samples
/// with uniform labels, a `grid`-point perturbation set on `[0, 1)` whose
/// first point is zero, and `hypotheses` random prediction tables.
pub fn random_table_instance(
    n: usize,
    classes: usize,
    hypotheses: usize,
    grid: usize,
    seed: u64,
) -> Result<(HypothesisClass, Dataset, PerturbationModel)> {
    check_n(n)?;
    if classes < 2 {
        return Err(invalid_arg("classes", "must be at least 2"));
    }
    if hypotheses == 0 || grid == 0 {
        return Err(invalid_arg("hypotheses", "class and grid must be non-empty"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..classes)).collect();
    let features: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let points: Vec<Vec<f64>> = (0..grid).map(|j| vec![j as f64 / grid as f64]).collect();
    let table: Vec<Vec<usize>> = (0..hypotheses)
        .map(|_| (0..n * grid).map(|_| rng.random_range(0..classes)).collect())
        .collect();
    Ok((
        HypothesisClass::table(classes, table)?,
        Dataset::new(features, labels, classes)?,
        PerturbationModel::grid(1.0, points)?,
    ))
}

pub fn write_csv<W: Write>(dataset: &Dataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (0..dataset.dim()).map(|j| format!("x{j}")).collect();
    header.push("label".into());
    w.write_record(&header).map_err(csv_err)?;
    for i in 0..dataset.len() {
        let mut row: Vec<String> = dataset.x(i).iter().map(|&v| format_f64(v)).collect();
        row.push(dataset.y(i).to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a dataset; the number of classes is `num_classes` when given, else
/// one more than the largest label.
pub fn read_csv<R: Read>(input: R, num_classes: Option<usize>) -> Result<Dataset> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().next_back() != Some("label") || header.len() < 2 {
        return Err(Error::Parse("header must be x0,...,x{d-1},label".into()));
    }
    let d = header.len() - 1;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row = record
            .iter()
            .take(d)
            .map(|v| v.trim().parse::<f64>().map_err(|e| Error::Parse(format!("row {}: `{v}`: {e}", line + 1))))
            .collect::<Result<Vec<f64>>>()?;
        let label = record[d]
            .trim()
            .parse::<usize>()
            .map_err(|e| Error::Parse(format!("row {}: label: {e}", line + 1)))?;
        features.push(row);
        labels.push(label);
    }
    let k = num_classes.unwrap_or_else(|| labels.iter().max().map_or(0, |m| m + 1).max(2));
    Dataset::new(features, labels, k)
}

pub fn save_csv(dataset: &Dataset, path: &Path) -> Result<()> {
    write_csv(dataset, std::fs::File::create(path)?)
}

pub fn load_csv(path: &Path, num_classes: Option<usize>) -> Result<Dataset> {
    read_csv(std::fs::File::open(path)?, num_classes)
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}
