//! Plain-text checkpoints for networks and ensembles.
//!
//! Format (version 1), one record per line, values space-separated and
//! written with 17 significant digits:
//!
//! ```text
//! mrboost-ensemble v1
//! members <count>
//! sizes <d> <h1> ... <K>        # once per member
//! w <fan_out * fan_in values>   # row-major, once per layer
//! b <fan_out values>
//! ```

use std::fmt::Write as _;
use std::path::Path;

use super::{Layer, MlpParams, ScoreEnsemble};
use crate::error::{Error, Result};

pub const MAGIC: &str = "mrboost-ensemble v1";

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn to_string(ensemble: &ScoreEnsemble) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{MAGIC}");
    let _ = writeln!(out, "members {}", ensemble.len());
    for m in ensemble.members() {
        let sizes: Vec<String> = m.sizes().iter().map(ToString::to_string).collect();
        let _ = writeln!(out, "sizes {}", sizes.join(" "));
        for layer in m.layers() {
            let w: Vec<String> = layer.weights.iter().map(|&v| format_f64(v)).collect();
            let b: Vec<String> = layer.bias.iter().map(|&v| format_f64(v)).collect();
            let _ = writeln!(out, "w {}", w.join(" "));
            let _ = writeln!(out, "b {}", b.join(" "));
        }
    }
    out
}

pub fn from_str(text: &str) -> Result<ScoreEnsemble> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::Parse(format!("checkpoint truncated before {what}")))
    };
    if next("header")?.trim() != MAGIC {
        return Err(Error::Parse(format!("missing `{MAGIC}` header")));
    }
    let count: usize = record(next("member count")?, "members")?
        .first()
        .ok_or_else(|| Error::Parse("empty member count".into()))?
        .parse()
        .map_err(|e| Error::Parse(format!("member count: {e}")))?;
    let mut members = Vec::with_capacity(count);
    for _ in 0..count {
        let sizes = record(next("sizes")?, "sizes")?
            .iter()
            .map(|s| s.parse::<usize>().map_err(|e| Error::Parse(format!("sizes: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        if sizes.len() < 2 {
            return Err(Error::Parse("sizes record needs at least two entries".into()));
        }
        let mut layers = Vec::new();
        for w in sizes.windows(2) {
            let weights = floats(record(next("weights")?, "w")?)?;
            let bias = floats(record(next("biases")?, "b")?)?;
            layers.push(Layer {
                fan_in: w[0],
                fan_out: w[1],
                weights,
                bias,
            });
        }
        members.push(MlpParams::from_layers(layers)?);
    }
    ScoreEnsemble::new(members)
}

fn record<'a>(line: &'a str, tag: &str) -> Result<Vec<&'a str>> {
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some(t) if t == tag => Ok(parts.collect()),
        other => Err(Error::Parse(format!("expected `{tag}` record, found {other:?}"))),
    }
}

fn floats(tokens: Vec<&str>) -> Result<Vec<f64>> {
    tokens
        .into_iter()
        .map(|t| t.parse::<f64>().map_err(|e| Error::Parse(format!("value `{t}`: {e}"))))
        .collect()
}

pub fn save(ensemble: &ScoreEnsemble, path: &Path) -> Result<()> {
    std::fs::write(path, to_string(ensemble))?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ScoreEnsemble> {
    from_str(&std::fs::read_to_string(path)?)
}
