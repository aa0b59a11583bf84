//! Command-line front end.
//!
//! Every subcommand reads flat `key=value` settings from an optional
//! `--config` file, then applies `--set key=value` overrides. Unknown keys
//! and invalid values are usage errors (exit 2) reported on one line naming
//! the key; failures during a run exit with 1. Artifacts go to `--out`, or
//! `$MRBOOST_OUT_DIR`, or the current directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Display;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::datasets::{self, Generator};
use crate::domain::{Dataset, HypothesisClass, PerturbationModel, PredictionTable, DEFAULT_GRID_CAP};
use crate::error::Error;
use crate::game::regret::{adaptive_adversary_losses, alternating_losses, default_eta, exp_weights_regret_harness};
use crate::game::{mrboost_run, MrBoostConfig, DEFAULT_LP_CAP, DEFAULT_PAYOFF_CAP};
use crate::losses::LossKind;
use crate::nn::checkpoint;
use crate::nn::{mrboost_nn_run, InitRule, NnBoostConfig, SamplerKind, ScoreEnsemble, SgdConfig};
use crate::robust::{evaluate_robust_accuracy, robboost_greedy, AttackConfig, RobBoostConfig, StageLoss};
use crate::weaklearn::{interval_class_fixture, wl_mrboost_value, wl_robboost_value};

pub const OUT_DIR_ENV: &str = "MRBOOST_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "mrboost", version, about = "Margin boosting for adversarially robust ensembles")]
struct Cli {
    /// Output directory (falls back to $MRBOOST_OUT_DIR, then `.`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a synthetic dataset as CSV.
    GenData(Settings),
    /// Run the exact booster on a finite instance.
    ExactBoost(Settings),
    /// Boost small score networks.
    NnBoost(Settings),
    /// Certify both weak-learning conditions on a finite instance.
    WlCheck(Settings),
    /// Compare exponential-weights regret with its bound.
    RegretCheck(Settings),
    /// Evaluate a saved ensemble under FGSM and PGD.
    AttackEval(Settings),
    /// Train the greedy stagewise robust-boosting baseline.
    Robboost(Settings),
}

#[derive(Debug, Args)]
struct Settings {
    /// Flat `key=value` file; `#` starts a comment.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one key; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Usage(_) => 2,
            Self::Runtime(_) => 1,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) | Self::Runtime(m) => f.write_str(m),
        }
    }
}

/// Invalid input from the library becomes a usage error; anything else is
/// a runtime failure.
impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Solver(_) | Error::Diverged(_) => Self::Runtime(e.to_string()),
            _ => Self::Usage(e.to_string()),
        }
    }
}

fn runtime(e: impl Display) -> CliError {
    CliError::Runtime(e.to_string())
}

type CliResult<T> = std::result::Result<T, CliError>;

/// Resolved `key=value` settings. Every lookup records the value used
/// (default or given) so summaries can echo the full configuration.
pub struct Config {
    given: BTreeMap<String, String>,
    resolved: BTreeMap<String, String>,
}

impl Config {
    pub fn parse(file_text: Option<&str>, overrides: &[String]) -> CliResult<Self> {
        let mut given = BTreeMap::new();
        let lines = file_text.into_iter().flat_map(str::lines).map(|l| (l, "config file"));
        let sets = overrides.iter().map(|s| (s.as_str(), "--set"));
        for (raw, origin) in lines.chain(sets) {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("{origin}: expected key=value, got `{line}`")))?;
            given.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(Self {
            given,
            resolved: BTreeMap::new(),
        })
    }

    fn get<T: FromStr>(&mut self, key: &str, default: &str) -> CliResult<T>
    where
        T::Err: Display,
    {
        let raw = self.given.get(key).cloned().unwrap_or_else(|| default.to_string());
        let value = raw
            .parse::<T>()
            .map_err(|e| CliError::Usage(format!("invalid value for `{key}`: `{raw}` ({e})")))?;
        self.resolved.insert(key.to_string(), raw);
        Ok(value)
    }

    fn get_opt<T: FromStr>(&mut self, key: &str) -> CliResult<Option<T>>
    where
        T::Err: Display,
    {
        match self.given.contains_key(key) {
            true => self.get(key, "").map(Some),
            false => Ok(None),
        }
    }

    fn get_list(&mut self, key: &str, default: &str) -> CliResult<Vec<usize>> {
        let raw: String = self.get(key, default)?;
        raw.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| CliError::Usage(format!("invalid value for `{key}`: `{raw}` ({e})")))
            })
            .collect()
    }

    /// Fails on any key that no lookup consumed.
    fn finish(&self) -> CliResult<()> {
        match self.given.keys().find(|k| !self.resolved.contains_key(*k)) {
            Some(k) => Err(CliError::Usage(format!("unknown config key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn resolved(&self) -> &BTreeMap<String, String> {
        &self.resolved
    }
}

fn check(cond: bool, key: &str, reason: &str) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::Usage(format!("invalid value for `{key}`: {reason}")))
    }
}

/// Parses `args`, runs one subcommand, prints diagnostics to stderr, and
/// returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let out = cli
        .out
        .clone()
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    match dispatch(cli.command, &out) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

type Handler = fn(&mut Config, &Path) -> CliResult<()>;

fn dispatch(command: Command, out: &Path) -> CliResult<()> {
    let (settings, handler): (Settings, Handler) = match command {
        Command::GenData(s) => (s, gen_data),
        Command::ExactBoost(s) => (s, exact_boost),
        Command::NnBoost(s) => (s, nn_boost),
        Command::WlCheck(s) => (s, wl_check),
        Command::RegretCheck(s) => (s, regret_check),
        Command::AttackEval(s) => (s, attack_eval),
        Command::Robboost(s) => (s, robboost),
    };
    let text = match &settings.config {
        Some(p) => Some(fs::read_to_string(p).map_err(|e| CliError::Usage(format!("config `{}`: {e}", p.display())))?),
        None => None,
    };
    let mut config = Config::parse(text.as_deref(), &settings.set)?;
    fs::create_dir_all(out).map_err(|e| runtime(format!("output directory `{}`: {e}", out.display())))?;
    handler(&mut config, out)
}

fn write_json(path: &Path, value: &impl Serialize) -> CliResult<()> {
    let text = serde_json::to_string_pretty(value).map_err(runtime)?;
    fs::write(path, text + "\n").map_err(|e| runtime(format!("{}: {e}", path.display())))
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(runtime)?;
    w.write_record(header).map_err(runtime)?;
    for r in rows {
        w.write_record(r).map_err(runtime)?;
    }
    w.flush().map_err(runtime)
}

fn num(v: f64) -> String {
    checkpoint::format_f64(v)
}

fn gen_data(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let generator: Generator = cfg.get("generator", "two_moons")?;
    let n: usize = cfg.get("n", "200")?;
    let classes: usize = cfg.get("classes", "3")?;
    let noise: f64 = cfg.get("noise", "0.1")?;
    let seed: u64 = cfg.get("seed", "0")?;
    let file: String = cfg.get("file", "data.csv")?;
    cfg.finish()?;
    let data = datasets::generate(generator, n, classes, noise, seed)?;
    datasets::save_csv(&data, &out.join(file))?;
    Ok(())
}

/// Loads `data=PATH`, or generates from the generator keys when absent.
fn load_data(cfg: &mut Config, prefix: &str) -> CliResult<Dataset> {
    let path: Option<PathBuf> = cfg.get_opt(&format!("{prefix}data"))?;
    if let Some(p) = path {
        return Ok(datasets::load_csv(&p, None)?);
    }
    let generator: Generator = cfg.get(&format!("{prefix}generator"), "two_moons")?;
    let n: usize = cfg.get(&format!("{prefix}n"), "200")?;
    let classes: usize = cfg.get(&format!("{prefix}classes"), "3")?;
    let noise: f64 = cfg.get(&format!("{prefix}noise"), "0.1")?;
    let seed: u64 = cfg.get(&format!("{prefix}data_seed"), if prefix.is_empty() { "0" } else { "1" })?;
    Ok(datasets::generate(generator, n, classes, noise, seed)?)
}

type Instance = (HypothesisClass, Dataset, PerturbationModel);

fn finite_instance(cfg: &mut Config) -> CliResult<Instance> {
    let kind: String = cfg.get("instance", "interval_fixture")?;
    match kind.as_str() {
        "interval_fixture" => {
            let step: f64 = cfg.get("grid_step", "0.1")?;
            Ok(interval_class_fixture(step)?)
        }
        "stumps" => {
            let data = load_data(cfg, "")?;
            let grid: String = cfg.get("grid", "zero")?;
            let perts = match grid.as_str() {
                "zero" => PerturbationModel::zero(data.dim()),
                "sign" => {
                    let eps: f64 = cfg.get("epsilon", "0.1")?;
                    let cap: usize = cfg.get("grid_cap", &DEFAULT_GRID_CAP.to_string())?;
                    PerturbationModel::sign_grid(eps, data.dim(), cap)?
                }
                other => return Err(CliError::Usage(format!("invalid value for `grid`: `{other}` (zero or sign)"))),
            };
            let class = HypothesisClass::stumps_from_data(&data)?;
            Ok((class, data, perts))
        }
        "random" => {
            let n: usize = cfg.get("n", "6")?;
            let classes: usize = cfg.get("classes", "2")?;
            let h: usize = cfg.get("hypotheses", "20")?;
            let g: usize = cfg.get("grid_size", "3")?;
            let seed: u64 = cfg.get("seed", "0")?;
            Ok(datasets::random_table_instance(n, classes, h, g, seed)?)
        }
        other => Err(CliError::Usage(format!(
            "invalid value for `instance`: `{other}` (interval_fixture, stumps or random)"
        ))),
    }
}

fn exact_boost(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let (class, data, perts) = finite_instance(cfg)?;
    let rounds: usize = cfg.get("rounds", "64")?;
    check(rounds >= 1, "rounds", "must be at least 1")?;
    let eta: Option<f64> = cfg.get_opt("eta")?;
    if let Some(e) = eta {
        check(e.is_finite() && e > 0.0, "eta", "must be positive")?;
    }
    let payoff_cap: usize = cfg.get("payoff_cap", &DEFAULT_PAYOFF_CAP.to_string())?;
    let lp_cap: usize = cfg.get("lp_cap", &DEFAULT_LP_CAP.to_string())?;
    let seed: u64 = cfg.get("seed", "0")?;
    cfg.finish()?;
    let table = PredictionTable::build(&class, &data, &perts)?;
    let run = mrboost_run(
        &table,
        &data,
        &MrBoostConfig {
            rounds,
            eta,
            payoff_cap,
            lp_cap,
        },
    )?;
    let rows: Vec<Vec<String>> = run
        .rounds
        .iter()
        .map(|r| {
            vec![
                r.t.to_string(),
                num(r.min_robust_margin),
                r.clean_accuracy.map(num).unwrap_or_default(),
                num(r.adversarial_accuracy),
                num(r.ne_gap),
            ]
        })
        .collect();
    write_rows(
        &out.join("exact_boost_rounds.csv"),
        &["t", "min_robust_margin", "clean_acc", "adv_acc", "ne_gap"],
        &rows,
    )?;
    write_json(
        &out.join("exact_boost_summary.json"),
        &json!({
            "config": cfg.resolved(),
            "seed": seed,
            "eta": run.eta,
            "lp_value": run.certificate.lp_value,
            "certificate": run.certificate,
            "final_report": run.final_report,
            "chosen": run.chosen,
        }),
    )
}

fn wl_check(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let (class, data, perts) = finite_instance(cfg)?;
    let lp_cap: usize = cfg.get("lp_cap", &DEFAULT_LP_CAP.to_string())?;
    cfg.finish()?;
    let mr = wl_mrboost_value(&class, &data, &perts, lp_cap)?;
    let rob = wl_robboost_value(&class, &data, &perts, lp_cap)?;
    write_json(
        &out.join("wl_check.json"),
        &json!({ "config": cfg.resolved(), "mrboost": mr, "robboost": rob }),
    )
}

fn regret_check(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let kind: String = cfg.get("sequence", "random")?;
    let actions: usize = cfg.get("actions", "16")?;
    let horizon: usize = cfg.get("horizon", "256")?;
    let bound: f64 = cfg.get("loss_bound", "1")?;
    let seed: u64 = cfg.get("seed", "0")?;
    let eta: Option<f64> = cfg.get_opt("eta")?;
    check(actions >= 1, "actions", "must be at least 1")?;
    check(horizon >= 1, "horizon", "must be at least 1")?;
    check(bound.is_finite() && bound > 0.0, "loss_bound", "must be positive")?;
    cfg.finish()?;
    let losses = match kind.as_str() {
        "random" => {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            (0..horizon)
                .map(|_| (0..actions).map(|_| rng.random_range(-bound..=bound)).collect())
                .collect()
        }
        "adversarial" => adaptive_adversary_losses(actions, horizon, bound, eta.unwrap_or(default_eta(bound, horizon))),
        "alternating" => alternating_losses(horizon),
        other => {
            return Err(CliError::Usage(format!(
                "invalid value for `sequence`: `{other}` (random, adversarial or alternating)"
            )))
        }
    };
    let report = exp_weights_regret_harness(&losses, eta)?;
    write_json(
        &out.join("regret_check.json"),
        &json!({
            "config": cfg.resolved(),
            "seed": seed,
            "report": report,
            "within_bound": report.within_bound(),
        }),
    )
}

fn sgd_config(cfg: &mut Config) -> CliResult<SgdConfig> {
    let d = SgdConfig::default();
    Ok(SgdConfig {
        step_size: cfg.get("step_size", &d.step_size.to_string())?,
        iterations: cfg.get("iterations", &d.iterations.to_string())?,
        batch_size: cfg.get("batch_size", &d.batch_size.to_string())?,
        momentum: cfg.get("momentum", &d.momentum.to_string())?,
        weight_decay: cfg.get("weight_decay", &d.weight_decay.to_string())?,
        seed: cfg.get("seed", "0")?,
    })
}

/// Training and evaluation attacks share `epsilon`; step counts default to
/// 10 and 20 with step size `epsilon / 4`.
fn attack_configs(cfg: &mut Config) -> CliResult<(AttackConfig, AttackConfig)> {
    let eps: f64 = cfg.get("epsilon", "0.1")?;
    check(eps.is_finite() && eps >= 0.0, "epsilon", "must be finite and non-negative")?;
    let alpha: f64 = cfg.get("attack_step_size", &(eps / 4.0).to_string())?;
    let seed: u64 = cfg.get("attack_seed", "0")?;
    let mut train = AttackConfig::pgd(eps, cfg.get("attack_steps", "10")?).with_seed(seed);
    train.step_size = alpha;
    let mut eval = AttackConfig::pgd(eps, cfg.get("eval_steps", "20")?).with_seed(seed ^ 1);
    eval.step_size = alpha;
    Ok((train, eval))
}

fn init_rule(cfg: &mut Config) -> CliResult<InitRule> {
    let raw: String = cfg.get("init", "per")?;
    match raw.as_str() {
        "per" => Ok(InitRule::Per),
        "rnd" => Ok(InitRule::Rnd),
        other => Err(CliError::Usage(format!("invalid value for `init`: `{other}` (per or rnd)"))),
    }
}

fn nn_outputs(
    out: &Path,
    prefix: &str,
    ensemble: &ScoreEnsemble,
    metrics: &[(usize, f64, f64)],
    summary: serde_json::Value,
) -> CliResult<()> {
    let rows: Vec<Vec<String>> = metrics
        .iter()
        .map(|(t, c, a)| vec![t.to_string(), num(*c), num(*a)])
        .collect();
    write_rows(&out.join(format!("{prefix}_rounds.csv")), &["t", "clean_acc", "adv_acc"], &rows)?;
    checkpoint::save(ensemble, &out.join(format!("{prefix}_ensemble.txt")))?;
    write_json(&out.join(format!("{prefix}_summary.json")), &summary)
}

fn nn_boost(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let train = load_data(cfg, "")?;
    let test = load_data(cfg, "test_")?;
    let rounds: usize = cfg.get("rounds", "3")?;
    let hidden = cfg.get_list("hidden", "64,64")?;
    let sgd = sgd_config(cfg)?;
    let sampler: SamplerKind = cfg.get("sampler", "all")?;
    let init = init_rule(cfg)?;
    let (attack, eval) = attack_configs(cfg)?;
    let eta: Option<f64> = cfg.get_opt("eta")?;
    let pool_random: usize = cfg.get("pool_random", "8")?;
    let aggressive: bool = cfg.get("aggressive", "true")?;
    cfg.finish()?;
    let config = NnBoostConfig {
        rounds,
        hidden,
        sgd,
        sampler,
        init,
        attack,
        eta,
        pool_random,
        aggressive,
    };
    let run = mrboost_nn_run(&train, Some((&test, &eval)), &config)?;
    let metrics: Vec<_> = run
        .metrics
        .iter()
        .map(|m| (m.t, m.clean_accuracy, m.adversarial_accuracy))
        .collect();
    let summary = json!({
        "config": cfg.resolved(),
        "seed": config.sgd.seed,
        "eta": config.resolved_eta(),
        "metrics": run.metrics,
    });
    nn_outputs(out, "nn_boost", &run.ensemble, &metrics, summary)
}

fn robboost(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let train = load_data(cfg, "")?;
    let test = load_data(cfg, "test_")?;
    let rounds: usize = cfg.get("rounds", "3")?;
    let hidden = cfg.get_list("hidden", "64,64")?;
    let sgd = sgd_config(cfg)?;
    let init = init_rule(cfg)?;
    let (attack, eval) = attack_configs(cfg)?;
    let stage: String = cfg.get("stage_loss", "whole")?;
    let stage_loss = match stage.as_str() {
        "whole" => StageLoss::Whole,
        "ind" => StageLoss::Ind,
        other => return Err(CliError::Usage(format!("invalid value for `stage_loss`: `{other}` (whole or ind)"))),
    };
    cfg.finish()?;
    let config = RobBoostConfig {
        rounds,
        hidden,
        sgd,
        attack,
        init,
        stage_loss,
    };
    let ensemble = robboost_greedy(&train, &config)?;
    let mut metrics = Vec::new();
    for t in 1..=ensemble.len() {
        let ev = evaluate_robust_accuracy(&ensemble.prefix(t)?, &test, &eval)?;
        metrics.push((t, ev.clean_accuracy, ev.robust_accuracy));
    }
    let summary = json!({
        "config": cfg.resolved(),
        "seed": config.sgd.seed,
        "metrics": metrics
            .iter()
            .map(|(t, c, a)| json!({ "t": t, "clean_accuracy": c, "adversarial_accuracy": a }))
            .collect::<Vec<_>>(),
    });
    nn_outputs(out, "robboost", &ensemble, &metrics, summary)
}

fn attack_eval(cfg: &mut Config, out: &Path) -> CliResult<()> {
    let model: PathBuf = cfg.get("model", "nn_boost_ensemble.txt")?;
    let data = load_data(cfg, "")?;
    let eps: f64 = cfg.get("epsilon", "0.1")?;
    check(eps.is_finite() && eps >= 0.0, "epsilon", "must be finite and non-negative")?;
    let steps = cfg.get_list("steps", "10,20")?;
    let seed: u64 = cfg.get("attack_seed", "0")?;
    let loss: String = cfg.get("loss", "ce")?;
    let loss = match loss.as_str() {
        "ce" => LossKind::Ce,
        "mce_a" => LossKind::MceA,
        other => return Err(CliError::Usage(format!("invalid value for `loss`: `{other}` (ce or mce_a)"))),
    };
    cfg.finish()?;
    let ensemble = checkpoint::load(&model)?;
    let mut attacks = vec![(
        "fgsm".to_string(),
        AttackConfig {
            step_size: eps,
            random_start: false,
            steps: 1,
            ..AttackConfig::pgd(eps, 1)
        },
    )];
    attacks.extend(steps.iter().map(|&k| (format!("pgd{k}"), AttackConfig::pgd(eps, k))));
    let mut results = BTreeMap::new();
    let mut per_sample = Vec::new();
    for (name, mut attack) in attacks {
        attack.seed = seed;
        attack.loss = loss;
        let ev = evaluate_robust_accuracy(&ensemble, &data, &attack)?;
        for (i, p) in ev.points.iter().enumerate() {
            per_sample.push(vec![name.clone(), i.to_string(), num(p.clean), num(p.adversarial), num(p.objective)]);
        }
        results.insert(
            name,
            json!({ "clean_accuracy": ev.clean_accuracy, "robust_accuracy": ev.robust_accuracy, "adversarial_risk": ev.adversarial_risk }),
        );
    }
    write_rows(
        &out.join("attack_eval_points.csv"),
        &["attack", "index", "clean", "adv", "objective"],
        &per_sample,
    )?;
    write_json(
        &out.join("attack_eval.json"),
        &json!({ "config": cfg.resolved(), "seed": seed, "attacks": results }),
    )
}

/// Entry point used by the binary.
pub fn main_exit() -> ! {
    let code = run(std::env::args_os());
    let _ = std::io::stdout().flush();
    std::process::exit(code)
}
