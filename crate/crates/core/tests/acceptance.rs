//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary so the lines appear in `cargo test` output. Failures are reported
//! but only change the exit status when `ACCEPTANCE_STRICT=1` is set.
//! `ACCEPTANCE_ONLY=<n>` runs a single criterion.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use common::*;
use mrboost::datasets::{random_table_instance, two_moons};
use mrboost::domain::{Dataset, HypothesisClass, PerturbationModel, PredictionTable};
use mrboost::game::{
    best_response, exp_weights_distribution, matrix_game_value_lp, mrboost_run, solve_matrix_game, xi_finite,
    GameState, MrBoostConfig, PayoffMatrix, DEFAULT_LP_CAP, DEFAULT_PAYOFF_CAP,
};
use mrboost::game::regret::{adaptive_adversary_losses, alternating_losses, exp_weights_regret_harness};
use mrboost::losses::{ce_loss, mce_loss, LossKind};
use mrboost::nn::{
    grad_wrt_input, grad_wrt_params, mrboost_nn_run, InitRule, LogitModel, MlpParams, NnBoostConfig, SamplerKind,
    SgdConfig,
};
use mrboost::robust::{
    adversarial_training, evaluate_randomized_accuracy, evaluate_robust_accuracy, fgsm_ce, pgd, pgd_attack, pinot_pair,
    randomized_ensemble_attack, robboost_greedy, sample_rng, sampler_all, sampler_max, sampler_rnd, AggregationLevel,
    AtLoss, AttackConfig, LossObjective, RandomizedEnsemble, RobBoostConfig, StageLoss,
};
use mrboost::weaklearn::{interval_class_fixture, wl_mrboost_value, wl_robboost_value};
use rand::Rng;

type Outcome = Result<String, String>;
type Criterion = fn() -> Outcome;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn c1_separation() -> Outcome {
    let start = Instant::now();
    let (class, data, grid) = interval_class_fixture(0.1).map_err(|e| e.to_string())?;
    let mr = wl_mrboost_value(&class, &data, &grid, DEFAULT_LP_CAP).map_err(|e| e.to_string())?;
    let rob = wl_robboost_value(&class, &data, &grid, DEFAULT_LP_CAP).map_err(|e| e.to_string())?;
    let secs = start.elapsed().as_secs_f64();
    ensure(mr.value >= 0.2, || format!("mrboost gamma {} < 0.2", mr.value))?;
    ensure(rob.value <= 0.0, || format!("robboost gamma {} > 0", rob.value))?;
    ensure(secs < 1.0, || format!("took {secs:.3} s"))?;
    Ok(format!("gamma_mr = {:.6}, gamma_rob = {:.6}, {secs:.3} s", mr.value, rob.value))
}

fn c2_mce_identity() -> Outcome {
    let mut r = rng(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let g = [r.random_range(-30.0..30.0), r.random_range(-30.0..30.0)];
        let y = r.random_range(0..2);
        let m = mce_loss(&g, y, 1 - y).map_err(|e| e.to_string())?;
        worst = worst.max((m - 2.0 * ce_loss(&g, y)).abs());
    }
    ensure(worst <= 1e-10, || format!("max abs error {worst:e}"))?;
    Ok(format!("max abs error {worst:.3e} over 10^4 pairs"))
}

type Instance = (HypothesisClass, Dataset, PerturbationModel);

fn small_random_instance(seed: u64) -> Instance {
    let mut r = rng(1000 + seed);
    let n = r.random_range(2..=10);
    let k = r.random_range(2..=3);
    let h = r.random_range(5..=50);
    let g = r.random_range(1..=9);
    random_table_instance(n, k, h, g, seed).expect("valid instance")
}

fn run_game(inst: &Instance, rounds: usize) -> (f64, f64, usize) {
    let (class, data, grid) = inst;
    let table = PredictionTable::build(class, data, grid).unwrap();
    let run = mrboost_run(&table, data, &MrBoostConfig::new(rounds)).unwrap();
    let m = PayoffMatrix::build(&table, data, DEFAULT_PAYOFF_CAP).unwrap().num_entries();
    (run.certificate.lp_value.unwrap(), run.certificate.lower, m)
}

fn c3_convergence() -> Outcome {
    let start = Instant::now();
    let mut instances: Vec<Instance> = (0..20).map(small_random_instance).collect();
    instances.push(interval_class_fixture(0.1).unwrap());
    let mut halving_failures = Vec::new();
    let mut max_ratio: f64 = 0.0;
    for (idx, inst) in instances.iter().enumerate() {
        let mut gaps = Vec::new();
        for t in [16, 64, 256] {
            let (lp, lower, m) = run_game(inst, t);
            let gap = lp - lower;
            let xi = xi_finite(t, m);
            ensure(gap <= xi + 1e-12, || format!("instance {idx}, T={t}: gap {gap} > xi {xi}"))?;
            max_ratio = max_ratio.max(gap / xi);
            gaps.push(gap);
        }
        if gaps[2] > gaps[0] / 2.0 + 1e-12 {
            halving_failures.push(format!("#{idx}: {:.4} -> {:.4}", gaps[0], gaps[2]));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(halving_failures.is_empty(), || format!("gap(256) > gap(16)/2 on {}", halving_failures.join(", ")))?;
    ensure(secs < 30.0, || format!("took {secs:.1} s"))?;
    Ok(format!("21 instances, max gap/xi = {max_ratio:.3}, {secs:.2} s"))
}

/// Every hypothesis is correct except at one `(sample, grid point)` where it
/// predicts a random rival, plus random extra hypotheses; the uniform
/// mixture of the single-error family has positive margin everywhere.
fn positive_instance(seed: u64) -> Instance {
    let mut r = rng(4000 + seed);
    let (n, k, g) = (r.random_range(2..=5), r.random_range(2..=3), r.random_range(1..=3));
    let (_, data, grid) = random_table_instance(n, k, 1, g, seed).unwrap();
    let mut rows = Vec::new();
    for cell in 0..n * g {
        let mut row: Vec<usize> = (0..n * g).map(|c| data.y(c / g)).collect();
        let y = data.y(cell / g);
        row[cell] = (y + r.random_range(1..k)) % k;
        rows.push(row);
    }
    for _ in 0..r.random_range(0..5) {
        rows.push((0..n * g).map(|_| r.random_range(0..k)).collect());
    }
    (HypothesisClass::table(k, rows).unwrap(), data, grid)
}

/// Either every hypothesis errs at one fixed cell, or hypotheses split into
/// two groups erring at two different grid points of the same sample.
fn non_positive_instance(seed: u64) -> Instance {
    let mut r = rng(5000 + seed);
    let (n, k) = (r.random_range(2..=5), r.random_range(2..=3));
    let g = r.random_range(2..=3);
    let h = r.random_range(4..=12);
    let (class, data, grid) = random_table_instance(n, k, h, g, seed).unwrap();
    let HypothesisClass::Table { predictions, .. } = class else { unreachable!() };
    let mut rows = predictions;
    let i0 = r.random_range(0..n);
    let y = data.y(i0);
    let wrong = (y + 1) % k;
    let split = seed % 2 == 1;
    for (hi, row) in rows.iter_mut().enumerate() {
        if split {
            let (bad, good) = if hi % 2 == 0 { (0, 1) } else { (1, 0) };
            row[i0 * g + bad] = wrong;
            row[i0 * g + good] = y;
        } else {
            row[i0 * g] = wrong;
        }
    }
    (HypothesisClass::table(k, rows).unwrap(), data, grid)
}

fn c4_equivalence() -> Outcome {
    let mut needed = Vec::new();
    for seed in 0..10 {
        let inst = positive_instance(seed);
        let (class, data, grid) = &inst;
        let gamma = wl_mrboost_value(class, data, grid, DEFAULT_LP_CAP).unwrap().value;
        ensure(gamma > 0.0, || format!("positive instance {seed} has gamma {gamma}"))?;
        let table = PredictionTable::build(class, data, grid).unwrap();
        let m = PayoffMatrix::build(&table, data, DEFAULT_PAYOFF_CAP).unwrap().num_entries();
        let mut t = 1;
        while xi_finite(t, m) >= gamma {
            t += 1;
        }
        let run = mrboost_run(&table, data, &MrBoostConfig::new(t)).unwrap();
        ensure(run.final_report.adversarial_accuracy == 1.0, || {
            format!("positive instance {seed}: robust accuracy {} at T={t}", run.final_report.adversarial_accuracy)
        })?;
        needed.push(t);
    }
    for seed in 0..10 {
        let (class, data, grid) = non_positive_instance(seed);
        let gamma = wl_mrboost_value(&class, &data, &grid, DEFAULT_LP_CAP).unwrap().value;
        ensure(gamma <= 1e-12, || format!("constructed instance {seed} has gamma {gamma}"))?;
        let table = PredictionTable::build(&class, &data, &grid).unwrap();
        for t in [1, 16, 64, 256] {
            let run = mrboost_run(&table, &data, &MrBoostConfig::new(t)).unwrap();
            ensure(run.final_report.adversarial_accuracy < 1.0, || {
                format!("non-positive instance {seed}: robust accuracy 1 at T={t}")
            })?;
        }
    }
    Ok(format!("10 + 10 instances, T needed {needed:?}"))
}

fn c5_regret() -> Outcome {
    let mut r = rng(5);
    let mut worst: f64 = f64::NEG_INFINITY;
    for s in 0..50 {
        let z = r.random_range(2..=64);
        let t = r.random_range(16..=512);
        let b = r.random_range(0.1..5.0);
        let losses = match s % 3 {
            0 => (0..t).map(|_| (0..z).map(|_| r.random_range(-b..=b)).collect()).collect(),
            1 => adaptive_adversary_losses(z, t, b, 1.0 / (2.0 * b * (t as f64).sqrt())),
            _ => alternating_losses(t).into_iter().map(|row| row.iter().map(|v| v * b).collect()).collect(),
        };
        let rep = exp_weights_regret_harness(&losses, None).map_err(|e| e.to_string())?;
        ensure(rep.within_bound(), || {
            format!("sequence {s}: regret {} > bound {}", rep.realized, rep.bound)
        })?;
        worst = worst.max(rep.realized / rep.bound);
    }
    Ok(format!("50 sequences, max regret/bound = {worst:.3}"))
}

/// Random small network and input away from ReLU kinks.
fn gradient_case(r: &mut rand_chacha::ChaCha8Rng) -> (MlpParams, Vec<f64>, usize) {
    loop {
        let d = r.random_range(1..=4);
        let k = r.random_range(2..=4);
        let sizes = [d, r.random_range(2..=6), r.random_range(2..=5), k];
        let p = MlpParams::xavier(&sizes, r).unwrap();
        let x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let (_, pre) = naive_forward(&p, &x);
        if pre.iter().all(|v| v.abs() > 1e-3) {
            return (p, x, r.random_range(0..k));
        }
    }
}

fn c6_gradients() -> Outcome {
    let mut r = rng(6);
    let mut worst: f64 = 0.0;
    for which in 0..3 {
        for _ in 0..1000 {
            let (p, x, y) = gradient_case(&mut r);
            let k = p.num_classes();
            let loss = match which {
                0 => LossKind::Ce,
                1 => LossKind::Mce { rival: (y + r.random_range(1..k)) % k },
                _ => LossKind::MceA,
            };
            let naive = |g: &[f64]| match loss {
                LossKind::Ce => naive_ce(g, y),
                LossKind::Mce { rival } => naive_mce(g, y, rival),
                _ => naive_mce_a(g, y),
            };
            let (_, gx) = grad_wrt_input(&p, loss, &x, y).unwrap();
            let fd_x = central_diff(&mut |xx| naive(&naive_forward(&p, xx).0), &x, 1e-6);
            let (_, gp) = grad_wrt_params(&p, loss, &x, y).unwrap();
            let flat = p.to_flat();
            let mut probe = p.clone();
            let fd_p = central_diff(
                &mut |theta| {
                    probe.set_flat(theta).unwrap();
                    naive(&naive_forward(&probe, &x).0)
                },
                &flat,
                1e-6,
            );
            let e = relative_error(&gx, &fd_x).max(relative_error(&gp.to_flat(), &fd_p));
            ensure(e <= 1e-5, || format!("{loss:?}: relative error {e:e}"))?;
            worst = worst.max(e);
        }
    }
    Ok(format!("3 x 1000 cases, max relative error {worst:.2e}"))
}

fn c7_game_solver() -> Outcome {
    let mut r = rng(7);
    let mut worst_fp: f64 = 0.0;
    for _ in 0..20 {
        let rows = r.random_range(2..=8);
        let cols = r.random_range(2..=12);
        let a = random_matrix(&mut r, rows, cols);
        let lp = solve_matrix_game(&a, DEFAULT_LP_CAP).map_err(|e| e.to_string())?.value;
        let (lo, hi) = fictitious_play(&a, 1_000_000);
        let mid = 0.5 * (lo + hi);
        ensure(lo <= lp + 1e-9 && lp <= hi + 1e-9, || format!("LP {lp} outside FP bracket [{lo}, {hi}]"))?;
        ensure((mid - lp).abs() <= 1e-3, || format!("{rows}x{cols}: LP {lp} vs FP {mid}"))?;
        worst_fp = worst_fp.max((mid - lp).abs());
    }
    let t = 4096;
    let mut worst_exp: f64 = 0.0;
    for seed in 0..20 {
        let (class, data, grid) = small_random_instance(100 + seed);
        let table = PredictionTable::build(&class, &data, &grid).unwrap();
        let payoffs = PayoffMatrix::build(&table, &data, DEFAULT_PAYOFF_CAP).unwrap();
        let lp = matrix_game_value_lp(&payoffs, DEFAULT_LP_CAP).unwrap().value;
        let mut state = GameState::new(payoffs.num_entries(), mrboost::game::default_eta(t)).unwrap();
        let mut realized = 0.0;
        for _ in 0..t {
            let p = exp_weights_distribution(&state);
            let h = best_response(&payoffs, &p);
            realized += payoffs.rows()[h].iter().zip(&p).map(|(&v, q)| v as f64 * q).sum::<f64>();
            state.record(&payoffs, h);
        }
        let value = -realized / t as f64;
        let xi = xi_finite(t, payoffs.num_entries());
        ensure((value - lp).abs() <= xi, || format!("EXP+BR {value} vs LP {lp}, xi {xi}"))?;
        worst_exp = worst_exp.max((value - lp).abs());
    }
    Ok(format!("|FP - LP| <= {worst_fp:.2e}; |EXP+BR - LP| <= {worst_exp:.2e} at T=4096"))
}

fn within_ball(x: &[f64], adv: &[f64], eps: f64) -> bool {
    x.iter().zip(adv).all(|(a, b)| (b - a).abs() <= eps)
}

fn c8_attacks() -> Outcome {
    let mut r = rng(8);
    let mut checked = 0usize;
    for case in 0..200 {
        let d = r.random_range(1..=5);
        let k = r.random_range(2..=4);
        let p = MlpParams::xavier(&[d, 8, k], &mut r).unwrap();
        let q = MlpParams::xavier(&[d, 8, k], &mut r).unwrap();
        let x: Vec<f64> = (0..d).map(|_| r.random_range(-3.0..3.0)).collect();
        let y = r.random_range(0..k);
        let eps = [0.3, 0.1, 1.0 / 3.0, 0.05, 0.7][case % 5];
        let cfg = AttackConfig::pgd(eps, 7).with_seed(case as u64);
        let mut outs = vec![fgsm_ce(&p, &x, y, &cfg)];
        let out = pgd_attack(&p, &x, y, LossKind::MceA, &cfg, &mut sample_rng(1, case as u64));
        ensure(out.history.windows(2).all(|w| w[1] >= w[0]), || "best-so-far decreased".into())?;
        outs.push(out.x_adv);
        let ens = RandomizedEnsemble::new(p.clone(), q.clone(), 0.5).unwrap();
        for level in [AggregationLevel::Logit, AggregationLevel::Probability] {
            outs.push(randomized_ensemble_attack(&ens, &x, y, &cfg, level, &mut sample_rng(2, 0)).unwrap().x_adv);
        }
        let ds = Dataset::new(vec![x.clone()], vec![y], k).unwrap();
        for t in sampler_all(&ds, &p, &[0], &cfg, 0)
            .unwrap()
            .into_iter()
            .chain(sampler_rnd(&ds, &p, &[0], &cfg, 0).unwrap())
            .chain(sampler_max(&ds, &p, &[0], &cfg, 0).unwrap())
        {
            outs.push(t.x_adv);
        }
        for o in &outs {
            ensure(within_ball(&x, o, eps), || format!("case {case}: output leaves the eps-ball"))?;
        }
        checked += outs.len();
    }
    // linear models: one full-size step from x equals FGSM; for K = 2 the
    // sign of the input gradient is constant, so PGD with k alpha >= eps ends
    // at the same corner
    for case in 0..100 {
        let d = r.random_range(1..=6);
        let k = if case % 2 == 0 { 2 } else { r.random_range(3..=5) };
        let p = MlpParams::xavier(&[d, k], &mut r).unwrap();
        let x: Vec<f64> = (0..d).map(|_| r.random_range(-2.0..2.0)).collect();
        let y = r.random_range(0..k);
        let eps = 0.25;
        let one_step = AttackConfig {
            step_size: eps,
            random_start: false,
            ..AttackConfig::pgd(eps, 1)
        };
        let f = fgsm_ce(&p, &x, y, &one_step);
        let g = pgd_attack(&p, &x, y, LossKind::Ce, &one_step, &mut sample_rng(0, 0));
        let ce = |z: &[f64]| ce_loss(&p.logits(z), y);
        let expected = if ce(&f) > ce(&x) { f.clone() } else { x.clone() };
        ensure(g.x_adv == expected, || format!("linear case {case}: PGD-1 differs from FGSM"))?;
        if k == 2 {
            let multi = AttackConfig {
                step_size: eps / 3.0,
                random_start: false,
                ..AttackConfig::pgd(eps, 4)
            };
            let g = pgd(&LossObjective::new(&p, y, LossKind::Ce), &x, &multi, &mut sample_rng(0, 0));
            ensure(within_ball(&f, &g.x_adv, 1e-12), || format!("linear case {case}: PGD optimum differs"))?;
        }
    }
    Ok(format!("{checked} attack outputs inside the ball; PGD = FGSM on 100 linear models"))
}

struct ToySetup {
    train: Dataset,
    test: Dataset,
    sgd: SgdConfig,
    attack: AttackConfig,
    eval: AttackConfig,
    hidden: Vec<usize>,
}

const TOY_EPS: f64 = 0.25;
const TOY_NOISE: f64 = 0.15;

fn toy(seed: u64) -> ToySetup {
    ToySetup {
        train: two_moons(200, TOY_NOISE, seed).unwrap(),
        test: two_moons(500, TOY_NOISE, 10_000 + seed).unwrap(),
        sgd: SgdConfig {
            step_size: 0.05,
            iterations: 400,
            batch_size: 32,
            momentum: 0.9,
            weight_decay: 0.0,
            seed,
        },
        attack: AttackConfig::pgd(TOY_EPS, 10).with_seed(seed),
        eval: AttackConfig::pgd(TOY_EPS, 20).with_seed(77 + seed),
        hidden: vec![32, 32],
    }
}

fn c9_two_moons_direction() -> Outcome {
    let start = Instant::now();
    let mut vs_rob = 0;
    let mut vs_at = 0;
    let mut per_vs_rnd = 0;
    let mut rows = Vec::new();
    for seed in 0..5 {
        let s = toy(seed);
        let boost = |init| {
            let mut cfg = NnBoostConfig::new(3, SamplerKind::All, init, s.sgd.clone(), s.attack.clone());
            cfg.hidden = s.hidden.clone();
            let run = mrboost_nn_run(&s.train, None, &cfg).unwrap();
            evaluate_robust_accuracy(&run.ensemble, &s.test, &s.eval).unwrap().robust_accuracy
        };
        let mr_per = boost(InitRule::Per);
        let mr_rnd = boost(InitRule::Rnd);
        let rob = robboost_greedy(
            &s.train,
            &RobBoostConfig {
                rounds: 3,
                hidden: s.hidden.clone(),
                sgd: s.sgd.clone(),
                attack: s.attack.clone(),
                init: InitRule::Per,
                stage_loss: StageLoss::Whole,
            },
        )
        .unwrap();
        let rob_acc = evaluate_robust_accuracy(&rob, &s.test, &s.eval).unwrap().robust_accuracy;
        let at = adversarial_training(&s.train, &s.hidden, &s.sgd, &s.attack, AtLoss::Ce).unwrap();
        let at_acc = evaluate_robust_accuracy(&at, &s.test, &s.eval).unwrap().robust_accuracy;
        vs_rob += usize::from(mr_per >= rob_acc);
        vs_at += usize::from(mr_per >= at_acc);
        per_vs_rnd += usize::from(mr_per >= mr_rnd);
        rows.push(format!("s{seed}: mr {mr_per:.3}/{mr_rnd:.3} rob {rob_acc:.3} at {at_acc:.3}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let detail = format!(
        "MR>=Rob {vs_rob}/5, MR>=AT {vs_at}/5, Per>=Rnd {per_vs_rnd}/5, {secs:.0} s [{}]",
        rows.join("; ")
    );
    ensure(vs_rob >= 4 && vs_at >= 4 && per_vs_rnd >= 3 && secs < 600.0, || detail.clone())?;
    Ok(detail)
}

fn c10_randomized_ensemble_direction() -> Outcome {
    let mut wins = 0;
    let mut rows = Vec::new();
    for seed in 0..5 {
        let s = toy(seed);
        let ens = pinot_pair(&s.train, &s.hidden, &s.sgd, &s.attack, 0.5).unwrap();
        let logit = evaluate_randomized_accuracy(&ens, &s.test, &s.eval, AggregationLevel::Logit).unwrap();
        let prob = evaluate_randomized_accuracy(&ens, &s.test, &s.eval, AggregationLevel::Probability).unwrap();
        wins += usize::from(prob.robust_accuracy <= logit.robust_accuracy);
        rows.push(format!("s{seed}: logit {:.3} prob {:.3}", logit.robust_accuracy, prob.robust_accuracy));
    }
    let detail = format!("prob <= logit on {wins}/5 [{}]", rows.join("; "));
    ensure(wins >= 4, || detail.clone())?;
    Ok(detail)
}

fn c11_gibbs() -> Outcome {
    let mut r = rng(11);
    let mut comparisons = 0usize;
    for seed in 0..5 {
        let (class, data, grid) = small_random_instance(200 + seed);
        let table = PredictionTable::build(&class, &data, &grid).unwrap();
        let payoffs = PayoffMatrix::build(&table, &data, DEFAULT_PAYOFF_CAP).unwrap();
        let t = 64;
        let eta = mrboost::game::default_eta(t);
        let mut state = GameState::new(payoffs.num_entries(), eta).unwrap();
        for round in 0..t {
            let p = exp_weights_distribution(&state);
            let best = gibbs_objective(&p, state.cumulative(), eta);
            for j in 0..100 {
                let mut alt = random_simplex(&mut r, p.len());
                if j % 2 == 1 {
                    // local perturbations of the Gibbs distribution
                    let lambda = 10f64.powi(-(j % 7) - 1);
                    alt = p.iter().zip(&alt).map(|(a, b)| (1.0 - lambda) * a + lambda * b).collect();
                }
                let other = gibbs_objective(&alt, state.cumulative(), eta);
                ensure(other <= best + 1e-12 * (1.0 + best.abs()), || {
                    format!("instance {seed}, round {round}: alternative beats P_t ({other} > {best})")
                })?;
                comparisons += 1;
            }
            state.record(&payoffs, best_response(&payoffs, &p));
        }
    }
    Ok(format!("{comparisons} comparisons over 5 instances x 64 rounds"))
}

fn main() {
    let criteria: [(&str, Criterion); 11] = [
        ("separation of the weak-learning conditions", c1_separation),
        ("MCE = 2 CE for two classes", c2_mce_identity),
        ("convergence of the exact booster", c3_convergence),
        ("weak learning iff full robust accuracy", c4_equivalence),
        ("exponential-weights regret bound", c5_regret),
        ("gradient oracle", c6_gradients),
        ("game solver cross-check", c7_game_solver),
        ("attack feasibility and strength", c8_attacks),
        ("two-moons boosting direction", c9_two_moons_direction),
        ("randomized-ensemble adaptive attack direction", c10_randomized_ensemble_direction),
        ("Gibbs property of the adversary distribution", c11_gibbs),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        if only.is_some_and(|o| o != i + 1) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS [{:>2}] {name}: {detail} ({secs:.2} s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL [{:>2}] {name}: {detail} ({secs:.2} s)", i + 1);
            }
        }
    }
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        if strict {
            std::process::exit(1);
        }
    } else {
        println!("all acceptance criteria passed");
    }
}
