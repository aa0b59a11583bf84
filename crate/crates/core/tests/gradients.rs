//! Losses, forward pass and backpropagation against naive re-implementations
//! and finite differences.

mod common;

use common::*;
use mrboost::losses::{ce_loss, log_sum_exp, mce_a_loss, mce_loss, softmax, LossKind};
use mrboost::nn::{batch_gradient, grad_wrt_params, LogitModel, MlpParams, TrainExample};
use rand::Rng;

#[test]
fn loss_reference_values() {
    let g = [1.0, 0.0, 0.0];
    assert!((ce_loss(&g, 0) - 0.551_444_713_932_051_1).abs() < 1e-12);
    assert!((mce_loss(&g, 0, 1).unwrap() - 1.413_439_517_990_302).abs() < 1e-12);
    assert!((mce_a_loss(&g, 0) - 1.413_439_517_990_302).abs() < 1e-12);
    assert!((mce_loss(&[0.0, 0.0], 0, 1).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
    for k in [2usize, 3, 10] {
        let z = vec![0.0; k];
        assert!((ce_loss(&z, 0) - (k as f64).ln()).abs() < 1e-14);
        assert!((mce_a_loss(&z, k - 1) - 2.0 * (k as f64).ln()).abs() < 1e-13);
    }
    assert!(ce_loss(&[50.0, 0.0, 0.0], 0) < 1e-20);
    assert!(mce_loss(&g, 0, 0).is_err());
}

#[test]
fn stable_under_huge_logits() {
    assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
    assert_eq!(softmax(&[1000.0, 1000.0]), vec![0.5, 0.5]);
    let v = ce_loss(&[-800.0, 800.0], 0);
    assert!((v - 1600.0).abs() < 1e-9);
}

#[test]
fn mce_exceeds_twice_ce_along_the_tie_line() {
    // g = (s, s, 0): the rival term keeps MCE away from twice CE
    let mut prev = f64::NEG_INFINITY;
    for i in 0..60 {
        let s = i as f64 * 0.5;
        let g = [s, s, 0.0];
        let gap = mce_loss(&g, 0, 1).unwrap() - 2.0 * ce_loss(&g, 0);
        assert!(gap >= prev - 1e-12);
        assert!(mce_loss(&g, 0, 1).unwrap() > 2f64.ln());
        prev = gap;
    }
    assert!((2.0 * ce_loss(&[30.0, 30.0, 0.0], 0) - 2.0 * 2f64.ln()).abs() < 1e-9);
}

#[test]
fn loss_gradients_match_finite_differences() {
    let mut r = rng(21);
    for &k in &[2usize, 3, 10] {
        for _ in 0..1000 {
            let g: Vec<f64> = (0..k).map(|_| r.random_range(-4.0..4.0)).collect();
            let y = r.random_range(0..k);
            let rival = (y + r.random_range(1..k)) % k;
            for loss in [LossKind::Ce, LossKind::Mce { rival }, LossKind::MceA] {
                let (v, grad) = loss.value_and_grad(&g, y).unwrap();
                let naive = |z: &[f64]| match loss {
                    LossKind::Ce => naive_ce(z, y),
                    LossKind::Mce { rival } => naive_mce(z, y, rival),
                    _ => naive_mce_a(z, y),
                };
                assert!((v - naive(&g)).abs() <= 1e-12 * (1.0 + v.abs()));
                let fd = central_diff(&mut |z| naive(z), &g, 1e-5);
                let e = relative_error(&grad, &fd);
                assert!(e <= 1e-5, "{loss:?} K={k}: relative error {e:e}");
            }
        }
    }
}

#[test]
fn forward_matches_naive_loops() {
    let mut r = rng(22);
    for _ in 0..200 {
        let sizes = [r.random_range(1..6), r.random_range(1..8), r.random_range(1..8), r.random_range(2..5)];
        let p = MlpParams::xavier(&sizes, &mut r).unwrap();
        let x: Vec<f64> = (0..sizes[0]).map(|_| r.random_range(-3.0..3.0)).collect();
        let (naive, _) = naive_forward(&p, &x);
        let fast = p.forward(&x).unwrap();
        assert_eq!(fast.len(), sizes[3]);
        assert!(relative_error(&fast, &naive) <= 1e-14);
        assert_eq!(p.logits(&x), fast);
    }
}

#[test]
fn batch_gradient_averages_single_example_gradients() {
    let mut r = rng(23);
    let p = MlpParams::xavier(&[3, 7, 4], &mut r).unwrap();
    let batch: Vec<TrainExample> = (0..9)
        .map(|i| {
            let x = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
            let loss = [LossKind::Ce, LossKind::MceA, LossKind::Mce { rival: 3 }][i % 3];
            TrainExample::new(x, i % 3, loss)
        })
        .collect();
    let (mean, grad) = batch_gradient(&p, &batch, 1.0).unwrap();
    let mut expected = MlpParams::zeros(&p.sizes()).unwrap();
    let mut expected_loss = 0.0;
    for ex in &batch {
        let (v, g) = grad_wrt_params(&p, ex.loss, &ex.x, ex.y).unwrap();
        expected.add_scaled(&g, 1.0 / 9.0);
        expected_loss += v / 9.0;
    }
    assert!((mean - expected_loss).abs() < 1e-12);
    assert!(relative_error(&grad.to_flat(), &expected.to_flat()) < 1e-12);
}

#[test]
fn scaled_and_offset_examples_match_finite_differences() {
    let mut r = rng(24);
    for _ in 0..100 {
        let p = MlpParams::xavier(&[2, 5, 3], &mut r).unwrap();
        let x: Vec<f64> = (0..2).map(|_| r.random_range(-1.0..1.0)).collect();
        let (_, pre) = naive_forward(&p, &x);
        if pre.iter().any(|v| v.abs() < 1e-3) {
            continue;
        }
        let offset: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
        let scale = r.random_range(0.1..1.0);
        let ex = TrainExample {
            x: x.clone(),
            y: 1,
            loss: LossKind::MceA,
            offset: Some(offset.clone()),
        };
        let (_, grad) = batch_gradient(&p, std::slice::from_ref(&ex), scale).unwrap();
        let mut probe = p.clone();
        let fd = central_diff(
            &mut |theta| {
                probe.set_flat(theta).unwrap();
                let g = naive_forward(&probe, &x).0;
                let z: Vec<f64> = offset.iter().zip(&g).map(|(o, v)| o + scale * v).collect();
                naive_mce_a(&z, 1)
            },
            &p.to_flat(),
            1e-6,
        );
        assert!(relative_error(&grad.to_flat(), &fd) <= 1e-5);
    }
}
