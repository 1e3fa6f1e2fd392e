//! Behaviour of the gradient checker itself, including the negative
//! control that proves it can detect a broken backward rule.

mod common;

use common::rand_tensor;
use groupsod_tensor::check::{grad_check, grad_check_with, GradCheckOptions};
use groupsod_tensor::{OpKind, Tensor, TensorError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn linear_function_checks_at_rounding_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = rand_tensor(&mut rng, &[5], -1.0, 1.0);
    let w = rand_tensor(&mut rng, &[5], -1.0, 1.0);
    let report = grad_check(
        |t, v| {
            let p = t.mul(v[0], v[1])?;
            t.sum_all(p)
        },
        &[x, w],
        1e-5,
        1e-9,
    )
    .unwrap();
    assert!(report.passed());
    assert!(
        report.max_rel_err < 1e-9,
        "linear check should hit rounding level, got {}",
        report.max_rel_err
    );
}

#[test]
fn sigmoid_chain_under_1e7() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = rand_tensor(&mut rng, &[8], -2.0, 2.0);
    let report = grad_check(
        |t, v| {
            let a = t.sigmoid(v[0])?;
            let b = t.sigmoid(a)?;
            t.sum_all(b)
        },
        &[x],
        1e-5,
        1e-7,
    )
    .unwrap();
    assert!(
        report.passed(),
        "sigmoid chain rel err {}",
        report.max_rel_err
    );
}

#[test]
fn corrupted_backward_rule_is_detected_and_named() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x = rand_tensor(&mut rng, &[6], -2.0, 2.0);
    let report = grad_check(
        |t, v| {
            t.inject_backward_fault(OpKind::Sigmoid, 1.05);
            let s = t.sigmoid(v[0])?;
            t.sum_all(s)
        },
        &[x],
        1e-5,
        1e-4,
    )
    .unwrap();
    assert!(!report.passed(), "fault must be detected");
    assert!(report.max_rel_err > 1e-4);
    assert!(report.worst().is_some());
}

#[test]
fn eps_outside_range_rejected() {
    let x = Tensor::full(vec![2], 0.5);
    let err = grad_check(|t, v| t.sum_all(v[0]), &[x.clone()], 1e-2, 1e-4).unwrap_err();
    assert!(matches!(err, TensorError::EpsOutOfRange { .. }));
    let err = grad_check(|t, v| t.sum_all(v[0]), &[x], 1e-7, 1e-4).unwrap_err();
    assert!(matches!(err, TensorError::EpsOutOfRange { .. }));
}

#[test]
fn non_finite_inputs_rejected() {
    let x = Tensor::new(vec![2], vec![1.0, f64::NAN]).unwrap();
    let err = grad_check(|t, v| t.sum_all(v[0]), &[x], 1e-5, 1e-4).unwrap_err();
    assert!(matches!(err, TensorError::NonFiniteInput { .. }));
}

#[test]
fn non_scalar_output_rejected() {
    let x = Tensor::full(vec![2, 2], 0.5);
    let err = grad_check(|t, v| t.relu(v[0]), &[x], 1e-5, 1e-4).unwrap_err();
    assert!(matches!(err, TensorError::NonScalarLoss { .. }));
}

#[test]
fn kink_adjacent_inputs_are_nudged_before_checking() {
    // 0.0004 sits inside the default 1e-3 kink margin of relu.
    let x = Tensor::new(vec![3], vec![0.0004, -0.8, 0.9]).unwrap();
    let report = grad_check_with(
        |t, v| {
            let r = t.relu(v[0])?;
            t.sum_all(r)
        },
        &[x],
        GradCheckOptions::new(1e-3, 1e-6),
    )
    .unwrap();
    assert!(report.nudged >= 1);
    assert!(report.passed(), "rel err {}", report.max_rel_err);
}
