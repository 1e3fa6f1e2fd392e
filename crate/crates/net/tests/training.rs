//! Optimiser behaviour, gradient flow, training determinism, and the
//! checkpoint/resume path.

mod common;

use common::{rand_mask, rand_tensor};
use groupsod_net::{
    load_checkpoint, ppa_loss, save_checkpoint, train_epoch, AdamState, Forward, ModelConfig,
    Net, NetError, TrainConfig, TrainSample,
};
use groupsod_tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn toy_samples(count: usize, seed: u64) -> Vec<TrainSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| TrainSample {
            rgb: rand_tensor(&mut rng, &[3, 64, 64], 0.0, 1.0),
            depth: rand_tensor(&mut rng, &[1, 64, 64], 0.0, 1.0),
            gt: rand_mask(&mut rng, &[1, 64, 64]),
        })
        .collect()
}

// ── Adam ────────────────────────────────────────────────────────────────

#[test]
fn zero_gradient_is_a_fixed_point() {
    let mut net = Net::init(ModelConfig::toy(), 0).unwrap();
    let before: Vec<Vec<f64>> = net.store.ids().map(|id| net.store.get(id).data().to_vec()).collect();
    let zero_grads: Vec<Vec<f64>> = net
        .store
        .ids()
        .map(|id| vec![0.0; net.store.get(id).numel()])
        .collect();
    let mut adam = AdamState::new(&net.store);
    adam.step(&mut net.store, &zero_grads, 1e-3).unwrap();
    for (id, b) in net.store.ids().zip(&before) {
        assert_eq!(net.store.get(id).data(), b.as_slice());
    }
}

#[test]
fn first_adam_step_matches_closed_form() {
    // With zero moments, step 1 moves each element by
    // lr * g / (|g| + eps), bias corrections cancelling exactly.
    let mut net = Net::init(ModelConfig::toy(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let before: Vec<Vec<f64>> = net.store.ids().map(|id| net.store.get(id).data().to_vec()).collect();
    let grads: Vec<Vec<f64>> = net
        .store
        .ids()
        .map(|id| {
            rand_tensor(&mut rng, &[net.store.get(id).numel()], -1.0, 1.0)
                .data()
                .to_vec()
        })
        .collect();
    let lr = 1e-3;
    let mut adam = AdamState::new(&net.store);
    adam.step(&mut net.store, &grads, lr).unwrap();
    for (idx, id) in net.store.ids().enumerate() {
        let after = net.store.get(id).data();
        for e in 0..after.len() {
            let g = grads[idx][e];
            let m_hat = (1.0 - 0.9) * g / (1.0 - 0.9);
            let v_hat = (1.0 - 0.999) * g * g / (1.0 - 0.999);
            let expect = before[idx][e] - lr * m_hat / (v_hat.sqrt() + 1e-8);
            let delta = (after[e] - expect).abs();
            assert!(delta < 1e-15, "param {idx} elem {e}: {delta}");
            assert!((after[e] - before[idx][e]).abs() <= lr + 1e-12);
        }
    }
}

#[test]
fn missing_gradient_is_rejected() {
    let net = Net::init(ModelConfig::toy(), 2).unwrap();
    let fw = Forward::new(&net.store, true);
    // No forward ran: every parameter gradient is absent.
    match fw.all_grads() {
        Err(NetError::MissingGrad { name }) => assert!(!name.is_empty()),
        other => panic!("expected missing grad, got {:?}", other.map(|_| ())),
    }
}

// ── Gradient flow ───────────────────────────────────────────────────────

#[test]
fn every_parameter_receives_gradient_signal() {
    let net = Net::init(ModelConfig::toy(), 3).unwrap();
    let mut nonzero_seen = vec![false; net.store.len()];
    for batch in 0..3 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + batch);
        let sample = TrainSample {
            rgb: rand_tensor(&mut rng, &[3, 64, 64], 0.0, 1.0),
            depth: rand_tensor(&mut rng, &[1, 64, 64], 0.0, 1.0),
            gt: rand_mask(&mut rng, &[1, 64, 64]),
        };
        let (rgb, depth) = net
            .batch_inputs(&[sample.rgb.clone()], &[sample.depth.clone()])
            .unwrap();
        let gt = Tensor::new(vec![1, 1, 64, 64], sample.gt.data().to_vec()).unwrap();
        let mut fw = Forward::new(&net.store, true);
        let heads = net.forward(&mut fw, rgb, depth).unwrap();
        let loss = groupsod_net::total_loss(&mut fw, &heads, &gt, net.config.ppa_window).unwrap();
        fw.tape.backward(loss).unwrap();
        let grads = fw.all_grads().unwrap();
        for (i, g) in grads.iter().enumerate() {
            if g.iter().any(|v| *v != 0.0) {
                nonzero_seen[i] = true;
            }
        }
    }
    let dead: Vec<&str> = net
        .store
        .ids()
        .enumerate()
        .filter(|(i, _)| !nonzero_seen[*i])
        .map(|(_, id)| net.store.name(id))
        .collect();
    assert!(dead.is_empty(), "dead parameters: {dead:?}");
}

// ── Training loop ───────────────────────────────────────────────────────

#[test]
fn short_training_run_reduces_loss_deterministically() {
    let samples = toy_samples(4, 10);
    let cfg = TrainConfig {
        epochs: 3,
        batch_size: 2,
        lr: 1e-3,
        lr_decay_factor: 0.1,
        lr_decay_period: 120,
        seed: 42,
        augment: false,
    };

    let run = |seed: u64| -> (Vec<f64>, Vec<f64>) {
        let mut net = Net::init(ModelConfig::toy(), seed).unwrap();
        let mut adam = AdamState::new(&net.store);
        let mut losses = Vec::new();
        for epoch in 0..cfg.epochs {
            let report = train_epoch(&mut net, &mut adam, &samples, &cfg, epoch).unwrap();
            losses.push(report.mean_loss);
        }
        let first_w = net.store.get(net.store.ids().next().unwrap()).data().to_vec();
        (losses, first_w)
    };

    let (losses_a, weights_a) = run(7);
    let (losses_b, weights_b) = run(7);
    assert_eq!(losses_a, losses_b, "same seed must be bit-identical");
    assert_eq!(weights_a, weights_b);
    assert!(
        losses_a.last().unwrap() < losses_a.first().unwrap(),
        "loss should fall over 3 epochs: {losses_a:?}"
    );
}

#[test]
fn lr_schedule_steps_by_decay_period() {
    let cfg = TrainConfig {
        epochs: 10,
        batch_size: 1,
        lr: 1e-3,
        lr_decay_factor: 0.1,
        lr_decay_period: 4,
        seed: 0,
        augment: false,
    };
    assert_eq!(cfg.lr_at(0), 1e-3);
    assert_eq!(cfg.lr_at(3), 1e-3);
    assert!((cfg.lr_at(4) - 1e-4).abs() < 1e-18);
    assert!((cfg.lr_at(8) - 1e-5).abs() < 1e-19);
}

#[test]
fn nan_poisoned_parameters_abort_with_diagnostic() {
    let mut net = Net::init(ModelConfig::toy(), 4).unwrap();
    let id = net.store.find("head0.point.w").unwrap();
    net.store.get_mut(id).data_mut()[0] = f64::NAN;
    let samples = toy_samples(1, 4);
    let mut adam = AdamState::new(&net.store);
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 1,
        ..TrainConfig::toy()
    };
    match train_epoch(&mut net, &mut adam, &samples, &cfg, 0) {
        Err(NetError::NonFiniteLoss { epoch: 0, .. }) => {}
        other => panic!("expected non-finite abort, got {:?}", other.map(|_| ())),
    }
}

// ── Checkpoints ─────────────────────────────────────────────────────────

#[test]
fn checkpoint_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let mut net = Net::init(ModelConfig::toy(), 5).unwrap();
    let mut adam = AdamState::new(&net.store);
    let samples = toy_samples(2, 5);
    let cfg = TrainConfig {
        epochs: 1,
        batch_size: 2,
        ..TrainConfig::toy()
    };
    train_epoch(&mut net, &mut adam, &samples, &cfg, 0).unwrap();

    save_checkpoint(&path, &net, Some((&adam, 1))).unwrap();
    let snap = load_checkpoint(&path).unwrap();
    assert_eq!(snap.epoch, 1);
    assert_eq!(snap.net.config, net.config);
    for (a, b) in net.store.ids().zip(snap.net.store.ids()) {
        assert_eq!(net.store.get(a).data(), snap.net.store.get(b).data());
    }
    // Re-saving the loaded snapshot reproduces the file byte for byte.
    let path2 = dir.path().join("model2.ckpt");
    save_checkpoint(&path2, &snap.net, Some((snap.adam.as_ref().unwrap(), snap.epoch))).unwrap();
    assert_eq!(
        std::fs::read(&path).unwrap(),
        std::fs::read(&path2).unwrap()
    );
}

#[test]
fn resume_reproduces_straight_run_exactly() {
    let samples = toy_samples(4, 6);
    let cfg = TrainConfig {
        epochs: 2,
        batch_size: 2,
        lr: 1e-3,
        lr_decay_factor: 0.1,
        lr_decay_period: 120,
        seed: 9,
        augment: false,
    };

    // Straight run: two epochs.
    let mut net_a = Net::init(ModelConfig::toy(), 11).unwrap();
    let mut adam_a = AdamState::new(&net_a.store);
    train_epoch(&mut net_a, &mut adam_a, &samples, &cfg, 0).unwrap();
    let second_a = train_epoch(&mut net_a, &mut adam_a, &samples, &cfg, 1).unwrap();

    // Checkpointed run: epoch 0, save, load, epoch 1.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("resume.ckpt");
    let mut net_b = Net::init(ModelConfig::toy(), 11).unwrap();
    let mut adam_b = AdamState::new(&net_b.store);
    train_epoch(&mut net_b, &mut adam_b, &samples, &cfg, 0).unwrap();
    save_checkpoint(&path, &net_b, Some((&adam_b, 1))).unwrap();
    let mut snap = load_checkpoint(&path).unwrap();
    let second_b = train_epoch(
        &mut snap.net,
        snap.adam.as_mut().unwrap(),
        &samples,
        &cfg,
        snap.epoch,
    )
    .unwrap();

    assert_eq!(second_a.mean_loss, second_b.mean_loss);
    for (a, b) in net_a.store.ids().zip(snap.net.store.ids()) {
        assert_eq!(net_a.store.get(a).data(), snap.net.store.get(b).data());
    }
}

#[test]
fn corrupted_checkpoints_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.ckpt");
    let net = Net::init(ModelConfig::toy(), 7).unwrap();
    save_checkpoint(&path, &net, None).unwrap();

    let mut bytes = std::fs::read(&path).unwrap();
    bytes[0] = b'X';
    let bad_magic = dir.path().join("bad_magic.ckpt");
    std::fs::write(&bad_magic, &bytes).unwrap();
    assert!(matches!(
        load_checkpoint(&bad_magic),
        Err(NetError::Checkpoint(_))
    ));

    let full = std::fs::read(&path).unwrap();
    let truncated = dir.path().join("short.ckpt");
    std::fs::write(&truncated, &full[..full.len() / 2]).unwrap();
    assert!(matches!(
        load_checkpoint(&truncated),
        Err(NetError::Checkpoint(_))
    ));
}

// ── Loss sanity through a real forward ─────────────────────────────────

#[test]
fn forward_loss_is_finite_and_positive() {
    let net = Net::init(ModelConfig::toy(), 8).unwrap();
    let samples = toy_samples(2, 8);
    let (rgb, depth) = net
        .batch_inputs(
            &[samples[0].rgb.clone(), samples[1].rgb.clone()],
            &[samples[0].depth.clone(), samples[1].depth.clone()],
        )
        .unwrap();
    let mut gt_data = samples[0].gt.data().to_vec();
    gt_data.extend_from_slice(samples[1].gt.data());
    let gt = Tensor::new(vec![2, 1, 64, 64], gt_data).unwrap();

    let mut fw = Forward::new(&net.store, false);
    let heads = net.forward(&mut fw, rgb, depth).unwrap();
    let l0 = ppa_loss(&mut fw, heads[0], &gt, net.config.ppa_window).unwrap();
    let v = fw.tape.value(l0).item();
    assert!(v.is_finite() && v > 0.0);
}
