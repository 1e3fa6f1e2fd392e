//! Backbone geometry/determinism and the purification + attention module.

mod common;

use common::rand_tensor;
use groupsod_net::{
    extract_pyramid, mpm_forward, purify, spatial_attention, Forward, ModelConfig, Net,
};
use groupsod_tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Hand parameter count for one stream: per stage two 3x3 convs
/// (`prev*ch*9 + ch` and `ch*ch*9 + ch`).
fn stream_count(channels: &[usize; 5], in_ch: usize) -> usize {
    let mut prev = in_ch;
    let mut total = 0;
    for &ch in channels {
        total += prev * ch * 9 + ch;
        total += ch * ch * 9 + ch;
        prev = ch;
    }
    total
}

#[test]
fn backbone_parameter_count_matches_hand_formula() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 0).unwrap();
    let expected = stream_count(&cfg.level_channels, 3) + stream_count(&cfg.level_channels, 1);
    assert_eq!(net.store.scalar_count_under("backbone."), expected);
}

#[test]
fn same_seed_gives_bit_identical_parameters() {
    let a = Net::init(ModelConfig::toy(), 7).unwrap();
    let b = Net::init(ModelConfig::toy(), 7).unwrap();
    for (ia, ib) in a.store.ids().zip(b.store.ids()) {
        assert_eq!(a.store.get(ia).data(), b.store.get(ib).data());
        assert_eq!(a.store.name(ia), b.store.name(ib));
    }
    let c = Net::init(ModelConfig::toy(), 8).unwrap();
    let differs = a
        .store
        .ids()
        .any(|id| a.store.get(id).data() != c.store.get(id).data());
    assert!(differs, "different seeds must differ");
}

#[test]
fn streams_differ_only_in_first_conv_input_channels() {
    let net = Net::init(ModelConfig::toy(), 0).unwrap();
    let rgb_first = net.store.find("backbone.rgb.stage0.conv1.w").unwrap();
    let depth_first = net.store.find("backbone.depth.stage0.conv1.w").unwrap();
    assert_eq!(net.store.get(rgb_first).shape(), &[8, 3, 3, 3]);
    assert_eq!(net.store.get(depth_first).shape(), &[8, 1, 3, 3]);
    // Every later stage has the same shapes in both streams.
    for stage in 0..5 {
        for conv in ["conv1", "conv2"] {
            if stage == 0 && conv == "conv1" {
                continue;
            }
            let r = net
                .store
                .find(&format!("backbone.rgb.stage{stage}.{conv}.w"))
                .unwrap();
            let d = net
                .store
                .find(&format!("backbone.depth.stage{stage}.{conv}.w"))
                .unwrap();
            assert_eq!(net.store.get(r).shape(), net.store.get(d).shape());
        }
    }
}

#[test]
fn pyramid_shapes_follow_halving_chain() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut fw = Forward::new(&net.store, false);
    let img = fw.input(rand_tensor(&mut rng, &[2, 3, 64, 64], 0.0, 1.0));
    let pyramid = extract_pyramid(&mut fw, img, &net.backbone.rgb, &cfg).unwrap();
    let sides = [32, 16, 8, 4, 2];
    for (i, (v, side)) in pyramid.iter().zip(sides).enumerate() {
        assert_eq!(
            fw.tape.shape(*v),
            &[2, cfg.level_channels[i], side, side],
            "level {i}"
        );
    }
}

#[test]
fn zero_image_stays_finite() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 2).unwrap();
    let mut fw = Forward::new(&net.store, false);
    let img = fw.input(Tensor::zeros(vec![1, 1, 64, 64]));
    let pyramid = extract_pyramid(&mut fw, img, &net.backbone.depth, &cfg).unwrap();
    for v in pyramid {
        assert!(fw.tape.value(v).is_finite());
    }
}

#[test]
fn wrong_input_side_rejected() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 2).unwrap();
    let mut fw = Forward::new(&net.store, false);
    let img = fw.input(Tensor::zeros(vec![1, 3, 32, 32]));
    assert!(extract_pyramid(&mut fw, img, &net.backbone.rgb, &cfg).is_err());
}

// ── Purification ────────────────────────────────────────────────────────

fn purify_values(a: Tensor, b: Tensor, rounds: usize) -> Vec<f64> {
    let store = groupsod_net::ParamStore::new();
    let mut fw = Forward::new(&store, false);
    let va = fw.input(a);
    let vb = fw.input(b);
    let out = purify(&mut fw, va, vb, rounds).unwrap();
    fw.tape.value(out).data().to_vec()
}

#[test]
fn purify_hand_cases() {
    // ones: joint 1, each stream (1+1)*1 = 2, sum 4.
    let ones = Tensor::full(vec![2, 2], 1.0);
    assert_eq!(purify_values(ones.clone(), ones, 1), vec![4.0; 4]);

    // (2,3): joint 6, rgb (6+2)*2 = 16, depth (6+3)*3 = 27, sum 43.
    let two = Tensor::scalar(2.0);
    let three = Tensor::scalar(3.0);
    assert_eq!(purify_values(two, three, 1), vec![43.0]);

    // Zero colour: joint 0, colour stays 0, depth (0+d)*d = d^2.
    let zero = Tensor::scalar(0.0);
    let d = Tensor::scalar(3.0);
    assert_eq!(purify_values(zero, d, 1), vec![9.0]);
}

#[test]
fn purify_is_symmetric_in_modalities() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..100 {
        let a = rand_tensor(&mut rng, &[1, 2, 3, 3], -1.0, 1.0);
        let b = rand_tensor(&mut rng, &[1, 2, 3, 3], -1.0, 1.0);
        for rounds in [1, 2] {
            assert_eq!(
                purify_values(a.clone(), b.clone(), rounds),
                purify_values(b.clone(), a.clone(), rounds)
            );
        }
    }
}

#[test]
fn purify_rejects_mismatched_shapes() {
    let store = groupsod_net::ParamStore::new();
    let mut fw = Forward::new(&store, false);
    let a = fw.input(Tensor::zeros(vec![1, 2, 3, 3]));
    let b = fw.input(Tensor::zeros(vec![1, 3, 3, 3]));
    assert!(purify(&mut fw, a, b, 1).is_err());
}

// ── Attention gates ────────────────────────────────────────────────────

#[test]
fn channel_attention_shrinks_magnitudes_per_channel() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x_t = rand_tensor(&mut rng, &[1, 8, 6, 6], -1.0, 1.0);
    let mut fw = Forward::new(&net.store, false);
    let x = fw.input(x_t.clone());
    let y = groupsod_net::channel_attention(&mut fw, x, &net.mpm.levels[0].ca).unwrap();
    let yd = fw.tape.value(y).data();
    for (o, i) in yd.iter().zip(x_t.data()) {
        assert!(o.abs() <= i.abs(), "gate must shrink: |{o}| > |{i}|");
    }
    // Per-channel ratio is a single gate value in (0,1).
    for c in 0..8 {
        let base = c * 36;
        let mut gate = None;
        for p in 0..36 {
            if x_t.data()[base + p].abs() > 1e-9 {
                let r = yd[base + p] / x_t.data()[base + p];
                if let Some(g) = gate {
                    assert!((r - g as f64).abs() < 1e-12);
                }
                gate = Some(r);
            }
        }
        let g = gate.unwrap();
        assert!(g > 0.0 && g < 1.0);
    }
}

#[test]
fn channel_attention_pools_agree_on_constant_channels() {
    // Constant-per-channel input: avg and max pooling coincide, so the
    // gate is driven by twice the shared MLP output. Dyadic values keep
    // the 16-term mean bit-exact.
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg, 5).unwrap();
    let mut data = vec![0.0; 8 * 4 * 4];
    for c in 0..8 {
        for p in 0..16 {
            data[c * 16 + p] = (c + 1) as f64 / 16.0;
        }
    }
    let x_t = Tensor::new(vec![1, 8, 4, 4], data).unwrap();
    let mut fw = Forward::new(&net.store, false);
    let x = fw.input(x_t.clone());
    let avg = fw.tape.mean_axes(x, &[2, 3]).unwrap();
    let max = fw.tape.max_axes(x, &[2, 3]).unwrap();
    assert_eq!(fw.tape.value(avg).data(), fw.tape.value(max).data());
}

#[test]
fn spatial_attention_gate_is_positionwise_and_interior_constant() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg, 6).unwrap();
    // Spatially constant input: interior gate positions must coincide
    // (borders differ through zero padding of the 7x7 window).
    let x_t = Tensor::full(vec![1, 8, 16, 16], 0.35);
    let mut fw = Forward::new(&net.store, false);
    let x = fw.input(x_t.clone());
    let y = spatial_attention(&mut fw, x, &net.mpm.levels[0].sa_conv).unwrap();
    assert_eq!(fw.tape.shape(y), &[1, 8, 16, 16]);
    let yd = fw.tape.value(y).data();
    let ratio = |p: usize| yd[p] / 0.35;
    let mut interior = None;
    for y_pos in 3..13 {
        for x_pos in 3..13 {
            let r = ratio(y_pos * 16 + x_pos);
            if let Some(prev) = interior {
                assert!((r - prev as f64).abs() < 1e-12);
            }
            interior = Some(r);
        }
    }
}

#[test]
fn mpm_forward_preserves_shape_and_kills_zero() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 7).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (level, side) in [(0usize, 8usize), (1, 8), (4, 4)] {
        let ch = cfg.level_channels[level];
        let mut fw = Forward::new(&net.store, false);
        let a = fw.input(rand_tensor(&mut rng, &[1, ch, side, side], -1.0, 1.0));
        let b = fw.input(rand_tensor(&mut rng, &[1, ch, side, side], -1.0, 1.0));
        let y = mpm_forward(&mut fw, a, b, &net.mpm.levels[level], 1).unwrap();
        assert_eq!(fw.tape.shape(y), &[1, ch, side, side]);

        let mut fw = Forward::new(&net.store, false);
        let z1 = fw.input(Tensor::zeros(vec![1, ch, side, side]));
        let z2 = fw.input(Tensor::zeros(vec![1, ch, side, side]));
        let y = mpm_forward(&mut fw, z1, z2, &net.mpm.levels[level], 1).unwrap();
        assert!(fw.tape.value(y).data().iter().all(|v| *v == 0.0));
    }
}

#[test]
fn mpm_output_never_exceeds_purified_magnitude() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a_t = rand_tensor(&mut rng, &[1, 8, 8, 8], -1.0, 1.0);
    let b_t = rand_tensor(&mut rng, &[1, 8, 8, 8], -1.0, 1.0);
    let mut fw = Forward::new(&net.store, false);
    let a = fw.input(a_t);
    let b = fw.input(b_t);
    let fused = purify(&mut fw, a, b, 1).unwrap();
    let enhanced = mpm_forward(&mut fw, a, b, &net.mpm.levels[0], 1).unwrap();
    for (e, f) in fw
        .tape
        .value(enhanced)
        .data()
        .iter()
        .zip(fw.tape.value(fused).data())
    {
        assert!(e.abs() <= f.abs() + 1e-15);
    }
}
