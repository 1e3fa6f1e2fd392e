//! Grouped encoder behaviour: tokenisation, layer algebra, weight sharing
//! within a group, independence across groups.

mod common;

use common::rand_tensor;
use groupsod_net::{encode_feature, encode_group, tokenize, Forward, ModelConfig, Net};
use groupsod_tensor::Tensor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Closed-form scalar count of ONE encoder with grid side `g`: embedding
/// (Ct*D + D), positional table (g^2 * D), per layer two layer norms
/// (4D), per head three projections to D/h (3*(D*(D/h) + D/h)), an output
/// projection (D^2 + D), and the MLP (D*M + M + M*D + D); plus the final
/// D -> Ct map (D*Ct + Ct).
fn encoder_count(cfg: &ModelConfig, grid: usize) -> usize {
    let (ct, e) = (cfg.trunk_channels, cfg.encoder);
    let (d, h, m) = (e.dim, e.heads, e.mlp_dim);
    let head_dim = d / h;
    let per_layer =
        4 * d + h * 3 * (d * head_dim + head_dim) + (d * d + d) + (d * m + m) + (m * d + d);
    (ct * d + d) + grid * grid * d + e.layers * per_layer + (d * ct + ct)
}

#[test]
fn group_parameter_count_equals_one_encoder() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 0).unwrap();
    assert_eq!(
        net.store.scalar_count_under("mte.high."),
        encoder_count(&cfg, cfg.grid_high()),
        "upper group"
    );
    assert_eq!(
        net.store.scalar_count_under("mte.mid."),
        encoder_count(&cfg, cfg.grid_mid()),
        "middle group"
    );
}

#[test]
fn tokenize_counts_and_zero_input_equals_positions() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 1).unwrap();
    let g = cfg.grid_high();
    let mut fw = Forward::new(&net.store, false);
    let x = fw.input(Tensor::zeros(vec![2, cfg.trunk_channels, g, g]));
    let z = tokenize(&mut fw, x, &net.mte_high).unwrap();
    assert_eq!(fw.tape.shape(z), &[2, g * g, cfg.encoder.dim]);

    // Zero input with zero embedding bias leaves exactly the positional
    // table in every batch row.
    let pos = net.store.get(net.store.find("mte.high.pos").unwrap());
    let zd = fw.tape.value(z).data();
    let n = g * g * cfg.encoder.dim;
    assert_eq!(&zd[..n], pos.data());
    assert_eq!(&zd[n..], pos.data());
}

#[test]
fn tokenize_rejects_wrong_grid() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 1).unwrap();
    let mut fw = Forward::new(&net.store, false);
    let x = fw.input(Tensor::zeros(vec![1, cfg.trunk_channels, 6, 6]));
    assert!(tokenize(&mut fw, x, &net.mte_high).is_err());
}

#[test]
fn zero_weight_layer_is_identity() {
    let cfg = ModelConfig::toy();
    let mut net = Net::init(cfg.clone(), 2).unwrap();
    // Zero every trainable tensor of layer 0 except the LN scales (kept at
    // their init values 1/0): attention and MLP then contribute nothing.
    for id in net.store.ids().collect::<Vec<_>>() {
        let name = net.store.name(id).to_string();
        if name.starts_with("mte.high.layer0") && !name.contains(".ln") {
            let shape = net.store.get(id).shape().to_vec();
            *net.store.get_mut(id) = Tensor::zeros(shape);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let z_t = rand_tensor(&mut rng, &[1, 16, cfg.encoder.dim], -1.0, 1.0);
    let mut fw = Forward::new(&net.store, false);
    let z = fw.input(z_t.clone());
    let out = groupsod_net::transformer_layer(&mut fw, z, &net.mte_high.layers[0], &cfg.encoder)
        .unwrap();
    assert_eq!(fw.tape.value(out).data(), z_t.data());
}

#[test]
fn encode_group_preserves_shapes_and_shares_weights() {
    let cfg = ModelConfig::toy();
    let net = Net::init(cfg.clone(), 3).unwrap();
    let g = cfg.grid_high();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x_t = rand_tensor(&mut rng, &[2, cfg.trunk_channels, g, g], -1.0, 1.0);
    let mut fw = Forward::new(&net.store, false);
    let a = fw.input(x_t.clone());
    let b = fw.input(x_t.clone());
    let c = fw.input(x_t.clone());
    let out = encode_group(&mut fw, [a, b, c], &net.mte_high).unwrap();
    for v in out {
        assert_eq!(fw.tape.shape(v), &[2, cfg.trunk_channels, g, g]);
    }
    // Identical inputs through the three slots give identical outputs:
    // the slots are literally the same function.
    let o0 = fw.tape.value(out[0]).data().to_vec();
    assert_eq!(o0, fw.tape.value(out[1]).data());
    assert_eq!(o0, fw.tape.value(out[2]).data());
}

#[test]
fn perturbing_one_shared_weight_moves_all_three_outputs() {
    let cfg = ModelConfig::toy();
    let mut net = Net::init(cfg.clone(), 4).unwrap();
    let g = cfg.grid_high();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let inputs: Vec<Tensor> = (0..3)
        .map(|_| rand_tensor(&mut rng, &[1, cfg.trunk_channels, g, g], -1.0, 1.0))
        .collect();

    let run = |net: &Net| -> Vec<Vec<f64>> {
        let mut fw = Forward::new(&net.store, false);
        let vars = [
            fw.input(inputs[0].clone()),
            fw.input(inputs[1].clone()),
            fw.input(inputs[2].clone()),
        ];
        let out = encode_group(&mut fw, vars, &net.mte_high).unwrap();
        out.iter().map(|v| fw.tape.value(*v).data().to_vec()).collect()
    };

    let before = run(&net);
    let id = net.store.find("mte.high.layer0.head1.q.w").unwrap();
    net.store.get_mut(id).data_mut()[3] += 0.25;
    let after = run(&net);
    for slot in 0..3 {
        assert_ne!(before[slot], after[slot], "slot {slot} unaffected by shared weight");
    }
}

#[test]
fn groups_are_independent() {
    let cfg = ModelConfig::toy();
    let mut net = Net::init(cfg.clone(), 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gm = cfg.grid_mid();
    let mid_inputs: Vec<Tensor> = (0..3)
        .map(|_| rand_tensor(&mut rng, &[1, cfg.trunk_channels, gm, gm], -1.0, 1.0))
        .collect();

    let run_mid = |net: &Net| -> Vec<Vec<f64>> {
        let mut fw = Forward::new(&net.store, false);
        let vars = [
            fw.input(mid_inputs[0].clone()),
            fw.input(mid_inputs[1].clone()),
            fw.input(mid_inputs[2].clone()),
        ];
        let out = encode_group(&mut fw, vars, &net.mte_mid).unwrap();
        out.iter().map(|v| fw.tape.value(*v).data().to_vec()).collect()
    };

    let before = run_mid(&net);
    // Scramble every upper-group weight; middle-group outputs must be
    // bit-identical.
    for id in net.store.ids().collect::<Vec<_>>() {
        if net.store.name(id).starts_with("mte.high.") {
            let t = net.store.get_mut(id);
            for v in t.data_mut() {
                *v += 1.0;
            }
        }
    }
    let after = run_mid(&net);
    assert_eq!(before, after);
}

#[test]
fn permuting_tokens_and_positions_permutes_outputs() {
    // With the positional rows permuted the same way as the input sites,
    // attention sees an identical token multiset, so pre-projection
    // outputs are the same permutation of the originals. Exercised through
    // encode_feature by permuting spatial sites row-major.
    let cfg = ModelConfig::toy();
    let mut net = Net::init(cfg.clone(), 6).unwrap();
    let g = cfg.grid_high();
    let n = g * g;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let x_t = rand_tensor(&mut rng, &[1, cfg.trunk_channels, g, g], -1.0, 1.0);

    // Site permutation: reverse row-major order.
    let perm: Vec<usize> = (0..n).rev().collect();

    let run = |net: &Net, x: &Tensor| -> Vec<f64> {
        let mut fw = Forward::new(&net.store, false);
        let v = fw.input(x.clone());
        let out = encode_feature(&mut fw, v, &net.mte_high).unwrap();
        fw.tape.value(out).data().to_vec()
    };

    let base = run(&net, &x_t);

    // Permute input sites.
    let ct = cfg.trunk_channels;
    let mut permuted = vec![0.0; x_t.numel()];
    for c in 0..ct {
        for (dst, &src) in perm.iter().enumerate() {
            permuted[c * n + dst] = x_t.data()[c * n + src];
        }
    }
    let x_perm = Tensor::new(vec![1, ct, g, g], permuted).unwrap();

    // Permute positional rows identically.
    let pos_id = net.store.find("mte.high.pos").unwrap();
    let d = cfg.encoder.dim;
    let pos = net.store.get(pos_id).data().to_vec();
    let mut pos_perm = vec![0.0; pos.len()];
    for (dst, &src) in perm.iter().enumerate() {
        pos_perm[dst * d..(dst + 1) * d].copy_from_slice(&pos[src * d..(src + 1) * d]);
    }
    *net.store.get_mut(pos_id) = Tensor::new(vec![n, d], pos_perm).unwrap();

    let moved = run(&net, &x_perm);

    // Output site `dst` of the permuted run equals site perm[dst] of the
    // base run, channel by channel.
    for c in 0..ct {
        for (dst, &src) in perm.iter().enumerate() {
            let got = moved[c * n + dst];
            let want = base[c * n + src];
            assert!(
                (got - want).abs() < 1e-9,
                "channel {c}, site {dst}: {got} vs {want}"
            );
        }
    }
}
