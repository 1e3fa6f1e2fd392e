//! Modal purification: iterative element-wise cross-supplementation of the
//! colour and depth features, then channel and spatial attention gates.

use crate::config::ModelConfig;
use crate::params::{conv_init, linear, linear_init, ConvParams, Forward, LinearParams, ParamStore};
use crate::Result;
use groupsod_tensor::Var;
use rand_chacha::ChaCha8Rng;

/// Channel attention: shared two-layer bottleneck MLP over pooled
/// channel vectors.
#[derive(Debug, Clone)]
pub struct CaParams {
    pub fc1: LinearParams,
    pub fc2: LinearParams,
}

#[derive(Debug, Clone)]
pub struct MpmLevelParams {
    pub ca: CaParams,
    /// 7x7 conv over the stacked channel-pooled maps.
    pub sa_conv: ConvParams,
}

#[derive(Debug, Clone)]
pub struct MpmParams {
    pub levels: Vec<MpmLevelParams>,
    pub rounds: usize,
}

pub fn init_mpm(cfg: &ModelConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> MpmParams {
    let levels = cfg
        .level_channels
        .iter()
        .enumerate()
        .map(|(i, &ch)| {
            let base = format!("mpm.level{i}");
            MpmLevelParams {
                ca: CaParams {
                    fc1: linear_init(store, rng, &format!("{base}.ca.fc1"), ch, ch / cfg.ca_reduction),
                    fc2: linear_init(store, rng, &format!("{base}.ca.fc2"), ch / cfg.ca_reduction, ch),
                },
                sa_conv: conv_init(store, rng, &format!("{base}.sa"), 1, 2, 7),
            }
        })
        .collect();
    MpmParams {
        levels,
        rounds: cfg.mpm_rounds,
    }
}

/// Parameter-free purification. One round: the modal product supplements
/// each stream multiplicatively and the refreshed streams are summed;
/// further rounds feed the refreshed streams back in. Symmetric in its
/// arguments.
pub fn purify(fw: &mut Forward, f_rgb: Var, f_d: Var, rounds: usize) -> Result<Var> {
    let mut rgb = f_rgb;
    let mut d = f_d;
    for _ in 0..rounds.max(1) {
        let joint = fw.tape.mul(rgb, d)?;
        let rgb_sup = fw.tape.add(joint, rgb)?;
        let d_sup = fw.tape.add(joint, d)?;
        rgb = fw.tape.mul(rgb_sup, rgb)?;
        d = fw.tape.mul(d_sup, d)?;
    }
    fw.tape.add(rgb, d).map_err(Into::into)
}

/// Per-channel sigmoid gate from spatially pooled statistics, applied
/// multiplicatively.
pub fn channel_attention(fw: &mut Forward, x: Var, p: &CaParams) -> Result<Var> {
    let shape = fw.tape.shape(x).to_vec();
    let (n, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
    let avg = fw.tape.mean_axes(x, &[2, 3])?;
    let max = fw.tape.max_axes(x, &[2, 3])?;
    let mlp = |fw: &mut Forward, v: Var| -> Result<Var> {
        let hmid = linear(fw, v, &p.fc1)?;
        let hmid = fw.tape.relu(hmid)?;
        linear(fw, hmid, &p.fc2)
    };
    let a = mlp(fw, avg)?;
    let m = mlp(fw, max)?;
    let sum = fw.tape.add(a, m)?;
    let gate = fw.tape.sigmoid(sum)?;
    let gate = fw.tape.reshape(gate, vec![n, c, 1, 1])?;
    let gate = fw.tape.repeat(gate, vec![n, c, h, w])?;
    fw.tape.mul(x, gate).map_err(Into::into)
}

/// Per-position sigmoid gate from channel-pooled statistics, applied
/// multiplicatively.
pub fn spatial_attention(fw: &mut Forward, x: Var, conv: &ConvParams) -> Result<Var> {
    let shape = fw.tape.shape(x).to_vec();
    let (n, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
    let avg = fw.tape.mean_axes(x, &[1])?;
    let avg = fw.tape.reshape(avg, vec![n, 1, h, w])?;
    let max = fw.tape.max_axes(x, &[1])?;
    let max = fw.tape.reshape(max, vec![n, 1, h, w])?;
    let stacked = fw.tape.concat(&[avg, max], 1)?;
    let gate = crate::params::conv_block(fw, stacked, conv, 1, 3, false)?;
    let gate = fw.tape.sigmoid(gate)?;
    let gate = fw.tape.repeat(gate, vec![n, c, h, w])?;
    fw.tape.mul(x, gate).map_err(Into::into)
}

/// Purify then enhance: channel attention first, spatial attention second.
pub fn mpm_forward(
    fw: &mut Forward,
    f_rgb: Var,
    f_d: Var,
    level: &MpmLevelParams,
    rounds: usize,
) -> Result<Var> {
    let fused = purify(fw, f_rgb, f_d, rounds)?;
    let ca = channel_attention(fw, fused, &level.ca)?;
    spatial_attention(fw, ca, &level.sa_conv)
}
