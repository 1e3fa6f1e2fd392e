//! Cluster integration: encoder outputs pair up staggered by one level
//! (high-group element first), each pair cascades upward through
//! concat-fuse steps and joins the transitioned first-level feature.

use crate::config::ModelConfig;
use crate::params::{conv_block, conv_init, ConvParams, Forward, ParamStore};
use crate::{NetError, Result};
use groupsod_tensor::Var;
use rand_chacha::ChaCha8Rng;

/// The three staggered pairs; `pairs[i] = (high-group member, mid-group
/// member)` with the second at twice the side of the first.
#[derive(Debug, Clone)]
pub struct ClusterSet {
    pub pairs: [(Var, Var); 3],
}

#[derive(Debug, Clone)]
pub struct ClassParams {
    pub fuse_pair: ConvParams,
    pub fuse_low: ConvParams,
}

#[derive(Debug, Clone)]
pub struct CiuParams {
    pub classes: [ClassParams; 3],
}

pub fn init_ciu(cfg: &ModelConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> CiuParams {
    let ct = cfg.trunk_channels;
    let class = |store: &mut ParamStore, rng: &mut ChaCha8Rng, i: usize| ClassParams {
        fuse_pair: conv_init(store, rng, &format!("ciu.class{i}.fuse_pair"), ct, 2 * ct, 3),
        fuse_low: conv_init(store, rng, &format!("ciu.class{i}.fuse_low"), ct, 2 * ct, 3),
    };
    CiuParams {
        classes: [
            class(store, rng, 0),
            class(store, rng, 1),
            class(store, rng, 2),
        ],
    }
}

/// Pure bookkeeping: with the upper group ordered (h'f3, h'f4, h'f5) and
/// the middle group (m'f2, m'f3, m'f4), the classes pair the groups'
/// elements staggered by one level, covering all six outputs exactly once:
/// C1 = (h'f5, m'f4), C2 = (h'f4, m'f3), C3 = (h'f3, m'f2).
pub fn cluster(fw: &Forward, h_feats: &[Var; 3], m_feats: &[Var; 3]) -> Result<ClusterSet> {
    let pairs = [
        (h_feats[2], m_feats[2]),
        (h_feats[1], m_feats[1]),
        (h_feats[0], m_feats[0]),
    ];
    for (i, (hi, mid)) in pairs.iter().enumerate() {
        let sh = fw.tape.shape(*hi)[2];
        let sm = fw.tape.shape(*mid)[2];
        if sm != 2 * sh {
            return Err(NetError::Input(format!(
                "cluster {i}: mid side {sm} must be twice high side {sh}"
            )));
        }
    }
    Ok(ClusterSet { pairs })
}

/// One class integration: lift the high member to its partner's side,
/// concat-fuse, lift to the first-level side, concat-fuse with the
/// first-level feature. The output side equals `f_t1`'s (half the input
/// image); full resolution is recovered in the prediction head.
pub fn integrate(
    fw: &mut Forward,
    pair: (Var, Var),
    f_t1: Var,
    class: &ClassParams,
    trunk_channels: usize,
) -> Result<Var> {
    let (hi, mid) = pair;
    for (what, v) in [("cluster member", hi), ("cluster member", mid), ("f_t1", f_t1)] {
        let c = fw.tape.shape(v)[1];
        if c != trunk_channels {
            return Err(NetError::Input(format!(
                "integrate: {what} has {c} channels, expected {trunk_channels}"
            )));
        }
    }
    let mid_side = fw.tape.shape(mid)[2];
    let lifted = fw.tape.up_to(hi, (mid_side, mid_side))?;
    let cat = fw.tape.concat(&[lifted, mid], 1)?;
    let fused = conv_block(fw, cat, &class.fuse_pair, 1, 1, true)?;

    let low_side = fw.tape.shape(f_t1)[2];
    let lifted2 = fw.tape.up_to(fused, (low_side, low_side))?;
    let cat2 = fw.tape.concat(&[lifted2, f_t1], 1)?;
    conv_block(fw, cat2, &class.fuse_low, 1, 1, true)
}
