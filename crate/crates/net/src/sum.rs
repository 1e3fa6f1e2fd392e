//! Scale unification: a channel-normalising transition layer, then two
//! grouped fusers that resize every operand to the group's middle
//! resolution and apply mirror-symmetric concatenations, each followed by a
//! 3x3 conv + ReLU restoring the trunk width.

use crate::config::ModelConfig;
use crate::params::{conv_block, conv_init, ConvParams, Forward, ParamStore};
use crate::{NetError, Result};
use groupsod_tensor::Var;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct SumParams {
    pub transitions: Vec<ConvParams>,
    /// Fusers of the upper group, for the (high, middle, low) outputs:
    /// concat arities 2, 2, 3.
    pub fuse_h: [ConvParams; 3],
    /// Fusers of the middle group: concat arities 3, 2, 2.
    pub fuse_m: [ConvParams; 3],
}

pub fn init_sum(cfg: &ModelConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> SumParams {
    let ct = cfg.trunk_channels;
    let transitions = cfg
        .level_channels
        .iter()
        .enumerate()
        .map(|(i, &ch)| conv_init(store, rng, &format!("sum.transition{i}"), ct, ch, 3))
        .collect();
    let fuse = |store: &mut ParamStore, rng: &mut ChaCha8Rng, name: &str, arity: usize| {
        conv_init(store, rng, name, ct, arity * ct, 3)
    };
    SumParams {
        transitions,
        fuse_h: [
            fuse(store, rng, "sum.h.fuse_high", 2),
            fuse(store, rng, "sum.h.fuse_mid", 2),
            fuse(store, rng, "sum.h.fuse_low", 3),
        ],
        fuse_m: [
            fuse(store, rng, "sum.m.fuse_high", 3),
            fuse(store, rng, "sum.m.fuse_mid", 2),
            fuse(store, rng, "sum.m.fuse_low", 2),
        ],
    }
}

/// 3x3 conv + ReLU per level, mapping every channel count to the trunk
/// width; spatial sizes unchanged.
pub fn transition(fw: &mut Forward, pyramid: &[Var; 5], params: &SumParams, cfg: &ModelConfig) -> Result<[Var; 5]> {
    let mut out = Vec::with_capacity(5);
    for (i, (&f, conv)) in pyramid.iter().zip(&params.transitions).enumerate() {
        let ch = fw.tape.shape(f)[1];
        if ch != cfg.level_channels[i] {
            return Err(NetError::Input(format!(
                "transition level {i}: got {ch} channels, configured {}",
                cfg.level_channels[i]
            )));
        }
        out.push(conv_block(fw, f, conv, 1, 1, true)?);
    }
    Ok(out.try_into().expect("five levels"))
}

fn side(fw: &Forward, v: Var) -> usize {
    fw.tape.shape(v)[2]
}

fn check_halving_chain(fw: &Forward, low: Var, mid: Var, high: Var) -> Result<usize> {
    let (sl, sm, sh) = (side(fw, low), side(fw, mid), side(fw, high));
    if sl != 2 * sm || sm != 2 * sh {
        return Err(NetError::Input(format!(
            "group resolutions {sl}/{sm}/{sh} do not form a halving chain"
        )));
    }
    Ok(sm)
}

/// Upper-group fuser over transitioned levels 3,4,5. Everything is resized
/// to the level-4 resolution; concatenation order favours the high side:
/// out_high = fuse(h,m), out_mid = fuse(m,h), out_low = fuse(l,m,h).
pub fn sum_h(
    fw: &mut Forward,
    f_t3: Var,
    f_t4: Var,
    f_t5: Var,
    params: &SumParams,
) -> Result<(Var, Var, Var)> {
    let target = check_halving_chain(fw, f_t3, f_t4, f_t5)?;
    let h = fw.tape.bilinear_up(f_t5, (target, target))?;
    let m = f_t4;
    let l = fw.tape.avg_down(f_t3, (target, target))?;

    let cat_h = fw.tape.concat(&[h, m], 1)?;
    let out_h = conv_block(fw, cat_h, &params.fuse_h[0], 1, 1, true)?;
    let cat_m = fw.tape.concat(&[m, h], 1)?;
    let out_m = conv_block(fw, cat_m, &params.fuse_h[1], 1, 1, true)?;
    let cat_l = fw.tape.concat(&[l, m, h], 1)?;
    let out_l = conv_block(fw, cat_l, &params.fuse_h[2], 1, 1, true)?;
    Ok((out_h, out_m, out_l))
}

/// Middle-group fuser over transitioned levels 2,3,4, resized to the
/// level-3 resolution; the mirror of `sum_h` with the concatenation bias
/// toward the low side: out_high = fuse(h,m,l), out_mid = fuse(m,l),
/// out_low = fuse(l,m).
pub fn sum_m(
    fw: &mut Forward,
    f_t2: Var,
    f_t3: Var,
    f_t4: Var,
    params: &SumParams,
) -> Result<(Var, Var, Var)> {
    let target = check_halving_chain(fw, f_t2, f_t3, f_t4)?;
    let h = fw.tape.bilinear_up(f_t4, (target, target))?;
    let m = f_t3;
    let l = fw.tape.avg_down(f_t2, (target, target))?;

    let cat_h = fw.tape.concat(&[h, m, l], 1)?;
    let out_h = conv_block(fw, cat_h, &params.fuse_m[0], 1, 1, true)?;
    let cat_m = fw.tape.concat(&[m, l], 1)?;
    let out_m = conv_block(fw, cat_m, &params.fuse_m[1], 1, 1, true)?;
    let cat_l = fw.tape.concat(&[l, m], 1)?;
    let out_l = conv_block(fw, cat_l, &params.fuse_m[2], 1, 1, true)?;
    Ok((out_h, out_m, out_l))
}
