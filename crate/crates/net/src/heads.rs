//! Prediction heads: per integrated feature, conv + ReLU, 1x1 projection
//! to one channel, bilinear lift to the input side, sigmoid.

use crate::config::ModelConfig;
use crate::params::{conv_block, conv_init, ConvParams, Forward, ParamStore};
use crate::Result;
use groupsod_tensor::Var;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct HeadParams {
    pub conv: ConvParams,
    pub point: ConvParams,
}

#[derive(Debug, Clone)]
pub struct HeadsParams {
    pub heads: [HeadParams; 3],
}

pub fn init_heads(cfg: &ModelConfig, store: &mut ParamStore, rng: &mut ChaCha8Rng) -> HeadsParams {
    let ct = cfg.trunk_channels;
    let head = |store: &mut ParamStore, rng: &mut ChaCha8Rng, i: usize| HeadParams {
        conv: conv_init(store, rng, &format!("head{i}.conv"), ct, ct, 3),
        point: conv_init(store, rng, &format!("head{i}.point"), 1, ct, 1),
    };
    HeadsParams {
        heads: [
            head(store, rng, 0),
            head(store, rng, 1),
            head(store, rng, 2),
        ],
    }
}

/// Three supervised saliency maps in (0,1) at the input resolution.
pub fn predict_heads(
    fw: &mut Forward,
    features: &[Var; 3],
    params: &HeadsParams,
    input_side: usize,
) -> Result<[Var; 3]> {
    let mut out = Vec::with_capacity(3);
    for (f, head) in features.iter().zip(&params.heads) {
        let x = conv_block(fw, *f, &head.conv, 1, 1, true)?;
        let logits = conv_block(fw, x, &head.point, 1, 0, false)?;
        let lifted = fw.tape.up_to(logits, (input_side, input_side))?;
        out.push(fw.tape.sigmoid(lifted)?);
    }
    Ok(out.try_into().expect("three heads"))
}
