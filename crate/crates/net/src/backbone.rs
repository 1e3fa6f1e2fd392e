//! Two-stream five-level feature extractor. Each stage is a stride-2 3x3
//! conv + ReLU followed by a 3x3 conv + ReLU, so level i sits at stride
//! `2^(i+1)` with the configured channel width. A randomly initialised
//! stand-in: downstream modules depend only on the stride/channel geometry.

use crate::config::ModelConfig;
use crate::params::{conv_block, conv_init, ConvParams, Forward, ParamStore};
use crate::{NetError, Result};
use groupsod_tensor::Var;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct StageParams {
    pub conv1: ConvParams,
    pub conv2: ConvParams,
}

/// One modality stream; `in_channels` is 3 for colour, 1 for depth.
#[derive(Debug, Clone)]
pub struct StreamParams {
    pub in_channels: usize,
    pub stages: Vec<StageParams>,
}

#[derive(Debug, Clone)]
pub struct BackboneParams {
    pub rgb: StreamParams,
    pub depth: StreamParams,
}

fn init_stream(
    cfg: &ModelConfig,
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    in_channels: usize,
) -> StreamParams {
    let mut stages = Vec::with_capacity(5);
    let mut prev = in_channels;
    for (i, &ch) in cfg.level_channels.iter().enumerate() {
        let base = format!("{name}.stage{i}");
        stages.push(StageParams {
            conv1: conv_init(store, rng, &format!("{base}.conv1"), ch, prev, 3),
            conv2: conv_init(store, rng, &format!("{base}.conv2"), ch, ch, 3),
        });
        prev = ch;
    }
    StreamParams {
        in_channels,
        stages,
    }
}

/// Two independent parameter sets; the streams share nothing.
pub fn init_backbone(
    cfg: &ModelConfig,
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
) -> BackboneParams {
    BackboneParams {
        rgb: init_stream(cfg, store, rng, "backbone.rgb", 3),
        depth: init_stream(cfg, store, rng, "backbone.depth", 1),
    }
}

/// Runs one stream, returning the five per-level features.
pub fn extract_pyramid(
    fw: &mut Forward,
    image: Var,
    stream: &StreamParams,
    cfg: &ModelConfig,
) -> Result<[Var; 5]> {
    let shape = fw.tape.shape(image).to_vec();
    if shape.len() != 4 || shape[1] != stream.in_channels {
        return Err(NetError::Input(format!(
            "expected [N,{},S,S] input, got {:?}",
            stream.in_channels, shape
        )));
    }
    if shape[2] != cfg.input_size || shape[3] != cfg.input_size {
        return Err(NetError::Input(format!(
            "input side {}x{} does not match configured {}",
            shape[2], shape[3], cfg.input_size
        )));
    }
    let mut levels = Vec::with_capacity(5);
    let mut x = image;
    for stage in &stream.stages {
        x = conv_block(fw, x, &stage.conv1, 2, 1, true)?;
        x = conv_block(fw, x, &stage.conv2, 1, 1, true)?;
        levels.push(x);
    }
    Ok(levels.try_into().expect("five stages"))
}
