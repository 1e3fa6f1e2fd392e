//! Grouped transformer encoding. One parameter set per group; the group's
//! three feature maps all pass through the identical weights. Tokens are
//! single spatial sites (patch side 1) linearly projected with a learned
//! positional table, run through pre-norm attention/MLP layers, then
//! projected back to trunk channels and reshaped to feature-map form.

use crate::config::{EncoderConfig, ModelConfig};
use crate::params::{linear, linear_init, uniform_init, Forward, LinearParams, ParamId, ParamStore};
use crate::{NetError, Result};
use groupsod_tensor::Var;
use rand_chacha::ChaCha8Rng;

const LN_EPS: f64 = 1e-5;

#[derive(Debug, Clone)]
pub struct AttentionHeadParams {
    pub q: LinearParams,
    pub k: LinearParams,
    pub v: LinearParams,
}

#[derive(Debug, Clone)]
pub struct EncoderLayerParams {
    pub ln1_gamma: ParamId,
    pub ln1_beta: ParamId,
    pub heads: Vec<AttentionHeadParams>,
    pub proj: LinearParams,
    pub ln2_gamma: ParamId,
    pub ln2_beta: ParamId,
    pub mlp1: LinearParams,
    pub mlp2: LinearParams,
}

/// Shared weights of one encoder group, applied to all three group members.
#[derive(Debug, Clone)]
pub struct EncoderGroupParams {
    pub grid: usize,
    pub cfg: EncoderConfig,
    pub embed: LinearParams,
    pub pos: ParamId,
    pub layers: Vec<EncoderLayerParams>,
    pub out_proj: LinearParams,
}

pub fn init_encoder_group(
    cfg: &ModelConfig,
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    grid: usize,
) -> EncoderGroupParams {
    let enc = cfg.encoder;
    let tokens = grid * grid;
    let head_dim = enc.dim / enc.heads;
    let embed = linear_init(store, rng, &format!("{name}.embed"), cfg.trunk_channels, enc.dim);
    let pos = store.add(
        format!("{name}.pos"),
        uniform_init(rng, vec![tokens, enc.dim], enc.dim),
    );
    let layers = (0..enc.layers)
        .map(|l| {
            let base = format!("{name}.layer{l}");
            EncoderLayerParams {
                ln1_gamma: store.add(
                    format!("{base}.ln1.gamma"),
                    groupsod_tensor::Tensor::full(vec![enc.dim], 1.0),
                ),
                ln1_beta: store.add(
                    format!("{base}.ln1.beta"),
                    groupsod_tensor::Tensor::zeros(vec![enc.dim]),
                ),
                heads: (0..enc.heads)
                    .map(|h| AttentionHeadParams {
                        q: linear_init(store, rng, &format!("{base}.head{h}.q"), enc.dim, head_dim),
                        k: linear_init(store, rng, &format!("{base}.head{h}.k"), enc.dim, head_dim),
                        v: linear_init(store, rng, &format!("{base}.head{h}.v"), enc.dim, head_dim),
                    })
                    .collect(),
                proj: linear_init(store, rng, &format!("{base}.proj"), enc.dim, enc.dim),
                ln2_gamma: store.add(
                    format!("{base}.ln2.gamma"),
                    groupsod_tensor::Tensor::full(vec![enc.dim], 1.0),
                ),
                ln2_beta: store.add(
                    format!("{base}.ln2.beta"),
                    groupsod_tensor::Tensor::zeros(vec![enc.dim]),
                ),
                mlp1: linear_init(store, rng, &format!("{base}.mlp1"), enc.dim, enc.mlp_dim),
                mlp2: linear_init(store, rng, &format!("{base}.mlp2"), enc.mlp_dim, enc.dim),
            }
        })
        .collect();
    let out_proj = linear_init(store, rng, &format!("{name}.out_proj"), enc.dim, cfg.trunk_channels);
    EncoderGroupParams {
        grid,
        cfg: enc,
        embed,
        pos,
        layers,
        out_proj,
    }
}

/// Applies a dense map to the last axis of `[B,N,*]` by flattening rows.
fn per_token(fw: &mut Forward, z: Var, p: &LinearParams) -> Result<Var> {
    let shape = fw.tape.shape(z).to_vec();
    let (b, n, d) = (shape[0], shape[1], shape[2]);
    let flat = fw.tape.reshape(z, vec![b * n, d])?;
    let y = linear(fw, flat, p)?;
    let out_d = fw.tape.shape(y)[1];
    fw.tape.reshape(y, vec![b, n, out_d]).map_err(Into::into)
}

/// `[B,C,G,G] -> [B,N,D]`: every spatial site becomes one token (patch
/// side 1), projected and offset by the learned positional table in
/// row-major site order.
pub fn tokenize(fw: &mut Forward, x: Var, group: &EncoderGroupParams) -> Result<Var> {
    let shape = fw.tape.shape(x).to_vec();
    let (b, c, g) = (shape[0], shape[1], shape[2]);
    if shape[2] != group.grid || shape[3] != group.grid {
        return Err(NetError::Input(format!(
            "tokenize: spatial side {}x{} does not match grid {}",
            shape[2], shape[3], group.grid
        )));
    }
    let n = g * g;
    let sites = fw.tape.permute(x, vec![0, 2, 3, 1])?;
    let tokens = fw.tape.reshape(sites, vec![b, n, c])?;
    let projected = per_token(fw, tokens, &group.embed)?;
    let pos = fw.param(group.pos);
    let pos = fw.tape.reshape(pos, vec![1, n, group.cfg.dim])?;
    let pos = fw.tape.repeat(pos, vec![b, n, group.cfg.dim])?;
    fw.tape.add(projected, pos).map_err(Into::into)
}

/// Pre-norm layer: `z' = MSA(LN(z)) + z; out = MLP(LN(z')) + z'` with
/// scaled dot-product attention over all tokens.
pub fn transformer_layer(
    fw: &mut Forward,
    z: Var,
    layer: &EncoderLayerParams,
    enc: &EncoderConfig,
) -> Result<Var> {
    let head_dim = enc.dim / enc.heads;
    let scale = 1.0 / (head_dim as f64).sqrt();

    let g1 = fw.param(layer.ln1_gamma);
    let b1 = fw.param(layer.ln1_beta);
    let normed = fw.tape.layer_norm(z, g1, b1, LN_EPS)?;

    let mut head_outs = Vec::with_capacity(enc.heads);
    for head in &layer.heads {
        let q = per_token(fw, normed, &head.q)?;
        let k = per_token(fw, normed, &head.k)?;
        let v = per_token(fw, normed, &head.v)?;
        let kt = fw.tape.transpose_last2(k)?;
        let scores = fw.tape.bmm(q, kt)?;
        let scaled = fw.tape.affine(scores, scale, 0.0)?;
        let attn = fw.tape.softmax(scaled, 2)?;
        head_outs.push(fw.tape.bmm(attn, v)?);
    }
    let merged = fw.tape.concat(&head_outs, 2)?;
    let msa = per_token(fw, merged, &layer.proj)?;
    let z_mid = fw.tape.add(msa, z)?;

    let g2 = fw.param(layer.ln2_gamma);
    let b2 = fw.param(layer.ln2_beta);
    let normed2 = fw.tape.layer_norm(z_mid, g2, b2, LN_EPS)?;
    let hidden = per_token(fw, normed2, &layer.mlp1)?;
    let hidden = fw.tape.relu(hidden)?;
    let mlp = per_token(fw, hidden, &layer.mlp2)?;
    fw.tape.add(mlp, z_mid).map_err(Into::into)
}

/// Full encoder for one feature map: tokenize, L layers, project back to
/// trunk channels, reshape to `[B,C,G,G]`.
pub fn encode_feature(fw: &mut Forward, x: Var, group: &EncoderGroupParams) -> Result<Var> {
    let shape = fw.tape.shape(x).to_vec();
    let (b, c, g) = (shape[0], shape[1], shape[2]);
    let mut z = tokenize(fw, x, group)?;
    for layer in &group.layers {
        z = transformer_layer(fw, z, layer, &group.cfg)?;
    }
    let out = per_token(fw, z, &group.out_proj)?;
    let out = fw.tape.reshape(out, vec![b, g, g, c])?;
    fw.tape.permute(out, vec![0, 3, 1, 2]).map_err(Into::into)
}

/// Encodes the group's three features with the identical parameter set.
pub fn encode_group(
    fw: &mut Forward,
    features: [Var; 3],
    group: &EncoderGroupParams,
) -> Result<[Var; 3]> {
    let first = fw.tape.shape(features[0]).to_vec();
    for f in &features[1..] {
        if fw.tape.shape(*f) != first.as_slice() {
            return Err(NetError::Input(format!(
                "encode_group: member shapes differ: {:?} vs {:?}",
                first,
                fw.tape.shape(*f)
            )));
        }
    }
    Ok([
        encode_feature(fw, features[0], group)?,
        encode_feature(fw, features[1], group)?,
        encode_feature(fw, features[2], group)?,
    ])
}
