//! Whole-network assembly.

use crate::backbone::{extract_pyramid, init_backbone, BackboneParams};
use crate::ciu::{cluster, init_ciu, integrate, CiuParams};
use crate::config::{HeadSelect, ModelConfig};
use crate::heads::{init_heads, predict_heads, HeadsParams};
use crate::mpm::{init_mpm, mpm_forward, MpmParams};
use crate::mte::{encode_group, init_encoder_group, EncoderGroupParams};
use crate::params::{Forward, ParamStore};
use crate::sum::{init_sum, sum_h, sum_m, transition, SumParams};
use crate::{NetError, Result};
use groupsod_tensor::{Tensor, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// All intermediate stages of one forward pass, for tests and probes.
pub struct Trace {
    pub rgb_pyramid: [Var; 5],
    pub depth_pyramid: [Var; 5],
    pub purified: [Var; 5],
    pub transitioned: [Var; 5],
    pub high_group: [Var; 3],
    pub mid_group: [Var; 3],
    pub encoded_high: [Var; 3],
    pub encoded_mid: [Var; 3],
    pub integrated: [Var; 3],
    pub saliency: [Var; 3],
}

/// The network: configuration plus every module's parameters inside one
/// named store.
pub struct Net {
    pub config: ModelConfig,
    pub store: ParamStore,
    pub backbone: BackboneParams,
    pub mpm: MpmParams,
    pub sum: SumParams,
    pub mte_high: EncoderGroupParams,
    pub mte_mid: EncoderGroupParams,
    pub ciu: CiuParams,
    pub heads: HeadsParams,
}

impl Net {
    /// Builds and initialises all parameters from the seed. Same config +
    /// seed gives bit-identical parameters.
    pub fn init(config: ModelConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut store = ParamStore::new();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let backbone = init_backbone(&config, &mut store, &mut rng);
        let mpm = init_mpm(&config, &mut store, &mut rng);
        let sum = init_sum(&config, &mut store, &mut rng);
        let mte_high = init_encoder_group(&config, &mut store, &mut rng, "mte.high", config.grid_high());
        let mte_mid = init_encoder_group(&config, &mut store, &mut rng, "mte.mid", config.grid_mid());
        let ciu = init_ciu(&config, &mut store, &mut rng);
        let heads = init_heads(&config, &mut store, &mut rng);
        Ok(Self {
            config,
            store,
            backbone,
            mpm,
            sum,
            mte_high,
            mte_mid,
            ciu,
            heads,
        })
    }

    /// Forward from image leaves already on the tape.
    pub fn forward_trace(&self, fw: &mut Forward, rgb: Var, depth: Var) -> Result<Trace> {
        let rgb_pyramid = extract_pyramid(fw, rgb, &self.backbone.rgb, &self.config)?;
        let depth_pyramid = extract_pyramid(fw, depth, &self.backbone.depth, &self.config)?;

        let mut purified = Vec::with_capacity(5);
        for i in 0..5 {
            purified.push(mpm_forward(
                fw,
                rgb_pyramid[i],
                depth_pyramid[i],
                &self.mpm.levels[i],
                self.mpm.rounds,
            )?);
        }
        let purified: [Var; 5] = purified.try_into().expect("five levels");

        let transitioned = transition(fw, &purified, &self.sum, &self.config)?;
        let (h_high, h_mid, h_low) = sum_h(
            fw,
            transitioned[2],
            transitioned[3],
            transitioned[4],
            &self.sum,
        )?;
        let (m_high, m_mid, m_low) = sum_m(
            fw,
            transitioned[1],
            transitioned[2],
            transitioned[3],
            &self.sum,
        )?;
        // Group members ordered by source level: (f3, f4, f5) and (f2, f3, f4).
        let high_group = [h_low, h_mid, h_high];
        let mid_group = [m_low, m_mid, m_high];

        let encoded_high = encode_group(fw, high_group, &self.mte_high)?;
        let encoded_mid = encode_group(fw, mid_group, &self.mte_mid)?;

        let clusters = cluster(fw, &encoded_high, &encoded_mid)?;
        let mut integrated = Vec::with_capacity(3);
        for (i, pair) in clusters.pairs.iter().enumerate() {
            integrated.push(integrate(
                fw,
                *pair,
                transitioned[0],
                &self.ciu.classes[i],
                self.config.trunk_channels,
            )?);
        }
        let integrated: [Var; 3] = integrated.try_into().expect("three classes");

        let saliency = predict_heads(fw, &integrated, &self.heads, self.config.input_size)?;
        Ok(Trace {
            rgb_pyramid,
            depth_pyramid,
            purified,
            transitioned,
            high_group,
            mid_group,
            encoded_high,
            encoded_mid,
            integrated,
            saliency,
        })
    }

    /// Forward from owned input tensors; returns the three saliency vars.
    pub fn forward(&self, fw: &mut Forward, rgb: Tensor, depth: Tensor) -> Result<[Var; 3]> {
        let rgb = fw.input(rgb);
        let depth = fw.input(depth);
        Ok(self.forward_trace(fw, rgb, depth)?.saliency)
    }

    /// Inference: the exported map per `head_select`. Accepts one sample
    /// (`[3,S,S]`/`[1,S,S]`) or a batch (`[N,3,S,S]`/`[N,1,S,S]`) and
    /// returns the matching `[...,1,S,S]` map.
    pub fn predict(&self, rgb: Tensor, depth: Tensor) -> Result<Tensor> {
        let unbatched = rgb.rank() == 3;
        let lift = |t: Tensor| -> Result<Tensor> {
            if t.rank() == 3 {
                let mut shape = vec![1];
                shape.extend_from_slice(t.shape());
                Tensor::new(shape, t.into_data()).map_err(Into::into)
            } else {
                Ok(t)
            }
        };
        let (rgb, depth) = (lift(rgb)?, lift(depth)?);
        let mut fw = Forward::new(&self.store, false);
        let s = self.forward(&mut fw, rgb, depth)?;
        let out = match self.config.head_select {
            HeadSelect::First => s[0],
            HeadSelect::Mean => {
                let ab = fw.tape.add(s[0], s[1])?;
                let abc = fw.tape.add(ab, s[2])?;
                fw.tape.affine(abc, 1.0 / 3.0, 0.0)?
            }
        };
        Ok(fw.tape.value(out).clone())
    }

    /// Validates and stacks per-sample tensors into batch form.
    pub fn batch_inputs(&self, rgb: &[Tensor], depth: &[Tensor]) -> Result<(Tensor, Tensor)> {
        let s = self.config.input_size;
        let n = rgb.len();
        if n == 0 || depth.len() != n {
            return Err(NetError::Input("empty or mismatched batch".into()));
        }
        let stack = |parts: &[Tensor], c: usize| -> Result<Tensor> {
            let mut data = Vec::with_capacity(n * c * s * s);
            for t in parts {
                if t.shape() != [c, s, s] {
                    return Err(NetError::Input(format!(
                        "batch item shape {:?}, expected [{c},{s},{s}]",
                        t.shape()
                    )));
                }
                data.extend_from_slice(t.data());
            }
            Tensor::new(vec![n, c, s, s], data).map_err(Into::into)
        };
        Ok((stack(rgb, 3)?, stack(depth, 1)?))
    }
}
