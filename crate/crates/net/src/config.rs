use crate::{NetError, Result};

/// Transformer-encoder hyperparameters shared by a group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncoderConfig {
    pub dim: usize,
    pub heads: usize,
    pub layers: usize,
    pub mlp_dim: usize,
}

/// Which head produces the exported saliency map.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeadSelect {
    /// The first (information-richest cluster) head.
    First,
    /// Mean of the three head outputs.
    Mean,
}

/// Architecture hyperparameters. `toy` is sized for finite-difference
/// verification on a CPU; `full` follows the published training scale.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub input_size: usize,
    pub level_channels: [usize; 5],
    /// Channel width after the transition layer and throughout fusion.
    pub trunk_channels: usize,
    /// Channel-attention bottleneck divisor.
    pub ca_reduction: usize,
    /// Purification rounds before attention enhancement.
    pub mpm_rounds: usize,
    pub encoder: EncoderConfig,
    /// Boundary-weight pooling window of the loss.
    pub ppa_window: usize,
    pub head_select: HeadSelect,
}

impl ModelConfig {
    pub fn toy() -> Self {
        Self {
            input_size: 64,
            level_channels: [8, 16, 32, 48, 64],
            trunk_channels: 8,
            ca_reduction: 4,
            mpm_rounds: 1,
            encoder: EncoderConfig {
                dim: 32,
                heads: 4,
                layers: 2,
                mlp_dim: 128,
            },
            ppa_window: 7,
            head_select: HeadSelect::First,
        }
    }

    pub fn full() -> Self {
        Self {
            input_size: 256,
            level_channels: [64, 256, 512, 1024, 2048],
            trunk_channels: 64,
            ca_reduction: 16,
            mpm_rounds: 1,
            encoder: EncoderConfig {
                dim: 64,
                heads: 4,
                layers: 2,
                mlp_dim: 256,
            },
            ppa_window: 31,
            head_select: HeadSelect::First,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |what: String| Err(NetError::Config(what));
        if self.input_size == 0 || self.input_size % 32 != 0 {
            return fail(format!(
                "input_size {} must be a positive multiple of 32",
                self.input_size
            ));
        }
        if !self.level_channels.windows(2).all(|w| w[0] < w[1]) {
            return fail(format!(
                "level_channels {:?} must be strictly increasing",
                self.level_channels
            ));
        }
        for c in self.level_channels {
            if c % self.ca_reduction != 0 {
                return fail(format!(
                    "ca_reduction {} must divide every level channel count (got {c})",
                    self.ca_reduction
                ));
            }
        }
        if self.encoder.dim % self.encoder.heads != 0 {
            return fail(format!(
                "encoder dim {} must be divisible by heads {}",
                self.encoder.dim, self.encoder.heads
            ));
        }
        if self.encoder.layers == 0 {
            return fail("encoder needs at least one layer".into());
        }
        if self.mpm_rounds == 0 {
            return fail("mpm_rounds must be at least 1".into());
        }
        if self.ppa_window % 2 == 0 {
            return fail(format!("ppa_window {} must be odd", self.ppa_window));
        }
        Ok(())
    }

    /// Spatial side of pyramid level `i` (0-based): strides 2,4,8,16,32.
    pub fn level_side(&self, level: usize) -> usize {
        self.input_size >> (level + 1)
    }

    /// Token grid of the upper group (side of level 4).
    pub fn grid_high(&self) -> usize {
        self.level_side(3)
    }

    /// Token grid of the middle group (side of level 3).
    pub fn grid_mid(&self) -> usize {
        self.level_side(2)
    }
}

/// Optimisation schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay_factor: f64,
    /// Epochs between learning-rate decays.
    pub lr_decay_period: usize,
    pub seed: u64,
    pub augment: bool,
}

impl TrainConfig {
    pub fn toy() -> Self {
        Self {
            epochs: 300,
            batch_size: 4,
            lr: 1e-3,
            lr_decay_factor: 0.1,
            lr_decay_period: 120,
            seed: 0,
            augment: false,
        }
    }

    pub fn full() -> Self {
        Self {
            epochs: 150,
            batch_size: 3,
            lr: 1e-4,
            lr_decay_factor: 0.1,
            lr_decay_period: 60,
            seed: 0,
            augment: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(NetError::Config("batch_size must be >= 1".into()));
        }
        if !(self.lr > 0.0) {
            return Err(NetError::Config(format!("lr {} must be positive", self.lr)));
        }
        if !(self.lr_decay_factor > 0.0 && self.lr_decay_factor <= 1.0) {
            return Err(NetError::Config(format!(
                "lr_decay_factor {} must be in (0,1]",
                self.lr_decay_factor
            )));
        }
        if self.lr_decay_period == 0 {
            return Err(NetError::Config("lr_decay_period must be >= 1".into()));
        }
        Ok(())
    }

    /// Step-decayed learning rate for the given epoch (0-based).
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = (epoch / self.lr_decay_period) as i32;
        self.lr * self.lr_decay_factor.powi(decays)
    }
}
