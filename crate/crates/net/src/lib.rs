//! RGB-D salient object detection network.
//!
//! Two independent convolutional streams extract five-level feature
//! pyramids from colour and depth. Per level, modal purification fuses the
//! streams and channel/spatial attention sharpens the result. A transition
//! layer equalises channels, and two scale-unification fusers bring the
//! upper and middle level groups to their middle resolutions. Each group is
//! run through one weight-shared transformer encoder, the six outputs are
//! clustered into staggered pairs, integrated with the first-level feature,
//! and decoded by three supervised sigmoid heads trained with a
//! boundary-weighted BCE + IoU loss under Adam.

mod adam;
mod backbone;
mod checkpoint;
mod ciu;
mod config;
mod error;
mod heads;
mod loss;
mod model;
mod mpm;
mod mte;
mod params;
mod suite;
mod sum;
mod train;

pub use adam::{AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use backbone::{extract_pyramid, init_backbone, BackboneParams, StreamParams};
pub use checkpoint::{load_checkpoint, save_checkpoint, Snapshot, CHECKPOINT_MAGIC};
pub use ciu::{cluster, integrate, CiuParams, ClusterSet};
pub use config::{EncoderConfig, HeadSelect, ModelConfig, TrainConfig};
pub use error::NetError;
pub use heads::{predict_heads, HeadsParams};
pub use loss::{boundary_weights, ppa_loss, total_loss};
pub use model::{Net, Trace};
pub use mpm::{channel_attention, mpm_forward, purify, spatial_attention, MpmLevelParams, MpmParams};
pub use mte::{encode_feature, encode_group, tokenize, transformer_layer, EncoderGroupParams};
pub use params::{Forward, ParamId, ParamStore};
pub use suite::{run_gradcheck_suite, CheckResult, SuiteReport};
pub use sum::{sum_h, sum_m, transition, SumParams};
pub use train::{eval_train_mae, train_epoch, EpochReport, TrainSample};

pub type Result<T> = std::result::Result<T, NetError>;
