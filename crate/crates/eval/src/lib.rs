//! Saliency-map evaluation.
//!
//! Four scalar metrics (S-measure, average F-measure, E-measure, MAE) plus
//! precision/recall and F-beta curves over 256 fixed thresholds, and a
//! directory runner that averages per-image results into a text report.
//!
//! Conventions shared by every metric: predictions live in `[0,1]`, ground
//! truth is strictly binary, `EPS = 1e-12` guards divisions, and the
//! threshold grid is `{0,...,255}/255`.

mod dir;
mod emeasure;
mod error;
mod fmeasure;
mod mae;
mod map;
mod report;
mod smeasure;

pub use dir::evaluate_dir;
pub use emeasure::{e_measure, e_measure_binary};
pub use error::EvalError;
pub use fmeasure::{f_beta_score, f_measure_avg, threshold_curves, ThresholdCurves, BETA_SQUARED};
pub use mae::mae;
pub use map::GrayMap;
pub use report::MetricReport;
pub use smeasure::s_measure;

pub type Result<T> = std::result::Result<T, EvalError>;

/// Division guard used across the whole suite.
pub const EPS: f64 = 1e-12;

/// Number of fixed binarisation thresholds.
pub const THRESHOLDS: usize = 256;
