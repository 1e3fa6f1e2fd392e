use crate::map::{validate_pair, GrayMap};
use crate::Result;

/// Mean absolute difference between prediction and ground truth.
pub fn mae(pred: &GrayMap, gt: &GrayMap) -> Result<f64> {
    validate_pair(pred, gt)?;
    let sum: f64 = pred
        .data
        .iter()
        .zip(&gt.data)
        .map(|(p, g)| (p - g).abs())
        .sum();
    Ok(sum / pred.pixels() as f64)
}
