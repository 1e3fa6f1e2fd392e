//! Enhanced-alignment measure over an adaptively binarised prediction.

use crate::map::{validate_pair, GrayMap};
use crate::{Result, EPS};

/// Binarises at twice the prediction mean (clamped to 1) and scores the
/// alignment against the mask.
pub fn e_measure(pred: &GrayMap, gt: &GrayMap) -> Result<f64> {
    validate_pair(pred, gt)?;
    let threshold = (2.0 * pred.mean()).min(1.0);
    let bin: Vec<f64> = pred
        .data
        .iter()
        .map(|v| if *v >= threshold { 1.0 } else { 0.0 })
        .collect();
    let bin_map = GrayMap::new(pred.width, pred.height, bin)?;
    e_measure_binary(&bin_map, gt)
}

/// E-measure of an already-binary prediction.
pub fn e_measure_binary(pred_bin: &GrayMap, gt: &GrayMap) -> Result<f64> {
    validate_pair(pred_bin, gt)?;
    let n = gt.pixels() as f64;
    let fg: f64 = gt.data.iter().sum();
    let mean_p = pred_bin.mean();

    // Degenerate masks: score how empty/full the binarised prediction is.
    if fg == 0.0 {
        return Ok(1.0 - mean_p);
    }
    if fg == n {
        return Ok(mean_p);
    }

    let mean_g = fg / n;
    let mut sum = 0.0;
    for (p, g) in pred_bin.data.iter().zip(&gt.data) {
        let phi_p = p - mean_p;
        let phi_g = g - mean_g;
        let denom = phi_g * phi_g + phi_p * phi_p;
        // The eps guard only covers the 0/0 pixel, so perfect alignment
        // scores exactly 1 and perfect anti-alignment exactly 0.
        let xi = if denom > 0.0 {
            2.0 * phi_g * phi_p / denom
        } else {
            2.0 * phi_g * phi_p / EPS
        };
        let align = (1.0 + xi) * (1.0 + xi) / 4.0;
        sum += align;
    }
    Ok(sum / n)
}
