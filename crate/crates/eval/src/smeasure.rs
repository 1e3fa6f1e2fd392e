//! Structure measure: object-aware and region-aware structural similarity,
//! equally weighted.

use crate::map::{validate_pair, GrayMap};
use crate::{Result, EPS};

const ALPHA: f64 = 0.5;

/// Object score of one value set: `2*mean / (mean^2 + 1 + 2*std + eps)`,
/// population standard deviation.
fn object_score(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let n = values.clone().count();
    if n == 0 {
        return 0.0;
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    2.0 * mean / (mean * mean + 1.0 + 2.0 * var.sqrt() + EPS)
}

/// Single-window structural similarity on raw values over one region,
/// sample (n-1) normalisation for the second moments.
fn region_ssim(pred: &[f64], gt: &[f64]) -> f64 {
    let n = pred.len();
    if n == 0 {
        return 0.0;
    }
    let nf = n as f64;
    let mx = pred.iter().sum::<f64>() / nf;
    let my = gt.iter().sum::<f64>() / nf;
    let (mut sx, mut sy, mut sxy) = (0.0, 0.0, 0.0);
    for (p, g) in pred.iter().zip(gt) {
        sx += (p - mx) * (p - mx);
        sy += (g - my) * (g - my);
        sxy += (p - mx) * (g - my);
    }
    if n > 1 {
        sx /= nf - 1.0;
        sy /= nf - 1.0;
        sxy /= nf - 1.0;
    }
    let alpha = 4.0 * mx * my * sxy;
    let beta = (mx * mx + my * my) * (sx + sy);
    if alpha != 0.0 {
        alpha / (beta + EPS)
    } else if beta == 0.0 {
        1.0
    } else {
        0.0
    }
}

/// Foreground centroid of the mask, returned as cut indices that leave a
/// non-empty slice on both sides whenever the map allows it.
fn centroid_cuts(gt: &GrayMap) -> (usize, usize) {
    let (w, h) = (gt.width, gt.height);
    let mut count = 0.0;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (i, v) in gt.data.iter().enumerate() {
        if *v == 1.0 {
            sx += (i % w) as f64;
            sy += (i / w) as f64;
            count += 1.0;
        }
    }
    let cx = ((sx / count).round() as usize + 1).clamp(1, w.saturating_sub(1).max(1));
    let cy = ((sy / count).round() as usize + 1).clamp(1, h.saturating_sub(1).max(1));
    (cx, cy)
}

fn gather(map: &GrayMap, x0: usize, x1: usize, y0: usize, y1: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity((x1 - x0) * (y1 - y0));
    for y in y0..y1 {
        out.extend_from_slice(&map.data[y * map.width + x0..y * map.width + x1]);
    }
    out
}

pub fn s_measure(pred: &GrayMap, gt: &GrayMap) -> Result<f64> {
    validate_pair(pred, gt)?;
    let fg: f64 = gt.data.iter().sum();
    let n = gt.pixels() as f64;

    // Degenerate masks reduce to how empty/full the prediction is.
    if fg == 0.0 {
        return Ok(1.0 - pred.mean());
    }
    if fg == n {
        return Ok(pred.mean());
    }

    // Object-aware term.
    let mu = fg / n;
    let o_fg = object_score(
        pred.data
            .iter()
            .zip(&gt.data)
            .filter(|(_, g)| **g == 1.0)
            .map(|(p, _)| *p),
    );
    let o_bg = object_score(
        pred.data
            .iter()
            .zip(&gt.data)
            .filter(|(_, g)| **g == 0.0)
            .map(|(p, _)| 1.0 - *p),
    );
    let s_object = mu * o_fg + (1.0 - mu) * o_bg;

    // Region-aware term: four rectangles split at the mask centroid,
    // weighted by each region's share of foreground pixels.
    let (cx, cy) = centroid_cuts(gt);
    let (w, h) = (gt.width, gt.height);
    let mut s_region = 0.0;
    for (x0, x1, y0, y1) in [
        (0, cx, 0, cy),
        (cx, w, 0, cy),
        (0, cx, cy, h),
        (cx, w, cy, h),
    ] {
        let gt_part = gather(gt, x0, x1, y0, y1);
        let pred_part = gather(pred, x0, x1, y0, y1);
        let weight = gt_part.iter().sum::<f64>() / fg;
        s_region += weight * region_ssim(&pred_part, &gt_part);
    }

    Ok((ALPHA * s_object + (1.0 - ALPHA) * s_region).clamp(0.0, 1.0))
}
