//! Boundary-weighted supervision: per-pixel weights grow near label
//! boundaries, and each head pays a weighted BCE plus weighted IoU cost.

use crate::params::Forward;
use crate::{NetError, Result};
use groupsod_tensor::{Tensor, Var};

/// Clamp for the log arguments inside the BCE term.
const LOG_CLAMP: f64 = 1e-7;
/// Boundary emphasis factor.
const BOUNDARY_GAIN: f64 = 5.0;

fn check_binary(gt: &Tensor) -> Result<()> {
    for (index, v) in gt.data().iter().enumerate() {
        if *v != 0.0 && *v != 1.0 {
            return Err(NetError::NonBinaryMask { index, value: *v });
        }
    }
    Ok(())
}

/// `1 + 5*|avg_k(G) - G|` with a stride-1 window averaging only in-bounds
/// taps, so label-homogeneous windows (including whole-constant masks)
/// yield exactly 1 and boundary pixels strictly more.
pub fn boundary_weights(gt: &Tensor, window: usize) -> Result<Tensor> {
    check_binary(gt)?;
    let shape = gt.shape().to_vec();
    let (nb, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
    debug_assert_eq!(c, 1);
    let half = (window / 2) as isize;
    let g = gt.data();
    let mut out = vec![0.0; g.len()];
    for n in 0..nb {
        let src = &g[n * h * w..(n + 1) * h * w];
        let dst = &mut out[n * h * w..(n + 1) * h * w];
        for y in 0..h as isize {
            let y0 = (y - half).max(0) as usize;
            let y1 = ((y + half) as usize).min(h - 1);
            for x in 0..w as isize {
                let x0 = (x - half).max(0) as usize;
                let x1 = ((x + half) as usize).min(w - 1);
                let mut sum = 0.0;
                for yy in y0..=y1 {
                    sum += src[yy * w + x0..=yy * w + x1].iter().sum::<f64>();
                }
                let count = ((y1 - y0 + 1) * (x1 - x0 + 1)) as f64;
                let center = src[y as usize * w + x as usize];
                dst[y as usize * w + x as usize] =
                    1.0 + BOUNDARY_GAIN * (sum / count - center).abs();
            }
        }
    }
    Ok(Tensor::new(shape, out).expect("same shape"))
}

/// Weighted BCE + weighted IoU for one head, averaged over the batch.
/// `s` holds probabilities strictly inside (0,1); `gt` is binary.
pub fn ppa_loss(fw: &mut Forward, s: Var, gt: &Tensor, window: usize) -> Result<Var> {
    if fw.tape.shape(s) != gt.shape() {
        return Err(NetError::Input(format!(
            "loss shapes differ: prediction {:?} vs mask {:?}",
            fw.tape.shape(s),
            gt.shape()
        )));
    }
    let omega_t = boundary_weights(gt, window)?;
    let batch = gt.shape()[0];
    let spatial_axes = [1usize, 2, 3];

    // Per-item weight normaliser (constant w.r.t. parameters).
    let omega = fw.input(omega_t);
    let g = fw.input(gt.clone());
    let one_minus_g = {
        let data = gt.data().iter().map(|v| 1.0 - v).collect();
        let t = Tensor::new(gt.shape().to_vec(), data).expect("same shape");
        fw.input(t)
    };

    // wBCE: omega-weighted cross entropy, normalised by the weight mass.
    let s_clamped = fw.tape.clamp(s, LOG_CLAMP, 1.0 - LOG_CLAMP)?;
    let log_s = fw.tape.ln(s_clamped)?;
    let one_minus_s = fw.tape.affine(s, -1.0, 1.0)?;
    let oms_clamped = fw.tape.clamp(one_minus_s, LOG_CLAMP, 1.0 - LOG_CLAMP)?;
    let log_oms = fw.tape.ln(oms_clamped)?;
    let pos = fw.tape.mul(g, log_s)?;
    let neg = fw.tape.mul(one_minus_g, log_oms)?;
    let ce = fw.tape.add(pos, neg)?;
    let ce = fw.tape.neg(ce)?;
    let weighted_ce = fw.tape.mul(omega, ce)?;
    let ce_sum = fw.tape.sum_axes(weighted_ce, &spatial_axes)?;
    let omega_sum = fw.tape.sum_axes(omega, &spatial_axes)?;
    let omega_inv = fw.tape.recip(omega_sum)?;
    let wbce = fw.tape.mul(ce_sum, omega_inv)?;

    // wIoU: 1 - weighted intersection / weighted union, +1 smoothing.
    let sg = fw.tape.mul(s, g)?;
    let inter = fw.tape.mul(omega, sg)?;
    let inter_sum = fw.tape.sum_axes(inter, &spatial_axes)?;
    let inter_sum = fw.tape.affine(inter_sum, 1.0, 1.0)?;
    let s_plus_g = fw.tape.add(s, g)?;
    let neg_sg = fw.tape.neg(sg)?;
    let union = fw.tape.add(s_plus_g, neg_sg)?;
    let w_union = fw.tape.mul(omega, union)?;
    let union_sum = fw.tape.sum_axes(w_union, &spatial_axes)?;
    let union_sum = fw.tape.affine(union_sum, 1.0, 1.0)?;
    let union_inv = fw.tape.recip(union_sum)?;
    let iou_ratio = fw.tape.mul(inter_sum, union_inv)?;
    let wiou = fw.tape.affine(iou_ratio, -1.0, 1.0)?;

    let per_item = fw.tape.add(wbce, wiou)?;
    debug_assert_eq!(fw.tape.shape(per_item), [batch]);
    fw.tape.mean_all(per_item).map_err(Into::into)
}

/// Unweighted sum of the three per-head losses.
pub fn total_loss(fw: &mut Forward, heads: &[Var; 3], gt: &Tensor, window: usize) -> Result<Var> {
    let mut acc = ppa_loss(fw, heads[0], gt, window)?;
    for s in &heads[1..] {
        let term = ppa_loss(fw, *s, gt, window)?;
        acc = fw.tape.add(acc, term)?;
    }
    Ok(acc)
}
