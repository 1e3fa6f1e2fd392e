//! Geometric augmentations: horizontal flip, crop-and-resize, quarter-turn
//! rotation. The same transform hits rgb, depth, and gt; masks are
//! re-binarised after any interpolation.

use crate::sample::SamplePair;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn plane<'a>(buf: &'a [f64], idx: usize, px: usize) -> &'a [f64] {
    &buf[idx * px..(idx + 1) * px]
}

fn map_planes(pair: &SamplePair, out_w: usize, out_h: usize, f: impl Fn(&[f64], usize, usize, &mut [f64])) -> SamplePair {
    let px = pair.pixels();
    let mut out = SamplePair::new(out_w, out_h);
    let opx = out_w * out_h;
    for c in 0..3 {
        let mut dst = vec![0.0; opx];
        f(plane(&pair.rgb, c, px), pair.width, pair.height, &mut dst);
        out.rgb[c * opx..(c + 1) * opx].copy_from_slice(&dst);
    }
    let mut dst = vec![0.0; opx];
    f(&pair.depth, pair.width, pair.height, &mut dst);
    out.depth.copy_from_slice(&dst);
    let mut dst = vec![0.0; opx];
    f(&pair.gt, pair.width, pair.height, &mut dst);
    out.gt = dst.iter().map(|v| if *v >= 0.5 { 1.0 } else { 0.0 }).collect();
    out
}

/// Mirrors left-right.
pub fn flip_h(pair: &SamplePair) -> SamplePair {
    map_planes(pair, pair.width, pair.height, |src, w, h, dst| {
        for y in 0..h {
            for x in 0..w {
                dst[y * w + x] = src[y * w + (w - 1 - x)];
            }
        }
    })
}

/// Rotates by `quarter_turns * 90` degrees counter-clockwise; exact pixel
/// moves, no interpolation. Width and height swap on odd turns.
pub fn rotate90(pair: &SamplePair, quarter_turns: usize) -> SamplePair {
    let k = quarter_turns % 4;
    let (w, h) = (pair.width, pair.height);
    let (ow, oh) = if k % 2 == 0 { (w, h) } else { (h, w) };
    map_planes(pair, ow, oh, |src, w, h, dst| {
        for oy in 0..oh {
            for ox in 0..ow {
                let (sx, sy) = match k {
                    0 => (ox, oy),
                    1 => (w - 1 - oy, ox),
                    2 => (w - 1 - ox, h - 1 - oy),
                    _ => (oy, h - 1 - ox),
                };
                dst[oy * ow + ox] = src[sy * w + sx];
            }
        }
    })
}

/// Bilinear resample (align-corners=false); works both up and down.
fn resample_bilinear(src: &[f64], w: usize, h: usize, tw: usize, th: usize, dst: &mut [f64]) {
    let coeff = |o: usize, from: usize, to: usize| -> (usize, usize, f64) {
        let scale = from as f64 / to as f64;
        let s = (o as f64 + 0.5) * scale - 0.5;
        let f = s.floor();
        let frac = s - f;
        let i0 = (f as isize).clamp(0, from as isize - 1) as usize;
        let i1 = (f as isize + 1).clamp(0, from as isize - 1) as usize;
        (i0, i1, frac)
    };
    for oy in 0..th {
        let (y0, y1, fy) = coeff(oy, h, th);
        for ox in 0..tw {
            let (x0, x1, fx) = coeff(ox, w, tw);
            let top = src[y0 * w + x0] + fx * (src[y0 * w + x1] - src[y0 * w + x0]);
            let bot = src[y1 * w + x0] + fx * (src[y1 * w + x1] - src[y1 * w + x0]);
            dst[oy * tw + ox] = top + fy * (bot - top);
        }
    }
}

fn resample_nearest(src: &[f64], w: usize, h: usize, tw: usize, th: usize, dst: &mut [f64]) {
    for oy in 0..th {
        let sy = ((oy as f64 + 0.5) * h as f64 / th as f64) as usize;
        let sy = sy.min(h - 1);
        for ox in 0..tw {
            let sx = ((ox as f64 + 0.5) * w as f64 / tw as f64) as usize;
            let sx = sx.min(w - 1);
            dst[oy * tw + ox] = src[sy * w + sx];
        }
    }
}

/// Crops a `frac`-sized window at the given fractional offset, then resizes
/// back to the original size (bilinear; gt re-binarised).
pub fn crop_resize(pair: &SamplePair, frac: f64, off_x: f64, off_y: f64) -> SamplePair {
    let (w, h) = (pair.width, pair.height);
    let cw = ((w as f64 * frac) as usize).max(1);
    let ch = ((h as f64 * frac) as usize).max(1);
    let x0 = ((w - cw) as f64 * off_x.clamp(0.0, 1.0)) as usize;
    let y0 = ((h - ch) as f64 * off_y.clamp(0.0, 1.0)) as usize;
    map_planes(pair, w, h, |src, w, _h, dst| {
        let mut window = vec![0.0; cw * ch];
        for y in 0..ch {
            window[y * cw..(y + 1) * cw]
                .copy_from_slice(&src[(y0 + y) * w + x0..(y0 + y) * w + x0 + cw]);
        }
        resample_bilinear(&window, cw, ch, pair.width, pair.height, dst);
    })
}

/// Training augmentation: horizontal flip with probability 1/2, crop to 90%
/// side at a random offset with resize back, and a random quarter-turn.
/// Deterministic in `seed`.
pub fn augment(pair: &SamplePair, seed: u64) -> SamplePair {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let flip = rng.random_bool(0.5);
    let off_x = rng.random_range(0.0..1.0);
    let off_y = rng.random_range(0.0..1.0);
    let turns = rng.random_range(0..4usize);

    let mut out = if flip { flip_h(pair) } else { pair.clone() };
    out = crop_resize(&out, 0.9, off_x, off_y);
    rotate90(&out, turns)
}

/// Resizes to a square side (multiple of 32): bilinear for rgb/depth,
/// nearest for gt so binarity survives untouched.
pub fn resize_pair(pair: &SamplePair, target: usize) -> crate::Result<SamplePair> {
    if target == 0 || target % 32 != 0 {
        return Err(crate::DataError::InvalidConfig(format!(
            "resize target {target} must be a positive multiple of 32"
        )));
    }
    if (pair.width, pair.height) == (target, target) {
        return Ok(pair.clone());
    }
    let px = pair.pixels();
    let opx = target * target;
    let mut out = SamplePair::new(target, target);
    for c in 0..3 {
        let mut dst = vec![0.0; opx];
        resample_bilinear(plane(&pair.rgb, c, px), pair.width, pair.height, target, target, &mut dst);
        out.rgb[c * opx..(c + 1) * opx].copy_from_slice(&dst);
    }
    resample_bilinear(&pair.depth, pair.width, pair.height, target, target, &mut out.depth);
    let mut gt = vec![0.0; opx];
    resample_nearest(&pair.gt, pair.width, pair.height, target, target, &mut gt);
    out.gt = gt;
    Ok(out)
}
