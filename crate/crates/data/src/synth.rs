//! Deterministic synthetic RGB-D scenes: a cluttered mid-tone background,
//! up to two distractor shapes, and one salient shape with a distinct hue
//! sitting strictly nearer (larger depth value) than everything else.

use crate::sample::{write_sample, DatasetManifest, SamplePair};
use crate::{DataError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::Path;

// Depth bands: background and distractors stay at or below DISTRACTOR_MAX;
// the salient shape starts above SALIENT_MIN, keeping the separation strict.
const BACKGROUND_MAX: f64 = 0.45;
const DISTRACTOR_MAX: f64 = 0.65;
const SALIENT_MIN: f64 = 0.72;

#[derive(Clone, Copy)]
enum ShapeKind {
    Rect,
    Ellipse,
}

#[derive(Clone, Copy)]
struct Shape {
    kind: ShapeKind,
    cx: f64,
    cy: f64,
    rx: f64,
    ry: f64,
}

impl Shape {
    fn contains(&self, x: usize, y: usize) -> bool {
        let dx = (x as f64 + 0.5 - self.cx) / self.rx;
        let dy = (y as f64 + 0.5 - self.cy) / self.ry;
        match self.kind {
            ShapeKind::Rect => dx.abs() <= 1.0 && dy.abs() <= 1.0,
            ShapeKind::Ellipse => dx * dx + dy * dy <= 1.0,
        }
    }
}

fn random_shape(rng: &mut ChaCha8Rng, size: usize) -> Shape {
    let s = size as f64;
    Shape {
        kind: if rng.random_bool(0.5) {
            ShapeKind::Rect
        } else {
            ShapeKind::Ellipse
        },
        cx: rng.random_range(0.25 * s..0.75 * s),
        cy: rng.random_range(0.25 * s..0.75 * s),
        rx: rng.random_range(0.08 * s..0.22 * s).max(1.5),
        ry: rng.random_range(0.08 * s..0.22 * s).max(1.5),
    }
}

/// One synthetic sample drawn from the generator stream.
pub fn generate_sample(size: usize, rng: &mut ChaCha8Rng) -> SamplePair {
    let mut pair = SamplePair::new(size, size);
    let px = size * size;

    // Cluttered background: mid-tone base colour plus per-pixel noise.
    let base: [f64; 3] = [
        rng.random_range(0.25..0.55),
        rng.random_range(0.25..0.55),
        rng.random_range(0.25..0.55),
    ];
    let depth_base = rng.random_range(0.1..0.3);
    for p in 0..px {
        for c in 0..3 {
            pair.rgb[c * px + p] = (base[c] + rng.random_range(-0.08..0.08)).clamp(0.0, 1.0);
        }
        pair.depth[p] = (depth_base + rng.random_range(-0.08f64..0.08)).clamp(0.0, BACKGROUND_MAX);
    }

    // Zero to two distractors in the mid depth band, muted colours.
    let distractors = rng.random_range(0..=2usize);
    for _ in 0..distractors {
        let shape = random_shape(rng, size);
        let colour: [f64; 3] = [
            rng.random_range(0.2..0.6),
            rng.random_range(0.2..0.6),
            rng.random_range(0.2..0.6),
        ];
        let depth = rng.random_range(0.5..DISTRACTOR_MAX - 0.02);
        for y in 0..size {
            for x in 0..size {
                if shape.contains(x, y) {
                    let p = y * size + x;
                    for c in 0..3 {
                        pair.rgb[c * px + p] = colour[c];
                    }
                    pair.depth[p] = depth;
                }
            }
        }
    }

    // Salient shape last so it occludes: one saturated channel against the
    // mid-tone clutter, depth strictly above every other pixel.
    let shape = random_shape(rng, size);
    let hot = rng.random_range(0..3usize);
    let colour: [f64; 3] = {
        let mut c = [
            rng.random_range(0.05..0.2),
            rng.random_range(0.05..0.2),
            rng.random_range(0.05..0.2),
        ];
        c[hot] = rng.random_range(0.85..1.0);
        c
    };
    let depth = rng.random_range(SALIENT_MIN..0.95);
    for y in 0..size {
        for x in 0..size {
            if shape.contains(x, y) {
                let p = y * size + x;
                for c in 0..3 {
                    pair.rgb[c * px + p] = colour[c];
                }
                pair.depth[p] = depth;
                pair.gt[p] = 1.0;
            }
        }
    }
    debug_assert!(pair.foreground_fraction() > 0.0 && pair.foreground_fraction() < 0.5);
    pair
}

/// Writes `count` samples of side `size` under `root` and returns the saved
/// manifest. Content is a pure function of `(count, size, seed)`.
pub fn generate_dataset(root: &Path, count: usize, size: usize, seed: u64) -> Result<DatasetManifest> {
    if count == 0 {
        return Err(DataError::InvalidConfig("count must be >= 1".into()));
    }
    if size == 0 || size % 32 != 0 {
        return Err(DataError::InvalidConfig(format!(
            "size {size} must be a positive multiple of 32"
        )));
    }
    // Per-sample streams come from a master stream, so sample i depends
    // only on (seed, i), never on count.
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut names = Vec::with_capacity(count);
    for i in 0..count {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random::<u64>());
        let pair = generate_sample(size, &mut rng);
        let name = format!("sample_{i:04}");
        write_sample(root, &name, &pair)?;
        names.push(name);
    }
    let manifest = DatasetManifest {
        root: root.to_path_buf(),
        names,
    };
    manifest.save()?;
    Ok(manifest)
}
