//! On-disk dataset layout: `<root>/{rgb,depth,gt}/<name>.{ppm,pgm}` plus a
//! `manifest.txt` listing sample names one per line.

use crate::pnm::{read_pnm, write_pgm, write_ppm, Image8};
use crate::{DataError, Result};
use std::path::{Path, PathBuf};

/// One aligned RGB-D training sample. `rgb` is CHW (3 planes), `depth` and
/// `gt` single planes; `gt` holds exactly 0.0 or 1.0.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<f64>,
    pub depth: Vec<f64>,
    pub gt: Vec<f64>,
}

impl SamplePair {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            rgb: vec![0.0; 3 * width * height],
            depth: vec![0.0; width * height],
            gt: vec![0.0; width * height],
        }
    }

    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn gt_is_binary(&self) -> bool {
        self.gt.iter().all(|v| *v == 0.0 || *v == 1.0)
    }

    /// Fraction of foreground pixels in the mask.
    pub fn foreground_fraction(&self) -> f64 {
        self.gt.iter().sum::<f64>() / self.pixels() as f64
    }
}

/// Ordered list of samples under one dataset root.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub names: Vec<String>,
}

impl DatasetManifest {
    pub fn manifest_path(root: &Path) -> PathBuf {
        root.join("manifest.txt")
    }

    /// Loads and validates: unique names, every file of every triple present.
    pub fn load(root: &Path) -> Result<Self> {
        let mpath = Self::manifest_path(root);
        let text = std::fs::read_to_string(&mpath).map_err(|e| DataError::io(&mpath, e))?;
        let names: Vec<String> = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_string)
            .collect();
        let mut seen = std::collections::HashSet::new();
        for name in &names {
            if !seen.insert(name.clone()) {
                return Err(DataError::DuplicateName { name: name.clone() });
            }
        }
        let manifest = Self {
            root: root.to_path_buf(),
            names,
        };
        for name in &manifest.names {
            for path in manifest.triple(name) {
                if !path.is_file() {
                    return Err(DataError::BadSample {
                        name: name.clone(),
                        what: format!("missing file {}", path.display()),
                    });
                }
            }
        }
        Ok(manifest)
    }

    pub fn save(&self) -> Result<()> {
        let mpath = Self::manifest_path(&self.root);
        let mut text = self.names.join("\n");
        text.push('\n');
        std::fs::write(&mpath, text).map_err(|e| DataError::io(&mpath, e))
    }

    pub fn triple(&self, name: &str) -> [PathBuf; 3] {
        [
            self.root.join("rgb").join(format!("{name}.ppm")),
            self.root.join("depth").join(format!("{name}.pgm")),
            self.root.join("gt").join(format!("{name}.pgm")),
        ]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

fn to_unit(v: u8, maxval: u16) -> f64 {
    v as f64 / maxval as f64
}

fn to_byte(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

/// Decodes one sample triple. Ground truth is thresholded at 128 (>= 128 is
/// foreground).
pub fn load_sample(manifest: &DatasetManifest, name: &str) -> Result<SamplePair> {
    let [rgb_path, depth_path, gt_path] = manifest.triple(name);
    let rgb = read_pnm(&rgb_path)?;
    let depth = read_pnm(&depth_path)?;
    let gt = read_pnm(&gt_path)?;
    let bad = |what: String| DataError::BadSample {
        name: name.to_string(),
        what,
    };
    if rgb.channels != 3 {
        return Err(bad("rgb image is not P6".into()));
    }
    if depth.channels != 1 || gt.channels != 1 {
        return Err(bad("depth/gt image is not P5".into()));
    }
    let (w, h) = (rgb.width, rgb.height);
    if (depth.width, depth.height) != (w, h) || (gt.width, gt.height) != (w, h) {
        return Err(bad(format!(
            "size mismatch: rgb {}x{}, depth {}x{}, gt {}x{}",
            w, h, depth.width, depth.height, gt.width, gt.height
        )));
    }
    let mut pair = SamplePair::new(w, h);
    for p in 0..w * h {
        for c in 0..3 {
            pair.rgb[c * w * h + p] = to_unit(rgb.data[p * 3 + c], rgb.maxval);
        }
        pair.depth[p] = to_unit(depth.data[p], depth.maxval);
        pair.gt[p] = if u16::from(gt.data[p]) * 255 >= 128 * gt.maxval {
            1.0
        } else {
            0.0
        };
    }
    Ok(pair)
}

/// Encodes a sample triple under the dataset layout.
pub fn write_sample(root: &Path, name: &str, pair: &SamplePair) -> Result<()> {
    let (w, h) = (pair.width, pair.height);
    let mut rgb = vec![0u8; 3 * w * h];
    for p in 0..w * h {
        for c in 0..3 {
            rgb[p * 3 + c] = to_byte(pair.rgb[c * w * h + p]);
        }
    }
    let depth: Vec<u8> = pair.depth.iter().map(|v| to_byte(*v)).collect();
    let gt: Vec<u8> = pair.gt.iter().map(|v| if *v >= 0.5 { 255 } else { 0 }).collect();
    write_ppm(
        &root.join("rgb").join(format!("{name}.ppm")),
        &Image8::rgb(w, h, rgb),
    )?;
    write_pgm(
        &root.join("depth").join(format!("{name}.pgm")),
        &Image8::gray(w, h, depth),
    )?;
    write_pgm(
        &root.join("gt").join(format!("{name}.pgm")),
        &Image8::gray(w, h, gt),
    )
}
