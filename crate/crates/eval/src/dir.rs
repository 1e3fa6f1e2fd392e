//! Directory-level evaluation: same-named PGM pairs, averaged metrics.

use crate::map::GrayMap;
use crate::{e_measure, mae, s_measure, threshold_curves};
use crate::{EvalError, MetricReport, Result, THRESHOLDS};
use groupsod_data::read_pnm;
use std::collections::BTreeSet;
use std::path::Path;

fn pgm_stems(dir: &Path) -> Result<BTreeSet<String>> {
    let mut names = BTreeSet::new();
    let entries = std::fs::read_dir(dir).map_err(|e| EvalError::Io {
        path: dir.to_path_buf(),
        source: e,
    })?;
    for entry in entries {
        let entry = entry.map_err(|e| EvalError::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) == Some("pgm") {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                names.insert(stem.to_string());
            }
        }
    }
    Ok(names)
}

fn load_gray(dir: &Path, name: &str) -> Result<GrayMap> {
    let img = read_pnm(&dir.join(format!("{name}.pgm")))?;
    let data = img
        .data
        .iter()
        .map(|v| *v as f64 / img.maxval as f64)
        .collect();
    GrayMap::new(img.width, img.height, data)
}

fn binarize_gt(map: GrayMap) -> GrayMap {
    // 8-bit mask convention: values at or above 128/255 are foreground.
    let data = map
        .data
        .iter()
        .map(|v| if *v >= 128.0 / 255.0 { 1.0 } else { 0.0 })
        .collect();
    GrayMap {
        width: map.width,
        height: map.height,
        data,
    }
}

/// Evaluates every same-named `.pgm` pair; per-image metrics and curves are
/// averaged arithmetically in filename order.
pub fn evaluate_dir(pred_dir: &Path, gt_dir: &Path) -> Result<MetricReport> {
    let pred_names = pgm_stems(pred_dir)?;
    let gt_names = pgm_stems(gt_dir)?;
    let orphans: Vec<String> = pred_names
        .symmetric_difference(&gt_names)
        .cloned()
        .collect();
    if !orphans.is_empty() {
        return Err(EvalError::Orphans(orphans));
    }
    if pred_names.is_empty() {
        return Err(EvalError::Empty);
    }

    let mut sums = [0.0f64; 4];
    let mut pr_sum = vec![(0.0f64, 0.0f64); THRESHOLDS];
    let mut f_sum = vec![0.0f64; THRESHOLDS];
    for name in &pred_names {
        let pred = load_gray(pred_dir, name)?;
        let gt = binarize_gt(load_gray(gt_dir, name)?);
        if (pred.width, pred.height) != (gt.width, gt.height) {
            return Err(EvalError::PairSizeMismatch {
                name: name.clone(),
                pred: (pred.width, pred.height),
                gt: (gt.width, gt.height),
            });
        }
        sums[0] += s_measure(&pred, &gt)?;
        sums[1] += mae(&pred, &gt)?;
        sums[2] += e_measure(&pred, &gt)?;
        let curves = threshold_curves(&pred, &gt)?;
        sums[3] += curves.f_beta.iter().sum::<f64>() / THRESHOLDS as f64;
        for i in 0..THRESHOLDS {
            pr_sum[i].0 += curves.precision[i];
            pr_sum[i].1 += curves.recall[i];
            f_sum[i] += curves.f_beta[i];
        }
    }

    let n = pred_names.len() as f64;
    Ok(MetricReport {
        images: pred_names.len(),
        s_measure: sums[0] / n,
        mae: sums[1] / n,
        e_measure: sums[2] / n,
        f_measure_avg: sums[3] / n,
        pr_curve: pr_sum.iter().map(|(p, r)| (p / n, r / n)).collect(),
        f_curve: f_sum.iter().map(|f| f / n).collect(),
    })
}
