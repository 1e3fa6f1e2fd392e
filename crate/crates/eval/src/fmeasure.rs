use crate::map::{validate_pair, GrayMap};
use crate::{Result, EPS, THRESHOLDS};

/// Precision weighting of the F score.
pub const BETA_SQUARED: f64 = 0.3;

/// Per-threshold precision, recall, and F-beta over the 256 fixed
/// thresholds `t = i/255`, binarising with `pred > t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurves {
    pub precision: Vec<f64>,
    pub recall: Vec<f64>,
    pub f_beta: Vec<f64>,
}

impl ThresholdCurves {
    pub fn pr_points(&self) -> Vec<(f64, f64)> {
        self.precision
            .iter()
            .zip(&self.recall)
            .map(|(p, r)| (*p, *r))
            .collect()
    }
}

pub fn f_beta_score(precision: f64, recall: f64) -> f64 {
    let denom = BETA_SQUARED * precision + recall;
    if denom > 0.0 {
        (1.0 + BETA_SQUARED) * precision * recall / denom
    } else {
        0.0
    }
}

pub fn threshold_curves(pred: &GrayMap, gt: &GrayMap) -> Result<ThresholdCurves> {
    validate_pair(pred, gt)?;
    let mut precision = Vec::with_capacity(THRESHOLDS);
    let mut recall = Vec::with_capacity(THRESHOLDS);
    let mut f_beta = Vec::with_capacity(THRESHOLDS);
    for i in 0..THRESHOLDS {
        let t = i as f64 / 255.0;
        let mut tp = 0usize;
        let mut fp = 0usize;
        let mut fnc = 0usize;
        for (p, g) in pred.data.iter().zip(&gt.data) {
            let pos = *p > t;
            match (pos, *g == 1.0) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fnc += 1,
                (false, false) => {}
            }
        }
        let prec = tp as f64 / (tp as f64 + fp as f64 + EPS);
        let rec = tp as f64 / (tp as f64 + fnc as f64 + EPS);
        precision.push(prec);
        recall.push(rec);
        f_beta.push(f_beta_score(prec, rec));
    }
    Ok(ThresholdCurves {
        precision,
        recall,
        f_beta,
    })
}

/// Mean F-beta over the 256 fixed thresholds.
pub fn f_measure_avg(pred: &GrayMap, gt: &GrayMap) -> Result<f64> {
    let curves = threshold_curves(pred, gt)?;
    Ok(curves.f_beta.iter().sum::<f64>() / THRESHOLDS as f64)
}
