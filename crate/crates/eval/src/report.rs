use crate::{EvalError, Result, THRESHOLDS};
use std::fmt::Write as _;

/// Averaged metrics plus per-threshold curves for one evaluated directory.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub images: usize,
    pub s_measure: f64,
    pub f_measure_avg: f64,
    pub e_measure: f64,
    pub mae: f64,
    /// 256 `(precision, recall)` points indexed by threshold.
    pub pr_curve: Vec<(f64, f64)>,
    /// 256 F-beta values indexed by threshold.
    pub f_curve: Vec<f64>,
}

impl MetricReport {
    /// Key-value summary followed by one curve row per threshold. Floats
    /// use the shortest round-trip form, so parsing recovers exact values.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "images={}", self.images).unwrap();
        writeln!(out, "s_measure={}", self.s_measure).unwrap();
        writeln!(out, "f_measure_avg={}", self.f_measure_avg).unwrap();
        writeln!(out, "e_measure={}", self.e_measure).unwrap();
        writeln!(out, "mae={}", self.mae).unwrap();
        writeln!(out, "# threshold precision recall f_beta").unwrap();
        for i in 0..THRESHOLDS {
            let (p, r) = self.pr_curve[i];
            writeln!(out, "{i} {p} {r} {}", self.f_curve[i]).unwrap();
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut images = None;
        let mut scalars = [None; 4];
        let mut pr_curve = Vec::with_capacity(THRESHOLDS);
        let mut f_curve = Vec::with_capacity(THRESHOLDS);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let err = |what: &str| EvalError::ReportParse {
                line: lineno + 1,
                what: what.to_string(),
            };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some((key, value)) = line.split_once('=') {
                let slot = match key {
                    "images" => {
                        images = Some(value.parse::<usize>().map_err(|_| err("bad count"))?);
                        continue;
                    }
                    "s_measure" => 0,
                    "f_measure_avg" => 1,
                    "e_measure" => 2,
                    "mae" => 3,
                    _ => return Err(err("unknown key")),
                };
                scalars[slot] = Some(value.parse::<f64>().map_err(|_| err("bad float"))?);
            } else {
                let mut parts = line.split_ascii_whitespace();
                let idx: usize = parts
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| err("bad threshold index"))?;
                if idx != pr_curve.len() {
                    return Err(err("curve rows out of order"));
                }
                let mut next = || -> Result<f64> {
                    parts
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| err("bad curve value"))
                };
                let p = next()?;
                let r = next()?;
                let f = next()?;
                pr_curve.push((p, r));
                f_curve.push(f);
            }
        }
        let missing = |what: &str| EvalError::ReportParse {
            line: 0,
            what: format!("missing {what}"),
        };
        if pr_curve.len() != THRESHOLDS {
            return Err(missing("curve rows"));
        }
        Ok(Self {
            images: images.ok_or_else(|| missing("images"))?,
            s_measure: scalars[0].ok_or_else(|| missing("s_measure"))?,
            f_measure_avg: scalars[1].ok_or_else(|| missing("f_measure_avg"))?,
            e_measure: scalars[2].ok_or_else(|| missing("e_measure"))?,
            mae: scalars[3].ok_or_else(|| missing("mae"))?,
            pr_curve,
            f_curve,
        })
    }
}
