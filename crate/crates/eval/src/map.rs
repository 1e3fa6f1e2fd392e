use crate::{EvalError, Result};

/// Single-channel map with values in `[0,1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl GrayMap {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(EvalError::BadLength {
                width,
                height,
                len: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn pixels(&self) -> usize {
        self.data.len()
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.pixels() as f64
    }

    pub(crate) fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Shared entry validation: matching dims, prediction in range, gt binary.
pub(crate) fn validate_pair(pred: &GrayMap, gt: &GrayMap) -> Result<()> {
    if pred.dims() != gt.dims() {
        return Err(EvalError::DimMismatch {
            left: pred.dims(),
            right: gt.dims(),
        });
    }
    for (i, v) in pred.data.iter().enumerate() {
        if !(0.0..=1.0).contains(v) {
            return Err(EvalError::OutOfRange { index: i, value: *v });
        }
    }
    for (i, v) in gt.data.iter().enumerate() {
        if *v != 0.0 && *v != 1.0 {
            return Err(EvalError::NonBinaryGroundTruth { index: i, value: *v });
        }
    }
    Ok(())
}
