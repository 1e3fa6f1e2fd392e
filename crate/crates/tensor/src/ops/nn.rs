use crate::tape::{slot, Op, Tape, Var};
use crate::tensor::Tensor;
use crate::{Result, TensorError};

// Largest f64 strictly below 1. Saturated sigmoids are pinned just inside
// (0,1) so downstream logs stay finite without extra guards.
const ONE_MINUS_ULP: f64 = 1.0 - f64::EPSILON / 2.0;

impl Tape {
    /// `max(x, 0)` element-wise.
    pub fn relu(&mut self, x: Var) -> Result<Var> {
        let data: Vec<f64> = self.value(x).data().iter().map(|v| v.max(0.0)).collect();
        let out = Tensor::new(self.shape(x).to_vec(), data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Relu(x), requires))
    }

    /// Logistic function with outputs strictly inside (0,1).
    pub fn sigmoid(&mut self, x: Var) -> Result<Var> {
        let data: Vec<f64> = self
            .value(x)
            .data()
            .iter()
            .map(|v| (1.0 / (1.0 + (-v).exp())).clamp(f64::MIN_POSITIVE, ONE_MINUS_ULP))
            .collect();
        let out = Tensor::new(self.shape(x).to_vec(), data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Sigmoid(x), requires))
    }

    /// Numerically stable softmax along `axis`; slices sum to 1.
    pub fn softmax(&mut self, x: Var, axis: usize) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        if axis >= shape.len() {
            return Err(TensorError::AxisOutOfRange { axis, shape });
        }
        let (outer, len, inner) = split_axis(&shape, axis);
        let xd = self.value(x).data();
        let mut data = vec![0.0; xd.len()];
        for o in 0..outer {
            for i in 0..inner {
                let base = o * len * inner + i;
                let mut maxv = f64::NEG_INFINITY;
                for a in 0..len {
                    maxv = maxv.max(xd[base + a * inner]);
                }
                let mut sum = 0.0;
                for a in 0..len {
                    let e = (xd[base + a * inner] - maxv).exp();
                    data[base + a * inner] = e;
                    sum += e;
                }
                for a in 0..len {
                    data[base + a * inner] /= sum;
                }
            }
        }
        let out = Tensor::new(shape, data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Softmax { x, axis }, requires))
    }

    /// Layer normalisation over the last dimension followed by a
    /// per-feature affine map. `gamma`/`beta` have the size of that
    /// dimension; `eps` keeps the variance floor positive.
    pub fn layer_norm(&mut self, x: Var, gamma: Var, beta: Var, eps: f64) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let d = *shape.last().ok_or(TensorError::AxisOutOfRange {
            axis: 0,
            shape: shape.clone(),
        })?;
        for v in [gamma, beta] {
            if self.shape(v) != [d] {
                return Err(TensorError::ShapeMismatch {
                    left: self.shape(v).to_vec(),
                    right: vec![d],
                });
            }
        }
        if !(eps > 0.0) {
            return Err(TensorError::NonFiniteInput {
                what: format!("layer_norm eps {eps} (must be > 0)"),
            });
        }
        let xd = self.value(x).data();
        let gd = self.value(gamma).data();
        let bd = self.value(beta).data();
        let rows = xd.len() / d;
        let mut data = vec![0.0; xd.len()];
        for r in 0..rows {
            let xs = &xd[r * d..(r + 1) * d];
            let mean = xs.iter().sum::<f64>() / d as f64;
            let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let inv_std = 1.0 / (var + eps).sqrt();
            let out_row = &mut data[r * d..(r + 1) * d];
            for j in 0..d {
                out_row[j] = (xs[j] - mean) * inv_std * gd[j] + bd[j];
            }
        }
        let out = Tensor::new(shape, data)?;
        let requires = self.any_requires(&[x, gamma, beta]);
        Ok(self.push(out, Op::LayerNorm { x, gamma, beta, eps }, requires))
    }
}

pub(crate) fn split_axis(shape: &[usize], axis: usize) -> (usize, usize, usize) {
    let outer = shape[..axis].iter().product();
    let len = shape[axis];
    let inner = shape[axis + 1..].iter().product();
    (outer, len, inner)
}

pub(crate) fn backward_relu(
    tape: &Tape,
    x: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(x) {
        let xv = tape.value(x).data();
        let dst = slot(grads, x, g.len());
        for ((d, gi), xi) in dst.iter_mut().zip(g).zip(xv) {
            if *xi > 0.0 {
                *d += fault * gi;
            }
        }
    }
}

pub(crate) fn backward_sigmoid(
    tape: &Tape,
    node: usize,
    x: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(x) {
        let s = tape.nodes[node].value.data();
        let dst = slot(grads, x, g.len());
        for ((d, gi), si) in dst.iter_mut().zip(g).zip(s) {
            *d += fault * gi * si * (1.0 - si);
        }
    }
}

pub(crate) fn backward_softmax(
    tape: &Tape,
    node: usize,
    x: Var,
    axis: usize,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if !tape.requires(x) {
        return;
    }
    let s = tape.nodes[node].value.data();
    let shape = tape.shape(x).to_vec();
    let (outer, len, inner) = split_axis(&shape, axis);
    let dst = slot(grads, x, g.len());
    for o in 0..outer {
        for i in 0..inner {
            let base = o * len * inner + i;
            let mut dot = 0.0;
            for a in 0..len {
                let idx = base + a * inner;
                dot += g[idx] * s[idx];
            }
            for a in 0..len {
                let idx = base + a * inner;
                dst[idx] += fault * s[idx] * (g[idx] - dot);
            }
        }
    }
}

pub(crate) fn backward_layer_norm(
    tape: &Tape,
    x: Var,
    gamma: Var,
    beta: Var,
    eps: f64,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    let d = *tape.shape(x).last().unwrap();
    let xd = tape.value(x).data();
    let gd = tape.value(gamma).data();
    let rows = xd.len() / d;

    let need_x = tape.requires(x);
    let need_gamma = tape.requires(gamma);
    let need_beta = tape.requires(beta);

    let mut dx = if need_x { vec![0.0; xd.len()] } else { vec![] };
    let mut dgamma = if need_gamma { vec![0.0; d] } else { vec![] };
    let mut dbeta = if need_beta { vec![0.0; d] } else { vec![] };

    let mut xhat = vec![0.0; d];
    let mut dxhat = vec![0.0; d];
    for r in 0..rows {
        let xs = &xd[r * d..(r + 1) * d];
        let gs = &g[r * d..(r + 1) * d];
        let mean = xs.iter().sum::<f64>() / d as f64;
        let var = xs.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
        let inv_std = 1.0 / (var + eps).sqrt();
        for j in 0..d {
            xhat[j] = (xs[j] - mean) * inv_std;
        }
        if need_gamma {
            for j in 0..d {
                dgamma[j] += gs[j] * xhat[j];
            }
        }
        if need_beta {
            for j in 0..d {
                dbeta[j] += gs[j];
            }
        }
        if need_x {
            for j in 0..d {
                dxhat[j] = gs[j] * gd[j];
            }
            let sum_dxhat: f64 = dxhat.iter().sum();
            let sum_dxhat_xhat: f64 = dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum();
            let df = d as f64;
            let dxr = &mut dx[r * d..(r + 1) * d];
            for j in 0..d {
                dxr[j] = inv_std / df * (df * dxhat[j] - sum_dxhat - xhat[j] * sum_dxhat_xhat);
            }
        }
    }

    if need_x {
        let dst = slot(grads, x, xd.len());
        for (dv, sv) in dst.iter_mut().zip(&dx) {
            *dv += fault * sv;
        }
    }
    if need_gamma {
        let dst = slot(grads, gamma, d);
        for (dv, sv) in dst.iter_mut().zip(&dgamma) {
            *dv += fault * sv;
        }
    }
    if need_beta {
        let dst = slot(grads, beta, d);
        for (dv, sv) in dst.iter_mut().zip(&dbeta) {
            *dv += fault * sv;
        }
    }
}
