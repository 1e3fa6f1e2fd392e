use crate::tape::{slot, Op, Tape, Var};
use crate::tensor::{strides_of, Tensor};
use crate::{Result, TensorError};

impl Tape {
    /// Reinterprets the row-major buffer under a new shape of equal size.
    pub fn reshape(&mut self, x: Var, new_shape: Vec<usize>) -> Result<Var> {
        let from = self.shape(x).to_vec();
        let from_len = self.value(x).numel();
        let to_len = new_shape.iter().product::<usize>();
        if from_len != to_len {
            return Err(TensorError::ReshapeMismatch {
                from,
                from_len,
                to: new_shape,
                to_len,
            });
        }
        let out = Tensor::new(new_shape, self.value(x).data().to_vec())?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Reshape(x), requires))
    }

    /// Reorders axes: output axis `d` is input axis `perm[d]`.
    pub fn permute(&mut self, x: Var, perm: Vec<usize>) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let valid = perm.len() == shape.len() && {
            let mut seen = vec![false; perm.len()];
            perm.iter().all(|&p| {
                if p < seen.len() && !seen[p] {
                    seen[p] = true;
                    true
                } else {
                    false
                }
            })
        };
        if !valid {
            return Err(TensorError::InvalidPermutation { perm, shape });
        }
        let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
        let data = permute_data(self.value(x).data(), &shape, &perm);
        let out = Tensor::new(out_shape, data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Permute { x, perm }, requires))
    }

    /// Swaps the last two axes of a 2-D or 3-D tensor.
    pub fn transpose_last2(&mut self, x: Var) -> Result<Var> {
        let rank = self.shape(x).len();
        if rank < 2 {
            return Err(TensorError::InvalidPermutation {
                perm: vec![],
                shape: self.shape(x).to_vec(),
            });
        }
        let mut perm: Vec<usize> = (0..rank).collect();
        perm.swap(rank - 1, rank - 2);
        self.permute(x, perm)
    }

    /// Explicit broadcast: every source dimension must equal the target or
    /// be 1, with matching rank. The backward pass sums over the repeated
    /// dimensions.
    pub fn repeat(&mut self, x: Var, target: Vec<usize>) -> Result<Var> {
        let src = self.shape(x).to_vec();
        let ok = src.len() == target.len()
            && src.iter().zip(&target).all(|(s, t)| *s == *t || *s == 1);
        if !ok {
            return Err(TensorError::RepeatMismatch { src, target });
        }
        let numel: usize = target.iter().product();
        let src_strides = strides_of(&src);
        let dst_strides = strides_of(&target);
        let xd = self.value(x).data();
        let mut data = vec![0.0; numel];
        for (idx, v) in data.iter_mut().enumerate() {
            let mut rem = idx;
            let mut sidx = 0;
            for d in 0..target.len() {
                let coord = rem / dst_strides[d];
                rem %= dst_strides[d];
                if src[d] != 1 {
                    sidx += coord * src_strides[d];
                }
            }
            *v = xd[sidx];
        }
        let out = Tensor::new(target, data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Repeat(x), requires))
    }

    /// Concatenates along `axis`; all other dimensions must agree.
    pub fn concat(&mut self, parts: &[Var], axis: usize) -> Result<Var> {
        let first = *parts.first().ok_or(TensorError::EmptyConcat)?;
        let base = self.shape(first).to_vec();
        if axis >= base.len() {
            return Err(TensorError::AxisOutOfRange { axis, shape: base });
        }
        let mut axis_total = 0;
        for &p in parts {
            let s = self.shape(p);
            let compatible = s.len() == base.len()
                && s.iter()
                    .zip(&base)
                    .enumerate()
                    .all(|(d, (a, b))| d == axis || *a == *b);
            if !compatible {
                return Err(TensorError::ShapeMismatch {
                    left: base.clone(),
                    right: s.to_vec(),
                });
            }
            axis_total += s[axis];
        }
        let mut out_shape = base.clone();
        out_shape[axis] = axis_total;

        let outer: usize = base[..axis].iter().product();
        let inner: usize = base[axis + 1..].iter().product();
        let mut data = vec![0.0; out_shape.iter().product()];
        let row = axis_total * inner;
        let mut offset = 0;
        for &p in parts {
            let len = self.shape(p)[axis];
            let pd = self.value(p).data();
            for o in 0..outer {
                let src = &pd[o * len * inner..(o + 1) * len * inner];
                let dst = &mut data[o * row + offset..o * row + offset + len * inner];
                dst.copy_from_slice(src);
            }
            offset += len * inner;
        }
        let out = Tensor::new(out_shape, data)?;
        let requires = self.any_requires(parts);
        Ok(self.push(
            out,
            Op::Concat {
                parts: parts.to_vec(),
                axis,
            },
            requires,
        ))
    }
}

fn permute_data(xd: &[f64], shape: &[usize], perm: &[usize]) -> Vec<f64> {
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    let in_strides = strides_of(shape);
    let out_strides = strides_of(&out_shape);
    let mut data = vec![0.0; xd.len()];
    for (idx, v) in data.iter_mut().enumerate() {
        let mut rem = idx;
        let mut sidx = 0;
        for d in 0..out_shape.len() {
            let coord = rem / out_strides[d];
            rem %= out_strides[d];
            sidx += coord * in_strides[perm[d]];
        }
        *v = xd[sidx];
    }
    data
}

pub(crate) fn backward_reshape(
    tape: &Tape,
    x: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(x) {
        let dst = slot(grads, x, g.len());
        for (d, gi) in dst.iter_mut().zip(g) {
            *d += fault * gi;
        }
    }
}

pub(crate) fn backward_permute(
    tape: &Tape,
    x: Var,
    perm: &[usize],
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if !tape.requires(x) {
        return;
    }
    let shape = tape.shape(x);
    let out_shape: Vec<usize> = perm.iter().map(|&p| shape[p]).collect();
    // Inverse permutation maps output gradients back onto input layout.
    let mut inv = vec![0usize; perm.len()];
    for (d, &p) in perm.iter().enumerate() {
        inv[p] = d;
    }
    let back = permute_data(g, &out_shape, &inv);
    let dst = slot(grads, x, back.len());
    for (d, gi) in dst.iter_mut().zip(&back) {
        *d += fault * gi;
    }
}

pub(crate) fn backward_repeat(
    tape: &Tape,
    node: usize,
    x: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if !tape.requires(x) {
        return;
    }
    let src = tape.shape(x).to_vec();
    let target = tape.nodes[node].value.shape().to_vec();
    let src_strides = strides_of(&src);
    let dst_strides = strides_of(&target);
    let dst = slot(grads, x, src.iter().product());
    for (idx, gi) in g.iter().enumerate() {
        let mut rem = idx;
        let mut sidx = 0;
        for d in 0..target.len() {
            let coord = rem / dst_strides[d];
            rem %= dst_strides[d];
            if src[d] != 1 {
                sidx += coord * src_strides[d];
            }
        }
        dst[sidx] += fault * gi;
    }
}

pub(crate) fn backward_concat(
    tape: &Tape,
    parts: &[Var],
    axis: usize,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    let base = tape.shape(parts[0]).to_vec();
    let outer: usize = base[..axis].iter().product();
    let inner: usize = base[axis + 1..].iter().product();
    let axis_total: usize = parts.iter().map(|&p| tape.shape(p)[axis]).sum();
    let row = axis_total * inner;
    let mut offset = 0;
    for &p in parts {
        let len = tape.shape(p)[axis];
        if tape.requires(p) {
            let dst = slot(grads, p, tape.value(p).numel());
            for o in 0..outer {
                let src = &g[o * row + offset..o * row + offset + len * inner];
                let drow = &mut dst[o * len * inner..(o + 1) * len * inner];
                for (d, gi) in drow.iter_mut().zip(src) {
                    *d += fault * gi;
                }
            }
        }
        offset += len * inner;
    }
}
