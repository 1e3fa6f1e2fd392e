use crate::tape::{slot, Op, Tape, Var};
use crate::tensor::Tensor;
use crate::{Result, TensorError};

fn nchw(tape: &Tape, x: Var) -> Result<(usize, usize, usize, usize)> {
    let s = tape.shape(x);
    if s.len() != 4 {
        return Err(TensorError::ResizeUnsupported {
            from: s.to_vec(),
            to: vec![],
            reason: "resize expects NCHW".into(),
        });
    }
    Ok((s[0], s[1], s[2], s[3]))
}

/// Source coordinate and lerp weight for one output index under the
/// align-corners=false convention.
fn bilinear_coeff(out_i: usize, in_len: usize, out_len: usize) -> (usize, usize, f64) {
    let scale = in_len as f64 / out_len as f64;
    let src = (out_i as f64 + 0.5) * scale - 0.5;
    let floor = src.floor();
    let frac = src - floor;
    let i0 = (floor as isize).clamp(0, in_len as isize - 1) as usize;
    let i1 = (floor as isize + 1).clamp(0, in_len as isize - 1) as usize;
    (i0, i1, frac)
}

impl Tape {
    /// Bilinear upsampling (align-corners=false) to `(h, w)`, which must be
    /// at least the current size. Constant maps are preserved exactly.
    pub fn bilinear_up(&mut self, x: Var, target: (usize, usize)) -> Result<Var> {
        let (nb, c, h, w) = nchw(self, x)?;
        let (th, tw) = target;
        if th < h || tw < w || th == 0 || tw == 0 {
            return Err(TensorError::ResizeUnsupported {
                from: self.shape(x).to_vec(),
                to: vec![th, tw],
                reason: "bilinear_up target must not shrink".into(),
            });
        }
        let xd = self.value(x).data();
        let mut data = vec![0.0; nb * c * th * tw];
        let ys: Vec<(usize, usize, f64)> = (0..th).map(|i| bilinear_coeff(i, h, th)).collect();
        let xs: Vec<(usize, usize, f64)> = (0..tw).map(|i| bilinear_coeff(i, w, tw)).collect();
        for p in 0..nb * c {
            let src = &xd[p * h * w..(p + 1) * h * w];
            let dst = &mut data[p * th * tw..(p + 1) * th * tw];
            for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
                let r0 = &src[y0 * w..y0 * w + w];
                let r1 = &src[y1 * w..y1 * w + w];
                let drow = &mut dst[oy * tw..(oy + 1) * tw];
                for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                    // Lerp form keeps constant maps bit-exact.
                    let top = r0[x0] + fx * (r0[x1] - r0[x0]);
                    let bot = r1[x0] + fx * (r1[x1] - r1[x0]);
                    drow[ox] = top + fy * (bot - top);
                }
            }
        }
        let out = Tensor::new(vec![nb, c, th, tw], data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::BilinearUp(x), requires))
    }

    /// Average-pool downsampling with kernel == stride; the current size
    /// must be divisible by the target.
    pub fn avg_down(&mut self, x: Var, target: (usize, usize)) -> Result<Var> {
        let (nb, c, h, w) = nchw(self, x)?;
        let (th, tw) = target;
        if th == 0 || tw == 0 || h % th != 0 || w % tw != 0 {
            return Err(TensorError::ResizeUnsupported {
                from: self.shape(x).to_vec(),
                to: vec![th, tw],
                reason: "avg_down target must divide input size".into(),
            });
        }
        let (kh, kw) = (h / th, w / tw);
        let inv = 1.0 / (kh * kw) as f64;
        let xd = self.value(x).data();
        let mut data = vec![0.0; nb * c * th * tw];
        for p in 0..nb * c {
            let src = &xd[p * h * w..(p + 1) * h * w];
            let dst = &mut data[p * th * tw..(p + 1) * th * tw];
            for oy in 0..th {
                for ox in 0..tw {
                    let mut acc = 0.0;
                    for u in 0..kh {
                        let row = &src[(oy * kh + u) * w + ox * kw..][..kw];
                        acc += row.iter().sum::<f64>();
                    }
                    dst[oy * tw + ox] = acc * inv;
                }
            }
        }
        let out = Tensor::new(vec![nb, c, th, tw], data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::AvgDown { x, kh, kw }, requires))
    }

    /// Bilinear resize to `(h, w)` when growing, identity when equal.
    pub fn up_to(&mut self, x: Var, target: (usize, usize)) -> Result<Var> {
        let (_, _, h, w) = nchw(self, x)?;
        if (h, w) == target {
            // Explicit node keeps backward uniform.
            let shape = self.shape(x).to_vec();
            return self.reshape(x, shape);
        }
        self.bilinear_up(x, target)
    }
}

pub(crate) fn backward_bilinear_up(
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
    let (nb, c, h, w) = nchw(tape, x).expect("checked in forward");
    let os = tape.nodes[node].value.shape();
    let (th, tw) = (os[2], os[3]);
    let ys: Vec<(usize, usize, f64)> = (0..th).map(|i| bilinear_coeff(i, h, th)).collect();
    let xs: Vec<(usize, usize, f64)> = (0..tw).map(|i| bilinear_coeff(i, w, tw)).collect();
    let dst = slot(grads, x, nb * c * h * w);
    for p in 0..nb * c {
        let dsrc = &mut dst[p * h * w..(p + 1) * h * w];
        let grow = &g[p * th * tw..(p + 1) * th * tw];
        for (oy, &(y0, y1, fy)) in ys.iter().enumerate() {
            for (ox, &(x0, x1, fx)) in xs.iter().enumerate() {
                let gv = fault * grow[oy * tw + ox];
                dsrc[y0 * w + x0] += gv * (1.0 - fy) * (1.0 - fx);
                dsrc[y0 * w + x1] += gv * (1.0 - fy) * fx;
                dsrc[y1 * w + x0] += gv * fy * (1.0 - fx);
                dsrc[y1 * w + x1] += gv * fy * fx;
            }
        }
    }
}

pub(crate) fn backward_avg_down(
    tape: &Tape,
    x: Var,
    kh: usize,
    kw: usize,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if !tape.requires(x) {
        return;
    }
    let (nb, c, h, w) = nchw(tape, x).expect("checked in forward");
    let (th, tw) = (h / kh, w / kw);
    let inv = fault / (kh * kw) as f64;
    let dst = slot(grads, x, nb * c * h * w);
    for p in 0..nb * c {
        let dsrc = &mut dst[p * h * w..(p + 1) * h * w];
        let grow = &g[p * th * tw..(p + 1) * th * tw];
        for oy in 0..th {
            for ox in 0..tw {
                let gv = grow[oy * tw + ox] * inv;
                for u in 0..kh {
                    let row = &mut dsrc[(oy * kh + u) * w + ox * kw..][..kw];
                    for d in row {
                        *d += gv;
                    }
                }
            }
        }
    }
}
