use crate::tape::{slot, Op, Tape, Var};
use crate::tensor::Tensor;
use crate::{Result, TensorError};

struct ConvGeom {
    nb: usize,
    cin: usize,
    h: usize,
    w: usize,
    cout: usize,
    k: usize,
    hout: usize,
    wout: usize,
}

fn geometry(tape: &Tape, x: Var, w: Var, bias: Var, stride: usize, pad: usize) -> Result<ConvGeom> {
    let xs = tape.shape(x).to_vec();
    let ws = tape.shape(w).to_vec();
    let err = |reason: &str| TensorError::ConvGeometry {
        input: xs.clone(),
        weight: ws.clone(),
        stride,
        pad,
        reason: reason.to_string(),
    };
    if xs.len() != 4 || ws.len() != 4 {
        return Err(err("expected NCHW input and OIKK weight"));
    }
    let (nb, cin, h, w_) = (xs[0], xs[1], xs[2], xs[3]);
    let (cout, wcin, kh, kw) = (ws[0], ws[1], ws[2], ws[3]);
    if wcin != cin {
        return Err(err("weight input channels do not match input"));
    }
    if kh != kw || kh % 2 == 0 {
        return Err(err("kernel must be square with odd side"));
    }
    if stride == 0 {
        return Err(err("stride must be positive"));
    }
    if tape.shape(bias) != [cout] {
        return Err(err("bias must have one entry per output channel"));
    }
    let k = kh;
    if h + 2 * pad < k || w_ + 2 * pad < k {
        return Err(err("kernel does not fit the padded input"));
    }
    // Floor semantics: a trailing partial stride window is dropped. An odd
    // kernel at stride 2 can never tile an even side exactly, so the
    // halving stages of strided extractors depend on this convention.
    Ok(ConvGeom {
        nb,
        cin,
        h,
        w: w_,
        cout,
        k,
        hout: (h + 2 * pad - k) / stride + 1,
        wout: (w_ + 2 * pad - k) / stride + 1,
    })
}

impl Tape {
    /// 2-D cross-correlation with zero padding.
    ///
    /// `x: [N,C,H,W]`, `w: [O,C,k,k]` (square odd kernel), `bias: [O]`.
    pub fn conv2d(&mut self, x: Var, w: Var, bias: Var, stride: usize, pad: usize) -> Result<Var> {
        let gm = geometry(self, x, w, bias, stride, pad)?;
        let xd = self.value(x).data();
        let wd = self.value(w).data();
        let bd = self.value(bias).data();
        let mut out = vec![0.0; gm.nb * gm.cout * gm.hout * gm.wout];

        let plane = gm.h * gm.w;
        let kk = gm.k * gm.k;
        for n in 0..gm.nb {
            let xn = &xd[n * gm.cin * plane..(n + 1) * gm.cin * plane];
            for o in 0..gm.cout {
                let wo = &wd[o * gm.cin * kk..(o + 1) * gm.cin * kk];
                let on = &mut out[(n * gm.cout + o) * gm.hout * gm.wout..][..gm.hout * gm.wout];
                for oy in 0..gm.hout {
                    let iy0 = (oy * stride) as isize - pad as isize;
                    let (u_lo, u_hi) = kernel_range(iy0, gm.k, gm.h);
                    for ox in 0..gm.wout {
                        let ix0 = (ox * stride) as isize - pad as isize;
                        let (v_lo, v_hi) = kernel_range(ix0, gm.k, gm.w);
                        let mut acc = bd[o];
                        for c in 0..gm.cin {
                            let xc = &xn[c * plane..(c + 1) * plane];
                            let wc = &wo[c * kk..(c + 1) * kk];
                            for u in u_lo..u_hi {
                                let iy = (iy0 + u as isize) as usize;
                                let xrow = &xc[iy * gm.w..];
                                let wrow = &wc[u * gm.k..];
                                let ix_lo = (ix0 + v_lo as isize) as usize;
                                for (xv, wv) in xrow[ix_lo..ix_lo + (v_hi - v_lo)]
                                    .iter()
                                    .zip(&wrow[v_lo..v_hi])
                                {
                                    acc += xv * wv;
                                }
                            }
                        }
                        on[oy * gm.wout + ox] = acc;
                    }
                }
            }
        }
        let t = Tensor::new(vec![gm.nb, gm.cout, gm.hout, gm.wout], out)?;
        let requires = self.any_requires(&[x, w, bias]);
        Ok(self.push(
            t,
            Op::Conv2d {
                x,
                w,
                bias,
                stride,
                pad,
            },
            requires,
        ))
    }
}

/// Valid kernel offsets so that `base + offset` stays inside `[0, size)`.
fn kernel_range(base: isize, k: usize, size: usize) -> (usize, usize) {
    let lo = (-base).max(0) as usize;
    let hi = ((size as isize - base).max(0) as usize).min(k);
    (lo.min(hi), hi)
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_conv2d(
    tape: &Tape,
    x: Var,
    w: Var,
    bias: Var,
    stride: usize,
    pad: usize,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    let gm = geometry(tape, x, w, bias, stride, pad).expect("geometry re-check");
    let xd = tape.value(x).data();
    let wd = tape.value(w).data();
    let plane = gm.h * gm.w;
    let kk = gm.k * gm.k;
    let oplane = gm.hout * gm.wout;

    if tape.requires(bias) {
        let db = slot(grads, bias, gm.cout);
        for n in 0..gm.nb {
            for o in 0..gm.cout {
                let gn = &g[(n * gm.cout + o) * oplane..][..oplane];
                db[o] += fault * gn.iter().sum::<f64>();
            }
        }
    }

    let need_x = tape.requires(x);
    let need_w = tape.requires(w);
    if !need_x && !need_w {
        return;
    }

    // Two passes share the loop structure; keeping them separate avoids
    // holding two mutable gradient slots at once.
    if need_w {
        let dw = slot(grads, w, gm.cout * gm.cin * kk);
        for n in 0..gm.nb {
            let xn = &xd[n * gm.cin * plane..(n + 1) * gm.cin * plane];
            for o in 0..gm.cout {
                let dwo = &mut dw[o * gm.cin * kk..(o + 1) * gm.cin * kk];
                let gn = &g[(n * gm.cout + o) * oplane..][..oplane];
                for oy in 0..gm.hout {
                    let iy0 = (oy * stride) as isize - pad as isize;
                    let (u_lo, u_hi) = kernel_range(iy0, gm.k, gm.h);
                    for ox in 0..gm.wout {
                        let gv = fault * gn[oy * gm.wout + ox];
                        if gv == 0.0 {
                            continue;
                        }
                        let ix0 = (ox * stride) as isize - pad as isize;
                        let (v_lo, v_hi) = kernel_range(ix0, gm.k, gm.w);
                        for c in 0..gm.cin {
                            let xc = &xn[c * plane..(c + 1) * plane];
                            let dwc = &mut dwo[c * kk..(c + 1) * kk];
                            for u in u_lo..u_hi {
                                let iy = (iy0 + u as isize) as usize;
                                let xrow = &xc[iy * gm.w..];
                                let ix_lo = (ix0 + v_lo as isize) as usize;
                                let dwrow = &mut dwc[u * gm.k + v_lo..u * gm.k + v_hi];
                                for (dwv, xv) in
                                    dwrow.iter_mut().zip(&xrow[ix_lo..ix_lo + (v_hi - v_lo)])
                                {
                                    *dwv += gv * xv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    if need_x {
        let dx = slot(grads, x, gm.nb * gm.cin * plane);
        for n in 0..gm.nb {
            let dxn = &mut dx[n * gm.cin * plane..(n + 1) * gm.cin * plane];
            for o in 0..gm.cout {
                let wo = &wd[o * gm.cin * kk..(o + 1) * gm.cin * kk];
                let gn = &g[(n * gm.cout + o) * oplane..][..oplane];
                for oy in 0..gm.hout {
                    let iy0 = (oy * stride) as isize - pad as isize;
                    let (u_lo, u_hi) = kernel_range(iy0, gm.k, gm.h);
                    for ox in 0..gm.wout {
                        let gv = fault * gn[oy * gm.wout + ox];
                        if gv == 0.0 {
                            continue;
                        }
                        let ix0 = (ox * stride) as isize - pad as isize;
                        let (v_lo, v_hi) = kernel_range(ix0, gm.k, gm.w);
                        for c in 0..gm.cin {
                            let dxc = &mut dxn[c * plane..(c + 1) * plane];
                            let wc = &wo[c * kk..(c + 1) * kk];
                            for u in u_lo..u_hi {
                                let iy = (iy0 + u as isize) as usize;
                                let ix_lo = (ix0 + v_lo as isize) as usize;
                                let dxrow = &mut dxc[iy * gm.w + ix_lo..iy * gm.w + ix_lo + (v_hi - v_lo)];
                                let wrow = &wc[u * gm.k + v_lo..u * gm.k + v_hi];
                                for (dxv, wv) in dxrow.iter_mut().zip(wrow) {
                                    *dxv += gv * wv;
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
