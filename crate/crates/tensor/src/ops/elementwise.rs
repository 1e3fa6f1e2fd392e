use crate::tape::{slot, Op, Tape, Var};
use crate::tensor::Tensor;
use crate::{Result, TensorError};

impl Tape {
    fn check_same_shape(&self, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(TensorError::ShapeMismatch {
                left: self.shape(a).to_vec(),
                right: self.shape(b).to_vec(),
            });
        }
        Ok(())
    }

    /// Element-wise sum. Shapes must match exactly; repeat/resize first.
    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same_shape(a, b)?;
        let data: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x + y)
            .collect();
        let out = Tensor::new(self.shape(a).to_vec(), data)?;
        let requires = self.any_requires(&[a, b]);
        Ok(self.push(out, Op::Add(a, b), requires))
    }

    /// Element-wise product. Shapes must match exactly.
    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.check_same_shape(a, b)?;
        let data: Vec<f64> = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(x, y)| x * y)
            .collect();
        let out = Tensor::new(self.shape(a).to_vec(), data)?;
        let requires = self.any_requires(&[a, b]);
        Ok(self.push(out, Op::Mul(a, b), requires))
    }

    /// `scale * x + shift` with compile-time constants (not tape values).
    pub fn affine(&mut self, x: Var, scale: f64, shift: f64) -> Result<Var> {
        let data: Vec<f64> = self.value(x).data().iter().map(|v| scale * v + shift).collect();
        let out = Tensor::new(self.shape(x).to_vec(), data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Affine { x, scale }, requires))
    }

    pub fn neg(&mut self, x: Var) -> Result<Var> {
        self.affine(x, -1.0, 0.0)
    }

    /// Element-wise reciprocal.
    pub fn recip(&mut self, x: Var) -> Result<Var> {
        let data: Vec<f64> = self.value(x).data().iter().map(|v| 1.0 / v).collect();
        let out = Tensor::new(self.shape(x).to_vec(), data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Recip(x), requires))
    }

    /// Element-wise natural logarithm.
    pub fn ln(&mut self, x: Var) -> Result<Var> {
        let data: Vec<f64> = self.value(x).data().iter().map(|v| v.ln()).collect();
        let out = Tensor::new(self.shape(x).to_vec(), data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Ln(x), requires))
    }

    /// Element-wise clamp into `[lo, hi]`; gradient passes through strictly
    /// inside the interval and is zero outside.
    pub fn clamp(&mut self, x: Var, lo: f64, hi: f64) -> Result<Var> {
        let data: Vec<f64> = self.value(x).data().iter().map(|v| v.clamp(lo, hi)).collect();
        let out = Tensor::new(self.shape(x).to_vec(), data)?;
        let requires = self.requires(x);
        Ok(self.push(out, Op::Clamp { x, lo, hi }, requires))
    }
}

pub(crate) fn backward_add(
    tape: &Tape,
    a: Var,
    b: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    for v in [a, b] {
        if tape.requires(v) {
            let dst = slot(grads, v, g.len());
            for (d, gi) in dst.iter_mut().zip(g) {
                *d += fault * gi;
            }
        }
    }
}

pub(crate) fn backward_mul(
    tape: &Tape,
    a: Var,
    b: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(a) {
        let bv = tape.value(b).data();
        let dst = slot(grads, a, g.len());
        for ((d, gi), bi) in dst.iter_mut().zip(g).zip(bv) {
            *d += fault * gi * bi;
        }
    }
    if tape.requires(b) {
        let av = tape.value(a).data();
        let dst = slot(grads, b, g.len());
        for ((d, gi), ai) in dst.iter_mut().zip(g).zip(av) {
            *d += fault * gi * ai;
        }
    }
}

pub(crate) fn backward_affine(
    tape: &Tape,
    x: Var,
    scale: f64,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(x) {
        let dst = slot(grads, x, g.len());
        for (d, gi) in dst.iter_mut().zip(g) {
            *d += fault * scale * gi;
        }
    }
}

pub(crate) fn backward_recip(
    tape: &Tape,
    node: usize,
    x: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(x) {
        // d(1/x)/dx = -1/x^2 = -out^2
        let out = tape.nodes[node].value.data();
        let dst = slot(grads, x, g.len());
        for ((d, gi), oi) in dst.iter_mut().zip(g).zip(out) {
            *d += fault * gi * (-oi * oi);
        }
    }
}

pub(crate) fn backward_ln(
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
            *d += fault * gi / xi;
        }
    }
}

pub(crate) fn backward_clamp(
    tape: &Tape,
    x: Var,
    lo: f64,
    hi: f64,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if tape.requires(x) {
        let xv = tape.value(x).data();
        let dst = slot(grads, x, g.len());
        for ((d, gi), xi) in dst.iter_mut().zip(g).zip(xv) {
            if *xi > lo && *xi < hi {
                *d += fault * gi;
            }
        }
    }
}
