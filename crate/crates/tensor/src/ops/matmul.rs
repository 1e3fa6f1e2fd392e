use crate::tape::{slot, Op, Tape, Var};
use crate::tensor::Tensor;
use crate::{Result, TensorError};

/// `c += a[m,k] * b[k,n]`, row-major.
fn matmul_acc(a: &[f64], b: &[f64], c: &mut [f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let crow = &mut c[i * n..(i + 1) * n];
        for (p, &aip) in arow.iter().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            for (cj, bj) in crow.iter_mut().zip(brow) {
                *cj += aip * bj;
            }
        }
    }
}

/// `da += g[m,n] * b[k,n]^T`.
fn grad_lhs(g: &[f64], b: &[f64], da: &mut [f64], m: usize, k: usize, n: usize, fault: f64) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        let darow = &mut da[i * k..(i + 1) * k];
        for (p, dap) in darow.iter_mut().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            let mut acc = 0.0;
            for (gj, bj) in grow.iter().zip(brow) {
                acc += gj * bj;
            }
            *dap += fault * acc;
        }
    }
}

/// `db += a[m,k]^T * g[m,n]`.
fn grad_rhs(a: &[f64], g: &[f64], db: &mut [f64], m: usize, k: usize, n: usize, fault: f64) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let grow = &g[i * n..(i + 1) * n];
        for (p, &aip) in arow.iter().enumerate() {
            let dbrow = &mut db[p * n..(p + 1) * n];
            let f = fault * aip;
            for (dbj, gj) in dbrow.iter_mut().zip(grow) {
                *dbj += f * gj;
            }
        }
    }
}

impl Tape {
    /// 2-D matrix product `[m,k] x [k,n] -> [m,n]`.
    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(TensorError::MatmulMismatch { lhs: sa, rhs: sb });
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut data = vec![0.0; m * n];
        matmul_acc(self.value(a).data(), self.value(b).data(), &mut data, m, k, n);
        let out = Tensor::new(vec![m, n], data)?;
        let requires = self.any_requires(&[a, b]);
        Ok(self.push(out, Op::Matmul { a, b }, requires))
    }

    /// Batched matrix product `[B,m,k] x [B,k,n] -> [B,m,n]`.
    pub fn bmm(&mut self, a: Var, b: Var) -> Result<Var> {
        let (sa, sb) = (self.shape(a).to_vec(), self.shape(b).to_vec());
        if sa.len() != 3 || sb.len() != 3 || sa[0] != sb[0] || sa[2] != sb[1] {
            return Err(TensorError::MatmulMismatch { lhs: sa, rhs: sb });
        }
        let (batch, m, k, n) = (sa[0], sa[1], sa[2], sb[2]);
        let mut data = vec![0.0; batch * m * n];
        let (av, bv) = (self.value(a).data(), self.value(b).data());
        for t in 0..batch {
            matmul_acc(
                &av[t * m * k..(t + 1) * m * k],
                &bv[t * k * n..(t + 1) * k * n],
                &mut data[t * m * n..(t + 1) * m * n],
                m,
                k,
                n,
            );
        }
        let out = Tensor::new(vec![batch, m, n], data)?;
        let requires = self.any_requires(&[a, b]);
        Ok(self.push(out, Op::Bmm { a, b }, requires))
    }
}

pub(crate) fn backward_matmul(
    tape: &Tape,
    a: Var,
    b: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    let (m, k) = (tape.shape(a)[0], tape.shape(a)[1]);
    let n = tape.shape(b)[1];
    if tape.requires(a) {
        let bv = tape.value(b).data();
        let da = slot(grads, a, m * k);
        grad_lhs(g, bv, da, m, k, n, fault);
    }
    if tape.requires(b) {
        let av = tape.value(a).data();
        let db = slot(grads, b, k * n);
        grad_rhs(av, g, db, m, k, n, fault);
    }
}

pub(crate) fn backward_bmm(
    tape: &Tape,
    a: Var,
    b: Var,
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    let (batch, m, k) = (tape.shape(a)[0], tape.shape(a)[1], tape.shape(a)[2]);
    let n = tape.shape(b)[2];
    if tape.requires(a) {
        let bv = tape.value(b).data();
        let da = slot(grads, a, batch * m * k);
        for t in 0..batch {
            grad_lhs(
                &g[t * m * n..(t + 1) * m * n],
                &bv[t * k * n..(t + 1) * k * n],
                &mut da[t * m * k..(t + 1) * m * k],
                m,
                k,
                n,
                fault,
            );
        }
    }
    if tape.requires(b) {
        let av = tape.value(a).data();
        let db = slot(grads, b, batch * k * n);
        for t in 0..batch {
            grad_rhs(
                &av[t * m * k..(t + 1) * m * k],
                &g[t * m * n..(t + 1) * m * n],
                &mut db[t * k * n..(t + 1) * k * n],
                m,
                k,
                n,
                fault,
            );
        }
    }
}
