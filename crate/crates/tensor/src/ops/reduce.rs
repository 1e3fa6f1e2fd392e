use crate::tape::{slot, Op, ReduceKind, Tape, Var};
use crate::tensor::{strides_of, Tensor};
use crate::{Result, TensorError};

impl Tape {
    /// Reduction over the given axes; reduced axes are dropped from the
    /// shape (a full reduction yields shape `[1]`). Max routes its gradient
    /// to the first maximal element in row-major order.
    pub fn reduce(&mut self, kind: ReduceKind, x: Var, axes: &[usize]) -> Result<Var> {
        let shape = self.shape(x).to_vec();
        let mut reduced = vec![false; shape.len()];
        for &a in axes {
            if a >= shape.len() {
                return Err(TensorError::AxisOutOfRange { axis: a, shape });
            }
            if reduced[a] {
                return Err(TensorError::DuplicateAxis { axis: a });
            }
            reduced[a] = true;
        }
        let out_shape = out_shape_of(&shape, &reduced);
        let out_numel: usize = out_shape.iter().product();
        let count: f64 = shape
            .iter()
            .zip(&reduced)
            .filter(|(_, r)| **r)
            .map(|(s, _)| *s as f64)
            .product();

        let xd = self.value(x).data();
        let map = OutMap::new(&shape, &reduced);
        let mut data = match kind {
            ReduceKind::Max => vec![f64::NEG_INFINITY; out_numel],
            _ => vec![0.0; out_numel],
        };
        for (idx, v) in xd.iter().enumerate() {
            let o = map.out_index(idx);
            match kind {
                ReduceKind::Sum | ReduceKind::Mean => data[o] += v,
                // Strict > keeps the first (lowest-index) winner on ties.
                ReduceKind::Max => {
                    if *v > data[o] {
                        data[o] = *v;
                    }
                }
            }
        }
        if kind == ReduceKind::Mean {
            for v in &mut data {
                *v /= count;
            }
        }
        let out = Tensor::new(out_shape, data)?;
        let requires = self.requires(x);
        Ok(self.push(
            out,
            Op::Reduce {
                x,
                kind,
                axes: axes.to_vec(),
            },
            requires,
        ))
    }

    pub fn sum_axes(&mut self, x: Var, axes: &[usize]) -> Result<Var> {
        self.reduce(ReduceKind::Sum, x, axes)
    }

    pub fn mean_axes(&mut self, x: Var, axes: &[usize]) -> Result<Var> {
        self.reduce(ReduceKind::Mean, x, axes)
    }

    pub fn max_axes(&mut self, x: Var, axes: &[usize]) -> Result<Var> {
        self.reduce(ReduceKind::Max, x, axes)
    }

    /// Full reduction to a scalar of shape `[1]`.
    pub fn sum_all(&mut self, x: Var) -> Result<Var> {
        let axes: Vec<usize> = (0..self.shape(x).len()).collect();
        self.reduce(ReduceKind::Sum, x, &axes)
    }

    pub fn mean_all(&mut self, x: Var) -> Result<Var> {
        let axes: Vec<usize> = (0..self.shape(x).len()).collect();
        self.reduce(ReduceKind::Mean, x, &axes)
    }
}

fn out_shape_of(shape: &[usize], reduced: &[bool]) -> Vec<usize> {
    let kept: Vec<usize> = shape
        .iter()
        .zip(reduced)
        .filter(|(_, r)| !**r)
        .map(|(s, _)| *s)
        .collect();
    if kept.is_empty() {
        vec![1]
    } else {
        kept
    }
}

/// Maps input flat indices to output flat indices for a reduction.
struct OutMap {
    in_strides: Vec<usize>,
    out_strides_by_dim: Vec<usize>, // 0 for reduced dims
    shape: Vec<usize>,
}

impl OutMap {
    fn new(shape: &[usize], reduced: &[bool]) -> Self {
        let out_shape = out_shape_of(shape, reduced);
        let out_strides = strides_of(&out_shape);
        let mut out_strides_by_dim = vec![0usize; shape.len()];
        let mut k = 0;
        for (d, r) in reduced.iter().enumerate() {
            if !r {
                out_strides_by_dim[d] = out_strides[k];
                k += 1;
            }
        }
        Self {
            in_strides: strides_of(shape),
            out_strides_by_dim,
            shape: shape.to_vec(),
        }
    }

    fn out_index(&self, idx: usize) -> usize {
        let mut rem = idx;
        let mut o = 0;
        for d in 0..self.shape.len() {
            let coord = rem / self.in_strides[d];
            rem %= self.in_strides[d];
            o += coord * self.out_strides_by_dim[d];
        }
        o
    }
}

pub(crate) fn backward_reduce(
    tape: &Tape,
    x: Var,
    kind: ReduceKind,
    axes: &[usize],
    g: &[f64],
    fault: f64,
    grads: &mut [Option<Vec<f64>>],
) {
    if !tape.requires(x) {
        return;
    }
    let shape = tape.shape(x).to_vec();
    let mut reduced = vec![false; shape.len()];
    for &a in axes {
        reduced[a] = true;
    }
    let count: f64 = shape
        .iter()
        .zip(&reduced)
        .filter(|(_, r)| **r)
        .map(|(s, _)| *s as f64)
        .product();
    let map = OutMap::new(&shape, &reduced);
    let xd = tape.value(x).data();

    match kind {
        ReduceKind::Sum => {
            let dst = slot(grads, x, xd.len());
            for (idx, d) in dst.iter_mut().enumerate() {
                *d += fault * g[map.out_index(idx)];
            }
        }
        ReduceKind::Mean => {
            let dst = slot(grads, x, xd.len());
            for (idx, d) in dst.iter_mut().enumerate() {
                *d += fault * g[map.out_index(idx)] / count;
            }
        }
        ReduceKind::Max => {
            // Recompute the winning (first maximal) index per output cell.
            let out_numel = g.len();
            let mut best = vec![f64::NEG_INFINITY; out_numel];
            let mut winner = vec![usize::MAX; out_numel];
            for (idx, v) in xd.iter().enumerate() {
                let o = map.out_index(idx);
                if *v > best[o] {
                    best[o] = *v;
                    winner[o] = idx;
                }
            }
            let dst = slot(grads, x, xd.len());
            for (o, &w) in winner.iter().enumerate() {
                dst[w] += fault * g[o];
            }
        }
    }
}
