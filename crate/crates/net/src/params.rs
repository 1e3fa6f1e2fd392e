//! Named parameter storage and the per-forward binding of parameters onto
//! a tape.

use crate::{NetError, Result};
use groupsod_tensor::{Tape, Tensor, Var};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Stable handle into a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// All trainable tensors of a network, in registration order. Names are
/// hierarchical (`backbone.rgb.stage0.conv1.w`) and unique; checkpoints
/// and optimizer state key off them.
#[derive(Debug, Clone, Default)]
pub struct ParamStore {
    names: Vec<String>,
    values: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        let name = name.into();
        debug_assert!(
            !self.names.contains(&name),
            "duplicate parameter name {name}"
        );
        self.names.push(name);
        self.values.push(value);
        ParamId(self.values.len() - 1)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.values[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.values[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.values.len()).map(ParamId)
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.values.iter().map(Tensor::numel).sum()
    }

    /// Count restricted to names under the given prefix.
    pub fn scalar_count_under(&self, prefix: &str) -> usize {
        self.names
            .iter()
            .zip(&self.values)
            .filter(|(n, _)| n.starts_with(prefix))
            .map(|(_, v)| v.numel())
            .sum()
    }
}

/// Fan-in-scaled uniform init for a weight tensor.
pub(crate) fn uniform_init(rng: &mut ChaCha8Rng, shape: Vec<usize>, fan_in: usize) -> Tensor {
    let bound = 1.0 / (fan_in as f64).sqrt();
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(-bound..bound)).collect();
    Tensor::new(shape, data).expect("shape/data agree")
}

/// Convolution weights: `w [out,in,k,k]`, zero bias `[out]`.
#[derive(Debug, Clone, Copy)]
pub struct ConvParams {
    pub w: ParamId,
    pub b: ParamId,
}

pub(crate) fn conv_init(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    out_c: usize,
    in_c: usize,
    k: usize,
) -> ConvParams {
    let w = store.add(
        format!("{name}.w"),
        uniform_init(rng, vec![out_c, in_c, k, k], in_c * k * k),
    );
    let b = store.add(format!("{name}.b"), Tensor::zeros(vec![out_c]));
    ConvParams { w, b }
}

/// Dense weights: `w [in,out]`, zero bias `[out]`.
#[derive(Debug, Clone, Copy)]
pub struct LinearParams {
    pub w: ParamId,
    pub b: ParamId,
}

pub(crate) fn linear_init(
    store: &mut ParamStore,
    rng: &mut ChaCha8Rng,
    name: &str,
    in_d: usize,
    out_d: usize,
) -> LinearParams {
    let w = store.add(
        format!("{name}.w"),
        uniform_init(rng, vec![in_d, out_d], in_d),
    );
    let b = store.add(format!("{name}.b"), Tensor::zeros(vec![out_d]));
    LinearParams { w, b }
}

/// One forward evaluation: owns the tape and lazily binds parameters from
/// the store as leaves (grad-tracking when `train` is set).
pub struct Forward<'s> {
    pub tape: Tape,
    store: &'s ParamStore,
    bound: Vec<Option<Var>>,
    train: bool,
}

impl<'s> Forward<'s> {
    pub fn new(store: &'s ParamStore, train: bool) -> Self {
        Self {
            tape: Tape::new(),
            store,
            bound: vec![None; store.len()],
            train,
        }
    }

    /// Tape var of a parameter, bound on first use.
    pub fn param(&mut self, id: ParamId) -> Var {
        if let Some(v) = self.bound[id.0] {
            return v;
        }
        let v = self
            .tape
            .leaf(self.store.get(id).clone().requires_grad(self.train));
        self.bound[id.0] = Some(v);
        v
    }

    /// Non-trainable input leaf.
    pub fn input(&mut self, t: Tensor) -> Var {
        self.tape.constant(t)
    }

    /// Grad-tracking input leaf (for checks against the modal inputs).
    pub fn input_grad(&mut self, t: Tensor) -> Var {
        self.tape.leaf(t.requires_grad(true))
    }

    /// Gradient of a parameter after backward; `None` when the parameter
    /// was never bound in this forward.
    pub fn grad_of(&self, id: ParamId) -> Option<&[f64]> {
        self.bound[id.0].and_then(|v| self.tape.grad(v))
    }

    pub fn var_of(&self, id: ParamId) -> Option<Var> {
        self.bound[id.0]
    }

    /// Gradients for every parameter, in store order.
    pub fn all_grads(&self) -> Result<Vec<Vec<f64>>> {
        self.store
            .ids()
            .map(|id| {
                self.grad_of(id)
                    .map(|g| g.to_vec())
                    .ok_or_else(|| NetError::MissingGrad {
                        name: self.store.name(id).to_string(),
                    })
            })
            .collect()
    }
}

/// conv + bias (+ optional relu), the standard fusion block.
pub(crate) fn conv_block(
    fw: &mut Forward,
    x: Var,
    p: &ConvParams,
    stride: usize,
    pad: usize,
    relu: bool,
) -> Result<Var> {
    let w = fw.param(p.w);
    let b = fw.param(p.b);
    let y = fw.tape.conv2d(x, w, b, stride, pad)?;
    Ok(if relu { fw.tape.relu(y)? } else { y })
}

/// `x2d [rows,in] * w [in,out] + b`, bias broadcast over rows.
pub(crate) fn linear(fw: &mut Forward, x2d: Var, p: &LinearParams) -> Result<Var> {
    let w = fw.param(p.w);
    let b = fw.param(p.b);
    let rows = fw.tape.shape(x2d)[0];
    let out_d = fw.tape.shape(w)[1];
    let y = fw.tape.matmul(x2d, w)?;
    let b_row = fw.tape.reshape(b, vec![1, out_d])?;
    let b_full = fw.tape.repeat(b_row, vec![rows, out_d])?;
    fw.tape.add(y, b_full).map_err(Into::into)
}
