use crate::ops;
use crate::tensor::Tensor;
use crate::{Result, TensorError};

/// Handle to a value recorded on a [`Tape`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(pub(crate) usize);

/// Reduction flavours for [`Tape::reduce`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceKind {
    Sum,
    Mean,
    Max,
}

/// Fieldless operation tag, used for diagnostics and fault injection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OpKind {
    Leaf,
    Add,
    Mul,
    Affine,
    Recip,
    Ln,
    Clamp,
    Relu,
    Sigmoid,
    Softmax,
    LayerNorm,
    Matmul,
    Bmm,
    Conv2d,
    Reshape,
    Permute,
    Repeat,
    Concat,
    Reduce,
    BilinearUp,
    AvgDown,
}

impl std::fmt::Display for OpKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

#[derive(Debug, Clone)]
pub(crate) enum Op {
    Leaf,
    Add(Var, Var),
    Mul(Var, Var),
    Affine { x: Var, scale: f64 },
    Recip(Var),
    Ln(Var),
    Clamp { x: Var, lo: f64, hi: f64 },
    Relu(Var),
    Sigmoid(Var),
    Softmax { x: Var, axis: usize },
    LayerNorm { x: Var, gamma: Var, beta: Var, eps: f64 },
    Matmul { a: Var, b: Var },
    Bmm { a: Var, b: Var },
    Conv2d { x: Var, w: Var, bias: Var, stride: usize, pad: usize },
    Reshape(Var),
    Permute { x: Var, perm: Vec<usize> },
    Repeat(Var),
    Concat { parts: Vec<Var>, axis: usize },
    Reduce { x: Var, kind: ReduceKind, axes: Vec<usize> },
    BilinearUp(Var),
    AvgDown { x: Var, kh: usize, kw: usize },
}

impl Op {
    pub(crate) fn kind(&self) -> OpKind {
        match self {
            Op::Leaf => OpKind::Leaf,
            Op::Add(..) => OpKind::Add,
            Op::Mul(..) => OpKind::Mul,
            Op::Affine { .. } => OpKind::Affine,
            Op::Recip(..) => OpKind::Recip,
            Op::Ln(..) => OpKind::Ln,
            Op::Clamp { .. } => OpKind::Clamp,
            Op::Relu(..) => OpKind::Relu,
            Op::Sigmoid(..) => OpKind::Sigmoid,
            Op::Softmax { .. } => OpKind::Softmax,
            Op::LayerNorm { .. } => OpKind::LayerNorm,
            Op::Matmul { .. } => OpKind::Matmul,
            Op::Bmm { .. } => OpKind::Bmm,
            Op::Conv2d { .. } => OpKind::Conv2d,
            Op::Reshape(..) => OpKind::Reshape,
            Op::Permute { .. } => OpKind::Permute,
            Op::Repeat(..) => OpKind::Repeat,
            Op::Concat { .. } => OpKind::Concat,
            Op::Reduce { .. } => OpKind::Reduce,
            Op::BilinearUp(..) => OpKind::BilinearUp,
            Op::AvgDown { .. } => OpKind::AvgDown,
        }
    }

    fn inputs(&self) -> Vec<Var> {
        match self {
            Op::Leaf => vec![],
            Op::Add(a, b) | Op::Mul(a, b) => vec![*a, *b],
            Op::Affine { x, .. }
            | Op::Recip(x)
            | Op::Ln(x)
            | Op::Clamp { x, .. }
            | Op::Relu(x)
            | Op::Sigmoid(x)
            | Op::Softmax { x, .. }
            | Op::Reshape(x)
            | Op::Permute { x, .. }
            | Op::Repeat(x)
            | Op::Reduce { x, .. }
            | Op::BilinearUp(x)
            | Op::AvgDown { x, .. } => vec![*x],
            Op::LayerNorm { x, gamma, beta, .. } => vec![*x, *gamma, *beta],
            Op::Matmul { a, b } | Op::Bmm { a, b } => vec![*a, *b],
            Op::Conv2d { x, w, bias, .. } => vec![*x, *w, *bias],
            Op::Concat { parts, .. } => parts.clone(),
        }
    }
}

pub(crate) struct Node {
    pub value: Tensor,
    pub op: Op,
    pub requires: bool,
}

/// Ordered record of executed operations over one forward evaluation.
///
/// Intended to live on a single thread; [`Tape::backward`] consumes the
/// record (no further ops or second backward afterwards) and leaves
/// accumulated gradients on every grad-requiring node.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: Vec<Node>,
    consumed: bool,
    faults: Vec<(OpKind, f64)>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Records `tensor` as a leaf; gradient tracking follows the tensor's
    /// own `requires_grad` flag.
    pub fn leaf(&mut self, tensor: Tensor) -> Var {
        let requires = tensor.is_grad_required();
        self.push(tensor, Op::Leaf, requires)
    }

    /// Records a leaf that never tracks gradients.
    pub fn constant(&mut self, tensor: Tensor) -> Var {
        self.push(tensor.requires_grad(false), Op::Leaf, false)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    /// Gradient of a node, present only after [`Tape::backward`].
    pub fn grad(&self, v: Var) -> Option<&[f64]> {
        self.nodes[v.0].value.grad()
    }

    /// First node (in execution order) holding a non-finite value, if any.
    pub fn first_nonfinite(&self) -> Option<(usize, OpKind)> {
        self.nodes
            .iter()
            .enumerate()
            .find(|(_, n)| !n.value.is_finite())
            .map(|(i, n)| (i, n.op.kind()))
    }

    /// Scales the gradient contributions of every op of the given kind
    /// during backward. Test hook for negative-control checks; a factor of
    /// 1.0 is a no-op.
    #[doc(hidden)]
    pub fn inject_backward_fault(&mut self, kind: OpKind, factor: f64) {
        self.faults.push((kind, factor));
    }

    pub(crate) fn push(&mut self, value: Tensor, op: Op, requires: bool) -> Var {
        // Forward ops on finite inputs must stay finite. Leaves are caller
        // data, and non-finite inputs may propagate, so divergence
        // diagnostics can still walk the whole tape.
        #[cfg(debug_assertions)]
        if !value.is_finite() && !matches!(op, Op::Leaf) {
            let inputs_finite = op
                .inputs()
                .iter()
                .all(|v| self.nodes[v.0].value.is_finite());
            debug_assert!(
                !inputs_finite,
                "non-finite output from {} on finite inputs",
                op.kind()
            );
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            value: value.requires_grad(requires),
            op,
            requires,
        });
        Var(id)
    }

    pub(crate) fn requires(&self, v: Var) -> bool {
        self.nodes[v.0].requires
    }

    pub(crate) fn any_requires(&self, vars: &[Var]) -> bool {
        vars.iter().any(|v| self.requires(*v))
    }

    fn fault_factor(&self, kind: OpKind) -> f64 {
        self.faults
            .iter()
            .filter(|(k, _)| *k == kind)
            .map(|(_, f)| *f)
            .product()
    }

    /// Reverse pass from a scalar loss. Every grad-requiring node reachable
    /// from `loss` receives its accumulated gradient; the tape is consumed.
    pub fn backward(&mut self, loss: Var) -> Result<()> {
        if self.consumed {
            return Err(TensorError::TapeConsumed);
        }
        let loss_shape = self.nodes[loss.0].value.shape().to_vec();
        if self.nodes[loss.0].value.numel() != 1 {
            return Err(TensorError::NonScalarLoss { shape: loss_shape });
        }
        self.consumed = true;

        let mut grads: Vec<Option<Vec<f64>>> = (0..self.nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(vec![1.0]);

        for i in (0..=loss.0).rev() {
            if !self.nodes[i].requires {
                grads[i] = None;
                continue;
            }
            let Some(g) = grads[i].take() else {
                continue;
            };
            let fault = self.fault_factor(self.nodes[i].op.kind());
            self.backprop_node(i, &g, fault, &mut grads)?;
            self.nodes[i].value.set_grad(g);
        }
        Ok(())
    }

    fn backprop_node(
        &self,
        i: usize,
        g: &[f64],
        fault: f64,
        grads: &mut [Option<Vec<f64>>],
    ) -> Result<()> {
        let op = &self.nodes[i].op;
        match op {
            Op::Leaf => {}
            Op::Add(a, b) => ops::elementwise::backward_add(self, *a, *b, g, fault, grads),
            Op::Mul(a, b) => ops::elementwise::backward_mul(self, *a, *b, g, fault, grads),
            Op::Affine { x, scale } => {
                ops::elementwise::backward_affine(self, *x, *scale, g, fault, grads)
            }
            Op::Recip(x) => ops::elementwise::backward_recip(self, i, *x, g, fault, grads),
            Op::Ln(x) => ops::elementwise::backward_ln(self, *x, g, fault, grads),
            Op::Clamp { x, lo, hi } => {
                ops::elementwise::backward_clamp(self, *x, *lo, *hi, g, fault, grads)
            }
            Op::Relu(x) => ops::nn::backward_relu(self, *x, g, fault, grads),
            Op::Sigmoid(x) => ops::nn::backward_sigmoid(self, i, *x, g, fault, grads),
            Op::Softmax { x, axis } => ops::nn::backward_softmax(self, i, *x, *axis, g, fault, grads),
            Op::LayerNorm { x, gamma, beta, eps } => {
                ops::nn::backward_layer_norm(self, *x, *gamma, *beta, *eps, g, fault, grads)
            }
            Op::Matmul { a, b } => ops::matmul::backward_matmul(self, *a, *b, g, fault, grads),
            Op::Bmm { a, b } => ops::matmul::backward_bmm(self, *a, *b, g, fault, grads),
            Op::Conv2d {
                x,
                w,
                bias,
                stride,
                pad,
            } => ops::conv::backward_conv2d(self, *x, *w, *bias, *stride, *pad, g, fault, grads),
            Op::Reshape(x) => ops::shape::backward_reshape(self, *x, g, fault, grads),
            Op::Permute { x, perm } => ops::shape::backward_permute(self, *x, perm, g, fault, grads),
            Op::Repeat(x) => ops::shape::backward_repeat(self, i, *x, g, fault, grads),
            Op::Concat { parts, axis } => {
                ops::shape::backward_concat(self, parts, *axis, g, fault, grads)
            }
            Op::Reduce { x, kind, axes } => {
                ops::reduce::backward_reduce(self, *x, *kind, axes, g, fault, grads)
            }
            Op::BilinearUp(x) => ops::resize::backward_bilinear_up(self, i, *x, g, fault, grads),
            Op::AvgDown { x, kh, kw } => {
                ops::resize::backward_avg_down(self, *x, *kh, *kw, g, fault, grads)
            }
        }
        Ok(())
    }
}

/// Accumulation slot for a node's gradient, zero-initialised on first use.
pub(crate) fn slot<'a>(
    grads: &'a mut [Option<Vec<f64>>],
    v: Var,
    numel: usize,
) -> &'a mut [f64] {
    grads[v.0].get_or_insert_with(|| vec![0.0; numel])
}
