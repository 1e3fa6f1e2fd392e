//! Central finite-difference verification of analytic gradients.

use crate::{Result, Tape, Tensor, TensorError, Var};

/// Tuning knobs for [`grad_check`].
#[derive(Debug, Clone, Copy)]
pub struct GradCheckOptions {
    /// Central-difference step; must lie in `[1e-6, 1e-3]`.
    pub eps: f64,
    /// Relative-error threshold an element must stay under.
    pub tol: f64,
    /// Input elements closer than this to 0 are pushed away before
    /// checking, so relu/max kinks at the origin cannot corrupt the
    /// difference quotient.
    pub kink_margin: f64,
}

impl GradCheckOptions {
    pub fn new(eps: f64, tol: f64) -> Self {
        Self {
            eps,
            tol,
            kink_margin: 1e-3,
        }
    }
}

/// One analytic-vs-numeric disagreement above tolerance.
#[derive(Debug, Clone)]
pub struct ElementDiff {
    pub input: usize,
    pub elem: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_err: f64,
}

/// Outcome of a [`grad_check`] run. `passed()` is true when every element
/// of every input gradient stayed under tolerance.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Max relative error per input, in input order.
    pub per_input: Vec<f64>,
    pub max_rel_err: f64,
    pub failures: Vec<ElementDiff>,
    pub tol: f64,
    /// How many input elements were moved off a kink before checking.
    pub nudged: usize,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn worst(&self) -> Option<&ElementDiff> {
        self.failures
            .iter()
            .max_by(|a, b| a.rel_err.total_cmp(&b.rel_err))
    }
}

/// Relative error with a unit floor: behaves like absolute error for small
/// gradients and like relative error for large ones.
pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(1.0)
}

/// Compares analytic gradients of the scalar-valued `f` against central
/// finite differences, one element at a time.
///
/// `f` receives a fresh tape plus one leaf per input tensor and must
/// return a scalar. Inputs must be finite.
pub fn grad_check<F>(f: F, inputs: &[Tensor], eps: f64, tol: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    grad_check_with(f, inputs, GradCheckOptions::new(eps, tol))
}

pub fn grad_check_with<F>(
    f: F,
    inputs: &[Tensor],
    opts: GradCheckOptions,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    if !(1e-6..=1e-3).contains(&opts.eps) {
        return Err(TensorError::EpsOutOfRange { eps: opts.eps });
    }
    for (i, t) in inputs.iter().enumerate() {
        if !t.is_finite() {
            return Err(TensorError::NonFiniteInput {
                what: format!("grad_check input {i}"),
            });
        }
    }

    // Move elements off the origin so relu-style kinks cannot sit inside
    // the difference interval.
    let mut nudged = 0usize;
    let work: Vec<Tensor> = inputs
        .iter()
        .map(|t| {
            let mut data = t.data().to_vec();
            for v in &mut data {
                if v.abs() < opts.kink_margin {
                    *v = if *v < 0.0 {
                        -1.5 * opts.kink_margin
                    } else {
                        1.5 * opts.kink_margin
                    };
                    nudged += 1;
                }
            }
            Tensor::new(t.shape().to_vec(), data).expect("same shape")
        })
        .collect();

    let eval = |data_sets: &[Tensor], with_grad: bool| -> Result<(f64, Option<Vec<Vec<f64>>>)> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = data_sets
            .iter()
            .map(|t| tape.leaf(t.clone().requires_grad(with_grad)))
            .collect();
        let out = f(&mut tape, &vars)?;
        if tape.value(out).numel() != 1 {
            return Err(TensorError::NonScalarLoss {
                shape: tape.shape(out).to_vec(),
            });
        }
        let y = tape.value(out).item();
        if !with_grad {
            return Ok((y, None));
        }
        tape.backward(out)?;
        let grads = vars
            .iter()
            .zip(data_sets)
            .map(|(v, t)| {
                tape.grad(*v)
                    .map(|g| g.to_vec())
                    .unwrap_or_else(|| vec![0.0; t.numel()])
            })
            .collect();
        Ok((y, Some(grads)))
    };

    let (_, analytic) = eval(&work, true)?;
    let analytic = analytic.expect("gradients requested");

    let mut per_input = vec![0.0f64; work.len()];
    let mut failures = Vec::new();
    let mut max_rel = 0.0f64;
    for i in 0..work.len() {
        for e in 0..work[i].numel() {
            let mut shifted = work.to_vec();
            let mut plus = shifted[i].data().to_vec();
            plus[e] += opts.eps;
            shifted[i] = Tensor::new(work[i].shape().to_vec(), plus).expect("same shape");
            let (fp, _) = eval(&shifted, false)?;

            let mut minus = work[i].data().to_vec();
            minus[e] -= opts.eps;
            shifted[i] = Tensor::new(work[i].shape().to_vec(), minus).expect("same shape");
            let (fm, _) = eval(&shifted, false)?;

            let numeric = (fp - fm) / (2.0 * opts.eps);
            let a = analytic[i][e];
            let r = rel_err(a, numeric);
            per_input[i] = per_input[i].max(r);
            max_rel = max_rel.max(r);
            if r > opts.tol {
                failures.push(ElementDiff {
                    input: i,
                    elem: e,
                    analytic: a,
                    numeric,
                    rel_err: r,
                });
            }
        }
    }

    Ok(GradCheckReport {
        per_input,
        max_rel_err: max_rel,
        failures,
        tol: opts.tol,
        nudged,
    })
}
