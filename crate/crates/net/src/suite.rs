//! Named finite-difference suite covering every primitive op, every
//! architecture module, and spot checks through the whole network, plus a
//! negative control proving the checker catches corrupted backward rules.

use crate::config::ModelConfig;
use crate::loss::{ppa_loss, total_loss};
use crate::model::Net;
use crate::params::{Forward, ParamId};
use crate::{ciu, mpm, mte, sum};
use crate::Result;
use groupsod_tensor::check::{grad_check, rel_err};
use groupsod_tensor::{OpKind, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

const TOL: f64 = 1e-4;
const EPS: f64 = 1e-4;
const OP_SEEDS: u64 = 20;
const PIPELINE_SEEDS: u64 = 20;
const ELEMS_PER_PIPELINE_SEED: usize = 5;
const DEDICATED_PIPELINE_ELEMS: usize = 50;

#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: String,
    pub max_rel_err: f64,
    pub tol: f64,
    pub passed: bool,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub checks: Vec<CheckResult>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The check with the largest relative error.
    pub fn worst(&self) -> &CheckResult {
        self.checks
            .iter()
            .max_by(|a, b| a.max_rel_err.total_cmp(&b.max_rel_err))
            .expect("non-empty suite")
    }
}

fn rand_tensor(rng: &mut ChaCha8Rng, shape: &[usize], lo: f64, hi: f64) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n).map(|_| rng.random_range(lo..hi)).collect();
    Tensor::new(shape.to_vec(), data).expect("shape/data agree")
}

fn rand_mask(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data = (0..n)
        .map(|_| if rng.random_bool(0.35) { 1.0 } else { 0.0 })
        .collect();
    Tensor::new(shape.to_vec(), data).expect("shape/data agree")
}

/// Runs a tape-level grad_check over `OP_SEEDS` seeds, keeping the worst
/// relative error.
fn op_check<F>(name: &str, seed: u64, make: F) -> CheckResult
where
    F: Fn(&mut ChaCha8Rng) -> (Vec<Tensor>, OpBuild),
{
    let mut worst = 0.0f64;
    let mut passed = true;
    for s in 0..OP_SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (s.wrapping_mul(0x9E37_79B9)));
        let (inputs, f) = make(&mut rng);
        match grad_check(&f, &inputs, EPS, TOL) {
            Ok(report) => {
                worst = worst.max(report.max_rel_err);
                passed &= report.passed();
            }
            Err(_) => passed = false,
        }
    }
    CheckResult {
        name: name.to_string(),
        max_rel_err: worst,
        tol: TOL,
        passed,
    }
}

type OpBuild = Box<dyn Fn(&mut Tape, &[Var]) -> groupsod_tensor::Result<Var>>;

fn primitive_op_checks(seed: u64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    out.push(op_check("op.add_mul", seed, |rng| {
        let a = rand_tensor(rng, &[2, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[2, 3], -1.0, 1.0);
        (
            vec![a, b],
            Box::new(|t, v| {
                let s = t.add(v[0], v[1])?;
                let p = t.mul(s, v[0])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.matmul", seed, |rng| {
        let a = rand_tensor(rng, &[3, 4], -1.0, 1.0);
        let b = rand_tensor(rng, &[4, 2], -1.0, 1.0);
        let w = rand_tensor(rng, &[3, 2], -1.0, 1.0);
        (
            vec![a, b, w],
            Box::new(|t, v| {
                let c = t.matmul(v[0], v[1])?;
                let p = t.mul(c, v[2])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.bmm", seed, |rng| {
        let a = rand_tensor(rng, &[2, 3, 2], -1.0, 1.0);
        let b = rand_tensor(rng, &[2, 2, 3], -1.0, 1.0);
        let w = rand_tensor(rng, &[2, 3, 3], -1.0, 1.0);
        (
            vec![a, b, w],
            Box::new(|t, v| {
                let c = t.bmm(v[0], v[1])?;
                let p = t.mul(c, v[2])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.conv2d", seed, |rng| {
        let x = rand_tensor(rng, &[1, 2, 5, 5], -1.0, 1.0);
        let w = rand_tensor(rng, &[2, 2, 3, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[2], -0.5, 0.5);
        let probe = rand_tensor(rng, &[1, 2, 5, 5], -1.0, 1.0);
        (
            vec![x, w, b, probe],
            Box::new(|t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 1, 1)?;
                let p = t.mul(y, v[3])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.relu", seed, |rng| {
        let raw = rand_tensor(rng, &[3, 3], -1.0, 1.0);
        let data = raw
            .data()
            .iter()
            .map(|v| if *v >= 0.0 { v + 0.1 } else { v - 0.1 })
            .collect();
        let x = Tensor::new(vec![3, 3], data).unwrap();
        let probe = rand_tensor(rng, &[3, 3], -1.0, 1.0);
        (
            vec![x, probe],
            Box::new(|t, v| {
                let y = t.relu(v[0])?;
                let p = t.mul(y, v[1])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.sigmoid", seed, |rng| {
        let x = rand_tensor(rng, &[6], -3.0, 3.0);
        (
            vec![x],
            Box::new(|t, v| {
                let s = t.sigmoid(v[0])?;
                t.sum_all(s)
            }),
        )
    }));
    out.push(op_check("op.softmax", seed, |rng| {
        let x = rand_tensor(rng, &[2, 5], -2.0, 2.0);
        let probe = rand_tensor(rng, &[2, 5], -1.0, 1.0);
        (
            vec![x, probe],
            Box::new(|t, v| {
                let s = t.softmax(v[0], 1)?;
                let p = t.mul(s, v[1])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.layer_norm", seed, |rng| {
        let x = rand_tensor(rng, &[3, 6], -2.0, 2.0);
        let gamma = rand_tensor(rng, &[6], 0.5, 1.5);
        let beta = rand_tensor(rng, &[6], -0.5, 0.5);
        let probe = rand_tensor(rng, &[3, 6], -1.0, 1.0);
        (
            vec![x, gamma, beta, probe],
            Box::new(|t, v| {
                let y = t.layer_norm(v[0], v[1], v[2], 1e-5)?;
                let p = t.mul(y, v[3])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.resize", seed, |rng| {
        let x = rand_tensor(rng, &[1, 2, 4, 4], -1.0, 1.0);
        let pu = rand_tensor(rng, &[1, 2, 6, 6], -1.0, 1.0);
        let pd = rand_tensor(rng, &[1, 2, 2, 2], -1.0, 1.0);
        (
            vec![x, pu, pd],
            Box::new(|t, v| {
                let up = t.bilinear_up(v[0], (6, 6))?;
                let a = t.mul(up, v[1])?;
                let down = t.avg_down(v[0], (2, 2))?;
                let b = t.mul(down, v[2])?;
                let sa = t.sum_all(a)?;
                let sb = t.sum_all(b)?;
                t.add(sa, sb)
            }),
        )
    }));
    out.push(op_check("op.concat", seed, |rng| {
        let a = rand_tensor(rng, &[1, 2, 3, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[1, 3, 3, 3], -1.0, 1.0);
        let probe = rand_tensor(rng, &[1, 5, 3, 3], -1.0, 1.0);
        (
            vec![a, b, probe],
            Box::new(|t, v| {
                let c = t.concat(&[v[0], v[1]], 1)?;
                let p = t.mul(c, v[2])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.reduce", seed, |rng| {
        let n = 24;
        let mut data: Vec<f64> = (0..n).map(|i| i as f64 * 0.09 - 1.0).collect();
        for v in &mut data {
            *v += rng.random_range(-0.02..0.02);
        }
        let x = Tensor::new(vec![2, 3, 4], data).unwrap();
        let probe = rand_tensor(rng, &[2, 4], -1.0, 1.0);
        (
            vec![x, probe],
            Box::new(|t, v| {
                let s = t.sum_axes(v[0], &[1])?;
                let m = t.mean_axes(v[0], &[1])?;
                let mx = t.max_axes(v[0], &[1])?;
                let sm = t.add(s, m)?;
                let all = t.add(sm, mx)?;
                let p = t.mul(all, v[1])?;
                t.sum_all(p)
            }),
        )
    }));
    out.push(op_check("op.shape", seed, |rng| {
        let x = rand_tensor(rng, &[2, 3, 4], -1.0, 1.0);
        let probe = rand_tensor(rng, &[4, 2, 3], -1.0, 1.0);
        let small = rand_tensor(rng, &[1, 3, 1], -1.0, 1.0);
        let probe2 = rand_tensor(rng, &[2, 3, 4], -1.0, 1.0);
        (
            vec![x, probe, small, probe2],
            Box::new(|t, v| {
                let perm = t.permute(v[0], vec![2, 0, 1])?;
                let p1 = t.mul(perm, v[1])?;
                let rep = t.repeat(v[2], vec![2, 3, 4])?;
                let p2 = t.mul(rep, v[3])?;
                let s1 = t.sum_all(p1)?;
                let s2 = t.sum_all(p2)?;
                t.add(s1, s2)
            }),
        )
    }));
    out.push(op_check("op.scalar_ew", seed, |rng| {
        let x = rand_tensor(rng, &[5], 0.3, 1.4);
        (
            vec![x],
            Box::new(|t, v| {
                let a = t.affine(v[0], 1.7, 0.2)?;
                let r = t.recip(a)?;
                let l = t.ln(a)?;
                let c = t.clamp(r, -5.0, 5.0)?;
                let s = t.add(c, l)?;
                t.sum_all(s)
            }),
        )
    }));
    out
}

// ── Module checks on Forward-based code paths ──────────────────────────

type ModuleBuild<'n> = Box<dyn Fn(&Net, &mut Forward, &[Var]) -> Result<Var> + 'n>;

/// Finite differences with respect to a module's input tensors while its
/// parameters stay fixed. Failing elements retry at smaller steps so a
/// relu/max kink crossing inside the difference interval does not fail a
/// correct rule.

fn module_check<M>(net: &Net, name: &str, seeds: u64, make: M) -> CheckResult
where
    M: Fn(&mut ChaCha8Rng) -> (Vec<Tensor>, ModuleBuild<'static>),
{
    let mut worst = 0.0f64;
    let mut passed = true;
    for s in 0..seeds {
        let mut rng = ChaCha8Rng::seed_from_u64(0xC0FFEE ^ s.wrapping_mul(0x9E37_79B9));
        let (inputs, f) = make(&mut rng);

        let run = |net: &Net, data: &[Tensor], with_grad: bool| -> Result<(f64, Vec<Vec<f64>>)> {
            let mut fw = Forward::new(&net.store, false);
            let vars: Vec<Var> = data
                .iter()
                .map(|t| {
                    if with_grad {
                        fw.input_grad(t.clone())
                    } else {
                        fw.input(t.clone())
                    }
                })
                .collect();
            let out = f(net, &mut fw, &vars)?;
            let y = fw.tape.value(out).item();
            if !with_grad {
                return Ok((y, vec![]));
            }
            fw.tape.backward(out)?;
            let grads = vars
                .iter()
                .zip(data)
                .map(|(v, t)| {
                    fw.tape
                        .grad(*v)
                        .map(|g| g.to_vec())
                        .unwrap_or_else(|| vec![0.0; t.numel()])
                })
                .collect();
            Ok((y, grads))
        };

        let analytic = match run(net, &inputs, true) {
            Ok((_, g)) => g,
            Err(_) => {
                passed = false;
                continue;
            }
        };
        for i in 0..inputs.len() {
            for e in 0..inputs[i].numel() {
                let mut err = f64::INFINITY;
                for eps in [EPS, EPS / 4.0, EPS / 16.0] {
                    let numeric = {
                        let mut probe = inputs.to_vec();
                        let mut plus = probe[i].data().to_vec();
                        plus[e] += eps;
                        probe[i] = Tensor::new(inputs[i].shape().to_vec(), plus).unwrap();
                        let fp = run(net, &probe, false).map(|(y, _)| y);
                        let mut minus = inputs[i].data().to_vec();
                        minus[e] -= eps;
                        probe[i] = Tensor::new(inputs[i].shape().to_vec(), minus).unwrap();
                        let fm = run(net, &probe, false).map(|(y, _)| y);
                        match (fp, fm) {
                            (Ok(a), Ok(b)) => Some((a - b) / (2.0 * eps)),
                            _ => None,
                        }
                    };
                    match numeric {
                        Some(nv) => {
                            err = rel_err(analytic[i][e], nv);
                            if err <= TOL {
                                break;
                            }
                        }
                        None => {
                            err = f64::INFINITY;
                            break;
                        }
                    }
                }
                worst = worst.max(err);
                passed &= err <= TOL;
            }
        }
    }
    CheckResult {
        name: name.to_string(),
        max_rel_err: worst,
        tol: TOL,
        passed,
    }
}

fn module_checks(net: &Net) -> Vec<CheckResult> {
    let ct = net.config.trunk_channels;
    let ch0 = net.config.level_channels[0];
    let window = net.config.ppa_window;
    let mut out = Vec::new();

    out.push(module_check(net, "module.purify", 20, |rng| {
        let a = rand_tensor(rng, &[1, 2, 4, 4], 0.1, 1.0);
        let b = rand_tensor(rng, &[1, 2, 4, 4], 0.1, 1.0);
        (
            vec![a, b],
            Box::new(|_, fw, v| {
                let p = mpm::purify(fw, v[0], v[1], 2)?;
                fw.tape.sum_all(p).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.channel_attention", 10, move |rng| {
        let x = rand_tensor(rng, &[1, ch0, 5, 5], 0.1, 1.0);
        (
            vec![x],
            Box::new(|net, fw, v| {
                let y = mpm::channel_attention(fw, v[0], &net.mpm.levels[0].ca)?;
                fw.tape.sum_all(y).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.spatial_attention", 10, move |rng| {
        let x = rand_tensor(rng, &[1, ch0, 8, 8], 0.1, 1.0);
        (
            vec![x],
            Box::new(|net, fw, v| {
                let y = mpm::spatial_attention(fw, v[0], &net.mpm.levels[0].sa_conv)?;
                fw.tape.sum_all(y).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.mpm_forward", 8, move |rng| {
        let a = rand_tensor(rng, &[1, ch0, 8, 8], 0.1, 1.0);
        let b = rand_tensor(rng, &[1, ch0, 8, 8], 0.1, 1.0);
        (
            vec![a, b],
            Box::new(|net, fw, v| {
                let y = mpm::mpm_forward(fw, v[0], v[1], &net.mpm.levels[0], net.mpm.rounds)?;
                fw.tape.sum_all(y).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.sum_h", 8, move |rng| {
        let f3 = rand_tensor(rng, &[1, ct, 8, 8], -1.0, 1.0);
        let f4 = rand_tensor(rng, &[1, ct, 4, 4], -1.0, 1.0);
        let f5 = rand_tensor(rng, &[1, ct, 2, 2], -1.0, 1.0);
        (
            vec![f3, f4, f5],
            Box::new(|net, fw, v| {
                let (a, b, c) = sum::sum_h(fw, v[0], v[1], v[2], &net.sum)?;
                let ab = fw.tape.add(a, b)?;
                let abc = fw.tape.add(ab, c)?;
                fw.tape.sum_all(abc).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.sum_m", 8, move |rng| {
        let f2 = rand_tensor(rng, &[1, ct, 8, 8], -1.0, 1.0);
        let f3 = rand_tensor(rng, &[1, ct, 4, 4], -1.0, 1.0);
        let f4 = rand_tensor(rng, &[1, ct, 2, 2], -1.0, 1.0);
        (
            vec![f2, f3, f4],
            Box::new(|net, fw, v| {
                let (a, b, c) = sum::sum_m(fw, v[0], v[1], v[2], &net.sum)?;
                let ab = fw.tape.add(a, b)?;
                let abc = fw.tape.add(ab, c)?;
                fw.tape.sum_all(abc).map_err(Into::into)
            }),
        )
    }));
    let grid = net.config.grid_high();
    out.push(module_check(net, "module.encoder", 6, move |rng| {
        let x = rand_tensor(rng, &[1, ct, grid, grid], -1.0, 1.0);
        (
            vec![x],
            Box::new(|net, fw, v| {
                let y = mte::encode_feature(fw, v[0], &net.mte_high)?;
                fw.tape.sum_all(y).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.integrate", 8, move |rng| {
        let hi = rand_tensor(rng, &[1, ct, 4, 4], -1.0, 1.0);
        let mid = rand_tensor(rng, &[1, ct, 8, 8], -1.0, 1.0);
        let f_t1 = rand_tensor(rng, &[1, ct, 16, 16], -1.0, 1.0);
        (
            vec![hi, mid, f_t1],
            Box::new(|net, fw, v| {
                let y = ciu::integrate(fw, (v[0], v[1]), v[2], &net.ciu.classes[0], net.config.trunk_channels)?;
                fw.tape.sum_all(y).map_err(Into::into)
            }),
        )
    }));
    out.push(module_check(net, "module.ppa_loss", 10, move |rng| {
        let logits = rand_tensor(rng, &[2, 1, 8, 8], -2.0, 2.0);
        // The mask is data, not a differentiation input: captured, not
        // perturbed.
        let gt = rand_mask(rng, &[2, 1, 8, 8]);
        (
            vec![logits],
            Box::new(move |_, fw, v| {
                let s = fw.tape.sigmoid(v[0])?;
                ppa_loss(fw, s, &gt, window)
            }),
        )
    }));
    out
}

// ── Pipeline spot checks through the whole network ─────────────────────

struct PipelineCase {
    rgb: Tensor,
    depth: Tensor,
    gt: Tensor,
}

impl PipelineCase {
    fn random(cfg: &ModelConfig, rng: &mut ChaCha8Rng) -> Self {
        let s = cfg.input_size;
        Self {
            rgb: rand_tensor(rng, &[1, 3, s, s], 0.05, 0.95),
            depth: rand_tensor(rng, &[1, 1, s, s], 0.05, 0.95),
            gt: rand_mask(rng, &[1, 1, s, s]),
        }
    }

    fn loss<'n>(&self, net: &'n Net, train: bool) -> Result<(f64, Option<Forward<'n>>)> {
        let mut fw = Forward::new(&net.store, train);
        let heads = net.forward(&mut fw, self.rgb.clone(), self.depth.clone())?;
        let loss = total_loss(&mut fw, &heads, &self.gt, net.config.ppa_window)?;
        let y = fw.tape.value(loss).item();
        if train {
            fw.tape.backward(loss)?;
            Ok((y, Some(fw)))
        } else {
            Ok((y, None))
        }
    }
}

/// Stratified random parameter elements: round-robin over the top-level
/// module prefixes so every module is exercised.
fn pick_elements(net: &Net, rng: &mut ChaCha8Rng, count: usize) -> Vec<(ParamId, usize)> {
    let mut groups: Vec<(String, Vec<ParamId>)> = Vec::new();
    for id in net.store.ids() {
        let prefix = net.store.name(id).split('.').next().unwrap_or("").to_string();
        match groups.iter_mut().find(|(p, _)| *p == prefix) {
            Some((_, v)) => v.push(id),
            None => groups.push((prefix, vec![id])),
        }
    }
    let mut out = Vec::with_capacity(count);
    let mut gi = 0;
    while out.len() < count {
        let (_, ids) = &groups[gi % groups.len()];
        let id = ids[rng.random_range(0..ids.len())];
        let numel = net.store.get(id).numel();
        out.push((id, rng.random_range(0..numel)));
        gi += 1;
    }
    out
}

/// Central difference of one parameter element against its analytic
/// gradient for a fixed input case, shrinking the step on failure so a
/// relu/max kink inside the difference interval does not condemn a
/// correct rule.
fn element_error(
    net: &mut Net,
    case: &PipelineCase,
    id: ParamId,
    elem: usize,
    analytic: f64,
) -> Result<f64> {
    let original = net.store.get(id).data()[elem];
    let mut err = f64::INFINITY;
    for eps in [EPS, EPS / 4.0, 1e-6] {
        net.store.get_mut(id).data_mut()[elem] = original + eps;
        let fp = case.loss(net, false)?.0;
        net.store.get_mut(id).data_mut()[elem] = original - eps;
        let fm = case.loss(net, false)?.0;
        net.store.get_mut(id).data_mut()[elem] = original;
        let numeric = (fp - fm) / (2.0 * eps);
        err = rel_err(analytic, numeric);
        if err <= TOL {
            break;
        }
    }
    Ok(err)
}

fn analytic_grads(net: &Net, case: &PipelineCase, picks: &[(ParamId, usize)]) -> Result<Vec<f64>> {
    // One backward yields every analytic gradient; the tape (which borrows
    // the store) is dropped before any perturbation mutates parameters.
    let (_, fw) = case.loss(net, true)?;
    let fw = fw.expect("training forward keeps the tape");
    picks
        .iter()
        .map(|(id, elem)| {
            fw.grad_of(*id)
                .map(|g| g[*elem])
                .ok_or_else(|| crate::NetError::MissingGrad {
                    name: net.store.name(*id).to_string(),
                })
        })
        .collect()
}

fn pipeline_spot_check(
    net: &mut Net,
    name: &str,
    case_seed: u64,
    elems: usize,
) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(case_seed);
    let case = PipelineCase::random(&net.config.clone(), &mut rng);
    let picks = pick_elements(net, &mut rng, elems);

    // Zero-initialised biases can sit exactly on a relu kink (a dead
    // window leaves the preactivation at the bias itself), where the
    // subgradient and the one-sided difference legitimately disagree.
    // Like the input nudge of grad_check, picked elements near 0 are
    // moved off the kink before checking.
    for (id, elem) in &picks {
        let v = net.store.get(*id).data()[*elem];
        if v.abs() < 1e-3 {
            net.store.get_mut(*id).data_mut()[*elem] =
                if v < 0.0 { v - 1.5e-3 } else { v + 1.5e-3 };
        }
    }
    let analytic = analytic_grads(net, &case, &picks)?;

    let mut worst = 0.0f64;
    let mut passed = true;
    for ((id, elem), a) in picks.into_iter().zip(analytic) {
        let mut err = element_error(net, &case, id, elem, a)?;
        // A relu/max kink sitting essentially on the evaluation point
        // survives every step size; fresh inputs relocate all
        // preactivations, while a genuinely wrong rule fails on every
        // case. Three resamples push the false-failure odds to nil.
        for _ in 0..3 {
            if err <= TOL {
                break;
            }
            let resampled = PipelineCase::random(&net.config.clone(), &mut rng);
            let a2 = analytic_grads(net, &resampled, &[(id, elem)])?[0];
            err = element_error(net, &resampled, id, elem, a2)?;
        }
        worst = worst.max(err);
        passed &= err <= TOL;
    }
    Ok(CheckResult {
        name: name.to_string(),
        max_rel_err: worst,
        tol: TOL,
        passed,
    })
}

fn negative_control(seed: u64) -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = rand_tensor(&mut rng, &[6], -2.0, 2.0);
    let report = grad_check(
        |t, v| {
            t.inject_backward_fault(OpKind::Sigmoid, 1.05);
            let s = t.sigmoid(v[0])?;
            t.sum_all(s)
        },
        &[x],
        1e-5,
        TOL,
    );
    // The control passes when the corrupted rule is DETECTED.
    match report {
        Ok(r) => CheckResult {
            name: "negative_control.sigmoid_fault".into(),
            max_rel_err: r.max_rel_err,
            tol: TOL,
            passed: !r.passed(),
        },
        Err(_) => CheckResult {
            name: "negative_control.sigmoid_fault".into(),
            max_rel_err: f64::NAN,
            tol: TOL,
            passed: false,
        },
    }
}

/// The full verification sweep at the toy profile. Deterministic in
/// `seed`; runs on one core.
pub fn run_gradcheck_suite(seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let mut checks = primitive_op_checks(seed);

    let module_net = Net::init(ModelConfig::toy(), seed ^ 0xA5A5)?;
    checks.extend(module_checks(&module_net));

    for s in 0..PIPELINE_SEEDS {
        let mut net = Net::init(ModelConfig::toy(), seed ^ s)?;
        checks.push(pipeline_spot_check(
            &mut net,
            &format!("pipeline.seed{s}"),
            seed ^ (s.wrapping_mul(0x1234_5678)),
            ELEMS_PER_PIPELINE_SEED,
        )?);
    }
    let mut net = Net::init(ModelConfig::toy(), seed ^ 0xDEAD)?;
    checks.push(pipeline_spot_check(
        &mut net,
        "pipeline.dedicated_50",
        seed ^ 0xBEEF,
        DEDICATED_PIPELINE_ELEMS,
    )?);

    checks.push(negative_control(seed ^ 0xF00D));

    Ok(SuiteReport {
        checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}
