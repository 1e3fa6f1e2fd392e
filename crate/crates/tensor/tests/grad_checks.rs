//! Finite-difference verification of every differentiable op, 20 random
//! seeds each.

mod common;

use common::rand_tensor;
use groupsod_tensor::check::grad_check;
use groupsod_tensor::{Tape, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEEDS: u64 = 20;

fn check_over_seeds<F>(tol: f64, eps: f64, make: F)
where
    F: Fn(&mut ChaCha8Rng) -> (Vec<Tensor>, Box<dyn Fn(&mut Tape, &[groupsod_tensor::Var]) -> groupsod_tensor::Result<groupsod_tensor::Var>>),
{
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inputs, f) = make(&mut rng);
        let report = grad_check(&f, &inputs, eps, tol).unwrap();
        assert!(
            report.passed(),
            "seed {seed}: max rel err {} (tol {tol}), worst {:?}",
            report.max_rel_err,
            report.worst()
        );
    }
}

#[test]
fn add_and_mul_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        let a = rand_tensor(rng, &[2, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[2, 3], -1.0, 1.0);
        (
            vec![a, b],
            Box::new(|t, v| {
                let s = t.add(v[0], v[1])?;
                let p = t.mul(s, v[1])?;
                t.sum_all(p)
            }),
        )
    });
}

#[test]
fn affine_recip_ln_clamp_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        let a = rand_tensor(rng, &[4], 0.3, 1.5);
        (
            vec![a],
            Box::new(|t, v| {
                let x = t.affine(v[0], 2.5, 0.7)?;
                let r = t.recip(x)?;
                let l = t.ln(x)?;
                let c = t.clamp(r, -10.0, 10.0)?;
                let s = t.add(c, l)?;
                t.sum_all(s)
            }),
        )
    });
}

#[test]
fn matmul_grads_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        let a = rand_tensor(rng, &[3, 4], -1.0, 1.0);
        let b = rand_tensor(rng, &[4, 2], -1.0, 1.0);
        let w = rand_tensor(rng, &[3, 2], -1.0, 1.0);
        (
            vec![a, b, w],
            Box::new(|t, v| {
                let c = t.matmul(v[0], v[1])?;
                let weighted = t.mul(c, v[2])?;
                t.sum_all(weighted)
            }),
        )
    });
}

#[test]
fn bmm_grads_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        let a = rand_tensor(rng, &[2, 3, 2], -1.0, 1.0);
        let b = rand_tensor(rng, &[2, 2, 4], -1.0, 1.0);
        let w = rand_tensor(rng, &[2, 3, 4], -1.0, 1.0);
        (
            vec![a, b, w],
            Box::new(|t, v| {
                let c = t.bmm(v[0], v[1])?;
                let weighted = t.mul(c, v[2])?;
                t.sum_all(weighted)
            }),
        )
    });
}

#[test]
fn conv2d_grads_match_finite_differences() {
    // Weighted sum output so every position carries a distinct gradient.
    check_over_seeds(1e-5, 1e-5, |rng| {
        let x = rand_tensor(rng, &[2, 2, 5, 4], -1.0, 1.0);
        let w = rand_tensor(rng, &[3, 2, 3, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[3], -0.5, 0.5);
        let probe = rand_tensor(rng, &[2, 3, 5, 4], -1.0, 1.0);
        (
            vec![x, w, b, probe],
            Box::new(|t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 1, 1)?;
                let p = t.mul(y, v[3])?;
                t.sum_all(p)
            }),
        )
    });
}

#[test]
fn conv2d_strided_grads_match_finite_differences() {
    check_over_seeds(1e-5, 1e-5, |rng| {
        let x = rand_tensor(rng, &[1, 2, 5, 5], -1.0, 1.0);
        let w = rand_tensor(rng, &[2, 2, 3, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[2], -0.5, 0.5);
        let probe = rand_tensor(rng, &[1, 2, 3, 3], -1.0, 1.0);
        (
            vec![x, w, b, probe],
            Box::new(|t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 2, 1)?;
                let p = t.mul(y, v[3])?;
                t.sum_all(p)
            }),
        )
    });
}

#[test]
fn conv2d_floor_case_grads_match_finite_differences() {
    // Even side at stride 2 drops the trailing partial window; gradients
    // must agree with that exact forward.
    check_over_seeds(1e-5, 1e-5, |rng| {
        let x = rand_tensor(rng, &[1, 1, 6, 6], -1.0, 1.0);
        let w = rand_tensor(rng, &[1, 1, 3, 3], -1.0, 1.0);
        let b = rand_tensor(rng, &[1], -0.5, 0.5);
        let probe = rand_tensor(rng, &[1, 1, 3, 3], -1.0, 1.0);
        (
            vec![x, w, b, probe],
            Box::new(|t, v| {
                let y = t.conv2d(v[0], v[1], v[2], 2, 1)?;
                let p = t.mul(y, v[3])?;
                t.sum_all(p)
            }),
        )
    });
}

#[test]
fn relu_grads_match_finite_differences_off_kink() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        // Sampled away from 0; grad_check additionally nudges strays.
        let sign = rand_tensor(rng, &[3, 3], -1.0, 1.0);
        let data: Vec<f64> = sign
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
    });
}

#[test]
fn sigmoid_grad_matches_closed_form_and_finite_differences() {
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x_t = rand_tensor(&mut rng, &[6], -3.0, 3.0);

        // Closed form sigma(x)(1 - sigma(x)).
        let mut tape = Tape::new();
        let x = tape.leaf(x_t.clone().requires_grad(true));
        let s = tape.sigmoid(x).unwrap();
        let sd = tape.value(s).data().to_vec();
        let loss = tape.sum_all(s).unwrap();
        tape.backward(loss).unwrap();
        let g = tape.grad(x).unwrap();
        for (gi, si) in g.iter().zip(&sd) {
            assert!((gi - si * (1.0 - si)).abs() < 1e-14);
        }

        let report = grad_check(
            |t, v| {
                let s = t.sigmoid(v[0])?;
                t.sum_all(s)
            },
            &[x_t],
            1e-5,
            1e-7,
        )
        .unwrap();
        assert!(report.passed(), "seed {seed}: {:?}", report.worst());
    }
}

#[test]
fn softmax_jacobian_vector_products_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        let x = rand_tensor(rng, &[3, 5], -2.0, 2.0);
        let probe = rand_tensor(rng, &[3, 5], -1.0, 1.0);
        (
            vec![x, probe],
            Box::new(|t, v| {
                let s = t.softmax(v[0], 1)?;
                let p = t.mul(s, v[1])?;
                t.sum_all(p)
            }),
        )
    });
}

#[test]
fn layer_norm_grads_match_finite_differences() {
    check_over_seeds(1e-5, 1e-5, |rng| {
        let x = rand_tensor(rng, &[4, 6], -2.0, 2.0);
        let gamma = rand_tensor(rng, &[6], 0.5, 1.5);
        let beta = rand_tensor(rng, &[6], -0.5, 0.5);
        let probe = rand_tensor(rng, &[4, 6], -1.0, 1.0);
        (
            vec![x, gamma, beta, probe],
            Box::new(|t, v| {
                let y = t.layer_norm(v[0], v[1], v[2], 1e-5)?;
                let p = t.mul(y, v[3])?;
                t.sum_all(p)
            }),
        )
    });
}

#[test]
fn resize_grads_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        let x = rand_tensor(rng, &[1, 2, 4, 4], -1.0, 1.0);
        let probe_up = rand_tensor(rng, &[1, 2, 7, 6], -1.0, 1.0);
        let probe_down = rand_tensor(rng, &[1, 2, 2, 2], -1.0, 1.0);
        (
            vec![x, probe_up, probe_down],
            Box::new(|t, v| {
                let up = t.bilinear_up(v[0], (7, 6))?;
                let pu = t.mul(up, v[1])?;
                let down = t.avg_down(v[0], (2, 2))?;
                let pd = t.mul(down, v[2])?;
                let su = t.sum_all(pu)?;
                let sd = t.sum_all(pd)?;
                t.add(su, sd)
            }),
        )
    });
}

#[test]
fn concat_routes_gradient_slices_back() {
    check_over_seeds(1e-6, 1e-5, |rng| {
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
    });

    // The gradient of each part is exactly the matching slice of the probe.
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let a_t = rand_tensor(&mut rng, &[2, 3], -1.0, 1.0);
    let b_t = rand_tensor(&mut rng, &[2, 2], -1.0, 1.0);
    let probe_t = rand_tensor(&mut rng, &[2, 5], -1.0, 1.0);
    let mut tape = Tape::new();
    let a = tape.leaf(a_t.requires_grad(true));
    let b = tape.leaf(b_t.requires_grad(true));
    let probe = tape.constant(probe_t.clone());
    let c = tape.concat(&[a, b], 1).unwrap();
    let p = tape.mul(c, probe).unwrap();
    let loss = tape.sum_all(p).unwrap();
    tape.backward(loss).unwrap();
    let ga = tape.grad(a).unwrap();
    let gb = tape.grad(b).unwrap();
    for r in 0..2 {
        for j in 0..3 {
            assert_eq!(ga[r * 3 + j], probe_t.data()[r * 5 + j]);
        }
        for j in 0..2 {
            assert_eq!(gb[r * 2 + j], probe_t.data()[r * 5 + 3 + j]);
        }
    }
}

#[test]
fn shape_ops_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
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
                let r = t.reshape(p2, vec![24])?;
                let s1 = t.sum_all(p1)?;
                let s2 = t.sum_all(r)?;
                t.add(s1, s2)
            }),
        )
    });
}

#[test]
fn reduce_grads_match_finite_differences() {
    check_over_seeds(1e-6, 1e-5, |rng| {
        // Distinct values keep max ties (and hence kinks) away.
        let n = 24;
        let mut data: Vec<f64> = (0..n).map(|i| i as f64 * 0.092 - 1.0).collect();
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
    });
}
