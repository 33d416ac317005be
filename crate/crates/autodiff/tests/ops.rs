use std::sync::Arc;

use coin_autodiff::{gradient_check, Graph, Result, SparseMatrix, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::matrix(rows, cols, data).unwrap()
}

fn dense_matmul_oracle(a: &Tensor, b: &Tensor) -> Vec<f64> {
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            for p in 0..k {
                out[i * n + j] += a.get(i, p) * b.get(p, j);
            }
        }
    }
    out
}

/// Reduces an arbitrary output to a scalar with fixed random weights so
/// that every output entry contributes a distinct gradient.
fn weighted_sum(g: &mut Graph, y: Var, seed: u64) -> Result<Var> {
    let shape = g.value(y).shape().to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n: usize = shape.iter().product();
    let w = Tensor::new(shape, (0..n).map(|_| rng.random_range(0.5..1.5)).collect())?;
    let w = g.constant(w);
    let prod = g.multiply(y, w)?;
    Ok(g.sum(prod))
}

#[test]
fn matmul_with_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let a = random_matrix(&mut rng, 3, 3);
    assert_eq!(a.matmul(&Tensor::identity(3)).unwrap(), a);
}

#[test]
fn spmm_matches_dense_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut triplets = Vec::new();
    for r in 0..6 {
        for c in 0..5 {
            if rng.random_bool(0.4) {
                triplets.push((r, c, rng.random_range(0.1..2.0)));
            }
        }
    }
    let s = SparseMatrix::from_triplets(6, 5, &triplets).unwrap();
    let d = random_matrix(&mut rng, 5, 3);
    let got = s.mul_dense(&d).unwrap();
    let want = dense_matmul_oracle(&s.to_dense(), &d);
    for (x, y) in got.data().iter().zip(&want) {
        assert!((x - y).abs() < 1e-14);
    }
}

#[test]
fn tanh_of_linear_map_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let w = random_matrix(&mut rng, 4, 3);
    let x = random_matrix(&mut rng, 3, 2);
    let report = gradient_check(
        |g, p| {
            let wx = g.matmul(p[0], p[1])?;
            let t = g.tanh(wx);
            Ok(g.sum(t))
        },
        &[w, x],
        1e-5,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-4, "{report:?}");
}

#[test]
fn quadratic_form_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let a = random_matrix(&mut rng, 4, 4);
    let x = random_matrix(&mut rng, 4, 1);
    let report = gradient_check(
        move |g, p| {
            let a = g.constant(a.clone());
            let ax = g.matmul(a, p[0])?;
            let xt = g.transpose(p[0])?;
            let q = g.matmul(xt, ax)?;
            Ok(g.sum(q))
        },
        &[x],
        1e-5,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

#[test]
fn every_op_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_matrix(&mut rng, 3, 4);
    let b = random_matrix(&mut rng, 3, 4);
    let c = random_matrix(&mut rng, 4, 2);
    let bias = random_matrix(&mut rng, 1, 4);
    let positive = a.map(|x| x.abs() + 0.2);
    let sparse = Arc::new(SparseMatrix::from_triplets(2, 3, &[(0, 0, 0.5), (0, 2, 0.5), (1, 1, 1.0)]).unwrap());

    type Case = Box<dyn Fn(&mut Graph, &[Var]) -> Result<Var> + Sync>;
    let cases: Vec<(&str, Vec<Tensor>, Case)> = vec![
        (
            "matmul",
            vec![a.clone(), c.clone()],
            Box::new(|g, p| g.matmul(p[0], p[1])),
        ),
        ("spmm", vec![a.clone()], Box::new(move |g, p| g.spmm(&sparse, p[0]))),
        ("transpose", vec![a.clone()], Box::new(|g, p| g.transpose(p[0]))),
        (
            "concat",
            vec![a.clone(), b.clone()],
            Box::new(|g, p| g.concat_columns(p[0], p[1])),
        ),
        ("slice_rows", vec![a.clone()], Box::new(|g, p| g.slice_rows(p[0], 1, 3))),
        (
            "gather_rows",
            vec![a.clone()],
            Box::new(|g, p| g.gather_rows(p[0], vec![2, 0, 2])),
        ),
        ("add", vec![a.clone(), b.clone()], Box::new(|g, p| g.add(p[0], p[1]))),
        ("sub", vec![a.clone(), b.clone()], Box::new(|g, p| g.sub(p[0], p[1]))),
        (
            "multiply",
            vec![a.clone(), b.clone()],
            Box::new(|g, p| g.multiply(p[0], p[1])),
        ),
        (
            "bias",
            vec![a.clone(), bias.clone()],
            Box::new(|g, p| g.add_row_bias(p[0], p[1])),
        ),
        ("scale", vec![a.clone()], Box::new(|g, p| Ok(g.scale(p[0], -2.5)))),
        ("tanh", vec![a.clone()], Box::new(|g, p| Ok(g.tanh(p[0])))),
        ("sigmoid", vec![a.clone()], Box::new(|g, p| Ok(g.sigmoid(p[0])))),
        ("log_sigmoid", vec![a.clone()], Box::new(|g, p| Ok(g.log_sigmoid(p[0])))),
        ("exp", vec![a.clone()], Box::new(|g, p| Ok(g.exp(p[0])))),
        ("powf", vec![positive.clone()], Box::new(|g, p| g.powf(p[0], -0.5))),
        (
            "log_clamped",
            vec![positive],
            Box::new(|g, p| g.log_clamped(p[0], 1e-12)),
        ),
        ("softmax", vec![a.clone()], Box::new(|g, p| g.softmax_rows(p[0]))),
        ("mean", vec![a.clone()], Box::new(|g, p| Ok(g.mean(p[0])))),
        ("row_sums", vec![a.clone()], Box::new(|g, p| g.row_sums(p[0]))),
        ("col_sums", vec![a.clone()], Box::new(|g, p| g.col_sums(p[0]))),
    ];
    for (name, params, op) in cases {
        let report = gradient_check(
            |g, p| {
                let y = op(g, p)?;
                weighted_sum(g, y, 99)
            },
            &params,
            1e-5,
        )
        .unwrap();
        assert!(report.max_rel_error < 1e-4, "{name}: {report:?}");
    }
}

#[test]
fn dropout_preserves_expectation() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 10_000;
    let mut g = Graph::new();
    let x = g.param(Tensor::ones(&[1, trials]));
    let y = g.dropout(x, 0.5, true, &mut rng).unwrap();
    let values = g.value(y).data();
    assert!(values.iter().all(|&v| v == 0.0 || v == 2.0));
    let mean = values.iter().sum::<f64>() / trials as f64;
    // Each draw is 0 or 2 with equal odds: σ = 1, σ_mean = 1/√n.
    let sigma = 1.0 / (trials as f64).sqrt();
    assert!((mean - 1.0).abs() < 4.0 * sigma, "mean {mean}");
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(
        rows in 1usize..6,
        cols in 1usize..6,
        seed in any::<u64>(),
        spread in 0.1f64..50.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let logits = random_matrix(&mut rng, rows, cols).map(|x| x * spread);
        let mut g = Graph::new();
        let x = g.constant(logits);
        let s = g.softmax_rows(x).unwrap();
        for r in 0..rows {
            let row = g.value(s).row(r);
            prop_assert!(row.iter().all(|&p| p > 0.0));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn leaky_relu_gradient_away_from_kink(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data: Vec<f64> = (0..8)
            .map(|_| {
                let v: f64 = rng.random_range(-1.0..1.0);
                if v.abs() < 1e-3 { 0.5 } else { v }
            })
            .collect();
        let x = Tensor::matrix(2, 4, data).unwrap();
        let report = gradient_check(
            |g, p| {
                let y = g.leaky_relu(p[0], 0.1);
                weighted_sum(g, y, 7)
            },
            &[x],
            1e-5,
        ).unwrap();
        prop_assert!(report.max_rel_error < 1e-4);
    }

    #[test]
    fn spmm_equals_dense_matmul(
        rows in 1usize..8,
        inner in 1usize..8,
        cols in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::new();
        for r in 0..rows {
            for c in 0..inner {
                if rng.random_bool(0.3) {
                    triplets.push((r, c, rng.random_range(-2.0..2.0)));
                }
            }
        }
        let s = SparseMatrix::from_triplets(rows, inner, &triplets).unwrap();
        let d = random_matrix(&mut rng, inner, cols);
        let got = s.mul_dense(&d).unwrap();
        let want = s.to_dense().matmul(&d).unwrap();
        for (x, y) in got.data().iter().zip(want.data()) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn row_normalize_rows_sum_to_one(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut triplets = Vec::new();
        for r in 0..5 {
            for c in 0..4 {
                if rng.random_bool(0.5) {
                    triplets.push((r, c, 1.0));
                }
            }
        }
        let m = SparseMatrix::from_triplets(5, 4, &triplets).unwrap();
        let n = m.row_normalized().unwrap();
        let dense = n.to_dense();
        for r in 0..5 {
            // Independent per-row summation over the dense view.
            let total: f64 = (0..4).map(|c| dense.get(r, c)).sum();
            let nonzero = m.row(r).0.len();
            if nonzero == 0 {
                prop_assert_eq!(total, 0.0);
            } else {
                prop_assert!((total - 1.0).abs() < 1e-12);
            }
            prop_assert_eq!(n.row(r).0, m.row(r).0);
        }
    }
}
