use std::path::Path;

use coin_autodiff::{gradient_check, Graph, Tensor};
use coin_core::encoder::{encode, encode_on, init_embeddings, Dropout, EmbeddingPair, EncoderParams};
use coin_core::graph::{load_edge_list, BipartiteGraph, IdScheme};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Mat = Vec<Vec<f64>>;

fn to_mat(t: &Tensor) -> Mat {
    (0..t.rows()).map(|r| t.row(r).to_vec()).collect()
}

fn mm(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .map(|row| {
            (0..b[0].len())
                .map(|j| row.iter().zip(b).map(|(x, br)| x * br[j]).sum())
                .collect()
        })
        .collect()
}

fn cat(a: &Mat, b: &Mat) -> Mat {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.iter().chain(y).copied().collect())
        .collect()
}

fn apply(a: &Mat, f: impl Fn(f64) -> f64) -> Mat {
    a.iter().map(|r| r.iter().map(|&x| f(x)).collect()).collect()
}

/// Dense row-normalized adjacency built straight from the edge list.
fn dense_adj(rows: usize, cols: usize, edges: &[(usize, usize)]) -> Mat {
    let mut a = vec![vec![0.0; cols]; rows];
    for &(r, c) in edges {
        a[r][c] = 1.0;
    }
    for row in &mut a {
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|x| *x /= s);
        }
    }
    a
}

fn oracle(edges: &[(usize, usize)], nu: usize, nv: usize, params: &EncoderParams, init: &EmbeddingPair) -> (Mat, Mat) {
    let a_uv = dense_adj(nu, nv, edges);
    let flipped: Vec<_> = edges.iter().map(|&(u, v)| (v, u)).collect();
    let a_vu = dense_adj(nv, nu, &flipped);
    let leaky = |x: f64| if x > 0.0 { x } else { 0.1 * x };
    let (mut u, mut v) = (to_mat(&init.emb_u), to_mat(&init.emb_v));
    for layer in &params.layers {
        let msg = apply(&mm(&mm(&a_vu, &u), &to_mat(&layer.w1)), leaky);
        let v_hat = apply(&mm(&cat(&msg, &v), &to_mat(&layer.w2)), f64::tanh);
        let msg = apply(&mm(&mm(&a_uv, &v_hat), &to_mat(&layer.w3)), leaky);
        u = apply(&mm(&cat(&msg, &u), &to_mat(&layer.w4)), f64::tanh);
        v = v_hat;
    }
    (u, v)
}

fn assert_close(t: &Tensor, m: &Mat, tol: f64) {
    for (r, row) in m.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            assert!((t.get(r, c) - x).abs() < tol, "({r}, {c}): {} vs {x}", t.get(r, c));
        }
    }
}

#[test]
fn two_by_two_graph_matches_dense_hand_computation() {
    let edges = [(0, 0), (0, 1), (1, 1)];
    let graph = BipartiteGraph::from_edges(2, 2, edges).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for layers in [1, 2, 3] {
        let params = EncoderParams::init(3, layers, &mut rng).unwrap();
        let init = init_embeddings(2, 2, 3, &mut rng).unwrap();
        let out = encode(&graph, &params, &init, Dropout::Off, &mut rng).unwrap();
        let (u, v) = oracle(&edges, 2, 2, &params, &init);
        assert_close(&out.emb_u, &u, 1e-14);
        assert_close(&out.emb_v, &v, 1e-14);
    }
}

#[test]
fn isolated_nodes_use_only_their_own_state() {
    // u2 and v2 have no edges.
    let edges = [(0, 0), (1, 1), (0, 1)];
    let graph = BipartiteGraph::from_edges(3, 3, edges).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let params = EncoderParams::init(4, 2, &mut rng).unwrap();
    let init = init_embeddings(3, 3, 4, &mut rng).unwrap();
    let out = encode(&graph, &params, &init, Dropout::Off, &mut rng).unwrap();
    let (u, v) = oracle(&edges, 3, 3, &params, &init);
    assert_close(&out.emb_u, &u, 1e-14);
    assert_close(&out.emb_v, &v, 1e-14);
}

#[test]
fn ml100k_embedding_shapes() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/ml-100k/u.data");
    if !path.exists() {
        eprintln!("skipping: {} not present", path.display());
        return;
    }
    let data = load_edge_list(&path, IdScheme::FirstSeen, &[]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = EncoderParams::init(128, 2, &mut rng).unwrap();
    let init = init_embeddings(data.graph.num_u(), data.graph.num_v(), 128, &mut rng).unwrap();
    let out = encode(&data.graph, &params, &init, Dropout::Off, &mut rng).unwrap();
    assert_eq!(out.emb_u.shape(), [943, 128]);
    assert_eq!(out.emb_v.shape(), [1682, 128]);
    assert!(out.emb_u.data().iter().chain(out.emb_v.data()).all(|x| x.abs() < 1.0));
}

fn random_graph(rng: &mut ChaCha8Rng, nu: usize, nv: usize) -> BipartiteGraph {
    let edges: Vec<_> = (0..nu)
        .flat_map(|u| (0..nv).map(move |v| (u, v)))
        .filter(|_| rng.random_bool(0.4))
        .collect();
    BipartiteGraph::from_edges(nu, nv, edges).unwrap()
}

fn permute_rows(t: &Tensor, perm: &[usize]) -> Tensor {
    // Row i of the result is row perm⁻¹(i) of t, i.e. node i moves to perm[i].
    let mut data = vec![0.0; t.len()];
    let c = t.cols();
    for (i, &p) in perm.iter().enumerate() {
        data[p * c..(p + 1) * c].copy_from_slice(t.row(i));
    }
    Tensor::matrix(t.rows(), c, data).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn encoder_is_permutation_equivariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nu, nv, d) = (rng.random_range(2..7), rng.random_range(2..7), 3);
        let graph = random_graph(&mut rng, nu, nv);
        let params = EncoderParams::init(d, 2, &mut rng).unwrap();
        let init = init_embeddings(nu, nv, d, &mut rng).unwrap();
        let mut pu: Vec<usize> = (0..nu).collect();
        let mut pv: Vec<usize> = (0..nv).collect();
        pu.shuffle(&mut rng);
        pv.shuffle(&mut rng);

        let edges = graph.edges().iter().map(|&(u, v)| (pu[u], pv[v]));
        let permuted = BipartiteGraph::from_edges(nu, nv, edges).unwrap();
        let pinit = EmbeddingPair { emb_u: permute_rows(&init.emb_u, &pu), emb_v: permute_rows(&init.emb_v, &pv) };

        let a = encode(&graph, &params, &init, Dropout::Off, &mut rng).unwrap();
        let b = encode(&permuted, &params, &pinit, Dropout::Off, &mut rng).unwrap();
        let expect_u = permute_rows(&a.emb_u, &pu);
        let expect_v = permute_rows(&a.emb_v, &pv);
        for (x, y) in expect_u.data().iter().zip(b.emb_u.data()).chain(expect_v.data().iter().zip(b.emb_v.data())) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn encoder_gradients_match_finite_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nu, nv, d) = (rng.random_range(2..5), rng.random_range(2..5), 3);
        let graph = random_graph(&mut rng, nu, nv);
        let enc = EncoderParams::init(d, 2, &mut rng).unwrap();
        let init = init_embeddings(nu, nv, d, &mut rng).unwrap();
        let cu = Tensor::matrix(nu, d, (0..nu * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let cv = Tensor::matrix(nv, d, (0..nv * d).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let mut params: Vec<Tensor> = enc.layers.iter().flat_map(|l| [l.w1.clone(), l.w2.clone(), l.w3.clone(), l.w4.clone()]).collect();
        params.push(init.emb_u.clone());
        params.push(init.emb_v.clone());

        let builder = |g: &mut Graph, vars: &[coin_autodiff::Var]| {
            let layers = vars[..8].chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect();
            let ev = coin_core::encoder::EncoderVars { layers, leaky_slope: 0.1 };
            let mut unused = ChaCha8Rng::seed_from_u64(0);
            let (u, v) = encode_on(g, &graph, &ev, vars[8], vars[9], Dropout::Off, &mut unused)
                .map_err(|e| coin_autodiff::AutodiffError::InvalidArgument { op: "encode", msg: e.to_string() })?;
            let a = g.constant(cu.clone());
            let b = g.constant(cv.clone());
            let su = g.multiply(u, a)?;
            let sv = g.multiply(v, b)?;
            let su = g.sum(su);
            let sv = g.sum(sv);
            g.add(su, sv)
        };
        let report = gradient_check(builder, &params, 1e-5).unwrap();
        prop_assert!(report.max_rel_error < 1e-4, "{:?}", report);
    }
}
