use coin_autodiff::{gradient_check, Graph, Tensor};
use coin_core::encoder::{init_embeddings, EmbeddingPair};
use coin_core::graph::{BipartiteGraph, EdgePrior};
use coin_core::objectives::{
    cluster_probs, co_cluster_joint, instance_loss, score, ClusterHeads, CoClusterJoint, InstanceLossForm, PairScorer,
    ScorerParams, Similarity,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn stochastic(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    let mut data = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let w: Vec<f64> = (0..cols).map(|_| rng.random_range(0.0..1.0f64).powi(3)).collect();
        let s: f64 = w.iter().sum::<f64>().max(1e-300);
        data.extend(w.iter().map(|x| x / s));
    }
    Tensor::matrix(rows, cols, data).unwrap()
}

fn random_graph(rng: &mut ChaCha8Rng, nu: usize, nv: usize) -> BipartiteGraph {
    loop {
        let edges: Vec<_> = (0..nu)
            .flat_map(|u| (0..nv).map(move |v| (u, v)))
            .filter(|_| rng.random_bool(0.5))
            .collect();
        if !edges.is_empty() {
            return BipartiteGraph::from_edges(nu, nv, edges).unwrap();
        }
    }
}

fn brute_joint(pu: &Tensor, pv: &Tensor, prior: &EdgePrior) -> Vec<Vec<f64>> {
    let (nk, nl) = (pu.cols(), pv.cols());
    let mut j = vec![vec![0.0; nl]; nk];
    for (k, row) in j.iter_mut().enumerate() {
        for (l, cell) in row.iter_mut().enumerate() {
            for u in 0..pu.rows() {
                for v in 0..pv.rows() {
                    *cell += prior.mass(u, v) * pu.get(u, k) * pv.get(v, l);
                }
            }
        }
    }
    j
}

fn direct_mi(j: &[Vec<f64>]) -> f64 {
    let pk: Vec<f64> = j.iter().map(|r| r.iter().sum()).collect();
    let pl: Vec<f64> = (0..j[0].len()).map(|l| j.iter().map(|r| r[l]).sum()).collect();
    let mut mi = 0.0;
    for (k, row) in j.iter().enumerate() {
        for (l, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (pk[k] * pl[l])).ln();
            }
        }
    }
    mi
}

fn permute_cols(t: &Tensor, perm: &[usize]) -> Tensor {
    let mut out = t.clone();
    for r in 0..t.rows() {
        for (c, &p) in perm.iter().enumerate() {
            out.data_mut()[r * t.cols() + p] = t.get(r, c);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn joint_matches_quadruple_loop(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 4, 4);
        let prior = graph.edge_prior().unwrap();
        let (nk, nl) = (rng.random_range(2..5), rng.random_range(2..5));
        let pu = stochastic(&mut rng, 4, nk);
        let pv = stochastic(&mut rng, 4, nl);
        let joint = co_cluster_joint(&pu, &pv, &prior).unwrap();
        let brute = brute_joint(&pu, &pv, &prior);
        for k in 0..nk {
            for l in 0..nl {
                prop_assert!((joint.joint.get(k, l) - brute[k][l]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn joint_invariants_and_mi_bounds(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (nu, nv) = (rng.random_range(2..9), rng.random_range(2..9));
        let graph = random_graph(&mut rng, nu, nv);
        let prior = graph.edge_prior().unwrap();
        prop_assert!((prior.total_mass() - 1.0).abs() < 1e-12);
        let (nk, nl) = (rng.random_range(1..6), rng.random_range(1..6));
        let pu = stochastic(&mut rng, nu, nk);
        let pv = stochastic(&mut rng, nv, nl);
        let j = co_cluster_joint(&pu, &pv, &prior).unwrap();
        prop_assert!((j.joint.sum() - 1.0).abs() < 1e-10);
        prop_assert!(j.joint.data().iter().all(|&p| p >= 0.0));
        for (k, &m) in j.marginal_k.iter().enumerate() {
            let row: f64 = j.joint.row(k).iter().sum();
            prop_assert!((row - m).abs() < 1e-15);
        }
        let mi = j.mutual_information();
        let bound = (nk as f64).ln().min((nl as f64).ln());
        prop_assert!((-1e-12..=bound + 1e-12).contains(&mi), "mi {mi} bound {bound}");
        let rows: Vec<Vec<f64>> = (0..nk).map(|k| j.joint.row(k).to_vec()).collect();
        prop_assert!((mi - direct_mi(&rows)).abs() < 1e-12);
    }

    #[test]
    fn mi_invariant_under_cluster_relabeling(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let graph = random_graph(&mut rng, 6, 5);
        let prior = graph.edge_prior().unwrap();
        let pu = stochastic(&mut rng, 6, 4);
        let pv = stochastic(&mut rng, 5, 3);
        let base = co_cluster_joint(&pu, &pv, &prior).unwrap().mutual_information();
        let pu2 = permute_cols(&pu, &[2, 0, 3, 1]);
        let pv2 = permute_cols(&pv, &[1, 2, 0]);
        let permuted = co_cluster_joint(&pu2, &pv2, &prior).unwrap().mutual_information();
        prop_assert!((base - permuted).abs() < 1e-14);
    }

    #[test]
    fn head_rows_are_distributions(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d = rng.random_range(1..9);
        let emb = init_embeddings(7, 5, d, &mut rng).unwrap();
        let emb = EmbeddingPair { emb_u: emb.emb_u.map(|x| 30.0 * x), emb_v: emb.emb_v };
        let hidden = rng.random_range(0..3);
        let heads = ClusterHeads::init(d, 3, 4, hidden, &mut rng).unwrap();
        let (pu, pv) = cluster_probs(&emb, &heads).unwrap();
        for p in [&pu, &pv] {
            for r in 0..p.rows() {
                prop_assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
                prop_assert!(p.row(r).iter().all(|&x| x > 0.0));
            }
        }
    }

    #[test]
    fn instance_terms_lie_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb = init_embeddings(5, 6, 4, &mut rng).unwrap();
        let scorer = ScorerParams::init(4, &mut rng);
        let pos: Vec<_> = (0..8).map(|_| (rng.random_range(0..5), rng.random_range(0..6))).collect();
        let neg: Vec<_> = (0..8).map(|_| rng.random_range(0..6)).collect();
        for i in 0..pos.len() {
            let t = instance_loss(&pos[i..=i], &neg[i..=i], &emb, &scorer, InstanceLossForm::Literal).unwrap();
            prop_assert!(t > 0.0 && t < 1.0);
        }
        let total = instance_loss(&pos, &neg, &emb, &scorer, InstanceLossForm::Literal).unwrap();
        prop_assert!(total > 0.0 && total < pos.len() as f64);
    }

    #[test]
    fn scorer_gradients_match_finite_differences(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let emb = init_embeddings(4, 5, 3, &mut rng).unwrap();
        let scorer = ScorerParams::init(3, &mut rng);
        let us: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
        let vs: Vec<usize> = (0..6).map(|_| rng.random_range(0..5)).collect();
        for kind in [Similarity::Mlp, Similarity::Dot, Similarity::Cosine] {
            let params = vec![emb.emb_u.clone(), emb.emb_v.clone(), scorer.w1.clone(), scorer.w2.clone()];
            let builder = |g: &mut Graph, p: &[coin_autodiff::Var]| {
                let vars = coin_core::objectives::ScorerVars { w1: p[2], w2: p[3] };
                let s = PairScorer::new(g, p[0], p[1], Some(vars), kind)
                    .and_then(|s| s.score(g, &us, &vs))
                    .map_err(|e| coin_autodiff::AutodiffError::InvalidArgument { op: "score", msg: e.to_string() })?;
                let t = g.tanh(s);
                Ok(g.sum(t))
            };
            let r = gradient_check(builder, &params, 1e-5).unwrap();
            prop_assert!(r.max_rel_error < 1e-4, "{kind:?}: {r:?}");
        }
    }
}

#[test]
fn antisymmetric_scorer_flips_sign_when_arguments_swap() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let d = 4;
    let a = coin_core::encoder::xavier_uniform(d, d, &mut rng);
    let mut w1 = Vec::with_capacity(2 * d * d);
    w1.extend_from_slice(a.data());
    w1.extend(a.data().iter().map(|x| -x));
    let scorer = ScorerParams {
        w1: Tensor::matrix(2 * d, d, w1).unwrap(),
        w2: coin_core::encoder::xavier_uniform(d, 1, &mut rng),
    };
    let u: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s = score(&u, &v, &scorer).unwrap();
    let swapped = score(&v, &u, &scorer).unwrap();
    assert!(s.abs() > 1e-3);
    assert!((s + swapped).abs() < 1e-15);

    // Swapping the W1 blocks together with the arguments leaves S unchanged.
    let mut blocks = scorer.w1.slice_rows(d, 2 * d).unwrap().into_data();
    blocks.extend_from_slice(scorer.w1.slice_rows(0, d).unwrap().data());
    let swapped_w = ScorerParams {
        w1: Tensor::matrix(2 * d, d, blocks).unwrap(),
        w2: scorer.w2.clone(),
    };
    assert!((score(&v, &u, &swapped_w).unwrap() - s).abs() < 1e-15);
}

#[test]
fn hard_bicliques_reach_the_mi_ceiling() {
    let edges = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (3, 2), (3, 3), (2, 3)];
    let graph = BipartiteGraph::from_edges(4, 4, edges).unwrap();
    let hard = Tensor::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
    let j = co_cluster_joint(&hard, &hard, &graph.edge_prior().unwrap()).unwrap();
    assert_eq!(
        j,
        CoClusterJoint::from_joint(Tensor::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap()).unwrap()
    );
    assert!((j.mutual_information() - 2f64.ln()).abs() < 1e-15);
}
