//! Cluster heads, the co-cluster joint and its mutual information, the pair
//! scorer and the instance-wise contrastive term.
//!
//! Every objective here is written in the maximized orientation. The trainer
//! negates the combined value once before backpropagation.

use coin_autodiff::{Graph, Tensor, Var, LOG_EPS};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoder::{xavier_uniform, EmbeddingPair};
use crate::error::{CoinError, Result};
use crate::graph::EdgePrior;

/// One cluster network: optional `d × d` tanh layers followed by a
/// `d × n` linear map and a row softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterHead {
    /// `(weight, bias)` pairs; the last one produces the logits.
    pub layers: Vec<(Tensor, Tensor)>,
}

impl ClusterHead {
    pub fn init<R: Rng + ?Sized>(d: usize, n: usize, hidden: usize, rng: &mut R) -> Self {
        let mut layers: Vec<_> = (0..hidden)
            .map(|_| (xavier_uniform(d, d, rng), Tensor::zeros(&[1, d])))
            .collect();
        layers.push((xavier_uniform(d, n, rng), Tensor::zeros(&[1, n])));
        Self { layers }
    }

    pub fn zeros(d: usize, n: usize) -> Self {
        Self {
            layers: vec![(Tensor::zeros(&[d, n]), Tensor::zeros(&[1, n]))],
        }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].0.rows()
    }

    pub fn num_clusters(&self) -> usize {
        self.layers.last().map_or(0, |(w, _)| w.cols())
    }

    pub fn register(&self, g: &mut Graph) -> HeadVars {
        HeadVars {
            layers: self
                .layers
                .iter()
                .map(|(w, b)| (g.param(w.clone()), g.param(b.clone())))
                .collect(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct HeadVars {
    pub layers: Vec<(Var, Var)>,
}

impl HeadVars {
    /// Row-stochastic cluster probabilities for the embedding rows in `emb`.
    pub fn probs(&self, g: &mut Graph, emb: Var) -> Result<Var> {
        let mut h = emb;
        let last = self.layers.len() - 1;
        for (i, &(w, b)) in self.layers.iter().enumerate() {
            let lin = g.matmul(h, w)?;
            h = g.add_row_bias(lin, b)?;
            if i < last {
                h = g.tanh(h);
            }
        }
        Ok(g.softmax_rows(h)?)
    }
}

/// The U-side head `C_U` (N_K clusters) and V-side head `C_V` (N_L clusters).
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterHeads {
    pub head_u: ClusterHead,
    pub head_v: ClusterHead,
}

impl ClusterHeads {
    pub fn init<R: Rng + ?Sized>(d: usize, n_k: usize, n_l: usize, hidden: usize, rng: &mut R) -> Result<Self> {
        if n_k == 0 || n_l == 0 {
            return Err(CoinError::InvalidArgument("cluster counts must be positive".into()));
        }
        Ok(Self {
            head_u: ClusterHead::init(d, n_k, hidden, rng),
            head_v: ClusterHead::init(d, n_l, hidden, rng),
        })
    }

    pub fn n_k(&self) -> usize {
        self.head_u.num_clusters()
    }

    pub fn n_l(&self) -> usize {
        self.head_v.num_clusters()
    }
}

/// `(P_U, P_V)`: per-node cluster distributions, `|U| × N_K` and `|V| × N_L`.
pub fn cluster_probs(emb: &EmbeddingPair, heads: &ClusterHeads) -> Result<(Tensor, Tensor)> {
    for (name, head, e) in [("U", &heads.head_u, &emb.emb_u), ("V", &heads.head_v, &emb.emb_v)] {
        if head.input_width() != e.cols() {
            return Err(CoinError::Dimension(format!(
                "{name} head expects width {}, embeddings have {}",
                head.input_width(),
                e.cols()
            )));
        }
    }
    let mut g = Graph::new();
    let hu = heads.head_u.register(&mut g);
    let hv = heads.head_v.register(&mut g);
    let eu = g.constant(emb.emb_u.clone());
    let ev = g.constant(emb.emb_v.clone());
    let pu = hu.probs(&mut g, eu)?;
    let pv = hv.probs(&mut g, ev)?;
    Ok((g.value(pu).clone(), g.value(pv).clone()))
}

/// The `N_K × N_L` joint `p(k, l)` with its marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct CoClusterJoint {
    pub joint: Tensor,
    pub marginal_k: Vec<f64>,
    pub marginal_l: Vec<f64>,
}

impl CoClusterJoint {
    pub fn from_joint(joint: Tensor) -> Result<Self> {
        let (k, l) = joint
            .dims2()
            .ok_or_else(|| CoinError::Dimension(format!("joint must be a matrix, got {:?}", joint.shape())))?;
        let mut marginal_k = vec![0.0; k];
        let mut marginal_l = vec![0.0; l];
        for (i, mk) in marginal_k.iter_mut().enumerate() {
            for (j, ml) in marginal_l.iter_mut().enumerate() {
                let p = joint.get(i, j);
                *mk += p;
                *ml += p;
            }
        }
        Ok(Self {
            joint,
            marginal_k,
            marginal_l,
        })
    }

    /// `I(K; L)` in nats, with `0 · log 0 = 0` through eps-clamped logs.
    pub fn mutual_information(&self) -> f64 {
        let ln = |x: f64| x.max(LOG_EPS).ln();
        let mut mi = 0.0;
        for (k, &pk) in self.marginal_k.iter().enumerate() {
            for (l, &pl) in self.marginal_l.iter().enumerate() {
                let p = self.joint.get(k, l);
                mi += p * (ln(p) - ln(pk * pl));
            }
        }
        mi
    }
}

pub fn mutual_information(joint: &CoClusterJoint) -> f64 {
    joint.mutual_information()
}

/// Which distribution over node pairs weights the joint.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorKind {
    /// Uniform over training edges.
    #[default]
    Edges,
    /// Product of the edge prior's marginals, `p(u) p(v)`.
    Independent,
}

/// `p(k, l) = Σ_{u,v} p(u, v) P_U[u, k] P_V[v, l]`.
pub fn co_cluster_joint(pu: &Tensor, pv: &Tensor, prior: &EdgePrior) -> Result<CoClusterJoint> {
    let mut g = Graph::new();
    let pu = g.constant(pu.clone());
    let pv = g.constant(pv.clone());
    let joint = joint_on(&mut g, pu, pv, prior, PriorKind::Edges)?;
    CoClusterJoint::from_joint(g.value(joint).clone())
}

/// Records the co-cluster joint on `g` and returns the `N_K × N_L` var.
pub fn joint_on(g: &mut Graph, pu: Var, pv: Var, prior: &EdgePrior, kind: PriorKind) -> Result<Var> {
    let (nu, nv) = (g.value(pu).rows(), g.value(pv).rows());
    if nu != prior.num_u() || nv != prior.num_v() {
        return Err(CoinError::Dimension(format!(
            "cluster probabilities cover ({nu}, {nv}) nodes, prior covers ({}, {})",
            prior.num_u(),
            prior.num_v()
        )));
    }
    let put = g.transpose(pu)?;
    match kind {
        PriorKind::Edges => {
            let weighted = g.spmm(prior.matrix(), pv)?;
            Ok(g.matmul(put, weighted)?)
        }
        PriorKind::Independent => {
            let (mu, mv) = prior.marginals();
            let mu = g.constant(Tensor::matrix(nu, 1, mu)?);
            let mv = g.constant(Tensor::matrix(1, nv, mv)?);
            let left = g.matmul(put, mu)?;
            let right = g.matmul(mv, pv)?;
            Ok(g.matmul(left, right)?)
        }
    }
}

/// Differentiable `I(K; L)` of a joint var.
pub fn mutual_information_on(g: &mut Graph, joint: Var) -> Result<Var> {
    let pk = g.row_sums(joint)?;
    let pl = g.col_sums(joint)?;
    let outer = g.matmul(pk, pl)?;
    let log_joint = g.log_clamped(joint, LOG_EPS)?;
    let log_outer = g.log_clamped(outer, LOG_EPS)?;
    let ratio = g.sub(log_joint, log_outer)?;
    let terms = g.multiply(joint, ratio)?;
    Ok(g.sum(terms))
}

/// Pair similarity used by the instance objective and by ranking.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Similarity {
    /// `w2 · tanh(W1ᵀ [u ‖ v])`.
    #[default]
    Mlp,
    Dot,
    Cosine,
}

const COSINE_EPS: f64 = 1e-12;

/// Weights of the two-layer scorer: `w1` is `2d × d`, `w2` is `d × 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScorerParams {
    pub w1: Tensor,
    pub w2: Tensor,
}

impl ScorerParams {
    pub fn init<R: Rng + ?Sized>(d: usize, rng: &mut R) -> Self {
        Self {
            w1: xavier_uniform(2 * d, d, rng),
            w2: xavier_uniform(d, 1, rng),
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            w1: Tensor::zeros(&[2 * d, d]),
            w2: Tensor::zeros(&[d, 1]),
        }
    }

    pub fn d(&self) -> usize {
        self.w1.cols()
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d();
        if self.w1.shape() != [2 * d, d] || self.w2.shape() != [d, 1] {
            return Err(CoinError::Dimension(format!(
                "scorer weights {:?} and {:?} are inconsistent",
                self.w1.shape(),
                self.w2.shape()
            )));
        }
        Ok(())
    }

    pub fn register(&self, g: &mut Graph) -> ScorerVars {
        ScorerVars {
            w1: g.param(self.w1.clone()),
            w2: g.param(self.w2.clone()),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ScorerVars {
    pub w1: Var,
    pub w2: Var,
}

/// `S(u, v)` for two embedding rows under the chosen similarity.
pub fn score_with(u_row: &[f64], v_row: &[f64], scorer: &ScorerParams, kind: Similarity) -> Result<f64> {
    let d = u_row.len();
    if v_row.len() != d {
        return Err(CoinError::Dimension(format!(
            "u has width {d}, v has width {}",
            v_row.len()
        )));
    }
    let dot: f64 = u_row.iter().zip(v_row).map(|(a, b)| a * b).sum();
    match kind {
        Similarity::Dot => Ok(dot),
        Similarity::Cosine => {
            let nu: f64 = u_row.iter().map(|a| a * a).sum();
            let nv: f64 = v_row.iter().map(|a| a * a).sum();
            Ok(dot / ((nu + COSINE_EPS) * (nv + COSINE_EPS)).sqrt())
        }
        Similarity::Mlp => {
            scorer.validate()?;
            if scorer.d() != d {
                return Err(CoinError::Dimension(format!(
                    "scorer width {} vs rows of width {d}",
                    scorer.d()
                )));
            }
            let w1 = &scorer.w1;
            let mut out = 0.0;
            for j in 0..d {
                let mut h = 0.0;
                for i in 0..d {
                    h += u_row[i] * w1.get(i, j) + v_row[i] * w1.get(d + i, j);
                }
                out += scorer.w2.get(j, 0) * h.tanh();
            }
            Ok(out)
        }
    }
}

/// `S(u, v) = w2 · tanh(W1ᵀ [u ‖ v])`.
pub fn score(u_row: &[f64], v_row: &[f64], scorer: &ScorerParams) -> Result<f64> {
    score_with(u_row, v_row, scorer, Similarity::Mlp)
}

/// Batched scorer over one pair of embedding vars.
///
/// For the MLP, `W1ᵀ [u ‖ v]` splits into `W1_topᵀ u + W1_botᵀ v`, so both
/// partitions are projected once and pairs only gather rows.
#[derive(Clone, Copy, Debug)]
pub struct PairScorer {
    kind: Similarity,
    left: Var,
    right: Var,
    w2: Option<Var>,
}

impl PairScorer {
    pub fn new(g: &mut Graph, emb_u: Var, emb_v: Var, vars: Option<ScorerVars>, kind: Similarity) -> Result<Self> {
        match kind {
            Similarity::Mlp => {
                let vars =
                    vars.ok_or_else(|| CoinError::InvalidArgument("MLP similarity needs scorer weights".into()))?;
                let d = g.value(emb_u).cols();
                if g.value(vars.w1).shape() != [2 * d, d] {
                    return Err(CoinError::Dimension(format!(
                        "scorer W1 is {:?}, embeddings have width {d}",
                        g.value(vars.w1).shape()
                    )));
                }
                let top = g.slice_rows(vars.w1, 0, d)?;
                let bot = g.slice_rows(vars.w1, d, 2 * d)?;
                let left = g.matmul(emb_u, top)?;
                let right = g.matmul(emb_v, bot)?;
                Ok(Self {
                    kind,
                    left,
                    right,
                    w2: Some(vars.w2),
                })
            }
            Similarity::Dot | Similarity::Cosine => Ok(Self {
                kind,
                left: emb_u,
                right: emb_v,
                w2: None,
            }),
        }
    }

    /// Scores for the pairs `(us[i], vs[i])` as an `n × 1` column.
    pub fn score(&self, g: &mut Graph, us: &[usize], vs: &[usize]) -> Result<Var> {
        if us.len() != vs.len() {
            return Err(CoinError::InvalidArgument(format!(
                "{} u indices but {} v indices",
                us.len(),
                vs.len()
            )));
        }
        let a = g.gather_rows(self.left, us.to_vec())?;
        let b = g.gather_rows(self.right, vs.to_vec())?;
        match self.kind {
            Similarity::Mlp => {
                let pre = g.add(a, b)?;
                let h = g.tanh(pre);
                Ok(g.matmul(h, self.w2.expect("MLP scorer has w2"))?)
            }
            Similarity::Dot => {
                let prod = g.multiply(a, b)?;
                Ok(g.row_sums(prod)?)
            }
            Similarity::Cosine => {
                let prod = g.multiply(a, b)?;
                let dot = g.row_sums(prod)?;
                let inv_a = inverse_norm(g, a)?;
                let inv_b = inverse_norm(g, b)?;
                let s = g.multiply(dot, inv_a)?;
                Ok(g.multiply(s, inv_b)?)
            }
        }
    }
}

fn inverse_norm(g: &mut Graph, rows: Var) -> Result<Var> {
    let sq = g.multiply(rows, rows)?;
    let sq = g.row_sums(sq)?;
    let eps = g.constant(Tensor::full(g.value(sq).shape(), COSINE_EPS));
    let sq = g.add(sq, eps)?;
    Ok(g.powf(sq, -0.5)?)
}

/// Form of the per-pair contrastive term.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceLossForm {
    /// `σ(S(u,v) − S(u,v'))`, the ratio `e^{S⁺} / (e^{S⁺} + e^{S⁻})` itself.
    #[default]
    Literal,
    /// `log σ(S(u,v) − S(u,v'))`, the usual log-softmax form.
    Log,
}

/// How per-pair terms are combined into the instance objective.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reduction {
    #[default]
    Sum,
    Mean,
}

/// Sum of per-pair terms from positive and negative score columns.
pub fn instance_objective_on(g: &mut Graph, pos: Var, neg: Var, form: InstanceLossForm) -> Result<Var> {
    reduced_instance_objective_on(g, pos, neg, form, Reduction::Sum)
}

pub fn reduced_instance_objective_on(
    g: &mut Graph,
    pos: Var,
    neg: Var,
    form: InstanceLossForm,
    reduction: Reduction,
) -> Result<Var> {
    if g.value(pos).is_empty() {
        return Err(CoinError::InvalidArgument(
            "instance objective over an empty batch".into(),
        ));
    }
    let diff = g.sub(pos, neg)?;
    let terms = match form {
        InstanceLossForm::Literal => g.sigmoid(diff),
        InstanceLossForm::Log => g.log_sigmoid(diff),
    };
    Ok(match reduction {
        Reduction::Sum => g.sum(terms),
        Reduction::Mean => g.mean(terms),
    })
}

/// Evaluates the instance objective directly from embeddings.
pub fn instance_loss(
    pos_edges: &[(usize, usize)],
    neg_map: &[usize],
    emb: &EmbeddingPair,
    scorer: &ScorerParams,
    form: InstanceLossForm,
) -> Result<f64> {
    if pos_edges.is_empty() {
        return Err(CoinError::InvalidArgument(
            "instance objective over an empty batch".into(),
        ));
    }
    if pos_edges.len() != neg_map.len() {
        return Err(CoinError::InvalidArgument(format!(
            "{} positives but {} negatives",
            pos_edges.len(),
            neg_map.len()
        )));
    }
    let mut total = 0.0;
    for (&(u, v), &vn) in pos_edges.iter().zip(neg_map) {
        let s_pos = score(emb.emb_u.row(u), emb.emb_v.row(v), scorer)?;
        let s_neg = score(emb.emb_u.row(u), emb.emb_v.row(vn), scorer)?;
        let x = s_pos - s_neg;
        total += match form {
            InstanceLossForm::Literal => stable_sigmoid(x),
            InstanceLossForm::Log => -((-x).max(0.0) + (-x.abs()).exp().ln_1p()),
        };
    }
    Ok(total)
}

fn stable_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `λ · mi + inst`.
pub fn total_objective(mi: f64, inst: f64, lambda: f64) -> f64 {
    lambda * mi + inst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::BipartiteGraph;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bicliques() -> BipartiteGraph {
        let edges = [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)];
        BipartiteGraph::from_edges(4, 4, edges).unwrap()
    }

    fn hard(rows: &[usize], n: usize) -> Tensor {
        let data = rows
            .iter()
            .flat_map(|&c| (0..n).map(move |j| if j == c { 1.0 } else { 0.0 }))
            .collect();
        Tensor::matrix(rows.len(), n, data).unwrap()
    }

    #[test]
    fn block_aligned_joint_is_diagonal() {
        let g = bicliques();
        let p = hard(&[0, 0, 1, 1], 2);
        let j = co_cluster_joint(&p, &p, &g.edge_prior().unwrap()).unwrap();
        assert_eq!(j.joint.data(), &[0.5, 0.0, 0.0, 0.5]);
        assert!((j.mutual_information() - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_rows_give_independent_joint() {
        let g = bicliques();
        let pu = Tensor::full(&[4, 2], 0.5);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let raw: Vec<f64> = (0..8).map(|_| rng.random_range(0.1..1.0)).collect();
        let mut pv = Tensor::matrix(4, 2, raw).unwrap();
        for r in 0..4 {
            let s = pv.row(r).iter().sum::<f64>();
            pv.data_mut()[2 * r..2 * r + 2].iter_mut().for_each(|x| *x /= s);
        }
        let j = co_cluster_joint(&pu, &pv, &g.edge_prior().unwrap()).unwrap();
        for k in 0..2 {
            for l in 0..2 {
                assert!((j.joint.get(k, l) - j.marginal_l[l] / 2.0).abs() < 1e-15);
            }
        }
        assert!(j.mutual_information().abs() < 1e-12);
    }

    #[test]
    fn independent_prior_has_zero_mi() {
        let g = bicliques();
        let p = hard(&[0, 0, 1, 1], 2);
        let mut gr = Graph::new();
        let a = gr.constant(p.clone());
        let b = gr.constant(p);
        let joint = joint_on(&mut gr, a, b, &g.edge_prior().unwrap(), PriorKind::Independent).unwrap();
        let mi = mutual_information_on(&mut gr, joint).unwrap();
        assert!(gr.value(mi).item().abs() < 1e-12);
        assert!((gr.value(joint).sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_heads_are_uniform() {
        let emb = EmbeddingPair {
            emb_u: Tensor::full(&[3, 4], 0.3),
            emb_v: Tensor::full(&[2, 4], -0.2),
        };
        let heads = ClusterHeads {
            head_u: ClusterHead::zeros(4, 5),
            head_v: ClusterHead::zeros(4, 3),
        };
        let (pu, pv) = cluster_probs(&emb, &heads).unwrap();
        assert!(pu.data().iter().all(|&x| (x - 0.2).abs() < 1e-15));
        assert!(pv.data().iter().all(|&x| (x - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn ln2_logit_gives_two_thirds() {
        let emb = EmbeddingPair {
            emb_u: Tensor::matrix(1, 1, vec![1.0]).unwrap(),
            emb_v: Tensor::matrix(1, 1, vec![1.0]).unwrap(),
        };
        let mut head = ClusterHead::zeros(1, 2);
        head.layers[0].0 = Tensor::matrix(1, 2, vec![2f64.ln(), 0.0]).unwrap();
        let heads = ClusterHeads {
            head_u: head.clone(),
            head_v: head,
        };
        let (pu, _) = cluster_probs(&emb, &heads).unwrap();
        assert!((pu.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((pu.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn head_width_mismatch() {
        let emb = EmbeddingPair {
            emb_u: Tensor::zeros(&[2, 3]),
            emb_v: Tensor::zeros(&[2, 3]),
        };
        let heads = ClusterHeads {
            head_u: ClusterHead::zeros(4, 2),
            head_v: ClusterHead::zeros(3, 2),
        };
        assert!(matches!(cluster_probs(&emb, &heads), Err(CoinError::Dimension(_))));
    }

    #[test]
    fn zero_scorer_scores_zero() {
        let s = ScorerParams::zeros(3);
        assert_eq!(score(&[1.0, 2.0, 3.0], &[-1.0, 0.5, 2.0], &s).unwrap(), 0.0);
        assert!(score(&[1.0], &[1.0, 2.0], &s).is_err());
    }

    #[test]
    fn batched_scorer_matches_direct() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let d = 5;
        let emb = crate::encoder::init_embeddings(4, 6, d, &mut rng).unwrap();
        let scorer = ScorerParams::init(d, &mut rng);
        let (us, vs) = (vec![0, 3, 1, 3], vec![5, 0, 2, 2]);
        for kind in [Similarity::Mlp, Similarity::Dot, Similarity::Cosine] {
            let mut g = Graph::new();
            let eu = g.constant(emb.emb_u.clone());
            let ev = g.constant(emb.emb_v.clone());
            let sv = scorer.register(&mut g);
            let ps = PairScorer::new(&mut g, eu, ev, Some(sv), kind).unwrap();
            let out = ps.score(&mut g, &us, &vs).unwrap();
            for i in 0..us.len() {
                let direct = score_with(emb.emb_u.row(us[i]), emb.emb_v.row(vs[i]), &scorer, kind).unwrap();
                assert!((g.value(out).data()[i] - direct).abs() < 1e-12, "{kind:?}");
            }
        }
    }

    #[test]
    fn instance_terms() {
        let mut g = Graph::new();
        let pos = g.constant(Tensor::matrix(3, 1, vec![0.4, 1.0, -2.0]).unwrap());
        let neg = g.constant(Tensor::matrix(3, 1, vec![0.4, 0.0, -2.0]).unwrap());
        let lit = instance_objective_on(&mut g, pos, neg, InstanceLossForm::Literal).unwrap();
        assert!((g.value(lit).item() - (1.0 + 0.731_058_578_630_004_9)).abs() < 1e-12);
        let log = instance_objective_on(&mut g, pos, neg, InstanceLossForm::Log).unwrap();
        let expect = 2.0 * 0.5f64.ln() + 0.731_058_578_630_004_9f64.ln();
        assert!((g.value(log).item() - expect).abs() < 1e-12);
        let empty = g.constant(Tensor::zeros(&[0, 1]));
        assert!(instance_objective_on(&mut g, empty, empty, InstanceLossForm::Literal).is_err());
    }

    #[test]
    fn plain_instance_loss_matches_naive_ratio() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let emb = crate::encoder::init_embeddings(3, 4, 4, &mut rng).unwrap();
        let scorer = ScorerParams::init(4, &mut rng);
        let pos = [(0, 1), (1, 2), (2, 0)];
        let neg = [3, 0, 2];
        let mut naive = 0.0;
        let mut naive_log = 0.0;
        for (&(u, v), &vn) in pos.iter().zip(&neg) {
            let a = score(emb.emb_u.row(u), emb.emb_v.row(v), &scorer).unwrap().exp();
            let b = score(emb.emb_u.row(u), emb.emb_v.row(vn), &scorer).unwrap().exp();
            naive += a / (a + b);
            naive_log += (a / (a + b)).ln();
        }
        let lit = instance_loss(&pos, &neg, &emb, &scorer, InstanceLossForm::Literal).unwrap();
        let log = instance_loss(&pos, &neg, &emb, &scorer, InstanceLossForm::Log).unwrap();
        assert!((lit - naive).abs() < 1e-12);
        assert!((log - naive_log).abs() < 1e-12);
        assert!(instance_loss(&[], &[], &emb, &scorer, InstanceLossForm::Literal).is_err());
    }

    #[test]
    fn total_objective_arithmetic() {
        assert_eq!(total_objective(0.5, 2.0, 10.0), 7.0);
        assert_eq!(total_objective(0.37, 1.25, 0.0), 1.25);
        assert_eq!(total_objective(0.3, 0.9, 1.0), 0.9 + 0.3);
    }
}
