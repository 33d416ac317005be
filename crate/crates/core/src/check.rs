//! Self-checks shared by the command line and the test suites: a
//! finite-difference check of the full objective and randomized runs of the
//! MI-difference identity.

use coin_autodiff::{analytic_gradients, compare_with_finite_differences, GradCheckReport, Graph, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::Dropout;
use crate::error::Result;
use crate::eval::{random_instance, verify_mi_difference, MiDifference};
use crate::graph::BipartiteGraph;
use crate::trainer::{objective_on, Model, ModelVars, PairBatch, TrainConfig};

pub const GRADCHECK_TOLERANCE: f64 = 1e-4;
pub const GRADCHECK_STEP: f64 = 1e-5;
pub const THEORY_TOLERANCE: f64 = 1e-10;
const HEAD_SHARPEN: f64 = 10.0;

/// Six U-nodes and six V-nodes in two loosely planted blocks.
pub fn toy_graph() -> BipartiteGraph {
    let edges = [
        (0, 0),
        (0, 1),
        (0, 2),
        (1, 0),
        (1, 2),
        (2, 1),
        (2, 2),
        (2, 3),
        (3, 3),
        (3, 4),
        (4, 4),
        (4, 5),
        (5, 3),
        (5, 5),
        (1, 4),
    ];
    BipartiteGraph::from_edges(6, 6, edges).expect("valid toy graph")
}

pub fn toy_config() -> TrainConfig {
    TrainConfig {
        d: 4,
        layers: 2,
        n_k: 2,
        n_l: 2,
        lambda: 1.0,
        seed: 7,
        ..Default::default()
    }
}

/// Finite-difference check of `λ · I(K;L) + L_I` with respect to every
/// parameter on the toy graph, dropout off. `corrupt` perturbs one analytic
/// entry so the failure path can be exercised.
pub fn objective_gradcheck(config: &TrainConfig, corrupt: bool) -> Result<GradCheckReport> {
    let graph = toy_graph();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut model = Model::new(graph.num_u(), graph.num_v(), config, &mut rng)?;
    // Freshly initialized heads are near uniform, where the MI gradient is
    // tiny next to the finite-difference truncation error. Sharpen them.
    for head in [&mut model.heads.head_u, &mut model.heads.head_v] {
        for (w, b) in &mut head.layers {
            *w = w.map(|x| HEAD_SHARPEN * x);
            *b = b.map(|x| HEAD_SHARPEN * x);
        }
    }
    let batch = PairBatch::sample(graph.edges(), &graph, config.negatives_per_positive, &mut rng)?;
    let prior = graph.edge_prior()?;
    let dims = model.dims();
    let slope = model.encoder.leaky_slope;
    let params: Vec<Tensor> = model.tensors().into_iter().cloned().collect();

    let builder = |g: &mut Graph, vars: &[coin_autodiff::Var]| {
        let mv = ModelVars::from_vars(dims, slope, vars);
        let mut unused = ChaCha8Rng::seed_from_u64(0);
        objective_on(g, &graph, &mv, config, &prior, &batch, Dropout::Off, &mut unused)
            .map(|t| t.total)
            .map_err(|e| coin_autodiff::AutodiffError::InvalidArgument {
                op: "objective",
                msg: e.to_string(),
            })
    };
    let mut analytic = analytic_gradients(&builder, &params)?;
    if corrupt {
        analytic[0].data_mut()[0] += 1.0;
    }
    Ok(compare_with_finite_differences(
        &builder,
        &params,
        &analytic,
        GRADCHECK_STEP,
    )?)
}

/// Outcome of the randomized identity runs.
#[derive(Clone, Debug, PartialEq)]
pub struct TheorySuiteReport {
    pub instances: usize,
    pub max_residual: f64,
    /// Seeds whose residual exceeded the tolerance or whose `I(K;L)`
    /// exceeded `I(U;V)`.
    pub failures: Vec<(u64, MiDifference)>,
}

impl TheorySuiteReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Runs `instances` random problems seeded `first_seed, first_seed + 1, …`.
pub fn theory_suite(instances: usize, first_seed: u64, max_nodes: usize) -> Result<TheorySuiteReport> {
    let mut report = TheorySuiteReport {
        instances,
        max_residual: 0.0,
        failures: Vec::new(),
    };
    for seed in first_seed..first_seed + instances as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (p_uv, pk, pl) = random_instance(&mut rng, max_nodes);
        let r = verify_mi_difference(&p_uv, &pk, &pl)?;
        report.max_residual = report.max_residual.max(r.residual);
        if r.residual >= THEORY_TOLERANCE || r.i_kl > r.i_uv + THEORY_TOLERANCE {
            report.failures.push((seed, r));
        }
    }
    Ok(report)
}
