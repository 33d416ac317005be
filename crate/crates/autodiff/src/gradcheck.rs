//! Central finite-difference verification of tape gradients.

use rayon::prelude::*;

use crate::error::{AutodiffError, Result};
use crate::graph::{Graph, Var};
use crate::tensor::Tensor;

/// Denominator floor for the relative error.
const REL_FLOOR: f64 = 1e-8;

/// Outcome of a gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter index, flat entry index)` of the worst entry.
    pub worst: Option<(usize, usize)>,
    pub entries_checked: usize,
}

fn evaluate<F>(builder: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut graph = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| graph.param(p.clone())).collect();
    let root = builder(&mut graph, &vars)?;
    let value = graph.value(root);
    if !value.is_scalar() {
        return Err(AutodiffError::NonScalarRoot(value.shape().to_vec()));
    }
    let v = value.item();
    if !v.is_finite() {
        return Err(AutodiffError::NonFinite(format!("builder produced {v}")));
    }
    Ok(v)
}

/// Gradients computed by the tape, one per parameter.
pub fn analytic_gradients<F>(builder: &F, params: &[Tensor]) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut graph = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| graph.param(p.clone())).collect();
    let root = builder(&mut graph, &vars)?;
    let grads = graph.backward(root)?;
    let out: Vec<Tensor> = vars.iter().map(|&v| grads.wrt(v)).collect();
    if let Some(i) = out.iter().position(|t| !t.is_finite()) {
        return Err(AutodiffError::NonFinite(format!("analytic gradient of parameter {i}")));
    }
    Ok(out)
}

/// Compares supplied gradients against central differences with step `eps`.
///
/// Probes run in parallel; each builds its own graph.
pub fn compare_with_finite_differences<F>(
    builder: &F,
    params: &[Tensor],
    analytic: &[Tensor],
    eps: f64,
) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var> + Sync,
{
    if analytic.len() != params.len() {
        return Err(AutodiffError::InvalidArgument {
            op: "gradient_check",
            msg: format!("{} gradients for {} parameters", analytic.len(), params.len()),
        });
    }
    let coords: Vec<(usize, usize)> = params
        .iter()
        .enumerate()
        .flat_map(|(p, t)| (0..t.len()).map(move |e| (p, e)))
        .collect();

    let errors: Vec<f64> = coords
        .par_iter()
        .map(|&(p, e)| {
            let mut probe = params.to_vec();
            let base = params[p].data()[e];
            probe[p].data_mut()[e] = base + eps;
            let plus = evaluate(builder, &probe)?;
            probe[p].data_mut()[e] = base - eps;
            let minus = evaluate(builder, &probe)?;
            let numeric = (plus - minus) / (2.0 * eps);
            let exact = analytic[p].data()[e];
            let denom = exact.abs().max(numeric.abs()).max(REL_FLOOR);
            Ok((exact - numeric).abs() / denom)
        })
        .collect::<Result<_>>()?;

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        entries_checked: coords.len(),
    };
    for (&coord, &err) in coords.iter().zip(&errors) {
        if report.worst.is_none() || err > report.max_rel_error {
            report.max_rel_error = err;
            report.worst = Some(coord);
        }
    }
    Ok(report)
}

/// Max relative error between tape gradients and central differences.
pub fn gradient_check<F>(builder: F, params: &[Tensor], eps: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var> + Sync,
{
    let analytic = analytic_gradients(&builder, params)?;
    compare_with_finite_differences(&builder, params, &analytic, eps)
}
