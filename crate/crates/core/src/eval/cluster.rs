use std::collections::HashMap;

use coin_autodiff::Tensor;
use serde::{Deserialize, Serialize};

use crate::error::{CoinError, Result};

/// Per-row argmax; ties go to the lowest index.
pub fn cluster_assign(p: &Tensor) -> Vec<usize> {
    (0..p.rows())
        .map(|r| {
            let row = p.row(r);
            let mut best = 0;
            for (j, &x) in row.iter().enumerate().skip(1) {
                if x > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Denominator used to normalize mutual information of two labelings.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NmiNormalization {
    #[default]
    Arithmetic,
    Geometric,
}

fn entropy(counts: impl Iterator<Item = usize>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// NMI with arithmetic-mean normalization.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::Arithmetic)
}

/// `I(pred; truth) / mean(H(pred), H(truth))`. Two constant labelings score
/// 1; a constant labeling against a non-constant one scores 0.
pub fn nmi_with(pred: &[usize], truth: &[usize], norm: NmiNormalization) -> Result<f64> {
    if pred.is_empty() {
        return Err(CoinError::InvalidArgument("NMI of empty labelings".into()));
    }
    if pred.len() != truth.len() {
        return Err(CoinError::InvalidArgument(format!(
            "labelings of length {} and {}",
            pred.len(),
            truth.len()
        )));
    }
    let n = pred.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut a: HashMap<usize, usize> = HashMap::new();
    let mut b: HashMap<usize, usize> = HashMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *joint.entry((p, t)).or_default() += 1;
        *a.entry(p).or_default() += 1;
        *b.entry(t).or_default() += 1;
    }
    let ha = entropy(a.values().copied(), n);
    let hb = entropy(b.values().copied(), n);
    if a.len() == 1 && b.len() == 1 {
        return Ok(1.0);
    }
    if a.len() == 1 || b.len() == 1 {
        return Ok(0.0);
    }
    // Sort the cells so the floating-point sum is order-stable.
    let mut cells: Vec<_> = joint.into_iter().collect();
    cells.sort_unstable();
    let mi: f64 = cells
        .into_iter()
        .map(|((p, t), c)| {
            let pxy = c as f64 / n;
            pxy * (pxy * n * n / (a[&p] as f64 * b[&t] as f64)).ln()
        })
        .sum();
    let denom = match norm {
        NmiNormalization::Arithmetic => 0.5 * (ha + hb),
        NmiNormalization::Geometric => (ha * hb).sqrt(),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_rules() {
        let p = Tensor::from_rows(&[vec![0.1, 0.7, 0.2], vec![1.0 / 3.0; 3], vec![0.0, 0.0, 1.0]]).unwrap();
        assert_eq!(cluster_assign(&p), vec![1, 0, 2]);
    }

    #[test]
    fn nmi_conventions() {
        assert_eq!(nmi(&[0, 0, 1, 1, 2], &[0, 0, 1, 1, 2]).unwrap(), 1.0);
        assert_eq!(nmi(&[3, 3, 5, 5], &[0, 0, 1, 1]).unwrap(), 1.0);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 1, 0, 1]).unwrap(), 0.0);
        assert_eq!(nmi(&[2, 2, 2], &[7, 7, 7]).unwrap(), 1.0);
        assert!(nmi(&[], &[]).is_err());
        assert!(nmi(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn geometric_differs_when_entropies_differ() {
        let pred = [0, 0, 1, 1, 2, 2];
        let truth = [0, 0, 0, 1, 1, 1];
        let a = nmi_with(&pred, &truth, NmiNormalization::Arithmetic).unwrap();
        let g = nmi_with(&pred, &truth, NmiNormalization::Geometric).unwrap();
        assert!(g > a);
    }
}
