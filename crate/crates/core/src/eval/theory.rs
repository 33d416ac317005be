//! Numerical check of the identity `I(U;V) − I(K;L) = D_KL(p ‖ q)` where
//! `p(k,l,u,v) = p(u,v) p(k|u) p(l|v)` and `q = p(k,l) p(u|k) p(v|l)`.

use coin_autodiff::Tensor;
use rand::Rng;

use crate::error::{CoinError, Result};

const TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MiDifference {
    pub i_uv: f64,
    pub i_kl: f64,
    pub d_kl: f64,
    pub residual: f64,
}

fn check_distribution(name: &str, t: &Tensor, rows: Option<usize>) -> Result<()> {
    if t.dims2().is_none() || t.data().iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
        return Err(CoinError::InvalidArgument(format!(
            "{name} must be a nonnegative finite matrix"
        )));
    }
    match rows {
        None if (t.sum() - 1.0).abs() > TOL => {
            Err(CoinError::InvalidArgument(format!("{name} sums to {}, not 1", t.sum())))
        }
        Some(n) if t.rows() != n => Err(CoinError::InvalidArgument(format!(
            "{name} has {} rows, expected {n}",
            t.rows()
        ))),
        Some(_) => match (0..t.rows()).find(|&r| (t.row(r).iter().sum::<f64>() - 1.0).abs() > TOL) {
            Some(r) => Err(CoinError::InvalidArgument(format!(
                "row {r} of {name} is not stochastic"
            ))),
            None => Ok(()),
        },
        None => Ok(()),
    }
}

fn mi_of(joint: &[Vec<f64>]) -> f64 {
    let pa: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let pb: Vec<f64> = (0..joint[0].len()).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let mut mi = 0.0;
    for (i, row) in joint.iter().enumerate() {
        for (j, &p) in row.iter().enumerate() {
            if p > 0.0 {
                mi += p * (p / (pa[i] * pb[j])).ln();
            }
        }
    }
    mi
}

/// Computes both mutual informations and the divergence by summing over
/// every `(k, l, u, v)` tuple.
pub fn verify_mi_difference(p_uv: &Tensor, p_k_given_u: &Tensor, p_l_given_v: &Tensor) -> Result<MiDifference> {
    check_distribution("p(u,v)", p_uv, None)?;
    let (nu, nv) = p_uv.dims2().expect("checked");
    check_distribution("p(k|u)", p_k_given_u, Some(nu))?;
    check_distribution("p(l|v)", p_l_given_v, Some(nv))?;
    let nk = p_k_given_u.cols();
    let nl = p_l_given_v.cols();

    let uv: Vec<Vec<f64>> = (0..nu).map(|u| p_uv.row(u).to_vec()).collect();
    let i_uv = mi_of(&uv);

    let mut kl = vec![vec![0.0; nl]; nk];
    for u in 0..nu {
        for v in 0..nv {
            for (k, row) in kl.iter_mut().enumerate() {
                for (l, cell) in row.iter_mut().enumerate() {
                    *cell += p_uv.get(u, v) * p_k_given_u.get(u, k) * p_l_given_v.get(v, l);
                }
            }
        }
    }
    let i_kl = mi_of(&kl);

    let pu: Vec<f64> = uv.iter().map(|r| r.iter().sum()).collect();
    let pv: Vec<f64> = (0..nv).map(|v| uv.iter().map(|r| r[v]).sum()).collect();
    let pk: Vec<f64> = kl.iter().map(|r| r.iter().sum()).collect();
    let pl: Vec<f64> = (0..nl).map(|l| kl.iter().map(|r| r[l]).sum()).collect();
    let mut d_kl = 0.0;
    for u in 0..nu {
        for v in 0..nv {
            for k in 0..nk {
                for l in 0..nl {
                    let p = p_uv.get(u, v) * p_k_given_u.get(u, k) * p_l_given_v.get(v, l);
                    if p == 0.0 {
                        continue;
                    }
                    let u_given_k = pu[u] * p_k_given_u.get(u, k) / pk[k];
                    let v_given_l = pv[v] * p_l_given_v.get(v, l) / pl[l];
                    let q = kl[k][l] * u_given_k * v_given_l;
                    d_kl += p * (p / q).ln();
                }
            }
        }
    }
    Ok(MiDifference {
        i_uv,
        i_kl,
        d_kl,
        residual: (i_uv - i_kl - d_kl).abs(),
    })
}

/// Random `(p(u,v), p(k|u), p(l|v))` with `|U|, |V| ≤ max_nodes` and some
/// zero cells in the joint.
pub fn random_instance<R: Rng + ?Sized>(rng: &mut R, max_nodes: usize) -> (Tensor, Tensor, Tensor) {
    let nu = rng.random_range(2..=max_nodes.max(2));
    let nv = rng.random_range(2..=max_nodes.max(2));
    let nk = rng.random_range(2..=4);
    let nl = rng.random_range(2..=4);
    let mut joint: Vec<f64> = (0..nu * nv)
        .map(|_| {
            if rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.01..1.0)
            }
        })
        .collect();
    if joint.iter().all(|&x| x == 0.0) {
        joint[0] = 1.0;
    }
    let s: f64 = joint.iter().sum();
    joint.iter_mut().for_each(|x| *x /= s);
    let mut stochastic = |rows: usize, cols: usize| {
        let mut data = Vec::with_capacity(rows * cols);
        for _ in 0..rows {
            let logits: Vec<f64> = (0..cols).map(|_| rng.random_range(-3.0..3.0)).collect();
            let z: f64 = logits.iter().map(|x: &f64| x.exp()).sum();
            data.extend(logits.iter().map(|x| x.exp() / z));
        }
        Tensor::matrix(rows, cols, data).expect("shape")
    };
    let pk = stochastic(nu, nk);
    let pl = stochastic(nv, nl);
    (Tensor::matrix(nu, nv, joint).expect("shape"), pk, pl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_prior_has_no_information() {
        let pu = [0.2, 0.5, 0.3];
        let pv = [0.6, 0.4];
        let joint: Vec<f64> = pu.iter().flat_map(|a| pv.iter().map(move |b| a * b)).collect();
        let p_uv = Tensor::matrix(3, 2, joint).unwrap();
        let pk = Tensor::from_rows(&[vec![0.7, 0.3], vec![0.1, 0.9], vec![0.5, 0.5]]).unwrap();
        let pl = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.25, 0.75]]).unwrap();
        let r = verify_mi_difference(&p_uv, &pk, &pl).unwrap();
        assert!(
            r.i_uv.abs() < 1e-15 && r.i_kl.abs() < 1e-15 && r.d_kl.abs() < 1e-15,
            "{r:?}"
        );
    }

    #[test]
    fn bicliques_lose_nothing() {
        let mut joint = vec![0.0; 16];
        for (u, v) in [(0, 0), (0, 1), (1, 0), (1, 1), (2, 2), (2, 3), (3, 2), (3, 3)] {
            joint[u * 4 + v] = 1.0 / 8.0;
        }
        let p_uv = Tensor::matrix(4, 4, joint).unwrap();
        let hard = Tensor::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let r = verify_mi_difference(&p_uv, &hard, &hard).unwrap();
        assert!((r.i_uv - 2f64.ln()).abs() < 1e-15);
        assert!((r.i_kl - 2f64.ln()).abs() < 1e-15);
        assert!(r.d_kl.abs() < 1e-15);
    }

    #[test]
    fn invalid_inputs_rejected() {
        let p = Tensor::full(&[2, 2], 0.3);
        let c = Tensor::full(&[2, 2], 0.5);
        assert!(verify_mi_difference(&p, &c, &c).is_err());
        let p = Tensor::full(&[2, 2], 0.25);
        let bad = Tensor::full(&[2, 2], 0.4);
        assert!(verify_mi_difference(&p, &bad, &c).is_err());
        assert!(verify_mi_difference(&p, &Tensor::full(&[3, 2], 0.5), &c).is_err());
    }
}
