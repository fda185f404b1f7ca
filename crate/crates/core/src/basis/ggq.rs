//! Radial generalized Gaussian rule on [0, 1] for the family
//! {r P_n(2r-1), r log r P_n(2r-1) : n = 0..=N_g}.

use nalgebra::{DMatrix, DVector};

use super::gauss::legendre_all;
use crate::error::{Error, Result};

pub const MAX_GGQ_ORDER: usize = 20;

/// Nodes and weights of the radial rule with N_g + 1 points.
#[derive(Clone, Debug)]
pub struct RadialGgq {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Precomputed rule for N_g = 8, used when the solver fails to converge.
const FALLBACK_8: [(f64, f64); 9] = [
    (0.00504626635938652, 0.01166241163483901),
    (0.02876579846000229, 0.0385876183203411),
    (0.08727595751802353, 0.08042039034104713),
    (0.19183333390512186, 0.12875951765318738),
    (0.3425120197160515, 0.17022201050158636),
    (0.5252233022937861, 0.19065890144027403),
    (0.7133385507260126, 0.17988639373800241),
    (0.8736428289623026, 0.13536750613409596),
    (0.9749209893959089, 0.06368483027609237),
];

impl RadialGgq {
    /// Builds the rule by damped Gauss-Newton on the moment equations.
    pub fn build(order: usize) -> Result<Self> {
        if order > MAX_GGQ_ORDER {
            return Err(Error::InvalidArgument(format!(
                "radial rule order {order} exceeds {MAX_GGQ_ORDER}"
            )));
        }
        match solve(order) {
            Ok(rule) => Ok(rule),
            Err(e) if order == 8 => {
                let rule = RadialGgq {
                    order,
                    nodes: FALLBACK_8.iter().map(|p| p.0).collect(),
                    weights: FALLBACK_8.iter().map(|p| p.1).collect(),
                };
                if rule.residual() <= 1e-13 {
                    Ok(rule)
                } else {
                    Err(e)
                }
            }
            Err(e) => Err(e),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Max moment residual over the whole family.
    pub fn residual(&self) -> f64 {
        residual_vec(self.order, &self.nodes, &self.weights).amax()
    }
}

/// ∫₀¹ log r · P_j(2r-1) dr.
fn log_moment(j: usize) -> f64 {
    if j == 0 {
        -1.0
    } else {
        let jf = j as f64;
        let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        sign / (jf * (jf + 1.0))
    }
}

/// Exact moments (∫ r P̃_k, ∫ r log r P̃_k) for k = 0..=order.
pub fn exact_moments(order: usize) -> (Vec<f64>, Vec<f64>) {
    let mut plain = vec![0.0; order + 1];
    plain[0] = 0.5;
    if order >= 1 {
        plain[1] = 1.0 / 6.0;
    }
    // r P̃_k = P̃_k/2 + ((k+1) P̃_{k+1} + k P̃_{k-1}) / (2(2k+1)).
    let logm = (0..=order)
        .map(|k| {
            let kf = k as f64;
            let lower = if k > 0 { kf * log_moment(k - 1) } else { 0.0 };
            0.5 * log_moment(k)
                + ((kf + 1.0) * log_moment(k + 1) + lower) / (2.0 * (2.0 * kf + 1.0))
        })
        .collect();
    (plain, logm)
}

fn residual_vec(order: usize, r: &[f64], w: &[f64]) -> DVector<f64> {
    let (plain, logm) = exact_moments(order);
    let mut res = DVector::zeros(2 * (order + 1));
    let mut p = Vec::new();
    for (&rj, &wj) in r.iter().zip(w) {
        legendre_all(order, 2.0 * rj - 1.0, &mut p);
        for k in 0..=order {
            res[k] += wj * rj * p[k];
            res[order + 1 + k] += wj * rj * rj.ln() * p[k];
        }
    }
    for k in 0..=order {
        res[k] -= plain[k];
        res[order + 1 + k] -= logm[k];
    }
    res
}

fn jacobian(order: usize, r: &[f64], w: &[f64]) -> DMatrix<f64> {
    let n = r.len();
    let mut jac = DMatrix::zeros(2 * (order + 1), 2 * n);
    let mut p = Vec::new();
    for j in 0..n {
        let (rj, wj) = (r[j], w[j]);
        let t = 2.0 * rj - 1.0;
        legendre_all(order, t, &mut p);
        let lr = rj.ln();
        for k in 0..=order {
            let dp = 2.0 * super::gauss::legendre_with_derivative(k, t).1;
            let phi = rj * p[k];
            let dphi = p[k] + rj * dp;
            let psi = rj * lr * p[k];
            let dpsi = (lr + 1.0) * p[k] + rj * lr * dp;
            jac[(k, j)] = wj * dphi;
            jac[(k, n + j)] = phi;
            jac[(order + 1 + k, j)] = wj * dpsi;
            jac[(order + 1 + k, n + j)] = psi;
        }
    }
    jac
}

/// Continuation in the order: the rule for order k seeds order k + 1 by
/// interpolating node positions (in log r) on a refined index grid.
fn solve(order: usize) -> Result<RadialGgq> {
    let mut r = vec![(-0.5f64).exp()];
    let mut w = vec![1.0];
    for k in 0..=order {
        if k > 0 {
            r = reseed(&r);
            w = spacing_weights(&r);
        }
        let last = newton(k, &mut r, &mut w);
        // Intermediate orders only seed the next step.
        let tol = if k == order { 1e-13 } else { 1e-10 };
        if !(last <= tol) || w.iter().any(|&x| x <= 0.0) {
            return Err(Error::GgqNotConverged(last));
        }
    }
    Ok(RadialGgq {
        order,
        nodes: r,
        weights: w,
    })
}

fn reseed(prev: &[f64]) -> Vec<f64> {
    let k = prev.len();
    // Knots at index -1 (extrapolated toward 0), 0..k-1, and k (r = 1).
    let mut ys = Vec::with_capacity(k + 2);
    ys.push(prev[0].ln() - 1.5);
    ys.extend(prev.iter().map(|r| r.ln()));
    ys.push(0.0);
    (0..=k)
        .map(|j| {
            let xi = (j as f64 + 0.5) * k as f64 / (k as f64 + 1.0) - 0.5;
            let pos = xi + 1.0;
            let i = (pos.floor() as usize).min(ys.len() - 2);
            let t = pos - i as f64;
            ((1.0 - t) * ys[i] + t * ys[i + 1]).exp()
        })
        .collect()
}

fn spacing_weights(r: &[f64]) -> Vec<f64> {
    let n = r.len();
    (0..n)
        .map(|j| {
            let lo = if j == 0 { 0.0 } else { 0.5 * (r[j] + r[j - 1]) };
            let hi = if j + 1 == n {
                1.0
            } else {
                0.5 * (r[j] + r[j + 1])
            };
            hi - lo
        })
        .collect()
}

/// Damped Gauss-Newton with minimum-norm (SVD) steps; returns the final max residual.
fn newton(order: usize, r: &mut Vec<f64>, w: &mut Vec<f64>) -> f64 {
    let n = r.len();
    let mut res = residual_vec(order, r, w);
    for _ in 0..200 {
        let norm = res.norm();
        if norm <= 1e-16 {
            break;
        }
        let jac = jacobian(order, r, w);
        let Ok(step) = jac.svd(true, true).solve(&(-&res), 1e-15) else {
            break;
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        while lambda > 1e-10 {
            let r_new: Vec<f64> = (0..n).map(|j| r[j] + lambda * step[j]).collect();
            let w_new: Vec<f64> = (0..n).map(|j| w[j] + lambda * step[n + j]).collect();
            if r_new.iter().all(|&x| x > 0.0 && x < 1.0) {
                let res_new = residual_vec(order, &r_new, &w_new);
                if res_new.norm() < norm {
                    *r = r_new;
                    *w = w_new;
                    res = res_new;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    res.amax()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_match_monomial_form() {
        let (plain, logm) = exact_moments(1);
        assert!((plain[0] - 0.5).abs() < 1e-16);
        assert!((logm[0] + 0.25).abs() < 1e-16);
        // ∫ r log r (2r-1) = 2(-1/9) + 1/4
        assert!((logm[1] - (-2.0 / 9.0 + 0.25)).abs() < 1e-16);
    }

    #[test]
    fn builds_low_and_default_orders() {
        for order in 0..=12 {
            let g = RadialGgq::build(order).unwrap_or_else(|e| panic!("order {order}: {e}"));
            assert_eq!(g.len(), order + 1);
            assert!(
                g.residual() <= 1e-13,
                "order {order} residual {}",
                g.residual()
            );
            assert!(g.weights.iter().all(|&w| w > 0.0));
            assert!(g.nodes.iter().all(|&r| r > 0.0 && r < 1.0));
        }
    }

    #[test]
    fn fallback_table_is_exact() {
        let g = RadialGgq {
            order: 8,
            nodes: FALLBACK_8.iter().map(|p| p.0).collect(),
            weights: FALLBACK_8.iter().map(|p| p.1).collect(),
        };
        assert!(g.residual() <= 1e-13);
    }

    #[test]
    fn rejects_large_orders() {
        assert!(RadialGgq::build(21).is_err());
    }
}
