//! Maps from the standard simplex onto straight and curved mesh elements.
//!
//! The blending map sends (1,0) to P = γ(s₀), (0,0) to Q = γ(s₀+L) and
//! (0,1) to the opposite vertex O, so ξ runs against the arc direction.

use std::sync::Arc;

use nalgebra::Matrix2;

use crate::basis::QuadRule;
use crate::boundary::ArcLengthCurve;
use crate::error::{Error, Result};
use crate::geometry::{signed_area, Point};

#[derive(Clone, Debug)]
pub struct AffineMap {
    pub origin: Point,
    /// Columns are ρ(1,0) − ρ(0,0) and ρ(0,1) − ρ(0,0).
    pub jac: Matrix2<f64>,
    inv: Matrix2<f64>,
}

impl AffineMap {
    /// Map with ρ(0,0) = a, ρ(1,0) = b, ρ(0,1) = c.
    pub fn new(a: Point, b: Point, c: Point) -> Result<Self> {
        let jac = Matrix2::from_columns(&[b - a, c - a]);
        let inv = jac
            .try_inverse()
            .ok_or_else(|| Error::InvalidMesh("degenerate triangle".into()))?;
        Ok(AffineMap {
            origin: a,
            jac,
            inv,
        })
    }

    pub fn forward(&self, xi: f64, eta: f64) -> Point {
        self.origin + self.jac * Point::new(xi, eta)
    }

    pub fn inverse(&self, x: &Point) -> (f64, f64) {
        let r = self.inv * (x - self.origin);
        (r.x, r.y)
    }

    pub fn det(&self) -> f64 {
        self.jac.determinant().abs()
    }
}

#[derive(Clone, Debug)]
pub struct BlendingMap {
    pub curve: Arc<ArcLengthCurve>,
    /// Arc-length parameter of P on the global curve.
    pub s0: f64,
    /// Arc length of the curved side.
    pub len: f64,
    pub p: Point,
    pub q: Point,
    pub o: Point,
    chord: AffineMap,
}

impl BlendingMap {
    pub fn new(curve: Arc<ArcLengthCurve>, s0: f64, len: f64, o: Point) -> Result<Self> {
        if !(len > 0.0) {
            return Err(Error::InvalidMesh(
                "curved side with non-positive length".into(),
            ));
        }
        let p = curve.point(s0);
        let q = curve.point(s0 + len);
        let chord = AffineMap::new(q, p, o)?;
        Ok(BlendingMap {
            curve,
            s0,
            len,
            p,
            q,
            o,
            chord,
        })
    }

    /// γ and γ′ along the side in the local parameter σ ∈ [0, len].
    fn side(&self, sigma: f64) -> (Point, Point) {
        let f = self.curve.frame(self.s0 + sigma);
        (f.point, f.tangent)
    }

    pub fn forward(&self, xi: f64, eta: f64) -> Point {
        let one_m = 1.0 - xi;
        let (g, _) = self.side(self.len * one_m);
        let d = g - self.q * one_m - self.p * xi;
        let lambda = if one_m > 1e-13 {
            1.0 - eta / one_m
        } else {
            1.0
        };
        self.q * (1.0 - xi - eta) + self.p * xi + self.o * eta + d * lambda
    }

    pub fn jacobian(&self, xi: f64, eta: f64) -> Matrix2<f64> {
        let one_m = 1.0 - xi;
        let (g, gp) = self.side(self.len * one_m);
        let d = g - self.q * one_m - self.p * xi;
        let dd = -gp * self.len + self.q - self.p;
        let (d_over, ratio) = if one_m > 1e-13 {
            (d / one_m, (eta / one_m).clamp(0.0, 1.0))
        } else {
            let (_, g0) = self.side(0.0);
            (g0 * self.len - self.q + self.p, 0.0)
        };
        let dxi = self.p - self.q + dd * (1.0 - ratio) - d_over * ratio;
        let deta = self.o - self.q - d_over;
        Matrix2::from_columns(&[dxi, deta])
    }

    pub fn inverse(&self, x: &Point) -> Result<(f64, f64)> {
        let (mut xi, mut eta) = self.chord.inverse(x);
        let scale = (self.p - self.q).norm().max((self.o - self.q).norm());
        let mut res = f64::INFINITY;
        for _ in 0..20 {
            let (cx, ce) = clamp_to_simplex(xi, eta);
            xi = cx;
            eta = ce;
            let f = self.forward(xi, eta) - x;
            res = f.norm();
            if res <= 1e-14 * scale {
                return Ok((xi, eta));
            }
            let j = self.jacobian(xi, eta);
            let Some(inv) = j.try_inverse() else { break };
            let step = inv * f;
            xi -= step.x;
            eta -= step.y;
            if step.norm() <= 1e-15 {
                let f = self.forward(xi, eta) - x;
                res = f.norm();
                if res <= 1e-12 * scale {
                    return Ok((xi, eta));
                }
            }
        }
        let f = self.forward(xi, eta) - x;
        res = res.min(f.norm());
        if res <= 1e-12 * scale {
            return Ok((xi, eta));
        }
        Err(Error::InverseNotConverged(res))
    }
}

/// Keeps Newton iterates in a slightly enlarged simplex.
fn clamp_to_simplex(xi: f64, eta: f64) -> (f64, f64) {
    let m = 1e-3;
    let xi = xi.clamp(-m, 1.0 + m);
    let eta = eta.clamp(-m, 1.0 + m);
    let s = xi + eta;
    if s > 1.0 + m {
        let k = (1.0 + m) / s;
        (xi * k, eta * k)
    } else {
        (xi, eta)
    }
}

/// Map ρ: Δ¹ → element.
#[derive(Clone, Debug)]
pub enum ElementMap {
    Affine(AffineMap),
    Blending(BlendingMap),
}

impl ElementMap {
    pub fn forward(&self, xi: f64, eta: f64) -> Point {
        match self {
            ElementMap::Affine(m) => m.forward(xi, eta),
            ElementMap::Blending(m) => m.forward(xi, eta),
        }
    }

    pub fn jacobian(&self, xi: f64, eta: f64) -> Matrix2<f64> {
        match self {
            ElementMap::Affine(m) => m.jac,
            ElementMap::Blending(m) => m.jacobian(xi, eta),
        }
    }

    /// |det J_ρ| at (ξ, η).
    pub fn det(&self, xi: f64, eta: f64) -> f64 {
        match self {
            ElementMap::Affine(m) => m.det(),
            ElementMap::Blending(m) => m.jacobian(xi, eta).determinant().abs(),
        }
    }

    pub fn inverse(&self, x: &Point) -> Result<(f64, f64)> {
        match self {
            ElementMap::Affine(m) => Ok(m.inverse(x)),
            ElementMap::Blending(m) => m.inverse(x),
        }
    }

    pub fn is_affine(&self) -> bool {
        matches!(self, ElementMap::Affine(_))
    }

    /// Images of (0,0), (1,0), (0,1).
    pub fn corners(&self) -> [Point; 3] {
        match self {
            ElementMap::Affine(m) => [
                m.origin,
                m.origin + m.jac.column(0),
                m.origin + m.jac.column(1),
            ],
            ElementMap::Blending(m) => [m.q, m.p, m.o],
        }
    }

    /// Physical area of the chord triangle through the three corners.
    pub fn chord_area(&self) -> f64 {
        let [a, b, c] = self.corners();
        signed_area(&a, &b, &c).abs()
    }

    /// ∬ 1 dA via Σ wᵢ |J(nodeᵢ)|.
    pub fn area(&self, rule: &QuadRule) -> f64 {
        rule.nodes
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| w * self.det(p[0], p[1]))
            .sum()
    }

    /// Closed-form pullback of the boundary point γ(s) on a curved side.
    pub fn boundary_pullback(&self, s: f64) -> Option<(f64, f64)> {
        match self {
            ElementMap::Affine(_) => None,
            ElementMap::Blending(m) => {
                let l = m.curve.length();
                let sigma = (s - m.s0).rem_euclid(l);
                let sigma = if sigma > m.len && l - sigma < 1e-12 * l {
                    0.0
                } else {
                    sigma
                };
                if sigma > m.len * (1.0 + 1e-12) {
                    return None;
                }
                Some(((1.0 - sigma / m.len).max(0.0), 0.0))
            }
        }
    }
}
