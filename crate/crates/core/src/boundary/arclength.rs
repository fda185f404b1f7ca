//! Unit-speed reparametrization of closed curves.

use std::sync::Arc;

use super::curves::ParamCurve;
use crate::basis::GaussLegendre;
use crate::error::{Error, Result};
use crate::geometry::{cross, Point};

const PANELS: usize = 64;
const CHEB: usize = 17;
const GL_POINTS: usize = 20;

/// Closed curve γ(s), s ∈ [0, L], with ‖γ′‖ = 1.
#[derive(Debug)]
pub struct ArcLengthCurve {
    curve: Arc<dyn ParamCurve>,
    length: f64,
    /// Panel edges in s; uniform, plus the images of any breakpoints.
    edges: Vec<f64>,
    /// Per s-panel Chebyshev coefficients of t(s).
    coeffs: Vec<[f64; CHEB]>,
    /// True when the domain lies to the left and the curve runs counterclockwise.
    ccw: bool,
}

/// Point, unit tangent and signed curvature at one arc-length parameter.
#[derive(Clone, Copy, Debug)]
pub struct Frame {
    pub point: Point,
    pub tangent: Point,
    pub curvature: f64,
}

impl Frame {
    /// Outward normal of a domain lying to the left of the curve.
    pub fn normal(&self) -> Point {
        Point::new(self.tangent.y, -self.tangent.x)
    }

    /// γ″(s) = κ · (left normal).
    pub fn second_derivative(&self) -> Point {
        Point::new(-self.tangent.y, self.tangent.x) * self.curvature
    }
}

impl ArcLengthCurve {
    pub fn new<C: ParamCurve + 'static>(curve: C, tol: f64) -> Result<Self> {
        Self::from_arc(Arc::new(curve), tol)
    }

    pub fn from_arc(curve: Arc<dyn ParamCurve>, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::InvalidArgument("tolerance must be positive".into()));
        }
        let gl = GaussLegendre::cached(GL_POINTS);
        let speed = |t: f64| curve.jet(t).d1.norm();

        // Panel edges in t: uniform grid merged with any breakpoints.
        let mut panels = 64usize;
        let (knots, cumulative) = loop {
            let mut knots: Vec<f64> = (0..=panels).map(|i| i as f64 / panels as f64).collect();
            knots.extend(curve.breakpoints().into_iter().map(|b| b.rem_euclid(1.0)));
            knots.sort_by(f64::total_cmp);
            knots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
            let mut cum = vec![0.0];
            let mut coarse_total = 0.0;
            let coarse = GaussLegendre::cached(GL_POINTS / 2);
            for w in knots.windows(2) {
                let seg = gl.integrate(w[0], w[1], speed);
                coarse_total += coarse.integrate(w[0], w[1], speed);
                cum.push(cum.last().unwrap() + seg);
            }
            let total = *cum.last().unwrap();
            if (total - coarse_total).abs() <= 1e-3 * tol * total || panels >= 1 << 14 {
                break (knots, cum);
            }
            panels *= 2;
        };
        let length = *cumulative.last().unwrap();
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::InvalidArgument(
                "curve has zero or non-finite length".into(),
            ));
        }
        let gap = (curve.point(1.0) - curve.point(0.0)).norm();
        if gap > 1e-8 * length {
            return Err(Error::NotClosed { gap, length });
        }

        let arc_to = |t: f64| -> f64 {
            let i = knots.partition_point(|&k| k <= t).clamp(1, knots.len() - 1) - 1;
            cumulative[i] + gl.integrate(knots[i], t, speed)
        };
        let t_of_s = |s: f64| -> f64 {
            let i = cumulative
                .partition_point(|&c| c <= s)
                .clamp(1, knots.len() - 1)
                - 1;
            let frac = (s - cumulative[i]) / (cumulative[i + 1] - cumulative[i]);
            let mut t = knots[i] + frac * (knots[i + 1] - knots[i]);
            for _ in 0..30 {
                let dt = (arc_to(t) - s) / speed(t);
                t -= dt;
                if dt.abs() < 1e-16 {
                    break;
                }
            }
            t
        };

        let h = length / PANELS as f64;
        let mut edges: Vec<f64> = (0..=PANELS).map(|i| i as f64 * h).collect();
        for b in curve.breakpoints() {
            let sb = arc_to(b.rem_euclid(1.0));
            // A breakpoint replaces any uniform edge it nearly coincides with.
            edges.retain(|e| (e - sb).abs() > 1e-6 * h || *e == 0.0 || *e == length);
            if sb > 1e-6 * h && sb < length - 1e-6 * h {
                edges.push(sb);
            }
        }
        edges.sort_by(f64::total_cmp);
        let cheb_nodes: Vec<f64> = (0..CHEB)
            .map(|j| (std::f64::consts::PI * (j as f64 + 0.5) / CHEB as f64).cos())
            .collect();
        let mut coeffs = Vec::with_capacity(edges.len() - 1);
        for w in edges.windows(2) {
            let vals: Vec<f64> = cheb_nodes
                .iter()
                .map(|x| t_of_s(w[0] + 0.5 * (x + 1.0) * (w[1] - w[0])))
                .collect();
            let mut c = [0.0; CHEB];
            for (k, ck) in c.iter_mut().enumerate() {
                let sum: f64 = (0..CHEB)
                    .map(|j| {
                        vals[j]
                            * (std::f64::consts::PI * k as f64 * (j as f64 + 0.5) / CHEB as f64)
                                .cos()
                    })
                    .sum();
                *ck = sum * 2.0 / CHEB as f64;
            }
            c[0] *= 0.5;
            coeffs.push(c);
        }

        // Orientation from the shoelace formula on a fine polygon.
        let n = 512;
        let area: f64 = (0..n)
            .map(|i| {
                let a = curve.point(i as f64 / n as f64);
                let b = curve.point((i + 1) as f64 / n as f64);
                cross(&a, &b)
            })
            .sum::<f64>()
            * 0.5;

        Ok(ArcLengthCurve {
            curve,
            length,
            edges,
            coeffs,
            ccw: area > 0.0,
        })
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn is_counterclockwise(&self) -> bool {
        self.ccw
    }

    pub fn underlying(&self) -> &Arc<dyn ParamCurve> {
        &self.curve
    }

    /// Reduces `s` into [0, L).
    pub fn wrap(&self, s: f64) -> f64 {
        let r = s.rem_euclid(self.length);
        if r >= self.length {
            0.0
        } else {
            r
        }
    }

    /// Parameter t of the underlying curve at arc length s.
    pub fn t_of(&self, s: f64) -> f64 {
        let s = self.wrap(s);
        let p = self
            .edges
            .partition_point(|&e| e <= s)
            .clamp(1, self.edges.len() - 1)
            - 1;
        let (a, b) = (self.edges[p], self.edges[p + 1]);
        let x = 2.0 * (s - a) / (b - a) - 1.0;
        let c = &self.coeffs[p];
        let (mut b1, mut b2) = (0.0, 0.0);
        for k in (1..CHEB).rev() {
            let b0 = 2.0 * x * b1 - b2 + c[k];
            b2 = b1;
            b1 = b0;
        }
        x * b1 - b2 + c[0]
    }

    pub fn point(&self, s: f64) -> Point {
        self.curve.point(self.t_of(s))
    }

    pub fn tangent(&self, s: f64) -> Point {
        self.curve.jet(self.t_of(s)).d1.normalize()
    }

    pub fn frame(&self, s: f64) -> Frame {
        let j = self.curve.jet(self.t_of(s));
        let speed = j.d1.norm();
        Frame {
            point: j.p,
            tangent: j.d1 / speed,
            curvature: cross(&j.d1, &j.d2) / (speed * speed * speed),
        }
    }

    /// Outward normal for a domain on the left.
    pub fn normal(&self, s: f64) -> Point {
        self.frame(s).normal()
    }

    pub fn curvature(&self, s: f64) -> f64 {
        self.frame(s).curvature
    }
}
