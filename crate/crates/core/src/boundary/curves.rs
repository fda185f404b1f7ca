//! Parametric closed curves γ̃(t), t ∈ [0, 1].

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::geometry::{pt, Point};

/// Position and first two derivatives with respect to the curve parameter.
#[derive(Clone, Copy, Debug)]
pub struct CurveJet {
    pub p: Point,
    pub d1: Point,
    pub d2: Point,
}

/// A closed C¹ curve parametrized over [0, 1].
pub trait ParamCurve: Send + Sync + std::fmt::Debug {
    fn jet(&self, t: f64) -> CurveJet;

    fn point(&self, t: f64) -> Point {
        self.jet(t).p
    }

    /// Parameters where the curve is only piecewise smooth (spline knots).
    fn breakpoints(&self) -> Vec<f64> {
        Vec::new()
    }
}

#[derive(Clone, Debug)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

impl ParamCurve for Circle {
    fn jet(&self, t: f64) -> CurveJet {
        let (s, c) = (TAU * t).sin_cos();
        let r = self.radius;
        CurveJet {
            p: self.center + pt(r * c, r * s),
            d1: pt(-r * TAU * s, r * TAU * c),
            d2: pt(-r * TAU * TAU * c, -r * TAU * TAU * s),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Ellipse {
    pub center: Point,
    pub a: f64,
    pub b: f64,
}

impl ParamCurve for Ellipse {
    fn jet(&self, t: f64) -> CurveJet {
        let (s, c) = (TAU * t).sin_cos();
        CurveJet {
            p: self.center + pt(self.a * c, self.b * s),
            d1: pt(-self.a * TAU * s, self.b * TAU * c),
            d2: pt(-self.a * TAU * TAU * c, -self.b * TAU * TAU * s),
        }
    }
}

/// Polar curve r(θ) = a + b cos(kθ), stretched by `aspect` along x.
#[derive(Clone, Debug)]
pub struct Wobbly {
    pub center: Point,
    pub a: f64,
    pub b: f64,
    pub k: f64,
    pub aspect: f64,
}

impl ParamCurve for Wobbly {
    fn jet(&self, t: f64) -> CurveJet {
        let th = TAU * t;
        let (s, c) = th.sin_cos();
        let (ks, kc) = (self.k * th).sin_cos();
        let r = self.a + self.b * kc;
        let dr = -self.b * self.k * ks;
        let ddr = -self.b * self.k * self.k * kc;
        // (x, y) = (aspect r cos θ, r sin θ), derivatives in θ then scaled by 2π.
        let p = pt(self.aspect * r * c, r * s);
        let d1 = pt(self.aspect * (dr * c - r * s), dr * s + r * c);
        let d2 = pt(
            self.aspect * (ddr * c - 2.0 * dr * s - r * c),
            ddr * s + 2.0 * dr * c - r * s,
        );
        CurveJet {
            p: self.center + p,
            d1: d1 * TAU,
            d2: d2 * (TAU * TAU),
        }
    }
}

/// The same curve traversed backwards (turns an outer boundary into a hole).
#[derive(Debug)]
pub struct Reversed<C>(pub C);

impl<C: ParamCurve> ParamCurve for Reversed<C> {
    fn jet(&self, t: f64) -> CurveJet {
        let j = self.0.jet(1.0 - t);
        CurveJet {
            p: j.p,
            d1: -j.d1,
            d2: j.d2,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.0.breakpoints().into_iter().map(|t| 1.0 - t).collect()
    }
}

/// Closed cubic Hermite spline through `(t, point, derivative)` knots.
#[derive(Clone, Debug)]
pub struct HermiteSpline {
    t: Vec<f64>,
    p: Vec<Point>,
    d: Vec<Point>,
}

impl HermiteSpline {
    pub fn new(knots: Vec<(f64, Point, Point)>) -> Result<Self> {
        if knots.len() < 3 {
            return Err(Error::InvalidArgument(
                "spline needs at least 3 knots".into(),
            ));
        }
        for w in knots.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::InvalidArgument(
                    "spline parameters must increase".into(),
                ));
            }
        }
        let (t0, tn) = (knots[0].0, knots[knots.len() - 1].0);
        if !(t0 >= 0.0 && tn < t0 + 1.0) {
            return Err(Error::InvalidArgument(
                "spline parameters must lie in [t0, t0 + 1)".into(),
            ));
        }
        Ok(HermiteSpline {
            t: knots.iter().map(|k| k.0).collect(),
            p: knots.iter().map(|k| k.1).collect(),
            d: knots.iter().map(|k| k.2).collect(),
        })
    }

    /// Parses lines `t x y dx dy` (blank lines and `#` comments ignored).
    pub fn parse(text: &str) -> Result<Self> {
        let mut knots = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    line: i + 1,
                    msg: "expected `t x y dx dy`".into(),
                })?;
            if v.len() != 5 {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "expected `t x y dx dy`".into(),
                });
            }
            knots.push((v[0], pt(v[1], v[2]), pt(v[3], v[4])));
        }
        Self::new(knots)
    }
}

impl ParamCurve for HermiteSpline {
    fn jet(&self, t: f64) -> CurveJet {
        let n = self.t.len();
        let t0 = self.t[0];
        let tt = t0 + (t - t0).rem_euclid(1.0);
        let i = match self.t.partition_point(|&k| k <= tt) {
            0 => n - 1,
            j => j - 1,
        };
        let j = (i + 1) % n;
        let ta = self.t[i];
        let tb = if j == 0 { self.t[0] + 1.0 } else { self.t[j] };
        let h = tb - ta;
        let u = (tt - ta) / h;
        let (p0, p1, m0, m1) = (self.p[i], self.p[j], self.d[i] * h, self.d[j] * h);
        let (u2, u3) = (u * u, u * u * u);
        let p = p0 * (2.0 * u3 - 3.0 * u2 + 1.0)
            + m0 * (u3 - 2.0 * u2 + u)
            + p1 * (-2.0 * u3 + 3.0 * u2)
            + m1 * (u3 - u2);
        let d1 = p0 * (6.0 * u2 - 6.0 * u)
            + m0 * (3.0 * u2 - 4.0 * u + 1.0)
            + p1 * (-6.0 * u2 + 6.0 * u)
            + m1 * (3.0 * u2 - 2.0 * u);
        let d2 = p0 * (12.0 * u - 6.0)
            + m0 * (6.0 * u - 4.0)
            + p1 * (-12.0 * u + 6.0)
            + m1 * (6.0 * u - 2.0);
        CurveJet {
            p,
            d1: d1 / h,
            d2: d2 / (h * h),
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        self.t
            .iter()
            .map(|t| (t - self.t[0]).rem_euclid(1.0) + self.t[0])
            .collect()
    }
}
