//! Element-level evaluation of the logarithmic potential.
//!
//! Three regimes: a fixed far rule, adaptive subdivision for targets in an
//! element's near field, and radius/arc-length coordinates for targets
//! inside the element.

use std::f64::consts::PI;

use crate::basis::{GaussLegendre, QuadRule, RadialGgq};
use crate::boundary::ArcLengthCurve;
use crate::element_map::ElementMap;
use crate::error::{Error, Result};
use crate::geometry::{cross, signed_area, Point};
use crate::nearfield::NearFieldModel;

/// Source density f: R² → R.
pub type Density = dyn Fn(&Point) -> f64 + Sync;

pub const INV_2PI: f64 = 0.5 / PI;

/// Maximum subdivision depth in [`near_eval`].
pub const MAX_NEAR_DEPTH: usize = 40;

/// G(x, y) = (1/2π) log |x − y|.
#[inline]
pub fn green(x: &Point, y: &Point) -> f64 {
    INV_2PI * (x - y).norm().ln()
}

/// Σ wᵢ |J(ỹᵢ)| G(v, ρ(ỹᵢ)) f(ρ(ỹᵢ)).
pub fn far_eval(map: &ElementMap, rule: &QuadRule, f: &Density, v: &Point) -> f64 {
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| {
            let y = map.forward(p[0], p[1]);
            w * map.det(p[0], p[1]) * f(&y) * green(v, &y)
        })
        .sum()
}

/// Parameters for [`near_eval`].
#[derive(Clone, Copy, Debug)]
pub struct NearParams<'a> {
    pub eps: f64,
    pub rule: &'a QuadRule,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct NearResult {
    pub value: f64,
    /// Accepted sub-simplices.
    pub leaves: usize,
    pub max_depth: usize,
}

/// Potential of one element at an exterior target by adaptive 4-way subdivision.
pub fn near_eval(
    map: &ElementMap,
    f: &Density,
    v: &Point,
    params: &NearParams,
) -> Result<NearResult> {
    let mut out = NearResult::default();
    let mut stack: Vec<([[f64; 2]; 3], usize)> = vec![([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0)];
    while let Some((tri, depth)) = stack.pop() {
        if accept(map, &tri, v, params)? {
            out.value += integrate_sub(map, &tri, params.rule, f, v);
            out.leaves += 1;
            out.max_depth = out.max_depth.max(depth);
            continue;
        }
        if depth >= MAX_NEAR_DEPTH {
            return Err(Error::SubdivisionDepth);
        }
        for child in split4(&tri) {
            stack.push((child, depth + 1));
        }
    }
    Ok(out)
}

/// Midpoint split into four similar triangles.
pub fn split4(t: &[[f64; 2]; 3]) -> [[[f64; 2]; 3]; 4] {
    let mid = |p: [f64; 2], q: [f64; 2]| [0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])];
    let [a, b, c] = *t;
    let (ab, bc, ca) = (mid(a, b), mid(b, c), mid(c, a));
    [[a, ab, ca], [ab, b, bc], [ca, bc, c], [bc, ca, ab]]
}

fn accept(map: &ElementMap, tri: &[[f64; 2]; 3], v: &Point, params: &NearParams) -> Result<bool> {
    let corners = tri.map(|p| map.forward(p[0], p[1]));
    if in_closed_triangle(&corners, v) {
        return Ok(false);
    }
    let area = signed_area(&corners[0], &corners[1], &corners[2]).abs();
    let model = NearFieldModel::precise(&corners, area, params.rule, params.eps, false)?;
    Ok(match model {
        NearFieldModel::AllNear => true,
        m => !m.contains(v),
    })
}

fn in_closed_triangle(c: &[Point; 3], v: &Point) -> bool {
    let scale = (c[1] - c[0])
        .norm_squared()
        .max((c[2] - c[0]).norm_squared());
    let tol = -1e-14 * scale;
    let s = signed_area(&c[0], &c[1], &c[2]).signum();
    (0..3).all(|i| s * signed_area(&c[i], &c[(i + 1) % 3], v) >= tol)
}

fn integrate_sub(
    map: &ElementMap,
    tri: &[[f64; 2]; 3],
    rule: &QuadRule,
    f: &Density,
    v: &Point,
) -> f64 {
    let [a, b, c] = *tri;
    let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
    let jac = (e1[0] * e2[1] - e1[1] * e2[0]).abs();
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(p, w)| {
            let xi = a[0] + e1[0] * p[0] + e2[0] * p[1];
            let eta = a[1] + e1[1] * p[0] + e2[1] * p[1];
            let y = map.forward(xi, eta);
            w * jac * map.det(xi, eta) * f(&y) * green(v, &y)
        })
        .sum()
}

/// Tensor rule for self-interaction.
#[derive(Clone, Debug)]
pub struct SelfRule {
    pub ggq: RadialGgq,
    pub n_l: usize,
}

impl SelfRule {
    pub fn new(n_g: usize, n_l: usize) -> Result<Self> {
        if n_l < 2 {
            return Err(Error::InvalidArgument(format!(
                "N_l = {n_l} must be at least 2"
            )));
        }
        Ok(SelfRule {
            ggq: RadialGgq::build(n_g)?,
            n_l,
        })
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SelfResult {
    pub value: f64,
    /// Arc-length panels over all sub-elements.
    pub panels: usize,
}

/// One side of an element, parametrized by arc length.
#[derive(Clone, Copy, Debug)]
pub enum Side<'a> {
    Segment {
        a: Point,
        b: Point,
    },
    Arc {
        curve: &'a ArcLengthCurve,
        s0: f64,
        len: f64,
    },
}

impl Side<'_> {
    pub fn length(&self) -> f64 {
        match self {
            Side::Segment { a, b } => (b - a).norm(),
            Side::Arc { len, .. } => *len,
        }
    }

    /// γ(σ) and the unit tangent γ′(σ).
    pub fn eval(&self, sigma: f64) -> (Point, Point) {
        match self {
            Side::Segment { a, b } => {
                let t = (b - a) / (b - a).norm();
                (a + t * sigma, t)
            }
            Side::Arc { curve, s0, .. } => {
                let fr = curve.frame(s0 + sigma);
                (fr.point, fr.tangent)
            }
        }
    }

    /// (σ̃, |v − γ(σ̃)|) with σ̃ = argmin over the side.
    pub fn closest(&self, v: &Point) -> (f64, f64) {
        match self {
            Side::Segment { a, b } => {
                let l = (b - a).norm();
                let t = (b - a) / l;
                let s = (v - a).dot(&t).clamp(0.0, l);
                (s, (v - (a + t * s)).norm())
            }
            Side::Arc { curve, s0, len } => arc_closest(curve, *s0, *len, v),
        }
    }
}

fn arc_closest(curve: &ArcLengthCurve, s0: f64, len: f64, v: &Point) -> (f64, f64) {
    const SAMPLES: usize = 64;
    let dist = |s: f64| (curve.point(s0 + s) - v).norm();
    let h = len / SAMPLES as f64;
    let k = (0..=SAMPLES)
        .min_by(|&i, &j| dist(i as f64 * h).total_cmp(&dist(j as f64 * h)))
        .unwrap_or(0);
    let (mut lo, mut hi) = ((k as f64 - 1.0).max(0.0) * h, ((k + 1) as f64 * h).min(len));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (dist(x1), dist(x2));
    for _ in 0..40 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = dist(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = dist(x2);
        }
    }
    let mut s = 0.5 * (lo + hi);
    for _ in 0..8 {
        let fr = curve.frame(s0 + s);
        let d = fr.point - v;
        let g1 = d.dot(&fr.tangent);
        let g2 = 1.0 + d.dot(&fr.second_derivative());
        if !(g2 > 0.0) {
            break;
        }
        let step = g1 / g2;
        let next = (s - step).clamp(0.0, len);
        let done = (next - s).abs() < 1e-12 * len;
        if dist(next) <= dist(s) {
            s = next;
        }
        if done {
            break;
        }
    }
    let mut best = (s, dist(s));
    for e in [0.0, len] {
        let d = dist(e);
        if d < best.1 {
            best = (e, d);
        }
    }
    best
}

/// Sides of the element, counter-clockwise in reference order Q → P → O for curved ones.
pub fn element_sides(map: &ElementMap) -> Vec<Side<'_>> {
    match map {
        ElementMap::Affine(_) => {
            let [a, b, c] = map.corners();
            vec![
                Side::Segment { a, b },
                Side::Segment { a: b, b: c },
                Side::Segment { a: c, b: a },
            ]
        }
        ElementMap::Blending(m) => vec![
            Side::Arc {
                curve: &m.curve,
                s0: m.s0,
                len: m.len,
            },
            Side::Segment { a: m.q, b: m.o },
            Side::Segment { a: m.o, b: m.p },
        ],
    }
}

/// Potential of one element at a target inside it.
pub fn self_eval(
    map: &ElementMap,
    f: &Density,
    v: &Point,
    rule: &SelfRule,
    eps: f64,
) -> Result<SelfResult> {
    let sides = element_sides(map);
    let corners = map.corners();
    let diam = (0..3)
        .map(|i| (corners[(i + 1) % 3] - corners[i]).norm())
        .fold(0.0, f64::max);
    let mut v = *v;
    for c in &corners {
        if (v - c).norm() < 1e-12 * diam {
            v = *c;
        }
    }
    let mut out = SelfResult::default();
    for side in &sides {
        let (st, d) = side.closest(&v);
        if d < 1e-14 * diam {
            continue;
        }
        let (val, panels) = sub_element(side, &v, st, d, rule, f, eps)?;
        out.value += val;
        out.panels += panels;
    }
    out.value *= INV_2PI;
    Ok(out)
}

/// Breakpoints of the dyadic panels on [0, L] graded toward s̃.
pub fn dyadic_panels(len: f64, st: f64, d: f64) -> Vec<f64> {
    let mut left = Vec::new();
    if st > 0.0 {
        let mut w = st;
        let mut x = 0.0;
        while w >= d && left.len() < 60 {
            left.push(x);
            w *= 0.5;
            x = st - w;
        }
        left.push(x);
    }
    left.push(st);
    let r = len - st;
    if r > 0.0 {
        let mut right = Vec::new();
        let mut w = r;
        let mut x = len;
        while w >= d && right.len() < 60 {
            right.push(x);
            w *= 0.5;
            x = st + w;
        }
        right.push(x);
        left.extend(right.into_iter().rev());
    }
    left.dedup_by(|a, b| (*a - *b).abs() <= 0.0);
    left
}

fn sub_element(
    side: &Side,
    v: &Point,
    st: f64,
    d: f64,
    rule: &SelfRule,
    f: &Density,
    eps: f64,
) -> Result<(f64, usize)> {
    let len = side.length();
    let br = dyadic_panels(len, st, d);
    let npan = br.len() - 1;
    let mut sign = 0.0;
    let mut total = 0.0;
    for k in 0..npan {
        let (a, b) = (br[k], br[k + 1]);
        let end = k == 0 || k + 1 == npan;
        let val = if end && npan > 1 {
            end_panel(side, v, a, b, rule, f, eps, &mut sign)?
        } else {
            panel(side, v, a, b, rule.n_l, &rule.ggq, f, &mut sign)?
        };
        total += val;
    }
    Ok((total, npan))
}

#[allow(clippy::too_many_arguments)]
fn end_panel(
    side: &Side,
    v: &Point,
    a: f64,
    b: f64,
    rule: &SelfRule,
    f: &Density,
    eps: f64,
    sign: &mut f64,
) -> Result<f64> {
    let n = rule.n_l;
    let mut prev = panel(side, v, a, b, n, &rule.ggq, f, sign)?;
    let half = panel(side, v, a, b, (n / 2).max(1), &rule.ggq, f, sign)?;
    if (prev - half).abs() <= eps {
        return Ok(prev);
    }
    let mut m = 2 * n;
    loop {
        let cur = panel(side, v, a, b, m, &rule.ggq, f, sign)?;
        if (cur - prev).abs() <= eps || m >= 8 * n {
            return Ok(cur);
        }
        prev = cur;
        m *= 2;
    }
}

#[allow(clippy::too_many_arguments)]
fn panel(
    side: &Side,
    v: &Point,
    a: f64,
    b: f64,
    n: usize,
    ggq: &RadialGgq,
    f: &Density,
    sign: &mut f64,
) -> Result<f64> {
    let gl = GaussLegendre::cached(n);
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    let mut sum = 0.0;
    for (x, w) in gl.nodes.iter().zip(&gl.weights) {
        let (g, t) = side.eval(mid + half * x);
        let dv = g - v;
        let r0 = dv.norm();
        let cr = cross(&dv, &t);
        if cr.abs() > 1e-12 * r0 {
            if *sign == 0.0 {
                *sign = cr.signum();
            } else if cr.signum() != *sign {
                return Err(Error::NonMonotone);
            }
        }
        let lr0 = r0.ln();
        let inner: f64 = ggq
            .nodes
            .iter()
            .zip(&ggq.weights)
            .map(|(r, wr)| wr * r * (lr0 + r.ln()) * f(&(v + dv * *r)))
            .sum();
        sum += w * half * cr.abs() * inner;
    }
    Ok(sum)
}
