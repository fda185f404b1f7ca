//! Brute-force reference values shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;
use std::sync::Arc;

use volpot::basis::QuadRule;
use volpot::boundary::{ArcLengthCurve, Circle, Ellipse};
use volpot::element_map::ElementMap;
use volpot::geometry::pt;
use volpot::mesher::TriMesh;
use volpot::nearfield::{NearFieldModel, NearModelKind};
use volpot::pipeline::Orders;
use volpot::quadrature::{far_eval, near_eval, self_eval, Density, NearParams, SelfRule};
use volpot::{Error, Point};

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = WGK[7] * fc;
    let mut g = WG[3] * fc;
    for i in 0..7 {
        let (f1, f2) = (f(c - h * XGK[i]), f(c + h * XGK[i]));
        k += WGK[i] * (f1 + f2);
        if i % 2 == 1 {
            g += WG[i / 2] * (f1 + f2);
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive Gauss-Kronrod (7, 15) with absolute tolerance `tol`, floored at
/// a few ulps of ∫|f| so rounding noise does not drive refinement.
pub fn adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn rec<F: FnMut(f64) -> f64>(
        f: &mut F,
        a: f64,
        b: f64,
        tol: f64,
        floor: f64,
        whole: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (l, el) = gk15(f, a, m);
        let (r, er) = gk15(f, m, b);
        if depth >= 40
            || el + er <= tol.max(floor)
            || (l + r - whole).abs() <= (0.01 * tol).max(floor)
        {
            return l + r;
        }
        rec(f, a, m, 0.5 * tol, floor, l, depth + 1) + rec(f, m, b, 0.5 * tol, floor, r, depth + 1)
    }
    let (whole, _) = gk15(&mut f, a, b);
    let (mag, _) = gk15(&mut |x| f(x).abs(), a, b);
    let floor = 1e-16 * mag;
    rec(&mut f, a, b, tol, floor, whole, 0)
}

/// Boundary piece γ(s), s ∈ [0, len], returning point and derivative.
pub type Piece = Box<dyn Fn(f64) -> (Point, Point)>;

pub fn segment(a: Point, b: Point) -> (Piece, f64) {
    (Box::new(move |s| (a + (b - a) * s, b - a)), 1.0)
}

/// Potential (1/2π)∬ log|v − y| f(y) dy over the region bounded by the
/// counter-clockwise closed chain `pieces`, via the signed cone formula
/// ∮ ((γ−v)×γ′) ∫₀¹ r log(r|γ−v|) f(v + r(γ−v)) dr ds. Valid for any v off the boundary.
pub fn cone_potential(
    pieces: &[(Piece, f64)],
    f: &dyn Fn(&Point) -> f64,
    v: Point,
    tol: f64,
) -> f64 {
    let mut total = 0.0;
    for (g, len) in pieces {
        let outer = |s: f64| {
            let (p, dp) = g(s);
            let d = p - v;
            let cr = d.x * dp.y - d.y * dp.x;
            if cr == 0.0 {
                return 0.0;
            }
            let lr0 = d.norm().ln();
            let inner = adaptive(
                |t| {
                    let r = t * t;
                    if r == 0.0 {
                        return 0.0;
                    }
                    2.0 * t * r * (lr0 + r.ln()) * f(&(v + d * r))
                },
                0.0,
                1.0,
                tol,
            );
            cr * inner
        };
        // Split at the closest sample to resolve the near peak.
        let n = 64;
        let k = (0..=n)
            .min_by(|&i, &j| {
                let di = (g(*len * i as f64 / n as f64).0 - v).norm();
                let dj = (g(*len * j as f64 / n as f64).0 - v).norm();
                di.total_cmp(&dj)
            })
            .unwrap();
        let sk = *len * k as f64 / n as f64;
        let mut o = outer;
        if sk > 0.0 {
            total += adaptive(&mut o, 0.0, sk, tol);
        }
        if sk < *len {
            total += adaptive(&mut o, sk, *len, tol);
        }
    }
    total / (2.0 * PI)
}

/// Boundary chain of a triangle with the given CCW corners.
pub fn triangle_pieces(c: [Point; 3]) -> Vec<(Piece, f64)> {
    vec![
        segment(c[0], c[1]),
        segment(c[1], c[2]),
        segment(c[2], c[0]),
    ]
}

/// Boundary chain of a mesh element, CCW.
pub fn element_pieces(map: &ElementMap) -> Vec<(Piece, f64)> {
    match map {
        ElementMap::Affine(_) => triangle_pieces(map.corners()),
        ElementMap::Blending(m) => {
            let curve = m.curve.clone();
            let s0 = m.s0;
            let arc: Piece = Box::new(move |s| {
                let fr = curve.frame(s0 + s);
                (fr.point, fr.tangent)
            });
            vec![(arc, m.len), segment(m.q, m.o), segment(m.o, m.p)]
        }
    }
}

pub fn signed_area(c: &[Point; 3]) -> f64 {
    0.5 * ((c[1].x - c[0].x) * (c[2].y - c[0].y) - (c[1].y - c[0].y) * (c[2].x - c[0].x))
}

pub fn unit_disk() -> Arc<ArcLengthCurve> {
    Arc::new(
        ArcLengthCurve::new(
            Circle {
                center: pt(0.0, 0.0),
                radius: 1.0,
            },
            1e-14,
        )
        .unwrap(),
    )
}

pub fn ellipse_2_1() -> Arc<ArcLengthCurve> {
    Arc::new(
        ArcLengthCurve::new(
            Ellipse {
                center: pt(0.0, 0.0),
                a: 2.0,
                b: 1.0,
            },
            1e-14,
        )
        .unwrap(),
    )
}

/// Direct O(N M) log-kernel sum; coincident pairs skipped.
pub fn direct_sum(sources: &[Point], charges: &[f64], targets: &[Point]) -> Vec<f64> {
    targets
        .iter()
        .map(|t| {
            let mut s = 0.0;
            for (p, q) in sources.iter().zip(charges) {
                let r2 = (t - p).norm_squared();
                if r2 > 0.0 {
                    s += q * 0.5 * r2.ln();
                }
            }
            s / (2.0 * PI)
        })
        .collect()
}

/// Deterministic random CCW triangle with quality bounded away from zero.
pub fn random_triangle(rng: &mut impl rand::Rng) -> [Point; 3] {
    loop {
        let c = [
            pt(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            pt(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            pt(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        ];
        let a = signed_area(&c);
        let q = volpot::mesher::triangle_quality(&c[0], &c[1], &c[2]);
        if q > 0.3 {
            return if a > 0.0 { c } else { [c[0], c[2], c[1]] };
        }
    }
}

/// All-direct reference: each element handled by far, near or self quadrature
/// chosen by an exhaustive scan of its near-field model.
pub fn all_direct(
    quad: &TriMesh,
    targets: &[Point],
    f: &Density,
    eps: f64,
    o: &Orders,
) -> Vec<f64> {
    let far = QuadRule::xiao_gimbutas(o.n_f).unwrap();
    let near = QuadRule::xiao_gimbutas(o.n_n).unwrap();
    let srule = SelfRule::new(o.n_g, o.n_l).unwrap();
    let models: Vec<NearFieldModel> = (0..quad.len())
        .map(|e| {
            let m = quad.map(e);
            NearFieldModel::build(
                NearModelKind::Precise,
                &m.corners(),
                m.area(&far),
                &far,
                eps,
            )
            .unwrap()
        })
        .collect();
    let params = NearParams { eps, rule: &near };
    targets
        .iter()
        .map(|x| {
            let mut u = 0.0;
            for e in 0..quad.len() {
                let map = quad.map(e);
                if quad.contains(e, x) {
                    u += self_eval(map, f, x, &srule, eps).unwrap().value;
                } else if models[e].contains(x) {
                    u += match near_eval(map, f, x, &params) {
                        Ok(r) => r.value,
                        Err(Error::SubdivisionDepth) => {
                            self_eval(map, f, x, &srule, eps).unwrap().value
                        }
                        Err(e) => panic!("{e}"),
                    };
                } else {
                    u += far_eval(map, &far, f, x);
                }
            }
            u
        })
        .collect()
}

/// Points of a 48×48 grid over [−0.55, 1.55]² lying outside the standard simplex.
pub fn exterior_grid() -> Vec<Point> {
    let n = 48;
    let (lo, hi) = (-0.55, 1.55);
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = lo + (hi - lo) * (i as f64 + 0.37) / n as f64;
            let y = lo + (hi - lo) * (j as f64 + 0.61) / n as f64;
            if x < -1e-9 || y < -1e-9 || x + y > 1.0 + 1e-9 {
                out.push(pt(x, y));
            }
        }
    }
    out
}
