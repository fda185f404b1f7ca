//! Force-equilibrium mesh generation with boundary-conforming curved elements.

use std::collections::{BTreeMap, HashMap};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::delaunay::triangulate;
use super::sizefield::SizeField;
use super::trimesh::{Element, ElementKind, TriMesh};
use crate::boundary::{ClosestPoint, SdfModel};
use crate::error::{Error, Result};
use crate::geometry::{cross, signed_area, Point};

const DT: f64 = 0.2;
const FSCALE: f64 = 1.2;
const RETRIANGULATE: f64 = 0.1;
const SETTLE: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct MeshOptions {
    pub h0: f64,
    pub stagger: bool,
    pub seed: u64,
    pub max_iterations: usize,
    pub min_quality: f64,
}

impl MeshOptions {
    pub fn new(h0: f64) -> Self {
        MeshOptions {
            h0,
            stagger: false,
            seed: 0,
            max_iterations: 5000,
            min_quality: 0.3,
        }
    }

    pub fn staggered(mut self, stagger: bool) -> Self {
        self.stagger = stagger;
        self
    }
}

/// Bookkeeping from one generation run.
#[derive(Clone, Debug, Default)]
pub struct MeshReport {
    pub iterations: usize,
    pub retriangulations: usize,
    pub flips: usize,
    pub splits: usize,
    pub attempts: usize,
}

pub fn generate(model: &SdfModel, opts: &MeshOptions, size: Option<&SizeField>) -> Result<TriMesh> {
    generate_with_report(model, opts, size).map(|r| r.0)
}

pub fn generate_with_report(
    model: &SdfModel,
    opts: &MeshOptions,
    size: Option<&SizeField>,
) -> Result<(TriMesh, MeshReport)> {
    if !(opts.h0 > 0.0) || !opts.h0.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "h0 must be positive, got {}",
            opts.h0
        )));
    }
    match attempt(model, opts, size, false) {
        Err(Error::PoorQuality { .. }) => {
            let (mesh, mut report) = attempt(model, opts, size, true)?;
            report.attempts = 2;
            Ok((mesh, report))
        }
        other => other,
    }
}

struct State<'a> {
    model: &'a SdfModel,
    size: Option<&'a SizeField>,
    h0: f64,
    p: Vec<Point>,
    on_boundary: Vec<Option<ClosestPoint>>,
}

impl State<'_> {
    fn h(&self, x: &Point) -> f64 {
        self.size.map_or(1.0, |s| s.eval(x))
    }

    fn sdf(&self, x: &Point) -> f64 {
        let d = self.model.eval(x, false);
        if d.abs() < 2.0 * self.model.h_samp() {
            self.model.eval(x, true)
        } else {
            d
        }
    }

    fn project(&mut self, i: usize) {
        let cp = self.model.closest_point(&self.p[i], true);
        self.p[i] = cp.point;
        self.on_boundary[i] = Some(cp);
    }

    fn triangles(&self) -> Vec<[usize; 3]> {
        let geps = 1e-3 * self.h0;
        triangulate(&self.p)
            .into_iter()
            .filter(|t| {
                let c = (self.p[t[0]] + self.p[t[1]] + self.p[t[2]]) / 3.0;
                self.sdf(&c) > -geps
            })
            .collect()
    }

    /// Relaxes the truss until the interior displacement settles.
    fn relax(&mut self, max_iterations: usize, report: &mut MeshReport) -> Result<()> {
        let n = self.p.len();
        let h0 = self.h0;
        let mut pold = vec![Point::new(f64::INFINITY, f64::INFINITY); n];
        let mut bars: Vec<(usize, usize)> = Vec::new();
        let mut force = vec![Point::zeros(); n];
        for _ in 0..max_iterations {
            report.iterations += 1;
            let moved = self
                .p
                .iter()
                .zip(&pold)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if moved > RETRIANGULATE * h0 {
                pold.clone_from(&self.p);
                bars = unique_edges(&self.triangles());
                report.retriangulations += 1;
            }
            let lens: Vec<f64> = bars
                .iter()
                .map(|&(i, j)| (self.p[i] - self.p[j]).norm())
                .collect();
            let hbar: Vec<f64> = bars
                .iter()
                .map(|&(i, j)| self.h(&((self.p[i] + self.p[j]) * 0.5)))
                .collect();
            let sum_l2: f64 = lens.iter().map(|l| l * l).sum();
            let sum_h2: f64 = hbar.iter().map(|h| h * h).sum();
            let scale = FSCALE * (sum_l2 / sum_h2).sqrt();
            force.iter_mut().for_each(|f| *f = Point::zeros());
            for (k, &(i, j)) in bars.iter().enumerate() {
                let l = lens[k];
                let f = (hbar[k] * scale - l).max(0.0);
                if l > 0.0 && f > 0.0 {
                    let v = (self.p[i] - self.p[j]) * (f / l);
                    force[i] += v;
                    force[j] -= v;
                }
            }
            // Boundary nodes only slide along the boundary.
            for i in 0..n {
                if let Some(cp) = self.on_boundary[i] {
                    let nrm = self.model.curves()[cp.curve].normal(cp.s);
                    let fn_ = force[i].dot(&nrm);
                    force[i] -= nrm * fn_;
                    debug_assert!(force[i].dot(&nrm).abs() <= 1e-9 * (1.0 + force[i].norm()));
                }
            }
            let mut max_interior: f64 = 0.0;
            for i in 0..n {
                let step = force[i] * DT;
                self.p[i] += step;
                if self.on_boundary[i].is_none() {
                    max_interior = max_interior.max(step.norm());
                }
            }
            for i in 0..n {
                if self.on_boundary[i].is_some() || self.sdf(&self.p[i]) < 0.0 {
                    self.project(i);
                }
            }
            if max_interior < SETTLE * h0 {
                return Ok(());
            }
        }
        Err(Error::MeshDidNotSettle(max_iterations))
    }
}

fn unique_edges(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut e: Vec<(usize, usize)> = tris
        .iter()
        .flat_map(|t| (0..3).map(move |k| (t[k].min(t[(k + 1) % 3]), t[k].max(t[(k + 1) % 3]))))
        .collect();
    e.sort_unstable();
    e.dedup();
    e
}

fn initial_points(
    model: &SdfModel,
    opts: &MeshOptions,
    size: Option<&SizeField>,
    jitter: bool,
) -> Vec<Point> {
    let h0 = lattice_spacing(opts, size);
    let bbox = model.bounding_box();
    let dy = h0 * 3f64.sqrt() / 2.0;
    let (sx, sy) = if opts.stagger {
        (0.5 * h0, h0 / (2.0 * 3f64.sqrt()))
    } else {
        (0.0, 0.0)
    };
    let x0 = ((bbox.min.x / h0).floor() - 1.0) * h0 + sx;
    let j0 = (bbox.min.y / dy).floor() as i64 - 1;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let geps = 1e-3 * h0;
    let mut pts = Vec::new();
    let mut j = j0;
    loop {
        let y = j as f64 * dy + sy;
        if y > bbox.max.y + h0 {
            break;
        }
        let mut x = x0 + if j.rem_euclid(2) == 1 { 0.5 * h0 } else { 0.0 };
        while x <= bbox.max.x + h0 {
            let p = Point::new(x, y);
            if model.eval(&p, true) > geps {
                pts.push(p);
            }
            x += h0;
        }
        j += 1;
    }
    if let Some(sf) = size {
        let inv: Vec<f64> = pts.iter().map(|p| 1.0 / sf.eval(p).powi(2)).collect();
        let top = inv.iter().cloned().fold(0.0, f64::max);
        let kept: Vec<Point> = pts
            .iter()
            .zip(&inv)
            .filter(|(_, r)| rng.gen::<f64>() < *r / top)
            .map(|(p, _)| *p)
            .collect();
        pts = kept;
    }
    if jitter {
        for p in pts.iter_mut() {
            let q = *p + Point::new(rng.gen_range(-0.1..0.1), rng.gen_range(-0.1..0.1)) * h0;
            if model.eval(&q, true) > geps {
                *p = q;
            }
        }
    }
    pts
}

/// Graded meshes start from a lattice at the finest size and thin it out.
fn lattice_spacing(opts: &MeshOptions, size: Option<&SizeField>) -> f64 {
    size.map_or(opts.h0, SizeField::h_min)
}

fn attempt(
    model: &SdfModel,
    opts: &MeshOptions,
    size: Option<&SizeField>,
    jitter: bool,
) -> Result<(TriMesh, MeshReport)> {
    let mut report = MeshReport {
        attempts: 1,
        ..Default::default()
    };
    let p = initial_points(model, opts, size, jitter);
    if p.len() < 3 {
        return Err(Error::InvalidArgument(
            "h0 is too large for the domain".into(),
        ));
    }
    let n = p.len();
    let mut st = State {
        model,
        size,
        h0: lattice_spacing(opts, size),
        p,
        on_boundary: vec![None; n],
    };
    let mut budget = opts.max_iterations;
    let tris = loop {
        let before = report.iterations;
        st.relax(budget, &mut report)?;
        budget = budget.saturating_sub(report.iterations - before);
        let tris = st.triangles();
        // Every endpoint of a boundary edge must sit on the boundary.
        let loose: Vec<usize> = boundary_edges(&tris)
            .into_iter()
            .flat_map(|(a, b)| [a, b])
            .filter(|&v| st.on_boundary[v].is_none())
            .collect();
        if loose.is_empty() {
            break tris;
        }
        if budget == 0 {
            return Err(Error::MeshDidNotSettle(opts.max_iterations));
        }
        for v in loose {
            st.project(v);
        }
    };
    finish(st, tris, opts, report)
}

/// Directed boundary edges (a, b) in counterclockwise element order.
fn boundary_edges(tris: &[[usize; 3]]) -> Vec<(usize, usize)> {
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, t) in tris.iter().enumerate() {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]), i);
        }
    }
    let mut out: Vec<(usize, usize)> = directed
        .keys()
        .filter(|(a, b)| !directed.contains_key(&(*b, *a)))
        .copied()
        .collect();
    out.sort_unstable();
    out
}

fn boundary_edge_count(t: &[usize; 3], directed: &HashMap<(usize, usize), usize>) -> usize {
    (0..3)
        .filter(|&k| !directed.contains_key(&(t[(k + 1) % 3], t[k])))
        .count()
}

/// Flips the interior edge of elements with two boundary edges.
fn flip_ears(p: &[Point], tris: &mut [[usize; 3]], report: &mut MeshReport) -> Result<()> {
    for _ in 0..4 {
        let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
        for (i, t) in tris.iter().enumerate() {
            for k in 0..3 {
                directed.insert((t[k], t[(k + 1) % 3]), i);
            }
        }
        let mut changed = false;
        for i in 0..tris.len() {
            let t = tris[i];
            let nb = boundary_edge_count(&t, &directed);
            if nb < 2 {
                continue;
            }
            if nb == 3 {
                return Err(Error::InvalidMesh(
                    "isolated element with three boundary edges".into(),
                ));
            }
            // Interior edge (c, a) with neighbor (a, c, d).
            let k = (0..3)
                .find(|&k| directed.contains_key(&(t[(k + 1) % 3], t[k])))
                .expect("one interior edge");
            let (c, a) = (t[k], t[(k + 1) % 3]);
            let b = t[(k + 2) % 3];
            let j = directed[&(a, c)];
            let u = tris[j];
            let d = (0..3)
                .map(|m| u[m])
                .find(|&v| v != a && v != c)
                .expect("third vertex");
            let (t1, t2) = ([a, b, d], [b, c, d]);
            if signed_area(&p[a], &p[b], &p[d]) <= 0.0 || signed_area(&p[b], &p[c], &p[d]) <= 0.0 {
                return Err(Error::InvalidMesh(
                    "cannot flip an element with two boundary edges".into(),
                ));
            }
            tris[i] = t1;
            tris[j] = t2;
            report.flips += 1;
            changed = true;
            break;
        }
        if !changed {
            return Ok(());
        }
    }
    Ok(())
}

fn finish(
    mut st: State,
    mut tris: Vec<[usize; 3]>,
    opts: &MeshOptions,
    mut report: MeshReport,
) -> Result<(TriMesh, MeshReport)> {
    flip_ears(&st.p, &mut tris, &mut report)?;

    // Compact vertices that ended up in no element.
    let mut used = vec![false; st.p.len()];
    for t in &tris {
        for &v in t {
            used[v] = true;
        }
    }
    let mut remap = vec![usize::MAX; st.p.len()];
    let mut vertices = Vec::new();
    let mut params: Vec<Option<ClosestPoint>> = Vec::new();
    for (i, &u) in used.iter().enumerate() {
        if u {
            remap[i] = vertices.len();
            vertices.push(st.p[i]);
            params.push(st.on_boundary[i].take());
        }
    }
    let tris: Vec<[usize; 3]> = tris.iter().map(|t| t.map(|v| remap[v])).collect();

    let curves = st.model.curves().to_vec();
    let mut kinds: BTreeMap<usize, ElementKind> = BTreeMap::new();
    let mut directed: HashMap<(usize, usize), usize> = HashMap::new();
    for (i, t) in tris.iter().enumerate() {
        for k in 0..3 {
            directed.insert((t[k], t[(k + 1) % 3]), i);
        }
    }
    for (a, b) in boundary_edges(&tris) {
        let ei = directed[&(a, b)];
        let t = tris[ei];
        let k = (0..3).find(|&k| t[k] == a).expect("edge start");
        let opp = (k + 2) % 3;
        let (ca, cb) = match (params[a], params[b]) {
            (Some(x), Some(y)) => (x, y),
            _ => {
                return Err(Error::InvalidMesh(
                    "boundary edge endpoint is not on the boundary".into(),
                ))
            }
        };
        if ca.curve != cb.curve {
            return Err(Error::EdgeSpansCurves(a, b));
        }
        let l = curves[ca.curve].length();
        let s_a = ca.s;
        let s_b = s_a + (cb.s - s_a).rem_euclid(l);
        if !(s_b > s_a) || s_b - s_a > 0.5 * l {
            return Err(Error::InvalidMesh(format!(
                "boundary edge ({a}, {b}) runs against its curve"
            )));
        }
        if kinds
            .insert(
                ei,
                ElementKind::Curved {
                    opp,
                    curve: ca.curve,
                    s_a,
                    s_b,
                },
            )
            .is_some()
        {
            return Err(Error::InvalidMesh(format!(
                "element {ei} has more than one boundary edge"
            )));
        }
    }
    let mut boundary: Vec<bool> = params.iter().map(Option::is_some).collect();
    let mut elements: Vec<Element> = tris
        .iter()
        .enumerate()
        .map(|(i, t)| Element {
            v: *t,
            kind: kinds.get(&i).copied().unwrap_or(ElementKind::Straight),
        })
        .collect();

    // Split curved elements whose polar angle is not monotone about the opposite vertex.
    let mut i = 0;
    while i < elements.len() {
        let e = elements[i];
        if let ElementKind::Curved {
            opp,
            curve,
            s_a,
            s_b,
        } = e.kind
        {
            let o = vertices[e.v[opp]];
            if !polar_monotone(&curves[curve], o, s_a, s_b) {
                if report.splits > 64 {
                    return Err(Error::NonMonotone);
                }
                let s_m = 0.5 * (s_a + s_b);
                let m = vertices.len();
                vertices.push(curves[curve].point(s_m));
                boundary.push(true);
                let (va, vb, vo) = (e.v[(opp + 1) % 3], e.v[(opp + 2) % 3], e.v[opp]);
                elements[i] = Element {
                    v: [vo, va, m],
                    kind: ElementKind::Curved {
                        opp: 0,
                        curve,
                        s_a,
                        s_b: s_m,
                    },
                };
                elements.push(Element {
                    v: [vo, m, vb],
                    kind: ElementKind::Curved {
                        opp: 0,
                        curve,
                        s_a: s_m,
                        s_b,
                    },
                });
                report.splits += 1;
                continue;
            }
        }
        i += 1;
    }

    let mesh = TriMesh::new(vertices, boundary, elements, curves)?;
    let q = mesh.qualities();
    if let Some((element, &quality)) = q.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)) {
        if quality < opts.min_quality {
            return Err(Error::PoorQuality {
                element,
                quality,
                threshold: opts.min_quality,
            });
        }
    }
    Ok((mesh, report))
}

/// θ(s) strictly increasing about `o` along [s_a, s_b] (cross-product form).
pub fn polar_monotone(
    curve: &crate::boundary::ArcLengthCurve,
    o: Point,
    s_a: f64,
    s_b: f64,
) -> bool {
    let n = 64;
    (0..=n).all(|k| {
        let f = curve.frame(s_a + (s_b - s_a) * k as f64 / n as f64);
        cross(&(f.point - o), &f.tangent) > 0.0
    })
}
