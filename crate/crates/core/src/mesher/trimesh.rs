//! Annotated triangle meshes with straight and curved elements.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use crate::boundary::ArcLengthCurve;
use crate::element_map::{AffineMap, BlendingMap, ElementMap};
use crate::error::{Error, Result};
use crate::geometry::{cross, signed_area, Point, Rect};
use crate::quadtree::Quadtree;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ElementKind {
    Straight,
    /// Curved side runs from `v[(opp+1)%3]` = γ(s_a) to `v[(opp+2)%3]` = γ(s_b), s_a < s_b.
    Curved {
        opp: usize,
        curve: usize,
        s_a: f64,
        s_b: f64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Element {
    pub v: [usize; 3],
    pub kind: ElementKind,
}

impl Element {
    pub fn is_curved(&self) -> bool {
        matches!(self.kind, ElementKind::Curved { .. })
    }
}

/// Triangle mesh with per-element maps and a bounding-box index.
#[derive(Debug)]
pub struct TriMesh {
    pub vertices: Vec<Point>,
    pub boundary: Vec<bool>,
    pub elements: Vec<Element>,
    curves: Vec<Arc<ArcLengthCurve>>,
    maps: Vec<ElementMap>,
    bboxes: Vec<Rect>,
    tree: Quadtree,
    max_bbox_diag: f64,
}

/// Quality 2 r_in / r_circ of the triangle (a, b, c); 1 for equilateral.
pub fn triangle_quality(a: &Point, b: &Point, c: &Point) -> f64 {
    let (la, lb, lc) = ((b - c).norm(), (c - a).norm(), (a - b).norm());
    let area = signed_area(a, b, c).abs();
    if area == 0.0 {
        return 0.0;
    }
    let s = 0.5 * (la + lb + lc);
    let r_in = area / s;
    let r_circ = la * lb * lc / (4.0 * area);
    2.0 * r_in / r_circ
}

impl TriMesh {
    pub fn new(
        vertices: Vec<Point>,
        boundary: Vec<bool>,
        elements: Vec<Element>,
        curves: Vec<Arc<ArcLengthCurve>>,
    ) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyInput);
        }
        if boundary.len() != vertices.len() {
            return Err(Error::InvalidMesh(
                "boundary flag count differs from vertex count".into(),
            ));
        }
        let mut maps = Vec::with_capacity(elements.len());
        let mut bboxes = Vec::with_capacity(elements.len());
        for (ei, e) in elements.iter().enumerate() {
            if e.v.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidMesh(format!(
                    "element {ei} references a missing vertex"
                )));
            }
            let [a, b, c] = e.v.map(|i| vertices[i]);
            if signed_area(&a, &b, &c) <= 0.0 {
                return Err(Error::InvalidMesh(format!(
                    "element {ei} is not positively oriented"
                )));
            }
            let mut bbox = Rect::bounding(&[a, b, c]).expect("three points");
            let map = match e.kind {
                ElementKind::Straight => ElementMap::Affine(AffineMap::new(a, b, c)?),
                ElementKind::Curved {
                    opp,
                    curve,
                    s_a,
                    s_b,
                } => {
                    let crv = curves
                        .get(curve)
                        .ok_or_else(|| {
                            Error::InvalidMesh(format!(
                                "element {ei} references missing curve {curve}"
                            ))
                        })?
                        .clone();
                    if opp > 2 || !(s_b > s_a) {
                        return Err(Error::InvalidMesh(format!(
                            "element {ei} has invalid curved-side data"
                        )));
                    }
                    let pa = crv.point(s_a);
                    let pb = crv.point(s_b);
                    let tol = 1e-10 * crv.length().max(1.0);
                    if (pa - vertices[e.v[(opp + 1) % 3]]).norm() > tol
                        || (pb - vertices[e.v[(opp + 2) % 3]]).norm() > tol
                    {
                        return Err(Error::InvalidMesh(format!(
                            "curved side of element {ei} does not match its vertices"
                        )));
                    }
                    let len = s_b - s_a;
                    let n = 64;
                    for k in 1..n {
                        bbox.expand(&crv.point(s_a + len * k as f64 / n as f64));
                    }
                    bbox = bbox.inflate(1e-4 * len);
                    ElementMap::Blending(BlendingMap::new(crv, s_a, len, vertices[e.v[opp]])?)
                }
            };
            maps.push(map);
            bboxes.push(bbox);
        }
        // Every edge is shared by at most two elements with opposite orientation.
        let mut edges: HashMap<(usize, usize), usize> = HashMap::new();
        for (ei, e) in elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (e.v[k], e.v[(k + 1) % 3]);
                if edges.insert((a, b), ei).is_some() {
                    return Err(Error::InvalidMesh(format!(
                        "edge ({a}, {b}) is used twice in one direction"
                    )));
                }
            }
        }
        for (ei, e) in elements.iter().enumerate() {
            if let ElementKind::Curved { opp, .. } = e.kind {
                let (a, b) = (e.v[(opp + 1) % 3], e.v[(opp + 2) % 3]);
                if edges.contains_key(&(b, a)) {
                    return Err(Error::InvalidMesh(format!(
                        "curved side of element {ei} is not a boundary edge"
                    )));
                }
            }
        }
        let corners: Vec<Point> = bboxes.iter().flat_map(|b| b.corners()).collect();
        let tree = Quadtree::build(&corners, 16)?;
        let max_bbox_diag = bboxes.iter().map(Rect::diameter).fold(0.0, f64::max);
        Ok(TriMesh {
            vertices,
            boundary,
            elements,
            curves,
            maps,
            bboxes,
            tree,
            max_bbox_diag,
        })
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn curves(&self) -> &[Arc<ArcLengthCurve>] {
        &self.curves
    }

    pub fn map(&self, e: usize) -> &ElementMap {
        &self.maps[e]
    }

    pub fn maps(&self) -> &[ElementMap] {
        &self.maps
    }

    pub fn bbox(&self, e: usize) -> &Rect {
        &self.bboxes[e]
    }

    pub fn max_bbox_diagonal(&self) -> f64 {
        self.max_bbox_diag
    }

    pub fn curved_count(&self) -> usize {
        self.elements.iter().filter(|e| e.is_curved()).count()
    }

    /// Chord-triangle quality of every element.
    pub fn qualities(&self) -> Vec<f64> {
        self.elements
            .iter()
            .map(|e| {
                let [a, b, c] = e.v.map(|i| self.vertices[i]);
                triangle_quality(&a, &b, &c)
            })
            .collect()
    }

    pub fn min_quality(&self) -> f64 {
        self.qualities().into_iter().fold(f64::INFINITY, f64::min)
    }

    /// Edges with exactly one adjacent element, as (element, local edge start).
    pub fn boundary_edges(&self) -> Vec<(usize, usize)> {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        for (ei, e) in self.elements.iter().enumerate() {
            for k in 0..3 {
                seen.insert((e.v[k], e.v[(k + 1) % 3]), ei);
            }
        }
        let mut out = Vec::new();
        for (ei, e) in self.elements.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (e.v[k], e.v[(k + 1) % 3]);
                if !seen.contains_key(&(b, a)) {
                    out.push((ei, k));
                }
            }
        }
        out
    }

    /// Interior straight edges (each reported once) and boundary edges.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut set = std::collections::BTreeSet::new();
        for e in &self.elements {
            for k in 0..3 {
                let (a, b) = (e.v[k], e.v[(k + 1) % 3]);
                set.insert((a.min(b), a.max(b)));
            }
        }
        set.into_iter().collect()
    }

    /// Elements whose bounding box intersects the square of half-width `halfwidth` about `x`.
    /// `halfwidth` is raised to the legal minimum (1.5 × max bbox diagonal) if smaller.
    pub fn nearby(&self, x: &Point, halfwidth: Option<f64>) -> Vec<usize> {
        let legal = 1.5 * self.max_bbox_diag;
        let hw = halfwidth.unwrap_or(legal).max(legal);
        let query = Rect::centered(*x, hw);
        let mut ids: Vec<usize> = self
            .tree
            .query_rect(&query)
            .into_iter()
            .map(|i| i / 4)
            .collect();
        ids.dedup();
        ids.retain(|&e| self.bboxes[e].intersects(&query));
        ids
    }

    /// Whether element `e` contains `x` (barycentric test, or the polar test for curved elements).
    pub fn contains(&self, e: usize, x: &Point) -> bool {
        let el = &self.elements[e];
        if !self.bboxes[e].contains(x) {
            return false;
        }
        let [a, b, c] = el.v.map(|i| self.vertices[i]);
        match el.kind {
            ElementKind::Straight => {
                let area = signed_area(&a, &b, &c);
                let tol = -1e-12 * area;
                signed_area(&a, &b, x) >= tol
                    && signed_area(&b, &c, x) >= tol
                    && signed_area(&c, &a, x) >= tol
            }
            ElementKind::Curved { opp, .. } => {
                let ElementMap::Blending(m) = &self.maps[e] else {
                    unreachable!()
                };
                let o = self.vertices[el.v[opp]];
                let (p, q) = (m.p, m.q);
                let rx = x - o;
                let scale = (p - o).norm() * rx.norm();
                let tol = -1e-12 * scale.max(f64::MIN_POSITIVE);
                if cross(&(p - o), &rx) < tol || cross(&rx, &(q - o)) < tol {
                    return false;
                }
                if rx.norm() == 0.0 {
                    return true;
                }
                // Ray–arc intersection by bisection on the (monotone) polar angle.
                let g = |sigma: f64| cross(&rx, &(m.curve.point(m.s0 + sigma) - o));
                let (mut lo, mut hi) = (0.0, m.len);
                if g(lo) > 0.0 || g(hi) < 0.0 {
                    // x lies on one of the straight sides; fall back to the chord endpoints.
                    return rx.norm() <= (p - o).norm().max((q - o).norm()) * (1.0 + 1e-12);
                }
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    if g(mid) <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if hi - lo <= 1e-15 * m.len {
                        break;
                    }
                }
                let xp = m.curve.point(m.s0 + 0.5 * (lo + hi));
                rx.norm() <= (xp - o).norm() * (1.0 + 1e-12)
            }
        }
    }

    /// Lowest-id element containing `x`, if any.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        let query = Rect::centered(*x, 1.5 * self.max_bbox_diag);
        let mut ids: Vec<usize> = self
            .tree
            .query_rect(&query)
            .into_iter()
            .map(|i| i / 4)
            .collect();
        ids.dedup();
        ids.into_iter().find(|&e| self.contains(e, x))
    }

    /// Serializes to the line-oriented mesh format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{} {}", self.vertices.len(), self.elements.len());
        for (p, &b) in self.vertices.iter().zip(&self.boundary) {
            let _ = writeln!(s, "v {:.16e} {:.16e} {}", p.x, p.y, u8::from(b));
        }
        for e in &self.elements {
            match e.kind {
                ElementKind::Straight => {
                    let _ = writeln!(s, "e {} {} {} straight", e.v[0], e.v[1], e.v[2]);
                }
                ElementKind::Curved {
                    opp,
                    curve,
                    s_a,
                    s_b,
                } => {
                    let _ = writeln!(
                        s,
                        "e {} {} {} curved {} {} {:.16e} {:.16e}",
                        e.v[0], e.v[1], e.v[2], opp, curve, s_a, s_b
                    );
                }
            }
        }
        s
    }

    /// Parses the mesh format; `curves` supplies the geometry referenced by curved elements.
    pub fn from_text(text: &str, curves: Vec<Arc<ArcLengthCurve>>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let bad = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.into(),
        };
        let (hl, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty mesh file".into(),
        })?;
        let h: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| bad(hl, "header must be `NV NE`"))?;
        if h.len() != 2 {
            return Err(bad(hl, "header must be `NV NE`"));
        }
        let (nv, ne) = (h[0], h[1]);
        let mut vertices = Vec::with_capacity(nv);
        let mut boundary = Vec::with_capacity(nv);
        let mut elements = Vec::with_capacity(ne);
        for (ln, line) in lines {
            let t: Vec<&str> = line.split_whitespace().collect();
            let f = |i: usize| -> Result<f64> {
                t.get(i)
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| bad(ln, "bad number"))
            };
            let u = |i: usize| -> Result<usize> {
                t.get(i)
                    .and_then(|x| x.parse().ok())
                    .ok_or_else(|| bad(ln, "bad index"))
            };
            match t.first().copied() {
                Some("v") if t.len() == 4 => {
                    vertices.push(Point::new(f(1)?, f(2)?));
                    boundary.push(u(3)? != 0);
                }
                Some("e") if t.len() == 5 && t[4] == "straight" => {
                    elements.push(Element {
                        v: [u(1)?, u(2)?, u(3)?],
                        kind: ElementKind::Straight,
                    });
                }
                Some("e") if t.len() == 9 && t[4] == "curved" => {
                    elements.push(Element {
                        v: [u(1)?, u(2)?, u(3)?],
                        kind: ElementKind::Curved {
                            opp: u(5)?,
                            curve: u(6)?,
                            s_a: f(7)?,
                            s_b: f(8)?,
                        },
                    });
                }
                _ => return Err(bad(ln, "expected a `v` or `e` record")),
            }
        }
        if vertices.len() != nv || elements.len() != ne {
            return Err(Error::InvalidMesh(format!(
                "header declares {nv} vertices and {ne} elements, found {} and {}",
                vertices.len(),
                elements.len()
            )));
        }
        Self::new(vertices, boundary, elements, curves)
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: &std::path::Path, curves: Vec<Arc<ArcLengthCurve>>) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?, curves)
    }
}
