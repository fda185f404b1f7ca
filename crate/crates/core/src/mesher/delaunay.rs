//! Incremental Bowyer-Watson Delaunay triangulation.

use std::collections::HashMap;

use crate::geometry::Point;

/// Twice the signed area of (a, b, c).
#[inline]
pub fn orient(a: &Point, b: &Point, c: &Point) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

/// Positive when `d` lies strictly inside the circumcircle of the CCW triangle (a, b, c).
#[inline]
pub fn incircle(a: &Point, b: &Point, c: &Point, d: &Point) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

#[derive(Clone, Copy, Debug)]
struct Tri {
    v: [usize; 3],
    /// Neighbor across the edge opposite `v[i]`.
    nbr: [Option<usize>; 3],
    alive: bool,
}

/// Delaunay triangulation of `points`; triangles are counterclockwise.
/// Duplicate points are skipped.
pub fn triangulate(points: &[Point]) -> Vec<[usize; 3]> {
    let n = points.len();
    if n < 3 {
        return Vec::new();
    }
    let mut pts: Vec<Point> = points.to_vec();
    let (mut lo, mut hi) = (pts[0], pts[0]);
    for p in &pts {
        lo = lo.inf(p);
        hi = hi.sup(p);
    }
    let c = (lo + hi) * 0.5;
    let span = (hi - lo).amax().max(1e-300);
    let big = 64.0 * span;
    pts.push(c + Point::new(-big, -big));
    pts.push(c + Point::new(big, -big));
    pts.push(c + Point::new(0.0, big));
    let mut tris = vec![Tri {
        v: [n, n + 1, n + 2],
        nbr: [None; 3],
        alive: true,
    }];

    // Insert along a coarse grid sweep so walks stay short.
    let cell = span / (n as f64).sqrt().max(1.0);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        let ra = ((pts[a].y - lo.y) / cell) as i64;
        let rb = ((pts[b].y - lo.y) / cell) as i64;
        let ka = if ra % 2 == 0 { pts[a].x } else { -pts[a].x };
        let kb = if rb % 2 == 0 { pts[b].x } else { -pts[b].x };
        ra.cmp(&rb).then(ka.total_cmp(&kb))
    });

    let mut last = 0usize;
    let mut bad: Vec<usize> = Vec::new();
    let mut in_bad: Vec<bool> = vec![false; 1];
    let mut stack: Vec<usize> = Vec::new();
    for &pi in &order {
        let p = pts[pi];
        let Some(start) = locate(&tris, &pts, &p, last) else {
            continue;
        };
        let t0 = &tris[start];
        if t0.v.iter().any(|&v| (pts[v] - p).norm() <= 1e-14 * span) {
            continue;
        }
        bad.clear();
        stack.clear();
        in_bad.resize(tris.len(), false);
        stack.push(start);
        in_bad[start] = true;
        while let Some(t) = stack.pop() {
            bad.push(t);
            for k in 0..3 {
                if let Some(nb) = tris[t].nbr[k] {
                    if !in_bad[nb] {
                        let [a, b, c] = tris[nb].v;
                        if incircle(&pts[a], &pts[b], &pts[c], &p) > 0.0 {
                            in_bad[nb] = true;
                            stack.push(nb);
                        }
                    }
                }
            }
        }
        // Cavity boundary edges (a, b) with outside neighbor.
        let mut boundary: Vec<(usize, usize, Option<usize>)> = Vec::with_capacity(bad.len() + 2);
        for &t in &bad {
            for k in 0..3 {
                let outside = tris[t].nbr[k];
                if outside.is_none_or(|o| !in_bad[o]) {
                    boundary.push((tris[t].v[(k + 1) % 3], tris[t].v[(k + 2) % 3], outside));
                }
            }
        }
        // Reject insertions that would create inverted triangles (round-off).
        if boundary
            .iter()
            .any(|&(a, b, _)| orient(&pts[a], &pts[b], &p) <= 0.0)
        {
            for &t in &bad {
                in_bad[t] = false;
            }
            continue;
        }
        let mut free: Vec<usize> = bad.clone();
        let mut by_a: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let mut by_b: HashMap<usize, usize> = HashMap::with_capacity(boundary.len());
        let mut created = Vec::with_capacity(boundary.len());
        for &(a, b, outside) in &boundary {
            let tri = Tri {
                v: [a, b, pi],
                nbr: [None, None, outside],
                alive: true,
            };
            let id = match free.pop() {
                Some(id) => {
                    tris[id] = tri;
                    id
                }
                None => {
                    tris.push(tri);
                    in_bad.push(false);
                    tris.len() - 1
                }
            };
            if let Some(o) = outside {
                for k in 0..3 {
                    let (x, y) = (tris[o].v[(k + 1) % 3], tris[o].v[(k + 2) % 3]);
                    if x == b && y == a {
                        tris[o].nbr[k] = Some(id);
                    }
                }
            }
            by_a.insert(a, id);
            by_b.insert(b, id);
            created.push(id);
        }
        for &id in &created {
            let [a, b, _] = tris[id].v;
            // Opposite a: edge (b, p) shared with the triangle starting at b.
            tris[id].nbr[0] = by_a.get(&b).copied();
            // Opposite b: edge (p, a) shared with the triangle ending at a.
            tris[id].nbr[1] = by_b.get(&a).copied();
        }
        for &t in &free {
            tris[t].alive = false;
            tris[t].nbr = [None; 3];
        }
        for &t in &bad {
            in_bad[t] = false;
        }
        last = created[0];
    }
    tris.iter()
        .filter(|t| t.alive && t.v.iter().all(|&v| v < n))
        .map(|t| t.v)
        .collect()
}

fn locate(tris: &[Tri], pts: &[Point], p: &Point, start: usize) -> Option<usize> {
    let mut t = if tris[start].alive {
        start
    } else {
        tris.iter().position(|t| t.alive)?
    };
    'walk: for _ in 0..4 * tris.len() + 16 {
        let tri = &tris[t];
        for k in 0..3 {
            let a = &pts[tri.v[(k + 1) % 3]];
            let b = &pts[tri.v[(k + 2) % 3]];
            if orient(a, b, p) < 0.0 {
                {
                    let nb = tri.nbr[k]?;
                    t = nb;
                    continue 'walk;
                }
            }
        }
        return Some(t);
    }
    // Walk cycled (degenerate input); fall back to a scan.
    tris.iter().position(|tri| {
        tri.alive
            && (0..3).all(|k| orient(&pts[tri.v[(k + 1) % 3]], &pts[tri.v[(k + 2) % 3]], p) >= 0.0)
    })
}
