//! Two-dimensional fast multipole method for the kernel (1/2π) log|x − y|.
//!
//! Dual-tree traversal over separate source and target quadtrees with
//! complex multipole and local expansions. Coefficients are stored scaled by
//! powers of the box half-width so high orders neither overflow nor underflow.

use num_complex::Complex64 as C64;

use crate::geometry::{Point, Rect};
use crate::par::{self, Execution};

pub const DEFAULT_LEAF: usize = 32;

/// Expansion length for a requested accuracy.
pub fn expansion_order(eps: f64) -> usize {
    let eps = eps.clamp(1e-16, 0.5);
    (1.0 / eps).log2().ceil() as usize + 2
}

/// Well-separated when (r_A + r_B) < SEPARATION · |c_A − c_B|.
const SEPARATION: f64 = 0.5;

#[derive(Clone, Debug)]
struct Node {
    center: C64,
    half: f64,
    start: usize,
    end: usize,
    children: Vec<usize>,
    level: usize,
}

impl Node {
    fn radius(&self) -> f64 {
        std::f64::consts::SQRT_2 * self.half
    }
}

#[derive(Clone, Debug)]
struct Tree {
    nodes: Vec<Node>,
    /// Permuted point index → original index.
    perm: Vec<usize>,
    pts: Vec<C64>,
    /// Node ids grouped by level.
    levels: Vec<Vec<usize>>,
}

impl Tree {
    fn build(points: &[Point], leaf: usize) -> Tree {
        let bb =
            Rect::bounding(points.iter()).unwrap_or_else(|| Rect::centered(Point::zeros(), 1.0));
        let half0 = 0.5 * bb.width().max(bb.height());
        let half0 = half0 * (1.0 + 1e-12) + 1e-300_f64.max(1e-12 * (1.0 + bb.center().norm()));
        let c = bb.center();
        let mut perm: Vec<usize> = (0..points.len()).collect();
        let mut nodes = vec![Node {
            center: C64::new(c.x, c.y),
            half: half0,
            start: 0,
            end: points.len(),
            children: Vec::new(),
            level: 0,
        }];
        let mut i = 0;
        while i < nodes.len() {
            let (start, end, center, half, level) = (
                nodes[i].start,
                nodes[i].end,
                nodes[i].center,
                nodes[i].half,
                nodes[i].level,
            );
            if end - start > leaf && level < 60 && half > 1e-13 * half0 {
                let quad = |k: usize| {
                    let p = points[k];
                    (p.x >= center.re) as usize * 2 + (p.y >= center.im) as usize
                };
                let slice = &mut perm[start..end];
                slice.sort_by_key(|&k| quad(k));
                let mut off = start;
                for q in 0..4 {
                    let cnt = perm[off..end].iter().take_while(|&&k| quad(k) == q).count();
                    if cnt > 0 {
                        let dx = if q >= 2 { 0.5 } else { -0.5 } * half;
                        let dy = if q % 2 == 1 { 0.5 } else { -0.5 } * half;
                        let id = nodes.len();
                        nodes.push(Node {
                            center: center + C64::new(dx, dy),
                            half: 0.5 * half,
                            start: off,
                            end: off + cnt,
                            children: Vec::new(),
                            level: level + 1,
                        });
                        nodes[i].children.push(id);
                    }
                    off += cnt;
                }
            }
            i += 1;
        }
        let depth = nodes.iter().map(|n| n.level).max().unwrap_or(0);
        let mut levels = vec![Vec::new(); depth + 1];
        for (id, n) in nodes.iter().enumerate() {
            levels[n.level].push(id);
        }
        let pts = perm
            .iter()
            .map(|&k| C64::new(points[k].x, points[k].y))
            .collect();
        Tree {
            nodes,
            perm,
            pts,
            levels,
        }
    }
}

struct Binomial {
    table: Vec<Vec<f64>>,
}

impl Binomial {
    fn new(n: usize) -> Self {
        let mut table = vec![vec![1.0; 1]; n + 1];
        for i in 1..=n {
            let mut row = vec![1.0; i + 1];
            for j in 1..i {
                row[j] = table[i - 1][j - 1] + table[i - 1][j];
            }
            table[i] = row;
        }
        Binomial { table }
    }

    #[inline]
    fn c(&self, n: usize, k: usize) -> f64 {
        self.table[n][k]
    }
}

/// Potentials at `targets` from point charges; coincident pairs contribute zero.
pub fn fmm_eval(
    sources: &[Point],
    charges: &[f64],
    targets: &[Point],
    eps: f64,
    exec: Execution,
) -> Vec<f64> {
    assert_eq!(sources.len(), charges.len(), "one charge per source");
    if targets.is_empty() {
        return Vec::new();
    }
    if sources.is_empty() {
        return vec![0.0; targets.len()];
    }
    let p = expansion_order(eps);
    let binom = Binomial::new(2 * p + 2);
    let st = Tree::build(sources, DEFAULT_LEAF);
    let tt = Tree::build(targets, DEFAULT_LEAF);
    let q: Vec<f64> = st.perm.iter().map(|&k| charges[k]).collect();

    // Upward pass.
    let mut mult: Vec<Vec<C64>> = vec![Vec::new(); st.nodes.len()];
    for level in st.levels.iter().rev() {
        let computed = par::map_indexed(exec, level.len(), |i| {
            let n = &st.nodes[level[i]];
            if n.children.is_empty() {
                p2m(n, &st.pts, &q, p)
            } else {
                let mut acc = vec![C64::new(0.0, 0.0); p + 1];
                for &c in &n.children {
                    m2m(&st.nodes[c], &mult[c], n, &mut acc, &binom);
                }
                acc
            }
        });
        for (i, m) in computed.into_iter().enumerate() {
            mult[level[i]] = m;
        }
    }

    // Interaction lists by dual traversal.
    let mut m2l: Vec<Vec<usize>> = vec![Vec::new(); tt.nodes.len()];
    let mut p2p: Vec<Vec<usize>> = vec![Vec::new(); tt.nodes.len()];
    let mut stack = vec![(0usize, 0usize)];
    while let Some((a, b)) = stack.pop() {
        let (na, nb) = (&tt.nodes[a], &st.nodes[b]);
        let d = (na.center - nb.center).norm();
        if na.radius() + nb.radius() < SEPARATION * d {
            m2l[a].push(b);
            continue;
        }
        let (la, lb) = (na.children.is_empty(), nb.children.is_empty());
        if la && lb {
            p2p[a].push(b);
        } else if lb || (!la && na.half >= nb.half) {
            stack.extend(na.children.iter().map(|&c| (c, b)));
        } else {
            stack.extend(nb.children.iter().map(|&c| (a, c)));
        }
    }

    // Downward pass.
    let mut local: Vec<Vec<C64>> = vec![vec![C64::new(0.0, 0.0); p + 1]; tt.nodes.len()];
    for level in &tt.levels {
        let computed = par::map_indexed(exec, level.len(), |i| {
            let id = level[i];
            let mut acc = local[id].clone();
            for &b in &m2l[id] {
                m2l_add(&st.nodes[b], &mult[b], &tt.nodes[id], &mut acc, &binom);
            }
            acc
        });
        for (i, l) in computed.into_iter().enumerate() {
            let id = level[i];
            for &c in &tt.nodes[id].children {
                local[c] = l2l(&tt.nodes[id], &l, &tt.nodes[c], &binom);
            }
            local[id] = l;
        }
    }

    let leaves: Vec<usize> = (0..tt.nodes.len())
        .filter(|&i| tt.nodes[i].children.is_empty())
        .collect();
    let per_leaf = par::map_indexed(exec, leaves.len(), |i| {
        let id = leaves[i];
        let n = &tt.nodes[id];
        let l = &local[id];
        (n.start..n.end)
            .map(|k| {
                let z = tt.pts[k];
                let w = (z - n.center) / n.half;
                let mut acc = C64::new(0.0, 0.0);
                for c in l.iter().rev() {
                    acc = acc * w + c;
                }
                let mut u = acc.re;
                for &b in &p2p[id] {
                    let nb = &st.nodes[b];
                    for j in nb.start..nb.end {
                        let r2 = (z - st.pts[j]).norm_sqr();
                        if r2 > 0.0 {
                            u += q[j] * 0.5 * r2.ln();
                        }
                    }
                }
                u
            })
            .collect::<Vec<f64>>()
    });
    let mut out = vec![0.0; targets.len()];
    for (i, vals) in per_leaf.into_iter().enumerate() {
        let n = &tt.nodes[leaves[i]];
        for (k, u) in (n.start..n.end).zip(vals) {
            out[tt.perm[k]] = u * crate::quadrature::INV_2PI;
        }
    }
    out
}

/// O(N·M) reference sum with the same self-pair convention.
pub fn direct_eval(
    sources: &[Point],
    charges: &[f64],
    targets: &[Point],
    exec: Execution,
) -> Vec<f64> {
    par::map_indexed(exec, targets.len(), |i| {
        let t = targets[i];
        let mut u = 0.0;
        for (s, q) in sources.iter().zip(charges) {
            let r2 = (t - s).norm_squared();
            if r2 > 0.0 {
                u += q * 0.5 * r2.ln();
            }
        }
        u * crate::quadrature::INV_2PI
    })
}

fn p2m(n: &Node, pts: &[C64], q: &[f64], p: usize) -> Vec<C64> {
    let mut m = vec![C64::new(0.0, 0.0); p + 1];
    for k in n.start..n.end {
        let w = (pts[k] - n.center) / n.half;
        m[0] += q[k];
        let mut pw = C64::new(1.0, 0.0);
        for (j, c) in m.iter_mut().enumerate().skip(1) {
            pw *= w;
            *c -= pw * (q[k] / j as f64);
        }
    }
    m
}

fn m2m(child: &Node, mc: &[C64], parent: &Node, acc: &mut [C64], binom: &Binomial) {
    let p = acc.len() - 1;
    let z = (child.center - parent.center) / parent.half;
    let ratio = child.half / parent.half;
    let a0 = mc[0];
    acc[0] += a0;
    let zp: Vec<C64> = powers(z, p);
    let rp: Vec<f64> = (0..=p).map(|k| ratio.powi(k as i32)).collect();
    for l in 1..=p {
        let mut b = -a0 * zp[l] / l as f64;
        for k in 1..=l {
            b += mc[k] * rp[k] * zp[l - k] * binom.c(l - 1, k - 1);
        }
        acc[l] += b;
    }
}

fn m2l_add(src: &Node, m: &[C64], tgt: &Node, acc: &mut [C64], binom: &Binomial) {
    let p = acc.len() - 1;
    let z0 = src.center - tgt.center;
    let t = -src.half / z0;
    let u = tgt.half / z0;
    let tp = powers(t, p);
    let up = powers(u, p);
    let a0 = m[0];
    let mut b0 = a0 * (-z0).ln();
    for k in 1..=p {
        b0 += m[k] * tp[k];
    }
    acc[0] += b0;
    for l in 1..=p {
        let mut s = -a0 / l as f64;
        for k in 1..=p {
            s += m[k] * tp[k] * binom.c(l + k - 1, k - 1);
        }
        acc[l] += s * up[l];
    }
}

fn l2l(parent: &Node, lp: &[C64], child: &Node, binom: &Binomial) -> Vec<C64> {
    let p = lp.len() - 1;
    let d = (child.center - parent.center) / parent.half;
    let ratio = child.half / parent.half;
    let dp = powers(d, p);
    let mut out = vec![C64::new(0.0, 0.0); p + 1];
    let mut rm = 1.0;
    for (m, o) in out.iter_mut().enumerate() {
        let mut s = C64::new(0.0, 0.0);
        for l in m..=p {
            s += lp[l] * binom.c(l, m) * dp[l - m];
        }
        *o = s * rm;
        rm *= ratio;
    }
    out
}

fn powers(z: C64, p: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(p + 1);
    let mut c = C64::new(1.0, 0.0);
    for _ in 0..=p {
        v.push(c);
        c *= z;
    }
    v
}
