//! Point quadtree supporting closed-rectangle range queries.

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};

pub const DEFAULT_LEAF_CAPACITY: usize = 32;

#[derive(Clone, Debug)]
struct Node {
    bbox: Rect,
    /// Index of the first of four consecutive children, if subdivided.
    children: Option<u32>,
    /// Range into `Quadtree::order` covered by this node.
    start: u32,
    end: u32,
}

/// Quadtree over a fixed point set. Immutable after [`Quadtree::build`].
#[derive(Clone, Debug)]
pub struct Quadtree {
    points: Vec<Point>,
    /// Point indices permuted so that every node covers a contiguous range.
    order: Vec<u32>,
    nodes: Vec<Node>,
    capacity: usize,
}

impl Quadtree {
    pub fn build(points: &[Point], capacity: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        if capacity == 0 {
            return Err(Error::InvalidArgument(
                "leaf capacity must be positive".into(),
            ));
        }
        let bbox = Rect::bounding(points).expect("non-empty");
        let extent = bbox.min.abs().max().max(bbox.max.abs().max());
        let root = bbox.inflate(1e-9 * bbox.diameter().max(1e-6 * (1.0 + extent)));
        let min_diam = 1e-12 * root.diameter();
        let mut tree = Quadtree {
            points: points.to_vec(),
            order: (0..points.len() as u32).collect(),
            nodes: vec![Node {
                bbox: root,
                children: None,
                start: 0,
                end: points.len() as u32,
            }],
            capacity,
        };
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            let Node {
                bbox, start, end, ..
            } = tree.nodes[id].clone();
            if ((end - start) as usize) <= capacity || bbox.diameter() < min_diam || depth >= 60 {
                continue;
            }
            let c = bbox.center();
            let (s, e) = (start as usize, end as usize);
            // Partition by x, then each half by y: quadrants SW, SE, NW, NE.
            let pts = &tree.points;
            let slice = &mut tree.order[s..e];
            let mid = partition(slice, |i| pts[i as usize].x < c.x);
            let lo = partition(&mut slice[..mid], |i| pts[i as usize].y < c.y);
            let hi = mid + partition(&mut slice[mid..], |i| pts[i as usize].y < c.y);
            let bounds = [s, s + lo, s + mid, s + hi, e];
            let quads = [
                Rect::new(bbox.min, c),
                Rect::new(Point::new(bbox.min.x, c.y), Point::new(c.x, bbox.max.y)),
                Rect::new(Point::new(c.x, bbox.min.y), Point::new(bbox.max.x, c.y)),
                Rect::new(c, bbox.max),
            ];
            // Order in `bounds` is (x<c,y<c), (x<c,y>=c), (x>=c,y<c), (x>=c,y>=c).
            let first = tree.nodes.len();
            for q in 0..4 {
                tree.nodes.push(Node {
                    bbox: quads[q],
                    children: None,
                    start: bounds[q] as u32,
                    end: bounds[q + 1] as u32,
                });
                stack.push((first + q, depth + 1));
            }
            tree.nodes[id].children = Some(first as u32);
        }
        Ok(tree)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn root_box(&self) -> Rect {
        self.nodes[0].bbox
    }

    /// Indices of all points inside `rect` (closed), in ascending order.
    pub fn query_rect(&self, rect: &Rect) -> Vec<usize> {
        self.query_rect_counted(rect).0
    }

    /// Like [`Quadtree::query_rect`] and also returns the number of visited nodes.
    pub fn query_rect_counted(&self, rect: &Rect) -> (Vec<usize>, usize) {
        let mut out = Vec::new();
        let mut visited = 0;
        if !rect.is_well_formed() {
            return (out, visited);
        }
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            visited += 1;
            let node = &self.nodes[id];
            if !node.bbox.intersects(rect) || node.start == node.end {
                continue;
            }
            let inside = rect.contains(&node.bbox.min) && rect.contains(&node.bbox.max);
            match node.children {
                Some(first) if !inside => {
                    let first = first as usize;
                    stack.extend(first..first + 4);
                }
                _ => {
                    let range = &self.order[node.start as usize..node.end as usize];
                    if inside {
                        out.extend(range.iter().map(|&i| i as usize));
                    } else {
                        out.extend(
                            range
                                .iter()
                                .map(|&i| i as usize)
                                .filter(|&i| rect.contains(&self.points[i])),
                        );
                    }
                }
            }
        }
        out.sort_unstable();
        (out, visited)
    }

    /// Calls `f(bbox, points)` for every leaf; used by structural checks.
    pub fn for_each_leaf<F: FnMut(&Rect, &[usize])>(&self, mut f: F) {
        for node in &self.nodes {
            if node.children.is_none() {
                let idx: Vec<usize> = self.order[node.start as usize..node.end as usize]
                    .iter()
                    .map(|&i| i as usize)
                    .collect();
                f(&node.bbox, &idx);
            }
        }
    }

    /// Maximum depth of the tree (root has depth 0).
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((id, d)) = stack.pop() {
            best = best.max(d);
            if let Some(first) = self.nodes[id].children {
                for c in 0..4 {
                    stack.push((first as usize + c, d + 1));
                }
            }
        }
        best
    }

    /// Checks that children exactly quarter their parent.
    pub fn children_quarter_parents(&self) -> bool {
        self.nodes.iter().all(|n| match n.children {
            None => true,
            Some(first) => {
                let kids = &self.nodes[first as usize..first as usize + 4];
                let area: f64 = kids.iter().map(|k| k.bbox.width() * k.bbox.height()).sum();
                let parent = n.bbox.width() * n.bbox.height();
                let c = n.bbox.center();
                (area - parent).abs() <= 1e-12 * parent
                    && kids.iter().all(|k| {
                        (k.bbox.width() - 0.5 * n.bbox.width()).abs() <= 1e-12 * n.bbox.width()
                            && (k.bbox.contains(&c))
                    })
            }
        })
    }
}

/// Stable-enough in-place partition; returns the number of elements satisfying `pred`.
fn partition<F: Fn(u32) -> bool>(slice: &mut [u32], pred: F) -> usize {
    let mut k = 0;
    for i in 0..slice.len() {
        if pred(slice[i]) {
            slice.swap(i, k);
            k += 1;
        }
    }
    k
}
