//! Signed distance to a set of boundary curves via sampled points and a quadtree.

use std::sync::Arc;

use super::arclength::ArcLengthCurve;
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect};
use crate::quadtree::{Quadtree, DEFAULT_LEAF_CAPACITY};

/// Closest boundary point to a query.
#[derive(Clone, Copy, Debug)]
pub struct ClosestPoint {
    pub curve: usize,
    pub s: f64,
    pub point: Point,
    pub distance: f64,
}

#[derive(Debug)]
pub struct SdfModel {
    curves: Vec<Arc<ArcLengthCurve>>,
    h_samp: f64,
    samples: Vec<Point>,
    sample_curve: Vec<usize>,
    sample_s: Vec<f64>,
    tree: Quadtree,
}

impl SdfModel {
    pub fn build(curves: Vec<Arc<ArcLengthCurve>>, h_samp: f64) -> Result<Self> {
        if !(h_samp > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sample spacing must be positive, got {h_samp}"
            )));
        }
        if curves.is_empty() {
            return Err(Error::EmptyInput);
        }
        let mut samples = Vec::new();
        let mut sample_curve = Vec::new();
        let mut sample_s = Vec::new();
        for (ci, c) in curves.iter().enumerate() {
            let n = ((c.length() / h_samp) - 1e-9).ceil().max(3.0) as usize;
            let ds = c.length() / n as f64;
            for k in 0..n {
                let s = k as f64 * ds;
                samples.push(c.point(s));
                sample_curve.push(ci);
                sample_s.push(s);
            }
        }
        let tree = Quadtree::build(&samples, DEFAULT_LEAF_CAPACITY)?;
        Ok(SdfModel {
            curves,
            h_samp,
            samples,
            sample_curve,
            sample_s,
            tree,
        })
    }

    pub fn curves(&self) -> &[Arc<ArcLengthCurve>] {
        &self.curves
    }

    pub fn h_samp(&self) -> f64 {
        self.h_samp
    }

    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn sample_curve(&self) -> &[usize] {
        &self.sample_curve
    }

    pub fn sample_s(&self) -> &[f64] {
        &self.sample_s
    }

    /// Bounding box of all samples.
    pub fn bounding_box(&self) -> Rect {
        Rect::bounding(&self.samples).expect("model has samples")
    }

    fn nearest_sample(&self, x: &Point) -> (usize, f64) {
        let mut half = 2.0 * self.h_samp;
        let mut hits = self.tree.query_rect(&Rect::centered(*x, half));
        while hits.is_empty() {
            half *= 2.0;
            hits = self.tree.query_rect(&Rect::centered(*x, half));
        }
        let mut best = nearest_of(&self.samples, &hits, x);
        // A hit in a corner of the box may not be the nearest; re-query with its radius.
        if best.1 > half {
            hits = self.tree.query_rect(&Rect::centered(*x, best.1));
            best = nearest_of(&self.samples, &hits, x);
        }
        best
    }

    pub fn closest_point(&self, x: &Point, refine: bool) -> ClosestPoint {
        let (i, d) = self.nearest_sample(x);
        let ci = self.sample_curve[i];
        let sample = ClosestPoint {
            curve: ci,
            s: self.sample_s[i],
            point: self.samples[i],
            distance: d,
        };
        if !refine {
            return sample;
        }
        let curve = &self.curves[ci];
        let mut s = sample.s;
        for _ in 0..10 {
            let f = curve.frame(s);
            let r = f.point - x;
            let g = r.dot(&f.tangent);
            let hess = 1.0 + r.dot(&f.second_derivative());
            let mut ds = if hess > 0.0 {
                -g / hess
            } else {
                -g.signum() * self.h_samp
            };
            ds = ds.clamp(-self.h_samp, self.h_samp);
            s += ds;
            if ds.abs() <= 1e-15 * curve.length() {
                break;
            }
        }
        let s = curve.wrap(s);
        let p = curve.point(s);
        let dist = (p - x).norm();
        if dist <= d {
            ClosestPoint {
                curve: ci,
                s,
                point: p,
                distance: dist,
            }
        } else {
            sample
        }
    }

    /// Signed distance: positive inside the domain, negative outside.
    pub fn eval(&self, x: &Point, refine: bool) -> f64 {
        self.signed(x, &self.closest_point(x, refine))
    }

    /// Signed distance given a precomputed closest point.
    pub fn signed(&self, x: &Point, cp: &ClosestPoint) -> f64 {
        if cp.distance == 0.0 {
            return 0.0;
        }
        let n = self.curves[cp.curve].normal(cp.s);
        let side = (cp.point - x).dot(&n);
        if side >= 0.0 {
            cp.distance
        } else {
            -cp.distance
        }
    }
}

fn nearest_of(points: &[Point], hits: &[usize], x: &Point) -> (usize, f64) {
    let mut best = (hits[0], f64::INFINITY);
    for &i in hits {
        let d = (points[i] - x).norm();
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}
