//! Curvature-driven mesh size function.

use crate::boundary::SdfModel;
use crate::geometry::{Point, Rect};
use crate::quadtree::Quadtree;

/// h(x) = h_base / (1 + c ∮ exp(−a‖x − x₀‖²) |κ(x₀)| ds), with c set so that min h = h_base / 3.
#[derive(Debug)]
pub struct SizeField {
    h_base: f64,
    a: f64,
    c: f64,
    points: Vec<Point>,
    weights: Vec<f64>,
    tree: Quadtree,
    cutoff: f64,
}

impl SizeField {
    /// `a = None` uses the default 4 / h_base².
    pub fn new(model: &SdfModel, a: Option<f64>, h_base: f64) -> crate::Result<Self> {
        if !(h_base > 0.0) {
            return Err(crate::Error::InvalidArgument(
                "h_base must be positive".into(),
            ));
        }
        let a = a.unwrap_or(4.0 / (h_base * h_base));
        if !(a > 0.0) {
            return Err(crate::Error::InvalidArgument(
                "size-field scale a must be positive".into(),
            ));
        }
        let spacing = 0.25 / a.sqrt();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut normals = Vec::new();
        for c in model.curves() {
            let n = (c.length() / spacing).ceil().max(16.0) as usize;
            let ds = c.length() / n as f64;
            for k in 0..n {
                let f = c.frame(k as f64 * ds);
                points.push(f.point);
                weights.push(f.curvature.abs() * ds);
                normals.push(f.normal());
            }
        }
        let tree = Quadtree::build(&points, 32)?;
        let mut field = SizeField {
            h_base,
            a,
            c: 0.0,
            points,
            weights,
            tree,
            cutoff: 6.0 / a.sqrt(),
        };
        // Calibrate c from the largest integral near the boundary.
        let mut peak: f64 = 0.0;
        for (p, n) in field.points.iter().zip(&normals) {
            for depth in [0.0, 0.25, 0.5, 1.0, 1.5] {
                let x = p - n * (depth / a.sqrt());
                peak = peak.max(field.integral(&x));
            }
        }
        field.c = if peak > 0.0 { 2.0 / peak } else { 0.0 };
        Ok(field)
    }

    fn integral(&self, x: &Point) -> f64 {
        self.tree
            .query_rect(&Rect::centered(*x, self.cutoff))
            .into_iter()
            .map(|i| (-self.a * (self.points[i] - x).norm_squared()).exp() * self.weights[i])
            .sum()
    }

    pub fn h_base(&self) -> f64 {
        self.h_base
    }

    /// Lower bound of [`SizeField::eval`].
    pub fn h_min(&self) -> f64 {
        self.h_base / 3.0
    }

    pub fn eval(&self, x: &Point) -> f64 {
        self.h_base / (1.0 + self.c * self.integral(x))
    }
}
