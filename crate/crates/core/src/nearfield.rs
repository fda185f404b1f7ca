//! Bernstein-ellipse near-field models.
//!
//! An element's near field for a rule of order N at tolerance ε is the union
//! of three ellipses, one per side, with foci at the side endpoints and
//! parameter ρ₀ = (w / (ε C_N))^{1/N}.

use num_complex::Complex64;

use crate::basis::QuadRule;
use crate::error::{Error, Result};
use crate::geometry::{signed_area, Point};

/// Calibration constants C_N.
pub const CN_TABLE: [(usize, f64); 6] = [
    (12, 12.0),
    (20, 6.8),
    (25, 3.0),
    (30, 2.5),
    (40, 2.0),
    (50, 1.0),
];

/// Ball baseline: circumscribed circle scaled by this factor.
pub const BALL_FACTOR: f64 = 1.5;

/// Aspect ratio above which the optional extra ellipse is added.
pub const STRETCH_THRESHOLD: f64 = 4.0;

pub fn cn_lookup(n: usize) -> Result<f64> {
    if n < CN_TABLE[0].0 {
        return Err(Error::UncalibratedOrder(n));
    }
    if n >= CN_TABLE[CN_TABLE.len() - 1].0 {
        return Ok(1.0);
    }
    for w in CN_TABLE.windows(2) {
        let ((n0, c0), (n1, c1)) = (w[0], w[1]);
        if n >= n0 && n <= n1 {
            let t = (n - n0) as f64 / (n1 - n0) as f64;
            return Ok((c0 + t * (c1 - c0)).clamp(1.0, 12.0));
        }
    }
    unreachable!("table covers [12, 50]")
}

/// ρ₀ for a scaled edge weight.
pub fn rho0(w: f64, eps: f64, order: usize) -> Result<f64> {
    Ok((w / (eps * cn_lookup(order)?)).powf(1.0 / order as f64))
}

/// Ellipse given by its foci and semi-major axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ellipse {
    pub f1: Point,
    pub f2: Point,
    pub semi_major: f64,
}

impl Ellipse {
    /// Image of the Bernstein ellipse E_ρ under the affine map taking [−1, 1] to the segment.
    pub fn bernstein(a: Point, b: Point, rho: f64) -> Self {
        let half = 0.5 * (b - a).norm();
        Ellipse {
            f1: a,
            f2: b,
            semi_major: 0.5 * (rho + 1.0 / rho) * half,
        }
    }

    pub fn contains(&self, x: &Point) -> bool {
        (x - self.f1).norm() + (x - self.f2).norm() < 2.0 * self.semi_major
    }

    pub fn semi_minor(&self) -> f64 {
        let c = 0.5 * (self.f2 - self.f1).norm();
        (self.semi_major * self.semi_major - c * c).max(0.0).sqrt()
    }

    pub fn area(&self) -> f64 {
        std::f64::consts::PI * self.semi_major * self.semi_minor()
    }
}

/// max |ζ ± √(ζ² − 1)| for x in coordinates where the segment (a, b) is [−1, 1].
pub fn joukowski_radius(a: Point, b: Point, x: Point) -> f64 {
    let za = Complex64::new(a.x, a.y);
    let zb = Complex64::new(b.x, b.y);
    let z = Complex64::new(x.x, x.y);
    let zeta = (z * 2.0 - za - zb) / (zb - za);
    let root = (zeta * zeta - 1.0).sqrt();
    (zeta + root).norm().max((zeta - root).norm())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NearModelKind {
    #[default]
    Precise,
    Ball,
}

#[derive(Clone, Debug)]
pub enum NearFieldModel {
    Ellipses {
        ellipses: Vec<Ellipse>,
        rho0: f64,
        w: f64,
    },
    /// ρ₀ ≤ 1: every outside point is treated as near.
    AllNear,
    Ball {
        center: Point,
        radius: f64,
    },
}

impl NearFieldModel {
    /// Precise model for an element with chord corners `corners` and physical `area`.
    pub fn precise(
        corners: &[Point; 3],
        area: f64,
        rule: &QuadRule,
        eps: f64,
        stretched: bool,
    ) -> Result<Self> {
        let w = rule.w_edge * 2.0 * area;
        let rho = rho0(w, eps, rule.order)?;
        if !(rho > 1.0) {
            return Ok(NearFieldModel::AllNear);
        }
        let [a, b, c] = *corners;
        let mut ellipses = vec![
            Ellipse::bernstein(a, b, rho),
            Ellipse::bernstein(b, c, rho),
            Ellipse::bernstein(c, a, rho),
        ];
        if stretched && aspect_ratio(corners) > STRETCH_THRESHOLD {
            // Segment from the midpoint of the shortest side to the opposite vertex.
            let sides = [(a, b, c), (b, c, a), (c, a, b)];
            let (p, q, o) = sides
                .iter()
                .min_by(|x, y| (x.1 - x.0).norm().total_cmp(&(y.1 - y.0).norm()))
                .copied()
                .expect("three sides");
            ellipses.push(Ellipse::bernstein((p + q) * 0.5, o, rho));
        }
        Ok(NearFieldModel::Ellipses {
            ellipses,
            rho0: rho,
            w,
        })
    }

    /// Circumscribed circle scaled by [`BALL_FACTOR`].
    pub fn ball(corners: &[Point; 3]) -> Self {
        let (center, r) = circumcircle(corners);
        NearFieldModel::Ball {
            center,
            radius: BALL_FACTOR * r,
        }
    }

    pub fn build(
        kind: NearModelKind,
        corners: &[Point; 3],
        area: f64,
        rule: &QuadRule,
        eps: f64,
    ) -> Result<Self> {
        match kind {
            NearModelKind::Precise => Self::precise(corners, area, rule, eps, false),
            NearModelKind::Ball => Ok(Self::ball(corners)),
        }
    }

    /// Membership test for a point outside the element.
    pub fn contains(&self, x: &Point) -> bool {
        match self {
            NearFieldModel::Ellipses { ellipses, .. } => ellipses.iter().any(|e| e.contains(x)),
            NearFieldModel::AllNear => true,
            NearFieldModel::Ball { center, radius } => (x - center).norm() < *radius,
        }
    }

    pub fn is_all_near(&self) -> bool {
        matches!(self, NearFieldModel::AllNear)
    }

    /// Summed area of the model's ellipses (or disk); infinite when all-near.
    pub fn area(&self) -> f64 {
        match self {
            NearFieldModel::Ellipses { ellipses, .. } => ellipses.iter().map(Ellipse::area).sum(),
            NearFieldModel::AllNear => f64::INFINITY,
            NearFieldModel::Ball { radius, .. } => std::f64::consts::PI * radius * radius,
        }
    }

    /// Axis-aligned box containing the model region.
    pub fn bounding_box(&self) -> Option<crate::geometry::Rect> {
        match self {
            NearFieldModel::Ellipses { ellipses, .. } => {
                let mut r: Option<crate::geometry::Rect> = None;
                for e in ellipses {
                    let c = (e.f1 + e.f2) * 0.5;
                    let b = crate::geometry::Rect::centered(c, e.semi_major);
                    r = Some(r.map_or(b, |x| x.union(&b)));
                }
                r
            }
            NearFieldModel::AllNear => None,
            NearFieldModel::Ball { center, radius } => {
                Some(crate::geometry::Rect::centered(*center, *radius))
            }
        }
    }
}

/// Longest side squared over twice the area (longest side over shortest altitude).
pub fn aspect_ratio(corners: &[Point; 3]) -> f64 {
    let [a, b, c] = corners;
    let l = (b - a).norm().max((c - b).norm()).max((a - c).norm());
    l * l / (2.0 * signed_area(a, b, c).abs())
}

pub fn circumcircle(corners: &[Point; 3]) -> (Point, f64) {
    let [a, b, c] = *corners;
    let (bx, by) = (b.x - a.x, b.y - a.y);
    let (cx, cy) = (c.x - a.x, c.y - a.y);
    let d = 2.0 * (bx * cy - by * cx);
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = Point::new(a.x + ux, a.y + uy);
    (center, (ux * ux + uy * uy).sqrt())
}
