//! Orthonormal Koornwinder polynomials on the simplex {x ≥ 0, y ≥ 0, x + y ≤ 1}.
//!
//! Ordering is graded: `n` runs over 0..=N and `m` over 0..=n, so K_mn sits at
//! index `n(n+1)/2 + m`. The Legendre factor is evaluated in homogenized form
//! (1-x)^m P_m(2y/(1-x) - 1), which stays finite as x → 1.

use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};

/// Scalar type the basis can be evaluated over (plain `f64` or a derivative jet).
pub trait Scalar: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> {
    fn constant(c: f64) -> Self;
    fn scale(self, c: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }
    #[inline]
    fn scale(self, c: f64) -> Self {
        self * c
    }
}

/// Value with first and second partial derivatives in (x, y).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub dx: f64,
    pub dy: f64,
    pub dxx: f64,
    pub dxy: f64,
    pub dyy: f64,
}

impl Jet2 {
    pub fn var_x(x: f64) -> Self {
        Jet2 {
            v: x,
            dx: 1.0,
            ..Default::default()
        }
    }
    pub fn var_y(y: f64) -> Self {
        Jet2 {
            v: y,
            dy: 1.0,
            ..Default::default()
        }
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v + o.v,
            dx: self.dx + o.dx,
            dy: self.dy + o.dy,
            dxx: self.dxx + o.dxx,
            dxy: self.dxy + o.dxy,
            dyy: self.dyy + o.dyy,
        }
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + o.scale(-1.0)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        Jet2 {
            v: self.v * o.v,
            dx: self.dx * o.v + self.v * o.dx,
            dy: self.dy * o.v + self.v * o.dy,
            dxx: self.dxx * o.v + 2.0 * self.dx * o.dx + self.v * o.dxx,
            dxy: self.dxy * o.v + self.dx * o.dy + self.dy * o.dx + self.v * o.dxy,
            dyy: self.dyy * o.v + 2.0 * self.dy * o.dy + self.v * o.dyy,
        }
    }
}

impl Scalar for Jet2 {
    fn constant(c: f64) -> Self {
        Jet2 {
            v: c,
            ..Default::default()
        }
    }
    fn scale(self, c: f64) -> Self {
        Jet2 {
            v: self.v * c,
            dx: self.dx * c,
            dy: self.dy * c,
            dxx: self.dxx * c,
            dxy: self.dxy * c,
            dyy: self.dyy * c,
        }
    }
}

/// Three-term recurrence P_k = (a t + b) P_{k-1} - c P_{k-2}.
#[derive(Clone, Copy, Debug)]
struct Recurrence {
    a: f64,
    b: f64,
    c: f64,
}

/// Koornwinder basis of total degree ≤ N with precomputed recurrences.
#[derive(Clone, Debug)]
pub struct KoornwinderBasis {
    order: usize,
    /// `jacobi[m][k]` advances P^{(2m+1,0)} from k-1 to k (k ≥ 1).
    jacobi: Vec<Vec<Recurrence>>,
    norms: Vec<f64>,
}

impl KoornwinderBasis {
    pub fn new(order: usize) -> Self {
        let mut jacobi = Vec::with_capacity(order + 1);
        for m in 0..=order {
            let alpha = (2 * m + 1) as f64;
            let mut rec = vec![Recurrence {
                a: 0.0,
                b: 0.0,
                c: 0.0,
            }];
            for k in 1..=(order - m) {
                if k == 1 {
                    rec.push(Recurrence {
                        a: (alpha + 2.0) / 2.0,
                        b: alpha / 2.0,
                        c: 0.0,
                    });
                    continue;
                }
                let kf = k as f64;
                let s = 2.0 * kf + alpha;
                let c1 = 2.0 * kf * (kf + alpha) * (s - 2.0);
                rec.push(Recurrence {
                    a: (s - 1.0) * s * (s - 2.0) / c1,
                    b: (s - 1.0) * alpha * alpha / c1,
                    c: 2.0 * (kf + alpha - 1.0) * (kf - 1.0) * s / c1,
                });
            }
            jacobi.push(rec);
        }
        let mut norms = Vec::with_capacity(dim(order));
        for n in 0..=order {
            for m in 0..=n {
                norms.push((2.0 * (2 * m + 1) as f64 * (n + 1) as f64).sqrt());
            }
        }
        KoornwinderBasis {
            order,
            jacobi,
            norms,
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions, (N+1)(N+2)/2.
    pub fn len(&self) -> usize {
        dim(self.order)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Position of K_mn in the value vector.
    pub fn index(m: usize, n: usize) -> usize {
        n * (n + 1) / 2 + m
    }

    /// All K_mn at (x, y), after checking the point lies in the simplex.
    pub fn eval(&self, x: f64, y: f64) -> Result<Vec<f64>> {
        check_in_simplex(x, y)?;
        let mut out = vec![0.0; self.len()];
        self.eval_into(x, y, &mut out);
        Ok(out)
    }

    /// Unchecked evaluation into `out` (length ≥ `len()`).
    pub fn eval_into(&self, x: f64, y: f64, out: &mut [f64]) {
        self.eval_generic(x, y, out);
    }

    /// Values with first and second derivatives.
    pub fn eval_jet(&self, x: f64, y: f64) -> Vec<Jet2> {
        let mut out = vec![Jet2::default(); self.len()];
        self.eval_generic(Jet2::var_x(x), Jet2::var_y(y), &mut out);
        out
    }

    pub fn eval_generic<T: Scalar>(&self, x: T, y: T, out: &mut [T]) {
        let n_max = self.order;
        let one = T::constant(1.0);
        let s = one - x;
        let u = y.scale(2.0) - s;
        let t = x.scale(2.0) - one;
        // Homogenized Legendre factors s^m P_m(u/s).
        let mut leg = Vec::with_capacity(n_max + 1);
        leg.push(one);
        if n_max >= 1 {
            leg.push(u);
        }
        for m in 1..n_max {
            let mf = m as f64;
            let next = (u * leg[m]).scale((2.0 * mf + 1.0) / (mf + 1.0))
                - (s * s * leg[m - 1]).scale(mf / (mf + 1.0));
            leg.push(next);
        }
        let mut jac: Vec<T> = Vec::with_capacity(n_max + 1);
        for m in 0..=n_max {
            jac.clear();
            jac.push(one);
            let rec = &self.jacobi[m];
            for k in 1..=(n_max - m) {
                let r = rec[k];
                let mut v = t.scale(r.a) * jac[k - 1] + jac[k - 1].scale(r.b);
                if k >= 2 {
                    v = v - jac[k - 2].scale(r.c);
                }
                jac.push(v);
            }
            for n in m..=n_max {
                let idx = Self::index(m, n);
                out[idx] = (leg[m] * jac[n - m]).scale(self.norms[idx]);
            }
        }
    }
}

/// Dimension of the polynomial space of total degree ≤ N.
pub fn dim(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

pub fn check_in_simplex(x: f64, y: f64) -> Result<()> {
    const TOL: f64 = 1e-9;
    if !(x >= -TOL && y >= -TOL && x + y <= 1.0 + TOL) {
        return Err(Error::OutsideSimplex(x, y));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_mode_is_sqrt2() {
        let b = KoornwinderBasis::new(6);
        for (x, y) in [(0.0, 0.0), (0.2, 0.3), (1.0, 0.0), (0.0, 1.0)] {
            let v = b.eval(x, y).unwrap();
            assert!((v[0] - 2f64.sqrt()).abs() < 1e-15);
        }
    }

    #[test]
    fn outside_points_are_rejected() {
        let b = KoornwinderBasis::new(3);
        assert!(b.eval(0.8, 0.8).is_err());
        assert!(b.eval(-0.1, 0.5).is_err());
        assert!(b.eval(1.0 + 1e-12, 0.0).is_ok());
    }

    #[test]
    fn apex_limit_is_finite() {
        let b = KoornwinderBasis::new(20);
        let v = b.eval(1.0, 0.0).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn jet_matches_finite_differences() {
        let b = KoornwinderBasis::new(8);
        let (x, y, h) = (0.27, 0.31, 1e-5);
        let jet = b.eval_jet(x, y);
        let f = |x: f64, y: f64| b.eval(x, y).unwrap();
        let (xp, xm, yp, ym) = (f(x + h, y), f(x - h, y), f(x, y + h), f(x, y - h));
        let c = f(x, y);
        for i in 0..b.len() {
            let dx = (xp[i] - xm[i]) / (2.0 * h);
            let dyy = (yp[i] - 2.0 * c[i] + ym[i]) / (h * h);
            let scale = 1.0 + jet[i].dx.abs();
            assert!((jet[i].dx - dx).abs() < 1e-6 * scale, "dx mismatch at {i}");
            assert!(
                (jet[i].dyy - dyy).abs() < 1e-2 * (1.0 + jet[i].dyy.abs()),
                "dyy mismatch at {i}"
            );
            assert!((jet[i].v - c[i]).abs() < 1e-14 * (1.0 + c[i].abs()));
        }
    }
}
