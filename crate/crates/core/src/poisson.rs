//! Poisson solver: volume potential plus a harmonic boundary correction.
//!
//! The harmonic part is a double-layer potential with kernel
//! k(x, y) = (x − y)·n_y / (2π|x − y|²), n outward, solved by trapezoidal
//! Nyström on −σ/2 + Dσ = g. Targets near the boundary use
//! u(x) = ∮ k (σ − σ(s*)) ds − σ(s*) with graded Gauss-Legendre panels and an
//! FFT-upsampled density.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::basis::GaussLegendre;
use crate::boundary::ArcLengthCurve;
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::mesher::MeshOptions;
use crate::par;
use crate::pipeline::{evaluate_field, FieldOutput, PipelineOptions, PotentialField};
use crate::quadrature::{dyadic_panels, Density, Side};

pub const DEFAULT_NB: usize = 512;
const MAX_NB: usize = 2048;
const UPSAMPLE: usize = 16;
const LAGRANGE: usize = 10;
/// Longest Gauss-Legendre panel in node spacings.
const PANEL_SPACINGS: f64 = 8.0;
/// Trapezoidal evaluation is used beyond this many node spacings from the boundary.
pub const FAR_SPACINGS: f64 = 5.0;

#[derive(Clone, Debug)]
pub struct LaplaceSolution {
    pub curve: Arc<ArcLengthCurve>,
    pub n_b: usize,
    pub nodes: Vec<Point>,
    pub normals: Vec<Point>,
    pub sigma: Vec<f64>,
    /// Relative residual of the Nyström system.
    pub residual: f64,
    fine: Vec<f64>,
}

/// Equispaced arc-length parameters s_j = jL/n.
pub fn boundary_params(curve: &ArcLengthCurve, n_b: usize) -> Vec<f64> {
    let l = curve.length();
    (0..n_b).map(|j| l * j as f64 / n_b as f64).collect()
}

fn kernel(x: &Point, y: &Point, n: &Point) -> f64 {
    let d = x - y;
    d.dot(n) / (2.0 * PI * d.norm_squared())
}

/// Solves the interior Dirichlet problem with boundary data `bc` at [`boundary_params`].
pub fn laplace_solve(curve: Arc<ArcLengthCurve>, bc: &[f64]) -> Result<LaplaceSolution> {
    let n = bc.len();
    if n < 8 || !n.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "n_b must be even and at least 8, got {n}"
        )));
    }
    let l = curve.length();
    let h = l / n as f64;
    let frames: Vec<_> = boundary_params(&curve, n)
        .into_iter()
        .map(|s| curve.frame(s))
        .collect();
    let nodes: Vec<Point> = frames.iter().map(|f| f.point).collect();
    let normals: Vec<Point> = frames.iter().map(|f| f.normal()).collect();
    let a = DMatrix::from_fn(n, n, |i, j| {
        let d = if i == j {
            -frames[i].curvature / (4.0 * PI)
        } else {
            kernel(&nodes[i], &nodes[j], &normals[j])
        };
        d * h - if i == j { 0.5 } else { 0.0 }
    });
    let rhs = DVector::from_column_slice(bc);
    let lu = a.clone().lu();
    let sigma = lu.solve(&rhs).ok_or(Error::SingularSystem)?;
    let residual = (&a * &sigma - &rhs).norm() / rhs.norm().max(f64::MIN_POSITIVE);
    let sigma: Vec<f64> = sigma.iter().copied().collect();
    let fine = upsample(&sigma, UPSAMPLE);
    Ok(LaplaceSolution {
        curve,
        n_b: n,
        nodes,
        normals,
        sigma,
        residual,
        fine,
    })
}

/// Trigonometric interpolation of periodic samples onto a grid `factor` times finer.
pub fn upsample(v: &[f64], factor: usize) -> Vec<f64> {
    let n = v.len();
    let m = n * factor;
    let mut planner = FftPlanner::new();
    let mut spec: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    planner.plan_fft_forward(n).process(&mut spec);
    let mut big = vec![Complex64::new(0.0, 0.0); m];
    let half = n / 2;
    for k in 0..half {
        big[k] = spec[k];
    }
    for k in 1..half {
        big[m - k] = spec[n - k];
    }
    big[half] = spec[half] * 0.5;
    big[m - half] = spec[half] * 0.5;
    planner.plan_fft_inverse(m).process(&mut big);
    big.iter().map(|c| c.re / n as f64).collect()
}

/// Largest Fourier coefficient magnitude in the top quarter of the spectrum.
pub fn spectral_tail(v: &[f64]) -> f64 {
    let n = v.len();
    let mut spec: Vec<Complex64> = v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut spec);
    (n / 4..=n / 2)
        .map(|k| spec[k].norm() / n as f64)
        .fold(0.0, f64::max)
}

impl LaplaceSolution {
    fn spacing(&self) -> f64 {
        self.curve.length() / self.n_b as f64
    }

    /// σ at arc length `s` by local Lagrange interpolation on the upsampled grid.
    pub fn density_at(&self, s: f64) -> f64 {
        let m = self.fine.len();
        let hf = self.curve.length() / m as f64;
        let p = self.curve.wrap(s) / hf;
        let base = p.floor() as i64 - (LAGRANGE as i64 / 2 - 1);
        let mut acc = 0.0;
        for i in 0..LAGRANGE {
            let xi = (base + i as i64) as f64;
            let mut w = 1.0;
            for j in 0..LAGRANGE {
                if j != i {
                    let xj = (base + j as i64) as f64;
                    w *= (p - xj) / (xi - xj);
                }
            }
            acc += w * self.fine[(base + i as i64).rem_euclid(m as i64) as usize];
        }
        acc
    }

    /// Closest boundary parameter and signed distance (negative inside).
    pub fn closest(&self, x: &Point) -> (f64, f64) {
        let h = self.spacing();
        let j = (0..self.n_b)
            .min_by(|&a, &b| {
                (self.nodes[a] - x)
                    .norm_squared()
                    .total_cmp(&(self.nodes[b] - x).norm_squared())
            })
            .unwrap_or(0);
        let s0 = j as f64 * h - 2.0 * h;
        let (sig, d) = Side::Arc {
            curve: &self.curve,
            s0,
            len: 4.0 * h,
        }
        .closest(x);
        let s = self.curve.wrap(s0 + sig);
        let sign = (x - self.curve.point(s))
            .dot(&self.curve.normal(s))
            .signum();
        (s, sign * d)
    }

    /// Trapezoidal evaluation, valid at least [`FAR_SPACINGS`] node spacings from the boundary.
    pub fn eval_trapezoid(&self, x: &Point) -> Result<f64> {
        let (_, sd) = self.closest(x);
        if sd > 0.0 {
            return Err(Error::OutsideDomain);
        }
        if -sd < FAR_SPACINGS * self.spacing() {
            return Err(Error::TooCloseToBoundary {
                distance: -sd,
                n_b: self.n_b,
            });
        }
        Ok(self.trapezoid(x))
    }

    fn trapezoid(&self, x: &Point) -> f64 {
        let h = self.spacing();
        (0..self.n_b)
            .map(|j| kernel(x, &self.nodes[j], &self.normals[j]) * self.sigma[j])
            .sum::<f64>()
            * h
    }

    /// u_h(x) at an interior point, switching to graded panels near the boundary.
    pub fn eval(&self, x: &Point) -> Result<f64> {
        let (s_star, sd) = self.closest(x);
        if sd > 0.0 {
            return Err(Error::OutsideDomain);
        }
        let d = -sd;
        let l = self.curve.length();
        if d >= FAR_SPACINGS * self.spacing() {
            return Ok(self.trapezoid(x));
        }
        let sig_star = self.density_at(s_star);
        let gl = GaussLegendre::cached(16);
        let br = dyadic_panels(l, 0.5 * l, d.max(1e-13 * l));
        let offset = s_star - 0.5 * l;
        let w_max = PANEL_SPACINGS * self.spacing();
        let mut acc = 0.0;
        for w in br.windows(2) {
            let pieces = ((w[1] - w[0]) / w_max).ceil().max(1.0) as usize;
            let width = (w[1] - w[0]) / pieces as f64;
            for p in 0..pieces {
                let a = w[0] + p as f64 * width;
                let (mid, half) = (a + 0.5 * width, 0.5 * width);
                for (t, wt) in gl.nodes.iter().zip(&gl.weights) {
                    let s = offset + mid + half * t;
                    let fr = self.curve.frame(s);
                    let diff = self.density_at(s) - sig_star;
                    if diff != 0.0 {
                        acc += wt * half * kernel(x, &fr.point, &fr.normal()) * diff;
                    }
                }
            }
        }
        Ok(acc - sig_star)
    }
}

/// g(x, y) = exp(−(x+1.6)² − (y+0.2)²) + exp(−(x−0.2)² − (y−1)²).
pub fn gaussian_pair(p: &Point) -> f64 {
    let r1 = (p.x + 1.6).powi(2) + (p.y + 0.2).powi(2);
    let r2 = (p.x - 0.2).powi(2) + (p.y - 1.0).powi(2);
    (-r1).exp() + (-r2).exp()
}

/// ∇² of [`gaussian_pair`].
pub fn gaussian_pair_laplacian(p: &Point) -> f64 {
    let r1 = (p.x + 1.6).powi(2) + (p.y + 0.2).powi(2);
    let r2 = (p.x - 0.2).powi(2) + (p.y - 1.0).powi(2);
    (4.0 * r1 - 4.0) * (-r1).exp() + (4.0 * r2 - 4.0) * (-r2).exp()
}

#[derive(Clone, Copy, Debug)]
pub struct PoissonOptions {
    pub pipeline: PipelineOptions,
    pub h0: f64,
    pub stagger: bool,
    pub seed: u64,
    /// Fixed n_b; `None` starts at 512 and doubles while the boundary data spectrum keeps decaying.
    pub n_b: Option<usize>,
}

impl PoissonOptions {
    pub fn new(eps: f64, h0: f64) -> Self {
        PoissonOptions {
            pipeline: PipelineOptions::new(eps),
            h0,
            stagger: true,
            seed: 0,
            n_b: None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PoissonOutput {
    pub phi: PotentialField,
    pub volume: FieldOutput,
    pub laplace: LaplaceSolution,
    pub quad_elements: usize,
}

/// Solves ∇²φ = f in the domain with φ = g on its boundary.
pub fn poisson_solve(
    domain: &Domain,
    f: &Density,
    g: &Density,
    opts: &PoissonOptions,
) -> Result<PoissonOutput> {
    if domain.curves.len() != 1 {
        return Err(Error::InvalidArgument(
            "the Poisson solver needs a single boundary curve".into(),
        ));
    }
    let curve = domain.curves[0].clone();
    let mut mopts = MeshOptions::new(opts.h0);
    mopts.seed = opts.seed;
    let quad = domain.mesh(&mopts)?;
    let interp = if opts.stagger {
        domain.mesh(&mopts.clone().staggered(true))?
    } else {
        domain.mesh(&mopts)?
    };
    let interp = Arc::new(interp);
    let volume = evaluate_field(&quad, interp, f, &opts.pipeline)?;
    let exec = opts.pipeline.exec;

    let bc_for = |n: usize| -> Result<Vec<f64>> {
        let params = boundary_params(&curve, n);
        par::try_map_indexed(exec, n, |j| {
            let s = params[j];
            Ok(g(&curve.point(s)) - volume.field.field_eval_boundary(0, s)?)
        })
    };
    let mut n = opts.n_b.unwrap_or(DEFAULT_NB);
    let mut bc = bc_for(n)?;
    if opts.n_b.is_none() {
        let mut tail = spectral_tail(&bc);
        let scale = bc
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        while n < MAX_NB && tail > 1e-16 * scale {
            let next = bc_for(2 * n)?;
            let t2 = spectral_tail(&next);
            n *= 2;
            bc = next;
            if t2 > 0.5 * tail {
                break;
            }
            tail = t2;
        }
    }
    let laplace = laplace_solve(curve, &bc)?;
    let phi = volume
        .field
        .map_values(|x, u| Ok(u + laplace.eval(x)?), exec)?;
    Ok(PoissonOutput {
        phi,
        volume,
        laplace,
        quad_elements: quad.len(),
    })
}
