mod common;

use std::f64::consts::TAU;
use std::sync::Arc;

use common::{ellipse_2_1, unit_disk};
use volpot::boundary::ArcLengthCurve;
use volpot::domain::Domain;
use volpot::geometry::pt;
use volpot::pipeline::Orders;
use volpot::poisson::{
    boundary_params, laplace_solve, poisson_solve, spectral_tail, upsample, LaplaceSolution,
    PoissonOptions,
};
use volpot::{Error, Point};

fn solve(curve: Arc<ArcLengthCurve>, n: usize, g: impl Fn(&Point) -> f64) -> LaplaceSolution {
    let bc: Vec<f64> = boundary_params(&curve, n)
        .into_iter()
        .map(|s| g(&curve.point(s)))
        .collect();
    laplace_solve(curve, &bc).unwrap()
}

/// Interior points at several depths, including within a node spacing of the boundary.
fn probes(curve: &ArcLengthCurve) -> Vec<Point> {
    let mut out = vec![pt(0.0, 0.0), pt(0.1, -0.2)];
    for k in 0..24 {
        let s = curve.length() * (k as f64 + 0.37) / 24.0;
        let f = curve.frame(s);
        for depth in [0.3, 0.05, 1e-2, 1e-3, 1e-5] {
            out.push(f.point - f.normal() * depth);
        }
    }
    out
}

fn worst(sol: &LaplaceSolution, exact: impl Fn(&Point) -> f64) -> f64 {
    probes(&sol.curve)
        .iter()
        .map(|x| (sol.eval(x).unwrap() - exact(x)).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_data_gives_constant_solution() {
    let sol = solve(unit_disk(), 256, |_| 1.0);
    assert!(sol.residual < 1e-13);
    assert!(worst(&sol, |_| 1.0) <= 1e-12);
}

#[test]
fn linear_data_on_the_circle() {
    let sol = solve(unit_disk(), 256, |p| p.x);
    let e = worst(&sol, |p| p.x);
    assert!(e <= 1e-10, "{e:e}");
}

#[test]
fn cubic_harmonic_on_the_ellipse() {
    let re_z3 = |p: &Point| p.x.powi(3) - 3.0 * p.x * p.y * p.y;
    let sol = solve(ellipse_2_1(), 256, re_z3);
    let e = worst(&sol, re_z3);
    assert!(e <= 1e-9, "{e:e}");
}

#[test]
fn trapezoid_guards_the_boundary() {
    let sol = solve(unit_disk(), 128, |p| p.x);
    assert!((sol.eval_trapezoid(&pt(0.2, 0.1)).unwrap() - 0.2).abs() < 1e-12);
    assert!(matches!(
        sol.eval_trapezoid(&pt(0.999, 0.0)),
        Err(Error::TooCloseToBoundary { n_b: 128, .. })
    ));
    assert!(matches!(sol.eval(&pt(1.1, 0.0)), Err(Error::OutsideDomain)));
    assert!(laplace_solve(unit_disk(), &[1.0; 7]).is_err());
}

#[test]
fn fft_upsampling_is_exact_for_band_limited_data() {
    let n = 64;
    let f = |t: f64| 0.3 + (3.0 * t).cos() - 0.5 * (7.0 * t).sin();
    let v: Vec<f64> = (0..n).map(|j| f(TAU * j as f64 / n as f64)).collect();
    let fine = upsample(&v, 4);
    for (j, u) in fine.iter().enumerate() {
        assert!((u - f(TAU * j as f64 / (4 * n) as f64)).abs() < 1e-13);
    }
    assert!(spectral_tail(&v) < 1e-15);
    let rough: Vec<f64> = (0..n).map(|j| if j < n / 2 { 1.0 } else { 0.0 }).collect();
    assert!(spectral_tail(&rough) > 1e-3);
}

#[test]
fn disk_with_unit_source() {
    let eps = 1e-10;
    let mut opts = PoissonOptions::new(eps, 0.2);
    opts.n_b = Some(256);
    let out = poisson_solve(&Domain::unit_disk(), &|_| 1.0, &|_| 0.0, &opts).unwrap();
    let exact = |p: &Point| 0.25 * (p.norm_squared() - 1.0);
    let e = out
        .phi
        .samples()
        .iter()
        .map(|(x, v)| (v - exact(x)).abs())
        .fold(0.0, f64::max);
    assert!(e <= 10.0 * eps, "{e:e}");
}

#[test]
fn manufactured_solution_on_the_disk() {
    let mut opts = PoissonOptions::new(1e-10, 0.25);
    opts.pipeline.orders = Orders {
        n_f: 40,
        n_s: 20,
        ..opts.pipeline.orders
    };
    let g = |p: &Point| (p.x + 0.5).exp() * (p.y - 0.3).cos() + p.x * p.x;
    let f = |_: &Point| 2.0;
    let out = poisson_solve(&Domain::unit_disk(), &f, &g, &opts).unwrap();
    let e = out
        .phi
        .samples()
        .iter()
        .map(|(x, v)| (v - g(x)).abs())
        .fold(0.0, f64::max);
    assert!(e <= 5e-9, "node error {e:e}");

    // Boundary trace of the interpolant reproduces the data.
    let c = out.laplace.curve.clone();
    for k in 0..50 {
        let s = c.length() * (k as f64 + 0.1) / 50.0;
        let v = out.phi.field_eval_boundary(0, s).unwrap();
        assert!((v - g(&c.point(s))).abs() <= 5e-9);
    }

    // Second derivatives of the interpolant at straight-element points.
    let mesh = out.phi.mesh().clone();
    let mut checked = 0;
    for e in (0..mesh.len())
        .filter(|&e| mesh.map(e).is_affine())
        .take(20)
    {
        let x = mesh.map(e).forward(0.25, 0.35);
        let lap = out.phi.laplacian(&x).unwrap();
        assert!((lap - f(&x)).abs() <= 1e-4 * 2.0, "∇²φ = {lap}");
        checked += 1;
    }
    assert_eq!(checked, 20);
}

#[test]
fn multiple_boundaries_are_rejected() {
    let d = Domain {
        name: "two".into(),
        curves: vec![unit_disk(), unit_disk()],
    };
    let opts = PoissonOptions::new(1e-8, 0.3);
    assert!(poisson_solve(&d, &|_| 1.0, &|_| 0.0, &opts).is_err());
}
