mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use volpot::basis::QuadRule;
use volpot::element_map::{AffineMap, BlendingMap, ElementMap};
use volpot::geometry::pt;
use volpot::quadrature::{far_eval, near_eval, self_eval, NearParams, SelfRule, Side};
use volpot::Point;

fn affine(c: [Point; 3]) -> ElementMap {
    ElementMap::Affine(AffineMap::new(c[0], c[1], c[2]).unwrap())
}

fn simplex() -> [Point; 3] {
    [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)]
}

fn densities() -> Vec<(&'static str, Box<dyn Fn(&Point) -> f64 + Sync>)> {
    vec![
        ("1", Box::new(|_: &Point| 1.0)),
        ("x", Box::new(|p: &Point| p.x)),
        ("y", Box::new(|p: &Point| p.y)),
        ("sin", Box::new(|p: &Point| (p.x + 2.0 * p.y).sin())),
    ]
}

/// Curved boundary elements of a unit-disk mesh.
fn disk_curved_elements(count: usize) -> Vec<ElementMap> {
    let disk = unit_disk();
    let n = 7;
    let l = disk.length();
    (0..count)
        .map(|k| {
            let s0 = l * k as f64 / n as f64;
            let len = l / n as f64;
            let mid = disk.point(s0 + 0.5 * len);
            let o = mid * 0.55 + pt(0.03 * k as f64, -0.02 * k as f64);
            ElementMap::Blending(BlendingMap::new(disk.clone(), s0, len, o).unwrap())
        })
        .collect()
}

#[test]
fn oracle_reproduces_disk_potential() {
    let disk = unit_disk();
    let d2 = disk.clone();
    let arc: Piece = Box::new(move |s| {
        let f = d2.frame(s);
        (f.point, f.tangent)
    });
    let pieces = vec![(arc, disk.length())];
    for v in [pt(0.0, 0.0), pt(0.3, -0.4), pt(0.99, 0.0)] {
        let u = cone_potential(&pieces, &|_| 1.0, v, 1e-15);
        let exact = 0.25 * (v.norm_squared() - 1.0);
        assert!((u - exact).abs() < 1e-14, "{u} vs {exact}");
    }
    // Exterior point: potential of a unit disk of mass π at distance 2.
    let u = cone_potential(&pieces, &|_| 1.0, pt(2.0, 0.0), 1e-15);
    assert!((u - 0.5 * 2f64.ln()).abs() < 1e-14);
}

#[test]
fn far_eval_matches_oracle_far_away() {
    let rule = QuadRule::xiao_gimbutas(40).unwrap();
    let v = pt(10.0, 10.0);
    let u = far_eval(&affine(simplex()), &rule, &|_| 1.0, &v);
    let o = cone_potential(&triangle_pieces(simplex()), &|_| 1.0, v, 1e-16);
    assert!((u - o).abs() < 1e-14, "{}", (u - o).abs());
    assert_eq!(far_eval(&affine(simplex()), &rule, &|_| 0.0, &v), 0.0);
}

#[test]
fn far_eval_reflection_invariance() {
    let rule = QuadRule::xiao_gimbutas(20).unwrap();
    let v = pt(2.0, 0.7);
    let a = far_eval(&affine(simplex()), &rule, &|_| 1.0, &v);
    let refl = [pt(0.0, 0.0), pt(0.0, 1.0), pt(1.0, 0.0)];
    let b = far_eval(&affine(refl), &rule, &|_| 1.0, &pt(0.7, 2.0));
    assert!((a - b).abs() < 1e-15);
}

#[test]
fn near_eval_close_target() {
    let rule = QuadRule::xiao_gimbutas(12).unwrap();
    let v = pt(0.5, -1e-3);
    let params = NearParams {
        eps: 1e-12,
        rule: &rule,
    };
    for (name, f) in densities() {
        let n = near_eval(&affine(simplex()), &*f, &v, &params).unwrap();
        let o = cone_potential(&triangle_pieces(simplex()), &*f, v, 1e-15);
        assert!(
            (n.value - o).abs() <= 1e-12,
            "{name}: {:e}",
            (n.value - o).abs()
        );
        assert!(n.leaves > 1);
    }
}

#[test]
fn near_eval_random_elements() {
    let rule = QuadRule::xiao_gimbutas(12).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for eps in [1e-8, 1e-12] {
        for _ in 0..10 {
            let c = random_triangle(&mut rng);
            let map = affine(c);
            // Just outside the middle of a side.
            let mid = (c[0] + c[1]) * 0.5;
            let e = c[1] - c[0];
            let v = mid + pt(e.y, -e.x) * 0.01;
            let params = NearParams { eps, rule: &rule };
            for (name, f) in densities() {
                let n = near_eval(&map, &*f, &v, &params).unwrap();
                let o = cone_potential(&triangle_pieces(c), &*f, v, 1e-16);
                assert!(
                    (n.value - o).abs() <= eps,
                    "{name} eps={eps}: {:e}",
                    (n.value - o).abs()
                );
            }
        }
    }
}

#[test]
fn near_eval_curved_elements() {
    let rule = QuadRule::xiao_gimbutas(12).unwrap();
    for map in disk_curved_elements(5) {
        let ElementMap::Blending(m) = &map else {
            unreachable!()
        };
        let s = m.s0 + 0.3 * m.len;
        let v = m.curve.point(s) + m.curve.normal(s) * 2e-3;
        let params = NearParams {
            eps: 1e-12,
            rule: &rule,
        };
        for (name, f) in densities() {
            let n = near_eval(&map, &*f, &v, &params).unwrap();
            let o = cone_potential(&element_pieces(&map), &*f, v, 1e-16);
            assert!(
                (n.value - o).abs() <= 1e-12,
                "{name}: {:e}",
                (n.value - o).abs()
            );
        }
    }
}

#[test]
fn self_eval_centroid_unit_triangle() {
    let rule = SelfRule::new(8, 16).unwrap();
    let v = pt(1.0 / 3.0, 1.0 / 3.0);
    let s = self_eval(&affine(simplex()), &|_| 1.0, &v, &rule, 1e-14).unwrap();
    let o = cone_potential(&triangle_pieces(simplex()), &|_| 1.0, v, 1e-16);
    assert!((s.value - o).abs() < 1e-13, "{:e}", (s.value - o).abs());
}

#[test]
fn self_eval_random_triangles() {
    let rule = SelfRule::new(8, 16).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for eps in [1e-8, 1e-12] {
        for _ in 0..10 {
            use rand::Rng;
            let c = random_triangle(&mut rng);
            let (a, b) = loop {
                let (a, b) = (rng.gen_range(0.02..0.96), rng.gen_range(0.02..0.96));
                if a + b < 0.98 {
                    break (a, b);
                }
            };
            let v = c[0] + (c[1] - c[0]) * a + (c[2] - c[0]) * b;
            for (name, f) in densities() {
                let s = self_eval(&affine(c), &*f, &v, &rule, eps).unwrap();
                let o = cone_potential(&triangle_pieces(c), &*f, v, 1e-16);
                assert!(
                    (s.value - o).abs() <= eps,
                    "{name}: {:e}",
                    (s.value - o).abs()
                );
            }
        }
    }
}

#[test]
fn self_eval_curved_elements() {
    let rule = SelfRule::new(8, 16).unwrap();
    for map in disk_curved_elements(5) {
        for (xi, eta) in [(0.3, 0.3), (0.5, 0.01), (0.1, 0.8)] {
            let v = map.forward(xi, eta);
            for (name, f) in densities() {
                let s = self_eval(&map, &*f, &v, &rule, 1e-12).unwrap();
                let o = cone_potential(&element_pieces(&map), &*f, v, 1e-16);
                assert!(
                    (s.value - o).abs() <= 1e-12,
                    "{name} at ({xi},{eta}): {:e}",
                    (s.value - o).abs()
                );
            }
        }
    }
}

#[test]
fn arc_centered_at_target_has_constant_cross() {
    let disk = unit_disk();
    let side = Side::Arc {
        curve: &disk,
        s0: 0.2,
        len: 1.0,
    };
    let v = pt(0.0, 0.0);
    for s in [0.0, 0.3, 0.9] {
        let (g, t) = side.eval(s);
        assert!(((g - v).perp(&t) - 1.0).abs() < 1e-13);
    }
}

#[test]
fn evaluators_are_isometry_invariant() {
    let rule = QuadRule::xiao_gimbutas(20).unwrap();
    let near_rule = QuadRule::xiao_gimbutas(12).unwrap();
    let srule = SelfRule::new(8, 16).unwrap();
    let (th, shift) = (0.7f64, pt(3.0, -1.5));
    let rot = |p: Point| {
        pt(
            th.cos() * p.x - th.sin() * p.y,
            th.sin() * p.x + th.cos() * p.y,
        ) + shift
    };
    let c = simplex();
    let c2 = c.map(rot);
    let f = |p: &Point| p.norm_squared().sin();
    let inv = move |p: &Point| {
        let q = p - shift;
        pt(
            th.cos() * q.x + th.sin() * q.y,
            -th.sin() * q.x + th.cos() * q.y,
        )
    };
    let f2 = move |p: &Point| f(&inv(p));
    let (vf, vn, vs) = (pt(4.0, 3.0), pt(0.5, -0.01), pt(0.2, 0.3));
    let a = far_eval(&affine(c), &rule, &f, &vf);
    let b = far_eval(&affine(c2), &rule, &f2, &rot(vf));
    assert!((a - b).abs() < 1e-13);
    let p = NearParams {
        eps: 1e-12,
        rule: &near_rule,
    };
    let a = near_eval(&affine(c), &f, &vn, &p).unwrap().value;
    let b = near_eval(&affine(c2), &f2, &rot(vn), &p).unwrap().value;
    assert!((a - b).abs() < 1e-13);
    let a = self_eval(&affine(c), &f, &vs, &srule, 1e-14).unwrap().value;
    let b = self_eval(&affine(c2), &f2, &rot(vs), &srule, 1e-14)
        .unwrap()
        .value;
    assert!((a - b).abs() < 1e-13);
}
