use std::collections::HashMap;
use std::f64::consts::TAU;

use volpot::domain::Domain;
use volpot::geometry::pt;
use volpot::mesher::delaunay::incircle;
use volpot::mesher::distmesh::polar_monotone;
use volpot::mesher::{ElementKind, MeshOptions, SizeField, TriMesh};
use volpot::Point;

fn disk(h0: f64, stagger: bool) -> TriMesh {
    Domain::unit_disk()
        .mesh(&MeshOptions::new(h0).staggered(stagger))
        .unwrap()
}

fn check_annotation(mesh: &TriMesh) {
    let boundary_edges = mesh.boundary_edges();
    assert_eq!(mesh.curved_count(), boundary_edges.len());
    let mut total = 0.0;
    let mut owner = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        if let ElementKind::Curved {
            opp,
            curve,
            s_a,
            s_b,
        } = el.kind
        {
            assert!(s_a < s_b);
            total += s_b - s_a;
            let c = &mesh.curves()[curve];
            let (a, b) = (el.v[(opp + 1) % 3], el.v[(opp + 2) % 3]);
            assert!((c.point(s_a) - mesh.vertices[a]).norm() < 1e-10);
            assert!((c.point(s_b) - mesh.vertices[b]).norm() < 1e-10);
            assert!(polar_monotone(c, mesh.vertices[el.v[opp]], s_a, s_b));
            let key = (a.min(b), a.max(b));
            assert!(owner.insert(key, e).is_none());
        }
    }
    for (e, k) in boundary_edges {
        let v = mesh.elements[e].v;
        let (a, b) = (v[k], v[(k + 1) % 3]);
        assert_eq!(owner.get(&(a.min(b), a.max(b))), Some(&e));
    }
    let l: f64 = mesh.curves().iter().map(|c| c.length()).sum();
    assert!((total - l).abs() < 1e-8, "coverage {total} vs {l}");
}

fn edge_distance(x: &Point, a: &Point, b: &Point) -> f64 {
    let ab = b - a;
    let t = ((x - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (x - (a + ab * t)).norm()
}

#[test]
fn disk_element_counts_and_quality() {
    let coarse = disk(0.2, false);
    assert!(
        (120..=170).contains(&coarse.len()),
        "{} elements",
        coarse.len()
    );
    assert!(coarse.min_quality() >= 0.3);
    let fine = disk(0.1, false);
    assert!((560..=760).contains(&fine.len()), "{} elements", fine.len());
    assert!(fine.min_quality() >= 0.3);
    check_annotation(&coarse);
    check_annotation(&fine);
}

#[test]
fn boundary_vertices_lie_on_the_curve() {
    let mesh = disk(0.2, false);
    let mut count = 0;
    for (p, &b) in mesh.vertices.iter().zip(&mesh.boundary) {
        if b {
            assert!((p.norm() - 1.0).abs() < 1e-12);
            count += 1;
        } else {
            assert!(p.norm() < 1.0);
        }
    }
    assert_eq!(count, mesh.boundary_edges().len());
}

#[test]
fn area_covers_the_disk() {
    let mesh = disk(0.2, false);
    let rule = volpot::basis::QuadRule::xiao_gimbutas(20).unwrap();
    let area: f64 = mesh.maps().iter().map(|m| m.area(&rule)).sum();
    assert!((area - std::f64::consts::PI).abs() < 1e-11);
}

#[test]
fn straight_mesh_is_delaunay() {
    let mesh = disk(0.2, false);
    let mut adjacent: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for (e, el) in mesh.elements.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (el.v[k], el.v[(k + 1) % 3]);
            adjacent.entry((a.min(b), a.max(b))).or_default().push(e);
        }
    }
    for (edge, es) in adjacent {
        if es.len() != 2 {
            continue;
        }
        let t = &mesh.elements[es[0]];
        let other = mesh.elements[es[1]]
            .v
            .into_iter()
            .find(|v| *v != edge.0 && *v != edge.1)
            .unwrap();
        let [a, b, c] = t.v.map(|i| mesh.vertices[i]);
        let scale = (b - a).norm_squared().max((c - a).norm_squared()).powi(2);
        let ic = if volpot::mesher::delaunay::orient(&a, &b, &c) > 0.0 {
            incircle(&a, &b, &c, &mesh.vertices[other])
        } else {
            incircle(&a, &c, &b, &mesh.vertices[other])
        };
        assert!(
            ic <= 1e-10 * scale,
            "edge {edge:?} violates the empty-circle test"
        );
    }
}

#[test]
fn stagger_moves_nodes_away_from_quadrature_edges() {
    let quad = disk(0.1, false);
    let stag = disk(0.1, true);
    let rule = volpot::basis::InterpRule::builtin(20).unwrap();
    let median = |interp: &TriMesh| {
        let nodes = volpot::pipeline::interpolation_nodes(interp, &rule);
        let mut d: Vec<f64> = nodes
            .iter()
            .map(|x| {
                quad.nearby(x, None)
                    .into_iter()
                    .flat_map(|e| {
                        let v = quad.elements[e].v;
                        [(v[0], v[1]), (v[1], v[2]), (v[2], v[0])]
                    })
                    .map(|(a, b)| edge_distance(x, &quad.vertices[a], &quad.vertices[b]))
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        d.sort_by(f64::total_cmp);
        d[d.len() / 2]
    };
    let same = median(&quad);
    let shifted = median(&stag);
    assert!(shifted > same, "staggered median {shifted:e} vs {same:e}");
}

#[test]
fn size_field_properties() {
    let d = Domain::unit_disk();
    let model = d.sdf(0.1).unwrap();
    let f = SizeField::new(&model, None, 0.1).unwrap();
    for r in [0.0, 0.3, 0.6, 0.9, 0.99] {
        let h0 = f.eval(&pt(r, 0.0));
        for k in 1..12 {
            let th = TAU * k as f64 / 12.0;
            assert!((f.eval(&pt(r * th.cos(), r * th.sin())) - h0).abs() < 1e-8);
        }
        assert!(h0 <= 0.1 + 1e-15);
    }
    let flat = SizeField::new(&model, Some(1e6), 0.1).unwrap();
    assert!((flat.eval(&pt(0.2, 0.1)) - 0.1).abs() < 1e-12);

    let w = Domain::wobbly();
    let model = w.sdf(0.05).unwrap();
    let f = SizeField::new(&model, None, 0.05).unwrap();
    let c = &w.curves[0];
    let n = 4000;
    let s_max = (0..n)
        .map(|i| c.length() * i as f64 / n as f64)
        .max_by(|a, b| c.curvature(*a).abs().total_cmp(&c.curvature(*b).abs()))
        .unwrap();
    let s_min_h = (0..n)
        .map(|i| c.length() * i as f64 / n as f64)
        .min_by(|a, b| f.eval(&c.point(*a)).total_cmp(&f.eval(&c.point(*b))))
        .unwrap();
    let p = c.point(s_max);
    let q = c.point(s_min_h);
    // The wobbly curve has symmetric curvature peaks; compare to the nearest copy.
    let peaks: Vec<Point> = (0..n)
        .map(|i| c.length() * i as f64 / n as f64)
        .filter(|s| c.curvature(*s).abs() > c.curvature(s_max).abs() * (1.0 - 1e-6))
        .map(|s| c.point(s))
        .collect();
    assert!(!peaks.is_empty());
    let gap = peaks
        .iter()
        .map(|k| (k - q).norm())
        .fold(f64::INFINITY, f64::min);
    assert!(
        gap < 0.1 * c.length() / 5.0,
        "min-h point {q:?} is {gap} from the nearest curvature peak {p:?}"
    );
}

#[test]
fn mesh_text_round_trip_is_exact() {
    let mesh = disk(0.2, true);
    let text = mesh.to_text();
    let back = TriMesh::from_text(&text, mesh.curves().to_vec()).unwrap();
    assert_eq!(back.vertices, mesh.vertices);
    assert_eq!(back.boundary, mesh.boundary);
    assert_eq!(back.elements, mesh.elements);
    assert_eq!(back.to_text(), text);
    assert!(TriMesh::from_text("2 1\nv 0 0 0\n", mesh.curves().to_vec()).is_err());
}

#[test]
fn invalid_h0_is_rejected() {
    assert!(Domain::unit_disk().mesh(&MeshOptions::new(0.0)).is_err());
    assert!(Domain::unit_disk()
        .mesh(&MeshOptions::new(f64::NAN))
        .is_err());
}

#[test]
fn graded_mesh_follows_size_field() {
    use volpot::domain::Grading;
    let w = Domain::wobbly();
    let opts = MeshOptions::new(0.25);
    let (uniform, _) = w.mesh_with_report(&opts, Grading::Uniform).unwrap();
    let (graded, _) = w
        .mesh_with_report(&opts, Grading::Curvature { a: None })
        .unwrap();
    assert!(graded.len() > uniform.len());
    assert!(graded.min_quality() >= 0.3);
    check_annotation(&graded);

    // Edge length tracks the size field up to a global scale.
    let f = SizeField::new(&w.sdf(0.25).unwrap(), None, 0.25).unwrap();
    let ratios: Vec<f64> = graded
        .edges()
        .iter()
        .map(|&(i, j)| {
            let (a, b) = (graded.vertices[i], graded.vertices[j]);
            (a - b).norm() / f.eval(&((a + b) * 0.5))
        })
        .collect();
    let mut sorted = ratios.clone();
    sorted.sort_by(f64::total_cmp);
    let (lo, hi) = (sorted[sorted.len() / 10], sorted[9 * sorted.len() / 10]);
    assert!(hi / lo < 2.0, "edge/h spread {lo:.3}..{hi:.3}");
}
