mod common;

use std::time::Instant;

use common::direct_sum;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use volpot::fmm::{direct_eval, fmm_eval};
use volpot::geometry::pt;
use volpot::{Execution, Point};

fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<Point> {
    (0..n)
        .map(|_| pt(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

#[test]
fn fmm_matches_direct_sum_on_random_cloud() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let src = cloud(&mut rng, 10_000);
    let tgt = cloud(&mut rng, 10_000);
    let q: Vec<f64> = (0..src.len()).map(|_| rng.gen_range(0.0..1e-4)).collect();
    let t = Instant::now();
    let u = fmm_eval(&src, &q, &tgt, 1e-13, Execution::Parallel);
    let tf = t.elapsed();
    let d = direct_sum(&src, &q, &tgt);
    let err = u
        .iter()
        .zip(&d)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-12, "max error {err:e} ({tf:?})");
}

#[test]
fn fmm_handles_shared_points_and_clusters() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut src = cloud(&mut rng, 3000);
    // A tight cluster and exact duplicates.
    src.extend((0..500).map(|_| {
        pt(
            0.3 + rng.gen_range(-1e-7..1e-7),
            -0.2 + rng.gen_range(-1e-7..1e-7),
        )
    }));
    src.extend(std::iter::repeat_n(pt(0.1, 0.1), 50));
    let q: Vec<f64> = (0..src.len()).map(|_| rng.gen_range(-1e-3..1e-3)).collect();
    let tgt: Vec<Point> = src.iter().step_by(3).copied().collect();
    let u = fmm_eval(&src, &q, &tgt, 1e-13, Execution::Sequential);
    let d = direct_eval(&src, &q, &tgt, Execution::Sequential);
    let err = u
        .iter()
        .zip(&d)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-12, "max error {err:e}");
}

#[test]
fn direct_paths_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let src = cloud(&mut rng, 500);
    let q: Vec<f64> = (0..src.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a = direct_eval(&src, &q, &src, Execution::Parallel);
    let b = direct_sum(&src, &q, &src);
    for (x, y) in a.iter().zip(&b) {
        assert!((x - y).abs() < 1e-13);
    }
}
