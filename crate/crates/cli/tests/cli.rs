use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn volpot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_volpot"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("spawn volpot")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = volpot(dir, args);
    assert!(
        out.status.success(),
        "volpot {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn stats(dir: &Path, name: &str) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join(name)).unwrap()).unwrap()
}

fn element_count(path: &Path) -> usize {
    let text = fs::read_to_string(path).unwrap();
    let header = text
        .lines()
        .find(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .unwrap();
    header.split_whitespace().nth(1).unwrap().parse().unwrap()
}

#[test]
fn mesh_circle_count_and_twin() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["mesh", "--domain", "circle", "--h0", "0.2"]);
    let n = element_count(&dir.path().join("mesh.txt"));
    assert!((120..=170).contains(&n), "{n} elements");
    assert!(!dir.path().join("mesh.stag.txt").exists());

    ok(
        dir.path(),
        &["mesh", "--h0", "0.2", "--stagger", "--out", "m.txt"],
    );
    assert!(dir.path().join("m.txt").exists());
    let twin = element_count(&dir.path().join("m.stag.txt"));
    assert!((120..=170).contains(&twin), "{twin} twin elements");
}

#[test]
fn mesh_is_deterministic_for_a_seed() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "mesh", "--domain", "wobbly", "--h0", "0.25", "--out", "a.txt",
        ],
    );
    ok(
        dir.path(),
        &[
            "mesh", "--domain", "wobbly", "--h0", "0.25", "--out", "b.txt",
        ],
    );
    let a = fs::read(dir.path().join("a.txt")).unwrap();
    let b = fs::read(dir.path().join("b.txt")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn graded_mesh_is_finer() {
    let dir = TempDir::new().unwrap();
    ok(
        dir.path(),
        &[
            "mesh", "--domain", "wobbly", "--h0", "0.25", "--out", "u.txt",
        ],
    );
    ok(
        dir.path(),
        &[
            "mesh",
            "--domain",
            "wobbly",
            "--h0",
            "0.25",
            "--size-field",
            "--out",
            "g.txt",
        ],
    );
    let u = element_count(&dir.path().join("u.txt"));
    let g = element_count(&dir.path().join("g.txt"));
    assert!(g > u, "graded {g} vs uniform {u}");
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    for args in [
        &["mesh", "--h0", "0"][..],
        &["mesh", "--h0", "-1"],
        &["mesh", "--domain", "square"],
        &["eval", "--eps", "1e-3"],
        &["eval", "--eps", "1e-16"],
        &["eval", "--nf", "13"],
        &["eval", "--ns", "33"],
        &["eval", "--ng", "0"],
        &["nfmap", "--order", "7"],
        &["bench", "--nf-list", "12,21"],
        &["eval", "--spline", "missing.txt"],
        &["frobnicate"],
    ] {
        let out = volpot(dir.path(), args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(!out.stderr.is_empty(), "{args:?} printed no message");
    }
    assert_eq!(volpot(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn eval_disk_reports_error_bound() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["eval", "--eps", "1e-8", "--stagger"]);
    let s = stats(dir.path(), "stats.json");
    let e = s["e_abs"].as_f64().unwrap();
    assert!(e <= 5e-8, "E_abs {e:e}");
    assert_eq!(s["n_f"], 40);
    assert_eq!(s["excluded"], 0);
    for key in ["c", "s_n", "s_l", "t_f", "t_n", "t_s", "total"] {
        assert!(s[key].as_f64().unwrap() >= 0.0, "{key}");
    }
    let csv = fs::read_to_string(dir.path().join("nodes.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,u"));
    assert_eq!(lines.count(), s["targets"].as_u64().unwrap() as usize);
}

#[test]
fn eval_without_analytic_solution_has_null_error() {
    let dir = TempDir::new().unwrap();
    let small = ["--h0", "0.4", "--eps", "1e-6", "--nf", "20", "--ns", "12"];
    ok(
        dir.path(),
        &[&["eval", "--density", "sin"][..], &small].concat(),
    );
    assert!(stats(dir.path(), "stats.json")["e_abs"].is_null());
}

#[test]
fn ball_model_needs_more_corrections() {
    let dir = TempDir::new().unwrap();
    let small = ["--h0", "0.3", "--eps", "1e-8", "--ns", "12"];
    ok(
        dir.path(),
        &[
            &["eval", "--near-model", "ball", "--stats", "ball.json"][..],
            &small,
        ]
        .concat(),
    );
    ok(
        dir.path(),
        &[&["eval", "--stats", "precise.json"][..], &small].concat(),
    );
    let ball = stats(dir.path(), "ball.json")["c"].as_f64().unwrap();
    let precise = stats(dir.path(), "precise.json")["c"].as_f64().unwrap();
    assert!(precise < ball, "precise {precise} ball {ball}");
}

#[test]
fn direct_sum_matches_fmm() {
    let dir = TempDir::new().unwrap();
    let small = [
        "--h0",
        "0.3",
        "--eps",
        "1e-10",
        "--nf",
        "20",
        "--ns",
        "12",
        "--stagger",
    ];
    ok(
        dir.path(),
        &[
            &["eval", "--density", "exp", "--out", "fmm.csv"][..],
            &small,
        ]
        .concat(),
    );
    ok(
        dir.path(),
        &[
            &[
                "eval",
                "--density",
                "exp",
                "--direct",
                "--out",
                "direct.csv",
            ][..],
            &small,
        ]
        .concat(),
    );
    let read = |name: &str| -> Vec<f64> {
        fs::read_to_string(dir.path().join(name))
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
            .collect()
    };
    let (a, b) = (read("fmm.csv"), read("direct.csv"));
    assert_eq!(a.len(), b.len());
    let diff = a
        .iter()
        .zip(&b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    assert!(diff <= 1e-12, "max diff {diff:e}");
}

#[test]
fn eval_reads_mesh_file() {
    let dir = TempDir::new().unwrap();
    ok(dir.path(), &["mesh", "--h0", "0.4"]);
    let out = ok(
        dir.path(),
        &[
            "eval", "--mesh", "mesh.txt", "--eps", "1e-6", "--nf", "20", "--ns", "12",
        ],
    );
    assert!(out.contains("E_abs"));
    let s = stats(dir.path(), "stats.json");
    assert_eq!(
        s["quad_elements"].as_u64().unwrap() as usize,
        element_count(&dir.path().join("mesh.txt"))
    );
    assert!(s["e_abs"].as_f64().unwrap() <= 1e-5);
}

#[test]
fn nfmap_writes_grid() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &["nfmap", "--order", "20", "--eps", "1e-8", "--grid", "16"],
    );
    assert!(out.contains(" 0 with error above eps"), "{out}");
    let csv = fs::read_to_string(dir.path().join("nfmap.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,y,log10_true_err,in_model"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(rows.len() > 150 && rows.len() < 256);
    assert!(rows.iter().any(|r| r[3] == "1") && rows.iter().any(|r| r[3] == "0"));
}

#[test]
fn bench_writes_sweep() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &[
            "bench",
            "--h0",
            "0.4",
            "--ns",
            "12",
            "--nf-list",
            "12,20,33",
        ],
    );
    assert!(out.contains("monotone true"), "{out}");
    let csv = fs::read_to_string(dir.path().join("offload.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("Nf,TF,TN,TS,Ttot,c,sn"));
    assert_eq!(lines.count(), 3);
}

#[test]
fn poisson_radial_case() {
    let dir = TempDir::new().unwrap();
    let out = ok(
        dir.path(),
        &[
            "poisson", "--domain", "circle", "--case", "radial", "--h0", "0.3", "--eps", "1e-8",
            "--nb", "256",
        ],
    );
    let e: f64 = out.rsplit("E_abs ").next().unwrap().trim().parse().unwrap();
    assert!(e <= 1e-7, "{out}");
    let csv = fs::read_to_string(dir.path().join("poisson.csv")).unwrap();
    assert!(csv.starts_with("x,y,phi,err\n"));
}
