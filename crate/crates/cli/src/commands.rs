//! Subcommand bodies.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::Context;
use serde::Serialize;

use volpot::basis::rules::{QuadRule, VR_ORDERS, XG_ORDERS};
use volpot::domain::{Domain, Grading};
use volpot::element_map::{AffineMap, ElementMap};
use volpot::geometry::pt;
use volpot::mesher::{MeshOptions, TriMesh};
use volpot::nearfield::{NearFieldModel, NearModelKind};
use volpot::pipeline::{evaluate_field, offload_sweep, FarFieldMethod, Orders, PipelineOptions};
use volpot::poisson::{gaussian_pair, gaussian_pair_laplacian, poisson_solve, PoissonOptions};
use volpot::quadrature::{far_eval, near_eval, NearParams};
use volpot::Point;

use crate::{
    BenchArgs, Command, DensityArg, DomainArgs, EvalArgs, MeshArgs, NearModel, NfmapArgs,
    OrderArgs, PoissonArgs, PoissonCase,
};

pub enum Failure {
    Usage(String),
    Numerical(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Numerical(e.into())
    }
}

type Run<T = ()> = std::result::Result<T, Failure>;

fn usage<T>(msg: impl Into<String>) -> Run<T> {
    Err(Failure::Usage(msg.into()))
}

pub fn run(cmd: Command) -> Run {
    match cmd {
        Command::Mesh(a) => mesh(a),
        Command::Eval(a) => eval(a),
        Command::Nfmap(a) => nfmap(a),
        Command::Bench(a) => bench(a),
        Command::Poisson(a) => poisson(a),
    }
}

fn check_eps(eps: f64) -> Run {
    if !(1e-15..=1e-4).contains(&eps) {
        return usage(format!("--eps must lie in [1e-15, 1e-4], got {eps:e}"));
    }
    Ok(())
}

fn check_xg(flag: &str, n: usize) -> Run {
    if !XG_ORDERS.contains(&n) {
        return usage(format!("{flag} must be one of {XG_ORDERS:?}, got {n}"));
    }
    Ok(())
}

impl DomainArgs {
    fn domain(&self) -> Run<Domain> {
        if !(self.h0.is_finite() && self.h0 > 0.0) {
            return usage(format!("--h0 must be positive, got {}", self.h0));
        }
        if let Some(a) = self.size_a {
            if !(a.is_finite() && a > 0.0) {
                return usage(format!("--size-a must be positive, got {a}"));
            }
        }
        match &self.spline {
            Some(path) => {
                let text = read(path)?;
                Ok(Domain::spline(&text)?)
            }
            None => match self.domain.as_str() {
                "circle" | "disk" | "ellipse" | "wobbly" => Ok(Domain::builtin(&self.domain)?),
                other => usage(format!(
                    "unknown domain '{other}' (circle, ellipse, wobbly)"
                )),
            },
        }
    }

    fn grading(&self) -> Grading {
        if self.size_field || self.size_a.is_some() {
            Grading::Curvature { a: self.size_a }
        } else {
            Grading::Uniform
        }
    }

    fn options(&self, stagger: bool) -> MeshOptions {
        let mut o = MeshOptions::new(self.h0).staggered(stagger);
        o.seed = self.seed;
        o
    }

    fn mesh(&self, domain: &Domain, stagger: bool) -> Run<TriMesh> {
        Ok(domain
            .mesh_with_report(&self.options(stagger), self.grading())?
            .0)
    }
}

impl OrderArgs {
    fn pipeline(&self) -> Run<PipelineOptions> {
        check_eps(self.eps)?;
        let mut o = PipelineOptions::new(self.eps);
        let defaults = Orders::for_eps(self.eps);
        o.orders = Orders {
            n_f: self.nf.unwrap_or(defaults.n_f),
            n_s: self.ns,
            n_n: self.nn,
            n_l: self.nl,
            n_g: self.ng,
        };
        check_xg("--nf", o.orders.n_f)?;
        check_xg("--nn", o.orders.n_n)?;
        if !VR_ORDERS.contains(&self.ns) {
            return usage(format!(
                "--ns must be one of {VR_ORDERS:?}, got {}",
                self.ns
            ));
        }
        if !(1..=20).contains(&self.ng) {
            return usage(format!("--ng must lie in [1, 20], got {}", self.ng));
        }
        if self.nl < 2 {
            return usage(format!("--nl must be at least 2, got {}", self.nl));
        }
        o.near_model = match self.near_model {
            NearModel::Precise => NearModelKind::Precise,
            NearModel::Ball => NearModelKind::Ball,
        };
        if self.direct {
            o.far_field = FarFieldMethod::Direct;
        }
        Ok(o)
    }
}

type BoxedDensity = Box<dyn Fn(&Point) -> f64 + Sync>;

fn density(d: DensityArg) -> BoxedDensity {
    match d {
        DensityArg::One => Box::new(|_| 1.0),
        DensityArg::Sin => Box::new(|p| (p.x + 2.0 * p.y).sin()),
        DensityArg::Exp => Box::new(|p| (-p.norm_squared()).exp()),
    }
}

fn read(path: &Path) -> Run<String> {
    fs::read_to_string(path).or_else(|e| usage(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Run {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// `dir/mesh.txt` becomes `dir/mesh.stag.txt`.
fn stagger_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    let name = match (stem, path.extension()) {
        (Some(s), Some(ext)) => format!("{s}.stag.{}", ext.to_string_lossy()),
        (Some(s), None) => format!("{s}.stag"),
        _ => "mesh.stag".to_string(),
    };
    path.with_file_name(name)
}

fn mesh(a: MeshArgs) -> Run {
    let domain = a.domain.domain()?;
    let m = a.domain.mesh(&domain, false)?;
    m.save(&a.out)?;
    println!(
        "{}: {} elements ({} curved), {} vertices, min quality {:.3}",
        a.out.display(),
        m.len(),
        m.curved_count(),
        m.vertices.len(),
        m.min_quality()
    );
    if a.stagger {
        let twin = a.domain.mesh(&domain, true)?;
        let path = stagger_path(&a.out);
        twin.save(&path)?;
        println!(
            "{}: {} elements ({} curved), staggered twin",
            path.display(),
            twin.len(),
            twin.curved_count()
        );
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalStats {
    domain: String,
    eps: f64,
    n_f: usize,
    n_s: usize,
    n_n: usize,
    n_l: usize,
    n_g: usize,
    near_model: &'static str,
    far_field: &'static str,
    stagger: bool,
    quad_elements: usize,
    interp_elements: usize,
    targets: usize,
    excluded: usize,
    c: f64,
    s_n: f64,
    s_l: f64,
    t_f: f64,
    t_n: f64,
    t_s: f64,
    total: f64,
    /// Max node error against (‖x‖² − 1)/4; only for the unit disk with f = 1.
    e_abs: Option<f64>,
}

fn eval(a: EvalArgs) -> Run {
    let opts = a.orders.pipeline()?;
    let domain = a.domain.domain()?;
    let quad = Arc::new(match &a.mesh {
        Some(path) => {
            let text = read(path)?;
            TriMesh::from_text(&text, domain.curves.clone())?
        }
        None => a.domain.mesh(&domain, false)?,
    });
    let interp = if a.stagger {
        Arc::new(a.domain.mesh(&domain, true)?)
    } else {
        quad.clone()
    };
    let f = density(a.density);
    let out = evaluate_field(&quad, interp.clone(), &*f, &opts)?;

    let analytic = a.domain.spline.is_none()
        && matches!(a.domain.domain.as_str(), "circle" | "disk")
        && a.density == DensityArg::One;
    let mut csv = String::from("x,y,u\n");
    let mut e_abs: f64 = 0.0;
    for (p, u) in out.field.samples() {
        writeln!(csv, "{:.17e},{:.17e},{:.17e}", p.x, p.y, u).expect("string write");
        if analytic && u.is_finite() {
            e_abs = e_abs.max((u - 0.25 * (p.norm_squared() - 1.0)).abs());
        }
    }
    write(&a.out, &csv)?;

    let s = out.stats;
    let stats = EvalStats {
        domain: domain.name.clone(),
        eps: opts.eps,
        n_f: opts.orders.n_f,
        n_s: opts.orders.n_s,
        n_n: opts.orders.n_n,
        n_l: opts.orders.n_l,
        n_g: opts.orders.n_g,
        near_model: match opts.near_model {
            NearModelKind::Precise => "precise",
            NearModelKind::Ball => "ball",
        },
        far_field: match opts.far_field {
            FarFieldMethod::Fmm => "fmm",
            FarFieldMethod::Direct => "direct",
        },
        stagger: a.stagger,
        quad_elements: quad.len(),
        interp_elements: interp.len(),
        targets: s.targets,
        excluded: s.excluded,
        c: s.c,
        s_n: s.s_n,
        s_l: s.s_l,
        t_f: s.t_f,
        t_n: s.t_n,
        t_s: s.t_s,
        total: s.total,
        e_abs: analytic.then_some(e_abs),
    };
    write(&a.stats, &serde_json::to_string_pretty(&stats)?)?;
    println!(
        "{} targets, c {:.3}, s_n {:.3}, s_l {:.3}, {:.2} s{}",
        s.targets,
        s.c,
        s.s_n,
        s.s_l,
        s.total,
        stats
            .e_abs
            .map(|e| format!(", E_abs {e:.3e}"))
            .unwrap_or_default()
    );
    Ok(())
}

fn nfmap(a: NfmapArgs) -> Run {
    check_eps(a.eps)?;
    check_xg("--order", a.order)?;
    if a.grid < 2 {
        return usage(format!("--grid must be at least 2, got {}", a.grid));
    }
    let corners = [pt(0.0, 0.0), pt(1.0, 0.0), pt(0.0, 1.0)];
    let map = ElementMap::Affine(AffineMap::new(corners[0], corners[1], corners[2])?);
    let rule = QuadRule::xiao_gimbutas(a.order)?;
    let fine = QuadRule::xiao_gimbutas(40)?;
    let model = NearFieldModel::precise(&corners, 0.5, &rule, a.eps, false)?;
    let f = density(a.density);
    let reference = NearParams {
        eps: 1e-15,
        rule: &fine,
    };

    let (lo, hi) = (-0.55, 1.55);
    let n = a.grid;
    let mut csv = String::from("x,y,log10_true_err,in_model\n");
    let (mut far, mut violations) = (0usize, 0usize);
    for i in 0..n {
        for j in 0..n {
            let x = lo + (hi - lo) * (i as f64 + 0.37) / n as f64;
            let y = lo + (hi - lo) * (j as f64 + 0.61) / n as f64;
            if x >= -1e-9 && y >= -1e-9 && x + y <= 1.0 + 1e-9 {
                continue;
            }
            let p = pt(x, y);
            let exact = near_eval(&map, &*f, &p, &reference)?.value;
            let err = (far_eval(&map, &rule, &*f, &p) - exact).abs();
            let inside = model.contains(&p);
            if !inside {
                far += 1;
                if err > a.eps {
                    violations += 1;
                }
            }
            writeln!(
                csv,
                "{x:.6},{y:.6},{:.4},{}",
                err.max(1e-300).log10(),
                u8::from(inside)
            )
            .expect("string write");
        }
    }
    write(&a.out, &csv)?;
    println!(
        "order {}, eps {:e}: {far} far points, {violations} with error above eps",
        a.order, a.eps
    );
    Ok(())
}

fn bench(a: BenchArgs) -> Run {
    let opts = a.orders.pipeline()?;
    if a.nf_list.is_empty() {
        return usage("--nf-list is empty");
    }
    for &n in &a.nf_list {
        check_xg("--nf-list", n)?;
    }
    let domain = a.domain.domain()?;
    let quad = Arc::new(a.domain.mesh(&domain, false)?);
    let interp = if a.no_stagger {
        quad.clone()
    } else {
        Arc::new(a.domain.mesh(&domain, true)?)
    };
    let f = density(a.density);
    let table = offload_sweep(&quad, interp, &*f, &a.nf_list, &opts)?;
    write(&a.out, &table.to_csv())?;
    print!("{}", table.to_csv());
    println!(
        "monotone {}, area slope {:.3}",
        table.monotone,
        table.area_slope()
    );
    Ok(())
}

fn poisson(a: PoissonArgs) -> Run {
    let pipeline = a.orders.pipeline()?;
    if let Some(nb) = a.nb {
        if nb < 8 {
            return usage(format!("--nb must be at least 8, got {nb}"));
        }
    }
    let domain = a.domain.domain()?;
    let mut opts = PoissonOptions::new(pipeline.eps, a.domain.h0);
    opts.pipeline = pipeline;
    opts.stagger = !a.no_stagger;
    opts.seed = a.domain.seed;
    opts.n_b = a.nb;

    let (f, g): (BoxedDensity, BoxedDensity) = match a.case {
        PoissonCase::Gauss => (Box::new(gaussian_pair_laplacian), Box::new(gaussian_pair)),
        PoissonCase::Radial => (
            Box::new(|_| 1.0),
            Box::new(|p| 0.25 * (p.norm_squared() - 1.0)),
        ),
    };
    let out = poisson_solve(&domain, &*f, &*g, &opts)?;

    let mut csv = String::from("x,y,phi,err\n");
    let mut worst: f64 = 0.0;
    for (p, phi) in out.phi.samples() {
        let err = (phi - g(&p)).abs();
        if err.is_finite() {
            worst = worst.max(err);
        }
        writeln!(csv, "{:.17e},{:.17e},{:.17e},{:.3e}", p.x, p.y, phi, err).expect("string write");
    }
    write(&a.out, &csv)?;
    println!(
        "{} quadrature elements, n_b {}, eps {:e}, E_abs {worst:.3e}",
        out.quad_elements, out.laplace.n_b, pipeline.eps
    );
    Ok(())
}
