//! Subtract-and-add evaluation of the volume potential on a mesh.
//!
//! The far field comes from one FMM pass over every quadrature node. Each
//! target then has the point contributions of its nearby and containing
//! elements removed and replaced by [`near_eval`] and [`self_eval`].

use std::ops::Range;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::Matrix2;

use crate::basis::{InterpRule, Jet2, QuadRule};
use crate::error::{Error, Result};
use crate::fmm;
use crate::geometry::{Point, Rect};
use crate::mesher::{ElementKind, TriMesh};
use crate::nearfield::{NearFieldModel, NearModelKind};
use crate::par::{self, Execution};
use crate::quadrature::{green, near_eval, self_eval, Density, NearParams, SelfRule};

/// Rule orders used by the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Orders {
    /// Far-field rule.
    pub n_f: usize,
    /// Interpolation rule.
    pub n_s: usize,
    /// Near-field subdivision rule.
    pub n_n: usize,
    /// Gauss-Legendre points per arc-length panel.
    pub n_l: usize,
    /// Radial rule order.
    pub n_g: usize,
}

impl Orders {
    /// Defaults for a tolerance: N_f = 50 below 1e-13, else 40.
    pub fn for_eps(eps: f64) -> Self {
        Orders {
            n_f: if eps <= 1e-14 { 50 } else { 40 },
            n_s: 20,
            n_n: 12,
            n_l: 16,
            n_g: 8,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum FarFieldMethod {
    #[default]
    Fmm,
    Direct,
}

#[derive(Clone, Copy, Debug)]
pub struct PipelineOptions {
    pub eps: f64,
    pub orders: Orders,
    pub near_model: NearModelKind,
    pub far_field: FarFieldMethod,
    pub exec: Execution,
    /// FMM accuracy; defaults to ε/10.
    pub eps_fmm: Option<f64>,
}

impl PipelineOptions {
    pub fn new(eps: f64) -> Self {
        PipelineOptions {
            eps,
            orders: Orders::for_eps(eps),
            near_model: NearModelKind::Precise,
            far_field: FarFieldMethod::Fmm,
            exec: Execution::default(),
            eps_fmm: None,
        }
    }

    fn fmm_tol(&self) -> f64 {
        self.eps_fmm.unwrap_or(0.1 * self.eps).clamp(1e-15, 1e-3)
    }
}

/// Far-rule nodes of every element with their charges wᵢ |J| f(yᵢ).
#[derive(Clone, Debug)]
pub struct ChargeSystem {
    pub sources: Vec<Point>,
    pub charges: Vec<f64>,
    offsets: Vec<usize>,
}

impl ChargeSystem {
    pub fn build(mesh: &TriMesh, rule: &QuadRule, f: &Density, exec: Execution) -> Self {
        let per = par::map_indexed(exec, mesh.len(), |e| {
            let map = mesh.map(e);
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(p, w)| {
                    let y = map.forward(p[0], p[1]);
                    (y, w * map.det(p[0], p[1]) * f(&y))
                })
                .collect::<Vec<_>>()
        });
        let mut sources = Vec::with_capacity(mesh.len() * rule.len());
        let mut charges = Vec::with_capacity(mesh.len() * rule.len());
        let mut offsets = vec![0];
        for el in per {
            for (y, q) in el {
                sources.push(y);
                charges.push(q);
            }
            offsets.push(sources.len());
        }
        ChargeSystem {
            sources,
            charges,
            offsets,
        }
    }

    pub fn len(&self) -> usize {
        self.sources.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sources.is_empty()
    }

    pub fn element_range(&self, e: usize) -> Range<usize> {
        self.offsets[e]..self.offsets[e + 1]
    }

    /// Point-source potential of element `e` at `x`, coincident nodes skipped.
    pub fn element_potential(&self, e: usize, x: &Point) -> f64 {
        self.element_range(e)
            .filter(|&j| self.sources[j] != *x)
            .map(|j| self.charges[j] * green(x, &self.sources[j]))
            .sum()
    }
}

/// Per-element near-field models with their bounding boxes.
#[derive(Clone, Debug)]
pub struct NearFieldIndex {
    pub models: Vec<NearFieldModel>,
    boxes: Vec<Option<Rect>>,
    reach: f64,
}

impl NearFieldIndex {
    pub fn build(
        mesh: &TriMesh,
        rule: &QuadRule,
        eps: f64,
        kind: NearModelKind,
        exec: Execution,
    ) -> Result<Self> {
        let models = par::try_map_indexed(exec, mesh.len(), |e| {
            let map = mesh.map(e);
            NearFieldModel::build(kind, &map.corners(), map.area(rule), rule, eps)
        })?;
        let boxes: Vec<Option<Rect>> = models.iter().map(|m| m.bounding_box()).collect();
        let mut reach: f64 = 0.0;
        for (e, b) in boxes.iter().enumerate() {
            let own = mesh.bbox(e);
            match b {
                Some(b) => {
                    reach = reach
                        .max(own.min.x - b.min.x)
                        .max(own.min.y - b.min.y)
                        .max(b.max.x - own.max.x)
                        .max(b.max.y - own.max.y);
                }
                None => reach = f64::INFINITY,
            }
        }
        Ok(NearFieldIndex {
            models,
            boxes,
            reach,
        })
    }

    /// Elements other than those containing `x` whose model contains `x`.
    pub fn near_set(&self, mesh: &TriMesh, x: &Point) -> Vec<usize> {
        let cands: Vec<usize> = if self.reach.is_finite() {
            mesh.nearby(x, Some(self.reach))
        } else {
            (0..mesh.len()).collect()
        };
        cands
            .into_iter()
            .filter(|&e| self.boxes[e].is_none_or(|b| b.contains(x)) && self.models[e].contains(x))
            .collect()
    }

    /// Summed model area over all elements.
    pub fn total_area(&self) -> f64 {
        self.models.iter().map(NearFieldModel::area).sum()
    }
}

/// Interpolated potential on a mesh.
#[derive(Clone, Debug)]
pub struct PotentialField {
    mesh: Arc<TriMesh>,
    interp: Arc<InterpRule>,
    values: Vec<Vec<f64>>,
    coeffs: Vec<Vec<f64>>,
}

/// Physical interpolation nodes, element-major.
pub fn interpolation_nodes(mesh: &TriMesh, interp: &InterpRule) -> Vec<Point> {
    let mut out = Vec::with_capacity(mesh.len() * interp.len());
    for e in 0..mesh.len() {
        let map = mesh.map(e);
        out.extend(interp.rule.nodes.iter().map(|p| map.forward(p[0], p[1])));
    }
    out
}

impl PotentialField {
    pub fn new(mesh: Arc<TriMesh>, interp: Arc<InterpRule>, values: Vec<Vec<f64>>) -> Result<Self> {
        if values.len() != mesh.len() {
            return Err(Error::InvalidArgument(
                "one value vector per element required".into(),
            ));
        }
        let coeffs = values
            .iter()
            .map(|v| interp.coefficients(v))
            .collect::<Result<Vec<_>>>()?;
        Ok(PotentialField {
            mesh,
            interp,
            values,
            coeffs,
        })
    }

    pub fn mesh(&self) -> &Arc<TriMesh> {
        &self.mesh
    }

    pub fn interp(&self) -> &Arc<InterpRule> {
        &self.interp
    }

    /// Nodal values per element.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn coefficients(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn nodes(&self) -> Vec<Point> {
        interpolation_nodes(&self.mesh, &self.interp)
    }

    /// (node, value) pairs, element-major.
    pub fn samples(&self) -> Vec<(Point, f64)> {
        self.nodes()
            .into_iter()
            .zip(self.values.iter().flatten().copied())
            .collect()
    }

    pub fn field_eval(&self, x: &Point) -> Result<f64> {
        let e = self.mesh.locate(x).ok_or(Error::OutsideDomain)?;
        let (xi, eta) = self.mesh.map(e).inverse(x)?;
        Ok(self.interp.evaluate(&self.coeffs[e], xi, eta))
    }

    /// Value at γ(s) on boundary curve `curve`, using the closed-form pullback.
    pub fn field_eval_boundary(&self, curve: usize, s: f64) -> Result<f64> {
        for (e, el) in self.mesh.elements.iter().enumerate() {
            if let ElementKind::Curved { curve: c, .. } = el.kind {
                if c != curve {
                    continue;
                }
                if let Some((xi, eta)) = self.mesh.map(e).boundary_pullback(s) {
                    return Ok(self.interp.evaluate(&self.coeffs[e], xi, eta));
                }
            }
        }
        Err(Error::OutsideDomain)
    }

    /// ∇²u at `x`, which must lie in a straight element.
    pub fn laplacian(&self, x: &Point) -> Result<f64> {
        let e = self.mesh.locate(x).ok_or(Error::OutsideDomain)?;
        let map = self.mesh.map(e);
        if !map.is_affine() {
            return Err(Error::InvalidArgument(
                "laplacian is only available on straight elements".into(),
            ));
        }
        let (xi, eta) = map.inverse(x)?;
        let jets = self.interp.basis.eval_jet(xi, eta);
        let mut h = Jet2::default();
        for (j, c) in jets.iter().zip(&self.coeffs[e]) {
            h.dxx += c * j.dxx;
            h.dxy += c * j.dxy;
            h.dyy += c * j.dyy;
        }
        let a = map
            .jacobian(xi, eta)
            .try_inverse()
            .ok_or(Error::SingularSystem)?;
        let hess = Matrix2::new(h.dxx, h.dxy, h.dxy, h.dyy);
        Ok((a.transpose() * hess * a).trace())
    }

    /// New field with values g(node, old value) at the same nodes.
    pub fn map_values(
        &self,
        g: impl Fn(&Point, f64) -> Result<f64> + Sync,
        exec: Execution,
    ) -> Result<Self> {
        let per = self.interp.len();
        let nodes = self.nodes();
        let flat: Vec<f64> = self.values.iter().flatten().copied().collect();
        let vals = par::try_map_indexed(exec, nodes.len(), |k| g(&nodes[k], flat[k]))?;
        let values = vals.chunks(per).map(<[f64]>::to_vec).collect();
        PotentialField::new(self.mesh.clone(), self.interp.clone(), values)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FieldStats {
    pub targets: usize,
    pub excluded: usize,
    /// Mean number of near-field corrections per target.
    pub c: f64,
    /// Mean accepted near-field sub-simplices per target.
    pub s_n: f64,
    /// Mean self-interaction panels per target.
    pub s_l: f64,
    /// Seconds in the far-field, near-field and self phases, and overall.
    pub t_f: f64,
    pub t_n: f64,
    pub t_s: f64,
    pub total: f64,
}

#[derive(Clone, Debug)]
pub struct FieldOutput {
    pub field: PotentialField,
    pub stats: FieldStats,
    /// Targets outside every quadrature element (element-major node indices).
    pub excluded: Vec<usize>,
}

struct NearPass {
    home: Option<usize>,
    value: f64,
    count: usize,
    leaves: usize,
    extra_self: Vec<usize>,
}

/// Volume potential of `f` over `quad`, sampled at the interpolation nodes of `interp`.
pub fn evaluate_field(
    quad: &TriMesh,
    interp: Arc<TriMesh>,
    f: &Density,
    opts: &PipelineOptions,
) -> Result<FieldOutput> {
    let start = Instant::now();
    let o = opts.orders;
    let far_rule = QuadRule::xiao_gimbutas(o.n_f)?;
    let near_rule = QuadRule::xiao_gimbutas(o.n_n)?;
    let irule = InterpRule::builtin(o.n_s)?;
    let srule = SelfRule::new(o.n_g, o.n_l)?;
    let exec = opts.exec;

    let t0 = Instant::now();
    let targets = interpolation_nodes(&interp, &irule);
    let charges = ChargeSystem::build(quad, &far_rule, f, exec);
    let mut u = match opts.far_field {
        FarFieldMethod::Fmm => fmm::fmm_eval(
            &charges.sources,
            &charges.charges,
            &targets,
            opts.fmm_tol(),
            exec,
        ),
        FarFieldMethod::Direct => {
            fmm::direct_eval(&charges.sources, &charges.charges, &targets, exec)
        }
    };
    let t_f = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let index = NearFieldIndex::build(quad, &far_rule, opts.eps, opts.near_model, exec)?;
    let params = NearParams {
        eps: opts.eps,
        rule: &near_rule,
    };
    let pass1 = par::try_map_indexed(exec, targets.len(), |k| {
        let x = &targets[k];
        let Some(home) = quad.locate(x) else {
            return Ok(NearPass {
                home: None,
                value: 0.0,
                count: 0,
                leaves: 0,
                extra_self: Vec::new(),
            });
        };
        let mut out = NearPass {
            home: Some(home),
            value: -charges.element_potential(home, x),
            count: 0,
            leaves: 0,
            extra_self: Vec::new(),
        };
        for e in index.near_set(quad, x) {
            if e == home {
                continue;
            }
            out.count += 1;
            out.value -= charges.element_potential(e, x);
            if quad.contains(e, x) {
                out.extra_self.push(e);
                continue;
            }
            match near_eval(quad.map(e), f, x, &params) {
                Ok(r) => {
                    out.value += r.value;
                    out.leaves += r.leaves;
                }
                Err(Error::SubdivisionDepth) => out.extra_self.push(e),
                Err(err) => return Err(err),
            }
        }
        Ok(out)
    })?;
    let t_n = t1.elapsed().as_secs_f64();

    let t2 = Instant::now();
    let pass2 = par::try_map_indexed(exec, targets.len(), |k| -> Result<(f64, usize)> {
        let p = &pass1[k];
        let Some(home) = p.home else {
            return Ok((0.0, 0usize));
        };
        let mut value = 0.0;
        let mut panels = 0;
        for &e in std::iter::once(&home).chain(&p.extra_self) {
            let r = self_eval(quad.map(e), f, &targets[k], &srule, opts.eps)?;
            value += r.value;
            panels += r.panels;
        }
        Ok((value, panels))
    })?;
    let t_s = t2.elapsed().as_secs_f64();

    let mut excluded = Vec::new();
    let (mut c, mut s_n, mut s_l) = (0usize, 0usize, 0usize);
    for (k, (p, (sv, panels))) in pass1.iter().zip(&pass2).enumerate() {
        if p.home.is_none() {
            excluded.push(k);
            u[k] = f64::NAN;
            continue;
        }
        u[k] += p.value + sv;
        c += p.count;
        s_n += p.leaves;
        s_l += panels;
    }
    let per = irule.len();
    let values: Vec<Vec<f64>> = u.chunks(per).map(<[f64]>::to_vec).collect();
    let field = PotentialField::new(interp, irule, values)?;
    let counted = (targets.len() - excluded.len()).max(1) as f64;
    let stats = FieldStats {
        targets: targets.len(),
        excluded: excluded.len(),
        c: c as f64 / counted,
        s_n: s_n as f64 / counted,
        s_l: s_l as f64 / counted,
        t_f,
        t_n,
        t_s,
        total: start.elapsed().as_secs_f64(),
    };
    Ok(FieldOutput {
        field,
        stats,
        excluded,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OffloadRow {
    pub n_f: usize,
    pub t_f: f64,
    pub t_n: f64,
    pub t_s: f64,
    pub total: f64,
    pub c: f64,
    pub s_n: f64,
    /// Summed near-field model area over the quadrature mesh.
    pub model_area: f64,
}

#[derive(Clone, Debug)]
pub struct OffloadTable {
    pub rows: Vec<OffloadRow>,
    /// Whether c and s_n are non-increasing in N_f.
    pub monotone: bool,
}

impl OffloadTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("Nf,TF,TN,TS,Ttot,c,sn\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.n_f, r.t_f, r.t_n, r.t_s, r.total, r.c, r.s_n
            ));
        }
        s
    }

    /// Least-squares slope of log(model area) against log(1/N_f).
    pub fn area_slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| ((1.0 / r.n_f as f64).ln(), r.model_area.ln()))
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (
            pts.iter().map(|p| p.0).sum::<f64>() / n,
            pts.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
        sxy / sxx
    }
}

/// Runs [`evaluate_field`] for each far-rule order.
pub fn offload_sweep(
    quad: &TriMesh,
    interp: Arc<TriMesh>,
    f: &Density,
    n_f: &[usize],
    base: &PipelineOptions,
) -> Result<OffloadTable> {
    let mut rows = Vec::with_capacity(n_f.len());
    for &n in n_f {
        let mut opts = *base;
        opts.orders.n_f = n;
        let out = evaluate_field(quad, interp.clone(), f, &opts)?;
        let rule = QuadRule::xiao_gimbutas(n)?;
        let index =
            NearFieldIndex::build(quad, &rule, opts.eps, NearModelKind::Precise, opts.exec)?;
        let s = out.stats;
        rows.push(OffloadRow {
            n_f: n,
            t_f: s.t_f,
            t_n: s.t_n,
            t_s: s.t_s,
            total: s.total,
            c: s.c,
            s_n: s.s_n,
            model_area: index.total_area(),
        });
    }
    let monotone = rows
        .windows(2)
        .all(|w| w[1].c <= w[0].c && w[1].s_n <= w[0].s_n);
    Ok(OffloadTable { rows, monotone })
}
