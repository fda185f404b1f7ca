//! Tabulated quadrature and interpolation rules on the standard simplex.
//!
//! Table format: first line `kind N len`, then `len` lines `x y w`.
//! Shipped tables are compiled in; setting `VOLPOT_TABLE_DIR` makes the
//! loader read `<dir>/<kind>_<N>.txt` instead.

use std::collections::HashMap;
use std::path::Path;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::DMatrix;

use super::koornwinder::{dim, KoornwinderBasis};
use crate::error::{Error, Result};

pub const TABLE_DIR_ENV: &str = "VOLPOT_TABLE_DIR";

/// Orders with a shipped Xiao-Gimbutas table.
pub const XG_ORDERS: [usize; 5] = [12, 20, 33, 40, 50];
/// Orders with a shipped Vioreanu-Rokhlin table.
pub const VR_ORDERS: [usize; 2] = [12, 20];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleKind {
    XiaoGimbutas,
    VioreanuRokhlin,
}

impl RuleKind {
    pub fn tag(self) -> &'static str {
        match self {
            RuleKind::XiaoGimbutas => "xg",
            RuleKind::VioreanuRokhlin => "vr",
        }
    }

    fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "xg" => Some(RuleKind::XiaoGimbutas),
            "vr" => Some(RuleKind::VioreanuRokhlin),
            _ => None,
        }
    }
}

fn embedded(kind: RuleKind, order: usize) -> Option<&'static str> {
    Some(match (kind, order) {
        (RuleKind::XiaoGimbutas, 12) => include_str!("../../tables/xg_12.txt"),
        (RuleKind::XiaoGimbutas, 20) => include_str!("../../tables/xg_20.txt"),
        (RuleKind::XiaoGimbutas, 33) => include_str!("../../tables/xg_33.txt"),
        (RuleKind::XiaoGimbutas, 40) => include_str!("../../tables/xg_40.txt"),
        (RuleKind::XiaoGimbutas, 50) => include_str!("../../tables/xg_50.txt"),
        (RuleKind::VioreanuRokhlin, 12) => include_str!("../../tables/vr_12.txt"),
        (RuleKind::VioreanuRokhlin, 20) => include_str!("../../tables/vr_20.txt"),
        _ => return None,
    })
}

/// Quadrature rule on the standard simplex (weights sum to 1/2).
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub kind: RuleKind,
    pub order: usize,
    pub nodes: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
    /// Edge weight used to calibrate near-field models.
    pub w_edge: f64,
}

impl QuadRule {
    /// Parses and validates a rule from table text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
        let (hline, header) = lines.next().ok_or(Error::Parse {
            line: 1,
            msg: "empty table".into(),
        })?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        let bad = |line: usize, msg: &str| Error::Parse {
            line: line + 1,
            msg: msg.into(),
        };
        if parts.len() != 3 {
            return Err(bad(hline, "header must be `kind N len`"));
        }
        let kind = RuleKind::from_tag(parts[0]).ok_or_else(|| bad(hline, "unknown rule kind"))?;
        let order: usize = parts[1].parse().map_err(|_| bad(hline, "bad order"))?;
        let len: usize = parts[2].parse().map_err(|_| bad(hline, "bad length"))?;
        let mut nodes = Vec::with_capacity(len);
        let mut weights = Vec::with_capacity(len);
        for (ln, line) in lines {
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(ln, "expected `x y w`"))?;
            if v.len() != 3 {
                return Err(bad(ln, "expected `x y w`"));
            }
            nodes.push([v[0], v[1]]);
            weights.push(v[2]);
        }
        if nodes.len() != len {
            return Err(Error::InvalidRule(format!(
                "header declares {len} nodes but {} were read",
                nodes.len()
            )));
        }
        let mut rule = QuadRule {
            kind,
            order,
            nodes,
            weights,
            w_edge: 0.0,
        };
        rule.validate()?;
        rule.w_edge = edge_weight(&rule.nodes, &rule.weights);
        Ok(rule)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Shipped rule (or the override directory), cached process-wide.
    pub fn builtin(kind: RuleKind, order: usize) -> Result<Arc<QuadRule>> {
        static CACHE: OnceLock<Mutex<HashMap<(RuleKind, usize), Arc<QuadRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(r) = cache
            .lock()
            .expect("rule cache poisoned")
            .get(&(kind, order))
        {
            return Ok(r.clone());
        }
        let rule = match std::env::var_os(TABLE_DIR_ENV) {
            Some(dir) => {
                let path = Path::new(&dir).join(format!("{}_{}.txt", kind.tag(), order));
                if !path.exists() {
                    return Err(Error::MissingRule {
                        kind: kind.tag(),
                        order,
                    });
                }
                Self::load(&path)?
            }
            None => {
                let text = embedded(kind, order).ok_or(Error::MissingRule {
                    kind: kind.tag(),
                    order,
                })?;
                Self::parse(text)?
            }
        };
        if rule.kind != kind || rule.order != order {
            return Err(Error::InvalidRule(format!(
                "table for {}_{order} declares {}_{}",
                kind.tag(),
                rule.kind.tag(),
                rule.order
            )));
        }
        let rule = Arc::new(rule);
        cache
            .lock()
            .expect("rule cache poisoned")
            .insert((kind, order), rule.clone());
        Ok(rule)
    }

    pub fn xiao_gimbutas(order: usize) -> Result<Arc<QuadRule>> {
        Self::builtin(RuleKind::XiaoGimbutas, order)
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Largest |Σ w_i K_mn(node_i) − ∫K_mn| over m + n ≤ `degree`.
    pub fn exactness_residual(&self, degree: usize) -> f64 {
        let basis = KoornwinderBasis::new(degree);
        let mut acc = vec![0.0; basis.len()];
        let mut vals = vec![0.0; basis.len()];
        for (p, w) in self.nodes.iter().zip(&self.weights) {
            basis.eval_into(p[0], p[1], &mut vals);
            for (a, v) in acc.iter_mut().zip(&vals) {
                *a += w * v;
            }
        }
        acc[0] -= std::f64::consts::FRAC_1_SQRT_2;
        acc.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    fn validate(&self) -> Result<()> {
        if self.is_empty() {
            return Err(Error::InvalidRule("no nodes".into()));
        }
        if let Some(w) = self.weights.iter().find(|w| !(**w > 0.0)) {
            return Err(Error::InvalidRule(format!("non-positive weight {w}")));
        }
        if let Some(p) = self
            .nodes
            .iter()
            .find(|p| !(p[0] >= -1e-12 && p[1] >= -1e-12 && p[0] + p[1] <= 1.0 + 1e-12))
        {
            return Err(Error::InvalidRule(format!(
                "node ({}, {}) outside the simplex",
                p[0], p[1]
            )));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 0.5).abs() > 1e-13 {
            return Err(Error::InvalidRule(format!(
                "weights sum to {total}, expected 0.5"
            )));
        }
        if self.kind == RuleKind::VioreanuRokhlin && self.len() != dim(self.order) {
            return Err(Error::InvalidRule(format!(
                "interpolation rule of order {} must have {} nodes, found {}",
                self.order,
                dim(self.order),
                self.len()
            )));
        }
        let res = self.exactness_residual(self.order);
        if !(res <= 1e-12) {
            return Err(Error::InvalidRule(format!(
                "exactness residual {res:.3e} exceeds 1e-12 at order {}",
                self.order
            )));
        }
        Ok(())
    }
}

/// For each side, the largest weight among the ⌈n/2⌉ nodes closest to that
/// side; the maximum over the three sides.
pub fn edge_weight(nodes: &[[f64; 2]], weights: &[f64]) -> f64 {
    let n = nodes.len();
    let half = n.div_ceil(2);
    let dists: [fn(&[f64; 2]) -> f64; 3] = [
        |p| p[1],
        |p| p[0],
        |p| (1.0 - p[0] - p[1]) / std::f64::consts::SQRT_2,
    ];
    let mut best: f64 = 0.0;
    for d in dists {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| d(&nodes[a]).total_cmp(&d(&nodes[b])).then(a.cmp(&b)));
        let w = idx[..half].iter().map(|&i| weights[i]).fold(0.0, f64::max);
        best = best.max(w);
    }
    best
}

/// Vioreanu-Rokhlin rule together with its values-to-coefficients matrix.
#[derive(Clone, Debug)]
pub struct InterpRule {
    pub rule: Arc<QuadRule>,
    pub basis: KoornwinderBasis,
    /// Koornwinder Vandermonde, `vandermonde[(i, j)] = K_j(node_i)`.
    pub vandermonde: DMatrix<f64>,
    /// Inverse of the Vandermonde matrix.
    pub values_to_coeffs: DMatrix<f64>,
    /// 2-norm condition number of the Vandermonde matrix.
    pub condition: f64,
}

impl InterpRule {
    pub fn from_rule(rule: Arc<QuadRule>) -> Result<Self> {
        if rule.len() != dim(rule.order) {
            return Err(Error::InvalidRule(format!(
                "interpolation rule length {} differs from {}",
                rule.len(),
                dim(rule.order)
            )));
        }
        let basis = KoornwinderBasis::new(rule.order);
        let n = rule.len();
        let mut v = DMatrix::zeros(n, n);
        let mut row = vec![0.0; n];
        for (i, p) in rule.nodes.iter().enumerate() {
            basis.eval_into(p[0], p[1], &mut row);
            for j in 0..n {
                v[(i, j)] = row[j];
            }
        }
        let sv = v.clone().singular_values();
        let smax = sv.max();
        let smin = sv.min();
        if !(smin > 0.0) {
            return Err(Error::SingularSystem);
        }
        let inv = v.clone().try_inverse().ok_or(Error::SingularSystem)?;
        Ok(InterpRule {
            rule,
            basis,
            vandermonde: v,
            values_to_coeffs: inv,
            condition: smax / smin,
        })
    }

    /// Shipped Vioreanu-Rokhlin rule of the given order, cached process-wide.
    pub fn builtin(order: usize) -> Result<Arc<InterpRule>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<InterpRule>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        if let Some(r) = cache.lock().expect("interp cache poisoned").get(&order) {
            return Ok(r.clone());
        }
        let rule = Arc::new(Self::from_rule(QuadRule::builtin(
            RuleKind::VioreanuRokhlin,
            order,
        )?)?);
        cache
            .lock()
            .expect("interp cache poisoned")
            .insert(order, rule.clone());
        Ok(rule)
    }

    pub fn order(&self) -> usize {
        self.rule.order
    }

    pub fn len(&self) -> usize {
        self.rule.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rule.is_empty()
    }

    /// Koornwinder coefficients of the interpolant through `values`.
    pub fn coefficients(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.len() {
            return Err(Error::InvalidArgument(format!(
                "expected {} nodal values, got {}",
                self.len(),
                values.len()
            )));
        }
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = 0.0;
            for j in 0..n {
                acc += self.values_to_coeffs[(i, j)] * values[j];
            }
            *o = acc;
        }
        Ok(out)
    }

    /// Evaluates a coefficient vector at a reference point.
    pub fn evaluate(&self, coeffs: &[f64], x: f64, y: f64) -> f64 {
        let mut vals = vec![0.0; self.len()];
        self.basis.eval_into(x, y, &mut vals);
        vals.iter().zip(coeffs).map(|(a, b)| a * b).sum()
    }
}
