//! Built-in domains and a one-call path from boundary curves to a mesh.

use std::sync::Arc;

use crate::boundary::{
    ArcLengthCurve, Circle, Ellipse, HermiteSpline, ParamCurve, SdfModel, Wobbly,
};
use crate::error::{Error, Result};
use crate::geometry::pt;
use crate::mesher::{generate_with_report, MeshOptions, MeshReport, SizeField, TriMesh};

/// Tolerance for arc-length reparametrization of built-in curves.
pub const ARC_TOL: f64 = 1e-14;

/// Element size policy for [`Domain::mesh_with_report`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum Grading {
    #[default]
    Uniform,
    /// Curvature-driven size field; `a = None` uses its default scale.
    Curvature { a: Option<f64> },
}

#[derive(Clone, Debug)]
pub struct Domain {
    pub name: String,
    pub curves: Vec<Arc<ArcLengthCurve>>,
}

impl Domain {
    pub fn from_curve<C: ParamCurve + 'static>(name: &str, curve: C) -> Result<Self> {
        Ok(Domain {
            name: name.to_string(),
            curves: vec![Arc::new(ArcLengthCurve::new(curve, ARC_TOL)?)],
        })
    }

    pub fn unit_disk() -> Self {
        Self::from_curve(
            "circle",
            Circle {
                center: pt(0.0, 0.0),
                radius: 1.0,
            },
        )
        .expect("circle is closed")
    }

    /// (a cos θ, b sin θ).
    pub fn ellipse(a: f64, b: f64) -> Result<Self> {
        Self::from_curve(
            "ellipse",
            Ellipse {
                center: pt(0.0, 0.0),
                a,
                b,
            },
        )
    }

    /// r(θ) = 1 + 0.15 cos 5θ, stretched by 1.5 along x.
    pub fn wobbly() -> Self {
        Self::from_curve(
            "wobbly",
            Wobbly {
                center: pt(0.0, 0.0),
                a: 1.0,
                b: 0.15,
                k: 5.0,
                aspect: 1.5,
            },
        )
        .expect("wobbly curve is closed")
    }

    /// `circle`, `ellipse` (2 cos θ, sin θ) or `wobbly`.
    pub fn builtin(name: &str) -> Result<Self> {
        match name {
            "circle" | "disk" => Ok(Self::unit_disk()),
            "ellipse" => Self::ellipse(2.0, 1.0),
            "wobbly" => Ok(Self::wobbly()),
            other => Err(Error::InvalidArgument(format!(
                "unknown domain '{other}' (circle, ellipse, wobbly)"
            ))),
        }
    }

    /// Closed Hermite spline from `t x y dx dy` lines.
    pub fn spline(text: &str) -> Result<Self> {
        Self::from_curve("spline", HermiteSpline::parse(text)?)
    }

    /// Signed-distance model sampled at h0/4.
    pub fn sdf(&self, h0: f64) -> Result<SdfModel> {
        SdfModel::build(self.curves.clone(), 0.25 * h0)
    }

    pub fn mesh(&self, opts: &MeshOptions) -> Result<TriMesh> {
        Ok(self.mesh_with_report(opts, Grading::Uniform)?.0)
    }

    pub fn mesh_with_report(
        &self,
        opts: &MeshOptions,
        grading: Grading,
    ) -> Result<(TriMesh, MeshReport)> {
        if !(opts.h0 > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "h0 must be positive, got {}",
                opts.h0
            )));
        }
        let model = self.sdf(opts.h0)?;
        let size = match grading {
            Grading::Uniform => None,
            Grading::Curvature { a } => Some(SizeField::new(&model, a, opts.h0)?),
        };
        generate_with_report(&model, opts, size.as_ref())
    }
}
