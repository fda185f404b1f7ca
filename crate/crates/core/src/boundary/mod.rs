//! Boundary curves, arc-length parametrization and the signed distance function.

pub mod arclength;
pub mod curves;
pub mod sdf;

pub use arclength::{ArcLengthCurve, Frame};
pub use curves::{Circle, Ellipse, HermiteSpline, ParamCurve, Reversed, Wobbly};
pub use sdf::{ClosestPoint, SdfModel};
