//! Volume potential evaluation for the 2-D Laplace kernel on curved triangle meshes.

pub mod basis;
pub mod boundary;
pub mod domain;
pub mod element_map;
pub mod error;
pub mod fmm;
pub mod geometry;
pub mod mesher;
pub mod nearfield;
pub mod par;
pub mod pipeline;
pub mod poisson;
pub mod quadrature;
pub mod quadtree;

pub use error::{Error, Result};
pub use geometry::{Point, Rect};
pub use par::Execution;
