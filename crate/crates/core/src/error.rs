use thiserror::Error;

/// Errors raised by mesh generation, quadrature and the evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty input")]
    EmptyInput,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("curve is not closed (gap {gap:.3e}, length {length:.6})")]
    NotClosed { gap: f64, length: f64 },
    #[error("mesh did not settle after {0} iterations")]
    MeshDidNotSettle(usize),
    #[error("mesh quality {quality:.3} of element {element} is below {threshold}")]
    PoorQuality {
        element: usize,
        quality: f64,
        threshold: f64,
    },
    #[error("boundary edge ({0}, {1}) has endpoints on different curves")]
    EdgeSpansCurves(usize, usize),
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("point ({0}, {1}) lies outside the standard simplex")]
    OutsideSimplex(f64, f64),
    #[error("quadrature rule rejected: {0}")]
    InvalidRule(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("uncalibrated order {0}")]
    UncalibratedOrder(usize),
    #[error("no shipped table for {kind} order {order}")]
    MissingRule { kind: &'static str, order: usize },
    #[error("Newton inversion did not converge (residual {0:.3e})")]
    InverseNotConverged(f64),
    #[error("target effectively on element boundary")]
    SubdivisionDepth,
    #[error("element violates monotonicity precondition")]
    NonMonotone,
    #[error("outside domain")]
    OutsideDomain,
    #[error("target at distance {distance:.3e} from the boundary is too close; increase n_b (current {n_b})")]
    TooCloseToBoundary { distance: f64, n_b: usize },
    #[error("singular linear system")]
    SingularSystem,
    #[error("generalized Gaussian rule did not converge (residual {0:.3e})")]
    GgqNotConverged(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
