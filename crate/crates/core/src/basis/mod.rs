//! Koornwinder basis, tabulated simplex rules and the radial singular rule.

pub mod gauss;
pub mod ggq;
pub mod koornwinder;
pub mod rules;

pub use gauss::GaussLegendre;
pub use ggq::RadialGgq;
pub use koornwinder::{Jet2, KoornwinderBasis};
pub use rules::{InterpRule, QuadRule, RuleKind};
