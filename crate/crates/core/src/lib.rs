//! Exact computation of the radius of convergence of p-adic differential
//! modules on discs and annuli, and discrete potential theory on finite
//! metrized graphs.
//!
//! All arithmetic is over big rationals. Logarithms are taken in base `p`
//! throughout, so a point `η_r` of the skeleton is addressed by the
//! rational coordinate `s = log_p r`, and `abs_log(p) = -1`.

pub mod diffmod;
pub mod graph;
pub mod laurent;
pub mod padic;
pub mod polygon;
pub mod rational;
pub mod suite;
pub mod tropical;

pub use diffmod::{DiffModule, Domain, PolyMatrix, RadiusEstimate, Triangulation};
pub use graph::{GraphPL, MetrizedGraph, PointMeasure};
pub use laurent::LaurentPoly;
pub use padic::{Prime, ValuedRational};
pub use polygon::PolygonReport;
pub use rational::Q;
pub use tropical::TropicalPL;
