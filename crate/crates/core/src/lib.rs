//! Numerical laboratory for Birkhoff sections of geodesic flows on
//! Riemannian two-spheres, the area-preserving strip maps they induce, and
//! the systolic inequalities `ℓ_min² ≤ π·Area ≤ ℓ_max²`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod birkhoff;
pub mod config;
pub mod error;
pub mod geodesic;
pub mod metric;
pub mod numerics;
pub mod report;
pub mod strip;
pub mod systolic;

pub use birkhoff::{BirkhoffGrid, BirkhoffSummary, Section};
pub use config::{OutputFormat, RunConfig};
pub use error::{Error, Result};
pub use metric::{CurvatureExtremes, MetricKind, MetricModel, SurfacePoint};
pub use numerics::ode::Tolerance;
pub use strip::{ActionGrid, FixedPoint, GeneratingGrid, StripGrid, StripMapGrid};
pub use systolic::{audit, AuditOptions, SystolicReport};
