//! Numerical laboratory for least-weighted-perimeter bubble clusters in R³
//! with radial density `r^p`.
//!
//! The crate is organised bottom-up:
//!
//! - [`mesh`]: the multi-region triangulated surface complex, its topology
//!   queries and the local remeshing operations (refine, equiangulate,
//!   cleanup) plus OBJ export.
//! - [`density`]: the density `f(r) = r^p`, its logarithmic gradient, and the
//!   weighted area / weighted volume functionals with exact gradients.
//! - [`evolve`]: volume-constrained projected gradient descent with
//!   backtracking and Newton restoration of the volume constraints.
//! - [`shapes`]: analytic seeds (single, double, triple, chain), the exact
//!   standard double bubble, and adaptive-quadrature oracles on exact caps.
//! - [`analyze`]: junction angles, generalized mean curvature, origin contact
//!   distances and scaling checks.

pub mod analyze;
pub mod density;
pub mod evolve;
pub mod mesh;
pub mod shapes;

/// 3D vector / point type used throughout.
pub type Vec3 = nalgebra::Vector3<f64>;


pub use density::{Density, DensityError};

pub use mesh::{ClusterMesh, EdgeKey, Facet, FacetId, MeshError, Region, RegionId, VertexId};

pub use analyze::MetricsReport;
pub use evolve::{EvolveConfig, EvolveError, EvolveOutcome, EvolveTrace, StopReason};
pub use shapes::{BubbleSpec, DoubleBubbleGeometry, Placement, ShapeError, Topology};
