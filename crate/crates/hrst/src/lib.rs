//! Radial Spanning Tree on a Poisson point process in hyperbolic space.
//!
//! The crate builds the tree exactly inside a finite ball, computes
//! angular-deviation functionals (CFD/MBD, traces at a finite horizon) along
//! the arc representation of edges, and runs seeded Monte Carlo experiments
//! that check the model's quantitative behavior at desk scale.
//!
//! Module overview:
//! - `hypgeom`: polar-coordinate geometry, volumes, caps, regions, the
//!   Poincaré-ball embedding and Monte Carlo region volumes.
//! - `ppp`: homogeneous Poisson samples in balls/regions with replayable
//!   per-stream RNG provenance.
//! - `rst`: the ancestor rule, tree construction with pruned nearest search,
//!   descendant/path queries, planarity and straightness diagnostics.
//! - `arcs`: the radius-affine arc parameterization of edges, sphere
//!   crossings and level sets with multiplicity.
//! - `deviations`: cumulative/maximal angular deviations and finite-horizon
//!   trace estimates.
//! - `covering`: sphere coverings with bounded overlap, the block
//!   decomposition, bad-block detection and components.
//! - `experiments`: the replication harness and the individual experiments.
//! - `render`: deterministic SVG rendering in the Poincaré disc.
//! - `stats`: confidence intervals, regression and rank tests used by
//!   experiments and the verification suites.

pub mod arcs;
pub mod covering;
pub mod deviations;
pub mod error;
pub mod experiments;
pub mod hypgeom;
pub mod ppp;
pub mod render;
pub mod rst;
pub mod stats;

pub use error::{Error, Result};
pub use hypgeom::HPoint;
pub use ppp::{PointCloud, SeedDescriptor};
pub use rst::RadialTree;
