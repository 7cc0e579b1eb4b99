//! Numerical laboratory for conformal Ricci flow on radially symmetric
//! cone surfaces.
//!
//! A metric on the punctured unit disc is written as g = e^{2u(r)} |dz|²
//! with a radial conformal factor u. A cone of angle α = 2π(β+1) carries
//! the factor u₀ = w(r) + β ln r with bounded w and β ∈ (−1, 0]. The crate
//! provides:
//!
//! * model geometries and discrete Gauss curvature ([`metric`]),
//! * smoothed-min truncations u_k that cap the apex at height k
//!   ([`truncation`]),
//! * an upper barrier built from a sphere cap glued into a hyperbolic
//!   cone, with the collapse rate λ̄(t) ([`barrier`]),
//! * a finite-difference solver for ∂u/∂t = e^{−2u} Δu ([`solver`]),
//! * experiment drivers that assemble the pieces into limit, decay and
//!   uniqueness studies ([`experiments`]),
//! * config handling and deterministic CSV/JSON output ([`config`], [`io`]).
//!
//! All grids are uniform in r. All published numbers are deterministic:
//! re-running from a resolved config reproduces byte-identical files.

pub mod barrier;
pub mod config;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod metric;
pub mod solver;
pub mod truncation;

pub use error::{Error, Result};
pub use grid::RadialGrid;
pub use metric::{ConeData, CurvatureProfile, Profile};
