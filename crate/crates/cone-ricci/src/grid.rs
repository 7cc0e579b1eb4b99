//! Uniform radial grids on [r_min, r_max].
//!
//! Every discrete object in the crate lives on a [`RadialGrid`]. Grids are
//! uniform by construction: node i sits at r_min + i·h, except the last
//! node which is pinned to r_max so both endpoints are exact. Resolution
//! studies use plain node-count doubling; non-uniform refinement is out of
//! scope.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible node count. Below this the interior stencil has too
/// few points to say anything about curvature.
pub const MIN_NODES: usize = 16;

/// A uniform grid of `n` nodes spanning `[r_min, r_max]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialGrid {
    r_min: f64,
    r_max: f64,
    n: usize,
    spacing: f64,
    nodes: Vec<f64>,
}

impl RadialGrid {
    /// Builds a uniform grid. Requires finite bounds, 0 ≤ r_min < r_max
    /// and n ≥ [`MIN_NODES`].
    pub fn new(r_min: f64, r_max: f64, n: usize) -> Result<Self> {
        if !r_min.is_finite() || !r_max.is_finite() {
            return Err(Error::parameter("grid bounds must be finite"));
        }
        if r_min < 0.0 {
            return Err(Error::parameter(format!(
                "r_min = {r_min} is negative; the radial chart starts at 0"
            )));
        }
        if r_min >= r_max {
            return Err(Error::parameter(format!(
                "grid bounds must satisfy r_min < r_max (got [{r_min}, {r_max}])"
            )));
        }
        if n < MIN_NODES {
            return Err(Error::parameter(format!(
                "grid needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        let spacing = (r_max - r_min) / (n - 1) as f64;
        let mut nodes: Vec<f64> = (0..n).map(|i| r_min + i as f64 * spacing).collect();
        nodes[n - 1] = r_max;
        Ok(RadialGrid {
            r_min,
            r_max,
            n,
            spacing,
            nodes,
        })
    }

    pub fn r_min(&self) -> f64 {
        self.r_min
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// True when the grid starts at the apex r = 0, where cone factors are
    /// singular and the Laplacian needs the even-symmetry stencil.
    pub fn includes_origin(&self) -> bool {
        self.r_min == 0.0
    }

    /// Indices strictly between the boundary nodes.
    pub fn interior(&self) -> std::ops::Range<usize> {
        1..self.n - 1
    }

    /// Largest index i with node(i) ≤ r, for interpolation. Requires r in
    /// [r_min, r_max].
    pub fn bracket(&self, r: f64) -> Result<usize> {
        if !(self.r_min..=self.r_max).contains(&r) {
            return Err(Error::domain(format!(
                "r = {r} outside grid [{}, {}]",
                self.r_min, self.r_max
            )));
        }
        let raw = ((r - self.r_min) / self.spacing).floor() as usize;
        Ok(raw.min(self.n - 2))
    }

    /// Grids are interchangeable when bounds and node count agree exactly.
    pub fn same_layout(&self, other: &RadialGrid) -> bool {
        self.n == other.n && self.r_min == other.r_min && self.r_max == other.r_max
    }
}
