//! Radial conformal metrics g = e^{2u(r)} |dz|² and model geometries.
//!
//! Three closed-form factors anchor everything else:
//!
//! * flat cone      v₀(r) = ln(2(β+1)) + β ln r            (K ≡ 0)
//! * hyperbolic cone v₁(r) = v₀(r) − ln(1 − r^{2(β+1)})     (K ≡ −1)
//! * sphere          s(r) = ln 2 − ln(1 + r²)               (K ≡ +1)
//!
//! The cone angle at the apex is α = 2π(β+1) with β ∈ (−1, 0]. A general
//! cone is stored in split form u₀ = w(r) + β ln r: `w` is sampled on the
//! grid while the singular logarithm stays analytic, so truncation and
//! curvature bounds can treat the apex exactly instead of evaluating ln 0.
//!
//! Gauss curvature of a radial factor is K = −e^{−2u} Δu with
//! Δu = u″ + u′/r, discretized by second-order central differences. At
//! r = 0 even symmetry gives Δu(0) = 2u″(0), stencil 4(u₁ − u₀)/h².

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;

/// Flat-cone factor v₀(r) = ln(2(β+1)) + β ln r.
pub fn eval_flat_cone(beta: f64, r: f64) -> Result<f64> {
    check_beta(beta)?;
    if r <= 0.0 {
        return Err(Error::domain(format!(
            "flat cone factor needs r > 0, got {r}"
        )));
    }
    Ok((2.0 * (beta + 1.0)).ln() + beta * r.ln())
}

/// Hyperbolic-cone factor v₁(r) = v₀(r) − ln(1 − r^{2(β+1)}), the unique
/// K ≡ −1 metric with the same apex angle. Defined on 0 < r < 1.
pub fn eval_hyperbolic_cone(beta: f64, r: f64) -> Result<f64> {
    check_beta(beta)?;
    if r <= 0.0 || r >= 1.0 {
        return Err(Error::domain(format!(
            "hyperbolic cone factor needs 0 < r < 1, got {r}"
        )));
    }
    let a = 2.0 * (beta + 1.0);
    Ok((2.0 * (beta + 1.0)).ln() + beta * r.ln() - (1.0 - r.powf(a)).ln())
}

/// Sphere factor s(r) = ln(2/(1+r²)): the round unit sphere (K ≡ +1) in a
/// stereographic chart.
pub fn eval_sphere(r: f64) -> f64 {
    2.0_f64.ln() - r.mul_add(r, 1.0).ln()
}

/// Cone angle α = 2π(β+1) for β ∈ (−1, 0].
pub fn cone_angle(beta: f64) -> Result<f64> {
    check_beta(beta)?;
    Ok(2.0 * PI * (beta + 1.0))
}

/// Rejects exponents outside (−1, 0], the range where 2π(β+1) is a
/// positive angle no bigger than 2π.
pub fn check_beta(beta: f64) -> Result<()> {
    if !beta.is_finite() || beta <= -1.0 || beta > 0.0 {
        return Err(Error::parameter(format!(
            "cone exponent must satisfy −1 < β ≤ 0, got {beta}"
        )));
    }
    Ok(())
}

/// A cone metric in split form u₀ = w + β ln r on a fixed grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConeData {
    beta: f64,
    grid: RadialGrid,
    w: Vec<f64>,
}

impl ConeData {
    /// General cone from a sampled bounded part `w`.
    pub fn new(beta: f64, grid: RadialGrid, w: Vec<f64>) -> Result<Self> {
        check_beta(beta)?;
        if w.len() != grid.n() {
            return Err(Error::parameter(format!(
                "w has {} samples for a grid of {} nodes",
                w.len(),
                grid.n()
            )));
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::parameter("w must be finite at every node"));
        }
        Ok(ConeData { beta, grid, w })
    }

    /// Flat cone: w ≡ ln(2(β+1)).
    pub fn flat(beta: f64, grid: RadialGrid) -> Result<Self> {
        check_beta(beta)?;
        let w0 = (2.0 * (beta + 1.0)).ln();
        let w = vec![w0; grid.n()];
        ConeData::new(beta, grid, w)
    }

    /// Hyperbolic cone: w = ln(2(β+1)) − ln(1 − r^{2(β+1)}). Needs
    /// r_max < 1 since the factor blows up at the rim of the disc.
    pub fn hyperbolic(beta: f64, grid: RadialGrid) -> Result<Self> {
        check_beta(beta)?;
        if grid.r_max() >= 1.0 {
            return Err(Error::parameter(format!(
                "hyperbolic cone needs r_max < 1, got {}",
                grid.r_max()
            )));
        }
        let a = 2.0 * (beta + 1.0);
        let w0 = (2.0 * (beta + 1.0)).ln();
        let w = grid
            .nodes()
            .iter()
            .map(|&r| w0 - (1.0 - r.powf(a)).ln())
            .collect();
        ConeData::new(beta, grid, w)
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn w(&self) -> &[f64] {
        &self.w
    }

    pub fn sup_w(&self) -> f64 {
        self.w.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Full factor u₀ at node i; +∞ at the apex of a genuine cone (β < 0).
    pub fn u0_at(&self, i: usize) -> f64 {
        let r = self.grid.node(i);
        if r == 0.0 {
            if self.beta < 0.0 {
                f64::INFINITY
            } else {
                self.w[i]
            }
        } else {
            self.w[i] + self.beta * r.ln()
        }
    }
}

/// Raw cone factor samples. Unlike [`Profile`] the origin node of a β < 0
/// cone carries +∞: a sentinel that truncation maps to the cap height.
#[derive(Debug, Clone)]
pub struct ConeFactor {
    pub grid: RadialGrid,
    pub values: Vec<f64>,
}

/// Samples u₀ = w + β ln r on the cone's grid. Only the origin node may be
/// non-finite.
pub fn sample_cone(cone: &ConeData) -> ConeFactor {
    let values = (0..cone.grid().n()).map(|i| cone.u0_at(i)).collect();
    ConeFactor {
        grid: cone.grid().clone(),
        values,
    }
}

/// A finite conformal factor sampled on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    grid: RadialGrid,
    u: Vec<f64>,
}

impl Profile {
    pub fn new(grid: RadialGrid, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.n() {
            return Err(Error::parameter(format!(
                "profile has {} samples for a grid of {} nodes",
                u.len(),
                grid.n()
            )));
        }
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::parameter("profile values must be finite"));
        }
        Ok(Profile { grid, u })
    }

    pub fn from_fn(grid: RadialGrid, f: impl Fn(f64) -> f64) -> Result<Self> {
        let u = grid.nodes().iter().map(|&r| f(r)).collect();
        Profile::new(grid, u)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn u_at(&self, i: usize) -> f64 {
        self.u[i]
    }

    pub fn sup(&self) -> f64 {
        self.u.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn inf(&self) -> f64 {
        self.u.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// The conformally shifted factor u + c.
    pub fn shifted(&self, c: f64) -> Profile {
        Profile {
            grid: self.grid.clone(),
            u: self.u.iter().map(|v| v + c).collect(),
        }
    }
}

/// Discrete Gauss curvature at the nodes where the stencil is complete:
/// the interior nodes, plus the origin when the grid starts at 0.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvatureProfile {
    grid: RadialGrid,
    first: usize,
    k: Vec<f64>,
}

impl CurvatureProfile {
    /// Global index of the first node carrying a value.
    pub fn first_index(&self) -> usize {
        self.first
    }

    /// Global indices carrying values: contiguous, ending at n − 2.
    pub fn indices(&self) -> std::ops::Range<usize> {
        self.first..self.grid.n() - 1
    }

    /// Curvature at global node index i.
    pub fn value(&self, i: usize) -> f64 {
        self.k[i - self.first]
    }

    pub fn values(&self) -> &[f64] {
        &self.k
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn min(&self) -> f64 {
        self.k.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.k.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Radial Laplacian Δu = u″ + u′/r by central differences, at the same
/// node set as [`gauss_curvature`]. Exposed for residual checks.
pub fn radial_laplacian(p: &Profile) -> Vec<f64> {
    let grid = p.grid();
    let u = p.u();
    let h = grid.spacing();
    let n = grid.n();
    let first = if grid.includes_origin() { 0 } else { 1 };
    let mut out = Vec::with_capacity(n - 1 - first);
    if grid.includes_origin() {
        out.push(4.0 * (u[1] - u[0]) / (h * h));
    }
    for i in 1..n - 1 {
        let r = grid.node(i);
        let second = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        let slope = (u[i + 1] - u[i - 1]) / (2.0 * h);
        out.push(second + slope / r);
    }
    out
}

/// K = −e^{−2u} Δu at the computable nodes.
pub fn gauss_curvature(p: &Profile) -> CurvatureProfile {
    let grid = p.grid().clone();
    let first = if grid.includes_origin() { 0 } else { 1 };
    let lap = radial_laplacian(p);
    let k = lap
        .iter()
        .enumerate()
        .map(|(j, &l)| -(-2.0 * p.u_at(first + j)).exp() * l)
        .collect();
    CurvatureProfile { grid, first, k }
}

/// Metric area 2π ∫ e^{2u} r dr by the composite trapezoid rule, summed
/// left to right so reruns are bit-identical.
pub fn area(p: &Profile) -> f64 {
    let grid = p.grid();
    let h = grid.spacing();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(p.u())
        .map(|(&r, &u)| (2.0 * u).exp() * r)
        .collect();
    let mut sum = 0.0;
    for i in 0..f.len() - 1 {
        sum += 0.5 * (f[i] + f[i + 1]) * h;
    }
    2.0 * PI * sum
}

/// Circumference L(r) = 2π r e^{u(r)} of the metric circle of chart radius
/// r, with u linearly interpolated between nodes. Requires r > 0 inside
/// the grid span.
pub fn circumference(p: &Profile, r: f64) -> Result<f64> {
    if r <= 0.0 {
        return Err(Error::domain(format!("circumference needs r > 0, got {r}")));
    }
    let grid = p.grid();
    let i = grid.bracket(r)?;
    let t = (r - grid.node(i)) / grid.spacing();
    let u = p.u_at(i) * (1.0 - t) + p.u_at(i + 1) * t;
    Ok(2.0 * PI * r * u.exp())
}
