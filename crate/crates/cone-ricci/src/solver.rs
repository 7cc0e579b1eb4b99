//! Time integration of the radial conformal Ricci flow
//! ∂u/∂t = e^{−2u} Δu = −K on a disc or annulus chart.
//!
//! Two schemes share the spatial stencil of [`crate::metric`]:
//!
//! * explicit Euler with adaptive dt = cfl · h² · e^{2 min u}: the
//!   diffusion coefficient e^{−2u} peaks where u is smallest, and cfl ≤
//!   1/4 keeps the origin row of the update monotone;
//! * semi-implicit backward Euler with the coefficient frozen at the
//!   previous step, each step one tridiagonal solve. Unconditionally
//!   stable, so dt may grow like a fixed fraction of elapsed time, which
//!   turns decade-spanning runs from millions of steps into hundreds.
//!
//! Boundary rows are Dirichlet: frozen at their initial values or driven
//! by a caller-supplied trajectory (used to impose exact solutions). A
//! disc chart has no inner boundary, only the even-symmetry origin row.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::metric::{area, gauss_curvature, Profile};

/// Time discretization flavor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Forward Euler, dt ∝ h² e^{2 min u}.
    Explicit,
    /// Backward Euler with e^{−2u} frozen at the previous step,
    /// dt = cfl · max(h² e^{2 min u}, t/5).
    SemiImplicit,
}

/// One Dirichlet condition.
#[derive(Clone)]
pub enum BoundaryValue {
    /// Hold the initial value for all time.
    Fixed,
    /// Prescribed value as a function of t.
    Trajectory(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl BoundaryValue {
    fn at(&self, initial: f64, t: f64) -> f64 {
        match self {
            BoundaryValue::Fixed => initial,
            BoundaryValue::Trajectory(f) => f(t),
        }
    }

    fn is_fixed(&self) -> bool {
        matches!(self, BoundaryValue::Fixed)
    }
}

impl fmt::Debug for BoundaryValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundaryValue::Fixed => write!(f, "Fixed"),
            BoundaryValue::Trajectory(_) => write!(f, "Trajectory(..)"),
        }
    }
}

/// Dirichlet data for the chart. `inner` applies only to annuli
/// (r_min > 0); a disc keeps the symmetry condition at the origin.
#[derive(Debug, Clone)]
pub struct BoundarySpec {
    pub outer: BoundaryValue,
    pub inner: Option<BoundaryValue>,
}

impl BoundarySpec {
    pub fn fixed() -> Self {
        BoundarySpec {
            outer: BoundaryValue::Fixed,
            inner: None,
        }
    }

    pub fn outer_trajectory(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        BoundarySpec {
            outer: BoundaryValue::Trajectory(Arc::new(f)),
            inner: None,
        }
    }

    pub fn with_inner_trajectory(
        mut self,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        self.inner = Some(BoundaryValue::Trajectory(Arc::new(f)));
        self
    }

    pub fn with_fixed_inner(mut self) -> Self {
        self.inner = Some(BoundaryValue::Fixed);
        self
    }

    fn all_fixed(&self) -> bool {
        self.outer.is_fixed() && self.inner.as_ref().map_or(true, |b| b.is_fixed())
    }
}

/// Integration controls.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Step-size safety factor, in (0, 1/2].
    pub cfl: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    /// Snapshot stride in steps; 0 picks a geometric-in-t schedule that
    /// keeps a few hundred snapshots regardless of the step count.
    pub store_every: usize,
    pub boundary: BoundarySpec,
}

impl SolverParams {
    pub fn new(scheme: Scheme, t_end: f64) -> Self {
        SolverParams {
            cfl: 0.25,
            scheme,
            t_end,
            store_every: 0,
            boundary: BoundarySpec::fixed(),
        }
    }

    fn validate(&self, grid: &RadialGrid) -> Result<()> {
        if !(self.cfl > 0.0 && self.cfl <= 0.5) {
            return Err(Error::parameter(format!(
                "cfl must lie in (0, 0.5], got {}",
                self.cfl
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::parameter(format!(
                "t_end must be positive and finite, got {}",
                self.t_end
            )));
        }
        if grid.includes_origin() && self.boundary.inner.is_some() {
            return Err(Error::parameter(
                "a disc chart (r_min = 0) admits no inner boundary condition",
            ));
        }
        Ok(())
    }
}

/// Why a run stopped.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StopReason {
    Completed,
    /// dt shrank past representable progress; carries the profile
    /// minimum that throttled it.
    StepUnderflow { t: f64, min_u: f64 },
    NonFinite { t: f64 },
}

/// Per-snapshot scalars.
#[derive(Debug, Clone, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub dt: f64,
    pub sup_u: f64,
    pub inf_u: f64,
    pub min_k: f64,
    pub max_k: f64,
    pub area: f64,
    /// Discrete PDE defect against the next stored snapshot; None for
    /// the final one.
    pub residual: Option<f64>,
}

/// A completed (or flagged partial) flow run.
#[derive(Debug, Clone)]
pub struct FlowResult {
    pub params: SolverParams,
    pub grid: RadialGrid,
    pub times: Vec<f64>,
    pub profiles: Vec<Profile>,
    pub diagnostics: Vec<Diagnostics>,
    pub stop: StopReason,
    /// Set when the positive-curvature extinction guardrail shortened
    /// the horizon: 0.9 · initial area / 8π.
    pub capped_horizon: Option<f64>,
}

impl FlowResult {
    pub fn is_complete(&self) -> bool {
        self.stop == StopReason::Completed
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("a run stores at least t = 0")
    }

    /// Index of the stored instant nearest to t.
    pub fn nearest_index(&self, t: f64) -> usize {
        let mut best = 0;
        let mut gap = f64::INFINITY;
        for (m, &tm) in self.times.iter().enumerate() {
            let d = (tm - t).abs();
            if d < gap {
                gap = d;
                best = m;
            }
        }
        best
    }

    /// Largest integration step taken.
    pub fn max_step_dt(&self) -> f64 {
        self.diagnostics.iter().map(|d| d.dt).fold(0.0, f64::max)
    }

    /// Largest spacing between stored instants.
    pub fn max_stored_gap(&self) -> f64 {
        self.times.windows(2).map(|p| p[1] - p[0]).fold(0.0, f64::max)
    }

    /// Profile at time t by linear interpolation between snapshots.
    pub fn interpolate(&self, t: f64) -> Result<Profile> {
        let t_last = self.final_time();
        if !(0.0..=t_last).contains(&t) {
            return Err(Error::domain(format!(
                "time {t} outside the stored range [0, {t_last}]"
            )));
        }
        let j = match self.times.iter().position(|&tm| tm >= t) {
            Some(0) => return Ok(self.profiles[0].clone()),
            Some(j) => j,
            None => return Ok(self.profiles.last().unwrap().clone()),
        };
        let (ta, tb) = (self.times[j - 1], self.times[j]);
        if tb == t {
            return Ok(self.profiles[j].clone());
        }
        let th = (t - ta) / (tb - ta);
        let u = self.profiles[j - 1]
            .u()
            .iter()
            .zip(self.profiles[j].u())
            .map(|(&a, &b)| a * (1.0 - th) + b * th)
            .collect();
        Profile::new(self.grid.clone(), u)
    }
}

fn diagnostics_for(p: &Profile, t: f64, dt: f64) -> Diagnostics {
    let k = gauss_curvature(p);
    Diagnostics {
        t,
        dt,
        sup_u: p.sup(),
        inf_u: p.inf(),
        min_k: k.min(),
        max_k: k.max(),
        area: area(p),
        residual: None,
    }
}

/// Discrete defect sup_i |(u₁ − u₀)/dt − e^{−2u₀} Δu₀| over the stencil
/// nodes, of the pair (p0, p1) separated by dt.
fn defect_between(p0: &Profile, p1: &Profile, dt: f64) -> f64 {
    let grid = p0.grid();
    let h = grid.spacing();
    let n = grid.n();
    let u0 = p0.u();
    let u1 = p1.u();
    let mut worst = 0.0_f64;
    if grid.includes_origin() {
        let lap = 4.0 * (u0[1] - u0[0]) / (h * h);
        let d = (u1[0] - u0[0]) / dt - (-2.0 * u0[0]).exp() * lap;
        worst = worst.max(d.abs());
    }
    for i in 1..n - 1 {
        let r = grid.node(i);
        let lap = (u0[i + 1] - 2.0 * u0[i] + u0[i - 1]) / (h * h)
            + (u0[i + 1] - u0[i - 1]) / (2.0 * h * r);
        let d = (u1[i] - u0[i]) / dt - (-2.0 * u0[i]).exp() * lap;
        worst = worst.max(d.abs());
    }
    worst
}

/// Runs the flow from `initial` under `params`.
///
/// Snapshots always include t = 0 and the final instant. On dt underflow
/// or a non-finite update the partial result is returned with the reason
/// recorded, never a process abort. Strictly positively curved initial
/// data with fully frozen boundaries trips an extinction guardrail that
/// caps the horizon at 0.9 · area/(8π).
pub fn evolve(initial: &Profile, params: &SolverParams) -> Result<FlowResult> {
    let grid = initial.grid().clone();
    params.validate(&grid)?;
    let n = grid.n();
    let h = grid.spacing();

    let init_diag = diagnostics_for(initial, 0.0, 0.0);
    let mut capped_horizon = None;
    let mut t_end = params.t_end;
    if init_diag.min_k > 1e-9 && params.boundary.all_fixed() {
        let cap = 0.9 * init_diag.area / (8.0 * std::f64::consts::PI);
        if cap < t_end {
            t_end = cap;
            capped_horizon = Some(cap);
        }
    }

    let outer0 = initial.u_at(n - 1);
    let inner0 = initial.u_at(0);
    let inner_cond = if grid.includes_origin() {
        None
    } else {
        Some(params.boundary.inner.clone().unwrap_or(BoundaryValue::Fixed))
    };

    let mut u: Vec<f64> = initial.u().to_vec();
    let mut u_next = vec![0.0_f64; n];
    // Tridiagonal scratch space for the semi-implicit scheme.
    let mut sub = vec![0.0_f64; n];
    let mut diag = vec![0.0_f64; n];
    let mut sup = vec![0.0_f64; n];
    let mut rhs = vec![0.0_f64; n];

    let mut times = vec![0.0_f64];
    let mut profiles = vec![initial.clone()];
    let mut diagnostics = vec![init_diag];
    let mut stop = StopReason::Completed;

    let mut t = 0.0_f64;
    let mut step: usize = 0;
    let mut next_checkpoint = 0.0_f64;

    while t < t_end {
        let min_u = u.iter().cloned().fold(f64::INFINITY, f64::min);
        let parabolic = params.cfl * h * h * (2.0 * min_u).exp();
        let mut dt = match params.scheme {
            Scheme::Explicit => parabolic,
            Scheme::SemiImplicit => parabolic.max(params.cfl * 0.2 * t),
        };
        dt = dt.min(t_end - t);
        if !(dt > 0.0) || t + dt == t {
            stop = StopReason::StepUnderflow { t, min_u };
            break;
        }
        let t_new = t + dt;
        let outer_val = params.boundary.outer.at(outer0, t_new);
        let inner_val = inner_cond.as_ref().map(|b| b.at(inner0, t_new));

        match params.scheme {
            Scheme::Explicit => {
                if let Some(v) = inner_val {
                    u_next[0] = v;
                } else {
                    let lap = 4.0 * (u[1] - u[0]) / (h * h);
                    u_next[0] = u[0] + dt * (-2.0 * u[0]).exp() * lap;
                }
                for i in 1..n - 1 {
                    let r = grid.node(i);
                    let lap = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h)
                        + (u[i + 1] - u[i - 1]) / (2.0 * h * r);
                    u_next[i] = u[i] + dt * (-2.0 * u[i]).exp() * lap;
                }
                u_next[n - 1] = outer_val;
            }
            Scheme::SemiImplicit => {
                if let Some(v) = inner_val {
                    sub[0] = 0.0;
                    diag[0] = 1.0;
                    sup[0] = 0.0;
                    rhs[0] = v;
                } else {
                    let g = dt * (-2.0 * u[0]).exp() / (h * h);
                    sub[0] = 0.0;
                    diag[0] = 1.0 + 4.0 * g;
                    sup[0] = -4.0 * g;
                    rhs[0] = u[0];
                }
                for i in 1..n - 1 {
                    let r = grid.node(i);
                    let g = dt * (-2.0 * u[i]).exp() / (h * h);
                    let off = 0.5 * h / r;
                    sub[i] = -g * (1.0 - off);
                    diag[i] = 1.0 + 2.0 * g;
                    sup[i] = -g * (1.0 + off);
                    rhs[i] = u[i];
                }
                sub[n - 1] = 0.0;
                diag[n - 1] = 1.0;
                sup[n - 1] = 0.0;
                rhs[n - 1] = outer_val;
                // Thomas elimination, then back substitution.
                for i in 1..n {
                    let m = sub[i] / diag[i - 1];
                    diag[i] -= m * sup[i - 1];
                    rhs[i] -= m * rhs[i - 1];
                }
                u_next[n - 1] = rhs[n - 1] / diag[n - 1];
                for i in (0..n - 1).rev() {
                    u_next[i] = (rhs[i] - sup[i] * u_next[i + 1]) / diag[i];
                }
            }
        }

        if !u_next.iter().all(|v| v.is_finite()) {
            stop = StopReason::NonFinite { t: t_new };
            break;
        }
        std::mem::swap(&mut u, &mut u_next);
        t = t_new;
        step += 1;

        let due = if params.store_every > 0 {
            step % params.store_every == 0
        } else {
            t >= next_checkpoint
        };
        if due || t >= t_end {
            times.push(t);
            profiles.push(Profile::new(grid.clone(), u.clone())?);
            diagnostics.push(diagnostics_for(profiles.last().unwrap(), t, dt));
            if params.store_every == 0 {
                next_checkpoint = (t * 1.04).max(t + dt);
            }
        }
    }

    for m in 0..times.len() - 1 {
        let gap = times[m + 1] - times[m];
        diagnostics[m].residual = Some(defect_between(&profiles[m], &profiles[m + 1], gap));
    }

    Ok(FlowResult {
        params: params.clone(),
        grid,
        times,
        profiles,
        diagnostics,
        stop,
        capped_horizon,
    })
}

/// Nodewise ordering of two runs on the same grid.
#[derive(Debug, Clone, Serialize)]
pub struct OrderingReport {
    /// Matched snapshot pairs compared.
    pub pairs: usize,
    /// min over pairs and nodes of u_hi − u_lo.
    pub worst_margin: f64,
    pub worst_time: f64,
    pub worst_radius: f64,
    pub tol: f64,
    pub pass: bool,
}

/// Checks u_lo ≤ u_hi + tol at every matched stored time, tol =
/// 10(h² + dt). Snapshots pair up by nearest time within twice the
/// larger integration step.
pub fn compare_flows(lo: &FlowResult, hi: &FlowResult) -> Result<OrderingReport> {
    if !lo.grid.same_layout(&hi.grid) {
        return Err(Error::parameter(
            "flows live on different grids and cannot be compared",
        ));
    }
    let dt = lo.max_step_dt().max(hi.max_step_dt());
    let h = lo.grid.spacing();
    let tol = 10.0 * (h * h + dt);
    let window = 2.0 * dt + 1e-14;

    let mut pairs = 0;
    let mut worst = f64::INFINITY;
    let mut worst_time = 0.0;
    let mut worst_radius = 0.0;
    for (m, &tm) in lo.times.iter().enumerate() {
        let j = hi.nearest_index(tm);
        if (hi.times[j] - tm).abs() > window {
            continue;
        }
        pairs += 1;
        for (i, (&a, &b)) in lo.profiles[m].u().iter().zip(hi.profiles[j].u()).enumerate() {
            let margin = b - a;
            if margin < worst {
                worst = margin;
                worst_time = tm;
                worst_radius = lo.grid.node(i);
            }
        }
    }
    if pairs == 0 {
        return Err(Error::parameter(
            "flows share no stored times within the matching window",
        ));
    }
    Ok(OrderingReport {
        pairs,
        worst_margin: worst,
        worst_time,
        worst_radius,
        tol,
        pass: worst >= -tol,
    })
}

/// Curvature lower-bound preservation along one run.
#[derive(Debug, Clone, Serialize)]
pub struct FloorReport {
    /// Λ = max(0, −min K at t = 0).
    pub lambda: f64,
    /// min K per stored instant.
    pub series: Vec<f64>,
    pub tol: f64,
    pub pass: bool,
}

/// Extracts the min-K series and checks K ≥ −Λ − tol throughout, with Λ
/// read off the initial snapshot.
pub fn curvature_floor(f: &FlowResult) -> FloorReport {
    let series: Vec<f64> = f.diagnostics.iter().map(|d| d.min_k).collect();
    let lambda = (-series[0]).max(0.0);
    let h = f.grid.spacing();
    let tol = 10.0 * (h * h + f.max_step_dt());
    let pass = series.iter().all(|&k| k >= -lambda - tol);
    FloorReport {
        lambda,
        series,
        tol,
        pass,
    }
}

/// Parabolic rescaling u_σ(r, τ) = u(r, e^{2Λt₀} τ + t₀) − Λt₀.
///
/// The snapshot at t₀ comes from linear interpolation; later snapshots
/// are reused exactly with remapped times. Λ = 0, t₀ = 0 is the
/// identity.
pub fn parabolic_rescale(f: &FlowResult, lambda: f64, t0: f64) -> Result<FlowResult> {
    if !(lambda >= 0.0) {
        return Err(Error::parameter(format!(
            "rescaling rate must be nonnegative, got {lambda}"
        )));
    }
    let t_last = f.final_time();
    if !(0.0..t_last).contains(&t0) {
        return Err(Error::domain(format!(
            "rescale base time {t0} outside [0, {t_last})"
        )));
    }
    let c = (2.0 * lambda * t0).exp();
    let shift = -(lambda * t0);

    let mut times = vec![0.0];
    let mut profiles = vec![f.interpolate(t0)?.shifted(shift)];
    let mut dts = vec![0.0];
    for (m, &tm) in f.times.iter().enumerate() {
        if tm > t0 {
            times.push((tm - t0) / c);
            profiles.push(f.profiles[m].shifted(shift));
            dts.push(f.diagnostics[m].dt / c);
        }
    }
    let mut diagnostics: Vec<Diagnostics> = times
        .iter()
        .zip(&profiles)
        .zip(&dts)
        .map(|((&t, p), &dt)| diagnostics_for(p, t, dt))
        .collect();
    for m in 0..times.len() - 1 {
        let gap = times[m + 1] - times[m];
        diagnostics[m].residual = Some(defect_between(&profiles[m], &profiles[m + 1], gap));
    }

    let mut params = f.params.clone();
    params.t_end = (t_last - t0) / c;
    Ok(FlowResult {
        params,
        grid: f.grid.clone(),
        times,
        profiles,
        diagnostics,
        stop: f.stop.clone(),
        capped_horizon: f.capped_horizon.map(|v| ((v - t0) / c).max(0.0)),
    })
}

/// Discrete PDE defect of the stored pair (m, m+1), evaluated at t_m.
pub fn residual(f: &FlowResult, m: usize) -> Result<f64> {
    if m + 1 >= f.times.len() {
        return Err(Error::parameter(format!(
            "residual at index {m} needs a following snapshot ({} stored)",
            f.times.len()
        )));
    }
    let dt = f.times[m + 1] - f.times[m];
    Ok(defect_between(&f.profiles[m], &f.profiles[m + 1], dt))
}
