//! Experiment drivers: the monotone smoothening limit, the logarithmic
//! decay law, the two-schedule uniqueness squeeze, and solver
//! qualification against closed-form flows.
//!
//! The discrete "limit flow" is the deepest truncation level together
//! with Cauchy certificates between consecutive levels; no
//! extrapolation is performed. One practical caveat shapes several
//! checks below: once a cap's containment radius e^{(k−1−sup w)/β}
//! falls under the grid spacing, the cap survives only as an apex-node
//! plateau, geometrically a flat disc of geodesic radius ≈ e^k h. The
//! plateau relaxes on the grid time scale h²e^{2k} rather than the
//! continuum one, and the surplus conformal area it carries (≈ h²e^{2k})
//! then rides the flow as a bump of height ≈ h²e^{2k}/t on top of the
//! deficit ≈ e^{−2(k−1)}/t left by the area the cap removed. Probe
//! windows therefore sit past the relaxation, and schedule depths are
//! balanced against resolution so both terms stay under the stated
//! tolerances.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;

use crate::barrier::BarrierSpec;
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::metric::{eval_hyperbolic_cone, eval_sphere, ConeData, Profile};
use crate::solver::{
    compare_flows, evolve, parabolic_rescale, BoundarySpec, FlowResult, Scheme, SolverParams,
};
use crate::truncation::{truncate, TruncationSequence};

/// Worker pool for level runs, sized by `CONE_RICCI_THREADS` (unset or
/// 0 picks one thread per core).
pub fn thread_pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let threads = std::env::var("CONE_RICCI_THREADS")
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .unwrap_or(0);
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .expect("worker pool construction cannot fail with these settings")
    })
}

/// Shared inputs of the experiment drivers: the cone, the cap levels,
/// integration controls, and the probe times at which claims are
/// checked.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    cone: ConeData,
    levels: Vec<f64>,
    solver: SolverParams,
    time_samples: Vec<f64>,
}

impl ExperimentConfig {
    pub fn new(
        cone: ConeData,
        levels: Vec<f64>,
        solver: SolverParams,
        time_samples: Vec<f64>,
    ) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::parameter("need at least one cap level"));
        }
        if levels.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::parameter("cap levels must be strictly increasing"));
        }
        if time_samples.is_empty() {
            return Err(Error::parameter("need at least one probe time"));
        }
        if time_samples.windows(2).any(|p| !(p[1] > p[0])) {
            return Err(Error::parameter("probe times must be strictly increasing"));
        }
        let t_end = solver.t_end;
        if time_samples[0] <= 0.0 || *time_samples.last().unwrap() > t_end {
            return Err(Error::parameter(format!(
                "probe times must lie in (0, {t_end}], got {:?}",
                (time_samples[0], *time_samples.last().unwrap())
            )));
        }
        Ok(ExperimentConfig {
            cone,
            levels,
            solver,
            time_samples,
        })
    }

    pub fn cone(&self) -> &ConeData {
        &self.cone
    }

    pub fn grid(&self) -> &RadialGrid {
        self.cone.grid()
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn solver(&self) -> &SolverParams {
        &self.solver
    }

    pub fn time_samples(&self) -> &[f64] {
        &self.time_samples
    }
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&x, &y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// One level's run outcome inside a report.
#[derive(Debug, Clone, Serialize)]
pub struct LevelStatus {
    pub level: f64,
    pub ok: bool,
    pub note: String,
    /// max K over the whole run (reported as a trend across levels; no
    /// pass/fail stance is taken on curvature growth).
    pub max_curvature: f64,
}

/// Consecutive-level comparison.
#[derive(Debug, Clone, Serialize)]
pub struct PairCheck {
    pub lower: f64,
    pub upper: f64,
    /// min over matched times and nodes of u_upper − u_lower.
    pub ordering_margin: f64,
    pub ordering_pass: bool,
    /// max over probe-window times of sup |u_upper − u_lower|.
    pub cauchy_gap: f64,
    /// max gap on the outermost quartile of nodes for stored t ≤ 0.01.
    pub early_outer_gap: f64,
}

/// Least-squares fit of sup_r u against ln t.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    pub slope: f64,
    pub intercept: f64,
    pub target: f64,
    pub window: (f64, f64),
    pub samples: usize,
}

/// Outcome of the monotone-limit experiment.
#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub beta: f64,
    pub levels: Vec<f64>,
    pub degenerate: bool,
    pub level_status: Vec<LevelStatus>,
    pub pairs: Vec<PairCheck>,
    pub monotone_pass: bool,
    /// Gap between the two deepest levels over t ≥ the first probe time.
    pub cauchy_gap: f64,
    pub cauchy_pass: bool,
    pub agreement_pass: bool,
    pub floor_initial: f64,
    pub floor_worst: f64,
    pub floor_pass: bool,
    pub barrier_b: Option<f64>,
    pub barrier_c: Option<f64>,
    /// max over levels and probe times of sup_r u − (B + slope ln t).
    pub sup_excess: f64,
    pub sup_pass: bool,
    pub decay: Option<DecayFit>,
    pub tol: f64,
    pub pass: bool,
}

fn run_level_flows(
    seq: &TruncationSequence,
    solver: &SolverParams,
) -> (Vec<Option<FlowResult>>, Vec<LevelStatus>) {
    let runs: Vec<Result<FlowResult>> = thread_pool().install(|| {
        seq.profiles()
            .par_iter()
            .map(|p| evolve(p, solver))
            .collect()
    });
    let mut flows = Vec::with_capacity(runs.len());
    let mut status = Vec::with_capacity(runs.len());
    for (run, &level) in runs.into_iter().zip(seq.levels()) {
        match run {
            Ok(f) if f.is_complete() => {
                status.push(LevelStatus {
                    level,
                    ok: true,
                    note: String::from("completed"),
                    max_curvature: f.diagnostics.iter().map(|d| d.max_k).fold(f64::MIN, f64::max),
                });
                flows.push(Some(f));
            }
            Ok(f) => {
                status.push(LevelStatus {
                    level,
                    ok: false,
                    note: format!("stopped early: {:?}", f.stop),
                    max_curvature: f.diagnostics.iter().map(|d| d.max_k).fold(f64::MIN, f64::max),
                });
                flows.push(Some(f));
            }
            Err(e) => {
                status.push(LevelStatus {
                    level,
                    ok: false,
                    note: e.to_string(),
                    max_curvature: f64::NAN,
                });
                flows.push(None);
            }
        }
    }
    (flows, status)
}

/// max over stored times of `hi` in [t_lo, t_hi] of the nodewise sup
/// distance to `lo`, with `lo` linearly interpolated in time.
fn sup_gap_over_window(
    lo: &FlowResult,
    hi: &FlowResult,
    window: (f64, f64),
    node_range: impl Fn(usize) -> bool,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for (m, &t) in hi.times.iter().enumerate() {
        if t < window.0 || t > window.1 || t > lo.final_time() {
            continue;
        }
        let a = lo.interpolate(t)?;
        for (i, (&x, &y)) in a.u().iter().zip(hi.profiles[m].u()).enumerate() {
            if node_range(i) {
                worst = worst.max((y - x).abs());
            }
        }
    }
    Ok(worst)
}

/// Builds the truncation sequence, flows every level, and certifies the
/// monotone-limit structure: nodewise ordering in k, Cauchy gaps, the
/// curvature floor, and the barrier's sup bound at the probe times.
pub fn run_smoothening(config: &ExperimentConfig) -> Result<LimitReport> {
    let seq = TruncationSequence::from_levels(config.cone.clone(), config.levels.clone())?;
    let beta = config.cone.beta();
    let (flows, level_status) = run_level_flows(&seq, &config.solver);

    let h = config.grid().spacing();
    let dt_max = flows
        .iter()
        .flatten()
        .map(|f| f.max_step_dt())
        .fold(0.0, f64::max);
    let tol = 10.0 * (h * h + dt_max);
    let probe_lo = config.time_samples[0];
    let t_end = config.solver.t_end;

    let mut pairs = Vec::new();
    let mut monotone_pass = true;
    let mut agreement_pass = true;
    let n = config.grid().n();
    for j in 0..flows.len().saturating_sub(1) {
        let (Some(lo), Some(hi)) = (&flows[j], &flows[j + 1]) else {
            monotone_pass = false;
            continue;
        };
        let ordering = compare_flows(lo, hi)?;
        monotone_pass &= ordering.pass;
        let cauchy = sup_gap_over_window(lo, hi, (probe_lo, t_end), |_| true)?;
        let early = sup_gap_over_window(lo, hi, (f64::MIN_POSITIVE, 0.01), |i| i >= 3 * n / 4)?;
        agreement_pass &= early <= 10.0 * tol;
        // Initial profiles must coincide bitwise outside the lower cap.
        let radius = seq.support_radii()[j];
        for i in 0..n {
            if config.grid().node(i) > radius
                && lo.profiles[0].u_at(i) != hi.profiles[0].u_at(i)
            {
                agreement_pass = false;
            }
        }
        pairs.push(PairCheck {
            lower: seq.levels()[j],
            upper: seq.levels()[j + 1],
            ordering_margin: ordering.worst_margin,
            ordering_pass: ordering.pass,
            cauchy_gap: cauchy,
            early_outer_gap: early,
        });
    }
    monotone_pass &= level_status.iter().all(|s| s.ok);

    let cauchy_gap = pairs.last().map_or(f64::NAN, |p| p.cauchy_gap);
    let cauchy_pass = pairs.last().is_some_and(|p| p.cauchy_gap <= 1e-3);

    let live: Vec<&FlowResult> = flows.iter().flatten().collect();
    let floor_initial = live
        .iter()
        .map(|f| f.diagnostics[0].min_k)
        .fold(f64::INFINITY, f64::min);
    let floor_worst = live
        .iter()
        .flat_map(|f| f.diagnostics.iter().map(|d| d.min_k))
        .fold(f64::INFINITY, f64::min);
    let floor_pass = !live.is_empty() && floor_worst >= floor_initial - tol;

    // Apex decay envelope from the barrier. The smooth β = 0 disc has
    // no barrier and nothing to bound.
    let (barrier_b, barrier_c, sup_excess, sup_pass) = if seq.degenerate() {
        (None, None, f64::NEG_INFINITY, true)
    } else {
        let window = ((probe_lo * 1e-2).max(1e-12), t_end);
        let spec = BarrierSpec::calibrated_for(beta, config.cone.sup_w(), window)?;
        let mut excess = f64::NEG_INFINITY;
        for f in &live {
            for &ts in &config.time_samples {
                if ts > f.final_time() {
                    continue;
                }
                let sup = f.interpolate(ts)?.sup();
                excess = excess.max(sup - (spec.b() + spec.slope() * ts.ln()));
            }
        }
        (Some(spec.b()), Some(spec.c()), excess, excess <= tol)
    };

    // Affine-in-ln-t fit of the deepest level's maximum over the probe
    // window, reported alongside the structural checks.
    let decay = live.last().and_then(|f| {
        let window = (probe_lo, *config.time_samples.last().unwrap());
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (m, &t) in f.times.iter().enumerate() {
            if t >= window.0 && t <= window.1 {
                xs.push(t.ln());
                ys.push(f.diagnostics[m].sup_u);
            }
        }
        if xs.len() < 3 {
            return None;
        }
        let (slope, intercept) = linear_fit(&xs, &ys);
        Some(DecayFit {
            slope,
            intercept,
            target: beta / (2.0 * (beta + 1.0)),
            window,
            samples: xs.len(),
        })
    });

    let pass = monotone_pass
        && cauchy_pass
        && agreement_pass
        && floor_pass
        && sup_pass
        && level_status.iter().all(|s| s.ok);
    Ok(LimitReport {
        beta,
        levels: config.levels.clone(),
        degenerate: seq.degenerate(),
        level_status,
        pairs,
        monotone_pass,
        cauchy_gap,
        cauchy_pass,
        agreement_pass,
        floor_initial,
        floor_worst,
        floor_pass,
        barrier_b,
        barrier_c,
        sup_excess,
        sup_pass,
        decay,
        tol,
        pass,
    })
}

/// Outcome of the decay-rate experiment.
#[derive(Debug, Clone, Serialize)]
pub struct DecayReport {
    pub beta: f64,
    pub level: f64,
    pub rerun_level: f64,
    pub window: (f64, f64),
    pub fit: DecayFit,
    pub slope_pass: bool,
    pub rerun_slope: f64,
    pub slope_shift: f64,
    /// Set when deepening the cap by 2 moves the fitted slope by 0.05
    /// or more: the window was measuring the cap, not the decay law.
    pub cap_limited: bool,
    pub barrier_b: f64,
    pub barrier_c: f64,
    /// max over the window of (sup_r u − slope_target · ln t) − B.
    pub bound_excess: f64,
    pub bound_pass: bool,
    pub pass: bool,
}

fn decay_flow(cone: &ConeData, level: f64, solver: &SolverParams) -> Result<FlowResult> {
    let initial = truncate(cone, level)?;
    let flow = evolve(&initial, solver)?;
    if !flow.is_complete() {
        return Err(Error::domain(format!(
            "decay run at level {level} stopped early: {:?}",
            flow.stop
        )));
    }
    Ok(flow)
}

fn fit_sup_decay(flow: &FlowResult, window: (f64, f64)) -> Result<(f64, f64, usize)> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (m, &t) in flow.times.iter().enumerate() {
        if t >= window.0 && t <= window.1 {
            xs.push(t.ln());
            ys.push(flow.diagnostics[m].sup_u);
        }
    }
    if xs.len() < 8 {
        return Err(Error::parameter(format!(
            "only {} stored instants in the fit window {window:?}",
            xs.len()
        )));
    }
    let (slope, intercept) = linear_fit(&xs, &ys);
    Ok((slope, intercept, xs.len()))
}

/// Fits sup_r u against ln t for the deepest level over the probe
/// window and compares the slope with β/(2(β+1)); a rerun two cap
/// levels deeper guards against fitting the cap instead of the law.
pub fn run_decay(config: &ExperimentConfig) -> Result<DecayReport> {
    let beta = config.cone.beta();
    let window = (
        config.time_samples[0],
        *config.time_samples.last().unwrap(),
    );
    if window.1 / window.0 < 1e2 {
        return Err(Error::parameter(format!(
            "decay window {window:?} spans less than two decades"
        )));
    }
    let level = *config.levels.last().unwrap();
    let target = beta / (2.0 * (beta + 1.0));

    let spec = BarrierSpec::calibrated_for(beta, config.cone.sup_w(), window)?;
    let bound_at_lo = spec.b() + spec.slope() * window.0.ln();
    if level < bound_at_lo + 0.5 {
        return Err(Error::parameter(format!(
            "cap level {level} saturates the decay bound {bound_at_lo:.3} at t = {}; \
             increase the truncation level",
            window.0
        )));
    }

    let flow = decay_flow(&config.cone, level, &config.solver)?;
    let (slope, intercept, samples) = fit_sup_decay(&flow, window)?;
    let mut bound_excess = f64::NEG_INFINITY;
    for (m, &t) in flow.times.iter().enumerate() {
        if t >= window.0 && t <= window.1 {
            bound_excess =
                bound_excess.max(flow.diagnostics[m].sup_u - target * t.ln() - spec.b());
        }
    }
    drop(flow);

    let rerun_level = level + 2.0;
    let rerun = decay_flow(&config.cone, rerun_level, &config.solver)?;
    let (rerun_slope, _, _) = fit_sup_decay(&rerun, window)?;
    drop(rerun);

    let slope_shift = (rerun_slope - slope).abs();
    let cap_limited = slope_shift >= 0.05;
    let slope_pass = (slope - target).abs() <= 0.10;
    let bound_pass = bound_excess <= 0.5;
    Ok(DecayReport {
        beta,
        level,
        rerun_level,
        window,
        fit: DecayFit {
            slope,
            intercept,
            target,
            window,
            samples,
        },
        slope_pass,
        rerun_slope,
        slope_shift,
        cap_limited,
        barrier_b: spec.b(),
        barrier_c: spec.c(),
        bound_excess,
        bound_pass,
        pass: slope_pass && !cap_limited && bound_pass,
    })
}

/// One rescaled-comparison outcome.
#[derive(Debug, Clone, Serialize)]
pub struct RescaleCheck {
    /// Which flow was rescaled and which it was compared against.
    pub direction: String,
    pub t0: f64,
    pub lambda: f64,
    /// max over window times and nodes of u_rescaled − u_other.
    pub worst_excess: f64,
    pub pass: bool,
}

/// Outcome of the two-schedule uniqueness experiment.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub beta: f64,
    pub schedule_a: Vec<f64>,
    pub schedule_b: Vec<f64>,
    pub window: (f64, f64),
    pub monotone_a: bool,
    pub monotone_b: bool,
    /// max over window times of sup_r |u_A − u_B| between the deepest
    /// levels.
    pub defect: f64,
    pub defect_pass: bool,
    /// Ordering margins of a strictly-below probe flow against each
    /// deepest flow.
    pub below_margin_a: f64,
    pub below_margin_b: f64,
    pub below_pass: bool,
    pub rescaled: Vec<RescaleCheck>,
    pub rescale_pass: bool,
    pub tol: f64,
    pub pass: bool,
}

fn schedule_flows(
    cone: &ConeData,
    levels: &[f64],
    solver: &SolverParams,
) -> Result<(Vec<FlowResult>, bool)> {
    let seq = TruncationSequence::from_levels(cone.clone(), levels.to_vec())?;
    let runs: Vec<Result<FlowResult>> = thread_pool().install(|| {
        seq.profiles()
            .par_iter()
            .map(|p| evolve(p, solver))
            .collect()
    });
    let mut flows = Vec::with_capacity(runs.len());
    for run in runs {
        let f = run?;
        if !f.is_complete() {
            return Err(Error::domain(format!(
                "schedule run stopped early: {:?}",
                f.stop
            )));
        }
        flows.push(f);
    }
    let mut monotone = true;
    for pair in flows.windows(2) {
        monotone &= compare_flows(&pair[0], &pair[1])?.pass;
    }
    Ok((flows, monotone))
}

/// Sup excess of `upper` over `base` on the window, `base` interpolated
/// at `upper`'s stored times.
fn ordering_excess(upper: &FlowResult, base: &FlowResult, window: (f64, f64)) -> Result<f64> {
    let mut worst = f64::NEG_INFINITY;
    let hi = window.1.min(upper.final_time()).min(base.final_time());
    for (m, &t) in upper.times.iter().enumerate() {
        if t < window.0 || t > hi {
            continue;
        }
        let b = base.interpolate(t)?;
        for (&y, &x) in upper.profiles[m].u().iter().zip(b.u()) {
            worst = worst.max(y - x);
        }
    }
    if worst == f64::NEG_INFINITY {
        return Err(Error::parameter(format!(
            "no stored times fall in the comparison window {window:?}"
        )));
    }
    Ok(worst)
}

/// Curvature floor magnitude Λ of a flow measured over the stored times
/// at or beyond `t_from`: the smallest Λ ≥ 0 with min_r K ≥ −Λ there.
///
/// The t = 0 snapshot is deliberately excluded when `t_from` > 0: a cap
/// whose containment radius sits under the grid spacing survives in the
/// initial data only as an apex-node spike whose raw stencil curvature
/// is a discretization artifact, orders of magnitude below the floor
/// the flow actually exhibits once the spike relaxes (within
/// O(h²e^{2k})). The squeeze argument needs the floor of the flow on
/// the window where the comparison happens.
fn floor_magnitude(f: &FlowResult, t_from: f64) -> f64 {
    f.diagnostics
        .iter()
        .filter(|d| d.t >= t_from)
        .map(|d| -d.min_k)
        .fold(0.0_f64, f64::max)
}

/// Compares the discrete limit flows of two distinct cap schedules: the
/// uniqueness defect sup |u_A − u_B| over the probe window, a
/// strictly-below probe flow squeezed under both, and the
/// rescaled-comparison checks of the squeeze argument at t₀ ∈
/// {1e−3, 1e−2}.
///
/// The rescaled flow σ(τ) = u(e^{2Λt₀}τ + t₀) − Λt₀ is compared over
/// the probe window, where both flows have shed the memory of their
/// caps; near τ = 0 the deeper schedule's cap still dominates the
/// shallower one and the nodewise ordering is genuinely false. Λ is
/// the measured curvature floor magnitude of the rescaled flow over
/// that same window (the floor the squeeze argument quantifies over),
/// not the t = 0 stencil reading, which a subgrid cap contaminates.
pub fn run_uniqueness(
    config: &ExperimentConfig,
    schedule_a: &[f64],
    schedule_b: &[f64],
) -> Result<UniquenessReport> {
    if schedule_a == schedule_b {
        return Err(Error::parameter(
            "identical truncation schedules make the comparison degenerate (defect 0)",
        ));
    }
    let beta = config.cone.beta();
    let window = (
        config.time_samples[0],
        *config.time_samples.last().unwrap(),
    );

    let (flows_a, monotone_a) = schedule_flows(&config.cone, schedule_a, &config.solver)?;
    let (flows_b, monotone_b) = schedule_flows(&config.cone, schedule_b, &config.solver)?;
    let deep_a = flows_a.last().unwrap();
    let deep_b = flows_b.last().unwrap();

    let h = config.grid().spacing();
    let dt_max = deep_a.max_step_dt().max(deep_b.max_step_dt());
    let tol = 10.0 * (h * h + dt_max);

    let defect = sup_gap_over_window(deep_b, deep_a, window, |_| true)?;
    let defect_pass = defect <= 1e-2;

    // A flow started strictly below the cone data stays below both
    // limit flows.
    let low = schedule_a[0].min(schedule_b[0]) - 0.5;
    let probe = truncate(&config.cone, low)?.shifted(-0.25);
    let probe_flow = evolve(&probe, &config.solver)?;
    let below_margin_a = ordering_excess(&probe_flow, deep_a, (0.0, config.solver.t_end))?;
    let below_margin_b = ordering_excess(&probe_flow, deep_b, (0.0, config.solver.t_end))?;
    let below_pass = below_margin_a <= tol && below_margin_b <= tol;
    drop(probe_flow);

    let mut rescaled = Vec::new();
    for &t0 in &[1e-3, 1e-2] {
        for (name, from, against) in [("a-under-b", deep_a, deep_b), ("b-under-a", deep_b, deep_a)]
        {
            let lambda = floor_magnitude(from, window.0);
            let sigma = parabolic_rescale(from, lambda, t0)?;
            let worst = ordering_excess(&sigma, against, window)?;
            rescaled.push(RescaleCheck {
                direction: String::from(name),
                t0,
                lambda,
                worst_excess: worst,
                pass: worst <= tol,
            });
        }
    }
    let rescale_pass = rescaled.iter().all(|c| c.pass);

    let pass = monotone_a && monotone_b && defect_pass && below_pass && rescale_pass;
    Ok(UniquenessReport {
        beta,
        schedule_a: schedule_a.to_vec(),
        schedule_b: schedule_b.to_vec(),
        window,
        monotone_a,
        monotone_b,
        defect,
        defect_pass,
        below_margin_a,
        below_margin_b,
        below_pass,
        rescaled,
        rescale_pass,
        tol,
        pass,
    })
}

/// Solver qualification against the closed-form flows.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub sphere_error: f64,
    pub sphere_pass: bool,
    pub hyperbolic_error: f64,
    pub hyperbolic_pass: bool,
    pub resolutions: Vec<usize>,
    pub orders: Vec<f64>,
    pub order_pass: bool,
    pub pass: bool,
}

fn sphere_exact(r: f64, t: f64) -> f64 {
    eval_sphere(r) + 0.5 * (1.0 - 2.0 * t).ln()
}

fn sphere_error(n: usize, t_end: f64, cfl: f64) -> Result<f64> {
    let grid = RadialGrid::new(0.0, 0.9, n)?;
    let initial = Profile::from_fn(grid, eval_sphere)?;
    let mut params = SolverParams::new(Scheme::Explicit, t_end);
    params.cfl = cfl;
    params.boundary = BoundarySpec::outer_trajectory(move |t| sphere_exact(0.9, t));
    let f = evolve(&initial, &params)?;
    let mut worst = 0.0_f64;
    for (m, &t) in f.times.iter().enumerate() {
        for (i, &u) in f.profiles[m].u().iter().enumerate() {
            worst = worst.max((u - sphere_exact(f.grid.node(i), t)).abs());
        }
    }
    Ok(worst)
}

fn hyperbolic_error(beta: f64, n: usize, t_end: f64, cfl: f64) -> Result<f64> {
    let exact = move |r: f64, t: f64| {
        eval_hyperbolic_cone(beta, r).expect("annulus radii stay inside the unit disc")
            + 0.5 * (1.0 + 2.0 * t).ln()
    };
    let grid = RadialGrid::new(0.1, 0.9, n)?;
    let initial = Profile::from_fn(grid, |r| exact(r, 0.0))?;
    let mut params = SolverParams::new(Scheme::Explicit, t_end);
    params.cfl = cfl;
    params.boundary = BoundarySpec::outer_trajectory(move |t| exact(0.9, t))
        .with_inner_trajectory(move |t| exact(0.1, t));
    let f = evolve(&initial, &params)?;
    let mut worst = 0.0_f64;
    for (m, &t) in f.times.iter().enumerate() {
        for (i, &u) in f.profiles[m].u().iter().enumerate() {
            worst = worst.max((u - exact(f.grid.node(i), t)).abs());
        }
    }
    Ok(worst)
}

/// Runs the shrinking-sphere and expanding-hyperbolic-cone oracles and
/// measures the convergence order under grid doubling (dt is slaved to
/// h², so the combined order is 2 in h).
pub fn run_exact_validation(config: &ExperimentConfig) -> Result<ValidationReport> {
    let cfl = config.solver.cfl;
    let sphere = sphere_error(512, 0.2, cfl)?;
    let hyperbolic = hyperbolic_error(-0.5, 512, 0.5, cfl)?;

    let resolutions = vec![128, 256, 512];
    let errs: Vec<Result<f64>> = thread_pool().install(|| {
        resolutions
            .par_iter()
            .map(|&n| sphere_error(n, 0.05, cfl))
            .collect()
    });
    let errs = errs.into_iter().collect::<Result<Vec<f64>>>()?;
    let orders: Vec<f64> = errs.windows(2).map(|e| (e[0] / e[1]).log2()).collect();
    let order_pass = orders.iter().all(|&p| (1.8..=2.2).contains(&p));

    let sphere_pass = sphere <= 1e-3;
    let hyperbolic_pass = hyperbolic <= 1e-3;
    Ok(ValidationReport {
        sphere_error: sphere,
        sphere_pass,
        hyperbolic_error: hyperbolic,
        hyperbolic_pass,
        resolutions,
        orders,
        order_pass,
        pass: sphere_pass && hyperbolic_pass && order_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_config(n: usize, levels: Vec<f64>, t_end: f64, probes: Vec<f64>) -> ExperimentConfig {
        let grid = RadialGrid::new(0.0, 1.0, n).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        let solver = SolverParams::new(Scheme::SemiImplicit, t_end);
        ExperimentConfig::new(cone, levels, solver, probes).unwrap()
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let grid = RadialGrid::new(0.0, 1.0, 64).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        let solver = SolverParams::new(Scheme::SemiImplicit, 0.1);
        let bad = ExperimentConfig::new(cone.clone(), vec![3.0, 2.0], solver.clone(), vec![0.1]);
        assert!(bad.is_err(), "levels must increase");
        let bad = ExperimentConfig::new(cone.clone(), vec![2.0], solver.clone(), vec![]);
        assert!(bad.is_err(), "probes required");
        let bad = ExperimentConfig::new(cone, vec![2.0], solver, vec![0.2]);
        assert!(bad.is_err(), "probe beyond the horizon");
    }

    #[test]
    fn smoothening_certifies_the_monotone_limit() {
        // The deepest-pair gap has two sources: the conformal area the
        // caps remove (∝ e^{−2(k_lo−1)}/t) and the extra area a
        // grid-pinned apex plateau carries (∝ h²e^{2k_hi}/t). Levels
        // and resolution are chosen so both sit under the 1e-3
        // certificate at the first probe time.
        let config = flat_config(32768, vec![4.0, 5.0, 6.0], 0.25, vec![0.05, 0.1]);
        let report = run_smoothening(&config).unwrap();
        assert!(!report.degenerate);
        assert!(report.monotone_pass, "pairs: {:?}", report.pairs);
        assert!(report.cauchy_pass, "cauchy gap {}", report.cauchy_gap);
        assert!(report.agreement_pass);
        assert!(report.floor_pass, "floor {} → {}", report.floor_initial, report.floor_worst);
        assert!(report.sup_pass, "sup excess {}", report.sup_excess);
        assert!(report.pass);
        assert_eq!(report.pairs.len(), 2);
        for s in &report.level_status {
            assert!(s.max_curvature.is_finite() && s.max_curvature > 0.0);
        }
    }

    #[test]
    fn smoothening_flags_failed_levels_without_aborting() {
        let grid = RadialGrid::new(0.0, 1.0, 64).unwrap();
        let w = vec![-400.0; 64];
        let cone = ConeData::new(-0.5, grid, w).unwrap();
        let solver = SolverParams::new(Scheme::Explicit, 0.05);
        let config =
            ExperimentConfig::new(cone, vec![-399.0, -398.0], solver, vec![0.05]).unwrap();
        let report = run_smoothening(&config).unwrap();
        assert!(!report.pass);
        assert!(report.level_status.iter().any(|s| !s.ok));
    }

    #[test]
    fn smoothening_reports_the_smooth_disc_as_degenerate() {
        let grid = RadialGrid::new(0.0, 1.0, 128).unwrap();
        let cone = ConeData::new(0.0, grid, vec![0.25; 128]).unwrap();
        let solver = SolverParams::new(Scheme::SemiImplicit, 0.05);
        let config = ExperimentConfig::new(cone, vec![2.0, 3.0], solver, vec![0.05]).unwrap();
        let report = run_smoothening(&config).unwrap();
        assert!(report.degenerate);
        assert!(report.barrier_b.is_none());
        assert!(report.pass, "degenerate family still orders trivially");
        assert!(report.cauchy_gap <= 1e-12, "identical levels, zero gap");
    }

    #[test]
    fn decay_window_narrower_than_two_decades_is_rejected() {
        let config = flat_config(256, vec![5.0], 0.2, vec![0.02, 0.2]);
        let err = run_decay(&config).unwrap_err().to_string();
        assert!(err.contains("two decades"), "got: {err}");
    }

    #[test]
    fn shallow_cap_saturating_the_bound_is_rejected() {
        // At t = 1e−3 the bound sits near 6.2; a level-3 cap cannot see
        // the decay law there.
        let mut probes = vec![1e-3];
        probes.push(0.2);
        let config = flat_config(256, vec![3.0], 0.2, probes);
        let err = run_decay(&config).unwrap_err().to_string();
        assert!(err.contains("increase the truncation level"), "got: {err}");
    }

    #[test]
    fn uniqueness_rejects_identical_schedules() {
        let config = flat_config(256, vec![2.0, 3.0], 0.25, vec![0.05, 0.2]);
        let err = run_uniqueness(&config, &[2.0, 3.0], &[2.0, 3.0]).unwrap_err();
        assert!(err.to_string().contains("identical"), "got: {err}");
    }

    #[test]
    fn uniqueness_squeezes_two_schedules_together() {
        let config = flat_config(8192, vec![3.0, 4.0], 0.25, vec![0.05, 0.2]);
        let report = run_uniqueness(&config, &[3.0, 4.0], &[3.5, 4.5]).unwrap();
        assert!(report.monotone_a && report.monotone_b);
        assert!(report.defect_pass, "defect {}", report.defect);
        assert!(
            report.below_pass,
            "below margins {} / {}",
            report.below_margin_a, report.below_margin_b
        );
        assert!(report.rescale_pass, "rescaled: {:?}", report.rescaled);
        assert!(report.pass);
        assert_eq!(report.rescaled.len(), 4);
    }

    #[test]
    fn exact_validation_qualifies_the_solver() {
        let config = flat_config(256, vec![2.0], 0.25, vec![0.25]);
        let report = run_exact_validation(&config).unwrap();
        assert!(report.sphere_pass, "sphere error {}", report.sphere_error);
        assert!(
            report.hyperbolic_pass,
            "hyperbolic error {}",
            report.hyperbolic_error
        );
        assert!(
            report.order_pass,
            "orders {:?} outside [1.8, 2.2]",
            report.orders
        );
        assert!(report.pass);
    }
}
