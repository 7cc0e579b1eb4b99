//! Run configuration: one schema fed by TOML or JSON files plus
//! `--set key.path=value` overrides, validated up front, and echoed
//! back as `resolved_config.json` with every default materialized.
//!
//! The resolved form is the reproducibility record: re-feeding it
//! produces the identical resolved configuration, and its serialized
//! bytes name the run directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::ExperimentConfig;
use crate::grid::RadialGrid;
use crate::metric::{check_beta, ConeData};
use crate::solver::{BoundarySpec, BoundaryValue, Scheme, SolverParams};

/// Which model factor seeds the run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConeKind {
    Flat,
    Hyperbolic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub r_min: f64,
    pub r_max: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { r_min: 0.0, r_max: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub n: usize,
    pub cfl: f64,
    pub scheme: Scheme,
    pub t_end: f64,
    pub store_every: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            n: 2048,
            cfl: 0.25,
            scheme: Scheme::Explicit,
            t_end: 0.25,
            store_every: 0,
        }
    }
}

/// Only Dirichlet data frozen at the initial trace is expressible from
/// a file; time-dependent boundary trajectories exist solely in code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundaryKind {
    Fixed,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundaryConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner: Option<BoundaryKind>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TruncationConfig {
    pub levels: Vec<f64>,
}

impl Default for TruncationConfig {
    fn default() -> Self {
        TruncationConfig {
            levels: vec![2.0, 3.0, 4.0, 5.0, 6.0],
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeConfig {
    /// Times where limit certificates are evaluated. Empty picks six
    /// log-spaced points over [t_end/25, t_end].
    pub times: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessConfig {
    pub schedule_a: Vec<f64>,
    pub schedule_b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub beta: f64,
    #[serde(default = "default_kind")]
    pub kind: ConeKind,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub boundary: BoundaryConfig,
    #[serde(default)]
    pub truncation: TruncationConfig,
    #[serde(default)]
    pub probes: ProbeConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uniqueness: Option<UniquenessConfig>,
}

fn default_kind() -> ConeKind {
    ConeKind::Flat
}

fn increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|p| p[0] < p[1])
}

impl RunConfig {
    /// Semantic validation plus default materialization. Every message
    /// leads with the offending field path.
    pub fn validate(&mut self) -> Result<()> {
        if check_beta(self.beta).is_err() {
            return Err(Error::config(format!(
                "beta: cone exponent must satisfy −1 < β ≤ 0, got {}",
                self.beta
            )));
        }
        if !(self.grid.r_min >= 0.0 && self.grid.r_min < self.grid.r_max) {
            return Err(Error::config(format!(
                "grid: need 0 <= r_min < r_max, got [{}, {}]",
                self.grid.r_min, self.grid.r_max
            )));
        }
        if self.kind == ConeKind::Hyperbolic && self.grid.r_max >= 1.0 {
            return Err(Error::config(format!(
                "grid.r_max: the hyperbolic factor lives on r < 1, got {}",
                self.grid.r_max
            )));
        }
        if !(self.solver.cfl > 0.0 && self.solver.cfl <= 0.5) {
            return Err(Error::config(format!(
                "solver.cfl: safety factor must lie in (0, 1/2], got {}",
                self.solver.cfl
            )));
        }
        if !(self.solver.t_end > 0.0 && self.solver.t_end.is_finite()) {
            return Err(Error::config(format!(
                "solver.t_end: horizon must be positive and finite, got {}",
                self.solver.t_end
            )));
        }
        if self.boundary.inner.is_some() && self.grid.r_min == 0.0 {
            return Err(Error::config(
                "boundary.inner: a disc chart (grid.r_min = 0) has no inner edge to pin",
            ));
        }
        if self.truncation.levels.is_empty() || !increasing(&self.truncation.levels) {
            return Err(Error::config(
                "truncation.levels: need a nonempty strictly increasing list",
            ));
        }
        if self.probes.times.is_empty() {
            let lo = (self.solver.t_end / 25.0).ln();
            let hi = self.solver.t_end.ln();
            self.probes.times = (0..6)
                .map(|j| (lo + (hi - lo) * j as f64 / 5.0).exp())
                .collect();
            if let Some(last) = self.probes.times.last_mut() {
                *last = self.solver.t_end;
            }
        }
        let t = &self.probes.times;
        if !increasing(t) || t[0] <= 0.0 || *t.last().unwrap() > self.solver.t_end {
            return Err(Error::config(
                "probes.times: need strictly increasing times inside (0, solver.t_end]",
            ));
        }
        if let Some(u) = &self.uniqueness {
            for (name, s) in [("schedule_a", &u.schedule_a), ("schedule_b", &u.schedule_b)] {
                if s.is_empty() || !increasing(s) {
                    return Err(Error::config(format!(
                        "uniqueness.{name}: need a nonempty strictly increasing list"
                    )));
                }
            }
            if u.schedule_a == u.schedule_b {
                return Err(Error::config(
                    "uniqueness: schedule_a and schedule_b must differ",
                ));
            }
        }
        Ok(())
    }

    pub fn cone(&self) -> Result<ConeData> {
        let grid = RadialGrid::new(self.grid.r_min, self.grid.r_max, self.solver.n)?;
        match self.kind {
            ConeKind::Flat => ConeData::flat(self.beta, grid),
            ConeKind::Hyperbolic => ConeData::hyperbolic(self.beta, grid),
        }
    }

    pub fn solver_params(&self) -> SolverParams {
        let mut p = SolverParams::new(self.solver.scheme, self.solver.t_end);
        p.cfl = self.solver.cfl;
        p.store_every = self.solver.store_every;
        if self.boundary.inner.is_some() {
            p.boundary = BoundarySpec {
                outer: BoundaryValue::Fixed,
                inner: Some(BoundaryValue::Fixed),
            };
        }
        p
    }

    pub fn experiment(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::new(
            self.cone()?,
            self.truncation.levels.clone(),
            self.solver_params(),
            self.probes.times.clone(),
        )
    }

    /// Pretty JSON with stable key order and a trailing newline.
    pub fn resolved_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }
}

fn parse_tree(text: &str) -> Result<toml::Value> {
    match toml::from_str::<toml::Value>(text) {
        Ok(v) => Ok(v),
        Err(toml_err) => match serde_json::from_str::<toml::Value>(text) {
            Ok(v) => Ok(v),
            Err(json_err) => Err(Error::config(format!(
                "config parses as neither TOML ({toml_err}) nor JSON ({json_err})"
            ))),
        },
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    #[derive(Deserialize)]
    struct Holder {
        v: toml::Value,
    }
    match toml::from_str::<Holder>(&format!("v = {raw}")) {
        Ok(h) => h.v,
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Sets one `key.path=value` into the raw config tree. Values parse as
/// TOML fragments (numbers, booleans, arrays, quoted strings); anything
/// unparseable is taken as a bare string, so `--set solver.scheme=explicit`
/// works without shell-quoted quotes.
pub fn apply_override(root: &mut toml::Value, spec: &str) -> Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::config(format!("override '{spec}' is not of the form key.path=value")))?;
    let path = path.trim();
    if path.is_empty() {
        return Err(Error::config(format!("override '{spec}' has an empty key path")));
    }
    let segments: Vec<&str> = path.split('.').collect();
    let (last, parents) = segments.split_last().expect("split on nonempty path");
    let mut cursor = root;
    for (i, seg) in parents.iter().enumerate() {
        let table = cursor.as_table_mut().ok_or_else(|| {
            Error::config(format!(
                "override '{path}': '{}' is not a table",
                segments[..=i].join(".")
            ))
        })?;
        cursor = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::map::Map::new()));
    }
    let table = cursor.as_table_mut().ok_or_else(|| {
        Error::config(format!("override '{path}': parent of '{last}' is not a table"))
    })?;
    table.insert(last.to_string(), parse_override_value(raw.trim()));
    Ok(())
}

/// Parses, overrides, deserializes, and validates in one step.
pub fn resolve_config(text: &str, overrides: &[String]) -> Result<RunConfig> {
    let mut tree = parse_tree(text)?;
    for o in overrides {
        apply_override(&mut tree, o)?;
    }
    let mut cfg = RunConfig::deserialize(tree).map_err(|e| Error::config(format!("config schema: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn load_config(path: &Path, overrides: &[String]) -> Result<RunConfig> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read config {}: {e}", path.display())))?;
    resolve_config(&text, overrides)
}
