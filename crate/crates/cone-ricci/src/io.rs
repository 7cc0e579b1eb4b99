//! Deterministic file output: CSV snapshots, JSON reports, and
//! content-addressed run directories.
//!
//! Floats print exactly as C's `%.17g` would: seventeen significant
//! digits, shortest of fixed/scientific per the usual `%g` exponent
//! rule, trailing zeros stripped. Seventeen digits round-trip every
//! f64, so identical runs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::barrier::{blunt_cone, lambda_bar, BarrierSpec};
use crate::error::{Error, Result};
use crate::grid::RadialGrid;
use crate::metric::{CurvatureProfile, Profile};
use crate::solver::{BoundarySpec, BoundaryValue, Diagnostics, FlowResult, Scheme, StopReason};
use crate::truncation::{BoundReport, TruncationSequence};

/// Formats like printf's `%.17g`.
pub fn fmt_g17(x: f64) -> String {
    if x.is_nan() {
        return String::from("nan");
    }
    if x.is_infinite() {
        return String::from(if x < 0.0 { "-inf" } else { "inf" });
    }
    if x == 0.0 {
        return String::from(if x.is_sign_negative() { "-0" } else { "0" });
    }
    let sci = format!("{:.16e}", x);
    let (mant, exp) = sci.split_once('e').expect("exponential format has an e");
    let x10: i32 = exp.parse().expect("decimal exponent is an integer");
    if (-4..17).contains(&x10) {
        let frac = (16 - x10) as usize;
        let fixed = format!("{:.*}", frac, x);
        let trimmed = if fixed.contains('.') {
            fixed.trim_end_matches('0').trim_end_matches('.')
        } else {
            &fixed
        };
        String::from(trimmed)
    } else {
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{}{:02}", if x10 < 0 { '-' } else { '+' }, x10.abs())
    }
}

fn push_row(out: &mut String, cols: &[f64]) {
    for (j, &c) in cols.iter().enumerate() {
        if j > 0 {
            out.push(',');
        }
        out.push_str(&fmt_g17(c));
    }
    out.push_str("\r\n");
}

/// `r,u` rows for one conformal factor.
pub fn profile_csv(p: &Profile) -> String {
    let n = p.grid().n();
    let mut out = String::with_capacity(16 + 48 * n);
    out.push_str("r,u\r\n");
    for i in 0..n {
        push_row(&mut out, &[p.grid().node(i), p.u_at(i)]);
    }
    out
}

pub fn write_profile_csv(path: &Path, p: &Profile) -> Result<()> {
    fs::write(path, profile_csv(p))?;
    Ok(())
}

/// `r,K` rows over the interior nodes where the stencil exists.
pub fn curvature_csv(k: &CurvatureProfile) -> String {
    let mut out = String::from("r,K\r\n");
    for i in k.indices() {
        push_row(&mut out, &[k.grid().node(i), k.value(i)]);
    }
    out
}

pub fn write_curvature_csv(path: &Path, k: &CurvatureProfile) -> Result<()> {
    fs::write(path, curvature_csv(k))?;
    Ok(())
}

/// `r,t,U` samples of the barrier over a time window: for each
/// log-spaced t, radii cover the cap and the cone trunk out to 0.95.
pub fn barrier_csv(spec: &BarrierSpec, window: (f64, f64), nt: usize, nr: usize) -> Result<String> {
    let mut out = String::from("r,t,U\r\n");
    let (a, b) = (window.0.ln(), window.1.ln());
    for jt in 0..nt {
        let t = (a + (b - a) * jt as f64 / (nt - 1).max(1) as f64).exp();
        let lb = lambda_bar(t, spec.beta(), spec.c())?;
        for jr in 0..nr {
            let frac = jr as f64 / (nr - 1).max(1) as f64;
            let r = if jr % 2 == 0 { lb * frac } else { lb + (0.95 - lb) * frac };
            let r = r.clamp(0.0, 0.95);
            push_row(&mut out, &[r, t, blunt_cone(r, t, spec)?]);
        }
    }
    Ok(out)
}

fn describe_value(v: &BoundaryValue) -> &'static str {
    match v {
        BoundaryValue::Fixed => "fixed",
        BoundaryValue::Trajectory(_) => "trajectory",
    }
}

fn describe_boundary(b: &BoundarySpec) -> String {
    match &b.inner {
        None => format!("outer {}", describe_value(&b.outer)),
        Some(v) => format!("outer {}, inner {}", describe_value(&b.outer), describe_value(v)),
    }
}

#[derive(Serialize)]
struct FlowMeta<'a> {
    scheme: Scheme,
    cfl: f64,
    t_end: f64,
    store_every: usize,
    boundary: String,
    grid: &'a RadialGrid,
    stop: &'a StopReason,
    capped_horizon: Option<f64>,
    times: &'a [f64],
    diagnostics: &'a [Diagnostics],
}

/// Serializes a run to `dir`: `meta.json` plus one `t_<index>.csv` per
/// snapshot. Indices are zero-padded so lexicographic file order is
/// time order.
pub fn save_flow(dir: &Path, f: &FlowResult) -> Result<()> {
    fs::create_dir_all(dir)?;
    let meta = FlowMeta {
        scheme: f.params.scheme,
        cfl: f.params.cfl,
        t_end: f.params.t_end,
        store_every: f.params.store_every,
        boundary: describe_boundary(&f.params.boundary),
        grid: &f.grid,
        stop: &f.stop,
        capped_horizon: f.capped_horizon,
        times: &f.times,
        diagnostics: &f.diagnostics,
    };
    save_json(&dir.join("meta.json"), &meta)?;
    for (m, p) in f.profiles.iter().enumerate() {
        write_profile_csv(&dir.join(format!("t_{m:04}.csv")), p)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SequenceManifest<'a> {
    beta: f64,
    levels: &'a [f64],
    support_radii: &'a [f64],
    degenerate: bool,
}

/// Serializes a truncation family: `manifest.json`, one profile CSV per
/// level, and the curvature-bound reports when provided.
pub fn save_truncation(
    dir: &Path,
    seq: &TruncationSequence,
    bounds: &[BoundReport],
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = SequenceManifest {
        beta: seq.cone().beta(),
        levels: seq.levels(),
        support_radii: seq.support_radii(),
        degenerate: seq.degenerate(),
    };
    save_json(&dir.join("manifest.json"), &manifest)?;
    for (j, p) in seq.profiles().iter().enumerate() {
        write_profile_csv(&dir.join(format!("level_{j:02}.csv")), p)?;
    }
    if !bounds.is_empty() {
        save_json(&dir.join("bounds.json"), &bounds)?;
    }
    Ok(())
}

/// Pretty JSON with a trailing newline. Struct fields serialize in
/// declaration order, so key order is stable across runs.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| Error::config(format!("report serialization failed: {e}")))?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

pub fn write_text(path: &Path, content: &str) -> Result<()> {
    fs::write(path, content)?;
    Ok(())
}

/// Per-run output directory under `root`, named by the first sixteen
/// hex digits of the SHA-256 of the resolved configuration. Identical
/// configs land in the same place; different ones cannot collide
/// silently.
pub fn run_dir(root: &Path, resolved_config: &str) -> PathBuf {
    let digest = Sha256::digest(resolved_config.as_bytes());
    let mut name = String::with_capacity(16);
    for b in &digest[..8] {
        name.push_str(&format!("{b:02x}"));
    }
    root.join(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{gauss_curvature, ConeData};
    use crate::solver::{evolve, SolverParams};
    use crate::truncation::truncate;

    #[test]
    fn float_formatting_matches_printf_g17() {
        let cases: &[(f64, &str)] = &[
            (0.0, "0"),
            (-0.0, "-0"),
            (1.0, "1"),
            (-1.5, "-1.5"),
            (0.25, "0.25"),
            (0.1, "0.10000000000000001"),
            (0.3, "0.29999999999999999"),
            (1e-4, "0.0001"),
            (1e-5, "1.0000000000000001e-05"),
            (123456.0, "123456"),
            (1e17, "1e+17"),
            (72057594037927936.0, "72057594037927936"),
            (1e100, "1e+100"),
            (std::f64::consts::PI, "3.1415926535897931"),
            (5e-324, "4.9406564584124654e-324"),
            (f64::MAX, "1.7976931348623157e+308"),
            (-2.5e-3, "-0.0025000000000000001"),
        ];
        for &(x, want) in cases {
            assert_eq!(fmt_g17(x), want, "formatting {x:e}");
        }
        assert_eq!(fmt_g17(f64::NAN), "nan");
        assert_eq!(fmt_g17(f64::INFINITY), "inf");
        assert_eq!(fmt_g17(f64::NEG_INFINITY), "-inf");
    }

    #[test]
    fn formatting_round_trips_every_bit_pattern_tried() {
        let samples = [
            1.0 / 3.0,
            2.0_f64.sqrt(),
            6.02e23,
            -7.2e-19,
            f64::MIN_POSITIVE,
            0.9999999999999999,
        ];
        for &x in &samples {
            let back: f64 = fmt_g17(x).parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} reprinted as {}", fmt_g17(x));
        }
    }

    #[test]
    fn profile_csv_is_rfc4180_with_headers() {
        let grid = RadialGrid::new(0.0, 1.0, 16).unwrap();
        let p = Profile::from_fn(grid, |r| r * r).unwrap();
        let body = profile_csv(&p);
        assert!(body.starts_with("r,u\r\n"));
        assert!(body.ends_with("\r\n"));
        assert_eq!(body.lines().count(), 17, "header plus one row per node");
        let k = gauss_curvature(&p);
        let kbody = curvature_csv(&k);
        assert!(kbody.starts_with("r,K\r\n"));
    }

    #[test]
    fn flow_directory_holds_meta_and_ordered_snapshots() {
        let grid = RadialGrid::new(0.0, 1.0, 64).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        let initial = truncate(&cone, 2.0).unwrap();
        let f = evolve(&initial, &SolverParams::new(Scheme::SemiImplicit, 0.01)).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_flow(dir.path(), &f).unwrap();
        let meta = fs::read_to_string(dir.path().join("meta.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&meta).unwrap();
        assert_eq!(v["boundary"], "outer fixed");
        assert_eq!(v["times"].as_array().unwrap().len(), f.times.len());
        let first = fs::read_to_string(dir.path().join("t_0000.csv")).unwrap();
        assert!(first.starts_with("r,u\r\n"));
        let count = fs::read_dir(dir.path()).unwrap().count();
        assert_eq!(count, f.profiles.len() + 1);
    }

    #[test]
    fn truncation_directory_matches_the_sequence() {
        let grid = RadialGrid::new(0.0, 1.0, 64).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        let seq = TruncationSequence::build_sequence(cone, 3).unwrap();
        let dir = tempfile::tempdir().unwrap();
        save_truncation(dir.path(), &seq, &[]).unwrap();
        let manifest = fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&manifest).unwrap();
        assert_eq!(v["levels"].as_array().unwrap().len(), 3);
        assert!(dir.path().join("level_02.csv").exists());
    }

    #[test]
    fn run_directories_are_content_addressed() {
        let root = Path::new("runs");
        let a = run_dir(root, "{\"beta\":-0.5}");
        let b = run_dir(root, "{\"beta\":-0.5}");
        let c = run_dir(root, "{\"beta\":-0.25}");
        assert_eq!(a, b, "same config, same directory");
        assert_ne!(a, c, "different config, different directory");
        let name = a.file_name().unwrap().to_str().unwrap();
        assert_eq!(name.len(), 16);
        assert!(name.chars().all(|ch| ch.is_ascii_hexdigit()));
    }

    #[test]
    fn barrier_samples_cover_cap_and_trunk() {
        let spec = BarrierSpec::new(-0.5, 1.0).unwrap();
        let body = barrier_csv(&spec, (1e-4, 1e-2), 4, 8).unwrap();
        assert!(body.starts_with("r,t,U\r\n"));
        assert_eq!(body.lines().count(), 1 + 4 * 8);
    }
}
