//! Smoothed-min capping of a cone factor: u_k = ψ(u₀ − k) + k.
//!
//! ψ is the C² ramp with ψ(s) = s below −1, ψ(s) = 0 above 1 and
//! ψ′(s) = (1 − sin(πs/2))/2 in between, integrated in closed form to
//! ψ(s) = s/2 − 1/2 + cos(πs/2)/π. It satisfies min{s,0} − 1 ≤ ψ(s) ≤
//! min{s,0}, ψ′ ∈ [0,1] and ψ″ ∈ [−π/4, 0], so capping at level k keeps
//! u_k within 1 of min{u₀, k} and is monotone in k.
//!
//! The curvature of the capped metric obeys K[g_k] ≥ min{e² K[g₀], 0}:
//! with s = u₀ − k,
//!
//!   Δu_k = ψ″(s) |∇u₀|² + ψ′(s) Δu₀,
//!   K[g_k] = ψ′(s) e^{2(s−ψ(s))} K[g₀] − ψ″(s) e^{−2u_k} |∇u₀|²,
//!
//! and ψ′ e^{2(s−ψ)} ≤ e² because s − ψ ≤ 1. The checker below evaluates
//! this identity directly: β ln r is harmonic away from the apex, so only
//! the bounded part w of u₀ = w + β ln r is finite-differenced while the
//! ψ factors and the β/r gradient stay analytic. Differencing u_k itself
//! would smear the C² seams of ψ across stencil cells and lose the
//! pointwise inequality at exactly the nodes the lemma is about.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric::{ConeData, Profile};

/// ψ(s): identity below −1, zero above 1, C² sine ramp in between.
pub fn psi(s: f64) -> f64 {
    if s <= -1.0 {
        s
    } else if s >= 1.0 {
        0.0
    } else {
        0.5 * s - 0.5 + (0.5 * PI * s).cos() / PI
    }
}

/// ψ′(s) = (1 − sin(πs/2))/2 on [−1, 1]; 1 below, 0 above.
pub fn psi_d1(s: f64) -> f64 {
    if s <= -1.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        0.5 * (1.0 - (0.5 * PI * s).sin())
    }
}

/// ψ″(s) = −(π/4) cos(πs/2) on [−1, 1]; 0 outside.
pub fn psi_d2(s: f64) -> f64 {
    if s <= -1.0 || s >= 1.0 {
        0.0
    } else {
        -0.25 * PI * (0.5 * PI * s).cos()
    }
}

/// Caps the cone factor at level k: u_k = ψ(u₀ − k) + k.
///
/// The zones are branched explicitly so that u_k equals u₀ bit for bit
/// wherever u₀ ≤ k − 1 and equals k bit for bit wherever u₀ ≥ k + 1
/// (including the apex sentinel u₀ = +∞). Inside the blend the value is
/// clamped to min{u₀, k}: the analytic gap vanishes cubically at the
/// seams, so raw rounding could otherwise poke above the envelope.
pub fn truncate(cone: &ConeData, k: f64) -> Result<Profile> {
    if !k.is_finite() {
        return Err(Error::parameter(format!("cap level must be finite, got {k}")));
    }
    let grid = cone.grid().clone();
    let u = (0..grid.n())
        .map(|i| {
            let u0 = cone.u0_at(i);
            let s = u0 - k;
            if s <= -1.0 {
                u0
            } else if s >= 1.0 {
                k
            } else {
                (psi(s) + k).min(u0).min(k)
            }
        })
        .collect();
    Profile::new(grid, u)
}

/// Outcome of the discrete curvature-bound check for one cap level.
#[derive(Debug, Clone, Serialize)]
pub struct BoundReport {
    pub beta: f64,
    pub level: f64,
    /// min over nodes of min{e² K[g₀], 0}: the uniform floor.
    pub floor: f64,
    /// min over nodes of K[g_k].
    pub min_curvature: f64,
    /// min over nodes of K[g_k] − min{e² K[g₀], 0}.
    pub worst_margin: f64,
    /// Radius of the worst node.
    pub worst_radius: f64,
    /// 10 h².
    pub tol: f64,
    pub pass: bool,
}

/// Verifies K[g_k] ≥ min{e² K[g₀], 0} − tol node by node, tol = 10h².
///
/// Both curvatures are assembled from the same central differences of the
/// bounded part w (first and second), the analytic singular gradient β/r,
/// and exact ψ′, ψ″ at the node, so the inequality is inherited from the
/// pointwise identity up to rounding. At an origin node the cap is flat
/// on top (u_k(0) = k is the nodewise maximum), giving K ≥ 0 there.
pub fn curvature_bound_check(cone: &ConeData, k: f64) -> Result<BoundReport> {
    let uk = truncate(cone, k)?;
    let grid = cone.grid();
    let h = grid.spacing();
    let n = grid.n();
    let beta = cone.beta();
    let w = cone.w();
    let e2 = 2.0_f64.exp();

    let mut floor = f64::INFINITY;
    let mut min_curv = f64::INFINITY;
    let mut worst_margin = f64::INFINITY;
    let mut worst_radius = f64::NAN;
    let mut record = |kk: f64, bound: f64, r: f64| {
        floor = floor.min(bound);
        min_curv = min_curv.min(kk);
        let margin = kk - bound;
        if margin < worst_margin {
            worst_margin = margin;
            worst_radius = r;
        }
    };

    if grid.includes_origin() {
        if beta < 0.0 {
            // Flat-topped cap: symmetric stencil, u_k(0) = k ≥ u_k(h).
            let lap = 4.0 * (uk.u_at(1) - uk.u_at(0)) / (h * h);
            record(-(-2.0 * k).exp() * lap, 0.0, 0.0);
        } else {
            let lap0 = 4.0 * (w[1] - w[0]) / (h * h);
            let s = w[0] - k;
            let lapk = psi_d1(s) * lap0;
            let kk = -(-2.0 * uk.u_at(0)).exp() * lapk;
            let k0 = -(-2.0 * w[0]).exp() * lap0;
            record(kk, (e2 * k0).min(0.0), 0.0);
        }
    }
    for i in 1..n - 1 {
        let r = grid.node(i);
        let dw = (w[i + 1] - w[i - 1]) / (2.0 * h);
        let d2w = (w[i + 1] - 2.0 * w[i] + w[i - 1]) / (h * h);
        let lap0 = d2w + dw / r;
        let grad0 = dw + beta / r;
        let u0 = w[i] + beta * r.ln();
        let s = u0 - k;
        let lapk = psi_d2(s) * grad0 * grad0 + psi_d1(s) * lap0;
        let kk = -(-2.0 * uk.u_at(i)).exp() * lapk;
        let k0 = -(-2.0 * u0).exp() * lap0;
        record(kk, (e2 * k0).min(0.0), r);
    }

    let tol = 10.0 * h * h;
    Ok(BoundReport {
        beta,
        level: k,
        floor,
        min_curvature: min_curv,
        worst_margin,
        worst_radius,
        tol,
        pass: worst_margin >= -tol,
    })
}

/// An increasing family of capped profiles u_{k_j} of one cone, with the
/// radii of the discs containing the modified regions.
#[derive(Debug, Clone)]
pub struct TruncationSequence {
    cone: ConeData,
    levels: Vec<f64>,
    profiles: Vec<Profile>,
    support_radii: Vec<f64>,
    degenerate: bool,
}

/// Disc radius guaranteed to contain {u₀ > k − 1}: solve
/// sup w + β ln r = k − 1. Zero for β = 0 with k above the bounded factor.
fn containment_radius(cone: &ConeData, k: f64) -> f64 {
    if cone.beta() == 0.0 {
        if k - 1.0 >= cone.sup_w() {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((k - 1.0 - cone.sup_w()) / cone.beta()).exp()
    }
}

impl TruncationSequence {
    /// Builds the family at caller-chosen, strictly increasing levels.
    pub fn from_levels(cone: ConeData, levels: Vec<f64>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::parameter("need at least one cap level"));
        }
        if !levels.iter().all(|k| k.is_finite()) {
            return Err(Error::parameter("cap levels must be finite"));
        }
        if levels.windows(2).any(|p| p[0] >= p[1]) {
            return Err(Error::parameter(format!(
                "cap levels must be strictly increasing, got {levels:?}"
            )));
        }
        Self::assemble(cone, levels)
    }

    /// Lemma-1 schedule: k_j = sup w + 1 + |β| ln j for j = 1..=count puts
    /// the modified region of level j inside the disc of radius 1/j. A
    /// β = 0 disc needs no truncation; the family degenerates to copies
    /// of the raw factor and is flagged, not rejected.
    pub fn build_sequence(cone: ConeData, count: usize) -> Result<Self> {
        if count < 2 {
            return Err(Error::parameter(format!(
                "a truncation sequence needs count >= 2, got {count}"
            )));
        }
        let base = cone.sup_w() + 1.0;
        let levels = (1..=count)
            .map(|j| base + cone.beta().abs() * (j as f64).ln())
            .collect();
        Self::assemble(cone, levels)
    }

    fn assemble(cone: ConeData, levels: Vec<f64>) -> Result<Self> {
        let profiles = levels
            .iter()
            .map(|&k| truncate(&cone, k))
            .collect::<Result<Vec<_>>>()?;
        let support_radii = levels.iter().map(|&k| containment_radius(&cone, k)).collect();
        let degenerate = cone.beta() == 0.0;
        Ok(TruncationSequence {
            cone,
            levels,
            profiles,
            support_radii,
            degenerate,
        })
    }

    pub fn cone(&self) -> &ConeData {
        &self.cone
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn profiles(&self) -> &[Profile] {
        &self.profiles
    }

    pub fn support_radii(&self) -> &[f64] {
        &self.support_radii
    }

    /// True when the cone has no singular part and capping never engages.
    pub fn degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    /// inf of profile j over the nodes inside its containment disc.
    pub fn inf_inside(&self, j: usize) -> f64 {
        let p = &self.profiles[j];
        let radius = self.support_radii[j];
        p.grid()
            .nodes()
            .iter()
            .zip(p.u())
            .filter(|(&r, _)| r <= radius)
            .map(|(_, &u)| u)
            .fold(self.levels[j], f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::RadialGrid;
    use proptest::prelude::*;

    #[test]
    fn psi_pinned_values() {
        assert_eq!(psi(-2.0), -2.0);
        assert_eq!(psi(2.0), 0.0);
        let v = psi(0.0);
        assert!((v - (-0.5 + 1.0 / PI)).abs() < 1e-15, "psi(0) = {v}");
        assert!((v + 0.181_690_11).abs() < 1e-8);
        assert_eq!(psi_d1(-1.5), 1.0);
        assert_eq!(psi_d1(1.5), 0.0);
        assert!((psi_d1(0.0) - 0.5).abs() < 1e-15);
        assert!((psi_d2(0.0) + 0.25 * PI).abs() < 1e-15);
        assert_eq!(psi_d2(-3.0), 0.0);
        assert_eq!(psi_d2(3.0), 0.0);
    }

    #[test]
    fn psi_matches_quadrature_of_its_derivative() {
        // Simpson's rule on ψ′ over [−1, 0] must reproduce ψ(0) − ψ(−1).
        let m = 10_000;
        let (a, b) = (-1.0, 0.0);
        let h = (b - a) / m as f64;
        let mut sum = psi_d1(a) + psi_d1(b);
        for j in 1..m {
            let x = a + j as f64 * h;
            sum += if j % 2 == 1 { 4.0 } else { 2.0 } * psi_d1(x);
        }
        let integral = sum * h / 3.0;
        let diff = psi(0.0) - psi(-1.0);
        assert!(
            (integral - diff).abs() < 1e-12,
            "quadrature {integral} vs closed form {diff}"
        );
    }

    #[test]
    fn psi_seams_are_c2() {
        let d = 1e-9;
        for seam in [-1.0, 1.0] {
            assert!((psi(seam + d) - psi(seam - d)).abs() < 3.0 * d);
            assert!((psi_d1(seam + d) - psi_d1(seam - d)).abs() < 3.0 * d);
            assert!((psi_d2(seam + d) - psi_d2(seam - d)).abs() < 3.0 * d);
        }
    }

    proptest! {
        #[test]
        fn psi_sandwich_and_derivative_ranges(s in -50.0..50.0f64) {
            let upper = s.min(0.0);
            prop_assert!(psi(s) <= upper + 1e-12);
            prop_assert!(psi(s) >= upper - 1.0 - 1e-12);
            prop_assert!(psi_d1(s) >= 0.0 && psi_d1(s) <= 1.0);
            prop_assert!(psi_d2(s) <= 0.0 && psi_d2(s) >= -0.25 * PI);
        }

        #[test]
        fn capping_is_monotone_in_the_level(
            k1 in -3.0..6.0f64,
            gap in 1.0..4.0f64,
            c0 in -1.0..1.0f64,
            c1 in -1.0..1.0f64,
            c2 in -1.0..1.0f64,
            beta in -0.95..-0.05f64,
        ) {
            let grid = RadialGrid::new(0.0, 1.0, 64).unwrap();
            let w = grid.nodes().iter().map(|&r| c0 + c1 * r + c2 * r * r).collect();
            let cone = ConeData::new(beta, grid, w).unwrap();
            let lo = truncate(&cone, k1).unwrap();
            let hi = truncate(&cone, k1 + gap).unwrap();
            for i in 0..64 {
                prop_assert!(lo.u_at(i) <= hi.u_at(i), "node {i}");
                let cap = cone.u0_at(i).min(k1);
                prop_assert!(lo.u_at(i) <= cap);
                prop_assert!(lo.u_at(i) >= cap - 1.0 - 1e-12);
            }
        }
    }

    #[test]
    fn truncate_zone_bit_exactness() {
        let grid = RadialGrid::new(0.0, 1.0, 256).unwrap();
        let cone = ConeData::flat(-0.5, grid.clone()).unwrap();
        let k = 2.0;
        let uk = truncate(&cone, k).unwrap();
        let (mut deep, mut cap, mut blend) = (0, 0, 0);
        for i in 0..grid.n() {
            let u0 = cone.u0_at(i);
            if u0 <= k - 1.0 {
                assert_eq!(uk.u_at(i).to_bits(), u0.to_bits(), "deep zone node {i}");
                deep += 1;
            } else if u0 >= k + 1.0 {
                assert_eq!(uk.u_at(i).to_bits(), k.to_bits(), "cap zone node {i}");
                cap += 1;
            } else {
                assert!(uk.u_at(i) <= u0.min(k), "blend node {i} above envelope");
                assert!(uk.u_at(i) >= u0.min(k) - 1.0, "blend node {i} below");
                blend += 1;
            }
        }
        assert!(
            deep > 0 && cap > 0 && blend > 0,
            "grid must exercise all zones: {deep}/{cap}/{blend}"
        );
        // At the deepest bite (u₀ ≈ k) the gap to the min envelope is
        // 1/2 − 1/π ≈ 0.18, visibly below both branches.
        let mid = (1..grid.n())
            .min_by(|&i, &j| {
                let di = (cone.u0_at(i) - k).abs();
                let dj = (cone.u0_at(j) - k).abs();
                di.partial_cmp(&dj).unwrap()
            })
            .unwrap();
        assert!(uk.u_at(mid) < cone.u0_at(mid).min(k) - 0.1);
    }

    #[test]
    fn truncate_spot_values() {
        // A β = 0 cone carries u₀ = w directly, so single nodes can be
        // pinned to each zone of ψ.
        let grid = RadialGrid::new(0.0, 1.0, 16).unwrap();
        let k = 2.0;
        let mut w = vec![0.0; 16];
        w[3] = k - 1.5;
        w[5] = k + 3.0;
        w[7] = k;
        let cone = ConeData::new(0.0, grid, w).unwrap();
        let uk = truncate(&cone, k).unwrap();
        assert_eq!(uk.u_at(3).to_bits(), (k - 1.5).to_bits());
        assert_eq!(uk.u_at(5).to_bits(), k.to_bits());
        let expect = k - 0.5 + 1.0 / PI;
        assert!((uk.u_at(7) - expect).abs() < 1e-15, "psi(0)+k node");
    }

    #[test]
    fn truncate_handles_the_apex_sentinel() {
        let grid = RadialGrid::new(0.0, 1.0, 32).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        for k in [-1.0, 0.5, 3.0] {
            let uk = truncate(&cone, k).unwrap();
            assert_eq!(uk.u_at(0).to_bits(), k.to_bits());
        }
        assert!(truncate(&cone, f64::NAN).is_err());
        assert!(truncate(&cone, f64::INFINITY).is_err());
    }

    #[test]
    fn bound_check_flat_cones() {
        for &beta in &[-0.25, -0.5, -0.75] {
            for k in 1..=8 {
                let grid = RadialGrid::new(0.0, 1.0, 2048).unwrap();
                let cone = ConeData::flat(beta, grid).unwrap();
                let rep = curvature_bound_check(&cone, k as f64).unwrap();
                assert!(
                    rep.pass,
                    "flat beta={beta} k={k}: worst margin {} at r={}",
                    rep.worst_margin, rep.worst_radius
                );
                // The bounded part is constant, so K[g₀] vanishes exactly
                // and the lemma says the capped cone is nonnegatively
                // curved.
                assert_eq!(rep.floor, 0.0);
                assert!(
                    rep.min_curvature >= -1e-10,
                    "beta={beta} k={k}: min K = {}",
                    rep.min_curvature
                );
            }
        }
    }

    #[test]
    fn bound_check_hyperbolic_cones() {
        let e2 = 2.0_f64.exp();
        for &beta in &[-0.25, -0.5, -0.75] {
            for k in 1..=8 {
                let grid = RadialGrid::new(0.0, 0.95, 2048).unwrap();
                let cone = ConeData::hyperbolic(beta, grid).unwrap();
                let rep = curvature_bound_check(&cone, k as f64).unwrap();
                assert!(
                    rep.pass,
                    "hyperbolic beta={beta} k={k}: worst margin {}",
                    rep.worst_margin
                );
                // K[g₀] ≈ −1 so the floor sits near −e² and the capped
                // curvature never falls below it.
                assert!((rep.floor + e2).abs() < 0.05 * e2, "floor {}", rep.floor);
                assert!(rep.min_curvature >= -e2 - rep.tol);
            }
        }
    }

    #[test]
    fn bound_check_wiggly_bounded_part() {
        let grid = RadialGrid::new(0.0, 1.0, 1024).unwrap();
        let w = grid
            .nodes()
            .iter()
            .map(|&r| 0.3 * (5.0 * r).sin() - 0.1 * r)
            .collect();
        let cone = ConeData::new(-0.4, grid, w).unwrap();
        for k in [0.5, 2.0, 5.0] {
            let rep = curvature_bound_check(&cone, k).unwrap();
            assert!(rep.pass, "wiggly k={k}: worst margin {}", rep.worst_margin);
        }
    }

    #[test]
    fn capped_region_has_exactly_zero_curvature() {
        // Wherever u₀ ≥ k + 1 both ψ factors vanish, so the assembled
        // Laplacian is exactly zero: check through the raw pieces.
        let grid = RadialGrid::new(0.0, 1.0, 512).unwrap();
        let cone = ConeData::flat(-0.75, grid.clone()).unwrap();
        let k = 3.0;
        for i in 1..grid.n() - 1 {
            let u0 = cone.u0_at(i);
            if u0 >= k + 1.0 {
                let s = u0 - k;
                let r = grid.node(i);
                let grad0 = -0.75 / r;
                let lapk = psi_d2(s) * grad0 * grad0 + psi_d1(s) * 0.0;
                assert_eq!(lapk, 0.0, "node {i}");
            }
        }
    }

    #[test]
    fn sequence_levels_and_support_radii() {
        let grid = RadialGrid::new(0.0, 1.0, 2048).unwrap();
        // β = −1/2 flat cone has w ≡ ln(2(β+1)) = 0.
        let cone = ConeData::flat(-0.5, grid).unwrap();
        let seq = TruncationSequence::build_sequence(cone.clone(), 6).unwrap();
        assert!(!seq.degenerate());
        let k4 = seq.levels()[3];
        assert!(
            (k4 - (1.0 + 2.0_f64.ln())).abs() < 1e-14,
            "k_4 = 1 + ln 2, got {k4}"
        );
        for (j, &rad) in seq.support_radii().iter().enumerate() {
            let expect = 1.0 / (j as f64 + 1.0);
            assert!((rad - expect).abs() < 1e-12 * expect, "radius {j}: {rad}");
        }
        assert!(seq
            .support_radii()
            .windows(2)
            .all(|p| p[1] < p[0]));
        for (j, p) in seq.profiles().iter().enumerate() {
            for i in 0..p.grid().n() {
                if p.grid().node(i) > seq.support_radii()[j] {
                    assert_eq!(
                        p.u_at(i).to_bits(),
                        cone.u0_at(i).to_bits(),
                        "level {j} must leave node {i} untouched"
                    );
                }
            }
        }
    }

    #[test]
    fn sequence_profiles_nondecreasing() {
        let grid = RadialGrid::new(0.0, 0.95, 512).unwrap();
        let cone = ConeData::hyperbolic(-0.6, grid).unwrap();
        let seq = TruncationSequence::build_sequence(cone, 8).unwrap();
        for pair in seq.profiles().windows(2) {
            for i in 0..pair[0].grid().n() {
                assert!(pair[0].u_at(i) <= pair[1].u_at(i), "node {i}");
            }
        }
    }

    #[test]
    fn capped_disc_infimum_diverges() {
        let grid = RadialGrid::new(0.0, 1.0, 2048).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        let seq = TruncationSequence::build_sequence(cone, 1024).unwrap();
        let mut last = f64::NEG_INFINITY;
        let mut j = 1;
        while j <= 1024 {
            let v = seq.inf_inside(j - 1);
            assert!(v > last, "inf inside D_(1/{j}) = {v} did not rise past {last}");
            last = v;
            j *= 2;
        }
        assert!(last > 3.0, "inf inside the deepest disc is only {last}");
    }

    #[test]
    fn degenerate_disc_sequence_is_flagged() {
        let grid = RadialGrid::new(0.0, 1.0, 64).unwrap();
        let cone = ConeData::flat(0.0, grid).unwrap();
        let seq = TruncationSequence::build_sequence(cone.clone(), 3).unwrap();
        assert!(seq.degenerate());
        assert!(seq.support_radii().iter().all(|&r| r == 0.0));
        for p in seq.profiles() {
            for i in 0..p.grid().n() {
                assert_eq!(p.u_at(i).to_bits(), cone.u0_at(i).to_bits());
            }
        }
    }

    #[test]
    fn sequence_input_validation() {
        let grid = RadialGrid::new(0.0, 1.0, 32).unwrap();
        let cone = ConeData::flat(-0.5, grid).unwrap();
        assert!(TruncationSequence::from_levels(cone.clone(), vec![]).is_err());
        assert!(TruncationSequence::from_levels(cone.clone(), vec![2.0, 2.0]).is_err());
        assert!(TruncationSequence::from_levels(cone.clone(), vec![3.0, 2.0]).is_err());
        assert!(TruncationSequence::from_levels(cone.clone(), vec![1.0, f64::NAN]).is_err());
        assert!(TruncationSequence::build_sequence(cone.clone(), 1).is_err());
        assert!(TruncationSequence::from_levels(cone, vec![1.0, 2.5]).is_ok());
    }
}
