//! Fisher information of the USBL geometry and the USV waypoint planner.
//!
//! For AUV `k` at horizontal offset `(Δx, Δy)` from the array and vertical separation `z`,
//! the measurement Jacobian with respect to the offset is
//!
//! ```text
//! H = K/S³ · | Δy² + z²   −Δx Δy  |      K = 2π f d / c
//!            | −Δx Δy    Δx² + z² |
//! ```
//!
//! and the system information is `J = σ⁻² Σ Hₖᵀ Hₖ`. The planner moves the USV toward
//! the point that maximises `det J` over the mission rectangle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};
use crate::usbl::{vertical_separation, AuvTruth, UsblConfig, UsvState};

/// Symmetric 2×2 information matrix.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FimMatrix {
    pub xx: f64,
    pub xy: f64,
    pub yy: f64,
}

impl FimMatrix {
    pub fn det(&self) -> f64 {
        (self.xx * self.yy - self.xy * self.xy).max(0.0)
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let mean = 0.5 * (self.xx + self.yy);
        let half_gap = (0.5 * (self.xx - self.yy)).hypot(self.xy);
        (mean - half_gap, mean + half_gap)
    }

    fn add_outer(&mut self, h: &[[f64; 2]; 2], weight: f64) {
        // HᵀH
        self.xx += weight * (h[0][0] * h[0][0] + h[1][0] * h[1][0]);
        self.xy += weight * (h[0][0] * h[0][1] + h[1][0] * h[1][1]);
        self.yy += weight * (h[0][1] * h[0][1] + h[1][1] * h[1][1]);
    }
}

/// Jacobian of the noise-free phase pair with respect to the AUV horizontal offset.
/// Rows are (Δφx, Δφy), columns (Δx, Δy).
pub fn measurement_jacobian(usv: &UsvState, auv: &AuvTruth, cfg: &UsblConfig) -> [[f64; 2]; 2] {
    let dx = auv.pos.x - usv.pos.x;
    let dy = auv.pos.y - usv.pos.y;
    let z = vertical_separation(usv, auv.depth);
    let s2 = dx * dx + dy * dy + z * z;
    let k = cfg.phase_gain() / (s2 * s2.sqrt());
    [
        [k * (dy * dy + z * z), -k * dx * dy],
        [-k * dx * dy, k * (dx * dx + z * z)],
    ]
}

fn check_channels(auvs: &[AuvTruth], channels: &[UsblConfig]) -> Result<()> {
    if auvs.len() != channels.len() {
        return Err(Error::Contract(format!(
            "{} AUVs but {} USBL channels",
            auvs.len(),
            channels.len()
        )));
    }
    Ok(())
}

/// System Fisher information for AUVs observed on per-AUV channels.
pub fn fim_numeric(usv: &UsvState, auvs: &[AuvTruth], channels: &[UsblConfig]) -> Result<FimMatrix> {
    check_channels(auvs, channels)?;
    if let Some(c) = channels.iter().find(|c| !(c.sigma > 0.0)) {
        return Err(Error::Contract(format!(
            "Fisher information needs positive phase noise, got σ = {}",
            c.sigma
        )));
    }
    let mut j = FimMatrix::default();
    for (auv, cfg) in auvs.iter().zip(channels) {
        j.add_outer(&measurement_jacobian(usv, auv, cfg), 1.0 / (cfg.sigma * cfg.sigma));
    }
    Ok(j)
}

/// Geometry of AUVs sharing a common slant range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometrySummary {
    /// Common slant range S₀ (m).
    pub s0: f64,
    /// Elevation angle γ₀ with sin γ₀ = z/S₀ (rad).
    pub gamma0: f64,
    /// χ = Σ_{i<j} sin² αᵢⱼ.
    pub chi: f64,
    /// Pairwise bearing differences αᵢⱼ in (i, j) lexicographic order (rad).
    pub alphas: Vec<f64>,
}

impl GeometrySummary {
    /// Builds the summary from explicit bearings.
    pub fn from_bearings(s0: f64, gamma0: f64, bearings: &[f64]) -> Self {
        let mut alphas = Vec::new();
        for i in 0..bearings.len() {
            for j in i + 1..bearings.len() {
                alphas.push(bearings[i] - bearings[j]);
            }
        }
        let chi = alphas.iter().map(|a| a.sin().powi(2)).sum();
        Self {
            s0,
            gamma0,
            chi,
            alphas,
        }
    }

    /// Summary of an actual configuration; S₀ and γ₀ are taken as means.
    pub fn from_positions(usv: &UsvState, auvs: &[AuvTruth]) -> Self {
        let n = auvs.len().max(1) as f64;
        let bearings: Vec<f64> = auvs
            .iter()
            .map(|a| (a.pos.y - usv.pos.y).atan2(a.pos.x - usv.pos.x))
            .collect();
        let s0 = auvs.iter().map(|a| crate::usbl::slant_range(usv, a)).sum::<f64>() / n;
        let gamma0 = auvs
            .iter()
            .map(|a| (vertical_separation(usv, a.depth) / crate::usbl::slant_range(usv, a)).asin())
            .sum::<f64>()
            / n;
        Self::from_bearings(s0, gamma0, &bearings)
    }

    pub fn sin_gamma0(&self) -> f64 {
        self.gamma0.sin()
    }
}

fn information_gain(cfg: &UsblConfig) -> f64 {
    let k = cfg.phase_gain();
    k * k / (cfg.sigma * cfg.sigma)
}

/// Published closed-form determinant
/// `(4π²f²d²/(σ²c²))² · [3m sin²γ₀/S₀⁴ + (sin⁴γ₀ + 1)² χ / S₀⁴]`.
pub fn det_fim_closed(geom: &GeometrySummary, cfg: &UsblConfig, m: usize) -> f64 {
    let g = information_gain(cfg);
    let s = geom.sin_gamma0();
    let s4 = geom.s0.powi(4);
    g * g * (3.0 * m as f64 * s * s / s4 + (s.powi(4) + 1.0).powi(2) / s4 * geom.chi)
}

/// Exact determinant of the assembled FIM for AUVs at a common slant range and elevation:
/// `(K²/σ²)² · [m² sin⁴γ₀ + (1 − sin⁴γ₀)² χ] / S₀⁴`.
///
/// Each `HₖᵀHₖ` equals `K²/S⁶ · (z⁴ I + (S⁴ − z⁴) nₖnₖᵀ)` with `nₖ` the unit vector
/// perpendicular to the AUV bearing; the determinant of the sum then follows from
/// `det(aI + bN) = a² + a b tr N + b² det N` and `det Σ nnᵀ = χ`.
pub fn det_fim_symmetric(geom: &GeometrySummary, cfg: &UsblConfig, m: usize) -> f64 {
    let g = information_gain(cfg);
    let s4g = geom.sin_gamma0().powi(4);
    let m = m as f64;
    g * g * (m * m * s4g + (1.0 - s4g).powi(2) * geom.chi) / geom.s0.powi(4)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Coarse grid spacing (m).
    pub grid_resolution: f64,
    /// Pattern-search iterations after the coarse grid.
    pub refine_iters: usize,
    /// Smallest pattern-search step (m).
    pub refine_step: f64,
    /// USV speed limit (m/s).
    pub usv_vmax: f64,
    pub bounds: Rect,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        Self {
            grid_resolution: 5.0,
            refine_iters: 20,
            refine_step: 0.25,
            usv_vmax: 5.0,
            bounds: Rect::new(0.0, 0.0, 200.0, 200.0),
        }
    }
}

impl PlannerConfig {
    pub fn validate(&self) -> Result<()> {
        let b = &self.bounds;
        if self.grid_resolution > 0.0
            && self.refine_step > 0.0
            && self.usv_vmax > 0.0
            && b.width() >= 0.0
            && b.height() >= 0.0
        {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid planner configuration: {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Waypoint {
    pub target: Point2,
    /// det J at the target; channels with σ = 0 count as unit noise.
    pub det: f64,
    /// No candidate carried information; the target is the AUV centroid.
    pub degenerate: bool,
}

/// Candidate ordering: larger det first, then closer to `current`, then smaller (x, y).
fn better(a: (Point2, f64), b: (Point2, f64), current: Point2) -> bool {
    let scale = a.1.abs().max(b.1.abs());
    let tol = 1e-12 * scale;
    if a.1 > b.1 + tol {
        return true;
    }
    if b.1 > a.1 + tol {
        return false;
    }
    let da = a.0.distance(current);
    let db = b.0.distance(current);
    if da != db {
        return da < db;
    }
    (a.0.x, a.0.y) < (b.0.x, b.0.y)
}

/// Plans the next USV target from estimated AUV positions.
///
/// Channels with σ = 0 are weighted as unit noise so the objective stays finite.
pub fn plan_usv_waypoint(
    estimates: &[AuvTruth],
    channels: &[UsblConfig],
    pcfg: &PlannerConfig,
    current: Point2,
    eta: f64,
) -> Result<Waypoint> {
    check_channels(estimates, channels)?;
    if estimates.is_empty() {
        return Err(Error::Contract("planning needs at least one AUV estimate".into()));
    }
    let weights: Vec<f64> = channels
        .iter()
        .map(|c| if c.sigma > 0.0 { 1.0 / (c.sigma * c.sigma) } else { 1.0 })
        .collect();
    let objective = |p: Point2| -> f64 {
        let usv = UsvState { pos: p, eta };
        let mut j = FimMatrix::default();
        for ((auv, cfg), w) in estimates.iter().zip(channels).zip(&weights) {
            j.add_outer(&measurement_jacobian(&usv, auv, cfg), *w);
        }
        j.det()
    };

    let b = pcfg.bounds;
    let nx = (b.width() / pcfg.grid_resolution).floor() as usize;
    let ny = (b.height() / pcfg.grid_resolution).floor() as usize;
    let mut best: Option<(Point2, f64)> = None;
    for i in 0..=nx {
        for j in 0..=ny {
            let p = Point2::new(
                b.min.x + i as f64 * pcfg.grid_resolution,
                b.min.y + j as f64 * pcfg.grid_resolution,
            );
            let cand = (p, objective(p));
            if best.is_none_or(|cur| better(cand, cur, current)) {
                best = Some(cand);
            }
        }
    }
    let (mut p, mut d) = best.expect("grid has at least one node");

    if d <= 0.0 {
        let n = estimates.len() as f64;
        let centroid = estimates
            .iter()
            .fold(Point2::default(), |acc, a| acc + a.pos * (1.0 / n));
        return Ok(Waypoint {
            target: b.clamp(centroid),
            det: 0.0,
            degenerate: true,
        });
    }

    let mut step = 0.5 * pcfg.grid_resolution;
    for _ in 0..pcfg.refine_iters {
        let mut moved = false;
        for (sx, sy) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)] {
            let q = b.clamp(Point2::new(p.x + sx * step, p.y + sy * step));
            let dq = objective(q);
            if dq > d * (1.0 + 1e-12) {
                p = q;
                d = dq;
                moved = true;
            }
        }
        if !moved {
            if step <= pcfg.refine_step {
                break;
            }
            step = (0.5 * step).max(pcfg.refine_step);
        }
    }

    Ok(Waypoint {
        target: p,
        det: d,
        degenerate: false,
    })
}

/// Straight-line USV motion limited to `vmax · dt`, clamped to `bounds`.
pub fn step_usv(current: Point2, target: Point2, vmax: f64, dt: f64, bounds: &Rect) -> Point2 {
    let dist = current.distance(target);
    let reach = vmax * dt;
    let next = if dist <= reach {
        target
    } else {
        current + (target - current) * (reach / dist)
    };
    bounds.clamp(next)
}

/// One row of the planner trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerTraceRow {
    pub t: f64,
    pub usv: Point2,
    pub target: Point2,
    pub det: f64,
}

impl PlannerTraceRow {
    pub const CSV_HEADER: &'static str = "t,usv_x,usv_y,target_x,target_y,det_J";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.t, self.usv.x, self.usv.y, self.target.x, self.target.y, self.det
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn cfg() -> UsblConfig {
        UsblConfig::default()
    }

    #[test]
    fn no_auvs_no_information() {
        let j = fim_numeric(&UsvState::default(), &[], &[]).unwrap();
        assert_eq!(j, FimMatrix::default());
        assert_eq!(j.det(), 0.0);
    }

    #[test]
    fn channel_count_mismatch_is_contract_error() {
        let auvs = [AuvTruth::new(1.0, 2.0, 100.0)];
        assert!(matches!(
            fim_numeric(&UsvState::default(), &auvs, &[]),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn overhead_single_auv_is_isotropic() {
        let usv = UsvState::new(50.0, 50.0, 0.0);
        let j = fim_numeric(&usv, &[AuvTruth::new(50.0, 50.0, 100.0)], &[cfg()]).unwrap();
        let expected = (cfg().phase_gain() / 100.0).powi(2) / cfg().sigma.powi(2);
        assert!((j.xx - expected).abs() < 1e-9 * expected);
        assert!((j.yy - expected).abs() < 1e-9 * expected);
        assert!(j.xy.abs() < 1e-12 * expected);
    }

    #[test]
    fn single_auv_closed_form_has_empty_pair_sum() {
        let g = GeometrySummary::from_bearings(150.0, 0.9, &[0.3]);
        assert_eq!(g.chi, 0.0);
        let k = 4.0 * PI * PI * 15_000f64.powi(2) * 0.033f64.powi(2) / (0.01f64.powi(2) * 1500f64.powi(2));
        let want = k * k * 3.0 * 0.9f64.sin().powi(2) / 150f64.powi(4);
        let got = det_fim_closed(&g, &cfg(), 1);
        assert!((got - want).abs() < 1e-12 * want);
    }

    #[test]
    fn orthogonal_pair_has_unit_chi() {
        let g = GeometrySummary::from_bearings(100.0, 0.5, &[0.2, 0.2 + PI / 2.0]);
        assert!((g.chi - 1.0).abs() < 1e-15);
        assert_eq!(g.alphas.len(), 1);
    }

    #[test]
    fn step_usv_kinematics() {
        let b = Rect::new(0.0, 0.0, 200.0, 200.0);
        let c = Point2::new(10.0, 10.0);
        assert_eq!(step_usv(c, c, 5.0, 10.0, &b), c);
        let far = Point2::new(70.0, 90.0);
        let p = step_usv(c, far, 5.0, 10.0, &b);
        assert!((p.distance(c) - 50.0).abs() < 1e-12);
        assert!((p.distance(far) - 50.0).abs() < 1e-12);
        let near = Point2::new(28.0, 34.0);
        assert_eq!(step_usv(c, near, 5.0, 10.0, &b), near);
        assert_eq!(step_usv(c, Point2::new(-50.0, 10.0), 100.0, 10.0, &b), Point2::new(0.0, 10.0));
    }

    #[test]
    fn single_auv_waypoint_is_overhead() {
        let w = plan_usv_waypoint(
            &[AuvTruth::new(100.0, 100.0, 120.0)],
            &[cfg()],
            &PlannerConfig::default(),
            Point2::default(),
            0.0,
        )
        .unwrap();
        assert!(!w.degenerate);
        assert!(w.target.distance(Point2::new(100.0, 100.0)) <= 0.25, "{:?}", w.target);
    }

    #[test]
    fn off_grid_single_auv_refines_to_overhead() {
        let w = plan_usv_waypoint(
            &[AuvTruth::new(63.3, 141.8, 100.0)],
            &[cfg()],
            &PlannerConfig::default(),
            Point2::default(),
            0.0,
        )
        .unwrap();
        assert!(w.target.distance(Point2::new(63.3, 141.8)) <= 0.25 * 2f64.sqrt(), "{:?}", w.target);
    }

    #[test]
    fn symmetric_pair_waypoint_on_bisector() {
        // pairs closer than roughly their depth share a single optimum on the bisector
        for half in [10.0, 25.0, 40.0] {
            let auvs = [
                AuvTruth::new(100.0 - half, 100.0, 110.0),
                AuvTruth::new(100.0 + half, 100.0, 110.0),
            ];
            let w = plan_usv_waypoint(&auvs, &[cfg(), cfg()], &PlannerConfig::default(), Point2::new(100.0, 30.0), 0.0)
                .unwrap();
            assert!((w.target.x - 100.0).abs() < 1e-9, "half={half} target={:?}", w.target);
        }
    }

    #[test]
    fn wide_pair_has_mirror_optima_broken_by_distance() {
        let auvs = [AuvTruth::new(40.0, 100.0, 110.0), AuvTruth::new(160.0, 100.0, 110.0)];
        let chans = [cfg(), cfg()];
        let pc = PlannerConfig::default();
        let left = plan_usv_waypoint(&auvs, &chans, &pc, Point2::new(0.0, 100.0), 0.0).unwrap();
        let right = plan_usv_waypoint(&auvs, &chans, &pc, Point2::new(200.0, 100.0), 0.0).unwrap();
        assert!(left.target.x < 100.0 && right.target.x > 100.0);
        assert!((left.target.x + right.target.x - 200.0).abs() < 1e-9);
        assert!((left.det - right.det).abs() <= 1e-12 * left.det);
        let centre = fim_numeric(&UsvState::new(100.0, 100.0, 0.0), &auvs, &chans).unwrap().det();
        assert!(centre < left.det);
    }

    #[test]
    fn zero_sigma_still_plans() {
        let c0 = cfg().with_sigma(0.0);
        let w = plan_usv_waypoint(&[AuvTruth::new(40.0, 40.0, 100.0)], &[c0], &PlannerConfig::default(), Point2::default(), 0.0)
            .unwrap();
        assert!(w.target.distance(Point2::new(40.0, 40.0)) <= 0.25);
    }

    #[test]
    fn trace_row_format() {
        let r = PlannerTraceRow {
            t: 20.0,
            usv: Point2::new(1.0, 2.0),
            target: Point2::new(3.0, 4.5),
            det: 0.5,
        };
        assert_eq!(r.csv_row(), "20,1,2,3,4.5,0.5");
    }
}
