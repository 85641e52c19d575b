//! Sea-state model: linearised shallow-water surface waves and Lamb-Oseen vortex currents.
//!
//! The wave solver integrates
//!
//! ```text
//! ∂u/∂t + g ∂η/∂x = 0
//! ∂v/∂t + g ∂η/∂y = 0
//! ∂η/∂t + ∂(h u)/∂x + ∂(h v)/∂y = 0
//! ```
//!
//! on an Arakawa C grid inside a closed basin. Elevation lives at cell centres,
//! `u[i, j]` on the east face of cell `(i, j)` and `v[i, j]` on its north face, so
//! all three arrays share the `nx × ny` shape. The outermost east/north faces are
//! walls and stay at zero; the west/south walls are implicit. Each substep is a
//! Störmer-Verlet (half kick, drift, half kick) update, which is second order,
//! time-reversible, and conserves `Σ η` to rounding because the elevation update
//! is in flux form.

use std::f64::consts::PI;
use std::io::Write;

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Rect};

/// Physical constants of the wave model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveConfig {
    /// Still-water depth h (m).
    pub depth: f64,
    /// Gravitational acceleration (m/s²).
    pub gravity: f64,
    /// Angular frequency ω of the forcing tide (rad/s).
    pub omega: f64,
    /// Elevation amplitude η₀ at the coast at t = 0 (m).
    pub eta0: f64,
    /// Offshore length L (m).
    pub offshore_length: f64,
    /// Grid spacing Δx = Δy (m).
    pub dx: f64,
    /// Courant number used to pick the internal substep.
    pub courant: f64,
}

impl Default for WaveConfig {
    fn default() -> Self {
        Self {
            depth: 120.0,
            gravity: 9.81,
            omega: 2.0 * PI / 43_200.0,
            eta0: 5.0,
            offshore_length: 200.0,
            dx: 4.0,
            courant: 0.5,
        }
    }
}

impl WaveConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.depth > 0.0
            && self.gravity > 0.0
            && self.omega > 0.0
            && self.dx > 0.0
            && self.courant > 0.0
            && self.courant <= 0.5
            && self.eta0.is_finite()
            && self.offshore_length.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid wave configuration: {self:?}")))
        }
    }

    /// Long-wave phase speed √(g h).
    pub fn wave_speed(&self) -> f64 {
        (self.gravity * self.depth).sqrt()
    }

    /// λ = (2π/ω)·√(g h).
    pub fn wavelength(&self) -> f64 {
        2.0 * PI / self.omega * self.wave_speed()
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength()
    }

    /// Largest stable substep for this grid.
    pub fn max_substep(&self) -> f64 {
        self.courant * self.dx / self.wave_speed()
    }
}

/// Closed-form standing tide `η = R_L cos(kx′)/cos(kL) · cos(ωt)` (real part),
/// with `R_L` chosen so that `η(0, 0) = η₀`.
pub fn analytic_eta(cfg: &WaveConfig, x_offshore: f64, t: f64) -> Result<f64> {
    let k = cfg.wavenumber();
    let cos_kl = (k * cfg.offshore_length).cos();
    if cos_kl.abs() < 1e-9 {
        return Err(Error::Resonance {
            cos_kl,
            offshore_length: cfg.offshore_length,
            quarter_wavelength: cfg.wavelength() / 4.0,
        });
    }
    let r_l = cfg.eta0 * cos_kl;
    Ok(r_l * (k * x_offshore).cos() / cos_kl * (cfg.omega * t).cos())
}

/// Gridded surface state.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    /// Position of cell (0, 0)'s centre.
    pub origin: Point2,
    pub t: f64,
    pub eta: Array2<f64>,
    pub u: Array2<f64>,
    pub v: Array2<f64>,
}

impl WaveField {
    /// Flat, motionless field.
    pub fn at_rest(nx: usize, ny: usize, dx: f64, origin: Point2) -> Self {
        Self {
            nx,
            ny,
            dx,
            origin,
            t: 0.0,
            eta: Array2::zeros((nx, ny)),
            u: Array2::zeros((nx, ny)),
            v: Array2::zeros((nx, ny)),
        }
    }

    /// Grid covering `area` with cell centres on the area's corners and edges.
    pub fn covering(area: &Rect, dx: f64) -> Self {
        let nx = (area.width() / dx).round() as usize + 1;
        let ny = (area.height() / dx).round() as usize + 1;
        Self::at_rest(nx, ny, dx, area.min)
    }

    /// Field at rest except for an elevation profile `f(x, y)` sampled at cell centres.
    pub fn with_elevation(mut self, f: impl Fn(Point2) -> f64) -> Self {
        for i in 0..self.nx {
            for j in 0..self.ny {
                self.eta[[i, j]] = f(self.cell_center(i, j));
            }
        }
        self
    }

    /// Field initialised with the closed-form tide at t = 0, x′ measured from the west wall.
    pub fn with_standing_tide(self, cfg: &WaveConfig) -> Result<Self> {
        analytic_eta(cfg, 0.0, 0.0)?;
        let dx = self.dx;
        let x0 = self.origin.x - 0.5 * dx;
        Ok(self.with_elevation(|p| {
            analytic_eta(cfg, p.x - x0, 0.0).expect("resonance already excluded")
        }))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + i as f64 * self.dx,
            self.origin.y + j as f64 * self.dx,
        )
    }

    /// Σ η·dx².
    pub fn volume(&self) -> f64 {
        self.eta.sum() * self.dx * self.dx
    }

    pub fn max_abs_eta(&self) -> f64 {
        self.eta.iter().fold(0.0_f64, |m, &e| m.max(e.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.eta.iter().chain(self.u.iter()).chain(self.v.iter()).all(|x| x.is_finite())
    }

    /// Bilinear interpolation of η, clamped to the grid.
    pub fn sample_eta(&self, p: Point2) -> f64 {
        let fx = ((p.x - self.origin.x) / self.dx).clamp(0.0, (self.nx - 1) as f64);
        let fy = ((p.y - self.origin.y) / self.dx).clamp(0.0, (self.ny - 1) as f64);
        let i0 = (fx.floor() as usize).min(self.nx.saturating_sub(2));
        let j0 = (fy.floor() as usize).min(self.ny.saturating_sub(2));
        let i1 = (i0 + 1).min(self.nx - 1);
        let j1 = (j0 + 1).min(self.ny - 1);
        let tx = fx - i0 as f64;
        let ty = fy - j0 as f64;
        let e = &self.eta;
        (1.0 - tx) * (1.0 - ty) * e[[i0, j0]]
            + tx * (1.0 - ty) * e[[i1, j0]]
            + (1.0 - tx) * ty * e[[i0, j1]]
            + tx * ty * e[[i1, j1]]
    }

    /// Face velocities averaged onto cell centres.
    pub fn centered_velocity(&self, i: usize, j: usize) -> (f64, f64) {
        let uw = if i == 0 { 0.0 } else { self.u[[i - 1, j]] };
        let vs = if j == 0 { 0.0 } else { self.v[[i, j - 1]] };
        (0.5 * (uw + self.u[[i, j]]), 0.5 * (vs + self.v[[i, j]]))
    }

    /// Writes one row per cell: `x,y,eta,u,v` with velocities at cell centres.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# wave-field v1 t={}", self.t)?;
        writeln!(w, "x,y,eta,u,v")?;
        for i in 0..self.nx {
            for j in 0..self.ny {
                let c = self.cell_center(i, j);
                let (uc, vc) = self.centered_velocity(i, j);
                writeln!(w, "{},{},{},{},{}", c.x, c.y, self.eta[[i, j]], uc, vc)?;
            }
        }
        Ok(())
    }

    fn substep(&mut self, dt: f64, g: f64, h: f64) -> bool {
        let (nx, ny) = (self.nx, self.ny);
        let kick = 0.5 * dt * g / self.dx;
        self.kick(kick);

        let c = dt * h / self.dx;
        let eta = self.eta.as_slice_mut().expect("standard layout");
        let u = self.u.as_slice().expect("standard layout");
        let v = self.v.as_slice().expect("standard layout");
        let mut finite = true;
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                let uw = if i == 0 { 0.0 } else { u[idx - ny] };
                let vs = if j == 0 { 0.0 } else { v[idx - 1] };
                let e = eta[idx] - c * ((u[idx] - uw) + (v[idx] - vs));
                finite &= e.is_finite();
                eta[idx] = e;
            }
        }

        self.kick(kick);
        finite
    }

    // u -= (dt/2)·g·∂η/∂x on interior faces; wall faces stay zero.
    fn kick(&mut self, coef: f64) {
        let (nx, ny) = (self.nx, self.ny);
        let eta = self.eta.as_slice().expect("standard layout");
        let u = self.u.as_slice_mut().expect("standard layout");
        let v = self.v.as_slice_mut().expect("standard layout");
        for i in 0..nx {
            for j in 0..ny {
                let idx = i * ny + j;
                u[idx] = if i + 1 < nx {
                    u[idx] - coef * (eta[idx + ny] - eta[idx])
                } else {
                    0.0
                };
                v[idx] = if j + 1 < ny {
                    v[idx] - coef * (eta[idx + 1] - eta[idx])
                } else {
                    0.0
                };
            }
        }
    }
}

/// Advances `field` by `dt_env` seconds, subdividing into CFL-limited substeps.
pub fn step_wave(field: &mut WaveField, cfg: &WaveConfig, dt_env: f64) -> Result<()> {
    if !(dt_env > 0.0) {
        return Err(Error::Contract(format!("wave step must be positive, got {dt_env}")));
    }
    if (field.dx - cfg.dx).abs() > 1e-12 * cfg.dx {
        return Err(Error::Contract(format!(
            "field spacing {} differs from configured {}",
            field.dx, cfg.dx
        )));
    }
    let n = (dt_env / cfg.max_substep()).ceil().max(1.0) as usize;
    let dt = dt_env / n as f64;
    let t0 = field.t;
    for k in 0..n {
        let finite = field.substep(dt, cfg.gravity, cfg.depth);
        field.t = t0 + (k + 1) as f64 * dt;
        if !finite {
            return Err(Error::SolverDivergence {
                substep: k,
                time: field.t,
                quantity: "eta",
            });
        }
    }
    if !field.is_finite() {
        return Err(Error::SolverDivergence {
            substep: n - 1,
            time: field.t,
            quantity: "velocity",
        });
    }
    Ok(())
}

/// One Lamb-Oseen vortex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Vortex {
    pub center: Point2,
    /// Circulation Γ (m²/s); positive is counter-clockwise.
    pub gamma: f64,
    /// Core radius δ (m).
    pub delta: f64,
}

impl Vortex {
    /// Induced velocity, divergence-free rotational form.
    pub fn velocity(&self, p: Point2) -> (f64, f64) {
        let rx = p.x - self.center.x;
        let ry = p.y - self.center.y;
        let r2 = rx * rx + ry * ry;
        let d2 = self.delta * self.delta;
        // (1 - e^{-r²/δ²}) / r² → 1/δ² as r → 0; the factor multiplies (rx, ry) which vanish.
        let shape = if r2 < 1e-12 * d2 {
            1.0 / d2
        } else {
            -(-r2 / d2).exp_m1() / r2
        };
        let k = self.gamma / (2.0 * PI) * shape;
        (-k * ry, k * rx)
    }

    pub fn vorticity(&self, p: Point2) -> f64 {
        let r2 = (p.x - self.center.x).powi(2) + (p.y - self.center.y).powi(2);
        let d2 = self.delta * self.delta;
        self.gamma / (PI * d2) * (-r2 / d2).exp()
    }
}

/// Superposition of vortices.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VortexSet {
    pub vortices: Vec<Vortex>,
}

/// Current velocity at a point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct CurrentSample {
    pub vx: f64,
    pub vy: f64,
    pub speed: f64,
}

impl CurrentSample {
    pub fn new(vx: f64, vy: f64) -> Self {
        Self {
            vx,
            vy,
            speed: vx.hypot(vy),
        }
    }
}

impl VortexSet {
    pub fn new(vortices: Vec<Vortex>) -> Result<Self> {
        if let Some(v) = vortices.iter().find(|v| !(v.delta > 0.0) || !v.gamma.is_finite()) {
            return Err(Error::Config(format!("invalid vortex {v:?}: radius must be positive")));
        }
        Ok(Self { vortices })
    }

    /// `count` vortices with centres uniform in `area`, Γ and δ uniform in the given ranges.
    /// The rotation sense is drawn uniformly.
    pub fn random<R: Rng>(
        rng: &mut R,
        count: usize,
        area: &Rect,
        gamma_range: (f64, f64),
        delta_range: (f64, f64),
    ) -> Self {
        let vortices = (0..count)
            .map(|_| {
                let center = Point2::new(
                    rng.random_range(area.min.x..=area.max.x),
                    rng.random_range(area.min.y..=area.max.y),
                );
                let magnitude = rng.random_range(gamma_range.0..=gamma_range.1);
                let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let delta = rng.random_range(delta_range.0..=delta_range.1);
                Vortex {
                    center,
                    gamma: sign * magnitude,
                    delta,
                }
            })
            .collect();
        Self { vortices }
    }

    pub fn is_empty(&self) -> bool {
        self.vortices.is_empty()
    }
}

pub fn current_velocity(vortices: &VortexSet, p: Point2) -> CurrentSample {
    let (vx, vy) = vortices
        .vortices
        .iter()
        .map(|v| v.velocity(p))
        .fold((0.0, 0.0), |(ax, ay), (x, y)| (ax + x, ay + y));
    CurrentSample::new(vx, vy)
}

pub fn vorticity(vortices: &VortexSet, p: Point2) -> f64 {
    vortices.vortices.iter().map(|v| v.vorticity(p)).sum()
}
