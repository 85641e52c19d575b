//! Ultra-short baseline positioning.
//!
//! The USV carries two orthogonal hydrophone pairs of spacing `d`. For an AUV at
//! horizontal offset `(Δx, Δy)` and slant range `S`, the measured phase differences are
//! `Δφ = (2π f d / c) · (Δx, Δy) / S` plus Gaussian noise. With the AUV depth known
//! from its pressure sensor, the direction cosines invert to a horizontal fix.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UsblConfig {
    /// Signal frequency (Hz) of this AUV's channel.
    pub frequency_hz: f64,
    /// Hydrophone spacing d (m).
    pub spacing: f64,
    /// Speed of sound (m/s).
    pub sound_speed: f64,
    /// Phase noise standard deviation (rad).
    pub sigma: f64,
}

impl Default for UsblConfig {
    fn default() -> Self {
        Self {
            frequency_hz: 15_000.0,
            spacing: 0.033,
            sound_speed: 1500.0,
            sigma: 0.01,
        }
    }
}

impl UsblConfig {
    pub fn with_frequency(self, frequency_hz: f64) -> Self {
        Self {
            frequency_hz,
            ..self
        }
    }

    pub fn with_sigma(self, sigma: f64) -> Self {
        Self { sigma, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.frequency_hz > 0.0 && self.spacing > 0.0 && self.sound_speed > 0.0 && self.sigma >= 0.0 {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid USBL configuration: {self:?}")))
        }
    }

    /// Phase difference per unit direction cosine, 2π f d / c (rad).
    pub fn phase_gain(&self) -> f64 {
        2.0 * PI * self.frequency_hz * self.spacing / self.sound_speed
    }
}

/// Surface vehicle pose: horizontal position and local surface elevation.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct UsvState {
    pub pos: Point2,
    pub eta: f64,
}

impl UsvState {
    pub fn new(x: f64, y: f64, eta: f64) -> Self {
        Self {
            pos: Point2::new(x, y),
            eta,
        }
    }
}

/// True AUV position; `depth` is positive downwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AuvTruth {
    pub pos: Point2,
    pub depth: f64,
}

impl AuvTruth {
    pub fn new(x: f64, y: f64, depth: f64) -> Self {
        Self {
            pos: Point2::new(x, y),
            depth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseMeasurement {
    pub dphi_x: f64,
    pub dphi_y: f64,
}

/// Vertical separation between the array and the AUV: depth plus surface elevation.
pub fn vertical_separation(usv: &UsvState, depth: f64) -> f64 {
    depth + usv.eta
}

pub fn slant_range(usv: &UsvState, auv: &AuvTruth) -> f64 {
    let dx = auv.pos.x - usv.pos.x;
    let dy = auv.pos.y - usv.pos.y;
    let dz = vertical_separation(usv, auv.depth);
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Noise-free phase differences.
pub fn expected_phase(usv: &UsvState, auv: &AuvTruth, cfg: &UsblConfig) -> PhaseMeasurement {
    let g = cfg.phase_gain() / slant_range(usv, auv);
    PhaseMeasurement {
        dphi_x: g * (auv.pos.x - usv.pos.x),
        dphi_y: g * (auv.pos.y - usv.pos.y),
    }
}

/// Noisy phase differences. Always consumes exactly two normal draws from `rng`,
/// so paired experiments see identical noise regardless of σ.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    usv: &UsvState,
    auv: &AuvTruth,
    cfg: &UsblConfig,
    rng: &mut R,
) -> PhaseMeasurement {
    let clean = expected_phase(usv, auv, cfg);
    let nx: f64 = rng.sample(StandardNormal);
    let ny: f64 = rng.sample(StandardNormal);
    PhaseMeasurement {
        dphi_x: clean.dphi_x + cfg.sigma * nx,
        dphi_y: clean.dphi_y + cfg.sigma * ny,
    }
}

/// Inverts phase differences and known depth into a horizontal position estimate.
pub fn estimate_position(
    meas: &PhaseMeasurement,
    depth: f64,
    usv: &UsvState,
    cfg: &UsblConfig,
) -> Result<Point2> {
    let gain = cfg.phase_gain();
    let a = meas.dphi_x / gain;
    let b = meas.dphi_y / gain;
    let n2 = a * a + b * b;
    if !(n2 < 1.0) {
        return Err(Error::InfeasibleGeometry(n2));
    }
    let s = vertical_separation(usv, depth) / (1.0 - n2).sqrt();
    Ok(Point2::new(usv.pos.x + a * s, usv.pos.y + b * s))
}

/// One row of a measurement log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementRecord {
    pub t: f64,
    pub auv_id: usize,
    pub meas: PhaseMeasurement,
    pub estimate: Option<Point2>,
    pub truth: Point2,
}

impl MeasurementRecord {
    pub const CSV_HEADER: &'static str = "t,auv_id,dphi_x,dphi_y,x_hat,y_hat,x_true,y_true";

    /// Dropouts leave the estimate columns empty.
    pub fn csv_row(&self) -> String {
        let (xh, yh) = match self.estimate {
            Some(p) => (p.x.to_string(), p.y.to_string()),
            None => (String::new(), String::new()),
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            self.t, self.auv_id, self.meas.dphi_x, self.meas.dphi_y, xh, yh, self.truth.x, self.truth.y
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg0() -> UsblConfig {
        UsblConfig::default().with_sigma(0.0)
    }

    #[test]
    fn slant_range_examples() {
        let usv = UsvState::new(0.0, 0.0, 0.0);
        assert_eq!(slant_range(&usv, &AuvTruth::new(30.0, 40.0, 120.0)), 130.0);
        assert_eq!(slant_range(&usv, &AuvTruth::new(0.0, 0.0, 87.5)), 87.5);
        let wavy = UsvState::new(10.0, -4.0, 5.0);
        assert_eq!(slant_range(&wavy, &AuvTruth::new(10.0, -4.0, 120.0)), 125.0);
    }

    #[test]
    fn phase_gain_for_first_channel() {
        // 2π · 15000 · 0.033 / 1500 = 2π · 0.33
        assert!((cfg0().phase_gain() - 2.0 * PI * 0.33).abs() < 1e-12);
    }

    #[test]
    fn directly_below_gives_zero_phase() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = synthesize_measurement(
            &UsvState::new(20.0, 30.0, 0.0),
            &AuvTruth::new(20.0, 30.0, 100.0),
            &cfg0(),
            &mut rng,
        );
        assert_eq!((m.dphi_x, m.dphi_y), (0.0, 0.0));
    }

    #[test]
    fn reference_geometry_phases() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let m = synthesize_measurement(
            &UsvState::default(),
            &AuvTruth::new(30.0, 40.0, 120.0),
            &cfg0(),
            &mut rng,
        );
        // 2π·0.33·30/130 and 2π·0.33·40/130
        assert!((m.dphi_x - 0.478_488_727_239_061).abs() < 1e-9, "{}", m.dphi_x);
        assert!((m.dphi_y - 0.637_984_969_652_081).abs() < 1e-9, "{}", m.dphi_y);
    }

    #[test]
    fn noise_std_matches_sigma() {
        let cfg = UsblConfig::default().with_sigma(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let usv = UsvState::default();
        let auv = AuvTruth::new(30.0, 40.0, 120.0);
        let clean = expected_phase(&usv, &auv, &cfg).dphi_x;
        let n = 10_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| synthesize_measurement(&usv, &auv, &cfg, &mut rng).dphi_x - clean)
            .collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        assert!((var.sqrt() - 0.05).abs() <= 0.05 * 0.05);
    }

    #[test]
    fn estimate_examples() {
        let cfg = cfg0();
        let usv = UsvState::default();
        let p = estimate_position(&PhaseMeasurement { dphi_x: 0.0, dphi_y: 0.0 }, 120.0, &usv, &cfg).unwrap();
        assert_eq!(p, Point2::new(0.0, 0.0));

        let gain = cfg.phase_gain();
        let m = PhaseMeasurement {
            dphi_x: gain * 30.0 / 130.0,
            dphi_y: gain * 40.0 / 130.0,
        };
        let p = estimate_position(&m, 120.0, &usv, &cfg).unwrap();
        assert!((p.x - 30.0).abs() < 1e-6 && (p.y - 40.0).abs() < 1e-6);
    }

    #[test]
    fn infeasible_direction_cosines() {
        let cfg = cfg0();
        let gain = cfg.phase_gain();
        let m = PhaseMeasurement {
            dphi_x: 0.8 * gain,
            dphi_y: 0.7 * gain,
        };
        let err = estimate_position(&m, 100.0, &UsvState::default(), &cfg).unwrap_err();
        assert!(matches!(err, Error::InfeasibleGeometry(v) if (v - 1.13).abs() < 1e-9));
    }

    #[test]
    fn same_seed_same_sequence() {
        let cfg = UsblConfig::default();
        let usv = UsvState::new(5.0, 5.0, 1.0);
        let auv = AuvTruth::new(60.0, 20.0, 100.0);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..50)
                .map(|_| synthesize_measurement(&usv, &auv, &cfg, &mut rng))
                .map(|m| (m.dphi_x.to_bits(), m.dphi_y.to_bits()))
                .collect::<Vec<_>>()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    #[test]
    fn record_row_leaves_dropout_blank() {
        let r = MeasurementRecord {
            t: 10.0,
            auv_id: 1,
            meas: PhaseMeasurement { dphi_x: 0.5, dphi_y: -0.25 },
            estimate: None,
            truth: Point2::new(3.0, 4.0),
        };
        assert_eq!(r.csv_row(), "10,1,0.5,-0.25,,,3,4");
    }
}
