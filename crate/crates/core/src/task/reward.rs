//! Acoustic link rate and reward terms.

use serde::{Deserialize, Serialize};

/// Thorp absorption coefficient (dB/km) at `freq_khz`.
pub fn thorp_absorption_db_per_km(freq_khz: f64) -> f64 {
    let f2 = freq_khz * freq_khz;
    0.11 * f2 / (1.0 + f2) + 44.0 * f2 / (4100.0 + f2) + 2.75e-4 * f2 + 0.003
}

/// Parameters of the node-to-AUV acoustic link.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkBudget {
    /// Source level (dB re µPa).
    pub p_tx_db: f64,
    /// Spreading exponent κ.
    pub kappa: f64,
    /// Carrier frequency used for absorption (kHz).
    pub freq_khz: f64,
    /// Distances below this are evaluated at the floor (m).
    pub min_distance: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            p_tx_db: 120.0,
            kappa: 1.5,
            freq_khz: 15.0,
            min_distance: 1.0,
        }
    }
}

impl LinkBudget {
    /// `P_tx − 10κ log10(l) − α(f)·l/1000` in dB.
    pub fn snr_db(&self, distance: f64) -> f64 {
        let l = distance.max(self.min_distance);
        self.p_tx_db - 10.0 * self.kappa * l.log10() - thorp_absorption_db_per_km(self.freq_khz) * l * 1e-3
    }

    /// Spectral efficiency log2(1 + SNR) with SNR converted to linear.
    pub fn rate(&self, distance: f64) -> f64 {
        (1.0 + 10f64.powf(self.snr_db(distance) / 10.0)).log2()
    }
}

/// Weights of the per-AUV reward.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardWeights {
    pub w_rate: f64,
    pub w_energy: f64,
    pub w_coll: f64,
    pub w_usv: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            w_rate: 1.0,
            w_energy: 0.05,
            w_coll: 10.0,
            w_usv: 0.1,
        }
    }
}

/// Task reward before USV shaping.
pub fn base_reward(w: &RewardWeights, rate: f64, energy: f64, collided: bool) -> f64 {
    w.w_rate * rate - w.w_energy * energy - if collided { w.w_coll } else { 0.0 }
}

/// `l_max / l` with `l` floored at `l_floor`.
pub fn usv_distance_reward(distance: f64, l_max: f64, l_floor: f64) -> f64 {
    l_max / distance.max(l_floor)
}

/// Propulsion energy `c_e · speed³ · dt`.
pub fn propulsion_energy(c_e: f64, speed: f64, dt: f64) -> f64 {
    c_e * speed.powi(3) * dt
}
