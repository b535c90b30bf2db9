use crate::dlt::DeviceId;
use crate::kernel::RngStream;

use super::{LoraError, Sf};

/// Received-power model shared by uplink and downlink.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub ap_tx_power_dbm: f64,
    /// Path loss at 1000 m.
    pub path_loss_ref_db: f64,
    pub path_loss_exponent: f64,
    /// Receiver sensitivity for SF7..SF12.
    pub sensitivity_dbm: [f64; 6],
    /// Per-device log-normal shadowing.
    pub shadowing_sigma_db: f64,
    /// Per-frame Rayleigh block fading.
    pub rayleigh_fading: bool,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 14.0,
            ap_tx_power_dbm: 14.0,
            path_loss_ref_db: 128.95,
            path_loss_exponent: 3.5,
            sensitivity_dbm: [-123.0, -126.0, -129.0, -132.0, -134.5, -137.0],
            shadowing_sigma_db: 12.0,
            rayleigh_fading: true,
        }
    }
}

impl LinkBudget {
    pub fn path_loss_db(&self, distance_m: f64) -> f64 {
        let d = distance_m.max(1.0);
        self.path_loss_ref_db + 10.0 * self.path_loss_exponent * (d / 1000.0).log10()
    }

    pub fn sensitivity(&self, sf: Sf) -> f64 {
        self.sensitivity_dbm[sf.index()]
    }

    /// Fading gain in dB for one frame; 0 dB when fading is off.
    pub fn fading_db(&self, rng: &mut RngStream) -> f64 {
        if self.rayleigh_fading {
            // Power gain of a unit-mean Rayleigh channel is Exp(1).
            let gain = rng.exponential(1.0).max(f64::MIN_POSITIVE);
            10.0 * gain.log10()
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DevicePlacement {
    pub id: DeviceId,
    pub x: f64,
    pub y: f64,
    pub distance: f64,
    pub sf: Sf,
    pub shadowing_db: f64,
}

/// A circular cell with the access point at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct CellLayout {
    pub radius: f64,
    /// Outer ring radius for SF7..SF12, nondecreasing.
    pub sf_thresholds: [f64; 6],
    pub devices: Vec<DevicePlacement>,
}

pub const DEFAULT_SF_THRESHOLDS: [f64; 6] = [250.0, 375.0, 500.0, 625.0, 750.0, 1000.0];

/// The smallest SF whose ring reaches `distance`.
pub fn allocate_sf(distance: f64, radius: f64, thresholds: &[f64; 6]) -> Result<Sf, LoraError> {
    if !(0.0..=radius).contains(&distance) {
        return Err(LoraError::OutsideCell { distance, radius });
    }
    thresholds
        .iter()
        .position(|&t| t >= distance)
        .map(|i| Sf::ALL[i])
        .ok_or(LoraError::OutsideCell { distance, radius })
}

impl CellLayout {
    /// Places `count` devices uniformly on the disk and assigns SFs by distance.
    pub fn generate(
        count: u32,
        radius: f64,
        sf_thresholds: [f64; 6],
        shadowing_sigma_db: f64,
        rng: &mut RngStream,
    ) -> Result<Self, LoraError> {
        if sf_thresholds.windows(2).any(|w| w[0] > w[1]) || sf_thresholds[5] < radius {
            return Err(LoraError::Thresholds(sf_thresholds.to_vec()));
        }
        let mut devices = Vec::with_capacity(count as usize);
        for id in 0..count {
            let r = radius * rng.unit().sqrt();
            let theta = std::f64::consts::TAU * rng.unit();
            let shadowing_db = rng.normal(0.0, shadowing_sigma_db);
            let (x, y) = (r * theta.cos(), r * theta.sin());
            let distance = x.hypot(y).min(radius);
            devices.push(DevicePlacement {
                id,
                x,
                y,
                distance,
                sf: allocate_sf(distance, radius, &sf_thresholds)?,
                shadowing_db,
            });
        }
        Ok(Self {
            radius,
            sf_thresholds,
            devices,
        })
    }
}
