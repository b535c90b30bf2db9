//! EU868 LoRaWAN model: airtime, SF allocation, duty cycle, capture and an
//! event-driven single-gateway link with acknowledged uplinks.

mod capture;
mod cell;
mod duty;
mod link;
mod phy;

pub use capture::{
    capture_decision, survives_interference, ChannelId, Frame, FrameId, FrameOutcome, SirMatrix,
    Transmitter,
};
pub use cell::{allocate_sf, CellLayout, DevicePlacement, LinkBudget, DEFAULT_SF_THRESHOLDS};
pub use duty::{audit_duty_cycle, DutyCycleTracker, DutyViolation, SubBandId, TxRecord};
pub use link::{LinkDriver, LinkEvent, LinkNotice, LinkOutput, LinkStats, LoraLink, UplinkOutcome};
pub use phy::{
    broadcast_airtime, broadcast_rate_limit, duty_limited_rate, fragment, fragmented_airtime,
    max_frame_payload, time_on_air, RadioConfig, Sf,
};

use thiserror::Error;

use crate::dlt::{Bytes, DeviceId, DltName};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoraError {
    #[error("spreading factor {0} outside 7..=12")]
    InvalidSf(u8),
    #[error("{bytes} B does not fit one {sf} frame (1..={max} B); fragment it")]
    FrameSize { sf: Sf, bytes: Bytes, max: Bytes },
    #[error("{0} has no block header to broadcast")]
    NoHeader(DltName),
    #[error("distance {distance} m lies outside the {radius} m cell")]
    OutsideCell { distance: f64, radius: f64 },
    #[error("SF thresholds must be nondecreasing and reach the cell edge: {0:?}")]
    Thresholds(Vec<f64>),
    #[error("device {0} already has a transfer in that direction")]
    Busy(DeviceId),
    #[error("unknown device {0}")]
    UnknownDevice(DeviceId),
    #[error("invalid LoRaWAN setting: {0}")]
    Config(String),
}

/// Channels and duty cycle of one uplink sub-band.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBandPlan {
    pub channels: u32,
    pub duty_cycle: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LorawanConfig {
    pub radius_m: f64,
    pub devices: u32,
    pub sf_thresholds_m: [f64; 6],
    pub budget: LinkBudget,
    pub sir: SirMatrix,
    pub demodulators: usize,
    pub uplink_subbands: Vec<SubBandPlan>,
    /// Duty cycle of the sub-band carrying ACKs and unicast downlinks.
    pub downlink_duty_cycle: f64,
    /// Duty cycle of the SF12 header-broadcast sub-band.
    pub broadcast_duty_cycle: f64,
    /// Delay from the end of an uplink to its ACK.
    pub ack_turnaround_s: f64,
    pub max_retx: u32,
}

impl Default for LorawanConfig {
    fn default() -> Self {
        Self {
            radius_m: 1000.0,
            devices: 100,
            sf_thresholds_m: DEFAULT_SF_THRESHOLDS,
            budget: LinkBudget::default(),
            sir: SirMatrix::default(),
            demodulators: 8,
            uplink_subbands: vec![
                SubBandPlan {
                    channels: 5,
                    duty_cycle: 0.01,
                },
                SubBandPlan {
                    channels: 3,
                    duty_cycle: 0.01,
                },
            ],
            downlink_duty_cycle: 0.1,
            broadcast_duty_cycle: 0.01,
            ack_turnaround_s: 1.0,
            max_retx: 3,
        }
    }
}

impl LorawanConfig {
    pub fn validate(&self) -> Result<(), LoraError> {
        let bad = |msg: String| Err(LoraError::Config(msg));
        if !(self.radius_m > 0.0) {
            return bad(format!("radius must be positive, got {}", self.radius_m));
        }
        if self.sf_thresholds_m.windows(2).any(|w| w[0] > w[1])
            || self.sf_thresholds_m[5] < self.radius_m
        {
            return Err(LoraError::Thresholds(self.sf_thresholds_m.to_vec()));
        }
        if self.uplink_subbands.is_empty() || self.uplink_subbands.iter().any(|s| s.channels == 0)
        {
            return bad("every uplink sub-band needs at least one channel".into());
        }
        let duties = self
            .uplink_subbands
            .iter()
            .map(|s| s.duty_cycle)
            .chain([self.downlink_duty_cycle, self.broadcast_duty_cycle]);
        for d in duties {
            if !(d > 0.0 && d <= 1.0) {
                return bad(format!("duty cycle {d} outside (0, 1]"));
            }
        }
        if self.demodulators == 0 {
            return bad("at least one demodulator is required".into());
        }
        if !(self.ack_turnaround_s >= 0.0) || !(self.budget.shadowing_sigma_db >= 0.0) {
            return bad("turnaround and shadowing must be non-negative".into());
        }
        if !self.sir.is_well_formed() {
            return bad("co-SF SIR thresholds must dominate inter-SF ones".into());
        }
        Ok(())
    }
}
