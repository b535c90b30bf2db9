//! LoRa physical layer: time-on-air, per-SF payload limits and fragmentation.

use std::fmt;

use crate::dlt::{Bytes, DltProfile};

use super::LoraError;

/// Spreading factor, 7 through 12.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Sf(u8);

impl Sf {
    pub const SF7: Sf = Sf(7);
    pub const SF12: Sf = Sf(12);

    pub const ALL: [Sf; 6] = [Sf(7), Sf(8), Sf(9), Sf(10), Sf(11), Sf(12)];

    pub fn new(sf: u8) -> Result<Self, LoraError> {
        if (7..=12).contains(&sf) {
            Ok(Sf(sf))
        } else {
            Err(LoraError::InvalidSf(sf))
        }
    }

    pub fn value(self) -> u8 {
        self.0
    }

    /// Zero-based position, SF7 = 0.
    pub fn index(self) -> usize {
        usize::from(self.0 - 7)
    }
}

impl fmt::Display for Sf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SF{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadioConfig {
    pub sf: Sf,
    pub bandwidth_hz: f64,
    /// 1 through 4, for rates 4/5 .. 4/8.
    pub coding_rate: u8,
    pub preamble_symbols: u32,
    pub explicit_header: bool,
    pub crc: bool,
    pub low_data_rate_optimize: bool,
}

impl RadioConfig {
    /// EU868 uplink/downlink settings at 125 kHz.
    pub fn eu868(sf: Sf) -> Self {
        Self {
            sf,
            bandwidth_hz: 125_000.0,
            coding_rate: 1,
            preamble_symbols: 8,
            explicit_header: true,
            crc: true,
            low_data_rate_optimize: sf.value() >= 11,
        }
    }

    pub fn symbol_time(&self) -> f64 {
        f64::from(1u32 << self.sf.value()) / self.bandwidth_hz
    }

    /// Airtime of a frame with `payload_bytes` of PHY payload, without range checks.
    pub fn airtime(&self, payload_bytes: Bytes) -> f64 {
        let sf = i64::from(self.sf.value());
        let de = i64::from(self.low_data_rate_optimize);
        let ih = i64::from(!self.explicit_header);
        let crc = i64::from(self.crc);
        let numerator = 8 * i64::from(payload_bytes) - 4 * sf + 28 + 16 * crc - 20 * ih;
        let denominator = 4 * (sf - 2 * de);
        let blocks = if numerator > 0 {
            (numerator + denominator - 1) / denominator
        } else {
            0
        };
        let payload_symbols = 8 + blocks * (i64::from(self.coding_rate) + 4);
        let symbols = f64::from(self.preamble_symbols) + 4.25 + payload_symbols as f64;
        symbols * self.symbol_time()
    }
}

/// Largest PHY payload allowed in one frame at `sf`.
pub fn max_frame_payload(sf: Sf) -> Bytes {
    match sf.value() {
        7 | 8 => 222,
        9 => 115,
        _ => 51,
    }
}

/// Time-on-air of a single frame.
pub fn time_on_air(config: &RadioConfig, payload_bytes: Bytes) -> Result<f64, LoraError> {
    let max = max_frame_payload(config.sf);
    if payload_bytes == 0 || payload_bytes > max {
        return Err(LoraError::FrameSize {
            sf: config.sf,
            bytes: payload_bytes,
            max,
        });
    }
    Ok(config.airtime(payload_bytes))
}

/// Splits `total_bytes` into full frames followed by the remainder.
pub fn fragment(total_bytes: Bytes, sf: Sf) -> Vec<Bytes> {
    let max = max_frame_payload(sf);
    let full = total_bytes / max;
    let rest = total_bytes % max;
    let mut frames = vec![max; full as usize];
    if rest > 0 {
        frames.push(rest);
    }
    frames
}

/// Airtime of every fragment of `total_bytes` at `sf`.
pub fn fragmented_airtime(total_bytes: Bytes, sf: Sf) -> f64 {
    let radio = RadioConfig::eu868(sf);
    fragment(total_bytes, sf)
        .into_iter()
        .map(|bytes| radio.airtime(bytes))
        .sum()
}

/// Airtime of one SF12 header broadcast for `profile`.
pub fn broadcast_airtime(profile: &DltProfile) -> Result<f64, LoraError> {
    let header = profile
        .header_size
        .ok_or(LoraError::NoHeader(profile.name))?;
    Ok(fragmented_airtime(header, Sf::SF12))
}

/// Headers per second through a fully duty-cycled SF12 channel.
pub fn broadcast_rate_limit(profile: &DltProfile) -> Result<f64, LoraError> {
    broadcast_airtime(profile).map(|airtime| 1.0 / airtime)
}

/// Header rate under a regulatory `duty_cycle` (fraction of time on air).
pub fn duty_limited_rate(profile: &DltProfile, duty_cycle: f64) -> Result<f64, LoraError> {
    broadcast_rate_limit(profile).map(|rate| rate * duty_cycle)
}
