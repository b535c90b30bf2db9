use crate::dlt::{transaction_total_size, Bytes, DltName};
use crate::lorawan::{broadcast_airtime, broadcast_rate_limit, duty_limited_rate, fragment, fragmented_airtime, Sf};

use super::{ExperimentError, ScenarioConfig};

/// Airtime of one item sent at one SF.
#[derive(Debug, Clone, PartialEq)]
pub struct ToaRow {
    pub dlt: DltName,
    /// `header` or `transaction`.
    pub item: &'static str,
    pub bytes: Bytes,
    pub sf: Sf,
    pub fragments: usize,
    pub airtime_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateRow {
    pub dlt: DltName,
    pub header_bytes: Bytes,
    pub fragments: usize,
    pub airtime_s: f64,
    pub rate_full_per_s: f64,
    pub duty_cycle: f64,
    pub rate_duty_per_s: f64,
}

/// SF12 header broadcasts, plus the publish transaction at every SF.
pub fn run_toa(cfg: &ScenarioConfig) -> Result<Vec<ToaRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &dlt in &cfg.dlts {
        let profile = cfg.profile(dlt);
        if let Some(header) = profile.header_size {
            rows.push(ToaRow {
                dlt,
                item: "header",
                bytes: header,
                sf: Sf::SF12,
                fragments: fragment(header, Sf::SF12).len(),
                airtime_s: broadcast_airtime(profile)?,
            });
        }
        let tx = transaction_total_size(profile, cfg.case1.payload_bytes)?;
        for sf in Sf::ALL {
            rows.push(ToaRow {
                dlt,
                item: "transaction",
                bytes: tx,
                sf,
                fragments: fragment(tx, sf).len(),
                airtime_s: fragmented_airtime(tx, sf),
            });
        }
    }
    Ok(rows)
}

/// Header rate limits for every DLT that has headers.
pub fn run_rates(cfg: &ScenarioConfig) -> Result<Vec<RateRow>, ExperimentError> {
    let duty = cfg.lorawan.broadcast_duty_cycle;
    let mut rows = Vec::new();
    for &dlt in &cfg.dlts {
        let profile = cfg.profile(dlt);
        let Some(header) = profile.header_size else {
            continue;
        };
        rows.push(RateRow {
            dlt,
            header_bytes: header,
            fragments: fragment(header, Sf::SF12).len(),
            airtime_s: broadcast_airtime(profile)?,
            rate_full_per_s: broadcast_rate_limit(profile)?,
            duty_cycle: duty,
            rate_duty_per_s: duty_limited_rate(profile, duty)?,
        });
    }
    Ok(rows)
}
