//! Regulatory duty-cycle gating: after a transmission of duration `d`, the
//! same transmitter stays silent on that sub-band for `d * (1/duty - 1)`.

use super::capture::Transmitter;

pub type SubBandId = u32;

/// Availability clock of one transmitter on one sub-band.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyCycleTracker {
    duty_cycle: f64,
    earliest_next_tx: f64,
}

impl DutyCycleTracker {
    pub fn new(duty_cycle: f64) -> Self {
        assert!(
            duty_cycle > 0.0 && duty_cycle <= 1.0,
            "duty cycle must be in (0, 1], got {duty_cycle}"
        );
        Self {
            duty_cycle,
            earliest_next_tx: 0.0,
        }
    }

    pub fn duty_cycle(&self) -> f64 {
        self.duty_cycle
    }

    /// Start-to-start spacing per second of airtime (100 at 1 %).
    pub fn spacing_factor(&self) -> f64 {
        1.0 / self.duty_cycle
    }

    pub fn earliest_next_tx(&self) -> f64 {
        self.earliest_next_tx
    }

    pub fn can_transmit(&self, at: f64) -> bool {
        at >= self.earliest_next_tx
    }

    /// Books a transmission; panics if it violates the gate.
    pub fn record(&mut self, start: f64, duration: f64) {
        assert!(
            self.can_transmit(start),
            "transmission at {start} before sub-band frees at {}",
            self.earliest_next_tx
        );
        self.earliest_next_tx = start + self.spacing_factor() * duration;
    }
}

/// One booked transmission, as kept in a trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TxRecord {
    pub transmitter: Transmitter,
    pub sub_band: SubBandId,
    pub start: f64,
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DutyViolation {
    pub previous: TxRecord,
    pub offending: TxRecord,
}

/// Checks `start[i+1] >= start[i] + spacing(sub_band) * duration[i]` for every
/// transmitter and sub-band in `trace`.
pub fn audit_duty_cycle(
    trace: &[TxRecord],
    spacing: impl Fn(Transmitter, SubBandId) -> f64,
) -> Result<usize, DutyViolation> {
    let mut sorted: Vec<&TxRecord> = trace.iter().collect();
    sorted.sort_by(|a, b| {
        (a.transmitter, a.sub_band)
            .cmp(&(b.transmitter, b.sub_band))
            .then(a.start.total_cmp(&b.start))
    });
    let mut checked = 0;
    for pair in sorted.windows(2) {
        let (prev, next) = (pair[0], pair[1]);
        if (prev.transmitter, prev.sub_band) != (next.transmitter, next.sub_band) {
            continue;
        }
        checked += 1;
        if next.start < prev.start + spacing(prev.transmitter, prev.sub_band) * prev.duration {
            return Err(DutyViolation {
                previous: *prev,
                offending: *next,
            });
        }
    }
    Ok(checked)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_percent_waits_99_airtimes() {
        let mut t = DutyCycleTracker::new(0.01);
        assert!(t.can_transmit(0.0));
        t.record(10.0, 2.0);
        let end = 12.0;
        assert!((t.earliest_next_tx() - (end + 99.0 * 2.0)).abs() < 1e-9);
        assert!(!t.can_transmit(209.0));
        assert!(t.can_transmit(210.0));
    }

    #[test]
    #[should_panic]
    fn early_transmission_panics() {
        let mut t = DutyCycleTracker::new(0.01);
        t.record(0.0, 1.0);
        t.record(50.0, 1.0);
    }

    #[test]
    fn audit_flags_violations() {
        let dev = Transmitter::Device(1);
        let ok = [
            TxRecord { transmitter: dev, sub_band: 0, start: 0.0, duration: 1.0 },
            TxRecord { transmitter: dev, sub_band: 1, start: 1.0, duration: 1.0 },
            TxRecord { transmitter: dev, sub_band: 0, start: 100.0, duration: 1.0 },
        ];
        assert_eq!(audit_duty_cycle(&ok, |_, _| 100.0), Ok(1));
        let bad = [ok[0], TxRecord { start: 99.0, ..ok[2] }];
        assert!(audit_duty_cycle(&bad, |_, _| 100.0).is_err());
    }
}
