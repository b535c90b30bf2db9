//! Co-/inter-SF capture and the demodulator pool of the access point.

use std::collections::BTreeMap;

use crate::dlt::{Bytes, DeviceId};

use super::Sf;

pub type FrameId = u64;
pub type ChannelId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Transmitter {
    Device(DeviceId),
    AccessPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOutcome {
    Pending,
    Delivered,
    LostInterference,
    LostSensitivity,
    LostNoDemodulator,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: FrameId,
    pub transmitter: Transmitter,
    pub payload_bytes: Bytes,
    pub channel: ChannelId,
    pub sf: Sf,
    pub start_time: f64,
    pub end_time: f64,
    pub tx_power: f64,
    /// Power at the receiver including path loss, shadowing and fading.
    pub rx_power: f64,
    pub outcome: FrameOutcome,
}

impl Frame {
    pub fn overlaps(&self, other: &Frame) -> bool {
        self.start_time < other.end_time && other.start_time < self.end_time
    }
}

/// Required SIR (dB) for a frame at the row SF to survive interference at the column SF.
#[derive(Debug, Clone, PartialEq)]
pub struct SirMatrix(pub [[f64; 6]; 6]);

impl SirMatrix {
    pub fn uniform(co_sf_db: f64, inter_sf_db: f64) -> Self {
        let mut m = [[inter_sf_db; 6]; 6];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = co_sf_db;
        }
        Self(m)
    }

    pub fn threshold(&self, target: Sf, interferer: Sf) -> f64 {
        self.0[target.index()][interferer.index()]
    }

    /// Each diagonal entry dominates every off-diagonal entry.
    pub fn is_well_formed(&self) -> bool {
        let min_diag = (0..6).map(|i| self.0[i][i]).fold(f64::INFINITY, f64::min);
        let max_off = (0..6)
            .flat_map(|i| (0..6).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| self.0[i][j])
            .fold(f64::NEG_INFINITY, f64::max);
        min_diag >= max_off
    }
}

impl Default for SirMatrix {
    fn default() -> Self {
        Self::uniform(6.0, -16.0)
    }
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

/// Whether a frame at `sf` received at `rx_power` survives the given interferers.
///
/// Interferers are grouped by SF and their powers summed per group; every
/// group must individually respect the matrix threshold.
pub fn survives_interference<I>(sf: Sf, rx_power: f64, interferers: I, sir: &SirMatrix) -> bool
where
    I: IntoIterator<Item = (Sf, f64)>,
{
    let mut per_sf: BTreeMap<Sf, f64> = BTreeMap::new();
    for (isf, power) in interferers {
        *per_sf.entry(isf).or_default() += dbm_to_mw(power);
    }
    per_sf
        .into_iter()
        .all(|(isf, total_mw)| rx_power - 10.0 * total_mw.log10() >= sir.threshold(sf, isf))
}

/// Reception outcome of every frame in a set observed by one receiver.
///
/// Frames are considered in start order (ties by id). A frame below its SF's
/// sensitivity is never detected. A detected frame takes a demodulator if one
/// is free at its start instant, then must survive co-/inter-SF interference
/// from every other overlapping frame on its channel.
pub fn capture_decision(
    frames: &[Frame],
    sensitivity: impl Fn(Sf) -> f64,
    sir: &SirMatrix,
    demodulators: usize,
) -> Vec<FrameOutcome> {
    let mut order: Vec<usize> = (0..frames.len()).collect();
    order.sort_by(|&a, &b| {
        frames[a]
            .start_time
            .total_cmp(&frames[b].start_time)
            .then(frames[a].id.cmp(&frames[b].id))
    });
    let mut outcomes = vec![FrameOutcome::Pending; frames.len()];
    let mut locked: Vec<usize> = Vec::new();
    for &i in &order {
        let f = &frames[i];
        if f.rx_power < sensitivity(f.sf) {
            outcomes[i] = FrameOutcome::LostSensitivity;
            continue;
        }
        let busy = locked
            .iter()
            .filter(|&&j| frames[j].end_time > f.start_time)
            .count();
        if busy >= demodulators {
            outcomes[i] = FrameOutcome::LostNoDemodulator;
            continue;
        }
        locked.push(i);
    }
    for &i in &locked {
        let f = &frames[i];
        let interferers = frames
            .iter()
            .enumerate()
            .filter(|&(j, g)| j != i && g.channel == f.channel && g.overlaps(f))
            .map(|(_, g)| (g.sf, g.rx_power));
        outcomes[i] = if survives_interference(f.sf, f.rx_power, interferers, sir) {
            FrameOutcome::Delivered
        } else {
            FrameOutcome::LostInterference
        };
    }
    outcomes
}

#[cfg(test)]
mod tests {
    use super::*;

    fn frame(id: FrameId, channel: ChannelId, sf: u8, start: f64, rx: f64) -> Frame {
        Frame {
            id,
            transmitter: Transmitter::Device(id as DeviceId),
            payload_bytes: 20,
            channel,
            sf: Sf::new(sf).unwrap(),
            start_time: start,
            end_time: start + 1.0,
            tx_power: 14.0,
            rx_power: rx,
            outcome: FrameOutcome::Pending,
        }
    }

    fn sens(_: Sf) -> f64 {
        -130.0
    }

    #[test]
    fn lone_frame_is_delivered() {
        let out = capture_decision(&[frame(0, 0, 7, 0.0, -100.0)], sens, &SirMatrix::default(), 8);
        assert_eq!(out, vec![FrameOutcome::Delivered]);
        let weak = capture_decision(&[frame(0, 0, 7, 0.0, -140.0)], sens, &SirMatrix::default(), 8);
        assert_eq!(weak, vec![FrameOutcome::LostSensitivity]);
    }

    #[test]
    fn equal_power_co_sf_collision_loses_both() {
        let frames = [frame(0, 0, 9, 0.0, -100.0), frame(1, 0, 9, 0.5, -100.0)];
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        assert_eq!(out, vec![FrameOutcome::LostInterference; 2]);
    }

    #[test]
    fn capture_effect_keeps_the_stronger_frame() {
        let frames = [frame(0, 0, 9, 0.0, -90.0), frame(1, 0, 9, 0.5, -100.0)];
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        assert_eq!(out, vec![FrameOutcome::Delivered, FrameOutcome::LostInterference]);
    }

    #[test]
    fn inter_sf_rejection_and_channels() {
        // 10 dB weaker at another SF still survives the -16 dB rejection.
        let frames = [frame(0, 0, 7, 0.0, -110.0), frame(1, 0, 12, 0.2, -100.0)];
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        assert_eq!(out, vec![FrameOutcome::Delivered; 2]);
        // 20 dB weaker does not.
        let frames = [frame(0, 0, 7, 0.0, -120.0), frame(1, 0, 12, 0.2, -100.0)];
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        assert_eq!(out[0], FrameOutcome::LostInterference);
        // Different channels never interfere.
        let frames = [frame(0, 0, 9, 0.0, -100.0), frame(1, 1, 9, 0.0, -100.0)];
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        assert_eq!(out, vec![FrameOutcome::Delivered; 2]);
    }

    #[test]
    fn ninth_concurrent_frame_finds_no_demodulator() {
        let frames: Vec<Frame> = (0..9)
            .map(|i| frame(i, i as ChannelId, 7, 0.01 * i as f64, -100.0))
            .collect();
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        let lost: Vec<usize> = out
            .iter()
            .enumerate()
            .filter(|(_, o)| **o == FrameOutcome::LostNoDemodulator)
            .map(|(i, _)| i)
            .collect();
        assert_eq!(lost, vec![8]);
        assert_eq!(out.iter().filter(|o| **o == FrameOutcome::Delivered).count(), 8);
    }

    #[test]
    fn aggregate_interference_per_class() {
        // Two interferers each 7 dB below sum to ~4 dB below: the target is lost.
        let frames = [
            frame(0, 0, 8, 0.0, -93.0),
            frame(1, 0, 8, 0.1, -100.0),
            frame(2, 0, 8, 0.2, -100.0),
        ];
        let out = capture_decision(&frames, sens, &SirMatrix::default(), 8);
        assert_eq!(out[0], FrameOutcome::LostInterference);
    }

    #[test]
    fn default_matrix_is_well_formed() {
        assert!(SirMatrix::default().is_well_formed());
        assert!(!SirMatrix::uniform(-20.0, 0.0).is_well_formed());
    }
}
