//! Event-driven single-gateway link.
//!
//! Devices send fragmented, acknowledged uplinks gated by per-sub-band duty
//! cycles. The access point locks a demodulator at frame start, decides
//! capture at frame end and answers with an ACK after a fixed turnaround when
//! its own downlink duty cycle allows. Confirmed downlinks reuse the same
//! downlink clock. The link never owns the clock: callers feed it events and
//! schedule whatever it returns in [`LinkOutput`].

use crate::dlt::{Bytes, DeviceId};
use crate::kernel::{Kernel, RngStream};

use super::capture::{survives_interference, ChannelId, Frame, FrameId, FrameOutcome, Transmitter};
use super::cell::{CellLayout, DevicePlacement};
use super::duty::{DutyCycleTracker, SubBandId, TxRecord};
use super::phy::{fragment, RadioConfig};
use super::{LoraError, LorawanConfig};

/// PHY payload of an ACK frame: the acknowledgement rides on an empty frame.
const ACK_FRAME_BYTES: Bytes = 0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkEvent {
    UplinkTry { device: DeviceId },
    UplinkFrameEnd { frame: FrameId },
    AckWindow { device: DeviceId, delivered: bool },
    AckResult { device: DeviceId, received: bool },
    DownlinkTry { device: DeviceId },
    DownlinkFrameEnd { device: DeviceId, received: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LinkNotice {
    UplinkDone {
        device: DeviceId,
        tag: u64,
        delivered: bool,
        frames_sent: u32,
        at: f64,
    },
    DownlinkDone {
        device: DeviceId,
        tag: u64,
        delivered: bool,
        frames_sent: u32,
        at: f64,
    },
}

/// Side effects of one call into the link.
#[derive(Debug, Default)]
pub struct LinkOutput {
    pub schedule: Vec<(f64, LinkEvent)>,
    pub notices: Vec<LinkNotice>,
}

impl LinkOutput {
    fn at(&mut self, time: f64, event: LinkEvent) {
        self.schedule.push((time, event));
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkStats {
    pub uplink_frames: u64,
    pub delivered: u64,
    pub lost_interference: u64,
    pub lost_sensitivity: u64,
    pub lost_no_demodulator: u64,
    pub acks_sent: u64,
    pub acks_blocked: u64,
    pub downlink_frames: u64,
}

#[derive(Debug)]
struct Transfer {
    tag: u64,
    fragments: Vec<Bytes>,
    next: usize,
    attempts: u32,
    frames_sent: u32,
}

impl Transfer {
    fn new(tag: u64, fragments: Vec<Bytes>) -> Self {
        Self {
            tag,
            fragments,
            next: 0,
            attempts: 0,
            frames_sent: 0,
        }
    }

    fn current(&self) -> Bytes {
        self.fragments[self.next]
    }
}

#[derive(Debug)]
struct Radio {
    placement: DevicePlacement,
    config: RadioConfig,
    subbands: Vec<DutyCycleTracker>,
    uplink: Option<Transfer>,
    downlink: Option<Transfer>,
}

#[derive(Debug)]
struct AirFrame {
    frame: Frame,
    device: DeviceId,
    finished: bool,
}

pub struct LoraLink {
    cfg: LorawanConfig,
    radios: Vec<Radio>,
    channel_offsets: Vec<ChannelId>,
    ap_downlink: DutyCycleTracker,
    air: Vec<AirFrame>,
    next_frame: FrameId,
    fading: RngStream,
    channels: RngStream,
    trace: Option<Vec<TxRecord>>,
    stats: LinkStats,
}

impl LoraLink {
    pub fn new(cfg: LorawanConfig, layout: &CellLayout, seed: u64) -> Result<Self, LoraError> {
        cfg.validate()?;
        let radios = layout
            .devices
            .iter()
            .map(|p| Radio {
                placement: p.clone(),
                config: RadioConfig::eu868(p.sf),
                subbands: cfg
                    .uplink_subbands
                    .iter()
                    .map(|s| DutyCycleTracker::new(s.duty_cycle))
                    .collect(),
                uplink: None,
                downlink: None,
            })
            .collect();
        let mut channel_offsets = Vec::with_capacity(cfg.uplink_subbands.len());
        let mut offset = 0;
        for s in &cfg.uplink_subbands {
            channel_offsets.push(offset);
            offset += s.channels;
        }
        Ok(Self {
            ap_downlink: DutyCycleTracker::new(cfg.downlink_duty_cycle),
            cfg,
            radios,
            channel_offsets,
            air: Vec::new(),
            next_frame: 0,
            fading: RngStream::new(seed, "lorawan.fading"),
            channels: RngStream::new(seed, "lorawan.channel"),
            trace: None,
            stats: LinkStats::default(),
        })
    }

    /// Keeps every transmission in a trace for duty-cycle audits.
    pub fn record_trace(&mut self) {
        self.trace.get_or_insert_with(Vec::new);
    }

    pub fn trace(&self) -> Option<&[TxRecord]> {
        self.trace.as_deref()
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    pub fn config(&self) -> &LorawanConfig {
        &self.cfg
    }

    pub fn device(&self, id: DeviceId) -> Option<&DevicePlacement> {
        self.radios.get(id as usize).map(|r| &r.placement)
    }

    /// Sub-band id used for access-point downlinks in traces.
    pub fn downlink_sub_band(&self) -> SubBandId {
        self.cfg.uplink_subbands.len() as SubBandId
    }

    /// Start-to-start spacing factor of `transmitter` on `sub_band`.
    pub fn spacing_factor(&self, transmitter: Transmitter, sub_band: SubBandId) -> f64 {
        match transmitter {
            Transmitter::AccessPoint => self.ap_downlink.spacing_factor(),
            Transmitter::Device(_) => 1.0 / self.cfg.uplink_subbands[sub_band as usize].duty_cycle,
        }
    }

    fn radio_mut(&mut self, device: DeviceId) -> Result<&mut Radio, LoraError> {
        self.radios
            .get_mut(device as usize)
            .ok_or(LoraError::UnknownDevice(device))
    }

    /// Queues an acknowledged uplink of `bytes`, fragmented at the device's SF.
    pub fn start_uplink(
        &mut self,
        now: f64,
        device: DeviceId,
        bytes: Bytes,
        tag: u64,
        out: &mut LinkOutput,
    ) -> Result<(), LoraError> {
        let radio = self.radio_mut(device)?;
        if radio.uplink.is_some() {
            return Err(LoraError::Busy(device));
        }
        let fragments = fragment(bytes, radio.placement.sf);
        if fragments.is_empty() {
            out.notices.push(LinkNotice::UplinkDone {
                device,
                tag,
                delivered: true,
                frames_sent: 0,
                at: now,
            });
            return Ok(());
        }
        radio.uplink = Some(Transfer::new(tag, fragments));
        out.at(now, LinkEvent::UplinkTry { device });
        Ok(())
    }

    /// Queues a confirmed downlink of `bytes` to `device`.
    pub fn start_downlink(
        &mut self,
        now: f64,
        device: DeviceId,
        bytes: Bytes,
        tag: u64,
        out: &mut LinkOutput,
    ) -> Result<(), LoraError> {
        let radio = self.radio_mut(device)?;
        if radio.downlink.is_some() {
            return Err(LoraError::Busy(device));
        }
        let fragments = fragment(bytes, radio.placement.sf);
        if fragments.is_empty() {
            out.notices.push(LinkNotice::DownlinkDone {
                device,
                tag,
                delivered: true,
                frames_sent: 0,
                at: now,
            });
            return Ok(());
        }
        radio.downlink = Some(Transfer::new(tag, fragments));
        out.at(now, LinkEvent::DownlinkTry { device });
        Ok(())
    }

    pub fn handle(&mut self, now: f64, event: LinkEvent, out: &mut LinkOutput) {
        match event {
            LinkEvent::UplinkTry { device } => self.uplink_try(now, device, out),
            LinkEvent::UplinkFrameEnd { frame } => self.uplink_frame_end(now, frame, out),
            LinkEvent::AckWindow { device, delivered } => self.ack_window(now, device, delivered, out),
            LinkEvent::AckResult { device, received } => self.ack_result(now, device, received, out),
            LinkEvent::DownlinkTry { device } => self.downlink_try(now, device, out),
            LinkEvent::DownlinkFrameEnd { device, received } => {
                self.downlink_frame_end(now, device, received, out)
            }
        }
    }

    fn uplink_try(&mut self, now: f64, device: DeviceId, out: &mut LinkOutput) {
        let radio = &self.radios[device as usize];
        let Some(job) = radio.uplink.as_ref() else {
            return;
        };
        let (band, earliest) = radio
            .subbands
            .iter()
            .enumerate()
            .map(|(i, t)| (i, t.earliest_next_tx()))
            .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
        if earliest > now {
            out.at(earliest, LinkEvent::UplinkTry { device });
            return;
        }
        let bytes = job.current();
        let duration = radio.config.airtime(bytes);
        let sf = radio.placement.sf;
        let plan = &self.cfg.uplink_subbands[band];
        let channel = self.channel_offsets[band] + self.channels.index(plan.channels as usize) as ChannelId;
        let budget = &self.cfg.budget;
        let rx_power = budget.tx_power_dbm - budget.path_loss_db(radio.placement.distance)
            - radio.placement.shadowing_db
            + budget.fading_db(&mut self.fading);

        let outcome = if rx_power < budget.sensitivity(sf) {
            FrameOutcome::LostSensitivity
        } else {
            let busy = self
                .air
                .iter()
                .filter(|a| a.frame.outcome == FrameOutcome::Pending && a.frame.end_time > now)
                .count();
            if busy >= self.cfg.demodulators {
                FrameOutcome::LostNoDemodulator
            } else {
                FrameOutcome::Pending
            }
        };

        let id = self.next_frame;
        self.next_frame += 1;
        let end = now + duration;
        self.air.push(AirFrame {
            frame: Frame {
                id,
                transmitter: Transmitter::Device(device),
                payload_bytes: bytes,
                channel,
                sf,
                start_time: now,
                end_time: end,
                tx_power: budget.tx_power_dbm,
                rx_power,
                outcome,
            },
            device,
            finished: false,
        });
        let radio = &mut self.radios[device as usize];
        radio.subbands[band].record(now, duration);
        let job = radio.uplink.as_mut().expect("uplink job checked above");
        job.attempts += 1;
        job.frames_sent += 1;
        self.stats.uplink_frames += 1;
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TxRecord {
                transmitter: Transmitter::Device(device),
                sub_band: band as SubBandId,
                start: now,
                duration,
            });
        }
        out.at(end, LinkEvent::UplinkFrameEnd { frame: id });
    }

    fn uplink_frame_end(&mut self, now: f64, frame: FrameId, out: &mut LinkOutput) {
        let Some(idx) = self.air.iter().position(|a| a.frame.id == frame) else {
            return;
        };
        if self.air[idx].frame.outcome == FrameOutcome::Pending {
            let target = &self.air[idx].frame;
            let interferers = self
                .air
                .iter()
                .filter(|a| a.frame.id != frame && a.frame.channel == target.channel && a.frame.overlaps(target))
                .map(|a| (a.frame.sf, a.frame.rx_power));
            let ok = survives_interference(target.sf, target.rx_power, interferers, &self.cfg.sir);
            self.air[idx].frame.outcome = if ok {
                FrameOutcome::Delivered
            } else {
                FrameOutcome::LostInterference
            };
        }
        self.air[idx].finished = true;
        let device = self.air[idx].device;
        let outcome = self.air[idx].frame.outcome;
        match outcome {
            FrameOutcome::Delivered => self.stats.delivered += 1,
            FrameOutcome::LostInterference => self.stats.lost_interference += 1,
            FrameOutcome::LostSensitivity => self.stats.lost_sensitivity += 1,
            FrameOutcome::LostNoDemodulator => self.stats.lost_no_demodulator += 1,
            FrameOutcome::Pending => unreachable!("capture decided above"),
        }
        self.prune();
        out.at(
            now + self.cfg.ack_turnaround_s,
            LinkEvent::AckWindow {
                device,
                delivered: outcome == FrameOutcome::Delivered,
            },
        );
    }

    /// Drops finished frames that can no longer overlap anything still on air.
    fn prune(&mut self) {
        let horizon = self
            .air
            .iter()
            .filter(|a| !a.finished)
            .map(|a| a.frame.start_time)
            .fold(f64::INFINITY, f64::min);
        self.air.retain(|a| !a.finished || a.frame.end_time > horizon);
    }

    /// Whether a downlink frame from the access point reaches `device`.
    fn downlink_received(&mut self, device: DeviceId) -> bool {
        let radio = &self.radios[device as usize];
        let budget = &self.cfg.budget;
        let rx = budget.ap_tx_power_dbm - budget.path_loss_db(radio.placement.distance)
            - radio.placement.shadowing_db
            + budget.fading_db(&mut self.fading);
        rx >= budget.sensitivity(radio.placement.sf)
    }

    fn ap_transmit(&mut self, now: f64, duration: f64) {
        self.ap_downlink.record(now, duration);
        self.stats.downlink_frames += 1;
        let sub_band = self.downlink_sub_band();
        if let Some(trace) = self.trace.as_mut() {
            trace.push(TxRecord {
                transmitter: Transmitter::AccessPoint,
                sub_band,
                start: now,
                duration,
            });
        }
    }

    fn ack_window(&mut self, now: f64, device: DeviceId, delivered: bool, out: &mut LinkOutput) {
        let duration = self.radios[device as usize].config.airtime(ACK_FRAME_BYTES);
        let received = if !delivered {
            false
        } else if self.ap_downlink.can_transmit(now) {
            self.ap_transmit(now, duration);
            self.stats.acks_sent += 1;
            self.downlink_received(device)
        } else {
            self.stats.acks_blocked += 1;
            false
        };
        out.at(now + duration, LinkEvent::AckResult { device, received });
    }

    fn ack_result(&mut self, now: f64, device: DeviceId, received: bool, out: &mut LinkOutput) {
        let max_retx = self.cfg.max_retx;
        let radio = &mut self.radios[device as usize];
        let Some(job) = radio.uplink.as_mut() else {
            return;
        };
        let finished = if received {
            job.next += 1;
            job.attempts = 0;
            (job.next == job.fragments.len()).then_some(true)
        } else if job.attempts > max_retx {
            Some(false)
        } else {
            None
        };
        match finished {
            Some(delivered) => {
                let job = radio.uplink.take().expect("job present");
                out.notices.push(LinkNotice::UplinkDone {
                    device,
                    tag: job.tag,
                    delivered,
                    frames_sent: job.frames_sent,
                    at: now,
                });
            }
            None => out.at(now, LinkEvent::UplinkTry { device }),
        }
    }

    fn downlink_try(&mut self, now: f64, device: DeviceId, out: &mut LinkOutput) {
        let radio = &self.radios[device as usize];
        let Some(job) = radio.downlink.as_ref() else {
            return;
        };
        if !self.ap_downlink.can_transmit(now) {
            out.at(self.ap_downlink.earliest_next_tx(), LinkEvent::DownlinkTry { device });
            return;
        }
        let duration = radio.config.airtime(job.current());
        self.ap_transmit(now, duration);
        let received = self.downlink_received(device);
        let job = self.radios[device as usize].downlink.as_mut().expect("job present");
        job.attempts += 1;
        job.frames_sent += 1;
        out.at(now + duration, LinkEvent::DownlinkFrameEnd { device, received });
    }

    fn downlink_frame_end(&mut self, now: f64, device: DeviceId, received: bool, out: &mut LinkOutput) {
        let max_retx = self.cfg.max_retx;
        let turnaround = self.cfg.ack_turnaround_s;
        let radio = &mut self.radios[device as usize];
        let Some(job) = radio.downlink.as_mut() else {
            return;
        };
        if received {
            job.next += 1;
            job.attempts = 0;
            if job.next < job.fragments.len() {
                out.at(now, LinkEvent::DownlinkTry { device });
                return;
            }
        } else if job.attempts <= max_retx {
            out.at(now + turnaround, LinkEvent::DownlinkTry { device });
            return;
        }
        let job = radio.downlink.take().expect("job present");
        out.notices.push(LinkNotice::DownlinkDone {
            device,
            tag: job.tag,
            delivered: received,
            frames_sent: job.frames_sent,
            at: now,
        });
    }
}

/// Result of one acknowledged uplink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UplinkOutcome {
    pub delivered: bool,
    pub completion_time: f64,
    pub frames_sent: u32,
}

/// A link bundled with its own kernel, for running transfers one at a time.
pub struct LinkDriver {
    kernel: Kernel<LinkEvent>,
    link: LoraLink,
    next_tag: u64,
}

impl LinkDriver {
    pub fn new(link: LoraLink) -> Self {
        Self {
            kernel: Kernel::new(),
            link,
            next_tag: 0,
        }
    }

    pub fn link(&self) -> &LoraLink {
        &self.link
    }

    pub fn now(&self) -> f64 {
        self.kernel.now()
    }

    /// Sends `bytes` from `device` starting at the current clock and runs
    /// until the transfer finishes.
    pub fn acked_uplink(&mut self, device: DeviceId, bytes: Bytes) -> Result<UplinkOutcome, LoraError> {
        let tag = self.next_tag;
        self.next_tag += 1;
        let mut out = LinkOutput::default();
        self.link.start_uplink(self.kernel.now(), device, bytes, tag, &mut out)?;
        loop {
            for (at, ev) in out.schedule.drain(..) {
                self.kernel
                    .schedule(at, ev)
                    .expect("link schedules only at or after the clock");
            }
            for notice in out.notices.drain(..) {
                if let LinkNotice::UplinkDone {
                    tag: t,
                    delivered,
                    frames_sent,
                    at,
                    ..
                } = notice
                {
                    if t == tag {
                        return Ok(UplinkOutcome {
                            delivered,
                            completion_time: at,
                            frames_sent,
                        });
                    }
                }
            }
            let Some(ev) = self.kernel.next_until(f64::INFINITY) else {
                unreachable!("an uplink always terminates");
            };
            self.link.handle(ev.fire_time, ev.kind, &mut out);
        }
    }
}
