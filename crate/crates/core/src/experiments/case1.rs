//! Publishing to a ledger from a LoRaWAN cell.
//!
//! Each device queues Poisson publishes and handles them one at a time. A
//! publish walks the transaction lifecycle up to the receipt: the signed
//! transaction goes up as an acknowledged uplink, the ledger validates it and
//! the receipt comes back as a confirmed downlink. Latency runs from queueing
//! to receipt delivery; a transfer that exhausts its retries fails the publish.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::dlt::{advance_lifecycle, DeviceId, DltName, LedgerTransaction, Phase, Transition};
use crate::kernel::{Kernel, RngStream};
use crate::lorawan::{CellLayout, LinkEvent, LinkNotice, LinkOutput, LinkStats, LoraLink, Sf, TxRecord};
use crate::dlt::Direction;

use super::{ExperimentError, ScenarioConfig};

const SECONDS_PER_WEEK: f64 = 7.0 * 24.0 * 3600.0;

#[derive(Debug, Clone, PartialEq)]
pub struct PublishRecord {
    pub seed: u64,
    pub device_id: DeviceId,
    pub sf: Sf,
    pub queued_at_s: f64,
    pub delivered: bool,
    pub latency_s: Option<f64>,
    /// Uplink frames spent on the transaction, retransmissions included.
    pub frames_sent: u32,
}

#[derive(Debug, Clone)]
pub struct Case1Run {
    pub dlt: DltName,
    pub seed: u64,
    pub records: Vec<PublishRecord>,
    pub link: LinkStats,
    pub trace: Option<Vec<TxRecord>>,
    /// Spacing factor per (transmitter, sub-band) for auditing `trace`.
    pub ap_spacing: f64,
    pub device_spacing: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
enum Ev {
    Arrival { device: DeviceId, publish: usize },
    PhaseReady { device: DeviceId },
    Link(LinkEvent),
}

struct Active {
    publish: usize,
    tx: LedgerTransaction,
    pending: Option<Transition>,
}

#[derive(Default)]
struct DeviceState {
    queue: VecDeque<usize>,
    active: Option<Active>,
}

struct World<'a> {
    cfg: &'a ScenarioConfig,
    dlt: DltName,
    link: LoraLink,
    devices: Vec<DeviceState>,
    records: Vec<PublishRecord>,
    validation: RngStream,
    out: LinkOutput,
}

impl World<'_> {
    fn begin(&mut self, kernel: &mut Kernel<Ev>, device: DeviceId, now: f64) -> Result<(), ExperimentError> {
        let state = &mut self.devices[device as usize];
        if state.active.is_some() {
            return Ok(());
        }
        let Some(publish) = state.queue.pop_front() else {
            return Ok(());
        };
        let tx = LedgerTransaction::new(
            publish as u64,
            device,
            self.cfg.profile(self.dlt),
            self.cfg.case1.payload_bytes,
            now,
        )?;
        state.active = Some(Active {
            publish,
            tx,
            pending: None,
        });
        self.advance(kernel, device, now)
    }

    fn advance(&mut self, kernel: &mut Kernel<Ev>, device: DeviceId, now: f64) -> Result<(), ExperimentError> {
        let profile = self.cfg.profile(self.dlt);
        let lifecycle = self.cfg.lifecycle();
        let active = self.devices[device as usize]
            .active
            .as_mut()
            .expect("advance needs an active publish");
        if active.tx.phase() >= Phase::ReceiptSent {
            return self.finish(kernel, device, now, true);
        }
        let Some(transition) = advance_lifecycle(&active.tx, profile, self.cfg.protocol, &lifecycle)
        else {
            return self.finish(kernel, device, now, true);
        };
        if transition.to > Phase::ReceiptSent {
            return self.finish(kernel, device, now, true);
        }
        let delay = transition.delay.resolve(&mut self.validation);
        active.pending = Some(transition);
        kernel.schedule(now + delay, Ev::PhaseReady { device })?;
        Ok(())
    }

    fn phase_ready(&mut self, kernel: &mut Kernel<Ev>, device: DeviceId, now: f64) -> Result<(), ExperimentError> {
        let active = self.devices[device as usize]
            .active
            .as_mut()
            .expect("phase timer without an active publish");
        let transition = active.pending.as_ref().expect("timer set with a pending transition");
        match transition.message {
            Some(msg) => {
                let tag = active.publish as u64;
                match msg.direction {
                    Direction::Uplink => self.link.start_uplink(now, device, msg.bytes, tag, &mut self.out)?,
                    Direction::Downlink => {
                        self.link.start_downlink(now, device, msg.bytes, tag, &mut self.out)?
                    }
                }
                Ok(())
            }
            None => self.complete_phase(kernel, device, now),
        }
    }

    fn complete_phase(&mut self, kernel: &mut Kernel<Ev>, device: DeviceId, now: f64) -> Result<(), ExperimentError> {
        let active = self.devices[device as usize]
            .active
            .as_mut()
            .expect("completing a phase needs an active publish");
        let transition = active.pending.take().expect("a pending transition");
        active.tx.apply(&transition, now)?;
        self.advance(kernel, device, now)
    }

    fn finish(
        &mut self,
        kernel: &mut Kernel<Ev>,
        device: DeviceId,
        now: f64,
        delivered: bool,
    ) -> Result<(), ExperimentError> {
        let active = self.devices[device as usize]
            .active
            .take()
            .expect("finishing needs an active publish");
        let record = &mut self.records[active.publish];
        record.delivered = delivered;
        record.latency_s = delivered.then_some(now - record.queued_at_s);
        self.begin(kernel, device, now)
    }

    fn on_notice(&mut self, kernel: &mut Kernel<Ev>, notice: LinkNotice) -> Result<(), ExperimentError> {
        let (device, delivered, at) = match notice {
            LinkNotice::UplinkDone {
                device,
                tag,
                delivered,
                frames_sent,
                at,
            } => {
                self.records[tag as usize].frames_sent += frames_sent;
                (device, delivered, at)
            }
            LinkNotice::DownlinkDone {
                device, delivered, at, ..
            } => (device, delivered, at),
        };
        if delivered {
            self.complete_phase(kernel, device, at)
        } else {
            self.finish(kernel, device, at, false)
        }
    }

    /// Moves link side effects into the kernel until none are left.
    fn flush(&mut self, kernel: &mut Kernel<Ev>) -> Result<(), ExperimentError> {
        loop {
            for (at, ev) in std::mem::take(&mut self.out.schedule) {
                kernel.schedule(at, Ev::Link(ev))?;
            }
            let notices = std::mem::take(&mut self.out.notices);
            if notices.is_empty() {
                return Ok(());
            }
            for n in notices {
                self.on_notice(kernel, n)?;
            }
        }
    }
}

/// Runs one DLT for one seed.
pub fn simulate_case1(
    cfg: &ScenarioConfig,
    dlt: DltName,
    seed: u64,
    keep_trace: bool,
) -> Result<Case1Run, ExperimentError> {
    let lw = &cfg.lorawan;
    let mut placement = RngStream::new(seed, "case1.placement");
    let layout = CellLayout::generate(
        lw.devices,
        lw.radius_m,
        lw.sf_thresholds_m,
        lw.budget.shadowing_sigma_db,
        &mut placement,
    )?;
    let mut link = LoraLink::new(lw.clone(), &layout, seed)?;
    if keep_trace {
        link.record_trace();
    }

    // Arrivals are drawn device by device, then numbered in time order.
    let mut arrivals_rng = RngStream::new(seed, "case1.arrivals");
    let rate = cfg.case1.publish_rate_per_week / SECONDS_PER_WEEK;
    let horizon = cfg.case1.horizon_weeks * SECONDS_PER_WEEK;
    let mut arrivals: Vec<(f64, DeviceId)> = Vec::new();
    for d in &layout.devices {
        let mut t = arrivals_rng.exponential(rate);
        while t < horizon {
            arrivals.push((t, d.id));
            t += arrivals_rng.exponential(rate);
        }
    }
    arrivals.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut kernel = Kernel::new();
    let records = arrivals
        .iter()
        .enumerate()
        .map(|(publish, &(t, device))| {
            kernel.schedule(t, Ev::Arrival { device, publish })?;
            Ok(PublishRecord {
                seed,
                device_id: device,
                sf: layout.devices[device as usize].sf,
                queued_at_s: t,
                delivered: false,
                latency_s: None,
                frames_sent: 0,
            })
        })
        .collect::<Result<Vec<_>, ExperimentError>>()?;

    let mut world = World {
        cfg,
        dlt,
        link,
        devices: (0..layout.devices.len()).map(|_| DeviceState::default()).collect(),
        records,
        validation: RngStream::new(seed, "case1.validation"),
        out: LinkOutput::default(),
    };

    while let Some(ev) = kernel.next_until(f64::INFINITY) {
        let now = ev.fire_time;
        match ev.kind {
            Ev::Arrival { device, publish } => {
                world.devices[device as usize].queue.push_back(publish);
                world.begin(&mut kernel, device, now)?;
            }
            Ev::PhaseReady { device } => world.phase_ready(&mut kernel, device, now)?,
            Ev::Link(le) => world.link.handle(now, le, &mut world.out),
        }
        world.flush(&mut kernel)?;
    }

    let device_spacing = lw.uplink_subbands.iter().map(|s| 1.0 / s.duty_cycle).collect();
    Ok(Case1Run {
        dlt,
        seed,
        link: world.link.stats(),
        trace: world.link.trace().map(<[TxRecord]>::to_vec),
        ap_spacing: 1.0 / lw.downlink_duty_cycle,
        device_spacing,
        records: world.records,
    })
}

/// Runs every configured DLT and seed, in parallel, in a fixed order.
pub fn run_case1(cfg: &ScenarioConfig) -> Result<Vec<Case1Run>, ExperimentError> {
    cfg.validate()?;
    let jobs: Vec<(DltName, u64)> = cfg
        .dlts
        .iter()
        .flat_map(|&d| cfg.seeds.iter().map(move |&s| (d, s)))
        .collect();
    jobs.par_iter()
        .map(|&(dlt, seed)| simulate_case1(cfg, dlt, seed, false))
        .collect()
}

/// Latency statistics for one DLT, with failures counted as infinite latency.
#[derive(Debug, Clone, PartialEq)]
pub struct Case1Summary {
    pub dlt: DltName,
    pub publishes: usize,
    pub delivered: usize,
    pub min_latency_s: Option<f64>,
    pub median_latency_s: Option<f64>,
    pub p90_latency_s: Option<f64>,
}

impl Case1Summary {
    pub fn delivered_fraction(&self) -> f64 {
        self.delivered as f64 / self.publishes.max(1) as f64
    }

    pub fn failure_rate(&self) -> f64 {
        1.0 - self.delivered_fraction()
    }
}

/// Empirical CDF points `(latency, fraction of all publishes)`.
pub fn latency_cdf<'a>(records: impl IntoIterator<Item = &'a PublishRecord>) -> Vec<(f64, f64)> {
    let all: Vec<&PublishRecord> = records.into_iter().collect();
    let mut lat: Vec<f64> = all.iter().filter_map(|r| r.latency_s).collect();
    lat.sort_by(f64::total_cmp);
    let n = all.len() as f64;
    lat.iter().enumerate().map(|(i, &l)| (l, (i + 1) as f64 / n)).collect()
}

fn quantile(sorted: &[f64], total: usize, q: f64) -> Option<f64> {
    // Failures sit beyond every finite latency.
    let rank = ((q * total as f64).ceil() as usize).max(1);
    sorted.get(rank - 1).copied()
}

pub fn summarize(dlt: DltName, runs: &[Case1Run]) -> Case1Summary {
    let records: Vec<&PublishRecord> = runs
        .iter()
        .filter(|r| r.dlt == dlt)
        .flat_map(|r| &r.records)
        .collect();
    let mut lat: Vec<f64> = records.iter().filter_map(|r| r.latency_s).collect();
    lat.sort_by(f64::total_cmp);
    Case1Summary {
        dlt,
        publishes: records.len(),
        delivered: lat.len(),
        min_latency_s: lat.first().copied(),
        median_latency_s: quantile(&lat, records.len(), 0.5),
        p90_latency_s: quantile(&lat, records.len(), 0.9),
    }
}
