//! Phase machine of a device-originated transaction.
//!
//! Phases are numbered 0 through 8:
//!
//! | # | phase            | cost / message                                   |
//! |---|------------------|--------------------------------------------------|
//! | 0 | endorsement      | DL endorsement (Fabric only, unless pre-supplied) |
//! | 1 | prepared         | signing, plus local PoW on IOTA                   |
//! | 2 | sent to GW       | UL transaction                                    |
//! | 3 | forwarded to DLT | backhaul delay                                    |
//! | 4 | included         | validation delay                                  |
//! | 5 | GW notified      | notification delay                                |
//! | 6 | receipt sent     | DL receipt (digest) or acknowledgement (incentive)|
//! | 7 | proof sent       | DL header + inclusion proof (digest only)         |
//! | 8 | finalized        | confirmation depth reached, no message            |

use crate::kernel::RngStream;
use crate::sync::ProtocolClass;

use super::{Bytes, DeviceId, DltError, DltProfile, TxId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Phase {
    Created,
    Endorsed,
    Prepared,
    SentToGw,
    ForwardedToDlt,
    Included,
    GwNotified,
    ReceiptSent,
    ProofSent,
    Finalized,
}

impl Phase {
    const SEQUENCE: [Phase; 9] = [
        Phase::Endorsed,
        Phase::Prepared,
        Phase::SentToGw,
        Phase::ForwardedToDlt,
        Phase::Included,
        Phase::GwNotified,
        Phase::ReceiptSent,
        Phase::ProofSent,
        Phase::Finalized,
    ];

    /// Position in the 0..=8 numbering; `None` for the initial state.
    pub fn number(self) -> Option<usize> {
        Self::SEQUENCE.iter().position(|&p| p == self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Uplink,
    Downlink,
}

/// A message crossing the device/gateway radio link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkMessage {
    pub bytes: Bytes,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Delay {
    Fixed(f64),
    /// Exponentially distributed with the given mean.
    Exponential { mean: f64 },
}

impl Delay {
    pub fn mean(self) -> f64 {
        match self {
            Delay::Fixed(d) => d,
            Delay::Exponential { mean } => mean,
        }
    }

    pub fn resolve(self, rng: &mut RngStream) -> f64 {
        match self {
            Delay::Fixed(d) => d,
            Delay::Exponential { mean } if mean > 0.0 => rng.exponential(1.0 / mean),
            Delay::Exponential { .. } => 0.0,
        }
    }
}

/// The next step of a transaction.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub to: Phase,
    /// Processing time spent in the phase, excluding radio airtime.
    pub delay: Delay,
    pub message: Option<LinkMessage>,
    /// Phases passed over on the way to `to`.
    pub skipped: Vec<Phase>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LifecycleConfig {
    /// The device already holds a Fabric endorsement.
    pub endorsement_available: bool,
    pub endorsement_bytes: Bytes,
    /// Replaces the profile's local PoW time when set.
    pub pow_time: Option<f64>,
    pub signing_time: f64,
    pub forward_delay: f64,
    pub notify_delay: f64,
    pub receipt_bytes: Bytes,
    pub incentive_ack_bytes: Bytes,
    pub tx_proof_bytes: Bytes,
    pub confirmation_depth: u64,
}

impl Default for LifecycleConfig {
    fn default() -> Self {
        Self {
            endorsement_available: false,
            endorsement_bytes: 72,
            pow_time: None,
            signing_time: 0.0,
            forward_delay: 0.0,
            notify_delay: 0.0,
            receipt_bytes: 10,
            incentive_ack_bytes: 10,
            tx_proof_bytes: 108,
            confirmation_depth: 6,
        }
    }
}

/// A device submission moving through the phases.
#[derive(Debug, Clone, PartialEq)]
pub struct LedgerTransaction {
    pub tx_id: TxId,
    pub sender: DeviceId,
    pub payload_size: Bytes,
    pub total_size: Bytes,
    pub created_at: f64,
    phase: Phase,
    reached: [Option<f64>; 9],
    skipped: Vec<Phase>,
    included_height: Option<u64>,
}

impl LedgerTransaction {
    pub fn new(
        tx_id: TxId,
        sender: DeviceId,
        profile: &DltProfile,
        payload_size: Bytes,
        created_at: f64,
    ) -> Result<Self, DltError> {
        let total_size = super::transaction_total_size(profile, payload_size)?;
        Ok(Self {
            tx_id,
            sender,
            payload_size,
            total_size,
            created_at,
            phase: Phase::Created,
            reached: [None; 9],
            skipped: Vec::new(),
            included_height: None,
        })
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn skipped(&self) -> &[Phase] {
        &self.skipped
    }

    /// Time at which `phase` completed, if it has.
    pub fn reached_at(&self, phase: Phase) -> Option<f64> {
        phase.number().and_then(|i| self.reached[i])
    }

    pub fn submitted_at(&self) -> Option<f64> {
        self.reached_at(Phase::SentToGw)
    }

    pub fn included_at(&self) -> Option<f64> {
        self.reached_at(Phase::Included)
    }

    pub fn receipt_at(&self) -> Option<f64> {
        self.reached_at(Phase::ReceiptSent)
    }

    pub fn proof_at(&self) -> Option<f64> {
        self.reached_at(Phase::ProofSent)
    }

    pub fn included_height(&self) -> Option<u64> {
        self.included_height
    }

    pub fn set_included_height(&mut self, height: u64) {
        self.included_height = Some(height);
    }

    fn last_time(&self) -> f64 {
        self.reached
            .iter()
            .flatten()
            .copied()
            .fold(self.created_at, f64::max)
    }

    /// Records that `transition` completed at time `at`.
    pub fn apply(&mut self, transition: &Transition, at: f64) -> Result<(), DltError> {
        let violation = |reason: String| DltError::Lifecycle {
            tx: self.tx_id,
            reason,
        };
        if transition.to <= self.phase {
            return Err(violation(format!(
                "cannot move from {:?} back to {:?}",
                self.phase, transition.to
            )));
        }
        let last = self.last_time();
        if at < last {
            return Err(violation(format!(
                "{:?} at t={at} precedes previous phase at t={last}",
                transition.to
            )));
        }
        if transition.skipped.iter().any(|&p| p <= self.phase || p >= transition.to) {
            return Err(violation("skipped phases out of range".into()));
        }
        self.skipped.extend_from_slice(&transition.skipped);
        let index = transition.to.number().expect("transition targets a numbered phase");
        self.reached[index] = Some(at);
        self.phase = transition.to;
        Ok(())
    }
}

fn phase_step(
    phase: Phase,
    tx: &LedgerTransaction,
    profile: &DltProfile,
    protocol: ProtocolClass,
    cfg: &LifecycleConfig,
) -> Option<(Delay, Option<LinkMessage>)> {
    let downlink = |bytes| {
        Some(LinkMessage {
            bytes,
            direction: Direction::Downlink,
        })
    };
    match phase {
        Phase::Created => None,
        Phase::Endorsed => (profile.endorsement_required && !cfg.endorsement_available)
            .then(|| (Delay::Fixed(0.0), downlink(cfg.endorsement_bytes))),
        Phase::Prepared => {
            let pow = profile
                .local_pow_time
                .map_or(0.0, |base| cfg.pow_time.unwrap_or(base));
            Some((Delay::Fixed(cfg.signing_time + pow), None))
        }
        Phase::SentToGw => Some((
            Delay::Fixed(0.0),
            Some(LinkMessage {
                bytes: tx.total_size,
                direction: Direction::Uplink,
            }),
        )),
        Phase::ForwardedToDlt => Some((Delay::Fixed(cfg.forward_delay), None)),
        Phase::Included => {
            let delay = if profile.validation_jitter {
                Delay::Exponential {
                    mean: profile.validation_time,
                }
            } else {
                Delay::Fixed(profile.validation_time)
            };
            Some((delay, None))
        }
        Phase::GwNotified => Some((Delay::Fixed(cfg.notify_delay), None)),
        Phase::ReceiptSent => {
            let bytes = match protocol {
                ProtocolClass::P1 | ProtocolClass::P2Digest => cfg.receipt_bytes,
                ProtocolClass::P2Incentive | ProtocolClass::P3 => cfg.incentive_ack_bytes,
            };
            Some((Delay::Fixed(0.0), downlink(bytes)))
        }
        Phase::ProofSent => match protocol {
            ProtocolClass::P2Digest => Some((
                Delay::Fixed(0.0),
                downlink(profile.header_size.unwrap_or(0) + cfg.tx_proof_bytes),
            )),
            ProtocolClass::P1 => Some((
                Delay::Fixed(0.0),
                downlink(
                    profile
                        .block_size
                        .unwrap_or(profile.header_size.unwrap_or(0) + cfg.tx_proof_bytes),
                ),
            )),
            ProtocolClass::P2Incentive | ProtocolClass::P3 => None,
        },
        Phase::Finalized => {
            let period = profile.block_period.unwrap_or(0.0);
            Some((Delay::Fixed(cfg.confirmation_depth as f64 * period), None))
        }
    }
}

/// Next transition of `tx`, or `None` once it is finalized.
pub fn advance_lifecycle(
    tx: &LedgerTransaction,
    profile: &DltProfile,
    protocol: ProtocolClass,
    cfg: &LifecycleConfig,
) -> Option<Transition> {
    let mut skipped = Vec::new();
    for &phase in Phase::SEQUENCE.iter().filter(|&&p| p > tx.phase) {
        match phase_step(phase, tx, profile, protocol, cfg) {
            Some((delay, message)) => {
                return Some(Transition {
                    to: phase,
                    delay,
                    message,
                    skipped,
                })
            }
            None => skipped.push(phase),
        }
    }
    None
}

/// Whether an included transaction is buried at least `depth_k` blocks deep.
pub fn is_finalized(tx: &LedgerTransaction, chain_height: u64, depth_k: u64) -> bool {
    tx.included_height
        .is_some_and(|h| chain_height >= h.saturating_add(depth_k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlt::{builtin_profile, DltName};

    fn walk(
        name: DltName,
        protocol: ProtocolClass,
        cfg: &LifecycleConfig,
    ) -> (LedgerTransaction, Vec<Transition>) {
        let profile = builtin_profile(name);
        let mut tx = LedgerTransaction::new(1, 0, &profile, 50, 0.0).unwrap();
        let mut steps = Vec::new();
        let mut t = 0.0;
        while let Some(step) = advance_lifecycle(&tx, &profile, protocol, cfg) {
            t += step.delay.mean();
            tx.apply(&step, t).unwrap();
            steps.push(step);
        }
        (tx, steps)
    }

    fn step_to(steps: &[Transition], phase: Phase) -> &Transition {
        steps.iter().find(|s| s.to == phase).unwrap()
    }

    #[test]
    fn fabric_validation_takes_550_ms() {
        let cfg = LifecycleConfig {
            endorsement_available: true,
            ..Default::default()
        };
        let (tx, steps) = walk(DltName::Fabric, ProtocolClass::P2Digest, &cfg);
        assert_eq!(step_to(&steps, Phase::Included).delay, Delay::Fixed(0.55));
        let after = steps.iter().position(|s| s.to == Phase::Included).unwrap();
        assert_eq!(steps[after + 1].to, Phase::GwNotified);
        assert_eq!(tx.skipped(), &[Phase::Endorsed]);
    }

    #[test]
    fn fabric_without_endorsement_downloads_it_first() {
        let (_, steps) = walk(
            DltName::Fabric,
            ProtocolClass::P2Digest,
            &LifecycleConfig::default(),
        );
        assert_eq!(steps[0].to, Phase::Endorsed);
        assert_eq!(steps[0].message.unwrap().direction, Direction::Downlink);
        let (_, eth) = walk(
            DltName::Ethereum,
            ProtocolClass::P2Digest,
            &LifecycleConfig::default(),
        );
        assert_eq!(eth[0].to, Phase::Prepared);
        assert_eq!(eth[0].skipped, vec![Phase::Endorsed]);
    }

    #[test]
    fn iota_pays_local_pow_at_phase_one() {
        let (_, steps) = walk(
            DltName::Iota,
            ProtocolClass::P2Digest,
            &LifecycleConfig::default(),
        );
        let prepared = step_to(&steps, Phase::Prepared);
        assert_eq!(prepared.delay, Delay::Fixed(5.0));
        assert_eq!(steps[1].to, Phase::SentToGw);

        let no_pow = LifecycleConfig {
            pow_time: Some(0.0),
            ..Default::default()
        };
        let (_, steps) = walk(DltName::Iota, ProtocolClass::P2Digest, &no_pow);
        assert_eq!(step_to(&steps, Phase::Prepared).delay, Delay::Fixed(0.0));
        assert_eq!(step_to(&steps, Phase::Included).delay, Delay::Fixed(88.0));

        // The override only applies where PoW exists.
        let (_, eth) = walk(
            DltName::Ethereum,
            ProtocolClass::P2Digest,
            &LifecycleConfig {
                pow_time: Some(9.0),
                ..Default::default()
            },
        );
        assert_eq!(step_to(&eth, Phase::Prepared).delay, Delay::Fixed(0.0));
    }

    #[test]
    fn digest_based_sends_receipt_then_header_and_proof() {
        let (tx, steps) = walk(
            DltName::Ethereum,
            ProtocolClass::P2Digest,
            &LifecycleConfig::default(),
        );
        let receipt = step_to(&steps, Phase::ReceiptSent).message.unwrap();
        assert_eq!(receipt.bytes, 10);
        assert_eq!(receipt.direction, Direction::Downlink);
        let proof = step_to(&steps, Phase::ProofSent).message.unwrap();
        assert_eq!(proof.bytes, 508 + 108);
        let ul = step_to(&steps, Phase::SentToGw).message.unwrap();
        assert_eq!((ul.bytes, ul.direction), (160, Direction::Uplink));
        assert_eq!(tx.phase(), Phase::Finalized);
        assert_eq!(
            step_to(&steps, Phase::Finalized).delay,
            Delay::Fixed(6.0 * 15.0)
        );
    }

    #[test]
    fn incentive_based_has_a_single_ack_downlink() {
        for protocol in [ProtocolClass::P2Incentive, ProtocolClass::P3] {
            let (tx, steps) = walk(DltName::Ethereum, protocol, &LifecycleConfig::default());
            let downlinks: Vec<_> = steps
                .iter()
                .filter_map(|s| s.message)
                .filter(|m| m.direction == Direction::Downlink)
                .collect();
            assert_eq!(downlinks.len(), 1);
            assert_eq!(downlinks[0].bytes, 10);
            assert!(tx.skipped().contains(&Phase::ProofSent));
        }
    }

    #[test]
    fn timestamps_and_phases_are_monotone() {
        let profile = builtin_profile(DltName::Bitcoin);
        let cfg = LifecycleConfig::default();
        let mut tx = LedgerTransaction::new(3, 1, &profile, 50, 10.0).unwrap();
        let step = advance_lifecycle(&tx, &profile, ProtocolClass::P2Digest, &cfg).unwrap();
        assert!(tx.apply(&step, 9.0).is_err());
        tx.apply(&step, 10.0).unwrap();
        assert!(tx.apply(&step, 11.0).is_err(), "phases never repeat");
        let (t, _) = walk(DltName::Bitcoin, ProtocolClass::P2Digest, &cfg);
        let times: Vec<f64> = Phase::SEQUENCE
            .iter()
            .filter_map(|&p| t.reached_at(p))
            .collect();
        assert!(times.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(t.included_at(), Some(780.0));
    }

    #[test]
    fn finalization_depth() {
        let profile = builtin_profile(DltName::Ethereum);
        let mut tx = LedgerTransaction::new(1, 0, &profile, 4, 0.0).unwrap();
        assert!(!is_finalized(&tx, 100, 6));
        tx.set_included_height(10);
        assert!(is_finalized(&tx, 16, 6));
        assert!(!is_finalized(&tx, 15, 6));
        assert!(is_finalized(&tx, 10, 0));
    }

    #[test]
    fn jittered_validation_is_exponential() {
        let mut profile = builtin_profile(DltName::Ethereum);
        profile.validation_jitter = true;
        let tx = LedgerTransaction::new(1, 0, &profile, 4, 0.0).unwrap();
        let cfg = LifecycleConfig::default();
        let mut tx = tx;
        while tx.phase() < Phase::ForwardedToDlt {
            let s = advance_lifecycle(&tx, &profile, ProtocolClass::P2Digest, &cfg).unwrap();
            tx.apply(&s, 0.0).unwrap();
        }
        let s = advance_lifecycle(&tx, &profile, ProtocolClass::P2Digest, &cfg).unwrap();
        assert_eq!(s.delay, Delay::Exponential { mean: 21.0 });
        let mut rng = RngStream::new(5, "validation");
        let mean = (0..20_000).map(|_| s.delay.resolve(&mut rng)).sum::<f64>() / 20_000.0;
        assert!((mean - 21.0).abs() < 0.6, "{mean}");
    }
}
