//! Light-client synchronization classes and their byte accounting.
//!
//! * `P1` ships everything needed to verify the ledger; it is accepted for
//!   lifecycle bookkeeping but rejected for per-block downlinks.
//! * `P2Digest` pushes every block header plus the matched items and their
//!   inclusion proofs (SPV style).
//! * `P2Incentive` pushes only the matched application data and a short
//!   acknowledgement from a deposit-backed gateway.
//! * `P3` pushes the matched data with no metadata at all.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::dlt::{
    proof_size, transaction_total_size, Block, BlockEntry, Bytes, DeviceId, DltError, DltProfile,
    ProofModel,
};

pub type GatewayId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SyncError {
    #[error("protocol class P1 is not supported for IoT downlinks")]
    UnsupportedP1,
    #[error("digest comparison needs at least 2 gateways, got {0}")]
    InsufficientEvidence(usize),
    #[error("subscription must name at least one gateway")]
    NoGateway,
    #[error("unknown protocol class `{0}` (expected p1, p2-digest, p2-incentive or p3)")]
    UnknownProtocol(String),
    #[error(transparent)]
    Dlt(#[from] DltError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ProtocolClass {
    P1,
    P2Digest,
    P2Incentive,
    P3,
}

impl ProtocolClass {
    pub fn key(self) -> &'static str {
        match self {
            ProtocolClass::P1 => "p1",
            ProtocolClass::P2Digest => "p2-digest",
            ProtocolClass::P2Incentive => "p2-incentive",
            ProtocolClass::P3 => "p3",
        }
    }
}

impl fmt::Display for ProtocolClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

impl FromStr for ProtocolClass {
    type Err = SyncError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "p1" => Ok(ProtocolClass::P1),
            "p2-digest" | "p2digest" | "digest" => Ok(ProtocolClass::P2Digest),
            "p2-incentive" | "p2incentive" | "incentive" => Ok(ProtocolClass::P2Incentive),
            "p3" => Ok(ProtocolClass::P3),
            other => Err(SyncError::UnknownProtocol(other.to_string())),
        }
    }
}

/// Something a device watches on the ledger.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum WatchedSource {
    Contract,
    Senders(BTreeSet<DeviceId>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subscription {
    pub device: DeviceId,
    pub sources: Vec<WatchedSource>,
    pub gateways: Vec<GatewayId>,
}

impl Subscription {
    pub fn new(
        device: DeviceId,
        sources: Vec<WatchedSource>,
        gateways: Vec<GatewayId>,
    ) -> Result<Self, SyncError> {
        if gateways.is_empty() {
            return Err(SyncError::NoGateway);
        }
        Ok(Self {
            device,
            sources,
            gateways,
        })
    }

    pub fn contract(device: DeviceId) -> Self {
        Self {
            device,
            sources: vec![WatchedSource::Contract],
            gateways: vec![0],
        }
    }

    pub fn senders(device: DeviceId, senders: impl IntoIterator<Item = DeviceId>) -> Self {
        Self {
            device,
            sources: vec![WatchedSource::Senders(senders.into_iter().collect())],
            gateways: vec![0],
        }
    }

    pub fn watches_contract(&self) -> bool {
        self.sources
            .iter()
            .any(|s| matches!(s, WatchedSource::Contract))
    }

    pub fn watches_sender(&self, sender: DeviceId) -> bool {
        self.sources
            .iter()
            .any(|s| matches!(s, WatchedSource::Senders(set) if set.contains(&sender)))
    }

    pub fn matched<'b>(&'b self, block: &'b Block) -> impl Iterator<Item = &'b BlockEntry> + 'b {
        block
            .entries
            .iter()
            .filter(move |e| self.watches_sender(e.sender))
    }
}

/// How transactions are counted inside a digest bundle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxSizing {
    /// The transaction's actual on-ledger size.
    Actual,
    /// The profile's minimum transaction size, whatever the payload.
    Minimum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyncConfig {
    pub state_proof: ProofModel,
    pub tx_proof: ProofModel,
    pub incentive_ack_bytes: Bytes,
    pub tx_sizing: TxSizing,
}

impl Default for SyncConfig {
    fn default() -> Self {
        Self {
            state_proof: ProofModel::Fixed(375),
            tx_proof: ProofModel::Fixed(108),
            incentive_ack_bytes: 10,
            tx_sizing: TxSizing::Actual,
        }
    }
}

/// Bytes pushed to one device for one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DownlinkBundle {
    pub header_bytes: Bytes,
    pub receipt_bytes: Bytes,
    pub state_bytes: Bytes,
    pub proof_bytes: Bytes,
    pub tx_bytes: Bytes,
    /// Matched transactions carried.
    pub items: u32,
    /// The device takes the content on the gateway's word alone.
    pub trusted: bool,
}

impl DownlinkBundle {
    pub fn total(&self) -> Bytes {
        self.header_bytes + self.receipt_bytes + self.state_bytes + self.proof_bytes + self.tx_bytes
    }
}

/// Downlink content for `sub` when `block` is produced.
pub fn downlink_for_block(
    protocol: ProtocolClass,
    profile: &DltProfile,
    block: &Block,
    sub: &Subscription,
    cfg: &SyncConfig,
) -> Result<DownlinkBundle, SyncError> {
    let state = block
        .contract_state_size
        .filter(|_| sub.watches_contract());
    let matched: Vec<&BlockEntry> = sub.matched(block).collect();
    let leaves = block.len();
    let mut bundle = DownlinkBundle {
        items: matched.len() as u32,
        ..Default::default()
    };
    match protocol {
        ProtocolClass::P1 => return Err(SyncError::UnsupportedP1),
        ProtocolClass::P2Digest => {
            bundle.header_bytes = block.header_size;
            if let Some(size) = state {
                bundle.state_bytes = size;
                bundle.proof_bytes += proof_size(cfg.state_proof, leaves);
            }
            for entry in &matched {
                bundle.tx_bytes += match cfg.tx_sizing {
                    TxSizing::Actual => entry.tx_size,
                    TxSizing::Minimum => profile.min_tx_size,
                };
                bundle.proof_bytes += proof_size(cfg.tx_proof, leaves);
            }
        }
        ProtocolClass::P2Incentive | ProtocolClass::P3 => {
            bundle.state_bytes = state.unwrap_or(0);
            bundle.tx_bytes = matched.iter().map(|e| e.payload_size).sum();
            let has_data = state.is_some() || !matched.is_empty();
            if protocol == ProtocolClass::P2Incentive && has_data {
                bundle.receipt_bytes = cfg.incentive_ack_bytes;
            }
            bundle.trusted = protocol == ProtocolClass::P3;
        }
    }
    Ok(bundle)
}

/// Uplink bytes to publish `payload`; the signature is inside the minimum size.
pub fn uplink_for_publish(
    _protocol: ProtocolClass,
    profile: &DltProfile,
    payload: Bytes,
) -> Result<Bytes, SyncError> {
    Ok(transaction_total_size(profile, payload)?)
}

/// A gateway relaying headers; dishonest ones corrupt every fingerprint the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gateway {
    pub id: GatewayId,
    pub honest: bool,
}

impl Gateway {
    const CORRUPTION: u64 = 0xdead_beef_0bad_f00d;

    pub fn header_fingerprint(&self, block: &Block) -> u64 {
        let fp = block.fingerprint();
        if self.honest {
            fp
        } else {
            fp ^ Self::CORRUPTION
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DigestVerdict {
    Consistent,
    /// A strict plurality agrees; these gateways disagree with it.
    Mismatch { suspects: Vec<GatewayId> },
    /// No fingerprint has a strict plurality.
    Unresolved { gateways: Vec<GatewayId> },
}

/// Cross-checks the header fingerprints that several gateways reported for one height.
pub fn compare_digests(headers: &[(GatewayId, u64)]) -> Result<DigestVerdict, SyncError> {
    if headers.len() < 2 {
        return Err(SyncError::InsufficientEvidence(headers.len()));
    }
    let mut groups: BTreeMap<u64, Vec<GatewayId>> = BTreeMap::new();
    for &(gw, fp) in headers {
        groups.entry(fp).or_default().push(gw);
    }
    if groups.len() == 1 {
        return Ok(DigestVerdict::Consistent);
    }
    let largest = groups.values().map(Vec::len).max().unwrap_or(0);
    let leaders: Vec<u64> = groups
        .iter()
        .filter(|(_, gws)| gws.len() == largest)
        .map(|(&fp, _)| fp)
        .collect();
    let mut all: Vec<GatewayId> = headers.iter().map(|&(gw, _)| gw).collect();
    all.sort_unstable();
    if leaders.len() > 1 {
        return Ok(DigestVerdict::Unresolved { gateways: all });
    }
    let mut suspects: Vec<GatewayId> = groups
        .iter()
        .filter(|(&fp, _)| fp != leaders[0])
        .flat_map(|(_, gws)| gws.iter().copied())
        .collect();
    suspects.sort_unstable();
    Ok(DigestVerdict::Mismatch { suspects })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlt::{builtin_profile, DltName, Ledger};
    use proptest::prelude::*;

    fn eth() -> DltProfile {
        let mut p = builtin_profile(DltName::Ethereum);
        p.block_period = Some(10.0);
        p
    }

    fn block_with(entries: &[(DeviceId, Bytes, bool)]) -> Block {
        let mut ledger = Ledger::new(eth()).unwrap();
        for &(sender, payload, to_contract) in entries {
            ledger.submit(sender, payload, to_contract, ()).unwrap();
        }
        ledger.produce_block(10.0).unwrap().block
    }

    #[test]
    fn contract_update_bundle_is_931_bytes() {
        let block = block_with(&[(1, 4, true), (2, 4, true)]);
        let b = downlink_for_block(
            ProtocolClass::P2Digest,
            &eth(),
            &block,
            &Subscription::contract(0),
            &SyncConfig::default(),
        )
        .unwrap();
        assert_eq!((b.header_bytes, b.state_bytes, b.proof_bytes), (508, 48, 375));
        assert_eq!(b.total(), 931);
    }

    #[test]
    fn five_neighbour_transactions() {
        let senders = [1, 2, 3, 4, 5];
        let sub = Subscription::senders(0, senders);
        let cfg = SyncConfig::default();

        // 50 B payloads make 160 B transactions: the worst case of the fixed 108 B proof.
        let block = block_with(&senders.map(|s| (s, 50, false)));
        let b = downlink_for_block(ProtocolClass::P2Digest, &eth(), &block, &sub, &cfg).unwrap();
        assert_eq!(b.total(), 508 + 5 * 160 + 5 * 108);

        // 4 B values, as in the averaging experiment.
        let block = block_with(&senders.map(|s| (s, 4, false)));
        let b = downlink_for_block(ProtocolClass::P2Digest, &eth(), &block, &sub, &cfg).unwrap();
        assert_eq!(b.total(), 508 + 5 * 114 + 5 * 108);
        assert!((1360..=1840).contains(&b.total()));

        let min = SyncConfig {
            tx_sizing: TxSizing::Minimum,
            ..cfg
        };
        let b = downlink_for_block(ProtocolClass::P2Digest, &eth(), &block, &sub, &min).unwrap();
        assert_eq!(b.total(), 1598);
    }

    #[test]
    fn incentive_bundle_skips_metadata() {
        let block = block_with(&[(7, 4, false), (8, 4, false)]);
        let sub = Subscription::senders(0, [7]);
        let b = downlink_for_block(
            ProtocolClass::P2Incentive,
            &eth(),
            &block,
            &sub,
            &SyncConfig::default(),
        )
        .unwrap();
        assert_eq!(b.header_bytes, 0);
        assert_eq!(b.proof_bytes, 0);
        assert_eq!(b.tx_bytes, 4);
        assert_eq!(b.total(), 14);
        let p3 = downlink_for_block(
            ProtocolClass::P3,
            &eth(),
            &block,
            &sub,
            &SyncConfig::default(),
        )
        .unwrap();
        assert_eq!(p3.total(), 4);
        assert!(p3.trusted);
    }

    #[test]
    fn p1_is_rejected() {
        let block = block_with(&[]);
        assert_eq!(
            downlink_for_block(
                ProtocolClass::P1,
                &eth(),
                &block,
                &Subscription::contract(0),
                &SyncConfig::default()
            ),
            Err(SyncError::UnsupportedP1)
        );
    }

    #[test]
    fn digest_still_delivers_unmatched_headers() {
        let block = block_with(&[(9, 4, false)]);
        let b = downlink_for_block(
            ProtocolClass::P2Digest,
            &eth(),
            &block,
            &Subscription::senders(0, [1]),
            &SyncConfig::default(),
        )
        .unwrap();
        assert_eq!(b.total(), 508);
    }

    #[test]
    fn uplink_is_class_independent() {
        let e = eth();
        let btc = builtin_profile(DltName::Bitcoin);
        assert_eq!(uplink_for_publish(ProtocolClass::P2Digest, &e, 50), Ok(160));
        assert_eq!(uplink_for_publish(ProtocolClass::P3, &e, 50), Ok(160));
        assert_eq!(uplink_for_publish(ProtocolClass::P2Digest, &btc, 50), Ok(297));
        assert!(uplink_for_publish(
            ProtocolClass::P3,
            &builtin_profile(DltName::Fabric),
            2000
        )
        .is_err());
    }

    #[test]
    fn digest_comparison() {
        assert_eq!(
            compare_digests(&[(1, 10), (2, 10)]),
            Ok(DigestVerdict::Consistent)
        );
        assert_eq!(
            compare_digests(&[(1, 10), (2, 10), (3, 11)]),
            Ok(DigestVerdict::Mismatch { suspects: vec![3] })
        );
        assert_eq!(
            compare_digests(&[(1, 10), (2, 11)]),
            Ok(DigestVerdict::Unresolved {
                gateways: vec![1, 2]
            })
        );
        assert_eq!(
            compare_digests(&[(1, 10)]),
            Err(SyncError::InsufficientEvidence(1))
        );
        assert!(Subscription::new(0, vec![], vec![]).is_err());
    }

    #[test]
    fn protocol_names_parse() {
        for class in [
            ProtocolClass::P1,
            ProtocolClass::P2Digest,
            ProtocolClass::P2Incentive,
            ProtocolClass::P3,
        ] {
            assert_eq!(class.key().parse::<ProtocolClass>().unwrap(), class);
        }
        assert!("p4".parse::<ProtocolClass>().is_err());
    }

    proptest! {
        #[test]
        fn honest_majority_is_exonerated(honest in 2usize..8, dishonest in 0usize..6) {
            prop_assume!(honest > dishonest);
            let block = block_with(&[(1, 4, false)]);
            let gateways: Vec<Gateway> = (0..honest + dishonest)
                .map(|i| Gateway { id: i as u32, honest: i < honest })
                .collect();
            let reports: Vec<_> = gateways.iter().map(|g| (g.id, g.header_fingerprint(&block))).collect();
            match compare_digests(&reports).unwrap() {
                DigestVerdict::Consistent => prop_assert_eq!(dishonest, 0),
                DigestVerdict::Mismatch { suspects } => {
                    prop_assert!(suspects.iter().all(|&id| id as usize >= honest));
                    prop_assert_eq!(suspects.len(), dishonest);
                }
                DigestVerdict::Unresolved { .. } => prop_assert!(false, "honest majority must resolve"),
            }
        }

        #[test]
        fn class_ordering_holds(
            entries in prop::collection::vec((0u32..20, 0u32..200, any::<bool>()), 0..40),
            watched in prop::collection::btree_set(0u32..20, 0..6),
            contract in any::<bool>(),
            dlt in 0usize..4,
        ) {
            let mut profile = builtin_profile(DltName::ALL[dlt]);
            if profile.block_period.is_none() {
                // Treat the DAG ledger as producing periodic milestones for accounting.
                profile.block_period = Some(10.0);
            }
            let mut ledger = Ledger::new(profile.clone()).unwrap();
            for (sender, payload, to_contract) in entries {
                let cap = profile.tx_data_capacity.unwrap_or(u32::MAX);
                ledger.submit(sender, payload.min(cap), to_contract, ()).unwrap();
            }
            let block = ledger.produce_block(1.0).unwrap().block;
            let mut sources = vec![WatchedSource::Senders(watched)];
            if contract {
                sources.push(WatchedSource::Contract);
            }
            let sub = Subscription::new(0, sources, vec![0, 1]).unwrap();
            let cfg = SyncConfig::default();
            let total = |class| downlink_for_block(class, &profile, &block, &sub, &cfg).unwrap().total();
            let (p3, inc, dig) = (total(ProtocolClass::P3), total(ProtocolClass::P2Incentive), total(ProtocolClass::P2Digest));
            prop_assert!(p3 <= inc);
            prop_assert!(inc <= dig);
        }
    }
}
