//! Parameterized ledger models: per-DLT profiles, transaction sizing, block
//! production, the transaction lifecycle, and the averaging contract.

mod contract;
mod ledger;
mod lifecycle;
mod proof;

pub use contract::AveragingContract;
pub use ledger::{Block, BlockEntry, Ledger, ProducedBlock, TxId};
pub use lifecycle::{
    advance_lifecycle, is_finalized, Delay, Direction, LedgerTransaction, LifecycleConfig,
    LinkMessage, Phase, Transition,
};
pub use proof::{proof_size, InclusionProof, ProofModel, HASH_SIZE, INDEX_OVERHEAD};

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Byte counts.
pub type Bytes = u32;

/// Identifies an end device.
pub type DeviceId = u32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DltError {
    #[error("unknown DLT `{0}` (expected ethereum, iota, bitcoin or fabric)")]
    UnknownDlt(String),
    #[error("payload of {payload} B exceeds the {capacity} B data capacity of a {dlt} transaction")]
    Oversize {
        dlt: DltName,
        payload: Bytes,
        capacity: Bytes,
    },
    #[error("{0} has no blocks")]
    NoBlocks(DltName),
    #[error("block at t={at} s does not follow the previous block at t={last} s")]
    BlockOrder { at: f64, last: f64 },
    #[error("invalid {dlt} profile: {reason}")]
    InvalidProfile { dlt: DltName, reason: String },
    #[error("lifecycle violation for tx {tx}: {reason}")]
    Lifecycle { tx: TxId, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DltName {
    Ethereum,
    Iota,
    Bitcoin,
    Fabric,
}

impl DltName {
    pub const ALL: [DltName; 4] = [
        DltName::Ethereum,
        DltName::Iota,
        DltName::Bitcoin,
        DltName::Fabric,
    ];

    pub fn key(self) -> &'static str {
        match self {
            DltName::Ethereum => "ethereum",
            DltName::Iota => "iota",
            DltName::Bitcoin => "bitcoin",
            DltName::Fabric => "fabric",
        }
    }
}

impl fmt::Display for DltName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DltName::Ethereum => "Ethereum",
            DltName::Iota => "IOTA",
            DltName::Bitcoin => "Bitcoin",
            DltName::Fabric => "Fabric",
        })
    }
}

impl FromStr for DltName {
    type Err = DltError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ethereum" | "eth" => Ok(DltName::Ethereum),
            "iota" => Ok(DltName::Iota),
            "bitcoin" | "btc" => Ok(DltName::Bitcoin),
            "fabric" | "hyperledger-fabric" => Ok(DltName::Fabric),
            other => Err(DltError::UnknownDlt(other.to_string())),
        }
    }
}

/// Static parameters of one ledger network.
#[derive(Debug, Clone, PartialEq)]
pub struct DltProfile {
    pub name: DltName,
    /// Transactions per second the network can include.
    pub capacity_tps: f64,
    /// Seconds from forwarding to inclusion.
    pub validation_time: f64,
    /// Sample inclusion delays from an exponential with mean `validation_time`.
    pub validation_jitter: bool,
    pub block_size: Option<Bytes>,
    pub header_size: Option<Bytes>,
    pub min_tx_size: Bytes,
    /// Payload room inside `min_tx_size`, for DLTs with fixed-size transactions.
    pub tx_data_capacity: Option<Bytes>,
    /// `None` for DAG ledgers without blocks.
    pub block_period: Option<f64>,
    /// Device-side proof-of-work, seconds.
    pub local_pow_time: Option<f64>,
    pub endorsement_required: bool,
}

/// Built-in parameterization for `name`.
pub fn builtin_profile(name: DltName) -> DltProfile {
    match name {
        DltName::Ethereum => DltProfile {
            name,
            capacity_tps: 100.0,
            validation_time: 21.0,
            validation_jitter: false,
            block_size: Some(5_000),
            header_size: Some(508),
            min_tx_size: 110,
            tx_data_capacity: None,
            block_period: Some(15.0),
            local_pow_time: None,
            endorsement_required: false,
        },
        DltName::Iota => DltProfile {
            name,
            capacity_tps: 1_000.0,
            validation_time: 88.0,
            validation_jitter: false,
            block_size: None,
            header_size: None,
            min_tx_size: 1_600,
            tx_data_capacity: Some(1_300),
            block_period: None,
            local_pow_time: Some(5.0),
            endorsement_required: false,
        },
        DltName::Bitcoin => DltProfile {
            name,
            capacity_tps: 7.0,
            validation_time: 780.0,
            validation_jitter: false,
            block_size: Some(500_000),
            header_size: Some(80),
            min_tx_size: 247,
            tx_data_capacity: None,
            block_period: Some(600.0),
            local_pow_time: None,
            endorsement_required: false,
        },
        DltName::Fabric => DltProfile {
            name,
            capacity_tps: 1_000.0,
            validation_time: 0.55,
            validation_jitter: false,
            block_size: Some(500_000),
            header_size: Some(72),
            min_tx_size: 3_060,
            tx_data_capacity: Some(960),
            block_period: Some(2.0),
            local_pow_time: None,
            endorsement_required: true,
        },
    }
}

/// Looks a profile up by its textual name.
pub fn builtin_profile_by_name(name: &str) -> Result<DltProfile, DltError> {
    name.parse().map(builtin_profile)
}

impl DltProfile {
    pub fn has_blocks(&self) -> bool {
        self.block_period.is_some()
    }

    /// Transactions that fit in one block period, rounded down.
    pub fn block_capacity(&self) -> Option<usize> {
        self.block_period
            .map(|period| (self.capacity_tps * period).floor() as usize)
    }

    pub fn validate(&self) -> Result<(), DltError> {
        let fail = |reason: String| {
            Err(DltError::InvalidProfile {
                dlt: self.name,
                reason,
            })
        };
        let positive_times = [
            ("capacity_tps", Some(self.capacity_tps)),
            ("block_period", self.block_period),
        ];
        for (key, value) in positive_times {
            if let Some(v) = value {
                if !(v.is_finite() && v > 0.0) {
                    return fail(format!("{key} must be positive, got {v}"));
                }
            }
        }
        let non_negative = [
            ("validation_time", Some(self.validation_time)),
            ("local_pow_time", self.local_pow_time),
        ];
        for (key, value) in non_negative {
            if let Some(v) = value {
                if !(v.is_finite() && v >= 0.0) {
                    return fail(format!("{key} must be non-negative, got {v}"));
                }
            }
        }
        let sizes = [
            ("block_size", self.block_size),
            ("header_size", self.header_size),
            ("min_tx_size", Some(self.min_tx_size)),
            ("tx_data_capacity", self.tx_data_capacity),
        ];
        for (key, value) in sizes {
            if value == Some(0) {
                return fail(format!("{key} must be positive"));
            }
        }
        if let Some(cap) = self.tx_data_capacity {
            if cap > self.min_tx_size {
                return fail(format!(
                    "tx_data_capacity {cap} exceeds min_tx_size {}",
                    self.min_tx_size
                ));
            }
        }
        Ok(())
    }
}

/// On-air size of a transaction carrying `payload` bytes.
///
/// Fixed-size transactions (those with a data-capacity field) absorb the
/// payload; the others grow by it.
pub fn transaction_total_size(profile: &DltProfile, payload: Bytes) -> Result<Bytes, DltError> {
    match profile.tx_data_capacity {
        Some(capacity) if payload > capacity => Err(DltError::Oversize {
            dlt: profile.name,
            payload,
            capacity,
        }),
        Some(_) => Ok(profile.min_tx_size),
        None => Ok(profile.min_tx_size + payload),
    }
}
