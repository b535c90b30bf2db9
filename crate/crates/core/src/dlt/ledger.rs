use std::collections::VecDeque;

use super::{AveragingContract, Bytes, DeviceId, DltError, DltProfile};

pub type TxId = u64;

/// One transaction as recorded in a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockEntry {
    pub tx_id: TxId,
    pub sender: DeviceId,
    pub tx_size: Bytes,
    pub payload_size: Bytes,
    pub to_contract: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Block {
    pub height: u64,
    pub produced_at: f64,
    pub header_size: Bytes,
    pub entries: Vec<BlockEntry>,
    /// Size of the contract state, present when the block updates it.
    pub contract_state_size: Option<Bytes>,
}

impl Block {
    pub fn tx_ids(&self) -> impl Iterator<Item = TxId> + '_ {
        self.entries.iter().map(|e| e.tx_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Stable 64-bit digest of the block contents (FNV-1a).
    pub fn fingerprint(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut eat = |bytes: &[u8]| {
            for b in bytes {
                h = (h ^ u64::from(*b)).wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        eat(&self.height.to_le_bytes());
        eat(&self.produced_at.to_bits().to_le_bytes());
        for id in self.tx_ids() {
            eat(&id.to_le_bytes());
        }
        h
    }
}

/// A block together with the application payloads of its transactions,
/// index-aligned with `block.entries`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProducedBlock<T> {
    pub block: Block,
    pub payloads: Vec<T>,
}

#[derive(Debug, Clone)]
struct PendingTx<T> {
    entry: BlockEntry,
    payload: T,
}

/// FIFO pending pool plus a consecutive chain of blocks.
#[derive(Debug, Clone)]
pub struct Ledger<T> {
    profile: DltProfile,
    pending: VecDeque<PendingTx<T>>,
    next_tx_id: TxId,
    next_height: u64,
    last_produced_at: Option<f64>,
    included: u64,
}

impl<T> Ledger<T> {
    pub fn new(profile: DltProfile) -> Result<Self, DltError> {
        profile.validate()?;
        if !profile.has_blocks() {
            return Err(DltError::NoBlocks(profile.name));
        }
        Ok(Self {
            profile,
            pending: VecDeque::new(),
            next_tx_id: 0,
            next_height: 0,
            last_produced_at: None,
            included: 0,
        })
    }

    pub fn profile(&self) -> &DltProfile {
        &self.profile
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn submitted(&self) -> u64 {
        self.next_tx_id
    }

    pub fn included(&self) -> u64 {
        self.included
    }

    /// Height of the most recent block.
    pub fn height(&self) -> Option<u64> {
        self.next_height.checked_sub(1)
    }

    /// Adds a transaction to the pending pool; ids are sequential per ledger.
    pub fn submit(
        &mut self,
        sender: DeviceId,
        payload_size: Bytes,
        to_contract: bool,
        payload: T,
    ) -> Result<TxId, DltError> {
        let tx_size = super::transaction_total_size(&self.profile, payload_size)?;
        let tx_id = self.next_tx_id;
        self.next_tx_id += 1;
        self.pending.push_back(PendingTx {
            entry: BlockEntry {
                tx_id,
                sender,
                tx_size,
                payload_size,
                to_contract,
            },
            payload,
        });
        Ok(tx_id)
    }

    /// Seals the next block with up to `capacity x block_period` pending
    /// transactions, oldest first.
    pub fn produce_block(&mut self, now: f64) -> Result<ProducedBlock<T>, DltError> {
        if let Some(last) = self.last_produced_at {
            if now <= last {
                return Err(DltError::BlockOrder { at: now, last });
            }
        }
        let capacity = self.profile.block_capacity().unwrap_or(0);
        let take = capacity.min(self.pending.len());
        let (entries, payloads): (Vec<_>, Vec<_>) = self
            .pending
            .drain(..take)
            .map(|p| (p.entry, p.payload))
            .unzip();
        let contract_state_size = entries
            .iter()
            .any(|e| e.to_contract)
            .then_some(AveragingContract::STATE_SIZE);
        let block = Block {
            height: self.next_height,
            produced_at: now,
            header_size: self.profile.header_size.unwrap_or(0),
            entries,
            contract_state_size,
        };
        self.next_height += 1;
        self.last_produced_at = Some(now);
        self.included += block.len() as u64;
        Ok(ProducedBlock { block, payloads })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dlt::{builtin_profile, DltName};

    fn eth_one_second() -> DltProfile {
        let mut p = builtin_profile(DltName::Ethereum);
        p.block_period = Some(1.0);
        p
    }

    #[test]
    fn block_takes_capacity_worth_fifo() {
        let mut ledger = Ledger::new(eth_one_second()).unwrap();
        for i in 0..1000u32 {
            ledger.submit(i, 50, false, i).unwrap();
        }
        let b = ledger.produce_block(1.0).unwrap();
        assert_eq!(b.block.len(), 100);
        assert_eq!(b.payloads, (0..100).collect::<Vec<_>>());
        assert_eq!(ledger.pending_len(), 900);
        let b2 = ledger.produce_block(2.0).unwrap();
        assert_eq!(b2.block.height, b.block.height + 1);
        assert_eq!(b2.payloads[0], 100);
        assert_eq!(b.block.header_size, 508);
        assert_eq!(b.block.entries[0].tx_size, 160);
    }

    #[test]
    fn empty_pool_yields_empty_block() {
        let mut ledger: Ledger<()> = Ledger::new(eth_one_second()).unwrap();
        let b = ledger.produce_block(1.0).unwrap();
        assert!(b.block.is_empty());
        assert_eq!(b.block.header_size, 508);
        assert_eq!(b.block.contract_state_size, None);
        assert!(ledger.produce_block(1.0).is_err());
    }

    #[test]
    fn contract_transactions_mark_state_update() {
        let mut ledger = Ledger::new(eth_one_second()).unwrap();
        ledger.submit(0, 4, true, 1.0f32).unwrap();
        let b = ledger.produce_block(1.0).unwrap();
        assert_eq!(b.block.contract_state_size, Some(48));
    }

    #[test]
    fn iota_has_no_block_ledger() {
        assert!(matches!(
            Ledger::<()>::new(builtin_profile(DltName::Iota)),
            Err(DltError::NoBlocks(DltName::Iota))
        ));
    }

    #[test]
    fn fingerprint_tracks_contents() {
        let mut ledger = Ledger::new(eth_one_second()).unwrap();
        ledger.submit(0, 4, false, ()).unwrap();
        let a = ledger.produce_block(1.0).unwrap().block;
        let mut b = a.clone();
        assert_eq!(a.fingerprint(), b.fingerprint());
        b.entries[0].tx_id = 99;
        assert_ne!(a.fingerprint(), b.fingerprint());
    }
}
