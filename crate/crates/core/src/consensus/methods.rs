use crate::dlt::{AveragingContract, Bytes, DeviceId, DltProfile, Ledger};
use crate::kernel::RngStream;
use crate::sync::{downlink_for_block, ProtocolClass, Subscription, SyncConfig, TxSizing};
use crate::dlt::proof_size;

use super::{ConsensusError, GossipGraph};

/// Per-device byte counters for the current period.
#[derive(Debug, Clone, PartialEq)]
pub struct Traffic {
    pub ul: Vec<u64>,
    pub dl: Vec<u64>,
}

impl Traffic {
    pub fn new(n: usize) -> Self {
        Self {
            ul: vec![0; n],
            dl: vec![0; n],
        }
    }

    pub fn reset(&mut self) {
        self.ul.fill(0);
        self.dl.fill(0);
    }

    pub fn mean_ul(&self) -> f64 {
        self.ul.iter().sum::<u64>() as f64 / self.ul.len() as f64
    }

    pub fn mean_dl(&self) -> f64 {
        self.dl.iter().sum::<u64>() as f64 / self.dl.len() as f64
    }
}

fn mean_with(own: f32, received: impl IntoIterator<Item = f32>) -> f32 {
    let (mut sum, mut count) = (f64::from(own), 1u32);
    for v in received {
        sum += f64::from(v);
        count += 1;
    }
    (sum / f64::from(count)) as f32
}

/// One period of method A.
///
/// For each device in id order: draw its neighbor with `index(k)`, then the
/// UL loss, then the DL loss. Received values are averaged with the
/// receiver's own value as it stood before the period.
pub fn gossip_step(
    graph: &GossipGraph,
    values: &mut [f32],
    p: f64,
    rng: &mut RngStream,
    traffic: &mut Traffic,
    ul_bytes: Bytes,
    dl_bytes: Bytes,
) {
    let before = values.to_vec();
    let mut inbox: Vec<Vec<f32>> = vec![Vec::new(); values.len()];
    for (i, &value) in before.iter().enumerate() {
        let nbrs = graph.out_neighbors(i as DeviceId);
        let target = nbrs[rng.index(nbrs.len())] as usize;
        let ul_lost = rng.chance(p);
        let dl_lost = rng.chance(p);
        traffic.ul[i] += u64::from(ul_bytes);
        if !ul_lost && !dl_lost {
            inbox[target].push(value);
            traffic.dl[target] += u64::from(dl_bytes);
        }
    }
    for (j, received) in inbox.into_iter().enumerate() {
        if !received.is_empty() {
            values[j] = mean_with(before[j], received);
        }
    }
}

/// Submits one transaction per device; draws one UL loss per device in id order.
fn submit_all(
    ledger: &mut Ledger<f32>,
    values: &[f32],
    to_contract: bool,
    p: f64,
    rng: &mut RngStream,
    traffic: &mut Traffic,
    value_bytes: Bytes,
) -> Result<(), ConsensusError> {
    let size = crate::dlt::transaction_total_size(ledger.profile(), value_bytes)?;
    for (i, &v) in values.iter().enumerate() {
        traffic.ul[i] += u64::from(size);
        if !rng.chance(p) {
            ledger.submit(i as DeviceId, value_bytes, to_contract, v)?;
        }
    }
    Ok(())
}

/// Method B: every device feeds one averaging contract.
#[derive(Debug)]
pub struct ContractAveraging {
    ledger: Ledger<f32>,
    contract: AveragingContract,
}

impl ContractAveraging {
    pub fn new(profile: DltProfile) -> Result<Self, ConsensusError> {
        Ok(Self {
            ledger: Ledger::new(profile)?,
            contract: AveragingContract::new(),
        })
    }

    pub fn contract(&self) -> AveragingContract {
        self.contract
    }

    pub fn submit(
        &mut self,
        values: &[f32],
        p: f64,
        rng: &mut RngStream,
        traffic: &mut Traffic,
        value_bytes: Bytes,
    ) -> Result<(), ConsensusError> {
        submit_all(&mut self.ledger, values, true, p, rng, traffic, value_bytes)
    }

    /// Seals a block, applies its values to the contract, then draws one DL
    /// loss per device in id order; receivers adopt the contract mean.
    pub fn on_block(
        &mut self,
        now: f64,
        values: &mut [f32],
        p: f64,
        rng: &mut RngStream,
        traffic: &mut Traffic,
        sync: &SyncConfig,
    ) -> Result<(), ConsensusError> {
        let produced = self.ledger.produce_block(now)?;
        for &v in &produced.payloads {
            self.contract = self.contract.apply(f64::from(v));
        }
        let bundle = downlink_for_block(
            ProtocolClass::P2Digest,
            self.ledger.profile(),
            &produced.block,
            &Subscription::contract(0),
            sync,
        )
        .expect("digest bundles are always defined")
        .total();
        let mean = self.contract.mean().map(|m| m as f32);
        for (i, value) in values.iter_mut().enumerate() {
            if rng.chance(p) {
                continue;
            }
            traffic.dl[i] += u64::from(bundle);
            if let Some(m) = mean.filter(|_| produced.block.contract_state_size.is_some()) {
                *value = m;
            }
        }
        Ok(())
    }
}

/// Method C: devices watch the transactions of their out-neighbors.
#[derive(Debug)]
pub struct TransactionAveraging {
    ledger: Ledger<f32>,
}

impl TransactionAveraging {
    pub fn new(profile: DltProfile) -> Result<Self, ConsensusError> {
        Ok(Self {
            ledger: Ledger::new(profile)?,
        })
    }

    pub fn submit(
        &mut self,
        values: &[f32],
        p: f64,
        rng: &mut RngStream,
        traffic: &mut Traffic,
        value_bytes: Bytes,
    ) -> Result<(), ConsensusError> {
        submit_all(&mut self.ledger, values, false, p, rng, traffic, value_bytes)
    }

    /// Seals a block, then draws one DL loss per device in id order. A
    /// receiver gets the header and every transaction of its out-neighbors,
    /// each with an inclusion proof, and averages its own value with the
    /// latest value of each neighbor present.
    #[allow(clippy::too_many_arguments)]
    pub fn on_block(
        &mut self,
        now: f64,
        graph: &GossipGraph,
        values: &mut [f32],
        p: f64,
        rng: &mut RngStream,
        traffic: &mut Traffic,
        sync: &SyncConfig,
    ) -> Result<(), ConsensusError> {
        let produced = self.ledger.produce_block(now)?;
        let block = &produced.block;
        let profile = self.ledger.profile();
        let proof = proof_size(sync.tx_proof, block.len());
        // Per sender: total matched bytes and the latest value in the block.
        let mut by_sender: Vec<(Bytes, Option<f32>)> = vec![(0, None); values.len()];
        for (entry, &v) in block.entries.iter().zip(&produced.payloads) {
            let tx = match sync.tx_sizing {
                TxSizing::Actual => entry.tx_size,
                TxSizing::Minimum => profile.min_tx_size,
            };
            let slot = &mut by_sender[entry.sender as usize];
            slot.0 += tx + proof;
            slot.1 = Some(v);
        }
        for (i, value) in values.iter_mut().enumerate() {
            if rng.chance(p) {
                continue;
            }
            let nbrs = graph.out_neighbors(i as DeviceId);
            let bytes: Bytes = block.header_size + nbrs.iter().map(|&j| by_sender[j as usize].0).sum::<Bytes>();
            traffic.dl[i] += u64::from(bytes);
            let received: Vec<f32> = nbrs.iter().filter_map(|&j| by_sender[j as usize].1).collect();
            if !received.is_empty() {
                *value = mean_with(*value, received);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::consensus::build_graph;
    use crate::dlt::{builtin_profile, DltName};

    fn profile() -> DltProfile {
        DltProfile {
            block_period: Some(10.0),
            ..builtin_profile(DltName::Ethereum)
        }
    }

    #[test]
    fn neighbor_bundle_matches_the_digest_protocol() {
        let graph = build_graph(30, 5, 9).unwrap();
        let values: Vec<f32> = (0..30).map(|i| i as f32).collect();
        let mut rng = RngStream::new(1, "t");
        let mut traffic = Traffic::new(30);
        let sync = SyncConfig::default();

        let mut ledger = Ledger::new(profile()).unwrap();
        for (i, &v) in values.iter().enumerate() {
            ledger.submit(i as DeviceId, 4, false, v).unwrap();
        }
        let block = ledger.produce_block(10.0).unwrap().block;

        let mut c = TransactionAveraging::new(profile()).unwrap();
        c.submit(&values, 0.0, &mut rng, &mut traffic, 4).unwrap();
        traffic.reset();
        let mut after = values.clone();
        c.on_block(10.0, &graph, &mut after, 0.0, &mut rng, &mut traffic, &sync).unwrap();
        for i in 0..30u32 {
            let sub = Subscription::senders(i, graph.out_neighbors(i).iter().copied());
            let want = downlink_for_block(ProtocolClass::P2Digest, &profile(), &block, &sub, &sync)
                .unwrap()
                .total();
            assert_eq!(traffic.dl[i as usize], u64::from(want));
        }
    }

    #[test]
    fn fixed_point_stays_put() {
        let graph = build_graph(20, 5, 4).unwrap();
        let mut values = vec![7.25f32; 20];
        let mut rng = RngStream::new(2, "t");
        let mut traffic = Traffic::new(20);
        gossip_step(&graph, &mut values, 0.0, &mut rng, &mut traffic, 76, 4);
        assert!(values.iter().all(|&v| v == 7.25));
        let mut c = TransactionAveraging::new(profile()).unwrap();
        c.submit(&values, 0.0, &mut rng, &mut traffic, 4).unwrap();
        c.on_block(10.0, &graph, &mut values, 0.0, &mut rng, &mut traffic, &SyncConfig::default())
            .unwrap();
        assert!(values.iter().all(|&v| v == 7.25));
    }

    #[test]
    fn first_block_gives_every_device_the_mean() {
        let values: Vec<f32> = vec![1.0, 2.0, 3.0, 10.0];
        let mut b = ContractAveraging::new(profile()).unwrap();
        let mut rng = RngStream::new(3, "t");
        let mut traffic = Traffic::new(4);
        b.submit(&values, 0.0, &mut rng, &mut traffic, 4).unwrap();
        let mut after = values.clone();
        b.on_block(10.0, &mut after, 0.0, &mut rng, &mut traffic, &SyncConfig::default())
            .unwrap();
        assert_eq!(after, vec![4.0; 4]);
        assert_eq!(traffic.dl, vec![931; 4]);
        assert_eq!(b.contract().count, 4);
    }
}
