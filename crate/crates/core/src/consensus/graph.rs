use crate::dlt::DeviceId;
use crate::kernel::RngStream;

use super::ConsensusError;

/// Resampling budget before giving up on strong connectivity.
///
/// At n = 1000, k = 5 about e^-5 of the nodes are never picked by anyone, so
/// only roughly one sample in 800 is strongly connected.
pub const MAX_GRAPH_ATTEMPTS: u32 = 100_000;

/// Directed k-out graph: device `i` knows `out_neighbors(i)` and pushes to them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GossipGraph {
    n: usize,
    k: usize,
    seed: u64,
    attempt: u32,
    out: Vec<Vec<DeviceId>>,
}

impl GossipGraph {
    /// Builds a graph from explicit adjacency lists, checking the k-out shape.
    pub fn from_adjacency(out: Vec<Vec<DeviceId>>) -> Result<Self, ConsensusError> {
        let n = out.len();
        let k = out.first().map_or(0, Vec::len);
        if n <= k || k == 0 {
            return Err(ConsensusError::GraphShape { n, k });
        }
        for (i, nbrs) in out.iter().enumerate() {
            let mut sorted = nbrs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if nbrs.len() != k
                || sorted.len() != k
                || sorted.iter().any(|&j| j as usize == i || j as usize >= n)
            {
                return Err(ConsensusError::GraphShape { n, k });
            }
        }
        Ok(Self {
            n,
            k,
            seed: 0,
            attempt: 0,
            out,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn out_degree(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Zero-based index of the sample that passed the connectivity check.
    pub fn attempt(&self) -> u32 {
        self.attempt
    }

    pub fn out_neighbors(&self, i: DeviceId) -> &[DeviceId] {
        &self.out[i as usize]
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.n];
        for nbrs in &self.out {
            for &j in nbrs {
                deg[j as usize] += 1;
            }
        }
        deg
    }

    pub fn edges(&self) -> impl Iterator<Item = (DeviceId, DeviceId)> + '_ {
        self.out
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().map(move |&j| (i as DeviceId, j)))
    }

    /// Every node reaches node 0 and node 0 reaches every node.
    pub fn is_strongly_connected(&self) -> bool {
        if self.in_degrees().contains(&0) {
            return false;
        }
        let mut reverse = vec![Vec::new(); self.n];
        for (i, j) in self.edges() {
            reverse[j as usize].push(i);
        }
        reaches_all(&self.out, self.n) && reaches_all(&reverse, self.n)
    }
}

fn reaches_all(adj: &[Vec<DeviceId>], n: usize) -> bool {
    if n == 0 {
        return true;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![0usize];
    seen[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for &v in &adj[u] {
            let v = v as usize;
            if !seen[v] {
                seen[v] = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// Uniform random k-out digraph, resampled on fresh substreams until strongly connected.
pub fn build_graph(n: usize, k: usize, seed: u64) -> Result<GossipGraph, ConsensusError> {
    if k == 0 || n <= k {
        return Err(ConsensusError::GraphShape { n, k });
    }
    for attempt in 0..MAX_GRAPH_ATTEMPTS {
        let mut rng = RngStream::new(seed, format!("graph.{attempt}"));
        let out = (0..n)
            .map(|i| {
                rng.distinct(n - 1, k)
                    .into_iter()
                    .map(|j| if j >= i { j + 1 } else { j } as DeviceId)
                    .collect()
            })
            .collect();
        let graph = GossipGraph {
            n,
            k,
            seed,
            attempt,
            out,
        };
        if graph.is_strongly_connected() {
            return Ok(graph);
        }
    }
    Err(ConsensusError::NotConnected {
        attempts: MAX_GRAPH_ATTEMPTS,
    })
}
