use super::Bytes;

pub const HASH_SIZE: Bytes = 32;
/// Leaf index carried with every tree proof.
pub const INDEX_OVERHEAD: Bytes = 4;

/// How inclusion proofs are sized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProofModel {
    /// Every proven item costs a configured constant.
    Fixed(Bytes),
    /// Merkle path: one hash per tree level plus a leaf index.
    Tree,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InclusionProof {
    pub proven_items: u32,
    pub proof_size: Bytes,
}

impl InclusionProof {
    pub fn new(model: ProofModel, leaf_count: usize, proven_items: u32) -> Self {
        Self {
            proven_items,
            proof_size: proven_items * proof_size(model, leaf_count),
        }
    }
}

/// Size of the proof for a single item in a block of `leaf_count` leaves.
pub fn proof_size(model: ProofModel, leaf_count: usize) -> Bytes {
    match model {
        ProofModel::Fixed(bytes) => bytes,
        ProofModel::Tree => {
            let depth = leaf_count.max(1).next_power_of_two().trailing_zeros();
            HASH_SIZE * depth + INDEX_OVERHEAD
        }
    }
}
