use super::Bytes;

/// On-ledger running average of every value it has been sent.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AveragingContract {
    pub count: u64,
    sum: f64,
}

impl AveragingContract {
    /// Serialized size of the contract state.
    pub const STATE_SIZE: Bytes = 48;

    pub fn new() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn apply(self, value: f64) -> Self {
        Self {
            count: self.count + 1,
            sum: self.sum + value,
        }
    }

    /// Arithmetic mean of the values applied so far; `None` before the first one.
    pub fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }

    pub fn state_size(&self) -> Bytes {
        Self::STATE_SIZE
    }
}
