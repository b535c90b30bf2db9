use thiserror::Error;

use super::SimTime;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("series `{name}`: sample at t={at} precedes last sample at t={last}")]
    OutOfOrder {
        name: String,
        at: SimTime,
        last: SimTime,
    },
}

/// Time-stamped samples of one quantity. Sample times never decrease.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    name: String,
    unit: String,
    samples: Vec<(SimTime, f64)>,
}

impl MetricSeries {
    pub fn new(name: impl Into<String>, unit: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            unit: unit.into(),
            samples: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn samples(&self) -> &[(SimTime, f64)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn push(&mut self, at: SimTime, value: f64) -> Result<(), MetricError> {
        if let Some(&(last, _)) = self.samples.last() {
            if at < last {
                return Err(MetricError::OutOfOrder {
                    name: self.name.clone(),
                    at,
                    last,
                });
            }
        }
        self.samples.push((at, value));
        Ok(())
    }

    pub fn values(&self) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(|&(_, v)| v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_out_of_order_samples() {
        let mut s = MetricSeries::new("err", "1");
        s.push(1.0, 3.0).unwrap();
        s.push(1.0, 2.0).unwrap();
        assert!(s.push(0.5, 1.0).is_err());
        assert_eq!(s.len(), 2);
        assert_eq!(s.values().collect::<Vec<_>>(), vec![3.0, 2.0]);
    }
}
