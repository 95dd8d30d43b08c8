use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// One input vector of n finite reals drawn from the hidden distribution.
///
/// Positions are 0-based throughout the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct InputInstance {
    values: Vec<f64>,
}

impl InputInstance {
    /// Rejects NaN and infinities; the sorters assume a total order on values.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !value.is_finite() {
                return Err(CoreError::NonFiniteValue { index, value });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, index: usize) -> f64 {
        self.values[index]
    }
}
