use serde::{Deserialize, Serialize};

use crate::counter::ComparisonCounter;
use crate::error::{CoreError, Result};

/// Learned boundary values v_1 <= ... <= v_M splitting the real line into
/// M+1 half-open intervals [v_r, v_{r+1}). The sentinels v_0 = -inf and
/// v_{M+1} = +inf are implicit and never stored.
///
/// Duplicate boundaries are allowed; they appear when a degenerate value
/// occupies several rank positions, and they make the intervals between equal
/// boundaries empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VList {
    boundaries: Vec<f64>,
}

/// Builds a V-list by taking every `stride`-th value of a sorted sample list:
/// boundary i is `samples[i * stride - 1]` (1-based ranks). A trailing
/// remainder shorter than `stride` is dropped.
pub fn build_vlist(samples: &[f64], stride: usize) -> Result<VList> {
    assert!(stride >= 1, "stride must be positive");
    if samples.is_empty() {
        return Err(CoreError::EmptyTraining);
    }
    debug_assert!(
        samples.windows(2).all(|w| w[0] <= w[1]),
        "samples must be sorted"
    );
    let count = samples.len() / stride;
    let boundaries = (1..=count).map(|i| samples[i * stride - 1]).collect();
    Ok(VList { boundaries })
}

impl VList {
    pub fn from_boundaries(boundaries: Vec<f64>) -> Self {
        debug_assert!(boundaries.windows(2).all(|w| w[0] <= w[1]));
        Self { boundaries }
    }

    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    /// Number of stored boundaries M.
    pub fn len(&self) -> usize {
        self.boundaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundaries.is_empty()
    }

    /// Number of intervals, M + 1.
    pub fn interval_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Largest r with v_r <= x, i.e. the half-open interval [v_r, v_{r+1})
    /// containing x. Binary search; every probe is charged to `counter`.
    ///
    /// With duplicate boundaries the largest qualifying index is returned, so
    /// the intervals between equal boundaries are never reported.
    pub fn predecessor_index(&self, x: f64, counter: &mut ComparisonCounter) -> usize {
        let mut lo = 0;
        let mut hi = self.boundaries.len();
        while lo < hi {
            let mid = lo + (hi - lo) / 2;
            counter.bump();
            if self.boundaries[mid] <= x {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        lo
    }

    /// Left edge of interval r (-inf for r = 0).
    pub fn interval_lo(&self, r: usize) -> f64 {
        if r == 0 {
            f64::NEG_INFINITY
        } else {
            self.boundaries[r - 1]
        }
    }

    /// Right edge of interval r (+inf for r = M).
    pub fn interval_hi(&self, r: usize) -> f64 {
        if r == self.boundaries.len() {
            f64::INFINITY
        } else {
            self.boundaries[r]
        }
    }
}
