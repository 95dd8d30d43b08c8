/// Counts key comparisons performed on input values.
///
/// Only comparisons where at least one side is an input value (value vs value,
/// or value vs learned boundary) are charged. Index arithmetic, bucket
/// pointers, and van Emde Boas traffic are free.
#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct ComparisonCounter {
    count: u64,
}

impl ComparisonCounter {
    pub fn new() -> Self {
        Self { count: 0 }
    }

    #[inline]
    pub fn bump(&mut self) {
        self.count += 1;
    }

    #[inline]
    pub fn charge(&mut self, n: u64) {
        self.count += n;
    }

    #[inline]
    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Per-instance comparison breakdown reported by both sorters.
///
/// `lookup + merge + verify + fallback_sort` equals the total charged to the
/// instance's `ComparisonCounter`.
#[derive(Debug, Default, Clone, Copy, PartialEq)]
pub struct SortStats {
    /// Comparisons spent locating slabs/intervals (frequency trees plus any
    /// binary-search fallbacks).
    pub lookup: u64,
    /// Comparisons spent merging per-interval runs (linear sorter) or sorting
    /// the per-interval lists (mixture sorter).
    pub merge: u64,
    /// Comparisons spent on the final sortedness scan.
    pub verify: u64,
    /// Comparisons spent by the correctness fallback sort, zero when the
    /// verification scan passes.
    pub fallback_sort: u64,
    /// Number of frequency-tree lookups that fell back to binary search
    /// (depth cutoff exceeded or unstored region hit).
    pub lookup_fallbacks: u64,
    /// True when the verification scan failed and a standard sort was used.
    pub correctness_fallback: bool,
    /// Largest per-interval occupancy seen: run count |Z_r| for the linear
    /// sorter, element count |N_r| for the mixture sorter.
    pub max_occupancy: u64,
    /// Sum of occupancies over non-empty intervals.
    pub occupancy_sum: u64,
    /// Number of non-empty intervals.
    pub occupied_intervals: u64,
    /// Sum over intervals of c_r * log2(max(c_r, 2)) where c_r is the
    /// interval occupancy; the per-instance local-sort charge.
    pub occupancy_log_term: f64,
}

impl SortStats {
    pub fn total(&self) -> u64 {
        self.lookup + self.merge + self.verify + self.fallback_sort
    }

    /// Mean occupancy over non-empty intervals; 0 when nothing was touched.
    pub fn mean_occupancy(&self) -> f64 {
        if self.occupied_intervals == 0 {
            0.0
        } else {
            self.occupancy_sum as f64 / self.occupied_intervals as f64
        }
    }

    pub(crate) fn record_occupancy(&mut self, count: u64) {
        if count == 0 {
            return;
        }
        self.max_occupancy = self.max_occupancy.max(count);
        self.occupancy_sum += count;
        self.occupied_intervals += 1;
        self.occupancy_log_term += count as f64 * (count.max(2) as f64).log2();
    }
}
