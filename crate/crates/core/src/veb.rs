//! van Emde Boas tree over a bounded integer universe.
//!
//! Standard recursive layout: the universe is rounded up to a power of two,
//! min/max are cached at every level, and the minimum is not stored in the
//! clusters, which makes insert into an empty tree and min queries O(1).
//! Every operation touches at most one of summary/cluster recursively, so the
//! cost is O(log log U). Total allocation is O(U).

use crate::error::{CoreError, Result};

#[derive(Debug, Clone)]
pub struct VebTree {
    /// Universe size as requested at construction; keys must stay below it.
    universe: usize,
    /// Internal power-of-two universe, >= 2.
    internal: usize,
    lower_bits: u32,
    min: Option<usize>,
    max: Option<usize>,
    summary: Option<Box<VebTree>>,
    clusters: Vec<VebTree>,
}

impl VebTree {
    /// Creates an empty tree for keys in [0, universe_size).
    pub fn new(universe_size: usize) -> Self {
        assert!(universe_size >= 1, "universe must be non-empty");
        let internal = universe_size.next_power_of_two().max(2);
        let mut tree = Self::build(internal);
        tree.universe = universe_size;
        debug_assert!({
            let k = internal.trailing_zeros() as f64;
            tree.structural_depth() <= k.log2().ceil() as usize + 1
        });
        tree
    }

    fn build(internal: usize) -> Self {
        debug_assert!(internal.is_power_of_two() && internal >= 2);
        let bits = internal.trailing_zeros();
        if internal == 2 {
            return Self {
                universe: internal,
                internal,
                lower_bits: 1,
                min: None,
                max: None,
                summary: None,
                clusters: Vec::new(),
            };
        }
        let lower_bits = bits / 2;
        let upper = 1usize << (bits - lower_bits);
        let lower = 1usize << lower_bits;
        Self {
            universe: internal,
            internal,
            lower_bits,
            min: None,
            max: None,
            summary: Some(Box::new(Self::build(upper))),
            clusters: (0..upper).map(|_| Self::build(lower)).collect(),
        }
    }

    #[inline]
    fn high(&self, x: usize) -> usize {
        x >> self.lower_bits
    }

    #[inline]
    fn low(&self, x: usize) -> usize {
        x & ((1 << self.lower_bits) - 1)
    }

    #[inline]
    fn index(&self, high: usize, low: usize) -> usize {
        (high << self.lower_bits) | low
    }

    pub fn universe(&self) -> usize {
        self.universe
    }

    pub fn is_empty(&self) -> bool {
        self.min.is_none()
    }

    pub fn min(&self) -> Option<usize> {
        self.min
    }

    pub fn max(&self) -> Option<usize> {
        self.max
    }

    fn check(&self, key: usize) -> Result<()> {
        if key >= self.universe {
            Err(CoreError::UniverseOverflow {
                key,
                universe: self.universe,
            })
        } else {
            Ok(())
        }
    }

    /// Idempotent insert.
    pub fn insert(&mut self, key: usize) -> Result<()> {
        self.check(key)?;
        self.insert_unchecked(key);
        Ok(())
    }

    fn insert_unchecked(&mut self, key: usize) {
        match self.min {
            None => {
                self.min = Some(key);
                self.max = Some(key);
            }
            Some(current_min) => {
                if key == current_min {
                    return;
                }
                let mut key = key;
                if key < current_min {
                    // the old min moves down into the clusters
                    self.min = Some(key);
                    key = current_min;
                }
                if self.internal > 2 {
                    let h = self.high(key);
                    let l = self.low(key);
                    if self.clusters[h].min.is_none() {
                        self.summary.as_mut().unwrap().insert_unchecked(h);
                    }
                    self.clusters[h].insert_unchecked(l);
                }
                if key > self.max.unwrap() {
                    self.max = Some(key);
                }
            }
        }
    }

    pub fn contains(&self, key: usize) -> Result<bool> {
        self.check(key)?;
        Ok(self.contains_unchecked(key))
    }

    fn contains_unchecked(&self, key: usize) -> bool {
        if self.min == Some(key) || self.max == Some(key) {
            return true;
        }
        if self.internal == 2 {
            return false;
        }
        self.clusters[self.high(key)].contains_unchecked(self.low(key))
    }

    /// Deleting an absent key is a no-op.
    pub fn delete(&mut self, key: usize) -> Result<()> {
        self.check(key)?;
        self.delete_unchecked(key);
        Ok(())
    }

    fn delete_unchecked(&mut self, key: usize) {
        let Some(current_min) = self.min else {
            return;
        };
        if self.min == self.max {
            if current_min == key {
                self.min = None;
                self.max = None;
            }
            return;
        }
        if self.internal == 2 {
            // both 0 and 1 are present here
            if key == 0 {
                self.min = Some(1);
            } else {
                self.max = Some(0);
            }
            return;
        }
        let mut key = key;
        if key == current_min {
            // promote the smallest clustered key to be the new min
            let first = self.summary.as_ref().unwrap().min.unwrap();
            key = self.index(first, self.clusters[first].min.unwrap());
            self.min = Some(key);
        }
        let h = self.high(key);
        let l = self.low(key);
        self.clusters[h].delete_unchecked(l);
        if self.clusters[h].min.is_none() {
            self.summary.as_mut().unwrap().delete_unchecked(h);
            if Some(key) == self.max {
                match self.summary.as_ref().unwrap().max {
                    None => self.max = self.min,
                    Some(sm) => {
                        self.max = Some(self.index(sm, self.clusters[sm].max.unwrap()));
                    }
                }
            }
        } else if Some(key) == self.max {
            self.max = Some(self.index(h, self.clusters[h].max.unwrap()));
        }
    }

    /// Smallest member strictly greater than `key`.
    pub fn successor(&self, key: usize) -> Result<Option<usize>> {
        self.check(key)?;
        Ok(self.successor_unchecked(key))
    }

    fn successor_unchecked(&self, key: usize) -> Option<usize> {
        if self.internal == 2 {
            return if key == 0 && self.max == Some(1) {
                Some(1)
            } else {
                None
            };
        }
        if let Some(mn) = self.min {
            if key < mn {
                return Some(mn);
            }
        }
        let h = self.high(key);
        let l = self.low(key);
        if let Some(max_low) = self.clusters[h].max {
            if l < max_low {
                let off = self.clusters[h].successor_unchecked(l).unwrap();
                return Some(self.index(h, off));
            }
        }
        let next_cluster = self.summary.as_ref().unwrap().successor_unchecked(h)?;
        Some(self.index(next_cluster, self.clusters[next_cluster].min.unwrap()))
    }

    /// Empties the tree by repeated min extraction, so the cost is
    /// proportional to the current membership rather than the universe.
    pub fn clear(&mut self) {
        while let Some(m) = self.min {
            self.delete_unchecked(m);
        }
    }

    /// Depth of the recursive structure; operations recurse at most this far.
    pub fn structural_depth(&self) -> usize {
        match &self.summary {
            None => 0,
            Some(s) => {
                let cluster_depth = self
                    .clusters
                    .first()
                    .map(|c| c.structural_depth())
                    .unwrap_or(0);
                1 + s.structural_depth().max(cluster_depth)
            }
        }
    }

    /// Total tree nodes allocated, summary included.
    pub fn node_count(&self) -> usize {
        1 + self.summary.as_ref().map(|s| s.node_count()).unwrap_or(0)
            + self.clusters.iter().map(|c| c.node_count()).sum::<usize>()
    }
}
