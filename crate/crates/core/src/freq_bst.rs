//! Near-optimal binary search tree over an ordered key universe, built from
//! observed access frequencies.
//!
//! The build uses weight-balancing bisection: the root is the key at which
//! the prefix weight first reaches half of the total, found by scanning from
//! both ends of the range at once. This guarantees depth(key) <=
//! log2(W/w) + 2 and expected depth <= H(weights) + 2 bits. A lookup that
//! descends past the depth cutoff, or into a gap between stored keys, reports
//! `Fallback`; the caller then resolves the query with a plain binary search
//! over the full boundary list.

use crate::counter::ComparisonCounter;

/// One stored key: an ordered id covering the half-open range [lo, hi).
/// The extreme keys may carry infinite edges.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedKey {
    pub id: usize,
    pub lo: f64,
    pub hi: f64,
    pub weight: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LookupResult {
    Hit { id: usize, depth: usize },
    Fallback,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    key: u32,
    left: u32,
    right: u32,
}

const NONE: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct FreqBST {
    keys: Vec<WeightedKey>,
    nodes: Vec<Node>,
    root: u32,
    depth_cutoff: usize,
}

/// Depth cutoff from the tuning parameter: floor((epsilon/3) * log2(universe)).
pub fn depth_cutoff(epsilon: f64, universe: usize) -> usize {
    if universe <= 1 {
        return 0;
    }
    ((epsilon / 3.0) * (universe as f64).log2()).floor() as usize
}

pub fn build_freq_bst(keys: Vec<WeightedKey>, depth_cutoff: usize) -> FreqBST {
    debug_assert!(keys.windows(2).all(|w| w[0].lo <= w[1].lo));
    debug_assert!(keys.iter().all(|k| k.weight >= 1));
    let mut tree = FreqBST {
        keys,
        nodes: Vec::new(),
        root: NONE,
        depth_cutoff,
    };
    if tree.keys.is_empty() {
        return tree;
    }
    let mut prefix = Vec::with_capacity(tree.keys.len() + 1);
    prefix.push(0u64);
    for k in &tree.keys {
        prefix.push(prefix.last().unwrap() + k.weight);
    }
    tree.nodes.reserve(tree.keys.len());
    tree.root = build_range(&mut tree.nodes, &prefix, 0, tree.keys.len() - 1);
    tree
}

/// Smallest j in [lo, hi] whose prefix weight reaches half the range total,
/// found by a two-sided scan so the cost is O(min(left size, right size)).
fn choose_root(prefix: &[u64], lo: usize, hi: usize) -> usize {
    let total = prefix[hi + 1] - prefix[lo];
    let reaches_half = |j: usize| 2 * (prefix[j + 1] - prefix[lo]) >= total;
    let mut front = lo;
    let mut back = hi;
    loop {
        if reaches_half(front) {
            return front;
        }
        if back == lo || !reaches_half(back - 1) {
            return back;
        }
        front += 1;
        back -= 1;
    }
}

fn build_range(nodes: &mut Vec<Node>, prefix: &[u64], lo: usize, hi: usize) -> u32 {
    let j = choose_root(prefix, lo, hi);
    let idx = nodes.len() as u32;
    nodes.push(Node {
        key: j as u32,
        left: NONE,
        right: NONE,
    });
    let left = if j > lo {
        build_range(nodes, prefix, lo, j - 1)
    } else {
        NONE
    };
    let right = if j < hi {
        build_range(nodes, prefix, j + 1, hi)
    } else {
        NONE
    };
    nodes[idx as usize].left = left;
    nodes[idx as usize].right = right;
    idx
}

impl FreqBST {
    /// Descends comparing x against node key ranges; every comparison against
    /// a finite edge is charged. Hits are only reported at depth <= cutoff.
    pub fn lookup(&self, x: f64, counter: &mut ComparisonCounter) -> LookupResult {
        let mut node = self.root;
        let mut depth = 0usize;
        while node != NONE {
            if depth > self.depth_cutoff {
                return LookupResult::Fallback;
            }
            let n = self.nodes[node as usize];
            let key = &self.keys[n.key as usize];
            if key.lo.is_finite() {
                counter.bump();
                if x < key.lo {
                    node = n.left;
                    depth += 1;
                    continue;
                }
            }
            if key.hi.is_finite() {
                counter.bump();
                if x >= key.hi {
                    node = n.right;
                    depth += 1;
                    continue;
                }
            }
            return LookupResult::Hit { id: key.id, depth };
        }
        LookupResult::Fallback
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key_count(&self) -> usize {
        self.keys.len()
    }

    pub fn keys(&self) -> &[WeightedKey] {
        &self.keys
    }

    pub fn cutoff(&self) -> usize {
        self.depth_cutoff
    }

    /// (key position -> depth), in key order.
    pub fn depths(&self) -> Vec<usize> {
        let mut out = vec![0usize; self.keys.len()];
        if self.root != NONE {
            let mut stack = vec![(self.root, 0usize)];
            while let Some((idx, d)) = stack.pop() {
                let n = self.nodes[idx as usize];
                out[n.key as usize] = d;
                if n.left != NONE {
                    stack.push((n.left, d + 1));
                }
                if n.right != NONE {
                    stack.push((n.right, d + 1));
                }
            }
        }
        out
    }

    /// Mean depth weighted by the recorded frequencies.
    pub fn expected_depth(&self) -> f64 {
        if self.keys.is_empty() {
            return 0.0;
        }
        let total: u64 = self.keys.iter().map(|k| k.weight).sum();
        let depths = self.depths();
        self.keys
            .iter()
            .zip(&depths)
            .map(|(k, &d)| k.weight as f64 * d as f64)
            .sum::<f64>()
            / total as f64
    }
}
