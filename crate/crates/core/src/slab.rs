//! Per-class arrangement index: the class lines plus one horizontal line per
//! V-list boundary, swept left to right into vertical slabs.
//!
//! Every arrangement vertex x-coordinate closes a slab. Within a slab, the
//! bottom-to-top order of the class lines is constant, and every line knows
//! the V-list interval containing it there. The sweep starts from the
//! slope-sorted order (which is bottom-to-top at x = -inf, left of every
//! crossing), swaps adjacent lines at line/line vertices and relabels a line
//! at line/horizontal vertices. One persistent-tree version is recorded per
//! slab via path copying, so a version costs O(log #lines) extra space
//! instead of a full copy.
//!
//! Coincident vertices sharing one x are processed deterministically:
//! relabels first (by line, then boundary rank in the slope's travel
//! direction), then swaps ordered bottom-to-top as the pairs appear just left
//! of the vertex. Three or more lines through one point thereby reverse as a
//! block.

use serde::{Deserialize, Serialize};

use crate::counter::ComparisonCounter;
use crate::error::{CoreError, Result};
use crate::vlist::VList;

/// The line y = slope * x + intercept expressing input position `index` as a
/// function of the class representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassLine {
    pub index: usize,
    pub slope: f64,
    pub intercept: f64,
}

impl ClassLine {
    #[inline]
    pub fn y_at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// One line of a slab's ordered list: the input position and the V-list
/// interval the line runs through inside the slab.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlabEntry {
    pub index: usize,
    pub interval: usize,
}

const NONE: u32 = u32::MAX;

/// Path-copied search tree over a fixed set of positions. The shape is the
/// complete mid-split tree of the position range and never changes; an update
/// copies one root-to-node path and yields a new root.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct PersistentOrder {
    nodes: Vec<PackedNode>,
    roots: Vec<u32>,
    len: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct PackedNode {
    line_pos: u32,
    interval: u32,
    left: u32,
    right: u32,
}

impl PersistentOrder {
    fn build_initial(contents: &[(u32, u32)]) -> Self {
        let len = contents.len();
        let mut nodes = Vec::with_capacity(len);
        let root = Self::build_range(&mut nodes, contents, 0, len as i64 - 1);
        Self {
            nodes,
            roots: vec![root],
            len,
        }
    }

    fn build_range(nodes: &mut Vec<PackedNode>, contents: &[(u32, u32)], lo: i64, hi: i64) -> u32 {
        if lo > hi {
            return NONE;
        }
        let mid = lo + (hi - lo) / 2;
        let left = Self::build_range(nodes, contents, lo, mid - 1);
        let right = Self::build_range(nodes, contents, mid + 1, hi);
        let (line_pos, interval) = contents[mid as usize];
        nodes.push(PackedNode {
            line_pos,
            interval,
            left,
            right,
        });
        nodes.len() as u32 - 1
    }

    /// Path-copying update of the entry at `pos` under the working root.
    fn update(&mut self, root: u32, pos: usize, content: (u32, u32)) -> u32 {
        self.update_range(root, 0, self.len as i64 - 1, pos as i64, content)
    }

    fn update_range(&mut self, node: u32, lo: i64, hi: i64, pos: i64, content: (u32, u32)) -> u32 {
        let mid = lo + (hi - lo) / 2;
        let old = self.nodes[node as usize];
        let new = if pos == mid {
            PackedNode {
                line_pos: content.0,
                interval: content.1,
                ..old
            }
        } else if pos < mid {
            let left = self.update_range(old.left, lo, mid - 1, pos, content);
            PackedNode { left, ..old }
        } else {
            let right = self.update_range(old.right, mid + 1, hi, pos, content);
            PackedNode { right, ..old }
        };
        self.nodes.push(new);
        self.nodes.len() as u32 - 1
    }

    fn seal_version(&mut self, root: u32) {
        self.roots.push(root);
    }

    fn inorder(&self, version: usize, out: &mut Vec<(u32, u32)>) {
        out.clear();
        let root = self.roots[version];
        if root == NONE {
            return;
        }
        let mut stack: Vec<u32> = Vec::new();
        let mut node = root;
        loop {
            while node != NONE {
                stack.push(node);
                node = self.nodes[node as usize].left;
            }
            let Some(top) = stack.pop() else { break };
            let n = self.nodes[top as usize];
            out.push((n.line_pos, n.interval));
            node = n.right;
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
enum VersionStore {
    Persistent(PersistentOrder),
    Flat(Vec<Vec<SlabEntry>>),
}

/// Swept arrangement of one class: slab boundaries plus one ordered line list
/// per slab.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "SlabIndexFlat", into = "SlabIndexFlat")]
pub struct SlabIndex {
    lines: Vec<ClassLine>,
    boundaries: Vec<f64>,
    store: VersionStore,
}

/// On-disk form: versions are materialized flat; persistence is an in-memory
/// construction concern.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlabIndexFlat {
    pub lines: Vec<ClassLine>,
    pub boundaries: Vec<f64>,
    pub slabs: Vec<Vec<SlabEntry>>,
}

impl From<SlabIndex> for SlabIndexFlat {
    fn from(index: SlabIndex) -> Self {
        let slabs = (0..index.slab_count())
            .map(|s| index.slab_entries(s))
            .collect();
        Self {
            lines: index.lines,
            boundaries: index.boundaries,
            slabs,
        }
    }
}

impl From<SlabIndexFlat> for SlabIndex {
    fn from(flat: SlabIndexFlat) -> Self {
        Self {
            lines: flat.lines,
            boundaries: flat.boundaries,
            store: VersionStore::Flat(flat.slabs),
        }
    }
}

enum EventKind {
    /// Line crosses the horizontal y = v_r; the new predecessor interval is r
    /// for rising lines and r - 1 for falling ones.
    Relabel { line_pos: u32, rank: u32 },
    /// Two lines cross and exchange their adjacent positions.
    Swap { a: u32, b: u32 },
}

struct Event {
    x: f64,
    kind: EventKind,
}

/// Builds the slab index for one class against the V-list horizontals.
pub fn build_slab_index(lines: &[ClassLine], vlist: &VList) -> Result<SlabIndex> {
    assert!(!lines.is_empty(), "a class has at least one line");
    for line in lines {
        if line.slope == 0.0 {
            return Err(CoreError::ZeroSlopeLine { index: line.index });
        }
    }
    let l = lines.len();
    let m = vlist.len();

    let mut events: Vec<Event> = Vec::with_capacity(l * m + l * (l.saturating_sub(1)) / 2);
    for (a, la) in lines.iter().enumerate() {
        for (b, lb) in lines.iter().enumerate().skip(a + 1) {
            if la.slope == lb.slope {
                continue;
            }
            let x = (lb.intercept - la.intercept) / (la.slope - lb.slope);
            if x.is_finite() {
                events.push(Event {
                    x,
                    kind: EventKind::Swap {
                        a: a as u32,
                        b: b as u32,
                    },
                });
            }
        }
        for rank in 1..=m {
            let x = (vlist.boundaries()[rank - 1] - la.intercept) / la.slope;
            if x.is_finite() {
                events.push(Event {
                    x,
                    kind: EventKind::Relabel {
                        line_pos: a as u32,
                        rank: rank as u32,
                    },
                });
            }
        }
    }
    events.sort_by(|p, q| p.x.total_cmp(&q.x));

    // leftmost slab: bottom-to-top is decreasing slope (ties: increasing
    // intercept); rising lines start below every horizontal, falling lines
    // above every horizontal
    let mut order: Vec<u32> = (0..l as u32).collect();
    order.sort_by(|&p, &q| {
        let (lp, lq) = (&lines[p as usize], &lines[q as usize]);
        lq.slope
            .total_cmp(&lp.slope)
            .then(lp.intercept.total_cmp(&lq.intercept))
            .then(lp.index.cmp(&lq.index))
    });
    let mut pos_of = vec![0u32; l];
    for (pos, &line_pos) in order.iter().enumerate() {
        pos_of[line_pos as usize] = pos as u32;
    }
    let mut labels: Vec<u32> = lines
        .iter()
        .map(|line| if line.slope > 0.0 { 0 } else { m as u32 })
        .collect();

    let contents: Vec<(u32, u32)> = order.iter().map(|&lp| (lp, labels[lp as usize])).collect();
    let mut store = PersistentOrder::build_initial(&contents);
    let mut boundaries: Vec<f64> = Vec::new();

    let mut i = 0;
    while i < events.len() {
        let x = events[i].x;
        let mut j = i;
        while j < events.len() && events[j].x == x {
            j += 1;
        }
        let mut root = *store.roots.last().unwrap();

        // relabels first, ordered by line then by rank along the crossing
        // direction so coincident horizontals resolve to the outermost label
        let mut relabels: Vec<(u32, u32)> = Vec::new();
        let mut swaps: Vec<(u32, u32)> = Vec::new();
        for ev in &events[i..j] {
            match ev.kind {
                EventKind::Relabel { line_pos, rank } => relabels.push((line_pos, rank)),
                EventKind::Swap { a, b } => swaps.push((a, b)),
            }
        }
        relabels.sort_by_key(|&(line_pos, rank)| {
            let signed = if lines[line_pos as usize].slope > 0.0 {
                rank as i64
            } else {
                -(rank as i64)
            };
            (lines[line_pos as usize].index, signed)
        });
        for (line_pos, rank) in relabels {
            let new_label = if lines[line_pos as usize].slope > 0.0 {
                rank
            } else {
                rank - 1
            };
            labels[line_pos as usize] = new_label;
            root = store.update(
                root,
                pos_of[line_pos as usize] as usize,
                (line_pos, new_label),
            );
        }

        // swaps ordered bottom-to-top by the positions just left of x; a
        // k-fold common point then reverses its block one adjacent swap at a
        // time
        swaps.sort_by_key(|&(a, b)| {
            let (pa, pb) = (pos_of[a as usize], pos_of[b as usize]);
            (pa.min(pb), pa.max(pb))
        });
        for (a, b) in swaps {
            let pa = pos_of[a as usize];
            let pb = pos_of[b as usize];
            debug_assert!(
                pa.abs_diff(pb) == 1,
                "swap of non-adjacent lines at x = {x}"
            );
            root = store.update(root, pa as usize, (b, labels[b as usize]));
            root = store.update(root, pb as usize, (a, labels[a as usize]));
            pos_of[a as usize] = pb;
            pos_of[b as usize] = pa;
        }

        store.seal_version(root);
        boundaries.push(x);
        i = j;
    }

    Ok(SlabIndex {
        lines: lines.to_vec(),
        boundaries,
        store: VersionStore::Persistent(store),
    })
}

impl SlabIndex {
    pub fn lines(&self) -> &[ClassLine] {
        &self.lines
    }

    /// Vertex x-coordinates separating the slabs, ascending.
    pub fn slab_boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn slab_count(&self) -> usize {
        self.boundaries.len() + 1
    }

    /// Slab whose half-open x-range [boundary, next) contains x; the leftmost
    /// slab is unbounded below. Binary search, probes charged.
    pub fn locate_slab(&self, x: f64, counter: &mut ComparisonCounter) -> usize {
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

    /// Entries of one slab in bottom-to-top (ascending y) order.
    pub fn slab_entries(&self, slab: usize) -> Vec<SlabEntry> {
        let mut out = Vec::new();
        self.collect_entries(slab, &mut out);
        out
    }

    /// Like `slab_entries` but reusing the caller's buffer; no comparisons on
    /// input values are charged.
    pub fn collect_entries(&self, slab: usize, out: &mut Vec<SlabEntry>) {
        match &self.store {
            VersionStore::Persistent(store) => {
                let mut raw = Vec::with_capacity(self.lines.len());
                store.inorder(slab, &mut raw);
                out.clear();
                out.extend(raw.iter().map(|&(line_pos, interval)| SlabEntry {
                    index: self.lines[line_pos as usize].index,
                    interval: interval as usize,
                }));
            }
            VersionStore::Flat(slabs) => {
                out.clear();
                out.extend_from_slice(&slabs[slab]);
            }
        }
    }

    /// Stored tree nodes; bounded by O((#lines + #vertices) log #lines) under
    /// path copying.
    pub fn node_count(&self) -> usize {
        match &self.store {
            VersionStore::Persistent(store) => store.nodes.len(),
            VersionStore::Flat(slabs) => slabs.iter().map(|s| s.len()).sum(),
        }
    }

    /// An x strictly inside the slab, for oracle evaluation.
    pub fn slab_probe_x(&self, slab: usize) -> f64 {
        if self.boundaries.is_empty() {
            return 0.0;
        }
        if slab == 0 {
            self.boundaries[0] - 1.0
        } else if slab == self.boundaries.len() {
            self.boundaries[slab - 1] + 1.0
        } else {
            (self.boundaries[slab - 1] + self.boundaries[slab]) / 2.0
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vlist::VList;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn line(index: usize, slope: f64, intercept: f64) -> ClassLine {
        ClassLine {
            index,
            slope,
            intercept,
        }
    }

    /// Midpoint oracle: sort lines by y at a probe x inside the slab and read
    /// interval labels off the V-list directly.
    fn oracle_entries(index: &SlabIndex, vlist: &VList, slab: usize) -> Vec<SlabEntry> {
        let x = index.slab_probe_x(slab);
        let mut order: Vec<&ClassLine> = index.lines().iter().collect();
        order.sort_by(|a, b| a.y_at(x).total_cmp(&b.y_at(x)));
        let mut scratch = ComparisonCounter::new();
        order
            .into_iter()
            .map(|l| SlabEntry {
                index: l.index,
                interval: vlist.predecessor_index(l.y_at(x), &mut scratch),
            })
            .collect()
    }

    fn assert_matches_oracle(index: &SlabIndex, vlist: &VList, context: &str) {
        for slab in 0..index.slab_count() {
            let got = index.slab_entries(slab);
            let want = oracle_entries(index, vlist, slab);
            assert_eq!(got, want, "{context}: slab {slab}");
        }
    }

    #[test]
    fn single_line_single_boundary() {
        let vlist = VList::from_boundaries(vec![0.0]);
        let index = build_slab_index(&[line(7, 1.0, 0.0)], &vlist).unwrap();
        assert_eq!(index.slab_count(), 2);
        assert_eq!(index.slab_boundaries(), &[0.0]);
        assert_eq!(
            index.slab_entries(0),
            vec![SlabEntry {
                index: 7,
                interval: 0
            }]
        );
        assert_eq!(
            index.slab_entries(1),
            vec![SlabEntry {
                index: 7,
                interval: 1
            }]
        );
    }

    #[test]
    fn two_crossing_lines_swap() {
        let vlist = VList::from_boundaries(vec![]);
        let lines = [line(0, 1.0, 0.0), line(1, -1.0, 2.0)];
        let index = build_slab_index(&lines, &vlist).unwrap();
        assert_eq!(index.slab_count(), 2);
        assert_eq!(index.slab_boundaries(), &[1.0]);
        let left: Vec<usize> = index.slab_entries(0).iter().map(|e| e.index).collect();
        let right: Vec<usize> = index.slab_entries(1).iter().map(|e| e.index).collect();
        assert_eq!(left, vec![0, 1]);
        assert_eq!(right, vec![1, 0]);
    }

    #[test]
    fn zero_slope_rejected() {
        let vlist = VList::from_boundaries(vec![0.0]);
        assert!(matches!(
            build_slab_index(&[line(3, 0.0, 1.0)], &vlist),
            Err(CoreError::ZeroSlopeLine { index: 3 })
        ));
    }

    #[test]
    fn locate_slab_examples() {
        let vlist = VList::from_boundaries(vec![0.0, 1.0]);
        let index = build_slab_index(&[line(0, 1.0, 0.0)], &vlist).unwrap();
        // vertices at x = 0 and x = 1
        assert_eq!(index.slab_boundaries(), &[0.0, 1.0]);
        let mut c = ComparisonCounter::new();
        assert_eq!(index.locate_slab(-5.0, &mut c), 0);
        assert_eq!(index.locate_slab(0.0, &mut c), 1); // vertex goes right
        assert_eq!(index.locate_slab(0.5, &mut c), 1);
        assert_eq!(index.locate_slab(7.0, &mut c), 2);
    }

    #[test]
    fn locate_slab_matches_scan_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let vlist = VList::from_boundaries((0..8).map(|i| i as f64).collect());
        let lines: Vec<ClassLine> = (0..4)
            .map(|i| {
                line(
                    i,
                    rng.random_range(0.2..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 },
                    rng.random_range(-4.0..4.0),
                )
            })
            .collect();
        let index = build_slab_index(&lines, &vlist).unwrap();
        for _ in 0..10_000 {
            let x = rng.random_range(-20.0..20.0);
            let mut c = ComparisonCounter::new();
            let got = index.locate_slab(x, &mut c);
            let want = index
                .slab_boundaries()
                .iter()
                .take_while(|&&b| b <= x)
                .count();
            assert_eq!(got, want);
        }
    }

    #[test]
    fn random_arrangements_match_midpoint_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for round in 0..120 {
            let m = rng.random_range(0..12usize);
            let mut bounds: Vec<f64> = (0..m).map(|_| rng.random_range(-6.0..6.0)).collect();
            bounds.sort_by(f64::total_cmp);
            let vlist = VList::from_boundaries(bounds);
            let l = rng.random_range(1..=6usize);
            let lines: Vec<ClassLine> = (0..l)
                .map(|i| {
                    let mut slope: f64 = rng.random_range(-3.0..3.0);
                    if slope.abs() < 0.05 {
                        slope = 0.5;
                    }
                    line(i, slope, rng.random_range(-5.0..5.0))
                })
                .collect();
            let index = build_slab_index(&lines, &vlist).unwrap();
            assert_matches_oracle(&index, &vlist, &format!("round {round}"));
        }
    }

    #[test]
    fn duplicate_boundaries_relabel_to_outermost() {
        let vlist = VList::from_boundaries(vec![1.0, 1.0]);
        let rising = build_slab_index(&[line(0, 1.0, 0.0)], &vlist).unwrap();
        assert_eq!(rising.slab_count(), 2);
        assert_eq!(rising.slab_entries(0)[0].interval, 0);
        assert_eq!(rising.slab_entries(1)[0].interval, 2);
        assert_matches_oracle(&rising, &vlist, "rising through duplicate");

        let falling = build_slab_index(&[line(0, -1.0, 2.0)], &vlist).unwrap();
        assert_eq!(falling.slab_entries(0)[0].interval, 2);
        assert_eq!(falling.slab_entries(1)[0].interval, 0);
        assert_matches_oracle(&falling, &vlist, "falling through duplicate");
    }

    #[test]
    fn triple_crossing_reverses_block() {
        // three lines through the origin
        let vlist = VList::from_boundaries(vec![5.0]);
        let lines = [line(0, 1.0, 0.0), line(1, -1.0, 0.0), line(2, 2.0, 0.0)];
        let index = build_slab_index(&lines, &vlist).unwrap();
        assert_matches_oracle(&index, &vlist, "triple crossing");
    }

    #[test]
    fn crossing_on_a_horizontal() {
        // the two lines cross at (1, 1), exactly on the boundary y = 1
        let vlist = VList::from_boundaries(vec![1.0]);
        let lines = [line(0, 1.0, 0.0), line(1, -1.0, 2.0)];
        let index = build_slab_index(&lines, &vlist).unwrap();
        assert_matches_oracle(&index, &vlist, "crossing on horizontal");
    }

    #[test]
    fn pencil_through_one_point_on_a_horizontal() {
        // five lines through (1, 2) with the boundary y = 2 passing through
        // the same point: ten swaps and five relabels share one event x
        let vlist = VList::from_boundaries(vec![0.0, 2.0]);
        let lines: Vec<ClassLine> = [1.0, -1.0, 2.0, -2.0, 3.0]
            .iter()
            .enumerate()
            .map(|(i, &a)| line(i, a, 2.0 - a))
            .collect();
        let index = build_slab_index(&lines, &vlist).unwrap();
        assert_matches_oracle(&index, &vlist, "pencil through a shared vertex");
        // the order flips wholesale across x = 1
        let mut c = ComparisonCounter::new();
        let before = index.locate_slab(1.0 - 1e-9, &mut c);
        let after = index.locate_slab(1.0 + 1e-9, &mut c);
        let mut reversed: Vec<usize> = index.slab_entries(before).iter().map(|e| e.index).collect();
        reversed.reverse();
        let flipped: Vec<usize> = index.slab_entries(after).iter().map(|e| e.index).collect();
        assert_eq!(flipped, reversed);
    }

    #[test]
    fn adjacent_slabs_differ_by_one_event_in_general_position() {
        let mut rng = ChaCha8Rng::seed_from_u64(5150);
        let vlist = VList::from_boundaries(vec![-1.3, 0.7, 2.9]);
        let lines: Vec<ClassLine> = (0..4)
            .map(|i| {
                line(
                    i,
                    rng.random_range(0.3..2.0) + i as f64 * 0.211,
                    rng.random_range(-2.0..2.0),
                )
            })
            .collect();
        let index = build_slab_index(&lines, &vlist).unwrap();
        for slab in 1..index.slab_count() {
            let prev = index.slab_entries(slab - 1);
            let cur = index.slab_entries(slab);
            let diffs: Vec<usize> = (0..prev.len()).filter(|&k| prev[k] != cur[k]).collect();
            match diffs.len() {
                1 => {
                    // relabel in place
                    assert_eq!(prev[diffs[0]].index, cur[diffs[0]].index);
                }
                2 => {
                    // adjacent transposition
                    assert_eq!(diffs[1], diffs[0] + 1);
                    assert_eq!(prev[diffs[0]].index, cur[diffs[1]].index);
                    assert_eq!(prev[diffs[1]].index, cur[diffs[0]].index);
                }
                other => panic!("slab {slab}: {other} entries changed"),
            }
        }
    }

    #[test]
    fn version_count_and_node_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let vlist = VList::from_boundaries((0..10).map(|i| i as f64 * 0.7).collect());
        let lines: Vec<ClassLine> = (0..6)
            .map(|i| {
                line(
                    i,
                    rng.random_range(0.1..2.5) * if i % 2 == 0 { 1.0 } else { -1.0 },
                    rng.random_range(-3.0..3.0),
                )
            })
            .collect();
        let index = build_slab_index(&lines, &vlist).unwrap();
        let l = lines.len();
        let vertices = index.slab_boundaries().len();
        let log_l = (l as f64).log2().ceil() as usize + 1;
        assert!(index.node_count() <= l + 2 * (vertices + l * l) * log_l);
        match &index.store {
            VersionStore::Persistent(store) => {
                assert_eq!(store.roots.len(), index.slab_count());
            }
            VersionStore::Flat(_) => panic!("expected persistent store after build"),
        }
    }

    #[test]
    fn flat_round_trip_preserves_entries() {
        let vlist = VList::from_boundaries(vec![0.0, 2.0]);
        let lines = [line(0, 1.0, 0.0), line(1, -0.5, 3.0)];
        let index = build_slab_index(&lines, &vlist).unwrap();
        let json = serde_json::to_string(&index).unwrap();
        let back: SlabIndex = serde_json::from_str(&json).unwrap();
        assert_eq!(back.slab_count(), index.slab_count());
        for slab in 0..index.slab_count() {
            assert_eq!(back.slab_entries(slab), index.slab_entries(slab));
        }
    }
}
