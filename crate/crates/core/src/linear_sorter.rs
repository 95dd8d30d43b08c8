//! Training and operation for the hidden-linear-classes model.
//!
//! Training learns the degenerate positions, the class partition, and the
//! per-position lines, builds the V-list from fresh instances, sweeps one
//! slab index per class, and tunes one frequency tree per class over its
//! slabs. The operation phase queries each class tree once with the
//! representative's value, reads the slab's ordered line list to get the
//! class's sorted positions with their V-list intervals, merges the
//! per-interval runs with a tournament keyed by actual values, and splices
//! marked degenerate positions in front of their interval. A final
//! sortedness scan backs the result with a standard-sort fallback, so the
//! returned permutation always sorts the instance.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::baseline;
use crate::counter::{ComparisonCounter, SortStats};
use crate::error::{CoreError, Result};
use crate::freq_bst::{build_freq_bst, depth_cutoff, FreqBST, LookupResult, WeightedKey};
use crate::instance::InputInstance;
use crate::learner::{
    class_learning_batch, detect_degenerates, fit_lines, learn_classes, ClassPartition,
    DEFAULT_COLLINEAR_TOL,
};
use crate::slab::{build_slab_index, ClassLine, SlabEntry, SlabIndex};
use crate::stream::InstanceSource;
use crate::vlist::{build_vlist, VList};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinearTrainingBudget {
    /// Instances for degenerate detection, classification, and line fitting.
    pub learn: usize,
    /// Instances whose pooled values become the V-list; also the rank stride.
    pub vlist_instances: usize,
    /// Instances for recording slab frequencies.
    pub frequency: usize,
}

impl LinearTrainingBudget {
    pub fn total(&self) -> usize {
        self.learn + self.vlist_instances + self.frequency
    }
}

/// Instance counts consumed by `train_linear`: ceil(3 ln^2 n) + ceil(ln n) +
/// ceil(n^epsilon), with small-n floors of 3/1/1.
pub fn linear_training_budget(n: usize, epsilon: f64) -> LinearTrainingBudget {
    let ln = (n as f64).ln();
    LinearTrainingBudget {
        learn: class_learning_batch(n),
        vlist_instances: (ln.ceil() as usize).max(1),
        frequency: ((n as f64).powf(epsilon).ceil() as usize).max(1),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "LinearModelFlat", into = "LinearModelFlat")]
pub struct LinearSorterModel {
    n: usize,
    epsilon: f64,
    partition: ClassPartition,
    vlist: VList,
    /// Interval id -> degenerate positions pinned to that interval's left
    /// boundary, emitted ahead of the interval's merged run.
    marks: BTreeMap<usize, Vec<usize>>,
    class_slabs: Vec<SlabIndex>,
    class_trees: Vec<FreqBST>,
}

/// On-disk form; frequency trees are stored as (slab, weight) pairs and
/// rebuilt deterministically on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModelFlat {
    pub n: usize,
    pub epsilon: f64,
    pub partition: ClassPartition,
    pub vlist: VList,
    #[serde(default, with = "crate::serde_util::usize_key_map")]
    pub marks: BTreeMap<usize, Vec<usize>>,
    pub class_slabs: Vec<SlabIndex>,
    pub class_tree_weights: Vec<Vec<(usize, u64)>>,
    pub depth_cutoff: usize,
}

impl From<LinearSorterModel> for LinearModelFlat {
    fn from(model: LinearSorterModel) -> Self {
        let cutoff = model
            .class_trees
            .first()
            .map(|t| t.cutoff())
            .unwrap_or_else(|| depth_cutoff(model.epsilon, model.n));
        Self {
            n: model.n,
            epsilon: model.epsilon,
            partition: model.partition,
            vlist: model.vlist,
            marks: model.marks,
            class_tree_weights: model
                .class_trees
                .iter()
                .map(|t| t.keys().iter().map(|k| (k.id, k.weight)).collect())
                .collect(),
            class_slabs: model.class_slabs,
            depth_cutoff: cutoff,
        }
    }
}

impl From<LinearModelFlat> for LinearSorterModel {
    fn from(flat: LinearModelFlat) -> Self {
        let class_trees = flat
            .class_tree_weights
            .iter()
            .zip(&flat.class_slabs)
            .map(|(weights, slabs)| {
                let keys = weights
                    .iter()
                    .map(|&(slab, weight)| slab_key(slabs, slab, weight))
                    .collect();
                build_freq_bst(keys, flat.depth_cutoff)
            })
            .collect();
        Self {
            n: flat.n,
            epsilon: flat.epsilon,
            partition: flat.partition,
            vlist: flat.vlist,
            marks: flat.marks,
            class_slabs: flat.class_slabs,
            class_trees,
        }
    }
}

fn slab_key(slabs: &SlabIndex, slab: usize, weight: u64) -> WeightedKey {
    let bounds = slabs.slab_boundaries();
    WeightedKey {
        id: slab,
        lo: if slab == 0 {
            f64::NEG_INFINITY
        } else {
            bounds[slab - 1]
        },
        hi: if slab == bounds.len() {
            f64::INFINITY
        } else {
            bounds[slab]
        },
        weight,
    }
}

pub(crate) fn take_batch(
    source: &mut dyn InstanceSource,
    count: usize,
    n: usize,
    consumed: &mut usize,
    needed: usize,
) -> Result<Vec<InputInstance>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        match source.next_instance()? {
            Some(inst) => {
                if inst.len() != n {
                    return Err(CoreError::LengthMismatch {
                        index: *consumed,
                        expected: n,
                        got: inst.len(),
                    });
                }
                *consumed += 1;
                out.push(inst);
            }
            None => {
                return Err(CoreError::InsufficientTraining {
                    needed,
                    got: *consumed,
                })
            }
        }
    }
    Ok(out)
}

pub fn train_linear(
    source: &mut dyn InstanceSource,
    n: usize,
    epsilon: f64,
) -> Result<LinearSorterModel> {
    if n == 0 {
        return Err(CoreError::spec("n", "need n >= 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(CoreError::spec(
            "epsilon",
            format!("need epsilon in (0,1), got {epsilon}"),
        ));
    }
    let budget = linear_training_budget(n, epsilon);
    let needed = budget.total();
    let mut consumed = 0usize;

    // phase 1: degenerates, classes, lines
    let learn_batch = take_batch(source, budget.learn, n, &mut consumed, needed)?;
    let degenerates = detect_degenerates(&learn_batch)?;
    let mut partition = learn_classes(&learn_batch, &degenerates, DEFAULT_COLLINEAR_TOL)?;
    fit_lines(&mut partition, &learn_batch)?;
    drop(learn_batch);

    // phase 2: V-list from pooled fresh instances, rank stride = ceil(ln n)
    let vlist_batch = take_batch(source, budget.vlist_instances, n, &mut consumed, needed)?;
    let mut samples: Vec<f64> = vlist_batch
        .iter()
        .flat_map(|inst| inst.values().iter().copied())
        .collect();
    samples.sort_by(f64::total_cmp);
    let vlist = build_vlist(&samples, budget.vlist_instances)?;
    debug_assert_eq!(vlist.len(), n);
    drop(samples);

    let mut scratch = ComparisonCounter::new();
    let mut marks: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (&i, &c) in &partition.degenerates {
        let r = vlist.predecessor_index(c, &mut scratch);
        marks.entry(r).or_default().push(i);
    }

    // phase 3: per-class slab indexes, then frequency-tuned trees over slabs
    let class_slabs: Vec<SlabIndex> = partition
        .classes
        .iter()
        .map(|class| {
            let lines: Vec<ClassLine> = class
                .indices
                .iter()
                .zip(&class.lines)
                .map(|(&index, line)| ClassLine {
                    index,
                    slope: line.slope,
                    intercept: line.intercept,
                })
                .collect();
            build_slab_index(&lines, &vlist)
        })
        .collect::<Result<_>>()?;

    let mut slab_counts: Vec<Vec<u64>> = class_slabs
        .iter()
        .map(|s| vec![0u64; s.slab_count()])
        .collect();
    for _ in 0..budget.frequency {
        let inst = take_batch(source, 1, n, &mut consumed, needed)?
            .pop()
            .unwrap();
        for (k, class) in partition.classes.iter().enumerate() {
            let x_s = inst.get(class.representative());
            let slab = class_slabs[k].locate_slab(x_s, &mut scratch);
            slab_counts[k][slab] += 1;
        }
    }
    let cutoff = depth_cutoff(epsilon, n);
    let class_trees: Vec<FreqBST> = slab_counts
        .iter()
        .zip(&class_slabs)
        .map(|(counts, slabs)| {
            let keys: Vec<WeightedKey> = counts
                .iter()
                .enumerate()
                .filter(|&(_, &w)| w > 0)
                .map(|(slab, &w)| slab_key(slabs, slab, w))
                .collect();
            build_freq_bst(keys, cutoff)
        })
        .collect();

    Ok(LinearSorterModel {
        n,
        epsilon,
        partition,
        vlist,
        marks,
        class_slabs,
        class_trees,
    })
}

impl LinearSorterModel {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn partition(&self) -> &ClassPartition {
        &self.partition
    }

    pub fn vlist(&self) -> &VList {
        &self.vlist
    }

    pub fn marks(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.marks
    }

    pub fn class_slabs(&self) -> &[SlabIndex] {
        &self.class_slabs
    }

    pub fn class_trees(&self) -> &[FreqBST] {
        &self.class_trees
    }
}

/// Sorts one instance with the trained model. Returns the sorted position
/// permutation and the per-instance comparison breakdown.
pub fn sort_linear(
    model: &LinearSorterModel,
    instance: &InputInstance,
    counter: &mut ComparisonCounter,
) -> Result<(Vec<usize>, SortStats)> {
    if instance.len() != model.n {
        return Err(CoreError::LengthMismatch {
            index: 0,
            expected: model.n,
            got: instance.len(),
        });
    }
    let mut stats = SortStats::default();
    let values = instance.values();

    // F1 + F2: per class, slab lookup and ordered entry list; F3: scatter the
    // class runs into per-interval lists, preserving within-class order
    let mut runs_by_interval: Vec<Vec<(usize, Vec<usize>)>> =
        vec![Vec::new(); model.vlist.interval_count()];
    let mut entries_buf: Vec<SlabEntry> = Vec::new();
    let before_lookup = counter.count();
    for (k, class) in model.partition.classes.iter().enumerate() {
        let x_s = instance.get(class.representative());
        let slab = match model.class_trees[k].lookup(x_s, counter) {
            LookupResult::Hit { id, .. } => id,
            LookupResult::Fallback => {
                stats.lookup_fallbacks += 1;
                model.class_slabs[k].locate_slab(x_s, counter)
            }
        };
        model.class_slabs[k].collect_entries(slab, &mut entries_buf);
        let mut t = 0;
        while t < entries_buf.len() {
            let r = entries_buf[t].interval;
            let start = t;
            while t < entries_buf.len() && entries_buf[t].interval == r {
                t += 1;
            }
            let run: Vec<usize> = entries_buf[start..t].iter().map(|e| e.index).collect();
            runs_by_interval[r].push((k, run));
        }
    }
    stats.lookup = counter.count() - before_lookup;

    // merge each interval's runs; marked degenerates lead their interval
    let before_merge = counter.count();
    let mut out: Vec<usize> = Vec::with_capacity(model.n);
    for (r, runs) in runs_by_interval.iter().enumerate() {
        if let Some(marked) = model.marks.get(&r) {
            out.extend_from_slice(marked);
        }
        match runs.len() {
            0 => {}
            1 => {
                stats.record_occupancy(1);
                out.extend_from_slice(&runs[0].1);
            }
            z => {
                stats.record_occupancy(z as u64);
                merge_runs(values, runs, &mut out, counter);
            }
        }
    }
    stats.merge = counter.count() - before_merge;

    // Las Vegas guard: verify sortedness, fall back to a standard sort
    let before_verify = counter.count();
    let mut sorted = out.len() == model.n;
    if sorted {
        for t in 1..out.len() {
            counter.bump();
            if values[out[t - 1]] > values[out[t]] {
                sorted = false;
                break;
            }
        }
    }
    stats.verify = counter.count() - before_verify;
    if !sorted {
        let (perm, comparisons) = baseline::merge_sort_indices(values);
        counter.charge(comparisons);
        stats.fallback_sort = comparisons;
        stats.correctness_fallback = true;
        return Ok((perm, stats));
    }
    Ok((out, stats))
}

const NO_RUN: u32 = u32::MAX;

/// Tournament merge of the interval's runs, keyed by actual values with ties
/// to the lower class id. Each emission replays one leaf-to-root path, so it
/// costs at most ceil(log2 z) value comparisons; matches against exhausted
/// runs are free.
fn merge_runs(
    values: &[f64],
    runs: &[(usize, Vec<usize>)],
    out: &mut Vec<usize>,
    counter: &mut ComparisonCounter,
) {
    let z = runs.len();
    let width = z.next_power_of_two();
    let mut cursors = vec![0usize; z];
    let mut tree = vec![NO_RUN; 2 * width];

    let head = |slot: u32, cursors: &[usize]| -> f64 {
        let run = &runs[slot as usize].1;
        values[run[cursors[slot as usize]]]
    };
    macro_rules! play {
        ($a:expr, $b:expr) => {{
            let (a, b) = ($a, $b);
            if a == NO_RUN {
                b
            } else if b == NO_RUN {
                a
            } else {
                counter.bump();
                let (va, vb) = (head(a, &cursors), head(b, &cursors));
                if va < vb {
                    a
                } else if vb < va {
                    b
                } else {
                    a.min(b)
                }
            }
        }};
    }

    for slot in 0..z {
        tree[width + slot] = slot as u32;
    }
    for node in (1..width).rev() {
        tree[node] = play!(tree[2 * node], tree[2 * node + 1]);
    }

    let total: usize = runs.iter().map(|r| r.1.len()).sum();
    for emitted in 0..total {
        let winner = tree[1];
        let run = &runs[winner as usize].1;
        out.push(run[cursors[winner as usize]]);
        cursors[winner as usize] += 1;
        if emitted + 1 == total {
            break;
        }
        if cursors[winner as usize] == run.len() {
            tree[width + winner as usize] = NO_RUN;
        }
        let mut node = (width + winner as usize) >> 1;
        while node >= 1 {
            tree[node] = play!(tree[2 * node], tree[2 * node + 1]);
            node >>= 1;
        }
    }
}
