//! Training-phase recovery of degenerate positions, the hidden class
//! partition, and per-position line equations.
//!
//! Two positions land in the same class when every consecutive triple of
//! their observed value pairs is collinear across the training batch; classes
//! are the connected components of the passing-pair graph. Collinearity uses
//! a relative tolerance because double rounding makes exact-zero determinant
//! tests fail on genuinely collinear data, and components are taken instead
//! of raw pairwise equivalence because a toleranced test is not transitive.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::instance::InputInstance;

/// Default relative tolerance for the collinearity determinant.
pub const DEFAULT_COLLINEAR_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    #[inline]
    pub fn y_at(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }
}

/// One learned class: sorted member positions; the representative is the
/// smallest member and its line is the identity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LearnedClass {
    pub indices: Vec<usize>,
    /// Parallel to `indices`; empty until `fit_lines` runs.
    #[serde(default)]
    pub lines: Vec<Line>,
}

impl LearnedClass {
    pub fn representative(&self) -> usize {
        self.indices[0]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ClassPartition {
    #[serde(default, with = "crate::serde_util::usize_key_map")]
    pub degenerates: BTreeMap<usize, f64>,
    pub classes: Vec<LearnedClass>,
}

impl ClassPartition {
    /// Canonical form for comparisons: (degenerate indices, sorted class sets).
    pub fn canonical(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let mut classes: Vec<Vec<usize>> = self.classes.iter().map(|c| c.indices.clone()).collect();
        classes.sort();
        (self.degenerates.keys().copied().collect(), classes)
    }
}

/// Number of instances the class-learning phase consumes: ceil(3 ln^2 n),
/// floored at 3 so the triple test is defined for tiny n.
pub fn class_learning_batch(n: usize) -> usize {
    let ln = (n as f64).ln();
    ((3.0 * ln * ln).ceil() as usize).max(3)
}

fn check_lengths(instances: &[InputInstance]) -> Result<usize> {
    let Some(first) = instances.first() else {
        return Err(CoreError::EmptyTraining);
    };
    let n = first.len();
    for (index, inst) in instances.iter().enumerate() {
        if inst.len() != n {
            return Err(CoreError::LengthMismatch {
                index,
                expected: n,
                got: inst.len(),
            });
        }
    }
    Ok(n)
}

/// Positions whose value is identical in every supplied instance, with that
/// value.
pub fn detect_degenerates(instances: &[InputInstance]) -> Result<BTreeMap<usize, f64>> {
    let n = check_lengths(instances)?;
    let mut out = BTreeMap::new();
    'next: for i in 0..n {
        let v = instances[0].get(i);
        for inst in &instances[1..] {
            if inst.get(i) != v {
                continue 'next;
            }
        }
        out.insert(i, v);
    }
    Ok(out)
}

/// True when the three points are collinear up to a relative tolerance: the
/// 3x3 orientation determinant is compared against tol times the cube of the
/// largest coordinate magnitude.
pub fn collinear(p1: (f64, f64), p2: (f64, f64), p3: (f64, f64), tol: f64) -> bool {
    let det = p1.0 * (p2.1 - p3.1) - p1.1 * (p2.0 - p3.0) + (p2.0 * p3.1 - p3.0 * p2.1);
    let scale = [p1.0, p1.1, p2.0, p2.1, p3.0, p3.1]
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()));
    det.abs() <= tol * scale.powi(3)
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(len: usize) -> Self {
        Self {
            parent: (0..len).collect(),
            size: vec![1; len],
        }
    }

    fn find(&mut self, x: usize) -> usize {
        let mut x = x;
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let mut ra = self.find(a);
        let mut rb = self.find(b);
        if ra == rb {
            return;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
    }
}

/// Groups non-degenerate positions into classes. Positions i and j pass when
/// every consecutive triple of (x_i, x_j) points across the batch is
/// collinear; classes are the connected components over passing pairs.
pub fn learn_classes(
    instances: &[InputInstance],
    degenerates: &BTreeMap<usize, f64>,
    tol: f64,
) -> Result<ClassPartition> {
    let n = check_lengths(instances)?;
    let t = instances.len();
    if t < 3 {
        return Err(CoreError::InsufficientTraining { needed: 3, got: t });
    }
    let candidates: Vec<usize> = (0..n).filter(|i| !degenerates.contains_key(i)).collect();
    let mut uf = UnionFind::new(candidates.len());
    for a in 0..candidates.len() {
        let i = candidates[a];
        for (b, &j) in candidates.iter().enumerate().skip(a + 1) {
            if uf.find(a) == uf.find(b) {
                continue;
            }
            let mut all_collinear = true;
            for w in 2..t {
                let p1 = (instances[w - 2].get(i), instances[w - 2].get(j));
                let p2 = (instances[w - 1].get(i), instances[w - 1].get(j));
                let p3 = (instances[w].get(i), instances[w].get(j));
                if !collinear(p1, p2, p3, tol) {
                    all_collinear = false;
                    break;
                }
            }
            if all_collinear {
                uf.union(a, b);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (a, &i) in candidates.iter().enumerate() {
        let root = uf.find(a);
        groups.entry(candidates[root]).or_default().push(i);
    }
    let classes = groups
        .into_values()
        .map(|indices| LearnedClass {
            indices,
            lines: Vec::new(),
        })
        .collect();
    Ok(ClassPartition {
        degenerates: degenerates.clone(),
        classes,
    })
}

/// Fits each class's per-position line through two observed points of the
/// representative. The pair with the widest representative spread is used so
/// the slope is as well conditioned as the batch allows.
pub fn fit_lines(partition: &mut ClassPartition, instances: &[InputInstance]) -> Result<()> {
    if instances.len() < 2 {
        return Err(CoreError::InsufficientTraining {
            needed: 2,
            got: instances.len(),
        });
    }
    check_lengths(instances)?;
    for class in &mut partition.classes {
        let s = class.representative();
        let mut lo = 0;
        let mut hi = 0;
        for (a, inst) in instances.iter().enumerate() {
            if inst.get(s) < instances[lo].get(s) {
                lo = a;
            }
            if inst.get(s) > instances[hi].get(s) {
                hi = a;
            }
        }
        let xs_a = instances[lo].get(s);
        let xs_b = instances[hi].get(s);
        if xs_a == xs_b {
            return Err(CoreError::RepresentativeDegenerate { index: s });
        }
        class.lines = class
            .indices
            .iter()
            .map(|&i| {
                if i == s {
                    Line {
                        slope: 1.0,
                        intercept: 0.0,
                    }
                } else {
                    let slope = (instances[hi].get(i) - instances[lo].get(i)) / (xs_b - xs_a);
                    Line {
                        slope,
                        intercept: instances[lo].get(i) - slope * xs_a,
                    }
                }
            })
            .collect();
    }
    Ok(())
}
