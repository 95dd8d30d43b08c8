//! Synthetic input models: hidden linear classes, hidden mixtures of product
//! distributions, and plain products (a mixture with one component).
//!
//! Sampling is deterministic given a 64-bit seed. Instance a is drawn from
//! ChaCha stream a of the seeded generator, so streams can be generated out
//! of order or in parallel and always reproduce bit-identically.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};
use crate::instance::InputInstance;
use crate::stream::InstanceSource;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarDist {
    Uniform { a: f64, b: f64 },
    Gaussian { mean: f64, sd: f64 },
    Discrete { values: Vec<f64>, probs: Vec<f64> },
    Constant { c: f64 },
}

impl ScalarDist {
    fn validate(&self, path: &str) -> Result<()> {
        match self {
            ScalarDist::Uniform { a, b } => {
                if !a.is_finite() || !b.is_finite() {
                    return Err(CoreError::spec(path, "uniform bounds must be finite"));
                }
                if a >= b {
                    return Err(CoreError::spec(
                        path,
                        format!("need a < b, got a={a} b={b}"),
                    ));
                }
            }
            ScalarDist::Gaussian { mean, sd } => {
                if !mean.is_finite() || !sd.is_finite() {
                    return Err(CoreError::spec(path, "gaussian parameters must be finite"));
                }
                if *sd <= 0.0 {
                    return Err(CoreError::spec(path, format!("need sd > 0, got {sd}")));
                }
            }
            ScalarDist::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return Err(CoreError::spec(
                        path,
                        "values and probs must be non-empty and equal length",
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(CoreError::spec(path, "values must be finite"));
                }
                if probs.iter().any(|&p| p.is_nan() || p <= 0.0) {
                    return Err(CoreError::spec(path, "probs must be positive"));
                }
                let total: f64 = probs.iter().sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(CoreError::spec(
                        path,
                        format!("probs must sum to 1 within 1e-9, got {total}"),
                    ));
                }
            }
            ScalarDist::Constant { c } => {
                if !c.is_finite() {
                    return Err(CoreError::spec(path, "constant must be finite"));
                }
            }
        }
        Ok(())
    }

    /// Largest probability the distribution places on any single value.
    pub fn max_point_mass(&self) -> f64 {
        match self {
            ScalarDist::Uniform { .. } | ScalarDist::Gaussian { .. } => 0.0,
            ScalarDist::Discrete { probs, .. } => probs.iter().cloned().fold(0.0, f64::max),
            ScalarDist::Constant { .. } => 1.0,
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        match self {
            ScalarDist::Uniform { a, b } => rng.random_range(*a..*b),
            ScalarDist::Gaussian { mean, sd } => {
                Normal::new(*mean, *sd).expect("validated").sample(rng)
            }
            ScalarDist::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                for (v, p) in values.iter().zip(probs) {
                    acc += p;
                    if u < acc {
                        return *v;
                    }
                }
                *values.last().unwrap()
            }
            ScalarDist::Constant { c } => *c,
        }
    }
}

/// One hidden class: positions whose values are distinct linear functions of
/// a shared random parameter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassDef {
    /// 0-based positions, strictly increasing.
    pub indices: Vec<usize>,
    pub slopes: Vec<f64>,
    pub intercepts: Vec<f64>,
    pub parameter_dist: ScalarDist,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearClassSpec {
    pub n: usize,
    /// Concentration bound: every parameter distribution puts at most 1 - rho
    /// on any single value. Held for validation only; training never reads it.
    pub rho: f64,
    #[serde(default, with = "crate::serde_util::usize_key_map")]
    pub degenerates: BTreeMap<usize, f64>,
    pub classes: Vec<LinearClassDef>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub weight: f64,
    pub dists: Vec<ScalarDist>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub n: usize,
    /// Declared upper bound on the number of components.
    pub m: usize,
    pub components: Vec<MixtureComponent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GeneratorSpec {
    Linear(LinearClassSpec),
    Mixture(MixtureSpec),
}

impl LinearClassSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CoreError::spec("n", "need n >= 1"));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(CoreError::spec(
                "rho",
                format!("need rho in (0,1), got {}", self.rho),
            ));
        }
        let mut covered = vec![false; self.n];
        for (idx, value) in &self.degenerates {
            if *idx >= self.n {
                return Err(CoreError::spec(
                    format!("degenerates[{idx}]"),
                    format!("index out of range for n={}", self.n),
                ));
            }
            if !value.is_finite() {
                return Err(CoreError::spec(
                    format!("degenerates[{idx}]"),
                    "value must be finite",
                ));
            }
            covered[*idx] = true;
        }
        for (k, class) in self.classes.iter().enumerate() {
            let path = format!("classes[{k}]");
            if class.indices.is_empty() {
                return Err(CoreError::spec(&path, "class must be non-empty"));
            }
            if class.indices.len() != class.slopes.len()
                || class.indices.len() != class.intercepts.len()
            {
                return Err(CoreError::spec(
                    &path,
                    "indices, slopes, and intercepts must have equal length",
                ));
            }
            for (j, &i) in class.indices.iter().enumerate() {
                if i >= self.n {
                    return Err(CoreError::spec(
                        format!("{path}.indices[{j}]"),
                        format!("index out of range for n={}", self.n),
                    ));
                }
                if covered[i] {
                    return Err(CoreError::spec(
                        format!("{path}.indices[{j}]"),
                        format!("index {i} assigned twice"),
                    ));
                }
                covered[i] = true;
                if class.slopes[j] == 0.0 || !class.slopes[j].is_finite() {
                    return Err(CoreError::spec(
                        format!("{path}.slopes[{j}]"),
                        "slope must be finite and nonzero",
                    ));
                }
                if !class.intercepts[j].is_finite() {
                    return Err(CoreError::spec(
                        format!("{path}.intercepts[{j}]"),
                        "intercept must be finite",
                    ));
                }
            }
            for a in 0..class.indices.len() {
                for b in a + 1..class.indices.len() {
                    if class.slopes[a] == class.slopes[b]
                        && class.intercepts[a] == class.intercepts[b]
                    {
                        return Err(CoreError::spec(
                            format!("{path}.indices[{b}]"),
                            "duplicate (slope, intercept) within a class",
                        ));
                    }
                }
            }
            class
                .parameter_dist
                .validate(&format!("{path}.parameter_dist"))?;
            let mass = class.parameter_dist.max_point_mass();
            if mass > 1.0 - self.rho + 1e-12 {
                return Err(CoreError::spec(
                    format!("{path}.parameter_dist"),
                    format!("max point mass {mass} exceeds 1 - rho = {}", 1.0 - self.rho),
                ));
            }
        }
        if let Some(i) = covered.iter().position(|&c| !c) {
            return Err(CoreError::spec(
                "classes",
                format!("index {i} is neither degenerate nor in any class"),
            ));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> InputInstance {
        let mut values = vec![0.0f64; self.n];
        for class in &self.classes {
            let z = class.parameter_dist.sample(rng);
            for (j, &i) in class.indices.iter().enumerate() {
                values[i] = class.slopes[j] * z + class.intercepts[j];
            }
        }
        for (&i, &c) in &self.degenerates {
            values[i] = c;
        }
        InputInstance::new(values).expect("finite by construction")
    }

    /// Partition in canonical form: (sorted degenerate indices, sorted list of
    /// sorted class index sets). Used to compare against learned partitions.
    pub fn canonical_partition(&self) -> (Vec<usize>, Vec<Vec<usize>>) {
        let degenerates: Vec<usize> = self.degenerates.keys().copied().collect();
        let mut classes: Vec<Vec<usize>> = self
            .classes
            .iter()
            .map(|c| {
                let mut v = c.indices.clone();
                v.sort_unstable();
                v
            })
            .collect();
        classes.sort();
        (degenerates, classes)
    }
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(CoreError::spec("n", "need n >= 1"));
        }
        if self.m == 0 {
            return Err(CoreError::spec("m", "need m >= 1"));
        }
        if self.components.is_empty() {
            return Err(CoreError::spec("components", "need at least one component"));
        }
        if self.components.len() > self.m {
            return Err(CoreError::spec(
                "components",
                format!(
                    "{} components exceed declared bound m={}",
                    self.components.len(),
                    self.m
                ),
            ));
        }
        let mut total = 0.0;
        for (q, comp) in self.components.iter().enumerate() {
            let path = format!("components[{q}]");
            if comp.weight.is_nan() || comp.weight <= 0.0 || !comp.weight.is_finite() {
                return Err(CoreError::spec(
                    format!("{path}.weight"),
                    "weight must be positive",
                ));
            }
            total += comp.weight;
            if comp.dists.len() != self.n {
                return Err(CoreError::spec(
                    format!("{path}.dists"),
                    format!(
                        "need {} per-index distributions, got {}",
                        self.n,
                        comp.dists.len()
                    ),
                ));
            }
            for (i, d) in comp.dists.iter().enumerate() {
                d.validate(&format!("{path}.dists[{i}]"))?;
            }
        }
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::spec(
                "components",
                format!("weights must sum to 1 within 1e-9, got {total}"),
            ));
        }
        Ok(())
    }

    pub fn sample(&self, rng: &mut impl Rng) -> InputInstance {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (q, comp) in self.components.iter().enumerate() {
            acc += comp.weight;
            if u < acc {
                chosen = q;
                break;
            }
        }
        let values = self.components[chosen]
            .dists
            .iter()
            .map(|d| d.sample(rng))
            .collect();
        InputInstance::new(values).expect("finite by construction")
    }
}

impl GeneratorSpec {
    pub fn n(&self) -> usize {
        match self {
            GeneratorSpec::Linear(s) => s.n,
            GeneratorSpec::Mixture(s) => s.n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            GeneratorSpec::Linear(s) => s.validate(),
            GeneratorSpec::Mixture(s) => s.validate(),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> InputInstance {
        match self {
            GeneratorSpec::Linear(s) => s.sample(rng),
            GeneratorSpec::Mixture(s) => s.sample(rng),
        }
    }
}

/// Seeded instance stream; instance a comes from ChaCha stream a.
pub struct GeneratorStream {
    spec: GeneratorSpec,
    seed: u64,
    next: u64,
}

impl GeneratorStream {
    pub fn new(spec: GeneratorSpec, seed: u64) -> Self {
        Self {
            spec,
            seed,
            next: 0,
        }
    }

    pub fn spec(&self) -> &GeneratorSpec {
        &self.spec
    }

    /// Number of instances handed out so far.
    pub fn position(&self) -> u64 {
        self.next
    }

    pub fn instance_at(&self, index: u64) -> InputInstance {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(index);
        self.spec.sample(&mut rng)
    }
}

impl InstanceSource for GeneratorStream {
    fn next_instance(&mut self) -> Result<Option<InputInstance>> {
        let inst = self.instance_at(self.next);
        self.next += 1;
        Ok(Some(inst))
    }
}

/// Rank permutation of an instance: positions ordered by (value, position).
pub fn rank_permutation(instance: &InputInstance) -> Vec<u8> {
    debug_assert!(instance.len() <= 8);
    let values = instance.values();
    let mut perm: Vec<u8> = (0..values.len() as u8).collect();
    perm.sort_by(|&a, &b| {
        values[a as usize]
            .total_cmp(&values[b as usize])
            .then(a.cmp(&b))
    });
    perm
}

/// Plug-in estimate of the rank-permutation entropy in bits, for n <= 8.
pub fn estimate_perm_entropy(spec: &GeneratorSpec, trials: u64, seed: u64) -> Result<f64> {
    let n = spec.n();
    if n > 8 {
        return Err(CoreError::TooLargeForOracle { n });
    }
    let stream = GeneratorStream::new(spec.clone(), seed);
    let mut counts: std::collections::HashMap<u32, u64> = std::collections::HashMap::new();
    for t in 0..trials {
        let inst = stream.instance_at(t);
        let perm = rank_permutation(&inst);
        let mut key = 0u32;
        for &p in &perm {
            key = (key << 3) | p as u32;
        }
        *counts.entry(key).or_insert(0) += 1;
    }
    let total = trials as f64;
    let entropy: f64 = counts
        .values()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    Ok(entropy.max(0.0))
}
