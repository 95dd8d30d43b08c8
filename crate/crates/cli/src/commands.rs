use std::io::Write;
use std::path::Path;
use std::time::Instant;

use selfsort_core::baseline;
use selfsort_core::counter::ComparisonCounter;
use selfsort_core::generators::{estimate_perm_entropy, GeneratorSpec, GeneratorStream};
use selfsort_core::linear_sorter::{sort_linear, train_linear};
use selfsort_core::mixture_sorter::{sort_mixture, train_mixture, OperationScratch};
use selfsort_core::stream::{write_binary, write_text, InstanceReader};
use selfsort_core::{InputInstance, SortStats};

use crate::config::{OutputFormat, RunConfig};
use crate::error::{CliError, Result};
use crate::modelfile::{load_model, save_model, ModelKind};
use crate::report::{BenchReport, ReportRow};
use crate::specfile::load_spec;

fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
    field
        .as_ref()
        .ok_or_else(|| CliError::config(format!("--{name} is required for this command")))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Splits `count` items over a worker pool; every worker owns one state
/// built by `init`. Results land in instance order regardless of `jobs`.
fn run_parallel_with<S, T, FInit, F>(count: usize, jobs: usize, init: FInit, f: F) -> Vec<T>
where
    S: Send,
    T: Send,
    FInit: Fn() -> S + Sync,
    F: Fn(&mut S, usize) -> T + Sync,
{
    if jobs <= 1 || count <= 1 {
        let mut state = init();
        return (0..count).map(|i| f(&mut state, i)).collect();
    }
    let mut results: Vec<Option<T>> = (0..count).map(|_| None).collect();
    let chunk = count.div_ceil(jobs);
    std::thread::scope(|scope| {
        for (w, slice) in results.chunks_mut(chunk).enumerate() {
            let f = &f;
            let init = &init;
            scope.spawn(move || {
                let mut state = init();
                for (off, slot) in slice.iter_mut().enumerate() {
                    *slot = Some(f(&mut state, w * chunk + off));
                }
            });
        }
    });
    results
        .into_iter()
        .map(|r| r.expect("worker filled slot"))
        .collect()
}

/// Per-worker sorting state for either model family.
enum Scratch {
    Linear,
    Mixture(Box<OperationScratch>),
}

fn make_scratch(model: &ModelKind) -> Scratch {
    match model {
        ModelKind::Linear(_) => Scratch::Linear,
        ModelKind::Mixture(m) => Scratch::Mixture(Box::new(OperationScratch::new(m))),
    }
}

fn sort_one(
    model: &ModelKind,
    scratch: &mut Scratch,
    instance: &InputInstance,
) -> Result<(Vec<usize>, SortStats)> {
    let mut counter = ComparisonCounter::new();
    match (model, scratch) {
        (ModelKind::Linear(m), Scratch::Linear) => Ok(sort_linear(m, instance, &mut counter)?),
        (ModelKind::Mixture(m), Scratch::Mixture(s)) => {
            Ok(sort_mixture(m, s, instance, &mut counter)?)
        }
        _ => unreachable!("scratch family matches model family"),
    }
}

/// Writes `count` generated instances to the output stream file.
pub fn cmd_gen(config: &RunConfig) -> Result<()> {
    let spec_path = require(&config.spec, "spec")?;
    let out_path = require(&config.output, "out")?;
    let spec = load_spec(spec_path)?;
    let n = spec.n();
    let stream = GeneratorStream::new(spec, config.seed);
    let instances: Vec<InputInstance> = (0..config.count).map(|t| stream.instance_at(t)).collect();
    let file = std::fs::File::create(out_path).map_err(io_err(out_path))?;
    let mut out = std::io::BufWriter::new(file);
    match config.format {
        OutputFormat::Binary => write_binary(&mut out, n, &instances)?,
        OutputFormat::Text => write_text(&mut out, n, &instances)?,
        _ => {
            return Err(CliError::config(
                "gen writes instance streams; format must be text or binary",
            ))
        }
    }
    out.flush().map_err(io_err(out_path))?;
    println!(
        "wrote {} instances (n={}) to {}",
        config.count,
        n,
        out_path.display()
    );
    Ok(())
}

pub fn cmd_train_linear(config: &RunConfig) -> Result<()> {
    let in_path = require(&config.input, "in")?;
    let out_path = require(&config.output, "out")?;
    let epsilon = config.require_epsilon()?;
    let mut reader = InstanceReader::open(in_path)?;
    let n = reader.n();
    let model = train_linear(&mut reader, n, epsilon)?;
    let g = model.partition().classes.len();
    let degenerates = model.partition().degenerates.len();
    save_model(out_path, &ModelKind::Linear(Box::new(model)))?;
    println!(
        "trained linear model: n={n} classes={g} degenerates={degenerates} -> {}",
        out_path.display()
    );
    Ok(())
}

pub fn cmd_train_mixture(config: &RunConfig) -> Result<()> {
    let in_path = require(&config.input, "in")?;
    let out_path = require(&config.output, "out")?;
    let epsilon = config.require_epsilon()?;
    let m = *require(&config.m, "m")?;
    let mut reader = InstanceReader::open(in_path)?;
    let n = reader.n();
    let model = train_mixture(&mut reader, n, m, epsilon)?;
    let intervals = model.vlist().interval_count();
    save_model(out_path, &ModelKind::Mixture(Box::new(model)))?;
    println!(
        "trained mixture model: n={n} m={m} intervals={intervals} -> {}",
        out_path.display()
    );
    Ok(())
}

fn read_instances_checked(path: &Path, model_n: usize) -> Result<Vec<InputInstance>> {
    let reader = InstanceReader::open(path)?;
    if reader.n() != model_n {
        return Err(CliError::DimensionMismatch {
            model_n,
            stream_n: reader.n(),
        });
    }
    Ok(reader.read_all()?)
}

/// Sorts a stream with a trained model: permutations go to the output file,
/// the per-instance report to a `.report` sidecar next to it.
pub fn cmd_sort(config: &RunConfig) -> Result<()> {
    let model_path = require(&config.model, "model")?;
    let in_path = require(&config.input, "in")?;
    let out_path = require(&config.output, "out")?;
    let jobs = config.require_jobs()?;
    let model = load_model(model_path)?;
    let instances = read_instances_checked(in_path, model.n())?;

    let results = run_parallel_with(
        instances.len(),
        jobs,
        || make_scratch(&model),
        |scratch, t| {
            let started = Instant::now();
            let (perm, stats) = sort_one(&model, scratch, &instances[t]).expect("length checked");
            (perm, stats, started.elapsed().as_nanos() as u64)
        },
    );

    let file = std::fs::File::create(out_path).map_err(io_err(out_path))?;
    let mut out = std::io::BufWriter::new(file);
    writeln!(out, "n={} count={}", model.n(), results.len()).map_err(io_err(out_path))?;
    for (perm, _, _) in &results {
        let mut line = String::with_capacity(perm.len() * 4);
        for (j, p) in perm.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            line.push_str(&p.to_string());
        }
        writeln!(out, "{line}").map_err(io_err(out_path))?;
    }
    out.flush().map_err(io_err(out_path))?;

    let rows: Vec<ReportRow> = results
        .iter()
        .enumerate()
        .map(|(t, (_, stats, wall_ns))| ReportRow::from_stats(t as u64, stats, None, *wall_ns))
        .collect();
    let report = BenchReport::new(config.clone(), rows, None);
    let sidecar = report_sidecar_path(out_path, config.format);
    report.save(&sidecar, report_format(config.format))?;
    println!(
        "sorted {} instances; mean comparisons {:.1}; report -> {}",
        report.aggregates.instances,
        report.aggregates.mean_comparisons,
        sidecar.display()
    );
    Ok(())
}

fn report_format(format: OutputFormat) -> OutputFormat {
    match format {
        OutputFormat::Csv => OutputFormat::Csv,
        _ => OutputFormat::JsonLines,
    }
}

fn report_sidecar_path(out_path: &Path, format: OutputFormat) -> std::path::PathBuf {
    let ext = match report_format(format) {
        OutputFormat::Csv => "report.csv",
        _ => "report.jsonl",
    };
    let mut os = out_path.as_os_str().to_owned();
    os.push(".");
    os.push(ext);
    std::path::PathBuf::from(os)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifySummary {
    pub sorted_ok: u64,
    pub total: u64,
    pub correctness_fallbacks: u64,
    /// Some(matches) when a linear spec was supplied for comparison.
    pub partition_match: Option<bool>,
}

impl VerifySummary {
    pub fn passed(&self) -> bool {
        self.sorted_ok == self.total && self.partition_match != Some(false)
    }
}

/// Checks every sorted output against the oracle and, given a linear spec,
/// the learned partition against the spec partition.
pub fn cmd_verify(config: &RunConfig) -> Result<VerifySummary> {
    let model_path = require(&config.model, "model")?;
    let in_path = require(&config.input, "in")?;
    let jobs = config.require_jobs()?;
    let model = load_model(model_path)?;
    let instances = read_instances_checked(in_path, model.n())?;

    let results = run_parallel_with(
        instances.len(),
        jobs,
        || make_scratch(&model),
        |scratch, t| {
            let (perm, stats) = sort_one(&model, scratch, &instances[t]).expect("length checked");
            (
                baseline::is_sorting_permutation(instances[t].values(), &perm),
                stats.correctness_fallback,
            )
        },
    );
    let sorted_ok = results.iter().filter(|(ok, _)| *ok).count() as u64;
    let correctness_fallbacks = results.iter().filter(|(_, fb)| *fb).count() as u64;

    let partition_match = match (&config.spec, &model) {
        (Some(spec_path), ModelKind::Linear(trained)) => match load_spec(spec_path)? {
            GeneratorSpec::Linear(spec) => {
                Some(spec.canonical_partition() == trained.partition().canonical())
            }
            GeneratorSpec::Mixture(_) => None,
        },
        _ => None,
    };

    let summary = VerifySummary {
        sorted_ok,
        total: instances.len() as u64,
        correctness_fallbacks,
        partition_match,
    };
    println!("sorted: {}/{}", summary.sorted_ok, summary.total);
    println!("correctness fallbacks: {}", summary.correctness_fallbacks);
    match summary.partition_match {
        Some(true) => println!("partition: match"),
        Some(false) => println!("partition: MISMATCH"),
        None => {}
    }
    Ok(summary)
}

/// Full cycle on one spec: generate, train, sort `count` operation
/// instances, run the merge-sort baseline on the same instances, and write a
/// report embedding the resolved config.
pub fn cmd_bench(config: &RunConfig) -> Result<BenchReport> {
    let jobs = config.require_jobs()?;
    let epsilon = config.require_epsilon()?;
    let spec = match &config.spec_inline {
        Some(spec) => {
            spec.validate()?;
            spec.clone()
        }
        None => load_spec(require(&config.spec, "spec")?)?,
    };
    let n = spec.n();

    let mut stream = GeneratorStream::new(spec.clone(), config.seed);
    let model = match &spec {
        GeneratorSpec::Linear(_) => {
            ModelKind::Linear(Box::new(train_linear(&mut stream, n, epsilon)?))
        }
        GeneratorSpec::Mixture(mix) => {
            let m = config.m.unwrap_or(mix.m);
            ModelKind::Mixture(Box::new(train_mixture(&mut stream, n, m, epsilon)?))
        }
    };
    let first_operation_instance = stream.position();

    let rows = run_parallel_with(
        config.count as usize,
        jobs,
        || make_scratch(&model),
        |scratch, t| {
            let instance = stream.instance_at(first_operation_instance + t as u64);
            let started = Instant::now();
            let (perm, stats) =
                sort_one(&model, scratch, &instance).expect("generated length matches");
            let wall_ns = started.elapsed().as_nanos() as u64;
            debug_assert!(baseline::is_sorting_permutation(instance.values(), &perm));
            let (_, baseline_comparisons) = baseline::merge_sort_indices(instance.values());
            ReportRow::from_stats(t as u64, &stats, Some(baseline_comparisons), wall_ns)
        },
    );

    let perm_entropy = if n <= 8 {
        Some(estimate_perm_entropy(&spec, 100_000, config.seed)?)
    } else {
        None
    };

    let mut embedded = config.clone();
    embedded.spec_inline = Some(spec);
    let report = BenchReport::new(embedded, rows, perm_entropy);
    if let Some(out_path) = &config.output {
        report.save(out_path, report_format(config.format))?;
    }
    let agg = &report.aggregates;
    println!(
        "bench: {} instances, mean comparisons {:.1} vs baseline {:.1} (ratio {:.3}), \
         mean occupancy {:.2}, fallbacks {}",
        agg.instances,
        agg.mean_comparisons,
        agg.mean_baseline_comparisons.unwrap_or(f64::NAN),
        agg.comparison_ratio.unwrap_or(f64::NAN),
        agg.mean_occupancy,
        agg.correctness_fallbacks,
    );
    Ok(report)
}

/// Structural statistics of a trained model, as printable text.
pub fn cmd_inspect(config: &RunConfig) -> Result<String> {
    let model_path = require(&config.model, "model")?;
    let model = load_model(model_path)?;
    let mut out = String::new();
    use std::fmt::Write as _;
    match &model {
        ModelKind::Linear(m) => {
            writeln!(out, "kind: linear").unwrap();
            writeln!(out, "n: {}", m.n()).unwrap();
            writeln!(out, "epsilon: {}", m.epsilon()).unwrap();
            writeln!(out, "classes: {}", m.partition().classes.len()).unwrap();
            writeln!(out, "degenerates: {}", m.partition().degenerates.len()).unwrap();
            writeln!(out, "vlist boundaries: {}", m.vlist().len()).unwrap();
            writeln!(out, "marked intervals: {}", m.marks().len()).unwrap();
            for (k, (class, (slabs, tree))) in m
                .partition()
                .classes
                .iter()
                .zip(m.class_slabs().iter().zip(m.class_trees()))
                .enumerate()
            {
                writeln!(
                    out,
                    "class {k}: size={} slabs={} tree_keys={} expected_depth={:.3} cutoff={}",
                    class.indices.len(),
                    slabs.slab_count(),
                    tree.key_count(),
                    tree.expected_depth(),
                    tree.cutoff(),
                )
                .unwrap();
            }
        }
        ModelKind::Mixture(m) => {
            writeln!(out, "kind: mixture").unwrap();
            writeln!(out, "n: {}", m.n()).unwrap();
            writeln!(out, "m: {}", m.m()).unwrap();
            writeln!(out, "epsilon: {}", m.epsilon()).unwrap();
            writeln!(out, "intervals: {}", m.vlist().interval_count()).unwrap();
            let sizes: Vec<String> = (0..m.bucket_count())
                .map(|b| m.bucket_len(b).to_string())
                .collect();
            if sizes.len() <= 32 {
                writeln!(out, "buckets: {} sizes=[{}]", sizes.len(), sizes.join(", ")).unwrap();
            } else {
                writeln!(
                    out,
                    "buckets: {} sizes=[{} x {}, {}]",
                    sizes.len(),
                    sizes[0],
                    sizes.len() - 1,
                    sizes.last().unwrap()
                )
                .unwrap();
            }
            let keys: Vec<usize> = m.trees().iter().map(|t| t.key_count()).collect();
            let depth: f64 = m.trees().iter().map(|t| t.expected_depth()).sum::<f64>()
                / m.trees().len().max(1) as f64;
            writeln!(
                out,
                "tree keys: min={} max={} mean={:.2}",
                keys.iter().min().unwrap_or(&0),
                keys.iter().max().unwrap_or(&0),
                keys.iter().sum::<usize>() as f64 / keys.len().max(1) as f64,
            )
            .unwrap();
            writeln!(out, "tree expected depth: {depth:.3}").unwrap();
            writeln!(
                out,
                "tree cutoff: {}",
                m.trees().first().map(|t| t.cutoff()).unwrap_or(0)
            )
            .unwrap();
        }
    }
    Ok(out)
}
