use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use selfsort_cli::{
    cmd_bench, cmd_gen, cmd_inspect, cmd_sort, cmd_train_linear, cmd_train_mixture, cmd_verify,
    CliError, OutputFormat, RunConfig,
};

/// Self-improving sorter: learns an input distribution, then sorts with
/// entropy-near-optimal comparison counts.
#[derive(Parser)]
#[command(name = "selfsort", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded instance stream from a distribution spec.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// text or binary
        #[arg(long, default_value = "text")]
        format: OutputFormat,
    },
    /// Train a hidden-linear-classes model from an instance stream.
    TrainLinear {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
    },
    /// Train a hidden-mixture model from an instance stream.
    TrainMixture {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Declared upper bound on the number of mixture components.
        #[arg(long)]
        m: usize,
    },
    /// Sort an instance stream with a trained model; writes permutations and
    /// a `.report` sidecar.
    Sort {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// json-lines or csv (report sidecar)
        #[arg(long, default_value = "json-lines")]
        format: OutputFormat,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Check sorted outputs against an oracle sort; with --spec, also check
    /// the learned partition. Exit code 1 on any failure.
    Verify {
        #[arg(long)]
        model: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Generate, train, sort, and compare against a merge-sort baseline;
    /// writes a report embedding the full config.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.5)]
        epsilon: f64,
        /// Override the spec's declared component bound.
        #[arg(long)]
        m: Option<usize>,
        /// json-lines or csv
        #[arg(long, default_value = "json-lines")]
        format: OutputFormat,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
    /// Print structural statistics of a trained model.
    Inspect {
        #[arg(long)]
        model: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Gen {
            spec,
            out,
            count,
            seed,
            format,
        } => {
            let mut config = RunConfig::new("gen");
            config.spec = Some(spec);
            config.output = Some(out);
            config.count = count;
            config.seed = seed;
            config.format = format;
            cmd_gen(&config)
        }
        Command::TrainLinear {
            input,
            out,
            epsilon,
        } => {
            let mut config = RunConfig::new("train-linear");
            config.input = Some(input);
            config.output = Some(out);
            config.epsilon = epsilon;
            cmd_train_linear(&config)
        }
        Command::TrainMixture {
            input,
            out,
            epsilon,
            m,
        } => {
            let mut config = RunConfig::new("train-mixture");
            config.input = Some(input);
            config.output = Some(out);
            config.epsilon = epsilon;
            config.m = Some(m);
            cmd_train_mixture(&config)
        }
        Command::Sort {
            model,
            input,
            out,
            format,
            jobs,
        } => {
            let mut config = RunConfig::new("sort");
            config.model = Some(model);
            config.input = Some(input);
            config.output = Some(out);
            config.format = format;
            config.jobs = jobs;
            cmd_sort(&config)
        }
        Command::Verify {
            model,
            input,
            spec,
            jobs,
        } => {
            let mut config = RunConfig::new("verify");
            config.model = Some(model);
            config.input = Some(input);
            config.spec = spec;
            config.jobs = jobs;
            let summary = cmd_verify(&config)?;
            if summary.passed() {
                Ok(())
            } else {
                Err(CliError::Verification(format!(
                    "sorted {}/{}, partition {:?}",
                    summary.sorted_ok, summary.total, summary.partition_match
                )))
            }
        }
        Command::Bench {
            spec,
            out,
            count,
            seed,
            epsilon,
            m,
            format,
            jobs,
        } => {
            let mut config = RunConfig::new("bench");
            config.spec = Some(spec);
            config.output = out;
            config.count = count;
            config.seed = seed;
            config.epsilon = epsilon;
            config.m = m;
            config.format = format;
            config.jobs = jobs;
            cmd_bench(&config).map(|_| ())
        }
        Command::Inspect { model } => {
            let mut config = RunConfig::new("inspect");
            config.model = Some(model);
            let text = cmd_inspect(&config)?;
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
