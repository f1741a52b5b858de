//! Command-line front end: `run`, `synth` and `sweep-window`.

use std::collections::HashSet;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sper_core::{EmbedderKind, HnswParams, IndexKind, Mode, RunConfig};

use crate::error::{Error, Result};
use crate::ingest::{load_collection, load_precomputed_embeddings, load_truth, Dataset};
use crate::pipeline::{run_dataset, RunOutput};
use crate::report::{emit_report, summary_row, SUMMARY_HEADER};
use crate::sweep::{parse_window_list, sweep_window, SWEEP_HEADER};
use crate::synth::{DistributionKind, SyntheticSpec, WeightDistribution};

#[derive(Debug, Parser)]
#[command(
    name = "sper",
    version,
    about = "Stochastic budgeted prioritization for progressive entity resolution",
    args_override_self = true
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Link two record files (or deduplicate one) and report metrics.
    Run(RunArgs),
    /// Run on a synthetic candidate stream.
    Synth(SynthArgs),
    /// Mean NCU and budget deviation for several window sizes.
    SweepWindow(SweepArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StrategyArgs {
    #[arg(long, default_value = "sper")]
    pub mode: Mode,
    /// Neighbours per query entity.
    #[arg(long, default_value_t = 5)]
    pub k: usize,
    /// Budget ratio: B = round(rho * k * |S|).
    #[arg(long, default_value_t = 0.15)]
    pub rho: f64,
    /// Query entities per controller window.
    #[arg(long, default_value_t = 200)]
    pub window: usize,
    #[arg(long, default_value_t = 0.05)]
    pub eta: f64,
    /// Required for the sper and uniform modes.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 0.8)]
    pub threshold: f64,
    /// Prefix for report files, e.g. `out/run1_`.
    #[arg(long)]
    pub out_prefix: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Records of R (the indexed collection).
    #[arg(long)]
    pub left: PathBuf,
    /// Records of S (the query stream). Omit with --dedup.
    #[arg(long)]
    pub right: Option<PathBuf>,
    /// Ground truth CSV with header r_id,s_id.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Precomputed embeddings CSV: id,v0,...,v{d-1}.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    #[arg(long, default_value = "id")]
    pub id_column: String,
    /// Deduplicate --left against itself.
    #[arg(long)]
    pub dedup: bool,
    #[arg(long, default_value_t = 256)]
    pub dim: usize,
    #[arg(long, default_value = "exact")]
    pub index: IndexKind,
    #[arg(long, default_value_t = 64)]
    pub ef_search: usize,
    #[arg(long, default_value_t = 200)]
    pub ef_construction: usize,
    /// Maximum graph degree M of the hnsw index.
    #[arg(long, default_value_t = 16)]
    pub m_graph: usize,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StreamArgs {
    /// Number of query entities.
    #[arg(long, default_value_t = 10_000)]
    pub n: usize,
    /// uniform, beta, mixture or linkage.
    #[arg(long, default_value = "mixture")]
    pub dist: DistributionKind,
    #[arg(long, default_value_t = 0.0)]
    pub low: f64,
    #[arg(long, default_value_t = 1.0)]
    pub high: f64,
    #[arg(long, default_value_t = 2.0)]
    pub beta_a: f64,
    #[arg(long, default_value_t = 5.0)]
    pub beta_b: f64,
    /// Share of true matches in a mixture stream.
    #[arg(long, default_value_t = 0.2)]
    pub match_fraction: f64,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Sweep these windows (start:end:step or a,b,c) instead of one run.
    #[arg(long)]
    pub sweep_window: Option<String>,
    /// Seeds per window when sweeping: seed, seed+1, ...
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub stream: StreamArgs,
    /// Window sizes: start:end:step or a,b,c.
    #[arg(long, default_value = "100:500:100")]
    pub windows: String,
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

impl StreamArgs {
    fn spec(&self, k: usize, seed: u64) -> SyntheticSpec {
        let distribution = match self.dist {
            DistributionKind::Uniform => WeightDistribution::Uniform {
                low: self.low,
                high: self.high,
            },
            DistributionKind::Beta => WeightDistribution::Beta {
                a: self.beta_a,
                b: self.beta_b,
            },
            DistributionKind::Mixture => WeightDistribution::mixture(self.match_fraction),
            DistributionKind::Linkage => WeightDistribution::planted(),
        };
        SyntheticSpec {
            n_queries: self.n,
            k,
            distribution,
            seed,
        }
    }
}

impl StrategyArgs {
    fn seed(&self) -> Result<u64> {
        match (self.seed, self.mode) {
            (Some(s), _) => Ok(s),
            (None, Mode::Sper | Mode::Uniform) => Err(Error::Usage(format!(
                "--seed is required for mode {}",
                self.mode
            ))),
            (None, _) => Ok(0),
        }
    }

    fn config(&self) -> Result<RunConfig> {
        Ok(RunConfig {
            k: self.k,
            rho: self.rho,
            window_size: self.window,
            eta: self.eta,
            seed: self.seed()?,
            mode: self.mode,
            threshold: self.threshold,
            ..RunConfig::default()
        })
    }
}

fn finish(out: &mut dyn Write, output: &RunOutput, truth: Option<&sper_core::TruthSet>, prefix: Option<&str>) -> Result<()> {
    let metrics = output.metrics(truth);
    if let Some(prefix) = prefix {
        emit_report(&metrics, &output.emissions, prefix)?;
    }
    writeln!(out, "{SUMMARY_HEADER}\n{}", summary_row(&metrics)).map_err(|e| Error::io("<stdout>", e))
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<()> {
    let config = RunConfig {
        dimension: args.dim,
        index_kind: args.index,
        embedder_kind: if args.embeddings.is_some() {
            EmbedderKind::Precomputed
        } else {
            EmbedderKind::Hash
        },
        dedup: args.dedup,
        hnsw: HnswParams {
            m: args.m_graph,
            ef_construction: args.ef_construction,
            ef_search: args.ef_search,
            ..HnswParams::default()
        },
        ..args.strategy.config()?
    }
    .validated()?;

    let left = load_collection(&args.left, &args.id_column)?;
    let mut dataset = match (&args.right, args.dedup) {
        (None, true) => Dataset::dedup(left),
        (Some(right), false) => Dataset::linkage(left, load_collection(right, &args.id_column)?),
        (Some(_), true) => return Err(Error::Usage("--dedup takes only --left".into())),
        (None, false) => return Err(Error::Usage("--right is required unless --dedup is given".into())),
    };
    if let Some(path) = &args.truth {
        dataset = dataset.with_truth(load_truth(path)?);
    }

    let embeddings = match &args.embeddings {
        Some(path) => {
            let known: HashSet<&str> = dataset
                .records_r
                .iter()
                .chain(&dataset.records_s)
                .map(|r| r.id.as_str())
                .collect();
            Some(load_precomputed_embeddings(path, args.dim, Some(&known))?)
        }
        None => None,
    };

    let output = run_dataset(&dataset, &config, embeddings.as_ref())?;
    finish(out, &output, dataset.truth.as_ref(), args.strategy.out_prefix.as_deref())
}

fn cmd_synth(args: &SynthArgs, out: &mut dyn Write) -> Result<()> {
    let config = args.strategy.config()?;
    if let Some(list) = &args.sweep_window {
        let windows = parse_window_list(list)?;
        let seeds: Vec<u64> = (0..args.seeds.max(1)).map(|i| config.seed + i).collect();
        return print_sweep(out, &args.stream.spec(config.k, config.seed), &config, &windows, &seeds);
    }
    let config = config.validated()?;
    let workload = args.stream.spec(config.k, config.seed).generate()?;
    let output = crate::pipeline::run(&mut &workload, &config)?;
    let truth = (!workload.truth.is_empty()).then_some(&workload.truth);
    finish(out, &output, truth, args.strategy.out_prefix.as_deref())
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<()> {
    let config = args.strategy.config()?;
    let windows = parse_window_list(&args.windows)?;
    let seeds: Vec<u64> = (0..args.seeds.max(1)).map(|i| config.seed + i).collect();
    print_sweep(out, &args.stream.spec(config.k, config.seed), &config, &windows, &seeds)
}

fn print_sweep(
    out: &mut dyn Write,
    spec: &SyntheticSpec,
    config: &RunConfig,
    windows: &[usize],
    seeds: &[u64],
) -> Result<()> {
    let rows = sweep_window(spec, config, windows, seeds)?;
    let io = |e| Error::io("<stdout>", e);
    writeln!(out, "{SWEEP_HEADER}").map_err(io)?;
    for row in &rows {
        writeln!(out, "{}", row.to_csv()).map_err(io)?;
    }
    let spread = rows.iter().map(|r| r.mean_ncu).fold(f64::NEG_INFINITY, f64::max)
        - rows.iter().map(|r| r.mean_ncu).fold(f64::INFINITY, f64::min);
    writeln!(out, "# ncu spread across windows: {}", crate::report::fmt_g6(spread)).map_err(io)
}

/// Parses `argv` (including the program name) and executes the command,
/// writing the summary to `out`.
pub fn execute<I, T>(argv: I, out: &mut dyn Write) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| Error::Usage(e.to_string()))?;
    match &cli.command {
        Command::Run(args) => cmd_run(args, out),
        Command::Synth(args) => cmd_synth(args, out),
        Command::SweepWindow(args) => cmd_sweep(args, out),
    }
}

/// Entry point used by the binary: 0 on success, 2 for usage errors, 1 for
/// everything else.
pub fn run<I, T>(argv: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    match execute(argv, &mut stdout.lock()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Usage(msg)) => {
            eprintln!("{msg}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
