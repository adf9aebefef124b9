use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phrprobe_core::dataset::{NegativeSampling, Subset};
use phrprobe_core::pipeline::{
    cmd_analyze, cmd_build_dataset, cmd_compare, cmd_validate_dump, BuildConfig, RunConfig,
};
use phrprobe_core::{ProbeError, ReprType};

#[derive(Parser)]
#[command(
    name = "phrprobe",
    version,
    about = "Layerwise probing of phrase representations"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Clean and sample the similarity and paraphrase datasets.
    BuildDataset(BuildArgs),
    /// Run correlation, classification and landmark analyses over dumps.
    Analyze(AnalyzeArgs),
    /// Per-cell difference between a full and a controlled report.
    Compare(CompareArgs),
    /// Check every record of a dump against the format invariants.
    ValidateDump(ValidateArgs),
}

fn parse_negatives(s: &str) -> Result<NegativeSampling, String> {
    match s {
        "uniform" => Ok(NegativeSampling::Uniform),
        "half-overlap" => Ok(NegativeSampling::HalfOverlap),
        other => Err(format!("expected uniform or half-overlap, got {other:?}")),
    }
}

#[derive(Args)]
struct BuildArgs {
    /// JSON file with the build configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// BiRD tab-separated file.
    #[arg(long)]
    bird: Option<PathBuf>,
    /// PPDB rows (` ||| `-delimited or source<TAB>target).
    #[arg(long)]
    ppdb: Option<PathBuf>,
    /// Negative pool, one phrase per line.
    #[arg(long)]
    phrase_pool: Option<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Upper bound on full classification pairs.
    #[arg(long)]
    max_pairs: Option<usize>,
    #[arg(long, value_parser = parse_negatives)]
    negatives: Option<NegativeSampling>,
    #[arg(long, value_parser = parse_negatives)]
    controlled_negatives: Option<NegativeSampling>,
}

impl BuildArgs {
    fn into_config(self) -> Result<BuildConfig, ProbeError> {
        let mut cfg = match &self.config {
            Some(p) => BuildConfig::from_json_file(p)?,
            None => BuildConfig::new(
                self.out
                    .clone()
                    .ok_or_else(|| ProbeError::Config("--out is required".into()))?,
            ),
        };
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        if self.bird.is_some() {
            cfg.bird = self.bird;
        }
        if self.ppdb.is_some() {
            cfg.ppdb = self.ppdb;
        }
        if self.phrase_pool.is_some() {
            cfg.phrase_pool = self.phrase_pool;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if self.max_pairs.is_some() {
            cfg.max_pairs = self.max_pairs;
        }
        if let Some(v) = self.negatives {
            cfg.negatives = v;
        }
        if let Some(v) = self.controlled_negatives {
            cfg.controlled_negatives = v;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct AnalyzeArgs {
    /// JSON file with the run configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Embedding dump; repeat to merge several.
    #[arg(long = "dump")]
    dumps: Vec<PathBuf>,
    /// Similarity dataset (JSON lines from build-dataset).
    #[arg(long)]
    similarity: Option<PathBuf>,
    /// Paraphrase dataset (JSON lines from build-dataset).
    #[arg(long)]
    paraphrase: Option<PathBuf>,
    /// Landmark items (JSON lines).
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// full, abba or overlap50.
    #[arg(long)]
    subset: Option<Subset>,
    /// Comma-separated representation types.
    #[arg(long, value_delimiter = ',')]
    reprs: Option<Vec<ReprType>>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Split without keeping the label ratio.
    #[arg(long)]
    no_stratify: bool,
    /// Keep each source phrase on one side of the split.
    #[arg(long)]
    group_by_source: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    /// Standardise classifier inputs with training-set statistics.
    #[arg(long)]
    standardize: bool,
    /// Worker threads for grid cells.
    #[arg(long)]
    workers: Option<usize>,
    /// Write every cell's classifier parameters.
    #[arg(long)]
    save_models: bool,
}

impl AnalyzeArgs {
    fn into_config(self) -> Result<RunConfig, ProbeError> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::new(
                Vec::new(),
                self.out
                    .clone()
                    .ok_or_else(|| ProbeError::Config("--out is required".into()))?,
            ),
        };
        if !self.dumps.is_empty() {
            cfg.dumps = self.dumps;
        }
        if let Some(v) = self.out {
            cfg.output_dir = v;
        }
        if self.similarity.is_some() {
            cfg.similarity = self.similarity;
        }
        if self.paraphrase.is_some() {
            cfg.paraphrase = self.paraphrase;
        }
        if self.landmarks.is_some() {
            cfg.landmarks = self.landmarks;
        }
        if let Some(v) = self.subset {
            cfg.subset = v;
        }
        if let Some(v) = self.reprs {
            cfg.reprs = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.test_fraction {
            cfg.test_fraction = v;
        }
        if self.no_stratify {
            cfg.stratify = false;
        }
        if self.group_by_source {
            cfg.group_by_source = true;
        }
        if let Some(v) = self.epochs {
            cfg.train.epochs = v;
        }
        if let Some(v) = self.batch_size {
            cfg.train.batch_size = v;
        }
        if let Some(v) = self.learning_rate {
            cfg.train.learning_rate = v;
        }
        if let Some(v) = self.hidden {
            cfg.train.hidden = v;
        }
        if self.standardize {
            cfg.train.standardize = true;
        }
        if self.workers.is_some() {
            cfg.workers = self.workers;
        }
        if self.save_models {
            cfg.save_models = true;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct CompareArgs {
    /// JSON report over the full set.
    full: PathBuf,
    /// JSON report over the controlled set.
    controlled: PathBuf,
    /// Output stem; writes <stem>.csv and <stem>.json.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    dump: PathBuf,
}

/// Exit status when validate-dump finds diagnostics.
const EXIT_INVALID: u8 = 2;

fn print_json(value: &impl serde::Serialize) -> Result<(), ProbeError> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode, ProbeError> {
    match cli.command {
        Command::BuildDataset(args) => {
            let stats = cmd_build_dataset(&args.into_config()?)?;
            print_json(&stats)?;
        }
        Command::Analyze(args) => {
            let outputs = cmd_analyze(&args.into_config()?)?;
            print_json(&outputs)?;
        }
        Command::Compare(args) => {
            let report = cmd_compare(&args.full, &args.controlled, args.out.as_deref())?;
            match args.out {
                Some(_) => print_json(&report.table.summary)?,
                None => print!("{}", report.table.to_csv()),
            }
        }
        Command::ValidateDump(args) => {
            let report = cmd_validate_dump(&args.dump)?;
            print_json(&report)?;
            if !report.is_valid() {
                return Ok(ExitCode::from(EXIT_INVALID));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            let report = serde_json::json!({ "error": e.kind(), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}
