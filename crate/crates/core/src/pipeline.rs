//! End-to-end runs: dataset building, the three analyses over one or more
//! dumps, grid comparison and dump validation. Every report is a pure
//! function of its inputs and configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{classification_sweep_with_models, TrainConfig};
use crate::dataset::{
    build_classification_set, clean_ppdb, filter_abba, filter_overlap_50, is_abba, load_bird,
    load_phrase_pool, load_ppdb, paraphrase_items, read_jsonl, similarity_items, split_train_test,
    to_jsonl, ClassificationSetConfig, DatasetRecord, DropReason, NegativeSampling, SplitSpec,
    Subset,
};
use crate::error::{ProbeError, Result};
use crate::grid::{compare_grids, DeltaTable, MetricGrid};
use crate::landmark::{landmark_eval, load_landmark_items};
use crate::pooling::ReprType;
use crate::similarity::correlation_sweep;
use crate::store::{
    manifest_path, read_dump, read_dump_lenient, validate_dump, Diagnostic, Dump, DumpHeader,
};

pub const TOOL_NAME: &str = "phrprobe";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

pub const SIMILARITY_FILE: &str = "similarity.jsonl";
pub const PARAPHRASE_FILE: &str = "paraphrase.jsonl";
pub const STATS_FILE: &str = "build_stats.json";

fn default_reprs() -> Vec<ReprType> {
    ReprType::ALL.to_vec()
}

fn default_true() -> bool {
    true
}

fn default_test_fraction() -> f64 {
    0.25
}

fn default_controlled_negatives() -> NegativeSampling {
    NegativeSampling::HalfOverlap
}

fn default_negatives() -> NegativeSampling {
    NegativeSampling::Uniform
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| ProbeError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    std::fs::write(path, contents).map_err(|e| ProbeError::io(path, e))
}

fn to_json_pretty<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(ProbeError::Config(format!(
            "{what} {} does not exist",
            path.display()
        )))
    }
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| ProbeError::io(path, e))
}

/// Hex SHA-256 of a file's bytes.
pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| ProbeError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputChecksum {
    pub path: String,
    pub sha256: String,
}

fn checksum(path: &Path) -> Result<InputChecksum> {
    Ok(InputChecksum {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
    })
}

// ---------------------------------------------------------------- build

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildConfig {
    #[serde(default)]
    pub bird: Option<PathBuf>,
    #[serde(default)]
    pub ppdb: Option<PathBuf>,
    /// Negative pool, one phrase per line; defaults to every phrase of the
    /// cleaned paraphrase pairs.
    #[serde(default)]
    pub phrase_pool: Option<PathBuf>,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Upper bound on full classification pairs.
    #[serde(default)]
    pub max_pairs: Option<usize>,
    #[serde(default = "default_negatives")]
    pub negatives: NegativeSampling,
    /// Sampling used for the overlap-controlled set before filtering.
    #[serde(default = "default_controlled_negatives")]
    pub controlled_negatives: NegativeSampling,
}

impl BuildConfig {
    pub fn new(output_dir: impl Into<PathBuf>) -> Self {
        Self {
            bird: None,
            ppdb: None,
            phrase_pool: None,
            output_dir: output_dir.into(),
            seed: 0,
            max_pairs: None,
            negatives: default_negatives(),
            controlled_negatives: default_controlled_negatives(),
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        read_json(path)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityStats {
    pub full: usize,
    pub abba: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParaphraseStats {
    pub raw_rows: usize,
    pub kept_pairs: usize,
    pub dropped: BTreeMap<DropReason, usize>,
    pub pool_size: usize,
    pub full: usize,
    pub overlap50: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildStats {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub inputs: Vec<InputChecksum>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<SimilarityStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub paraphrase: Option<ParaphraseStats>,
}

fn dedup_phrases(pairs: &[(Vec<String>, Vec<String>)]) -> Vec<Vec<String>> {
    let mut seen = std::collections::HashSet::new();
    pairs
        .iter()
        .flat_map(|(s, t)| [s, t])
        .filter(|p| seen.insert(p.as_slice()))
        .cloned()
        .collect()
}

/// Load, clean and sample the datasets, then write `similarity.jsonl`,
/// `paraphrase.jsonl` and `build_stats.json`. Nothing is written unless
/// every input was processed successfully.
pub fn cmd_build_dataset(config: &BuildConfig) -> Result<BuildStats> {
    if config.bird.is_none() && config.ppdb.is_none() {
        return Err(ProbeError::Config(
            "no similarity or paraphrase input given".into(),
        ));
    }
    let mut inputs = Vec::new();
    let mut outputs: Vec<(PathBuf, String)> = Vec::new();
    let mut stats = BuildStats {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        seed: config.seed,
        inputs: Vec::new(),
        similarity: None,
        paraphrase: None,
    };

    if let Some(path) = &config.bird {
        let items = load_bird(path)?;
        if items.is_empty() {
            return Err(ProbeError::Config(format!(
                "{} holds no items",
                path.display()
            )));
        }
        inputs.push(checksum(path)?);
        let abba = filter_abba(&items).len();
        let records: Vec<DatasetRecord> = items
            .iter()
            .map(|it| {
                it.to_record(if is_abba(it) {
                    Subset::Abba
                } else {
                    Subset::Full
                })
            })
            .collect();
        outputs.push((config.output_dir.join(SIMILARITY_FILE), to_jsonl(&records)?));
        stats.similarity = Some(SimilarityStats {
            full: items.len(),
            abba,
        });
    }

    if let Some(path) = &config.ppdb {
        let raw = load_ppdb(path)?;
        if raw.is_empty() {
            return Err(ProbeError::Config(format!(
                "{} holds no rows",
                path.display()
            )));
        }
        inputs.push(checksum(path)?);
        let cleaned = clean_ppdb(&raw);
        let pool = match &config.phrase_pool {
            Some(p) => {
                inputs.push(checksum(p)?);
                load_phrase_pool(p)?
            }
            None => dedup_phrases(&cleaned.pairs),
        };
        let full = build_classification_set(
            &cleaned.pairs,
            &pool,
            &ClassificationSetConfig {
                seed: config.seed,
                negatives: config.negatives,
                max_pairs: config.max_pairs,
                id_prefix: "ppdb".into(),
            },
        )?;
        let candidates = build_classification_set(
            &cleaned.pairs,
            &pool,
            &ClassificationSetConfig {
                seed: config.seed,
                negatives: config.controlled_negatives,
                max_pairs: None,
                id_prefix: "ppdb50".into(),
            },
        );
        // Sources whose pool holds too few half-overlap negatives cannot be
        // part of the controlled set; retry with only the usable pairs.
        let controlled = match candidates {
            Ok(items) => filter_overlap_50(&items),
            Err(ProbeError::PoolExhausted { .. }) => {
                let halves: Vec<_> = cleaned
                    .pairs
                    .iter()
                    .filter(|(s, t)| crate::dataset::word_overlap(s, t).is_ok_and(|o| o == 0.5))
                    .cloned()
                    .collect();
                controlled_from_halves(&halves, &pool, config)?
            }
            Err(e) => return Err(e),
        };
        let mut records: Vec<DatasetRecord> =
            full.iter().map(|it| it.to_record(Subset::Full)).collect();
        records.extend(controlled.iter().map(|it| it.to_record(Subset::Overlap50)));
        outputs.push((config.output_dir.join(PARAPHRASE_FILE), to_jsonl(&records)?));
        stats.paraphrase = Some(ParaphraseStats {
            raw_rows: raw.len(),
            kept_pairs: cleaned.pairs.len(),
            dropped: cleaned.dropped.clone(),
            pool_size: pool.len(),
            full: full.len(),
            overlap50: controlled.len(),
        });
    }

    stats.inputs = inputs;
    create_dir(&config.output_dir)?;
    for (path, text) in &outputs {
        write_file(path, text.as_bytes())?;
    }
    write_file(
        &config.output_dir.join(STATS_FILE),
        to_json_pretty(&stats)?.as_bytes(),
    )?;
    Ok(stats)
}

/// Controlled set from the half-overlap positives alone, dropping sources
/// the pool cannot balance.
fn controlled_from_halves(
    halves: &[(Vec<String>, Vec<String>)],
    pool: &[Vec<String>],
    config: &BuildConfig,
) -> Result<Vec<crate::dataset::ParaphraseItem>> {
    type Pair = (Vec<String>, Vec<String>);
    let mut by_source: Vec<(Vec<String>, Vec<Pair>)> = Vec::new();
    for pair in halves {
        match by_source.iter_mut().find(|(s, _)| *s == pair.0) {
            Some((_, v)) => v.push(pair.clone()),
            None => by_source.push((pair.0.clone(), vec![pair.clone()])),
        }
    }
    let mut usable = Vec::new();
    for (_, group) in by_source {
        let probe = ClassificationSetConfig {
            seed: config.seed,
            negatives: config.controlled_negatives,
            max_pairs: None,
            id_prefix: "probe".into(),
        };
        if build_classification_set(&group, pool, &probe).is_ok() {
            usable.extend(group);
        } else {
            log::warn!(
                "source {:?} dropped from the controlled set: too few half-overlap negatives",
                group[0].0.join(" ")
            );
        }
    }
    let items = build_classification_set(
        &usable,
        pool,
        &ClassificationSetConfig {
            seed: config.seed,
            negatives: config.controlled_negatives,
            max_pairs: None,
            id_prefix: "ppdb50".into(),
        },
    )?;
    Ok(filter_overlap_50(&items))
}

// -------------------------------------------------------------- analyze

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dumps: Vec<PathBuf>,
    #[serde(default)]
    pub similarity: Option<PathBuf>,
    #[serde(default)]
    pub paraphrase: Option<PathBuf>,
    #[serde(default)]
    pub landmarks: Option<PathBuf>,
    /// `full` or `abba` selects similarity rows, `full` or `overlap50`
    /// paraphrase rows.
    #[serde(default = "default_subset")]
    pub subset: Subset,
    #[serde(default = "default_reprs")]
    pub reprs: Vec<ReprType>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_test_fraction")]
    pub test_fraction: f64,
    #[serde(default = "default_true")]
    pub stratify: bool,
    #[serde(default)]
    pub group_by_source: bool,
    /// Classifier settings; its seed is replaced by the run seed.
    #[serde(default)]
    pub train: TrainConfig,
    /// Worker threads for grid cells; all cores when unset.
    #[serde(default)]
    pub workers: Option<usize>,
    /// Write each cell's trained classifier parameters.
    #[serde(default)]
    pub save_models: bool,
}

fn default_subset() -> Subset {
    Subset::Full
}

impl RunConfig {
    pub fn new(dumps: Vec<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            dumps,
            similarity: None,
            paraphrase: None,
            landmarks: None,
            subset: Subset::Full,
            reprs: default_reprs(),
            seed: 0,
            output_dir: output_dir.into(),
            test_fraction: default_test_fraction(),
            stratify: true,
            group_by_source: false,
            train: TrainConfig::default(),
            workers: None,
            save_models: false,
        }
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        read_json(path)
    }

    fn check(&self) -> Result<()> {
        if self.dumps.is_empty() {
            return Err(ProbeError::Config("no dump given".into()));
        }
        if self.reprs.is_empty() {
            return Err(ProbeError::Config("no representation selected".into()));
        }
        if self.similarity.is_none() && self.paraphrase.is_none() && self.landmarks.is_none() {
            return Err(ProbeError::Config(
                "no dataset given; nothing to analyse".into(),
            ));
        }
        for d in &self.dumps {
            require_file(d, "dump")?;
            require_file(&manifest_path(d), "manifest")?;
        }
        for (p, what) in [
            (&self.similarity, "similarity dataset"),
            (&self.paraphrase, "paraphrase dataset"),
            (&self.landmarks, "landmark items"),
        ] {
            if let Some(p) = p {
                require_file(p, what)?;
            }
        }
        if self.similarity.is_some() && self.subset == Subset::Overlap50 {
            return Err(ProbeError::Config(
                "subset overlap50 has no similarity rows".into(),
            ));
        }
        if self.paraphrase.is_some() && self.subset == Subset::Abba {
            return Err(ProbeError::Config(
                "subset abba has no paraphrase rows".into(),
            ));
        }
        if self.workers == Some(0) {
            return Err(ProbeError::Config("workers must be positive".into()));
        }
        self.train.validate()
    }

    fn train_config(&self) -> TrainConfig {
        TrainConfig {
            seed: self.seed,
            ..self.train.clone()
        }
    }

    fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            seed: self.seed,
            test_fraction: self.test_fraction,
            stratify: self.stratify,
            group_by_source: self.group_by_source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub subset: Subset,
    pub config: RunConfig,
    pub inputs: Vec<InputChecksum>,
}

/// One analysis report as written to JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report<G> {
    pub meta: ReportMeta,
    pub analysis: String,
    pub grid: G,
    pub metric_grid: MetricGrid,
}

/// Paths written by one analyze run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeOutputs {
    pub correlation: Option<(PathBuf, PathBuf)>,
    pub classification: Option<(PathBuf, PathBuf)>,
    pub landmark: Option<(PathBuf, PathBuf)>,
    pub models: Vec<PathBuf>,
}

fn load_dumps(paths: &[PathBuf]) -> Result<Dump> {
    let dumps = paths
        .iter()
        .map(|p| read_dump(p))
        .collect::<Result<Vec<_>>>()?;
    Dump::merge(dumps)
}

/// CSV and JSON paths of one report.
type OutputPair = (PathBuf, PathBuf);
/// File contents held back until every analysis has succeeded.
type PendingFile = (PathBuf, Vec<u8>);

struct Analyses {
    outputs: AnalyzeOutputs,
    files: Vec<PendingFile>,
}

fn report_files<G: Serialize>(
    dir: &Path,
    stem: &str,
    csv: String,
    report: &Report<G>,
) -> Result<(OutputPair, Vec<PendingFile>)> {
    let csv_path = dir.join(format!("{stem}.csv"));
    let json_path = dir.join(format!("{stem}.json"));
    let json = to_json_pretty(report)?;
    Ok((
        (csv_path.clone(), json_path.clone()),
        vec![(csv_path, csv.into_bytes()), (json_path, json.into_bytes())],
    ))
}

fn run_analyses(config: &RunConfig, dump: &Dump, meta: &ReportMeta) -> Result<Analyses> {
    let dir = &config.output_dir;
    let subset = config.subset.as_str();
    let mut out = Analyses {
        outputs: AnalyzeOutputs::default(),
        files: Vec::new(),
    };

    if let Some(path) = &config.similarity {
        let items = similarity_items(&read_jsonl(path)?, config.subset)?;
        if items.is_empty() {
            return Err(ProbeError::TooFewItems { needed: 2, got: 0 });
        }
        log::info!("correlation over {} {subset} pairs", items.len());
        let grid = correlation_sweep(dump, &items, &config.reprs)?;
        let report = Report {
            meta: meta.clone(),
            analysis: "correlation".into(),
            metric_grid: grid.to_metric_grid(),
            grid: grid.clone(),
        };
        let (paths, files) = report_files(
            dir,
            &format!("correlation_{subset}"),
            grid.to_csv(),
            &report,
        )?;
        out.outputs.correlation = Some(paths);
        out.files.extend(files);
    }

    if let Some(path) = &config.paraphrase {
        let items = paraphrase_items(&read_jsonl(path)?, config.subset)?;
        let (train, test) = split_train_test(&items, &config.split_spec())?;
        log::info!(
            "classification over {} {subset} pairs ({} train / {} test)",
            items.len(),
            train.len(),
            test.len()
        );
        let train_cfg = config.train_config();
        let (grid, models) =
            classification_sweep_with_models(dump, &train, &test, &config.reprs, &train_cfg)?;
        if config.save_models {
            for (cell, model) in grid.cells.iter().zip(&models) {
                if let Some(m) = model {
                    let p = dir.join(format!(
                        "model_{subset}_L{:02}_{}.bin",
                        cell.layer, cell.repr
                    ));
                    out.outputs.models.push(p.clone());
                    out.files.push((p, m.params_bytes()));
                }
            }
        }
        let report = Report {
            meta: meta.clone(),
            analysis: "classification".into(),
            metric_grid: grid.to_metric_grid(),
            grid: grid.clone(),
        };
        let (paths, files) = report_files(
            dir,
            &format!("classification_{subset}"),
            grid.to_csv(),
            &report,
        )?;
        out.outputs.classification = Some(paths);
        out.files.extend(files);
    }

    if let Some(path) = &config.landmarks {
        let items = load_landmark_items(path)?;
        let grid = landmark_eval(dump, &items, &config.reprs)?;
        let report = Report {
            meta: meta.clone(),
            analysis: "landmark".into(),
            metric_grid: grid.to_metric_grid(),
            grid: grid.clone(),
        };
        let (paths, files) = report_files(dir, "landmark", grid.to_csv(), &report)?;
        out.outputs.landmark = Some(paths);
        out.files.extend(files);
    }
    Ok(out)
}

/// Run every analysis whose dataset is configured and write its CSV and
/// JSON reports. Reports are written only after all analyses succeed.
pub fn cmd_analyze(config: &RunConfig) -> Result<AnalyzeOutputs> {
    config.check()?;
    let mut inputs = Vec::new();
    for d in &config.dumps {
        inputs.push(checksum(d)?);
        inputs.push(checksum(&manifest_path(d))?);
    }
    for p in [&config.similarity, &config.paraphrase, &config.landmarks]
        .into_iter()
        .flatten()
    {
        inputs.push(checksum(p)?);
    }
    let meta = ReportMeta {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        seed: config.seed,
        subset: config.subset,
        config: config.clone(),
        inputs,
    };
    let dump = load_dumps(&config.dumps)?;

    let analyses = match config.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| ProbeError::Config(format!("worker pool: {e}")))?
            .install(|| run_analyses(config, &dump, &meta))?,
        None => run_analyses(config, &dump, &meta)?,
    };

    create_dir(&config.output_dir)?;
    for (path, bytes) in &analyses.files {
        write_file(path, bytes)?;
    }
    Ok(analyses.outputs)
}

// -------------------------------------------------------------- compare

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ReportGrid {
    analysis: String,
    metric_grid: MetricGrid,
}

/// Metric grid of a JSON report written by [`cmd_analyze`].
pub fn load_metric_grid(path: &Path) -> Result<MetricGrid> {
    let report: ReportGrid = read_json(path)?;
    Ok(report.metric_grid)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub tool: String,
    pub version: String,
    pub full: InputChecksum,
    pub controlled: InputChecksum,
    pub table: DeltaTable,
}

/// Per-cell `full - controlled` of two reports. With `output` set, writes
/// `<output>.csv` and `<output>.json`.
pub fn cmd_compare(full: &Path, controlled: &Path, output: Option<&Path>) -> Result<CompareReport> {
    let table = compare_grids(&load_metric_grid(full)?, &load_metric_grid(controlled)?)?;
    let report = CompareReport {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        full: checksum(full)?,
        controlled: checksum(controlled)?,
        table,
    };
    if let Some(stem) = output {
        if let Some(parent) = stem.parent().filter(|p| !p.as_os_str().is_empty()) {
            create_dir(parent)?;
        }
        write_file(
            &stem.with_extension("csv"),
            report.table.to_csv().as_bytes(),
        )?;
        write_file(
            &stem.with_extension("json"),
            to_json_pretty(&report)?.as_bytes(),
        )?;
    }
    Ok(report)
}

// ------------------------------------------------------------- validate

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub path: String,
    pub header: DumpHeader,
    pub diagnostics: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.diagnostics.is_empty()
    }
}

/// Decode a dump's framing and list every record-level invariant violation.
pub fn cmd_validate_dump(path: &Path) -> Result<ValidationReport> {
    let dump = read_dump_lenient(path)?;
    Ok(ValidationReport {
        path: path.display().to_string(),
        header: *dump.header(),
        diagnostics: validate_dump(&dump),
    })
}
