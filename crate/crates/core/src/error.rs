use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, ProbeError>;

/// Every failure the analysis library can report.
///
/// Variants raised while decoding a dump carry the byte offset at which the
/// problem was detected so that a corrupt file can be inspected directly.
#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("bad magic at byte 0: expected \"PHRPROBE\", found {found:?}")]
    BadMagic { found: String },

    #[error("unsupported format version {version} at byte {offset}")]
    UnsupportedVersion { offset: u64, version: u32 },

    #[error("truncated payload at byte {offset} in {what}: needed {needed} more bytes")]
    Truncated {
        offset: u64,
        what: String,
        needed: u64,
    },

    #[error("{count} trailing bytes after the last record at byte {offset}")]
    TrailingBytes { offset: u64, count: u64 },

    #[error("record {record_id} at byte {offset}: {message}")]
    InvalidRecord {
        offset: u64,
        record_id: u64,
        message: String,
    },

    #[error("invalid dump header: {0}")]
    InvalidHeader(String),

    #[error("non-finite value in record {record_id} at layer {layer}, token {token}, dim {dim}")]
    NonFinite {
        record_id: u64,
        layer: usize,
        token: usize,
        dim: usize,
    },

    #[error("manifest error at line {line}: {message}")]
    Manifest { line: usize, message: String },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("empty phrase")]
    EmptyPhrase,

    #[error("pool exhausted while sampling negatives for source {source_phrase:?}: needed {needed}, found {available}")]
    PoolExhausted {
        source_phrase: String,
        needed: usize,
        available: usize,
    },

    #[error("too few items: need at least {needed}, got {got}")]
    TooFewItems { needed: usize, got: usize },

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("zero-norm vector")]
    ZeroNorm,

    #[error("degenerate statistic: {0}")]
    Degenerate(String),

    #[error("record {record_id} has no {token} token")]
    MissingSpecialToken { record_id: u64, token: &'static str },

    #[error("layer {layer} out of range (dump has {num_layers} layers)")]
    LayerOutOfRange { layer: usize, num_layers: usize },

    #[error("training data has no {0} examples")]
    MissingClass(&'static str),

    #[error("unresolved items: {}", .0.join(", "))]
    Unresolved(Vec<String>),

    #[error("duplicate item id {0:?}")]
    DuplicateItem(String),

    #[error("invalid item {item_id:?}: {message}")]
    InvalidItem { item_id: String, message: String },

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl ProbeError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ProbeError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable tag used by the CLI error report.
    pub fn kind(&self) -> &'static str {
        match self {
            ProbeError::Io { .. } => "io",
            ProbeError::BadMagic { .. } => "bad_magic",
            ProbeError::UnsupportedVersion { .. } => "unsupported_version",
            ProbeError::Truncated { .. } => "truncated",
            ProbeError::TrailingBytes { .. } => "trailing_bytes",
            ProbeError::InvalidRecord { .. } => "invalid_record",
            ProbeError::InvalidHeader(_) => "invalid_header",
            ProbeError::NonFinite { .. } => "non_finite",
            ProbeError::Manifest { .. } => "manifest",
            ProbeError::Parse { .. } => "parse",
            ProbeError::EmptyPhrase => "empty_phrase",
            ProbeError::PoolExhausted { .. } => "pool_exhausted",
            ProbeError::TooFewItems { .. } => "too_few_items",
            ProbeError::DimensionMismatch { .. } => "dimension_mismatch",
            ProbeError::ZeroNorm => "zero_norm",
            ProbeError::Degenerate(_) => "degenerate",
            ProbeError::MissingSpecialToken { .. } => "missing_special_token",
            ProbeError::LayerOutOfRange { .. } => "layer_out_of_range",
            ProbeError::MissingClass(_) => "missing_class",
            ProbeError::Unresolved(_) => "unresolved",
            ProbeError::DuplicateItem(_) => "duplicate_item",
            ProbeError::InvalidItem { .. } => "invalid_item",
            ProbeError::ShapeMismatch(_) => "shape_mismatch",
            ProbeError::Config(_) => "config",
            ProbeError::Json(_) => "json",
        }
    }
}
