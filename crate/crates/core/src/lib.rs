//! Layerwise probing of contextual phrase representations.
//!
//! Embedding dumps produced by an external extractor are read through
//! [`store`]; [`dataset`] builds the similarity, paraphrase and controlled
//! evaluation sets; [`pooling`] turns token embeddings into phrase vectors;
//! [`similarity`], [`classifier`] and [`landmark`] run the three analyses over
//! every (layer, representation) cell; [`pipeline`] ties them into reports.

pub mod classifier;
pub mod dataset;
pub mod error;
pub mod grid;
pub mod landmark;
pub mod pipeline;
pub mod pooling;
pub mod resolve;
pub mod similarity;
pub mod store;
pub mod synthetic;

pub use classifier::{
    classification_sweep, evaluate, forward, gradient_check, train, ClassificationGrid,
    ClassifierModel, PairFeature, TrainConfig,
};
pub use dataset::{Label, ParaphraseItem, SimilarityItem, SplitSpec, Subset};
pub use error::{ProbeError, Result};
pub use grid::{compare_grids, DeltaTable, MetricGrid};
pub use landmark::{landmark_eval, load_landmark_items, LandmarkGrid, LandmarkItem};
pub use pooling::{pool, PooledVector, ReprType};
pub use similarity::{correlation_sweep, cosine, pearson, CorrelationGrid};
pub use store::{
    read_dump, validate_dump, write_dump, Dump, DumpHeader, DumpManifest, ManifestEntry,
    SequenceRecord,
};
