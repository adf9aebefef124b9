//! Phrase representations built from one layer of a record's token
//! embeddings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::store::RecordView;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReprType {
    /// The CLS token, wherever the model places it.
    Cls,
    /// The phrase's final word.
    HeadWord,
    /// Mean over the phrase span.
    AvgPhrase,
    /// Mean over every token of the sequence.
    AvgAll,
    /// The SEP token.
    Sep,
}

impl ReprType {
    pub const ALL: [ReprType; 5] = [
        ReprType::Cls,
        ReprType::HeadWord,
        ReprType::AvgPhrase,
        ReprType::AvgAll,
        ReprType::Sep,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ReprType::Cls => "cls",
            ReprType::HeadWord => "head-word",
            ReprType::AvgPhrase => "avg-phrase",
            ReprType::AvgAll => "avg-all",
            ReprType::Sep => "sep",
        }
    }
}

impl fmt::Display for ReprType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ReprType {
    type Err = ProbeError;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_lowercase().replace('_', "-");
        ReprType::ALL
            .into_iter()
            .find(|r| r.as_str() == norm || r.as_str().replace('-', "") == norm)
            .ok_or_else(|| ProbeError::Config(format!("unknown representation type {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub record_id: u64,
    pub layer: usize,
    pub repr: ReprType,
    pub values: Vec<f32>,
}

/// True when HeadWord pooling of this record falls back to the last span
/// token because the manifest carries no final-word sub-span.
pub fn head_word_fallback(view: &RecordView<'_>) -> bool {
    view.head_span.is_none()
}

fn mean_of_tokens(
    view: &RecordView<'_>,
    layer: usize,
    tokens: impl Iterator<Item = usize>,
) -> Vec<f32> {
    let d = view.hidden_dim;
    let mut acc = vec![0f64; d];
    let mut count = 0usize;
    for t in tokens {
        for (a, &v) in acc.iter_mut().zip(view.token(layer, t)) {
            *a += v as f64;
        }
        count += 1;
    }
    let n = count as f64;
    acc.into_iter().map(|a| (a / n) as f32).collect()
}

/// Pool one layer of a record into a phrase vector.
///
/// Means are accumulated in double precision and stored as `f32`. HeadWord
/// averages the final word's sub-tokens when the manifest provides their
/// span and otherwise uses the last token of the phrase span.
pub fn pool(view: &RecordView<'_>, layer: usize, repr: ReprType) -> Result<PooledVector> {
    let rec = view.record;
    if layer >= view.num_layers {
        return Err(ProbeError::LayerOutOfRange {
            layer,
            num_layers: view.num_layers,
        });
    }
    let (a, b) = (rec.span_start as usize, rec.span_end as usize);
    let t = rec.num_tokens as usize;
    if a > b || b >= t {
        return Err(ProbeError::InvalidRecord {
            offset: 0,
            record_id: rec.record_id,
            message: format!("span [{a}, {b}] invalid for {t} tokens"),
        });
    }
    let values = match repr {
        ReprType::Cls => {
            let pos = rec
                .cls()
                .filter(|&p| p < t)
                .ok_or(ProbeError::MissingSpecialToken {
                    record_id: rec.record_id,
                    token: "CLS",
                })?;
            view.token(layer, pos).to_vec()
        }
        ReprType::Sep => {
            let pos = rec
                .sep()
                .filter(|&p| p < t)
                .ok_or(ProbeError::MissingSpecialToken {
                    record_id: rec.record_id,
                    token: "SEP",
                })?;
            view.token(layer, pos).to_vec()
        }
        ReprType::HeadWord => match view.head_span {
            Some(hs) if hs.start <= hs.end && (hs.end as usize) < t => {
                mean_of_tokens(view, layer, hs.start as usize..=hs.end as usize)
            }
            _ => view.token(layer, b).to_vec(),
        },
        ReprType::AvgPhrase => mean_of_tokens(view, layer, a..=b),
        ReprType::AvgAll => mean_of_tokens(view, layer, 0..t),
    };
    Ok(PooledVector {
        record_id: rec.record_id,
        layer,
        repr,
        values,
    })
}

/// Pool a source and a target record with the same settings.
pub fn pool_pair(
    src: &RecordView<'_>,
    trg: &RecordView<'_>,
    layer: usize,
    repr: ReprType,
) -> Result<(PooledVector, PooledVector)> {
    if src.hidden_dim != trg.hidden_dim {
        return Err(ProbeError::DimensionMismatch {
            left: src.hidden_dim,
            right: trg.hidden_dim,
        });
    }
    Ok((pool(src, layer, repr)?, pool(trg, layer, repr)?))
}
