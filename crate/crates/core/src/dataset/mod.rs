//! Similarity and paraphrase datasets: loading, cleanup, controlled subsets
//! and seeded splits.

mod bird;
mod paraphrase;
mod ppdb;
mod split;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};

pub use bird::{filter_abba, is_abba, load_bird, parse_bird};
pub use paraphrase::{
    build_classification_set, filter_overlap_50, ClassificationSetConfig, NegativeSampling,
};
pub use ppdb::{
    classify_pair, clean_ppdb, load_phrase_pool, load_ppdb, parse_ppdb_line, strip_tense,
    CleanedPpdb, DropReason,
};
pub use split::{round_half_up, split_train_test, SplitSpec};

/// Lowercased whitespace tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split_whitespace().map(str::to_lowercase).collect()
}

pub fn phrase_text(words: &[String]) -> String {
    words.join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilarityItem {
    pub item_id: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
    /// Human similarity rating in [0, 1].
    pub score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    /// Output unit of the classifier: 0 negative, 1 positive.
    pub fn index(self) -> usize {
        match self {
            Label::Negative => 0,
            Label::Positive => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PpdbPair,
    SampledNegative,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParaphraseItem {
    pub item_id: String,
    pub source: Vec<String>,
    pub target: Vec<String>,
    pub label: Label,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Subset {
    Full,
    Abba,
    Overlap50,
}

impl Subset {
    pub fn as_str(self) -> &'static str {
        match self {
            Subset::Full => "full",
            Subset::Abba => "abba",
            Subset::Overlap50 => "overlap50",
        }
    }
}

impl std::str::FromStr for Subset {
    type Err = ProbeError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(Subset::Full),
            "abba" => Ok(Subset::Abba),
            "overlap50" => Ok(Subset::Overlap50),
            other => Err(ProbeError::Config(format!("unknown subset {other:?}"))),
        }
    }
}

/// Fraction of shared words: multiset intersection over the longer phrase's
/// length, on lowercased words.
pub fn word_overlap(src: &[String], trg: &[String]) -> Result<f64> {
    let (shared, longest) = overlap_counts(src, trg)?;
    Ok(shared as f64 / longest as f64)
}

/// `(|multiset intersection|, max(|src|, |trg|))`.
pub(crate) fn overlap_counts(src: &[String], trg: &[String]) -> Result<(usize, usize)> {
    if src.is_empty() || trg.is_empty() {
        return Err(ProbeError::EmptyPhrase);
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    for w in src {
        *counts.entry(w.to_lowercase()).or_default() += 1;
    }
    let mut shared = 0;
    for w in trg {
        if let Some(c) = counts.get_mut(&w.to_lowercase()) {
            if *c > 0 {
                *c -= 1;
                shared += 1;
            }
        }
    }
    Ok((shared, src.len().max(trg.len())))
}

/// One line of a dataset JSON-lines file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRecord {
    pub item_id: String,
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<Label>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
    pub subset: Subset,
}

impl SimilarityItem {
    pub fn to_record(&self, subset: Subset) -> DatasetRecord {
        DatasetRecord {
            item_id: self.item_id.clone(),
            source: phrase_text(&self.source),
            target: phrase_text(&self.target),
            score: Some(self.score),
            label: None,
            provenance: None,
            subset,
        }
    }
}

impl ParaphraseItem {
    pub fn to_record(&self, subset: Subset) -> DatasetRecord {
        DatasetRecord {
            item_id: self.item_id.clone(),
            source: phrase_text(&self.source),
            target: phrase_text(&self.target),
            score: None,
            label: Some(self.label),
            provenance: Some(self.provenance),
            subset,
        }
    }
}

pub fn to_jsonl(records: &[DatasetRecord]) -> Result<String> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_jsonl(records: &[DatasetRecord], path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| ProbeError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(to_jsonl(records)?.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| ProbeError::io(path, e))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<DatasetRecord>> {
    let mut out = Vec::new();
    for (i, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: DatasetRecord = serde_json::from_str(line).map_err(|e| ProbeError::Parse {
            path: path.display().to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Whether a row tagged `row` belongs to the selected subset. AB-BA rows are
/// part of the full similarity set; overlap-controlled rows are a separate
/// set.
pub fn subset_selects(selected: Subset, row: Subset) -> bool {
    selected == row || (selected == Subset::Full && row == Subset::Abba)
}

/// Similarity items of a dataset file restricted to a subset.
pub fn similarity_items(records: &[DatasetRecord], subset: Subset) -> Result<Vec<SimilarityItem>> {
    records
        .iter()
        .filter(|r| subset_selects(subset, r.subset))
        .map(|r| {
            let score = r.score.ok_or_else(|| ProbeError::InvalidItem {
                item_id: r.item_id.clone(),
                message: "missing score".into(),
            })?;
            Ok(SimilarityItem {
                item_id: r.item_id.clone(),
                source: tokenize(&r.source),
                target: tokenize(&r.target),
                score,
            })
        })
        .collect()
}

pub fn paraphrase_items(records: &[DatasetRecord], subset: Subset) -> Result<Vec<ParaphraseItem>> {
    records
        .iter()
        .filter(|r| subset_selects(subset, r.subset))
        .map(|r| {
            let label = r.label.ok_or_else(|| ProbeError::InvalidItem {
                item_id: r.item_id.clone(),
                message: "missing label".into(),
            })?;
            Ok(ParaphraseItem {
                item_id: r.item_id.clone(),
                source: tokenize(&r.source),
                target: tokenize(&r.target),
                label,
                provenance: r.provenance.unwrap_or(match label {
                    Label::Positive => Provenance::PpdbPair,
                    Label::Negative => Provenance::SampledNegative,
                }),
            })
        })
        .collect()
}

pub(crate) fn read_lines(path: &Path) -> Result<Vec<String>> {
    let file = File::open(path).map_err(|e| ProbeError::io(path, e))?;
    BufReader::new(file)
        .lines()
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| ProbeError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn overlap_examples() {
        assert_eq!(
            word_overlap(&w("law school"), &w("school law")).unwrap(),
            1.0
        );
        assert_eq!(
            word_overlap(
                &w("communication infrastructure"),
                &w("telecommunications infrastructure")
            )
            .unwrap(),
            0.5
        );
        assert_eq!(
            word_overlap(&w("are crucial"), &w("is absolutely vital")).unwrap(),
            0.0
        );
    }

    #[test]
    fn overlap_is_case_insensitive_and_multiset() {
        let a = vec!["The".to_string(), "the".to_string()];
        assert_eq!(word_overlap(&a, &w("the cat")).unwrap(), 0.5);
        assert_eq!(word_overlap(&a, &w("the the")).unwrap(), 1.0);
    }

    #[test]
    fn overlap_uses_longer_phrase() {
        assert_eq!(
            word_overlap(&w("public service"), &w("service")).unwrap(),
            0.5
        );
        assert!((word_overlap(&w("a b c"), &w("a")).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn overlap_rejects_empty() {
        assert!(matches!(
            word_overlap(&[], &w("x")),
            Err(ProbeError::EmptyPhrase)
        ));
    }

    #[test]
    fn jsonl_round_trip_shape() {
        let item = SimilarityItem {
            item_id: "bird-00001".into(),
            source: w("law school"),
            target: w("school law"),
            score: 0.382,
        };
        let text = to_jsonl(&[item.to_record(Subset::Abba)]).unwrap();
        assert_eq!(
            text,
            "{\"item_id\":\"bird-00001\",\"source\":\"law school\",\"target\":\"school law\",\"score\":0.382,\"subset\":\"abba\"}\n"
        );
    }

    #[test]
    fn subset_selector_filters() {
        let recs = vec![
            SimilarityItem {
                item_id: "a".into(),
                source: w("x y"),
                target: w("y x"),
                score: 0.1,
            }
            .to_record(Subset::Abba),
            SimilarityItem {
                item_id: "b".into(),
                source: w("x y"),
                target: w("z"),
                score: 0.2,
            }
            .to_record(Subset::Full),
        ];
        assert_eq!(similarity_items(&recs, Subset::Full).unwrap().len(), 2);
        assert_eq!(similarity_items(&recs, Subset::Abba).unwrap().len(), 1);
        assert!(paraphrase_items(&recs, Subset::Full).is_err());
    }
}
