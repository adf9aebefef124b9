use std::path::Path;

use super::{read_lines, tokenize, SimilarityItem};
use crate::error::{ProbeError, Result};

/// Column positions of a similarity file.
#[derive(Debug, Clone, Copy)]
struct Columns {
    id: Option<usize>,
    source: usize,
    target: usize,
    score: usize,
    width: usize,
}

impl Columns {
    const PLAIN: Columns = Columns {
        id: None,
        source: 0,
        target: 1,
        score: 2,
        width: 3,
    };

    /// Recognise a header row naming the phrase and score columns.
    fn from_header(fields: &[&str]) -> Option<Columns> {
        let names: Vec<String> = fields
            .iter()
            .map(|f| f.trim().trim_start_matches('#').trim().to_lowercase())
            .collect();
        let find = |pred: &dyn Fn(&str) -> bool| names.iter().position(|n| pred(n));
        let source = find(&|n| n == "term1" || n == "source" || n == "phrase1")?;
        let target = find(&|n| n == "term2" || n == "target" || n == "phrase2")?;
        let score = find(&|n| n.contains("score"))?;
        let id = find(&|n| n == "id" || n == "pair id" || n == "pair_id" || n == "pairid");
        Some(Columns {
            id,
            source,
            target,
            score,
            width: fields.len(),
        })
    }
}

/// Parse tab-separated similarity rows.
///
/// Either three bare columns (source, target, score) or a header row naming
/// `term1`/`term2` and a score column, as in the distributed bigram file.
/// Phrases are lowercased and whitespace-tokenised.
pub fn parse_bird(lines: &[String], origin: &str) -> Result<Vec<SimilarityItem>> {
    let err = |line: usize, message: String| ProbeError::Parse {
        path: origin.to_string(),
        line,
        message,
    };
    let mut columns = None;
    let mut items = Vec::new();
    let mut row = 0usize;
    for (i, line) in lines.iter().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let cols = match columns {
            Some(c) => c,
            None => {
                let c = Columns::from_header(&fields);
                columns = Some(c.unwrap_or(Columns::PLAIN));
                if c.is_some() {
                    continue;
                }
                Columns::PLAIN
            }
        };
        if fields.len() != cols.width {
            return Err(err(
                lineno,
                format!("expected {} columns, found {}", cols.width, fields.len()),
            ));
        }
        let raw = fields[cols.score].trim();
        let score: f64 = raw
            .parse()
            .map_err(|_| err(lineno, format!("unparseable score {raw:?}")))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(err(lineno, format!("score {score} outside [0, 1]")));
        }
        let source = tokenize(fields[cols.source]);
        let target = tokenize(fields[cols.target]);
        if source.is_empty() || target.is_empty() {
            return Err(err(lineno, "empty phrase".into()));
        }
        row += 1;
        let item_id = match cols.id {
            Some(c) if !fields[c].trim().is_empty() => format!("bird-{}", fields[c].trim()),
            _ => format!("bird-{row:05}"),
        };
        items.push(SimilarityItem {
            item_id,
            source,
            target,
            score,
        });
    }
    Ok(items)
}

pub fn load_bird(path: &Path) -> Result<Vec<SimilarityItem>> {
    parse_bird(&read_lines(path)?, &path.display().to_string())
}

/// Two distinct words in opposite orders ("law school" / "school law").
pub fn is_abba(item: &SimilarityItem) -> bool {
    let (s, t) = (&item.source, &item.target);
    s.len() == 2 && t.len() == 2 && s[0] == t[1] && s[1] == t[0] && s[0] != s[1]
}

/// Keep only the reversed-bigram pairs.
pub fn filter_abba(items: &[SimilarityItem]) -> Vec<SimilarityItem> {
    items.iter().filter(|i| is_abba(i)).cloned().collect()
}
