//! Landmark sense-selection test: does a phrase lie closer to the landmark
//! word of its contextually selected sense than to the other landmark?

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{phrase_text, read_lines, tokenize};
use crate::error::{ProbeError, Result};
use crate::grid::{cell_coords, fmt_opt, MetricCell, MetricGrid};
use crate::pooling::{pool, ReprType};
use crate::resolve::Resolver;
use crate::similarity::{cosine, warn_head_fallback};
use crate::store::{Dump, Role};

/// Cosine differences within this band leave an item undecided.
pub const UNDECIDED_EPSILON: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LandmarkItem {
    pub item_id: String,
    pub phrase: Vec<String>,
    pub positive: String,
    pub negative: String,
}

impl LandmarkItem {
    pub fn new(item_id: &str, phrase: &str, positive: &str, negative: &str) -> Result<Self> {
        let item = Self {
            item_id: item_id.to_string(),
            phrase: tokenize(phrase),
            positive: positive.trim().to_lowercase(),
            negative: negative.trim().to_lowercase(),
        };
        item.check()?;
        Ok(item)
    }

    fn check(&self) -> Result<()> {
        let bad = |message: &str| {
            Err(ProbeError::InvalidItem {
                item_id: self.item_id.clone(),
                message: message.into(),
            })
        };
        if self.phrase.len() < 2 {
            return bad("phrase needs at least two words");
        }
        if self.positive.is_empty() || self.negative.is_empty() {
            return bad("empty landmark");
        }
        if self.positive == self.negative {
            return bad("positive and negative landmarks are identical");
        }
        Ok(())
    }

    /// The same item with its landmarks exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            positive: self.negative.clone(),
            negative: self.positive.clone(),
            ..self.clone()
        }
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawItem {
    item_id: Option<String>,
    phrase: String,
    pos: String,
    neg: String,
}

/// Parse JSON-lines `{item_id?, phrase, pos, neg}`; items without an id are
/// numbered by line.
pub fn parse_landmark_items(lines: &[String]) -> Result<Vec<LandmarkItem>> {
    let mut items = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in lines.iter().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawItem = serde_json::from_str(line).map_err(|e| ProbeError::Manifest {
            line: line_no,
            message: e.to_string(),
        })?;
        let id = raw
            .item_id
            .unwrap_or_else(|| format!("landmark-{line_no:03}"));
        if !seen.insert(id.clone()) {
            return Err(ProbeError::DuplicateItem(id));
        }
        items.push(LandmarkItem::new(&id, &raw.phrase, &raw.pos, &raw.neg)?);
    }
    Ok(items)
}

pub fn load_landmark_items(path: &Path) -> Result<Vec<LandmarkItem>> {
    parse_landmark_items(&read_lines(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkCell {
    pub layer: usize,
    pub repr: ReprType,
    /// Correct over decided items; `None` when nothing was decided.
    pub fraction: Option<f64>,
    pub n_decided: usize,
    pub n_undecided: usize,
    /// Every item undecided, so the layer carries no signal.
    pub missing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarkGrid {
    pub num_layers: usize,
    pub reprs: Vec<ReprType>,
    pub cells: Vec<LandmarkCell>,
}

impl LandmarkGrid {
    pub fn get(&self, layer: usize, repr: ReprType) -> Option<&LandmarkCell> {
        let col = self.reprs.iter().position(|&r| r == repr)?;
        self.cells.get(layer * self.reprs.len() + col)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,repr,fraction,n_decided,n_undecided\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.layer,
                c.repr,
                fmt_opt(c.fraction),
                c.n_decided,
                c.n_undecided
            );
        }
        out
    }

    pub fn to_metric_grid(&self) -> MetricGrid {
        MetricGrid {
            metric: "landmark_fraction".into(),
            num_layers: self.num_layers,
            reprs: self.reprs.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| MetricCell {
                    layer: c.layer,
                    repr: c.repr,
                    value: c.fraction,
                    reason: c.reason.clone(),
                })
                .collect(),
        }
    }
}

/// Record ids of (phrase, positive landmark, negative landmark).
type Triple = (u64, u64, u64);

fn resolve_items(dump: &Dump, items: &[LandmarkItem]) -> Result<Vec<Triple>> {
    let resolver = Resolver::new(dump);
    let mut triples = Vec::new();
    let mut missing = Vec::new();
    for item in items {
        let text = phrase_text(&item.phrase);
        let p = resolver.phrase(&item.item_id, Role::LandmarkPhrase, &text);
        let pos = resolver.word(&item.positive);
        let neg = resolver.word(&item.negative);
        if p.is_none() {
            missing.push(format!("{}/landmark-phrase {text:?}", item.item_id));
        }
        if pos.is_none() {
            missing.push(format!(
                "{}/landmark-word {:?}",
                item.item_id, item.positive
            ));
        }
        if neg.is_none() {
            missing.push(format!(
                "{}/landmark-word {:?}",
                item.item_id, item.negative
            ));
        }
        if let (Some(p), Some(pos), Some(neg)) = (p, pos, neg) {
            triples.push((p, pos, neg));
        }
    }
    if !missing.is_empty() {
        return Err(ProbeError::Unresolved(missing));
    }
    Ok(triples)
}

/// `Some(true)` correct, `Some(false)` wrong, `None` undecided.
fn judge(dump: &Dump, (p, pos, neg): Triple, layer: usize, repr: ReprType) -> Result<Option<bool>> {
    let vec = |id: u64| -> Result<Vec<f32>> {
        let view = dump
            .view(id)
            .ok_or_else(|| ProbeError::Unresolved(vec![format!("record {id}")]))?;
        Ok(pool(&view, layer, repr)?.values)
    };
    let phrase = vec(p)?;
    let diff = cosine(&phrase, &vec(pos)?)? - cosine(&phrase, &vec(neg)?)?;
    Ok(if diff.abs() <= UNDECIDED_EPSILON {
        None
    } else {
        Some(diff > 0.0)
    })
}

fn landmark_cell(dump: &Dump, triples: &[Triple], layer: usize, repr: ReprType) -> LandmarkCell {
    let mut cell = LandmarkCell {
        layer,
        repr,
        fraction: None,
        n_decided: 0,
        n_undecided: 0,
        missing: false,
        reason: None,
    };
    let mut correct = 0usize;
    for &t in triples {
        match judge(dump, t, layer, repr) {
            Ok(Some(ok)) => {
                cell.n_decided += 1;
                correct += ok as usize;
            }
            Ok(None) => cell.n_undecided += 1,
            Err(e) => {
                log::warn!("landmark layer {layer} {repr} undefined: {e}");
                cell.reason = Some(e.to_string());
                cell.n_decided = 0;
                cell.n_undecided = triples.len();
                cell.missing = true;
                return cell;
            }
        }
    }
    if cell.n_decided > 0 {
        cell.fraction = Some(correct as f64 / cell.n_decided as f64);
    } else {
        cell.missing = true;
        cell.reason = Some("all items undecided".into());
    }
    cell
}

/// Fraction of items whose phrase is closer to the positive landmark, per
/// (layer, repr). Landmark words are pooled with the same representation.
pub fn landmark_eval(
    dump: &Dump,
    items: &[LandmarkItem],
    reprs: &[ReprType],
) -> Result<LandmarkGrid> {
    let triples = resolve_items(dump, items)?;
    warn_head_fallback(dump, triples.iter().flat_map(|&(a, b, c)| [a, b, c]), reprs);
    let cells = cell_coords(dump.num_layers(), reprs)
        .into_par_iter()
        .map(|(layer, repr)| landmark_cell(dump, &triples, layer, repr))
        .collect();
    Ok(LandmarkGrid {
        num_layers: dump.num_layers(),
        reprs: reprs.to_vec(),
        cells,
    })
}
