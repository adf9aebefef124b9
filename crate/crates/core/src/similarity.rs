//! Cosine similarity of pooled phrase pairs and its Pearson correlation with
//! human ratings, per layer and representation.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{phrase_text, SimilarityItem};
use crate::error::{ProbeError, Result};
use crate::grid::{cell_coords, fmt_opt, MetricCell, MetricGrid};
use crate::pooling::{head_word_fallback, pool_pair, ReprType};
use crate::resolve::Resolver;
use crate::store::Dump;

/// Cosine similarity accumulated in double precision, clamped to [-1, 1].
pub fn cosine<T: Copy + Into<f64>>(u: &[T], v: &[T]) -> Result<f64> {
    if u.len() != v.len() {
        return Err(ProbeError::DimensionMismatch {
            left: u.len(),
            right: v.len(),
        });
    }
    let (mut dot, mut uu, mut vv) = (0f64, 0f64, 0f64);
    for (&a, &b) in u.iter().zip(v) {
        let (a, b) = (a.into(), b.into());
        dot += a * b;
        uu += a * a;
        vv += b * b;
    }
    if uu == 0.0 || vv == 0.0 {
        return Err(ProbeError::ZeroNorm);
    }
    Ok((dot / (uu.sqrt() * vv.sqrt())).clamp(-1.0, 1.0))
}

fn is_constant(xs: &[f64]) -> bool {
    let (lo, hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    hi - lo <= 1e-12 * hi.abs().max(lo.abs()).max(1.0)
}

/// Product-moment correlation in double precision.
///
/// Inputs whose spread is below `1e-12` (relative) count as constant and
/// yield [`ProbeError::Degenerate`].
pub fn pearson(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() {
        return Err(ProbeError::DimensionMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(ProbeError::TooFewItems {
            needed: 2,
            got: xs.len(),
        });
    }
    if is_constant(xs) || is_constant(ys) {
        return Err(ProbeError::Degenerate("constant input to pearson".into()));
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0f64, 0f64, 0f64);
    for (&x, &y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub layer: usize,
    pub repr: ReprType,
    pub n: usize,
    /// `None` marks an undefined cell.
    pub r: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationGrid {
    pub num_layers: usize,
    pub reprs: Vec<ReprType>,
    pub cells: Vec<CorrelationCell>,
}

impl CorrelationGrid {
    pub fn get(&self, layer: usize, repr: ReprType) -> Option<&CorrelationCell> {
        let col = self.reprs.iter().position(|&r| r == repr)?;
        self.cells.get(layer * self.reprs.len() + col)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,repr,n,r\n");
        for c in &self.cells {
            let _ = writeln!(out, "{},{},{},{}", c.layer, c.repr, c.n, fmt_opt(c.r));
        }
        out
    }

    pub fn to_metric_grid(&self) -> MetricGrid {
        MetricGrid {
            metric: "pearson_r".into(),
            num_layers: self.num_layers,
            reprs: self.reprs.clone(),
            cells: self
                .cells
                .iter()
                .map(|c| MetricCell {
                    layer: c.layer,
                    repr: c.repr,
                    value: c.r,
                    reason: c.reason.clone(),
                })
                .collect(),
        }
    }
}

/// Resolve every item to its (source, target) records, failing with the
/// full list of anything missing.
pub(crate) fn resolve_pairs<'a, I>(dump: &Dump, items: I) -> Result<Vec<(u64, u64)>>
where
    I: IntoIterator<Item = (&'a str, &'a [String], &'a [String])>,
{
    let resolver = Resolver::new(dump);
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for (id, src, trg) in items {
        match resolver.pair(id, &phrase_text(src), &phrase_text(trg)) {
            Ok(p) => pairs.push(p),
            Err(m) => missing.extend(m),
        }
    }
    if !missing.is_empty() {
        return Err(ProbeError::Unresolved(missing));
    }
    Ok(pairs)
}

pub(crate) fn warn_head_fallback(dump: &Dump, ids: impl Iterator<Item = u64>, reprs: &[ReprType]) {
    if !reprs.contains(&ReprType::HeadWord) {
        return;
    }
    let n = ids
        .filter(|&id| dump.view(id).is_some_and(|v| head_word_fallback(&v)))
        .count();
    if n > 0 {
        log::warn!("{n} records carry no final-word sub-span; head-word uses the last span token");
    }
}

fn correlation_cell(
    dump: &Dump,
    pairs: &[(u64, u64)],
    scores: &[f64],
    layer: usize,
    repr: ReprType,
) -> std::result::Result<f64, String> {
    let mut cosines = Vec::with_capacity(pairs.len());
    for &(s, t) in pairs {
        let (sv, tv) = (dump.view(s).unwrap(), dump.view(t).unwrap());
        let (p, q) = pool_pair(&sv, &tv, layer, repr).map_err(|e| e.to_string())?;
        let c = cosine(&p.values, &q.values).map_err(|e| format!("records {s}/{t}: {e}"))?;
        cosines.push(c);
    }
    pearson(&cosines, scores).map_err(|e| e.to_string())
}

/// Correlate pair cosines with human scores in every (layer, repr) cell.
///
/// Cells whose statistic cannot be computed (missing special token, zero
/// vector, constant cosines) are undefined with a logged reason.
pub fn correlation_sweep(
    dump: &Dump,
    items: &[SimilarityItem],
    reprs: &[ReprType],
) -> Result<CorrelationGrid> {
    let pairs = resolve_pairs(
        dump,
        items
            .iter()
            .map(|i| (i.item_id.as_str(), i.source.as_slice(), i.target.as_slice())),
    )?;
    warn_head_fallback(dump, pairs.iter().flat_map(|&(s, t)| [s, t]), reprs);
    let scores: Vec<f64> = items.iter().map(|i| i.score).collect();
    let n = items.len();
    let cells = cell_coords(dump.num_layers(), reprs)
        .into_par_iter()
        .map(|(layer, repr)| {
            let (r, reason) = match correlation_cell(dump, &pairs, &scores, layer, repr) {
                Ok(r) => (Some(r), None),
                Err(why) => {
                    log::warn!("correlation layer {layer} {repr} undefined: {why}");
                    (None, Some(why))
                }
            };
            CorrelationCell {
                layer,
                repr,
                n,
                r,
                reason,
            }
        })
        .collect();
    Ok(CorrelationGrid {
        num_layers: dump.num_layers(),
        reprs: reprs.to_vec(),
        cells,
    })
}
