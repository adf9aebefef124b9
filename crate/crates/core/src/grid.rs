//! Layer x representation grids shared by the three analyses, and the
//! full-versus-controlled comparison.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{ProbeError, Result};
use crate::pooling::ReprType;

/// A single metric per (layer, representation) cell, `None` when undefined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricCell {
    pub layer: usize,
    pub repr: ReprType,
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

/// Cells are stored layer-major: all representations of layer 0, then layer 1, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricGrid {
    pub metric: String,
    pub num_layers: usize,
    pub reprs: Vec<ReprType>,
    pub cells: Vec<MetricCell>,
}

impl MetricGrid {
    pub fn get(&self, layer: usize, repr: ReprType) -> Option<&MetricCell> {
        let col = self.reprs.iter().position(|&r| r == repr)?;
        self.cells.get(layer * self.reprs.len() + col)
    }

    fn check_shape(&self) -> Result<()> {
        if self.cells.len() != self.num_layers * self.reprs.len() {
            return Err(ProbeError::ShapeMismatch(format!(
                "{} cells for {} layers x {} reprs",
                self.cells.len(),
                self.num_layers,
                self.reprs.len()
            )));
        }
        for (i, c) in self.cells.iter().enumerate() {
            let (layer, col) = (i / self.reprs.len(), i % self.reprs.len());
            if c.layer != layer || c.repr != self.reprs[col] {
                return Err(ProbeError::ShapeMismatch(format!(
                    "cell {i} is ({}, {}), expected ({layer}, {})",
                    c.layer, c.repr, self.reprs[col]
                )));
            }
        }
        Ok(())
    }
}

/// Iterate cell coordinates in storage order.
pub fn cell_coords(num_layers: usize, reprs: &[ReprType]) -> Vec<(usize, ReprType)> {
    (0..num_layers)
        .flat_map(|l| reprs.iter().map(move |&r| (l, r)))
        .collect()
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaCell {
    pub layer: usize,
    pub repr: ReprType,
    pub full: Option<f64>,
    pub controlled: Option<f64>,
    /// `full - controlled`; undefined if either side is.
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReprDrop {
    pub repr: ReprType,
    pub max_drop: Option<f64>,
    pub layer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaTable {
    pub metric: String,
    pub cells: Vec<DeltaCell>,
    pub summary: Vec<ReprDrop>,
}

impl DeltaTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("layer,repr,full,controlled,delta\n");
        for c in &self.cells {
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                c.layer,
                c.repr,
                fmt_opt(c.full),
                fmt_opt(c.controlled),
                fmt_opt(c.delta)
            );
        }
        out
    }
}

/// Per-cell `full - controlled`, plus the largest drop per representation.
pub fn compare_grids(full: &MetricGrid, controlled: &MetricGrid) -> Result<DeltaTable> {
    full.check_shape()?;
    controlled.check_shape()?;
    if full.num_layers != controlled.num_layers || full.reprs != controlled.reprs {
        return Err(ProbeError::ShapeMismatch(format!(
            "{} layers x {:?} vs {} layers x {:?}",
            full.num_layers, full.reprs, controlled.num_layers, controlled.reprs
        )));
    }
    let cells: Vec<DeltaCell> = full
        .cells
        .iter()
        .zip(&controlled.cells)
        .map(|(f, c)| DeltaCell {
            layer: f.layer,
            repr: f.repr,
            full: f.value,
            controlled: c.value,
            delta: f.value.zip(c.value).map(|(a, b)| a - b),
        })
        .collect();
    let summary = full
        .reprs
        .iter()
        .map(|&repr| {
            let best = cells
                .iter()
                .filter(|c| c.repr == repr)
                .filter_map(|c| c.delta.map(|d| (d, c.layer)))
                .fold(None, |acc: Option<(f64, usize)>, (d, l)| match acc {
                    Some((bd, _)) if bd >= d => acc,
                    _ => Some((d, l)),
                });
            ReprDrop {
                repr,
                max_drop: best.map(|b| b.0),
                layer: best.map(|b| b.1),
            }
        })
        .collect();
    Ok(DeltaTable {
        metric: full.metric.clone(),
        cells,
        summary,
    })
}
