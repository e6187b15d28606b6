//! Label-assignment summaries for annotated scans.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::HarnessConfig;
use crate::error::{Error, Result};
use crate::io::read_annotations;
use crate::matching::{
    assign_labels, ohem_budget, ohem_refine, positive_cells_of, LabelCounts, NoduleAnnotation,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoduleCells {
    pub id: String,
    pub center: [f64; 3],
    pub radius: f64,
    /// Positive cells as `[x, y, z]`, ascending linear index.
    pub cells: Vec<[usize; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanAssignment {
    pub scan_id: String,
    /// Counts before hard-negative mining.
    pub initial: LabelCounts,
    /// Counts after hard-negative mining.
    pub counts: LabelCounts,
    pub ohem_budget: usize,
    pub nodules: Vec<NoduleCells>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssignSummary {
    pub config: HarnessConfig,
    pub scans: Vec<ScanAssignment>,
}

/// Runs the matcher and hard-negative mining on one scan. Without a loss
/// map every negative has loss zero, so the lowest-index negatives are kept.
pub fn assign_scan(
    scan_id: &str,
    nodules: &[NoduleAnnotation],
    config: &HarnessConfig,
    cell_loss: Option<&[f64]>,
) -> Result<ScanAssignment> {
    let grid = &config.grid;
    let initial = assign_labels(grid, nodules, config.k)?;
    let zeros;
    let loss = match cell_loss {
        Some(l) => l,
        None => {
            zeros = vec![0.0; grid.cell_count()];
            &zeros
        }
    };
    let refined = ohem_refine(&initial, loss, config.n)?;
    let nodules = nodules
        .iter()
        .enumerate()
        .map(|(i, n)| NoduleCells {
            id: n.id.clone(),
            center: n.center.to_array(),
            radius: n.radius,
            cells: positive_cells_of(&refined, i)
                .iter()
                .map(|c| [c.x, c.y, c.z])
                .collect(),
        })
        .collect();
    Ok(ScanAssignment {
        scan_id: scan_id.to_string(),
        initial: initial.counts(),
        counts: refined.counts(),
        ohem_budget: ohem_budget(initial.positive_count(), config.n),
        nodules,
    })
}

/// Per-scan loss maps from a JSON object `{scan_id: [loss per cell]}`.
pub fn read_loss_map(path: &Path) -> Result<BTreeMap<String, Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

/// Summarizes every scan of an annotation file. An empty file yields one
/// scan with an empty id and no nodules.
pub fn run_assign(
    annotations: &Path,
    loss_map: Option<&Path>,
    config: &HarnessConfig,
) -> Result<AssignSummary> {
    let mut scans = read_annotations(annotations)?;
    if scans.is_empty() {
        scans.insert(String::new(), Vec::new());
    }
    let losses = loss_map.map(read_loss_map).transpose()?.unwrap_or_default();
    let cells = config.grid.cell_count();
    let mut out = Vec::with_capacity(scans.len());
    for (scan, nodules) in &scans {
        let loss = losses.get(scan).map(Vec::as_slice);
        if let Some(l) = loss {
            if l.len() != cells {
                return Err(Error::ShapeMismatch {
                    expected: cells,
                    actual: l.len(),
                });
            }
        }
        out.push(assign_scan(scan, nodules, config, loss)?);
    }
    Ok(AssignSummary {
        config: config.clone(),
        scans: out,
    })
}
