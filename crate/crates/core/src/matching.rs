//! Center-points label assignment.
//!
//! For every annotated nodule, in list order:
//!
//! 1. compute the distance from each cell center to the nodule centroid;
//! 2. mark the `K` nearest cells not already taken by an earlier nodule as
//!    positive and match them to the nodule;
//! 3. mark every other cell within `radius + 2R` of the centroid as
//!    ignored (a positive is never demoted).
//!
//! Everything left is negative. [`ohem_refine`] then keeps only the hardest
//! negatives and turns the rest into ignored cells, and
//! [`regression_targets`] fills the radius/offset targets of the positives.
//!
//! Ties are always broken by ascending linear cell index, so identical
//! inputs give identical assignments.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point3, Sphere};
use crate::grid::{Cell, GridSpec};

/// Number of kept negatives when an image has no positives.
pub const OHEM_FLOOR: usize = 100;

/// Ignore-ring margin beyond the nodule radius, in cells.
pub const IGNORE_MARGIN_CELLS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoduleAnnotation {
    pub id: String,
    pub center: Point3,
    pub radius: f64,
}

impl NoduleAnnotation {
    pub fn new(id: impl Into<String>, center: Point3, radius: f64) -> Self {
        Self {
            id: id.into(),
            center,
            radius,
        }
    }

    pub fn sphere(&self) -> Result<Sphere> {
        Sphere::new(self.center, self.radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Positive,
    Negative,
    Ignored,
}

/// Regression target of a positive cell, in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegressionTarget {
    pub radius: f64,
    pub offset: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelCounts {
    pub positive: usize,
    pub negative: usize,
    pub ignored: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelAssignment {
    grid: GridSpec,
    labels: Vec<Label>,
    matched: Vec<Option<usize>>,
    targets: Vec<Option<RegressionTarget>>,
}

impl LabelAssignment {
    /// Every cell carries `label`, nothing matched.
    pub fn uniform(grid: GridSpec, label: Label) -> Self {
        let n = grid.cell_count();
        Self {
            grid,
            labels: vec![label; n],
            matched: vec![None; n],
            targets: vec![None; n],
        }
    }

    /// Assembles an assignment from raw labels and matches.
    ///
    /// `matched` must be `Some` exactly on positive cells.
    pub fn from_parts(
        grid: GridSpec,
        labels: Vec<Label>,
        matched: Vec<Option<usize>>,
    ) -> Result<Self> {
        let expected = grid.cell_count();
        for actual in [labels.len(), matched.len()] {
            if actual != expected {
                return Err(Error::ShapeMismatch { expected, actual });
            }
        }
        for (cell, (label, m)) in labels.iter().zip(&matched).enumerate() {
            match (label, m) {
                (Label::Positive, None) => return Err(Error::MissingMatch { cell }),
                (Label::Negative | Label::Ignored, Some(_)) => {
                    return Err(Error::Config(format!(
                        "non-positive cell {cell} carries a match"
                    )))
                }
                _ => {}
            }
        }
        Ok(Self {
            grid,
            labels,
            matched,
            targets: vec![None; expected],
        })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, cell: usize) -> Label {
        self.labels[cell]
    }

    /// Index (into the nodule list) matched to a positive cell.
    pub fn matched(&self, cell: usize) -> Option<usize> {
        self.matched[cell]
    }

    pub fn target(&self, cell: usize) -> Option<&RegressionTarget> {
        self.targets[cell].as_ref()
    }

    pub fn positive_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.cells_with(Label::Positive)
    }

    pub fn cells_with(&self, label: Label) -> impl Iterator<Item = usize> + '_ {
        self.labels
            .iter()
            .enumerate()
            .filter(move |(_, &l)| l == label)
            .map(|(i, _)| i)
    }

    /// Positive cells matched to nodule `nodule`, ascending.
    pub fn positives_of(&self, nodule: usize) -> Vec<usize> {
        self.positive_cells()
            .filter(|&c| self.matched[c] == Some(nodule))
            .collect()
    }

    pub fn positive_count(&self) -> usize {
        self.positive_cells().count()
    }

    pub fn counts(&self) -> LabelCounts {
        let mut counts = LabelCounts::default();
        for label in &self.labels {
            match label {
                Label::Positive => counts.positive += 1,
                Label::Negative => counts.negative += 1,
                Label::Ignored => counts.ignored += 1,
            }
        }
        counts
    }
}

/// Distance from every cell center to `centroid`, world voxels.
pub fn distance_map(grid: &GridSpec, centroid: Point3) -> Vec<f64> {
    grid.cells()
        .map(|cell| grid.cell_center_world(cell).distance(centroid))
        .collect()
}

fn nearest_first(dist: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| dist[a].total_cmp(&dist[b]).then(a.cmp(&b))
}

/// Steps 1–3 of the matching: positives, ignore rings and provisional negatives.
pub fn assign_labels(
    grid: &GridSpec,
    nodules: &[NoduleAnnotation],
    k: usize,
) -> Result<LabelAssignment> {
    let cells = grid.cell_count();
    if k == 0 || k > cells {
        return Err(Error::TooManyPositives { k, cells });
    }
    let mut out = LabelAssignment::uniform(*grid, Label::Negative);
    let margin = IGNORE_MARGIN_CELLS * grid.stride_f64();

    for (index, nodule) in nodules.iter().enumerate() {
        let dist = distance_map(grid, nodule.center);

        let mut free: Vec<usize> = (0..cells)
            .filter(|&c| out.labels[c] != Label::Positive)
            .collect();
        let take = k.min(free.len());
        if take == 0 {
            continue;
        }
        if take < free.len() {
            free.select_nth_unstable_by(take - 1, nearest_first(&dist));
        }
        for &c in &free[..take] {
            out.labels[c] = Label::Positive;
            out.matched[c] = Some(index);
        }

        let ring = nodule.radius + margin;
        for (c, &d) in dist.iter().enumerate() {
            if d <= ring && out.labels[c] == Label::Negative {
                out.labels[c] = Label::Ignored;
            }
        }
    }
    Ok(out)
}

/// Number of negatives kept by hard-negative mining.
pub fn ohem_budget(positive_count: usize, ratio: usize) -> usize {
    if positive_count > 0 {
        ratio.saturating_mul(positive_count)
    } else {
        OHEM_FLOOR
    }
}

/// Step 4: keep the `n * M` (or 100 when `M = 0`) negatives with the largest
/// classification loss; every other negative becomes ignored.
pub fn ohem_refine(
    assignment: &LabelAssignment,
    cell_loss: &[f64],
    ratio: usize,
) -> Result<LabelAssignment> {
    let expected = assignment.grid.cell_count();
    if cell_loss.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: cell_loss.len(),
        });
    }
    let budget = ohem_budget(assignment.positive_count(), ratio);
    let mut negatives: Vec<usize> = assignment.cells_with(Label::Negative).collect();
    let mut out = assignment.clone();
    if budget >= negatives.len() {
        return Ok(out);
    }
    let hardest_first =
        |a: &usize, b: &usize| cell_loss[*b].total_cmp(&cell_loss[*a]).then(a.cmp(b));
    if budget > 0 {
        negatives.select_nth_unstable_by(budget - 1, hardest_first);
    }
    for &c in &negatives[budget..] {
        out.labels[c] = Label::Ignored;
    }
    Ok(out)
}

/// Offset and radius targets for every positive cell, grid units.
///
/// `offset = center / R - (idx + 0.5)` and `radius = r / R`.
pub fn regression_targets(
    assignment: &LabelAssignment,
    nodules: &[NoduleAnnotation],
) -> Result<LabelAssignment> {
    let grid = assignment.grid;
    let stride = grid.stride_f64();
    let mut out = assignment.clone();
    for cell in assignment.positive_cells() {
        let nodule = assignment.matched[cell]
            .and_then(|i| nodules.get(i))
            .ok_or(Error::MissingMatch { cell })?;
        let base = grid.cell_center_grid(grid.cell(cell));
        let offset = nodule.center * (1.0 / stride) - base;
        out.targets[cell] = Some(RegressionTarget {
            radius: nodule.radius / stride,
            offset: offset.to_array(),
        });
    }
    Ok(out)
}

/// Cells of a nodule's positive set, as coordinates.
pub fn positive_cells_of(assignment: &LabelAssignment, nodule: usize) -> Vec<Cell> {
    assignment
        .positives_of(nodule)
        .into_iter()
        .map(|c| assignment.grid.cell(c))
        .collect()
}
