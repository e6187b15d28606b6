//! Grid-level training objective: re-focal classification loss, smooth-L1
//! radius loss, L2 offset loss and their combination with the sphere loss.

use serde::{Deserialize, Serialize};

use super::sphere::{sphere_loss, SphereLossKind};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Sphere};
use crate::grid::PredictionGrid;
use crate::matching::{Label, LabelAssignment};

/// Probabilities are clamped to `[PROB_EPS, 1 - PROB_EPS]` before the log.
pub const PROB_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FocalParams {
    pub alpha: f64,
    pub gamma: f64,
    /// Confidence threshold under which a positive gets the boosted weight.
    pub t: f64,
    /// Weight of under-confident positives.
    pub w: f64,
}

impl Default for FocalParams {
    fn default() -> Self {
        Self {
            alpha: 0.375,
            gamma: 2.0,
            t: 0.9,
            w: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveParams {
    pub focal: FocalParams,
    /// Smooth-L1 transition point of the radius loss.
    pub beta: f64,
    /// Weight of the sphere loss.
    pub lambda_s: f64,
}

impl Default for ObjectiveParams {
    fn default() -> Self {
        Self {
            focal: FocalParams::default(),
            beta: 1.0 / 9.0,
            lambda_s: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossBreakdown {
    pub cls: f64,
    pub radius: f64,
    pub offset: f64,
    pub siou_pp: f64,
    pub total: f64,
}

fn checked_probability(cell: usize, p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidProbability { cell, value: p });
    }
    Ok(p.clamp(PROB_EPS, 1.0 - PROB_EPS))
}

/// `-alpha * (1 - p_t)^gamma * ln(p_t)` for the probability `p_t` of the
/// cell's true class.
pub fn focal_term(p_true: f64, params: &FocalParams) -> f64 {
    -params.alpha * (1.0 - p_true).powf(params.gamma) * p_true.ln()
}

/// Per-cell weight: `w` for positives below the threshold, 1 for other
/// positives and for negatives, 0 for ignored cells.
pub fn cell_weight(label: Label, p: f64, params: &FocalParams) -> f64 {
    match label {
        Label::Positive if p < params.t => params.w,
        Label::Positive | Label::Negative => 1.0,
        Label::Ignored => 0.0,
    }
}

/// Weighted focal loss of one cell; `p` must already be clamped.
pub fn cell_cls_loss(p: f64, label: Label, params: &FocalParams) -> f64 {
    let p_true = match label {
        Label::Positive => p,
        Label::Negative => 1.0 - p,
        Label::Ignored => return 0.0,
    };
    cell_weight(label, p, params) * focal_term(p_true, params)
}

pub fn refocal_loss(
    probabilities: &[f64],
    assignment: &LabelAssignment,
    params: &FocalParams,
) -> Result<f64> {
    let expected = assignment.grid().cell_count();
    if probabilities.len() != expected {
        return Err(Error::ShapeMismatch {
            expected,
            actual: probabilities.len(),
        });
    }
    let mut total = 0.0;
    for (cell, (&p, &label)) in probabilities.iter().zip(assignment.labels()).enumerate() {
        let p = checked_probability(cell, p)?;
        total += cell_cls_loss(p, label, params);
    }
    Ok(total)
}

/// Unweighted focal loss of every cell scored as a negative; the ranking
/// used by hard-negative mining.
pub fn negative_cell_losses(probabilities: &[f64], params: &FocalParams) -> Result<Vec<f64>> {
    probabilities
        .iter()
        .enumerate()
        .map(|(cell, &p)| checked_probability(cell, p).map(|p| focal_term(1.0 - p, params)))
        .collect()
}

/// Smooth-L1 radius loss as printed: quadratic below `beta`, `|r - r*|`
/// above, with no continuity shift.
pub fn radius_loss(r: f64, r_star: f64, beta: f64) -> f64 {
    let diff = (r - r_star).abs();
    if diff < beta {
        0.5 * diff * diff / beta
    } else {
        diff
    }
}

pub fn offset_loss(f: [f64; 3], f_star: [f64; 3]) -> f64 {
    (Point3::from(f) - Point3::from(f_star)).norm()
}

/// World-space sphere predicted at one cell.
pub(crate) fn predicted_sphere(grid: &PredictionGrid, cell: usize) -> Result<Sphere> {
    let spec = grid.spec;
    let stride = spec.stride_f64();
    let radius = grid.radius[cell] * stride;
    if !(radius > 0.0) {
        return Err(Error::NonPositiveRadius { cell, radius });
    }
    let center =
        (spec.cell_center_grid(spec.cell(cell)) + Point3::from(grid.offset[cell])) * stride;
    Sphere::new(center, radius)
}

/// Classification loss over all non-ignored cells plus the radius, offset
/// and weighted sphere losses over positive cells.
///
/// `gt` is indexed by the assignment's matched nodule indices; the
/// assignment must carry regression targets.
pub fn total_loss(
    grid: &PredictionGrid,
    assignment: &LabelAssignment,
    gt: &[Sphere],
    params: &ObjectiveParams,
) -> Result<LossBreakdown> {
    grid.validate()?;
    if grid.spec != *assignment.grid() {
        return Err(Error::ShapeMismatch {
            expected: assignment.grid().cell_count(),
            actual: grid.spec.cell_count(),
        });
    }
    let mut out = LossBreakdown {
        cls: refocal_loss(&grid.center_prob, assignment, &params.focal)?,
        ..LossBreakdown::default()
    };
    for cell in assignment.positive_cells() {
        let target = assignment
            .target(cell)
            .ok_or(Error::MissingMatch { cell })?;
        let truth = assignment
            .matched(cell)
            .and_then(|i| gt.get(i))
            .ok_or(Error::MissingMatch { cell })?;
        out.radius += radius_loss(grid.radius[cell], target.radius, params.beta);
        out.offset += offset_loss(grid.offset[cell], target.offset);
        let pred = predicted_sphere(grid, cell)?;
        out.siou_pp += sphere_loss(SphereLossKind::SIoUpp, &pred, truth);
    }
    out.total = out.cls + (out.radius + out.offset + params.lambda_s * out.siou_pp);
    Ok(out)
}
