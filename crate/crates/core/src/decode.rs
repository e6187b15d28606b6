//! Turning prediction grids into scored spheres and removing duplicates.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distance_radius_ratio, siou, Sphere};
use crate::grid::{Cell, PredictionGrid};
use crate::losses::predicted_sphere;

/// A decoded detection in world voxels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub sphere: Sphere,
    pub score: f64,
    /// Output level that produced the candidate.
    pub level: i32,
    /// Linear index of the source cell; only used to order ties.
    pub cell: usize,
}

impl Candidate {
    pub fn new(sphere: Sphere, score: f64, level: i32, cell: usize) -> Self {
        Self {
            sphere,
            score,
            level,
            cell,
        }
    }
}

/// Total order used everywhere candidates are ranked: score descending,
/// then source cell, then level, then the sphere itself.
pub fn rank_order(a: &Candidate, b: &Candidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(a.cell.cmp(&b.cell))
        .then(a.level.cmp(&b.level))
        .then(a.sphere.center.x.total_cmp(&b.sphere.center.x))
        .then(a.sphere.center.y.total_cmp(&b.sphere.center.y))
        .then(a.sphere.center.z.total_cmp(&b.sphere.center.z))
        .then(a.sphere.radius.total_cmp(&b.sphere.radius))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NmsParams {
    /// Suppress when SIoU with a kept sphere exceeds this.
    pub tau_siou: f64,
    /// Suppress when the distance-radius ratio to a kept sphere is below this.
    pub tau_dr: f64,
}

impl Default for NmsParams {
    fn default() -> Self {
        Self {
            tau_siou: 0.05,
            tau_dr: 0.5,
        }
    }
}

impl NmsParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tau_siou) {
            return Err(Error::Config(format!(
                "tau_siou {} outside [0, 1]",
                self.tau_siou
            )));
        }
        if !(self.tau_dr > 0.0 && self.tau_dr <= 1.0) {
            return Err(Error::Config(format!(
                "tau_dr {} outside (0, 1]",
                self.tau_dr
            )));
        }
        Ok(())
    }

    /// Whether `other` duplicates the already-kept `kept`.
    pub fn suppresses(&self, kept: &Sphere, other: &Sphere) -> bool {
        siou(kept, other) > self.tau_siou || distance_radius_ratio(kept, other) < self.tau_dr
    }
}

/// Sphere predicted at `cell`: center `(idx + 0.5 + offset) * R`, radius
/// `M_R * R`, score `M_C`.
pub fn decode_cell(grid: &PredictionGrid, cell: Cell) -> Result<Candidate> {
    if !grid.spec.contains(cell) {
        return Err(Error::Config(format!(
            "cell {cell:?} outside grid {:?}",
            grid.spec.dims
        )));
    }
    let index = grid.spec.linear(cell);
    let sphere = predicted_sphere(grid, index)?;
    Ok(Candidate::new(
        sphere,
        grid.center_prob[index],
        grid.level,
        index,
    ))
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Decoded {
    pub candidates: Vec<Candidate>,
    /// Selected cells whose radius decoded to a non-positive value.
    pub dropped: usize,
}

/// Decodes the `n` most probable cells of a grid, best first.
pub fn top_n_candidates(grid: &PredictionGrid, n: usize) -> Result<Decoded> {
    grid.validate()?;
    let probs = &grid.center_prob;
    let mut order: Vec<usize> = (0..probs.len()).collect();
    let n = n.min(order.len());
    let best_first = |a: &usize, b: &usize| probs[*b].total_cmp(&probs[*a]).then(a.cmp(b));
    if n == 0 {
        return Ok(Decoded::default());
    }
    if n < order.len() {
        order.select_nth_unstable_by(n - 1, best_first);
        order.truncate(n);
    }
    order.sort_by(best_first);

    let mut out = Decoded::default();
    for index in order {
        match decode_cell(grid, grid.spec.cell(index)) {
            Ok(c) => out.candidates.push(c),
            Err(Error::NonPositiveRadius { .. }) => out.dropped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Concatenates two candidate lists and re-sorts them best first.
pub fn merge_levels(a: &[Candidate], b: &[Candidate]) -> Vec<Candidate> {
    let mut out: Vec<Candidate> = a.iter().chain(b).copied().collect();
    out.sort_by(rank_order);
    out
}

/// Greedy sphere NMS: keep the best remaining candidate, drop everything
/// it suppresses, repeat.
pub fn nms_siou(candidates: &[Candidate], params: &NmsParams) -> Vec<Candidate> {
    let mut order = candidates.to_vec();
    order.sort_by(rank_order);
    let mut kept: Vec<Candidate> = Vec::new();
    for c in order {
        if kept
            .iter()
            .all(|k| !params.suppresses(&k.sphere, &c.sphere))
        {
            kept.push(c);
        }
    }
    kept
}
