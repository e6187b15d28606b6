//! Synthetic scans with known nodules and oracle prediction grids.
//!
//! Every scan gets a random set of non-overlapping nodules. Its grid
//! carries probability 1 and exact regression targets on the positive cells
//! the matcher assigns to each nodule, zero radius on every other cell (so
//! those cells never decode), and optionally a number of clutter peaks:
//! single cells with a random score and radius placed away from every
//! nodule. Noise adds a uniform perturbation to every probability.
//!
//! Centers and radii are multiples of 1/256 voxel so that the grid values
//! survive the 32-bit file format exactly.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_xoshiro::rand_core::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::config::HarnessConfig;
use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::grid::{GridSpec, PredictionGrid};
use crate::io::{write_annotations, write_grid};
use crate::matching::{assign_labels, regression_targets, NoduleAnnotation};

/// Placement attempts per nodule or clutter peak.
pub const MAX_ATTEMPTS: usize = 10_000;

/// Grid level written into synthetic grid files.
pub const SYNTH_LEVEL: i32 = 1;

const QUANTUM: f64 = 256.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticScanSpec {
    /// Volume extent `[D, H, W]` (z, y, x) in world voxels.
    pub volume: [usize; 3],
    /// Inclusive range of nodules per scan.
    pub nodules: [usize; 2],
    /// Inclusive range of nodule radii, world voxels.
    pub radius: [f64; 2],
    /// Amplitude of the uniform probability noise, in `[0, 1)`.
    pub noise: f64,
    /// Clutter peaks per scan.
    pub clutter: usize,
}

impl Default for SyntheticScanSpec {
    fn default() -> Self {
        Self {
            volume: [96, 96, 96],
            nodules: [1, 3],
            radius: [2.0, 8.0],
            noise: 0.0,
            clutter: 0,
        }
    }
}

impl SyntheticScanSpec {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.radius;
        if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
            return Err(Error::Config(format!(
                "radius range {:?} must be positive and ordered",
                self.radius
            )));
        }
        if self.nodules[0] > self.nodules[1] {
            return Err(Error::Config(format!(
                "nodule range {:?} is reversed",
                self.nodules
            )));
        }
        if !(0.0..1.0).contains(&self.noise) {
            return Err(Error::Config(format!(
                "noise {} outside [0, 1)",
                self.noise
            )));
        }
        Ok(())
    }

    /// Output grid for this volume at the given stride.
    pub fn grid(&self, stride: usize) -> Result<GridSpec> {
        if stride == 0 || self.volume.iter().any(|&v| v == 0 || v % stride != 0) {
            return Err(Error::Config(format!(
                "volume {:?} must be a positive multiple of stride {stride}",
                self.volume
            )));
        }
        GridSpec::new(self.volume.map(|v| v / stride), stride)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticScan {
    pub scan_id: String,
    pub annotations: Vec<NoduleAnnotation>,
    pub grid: PredictionGrid,
}

pub fn scan_id(index: usize) -> String {
    format!("scan{index:04}")
}

fn quantize(v: f64) -> f64 {
    (v * QUANTUM).round() / QUANTUM
}

fn as_f32(v: f64) -> f64 {
    v as f32 as f64
}

fn place_nodules(
    rng: &mut Xoshiro256PlusPlus,
    spec: &SyntheticScanSpec,
    grid: &GridSpec,
    scan: &str,
    count: usize,
) -> Result<Vec<NoduleAnnotation>> {
    let gap = 2.0 * grid.stride_f64();
    let extent = grid.world_extent();
    let mut out: Vec<NoduleAnnotation> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut placed = None;
        for _ in 0..MAX_ATTEMPTS {
            let r = quantize(rng.gen_range(spec.radius[0]..=spec.radius[1]));
            let mut axis = |len: f64| {
                if len > 2.0 * r {
                    Some(quantize(rng.gen_range(r..=len - r)))
                } else {
                    None
                }
            };
            let (Some(x), Some(y), Some(z)) = (axis(extent.x), axis(extent.y), axis(extent.z))
            else {
                continue;
            };
            let center = Point3::new(x, y, z);
            if out
                .iter()
                .all(|n| n.center.distance(center) >= n.radius + r + gap)
            {
                placed = Some(NoduleAnnotation::new(
                    format!("{scan}:{}", out.len()),
                    center,
                    r,
                ));
                break;
            }
        }
        match placed {
            Some(n) => out.push(n),
            None => {
                return Err(Error::InfeasiblePacking {
                    wanted: count,
                    attempts: MAX_ATTEMPTS,
                })
            }
        }
    }
    Ok(out)
}

/// Builds one synthetic scan.
pub fn synthesize_scan(
    rng: &mut Xoshiro256PlusPlus,
    spec: &SyntheticScanSpec,
    config: &HarnessConfig,
    scan_id: &str,
) -> Result<SyntheticScan> {
    let grid_spec = spec.grid(config.grid.stride)?;
    let count = rng.gen_range(spec.nodules[0]..=spec.nodules[1]);
    let annotations = place_nodules(rng, spec, &grid_spec, scan_id, count)?;

    let mut grid = PredictionGrid::zeros(grid_spec, SYNTH_LEVEL);
    let assignment = regression_targets(
        &assign_labels(&grid_spec, &annotations, config.k)?,
        &annotations,
    )?;
    for cell in assignment.positive_cells() {
        let t = assignment
            .target(cell)
            .ok_or(Error::MissingMatch { cell })?;
        grid.center_prob[cell] = 1.0;
        grid.radius[cell] = t.radius;
        grid.offset[cell] = t.offset;
    }

    let stride = grid_spec.stride_f64();
    let mut peaks: Vec<(Point3, f64)> = Vec::with_capacity(spec.clutter);
    for _ in 0..spec.clutter {
        let mut placed = false;
        for _ in 0..MAX_ATTEMPTS {
            let cell = rng.gen_range(0..grid_spec.cell_count());
            let r = quantize(rng.gen_range(spec.radius[0]..=spec.radius[1]));
            let score = as_f32(rng.gen_range(0.3..=1.0));
            let center = grid_spec.cell_center_world(grid_spec.cell(cell));
            let clear = grid.radius[cell] == 0.0
                && annotations
                    .iter()
                    .all(|n| n.center.distance(center) >= n.radius + r + stride)
                && peaks
                    .iter()
                    .all(|&(c, pr)| c.distance(center) >= pr + r + stride);
            if clear {
                grid.center_prob[cell] = score;
                grid.radius[cell] = r / stride;
                peaks.push((center, r));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(Error::InfeasiblePacking {
                wanted: spec.clutter,
                attempts: MAX_ATTEMPTS,
            });
        }
    }

    if spec.noise > 0.0 {
        for p in grid.center_prob.iter_mut() {
            *p = as_f32((*p + rng.gen_range(-spec.noise..spec.noise)).clamp(0.0, 1.0));
        }
    }
    Ok(SyntheticScan {
        scan_id: scan_id.to_string(),
        annotations,
        grid,
    })
}

/// Builds `count` scans from one seeded stream.
pub fn synthesize(
    spec: &SyntheticScanSpec,
    config: &HarnessConfig,
    count: usize,
) -> Result<Vec<SyntheticScan>> {
    spec.validate()?;
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(config.seed);
    (0..count)
        .map(|i| synthesize_scan(&mut rng, spec, config, &scan_id(i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthOutput {
    pub annotations: PathBuf,
    pub grids: Vec<PathBuf>,
}

/// Writes `annotations.csv` and `grids/<scan>.L<level>.grid` under `dir`.
pub fn write_synthetic(dir: &Path, scans: &[SyntheticScan]) -> Result<SynthOutput> {
    let annotations = dir.join("annotations.csv");
    let map = scans
        .iter()
        .map(|s| (s.scan_id.clone(), s.annotations.clone()))
        .collect();
    write_annotations(&annotations, &map)?;
    let mut grids = Vec::with_capacity(scans.len());
    for s in scans {
        let path = dir
            .join("grids")
            .join(format!("{}.L{}.grid", s.scan_id, s.grid.level));
        write_grid(&path, &s.grid)?;
        grids.push(path);
    }
    Ok(SynthOutput { annotations, grids })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decode::{nms_siou, top_n_candidates};

    #[test]
    fn deterministic_per_seed() {
        let spec = SyntheticScanSpec {
            noise: 0.1,
            clutter: 3,
            ..Default::default()
        };
        let cfg = HarnessConfig::default();
        let a = synthesize(&spec, &cfg, 3).unwrap();
        assert_eq!(a, synthesize(&spec, &cfg, 3).unwrap());
        let other = HarnessConfig { seed: 1, ..cfg };
        assert_ne!(a, synthesize(&spec, &other, 3).unwrap());
    }

    #[test]
    fn oracle_grid_decodes_to_planted_nodules() {
        let cfg = HarnessConfig::default();
        let scans = synthesize(&SyntheticScanSpec::default(), &cfg, 5).unwrap();
        for s in scans {
            let decoded = top_n_candidates(&s.grid, cfg.top_n).unwrap();
            assert_eq!(decoded.candidates.len(), cfg.k * s.annotations.len());
            let kept = nms_siou(&decoded.candidates, &cfg.nms);
            assert_eq!(kept.len(), s.annotations.len());
            for n in &s.annotations {
                assert!(kept
                    .iter()
                    .any(|c| c.sphere.center == n.center && c.sphere.radius == n.radius));
            }
        }
    }

    #[test]
    fn clutter_count() {
        let spec = SyntheticScanSpec {
            clutter: 5,
            ..Default::default()
        };
        let cfg = HarnessConfig::default();
        for s in synthesize(&spec, &cfg, 4).unwrap() {
            let decoded = top_n_candidates(&s.grid, cfg.top_n).unwrap();
            let stray = decoded
                .candidates
                .iter()
                .filter(|c| {
                    s.annotations
                        .iter()
                        .all(|n| c.sphere.center.distance(n.center) > n.radius)
                })
                .count();
            assert_eq!(stray, 5);
        }
    }

    #[test]
    fn infeasible_packing() {
        let spec = SyntheticScanSpec {
            volume: [16, 16, 16],
            nodules: [5, 5],
            radius: [3.0, 3.0],
            ..Default::default()
        };
        let err = synthesize(&spec, &HarnessConfig::default(), 1).unwrap_err();
        assert!(matches!(err, Error::InfeasiblePacking { wanted: 5, .. }));
    }

    #[test]
    fn rejects_bad_spec() {
        let bad = SyntheticScanSpec {
            noise: 1.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(SyntheticScanSpec::default().grid(5).is_err());
    }
}
