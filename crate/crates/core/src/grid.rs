//! Downsampled output grids.
//!
//! A grid of shape `(D', H', W')` covers a volume of `D'R x H'R x W'R`
//! world voxels. Cells are stored z-major (then y, then x). The world
//! position of cell `(x, y, z)` is its geometric center `(idx + 0.5) * R`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    /// `[D', H', W']`, i.e. the z, y and x extents.
    pub dims: [usize; 3],
    /// World voxels per cell along each axis.
    pub stride: usize,
}

/// Integer cell coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Cell {
    pub x: usize,
    pub y: usize,
    pub z: usize,
}

impl Cell {
    pub const fn new(x: usize, y: usize, z: usize) -> Self {
        Self { x, y, z }
    }
}

impl GridSpec {
    pub fn new(dims: [usize; 3], stride: usize) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::Config(format!(
                "grid dims {dims:?} must all be >= 1"
            )));
        }
        if stride == 0 {
            return Err(Error::Config("grid stride must be >= 1".into()));
        }
        Ok(Self { dims, stride })
    }

    pub fn depth(&self) -> usize {
        self.dims[0]
    }

    pub fn height(&self) -> usize {
        self.dims[1]
    }

    pub fn width(&self) -> usize {
        self.dims[2]
    }

    pub fn cell_count(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn stride_f64(&self) -> f64 {
        self.stride as f64
    }

    pub fn contains(&self, cell: Cell) -> bool {
        cell.z < self.depth() && cell.y < self.height() && cell.x < self.width()
    }

    pub fn linear(&self, cell: Cell) -> usize {
        debug_assert!(self.contains(cell));
        (cell.z * self.height() + cell.y) * self.width() + cell.x
    }

    pub fn cell(&self, index: usize) -> Cell {
        let x = index % self.width();
        let rest = index / self.width();
        Cell::new(x, rest % self.height(), rest / self.height())
    }

    /// Cell center in grid units, `idx + 0.5` per axis.
    pub fn cell_center_grid(&self, cell: Cell) -> Point3 {
        Point3::new(
            cell.x as f64 + 0.5,
            cell.y as f64 + 0.5,
            cell.z as f64 + 0.5,
        )
    }

    pub fn cell_center_world(&self, cell: Cell) -> Point3 {
        self.cell_center_grid(cell) * self.stride_f64()
    }

    /// Extent of the covered volume in world voxels, as `(x, y, z)`.
    pub fn world_extent(&self) -> Point3 {
        let r = self.stride_f64();
        Point3::new(
            self.width() as f64 * r,
            self.height() as f64 * r,
            self.depth() as f64 * r,
        )
    }

    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.cell_count()).map(move |i| self.cell(i))
    }
}

/// The three per-cell output maps of one resolution level.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionGrid {
    pub spec: GridSpec,
    pub level: i32,
    /// Center-point probability per cell.
    pub center_prob: Vec<f64>,
    /// Radius per cell, grid units.
    pub radius: Vec<f64>,
    /// Offset to the object center per cell, grid units, `[x, y, z]`.
    pub offset: Vec<[f64; 3]>,
}

impl PredictionGrid {
    pub fn zeros(spec: GridSpec, level: i32) -> Self {
        let n = spec.cell_count();
        Self {
            spec,
            level,
            center_prob: vec![0.0; n],
            radius: vec![0.0; n],
            offset: vec![[0.0; 3]; n],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let expected = self.spec.cell_count();
        for actual in [self.center_prob.len(), self.radius.len(), self.offset.len()] {
            if actual != expected {
                return Err(Error::ShapeMismatch { expected, actual });
            }
        }
        for (cell, &p) in self.center_prob.iter().enumerate() {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidProbability { cell, value: p });
            }
        }
        Ok(())
    }
}
