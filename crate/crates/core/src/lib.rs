//! Sphere-based 3D object detection toolkit.
//!
//! Objects are bounding spheres (center + radius) rather than boxes. The
//! crate covers the whole non-network part of a center-point detector:
//!
//! * [`geometry`]: exact and Monte-Carlo sphere overlap measures (SIoU,
//!   distance-radius ratio, intersection-angle score).
//! * [`losses`]: the sphere regression losses with analytic gradients, the
//!   re-focal classification loss and the combined training objective.
//! * [`matching`]: center-points label assignment with ignore rings, hard
//!   negative mining and regression targets.
//! * [`decode`]: prediction-grid decoding, multi-level merging and sphere NMS.
//! * [`froc`]: hit matching and FROC scoring at the seven standard
//!   false-positive rates.
//! * [`harness`]: the file-driven commands behind the `sphere-detect` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod decode;
pub mod error;
pub mod froc;
pub mod geometry;
pub mod grid;
pub mod harness;
pub mod io;
pub mod losses;
pub mod matching;

pub use error::{Error, Result};
pub use geometry::{Point3, Sphere};
