//! Command implementations behind the `sphere-detect` binary. Each command
//! is a plain function over typed inputs plus a thin file-writing wrapper.

pub mod assign;
pub mod detect;
pub mod evaluate;
pub mod gradsim;
pub mod synth;

pub use assign::{assign_scan, run_assign, AssignSummary, NoduleCells, ScanAssignment};
pub use detect::{collect_grid_files, detect_scan, run_detect};
pub use evaluate::{evaluate, run_froc, scan_results, write_froc_report, FrocReport};
pub use gradsim::{
    descend, loss_curve, run_gradsim, write_gradsim, Axis, GradsimParams, GradsimReport, Trajectory,
};
pub use synth::{synthesize, write_synthetic, SynthOutput, SyntheticScan, SyntheticScanSpec};
