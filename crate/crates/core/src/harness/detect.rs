//! Decoding grid files into per-scan candidate lists.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::config::HarnessConfig;
use crate::decode::{merge_levels, nms_siou, top_n_candidates, Candidate};
use crate::error::Result;
use crate::grid::PredictionGrid;
use crate::io::{read_grid, scan_id_from_path};

/// Top-N decoding of every grid, one merged list, then sphere NMS.
pub fn detect_scan(grids: &[PredictionGrid], config: &HarnessConfig) -> Result<Vec<Candidate>> {
    let mut merged = Vec::new();
    for g in grids {
        merged = merge_levels(&merged, &top_n_candidates(g, config.top_n)?.candidates);
    }
    Ok(nms_siou(&merged, &config.nms))
}

/// Grid files grouped by scan id. Directories contribute their `*.grid`
/// files; paths within a scan are sorted.
pub fn collect_grid_files(inputs: &[PathBuf]) -> Result<BTreeMap<String, Vec<PathBuf>>> {
    let mut out: BTreeMap<String, Vec<PathBuf>> = BTreeMap::new();
    let mut add = |p: PathBuf| out.entry(scan_id_from_path(&p)).or_default().push(p);
    for input in inputs {
        if input.is_dir() {
            for entry in std::fs::read_dir(input)? {
                let p = entry?.path();
                if p.is_file() && p.extension().is_some_and(|e| e == "grid") {
                    add(p);
                }
            }
        } else {
            add(input.clone());
        }
    }
    for files in out.values_mut() {
        files.sort();
        files.dedup();
    }
    Ok(out)
}

pub fn run_detect(
    inputs: &[PathBuf],
    config: &HarnessConfig,
) -> Result<BTreeMap<String, Vec<Candidate>>> {
    let mut out = BTreeMap::new();
    for (scan, files) in collect_grid_files(inputs)? {
        let grids = files
            .iter()
            .map(|p| read_grid(p))
            .collect::<Result<Vec<_>>>()?;
        out.insert(scan, detect_scan(&grids, config)?);
    }
    Ok(out)
}
