//! File formats: LUNA16-style annotation CSV, candidate CSV, binary
//! prediction grids and FROC reports.

mod csv_files;
mod grid_file;

use std::fs;
use std::io::Write;
use std::path::Path;

pub use csv_files::{
    read_annotations, read_candidates, write_annotations, write_candidates, write_froc_csv,
    AnnotationRow, CandidateRow,
};
pub use grid_file::{
    decode_grid, encode_grid, read_grid, scan_id_from_path, write_grid, GridHeader, GRID_MAGIC,
};

use crate::error::Result;

/// Writes `bytes` to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut tmp_name = path.file_name().unwrap_or_default().to_os_string();
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
