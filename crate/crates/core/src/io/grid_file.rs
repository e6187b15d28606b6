//! Binary prediction-grid files.
//!
//! Layout: the ASCII magic `SCPMGRID1`, a single-line JSON header
//! terminated by `\n`, then little-endian `f32` payload in z-major order:
//! `M_C` (one channel), `M_R` (one channel), `M_O` (x, y and z channels,
//! one full channel after another).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::error::{Error, Result};
use crate::grid::{GridSpec, PredictionGrid};

pub const GRID_MAGIC: &[u8; 9] = b"SCPMGRID1";
const DTYPE: &str = "f32le";
const CHANNELS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridHeader {
    pub dims: [usize; 3],
    pub stride: usize,
    pub level: i32,
    pub dtype: String,
}

pub fn encode_grid(grid: &PredictionGrid) -> Result<Vec<u8>> {
    grid.validate()?;
    let header = GridHeader {
        dims: grid.spec.dims,
        stride: grid.spec.stride,
        level: grid.level,
        dtype: DTYPE.to_string(),
    };
    let n = grid.spec.cell_count();
    let mut out = Vec::with_capacity(64 + 4 * CHANNELS * n);
    out.extend_from_slice(GRID_MAGIC);
    serde_json::to_writer(&mut out, &header)?;
    out.push(b'\n');
    let mut put = |v: f64| out.extend_from_slice(&(v as f32).to_le_bytes());
    grid.center_prob.iter().for_each(|&v| put(v));
    grid.radius.iter().for_each(|&v| put(v));
    for axis in 0..3 {
        grid.offset.iter().for_each(|o| put(o[axis]));
    }
    Ok(out)
}

pub fn decode_grid(bytes: &[u8], path: &Path) -> Result<PredictionGrid> {
    let bad = |message: String| Error::GridFile {
        path: path.to_path_buf(),
        message,
    };
    let rest = bytes
        .strip_prefix(GRID_MAGIC.as_slice())
        .ok_or_else(|| bad("missing SCPMGRID1 magic".into()))?;
    let newline = rest
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| bad("unterminated header".into()))?;
    let header: GridHeader =
        serde_json::from_slice(&rest[..newline]).map_err(|e| bad(format!("header: {e}")))?;
    if header.dtype != DTYPE {
        return Err(bad(format!("unsupported dtype {}", header.dtype)));
    }
    let spec = GridSpec::new(header.dims, header.stride).map_err(|e| bad(e.to_string()))?;
    let payload = &rest[newline + 1..];
    let n = spec.cell_count();
    if payload.len() != 4 * CHANNELS * n {
        return Err(bad(format!(
            "payload holds {} bytes but dims {:?} need {}",
            payload.len(),
            header.dims,
            4 * CHANNELS * n
        )));
    }
    let values: Vec<f64> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    let channel = |k: usize| &values[k * n..(k + 1) * n];
    let (ox, oy, oz) = (channel(2), channel(3), channel(4));
    let grid = PredictionGrid {
        spec,
        level: header.level,
        center_prob: channel(0).to_vec(),
        radius: channel(1).to_vec(),
        offset: (0..n).map(|i| [ox[i], oy[i], oz[i]]).collect(),
    };
    grid.validate().map_err(|e| bad(e.to_string()))?;
    Ok(grid)
}

pub fn write_grid(path: &Path, grid: &PredictionGrid) -> Result<()> {
    write_atomic(path, &encode_grid(grid)?)
}

pub fn read_grid(path: &Path) -> Result<PredictionGrid> {
    decode_grid(&std::fs::read(path)?, path)
}

/// Scan id encoded in a grid file name: everything before the first `.`.
pub fn scan_id_from_path(path: &Path) -> String {
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    name.split('.').next().unwrap_or_default().to_string()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PredictionGrid {
        let spec = GridSpec::new([2, 3, 4], 4).unwrap();
        let mut g = PredictionGrid::zeros(spec, 2);
        for i in 0..spec.cell_count() {
            g.center_prob[i] = i as f64 / 32.0;
            g.radius[i] = 1.25 + i as f64;
            g.offset[i] = [0.5, -0.25, i as f64 / 8.0];
        }
        g
    }

    #[test]
    fn round_trip_exact_for_dyadic_values() {
        let g = sample();
        let bytes = encode_grid(&g).unwrap();
        assert!(bytes.starts_with(
            b"SCPMGRID1{\"dims\":[2,3,4],\"stride\":4,\"level\":2,\"dtype\":\"f32le\"}\n"
        ));
        assert_eq!(decode_grid(&bytes, Path::new("x")).unwrap(), g);
    }

    #[test]
    fn rejects_truncated_payload() {
        let mut bytes = encode_grid(&sample()).unwrap();
        bytes.truncate(bytes.len() - 4);
        assert!(matches!(
            decode_grid(&bytes, Path::new("x")),
            Err(Error::GridFile { .. })
        ));
    }

    #[test]
    fn rejects_bad_magic_and_dtype() {
        assert!(decode_grid(b"NOPE", Path::new("x")).is_err());
        let bytes =
            b"SCPMGRID1{\"dims\":[1,1,1],\"stride\":1,\"level\":0,\"dtype\":\"f64le\"}\n".to_vec();
        assert!(decode_grid(&bytes, Path::new("x")).is_err());
    }

    #[test]
    fn scan_id_is_the_stem_prefix() {
        assert_eq!(
            scan_id_from_path(Path::new("/a/b/scan0003.L1.grid")),
            "scan0003"
        );
        assert_eq!(scan_id_from_path(Path::new("plain")), "plain");
    }
}
