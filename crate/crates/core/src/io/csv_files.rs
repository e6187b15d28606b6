use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::write_atomic;
use crate::decode::{rank_order, Candidate};
use crate::error::{Error, Result};
use crate::froc::FrocCurve;
use crate::geometry::{Point3, Sphere};
use crate::matching::NoduleAnnotation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRow {
    pub seriesuid: String,
    #[serde(rename = "coordX")]
    pub coord_x: f64,
    #[serde(rename = "coordY")]
    pub coord_y: f64,
    #[serde(rename = "coordZ")]
    pub coord_z: f64,
    pub diameter_mm: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub seriesuid: String,
    #[serde(rename = "coordX")]
    pub coord_x: f64,
    #[serde(rename = "coordY")]
    pub coord_y: f64,
    #[serde(rename = "coordZ")]
    pub coord_z: f64,
    pub radius: f64,
    pub probability: f64,
}

fn parse_error(path: &Path, err: &csv::Error) -> Error {
    let line = err.position().map(|p| p.line()).unwrap_or(0);
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: err.to_string(),
    }
}

fn row_error(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<(u64, T)>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)?;
    let headers = reader.headers().map_err(|e| parse_error(path, &e))?.clone();
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| parse_error(path, &e))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let row: T = record
            .deserialize(Some(&headers))
            .map_err(|e| row_error(path, line, e.to_string()))?;
        rows.push((line, row));
    }
    Ok(rows)
}

/// Annotations grouped by scan, in file order. Diameters become radii.
pub fn read_annotations(path: &Path) -> Result<BTreeMap<String, Vec<NoduleAnnotation>>> {
    let mut out: BTreeMap<String, Vec<NoduleAnnotation>> = BTreeMap::new();
    for (line, row) in read_rows::<AnnotationRow>(path)? {
        let center = Point3::new(row.coord_x, row.coord_y, row.coord_z);
        if !center.is_finite() || !(row.diameter_mm.is_finite() && row.diameter_mm > 0.0) {
            return Err(row_error(
                path,
                line,
                "coordinates must be finite and diameter positive",
            ));
        }
        let list = out.entry(row.seriesuid.clone()).or_default();
        let id = format!("{}:{}", row.seriesuid, list.len());
        list.push(NoduleAnnotation::new(id, center, row.diameter_mm / 2.0));
    }
    Ok(out)
}

pub fn write_annotations(
    path: &Path,
    scans: &BTreeMap<String, Vec<NoduleAnnotation>>,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    // header is written explicitly so empty files still carry it
    w.write_record(["seriesuid", "coordX", "coordY", "coordZ", "diameter_mm"])?;
    for (scan, nodules) in scans {
        for n in nodules {
            w.write_record(&[
                scan.clone(),
                n.center.x.to_string(),
                n.center.y.to_string(),
                n.center.z.to_string(),
                (2.0 * n.radius).to_string(),
            ])?;
        }
    }
    write_atomic(path, &w.into_inner().map_err(|e| e.into_error())?)
}

/// Candidates grouped by scan, each list best first.
pub fn read_candidates(path: &Path) -> Result<BTreeMap<String, Vec<Candidate>>> {
    let mut out: BTreeMap<String, Vec<Candidate>> = BTreeMap::new();
    for (line, row) in read_rows::<CandidateRow>(path)? {
        let sphere = Sphere::new(
            Point3::new(row.coord_x, row.coord_y, row.coord_z),
            row.radius,
        )
        .map_err(|e| row_error(path, line, e.to_string()))?;
        if !(0.0..=1.0).contains(&row.probability) {
            return Err(row_error(
                path,
                line,
                format!("probability {} outside [0, 1]", row.probability),
            ));
        }
        let list = out.entry(row.seriesuid).or_default();
        let order = list.len();
        list.push(Candidate::new(sphere, row.probability, 0, order));
    }
    for list in out.values_mut() {
        list.sort_by(rank_order);
    }
    Ok(out)
}

pub fn write_candidates(path: &Path, scans: &BTreeMap<String, Vec<Candidate>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "seriesuid",
        "coordX",
        "coordY",
        "coordZ",
        "radius",
        "probability",
    ])?;
    for (scan, cands) in scans {
        for c in cands {
            let s = &c.sphere;
            w.write_record(&[
                scan.clone(),
                s.center.x.to_string(),
                s.center.y.to_string(),
                s.center.z.to_string(),
                s.radius.to_string(),
                c.score.to_string(),
            ])?;
        }
    }
    write_atomic(path, &w.into_inner().map_err(|e| e.into_error())?)
}

pub fn write_froc_csv(path: &Path, curve: &FrocCurve) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["fps_per_scan", "sensitivity"])?;
    for p in &curve.points {
        w.write_record(&[p.fps_per_scan.to_string(), p.sensitivity.to_string()])?;
    }
    write_atomic(path, &w.into_inner().map_err(|e| e.into_error())?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotations_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ann.csv");
        let mut scans = BTreeMap::new();
        scans.insert(
            "scanA".to_string(),
            vec![
                NoduleAnnotation::new("scanA:0", Point3::new(1.5, 2.25, 3.0), 4.5),
                NoduleAnnotation::new("scanA:1", Point3::new(40.0, 41.0, 42.0), 2.0),
            ],
        );
        write_annotations(&path, &scans).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("seriesuid,coordX,coordY,coordZ,diameter_mm\n"));
        assert!(text.contains("scanA,1.5,2.25,3,9\n"));
        assert_eq!(read_annotations(&path).unwrap(), scans);
    }

    #[test]
    fn malformed_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ann.csv");
        std::fs::write(
            &path,
            "seriesuid,coordX,coordY,coordZ,diameter_mm\na,1,2,3,4\nb,1,oops,3,4\n",
        )
        .unwrap();
        match read_annotations(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        std::fs::write(
            &path,
            "seriesuid,coordX,coordY,coordZ,diameter_mm\na,1,2,3,-4\n",
        )
        .unwrap();
        assert!(matches!(
            read_annotations(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_annotation_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ann.csv");
        std::fs::write(&path, "seriesuid,coordX,coordY,coordZ,diameter_mm\n").unwrap();
        assert!(read_annotations(&path).unwrap().is_empty());
    }

    #[test]
    fn candidates_round_trip_sorted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(
            &path,
            "seriesuid,coordX,coordY,coordZ,radius,probability\ns,1,1,1,2,0.3\ns,5,5,5,2,0.8\nt,0,0,0,1,0.5\n",
        )
        .unwrap();
        let c = read_candidates(&path).unwrap();
        assert_eq!(c["s"][0].score, 0.8);
        assert_eq!(c["s"][1].score, 0.3);
        let out = dir.path().join("c2.csv");
        write_candidates(&out, &c).unwrap();
        let text = std::fs::read_to_string(&out).unwrap();
        assert_eq!(
            text,
            "seriesuid,coordX,coordY,coordZ,radius,probability\ns,5,5,5,2,0.8\ns,1,1,1,2,0.3\nt,0,0,0,1,0.5\n"
        );
    }

    #[test]
    fn candidate_with_bad_radius() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.csv");
        std::fs::write(
            &path,
            "seriesuid,coordX,coordY,coordZ,radius,probability\ns,1,1,1,0,0.3\n",
        )
        .unwrap();
        assert!(matches!(
            read_candidates(&path),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
