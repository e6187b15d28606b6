//! FROC scoring of a candidate file against an annotation file.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::HarnessConfig;
use crate::decode::Candidate;
use crate::error::Result;
use crate::froc::{froc, FrocPoint, ScanResult};
use crate::io::{read_annotations, read_candidates, write_atomic, write_froc_csv};
use crate::matching::NoduleAnnotation;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrocReport {
    pub config: HarnessConfig,
    pub scans: usize,
    pub annotations: usize,
    pub candidates: usize,
    pub points: Vec<FrocPoint>,
    pub average: f64,
}

/// Pairs candidates and annotations over the union of their scan ids.
pub fn scan_results(
    candidates: &BTreeMap<String, Vec<Candidate>>,
    annotations: &BTreeMap<String, Vec<NoduleAnnotation>>,
) -> Vec<ScanResult> {
    let ids: BTreeSet<&String> = candidates.keys().chain(annotations.keys()).collect();
    ids.into_iter()
        .map(|id| ScanResult {
            scan_id: id.clone(),
            candidates: candidates.get(id).cloned().unwrap_or_default(),
            annotations: annotations.get(id).cloned().unwrap_or_default(),
        })
        .collect()
}

pub fn evaluate(
    candidates: &BTreeMap<String, Vec<Candidate>>,
    annotations: &BTreeMap<String, Vec<NoduleAnnotation>>,
    config: &HarnessConfig,
) -> Result<FrocReport> {
    let results = scan_results(candidates, annotations);
    let curve = froc(&results)?;
    Ok(FrocReport {
        config: config.clone(),
        scans: results.len(),
        annotations: results.iter().map(|r| r.annotations.len()).sum(),
        candidates: results.iter().map(|r| r.candidates.len()).sum(),
        points: curve.points,
        average: curve.average,
    })
}

pub fn run_froc(
    candidates: &Path,
    annotations: &Path,
    config: &HarnessConfig,
) -> Result<FrocReport> {
    evaluate(
        &read_candidates(candidates)?,
        &read_annotations(annotations)?,
        config,
    )
}

pub fn write_froc_report(csv: &Path, json: &Path, report: &FrocReport) -> Result<()> {
    let curve = crate::froc::FrocCurve {
        points: report.points.clone(),
        average: report.average,
    };
    write_froc_csv(csv, &curve)?;
    let mut bytes = serde_json::to_vec_pretty(report)?;
    bytes.push(b'\n');
    write_atomic(json, &bytes)
}
