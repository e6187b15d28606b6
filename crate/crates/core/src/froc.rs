//! Free-response ROC scoring.
//!
//! A candidate hits an annotation when its center lies within the
//! annotation's radius (boundary included). Each annotation is credited to
//! its best hitting candidate; other candidates hitting an already credited
//! annotation are ignored, and candidates hitting nothing are false
//! positives. The curve is the step function obtained by sweeping the score
//! threshold over every distinct candidate score.

use serde::{Deserialize, Serialize};

use crate::decode::Candidate;
use crate::error::{Error, Result};
use crate::matching::NoduleAnnotation;

/// False positives per scan at which sensitivity is reported.
pub const OPERATING_POINTS: [f64; 7] = [0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0];

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub scan_id: String,
    pub candidates: Vec<Candidate>,
    pub annotations: Vec<NoduleAnnotation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HitLabel {
    TruePositive,
    FalsePositive,
    /// Hits an annotation that a better candidate already claimed.
    Ignored,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    /// Index of the credited candidate in the scan's candidate list.
    pub candidate: usize,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanMatch {
    /// One label per candidate, in input order.
    pub candidates: Vec<HitLabel>,
    /// The crediting candidate per annotation, `None` when missed.
    pub annotations: Vec<Option<Detection>>,
}

pub fn is_hit(candidate: &Candidate, annotation: &NoduleAnnotation) -> bool {
    candidate.sphere.center.distance(annotation.center) <= annotation.radius
}

pub fn match_hits(result: &ScanResult) -> ScanMatch {
    let cands = &result.candidates;
    let mut annotations: Vec<Option<Detection>> = vec![None; result.annotations.len()];
    let mut hits_any = vec![false; cands.len()];

    for (ai, ann) in result.annotations.iter().enumerate() {
        for (ci, cand) in cands.iter().enumerate() {
            if !is_hit(cand, ann) {
                continue;
            }
            hits_any[ci] = true;
            let better = match annotations[ai] {
                None => true,
                Some(best) => cand.score > best.score,
            };
            if better {
                annotations[ai] = Some(Detection {
                    candidate: ci,
                    score: cand.score,
                });
            }
        }
    }

    let mut labels: Vec<HitLabel> = hits_any
        .iter()
        .map(|&hit| {
            if hit {
                HitLabel::Ignored
            } else {
                HitLabel::FalsePositive
            }
        })
        .collect();
    for det in annotations.iter().flatten() {
        labels[det.candidate] = HitLabel::TruePositive;
    }
    ScanMatch {
        candidates: labels,
        annotations,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrocPoint {
    pub fps_per_scan: f64,
    pub sensitivity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrocCurve {
    pub points: Vec<FrocPoint>,
    pub average: f64,
}

/// Totals gathered over all scans, ready for the threshold sweep.
#[derive(Debug, Clone, Default)]
struct Tally {
    scans: usize,
    annotations: usize,
    detection_scores: Vec<f64>,
    fp_scores: Vec<f64>,
}

pub fn froc(results: &[ScanResult]) -> Result<FrocCurve> {
    if results.is_empty() {
        return Err(Error::NoScans);
    }
    let mut tally = Tally {
        scans: results.len(),
        ..Tally::default()
    };
    for scan in results {
        let m = match_hits(scan);
        tally.annotations += scan.annotations.len();
        tally
            .detection_scores
            .extend(m.annotations.iter().flatten().map(|d| d.score));
        tally.fp_scores.extend(
            m.candidates
                .iter()
                .zip(&scan.candidates)
                .filter(|(l, _)| **l == HitLabel::FalsePositive)
                .map(|(_, c)| c.score),
        );
    }
    if tally.annotations == 0 {
        return Err(Error::NoAnnotations);
    }
    Ok(sweep(tally))
}

fn sweep(mut tally: Tally) -> FrocCurve {
    let desc = |a: &f64, b: &f64| b.total_cmp(a);
    tally.detection_scores.sort_by(desc);
    tally.fp_scores.sort_by(desc);
    let mut thresholds: Vec<f64> = tally
        .detection_scores
        .iter()
        .chain(&tally.fp_scores)
        .copied()
        .collect();
    thresholds.sort_by(desc);
    thresholds.dedup();

    // (fp count, tp count) at each threshold, most permissive last
    let mut steps = Vec::with_capacity(thresholds.len() + 1);
    steps.push((0usize, 0usize));
    let (mut tp, mut fp) = (0, 0);
    for &th in &thresholds {
        while tp < tally.detection_scores.len() && tally.detection_scores[tp] >= th {
            tp += 1;
        }
        while fp < tally.fp_scores.len() && tally.fp_scores[fp] >= th {
            fp += 1;
        }
        steps.push((fp, tp));
    }

    let scans = tally.scans as f64;
    let total = tally.annotations as f64;
    let points: Vec<FrocPoint> = OPERATING_POINTS
        .iter()
        .map(|&rate| {
            let best = steps
                .iter()
                .filter(|(fp, _)| *fp as f64 / scans <= rate)
                .map(|&(_, tp)| tp)
                .max()
                .unwrap_or(0);
            FrocPoint {
                fps_per_scan: rate,
                sensitivity: best as f64 / total,
            }
        })
        .collect();
    let average = points.iter().map(|p| p.sensitivity).sum::<f64>() / points.len() as f64;
    FrocCurve { points, average }
}
