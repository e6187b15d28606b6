//! Hit matching and the seven-point FROC curve on a tiny hand-made set.

use sphere_detect::decode::Candidate;
use sphere_detect::froc::{froc, match_hits, ScanResult};
use sphere_detect::matching::NoduleAnnotation;
use sphere_detect::{Point3, Sphere};

fn cand(x: f64, score: f64) -> Candidate {
    Candidate::new(
        Sphere::new(Point3::new(x, 10.0, 10.0), 3.0).expect("valid"),
        score,
        1,
        0,
    )
}

fn main() -> sphere_detect::Result<()> {
    let scans = vec![
        ScanResult {
            scan_id: "a".into(),
            candidates: vec![cand(10.0, 0.9), cand(11.0, 0.8), cand(60.0, 0.7)],
            annotations: vec![NoduleAnnotation::new(
                "a:0",
                Point3::new(10.0, 10.0, 10.0),
                4.0,
            )],
        },
        ScanResult {
            scan_id: "b".into(),
            candidates: vec![cand(80.0, 0.6), cand(30.0, 0.3)],
            annotations: vec![NoduleAnnotation::new(
                "b:0",
                Point3::new(30.0, 10.0, 10.0),
                2.0,
            )],
        },
    ];
    for s in &scans {
        println!("{}: {:?}", s.scan_id, match_hits(s).candidates);
    }
    let curve = froc(&scans)?;
    for p in &curve.points {
        println!("{:>6} FPs/scan -> {:.3}", p.fps_per_scan, p.sensitivity);
    }
    println!("average {:.4}", curve.average);
    Ok(())
}
