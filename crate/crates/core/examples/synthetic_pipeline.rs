//! Synthetic scans written to disk, decoded and scored, as the command-line
//! tool would do it.

use sphere_detect::config::HarnessConfig;
use sphere_detect::harness::{
    run_detect, run_froc, synthesize, write_synthetic, SyntheticScanSpec,
};
use sphere_detect::io::write_candidates;

fn main() -> sphere_detect::Result<()> {
    let dir = std::env::temp_dir().join("sphere-detect-synthetic-example");
    let config = HarnessConfig::default();
    let spec = SyntheticScanSpec {
        clutter: 5,
        noise: 0.1,
        ..SyntheticScanSpec::default()
    };
    let scans = synthesize(&spec, &config, 10)?;
    let written = write_synthetic(&dir, &scans)?;
    println!("{} grids under {}", written.grids.len(), dir.display());

    let candidates = run_detect(&[dir.join("grids")], &config)?;
    let cand_path = dir.join("candidates.csv");
    write_candidates(&cand_path, &candidates)?;

    let report = run_froc(&cand_path, &written.annotations, &config)?;
    println!(
        "{} scans, {} nodules, {} candidates",
        report.scans, report.annotations, report.candidates
    );
    for p in &report.points {
        println!("{:>6} FPs/scan -> {:.3}", p.fps_per_scan, p.sensitivity);
    }
    println!("average {:.4}", report.average);
    Ok(())
}
