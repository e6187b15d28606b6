//! Loss and gradient of every sphere loss along the path from a separated
//! prediction to its target, followed by gradient descent under each loss.

use sphere_detect::harness::{descend, loss_curve, GradsimParams};

fn main() {
    let params = GradsimParams {
        samples: 9,
        ..GradsimParams::default()
    };
    println!("{:>8} {:>6} {:>12} {:>12}", "kind", "d_ab", "loss", "dL/dz");
    for row in loss_curve(&params) {
        println!(
            "{:>8} {:>6.2} {:>12.6} {:>12.6}",
            row.kind.to_string(),
            row.d_ab,
            row.loss,
            row.grad
        );
    }
    println!();
    for &kind in &params.kinds {
        let t = descend(kind, &params);
        let last = t.steps.last().expect("trajectory has a start");
        println!(
            "{:>8}: {} iterations, final d_ab {:.5}, radius {:.5}",
            kind.to_string(),
            last.iteration,
            last.d_ab,
            last.sphere.radius
        );
    }
}
