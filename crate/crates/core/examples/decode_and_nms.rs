//! Decoding two output levels, merging them and running sphere NMS.

use sphere_detect::decode::{merge_levels, nms_siou, top_n_candidates, NmsParams};
use sphere_detect::grid::{Cell, GridSpec, PredictionGrid};

fn peak(grid: &mut PredictionGrid, cell: Cell, p: f64, radius: f64, offset: [f64; 3]) {
    let i = grid.spec.linear(cell);
    grid.center_prob[i] = p;
    grid.radius[i] = radius;
    grid.offset[i] = offset;
}

fn main() -> sphere_detect::Result<()> {
    let mut fine = PredictionGrid::zeros(GridSpec::new([16, 16, 16], 4)?, 1);
    peak(&mut fine, Cell::new(5, 5, 5), 0.92, 1.5, [0.1, 0.0, -0.2]);
    peak(&mut fine, Cell::new(6, 5, 5), 0.88, 1.4, [-0.8, 0.0, -0.2]);
    peak(&mut fine, Cell::new(12, 3, 9), 0.55, 0.8, [0.0; 3]);

    let mut coarse = PredictionGrid::zeros(GridSpec::new([8, 8, 8], 8)?, 2);
    peak(&mut coarse, Cell::new(2, 2, 2), 0.8, 0.75, [0.3, 0.3, 0.2]);

    let a = top_n_candidates(&fine, 10)?;
    let b = top_n_candidates(&coarse, 10)?;
    println!(
        "decoded {} + {} candidates ({} + {} cells without a radius)",
        a.candidates.len(),
        b.candidates.len(),
        a.dropped,
        b.dropped
    );

    let merged = merge_levels(&a.candidates, &b.candidates);
    for c in nms_siou(&merged, &NmsParams::default()) {
        println!(
            "level {} score {:.2} center {} radius {:.3}",
            c.level, c.score, c.sphere.center, c.sphere.radius
        );
    }
    Ok(())
}
