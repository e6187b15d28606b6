//! Center-points label assignment, hard-negative mining, regression
//! targets and the training objective on a small grid.

use sphere_detect::grid::{GridSpec, PredictionGrid};
use sphere_detect::losses::{negative_cell_losses, total_loss, ObjectiveParams};
use sphere_detect::matching::{
    assign_labels, ohem_refine, positive_cells_of, regression_targets, NoduleAnnotation,
};
use sphere_detect::Point3;

fn main() -> sphere_detect::Result<()> {
    let grid = GridSpec::new([12, 12, 12], 4)?;
    let nodules = vec![
        NoduleAnnotation::new("a", Point3::new(13.0, 20.5, 17.0), 4.0),
        NoduleAnnotation::new("b", Point3::new(34.0, 30.0, 30.0), 6.5),
    ];
    let params = ObjectiveParams::default();

    let initial = assign_labels(&grid, &nodules, 7)?;
    println!("before mining: {:?}", initial.counts());

    // a prediction that is mildly confident everywhere
    let mut pred = PredictionGrid::zeros(grid, 1);
    for (i, p) in pred.center_prob.iter_mut().enumerate() {
        *p = 0.05 + 0.3 * ((i * 37 % 101) as f64 / 101.0);
    }
    let losses = negative_cell_losses(&pred.center_prob, &params.focal)?;
    let mined = ohem_refine(&initial, &losses, 100)?;
    println!("after mining:  {:?}", mined.counts());

    let assignment = regression_targets(&mined, &nodules)?;
    for (i, n) in nodules.iter().enumerate() {
        println!(
            "nodule {} positives: {:?}",
            n.id,
            positive_cells_of(&assignment, i)
        );
    }

    // predict every positive cell's radius exactly, offsets at the cell center
    for cell in assignment.positive_cells() {
        pred.radius[cell] = assignment.target(cell).map_or(1.0, |t| t.radius);
    }
    let gt: Vec<_> = nodules
        .iter()
        .map(|n| n.sphere())
        .collect::<Result<_, _>>()?;
    let loss = total_loss(&pred, &assignment, &gt, &params)?;
    println!("objective: {loss:#?}");
    Ok(())
}
