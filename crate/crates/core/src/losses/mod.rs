//! Loss functions.

mod objective;
mod sphere;

pub(crate) use objective::predicted_sphere;
pub use objective::{
    cell_cls_loss, cell_weight, focal_term, negative_cell_losses, offset_loss, radius_loss,
    refocal_loss, total_loss, FocalParams, LossBreakdown, ObjectiveParams, PROB_EPS,
};
pub use sphere::{
    box_iou, near_regime_boundary, sphere_loss, sphere_loss_gradient,
    sphere_loss_gradient_with_method, GradientMethod, SphereGradient, SphereLossKind, BOUNDARY_EPS,
};
