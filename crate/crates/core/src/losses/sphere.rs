//! Sphere regression losses and their gradients.
//!
//! All three sphere losses depend on the predicted sphere only through the
//! center distance `d` and the predicted radius `r_a`, so each term carries
//! its value together with `dL/dd` and `dL/dr_a`. The center gradient is
//! then `dL/dd * (c_a - c_b) / d`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::geometry::{
    ball_volume, cap_volume, center_distance, classify, cos_intersection_angle,
    intersection_and_union, lens_caps, Regime, Sphere,
};

/// Distance from a regime boundary below which the analytic gradient is
/// replaced by a one-sided difference.
pub const BOUNDARY_EPS: f64 = 1e-9;

const FALLBACK_STEP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SphereLossKind {
    /// `1 - IoU` of the axis-aligned cubes inscribed in each sphere.
    BoxIoU,
    /// `1 - SIoU`.
    SIoU,
    /// `1 + R_DR - SIoU`.
    SDIoU,
    /// `R_DR` for disjoint spheres, `1 + R_DR - SIoU + eta` otherwise.
    SIoUpp,
}

impl SphereLossKind {
    pub const ALL: [SphereLossKind; 4] = [Self::BoxIoU, Self::SIoU, Self::SDIoU, Self::SIoUpp];

    pub fn name(self) -> &'static str {
        match self {
            Self::BoxIoU => "box_iou",
            Self::SIoU => "siou",
            Self::SDIoU => "sdiou",
            Self::SIoUpp => "siou++",
        }
    }
}

impl fmt::Display for SphereLossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SphereLossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "box_iou" | "boxiou" | "iou" => Ok(Self::BoxIoU),
            "siou" => Ok(Self::SIoU),
            "sdiou" => Ok(Self::SDIoU),
            "siou++" | "sioupp" | "siou_pp" => Ok(Self::SIoUpp),
            _ => Err(Error::UnknownLossKind(s.to_string())),
        }
    }
}

/// Partial derivatives of a loss with respect to the predicted sphere.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SphereGradient {
    pub d_cx: f64,
    pub d_cy: f64,
    pub d_cz: f64,
    pub d_r: f64,
}

impl SphereGradient {
    pub fn as_array(&self) -> [f64; 4] {
        [self.d_cx, self.d_cy, self.d_cz, self.d_r]
    }

    pub fn center_norm(&self) -> f64 {
        (self.d_cx * self.d_cx + self.d_cy * self.d_cy + self.d_cz * self.d_cz).sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.as_array().iter().all(|&g| g == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientMethod {
    Analytic,
    /// The prediction sits on a regime boundary; a one-sided difference
    /// taken inside the current regime was used.
    OneSided,
}

/// A scalar term with its derivatives in `d` and `r_a`.
#[derive(Debug, Clone, Copy, Default)]
struct Term {
    value: f64,
    dd: f64,
    dr: f64,
}

impl Term {
    fn constant(value: f64) -> Self {
        Self {
            value,
            dd: 0.0,
            dr: 0.0,
        }
    }
}

fn rdr_term(d: f64, ra: f64, rb: f64) -> Term {
    let s = ra + rb;
    let denom = d + s;
    Term {
        value: d / denom,
        dd: s / (denom * denom),
        dr: -d / (denom * denom),
    }
}

fn angle_term(d: f64, ra: f64, rb: f64) -> Term {
    if d > ra + rb {
        return Term::default();
    }
    let x = cos_intersection_angle(d, ra, rb);
    if x >= 1.0 || x <= -1.0 {
        return Term::constant(x.clamp(-1.0, 1.0).acos() / PI);
    }
    let dacos = -1.0 / (PI * (1.0 - x * x).sqrt());
    let dx_dd = -d / (ra * rb);
    let dx_dr = 1.0 / (2.0 * rb) - (rb * rb - d * d) / (2.0 * ra * ra * rb);
    Term {
        value: x.acos() / PI,
        dd: dacos * dx_dd,
        dr: dacos * dx_dr,
    }
}

fn siou_term(d: f64, ra: f64, rb: f64) -> Term {
    match classify(d, ra, rb) {
        Regime::Disjoint => Term::default(),
        Regime::Contained => {
            let (inter, union) = intersection_and_union(d, ra, rb);
            let value = inter / union;
            let dr = if ra < rb {
                3.0 * ra * ra / (rb * rb * rb)
            } else if ra > rb {
                -3.0 * rb * rb * rb / (ra * ra * ra * ra)
            } else {
                0.0
            };
            Term { value, dd: 0.0, dr }
        }
        Regime::Intersecting => {
            let caps = lens_caps(d, ra, rb);
            let (h1, h2) = (caps.h1, caps.h2);
            let inter = cap_volume(ra, caps.h2) + cap_volume(rb, caps.h1);
            let union = ball_volume(ra) + ball_volume(rb) - inter;

            // dcap/dh for each cap
            let ga = PI * h2 * (2.0 * ra - h2);
            let gb = PI * h1 * (2.0 * rb - h1);
            let d2 = d * d;
            let dh2_dd = -0.5 + (ra * ra - rb * rb) / (2.0 * d2);
            let dh1_dd = -0.5 + (rb * rb - ra * ra) / (2.0 * d2);
            let dv_dd = ga * dh2_dd + gb * dh1_dd;
            let dv_dr = PI * h2 * h2 + ga * (1.0 - ra / d) + gb * (ra / d);

            let du_dd = -dv_dd;
            let du_dr = 4.0 * PI * ra * ra - dv_dr;
            let u2 = union * union;
            Term {
                value: inter / union,
                dd: (dv_dd * union - inter * du_dd) / u2,
                dr: (dv_dr * union - inter * du_dr) / u2,
            }
        }
    }
}

fn sphere_term(kind: SphereLossKind, d: f64, ra: f64, rb: f64) -> Term {
    match kind {
        SphereLossKind::SIoU => {
            let s = siou_term(d, ra, rb);
            Term {
                value: 1.0 - s.value,
                dd: -s.dd,
                dr: -s.dr,
            }
        }
        SphereLossKind::SDIoU => {
            let s = siou_term(d, ra, rb);
            let r = rdr_term(d, ra, rb);
            Term {
                value: 1.0 + r.value - s.value,
                dd: r.dd - s.dd,
                dr: r.dr - s.dr,
            }
        }
        SphereLossKind::SIoUpp => {
            let r = rdr_term(d, ra, rb);
            if d >= ra + rb {
                return r;
            }
            let s = siou_term(d, ra, rb);
            let e = angle_term(d, ra, rb);
            Term {
                value: 1.0 + r.value - s.value + e.value,
                dd: r.dd - s.dd + e.dd,
                dr: r.dr - s.dr + e.dr,
            }
        }
        SphereLossKind::BoxIoU => unreachable!("box loss is not a function of (d, r)"),
    }
}

/// Half edge of the axis-aligned cube inscribed in a sphere of radius `r`.
fn inscribed_half_edge(r: f64) -> f64 {
    r / 3f64.sqrt()
}

/// IoU of the cubes inscribed in two spheres, with its gradient w.r.t. the
/// first sphere's center and radius.
fn box_iou_with_gradient(pred: &Sphere, gt: &Sphere) -> (f64, SphereGradient) {
    let k = 1.0 / 3f64.sqrt();
    let (ha, hb) = (
        inscribed_half_edge(pred.radius),
        inscribed_half_edge(gt.radius),
    );
    let ca = pred.center.to_array();
    let cb = gt.center.to_array();

    let mut overlap = [0.0; 3];
    let mut edges = [[0.0; 3]; 2];
    let mut d_center = [0.0; 3];
    let mut d_half = [0.0; 3];
    for axis in 0..3 {
        let (a_lo, a_hi) = (ca[axis] - ha, ca[axis] + ha);
        let (b_lo, b_hi) = (cb[axis] - hb, cb[axis] + hb);
        edges[0][axis] = a_hi - a_lo;
        edges[1][axis] = b_hi - b_lo;
        let o = a_hi.min(b_hi) - a_lo.max(b_lo);
        if o > 0.0 {
            overlap[axis] = o;
            let hi_is_a = a_hi <= b_hi;
            let lo_is_a = a_lo >= b_lo;
            d_center[axis] = f64::from(u8::from(hi_is_a)) - f64::from(u8::from(lo_is_a));
            d_half[axis] = f64::from(u8::from(hi_is_a)) + f64::from(u8::from(lo_is_a));
        }
    }
    let inter: f64 = overlap.iter().product();
    let (va, vb): (f64, f64) = (edges[0].iter().product(), edges[1].iter().product());
    let union = va + vb - inter;
    if inter <= 0.0 {
        return (0.0, SphereGradient::default());
    }

    let others = |axis: usize| overlap[(axis + 1) % 3] * overlap[(axis + 2) % 3];
    let di_dc: Vec<f64> = (0..3).map(|a| d_center[a] * others(a)).collect();
    let di_dh: f64 = (0..3).map(|a| d_half[a] * others(a)).sum();
    let dva_dh = 24.0 * ha * ha;

    // IoU = I / (Va + Vb - I)
    let u2 = union * union;
    let diou_di = (union + inter) / u2;
    let diou_dh = diou_di * di_dh - inter * dva_dh / u2;
    let grad = SphereGradient {
        d_cx: diou_di * di_dc[0],
        d_cy: diou_di * di_dc[1],
        d_cz: diou_di * di_dc[2],
        d_r: diou_dh * k,
    };
    (inter / union, grad)
}

/// IoU of the axis-aligned cubes inscribed in the two spheres.
pub fn box_iou(a: &Sphere, b: &Sphere) -> f64 {
    box_iou_with_gradient(a, b).0
}

pub fn sphere_loss(kind: SphereLossKind, pred: &Sphere, gt: &Sphere) -> f64 {
    match kind {
        SphereLossKind::BoxIoU => 1.0 - box_iou(pred, gt),
        _ => sphere_term(kind, center_distance(pred, gt), pred.radius, gt.radius).value,
    }
}

/// Gradient of [`sphere_loss`] with respect to the predicted sphere.
pub fn sphere_loss_gradient(kind: SphereLossKind, pred: &Sphere, gt: &Sphere) -> SphereGradient {
    sphere_loss_gradient_with_method(kind, pred, gt).0
}

pub fn near_regime_boundary(pred: &Sphere, gt: &Sphere) -> bool {
    let d = center_distance(pred, gt);
    (d - (pred.radius + gt.radius)).abs() < BOUNDARY_EPS
        || (d - (pred.radius - gt.radius).abs()).abs() < BOUNDARY_EPS
}

pub fn sphere_loss_gradient_with_method(
    kind: SphereLossKind,
    pred: &Sphere,
    gt: &Sphere,
) -> (SphereGradient, GradientMethod) {
    if kind == SphereLossKind::BoxIoU {
        let (_, g) = box_iou_with_gradient(pred, gt);
        let neg = SphereGradient {
            d_cx: -g.d_cx,
            d_cy: -g.d_cy,
            d_cz: -g.d_cz,
            d_r: -g.d_r,
        };
        return (neg, GradientMethod::Analytic);
    }
    if near_regime_boundary(pred, gt) {
        return (one_sided_gradient(kind, pred, gt), GradientMethod::OneSided);
    }

    let delta = pred.center - gt.center;
    let d = delta.norm();
    let term = sphere_term(kind, d, pred.radius, gt.radius);
    let dir = if d > 0.0 {
        delta * (1.0 / d)
    } else {
        delta * 0.0
    };
    (
        SphereGradient {
            d_cx: term.dd * dir.x,
            d_cy: term.dd * dir.y,
            d_cz: term.dd * dir.z,
            d_r: term.dr,
        },
        GradientMethod::Analytic,
    )
}

fn perturbed(pred: &Sphere, param: usize, step: f64) -> Sphere {
    let mut s = *pred;
    match param {
        0 => s.center.x += step,
        1 => s.center.y += step,
        2 => s.center.z += step,
        _ => s.radius += step,
    }
    s
}

fn regime_of(a: &Sphere, b: &Sphere) -> Regime {
    classify(center_distance(a, b), a.radius, b.radius)
}

fn one_sided_gradient(kind: SphereLossKind, pred: &Sphere, gt: &Sphere) -> SphereGradient {
    let h = FALLBACK_STEP * pred.radius.max(1.0);
    let base_regime = regime_of(pred, gt);
    let base = sphere_loss(kind, pred, gt);
    let mut out = [0.0; 4];
    for (param, slot) in out.iter_mut().enumerate() {
        let fwd = perturbed(pred, param, h);
        let step = if regime_of(&fwd, gt) == base_regime {
            h
        } else {
            -h
        };
        let moved = perturbed(pred, param, step);
        *slot = (sphere_loss(kind, &moved, gt) - base) / step;
    }
    SphereGradient {
        d_cx: out[0],
        d_cy: out[1],
        d_cz: out[2],
        d_r: out[3],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angle_score, distance_radius_ratio, siou, Point3};

    fn sphere(x: f64, y: f64, z: f64, r: f64) -> Sphere {
        Sphere::new(Point3::new(x, y, z), r).unwrap()
    }

    fn central_difference(kind: SphereLossKind, pred: &Sphere, gt: &Sphere, h: f64) -> [f64; 4] {
        let mut g = [0.0; 4];
        for (p, slot) in g.iter_mut().enumerate() {
            let up = sphere_loss(kind, &perturbed(pred, p, h), gt);
            let down = sphere_loss(kind, &perturbed(pred, p, -h), gt);
            *slot = (up - down) / (2.0 * h);
        }
        g
    }

    #[test]
    fn loss_examples() {
        let gt = sphere(0.0, 0.0, 0.0, 1.5);
        assert_eq!(sphere_loss(SphereLossKind::SIoUpp, &gt, &gt), 0.0);
        let far = sphere(0.0, 0.0, -8.0, 1.5);
        assert!((sphere_loss(SphereLossKind::SIoUpp, &far, &gt) - 8.0 / 11.0).abs() < 1e-12);
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        let b = sphere(1.0, 0.0, 0.0, 1.0);
        assert!((sphere_loss(SphereLossKind::SIoUpp, &a, &b) - 40.0 / 27.0).abs() < 1e-12);
    }

    #[test]
    fn composite_matches_geometry_module() {
        let a = sphere(0.3, -0.2, 0.9, 1.3);
        let b = sphere(0.0, 0.5, 0.0, 0.8);
        let s = siou(&a, &b);
        let r = distance_radius_ratio(&a, &b);
        let e = angle_score(&a, &b);
        assert!((sphere_loss(SphereLossKind::SIoU, &a, &b) - (1.0 - s)).abs() < 1e-14);
        assert!((sphere_loss(SphereLossKind::SDIoU, &a, &b) - (1.0 + r - s)).abs() < 1e-14);
        assert!((sphere_loss(SphereLossKind::SIoUpp, &a, &b) - (1.0 + r - s + e)).abs() < 1e-14);
    }

    #[test]
    fn box_iou_identity_and_disjoint() {
        let a = sphere(1.0, 2.0, 3.0, 2.0);
        assert!((box_iou(&a, &a) - 1.0).abs() < 1e-15);
        assert_eq!(sphere_loss(SphereLossKind::BoxIoU, &a, &a), 0.0);
        assert_eq!(box_iou(&a, &sphere(10.0, 2.0, 3.0, 2.0)), 0.0);
        // cubes offset by half an edge along x
        let h = 2.0 / 3f64.sqrt();
        let b = sphere(1.0 + h, 2.0, 3.0, 2.0);
        assert!((box_iou(&a, &b) - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_siou_gradient_is_zero() {
        let g = sphere_loss_gradient(
            SphereLossKind::SIoU,
            &sphere(0.0, 0.0, -8.0, 1.5),
            &sphere(0.0, 0.0, 0.0, 1.5),
        );
        assert!(g.is_zero());
    }

    #[test]
    fn siou_pp_pulls_toward_target() {
        let g = sphere_loss_gradient(
            SphereLossKind::SIoUpp,
            &sphere(0.0, 0.0, -8.0, 1.5),
            &sphere(0.0, 0.0, 0.0, 1.5),
        );
        assert!(g.d_cz < 0.0);
        assert_eq!(g.d_cx, 0.0);
        // dR/dd = S / (d + S)^2
        assert!((g.d_cz + 3.0 / 121.0).abs() < 1e-15);
    }

    #[test]
    fn perturbed_identity_matches_finite_difference() {
        let gt = sphere(0.0, 0.0, 0.0, 1.5);
        // slightly larger radius keeps the box faces apart, where box IoU is smooth
        let pred = sphere(0.0, 0.0, 1e-3, 1.502);
        for kind in SphereLossKind::ALL {
            let (g, method) = sphere_loss_gradient_with_method(kind, &pred, &gt);
            assert_eq!(method, GradientMethod::Analytic);
            let fd = central_difference(kind, &pred, &gt, 1e-7);
            for (a, n) in g.as_array().iter().zip(fd) {
                assert!(
                    (a - n).abs() <= 1e-4 * a.abs().max(n.abs()) + 1e-6,
                    "{kind}: {a} vs {n}"
                );
            }
        }
    }

    #[test]
    fn boundary_uses_one_sided_difference() {
        let gt = sphere(0.0, 0.0, 0.0, 1.0);
        let pred = sphere(2.0, 0.0, 0.0, 1.0);
        let (g, method) = sphere_loss_gradient_with_method(SphereLossKind::SIoUpp, &pred, &gt);
        assert_eq!(method, GradientMethod::OneSided);
        // tangent is disjoint, so the R_DR branch is differentiated: S / (d + S)^2 = 2 / 16
        assert!((g.d_cx - 0.125).abs() < 1e-6);
        assert!(g.as_array().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn parse_kinds() {
        for kind in SphereLossKind::ALL {
            assert_eq!(kind.name().parse::<SphereLossKind>().unwrap(), kind);
        }
        assert!("giou".parse::<SphereLossKind>().is_err());
    }
}
