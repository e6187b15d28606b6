//! Sphere–sphere overlap geometry.
//!
//! Every measure here is a function of the two radii and the center
//! distance only, so all of them are invariant to rigid motions and to a
//! common rescaling of both spheres. All quantities are in world voxel
//! units.
//!
//! Two spheres fall into one of three regimes:
//!
//! * **disjoint** when `d >= r_a + r_b` (tangency counts as disjoint),
//! * **contained** when `d + min(r_a, r_b) <= max(r_a, r_b)`; the
//!   intersection is then the whole smaller sphere,
//! * **intersecting** otherwise; the intersection is a lens made of two
//!   spherical caps.

use std::f64::consts::PI;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point (or displacement) in world voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const ORIGIN: Point3 = Point3 {
        x: 0.0,
        y: 0.0,
        z: 0.0,
    };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn dot(self, other: Point3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Point3) -> f64 {
        (self - other).norm()
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Point3 {
    fn from([x, y, z]: [f64; 3]) -> Self {
        Self { x, y, z }
    }
}

impl Add for Point3 {
    type Output = Point3;
    fn add(self, o: Point3) -> Point3 {
        Point3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Point3 {
    type Output = Point3;
    fn sub(self, o: Point3) -> Point3 {
        Point3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Point3 {
    type Output = Point3;
    fn neg(self) -> Point3 {
        Point3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Point3 {
    type Output = Point3;
    fn mul(self, s: f64) -> Point3 {
        Point3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl fmt::Display for Point3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.z)
    }
}

/// A bounding sphere: the object representation used everywhere in this crate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sphere {
    pub center: Point3,
    pub radius: f64,
}

impl Sphere {
    /// Builds a sphere, rejecting non-finite coordinates and non-positive radii.
    pub fn new(center: Point3, radius: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::InvalidSphere(format!("non-finite center {center}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidSphere(format!(
                "radius {radius} must be positive"
            )));
        }
        Ok(Self { center, radius })
    }

    pub fn volume(&self) -> f64 {
        ball_volume(self.radius)
    }
}

pub fn ball_volume(radius: f64) -> f64 {
    4.0 * PI * radius * radius * radius / 3.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Disjoint,
    Intersecting,
    Contained,
}

/// Cap data of the lens formed by two intersecting spheres.
///
/// `h1` is the height of the cap cut from sphere `b`, `h2` the height of
/// the cap cut from sphere `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LensCaps {
    pub cos_phi_a: f64,
    pub cos_phi_b: f64,
    pub h1: f64,
    pub h2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapGeometry {
    pub d_ab: f64,
    pub regime: Regime,
    /// Cosine of the intersection angle, clamped to `[-1, 1]`.
    pub cos_phi_ab: f64,
    /// Present only in the intersecting regime.
    pub caps: Option<LensCaps>,
}

pub fn center_distance(a: &Sphere, b: &Sphere) -> f64 {
    a.center.distance(b.center)
}

pub(crate) fn classify(d: f64, ra: f64, rb: f64) -> Regime {
    if d >= ra + rb {
        Regime::Disjoint
    } else if d + ra.min(rb) <= ra.max(rb) {
        Regime::Contained
    } else {
        Regime::Intersecting
    }
}

fn clamp_unit(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Cosine of the intersection angle between the two sphere surfaces.
pub(crate) fn cos_intersection_angle(d: f64, ra: f64, rb: f64) -> f64 {
    (rb * rb + ra * ra - d * d) / (2.0 * (ra * rb))
}

pub(crate) fn lens_caps(d: f64, ra: f64, rb: f64) -> LensCaps {
    let cos_phi_a = clamp_unit((ra * ra + d * d - rb * rb) / (2.0 * ra * d));
    let cos_phi_b = clamp_unit((rb * rb + d * d - ra * ra) / (2.0 * rb * d));
    LensCaps {
        cos_phi_a,
        cos_phi_b,
        h1: rb * (1.0 - cos_phi_b),
        h2: ra * (1.0 - cos_phi_a),
    }
}

/// Volume of a spherical cap of height `h` cut from a ball of radius `r`.
pub(crate) fn cap_volume(r: f64, h: f64) -> f64 {
    PI * h * h * (r - h / 3.0)
}

pub fn overlap_geometry(a: &Sphere, b: &Sphere) -> OverlapGeometry {
    let d = center_distance(a, b);
    let (ra, rb) = (a.radius, b.radius);
    let regime = classify(d, ra, rb);
    OverlapGeometry {
        d_ab: d,
        regime,
        cos_phi_ab: clamp_unit(cos_intersection_angle(d, ra, rb)),
        caps: (regime == Regime::Intersecting).then(|| lens_caps(d, ra, rb)),
    }
}

pub(crate) fn intersection_from(d: f64, ra: f64, rb: f64) -> f64 {
    match classify(d, ra, rb) {
        Regime::Disjoint => 0.0,
        Regime::Contained => ball_volume(ra.min(rb)),
        Regime::Intersecting => {
            let caps = lens_caps(d, ra, rb);
            cap_volume(ra, caps.h2) + cap_volume(rb, caps.h1)
        }
    }
}

pub fn intersection_volume(a: &Sphere, b: &Sphere) -> f64 {
    intersection_from(center_distance(a, b), a.radius, b.radius)
}

/// Intersection and union volumes. In the contained regime the union is
/// the larger ball, which keeps `siou` exactly 1 for identical spheres.
pub(crate) fn intersection_and_union(d: f64, ra: f64, rb: f64) -> (f64, f64) {
    match classify(d, ra, rb) {
        Regime::Contained => (ball_volume(ra.min(rb)), ball_volume(ra.max(rb))),
        _ => {
            let inter = intersection_from(d, ra, rb);
            (
                inter,
                4.0 * PI * (ra * ra * ra + rb * rb * rb) / 3.0 - inter,
            )
        }
    }
}

pub fn union_volume(a: &Sphere, b: &Sphere) -> f64 {
    intersection_and_union(center_distance(a, b), a.radius, b.radius).1
}

/// Sphere intersection-over-union.
pub fn siou(a: &Sphere, b: &Sphere) -> f64 {
    let (inter, union) = intersection_and_union(center_distance(a, b), a.radius, b.radius);
    (inter / union).clamp(0.0, 1.0)
}

/// `d / (d + r_a + r_b)`; nonzero even for disjoint spheres.
pub fn distance_radius_ratio(a: &Sphere, b: &Sphere) -> f64 {
    let d = center_distance(a, b);
    d / (d + (a.radius + b.radius))
}

/// Normalized intersection angle `arccos(cos phi_ab) / pi`, zero once the
/// spheres are strictly apart.
pub fn angle_score(a: &Sphere, b: &Sphere) -> f64 {
    let d = center_distance(a, b);
    if d > a.radius + b.radius {
        return 0.0;
    }
    clamp_unit(cos_intersection_angle(d, a.radius, b.radius)).acos() / PI
}

/// Monte-Carlo estimate of the intersection volume.
///
/// Points are drawn uniformly inside the smaller sphere (rejection from its
/// bounding cube) and the estimate is `V_small * hits / samples`. Each
/// proposal uses one 64-bit draw split into three 21-bit coordinates on the
/// midpoints of a `2^21` lattice, which is far finer than the sampling
/// noise at any practical sample count.
pub fn mc_intersection_volume(a: &Sphere, b: &Sphere, samples: u64, seed: u64) -> f64 {
    assert!(samples >= 1, "samples must be at least 1");
    let (small, big) = if a.radius <= b.radius { (a, b) } else { (b, a) };
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);

    const BITS: u32 = 21;
    const MASK: u64 = (1 << BITS) - 1;
    let scale = 2.0 / (1u64 << BITS) as f64;
    let coord = |k: u64| (k as f64 + 0.5) * scale - 1.0;

    let r = small.radius;
    let offset = small.center - big.center;
    let big_r2 = big.radius * big.radius;

    let mut accepted = 0u64;
    let mut hits = 0u64;
    while accepted < samples {
        let bits = rng.next_u64();
        let ux = coord(bits & MASK);
        let uy = coord((bits >> BITS) & MASK);
        let uz = coord((bits >> (2 * BITS)) & MASK);
        let inside = u64::from(ux * ux + uy * uy + uz * uz <= 1.0);
        let px = offset.x + r * ux;
        let py = offset.y + r * uy;
        let pz = offset.z + r * uz;
        let hit = u64::from(px * px + py * py + pz * pz <= big_r2);
        accepted += inside;
        hits += inside & hit;
    }
    small.volume() * hits as f64 / samples as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere(x: f64, y: f64, z: f64, r: f64) -> Sphere {
        Sphere::new(Point3::new(x, y, z), r).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn center_distance_examples() {
        let o = sphere(0.0, 0.0, 0.0, 1.0);
        assert_eq!(center_distance(&o, &o), 0.0);
        assert_eq!(center_distance(&sphere(0.0, 0.0, -8.0, 1.5), &o), 8.0);
        assert_eq!(center_distance(&sphere(3.0, 4.0, 0.0, 1.0), &o), 5.0);
    }

    #[test]
    fn rejects_bad_spheres() {
        assert!(Sphere::new(Point3::ORIGIN, 0.0).is_err());
        assert!(Sphere::new(Point3::ORIGIN, -1.0).is_err());
        assert!(Sphere::new(Point3::new(f64::NAN, 0.0, 0.0), 1.0).is_err());
        assert!(Sphere::new(Point3::ORIGIN, f64::INFINITY).is_err());
    }

    #[test]
    fn overlap_geometry_unit_pair() {
        let g = overlap_geometry(&sphere(0.0, 0.0, 0.0, 1.0), &sphere(1.0, 0.0, 0.0, 1.0));
        assert_eq!(g.regime, Regime::Intersecting);
        let caps = g.caps.unwrap();
        assert!((caps.cos_phi_a - 0.5).abs() < 1e-15);
        assert!((caps.cos_phi_b - 0.5).abs() < 1e-15);
        assert!((caps.h1 - 0.5).abs() < 1e-15);
        assert!((caps.h2 - 0.5).abs() < 1e-15);
        assert!((g.cos_phi_ab - 0.5).abs() < 1e-15);
    }

    #[test]
    fn regimes() {
        let o = sphere(0.0, 0.0, 0.0, 1.5);
        assert_eq!(
            overlap_geometry(&sphere(0.0, 0.0, -8.0, 1.5), &o).regime,
            Regime::Disjoint
        );
        let g = overlap_geometry(&sphere(0.0, 0.0, 0.0, 3.0), &sphere(0.5, 0.0, 0.0, 1.0));
        assert_eq!(g.regime, Regime::Contained);
        assert!(g.caps.is_none());
        // tangency is disjoint
        assert_eq!(
            overlap_geometry(&sphere(2.0, 0.0, 0.0, 1.0), &sphere(0.0, 0.0, 0.0, 1.0)).regime,
            Regime::Disjoint
        );
        // concentric unequal radii resolve before any division by d
        let g = overlap_geometry(&sphere(0.0, 0.0, 0.0, 2.0), &sphere(0.0, 0.0, 0.0, 1.0));
        assert_eq!(g.regime, Regime::Contained);
        assert_eq!(g.d_ab, 0.0);
        // identical spheres are contained
        assert_eq!(overlap_geometry(&o, &o).regime, Regime::Contained);
    }

    #[test]
    fn volumes() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        let b = sphere(1.0, 0.0, 0.0, 1.0);
        let unit = 4.0 * PI / 3.0;
        assert!(rel(intersection_volume(&a, &a), unit) < 1e-15);
        assert!(rel(intersection_volume(&a, &b), 5.0 * PI / 12.0) < 1e-14);
        assert_eq!(intersection_volume(&a, &sphere(2.0, 0.0, 0.0, 1.0)), 0.0);

        assert!(rel(union_volume(&a, &a), unit) < 1e-15);
        assert!(rel(union_volume(&a, &b), 9.0 * PI / 4.0) < 1e-14);
        let far = union_volume(&sphere(0.0, 0.0, 0.0, 1.0), &sphere(10.0, 0.0, 0.0, 2.0));
        assert!(rel(far, 12.0 * PI) < 1e-15);
    }

    #[test]
    fn siou_examples() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        assert_eq!(siou(&a, &a), 1.0);
        assert!((siou(&a, &sphere(1.0, 0.0, 0.0, 1.0)) - 5.0 / 27.0).abs() < 1e-12);
        assert_eq!(
            siou(&sphere(0.0, 0.0, -8.0, 1.5), &sphere(0.0, 0.0, 0.0, 1.5)),
            0.0
        );
    }

    #[test]
    fn distance_radius_ratio_examples() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        assert_eq!(distance_radius_ratio(&a, &a), 0.0);
        let r = distance_radius_ratio(&sphere(0.0, 0.0, -8.0, 1.5), &sphere(0.0, 0.0, 0.0, 1.5));
        assert!((r - 8.0 / 11.0).abs() < 1e-15);
        let r = distance_radius_ratio(&a, &sphere(1.0, 0.0, 0.0, 1.0));
        assert!((r - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn angle_score_examples() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        assert_eq!(angle_score(&a, &a), 0.0);
        assert!((angle_score(&a, &sphere(1.0, 0.0, 0.0, 1.0)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(
            angle_score(&sphere(0.0, 0.0, -8.0, 1.5), &sphere(0.0, 0.0, 0.0, 1.5)),
            0.0
        );
        // strictly apart only: the tangent configuration still scores 1
        assert!((angle_score(&a, &sphere(2.0, 0.0, 0.0, 1.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn mc_matches_identity_and_disjoint() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        let est = mc_intersection_volume(&a, &a, 1_000_000, 7);
        assert!(rel(est, 4.0 * PI / 3.0) < 0.01);
        let far = sphere(5.0, 0.0, 0.0, 1.0);
        assert_eq!(mc_intersection_volume(&a, &far, 100_000, 7), 0.0);
    }

    #[test]
    fn mc_is_deterministic_per_seed() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        let b = sphere(1.0, 0.0, 0.0, 1.0);
        let x = mc_intersection_volume(&a, &b, 200_000, 3);
        let y = mc_intersection_volume(&a, &b, 200_000, 3);
        assert_eq!(x.to_bits(), y.to_bits());
    }

    #[test]
    fn mc_unit_pair_within_tolerance() {
        let a = sphere(0.0, 0.0, 0.0, 1.0);
        let b = sphere(1.0, 0.0, 0.0, 1.0);
        let est = mc_intersection_volume(&a, &b, 10_000_000, 11);
        assert!(rel(est, 5.0 * PI / 12.0) < 3e-3, "estimate {est}");
    }

    #[test]
    fn regime_continuity() {
        for &(ra, rb) in &[(1.0, 1.0), (2.0, 0.5), (0.7, 3.1), (10.0, 9.0)] {
            let small = ball_volume(f64::min(ra, rb));
            let near_tangent = intersection_from(ra + rb - 1e-6, ra, rb);
            assert!(near_tangent / small < 1e-4, "{ra} {rb}: {near_tangent}");
            let near_contained = intersection_from((ra - rb).abs() + 1e-6, ra, rb);
            assert!(
                (near_contained - small).abs() / small < 1e-4,
                "{ra} {rb}: {near_contained}"
            );
        }
    }
}
