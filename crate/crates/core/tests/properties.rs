//! Property-based invariants across the library.

use proptest::prelude::*;
use sphere_detect::decode::{nms_siou, rank_order, Candidate, NmsParams};
use sphere_detect::froc::{froc, ScanResult};
use sphere_detect::geometry::{
    angle_score, ball_volume, distance_radius_ratio, intersection_volume, siou, union_volume,
    Point3, Sphere,
};
use sphere_detect::grid::GridSpec;
use sphere_detect::losses::{cell_cls_loss, radius_loss, sphere_loss, FocalParams, SphereLossKind};
use sphere_detect::matching::{assign_labels, ohem_budget, ohem_refine, Label, NoduleAnnotation};

fn point() -> impl Strategy<Value = Point3> {
    (-30.0..30.0f64, -30.0..30.0f64, -30.0..30.0f64).prop_map(|(x, y, z)| Point3::new(x, y, z))
}

fn sphere_s() -> impl Strategy<Value = Sphere> {
    (point(), 0.2..10.0f64).prop_map(|(c, r)| Sphere::new(c, r).unwrap())
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn overlap_measures_are_symmetric(a in sphere_s(), b in sphere_s()) {
        prop_assert_eq!(intersection_volume(&a, &b), intersection_volume(&b, &a));
        prop_assert_eq!(siou(&a, &b), siou(&b, &a));
        prop_assert_eq!(distance_radius_ratio(&a, &b), distance_radius_ratio(&b, &a));
        prop_assert_eq!(angle_score(&a, &b), angle_score(&b, &a));
    }

    #[test]
    fn overlap_measures_are_bounded(a in sphere_s(), b in sphere_s()) {
        let inter = intersection_volume(&a, &b);
        let small = ball_volume(a.radius.min(b.radius));
        prop_assert!(inter >= 0.0 && inter <= small * (1.0 + 1e-12));
        prop_assert!(union_volume(&a, &b) >= ball_volume(a.radius.max(b.radius)) * (1.0 - 1e-12));
        let s = siou(&a, &b);
        prop_assert!((0.0..=1.0).contains(&s));
        let r = distance_radius_ratio(&a, &b);
        prop_assert!((0.0..1.0).contains(&r));
        prop_assert!((0.0..=1.0).contains(&angle_score(&a, &b)));
        for kind in SphereLossKind::ALL {
            let l = sphere_loss(kind, &a, &b);
            prop_assert!((-1e-12..3.0).contains(&l), "{} = {}", kind, l);
        }
    }

    #[test]
    fn rigid_motion_invariance(a in sphere_s(), b in sphere_s(), t in point(), perm in 0usize..6) {
        let move_point = |p: Point3| {
            let v = p.to_array();
            let q = match perm {
                0 => [v[0], v[1], v[2]],
                1 => [v[1], v[0], v[2]],
                2 => [v[2], v[1], v[0]],
                3 => [v[0], v[2], v[1]],
                4 => [-v[0], v[1], -v[2]],
                _ => [v[1], -v[2], v[0]],
            };
            Point3::from(q) + t
        };
        let ma = Sphere::new(move_point(a.center), a.radius).unwrap();
        let mb = Sphere::new(move_point(b.center), b.radius).unwrap();
        prop_assert!(close(intersection_volume(&a, &b), intersection_volume(&ma, &mb), 1e-9));
        prop_assert!(close(siou(&a, &b), siou(&ma, &mb), 1e-9));
        for kind in [SphereLossKind::SIoU, SphereLossKind::SDIoU, SphereLossKind::SIoUpp] {
            prop_assert!(close(sphere_loss(kind, &a, &b), sphere_loss(kind, &ma, &mb), 1e-9));
        }
    }

    #[test]
    fn scale_invariance(a in sphere_s(), b in sphere_s(), k in 0.1..10.0f64) {
        let scale = |s: &Sphere| Sphere::new(s.center * k, s.radius * k).unwrap();
        let (sa, sb) = (scale(&a), scale(&b));
        prop_assert!(close(siou(&a, &b), siou(&sa, &sb), 1e-9));
        prop_assert!(close(distance_radius_ratio(&a, &b), distance_radius_ratio(&sa, &sb), 1e-12));
        prop_assert!(close(intersection_volume(&a, &b) * k.powi(3), intersection_volume(&sa, &sb), 1e-9));
    }

    #[test]
    fn focal_loss_monotone_in_confidence(p in 0.0..1.0f64, q in 0.0..1.0f64) {
        let params = FocalParams::default();
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        // positives: weight only changes at t, compare within one weight band
        if (lo < params.t) == (hi < params.t) {
            prop_assert!(cell_cls_loss(lo, Label::Positive, &params) >= cell_cls_loss(hi, Label::Positive, &params));
        }
        prop_assert!(cell_cls_loss(lo, Label::Negative, &params) <= cell_cls_loss(hi, Label::Negative, &params));
        prop_assert_eq!(cell_cls_loss(p, Label::Ignored, &params), 0.0);
    }

    #[test]
    fn radius_loss_is_even(target in 0.1..10.0f64, delta in 0.0..5.0f64, beta in 0.01..2.0f64) {
        let up = radius_loss(target + delta, target, beta);
        let down = radius_loss(target - delta, target, beta);
        prop_assert!(close(up, down, 1e-12));
        prop_assert!(up >= 0.0);
        prop_assert_eq!(radius_loss(target, target, beta), 0.0);
    }
}

fn grid_and_nodules() -> impl Strategy<Value = (GridSpec, Vec<NoduleAnnotation>, Vec<f64>)> {
    (
        (3usize..12, 3usize..12, 3usize..12),
        prop::sample::select(vec![1usize, 2, 4]),
    )
        .prop_flat_map(|((d, h, w), stride)| {
            let grid = GridSpec::new([d, h, w], stride).unwrap();
            let e = grid.world_extent();
            let nodule = (0.0..e.x, 0.0..e.y, 0.0..e.z, 0.5..6.0f64)
                .prop_map(|(x, y, z, r)| NoduleAnnotation::new("n", Point3::new(x, y, z), r));
            (
                Just(grid),
                prop::collection::vec(nodule, 0..4),
                prop::collection::vec((0u8..8).prop_map(|v| v as f64 / 4.0), grid.cell_count()),
            )
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn assignment_partitions_and_mines_hardest((grid, nodules, loss) in grid_and_nodules(), k in 1usize..8, n in 1usize..5) {
        let initial = assign_labels(&grid, &nodules, k).unwrap();
        let c = initial.counts();
        prop_assert_eq!(c.positive + c.negative + c.ignored, grid.cell_count());
        for (i, _) in nodules.iter().enumerate() {
            prop_assert!(initial.positives_of(i).len() <= k);
        }
        let mined = ohem_refine(&initial, &loss, n).unwrap();
        let m = mined.counts();
        prop_assert_eq!(m.positive, c.positive);
        prop_assert_eq!(m.negative, c.negative.min(ohem_budget(c.positive, n)));
        let kept: Vec<usize> = mined.cells_with(Label::Negative).collect();
        let dropped: Vec<usize> = initial
            .cells_with(Label::Negative)
            .filter(|&cell| mined.label(cell) == Label::Ignored)
            .collect();
        if let (Some(min_kept), Some(max_dropped)) = (
            kept.iter().map(|&i| loss[i]).reduce(f64::min),
            dropped.iter().map(|&i| loss[i]).reduce(f64::max),
        ) {
            prop_assert!(min_kept >= max_dropped);
        }
        prop_assert_eq!(ohem_refine(&initial, &loss, n).unwrap(), mined);
    }
}

fn candidates() -> impl Strategy<Value = Vec<Candidate>> {
    prop::collection::vec((point(), 1.0..6.0f64, 0u8..10), 0..30).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(cell, (c, r, s))| {
                Candidate::new(Sphere::new(c * 0.5, r).unwrap(), s as f64 / 10.0, 1, cell)
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn nms_keeps_a_non_overlapping_cover(cands in candidates()) {
        let params = NmsParams::default();
        let kept = nms_siou(&cands, &params);
        for (i, a) in kept.iter().enumerate() {
            prop_assert!(cands.contains(a));
            for b in &kept[i + 1..] {
                prop_assert!(!params.suppresses(&a.sphere, &b.sphere));
                prop_assert!(rank_order(a, b).is_lt());
            }
        }
        for c in cands.iter().filter(|c| !kept.contains(c)) {
            prop_assert!(kept.iter().any(|k| rank_order(k, c).is_lt() && params.suppresses(&k.sphere, &c.sphere)));
        }
    }

    #[test]
    fn froc_curve_is_monotone_and_order_free(
        cands in candidates(),
        anns in prop::collection::vec((point(), 1.0..8.0f64), 1..6),
        split in 1usize..4,
    ) {
        let annotations: Vec<NoduleAnnotation> = anns
            .iter()
            .enumerate()
            .map(|(i, (c, r))| NoduleAnnotation::new(format!("a{i}"), *c * 0.5, *r))
            .collect();
        let mut scans: Vec<ScanResult> = (0..split)
            .map(|s| ScanResult {
                scan_id: format!("s{s}"),
                candidates: cands.iter().filter(|c| c.cell % split == s).copied().collect(),
                annotations: annotations.iter().skip(s).step_by(split).cloned().collect(),
            })
            .collect();
        if scans.iter().all(|s| s.annotations.is_empty()) {
            return Ok(());
        }
        let curve = froc(&scans).unwrap();
        let s: Vec<f64> = curve.points.iter().map(|p| p.sensitivity).collect();
        prop_assert!(s.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(s.iter().all(|v| (0.0..=1.0).contains(v)));
        scans.reverse();
        for scan in &mut scans {
            scan.candidates.reverse();
        }
        prop_assert_eq!(froc(&scans).unwrap(), curve);
    }
}
