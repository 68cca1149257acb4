mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spoofsim_core::eval::*;
use spoofsim_core::geometry::{assign_azimuth_bins, Point, PointCloud};
use spoofsim_core::io::DetectionRecord;
use spoofsim_core::Error;

fn bx(cx: f64, cy: f64, l: f64, w: f64, yaw: f64) -> OrientedBox {
    OrientedBox::new([cx, cy, 0.0], [l, w, 1.0], yaw).unwrap()
}

fn det(b: OrientedBox) -> DetectionRecord {
    DetectionRecord {
        bbox: b,
        score: 0.9,
        label: "car".into(),
    }
}

fn random_box(rng: &mut ChaCha8Rng) -> OrientedBox {
    bx(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(0.3..5.0),
        rng.random_range(0.3..3.0),
        rng.random_range(-PI..PI),
    )
}

#[test]
fn iou_examples() {
    let a = bx(0.0, 0.0, 2.0, 2.0, 0.0);
    assert_eq!(iou_bev(&a, &a), 1.0);
    assert_eq!(iou_bev(&a, &bx(100.0, 0.0, 1.0, 1.0, 0.0)), 0.0);
    let b = bx(1.0, 0.0, 2.0, 2.0, 0.0);
    assert_eq!(iou_bev(&a, &b), 1.0 / 3.0);
    assert!((common::grid_iou(&a, &b, 1000) - 1.0 / 3.0).abs() < 1e-3);
    assert_eq!(iou_bev(&a, &bx(2.0, 0.0, 2.0, 2.0, 0.0)), 0.0);
}

#[test]
fn iou_agrees_with_grid_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut overlapping = 0;
    for _ in 0..200 {
        let (a, b) = (random_box(&mut rng), random_box(&mut rng));
        let exact = iou_bev(&a, &b);
        let grid = common::grid_iou(&a, &b, 1000);
        assert!(
            (exact - grid).abs() < 1e-3,
            "{a:?} {b:?}: {exact} vs {grid}"
        );
        overlapping += (exact > 0.0) as usize;
    }
    assert!(overlapping > 50);
}

#[test]
fn success_criteria() {
    let gt = bx(10.0, 0.0, 4.5, 1.9, 0.0);
    assert!(!injection_success(&[], &gt));
    assert!(injection_success(&[det(gt)], &gt));
    let touching = bx(10.0 + 4.5, 0.0, 4.5, 1.9, 0.0);
    assert_eq!(iou_bev(&touching, &gt), 0.0);
    assert!(!injection_success(&[det(touching)], &gt));

    assert!(removal_success(&[], &gt));
    assert!(!removal_success(&[det(gt)], &gt));
    let far = [
        det(bx(-10.0, 0.0, 1.0, 1.0, 0.0)),
        det(bx(10.0, 20.0, 4.0, 2.0, 1.0)),
    ];
    assert!(removal_success(&far, &gt));
    assert_eq!(max_iou(&far, &gt), 0.0);
}

#[test]
fn success_rate_aggregation() {
    assert_eq!(success_rate(&[true]).unwrap().success_rate, 1.0);
    assert_eq!(success_rate(&[true, false]).unwrap().success_rate, 0.5);
    let v: Vec<bool> = (0..100).map(|i| i < 37).collect();
    let r = success_rate(&v).unwrap();
    assert_eq!((r.trials, r.successes, r.success_rate), (100, 37, 0.37));
    assert_eq!(r.per_trial, v);
    assert!(matches!(success_rate(&[]), Err(Error::InvalidArgument(_))));
}

fn wall(n: usize) -> PointCloud {
    (0..n)
        .map(|i| {
            let az = (-20.0 + 40.0 * i as f64 / n as f64).to_radians();
            Point::new(
                15.0 * az.cos(),
                15.0 * az.sin(),
                (i % 5) as f64 * 0.2,
                20.0 + (i % 50) as f64,
            )
        })
        .collect()
}

#[test]
fn counting_constructed_cases() {
    let benign = wall(1000);
    assert_eq!(count_injected(&benign, &benign, 80.0), 0);
    assert_eq!(count_removed(&benign, &benign, 80.0, DEFAULT_MATCH_TOL), 0);

    let mut attacked = benign.points.clone();
    attacked.extend((0..50).map(|i| Point::new(8.0, 0.01 * i as f64, 0.0, 255.0)));
    let attacked = PointCloud::new(attacked);
    assert_eq!(count_injected(&benign, &attacked, 80.0), 50);
    assert_eq!(count_injected(&benign, &attacked, 255.0), 0);
    assert_eq!(
        count_removed(&benign, &attacked, 80.0, DEFAULT_MATCH_TOL),
        0
    );

    let minus: PointCloud = benign
        .points
        .iter()
        .enumerate()
        .filter(|(i, _)| i % 33 != 0 || *i >= 990)
        .map(|(_, p)| *p)
        .collect();
    assert_eq!(benign.len() - minus.len(), 30);
    assert_eq!(count_removed(&benign, &minus, 80.0, DEFAULT_MATCH_TOL), 30);

    let mut moved = benign.clone();
    moved.points[17].y += 2.0 * DEFAULT_MATCH_TOL;
    assert_eq!(count_removed(&benign, &moved, 80.0, DEFAULT_MATCH_TOL), 1);
}

#[test]
fn counting_uses_channels_when_present() {
    let benign = assign_azimuth_bins(&wall(200), 0.1).unwrap();
    let mut attacked = benign.clone();
    // a point moved far along its ray still matches by channel
    attacked.points[5] = attacked.points[5].moved_to(attacked.points[5].position() * 0.5);
    attacked.points.remove(9);
    assert_eq!(
        count_removed(&benign, &attacked, 80.0, DEFAULT_MATCH_TOL),
        1
    );
}

#[test]
fn per_azimuth_percentages() {
    let benign = wall(400);
    let same = removal_percentage_per_azimuth(&benign, &benign, 5.0, 80.0, DEFAULT_MATCH_TOL);
    assert!(!same.is_empty() && same.values().all(|&v| v == 0.0));

    let bin_of = |p: &Point| (p.azimuth_deg() / 5.0).floor() as u32;
    let target = bin_of(&benign.points[0]);
    let emptied: PointCloud = benign
        .points
        .iter()
        .filter(|p| bin_of(p) != target)
        .copied()
        .collect();
    let t = removal_percentage_per_azimuth(&benign, &emptied, 5.0, 80.0, DEFAULT_MATCH_TOL);
    for (&b, &v) in &t {
        assert_eq!(v, if b == target { 1.0 } else { 0.0 });
    }

    // 200 points in one bin, every second one deleted
    let bin: PointCloud = (0..200)
        .map(|i| {
            let az = (10.0 + 0.02 * i as f64).to_radians();
            Point::new(20.0 * az.cos(), 20.0 * az.sin(), 0.0, 30.0)
        })
        .collect();
    let half: PointCloud = bin.points.iter().step_by(2).copied().collect();
    let t = removal_percentage_per_azimuth(&bin, &half, 5.0, 80.0, DEFAULT_MATCH_TOL);
    assert_eq!(t.len(), 1);
    assert_eq!(t[&2], 0.5);
}

proptest! {
    #[test]
    fn iou_symmetric_and_bounded(
        ax in -3.0..3.0f64, ay in -3.0..3.0f64, al in 0.1..5.0f64, aw in 0.1..5.0f64, ayaw in -4.0..4.0f64,
        bx_ in -3.0..3.0f64, by in -3.0..3.0f64, bl in 0.1..5.0f64, bw in 0.1..5.0f64, byaw in -4.0..4.0f64,
    ) {
        let a = bx(ax, ay, al, aw, ayaw);
        let b = bx(bx_, by, bl, bw, byaw);
        let ab = iou_bev(&a, &b);
        prop_assert_eq!(ab, iou_bev(&b, &a));
        prop_assert!((0.0..=1.0).contains(&ab));
        prop_assert!((iou_bev(&a, &a) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn percentages_bounded(keep in proptest::collection::vec(any::<bool>(), 300)) {
        let benign = wall(300);
        let attacked: PointCloud = benign.points.iter().zip(&keep).filter(|(_, k)| **k).map(|(p, _)| *p).collect();
        let t = removal_percentage_per_azimuth(&benign, &attacked, 2.0, 80.0, DEFAULT_MATCH_TOL);
        prop_assert!(t.values().all(|v| (0.0..=1.0).contains(v)));
        let removed = count_removed(&benign, &attacked, 80.0, DEFAULT_MATCH_TOL);
        prop_assert_eq!(removed, keep.iter().filter(|k| !**k).count());
    }
}
