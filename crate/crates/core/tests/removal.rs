use proptest::prelude::*;
use spoofsim_core::geometry::{assign_azimuth_bins, AzimuthSpan, Point, PointCloud};
use spoofsim_core::profiles::{LidarProfile, ProfileRegistry, SPEED_OF_LIGHT};
use spoofsim_core::removal::*;
use spoofsim_core::Error;

/// Points on a ring of radius `r`, `per_bin` per 1-degree azimuth step over
/// `[0, 360)`, at a few heights.
fn ring(r: f64, per_bin: usize) -> PointCloud {
    let mut pts = Vec::new();
    for deg in 0..360 {
        for k in 0..per_bin {
            let az = (deg as f64 + (k as f64 + 0.5) / per_bin as f64).to_radians();
            let z = -1.0 + 0.1 * (k % 7) as f64;
            pts.push(Point::new(r * az.cos(), r * az.sin(), z, 40.0));
        }
    }
    assign_azimuth_bins(&PointCloud::new(pts), 0.1).unwrap()
}

fn profile(name: &str) -> LidarProfile {
    ProfileRegistry::builtin().lookup(name).unwrap().clone()
}

fn spec(kind: RemovalKind, table: ProbabilityTable, span: AzimuthSpan, seed: u64) -> RemovalSpec {
    RemovalSpec::new(kind, table, span, seed)
}

#[test]
fn xi_max_values() {
    assert!((xi_max(1e6).unwrap() - 149.896229).abs() < 1e-6);
    assert!((xi_max(2e6).unwrap() - 74.9481145).abs() < 1e-7);
    assert!(xi_max(1e12).unwrap() < 1e-3);
    assert!(matches!(xi_max(0.0), Err(Error::InvalidArgument(_))));
    assert!(xi_max(-5.0).is_err());
}

#[test]
fn zero_probability_is_identity() {
    let c = ring(20.0, 3);
    let s = spec(
        RemovalKind::Hfr { frequency_hz: 1e6 },
        ProbabilityTable::constant(0.0).unwrap(),
        AzimuthSpan::FULL,
        1,
    );
    let out = apply_removal(&c, &s, &profile("VLP-16")).unwrap();
    assert_eq!(out.surviving, c);
    assert_eq!(
        (out.removed_count, out.hit_count, out.noise_count),
        (0, 0, 0)
    );
}

#[test]
fn pra_against_min_range_filter() {
    let c = ring(20.0, 2);
    let span = AzimuthSpan::new(10.0, 40.0).unwrap();
    let in_span = c
        .points
        .iter()
        .filter(|p| span.contains(p.azimuth_deg()))
        .count();
    let s = spec(
        RemovalKind::Pra,
        ProbabilityTable::constant(1.0).unwrap(),
        span,
        3,
    );
    let out = apply_removal(&c, &s, &profile("VLP-16")).unwrap();
    assert_eq!(out.removed_count, in_span);
    assert_eq!(out.surviving.len(), c.len() - in_span);

    let full = spec(
        RemovalKind::Pra,
        ProbabilityTable::constant(1.0).unwrap(),
        AzimuthSpan::FULL,
        3,
    );
    let out = apply_removal(&c, &full, &profile("VLP-16")).unwrap();
    assert_eq!(out.removed_count, c.len());
    assert!(out.surviving.is_empty());
}

#[test]
fn pra_against_zero_min_range() {
    let c = ring(20.0, 2);
    let mut s = spec(
        RemovalKind::Pra,
        ProbabilityTable::constant(1.0).unwrap(),
        AzimuthSpan::FULL,
        3,
    );
    let xt32 = profile("XT32");
    assert!(matches!(
        apply_removal(&c, &s, &xt32),
        Err(Error::Applicability { .. })
    ));
    s.allow_inapplicable = true;
    let out = apply_removal(&c, &s, &xt32).unwrap();
    assert_eq!(out.removed_count, 0);
    assert_eq!(out.surviving.len(), c.len());
    assert!(out
        .surviving
        .points
        .iter()
        .all(|p| p.range() == 0.0 && p.intensity == 255.0));
}

#[test]
fn pra_refused_on_defended_sensors() {
    let c = ring(20.0, 1);
    let s = spec(
        RemovalKind::Pra,
        ProbabilityTable::constant(1.0).unwrap(),
        AzimuthSpan::FULL,
        0,
    );
    for p in ProfileRegistry::builtin().iter() {
        let defended = p.has_timing_randomization() || p.fingerprint;
        let r = apply_removal(&c, &s, p);
        assert_eq!(
            matches!(r, Err(Error::Applicability { .. })),
            defended,
            "{}",
            p.name
        );
    }
}

#[test]
fn unbinned_cloud_rejected() {
    let c = PointCloud::new(vec![Point::new(5.0, 0.0, 0.0, 1.0)]);
    let s = spec(
        RemovalKind::Pra,
        ProbabilityTable::constant(1.0).unwrap(),
        AzimuthSpan::FULL,
        0,
    );
    assert!(matches!(
        apply_removal(&c, &s, &profile("VLP-16")),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn expected_hit_count_over_trials() {
    let c = ring(30.0, 4);
    let span = AzimuthSpan::new(350.0, 40.0).unwrap();
    let table = build_removal_profile(&RemovalShape::default_for_span(40.0), 40.0).unwrap();
    let probs: Vec<f64> = c
        .points
        .iter()
        .filter_map(|p| {
            let ch = p.channel.unwrap();
            let center = (ch.azimuth as f64 + 0.5) * 0.1;
            span.offset(p.azimuth_deg())
                .map(|_| table.query(span.offset(center).unwrap()))
        })
        .collect();
    let expect: f64 = probs.iter().sum();
    let var: f64 = probs.iter().map(|p| p * (1.0 - p)).sum();
    let trials = 1000;
    let total: usize = (0..trials)
        .map(|t| {
            let s = spec(
                RemovalKind::Hfr { frequency_hz: 1e6 },
                table.clone(),
                span,
                t,
            );
            apply_removal(&c, &s, &profile("VLP-16")).unwrap().hit_count
        })
        .sum();
    let mean = total as f64 / trials as f64;
    let sd_of_mean = (var / trials as f64).sqrt();
    assert!(
        (mean - expect).abs() < 3.0 * sd_of_mean,
        "mean {mean} expected {expect} sd {sd_of_mean}"
    );
}

#[test]
fn hfr_survivors_stay_on_ray_within_limits() {
    let c = ring(40.0, 20);
    let vlp = profile("VLP-16");
    let s = spec(
        RemovalKind::Hfr { frequency_hz: 1e6 },
        ProbabilityTable::constant(1.0).unwrap(),
        AzimuthSpan::FULL,
        5,
    );
    let out = apply_removal(&c, &s, &vlp).unwrap();
    assert_eq!(out.hit_count, c.len());
    assert_eq!(out.noise_count, out.surviving.len());
    let hi = xi_max(1e6).unwrap().min(vlp.max_range);
    for p in &out.surviving.points {
        assert!(p.range() >= vlp.mot && p.range() <= hi);
        assert_eq!(p.intensity, 255.0);
    }
    for (i, q) in c.points.iter().enumerate() {
        let single = PointCloud {
            points: vec![*q],
            ..c.clone()
        };
        let s = spec(
            RemovalKind::Hfr { frequency_hz: 1e6 },
            ProbabilityTable::constant(1.0).unwrap(),
            AzimuthSpan::FULL,
            i as u64,
        );
        if let Some(p) = apply_removal(&single, &s, &vlp)
            .unwrap()
            .surviving
            .points
            .first()
        {
            let g = q.position() * (1.0 / q.range());
            assert!(p.position().cross(g).norm() < 1e-9 * p.range().max(1.0));
            assert!(p.position().dot(g) > 0.0);
        }
        if i > 500 {
            break;
        }
    }
}

#[test]
fn hfr_removed_fraction_matches_uniform_integral() {
    let c = ring(30.0, 300);
    assert!(c.len() >= 100_000);
    let vlp = profile("VLP-16");
    let s = spec(
        RemovalKind::Hfr { frequency_hz: 1e6 },
        ProbabilityTable::constant(1.0).unwrap(),
        AzimuthSpan::FULL,
        77,
    );
    let out = apply_removal(&c, &s, &vlp).unwrap();
    let xm = SPEED_OF_LIGHT / 2e6;
    let expect = (1.0 + (xm - 100.0)) / xm;
    let n = out.hit_count as f64;
    let frac = out.removed_count as f64 / n;
    let sd = (expect * (1.0 - expect) / n).sqrt();
    assert!(
        (frac - expect).abs() < 3.0 * sd,
        "fraction {frac} vs {expect}"
    );
}

#[test]
fn points_outside_span_untouched() {
    let c = ring(25.0, 3);
    let span = AzimuthSpan::new(100.0, 30.0).unwrap();
    let s = spec(
        RemovalKind::Hfr { frequency_hz: 2e6 },
        ProbabilityTable::constant(1.0).unwrap(),
        span,
        9,
    );
    let out = apply_removal(&c, &s, &profile("VLP-16")).unwrap();
    let outside: Vec<&Point> = c
        .points
        .iter()
        .filter(|p| !span.contains(p.azimuth_deg()))
        .collect();
    let kept: Vec<&Point> = out
        .surviving
        .points
        .iter()
        .filter(|p| p.intensity != 255.0)
        .collect();
    assert_eq!(outside, kept);
}

#[test]
fn fingerprint_caps_expected_hits() {
    let c = ring(25.0, 10);
    let span = AzimuthSpan::new(0.0, 90.0).unwrap();
    let xt32 = profile("XT32");
    let trials = 200;
    let total: usize = (0..trials)
        .map(|t| {
            let s = spec(
                RemovalKind::Hfr { frequency_hz: 1e6 },
                ProbabilityTable::constant(1.0).unwrap(),
                span,
                t,
            );
            apply_removal(&c, &s, &xt32).unwrap().hit_count
        })
        .sum();
    let mean = total as f64 / trials as f64;
    assert!(
        (mean - FINGERPRINT_HIT_CEILING).abs() < 3.0,
        "mean hits {mean}"
    );
}

#[test]
fn plateau_examples() {
    let flat = build_removal_profile(
        &RemovalShape::Plateau {
            p_center: 1.0,
            plateau_deg: 10.0,
            falloff_deg: 0.0,
        },
        10.0,
    )
    .unwrap();
    for d in [0.0, 2.5, 5.0, 9.99, 10.0] {
        assert_eq!(flat.query(d), 1.0);
    }
    let tent = build_removal_profile(
        &RemovalShape::Plateau {
            p_center: 1.0,
            plateau_deg: 0.0,
            falloff_deg: 5.0,
        },
        10.0,
    )
    .unwrap();
    assert!((tent.query(5.0) - 1.0).abs() < 1e-12);
    assert!(tent.query(0.0).abs() < 1e-12 && tent.query(10.0).abs() < 1e-12);
    assert!((tent.query(2.5) - 0.5).abs() < 1e-12);
    assert!(build_removal_profile(
        &RemovalShape::Plateau {
            p_center: 1.0,
            plateau_deg: 8.0,
            falloff_deg: 2.0,
        },
        10.0
    )
    .is_err());
    assert!(build_removal_profile(
        &RemovalShape::Plateau {
            p_center: 1.2,
            plateau_deg: 2.0,
            falloff_deg: 2.0,
        },
        10.0
    )
    .is_err());
}

#[test]
fn table_rules() {
    let single = ProbabilityTable::new(vec![(0.0, 1.0)]).unwrap();
    assert_eq!(single.query(-50.0), 1.0);
    assert_eq!(single.query(123.0), 1.0);
    let two = ProbabilityTable::new(vec![(0.0, 1.0), (10.0, 0.0)]).unwrap();
    assert!((two.query(5.0) - 0.5).abs() < 1e-12);
    assert_eq!(two.query(11.0), 0.0);
    assert!(matches!(
        ProbabilityTable::new(vec![(0.0, 1.5)]),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        ProbabilityTable::new(vec![(5.0, 0.5), (1.0, 0.5)]),
        Err(Error::Validation(_))
    ));
}

proptest! {
    #[test]
    fn plateau_is_symmetric(
        p in 0.0..=1.0f64, span in 1.0..90.0f64, plateau_frac in 0.0..1.0f64, d in 0.0..1.0f64,
    ) {
        let plateau = span * plateau_frac;
        let falloff = (span - plateau) / 2.0;
        prop_assume!(plateau > 0.0 || falloff > 0.0);
        let t = build_removal_profile(&RemovalShape::Plateau { p_center: p, plateau_deg: plateau, falloff_deg: falloff }, span).unwrap();
        let c = span / 2.0;
        let off = d * c;
        prop_assert!((t.query(c + off) - t.query(c - off)).abs() < 1e-9);
        prop_assert!((0.0..=1.0).contains(&t.query(c + off)));
    }
}
