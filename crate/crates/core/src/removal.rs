//! Point removal attacks.
//!
//! Each return in the attacked sector is hit with a per-azimuth probability
//! `p_j`. A hit return moves along its ray to range `xi`:
//!
//! * PRA (synchronized): `xi = 0`, i.e. the point lands inside the minimum
//!   operational threshold and the sensor discards it.
//! * HFR (asynchronized, pulses at frequency `f`): `xi ~ U(0, c / 2f)`, since
//!   the measured time of flight can never exceed one attack pulse period.
//!
//! The sensor then drops any return closer than its MOT or beyond its maximum
//! range.

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{azimuth_bin_center, ray_direction, AzimuthSpan, Point, PointCloud, Vec3};
use crate::injection::SPOOFED_INTENSITY;
use crate::profiles::{LidarProfile, SPEED_OF_LIGHT};
use crate::rng::{label, rng_for};

/// Default HFR pulse frequency.
pub const DEFAULT_HFR_FREQUENCY_HZ: f64 = 1.0e6;

/// Most points a fingerprinting sensor let through in coincidence testing.
pub const FINGERPRINT_HIT_CEILING: f64 = 113.0;

/// Largest range an HFR-hit point can take: `c / (2 f)`.
pub fn xi_max(frequency_hz: f64) -> Result<f64> {
    if !(frequency_hz > 0.0) || !frequency_hz.is_finite() {
        return Err(Error::invalid(format!(
            "attack frequency must be positive, got {frequency_hz}"
        )));
    }
    Ok(SPEED_OF_LIGHT / (2.0 * frequency_hz))
}

/// Hit probability as a function of the azimuth offset (degrees) from the
/// start of the attacked sector.
///
/// Between rows the probability is linearly interpolated; outside the sampled
/// interval it is 0. A single-row table is constant everywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    rows: Vec<(f64, f64)>,
}

impl ProbabilityTable {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::validation("removal profile has no rows"));
        }
        for &(az, p) in &rows {
            if !az.is_finite() {
                return Err(Error::validation(format!("non-finite azimuth {az}")));
            }
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::validation(format!(
                    "probability {p} at azimuth {az} is outside [0, 1]"
                )));
            }
        }
        for w in rows.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::validation(format!(
                    "azimuths must be strictly increasing ({} then {})",
                    w[0].0, w[1].0
                )));
            }
        }
        Ok(ProbabilityTable { rows })
    }

    pub fn constant(p: f64) -> Result<Self> {
        Self::new(vec![(0.0, p)])
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    pub fn query(&self, offset_deg: f64) -> f64 {
        let rows = &self.rows;
        if rows.len() == 1 {
            return rows[0].1;
        }
        let (first, last) = (rows[0], rows[rows.len() - 1]);
        if offset_deg < first.0 || offset_deg > last.0 {
            return 0.0;
        }
        let i = rows.partition_point(|r| r.0 <= offset_deg);
        if i == rows.len() {
            return last.1;
        }
        let (a0, p0) = rows[i - 1];
        let (a1, p1) = rows[i];
        p0 + (p1 - p0) * (offset_deg - a0) / (a1 - a0)
    }
}

/// Shape of the per-azimuth hit probability across the attacked sector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RemovalShape {
    /// `p_center` on a central plateau, falling linearly to 0 over
    /// `falloff_deg` on each side.
    Plateau {
        p_center: f64,
        plateau_deg: f64,
        falloff_deg: f64,
    },
    FromTable(ProbabilityTable),
}

impl RemovalShape {
    /// The default measured-curve stand-in: 97% over the central 60% of the
    /// sector with linear shoulders.
    pub fn default_for_span(span_deg: f64) -> Self {
        RemovalShape::Plateau {
            p_center: 0.97,
            plateau_deg: 0.6 * span_deg,
            falloff_deg: 0.2 * span_deg,
        }
    }
}

/// Builds the hit-probability table for a sector `span_deg` wide.
pub fn build_removal_profile(shape: &RemovalShape, span_deg: f64) -> Result<ProbabilityTable> {
    match shape {
        RemovalShape::FromTable(t) => Ok(t.clone()),
        &RemovalShape::Plateau {
            p_center,
            plateau_deg,
            falloff_deg,
        } => {
            if !(0.0..=1.0).contains(&p_center) {
                return Err(Error::invalid(format!(
                    "p_center {p_center} outside [0, 1]"
                )));
            }
            if !(span_deg > 0.0 && plateau_deg >= 0.0 && falloff_deg >= 0.0) {
                return Err(Error::invalid(
                    "span must be positive and widths non-negative",
                ));
            }
            let used = plateau_deg + 2.0 * falloff_deg;
            if used > span_deg * (1.0 + 1e-12) {
                return Err(Error::invalid(format!(
                    "plateau {plateau_deg} + 2 x falloff {falloff_deg} exceeds span {span_deg}"
                )));
            }
            if used <= 0.0 {
                return Err(Error::invalid("plateau and falloff are both zero"));
            }
            let margin = ((span_deg - used) / 2.0).max(0.0);
            let mut rows = Vec::with_capacity(4);
            if falloff_deg > 0.0 {
                rows.push((margin, 0.0));
            }
            rows.push((margin + falloff_deg, p_center));
            if plateau_deg > 0.0 {
                rows.push((margin + falloff_deg + plateau_deg, p_center));
            }
            if falloff_deg > 0.0 {
                rows.push((margin + used, 0.0));
            }
            ProbabilityTable::new(rows)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum RemovalKind {
    Pra,
    Hfr { frequency_hz: f64 },
}

impl RemovalKind {
    pub fn name(&self) -> &'static str {
        match self {
            RemovalKind::Pra => "PRA",
            RemovalKind::Hfr { .. } => "HFR",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalSpec {
    pub kind: RemovalKind,
    /// Indexed by azimuth offset from `attack_span.start_deg`.
    pub prob_profile: ProbabilityTable,
    pub attack_span: AzimuthSpan,
    pub seed: u64,
    /// Run PRA even against sensors whose features defeat it.
    pub allow_inapplicable: bool,
}

impl RemovalSpec {
    pub fn new(
        kind: RemovalKind,
        prob_profile: ProbabilityTable,
        attack_span: AzimuthSpan,
        seed: u64,
    ) -> Self {
        RemovalSpec {
            kind,
            prob_profile,
            attack_span,
            seed,
            allow_inapplicable: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemovalOutcome {
    pub surviving: PointCloud,
    pub removed_count: usize,
    /// Hit points that survived the range filter at a random position.
    pub noise_count: usize,
    pub hit_count: usize,
}

/// Refuses PRA against timing randomization or pulse fingerprinting, both of
/// which break the synchronization PRA relies on.
pub fn check_applicability(kind: &RemovalKind, profile: &LidarProfile) -> Result<()> {
    if !matches!(kind, RemovalKind::Pra) {
        return Ok(());
    }
    let reason = match (profile.has_timing_randomization(), profile.fingerprint) {
        (false, false) => return Ok(()),
        (true, true) => "timing randomization and pulse fingerprinting",
        (true, false) => "timing randomization",
        (false, true) => "pulse fingerprinting",
    };
    Err(Error::Applicability {
        attack: kind.name().to_string(),
        lidar: profile.name.clone(),
        reason: format!("synchronized spoofing is defeated by {reason}"),
    })
}

/// Per-bin hit probabilities for the points of `cloud` inside the span;
/// `None` for points outside it.
fn point_probabilities(
    cloud: &PointCloud,
    spec: &RemovalSpec,
    resolution: f64,
) -> Result<Vec<Option<f64>>> {
    let span = spec.attack_span;
    cloud
        .points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let ch = p.channel.ok_or_else(|| {
                Error::Precondition(format!("point {i} has no azimuth bin; assign bins first"))
            })?;
            if !span.contains(p.azimuth_deg()) {
                return Ok(None);
            }
            let center = azimuth_bin_center(ch.azimuth, resolution);
            // a boundary bin's center can fall just outside the span
            let off = span.offset(center).unwrap_or_else(|| {
                let before = (span.start_deg - center).rem_euclid(360.0);
                if before < 180.0 {
                    0.0
                } else {
                    span.width_deg
                }
            });
            Ok(Some(spec.prob_profile.query(off)))
        })
        .collect()
}

pub fn apply_removal(
    cloud: &PointCloud,
    spec: &RemovalSpec,
    profile: &LidarProfile,
) -> Result<RemovalOutcome> {
    let resolution = cloud.azimuth_resolution.ok_or_else(|| {
        Error::Precondition("cloud has no azimuth bins; assign bins first".into())
    })?;
    if !spec.allow_inapplicable {
        check_applicability(&spec.kind, profile)?;
    }
    let xi = match spec.kind {
        RemovalKind::Pra => None,
        RemovalKind::Hfr { frequency_hz } => Some(
            Uniform::new_inclusive(0.0, xi_max(frequency_hz)?)
                .map_err(|e| Error::invalid(e.to_string()))?,
        ),
    };

    let mut probs = point_probabilities(cloud, spec, resolution)?;
    if xi.is_some() && profile.fingerprint {
        let expected: f64 = probs.iter().flatten().sum();
        if expected > FINGERPRINT_HIT_CEILING {
            let scale = FINGERPRINT_HIT_CEILING / expected;
            for p in probs.iter_mut().flatten() {
                *p *= scale;
            }
        }
    }

    let mut surviving = Vec::with_capacity(cloud.len());
    let (mut removed, mut noise, mut hits) = (0, 0, 0);
    for (i, (p, prob)) in cloud.points.iter().zip(probs).enumerate() {
        let Some(prob) = prob else {
            surviving.push(*p);
            continue;
        };
        let mut rng = rng_for(spec.seed, &[label("removal"), i as u64]);
        if !rng.random_bool(prob.clamp(0.0, 1.0)) {
            surviving.push(*p);
            continue;
        }
        hits += 1;
        let range = xi.as_ref().map_or(0.0, |d| d.sample(&mut rng));
        if range < profile.mot || range > profile.max_range {
            removed += 1;
            continue;
        }
        let pos = match ray_direction(p) {
            Ok(dir) => dir * range,
            Err(_) => Vec3::ZERO,
        };
        let mut q: Point = p.moved_to(pos);
        q.intensity = SPOOFED_INTENSITY;
        surviving.push(q);
        noise += 1;
    }
    Ok(RemovalOutcome {
        surviving: cloud.with_points(surviving),
        removed_count: removed,
        noise_count: noise,
        hit_count: hits,
    })
}
