//! Sensor-frame geometry shared by every attack model.
//!
//! Frame convention: the sensor sits at the origin, +x points forward, +y to
//! the left and +z up. Azimuth is measured counterclockwise from +x toward +y
//! in `[0, 360)` degrees; altitude is the elevation above the xy-plane in
//! `[-90, 90]` degrees. Detector adapters must emit boxes in the same frame.

use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default azimuth bin width, matching a 0.1 degree rotating scan.
pub const DEFAULT_AZIMUTH_RESOLUTION: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3::new(0.0, 0.0, 0.0);
    pub const X: Vec3 = Vec3::new(1.0, 0.0, 0.0);
    pub const Y: Vec3 = Vec3::new(0.0, 1.0, 0.0);
    pub const Z: Vec3 = Vec3::new(0.0, 0.0, 1.0);

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    /// Rotates about +z by `yaw` radians.
    pub fn rotate_z(self, yaw: f64) -> Vec3 {
        let (s, c) = yaw.sin_cos();
        Vec3::new(c * self.x - s * self.y, s * self.x + c * self.y, self.z)
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Laser channel of a return: altitude (ring) index and azimuth bin index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Channel {
    pub altitude: u32,
    pub azimuth: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Return intensity on a 0..=255 scale.
    pub intensity: f64,
    pub channel: Option<Channel>,
}

impl Point {
    pub fn new(x: f64, y: f64, z: f64, intensity: f64) -> Self {
        Point {
            x,
            y,
            z,
            intensity,
            channel: None,
        }
    }

    pub fn from_position(p: Vec3, intensity: f64) -> Self {
        Point::new(p.x, p.y, p.z, intensity)
    }

    pub fn position(&self) -> Vec3 {
        Vec3::new(self.x, self.y, self.z)
    }

    /// Same point with a new position; intensity and channel are kept.
    pub fn moved_to(&self, p: Vec3) -> Point {
        Point {
            x: p.x,
            y: p.y,
            z: p.z,
            ..*self
        }
    }

    pub fn range(&self) -> f64 {
        self.position().norm()
    }

    pub fn azimuth_deg(&self) -> f64 {
        azimuth_deg(self.position())
    }
}

/// An ordered frame of returns.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointCloud {
    pub points: Vec<Point>,
    pub frame_id: u64,
    /// Bin width used by the last `assign_azimuth_bins`, if any.
    pub azimuth_resolution: Option<f64>,
    /// Set when intensities were stored on a [0, 1] scale and rescaled on read.
    pub intensity_rescaled: bool,
}

impl PointCloud {
    pub fn new(points: Vec<Point>) -> Self {
        PointCloud {
            points,
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Point> {
        self.points.iter()
    }

    /// A cloud carrying this cloud's metadata but different points.
    pub fn with_points(&self, points: Vec<Point>) -> PointCloud {
        PointCloud {
            points,
            frame_id: self.frame_id,
            azimuth_resolution: self.azimuth_resolution,
            intensity_rescaled: self.intensity_rescaled,
        }
    }
}

impl FromIterator<Point> for PointCloud {
    fn from_iter<I: IntoIterator<Item = Point>>(iter: I) -> Self {
        PointCloud::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalCoord {
    pub range: f64,
    pub azimuth: f64,
    pub altitude: f64,
}

/// Unit vector along the laser ray that produced `p`.
pub fn ray_direction(p: &Point) -> Result<Vec3> {
    unit(p.position())
}

pub fn unit(v: Vec3) -> Result<Vec3> {
    let n = v.norm();
    if n == 0.0 || !n.is_finite() {
        return Err(Error::DegenerateRay);
    }
    Ok(v * (1.0 / n))
}

/// Azimuth of `v` in `[0, 360)`; the origin maps to 0.
pub fn azimuth_deg(v: Vec3) -> f64 {
    if v.x == 0.0 && v.y == 0.0 {
        return 0.0;
    }
    let az = v.y.atan2(v.x).to_degrees().rem_euclid(360.0);
    // rem_euclid can round a tiny negative angle up to exactly 360
    if az >= 360.0 {
        0.0
    } else {
        az
    }
}

pub fn to_spherical(p: &Point) -> SphericalCoord {
    let v = p.position();
    let range = v.norm();
    if range == 0.0 {
        return SphericalCoord {
            range: 0.0,
            azimuth: 0.0,
            altitude: 0.0,
        };
    }
    SphericalCoord {
        range,
        azimuth: azimuth_deg(v),
        altitude: (v.z / range).clamp(-1.0, 1.0).asin().to_degrees(),
    }
}

/// Inverse of [`to_spherical`]; the returned point has zero intensity.
pub fn from_spherical(s: &SphericalCoord) -> Point {
    if s.range == 0.0 {
        return Point::new(0.0, 0.0, 0.0, 0.0);
    }
    let (sa, ca) = s.azimuth.to_radians().sin_cos();
    let (se, ce) = s.altitude.to_radians().sin_cos();
    Point::new(s.range * ce * ca, s.range * ce * sa, s.range * se, 0.0)
}

/// Number of azimuth bins of width `resolution` covering a full turn.
pub fn azimuth_bin_count(resolution: f64) -> Result<u32> {
    check_resolution(resolution)?;
    Ok(((360.0 / resolution) - 1e-9).ceil().max(1.0) as u32)
}

pub fn azimuth_bin(azimuth: f64, resolution: f64) -> u32 {
    let count = ((360.0 / resolution) - 1e-9).ceil().max(1.0) as u32;
    ((azimuth / resolution).floor().max(0.0) as u32).min(count - 1)
}

/// Center azimuth of bin `index`, in degrees.
pub fn azimuth_bin_center(index: u32, resolution: f64) -> f64 {
    (index as f64 + 0.5) * resolution
}

fn check_resolution(resolution: f64) -> Result<()> {
    if resolution > 0.0 && resolution.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidResolution(resolution))
    }
}

/// Tags every point with its azimuth bin index. Existing altitude indices are
/// kept; points without one get altitude index 0.
pub fn assign_azimuth_bins(cloud: &PointCloud, resolution: f64) -> Result<PointCloud> {
    check_resolution(resolution)?;
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let azimuth = azimuth_bin(p.azimuth_deg(), resolution);
            let altitude = p.channel.map_or(0, |c| c.altitude);
            Point {
                channel: Some(Channel { altitude, azimuth }),
                ..*p
            }
        })
        .collect();
    let mut out = cloud.with_points(points);
    out.azimuth_resolution = Some(resolution);
    Ok(out)
}

/// A horizontal sector starting at `start_deg` and sweeping `width_deg`
/// counterclockwise. Wraps through 0 degrees when needed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AzimuthSpan {
    pub start_deg: f64,
    pub width_deg: f64,
}

impl AzimuthSpan {
    pub const FULL: AzimuthSpan = AzimuthSpan {
        start_deg: 0.0,
        width_deg: 360.0,
    };

    pub fn new(start_deg: f64, width_deg: f64) -> Result<Self> {
        if !(start_deg.is_finite() && width_deg > 0.0 && width_deg <= 360.0) {
            return Err(Error::invalid(format!(
                "azimuth span needs a finite start and width in (0, 360], got start {start_deg} width {width_deg}"
            )));
        }
        Ok(AzimuthSpan {
            start_deg: start_deg.rem_euclid(360.0),
            width_deg,
        })
    }

    /// Span between two azimuths, going counterclockwise from `from` to `to`.
    pub fn between(from_deg: f64, to_deg: f64) -> Result<Self> {
        let width = (to_deg - from_deg).rem_euclid(360.0);
        let width = if width == 0.0 { 360.0 } else { width };
        AzimuthSpan::new(from_deg, width)
    }

    /// Span centered on `center_deg`.
    pub fn centered(center_deg: f64, width_deg: f64) -> Result<Self> {
        AzimuthSpan::new(center_deg - width_deg / 2.0, width_deg)
    }

    /// Counterclockwise offset of `azimuth` from the span start, when inside.
    pub fn offset(&self, azimuth_deg: f64) -> Option<f64> {
        let off = (azimuth_deg - self.start_deg).rem_euclid(360.0);
        if self.width_deg >= 360.0 || off <= self.width_deg {
            Some(off)
        } else {
            None
        }
    }

    pub fn contains(&self, azimuth_deg: f64) -> bool {
        self.offset(azimuth_deg).is_some()
    }

    /// Smallest span covering every point of `cloud` (by azimuth). `None` for
    /// an empty cloud.
    pub fn covering(cloud: &PointCloud) -> Option<AzimuthSpan> {
        let mut az: Vec<f64> = cloud
            .points
            .iter()
            .filter(|p| p.x != 0.0 || p.y != 0.0)
            .map(|p| p.azimuth_deg())
            .collect();
        if az.is_empty() {
            return None;
        }
        az.sort_by(f64::total_cmp);
        // the widest gap between consecutive azimuths is the part not covered
        let mut best_gap = az[0] + 360.0 - az[az.len() - 1];
        let mut start = az[0];
        for w in az.windows(2) {
            let gap = w[1] - w[0];
            if gap > best_gap {
                best_gap = gap;
                start = w[1];
            }
        }
        let width = (360.0 - best_gap).max(f64::EPSILON);
        AzimuthSpan::new(start, width).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(x: f64, y: f64, z: f64) -> Point {
        Point::new(x, y, z, 0.0)
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn ray_direction_examples() {
        let d = ray_direction(&pt(3.0, 4.0, 0.0)).unwrap();
        assert!(close(d, Vec3::new(0.6, 0.8, 0.0), 1e-15));
        let d = ray_direction(&pt(0.0, 0.0, 5.0)).unwrap();
        assert_eq!(d, Vec3::Z);
        let d = ray_direction(&pt(1.0, 1.0, 1.0)).unwrap();
        let k = 1.0 / 3f64.sqrt();
        assert!(close(d, Vec3::new(k, k, k), 1e-12));
        assert!((k - 0.57735).abs() < 1e-5);
    }

    #[test]
    fn ray_direction_rejects_origin() {
        assert!(matches!(
            ray_direction(&pt(0.0, 0.0, 0.0)),
            Err(Error::DegenerateRay)
        ));
    }

    #[test]
    fn spherical_examples() {
        let s = to_spherical(&pt(1.0, 0.0, 0.0));
        assert_eq!((s.range, s.azimuth, s.altitude), (1.0, 0.0, 0.0));
        let s = to_spherical(&pt(0.0, 2.0, 0.0));
        assert!((s.range - 2.0).abs() < 1e-15);
        assert!((s.azimuth - 90.0).abs() < 1e-12);
        let s = to_spherical(&pt(1.0, 1.0, 2f64.sqrt()));
        assert!((s.range - 2.0).abs() < 1e-12);
        assert!((s.azimuth - 45.0).abs() < 1e-12);
        assert!((s.altitude - 45.0).abs() < 1e-12);

        let origin = to_spherical(&pt(0.0, 0.0, 0.0));
        assert_eq!(
            (origin.range, origin.azimuth, origin.altitude),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn from_spherical_examples() {
        let p = from_spherical(&SphericalCoord {
            range: 1.0,
            azimuth: 0.0,
            altitude: 0.0,
        });
        assert_eq!(p.position(), Vec3::X);
        let p = from_spherical(&SphericalCoord {
            range: 0.0,
            azimuth: 123.0,
            altitude: -40.0,
        });
        assert_eq!(p.position(), Vec3::ZERO);
        let p = from_spherical(&SphericalCoord {
            range: 2.0,
            azimuth: 45.0,
            altitude: 45.0,
        });
        assert!(close(p.position(), Vec3::new(1.0, 1.0, 2f64.sqrt()), 1e-12));
    }

    #[test]
    fn negative_y_maps_into_upper_half_turn() {
        let az = azimuth_deg(Vec3::new(1.0, -1.0, 0.0));
        assert!((az - 315.0).abs() < 1e-12);
        assert_eq!(azimuth_deg(Vec3::new(1.0, -1e-300, 0.0)), 0.0);
    }

    #[test]
    fn bin_examples() {
        assert_eq!(azimuth_bin(0.05, 0.1), 0);
        assert_eq!(azimuth_bin(359.95, 0.1), 3599);
        assert_eq!(azimuth_bin(12.34, 0.1), 123);
        assert_eq!(azimuth_bin_count(0.1).unwrap(), 3600);
        assert_eq!(azimuth_bin_count(0.7).unwrap(), 515);
        assert_eq!(azimuth_bin(359.9999, 0.7), 514);
    }

    #[test]
    fn bins_reject_bad_resolution() {
        let cloud = PointCloud::new(vec![pt(1.0, 0.0, 0.0)]);
        for r in [0.0, -0.1, f64::NAN] {
            assert!(matches!(
                assign_azimuth_bins(&cloud, r),
                Err(Error::InvalidResolution(_))
            ));
        }
    }

    #[test]
    fn assign_bins_keeps_altitude_and_order() {
        let mut a = pt(1.0, 0.1, 0.0);
        a.channel = Some(Channel {
            altitude: 7,
            azimuth: 999,
        });
        let b = pt(0.0, 1.0, 0.0);
        let out = assign_azimuth_bins(&PointCloud::new(vec![a, b]), 1.0).unwrap();
        assert_eq!(out.azimuth_resolution, Some(1.0));
        assert_eq!(
            out.points[0].channel,
            Some(Channel {
                altitude: 7,
                azimuth: 5
            })
        );
        assert_eq!(
            out.points[1].channel,
            Some(Channel {
                altitude: 0,
                azimuth: 90
            })
        );
        assert_eq!(out.points[0].position(), a.position());
    }

    #[test]
    fn span_wraps_through_zero() {
        let s = AzimuthSpan::centered(0.0, 20.0).unwrap();
        assert!(s.contains(355.0));
        assert!(s.contains(5.0));
        assert!(!s.contains(180.0));
        assert!((s.offset(0.0).unwrap() - 10.0).abs() < 1e-12);

        let cloud = PointCloud::new(vec![
            pt(10.0, 1.0, 0.0),
            pt(10.0, -1.0, 0.0),
            pt(10.0, 0.0, 0.0),
        ]);
        let cover = AzimuthSpan::covering(&cloud).unwrap();
        let half = (0.1f64).atan().to_degrees();
        assert!((cover.width_deg - 2.0 * half).abs() < 1e-9);
        assert!((cover.start_deg - (360.0 - half)).abs() < 1e-9);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn direction_is_unit_and_collinear(
                x in -300.0f64..300.0, y in -300.0f64..300.0, z in -300.0f64..300.0
            ) {
                let p = pt(x, y, z);
                prop_assume!(p.range() > 1e-6);
                let d = ray_direction(&p).unwrap();
                prop_assert!((d.norm() - 1.0).abs() < 1e-12);
                prop_assert!(d.cross(p.position()).norm() < 1e-9 * p.range());
                prop_assert!(d.dot(p.position()) > 0.0);
            }

            #[test]
            fn every_azimuth_has_exactly_one_bin(az in 0.0f64..360.0, res in 0.01f64..45.0) {
                let count = azimuth_bin_count(res).unwrap();
                let b = azimuth_bin(az, res);
                prop_assert!(b < count);
                let lo = b as f64 * res;
                prop_assert!(lo <= az + 1e-9);
                prop_assert!(az < lo + res + 1e-9 || b == count - 1);
            }
        }
    }
}
