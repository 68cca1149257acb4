use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Channel, Point, PointCloud, Vec3};

/// A synthetic scan: a regular grid of rays returning from a flat ground
/// plane and/or a constant-range backdrop. Rays that hit neither produce no
/// return, like open sky.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScan {
    /// Laser elevations, degrees, one per channel.
    pub altitudes_deg: Vec<f64>,
    pub azimuth_start_deg: f64,
    pub azimuth_end_deg: f64,
    pub azimuth_step_deg: f64,
    /// Height of the ground plane relative to the sensor, m.
    pub ground_z: Option<f64>,
    /// Range of a spherical backdrop, m.
    pub backdrop_range: Option<f64>,
}

/// Mounting height of a roof sensor on a passenger car.
pub const KITTI_GROUND_Z: f64 = -1.73;

impl SyntheticScan {
    /// A 64-channel roof scanner (about 0.42 degree vertical spacing from
    /// -24.8 to +2 degrees) over the forward 90 degrees, on flat ground.
    pub fn roof_64(azimuth_step_deg: f64) -> Self {
        let n = 64;
        let (lo, hi) = (-24.8, 2.0);
        SyntheticScan {
            altitudes_deg: (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
            azimuth_start_deg: -45.0,
            azimuth_end_deg: 45.0,
            azimuth_step_deg,
            ground_z: Some(KITTI_GROUND_Z),
            backdrop_range: None,
        }
    }

    /// Rays on a uniform angular grid, all returning from a sphere.
    pub fn uniform_backdrop(
        altitude_range: (f64, f64),
        altitude_step: f64,
        azimuth_range: (f64, f64),
        azimuth_step: f64,
        range: f64,
    ) -> Self {
        let n = ((altitude_range.1 - altitude_range.0) / altitude_step + 1e-9).floor() as usize + 1;
        SyntheticScan {
            altitudes_deg: (0..n)
                .map(|i| altitude_range.0 + i as f64 * altitude_step)
                .collect(),
            azimuth_start_deg: azimuth_range.0,
            azimuth_end_deg: azimuth_range.1,
            azimuth_step_deg: azimuth_step,
            ground_z: None,
            backdrop_range: Some(range),
        }
    }

    pub fn generate(&self) -> Result<PointCloud> {
        if !(self.azimuth_step_deg > 0.0) || self.azimuth_end_deg < self.azimuth_start_deg {
            return Err(Error::invalid(
                "synthetic scan needs a positive azimuth step and end >= start",
            ));
        }
        if let Some(g) = self.ground_z {
            if !(g < 0.0) {
                return Err(Error::invalid("ground plane must be below the sensor"));
            }
        }
        if let Some(r) = self.backdrop_range {
            if !(r > 0.0) {
                return Err(Error::invalid("backdrop range must be positive"));
            }
        }
        let columns = ((self.azimuth_end_deg - self.azimuth_start_deg) / self.azimuth_step_deg
            + 1e-9)
            .floor() as u32
            + 1;
        let mut points = Vec::new();
        for (ring, alt) in self.altitudes_deg.iter().enumerate() {
            let (se, ce) = alt.to_radians().sin_cos();
            for col in 0..columns {
                let az = (self.azimuth_start_deg + col as f64 * self.azimuth_step_deg).to_radians();
                let dir = Vec3::new(ce * az.cos(), ce * az.sin(), se);
                let ground = self.ground_z.filter(|_| dir.z < 0.0).map(|g| g / dir.z);
                let range = match (ground, self.backdrop_range) {
                    (Some(a), Some(b)) => a.min(b),
                    (a, b) => match a.or(b) {
                        Some(r) => r,
                        None => continue,
                    },
                };
                let p = dir * range;
                // dim surfaces, well below typical spoofed-return intensity
                let intensity = 20.0 + ((ring as u32 * 7 + col * 3) % 40) as f64;
                let mut pt = Point::from_position(p, intensity);
                pt.channel = Some(Channel {
                    altitude: ring as u32,
                    azimuth: col,
                });
                points.push(pt);
            }
        }
        Ok(PointCloud::new(points))
    }
}
