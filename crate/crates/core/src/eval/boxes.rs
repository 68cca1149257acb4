use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Vec3;

/// A yaw-rotated 3D box. `dims` is (length along heading, width, height).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: [f64; 3], dims: [f64; 3], yaw: f64) -> Result<Self> {
        let b = OrientedBox { center, dims, yaw };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
            return Err(Error::validation(format!(
                "box dims must be strictly positive, got {:?}",
                self.dims
            )));
        }
        if !self.center.iter().all(|c| c.is_finite()) || !self.yaw.is_finite() {
            return Err(Error::validation("box center and yaw must be finite"));
        }
        Ok(())
    }

    pub fn center_vec(&self) -> Vec3 {
        Vec3::from(self.center)
    }

    /// Footprint corners in counterclockwise order.
    pub fn bev_corners(&self) -> [[f64; 2]; 4] {
        let (s, c) = self.yaw.sin_cos();
        let (hl, hw) = (self.dims[0] / 2.0, self.dims[1] / 2.0);
        let [cx, cy, _] = self.center;
        [(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)]
            .map(|(u, v)| [cx + c * u - s * v, cy + s * u + c * v])
    }

    pub fn bev_area(&self) -> f64 {
        self.dims[0] * self.dims[1]
    }

    /// Maps a world point into the box frame (origin at center, +x along yaw).
    pub fn to_local(&self, p: Vec3) -> Vec3 {
        (p - self.center_vec()).rotate_z(-self.yaw)
    }

    /// Whether `p` lies inside the box grown by `slack` on every side.
    pub fn contains(&self, p: Vec3, slack: f64) -> bool {
        let q = self.to_local(p);
        q.x.abs() <= self.dims[0] / 2.0 + slack
            && q.y.abs() <= self.dims[1] / 2.0 + slack
            && q.z.abs() <= self.dims[2] / 2.0 + slack
    }
}
