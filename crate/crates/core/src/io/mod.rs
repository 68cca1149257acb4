//! File formats.
//!
//! * `.bin`: packed little-endian `f32` quadruples `(x, y, z, intensity)`.
//! * `.pcd`: the ASCII subset with exactly the fields `x y z intensity`.
//! * detections: a JSON list of `{center, dims, yaw, score, label}` objects.
//! * removal profiles: CSV `azimuth_deg,probability` with `#` comments.

mod bin;
mod detections;
mod pcd;
mod removal_profile;

pub use bin::{decode_bin, encode_bin, read_bin, write_bin};
pub use detections::{
    parse_detections, read_detections, render_detections, write_detections, DetectionRecord,
};
pub use pcd::{parse_pcd_ascii, read_pcd_ascii, render_pcd_ascii, write_pcd_ascii};
pub use removal_profile::{parse_removal_profile, read_removal_profile, render_removal_profile};

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Reads a cloud, choosing the format from the file extension.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match extension(path).as_deref() {
        Some("bin") => read_bin(path),
        Some("pcd") => read_pcd_ascii(path),
        _ => Err(Error::format(format!(
            "{}: unknown point cloud extension (expected .bin or .pcd)",
            path.display()
        ))),
    }
}

pub fn write_cloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    match extension(path).as_deref() {
        Some("bin") => write_bin(cloud, path),
        Some("pcd") => write_pcd_ascii(cloud, path),
        _ => Err(Error::format(format!(
            "{}: unknown point cloud extension (expected .bin or .pcd)",
            path.display()
        ))),
    }
}

fn extension(path: &Path) -> Option<String> {
    path.extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
}
