use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

const RECORD: usize = 16;

/// Decodes packed `(x, y, z, intensity)` records. When every intensity lies in
/// [0, 1] the cloud is treated as reflectance-scaled and multiplied up to the
/// 0..=255 scale, with `intensity_rescaled` set.
pub fn decode_bin(bytes: &[u8]) -> Result<PointCloud> {
    if !bytes.len().is_multiple_of(RECORD) {
        return Err(Error::format(format!(
            "binary cloud length {} is not a multiple of {RECORD} bytes",
            bytes.len()
        )));
    }
    let mut points = Vec::with_capacity(bytes.len() / RECORD);
    for (i, rec) in bytes.chunks_exact(RECORD).enumerate() {
        let f = |k: usize| f32::from_le_bytes(rec[4 * k..4 * k + 4].try_into().unwrap()) as f64;
        let (x, y, z, intensity) = (f(0), f(1), f(2), f(3));
        if ![x, y, z, intensity].iter().all(|v| v.is_finite()) {
            return Err(Error::format(format!(
                "record {i} holds a NaN or infinite value"
            )));
        }
        if !(0.0..=255.0).contains(&intensity) {
            return Err(Error::format(format!(
                "record {i} intensity {intensity} is outside [0, 255]"
            )));
        }
        points.push(Point::new(x, y, z, intensity));
    }
    let mut cloud = PointCloud::new(points);
    if !cloud.is_empty() && cloud.points.iter().all(|p| p.intensity <= 1.0) {
        for p in &mut cloud.points {
            p.intensity *= 255.0;
        }
        cloud.intensity_rescaled = true;
    }
    Ok(cloud)
}

/// Encodes a cloud; rescaled clouds are written back on their original scale.
pub fn encode_bin(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * RECORD);
    for p in &cloud.points {
        let intensity = if cloud.intensity_rescaled {
            p.intensity / 255.0
        } else {
            p.intensity
        };
        for v in [p.x, p.y, p.z, intensity] {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    out
}

pub fn read_bin(path: &Path) -> Result<PointCloud> {
    decode_bin(&std::fs::read(path)?)
}

pub fn write_bin(cloud: &PointCloud, path: &Path) -> Result<()> {
    std::fs::write(path, encode_bin(cloud))?;
    Ok(())
}
