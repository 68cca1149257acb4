use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Point, PointCloud};

const FIELDS: [&str; 4] = ["x", "y", "z", "intensity"];

/// Formats `v` with at most 9 significant digits, without exponent notation.
fn sig9(v: f64) -> String {
    let rounded: f64 = format!("{v:.8e}").parse().expect("formatted float parses");
    // avoid "-0"
    if rounded == 0.0 {
        "0".to_string()
    } else {
        format!("{rounded}")
    }
}

pub fn render_pcd_ascii(cloud: &PointCloud) -> String {
    let n = cloud.len();
    let mut s = format!(
        "# .PCD v0.7 - Point Cloud Data file format\n\
         VERSION 0.7\n\
         FIELDS x y z intensity\n\
         SIZE 4 4 4 4\n\
         TYPE F F F F\n\
         COUNT 1 1 1 1\n\
         WIDTH {n}\n\
         HEIGHT 1\n\
         VIEWPOINT 0 0 0 1 0 0 0\n\
         POINTS {n}\n\
         DATA ascii\n"
    );
    for p in &cloud.points {
        let intensity = if cloud.intensity_rescaled {
            p.intensity / 255.0
        } else {
            p.intensity
        };
        s.push_str(&format!(
            "{} {} {} {}\n",
            sig9(p.x),
            sig9(p.y),
            sig9(p.z),
            sig9(intensity)
        ));
    }
    s
}

pub fn parse_pcd_ascii(text: &str) -> Result<PointCloud> {
    let mut lines = text.lines().enumerate();
    let mut order: Option<[usize; 4]> = None;
    let mut declared: Option<usize> = None;
    let mut wh: (Option<usize>, Option<usize>) = (None, None);
    let mut data_seen = false;

    for (lineno, raw) in lines.by_ref() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace();
        let key = parts.next().unwrap_or_default().to_ascii_uppercase();
        let vals: Vec<&str> = parts.collect();
        let bad = |what: &str| Error::format(format!("line {}: {what}", lineno + 1));
        match key.as_str() {
            "VERSION" | "SIZE" | "TYPE" | "VIEWPOINT" => {}
            "FIELDS" => {
                if vals.len() != 4 {
                    return Err(bad("FIELDS must be exactly x y z intensity"));
                }
                let mut idx = [usize::MAX; 4];
                for (col, name) in vals.iter().enumerate() {
                    let k = FIELDS
                        .iter()
                        .position(|f| f == name)
                        .ok_or_else(|| bad(&format!("unsupported field '{name}'")))?;
                    if idx[k] != usize::MAX {
                        return Err(bad(&format!("duplicate field '{name}'")));
                    }
                    idx[k] = col;
                }
                order = Some(idx);
            }
            "COUNT" => {
                if vals.iter().any(|v| *v != "1") {
                    return Err(bad("only COUNT 1 fields are supported"));
                }
            }
            "WIDTH" | "HEIGHT" | "POINTS" => {
                let v: usize = vals
                    .first()
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad(&format!("{key} needs a non-negative integer")))?;
                match key.as_str() {
                    "WIDTH" => wh.0 = Some(v),
                    "HEIGHT" => wh.1 = Some(v),
                    _ => declared = Some(v),
                }
            }
            "DATA" => {
                if vals.first().map(|v| v.to_ascii_lowercase()) != Some("ascii".into()) {
                    return Err(bad("only DATA ascii is supported"));
                }
                data_seen = true;
                break;
            }
            _ => return Err(bad(&format!("unknown header key '{key}'"))),
        }
    }

    if !data_seen {
        return Err(Error::format("missing DATA line"));
    }
    let order = order.ok_or_else(|| Error::format("missing FIELDS line"))?;
    let expected = match (declared, wh) {
        (Some(n), _) => n,
        (None, (Some(w), Some(h))) => w
            .checked_mul(h)
            .ok_or_else(|| Error::format("WIDTH x HEIGHT overflows"))?,
        _ => return Err(Error::format("missing POINTS (or WIDTH and HEIGHT)")),
    };

    let mut points = Vec::with_capacity(expected.min(1 << 20));
    for (lineno, raw) in lines {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::format(format!(
                "line {}: expected 4 values, found {}",
                lineno + 1,
                cols.len()
            )));
        }
        let mut v = [0.0f64; 4];
        for (k, slot) in v.iter_mut().enumerate() {
            let s = cols[order[k]];
            *slot = s
                .parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| Error::format(format!("line {}: bad value '{s}'", lineno + 1)))?;
        }
        if !(0.0..=255.0).contains(&v[3]) {
            return Err(Error::format(format!(
                "line {}: intensity {} outside [0, 255]",
                lineno + 1,
                v[3]
            )));
        }
        points.push(Point::new(v[0], v[1], v[2], v[3]));
    }
    if points.len() != expected {
        return Err(Error::format(format!(
            "header declares {expected} points but {} were found",
            points.len()
        )));
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

pub fn read_pcd_ascii(path: &Path) -> Result<PointCloud> {
    let bytes = std::fs::read(path)?;
    let text = std::str::from_utf8(&bytes).map_err(|e| Error::format(format!("not UTF-8: {e}")))?;
    parse_pcd_ascii(text)
}

pub fn write_pcd_ascii(cloud: &PointCloud, path: &Path) -> Result<()> {
    std::fs::write(path, render_pcd_ascii(cloud))?;
    Ok(())
}
