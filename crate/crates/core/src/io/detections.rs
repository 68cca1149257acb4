use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::OrientedBox;

/// One detector output (or ground-truth) box.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionRecord {
    pub bbox: OrientedBox,
    pub score: f64,
    pub label: String,
}

#[derive(Serialize, Deserialize)]
struct Wire {
    center: [f64; 3],
    dims: [f64; 3],
    yaw: f64,
    score: f64,
    label: String,
}

impl From<&DetectionRecord> for Wire {
    fn from(d: &DetectionRecord) -> Self {
        Wire {
            center: d.bbox.center,
            dims: d.bbox.dims,
            yaw: d.bbox.yaw,
            score: d.score,
            label: d.label.clone(),
        }
    }
}

impl DetectionRecord {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.score) {
            return Err(Error::validation(format!(
                "score {} outside [0, 1]",
                self.score
            )));
        }
        self.bbox.validate()
    }
}

/// Parses a JSON array of detection objects. Unknown keys are ignored.
pub fn parse_detections(text: &str) -> Result<Vec<DetectionRecord>> {
    let wire: Vec<Wire> =
        serde_json::from_str(text).map_err(|e| Error::format(format!("detections: {e}")))?;
    wire.into_iter()
        .map(|w| {
            let d = DetectionRecord {
                bbox: OrientedBox {
                    center: w.center,
                    dims: w.dims,
                    yaw: w.yaw,
                },
                score: w.score,
                label: w.label,
            };
            d.validate()?;
            Ok(d)
        })
        .collect()
}

pub fn render_detections(detections: &[DetectionRecord]) -> String {
    let wire: Vec<Wire> = detections.iter().map(Wire::from).collect();
    let mut s = serde_json::to_string_pretty(&wire).expect("detections serialize");
    s.push('\n');
    s
}

pub fn read_detections(path: &Path) -> Result<Vec<DetectionRecord>> {
    parse_detections(&std::fs::read_to_string(path)?)
}

pub fn write_detections(detections: &[DetectionRecord], path: &Path) -> Result<()> {
    for d in detections {
        d.validate()?;
    }
    std::fs::write(path, render_detections(detections))?;
    Ok(())
}
