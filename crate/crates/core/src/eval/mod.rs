//! Attack success criteria and aggregation.
//!
//! Both criteria only ask whether footprints overlap at all, so IoU is taken
//! in bird's-eye view: injection succeeds when some detection overlaps the
//! ground truth (IoU > 0), removal succeeds when none does (IoU = 0).

mod boxes;
pub mod counting;
mod iou;

use serde::{Deserialize, Serialize};

pub use boxes::OrientedBox;
pub use counting::{
    count_injected, count_removed, match_benign, removal_percentage_per_azimuth, DEFAULT_MATCH_TOL,
};
pub use iou::{clip_convex, intersection_area_bev, iou_bev, polygon_area};

use crate::error::{Error, Result};
use crate::io::DetectionRecord;

pub fn max_iou(detections: &[DetectionRecord], gt: &OrientedBox) -> f64 {
    detections
        .iter()
        .map(|d| iou_bev(&d.bbox, gt))
        .fold(0.0, f64::max)
}

pub fn injection_success(detections: &[DetectionRecord], gt: &OrientedBox) -> bool {
    max_iou(detections, gt) > 0.0
}

pub fn removal_success(detections: &[DetectionRecord], gt: &OrientedBox) -> bool {
    detections.iter().all(|d| iou_bev(&d.bbox, gt) == 0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub per_trial: Vec<bool>,
}

pub fn success_rate(outcomes: &[bool]) -> Result<EvalReport> {
    if outcomes.is_empty() {
        return Err(Error::invalid("no trial outcomes to aggregate"));
    }
    let successes = outcomes.iter().filter(|&&s| s).count();
    Ok(EvalReport {
        trials: outcomes.len(),
        successes,
        success_rate: successes as f64 / outcomes.len() as f64,
        per_trial: outcomes.to_vec(),
    })
}
