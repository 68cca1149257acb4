//! Evaluation scenarios: a target object placed ahead of the victim, realized
//! by moving existing background returns onto the object's surface.
//!
//! Only returns whose ray reaches the object before its original surface are
//! moved, so an object can occlude the background but never adds rays that
//! had no return to begin with.

mod model;
mod synthetic;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use model::{parse_ascii_stl, parse_object_spec, ObjectModel, Pose, Shape, Triangle};
pub use synthetic::{SyntheticScan, KITTI_GROUND_Z};

use crate::error::{Error, Result};
use crate::eval::OrientedBox;
use crate::geometry::{ray_direction, PointCloud};
use model::Caster;

/// Default sweep: 0 to 14 m in 1 m steps.
pub const DEFAULT_SWEEP: (f64, f64, f64) = (0.0, 14.0, 1.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub cloud: PointCloud,
    pub gt_box: OrientedBox,
    /// Gap between the victim's nose and the object's rear, m.
    pub distance: f64,
    /// Indices (into `cloud`) of the returns that now lie on the object.
    pub object_points: Vec<usize>,
}

impl Scenario {
    /// The object's returns as their own cloud, e.g. for use as an injection
    /// pattern.
    pub fn object_cloud(&self) -> PointCloud {
        self.cloud.with_points(
            self.object_points
                .iter()
                .map(|&i| self.cloud.points[i])
                .collect(),
        )
    }
}

/// Places `model` with its rear `distance` ahead of the victim's nose (which
/// sits `nose_offset` ahead of the sensor) and ray-casts the background onto
/// it.
pub fn place_object(
    background: &PointCloud,
    model: &ObjectModel,
    distance: f64,
    nose_offset: f64,
) -> Result<Scenario> {
    let placed = model.placed_at(distance, nose_offset)?;
    let caster = Caster::new(&placed)?;
    if caster.contains_origin() {
        return Err(Error::InvalidModel(
            "the sensor origin lies inside the placed object".into(),
        ));
    }
    let mut points = background.points.clone();
    let mut object_points = Vec::new();
    for (i, p) in points.iter_mut().enumerate() {
        let Ok(dir) = ray_direction(p) else { continue };
        if let Some(t) = caster.first_hit(dir) {
            if t < p.range() {
                *p = p.moved_to(dir * t);
                object_points.push(i);
            }
        }
    }
    Ok(Scenario {
        cloud: background.with_points(points),
        gt_box: placed.bounding_box(),
        distance,
        object_points,
    })
}

/// Distances `d_min, d_min + step, ...` up to `d_max` inclusive.
pub fn sweep_distances(d_min: f64, d_max: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::invalid(format!(
            "sweep step must be positive, got {step}"
        )));
    }
    if !(d_min >= 0.0 && d_max >= d_min) || !d_max.is_finite() {
        return Err(Error::invalid(format!(
            "need 0 <= d_min <= d_max, got [{d_min}, {d_max}]"
        )));
    }
    let count = ((d_max - d_min) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| d_min + k as f64 * step).collect())
}

pub fn distance_sweep(
    background: &PointCloud,
    model: &ObjectModel,
    d_min: f64,
    d_max: f64,
    step: f64,
    nose_offset: f64,
) -> Result<Vec<Scenario>> {
    sweep_distances(d_min, d_max, step)?
        .into_iter()
        .map(|d| place_object(background, model, d, nose_offset))
        .collect()
}

/// Random pose perturbation, uniform in `[-max, max]` per horizontal axis.
pub fn jitter_pose<R: Rng + ?Sized>(
    model: &ObjectModel,
    lateral_max: f64,
    longitudinal_max: f64,
    rng: &mut R,
) -> Result<ObjectModel> {
    model.jittered(lateral_max, longitudinal_max, rng)
}
