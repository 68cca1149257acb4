//! Chosen-pattern point injection.
//!
//! Every spoofed point can only slide along its own laser ray, so the model
//! displaces each pattern point `x` to `x + (d_rand + d_inner + d_inter) * x/|x|`:
//!
//! * `d_rand`: per-point error from the victim's timing randomization,
//! * `d_inner`: per-point spoofer jitter within a frame,
//! * `d_inter`: one drift value shared by the whole frame.
//!
//! Pulse fingerprinting is modeled by first keeping only a random `n`-subset
//! of the pattern.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{azimuth_bin, ray_direction, to_spherical, Point, PointCloud, Vec3};
use crate::profiles::{sample_delta_rand, RandModel};
use crate::rng::{label, rng_for, SimRng};

pub const DEFAULT_INNER_SIGMA: f64 = 0.10;
pub const DEFAULT_INTER_SIGMA: f64 = 0.35;
pub const SPOOFED_INTENSITY: f64 = 255.0;

/// Spoofer jitter standard deviation as a function of laser altitude.
///
/// Linear interpolation between `(altitude_deg, sigma_m)` rows, clamped to the
/// first/last row outside the table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltitudeSigmaTable {
    rows: Vec<(f64, f64)>,
}

impl AltitudeSigmaTable {
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::invalid("altitude sigma table is empty"));
        }
        for w in rows.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::invalid(
                    "altitude sigma table must be strictly increasing",
                ));
            }
        }
        if rows.iter().any(|r| !(r.1 >= 0.0) || !r.0.is_finite()) {
            return Err(Error::invalid(
                "altitude sigma table has a negative or non-finite entry",
            ));
        }
        Ok(AltitudeSigmaTable { rows })
    }

    pub fn sigma_at(&self, altitude_deg: f64) -> f64 {
        let rows = &self.rows;
        if altitude_deg <= rows[0].0 {
            return rows[0].1;
        }
        let last = rows[rows.len() - 1];
        if altitude_deg >= last.0 {
            return last.1;
        }
        let i = rows.partition_point(|r| r.0 <= altitude_deg);
        let (a0, s0) = rows[i - 1];
        let (a1, s1) = rows[i];
        s0 + (s1 - s0) * (altitude_deg - a0) / (a1 - a0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InjectionSpec {
    /// The chosen pattern, in the victim's sensor frame.
    pub pattern: PointCloud,
    /// Keep only a random subset of this many points (fingerprinting).
    pub downsample_n: Option<usize>,
    pub inner_sigma: f64,
    /// Replaces `inner_sigma` when present.
    pub inner_sigma_by_altitude: Option<AltitudeSigmaTable>,
    pub inter_sigma: f64,
    pub rand_model: RandModel,
    pub spoofed_intensity: f64,
    pub seed: u64,
}

impl InjectionSpec {
    pub fn new(pattern: PointCloud, seed: u64) -> Self {
        InjectionSpec {
            pattern,
            downsample_n: None,
            inner_sigma: DEFAULT_INNER_SIGMA,
            inner_sigma_by_altitude: None,
            inter_sigma: DEFAULT_INTER_SIGMA,
            rand_model: RandModel::None,
            spoofed_intensity: SPOOFED_INTENSITY,
            seed,
        }
    }

    /// All error terms disabled.
    pub fn exact(pattern: PointCloud, seed: u64) -> Self {
        InjectionSpec {
            inner_sigma: 0.0,
            inter_sigma: 0.0,
            ..InjectionSpec::new(pattern, seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.inner_sigma >= 0.0 && self.inter_sigma >= 0.0)
            || !self.inner_sigma.is_finite()
            || !self.inter_sigma.is_finite()
        {
            return Err(Error::invalid("error sigmas must be finite and >= 0"));
        }
        if let Some(n) = self.downsample_n {
            if n > self.pattern.len() {
                return Err(Error::invalid(format!(
                    "cannot downsample a {}-point pattern to {n} points",
                    self.pattern.len()
                )));
            }
        }
        if !(0.0..=255.0).contains(&self.spoofed_intensity) {
            return Err(Error::invalid("spoofed intensity must be in [0, 255]"));
        }
        self.rand_model
            .validate()
            .map_err(|e| Error::invalid(e.to_string()))
    }
}

/// Error draws for one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PointErrors {
    pub rand: f64,
    pub inner: f64,
}

/// Supplies the random terms of the injection model.
pub trait ErrorSource {
    /// The frame-wide drift; called exactly once per injection.
    fn inter_frame(&mut self) -> f64;
    /// Per-point draws. `index` is the point's position in the full pattern.
    fn point(&mut self, index: usize, point: &Point) -> PointErrors;
}

/// Fixed error values, for checking the displacement arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FixedErrors {
    pub rand: f64,
    pub inner: f64,
    pub inter: f64,
}

impl ErrorSource for FixedErrors {
    fn inter_frame(&mut self) -> f64 {
        self.inter
    }

    fn point(&mut self, _index: usize, _point: &Point) -> PointErrors {
        PointErrors {
            rand: self.rand,
            inner: self.inner,
        }
    }
}

/// Draws errors from the spec's distributions. Each pattern point has its own
/// stream keyed by (seed, index), so results do not depend on visit order.
pub struct SeededErrors<'a> {
    spec: &'a InjectionSpec,
    inner: Option<Normal<f64>>,
}

impl<'a> SeededErrors<'a> {
    pub fn new(spec: &'a InjectionSpec) -> Self {
        let inner = (spec.inner_sigma > 0.0)
            .then(|| Normal::new(0.0, spec.inner_sigma).expect("validated sigma"));
        SeededErrors { spec, inner }
    }

    fn inner_draw(&self, point: &Point, rng: &mut SimRng) -> f64 {
        match &self.spec.inner_sigma_by_altitude {
            Some(table) => {
                let sigma = table.sigma_at(to_spherical(point).altitude);
                if sigma > 0.0 {
                    Normal::new(0.0, sigma)
                        .expect("validated sigma")
                        .sample(rng)
                } else {
                    0.0
                }
            }
            None => self.inner.map_or(0.0, |d| d.sample(rng)),
        }
    }
}

impl ErrorSource for SeededErrors<'_> {
    fn inter_frame(&mut self) -> f64 {
        if self.spec.inter_sigma == 0.0 {
            return 0.0;
        }
        let mut rng = rng_for(self.spec.seed, &[label("inter")]);
        Normal::new(0.0, self.spec.inter_sigma)
            .expect("validated sigma")
            .sample(&mut rng)
    }

    fn point(&mut self, index: usize, point: &Point) -> PointErrors {
        let mut rng = rng_for(self.spec.seed, &[label("point"), index as u64]);
        let rand = sample_delta_rand(&self.spec.rand_model, &mut rng);
        let inner = self.inner_draw(point, &mut rng);
        PointErrors { rand, inner }
    }
}

/// Indices of a uniformly random `n`-subset of `0..len`, ascending.
fn subset_indices<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n > len {
        return Err(Error::invalid(format!(
            "cannot downsample a {len}-point pattern to {n} points"
        )));
    }
    let mut idx = index::sample(rng, len, n).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

/// Keeps a uniformly random `n`-subset of `pattern`, preserving order.
pub fn downsample_pattern<R: Rng + ?Sized>(
    pattern: &PointCloud,
    n: usize,
    rng: &mut R,
) -> Result<PointCloud> {
    let idx = subset_indices(pattern.len(), n, rng)?;
    Ok(pattern.with_points(idx.into_iter().map(|i| pattern.points[i]).collect()))
}

/// Injection result with provenance of every output point.
#[derive(Debug, Clone, PartialEq)]
pub struct Injected {
    pub cloud: PointCloud,
    /// Pattern index each output point came from.
    pub source: Vec<usize>,
    /// Points pushed to zero or negative range and dropped.
    pub dropped: usize,
    /// The shared frame drift that was applied.
    pub inter: f64,
}

pub fn apply_injection(spec: &InjectionSpec) -> Result<PointCloud> {
    Ok(apply_injection_detailed(spec)?.cloud)
}

pub fn apply_injection_detailed(spec: &InjectionSpec) -> Result<Injected> {
    apply_injection_with(spec, &mut SeededErrors::new(spec))
}

/// Applies the injection model with error terms from `errors`. Downsampling
/// (when requested) still uses the spec's seed.
pub fn apply_injection_with<E: ErrorSource + ?Sized>(
    spec: &InjectionSpec,
    errors: &mut E,
) -> Result<Injected> {
    spec.validate()?;
    let pattern = &spec.pattern;
    let kept: Vec<usize> = match spec.downsample_n {
        Some(n) => {
            let mut rng = rng_for(spec.seed, &[label("downsample")]);
            subset_indices(pattern.len(), n, &mut rng)?
        }
        None => (0..pattern.len()).collect(),
    };

    let inter = errors.inter_frame();
    let mut points = Vec::with_capacity(kept.len());
    let mut source = Vec::with_capacity(kept.len());
    let mut dropped = 0;
    for i in kept {
        let p = &pattern.points[i];
        let dir = ray_direction(p)?;
        let e = errors.point(i, p);
        let shift = e.rand + e.inner + inter;
        if p.range() + shift <= 0.0 {
            dropped += 1;
            continue;
        }
        let mut q = p.moved_to(p.position() + dir * shift);
        q.intensity = spec.spoofed_intensity;
        points.push(q);
        source.push(i);
    }
    Ok(Injected {
        cloud: pattern.with_points(points),
        source,
        dropped,
        inter,
    })
}

/// Orthonormal vehicle axes used by the Cartesian comparison model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleFrame {
    pub forward: Vec3,
    pub left: Vec3,
    pub up: Vec3,
}

impl Default for VehicleFrame {
    fn default() -> Self {
        VehicleFrame {
            forward: Vec3::X,
            left: Vec3::Y,
            up: Vec3::Z,
        }
    }
}

/// (mean, std) of an axis offset, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisError {
    pub mean: f64,
    pub std: f64,
}

/// Cartesian error model from earlier work: independent Gaussian offsets
/// along the vehicle's forward, left and up axes, ignoring ray geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrustumErrorModel {
    pub forward: AxisError,
    pub left: AxisError,
    pub up: AxisError,
    pub frame: VehicleFrame,
}

impl Default for FrustumErrorModel {
    fn default() -> Self {
        FrustumErrorModel {
            forward: AxisError {
                mean: 1.0,
                std: 0.1,
            },
            left: AxisError {
                mean: 0.0,
                std: 0.5,
            },
            up: AxisError {
                mean: 1.0,
                std: 0.2,
            },
            frame: VehicleFrame::default(),
        }
    }
}

impl FrustumErrorModel {
    /// Same means, zero spread.
    pub fn deterministic(self) -> Self {
        let z = |a: AxisError| AxisError { std: 0.0, ..a };
        FrustumErrorModel {
            forward: z(self.forward),
            left: z(self.left),
            up: z(self.up),
            ..self
        }
    }
}

fn draw_axis<R: Rng + ?Sized>(a: AxisError, rng: &mut R) -> Result<f64> {
    if a.std == 0.0 {
        return Ok(a.mean);
    }
    Normal::new(a.mean, a.std)
        .map(|d| d.sample(rng))
        .map_err(|e| Error::invalid(format!("axis error {a:?}: {e}")))
}

pub fn apply_frustum_error<R: Rng + ?Sized>(
    pattern: &PointCloud,
    model: &FrustumErrorModel,
    rng: &mut R,
) -> Result<PointCloud> {
    let f = model.frame;
    let mut out = Vec::with_capacity(pattern.len());
    for p in &pattern.points {
        let fwd = draw_axis(model.forward, rng)?;
        let left = draw_axis(model.left, rng)?;
        let up = draw_axis(model.up, rng)?;
        out.push(p.moved_to(p.position() + f.forward * fwd + f.left * left + f.up * up));
    }
    Ok(pattern.with_points(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum MergePolicy {
    /// Plain union.
    Append,
    /// Scene returns in any azimuth bin that holds a spoofed point are
    /// dropped: the attack pulse overrides the legitimate echo there.
    Replace { resolution_deg: f64 },
}

/// Scene points first (in order, minus any replaced), then spoofed points.
pub fn merge_into_scene(
    scene: &PointCloud,
    spoofed: &PointCloud,
    policy: MergePolicy,
) -> Result<PointCloud> {
    let mut points: Vec<Point> = match policy {
        MergePolicy::Append => scene.points.clone(),
        MergePolicy::Replace { resolution_deg } => {
            if !(resolution_deg > 0.0) {
                return Err(Error::InvalidResolution(resolution_deg));
            }
            let bins: HashSet<u32> = spoofed
                .points
                .iter()
                .map(|p| azimuth_bin(p.azimuth_deg(), resolution_deg))
                .collect();
            scene
                .points
                .iter()
                .filter(|p| !bins.contains(&azimuth_bin(p.azimuth_deg(), resolution_deg)))
                .copied()
                .collect()
        }
    };
    points.extend_from_slice(&spoofed.points);
    Ok(scene.with_points(points))
}
