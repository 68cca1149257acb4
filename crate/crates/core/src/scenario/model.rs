use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::OrientedBox;
use crate::geometry::Vec3;

pub type Triangle = [Vec3; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// Axis-aligned in the object frame, centered on the origin.
    Box { dims: [f64; 3] },
    /// Triangles with vertices in the object frame.
    Mesh { triangles: Vec<Triangle> },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub center: Vec3,
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectModel {
    pub shape: Shape,
    pub pose: Pose,
}

/// Smallest triangle area accepted, m^2.
const MIN_TRIANGLE_AREA: f64 = 1e-12;

fn triangle_area(t: &Triangle) -> f64 {
    (t[1] - t[0]).cross(t[2] - t[0]).norm() / 2.0
}

impl ObjectModel {
    /// A box resting on the ground plane `ground_z`, centered laterally.
    pub fn box_on_ground(dims: [f64; 3], ground_z: f64) -> Self {
        ObjectModel {
            shape: Shape::Box { dims },
            pose: Pose {
                center: Vec3::new(0.0, 0.0, ground_z + dims[2] / 2.0),
                yaw: 0.0,
            },
        }
    }

    /// A typical passenger car, 4.5 x 1.9 x 1.6 m.
    pub fn sedan(ground_z: f64) -> Self {
        Self::box_on_ground([4.5, 1.9, 1.6], ground_z)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.pose.center.is_finite() || !self.pose.yaw.is_finite() {
            return Err(Error::InvalidModel("pose must be finite".into()));
        }
        match &self.shape {
            Shape::Box { dims } => {
                if !dims.iter().all(|d| *d > 0.0 && d.is_finite()) {
                    return Err(Error::InvalidModel(format!(
                        "box dims must be positive, got {dims:?}"
                    )));
                }
            }
            Shape::Mesh { triangles } => {
                if triangles.is_empty() {
                    return Err(Error::InvalidModel("mesh has no triangles".into()));
                }
                for (i, t) in triangles.iter().enumerate() {
                    if !t.iter().all(|v| v.is_finite()) {
                        return Err(Error::InvalidModel(format!(
                            "triangle {i} has a non-finite vertex"
                        )));
                    }
                    if !(triangle_area(t) > MIN_TRIANGLE_AREA) {
                        return Err(Error::InvalidModel(format!("triangle {i} is degenerate")));
                    }
                }
            }
        }
        Ok(())
    }

    fn to_world(&self, v: Vec3) -> Vec3 {
        self.pose.center + v.rotate_z(self.pose.yaw)
    }

    /// Object-frame bounds (min, max).
    pub fn local_bounds(&self) -> (Vec3, Vec3) {
        match &self.shape {
            Shape::Box { dims } => {
                let h = Vec3::from(*dims) * 0.5;
                (-h, h)
            }
            Shape::Mesh { triangles } => {
                let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
                let mut hi = -lo;
                for v in triangles.iter().flatten() {
                    lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
                    hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
                }
                (lo, hi)
            }
        }
    }

    /// The object's oriented bounding box in the sensor frame.
    pub fn bounding_box(&self) -> OrientedBox {
        let (lo, hi) = self.local_bounds();
        let c = self.to_world((lo + hi) * 0.5);
        let d = hi - lo;
        // flat meshes still need a positive extent
        let dims = [d.x, d.y, d.z].map(|v| v.max(1e-6));
        OrientedBox {
            center: c.to_array(),
            dims,
            yaw: self.pose.yaw,
        }
    }

    fn world_vertices(&self) -> Vec<Vec3> {
        match &self.shape {
            Shape::Box { .. } => {
                let (lo, hi) = self.local_bounds();
                let mut v = Vec::with_capacity(8);
                for x in [lo.x, hi.x] {
                    for y in [lo.y, hi.y] {
                        for z in [lo.z, hi.z] {
                            v.push(self.to_world(Vec3::new(x, y, z)));
                        }
                    }
                }
                v
            }
            Shape::Mesh { triangles } => triangles
                .iter()
                .flatten()
                .map(|&v| self.to_world(v))
                .collect(),
        }
    }

    /// Moves the object along x so its rearmost point sits `distance` ahead of
    /// the victim's nose, which is `nose_offset` ahead of the sensor.
    pub fn placed_at(&self, distance: f64, nose_offset: f64) -> Result<ObjectModel> {
        if !(distance >= 0.0) || !distance.is_finite() {
            return Err(Error::invalid(format!(
                "distance must be >= 0, got {distance}"
            )));
        }
        self.validate()?;
        let rear = self
            .world_vertices()
            .iter()
            .map(|v| v.x)
            .fold(f64::INFINITY, f64::min);
        let mut out = self.clone();
        out.pose.center.x += nose_offset + distance - rear;
        Ok(out)
    }

    /// Random offset of up to `longitudinal_max` along x and `lateral_max`
    /// along y; yaw is kept.
    pub fn jittered<R: Rng + ?Sized>(
        &self,
        lateral_max: f64,
        longitudinal_max: f64,
        rng: &mut R,
    ) -> Result<ObjectModel> {
        if !(lateral_max >= 0.0 && longitudinal_max >= 0.0) {
            return Err(Error::invalid("jitter maxima must be >= 0"));
        }
        let mut draw = |m: f64| -> f64 {
            if m == 0.0 {
                0.0
            } else {
                Uniform::new_inclusive(-m, m)
                    .expect("finite bounds")
                    .sample(rng)
            }
        };
        let dx = draw(longitudinal_max);
        let dy = draw(lateral_max);
        let mut out = self.clone();
        out.pose.center = out.pose.center + Vec3::new(dx, dy, 0.0);
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<ObjectModel> {
        let ext = path
            .extension()
            .map(|e| e.to_string_lossy().to_ascii_lowercase())
            .unwrap_or_default();
        let text = std::fs::read_to_string(path)?;
        let model = match ext.as_str() {
            "stl" => ObjectModel {
                shape: Shape::Mesh {
                    triangles: parse_ascii_stl(&text)?,
                },
                pose: Pose {
                    center: Vec3::ZERO,
                    yaw: 0.0,
                },
            },
            "toml" => parse_object_spec(&text, path.parent())?,
            _ => {
                return Err(Error::InvalidModel(format!(
                    "{}: expected an .stl mesh or a .toml object spec",
                    path.display()
                )))
            }
        };
        model.validate()?;
        Ok(model)
    }
}

/// Reads ASCII STL facets. Normals are ignored.
pub fn parse_ascii_stl(text: &str) -> Result<Vec<Triangle>> {
    let mut tokens = text.split_whitespace();
    match tokens.next() {
        Some(t) if t.eq_ignore_ascii_case("solid") => {}
        _ => return Err(Error::InvalidModel("STL must start with 'solid'".into())),
    }
    let mut triangles = Vec::new();
    let mut current: Vec<Vec3> = Vec::with_capacity(3);
    while let Some(tok) = tokens.next() {
        if tok.eq_ignore_ascii_case("vertex") {
            let mut c = [0.0; 3];
            for slot in &mut c {
                *slot = tokens
                    .next()
                    .and_then(|t| t.parse::<f64>().ok())
                    .ok_or_else(|| Error::InvalidModel("STL vertex needs three numbers".into()))?;
            }
            current.push(Vec3::from(c));
        } else if tok.eq_ignore_ascii_case("endloop") {
            if current.len() != 3 {
                return Err(Error::InvalidModel(format!(
                    "STL facet {} has {} vertices",
                    triangles.len(),
                    current.len()
                )));
            }
            triangles.push([current[0], current[1], current[2]]);
            current.clear();
        }
    }
    if triangles.is_empty() {
        return Err(Error::InvalidModel("STL has no facets".into()));
    }
    Ok(triangles)
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ObjectSpecFile {
    #[serde(rename = "box")]
    box_dims: Option<[f64; 3]>,
    mesh: Option<String>,
    #[serde(default)]
    center: Option<[f64; 3]>,
    #[serde(default)]
    yaw: f64,
    /// Rests the object on this ground height when `center` is absent.
    #[serde(default)]
    ground_z: Option<f64>,
}

/// Declarative object spec:
///
/// ```toml
/// box = [4.5, 1.9, 1.6]     # or: mesh = "car.stl"
/// ground_z = -1.73          # or: center = [0.0, 0.0, -0.93]
/// yaw = 0.0
/// ```
pub fn parse_object_spec(text: &str, base: Option<&Path>) -> Result<ObjectModel> {
    let spec: ObjectSpecFile =
        toml::from_str(text).map_err(|e| Error::InvalidModel(format!("object spec: {e}")))?;
    let shape = match (spec.box_dims, &spec.mesh) {
        (Some(dims), None) => Shape::Box { dims },
        (None, Some(mesh)) => {
            let path = base.map_or_else(|| Path::new(mesh).to_path_buf(), |b| b.join(mesh));
            let text = std::fs::read_to_string(&path)
                .map_err(|e| Error::InvalidModel(format!("{}: {e}", path.display())))?;
            Shape::Mesh {
                triangles: parse_ascii_stl(&text)?,
            }
        }
        _ => {
            return Err(Error::InvalidModel(
                "object spec needs exactly one of 'box' or 'mesh'".into(),
            ))
        }
    };
    let mut model = ObjectModel {
        shape,
        pose: Pose {
            center: Vec3::ZERO,
            yaw: spec.yaw,
        },
    };
    match (spec.center, spec.ground_z) {
        (Some(c), _) => model.pose.center = Vec3::from(c),
        (None, Some(g)) => {
            let (lo, _) = model.local_bounds();
            model.pose.center = Vec3::new(0.0, 0.0, g - lo.z);
        }
        (None, None) => {}
    }
    model.validate()?;
    Ok(model)
}

/// First intersection parameter `t >= 0` of the ray `t * dir` with `model`.
pub(crate) struct Caster {
    model: ObjectModel,
    world_tris: Vec<Triangle>,
    aabb: (Vec3, Vec3),
}

impl Caster {
    pub(crate) fn new(model: &ObjectModel) -> Result<Self> {
        model.validate()?;
        let world_tris = match &model.shape {
            Shape::Box { .. } => Vec::new(),
            Shape::Mesh { triangles } => triangles
                .iter()
                .map(|t| t.map(|v| model.to_world(v)))
                .collect(),
        };
        let verts = model.world_vertices();
        let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
        let mut hi = -lo;
        for v in &verts {
            lo = Vec3::new(lo.x.min(v.x), lo.y.min(v.y), lo.z.min(v.z));
            hi = Vec3::new(hi.x.max(v.x), hi.y.max(v.y), hi.z.max(v.z));
        }
        Ok(Caster {
            model: model.clone(),
            world_tris,
            aabb: (lo, hi),
        })
    }

    /// Whether the sensor origin is strictly inside the object.
    pub(crate) fn contains_origin(&self) -> bool {
        match &self.model.shape {
            Shape::Box { dims } => {
                let q = (-self.model.pose.center).rotate_z(-self.model.pose.yaw);
                q.x.abs() < dims[0] / 2.0 && q.y.abs() < dims[1] / 2.0 && q.z.abs() < dims[2] / 2.0
            }
            // meshes may be open; only reject when the origin is inside the bounds
            // and a ray straight up hits an odd number of triangles
            Shape::Mesh { .. } => {
                let (lo, hi) = self.aabb;
                let inside_bounds = lo.x < 0.0
                    && hi.x > 0.0
                    && lo.y < 0.0
                    && hi.y > 0.0
                    && lo.z < 0.0
                    && hi.z > 0.0;
                inside_bounds
                    && self
                        .world_tris
                        .iter()
                        .filter(|t| ray_triangle(Vec3::Z, t).is_some())
                        .count()
                        % 2
                        == 1
            }
        }
    }

    pub(crate) fn first_hit(&self, dir: Vec3) -> Option<f64> {
        slab(Vec3::ZERO, dir, self.aabb.0, self.aabb.1)?;
        match &self.model.shape {
            Shape::Box { dims } => {
                let o = (-self.model.pose.center).rotate_z(-self.model.pose.yaw);
                let d = dir.rotate_z(-self.model.pose.yaw);
                let h = Vec3::from(*dims) * 0.5;
                slab(o, d, -h, h).map(|(t, _)| t)
            }
            Shape::Mesh { .. } => self
                .world_tris
                .iter()
                .filter_map(|t| ray_triangle(dir, t))
                .min_by(f64::total_cmp),
        }
    }
}

/// Slab test of the ray `o + t d`, `t >= 0`, against an axis-aligned box.
/// Returns (entry, exit); entry is clamped to 0 when the origin is inside.
fn slab(o: Vec3, d: Vec3, lo: Vec3, hi: Vec3) -> Option<(f64, f64)> {
    let mut t_near = 0.0f64;
    let mut t_far = f64::INFINITY;
    for (o, d, lo, hi) in [
        (o.x, d.x, lo.x, hi.x),
        (o.y, d.y, lo.y, hi.y),
        (o.z, d.z, lo.z, hi.z),
    ] {
        if d == 0.0 {
            if o < lo || o > hi {
                return None;
            }
            continue;
        }
        let (mut a, mut b) = ((lo - o) / d, (hi - o) / d);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        t_near = t_near.max(a);
        t_far = t_far.min(b);
        if t_near > t_far {
            return None;
        }
    }
    Some((t_near, t_far))
}

/// Moller-Trumbore for a ray from the origin; hits at `t > 0` only.
fn ray_triangle(dir: Vec3, tri: &Triangle) -> Option<f64> {
    const EPS: f64 = 1e-14;
    let e1 = tri[1] - tri[0];
    let e2 = tri[2] - tri[0];
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < EPS {
        return None;
    }
    let inv = 1.0 / det;
    let s = -tri[0];
    let u = s.dot(p) * inv;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv;
    (t > 0.0).then_some(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_for;

    const UNIT_CUBE_STL: &str = include_str!("../../tests/data/cube.stl");

    #[test]
    fn stl_parses() {
        let tris = parse_ascii_stl(UNIT_CUBE_STL).unwrap();
        assert_eq!(tris.len(), 12);
        assert!(parse_ascii_stl("solid x\nendsolid x\n").is_err());
        assert!(parse_ascii_stl("garbage").is_err());
        assert!(parse_ascii_stl(
            "solid x facet normal 0 0 1 outer loop vertex 0 0 0 vertex 1 0 0 endloop endfacet"
        )
        .is_err());
    }

    #[test]
    fn degenerate_models_rejected() {
        let flat = ObjectModel {
            shape: Shape::Box {
                dims: [1.0, 0.0, 1.0],
            },
            pose: Pose {
                center: Vec3::X,
                yaw: 0.0,
            },
        };
        assert!(matches!(flat.validate(), Err(Error::InvalidModel(_))));
        let sliver = ObjectModel {
            shape: Shape::Mesh {
                triangles: vec![[Vec3::ZERO, Vec3::X, Vec3::X * 2.0]],
            },
            pose: Pose {
                center: Vec3::X,
                yaw: 0.0,
            },
        };
        assert!(matches!(sliver.validate(), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn placement_puts_rear_at_distance() {
        let m = ObjectModel::sedan(-1.73).placed_at(5.0, 0.0).unwrap();
        assert!((m.pose.center.x - 7.25).abs() < 1e-12);
        let rotated = ObjectModel {
            pose: Pose {
                yaw: std::f64::consts::FRAC_PI_2,
                ..ObjectModel::sedan(-1.73).pose
            },
            ..ObjectModel::sedan(-1.73)
        };
        let m = rotated.placed_at(5.0, 1.0).unwrap();
        assert!((m.pose.center.x - (6.0 + 0.95)).abs() < 1e-9);
        assert!(ObjectModel::sedan(0.0).placed_at(-1.0, 0.0).is_err());
    }

    #[test]
    fn box_and_mesh_cube_agree() {
        let tris = parse_ascii_stl(UNIT_CUBE_STL).unwrap();
        let pose = Pose {
            center: Vec3::new(5.0, 0.3, 0.2),
            yaw: 0.4,
        };
        let mesh = Caster::new(&ObjectModel {
            shape: Shape::Mesh { triangles: tris },
            pose,
        })
        .unwrap();
        let boxed = Caster::new(&ObjectModel {
            shape: Shape::Box {
                dims: [1.0, 1.0, 1.0],
            },
            pose,
        })
        .unwrap();
        let mut hits = 0;
        for i in 0..400 {
            let az = (-8.0 + 0.04 * i as f64).to_radians();
            for alt in [-5.0f64, -2.0, 0.0, 2.0, 4.0] {
                let alt = alt.to_radians();
                let d = Vec3::new(alt.cos() * az.cos(), alt.cos() * az.sin(), alt.sin());
                match (mesh.first_hit(d), boxed.first_hit(d)) {
                    (Some(a), Some(b)) => {
                        hits += 1;
                        assert!((a - b).abs() < 1e-9);
                    }
                    (None, None) => {}
                    // grazing rays along an edge may disagree
                    (a, b) => assert!(a.or(b).is_some()),
                }
            }
        }
        assert!(hits > 100);
    }

    #[test]
    fn jitter_zero_and_seeded() {
        let m = ObjectModel::sedan(-1.73).placed_at(8.0, 0.0).unwrap();
        let mut rng = rng_for(4, &[]);
        assert_eq!(m.jittered(0.0, 0.0, &mut rng).unwrap(), m);
        let a = m.jittered(1.0, 1.0, &mut rng_for(9, &[])).unwrap();
        let b = m.jittered(1.0, 1.0, &mut rng_for(9, &[])).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.pose.yaw, m.pose.yaw);
        assert!(m.jittered(-1.0, 0.0, &mut rng).is_err());
    }

    #[test]
    fn object_spec_files() {
        let m =
            parse_object_spec("box = [4.0, 2.0, 1.5]\nground_z = -1.5\nyaw = 0.1\n", None).unwrap();
        assert_eq!(
            m.shape,
            Shape::Box {
                dims: [4.0, 2.0, 1.5]
            }
        );
        assert!((m.pose.center.z + 0.75).abs() < 1e-12);
        assert!(parse_object_spec("yaw = 0.1\n", None).is_err());
        assert!(parse_object_spec("box = [1, 1, 1]\nmesh = \"a.stl\"\n", None).is_err());
        assert!(parse_object_spec("box = [1, -1, 1]\n", None).is_err());
    }
}
