//! A deliberately simple geometric detector: single-linkage Euclidean
//! clustering above the ground, then a PCA-aligned box per cluster.
//!
//! It stands in for a learned detector so the attack pipeline can be run end
//! to end in-process. It knows nothing about object classes.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::OrientedBox;
use crate::geometry::{PointCloud, Vec3};
use crate::io::DetectionRecord;

/// Smallest box extent reported, m.
pub const MIN_BOX_DIM: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorParams {
    pub cluster_radius: f64,
    pub min_points: usize,
    pub max_points: Option<usize>,
    /// Points below this height are treated as ground and ignored.
    pub ground_z: f64,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            cluster_radius: 0.5,
            min_points: 10,
            max_points: None,
            ground_z: -1.4,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.cluster_radius > 0.0) || !self.cluster_radius.is_finite() {
            return Err(Error::invalid("cluster_radius must be positive"));
        }
        if self.min_points < 1 {
            return Err(Error::invalid("min_points must be at least 1"));
        }
        if self.max_points.is_some_and(|m| m < self.min_points) {
            return Err(Error::invalid("max_points must be >= min_points"));
        }
        Ok(())
    }
}

struct DisjointSet {
    parent: Vec<usize>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            // smaller root wins so labels do not depend on union order
            let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
            self.parent[hi] = lo;
        }
    }
}

/// Clusters of point indices, each sorted ascending, ordered by their first
/// index.
pub fn cluster(cloud: &PointCloud, params: &DetectorParams) -> Result<Vec<Vec<usize>>> {
    params.validate()?;
    let r = params.cluster_radius;
    let kept: Vec<usize> = (0..cloud.len())
        .filter(|&i| cloud.points[i].z >= params.ground_z)
        .collect();
    let cell = |p: Vec3| {
        (
            (p.x / r).floor() as i64,
            (p.y / r).floor() as i64,
            (p.z / r).floor() as i64,
        )
    };

    let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
    for (k, &i) in kept.iter().enumerate() {
        grid.entry(cell(cloud.points[i].position()))
            .or_default()
            .push(k);
    }
    let mut sets = DisjointSet::new(kept.len());
    for (k, &i) in kept.iter().enumerate() {
        let p = cloud.points[i].position();
        let (cx, cy, cz) = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                        continue;
                    };
                    for &m in bucket {
                        if m > k && (cloud.points[kept[m]].position() - p).norm() <= r {
                            sets.union(k, m);
                        }
                    }
                }
            }
        }
    }

    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for (k, &idx) in kept.iter().enumerate() {
        let root = sets.find(k);
        groups.entry(root).or_default().push(idx);
    }
    let mut out: Vec<Vec<usize>> = groups
        .into_values()
        .filter(|g| g.len() >= params.min_points && params.max_points.is_none_or(|m| g.len() <= m))
        .collect();
    for g in &mut out {
        g.sort_unstable();
    }
    out.sort_unstable_by_key(|g| g[0]);
    Ok(out)
}

/// Box aligned with the principal axis of the points' ground-plane spread.
pub fn fit_box(points: &[Vec3]) -> Result<OrientedBox> {
    if points.is_empty() {
        return Err(Error::invalid("cannot fit a box to zero points"));
    }
    // canonical order makes the floating-point sums independent of input order
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| {
        a.x.total_cmp(&b.x)
            .then(a.y.total_cmp(&b.y))
            .then(a.z.total_cmp(&b.z))
    });
    let n = pts.len() as f64;
    let (mx, my) = pts
        .iter()
        .fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    let (mx, my) = (mx / n, my / n);
    let (mut cxx, mut cyy, mut cxy) = (0.0, 0.0, 0.0);
    for p in &pts {
        let (dx, dy) = (p.x - mx, p.y - my);
        cxx += dx * dx;
        cyy += dy * dy;
        cxy += dx * dy;
    }
    let yaw = 0.5 * (2.0 * cxy).atan2(cxx - cyy);

    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    for p in &pts {
        let q = p.rotate_z(-yaw);
        lo = Vec3::new(lo.x.min(q.x), lo.y.min(q.y), lo.z.min(q.z));
        hi = Vec3::new(hi.x.max(q.x), hi.y.max(q.y), hi.z.max(q.z));
    }
    let mid = ((lo + hi) * 0.5).rotate_z(yaw);
    let ext = hi - lo;
    Ok(OrientedBox {
        center: mid.to_array(),
        dims: [ext.x, ext.y, ext.z].map(|d| d.max(MIN_BOX_DIM)),
        yaw,
    })
}

pub fn detect(cloud: &PointCloud, params: &DetectorParams) -> Result<Vec<DetectionRecord>> {
    cluster(cloud, params)?
        .into_iter()
        .map(|members| {
            let pts: Vec<Vec3> = members
                .iter()
                .map(|&i| cloud.points[i].position())
                .collect();
            Ok(DetectionRecord {
                bbox: fit_box(&pts)?,
                score: (members.len() as f64 / 100.0).min(1.0),
                label: "object".into(),
            })
        })
        .collect()
}
