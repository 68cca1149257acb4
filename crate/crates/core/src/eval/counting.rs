//! Counting injected and removed points by comparing an attacked frame with
//! its benign counterpart.
//!
//! Attack returns are bright: spoofed echoes come back well above the
//! intensity of ordinary surfaces, so anything strictly above `threshold` is
//! treated as injected. The remaining attacked points are matched back to the
//! benign frame; benign points left unmatched were removed.

use std::collections::{BTreeMap, HashMap, HashSet};

use crate::geometry::{azimuth_bin, Channel, Point, PointCloud};

/// Default matching radius, meters.
pub const DEFAULT_MATCH_TOL: f64 = 0.01;

/// Number of attacked points brighter than `threshold` (strict).
pub fn count_injected(_benign: &PointCloud, attacked: &PointCloud, threshold: f64) -> usize {
    attacked
        .points
        .iter()
        .filter(|p| p.intensity > threshold)
        .count()
}

fn unique_channels(cloud: &PointCloud) -> Option<HashMap<Channel, usize>> {
    let mut map = HashMap::with_capacity(cloud.len());
    for (i, p) in cloud.points.iter().enumerate() {
        if map.insert(p.channel?, i).is_some() {
            return None;
        }
    }
    Some(map)
}

type Cell = (i64, i64, i64);

fn cell_of(p: &Point, size: f64) -> Cell {
    (
        (p.x / size).floor() as i64,
        (p.y / size).floor() as i64,
        (p.z / size).floor() as i64,
    )
}

/// For every benign point, whether a non-spoofed attacked point accounts for
/// it. Uses exact channel matching when both frames carry unique channel
/// indices, otherwise greedy nearest-neighbor matching within `match_tol`
/// where each attacked point can be claimed once.
pub fn match_benign(
    benign: &PointCloud,
    attacked: &PointCloud,
    threshold: f64,
    match_tol: f64,
) -> Vec<bool> {
    let kept: Vec<&Point> = attacked
        .points
        .iter()
        .filter(|p| p.intensity <= threshold)
        .collect();

    if let (Some(_), Some(_)) = (unique_channels(benign), unique_channels(attacked)) {
        let present: HashSet<Channel> = kept.iter().filter_map(|p| p.channel).collect();
        return benign
            .points
            .iter()
            .map(|p| p.channel.is_some_and(|c| present.contains(&c)))
            .collect();
    }

    let size = match_tol.max(f64::MIN_POSITIVE);
    let mut grid: HashMap<Cell, Vec<usize>> = HashMap::new();
    for (i, p) in kept.iter().enumerate() {
        grid.entry(cell_of(p, size)).or_default().push(i);
    }
    let mut used = vec![false; kept.len()];
    benign
        .points
        .iter()
        .map(|b| {
            let (cx, cy, cz) = cell_of(b, size);
            let mut best: Option<(f64, usize)> = None;
            for dx in -1..=1 {
                for dy in -1..=1 {
                    for dz in -1..=1 {
                        let Some(bucket) = grid.get(&(cx + dx, cy + dy, cz + dz)) else {
                            continue;
                        };
                        for &j in bucket {
                            if used[j] {
                                continue;
                            }
                            let d = (kept[j].position() - b.position()).norm();
                            if d <= match_tol
                                && best.is_none_or(|(bd, bj)| d < bd || (d == bd && j < bj))
                            {
                                best = Some((d, j));
                            }
                        }
                    }
                }
            }
            match best {
                Some((_, j)) => {
                    used[j] = true;
                    true
                }
                None => false,
            }
        })
        .collect()
}

pub fn count_removed(
    benign: &PointCloud,
    attacked: &PointCloud,
    threshold: f64,
    match_tol: f64,
) -> usize {
    match_benign(benign, attacked, threshold, match_tol)
        .into_iter()
        .filter(|m| !m)
        .count()
}

/// Fraction of benign points removed per azimuth sector of `bin_deg`. Sectors
/// without benign points are absent from the table.
pub fn removal_percentage_per_azimuth(
    benign: &PointCloud,
    attacked: &PointCloud,
    bin_deg: f64,
    threshold: f64,
    match_tol: f64,
) -> BTreeMap<u32, f64> {
    let matched = match_benign(benign, attacked, threshold, match_tol);
    let mut tally: BTreeMap<u32, (usize, usize)> = BTreeMap::new();
    for (p, m) in benign.points.iter().zip(matched) {
        let e = tally
            .entry(azimuth_bin(p.azimuth_deg(), bin_deg))
            .or_default();
        e.0 += 1;
        if !m {
            e.1 += 1;
        }
    }
    tally
        .into_iter()
        .map(|(bin, (total, removed))| (bin, removed as f64 / total as f64))
        .collect()
}
