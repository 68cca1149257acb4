//! Bird's-eye-view IoU of yaw-rotated boxes via convex polygon clipping.

use super::boxes::OrientedBox;

type P2 = [f64; 2];

fn cross(o: P2, a: P2, b: P2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

fn line_intersection(p: P2, q: P2, a: P2, b: P2) -> P2 {
    // segment p-q against the infinite line a-b
    let (dp, dq) = (cross(a, b, p), cross(a, b, q));
    let t = dp / (dp - dq);
    [p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t]
}

/// Sutherland-Hodgman: clips `subject` by the convex counterclockwise `clip`.
pub fn clip_convex(subject: &[P2], clip: &[P2]) -> Vec<P2> {
    let mut out = subject.to_vec();
    for i in 0..clip.len() {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[i], clip[(i + 1) % clip.len()]);
        let input = std::mem::take(&mut out);
        let mut prev = input[input.len() - 1];
        for &cur in &input {
            let cur_in = cross(a, b, cur) >= 0.0;
            let prev_in = cross(a, b, prev) >= 0.0;
            if cur_in {
                if !prev_in {
                    out.push(line_intersection(prev, cur, a, b));
                }
                out.push(cur);
            } else if prev_in {
                out.push(line_intersection(prev, cur, a, b));
            }
            prev = cur;
        }
    }
    out
}

pub fn polygon_area(poly: &[P2]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let twice: f64 = (0..poly.len())
        .map(|i| {
            let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
            p[0] * q[1] - q[0] * p[1]
        })
        .sum();
    (twice / 2.0).abs()
}

/// Footprint overlap area of two boxes. Slivers below a relative 1e-9 of the
/// smaller footprint (edge or corner contact) count as zero.
pub fn intersection_area_bev(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let (ca, cb) = (a.bev_corners(), b.bev_corners());
    let area = polygon_area(&clip_convex(&ca, &cb));
    if area <= 1e-9 * a.bev_area().min(b.bev_area()) {
        0.0
    } else {
        area
    }
}

pub fn iou_bev(a: &OrientedBox, b: &OrientedBox) -> f64 {
    // order the pair so iou(a, b) and iou(b, a) run identical arithmetic
    let (a, b) = if key(a) <= key(b) { (a, b) } else { (b, a) };
    let inter = intersection_area_bev(a, b);
    if inter == 0.0 {
        return 0.0;
    }
    let union = a.bev_area() + b.bev_area() - inter;
    (inter / union).clamp(0.0, 1.0)
}

fn key(b: &OrientedBox) -> [u64; 6] {
    [
        b.center[0].to_bits(),
        b.center[1].to_bits(),
        b.dims[0].to_bits(),
        b.dims[1].to_bits(),
        b.yaw.to_bits(),
        b.center[2].to_bits(),
    ]
}
