#![allow(dead_code)]

use spoofsim_core::eval::OrientedBox;

/// Horizontal chord of a convex polygon at height `y`, if any.
fn chord(poly: &[[f64; 2]; 4], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for k in 0..4 {
        let (a, b) = (poly[k], poly[(k + 1) % 4]);
        if (a[1] <= y && y <= b[1]) || (b[1] <= y && y <= a[1]) {
            if a[1] == b[1] {
                lo = lo.min(a[0].min(b[0]));
                hi = hi.max(a[0].max(b[0]));
            } else {
                let x = a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Cell-centre count of `[lo, hi]` on a grid starting at `x0` with pitch `h`.
fn cells(lo: f64, hi: f64, x0: f64, h: f64, n: usize) -> i64 {
    let first = ((lo - x0) / h - 0.5).ceil().max(0.0);
    let last = ((hi - x0) / h - 0.5).floor().min(n as f64 - 1.0);
    (last - first + 1.0).max(0.0) as i64
}

/// BEV IoU by counting the centres of an `n x n` grid over the pair's joint
/// bounding square, one analytic chord per row.
pub fn grid_iou(a: &OrientedBox, b: &OrientedBox, n: usize) -> f64 {
    let (pa, pb) = (a.bev_corners(), b.bev_corners());
    let all = pa.iter().chain(pb.iter());
    let (mut x0, mut y0, mut x1, mut y1) = (
        f64::INFINITY,
        f64::INFINITY,
        f64::NEG_INFINITY,
        f64::NEG_INFINITY,
    );
    for c in all {
        x0 = x0.min(c[0]);
        y0 = y0.min(c[1]);
        x1 = x1.max(c[0]);
        y1 = y1.max(c[1]);
    }
    let side = (x1 - x0).max(y1 - y0);
    let h = side / n as f64;
    let (mut ia, mut ib, mut both) = (0i64, 0i64, 0i64);
    for row in 0..n {
        let y = y0 + (row as f64 + 0.5) * h;
        let ca = chord(&pa, y);
        let cb = chord(&pb, y);
        if let Some((l, r)) = ca {
            ia += cells(l, r, x0, h, n);
        }
        if let Some((l, r)) = cb {
            ib += cells(l, r, x0, h, n);
        }
        if let (Some((la, ra)), Some((lb, rb))) = (ca, cb) {
            if la.max(lb) <= ra.min(rb) {
                both += cells(la.max(lb), ra.min(rb), x0, h, n);
            }
        }
    }
    let union = ia + ib - both;
    if union == 0 {
        0.0
    } else {
        both as f64 / union as f64
    }
}
