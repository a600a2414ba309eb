use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Patch, Point};
use crate::error::{Error, Result};

/// Signed area of `B_r(0) ∩ triangle(0, a, b)`.
fn triangle_disk_area(a: Point, b: Point, r: f64) -> f64 {
    let d = [b[0] - a[0], b[1] - a[1]];
    let qa = d[0] * d[0] + d[1] * d[1];
    let qb = 2.0 * (a[0] * d[0] + a[1] * d[1]);
    let qc = a[0] * a[0] + a[1] * a[1] - r * r;
    let mut ts = vec![0.0];
    let disc = qb * qb - 4.0 * qa * qc;
    if qa > 0.0 && disc > 0.0 {
        let s = disc.sqrt();
        for t in [(-qb - s) / (2.0 * qa), (-qb + s) / (2.0 * qa)] {
            if t > 0.0 && t < 1.0 {
                ts.push(t);
            }
        }
    }
    ts.push(1.0);
    let at = |t: f64| [a[0] + t * d[0], a[1] + t * d[1]];
    let mut area = 0.0;
    for w in ts.windows(2) {
        let p = at(w[0]);
        let q = at(w[1]);
        let mid = at(0.5 * (w[0] + w[1]));
        let cr = p[0] * q[1] - p[1] * q[0];
        if mid[0] * mid[0] + mid[1] * mid[1] <= r * r {
            area += 0.5 * cr;
        } else {
            let dot = p[0] * q[0] + p[1] * q[1];
            area += 0.5 * r * r * cr.atan2(dot);
        }
    }
    area
}

/// Exact area of `B_r(c) ∩ D` for the polygonal patch.
pub fn disk_polygon_area(patch: &Patch, c: Point, r: f64) -> f64 {
    let m = patch.markers();
    let n = m.len();
    (0..n)
        .map(|i| {
            let a = [m[i][0] - c[0], m[i][1] - c[1]];
            let b = [m[(i + 1) % n][0] - c[0], m[(i + 1) % n][1] - c[1]];
            triangle_disk_area(a, b, r)
        })
        .sum()
}

pub fn a_property_constant(patch: &Patch, probes: usize) -> Result<f64> {
    a_property_constant_seeded(patch, probes, 0)
}

/// Largest `A` with `|B_r(x) ∩ D| ≥ min{A (r − d)², |D|}` on every sampled
/// probe, where `d = dist(x, D) < r`. Centres are drawn from the bounding box
/// grown by half a diameter and radii from `(d, d + diam]`.
pub fn a_property_constant_seeded(patch: &Patch, probes: usize, seed: u64) -> Result<f64> {
    a_property_sampled(patch, probes, seed, false)
}

/// Same estimator restricted to centres inside `D` (`d = 0`).
pub fn a_property_constant_interior(patch: &Patch, probes: usize, seed: u64) -> Result<f64> {
    a_property_sampled(patch, probes, seed, true)
}

fn a_property_sampled(patch: &Patch, probes: usize, seed: u64, interior: bool) -> Result<f64> {
    if probes < 1000 {
        return Err(Error::InvalidParameter(format!(
            "need at least 1000 probes, got {probes}"
        )));
    }
    let area = patch.area();
    let s = patch.arclength_density();
    if area < 10.0 * s * s {
        return Err(Error::Geometry(format!(
            "degenerate patch: area {area:e} below 10 spacing²"
        )));
    }
    let diam = patch.diameter();
    let [x0, x1, y0, y1] = patch.bounding_box();
    let pad = if interior { 0.0 } else { 0.5 * diam };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<(f64, f64)> = Vec::with_capacity(probes);
    while samples.len() < probes {
        let x = [
            rng.gen_range(x0 - pad..x1 + pad),
            rng.gen_range(y0 - pad..y1 + pad),
        ];
        let d = patch.distance(x);
        if interior && d > 0.0 {
            continue;
        }
        let r = d + diam * (1.0 - rng.gen::<f64>());
        if r <= d {
            continue;
        }
        samples.push((disk_polygon_area(patch, x, r), (r - d) * (r - d)));
    }
    let ok = |a: f64| {
        samples
            .iter()
            .all(|&(cap, q)| cap >= (a * q).min(area) * (1.0 - 1e-12))
    };
    let (mut lo, mut hi) = (0.0, std::f64::consts::PI);
    if ok(hi) {
        return Ok(hi);
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if ok(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn intersection_area_of_concentric_and_disjoint() {
        let sq = Patch::rectangle([0.0, 0.0], 2.0, 2.0, 0.25).unwrap();
        assert!((disk_polygon_area(&sq, [0.0, 0.0], 0.5) - PI * 0.25).abs() < 1e-12);
        assert!((disk_polygon_area(&sq, [0.0, 0.0], 5.0) - 4.0).abs() < 1e-12);
        assert!(disk_polygon_area(&sq, [5.0, 0.0], 1.0).abs() < 1e-12);
        // disk centred on an edge midpoint: half disk
        assert!((disk_polygon_area(&sq, [1.0, 0.0], 0.5) - PI * 0.125).abs() < 1e-12);
        // centred at a corner: quarter disk
        assert!((disk_polygon_area(&sq, [1.0, 1.0], 0.5) - PI * 0.0625).abs() < 1e-12);
    }

    #[test]
    fn intersection_area_matches_grid_quadrature() {
        let d = Patch::disk([0.1, -0.2], 1.0, 0.05).unwrap();
        let c = [0.8, 0.3];
        let r = 0.7;
        let m = 1200;
        let h = 4.0 / m as f64;
        let mut acc = 0.0;
        for j in 0..m {
            for i in 0..m {
                let p = [-2.0 + (i as f64 + 0.5) * h, -2.0 + (j as f64 + 0.5) * h];
                if (p[0] - c[0]).hypot(p[1] - c[1]) < r && d.contains(p) {
                    acc += h * h;
                }
            }
        }
        assert!((disk_polygon_area(&d, c, r) - acc).abs() < 2e-3);
    }
}
