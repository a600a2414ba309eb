use serde::{Deserialize, Serialize};

use super::{a_property_constant, poincare_constant, segment_distance, Patch, Point};
use crate::error::{Error, Result};
use crate::fields::Grid;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchGeometryReport {
    pub area: f64,
    pub poincare_constant: f64,
    pub a_constant: f64,
    pub lipschitz_seminorm: f64,
    pub holder_gamma: f64,
    pub holder_seminorm: f64,
}

impl PatchGeometryReport {
    pub fn compute(patch: &Patch, grid: &Grid, gamma: f64, probes: usize) -> Result<Self> {
        let (lipschitz_seminorm, holder_seminorm) = boundary_regularity(patch, gamma)?;
        Ok(Self {
            area: patch.area(),
            poincare_constant: poincare_constant(patch, grid)?,
            a_constant: a_property_constant(patch, probes)?,
            lipschitz_seminorm,
            holder_gamma: gamma,
            holder_seminorm,
        })
    }
}

fn polyline_distance(p: Point, m: &[Point]) -> f64 {
    let n = m.len();
    (0..n).fold(f64::INFINITY, |d, i| {
        d.min(segment_distance(p, m[i], m[(i + 1) % n]))
    })
}

fn one_sided(a: &[Point], b: &[Point]) -> f64 {
    a.iter().fold(0.0, |d, &p| d.max(polyline_distance(p, b)))
}

/// Symmetric Hausdorff distance between the two marker polylines, measuring
/// each vertex against the other chain's segments.
pub fn hausdorff(a: &Patch, b: &Patch) -> f64 {
    one_sided(a.markers(), b.markers()).max(one_sided(b.markers(), a.markers()))
}

/// Discrete Lipschitz and `C^{1,γ}` seminorms of the boundary.
///
/// The Hölder quotient is `|τ_i − τ_k| / |m_i − m_k|^γ` over edge tangents
/// `τ` and edge midpoints `m`; `|τ_i − τ_k| = 2|sin((θ_i − θ_k)/2)|`, which
/// keeps a circle of radius `R` at exactly `1/R` for `γ = 1`. The Lipschitz
/// proxy is the largest `|tan(θ(s) − θ_i)|` for `s` within arclength
/// `perimeter/16` of edge `i`, i.e. the slope of the boundary seen as a graph
/// over its own tangent line.
pub fn boundary_regularity(patch: &Patch, gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "gamma must lie in (0, 1], got {gamma}"
        )));
    }
    let m = patch.markers();
    let n = m.len();
    if n < 16 {
        return Err(Error::Geometry(format!(
            "need at least 16 markers, got {n}"
        )));
    }
    let mut tangents = Vec::with_capacity(n);
    let mut mids = Vec::with_capacity(n);
    let mut lengths = Vec::with_capacity(n);
    for i in 0..n {
        let a = m[i];
        let b = m[(i + 1) % n];
        let d = [b[0] - a[0], b[1] - a[1]];
        let l = d[0].hypot(d[1]);
        tangents.push([d[0] / l, d[1] / l]);
        mids.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
        lengths.push(l);
    }
    let mut holder: f64 = 0.0;
    for i in 0..n {
        for k in (i + 1)..n {
            let dt = (tangents[i][0] - tangents[k][0]).hypot(tangents[i][1] - tangents[k][1]);
            let dm = (mids[i][0] - mids[k][0]).hypot(mids[i][1] - mids[k][1]);
            if dm > 0.0 {
                holder = holder.max(dt / dm.powf(gamma));
            }
        }
    }
    // tangent angle taken piecewise linear in arclength between edge midpoints,
    // sampled at the nodes inside the window and at its two ends
    let window = lengths.iter().sum::<f64>() / 16.0;
    let mut lipschitz: f64 = 0.0;
    for i in 0..n {
        let ti = tangents[i];
        let angle = |k: usize| {
            let tk = tangents[k];
            (ti[0] * tk[1] - ti[1] * tk[0]).atan2(ti[0] * tk[0] + ti[1] * tk[1])
        };
        for dir in [1isize, -1] {
            let (mut s, mut phi) = (0.0, 0.0);
            let mut k = i as isize;
            loop {
                let prev = k.rem_euclid(n as isize) as usize;
                k += dir;
                let kk = k.rem_euclid(n as isize) as usize;
                let step = 0.5 * (lengths[prev] + lengths[kk]);
                let next = angle(kk);
                let reached = if s + step >= window {
                    phi + (next - phi) * (window - s) / step
                } else {
                    next
                };
                if reached.abs() >= std::f64::consts::FRAC_PI_2 {
                    return Ok((f64::INFINITY, holder));
                }
                lipschitz = lipschitz.max(reached.tan().abs());
                if s + step >= window || kk == i {
                    break;
                }
                s += step;
                phi = next;
            }
        }
    }
    Ok((lipschitz, holder))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hausdorff_of_translate_is_shift() {
        let sq = Patch::rectangle([0.0, 0.0], 1.0, 1.0, 0.05).unwrap();
        let t = sq.translated([0.3, 0.0]);
        assert!((hausdorff(&sq, &t) - 0.3).abs() < 1e-12);
        assert_eq!(hausdorff(&sq, &sq), 0.0);
    }

    #[test]
    fn concentric_circles() {
        let a = Patch::disk([0.0, 0.0], 1.0, 0.02).unwrap();
        let b = Patch::disk([0.0, 0.0], 1.1, 0.02).unwrap();
        assert!((hausdorff(&a, &b) - 0.1).abs() <= 0.02);
    }

    #[test]
    fn circle_curvature() {
        for r in [0.5, 1.0, 2.0] {
            let c = Patch::disk([0.2, 0.1], r, 0.02 * r).unwrap();
            let (lip, hol) = boundary_regularity(&c, 1.0).unwrap();
            assert!((hol * r - 1.0).abs() < 0.05, "r={r} holder={hol}");
            assert!(lip.is_finite() && lip < 0.5);
        }
    }

    #[test]
    fn rounded_square_curvature() {
        let r = 0.25;
        let s = Patch::rounded_square([0.0, 0.0], 2.0, r, 0.01).unwrap();
        let (_, hol) = boundary_regularity(&s, 1.0).unwrap();
        assert!((hol * r - 1.0).abs() < 0.05, "{hol}");
    }

    #[test]
    fn refinement_is_stable() {
        let e = Patch::ellipse([0.0, 0.0], 1.0, 0.6, 0.02).unwrap();
        let fine = e.resample_uniform(2 * e.len()).unwrap();
        let coarse = e.resample_uniform(e.len()).unwrap();
        let a = boundary_regularity(&coarse, 0.5).unwrap();
        let b = boundary_regularity(&fine, 0.5).unwrap();
        assert!((a.0 - b.0).abs() / a.0 < 0.05);
        assert!((a.1 - b.1).abs() / a.1 < 0.05);
    }

    #[test]
    fn too_few_markers() {
        let t = Patch::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], 0.5).unwrap();
        assert!(matches!(
            boundary_regularity(&t, 1.0),
            Err(Error::Geometry(_))
        ));
    }
}
