//! The patch `D` as a closed counter-clockwise marker chain, and geometry
//! derived from it.

mod a_property;
mod io;
mod poincare;
mod raster;
mod regularity;

pub use a_property::{
    a_property_constant, a_property_constant_interior, a_property_constant_seeded,
    disk_polygon_area,
};
pub use io::{read_marker_csv, save_marker_csv, write_marker_csv, MarkerBlock, MARKER_HEADER};
pub use poincare::{
    fine_poincare_constant, neumann_laplacian, poincare_constant, poincare_constant_with,
    NeumannLaplacian, PoincareOptions,
};
pub use raster::{dilated_mask, rasterize, signed_distance_field};
pub use regularity::{boundary_regularity, hausdorff, PatchGeometryReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Patch {
    markers: Vec<Point>,
    arclength_density: f64,
}

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = sub(b, a);
    let ap = sub(p, a);
    let l2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if l2 > 0.0 {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    norm([ap[0] - t * ab[0], ap[1] - t * ab[1]])
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    cross(sub(b, a), sub(c, a))
}

fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| {
        d == 0.0
            && c[0] >= a[0].min(b[0])
            && c[0] <= a[0].max(b[0])
            && c[1] >= a[1].min(b[1])
            && c[1] <= a[1].max(b[1])
    };
    on(q1, q2, p1, d1) || on(q1, q2, p2, d2) || on(p1, p2, q1, d3) || on(p1, p2, q2, d4)
}

/// Pairwise check that no two non-adjacent edges of the closed chain meet.
pub fn is_simple(markers: &[Point]) -> bool {
    let n = markers.len();
    if n < 3 {
        return false;
    }
    let edge = |i: usize| (markers[i], markers[(i + 1) % n]);
    let bbox: Vec<[f64; 4]> = (0..n)
        .map(|i| {
            let (a, b) = edge(i);
            [
                a[0].min(b[0]),
                a[0].max(b[0]),
                a[1].min(b[1]),
                a[1].max(b[1]),
            ]
        })
        .collect();
    for i in 0..n {
        for k in (i + 2)..n {
            if i == 0 && k == n - 1 {
                continue;
            }
            let (bi, bk) = (bbox[i], bbox[k]);
            if bi[1] < bk[0] || bk[1] < bi[0] || bi[3] < bk[2] || bk[3] < bi[2] {
                continue;
            }
            let (a, b) = edge(i);
            let (c, d) = edge(k);
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

pub fn signed_area_of(markers: &[Point]) -> f64 {
    let n = markers.len();
    0.5 * (0..n)
        .map(|i| cross(markers[i], markers[(i + 1) % n]))
        .sum::<f64>()
}

impl Patch {
    /// Validated patch: at least three markers, simple, counter-clockwise.
    pub fn new(markers: Vec<Point>, arclength_density: f64) -> Result<Self> {
        if markers.len() < 3 {
            return Err(Error::Geometry("a patch needs at least 3 markers".into()));
        }
        if !(arclength_density.is_finite() && arclength_density > 0.0) {
            return Err(Error::Geometry("arclength density must be positive".into()));
        }
        if markers
            .iter()
            .any(|p| !(p[0].is_finite() && p[1].is_finite()))
        {
            return Err(Error::Geometry("marker coordinates must be finite".into()));
        }
        if signed_area_of(&markers) <= 0.0 {
            return Err(Error::Geometry(
                "marker chain must be counter-clockwise".into(),
            ));
        }
        if !is_simple(&markers) {
            return Err(Error::Geometry("marker chain self-intersects".into()));
        }
        Ok(Self {
            markers,
            arclength_density,
        })
    }

    /// Marker chain moved by a flow; only orientation is re-checked, the full
    /// simplicity scan runs when [`Patch::resample`] is called.
    pub fn moved(&self, markers: Vec<Point>) -> Result<Self> {
        if markers.len() != self.markers.len() {
            return Err(Error::Geometry("moved chain changed marker count".into()));
        }
        if signed_area_of(&markers) <= 0.0 {
            return Err(Error::Geometry(
                "transported chain lost its orientation".into(),
            ));
        }
        Ok(Self {
            markers,
            arclength_density: self.arclength_density,
        })
    }

    pub fn disk(center: Point, radius: f64, density: f64) -> Result<Self> {
        Self::ellipse(center, radius, radius, density)
    }

    pub fn ellipse(center: Point, a: f64, b: f64, density: f64) -> Result<Self> {
        let perimeter =
            std::f64::consts::PI * (3.0 * (a + b) - ((3.0 * a + b) * (a + 3.0 * b)).sqrt());
        let count = ((perimeter / density).round() as usize).max(16);
        let markers = (0..count)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                [center[0] + a * th.cos(), center[1] + b * th.sin()]
            })
            .collect();
        Self::new(markers, density)
    }

    /// Axis-aligned rectangle with markers spaced close to `density`.
    pub fn rectangle(center: Point, width: f64, height: f64, density: f64) -> Result<Self> {
        let corners = [
            [center[0] - width / 2.0, center[1] - height / 2.0],
            [center[0] + width / 2.0, center[1] - height / 2.0],
            [center[0] + width / 2.0, center[1] + height / 2.0],
            [center[0] - width / 2.0, center[1] + height / 2.0],
        ];
        let mut markers = Vec::new();
        for c in 0..4 {
            let a = corners[c];
            let b = corners[(c + 1) % 4];
            let m = ((norm(sub(b, a)) / density).round() as usize).max(1);
            for k in 0..m {
                let t = k as f64 / m as f64;
                markers.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        Self::new(markers, density)
    }

    /// Square of side `side` whose corners are rounded with radius `r`.
    pub fn rounded_square(center: Point, side: f64, r: f64, density: f64) -> Result<Self> {
        if !(r > 0.0 && 2.0 * r < side) {
            return Err(Error::Geometry(
                "corner radius must lie in (0, side/2)".into(),
            ));
        }
        let h = side / 2.0 - r;
        let mut markers = Vec::new();
        let centers = [[h, -h], [h, h], [-h, h], [-h, -h]];
        for (q, c) in centers.iter().enumerate() {
            let th0 = -std::f64::consts::FRAC_PI_2 + q as f64 * std::f64::consts::FRAC_PI_2;
            let arc = std::f64::consts::FRAC_PI_2 * r;
            let ma = ((arc / density).round() as usize).max(2);
            for k in 0..ma {
                let th = th0 + std::f64::consts::FRAC_PI_2 * k as f64 / ma as f64;
                markers.push([
                    center[0] + c[0] + r * th.cos(),
                    center[1] + c[1] + r * th.sin(),
                ]);
            }
            let a = [
                center[0] + c[0] + r * (th0 + std::f64::consts::FRAC_PI_2).cos(),
                center[1] + c[1] + r * (th0 + std::f64::consts::FRAC_PI_2).sin(),
            ];
            let nc = centers[(q + 1) % 4];
            let b = [
                center[0] + nc[0] + r * (th0 + std::f64::consts::FRAC_PI_2).cos(),
                center[1] + nc[1] + r * (th0 + std::f64::consts::FRAC_PI_2).sin(),
            ];
            let ms = ((norm(sub(b, a)) / density).round() as usize).max(1);
            for k in 0..ms {
                let t = k as f64 / ms as f64;
                markers.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
            }
        }
        Self::new(markers, density)
    }

    #[inline]
    pub fn markers(&self) -> &[Point] {
        &self.markers
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.markers.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    #[inline]
    pub fn arclength_density(&self) -> f64 {
        self.arclength_density
    }

    pub fn signed_area(&self) -> f64 {
        signed_area_of(&self.markers)
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        let n = self.markers.len();
        (0..n)
            .map(|i| norm(sub(self.markers[(i + 1) % n], self.markers[i])))
            .sum()
    }

    pub fn centroid(&self) -> Point {
        let n = self.markers.len();
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let p = self.markers[i];
            let q = self.markers[(i + 1) % n];
            let c = cross(p, q);
            cx += (p[0] + q[0]) * c;
            cy += (p[1] + q[1]) * c;
        }
        let a6 = 6.0 * self.signed_area();
        [cx / a6, cy / a6]
    }

    /// `[xmin, xmax, ymin, ymax]`.
    pub fn bounding_box(&self) -> [f64; 4] {
        self.markers.iter().fold(
            [
                f64::INFINITY,
                f64::NEG_INFINITY,
                f64::INFINITY,
                f64::NEG_INFINITY,
            ],
            |b, p| {
                [
                    b[0].min(p[0]),
                    b[1].max(p[0]),
                    b[2].min(p[1]),
                    b[3].max(p[1]),
                ]
            },
        )
    }

    pub fn diameter(&self) -> f64 {
        let m = &self.markers;
        let mut d: f64 = 0.0;
        for i in 0..m.len() {
            for k in (i + 1)..m.len() {
                d = d.max(norm(sub(m[i], m[k])));
            }
        }
        d
    }

    pub fn translated(&self, v: Point) -> Self {
        Self {
            markers: self
                .markers
                .iter()
                .map(|p| [p[0] + v[0], p[1] + v[1]])
                .collect(),
            arclength_density: self.arclength_density,
        }
    }

    /// Scaling about the origin; densities scale along.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        Self::new(
            self.markers.iter().map(|p| [p[0] * s, p[1] * s]).collect(),
            self.arclength_density * s,
        )
    }

    pub fn rotated(&self, theta: f64, about: Point) -> Self {
        let (sn, cs) = theta.sin_cos();
        Self {
            markers: self
                .markers
                .iter()
                .map(|p| {
                    let d = sub(*p, about);
                    [
                        about[0] + cs * d[0] - sn * d[1],
                        about[1] + sn * d[0] + cs * d[1],
                    ]
                })
                .collect(),
            arclength_density: self.arclength_density,
        }
    }

    /// Even-odd containment test.
    pub fn contains(&self, p: Point) -> bool {
        let m = &self.markers;
        let n = m.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (m[i], m[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Distance from `p` to the marker polyline.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        let m = &self.markers;
        let n = m.len();
        (0..n).fold(f64::INFINITY, |d, i| {
            d.min(segment_distance(p, m[i], m[(i + 1) % n]))
        })
    }

    /// Distance to the closed set `D` (zero inside).
    pub fn distance(&self, p: Point) -> f64 {
        if self.contains(p) {
            0.0
        } else {
            self.boundary_distance(p)
        }
    }

    /// Negative inside, positive outside.
    pub fn signed_distance(&self, p: Point) -> f64 {
        let d = self.boundary_distance(p);
        if self.contains(p) {
            -d
        } else {
            d
        }
    }

    /// Edge lengths `|p_{i+1} − p_i|`.
    pub fn gaps(&self) -> Vec<f64> {
        let n = self.markers.len();
        (0..n)
            .map(|i| norm(sub(self.markers[(i + 1) % n], self.markers[i])))
            .collect()
    }

    /// Whether every gap lies in `[0.5, 2] × density`.
    pub fn spacing_ok(&self) -> bool {
        let d = self.arclength_density;
        self.gaps().iter().all(|&g| g >= 0.5 * d && g <= 2.0 * d)
    }

    /// Local insertion/removal so that every gap ends in `[0.5, 2] × density`.
    /// Inserted markers lie on the Catmull–Rom spline through the chain.
    pub fn resample(&self) -> Result<Self> {
        if self.spacing_ok() {
            return Ok(self.clone());
        }
        let d = self.arclength_density;
        let mut pts = self.markers.clone();
        // merge short gaps first
        loop {
            let n = pts.len();
            if n <= 3 {
                break;
            }
            let gaps: Vec<f64> = (0..n)
                .map(|i| norm(sub(pts[(i + 1) % n], pts[i])))
                .collect();
            let Some(i) = (0..n)
                .filter(|&i| gaps[i] < 0.5 * d)
                .min_by(|&a, &b| gaps[a].total_cmp(&gaps[b]))
            else {
                break;
            };
            // drop the endpoint whose removal leaves the shorter merged gap
            let prev = (i + n - 1) % n;
            let next = (i + 1) % n;
            let drop = if gaps[prev] <= gaps[next] { i } else { next };
            pts.remove(drop);
        }
        let n = pts.len();
        let mut out = Vec::with_capacity(n + 8);
        for i in 0..n {
            let p0 = pts[(i + n - 1) % n];
            let p1 = pts[i];
            let p2 = pts[(i + 1) % n];
            let p3 = pts[(i + 2) % n];
            out.push(p1);
            let gap = norm(sub(p2, p1));
            if gap > 2.0 * d {
                let m = (gap / d).round().max(2.0) as usize;
                for k in 1..m {
                    out.push(catmull_rom(p0, p1, p2, p3, k as f64 / m as f64));
                }
            }
        }
        Self::new(out, d)
    }

    /// Chain with `count` markers equally spaced in arclength along the polyline.
    pub fn resample_uniform(&self, count: usize) -> Result<Self> {
        let n = self.markers.len();
        let gaps = self.gaps();
        let total: f64 = gaps.iter().sum();
        let step = total / count as f64;
        let mut out = Vec::with_capacity(count);
        let mut edge = 0;
        let mut start = 0.0;
        for k in 0..count {
            let s = k as f64 * step;
            while edge < n - 1 && start + gaps[edge] < s {
                start += gaps[edge];
                edge += 1;
            }
            let a = self.markers[edge];
            let b = self.markers[(edge + 1) % n];
            let t = if gaps[edge] > 0.0 {
                ((s - start) / gaps[edge]).clamp(0.0, 1.0)
            } else {
                0.0
            };
            out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
        }
        Self::new(out, step)
    }
}

fn catmull_rom(p0: Point, p1: Point, p2: Point, p3: Point, t: f64) -> Point {
    let t2 = t * t;
    let t3 = t2 * t;
    let f = |a: f64, b: f64, c: f64, d: f64| {
        0.5 * (2.0 * b
            + (-a + c) * t
            + (2.0 * a - 5.0 * b + 4.0 * c - d) * t2
            + (-a + 3.0 * b - 3.0 * c + d) * t3)
    };
    [f(p0[0], p1[0], p2[0], p3[0]), f(p0[1], p1[1], p2[1], p3[1])]
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn disk_area_and_orientation() {
        let d = Patch::disk([0.0, 0.0], 1.0, 0.01).unwrap();
        assert!((d.area() - PI).abs() < 1e-3);
        assert!(d.signed_area() > 0.0);
        let mut rev = d.markers().to_vec();
        rev.reverse();
        assert!(Patch::new(rev, 0.01).is_err());
    }

    #[test]
    fn bowtie_rejected() {
        let m = vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]];
        assert!(!is_simple(&m));
        assert!(Patch::new(m, 0.5).is_err());
    }

    #[test]
    fn containment_and_distance() {
        let sq = Patch::rectangle([0.0, 0.0], 2.0, 2.0, 0.1).unwrap();
        assert!(sq.contains([0.5, 0.5]));
        assert!(!sq.contains([1.5, 0.0]));
        assert!((sq.signed_distance([1.5, 0.0]) - 0.5).abs() < 1e-12);
        assert!((sq.signed_distance([0.0, 0.2]) + 0.8).abs() < 1e-12);
        assert_eq!(sq.distance([0.1, 0.1]), 0.0);
        let c = sq.translated([0.3, -0.2]).centroid();
        assert!((c[0] - 0.3).abs() < 1e-12 && (c[1] + 0.2).abs() < 1e-12);
    }

    #[test]
    fn resample_restores_spacing_and_keeps_area() {
        let d = Patch::disk([0.0, 0.0], 1.0, 0.05).unwrap();
        // stretch into an ellipse without touching the marker count
        let stretched: Vec<Point> = d
            .markers()
            .iter()
            .map(|p| [2.5 * p[0], 0.4 * p[1]])
            .collect();
        let e = d.moved(stretched).unwrap();
        assert!(!e.spacing_ok());
        let r = e.resample().unwrap();
        assert!(
            r.spacing_ok(),
            "gaps {:?}",
            r.gaps()
                .iter()
                .fold((f64::MAX, 0.0f64), |a, &g| (a.0.min(g), a.1.max(g)))
        );
        assert!((r.area() - e.area()).abs() / e.area() < 2e-3);
    }

    #[test]
    fn uniform_resampling_count() {
        let sq = Patch::rectangle([0.0, 0.0], 1.0, 1.0, 0.1).unwrap();
        let u = sq.resample_uniform(64).unwrap();
        assert_eq!(u.len(), 64);
        let g = u.gaps();
        let (lo, hi) = g
            .iter()
            .fold((f64::MAX, 0.0f64), |a, &x| (a.0.min(x), a.1.max(x)));
        assert!(hi - lo < 1e-9, "{lo} {hi}");
    }
}
