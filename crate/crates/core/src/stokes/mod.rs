//! Two-dimensional stationary Stokeslet, direct convolution against compact
//! sources and far-field decay fits.
//!
//! The kernel pair is `q(x) = x / (2π|x|²)` and
//! `W(x) = −(1/4π)(log(1/|x|) Id + x⊗x/|x|²)`. Away from the source these
//! satisfy `ΔW + ∇q = 0`, so `(w, Q)` below solve `Δw + ∇Q = 0` off the
//! support and `(w, −Q)` solves `−∇Q + Δw = f`.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fields::{Mask, VectorField};
use crate::patch::Point;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StokesletEval {
    pub point: Point,
    pub w: [[f64; 2]; 2],
    pub q: [f64; 2],
}

pub fn stokeslet(x: Point) -> Result<StokesletEval> {
    let r2 = x[0] * x[0] + x[1] * x[1];
    if !(r2 > 0.0) || !r2.is_finite() {
        return Err(Error::InvalidParameter(
            "stokeslet is singular at the origin".into(),
        ));
    }
    let l = -0.5 * r2.ln();
    let c = -1.0 / (4.0 * PI);
    let w = [
        [c * (l + x[0] * x[0] / r2), c * x[0] * x[1] / r2],
        [c * x[0] * x[1] / r2, c * (l + x[1] * x[1] / r2)],
    ];
    let q = [x[0] / (2.0 * PI * r2), x[1] / (2.0 * PI * r2)];
    Ok(StokesletEval { point: x, w, q })
}

/// Point force `force` located at `at`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointForce {
    pub at: Point,
    pub force: [f64; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct Response {
    pub w: Vec<[f64; 2]>,
    pub q: Vec<f64>,
    /// `∫|y||f(y)| dy` about the source centroid of `|f|`.
    pub first_moment: f64,
}

/// `w(x) = Σ W(x − y) F`, `Q(x) = Σ q(x − y)·F` over point forces.
pub fn convolve_points(sources: &[PointForce], eval: &[Point]) -> Result<Response> {
    let out: Vec<([f64; 2], f64)> = eval
        .par_iter()
        .map(|&x| {
            let mut w = [0.0; 2];
            let mut q = 0.0;
            for s in sources {
                let k = stokeslet([x[0] - s.at[0], x[1] - s.at[1]])?;
                w[0] += k.w[0][0] * s.force[0] + k.w[0][1] * s.force[1];
                w[1] += k.w[1][0] * s.force[0] + k.w[1][1] * s.force[1];
                q += k.q[0] * s.force[0] + k.q[1] * s.force[1];
            }
            Ok((w, q))
        })
        .collect::<Result<_>>()?;
    let mass: f64 = sources.iter().map(|s| s.force[0].hypot(s.force[1])).sum();
    let centre = if mass > 0.0 {
        let c = sources.iter().fold([0.0; 2], |c, s| {
            let m = s.force[0].hypot(s.force[1]);
            [c[0] + m * s.at[0], c[1] + m * s.at[1]]
        });
        [c[0] / mass, c[1] / mass]
    } else {
        [0.0; 2]
    };
    let first_moment = sources
        .iter()
        .map(|s| (s.at[0] - centre[0]).hypot(s.at[1] - centre[1]) * s.force[0].hypot(s.force[1]))
        .sum();
    let (w, q) = out.into_iter().unzip();
    Ok(Response { w, q, first_moment })
}

/// Cell-centred point forces `f(y) h²` on the cells of `support`.
pub fn grid_sources(f: &VectorField, support: &Mask) -> Result<Vec<PointForce>> {
    if f.grid() != support.grid() {
        return Err(Error::GridMismatch);
    }
    let g = *f.grid();
    let a = g.cell_area();
    Ok((0..g.len())
        .filter(|&k| support.cells()[k])
        .map(|k| {
            let v = f.at(k);
            PointForce {
                at: g.point(k),
                force: [v[0] * a, v[1] * a],
            }
        })
        .collect())
}

/// `a(x) (dx, dy)` sampled at the cells of the disk `|x| ≤ radius` of an
/// `n × n` grid over `[−2·radius, 2·radius)²`, with `a = exp(−|x|²/w²)` for a
/// monopole and `a = ∂ₓ exp(−|x|²/w²)` for a dipole. The dipole has its
/// residual net force removed cell by cell so it is mean-free to round-off.
pub fn gaussian_disk_source(
    dipole: bool,
    width: f64,
    radius: f64,
    direction: [f64; 2],
    n: usize,
) -> Result<Vec<PointForce>> {
    if !(width > 0.0 && radius > 0.0) {
        return Err(Error::InvalidParameter(
            "source width and radius must be positive".into(),
        ));
    }
    let g = crate::fields::Grid::new(n, 4.0 * radius)?;
    let w2 = width * width;
    let f = VectorField::from_fn(g, |x, y| {
        let e = (-(x * x + y * y) / w2).exp();
        let a = if dipole { -2.0 * x / w2 * e } else { e };
        [a * direction[0], a * direction[1]]
    })?;
    let mask = Mask::from_fn(g, |x, y| x * x + y * y <= radius * radius);
    let mut src = grid_sources(&f, &mask)?;
    if dipole {
        let (net, _) = net_force(&src);
        let k = src.len() as f64;
        for p in &mut src {
            p.force[0] -= net[0] / k;
            p.force[1] -= net[1] / k;
        }
    }
    Ok(src)
}

fn net_force(sources: &[PointForce]) -> ([f64; 2], f64) {
    sources.iter().fold(([0.0; 2], 0.0), |(s, m), p| {
        (
            [s[0] + p.force[0], s[1] + p.force[1]],
            m + p.force[0].hypot(p.force[1]),
        )
    })
}

/// Direct quadrature of the Stokeslet against `f` restricted to `support`.
/// Rejects sources whose net force exceeds `1e-8` of `∫|f|`.
pub fn convolve_source(f: &VectorField, support: &Mask, eval: &[Point]) -> Result<Response> {
    let sources = grid_sources(f, support)?;
    let (net, total) = net_force(&sources);
    if !(total > 0.0) {
        return Err(Error::InvalidParameter(
            "source vanishes on its support".into(),
        ));
    }
    if net[0].hypot(net[1]) > 1e-8 * total {
        return Err(Error::InvalidParameter(format!(
            "source is not mean-free: net force ({:e}, {:e})",
            net[0], net[1]
        )));
    }
    convolve_points(&sources, eval)
}

/// `Δw + ∇Q` at `x` by centred differences with step `h`.
pub fn stokes_residual(sources: &[PointForce], x: Point, h: f64) -> Result<([f64; 2], f64)> {
    let pts = [
        x,
        [x[0] + h, x[1]],
        [x[0] - h, x[1]],
        [x[0], x[1] + h],
        [x[0], x[1] - h],
    ];
    let r = convolve_points(sources, &pts)?;
    let lap =
        |c: usize| (r.w[1][c] + r.w[2][c] + r.w[3][c] + r.w[4][c] - 4.0 * r.w[0][c]) / (h * h);
    let gq = [(r.q[1] - r.q[2]) / (2.0 * h), (r.q[3] - r.q[4]) / (2.0 * h)];
    let div = (r.w[1][0] - r.w[2][0] + r.w[3][1] - r.w[4][1]) / (2.0 * h);
    Ok(([lap(0) + gq[0], lap(1) + gq[1]], div))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FarfieldSample {
    pub r: f64,
    pub max_abs_w: f64,
    pub max_abs_q: f64,
}

/// Angle maxima of `|w|` and `|Q|` on circles of the given radii about `centre`.
pub fn farfield_profile(
    sources: &[PointForce],
    centre: Point,
    radii: &[f64],
    angles: usize,
) -> Result<Vec<FarfieldSample>> {
    radii
        .iter()
        .map(|&r| {
            let pts: Vec<Point> = (0..angles)
                .map(|k| {
                    let th = 2.0 * PI * (k as f64 + 0.5) / angles as f64;
                    [centre[0] + r * th.cos(), centre[1] + r * th.sin()]
                })
                .collect();
            let resp = convolve_points(sources, &pts)?;
            Ok(FarfieldSample {
                r,
                max_abs_w: resp.w.iter().fold(0.0, |m, w| m.max(w[0].hypot(w[1]))),
                max_abs_q: resp.q.iter().fold(0.0, |m, q| m.max(q.abs())),
            })
        })
        .collect()
}

fn ls_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// Least-squares slopes of `log max|w|` and `log max|Q|` against `log r`.
pub fn farfield_slopes(profile: &[FarfieldSample], support_radius: f64) -> Result<(f64, f64)> {
    if profile.len() < 6 {
        return Err(Error::InvalidParameter(format!(
            "need at least 6 radii, got {}",
            profile.len()
        )));
    }
    let (rmin, rmax) = profile.iter().fold((f64::INFINITY, 0.0f64), |(a, b), s| {
        (a.min(s.r), b.max(s.r))
    });
    if (rmax / rmin).log10() < 1.5 {
        return Err(Error::InvalidParameter(
            "radii must span at least 1.5 decades".into(),
        ));
    }
    if rmin < 3.0 * support_radius {
        return Err(Error::InvalidParameter(
            "radii must be at least 3x the support radius".into(),
        ));
    }
    if profile
        .iter()
        .any(|s| !(s.max_abs_w > 0.0) || !(s.max_abs_q > 0.0))
    {
        return Err(Error::InvalidParameter(
            "degenerate far-field response".into(),
        ));
    }
    let lr: Vec<f64> = profile.iter().map(|s| s.r.ln()).collect();
    let lw: Vec<f64> = profile.iter().map(|s| s.max_abs_w.ln()).collect();
    let lq: Vec<f64> = profile.iter().map(|s| s.max_abs_q.ln()).collect();
    Ok((ls_slope(&lr, &lw), ls_slope(&lr, &lq)))
}

/// Geometric radii `r0 · ratio^k`.
pub fn geometric_radii(r0: f64, r1: f64, count: usize) -> Vec<f64> {
    let ratio = (r1 / r0).powf(1.0 / (count.max(2) - 1) as f64);
    (0..count).map(|k| r0 * ratio.powi(k as i32)).collect()
}

/// CSV `r,max_abs_w,max_abs_Q`.
pub fn write_profile_csv(path: &Path, profile: &[FarfieldSample]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "r,max_abs_w,max_abs_Q")?;
    for s in profile {
        writeln!(w, "{:.17e},{:.17e},{:.17e}", s.r, s.max_abs_w, s.max_abs_q)?;
    }
    w.flush()?;
    Ok(())
}
