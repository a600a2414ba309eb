//! Conservative finite-volume transport of the density.
//!
//! Nodal velocities are carried to cell faces by a spectral half-cell shift,
//! after a projection with the symbols `(2/h) sin(k h/2)` that makes the face
//! field exactly divergence-free for the finite-volume divergence. Face
//! densities come from a MUSCL reconstruction with the monotonised-central
//! limiter, and the step is the two-stage SSP Runge–Kutta scheme.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::spectral::{engine_for, C64};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::patch::{signed_distance_field, Patch};

pub const CFL: f64 = 0.5;

/// Normal velocities on cell faces: `x[j n + i]` at `(i + 1/2, j)`,
/// `y[j n + i]` at `(i, j + 1/2)`.
#[derive(Clone, Debug)]
pub struct FaceField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl FaceField {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            x: vec![0.0; grid.len()],
            y: vec![0.0; grid.len()],
        }
    }

    /// Finite-volume divergence at cell centres.
    pub fn divergence(&self, grid: &Grid) -> Vec<f64> {
        let n = grid.n();
        let h = grid.spacing();
        (0..grid.len())
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let w = j * n + (i + n - 1) % n;
                let s = ((j + n - 1) % n) * n + i;
                (self.x[k] - self.x[w] + self.y[k] - self.y[s]) / h
            })
            .collect()
    }

    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.x
            .iter_mut()
            .zip(&other.x)
            .for_each(|(p, q)| *p += a * q);
        self.y
            .iter_mut()
            .zip(&other.y)
            .for_each(|(p, q)| *p += a * q);
    }

    pub fn scale(&mut self, a: f64) {
        self.x
            .iter_mut()
            .chain(self.y.iter_mut())
            .for_each(|p| *p *= a);
    }
}

/// Face velocities from nodal ones; their finite-volume divergence vanishes
/// to round-off.
pub fn face_velocities(u: &VectorField) -> FaceField {
    let grid = *u.grid();
    let n = grid.n();
    let h = grid.spacing();
    let e = engine_for(&grid);
    let (mut ax, mut ay) = e.forward_pair(u.x(), u.y());
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if grid.is_nyquist(i) || grid.is_nyquist(j) {
                ax[k] = C64::new(0.0, 0.0);
                ay[k] = C64::new(0.0, 0.0);
                continue;
            }
            let kx = grid.wavenumber(i);
            let ky = grid.wavenumber(j);
            let sx = 2.0 / h * (0.5 * kx * h).sin();
            let sy = 2.0 / h * (0.5 * ky * h).sin();
            let s2 = sx * sx + sy * sy;
            if s2 > 0.0 {
                let d = ax[k] * sx + ay[k] * sy;
                ax[k] -= d * (sx / s2);
                ay[k] -= d * (sy / s2);
            }
            ax[k] *= C64::from_polar(1.0, 0.5 * kx * h);
            ay[k] *= C64::from_polar(1.0, 0.5 * ky * h);
        }
    }
    let (x, y) = e.inverse_pair(&ax, &ay);
    FaceField { x, y }
}

/// Spectral half-cell shift of a nodal vector to the faces normal to `x`
/// (first result) and `y` (second), componentwise and without projection.
pub fn face_interpolate(u: &VectorField) -> (VectorField, VectorField) {
    let grid = *u.grid();
    let n = grid.n();
    let h = grid.spacing();
    let e = engine_for(&grid);
    let (ax, ay) = e.forward_pair(u.x(), u.y());
    let shift = |along_x: bool| {
        let mut bx = ax.clone();
        let mut by = ay.clone();
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                let idx = if along_x { i } else { j };
                let ph = if grid.is_nyquist(idx) {
                    // real half-shift of the Nyquist cosine
                    C64::new((0.5 * grid.wavenumber(idx) * h).cos(), 0.0)
                } else {
                    C64::from_polar(1.0, 0.5 * grid.wavenumber(idx) * h)
                };
                bx[k] *= ph;
                by[k] *= ph;
            }
        }
        let (x, y) = e.inverse_pair(&bx, &by);
        VectorField::from_raw(grid, x, y)
    };
    (shift(true), shift(false))
}

#[inline]
fn mc_slope(a: f64, b: f64) -> f64 {
    if a * b <= 0.0 {
        0.0
    } else {
        let m = (2.0 * a.abs()).min(2.0 * b.abs()).min(0.5 * (a + b).abs());
        m.copysign(a)
    }
}

/// Upwind MUSCL mass fluxes `ρ_face · U` on all faces.
pub fn muscl_fluxes(rho: &[f64], faces: &FaceField, grid: &Grid) -> FaceField {
    let n = grid.n();
    let at = |i: usize, j: usize| rho[(j % n) * n + (i % n)];
    let mut fx = vec![0.0; grid.len()];
    let mut fy = vec![0.0; grid.len()];
    fx.par_chunks_mut(n)
        .zip(fy.par_chunks_mut(n))
        .enumerate()
        .for_each(|(j, (rx, ry))| {
            let jn = j + n;
            for i in 0..n {
                let ii = i + n;
                let k = j * n + i;
                let c = at(ii, jn);
                // x-face between (i, j) and (i + 1, j)
                let ux = faces.x[k];
                rx[i] = if ux >= 0.0 {
                    let s = mc_slope(c - at(ii - 1, jn), at(ii + 1, jn) - c);
                    ux * (c + 0.5 * s)
                } else {
                    let r = at(ii + 1, jn);
                    let s = mc_slope(r - c, at(ii + 2, jn) - r);
                    ux * (r - 0.5 * s)
                };
                let uy = faces.y[k];
                ry[i] = if uy >= 0.0 {
                    let s = mc_slope(c - at(ii, jn - 1), at(ii, jn + 1) - c);
                    uy * (c + 0.5 * s)
                } else {
                    let r = at(ii, jn + 1);
                    let s = mc_slope(r - c, at(ii, jn + 2) - r);
                    uy * (r - 0.5 * s)
                };
            }
        });
    FaceField { x: fx, y: fy }
}

/// Largest admissible step `CFL · h / max|u|`.
pub fn admissible_dt(u: &VectorField) -> f64 {
    let m = u.max_magnitude();
    if m == 0.0 {
        f64::INFINITY
    } else {
        CFL * u.grid().spacing() / m
    }
}

/// Result of one transport step: the new density and the time-averaged mass
/// flux whose divergence produced it.
pub struct TransportStep {
    pub rho: ScalarField,
    pub flux: FaceField,
    pub faces: FaceField,
}

/// One SSP-RK2 step of `∂_t ρ + div(ρ u) = 0` with frozen face velocities.
pub fn advect_density_with_flux(
    rho: &ScalarField,
    u: &VectorField,
    dt: f64,
) -> Result<TransportStep> {
    let grid = *rho.grid();
    if *u.grid() != grid {
        return Err(Error::GridMismatch);
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let admissible = admissible_dt(u);
    if dt > admissible * (1.0 + 1e-12) {
        return Err(Error::Cfl { dt, admissible });
    }
    let faces = face_velocities(u);
    let f0 = muscl_fluxes(rho.values(), &faces, &grid);
    let d0 = f0.divergence(&grid);
    let stage: Vec<f64> = rho
        .values()
        .iter()
        .zip(&d0)
        .map(|(r, d)| r - dt * d)
        .collect();
    let mut flux = muscl_fluxes(&stage, &faces, &grid);
    flux.axpy(1.0, &f0);
    flux.scale(0.5);
    let div = flux.divergence(&grid);
    let next: Vec<f64> = rho
        .values()
        .iter()
        .zip(&div)
        .map(|(r, d)| r - dt * d)
        .collect();
    let rho = ScalarField::new(grid, next)?;
    Ok(TransportStep { rho, flux, faces })
}

/// Conservative density update; `u = 0` leaves `ρ` bit-identical.
pub fn advect_density(rho: &ScalarField, u: &VectorField, dt: f64) -> Result<ScalarField> {
    Ok(advect_density_with_flux(rho, u, dt)?.rho)
}

/// Support monitor against a fixed reference patch.
pub struct SupportProbe {
    reference: Patch,
    distance: ScalarField,
}

impl SupportProbe {
    pub fn new(reference: &Patch, grid: &Grid) -> Self {
        Self {
            reference: reference.clone(),
            distance: signed_distance_field(reference, grid),
        }
    }

    /// Largest distance to the reference patch over `{ρ > threshold}`. Cells
    /// on the edge of the set also contribute the point where `ρ` crosses the
    /// threshold, located by linear interpolation towards each outside
    /// neighbour.
    pub fn excess(&self, rho: &ScalarField, threshold: f64) -> Result<f64> {
        if rho.grid() != self.distance.grid() {
            return Err(Error::GridMismatch);
        }
        let g = *rho.grid();
        let n = g.n();
        let h = g.spacing();
        let r = rho.values();
        let d = self.distance.values();
        let mut best = 0.0f64;
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                if r[k] <= threshold {
                    continue;
                }
                best = best.max(d[k]);
                let p = g.point(k);
                for (di, dj) in [(1isize, 0isize), (-1, 0), (0, 1), (0, -1)] {
                    let ni = (i as isize + di).rem_euclid(n as isize) as usize;
                    let nj = (j as isize + dj).rem_euclid(n as isize) as usize;
                    let m = nj * n + ni;
                    if r[m] > threshold {
                        continue;
                    }
                    let s = (r[k] - threshold) / (r[k] - r[m]);
                    let q = [p[0] + s * h * di as f64, p[1] + s * h * dj as f64];
                    // only cells that may beat the current best need the exact distance
                    if d[k] + h >= best {
                        best = best.max(self.reference.signed_distance(q));
                    }
                }
            }
        }
        Ok(best)
    }
}

pub fn support_excess(rho: &ScalarField, patch: &Patch, threshold: f64) -> Result<f64> {
    let max = rho.max();
    if max > 0.0 && !(threshold > 0.0 && threshold <= 0.5 * max) {
        return Err(Error::InvalidParameter(format!(
            "threshold {threshold} must lie in (0, max ρ / 2] = (0, {}]",
            0.5 * max
        )));
    }
    SupportProbe::new(patch, rho.grid()).excess(rho, threshold)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransportMonitor {
    pub mass: f64,
    pub lp_norms: Vec<(f64, f64)>,
    pub support_excess: f64,
}

impl TransportMonitor {
    /// Mass, `‖ρ‖_p` for `p ∈ {1, 2, 4}` and the support excess of `ρ − floor`
    /// above `threshold`.
    pub fn measure(
        rho: &ScalarField,
        floor: f64,
        probe: &SupportProbe,
        threshold: f64,
    ) -> Result<Self> {
        let lp_norms = [1.0, 2.0, 4.0]
            .into_iter()
            .map(|p| Ok((p, crate::fields::norm_lp(rho, p, None)?)))
            .collect::<Result<Vec<_>>>()?;
        let lifted = rho.map(|r| r - floor);
        Ok(Self {
            mass: rho.integral(),
            lp_norms,
            support_excess: probe.excess(&lifted, threshold)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn swirl(grid: Grid) -> VectorField {
        VectorField::from_fn(grid, |x, y| {
            let e = (-(x * x + y * y)).exp();
            [-y * e, x * e]
        })
        .unwrap()
    }

    #[test]
    fn face_field_is_discretely_solenoidal() {
        let g = Grid::new(64, 8.0).unwrap();
        let f = face_velocities(&swirl(g));
        let d = f.divergence(&g);
        assert!(d.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn zero_velocity_is_identity() {
        let g = Grid::new(32, 4.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 1.0 + (x * y).sin()).unwrap();
        let out = advect_density(&rho, &VectorField::zeros(g), 0.1).unwrap();
        assert_eq!(out.values(), rho.values());
    }

    #[test]
    fn cfl_violation_reports_admissible_step() {
        let g = Grid::new(32, 4.0).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let u = VectorField::constant(g, [2.0, 0.0]);
        match advect_density(&rho, &u, 1.0) {
            Err(Error::Cfl { admissible, .. }) => {
                assert!((admissible - 0.5 * 0.125 / 2.0).abs() < 1e-15)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mass_is_conserved_and_bounds_hold() {
        let g = Grid::new(64, 8.0).unwrap();
        let d = Patch::disk([0.5, 0.0], 1.5, 0.05).unwrap();
        let mut rho = crate::patch::rasterize(&d, &g, 1.0).unwrap();
        let u = swirl(g);
        let m0 = rho.integral();
        let dt = 0.9 * admissible_dt(&u);
        for _ in 0..50 {
            rho = advect_density(&rho, &u, dt).unwrap();
        }
        assert!((rho.integral() - m0).abs() / m0 < 1e-13);
        assert!(
            rho.min() > -1e-3 && rho.max() < 1.0 + 1e-3,
            "{} {}",
            rho.min(),
            rho.max()
        );
    }
}
