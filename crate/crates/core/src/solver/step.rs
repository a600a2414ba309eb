//! One step of the split scheme:
//!
//! 1. density: conservative MUSCL transport, which also yields the mass flux `F`;
//! 2. momentum: `R = ρⁿuⁿ − dt Div(F ⊗ ũⁿ)` with `ũ` the face interpolant of
//!    `uⁿ`, then `ρⁿ⁺¹u* − dt ν Δu* = R` by PCG;
//! 3. projection: `div((1/ρⁿ⁺¹)∇P) = div u*/dt`, `uⁿ⁺¹ = u* − dt ∇P/ρⁿ⁺¹`;
//! 4. markers by the midpoint rule with the velocity linear in time.
//!
//! Using the same mass flux for density and momentum keeps `u ≡ M` an exact
//! discrete solution and `∫ρu` conserved to round-off.

use super::config::SimConfig;
use super::linalg::{diffusion_solve, pressure_spectral, PressureOperator, SolveStats};
use super::state::{SimState, StepStats};
use crate::error::{Error, Result};
use crate::fields::interp::interpolate_vector_blend;
use crate::fields::spectral::{engine_for, C64};
use crate::fields::{ScalarField, VectorField};
use crate::patch::{Patch, Point};
use crate::transport::{advect_density_with_flux, face_interpolate, FaceField};

/// `ρⁿ v − dt Div(F ⊗ ṽ)`; without a flux only the first term.
pub(crate) fn momentum_rhs(
    rho: &ScalarField,
    v: &VectorField,
    flux: Option<&FaceField>,
    dt: f64,
) -> Result<VectorField> {
    let grid = *rho.grid();
    let mut r = v.weighted(rho)?;
    if let Some(f) = flux {
        let (at_x, at_y) = face_interpolate(v);
        let gx = FaceField {
            x: f.x.iter().zip(at_x.x()).map(|(a, b)| a * b).collect(),
            y: f.y.iter().zip(at_y.x()).map(|(a, b)| a * b).collect(),
        };
        let gy = FaceField {
            x: f.x.iter().zip(at_x.y()).map(|(a, b)| a * b).collect(),
            y: f.y.iter().zip(at_y.y()).map(|(a, b)| a * b).collect(),
        };
        let dx = gx.divergence(&grid);
        let dy = gy.divergence(&grid);
        r.x_mut()
            .iter_mut()
            .zip(&dx)
            .for_each(|(a, d)| *a -= dt * d);
        r.y_mut()
            .iter_mut()
            .zip(&dy)
            .for_each(|(a, d)| *a -= dt * d);
    }
    Ok(r)
}

/// Implicit diffusion with the momentum-restoring constant shift.
pub(crate) fn diffuse(
    rho_next: &ScalarField,
    rhs: &VectorField,
    guess: &VectorField,
    alpha: f64,
    tol: f64,
) -> Result<(VectorField, SolveStats)> {
    let (mut u, stats) = diffusion_solve(rho_next, alpha, rhs, guess, tol)?;
    // ∫Δu vanishes exactly, so ∫ρu* must equal ∫R
    let have = u.weighted(rho_next)?.integral();
    let want = rhs.integral();
    let mass = rho_next.integral();
    u = u.shift([(want[0] - have[0]) / mass, (want[1] - have[1]) / mass]);
    Ok((u, stats))
}

/// Variable-density projection of `u*`. Returns `(u, P)`.
pub(crate) fn project(
    rho_next: &ScalarField,
    ustar: &VectorField,
    dt: f64,
    rho_ref: f64,
    guess: &ScalarField,
    tol: f64,
) -> Result<(VectorField, ScalarField, SolveStats)> {
    let grid = *rho_next.grid();
    let n = grid.n();
    let e = engine_for(&grid);
    let (sx, sy) = e.forward_pair(ustar.x(), ustar.y());
    let mut rhs = vec![C64::new(0.0, 0.0); grid.len()];
    for j in 0..n {
        let ky = grid.derivative_wavenumber(j);
        for i in 0..n {
            let kx = grid.derivative_wavenumber(i);
            let k = j * n + i;
            rhs[k] = C64::new(0.0, 1.0) * (sx[k] * kx + sy[k] * ky) / dt;
        }
    }
    let g = e.forward_real(guess.values());
    let (p_hat, stats) = pressure_spectral(rho_next, rho_ref, &rhs, Some(&g), tol)?;
    let op = PressureOperator::new(rho_next, rho_ref);
    let grad = op.packed_gradient(&p_hat);
    let r = rho_next.values();
    let (x, y) = ustar
        .x()
        .iter()
        .zip(ustar.y())
        .zip(grad.iter().zip(r))
        .map(|((a, b), (gk, rk))| (a - dt * gk.re / rk, b - dt * gk.im / rk))
        .unzip();
    let u = VectorField::from_raw(grid, x, y);
    let p = ScalarField::from_raw(grid, e.inverse_real(p_hat));
    Ok((u, p, stats))
}

/// Midpoint rule for points in the velocity `(1 − θ) a + θ b`, `θ = s/dt`.
pub(crate) fn rk2_points(
    points: &[Point],
    a: &VectorField,
    b: &VectorField,
    dt: f64,
) -> Vec<Point> {
    points
        .iter()
        .map(|&p| {
            let v0 = interpolate_vector_blend(a, b, 0.0, p);
            let mid = [p[0] + 0.5 * dt * v0[0], p[1] + 0.5 * dt * v0[1]];
            let vm = interpolate_vector_blend(a, b, 0.5, mid);
            [p[0] + dt * vm[0], p[1] + dt * vm[1]]
        })
        .collect()
}

fn move_markers(patch: &Patch, a: &VectorField, b: &VectorField, dt: f64) -> Result<Patch> {
    let moved = patch.moved(rk2_points(patch.markers(), a, b, dt))?;
    if moved.spacing_ok() {
        Ok(moved)
    } else {
        moved.resample()
    }
}

/// Reference density of the Fourier preconditioner.
pub(crate) fn preconditioner_density(cfg: &SimConfig) -> f64 {
    if cfg.patch.is_some() {
        1.0 + 0.5 * cfg.epsilon
    } else {
        1.0
    }
}

fn advance(state: &SimState, cfg: &SimConfig, dt: f64) -> Result<SimState> {
    let transport = cfg.advect && (cfg.patch.is_some() || state.u.max_magnitude() > 0.0);
    let (rho_next, flux) = if transport {
        let s = advect_density_with_flux(&state.rho, &state.u, dt)?;
        (s.rho, Some(s.flux))
    } else {
        (state.rho.clone(), None)
    };
    let rhs = momentum_rhs(&state.rho, &state.u, flux.as_ref(), dt)?;
    let (ustar, dstats) = diffuse(&rho_next, &rhs, &state.u, dt * cfg.nu, cfg.diffusion_tol)?;
    let (u, p, pstats) = project(
        &rho_next,
        &ustar,
        dt,
        preconditioner_density(cfg),
        &state.p,
        cfg.pressure_tol,
    )?;
    let markers = match (&state.markers, cfg.advect) {
        (Some(m), true) => Some(move_markers(m, &state.u, &u, dt)?),
        (m, _) => m.clone(),
    };
    let ledger = state.ledger.advance(dt, &rho_next, &u)?;
    Ok(SimState {
        t: state.t + dt,
        step: state.step + 1,
        rho: rho_next,
        u,
        p,
        markers,
        ledger,
        stats: StepStats {
            pressure_iterations: pstats.iterations,
            diffusion_iterations: dstats.iterations,
            pressure_residual: pstats.residual,
            rejected: 0,
        },
    })
}

/// Advance by `cfg.dt`. A failed pressure solve is retried once as two half
/// steps; a second failure is returned.
pub fn step(state: &SimState, cfg: &SimConfig) -> Result<SimState> {
    step_by(state, cfg, cfg.dt)
}

pub fn step_by(state: &SimState, cfg: &SimConfig, dt: f64) -> Result<SimState> {
    match advance(state, cfg, dt) {
        Ok(next) => Ok(next),
        Err(Error::NotConverged { .. }) => {
            let half = advance(state, cfg, 0.5 * dt)?;
            let mut out = advance(&half, cfg, 0.5 * dt)?;
            out.stats.rejected = 1;
            Ok(out)
        }
        Err(e) => Err(e),
    }
}

/// Run to `cfg.t_final`, calling `observe` on every state including the first.
pub fn run(cfg: &SimConfig, mut observe: impl FnMut(&SimState) -> Result<()>) -> Result<SimState> {
    let mut state = SimState::initial(cfg)?;
    observe(&state)?;
    for _ in 0..cfg.steps() {
        state = step(&state, cfg)?;
        observe(&state)?;
    }
    Ok(state)
}
