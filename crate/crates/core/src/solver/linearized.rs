use super::config::SimConfig;
use super::state::SimState;
use super::step::{diffuse, momentum_rhs, preconditioner_density, project};
use crate::error::{Error, Result};
use crate::fields::ops::is_solenoidal;
use crate::fields::{ScalarField, VectorField};
use crate::transport::advect_density_with_flux;

/// Evolve `v` in the frozen background `(ρ, u)`:
/// `ρ ∂_t v + ρ (u·∇) v + ∇P_v = ν Δv`, `div v = 0`,
/// with exactly the splitting of the nonlinear step. The mass flux of each
/// background step is recomputed from `(ρⁿ, uⁿ)`, so `v₀ = u₀` reproduces the
/// background velocity and the solution map is linear up to solver tolerance.
pub fn solve_linearized(
    cfg: &SimConfig,
    background: &[SimState],
    v0: &VectorField,
) -> Result<Vec<VectorField>> {
    if background.is_empty() {
        return Err(Error::InvalidParameter("empty background".into()));
    }
    if v0.grid() != background[0].grid() {
        return Err(Error::GridMismatch);
    }
    if !is_solenoidal(v0)? {
        return Err(Error::InvalidParameter("v0 is not solenoidal".into()));
    }
    let rho_ref = preconditioner_density(cfg);
    let mut out = Vec::with_capacity(background.len());
    out.push(v0.clone());
    let mut v = v0.clone();
    let mut p = ScalarField::zeros(*v0.grid());
    for w in background.windows(2) {
        let (now, next) = (&w[0], &w[1]);
        let dt = next.t - now.t;
        let transport = cfg.advect && (cfg.patch.is_some() || now.u.max_magnitude() > 0.0);
        let flux = if transport {
            Some(advect_density_with_flux(&now.rho, &now.u, dt)?.flux)
        } else {
            None
        };
        let rhs = momentum_rhs(&now.rho, &v, flux.as_ref(), dt)?;
        let (vstar, _) = diffuse(&next.rho, &rhs, &v, dt * cfg.nu, cfg.diffusion_tol)?;
        let (vn, pn, _) = project(&next.rho, &vstar, dt, rho_ref, &p, cfg.pressure_tol)?;
        v = vn;
        p = pn;
        out.push(v.clone());
    }
    Ok(out)
}
