use serde::{Deserialize, Serialize};

use super::{grad_l4, rho_weighted_l2};
use crate::error::{Error, Result};
use crate::fields::ops::{grad_l2_sq, grad_norm_inf, is_solenoidal};
use crate::fields::{ScalarField, VectorField};
use crate::solver::{material_derivative, step, SimConfig, SimState};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub times: Vec<f64>,
    /// `sup_{s≤t} ‖ρ₁(u₁−u₂)‖₂² + 2ν ∫₀ᵗ ‖∇(u₁−u₂)‖₂²`.
    pub e_rel: Vec<f64>,
    pub gamma: Vec<f64>,
    pub gamma_integral: Vec<f64>,
    /// `‖ρ₀ δu₀‖₂²`.
    pub initial_distance: f64,
    /// Smallest `C` with `e_rel ≤ C ‖ρ₀δu₀‖² exp(C ∫γ)` on every slice.
    pub c_fit: f64,
    pub bound: Vec<f64>,
    /// A run failed or produced non-finite values; series stop there.
    pub diverged: bool,
}

/// `γ = ‖∇u‖_∞ + s^{5/2}‖∇u̇‖₄² + s‖ρu̇‖₂² + s^{3/4}‖∇u̇‖₄`.
fn gamma(t: f64, rho: &ScalarField, u: &VectorField, udot: &VectorField) -> Result<f64> {
    let g4 = grad_l4(udot)?;
    let ru = rho_weighted_l2(rho, udot)?;
    Ok(grad_norm_inf(u)? + t.powf(2.5) * g4 * g4 + t * ru * ru + t.powf(0.75) * g4)
}

/// Smallest `C ≥ 0` with `C e^{C g} ≥ r`.
fn required_constant(r: f64, g: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let f = |c: f64| c * (c * g).exp() - r;
    let mut hi = r.max(1.0);
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// Runs `u₀ + perturbation` against `u₀` under `cfg` and compares them.
pub fn stability_experiment(
    cfg: &SimConfig,
    perturbation: &VectorField,
) -> Result<StabilityReport> {
    if *perturbation.grid() != cfg.grid {
        return Err(Error::GridMismatch);
    }
    if !is_solenoidal(perturbation)? {
        return Err(Error::InvalidParameter(
            "perturbation is not solenoidal".into(),
        ));
    }
    let u0 = cfg.initial_velocity.build(&cfg.grid)?;
    let mut a = SimState::with_velocity(cfg, u0.add(perturbation)?)?;
    let mut b = SimState::with_velocity(cfg, u0)?;
    let dt = cfg.dt;
    let initial_distance = rho_weighted_l2(&a.rho, perturbation)?.powi(2);

    let mut times = vec![0.0];
    let mut sup_d = initial_distance;
    let mut dissipation = 0.0;
    let mut e_rel = vec![initial_distance];
    let mut gammas = vec![grad_norm_inf(&b.u)?];
    let mut history: Vec<VectorField> = vec![b.u.clone()];
    let mut rhos: Vec<ScalarField> = vec![b.rho.clone()];
    let mut diverged = false;
    for _ in 0..cfg.steps() {
        let (na, nb) = match (step(&a, cfg), step(&b, cfg)) {
            (Ok(x), Ok(y)) if x.u.check_finite().is_ok() && y.u.check_finite().is_ok() => (x, y),
            _ => {
                diverged = true;
                break;
            }
        };
        a = na;
        b = nb;
        let d = a.u.sub(&b.u)?;
        sup_d = sup_d.max(rho_weighted_l2(&a.rho, &d)?.powi(2));
        // right-endpoint rule, matching the implicit viscous step
        dissipation += dt * grad_l2_sq(&d)?;
        times.push(b.t);
        e_rel.push(sup_d + 2.0 * cfg.nu * dissipation);
        history.push(b.u.clone());
        rhos.push(b.rho.clone());
        let k = history.len() - 1;
        if k >= 2 {
            // centred material derivative at the previous slice
            let udot = material_derivative(&history[k - 2], &history[k], &history[k - 1], dt)?;
            gammas.push(gamma(times[k - 1], &rhos[k - 1], &history[k - 1], &udot)?);
            history[k - 2] = VectorField::zeros(cfg.grid);
        }
    }
    let k = history.len() - 1;
    if k >= 1 {
        let udot = material_derivative(&history[k - 1], &history[k], &history[k], 0.5 * dt)?;
        gammas.push(gamma(times[k], &rhos[k], &history[k], &udot)?);
    }
    let mut gamma_integral = vec![0.0];
    for w in gammas.windows(2) {
        let last = *gamma_integral.last().expect("seeded");
        gamma_integral.push(last + 0.5 * dt * (w[0] + w[1]));
    }
    let c_fit = if initial_distance > 0.0 {
        e_rel
            .iter()
            .zip(&gamma_integral)
            .fold(0.0f64, |c, (&e, &g)| {
                c.max(required_constant(e / initial_distance, g))
            })
    } else {
        0.0
    };
    let bound = gamma_integral
        .iter()
        .map(|g| c_fit * initial_distance * (c_fit * g).exp())
        .collect();
    Ok(StabilityReport {
        times,
        e_rel,
        gamma: gammas,
        gamma_integral,
        initial_distance,
        c_fit,
        bound,
        diverged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn required_constant_inverts() {
        let c = required_constant(3.0, 0.7);
        assert!((c * (c * 0.7f64).exp() - 3.0).abs() < 1e-10);
        assert_eq!(required_constant(0.0, 1.0), 0.0);
    }
}
