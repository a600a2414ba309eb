use serde::{Deserialize, Serialize};

use super::config::SimConfig;
use crate::error::{Error, Result};
use crate::fields::ops::{grad_l2_sq, grad_norm_inf, is_solenoidal};
use crate::fields::{Grid, ScalarField, VectorField};
use crate::patch::{rasterize, Patch};

/// Running energy bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ledger {
    pub t: f64,
    /// `½ ∫ ρ |u|²`.
    #[serde(rename = "E")]
    pub energy: f64,
    #[serde(skip)]
    pub energy0: f64,
    /// `∫₀ᵗ ‖∇u‖₂²` by the trapezoid rule.
    pub enstrophy_integral: f64,
    /// `∫₀ᵗ ‖∇u‖_∞` by the trapezoid rule.
    pub linf_grad_integral: f64,
    #[serde(skip)]
    pub grad_l2_sq: f64,
    #[serde(skip)]
    pub grad_inf: f64,
}

impl Ledger {
    pub fn start(rho: &ScalarField, u: &VectorField) -> Result<Self> {
        let energy = kinetic_energy(rho, u)?;
        Ok(Self {
            t: 0.0,
            energy,
            energy0: energy,
            enstrophy_integral: 0.0,
            linf_grad_integral: 0.0,
            grad_l2_sq: grad_l2_sq(u)?,
            grad_inf: grad_norm_inf(u)?,
        })
    }

    pub fn advance(&self, dt: f64, rho: &ScalarField, u: &VectorField) -> Result<Self> {
        let g2 = grad_l2_sq(u)?;
        let gi = grad_norm_inf(u)?;
        Ok(Self {
            t: self.t + dt,
            energy: kinetic_energy(rho, u)?,
            energy0: self.energy0,
            enstrophy_integral: self.enstrophy_integral + 0.5 * dt * (self.grad_l2_sq + g2),
            linf_grad_integral: self.linf_grad_integral + 0.5 * dt * (self.grad_inf + gi),
            grad_l2_sq: g2,
            grad_inf: gi,
        })
    }

    /// `E(t) + ν ∫‖∇u‖² − E(0)`; zero for the exact solution.
    pub fn energy_residual(&self, nu: f64) -> f64 {
        self.energy + nu * self.enstrophy_integral - self.energy0
    }

    /// Total distortion `exp ∫ ‖∇u‖_∞` so far.
    pub fn distortion(&self) -> f64 {
        self.linf_grad_integral.exp()
    }
}

pub fn kinetic_energy(rho: &ScalarField, u: &VectorField) -> Result<f64> {
    let w = u.weighted(rho)?;
    Ok(0.5 * w.dot(u)?)
}

/// Solver work of the last step.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    pub pressure_iterations: usize,
    pub diffusion_iterations: usize,
    pub pressure_residual: f64,
    pub rejected: usize,
}

#[derive(Clone, Debug)]
pub struct SimState {
    pub t: f64,
    pub step: usize,
    pub rho: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
    pub markers: Option<Patch>,
    pub ledger: Ledger,
    pub stats: StepStats,
}

/// `1_D` rasterised (with the configured ramp) plus `ε`, or `1` without a patch.
pub fn initial_density(cfg: &SimConfig) -> Result<ScalarField> {
    match &cfg.patch {
        Some(p) => Ok(rasterize(p, &cfg.grid, cfg.mollify_cells)?.map(|v| v + cfg.epsilon)),
        None => Ok(ScalarField::constant(cfg.grid, 1.0)),
    }
}

impl SimState {
    /// State at `t = 0` from the configured velocity family.
    pub fn initial(cfg: &SimConfig) -> Result<Self> {
        let u0 = cfg.initial_velocity.build(&cfg.grid)?;
        Self::with_velocity(cfg, u0)
    }

    pub fn with_velocity(cfg: &SimConfig, u0: VectorField) -> Result<Self> {
        cfg.validate()?;
        if *u0.grid() != cfg.grid {
            return Err(Error::GridMismatch);
        }
        u0.check_finite()?;
        if !is_solenoidal(&u0)? {
            return Err(Error::InvalidParameter(
                "initial velocity is not solenoidal".into(),
            ));
        }
        let rho = initial_density(cfg)?;
        let ledger = Ledger::start(&rho, &u0)?;
        Ok(Self {
            t: 0.0,
            step: 0,
            p: ScalarField::zeros(cfg.grid),
            markers: cfg.patch.clone(),
            rho,
            u: u0,
            ledger,
            stats: StepStats::default(),
        })
    }

    pub fn grid(&self) -> &Grid {
        self.rho.grid()
    }

    /// `∫ ρ u`.
    pub fn momentum(&self) -> Result<[f64; 2]> {
        Ok(self.u.weighted(&self.rho)?.integral())
    }

    pub fn mass(&self) -> f64 {
        self.rho.integral()
    }
}
