use std::f64::consts::PI;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{leray_project, Grid, Snapshot, VectorField};
use crate::patch::Patch;

/// Named initial-velocity families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum VelocitySpec {
    /// `u ≡ m`.
    Constant {
        m: [f64; 2],
    },
    /// `a (sin kx cos ky, −cos kx sin ky)` with `k = 2π/L`.
    TaylorGreen {
        amplitude: f64,
    },
    /// `∇⊥` of the stream function `a σ exp(−|x − c|²/σ²)`.
    GaussianVortex {
        center: [f64; 2],
        sigma: f64,
        amplitude: f64,
    },
    /// `∇⊥` of `a σ (x − c)_y/σ exp(−|x − c|²/σ²)`: a counter-rotating pair
    /// pushing along `+x`.
    Dipole {
        center: [f64; 2],
        sigma: f64,
        amplitude: f64,
    },
    /// Sum of localized wave packets at frequencies `k_0 2^j`, `j < shells`,
    /// each rescaled to L² norm `amplitude · decay^j`. Packet `j` has width
    /// `width · 2^{−j}` so all shells are rescaled copies of each other.
    Lacunary {
        center: [f64; 2],
        k0: f64,
        width: f64,
        shells: usize,
        amplitude: f64,
        decay: f64,
        direction: f64,
    },
    /// Dipole jets along angle `direction` centred at `center`, widths
    /// `width · 2^{−j}` for `j < shells`, each rescaled to L² norm
    /// `amplitude · decay^j`.
    JetStack {
        center: [f64; 2],
        direction: f64,
        width: f64,
        shells: usize,
        amplitude: f64,
        decay: f64,
    },
    /// Velocity components 1 and 2 of a snapshot file.
    Snapshot {
        path: PathBuf,
    },
    Sum {
        parts: Vec<VelocitySpec>,
    },
}

fn perp_grad(grid: Grid, psi_grad: impl Fn(f64, f64) -> [f64; 2]) -> Result<VectorField> {
    VectorField::from_fn(grid, |x, y| {
        let g = psi_grad(x, y);
        [-g[1], g[0]]
    })
}

/// One packet `∇⊥[exp(−|x−c|²/w²) cos(k e·(x−c))]`, unnormalized.
fn packet(grid: Grid, c: [f64; 2], k: f64, w: f64, dir: f64) -> Result<VectorField> {
    let (s, co) = dir.sin_cos();
    perp_grad(grid, |x, y| {
        let (dx, dy) = (grid.periodic_delta(c[0], x), grid.periodic_delta(c[1], y));
        let g = (-(dx * dx + dy * dy) / (w * w)).exp();
        let ph = k * (co * dx + s * dy);
        let (sp, cp) = ph.sin_cos();
        // ∂ψ = g (−2 d/w² cos − k e sin)
        [
            g * (-2.0 * dx / (w * w) * cp - k * co * sp),
            g * (-2.0 * dy / (w * w) * cp - k * s * sp),
        ]
    })
}

/// `∇⊥[−(n⊥·d) exp(−|d|²/s²)]` with `d = x − c`, `n = (cos θ, sin θ)`:
/// unit-strength jet along `n` through `c`.
fn jet(grid: Grid, c: [f64; 2], s: f64, theta: f64) -> Result<VectorField> {
    let (sn, cs) = theta.sin_cos();
    let np = [-sn, cs];
    perp_grad(grid, |x, y| {
        let d = [grid.periodic_delta(c[0], x), grid.periodic_delta(c[1], y)];
        let e = (-(d[0] * d[0] + d[1] * d[1]) / (s * s)).exp();
        let q = np[0] * d[0] + np[1] * d[1];
        [
            -e * (np[0] - 2.0 * q * d[0] / (s * s)),
            -e * (np[1] - 2.0 * q * d[1] / (s * s)),
        ]
    })
}

impl VelocitySpec {
    /// Evaluate on `grid`; everything but constants is Leray-projected.
    pub fn build(&self, grid: &Grid) -> Result<VectorField> {
        let g = *grid;
        let v = match self {
            Self::Constant { m } => return Ok(VectorField::constant(g, *m)),
            Self::TaylorGreen { amplitude } => {
                let k = 2.0 * PI / g.box_length();
                let a = *amplitude;
                return VectorField::from_fn(g, |x, y| {
                    [
                        a * (k * x).sin() * (k * y).cos(),
                        -a * (k * x).cos() * (k * y).sin(),
                    ]
                });
            }
            Self::GaussianVortex {
                center,
                sigma,
                amplitude,
            } => {
                let (c, s, a) = (*center, *sigma, *amplitude);
                perp_grad(g, |x, y| {
                    let (dx, dy) = (g.periodic_delta(c[0], x), g.periodic_delta(c[1], y));
                    let e = (-(dx * dx + dy * dy) / (s * s)).exp();
                    [-2.0 * a * dx / s * e, -2.0 * a * dy / s * e]
                })?
            }
            Self::Dipole {
                center,
                sigma,
                amplitude,
            } => {
                let (c, s, a) = (*center, *sigma, *amplitude);
                perp_grad(g, |x, y| {
                    let (dx, dy) = (g.periodic_delta(c[0], x), g.periodic_delta(c[1], y));
                    let e = (-(dx * dx + dy * dy) / (s * s)).exp();
                    // ψ = −a y e  so that the pair drives fluid along +x on its axis
                    [
                        2.0 * a * dx * dy / (s * s) * e,
                        -a * e + 2.0 * a * dy * dy / (s * s) * e,
                    ]
                })?
            }
            Self::Lacunary {
                center,
                k0,
                width,
                shells,
                amplitude,
                decay,
                direction,
            } => {
                if *shells == 0 {
                    return Err(Error::InvalidParameter(
                        "lacunary data needs at least one shell".into(),
                    ));
                }
                let mut acc = VectorField::zeros(g);
                for j in 0..*shells {
                    let scale = 2f64.powi(j as i32);
                    let p =
                        leray_project(&packet(g, *center, k0 * scale, width / scale, *direction)?)?;
                    let norm = p.dot(&p)?.sqrt();
                    let target = amplitude * decay.powi(j as i32);
                    acc = acc.axpy(target / norm, &p)?;
                }
                return Ok(acc);
            }
            Self::JetStack {
                center,
                direction,
                width,
                shells,
                amplitude,
                decay,
            } => {
                if *shells == 0 || !(*width > 0.0) {
                    return Err(Error::InvalidParameter(
                        "jet stack needs a shell and a positive width".into(),
                    ));
                }
                let mut acc = VectorField::zeros(g);
                for j in 0..*shells {
                    let p =
                        leray_project(&jet(g, *center, width / 2f64.powi(j as i32), *direction)?)?;
                    let norm = p.dot(&p)?.sqrt();
                    acc = acc.axpy(amplitude * decay.powi(j as i32) / norm, &p)?;
                }
                return Ok(acc);
            }
            Self::Snapshot { path } => {
                let s = Snapshot::load(path)?;
                if s.grid != g {
                    return Err(Error::GridMismatch);
                }
                if s.components.len() < 3 {
                    return Err(Error::Format {
                        path: path.clone(),
                        message: "snapshot needs velocity components at positions 1 and 2".into(),
                    });
                }
                VectorField::new(g, s.components[1].clone(), s.components[2].clone())?
            }
            Self::Sum { parts } => {
                let mut acc = VectorField::zeros(g);
                for p in parts {
                    acc = acc.add(&p.build(grid)?)?;
                }
                return Ok(acc);
            }
        };
        leray_project(&v)
    }
}

/// Parameters of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub nu: f64,
    pub epsilon: f64,
    pub dt: f64,
    pub t_final: f64,
    pub grid: Grid,
    /// `None` runs with uniform density one.
    pub patch: Option<Patch>,
    pub initial_velocity: VelocitySpec,
    pub mollify_cells: f64,
    /// Transport of density, momentum and markers; off gives the unsteady
    /// Stokes problem with frozen density.
    pub advect: bool,
    pub pressure_tol: f64,
    pub diffusion_tol: f64,
}

impl SimConfig {
    pub fn new(grid: Grid, nu: f64, epsilon: f64, dt: f64, t_final: f64) -> Self {
        Self {
            nu,
            epsilon,
            dt,
            t_final,
            grid,
            patch: None,
            initial_velocity: VelocitySpec::Constant { m: [0.0, 0.0] },
            mollify_cells: 1.0,
            advect: true,
            pressure_tol: 1e-10,
            diffusion_tol: 1e-12,
        }
    }

    pub fn with_patch(mut self, patch: Patch) -> Self {
        self.patch = Some(patch);
        self
    }

    pub fn with_velocity(mut self, v: VelocitySpec) -> Self {
        self.initial_velocity = v;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return bad(format!("nu must be positive, got {}", self.nu));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return bad(format!("epsilon must lie in (0, 1], got {}", self.epsilon));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_final >= self.dt) {
            return bad(format!(
                "T = {} must be at least dt = {}",
                self.t_final, self.dt
            ));
        }
        if !(self.mollify_cells >= 0.0) {
            return bad(format!(
                "mollify_cells must be >= 0, got {}",
                self.mollify_cells
            ));
        }
        if !(self.pressure_tol > 0.0 && self.diffusion_tol > 0.0) {
            return bad("solver tolerances must be positive".into());
        }
        Ok(())
    }

    /// Number of steps of size `dt` covering `[0, T]`.
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt - 1e-9).ceil() as usize
    }
}
