//! Run-level monitors: momentum, relaxation rate, Galilean frame, critical
//! L¹-in-time ledgers, per-slice diagnostics rows and the two-run stability
//! experiment.

mod recorder;
mod stability;

pub use recorder::{
    write_diagnostics_csv, DiagnosticsRow, Recorder, RecorderOptions, DIAGNOSTICS_HEADER,
};
pub use stability::{stability_experiment, StabilityReport};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::ops::{translate_scalar, translate_vector, velocity_gradient};
use crate::fields::{norm_lp, Grid, Mask, ScalarField, VectorField};
use crate::patch::{rasterize, Patch};
use crate::solver::{AFunctionalTracker, SimState, Slice};

/// `∫ρu / ∫ρ`.
pub fn momentum(rho: &ScalarField, u: &VectorField) -> Result<[f64; 2]> {
    let mass = rho.integral();
    if !(mass > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "total mass must be positive, got {mass:e}"
        )));
    }
    let m = u.weighted(rho)?.integral();
    Ok([m[0] / mass, m[1] / mass])
}

/// Cells whose centre lies inside the marker polygon.
pub fn patch_mask(patch: &Patch, grid: &Grid) -> Result<Mask> {
    let ind = rasterize(patch, grid, 0.0)?;
    Mask::new(*grid, ind.values().iter().map(|&v| v > 0.5).collect())
}

/// `‖u − M‖_{L²(region)}`, the whole box without a region.
pub fn u_minus_m_l2(u: &VectorField, m: [f64; 2], region: Option<&Mask>) -> Result<f64> {
    norm_lp(&u.shift([-m[0], -m[1]]), 2.0, region)
}

/// `|∇v|` with the Frobenius norm at every node, then its `L⁴` norm.
pub fn grad_l4(v: &VectorField) -> Result<f64> {
    let [a, b, c, d] = velocity_gradient(v)?;
    let f: Vec<f64> = (0..a.len())
        .map(|k| (a[k] * a[k] + b[k] * b[k] + c[k] * c[k] + d[k] * d[k]).sqrt())
        .collect();
    norm_lp(&ScalarField::new(*v.grid(), f)?, 4.0, None)
}

/// `‖ρ v‖₂`.
pub fn rho_weighted_l2(rho: &ScalarField, v: &VectorField) -> Result<f64> {
    let w = v.weighted(rho)?;
    Ok(w.dot(&w)?.sqrt())
}

/// `λ = ν / (C_D² L_∞²)`.
pub fn lambda_bound(nu: f64, poincare_constant: f64, l_infty: f64) -> f64 {
    nu / (poincare_constant * poincare_constant * l_infty * l_infty)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub lambda_fit: f64,
    pub window: (f64, f64),
    pub samples: usize,
    /// The series sat at the floor on the whole window; `lambda_fit` is 0.
    pub below_floor: bool,
}

/// Least-squares rate of `−log` of a positive series on `window`, after
/// clamping at `floor`.
pub fn decay_fit(series: &[(f64, f64)], window: (f64, f64), floor: f64) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(t, _)| *t >= window.0 - 1e-12 && *t <= window.1 + 1e-12)
        .map(|&(t, v)| (t, v.max(floor)))
        .collect();
    if pts.len() < 5 {
        return Err(Error::InvalidParameter(format!(
            "decay window holds {} samples, need 5",
            pts.len()
        )));
    }
    let below_floor = pts.iter().all(|&(_, v)| v <= floor);
    if below_floor {
        return Ok(DecayFit {
            lambda_fit: 0.0,
            window,
            samples: pts.len(),
            below_floor,
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1.ln() - ml)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt) * (p.0 - mt)).sum();
    Ok(DecayFit {
        lambda_fit: -sxy / sxx,
        window,
        samples: pts.len(),
        below_floor,
    })
}

/// Fields seen from the frame moving with velocity `M`.
#[derive(Clone, Debug)]
pub struct GalileanFrame {
    pub m_shift: [f64; 2],
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
}

impl GalileanFrame {
    /// `∫ ρ_M u_M`.
    pub fn momentum(&self) -> Result<[f64; 2]> {
        self.u.weighted(&self.rho).map(|w| w.integral())
    }

    /// `‖√ρ_M u_M‖₂²`.
    pub fn energy(&self) -> Result<f64> {
        self.u.weighted(&self.rho)?.dot(&self.u)
    }
}

/// `ρ_M(x) = ρ(t, x + Mt)`, `u_M(x) = u(t, x + Mt) − M` by spectral translation.
pub fn galilean_shift(state: &SimState, m: [f64; 2]) -> GalileanFrame {
    let shift = [m[0] * state.t, m[1] * state.t];
    GalileanFrame {
        m_shift: m,
        t: state.t,
        rho: translate_scalar(&state.rho, shift),
        u: translate_vector(&state.u, shift).shift([-m[0], -m[1]]),
    }
}

/// Running trapezoid integrals of `‖∇u‖_∞`, `‖ρu̇‖₂`, `t^{3/4}‖∇u̇‖₄` and
/// `√t‖∇u̇‖₂`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct L1Ledger {
    pub times: Vec<f64>,
    /// Cumulative integrals at each time.
    pub ledgers: Vec<[f64; 4]>,
    /// `(t, √t ‖∇u(t)‖₂)` over all slices.
    pub sqrt_t_grad: Vec<(f64, f64)>,
}

impl L1Ledger {
    pub fn totals(&self) -> [f64; 4] {
        self.ledgers.last().copied().unwrap_or([0.0; 4])
    }
}

/// Integrands of the three `u̇` ledgers at one slice.
pub(crate) fn udot_integrands(t: f64, rho: &ScalarField, udot: &VectorField) -> Result<[f64; 3]> {
    let g2 = crate::fields::ops::grad_l2_sq(udot)?.sqrt();
    Ok([
        rho_weighted_l2(rho, udot)?,
        t.powf(0.75) * grad_l4(udot)?,
        t.sqrt() * g2,
    ])
}

/// Ledgers over a uniformly sampled history. The `u̇` integrands start at the
/// second slice.
pub fn l1_ledgers(history: &[SimState]) -> Result<L1Ledger> {
    if history.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 slices, got {}",
            history.len()
        )));
    }
    let mut tracker = AFunctionalTracker::new(0.0)?;
    let mut out = L1Ledger {
        times: Vec::new(),
        ledgers: Vec::new(),
        sqrt_t_grad: Vec::new(),
    };
    let mut acc = [0.0; 3];
    let mut prev: Option<(f64, [f64; 3])> = None;
    for (k, s) in history.iter().enumerate() {
        out.sqrt_t_grad.push((
            s.t,
            s.t.sqrt() * crate::fields::ops::grad_l2_sq(&s.u)?.sqrt(),
        ));
        if let Some(ms) = tracker.push(Slice::of(s))? {
            let f = udot_integrands(ms.slice.t, &ms.slice.rho, &ms.udot)?;
            if let Some((t0, f0)) = prev {
                for c in 0..3 {
                    acc[c] += 0.5 * (ms.slice.t - t0) * (f0[c] + f[c]);
                }
            }
            prev = Some((ms.slice.t, f));
            out.times.push(ms.slice.t);
            out.ledgers.push([
                history[k - 1].ledger.linf_grad_integral,
                acc[0],
                acc[1],
                acc[2],
            ]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn constant_velocity_momentum() {
        let g = Grid::new(32, 4.0).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 1.0 + 0.5 * (x * y).cos()).unwrap();
        let m = momentum(&rho, &VectorField::constant(g, [0.3, -0.7])).unwrap();
        assert!((m[0] - 0.3).abs() < 1e-13 && (m[1] + 0.7).abs() < 1e-13);
    }

    #[test]
    fn odd_velocity_even_density_has_no_momentum() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let rho = ScalarField::from_fn(g, |x, y| 2.0 + (x * x + y * y).cos()).unwrap();
        let u = VectorField::from_fn(g, |x, y| [x.sin() * y.cos(), y.sin()]).unwrap();
        let m = momentum(&rho, &u).unwrap();
        assert!(m[0].abs() < 1e-12 && m[1].abs() < 1e-12);
    }

    #[test]
    fn vanishing_mass_rejected() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(momentum(&ScalarField::zeros(g), &VectorField::zeros(g)).is_err());
    }

    #[test]
    fn synthetic_exponential_rate() {
        let s: Vec<(f64, f64)> = (0..100)
            .map(|k| (k as f64 * 0.05, 3.0 * (-2.0 * k as f64 * 0.05).exp()))
            .collect();
        let f = decay_fit(&s, (0.5, 4.5), 1e-12).unwrap();
        assert!((f.lambda_fit - 2.0).abs() < 1e-6);
        assert!(decay_fit(&s, (0.5, 0.6), 1e-12).is_err());
        let flat: Vec<(f64, f64)> = s.iter().map(|&(t, _)| (t, 0.0)).collect();
        assert!(decay_fit(&flat, (0.5, 4.5), 1e-12).unwrap().below_floor);
    }
}
