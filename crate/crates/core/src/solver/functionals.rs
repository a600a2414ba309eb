use serde::{Deserialize, Serialize};

use super::state::SimState;
use crate::error::{Error, Result};
use crate::fields::ops::{advective_derivative, grad_l2_sq, gradient, hessian_l2_sq};
use crate::fields::{ScalarField, VectorField};

/// `u̇ = ∂_t u + (u·∇)u` at the middle of three slices spaced `dt` apart:
/// centred difference `(u_next − u_prev) / 2dt` plus the de-aliased spectral
/// advection of `u_mid`.
pub fn material_derivative(
    u_prev: &VectorField,
    u_next: &VectorField,
    u_mid: &VectorField,
    dt: f64,
) -> Result<VectorField> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let dudt = u_next.sub(u_prev)?.scale(0.5 / dt);
    dudt.add(&advective_derivative(u_mid, u_mid)?)
}

/// Suprema of the four time-weighted functionals, with their running values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AFunctionals {
    pub eta: f64,
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    /// `(t, A0, A1, A2, A3)` as running suprema at each evaluated slice.
    pub series: Vec<[f64; 5]>,
}

/// Squared norms entering the functionals at one interior slice.
#[derive(Clone, Copy, Debug)]
struct SliceNorms {
    t: f64,
    weighted_sq: f64,
    grad_sq: f64,
    hess_sq: f64,
    grad_p_sq: f64,
    udot_sq: f64,
    grad_udot_sq: f64,
    hess_udot_sq: f64,
}

/// The fields of one time slice needed downstream.
#[derive(Clone, Debug)]
pub struct Slice {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub p: ScalarField,
}

impl Slice {
    pub fn of(s: &SimState) -> Self {
        Self {
            t: s.t,
            rho: s.rho.clone(),
            u: s.u.clone(),
            p: s.p.clone(),
        }
    }
}

/// A slice together with its material derivative.
#[derive(Clone, Debug)]
pub struct MaterialSlice {
    pub slice: Slice,
    pub udot: VectorField,
}

/// Streaming evaluation of `A_0^η … A_3^η` for `v = u`.
/// Slice 0 only contributes to `A_0`; the material derivative, and with it
/// every weighted integral, starts at the second slice.
#[derive(Clone, Debug)]
pub struct AFunctionalTracker {
    eta: f64,
    dt: Option<f64>,
    prev: Option<Slice>,
    mid: Option<Slice>,
    enstrophy: f64,
    prev_grad: f64,
    integrals: [f64; 3],
    values: [f64; 4],
    last: Option<SliceNorms>,
    series: Vec<[f64; 5]>,
}

impl AFunctionalTracker {
    pub fn new(eta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&eta) {
            return Err(Error::InvalidParameter(format!(
                "eta must lie in [0, 1], got {eta}"
            )));
        }
        Ok(Self {
            eta,
            dt: None,
            prev: None,
            mid: None,
            enstrophy: 0.0,
            prev_grad: 0.0,
            integrals: [0.0; 3],
            values: [0.0; 4],
            last: None,
            series: Vec::new(),
        })
    }

    /// Current suprema `[A0, A1, A2, A3]`.
    pub fn values(&self) -> [f64; 4] {
        self.values
    }

    /// Feed the next slice. Once three slices are available, returns the
    /// middle one with its material derivative.
    pub fn push(&mut self, s: Slice) -> Result<Option<MaterialSlice>> {
        let Some(mid) = self.mid.take() else {
            self.values[0] = s.u.weighted(&s.rho)?.dot(&s.u)?;
            self.prev_grad = grad_l2_sq(&s.u)?;
            self.series.push([s.t, self.values[0], 0.0, 0.0, 0.0]);
            self.mid = Some(s);
            return Ok(None);
        };
        let prev = match self.prev.take() {
            Some(p) => p,
            None => {
                self.prev = Some(mid);
                self.mid = Some(s);
                return Ok(None);
            }
        };
        let dt = s.t - mid.t;
        let dt0 = *self.dt.get_or_insert(mid.t - prev.t);
        if ((dt - dt0).abs() > 1e-9 * dt0.max(1e-300))
            || ((mid.t - prev.t) - dt0).abs() > 1e-9 * dt0.max(1e-300)
        {
            return Err(Error::InvalidParameter(
                "history must be sampled at uniform dt".into(),
            ));
        }
        let udot = material_derivative(&prev.u, &s.u, &mid.u, dt)?;
        let gp = gradient(&mid.p)?;
        let ud_w = udot.weighted(&mid.rho)?;
        let x = SliceNorms {
            t: mid.t,
            weighted_sq: mid.u.weighted(&mid.rho)?.dot(&mid.u)?,
            grad_sq: grad_l2_sq(&mid.u)?,
            hess_sq: hessian_l2_sq(&mid.u)?,
            grad_p_sq: gp.dot(&gp)?,
            udot_sq: ud_w.dot(&udot)?,
            grad_udot_sq: grad_l2_sq(&udot)?,
            hess_udot_sq: hessian_l2_sq(&udot)?,
        };
        let eta = self.eta;
        self.enstrophy += 0.5 * dt * (self.prev_grad + x.grad_sq);
        self.prev_grad = x.grad_sq;
        let w = |p: f64, t: f64| t.powf(p - eta);
        let f1 = |x: &SliceNorms| w(1.0, x.t) * (x.hess_sq + x.grad_p_sq + x.udot_sq);
        let f2 = |x: &SliceNorms| w(2.0, x.t) * x.grad_udot_sq;
        let f3 = |x: &SliceNorms| w(3.0, x.t) * x.hess_udot_sq;
        if let Some(p) = &self.last {
            self.integrals[0] += 0.5 * dt * (f1(p) + f1(&x));
            self.integrals[1] += 0.5 * dt * (f2(p) + f2(&x));
            self.integrals[2] += 0.5 * dt * (f3(p) + f3(&x));
        }
        let v = &mut self.values;
        v[0] = v[0].max(x.weighted_sq + self.enstrophy);
        v[1] = v[1].max(w(1.0, x.t) * x.grad_sq + self.integrals[0]);
        v[2] = v[2].max(w(2.0, x.t) * (x.udot_sq + x.hess_sq) + self.integrals[1]);
        v[3] = v[3].max(w(3.0, x.t) * x.grad_udot_sq + self.integrals[2]);
        self.series.push([x.t, v[0], v[1], v[2], v[3]]);
        self.last = Some(x);
        self.prev = Some(mid.clone());
        self.mid = Some(s);
        Ok(Some(MaterialSlice { slice: mid, udot }))
    }

    pub fn finish(self) -> AFunctionals {
        let [a0, a1, a2, a3] = self.values;
        AFunctionals {
            eta: self.eta,
            a0,
            a1,
            a2,
            a3,
            series: self.series,
        }
    }
}

/// Discrete `A_0^η … A_3^η` for `v = u` along a uniformly sampled history.
pub fn a_functionals(history: &[SimState], eta: f64) -> Result<AFunctionals> {
    if history.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 slices, got {}",
            history.len()
        )));
    }
    let mut tracker = AFunctionalTracker::new(eta)?;
    for s in history {
        tracker.push(Slice::of(s))?;
    }
    Ok(tracker.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;

    #[test]
    fn translation_has_no_material_derivative() {
        let g = Grid::new(32, 4.0).unwrap();
        let m = VectorField::constant(g, [0.4, -1.0]);
        let d = material_derivative(&m, &m, &m, 0.1).unwrap();
        assert_eq!(d.max_magnitude(), 0.0);
    }

    #[test]
    fn steady_shear_is_zero() {
        let g = Grid::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let u = VectorField::from_fn(g, |_, y| [y.sin(), 0.0]).unwrap();
        let d = material_derivative(&u, &u, &u, 0.01).unwrap();
        assert!(d.max_magnitude() < 1e-13);
    }
}
