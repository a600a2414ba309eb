use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Decomposition;
use crate::error::{Error, Result};
use crate::fields::ops::matrix_norm2;
use crate::fields::spectral::{engine_for, C64};
use crate::fields::{Grid, VectorField};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Constants of `‖∇u_j(t)‖_∞ ≤ min{K⁺ t^{η/2−1}, K⁻ t^{−η/2−1}}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub k_plus: f64,
    pub k_minus: f64,
}

impl Envelope {
    /// Balancing time `A = (K⁻/K⁺)^{1/η}`.
    pub fn split_time(&self, eta: f64) -> f64 {
        (self.k_minus / self.k_plus).powf(1.0 / eta)
    }

    pub fn at(&self, t: f64, eta: f64) -> f64 {
        (self.k_plus * t.powf(eta / 2.0 - 1.0)).min(self.k_minus * t.powf(-eta / 2.0 - 1.0))
    }

    /// `∫₀^A K⁺ t^{η/2−1} dt + ∫_A^∞ K⁻ t^{−η/2−1} dt`.
    pub fn integral(&self, eta: f64) -> Result<f64> {
        if !(self.k_plus > 0.0 && self.k_minus > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "envelope constants must be positive, got ({:e}, {:e})",
                self.k_plus, self.k_minus
            )));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "eta must be positive, got {eta}"
            )));
        }
        let a = self.split_time(eta);
        Ok(2.0 / eta * (self.k_plus * a.powf(eta / 2.0) + self.k_minus * a.powf(-eta / 2.0)))
    }

    /// Largest `value / envelope(t)` over samples `(t, value)`, `t > 0`.
    pub fn worst_ratio(&self, samples: &[(f64, f64)], eta: f64) -> f64 {
        samples
            .iter()
            .filter(|s| s.0 > 0.0)
            .fold(0.0, |m, &(t, v)| m.max(v / self.at(t, eta)))
    }

    /// Tightest constants dominating every sample.
    pub fn fit(samples: &[(f64, f64)], eta: f64) -> Result<Self> {
        let pos: Vec<_> = samples.iter().filter(|s| s.0 > 0.0).collect();
        if pos.is_empty() {
            return Err(Error::InvalidParameter(
                "no samples at positive time".into(),
            ));
        }
        let k_plus = pos
            .iter()
            .fold(0.0f64, |m, &&(t, v)| m.max(v * t.powf(1.0 - eta / 2.0)));
        let k_minus = pos
            .iter()
            .fold(0.0f64, |m, &&(t, v)| m.max(v * t.powf(1.0 + eta / 2.0)));
        Ok(Self { k_plus, k_minus })
    }
}

/// Σ over atoms of the split time integral of each envelope.
pub fn dynamic_interpolation_bound(decomp: &Decomposition, envelopes: &[Envelope]) -> Result<f64> {
    if envelopes.len() != decomp.atoms.len() {
        return Err(Error::InvalidParameter(format!(
            "{} envelopes for {} atoms",
            envelopes.len(),
            decomp.atoms.len()
        )));
    }
    envelopes.iter().map(|e| e.integral(decomp.eta)).sum()
}

/// Cached spectrum for repeated evaluation of `‖∇e^{tΔ}v‖_∞`.
struct HeatGradient {
    grid: Grid,
    sx: Vec<C64>,
    sy: Vec<C64>,
    k_min: f64,
    k_max: f64,
}

impl HeatGradient {
    fn new(v: &VectorField) -> Result<Self> {
        v.check_finite()?;
        let grid = *v.grid();
        let n = grid.n();
        let (sx, sy) = engine_for(&grid).forward_pair(v.x(), v.y());
        let amp = |k: usize| sx[k].norm().max(sy[k].norm());
        let top = (0..grid.len()).map(amp).fold(0.0, f64::max);
        let (mut k_min, mut k_max) = (f64::INFINITY, 0.0f64);
        for j in 0..n {
            for i in 0..n {
                let k = (grid.wavenumber(i).powi(2) + grid.wavenumber(j).powi(2)).sqrt();
                if k > 0.0 && amp(j * n + i) > 1e-13 * top {
                    k_min = k_min.min(k);
                    k_max = k_max.max(k);
                }
            }
        }
        if !(k_max > 0.0) {
            return Err(Error::InvalidParameter(
                "field has no non-constant modes".into(),
            ));
        }
        Ok(Self {
            grid,
            sx,
            sy,
            k_min,
            k_max,
        })
    }

    fn sup(&self, t: f64) -> f64 {
        let g = &self.grid;
        let n = g.n();
        let mut a = vec![C64::new(0.0, 0.0); g.len()];
        let mut b = a.clone();
        let mut c = a.clone();
        let mut d = a.clone();
        for j in 0..n {
            let ky = g.derivative_wavenumber(j);
            let qy = g.wavenumber(j);
            for i in 0..n {
                let kx = g.derivative_wavenumber(i);
                let qx = g.wavenumber(i);
                let k = j * n + i;
                let f = (-(qx * qx + qy * qy) * t).exp();
                let (u, v) = (self.sx[k] * f, self.sy[k] * f);
                a[k] = I * kx * u;
                b[k] = I * ky * u;
                c[k] = I * kx * v;
                d[k] = I * ky * v;
            }
        }
        let e = engine_for(g);
        let (ux, uy) = e.inverse_pair(&a, &b);
        let (vx, vy) = e.inverse_pair(&c, &d);
        (0..g.len()).fold(0.0, |m, k| m.max(matrix_norm2(ux[k], uy[k], vx[k], vy[k])))
    }

    /// Log-spaced times spanning the active scales with a wide margin.
    fn log_times(&self, per_decade: usize) -> Vec<f64> {
        let lo = (1e-4 / (self.k_max * self.k_max)).log10();
        let hi = (40.0 / (self.k_min * self.k_min)).log10();
        let count = ((hi - lo) * per_decade as f64).ceil() as usize + 1;
        (0..count)
            .map(|i| 10f64.powf(lo + (hi - lo) * i as f64 / (count - 1) as f64))
            .collect()
    }
}

/// `‖∇e^{tΔ}v‖_∞`.
pub fn heat_gradient_sup(v: &VectorField, t: f64) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time must be >= 0, got {t}"
        )));
    }
    Ok(HeatGradient::new(v)?.sup(t))
}

/// Maximise `w(t) f(t)` by a log-grid scan refined with golden-section search.
fn log_sup(h: &HeatGradient, times: &[f64], values: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let (best, _) =
        times
            .iter()
            .zip(values)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, (&t, &v))| {
                if w(t) * v > acc.1 {
                    (i, w(t) * v)
                } else {
                    acc
                }
            });
    let lo = times[best.saturating_sub(1)].ln();
    let hi = times[(best + 1).min(times.len() - 1)].ln();
    let obj = |s: f64| w(s.exp()) * h.sup(s.exp());
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut c = b - phi * (b - a);
    let mut d = a + phi * (b - a);
    let (mut fc, mut fd) = (obj(c), obj(d));
    for _ in 0..40 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = obj(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = obj(d);
        }
    }
    fc.max(fd).max(w(times[best]) * values[best])
}

/// Envelope constants of the heat flow of `v`, as suprema of
/// `t^{1∓η/2} ‖∇e^{tΔ}v‖_∞` over all relevant times.
pub fn heat_envelope(v: &VectorField, eta: f64) -> Result<Envelope> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0, 1), got {eta}"
        )));
    }
    let h = HeatGradient::new(v)?;
    let times = h.log_times(24);
    let values: Vec<f64> = times.par_iter().map(|&t| h.sup(t)).collect();
    let k_plus = log_sup(&h, &times, &values, |t| t.powf(1.0 - eta / 2.0));
    let k_minus = log_sup(&h, &times, &values, |t| t.powf(1.0 + eta / 2.0));
    Ok(Envelope { k_plus, k_minus })
}

/// `∫_a^b ‖∇e^{tΔ}v‖_∞ dt` by the trapezoid rule in `ln t`; `a = 0` adds
/// `t₀ ‖∇v‖_∞` for the sliver below the first node.
pub fn heat_gradient_integral(v: &VectorField, a: f64, b: f64, per_decade: usize) -> Result<f64> {
    if !(a >= 0.0 && b > a) || per_decade < 2 {
        return Err(Error::InvalidParameter(format!(
            "bad integration range [{a}, {b}]"
        )));
    }
    let h = HeatGradient::new(v)?;
    let start = if a > 0.0 {
        a
    } else {
        (1e-6 / (h.k_max * h.k_max)).min(b * 1e-3)
    };
    let (lo, hi) = (start.ln(), b.ln());
    let count = (((hi - lo) / std::f64::consts::LN_10) * per_decade as f64)
        .ceil()
        .max(2.0) as usize
        + 1;
    let ts: Vec<f64> = (0..count)
        .map(|i| (lo + (hi - lo) * i as f64 / (count - 1) as f64).exp())
        .collect();
    let f: Vec<f64> = ts.par_iter().map(|&t| h.sup(t) * t).collect();
    let ds = (hi - lo) / (count - 1) as f64;
    let mut acc = 0.5 * ds * (f[0] + f[count - 1]) + ds * f[1..count - 1].iter().sum::<f64>();
    if a == 0.0 {
        acc += start * h.sup(0.0);
    }
    Ok(acc)
}

/// `sup_t t ‖∇e^{tΔ}v‖_∞ / ‖v‖₂`, the constant of the L²-only decay bound.
pub fn l2_critical_constant(v: &VectorField) -> Result<f64> {
    let h = HeatGradient::new(v)?;
    let times = h.log_times(24);
    let values: Vec<f64> = times.par_iter().map(|&t| h.sup(t)).collect();
    let norm = v.dot(v)?.sqrt();
    Ok(log_sup(&h, &times, &values, |t| t) / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::besov::atomic_decompose;
    use std::f64::consts::PI;

    fn shear(g: Grid, k: f64) -> VectorField {
        VectorField::from_fn(g, |_, y| [(k * y).sin(), 0.0]).unwrap()
    }

    #[test]
    fn equal_constants_collapse() {
        let e = Envelope {
            k_plus: 3.0,
            k_minus: 3.0,
        };
        assert!((e.split_time(0.3) - 1.0).abs() < 1e-15);
        assert!((e.integral(0.3).unwrap() - 4.0 / 0.3 * 3.0).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_rejected() {
        assert!(Envelope {
            k_plus: 0.0,
            k_minus: 1.0
        }
        .integral(0.2)
        .is_err());
        assert!(Envelope {
            k_plus: 1.0,
            k_minus: -1.0
        }
        .integral(0.2)
        .is_err());
    }

    #[test]
    fn single_shear_mode_closed_form() {
        // ‖∇e^{tΔ}v‖_∞ = F e^{−k²t} with F the grid max of k|cos(ky)|,
        // so K± = F k^{−2±η} ((1∓η/2)/e)^{1∓η/2}
        let g = Grid::new(32, 2.0 * PI).unwrap();
        let k = 3.0;
        let eta = 0.3;
        let f = (0..g.n())
            .map(|j| k * (k * g.coord(j)).cos().abs())
            .fold(0.0, f64::max);
        let env = heat_envelope(&shear(g, k), eta).unwrap();
        let a: f64 = 1.0 - eta / 2.0;
        let b: f64 = 1.0 + eta / 2.0;
        let kp = f * k.powf(-2.0 + eta) * (a / 1f64.exp()).powf(a);
        let km = f * k.powf(-2.0 - eta) * (b / 1f64.exp()).powf(b);
        assert!(
            (env.k_plus / kp - 1.0).abs() < 1e-8,
            "{} vs {kp}",
            env.k_plus
        );
        assert!((env.k_minus / km - 1.0).abs() < 1e-8);
        let measured = heat_gradient_integral(&shear(g, k), 0.0, 50.0, 40).unwrap();
        assert!((measured - f / (k * k)).abs() < 1e-4 * f / (k * k));
        let d = atomic_decompose(&shear(g, k), eta).unwrap();
        let bound = dynamic_interpolation_bound(&d, &[env]).unwrap();
        let ratio = measured / bound;
        assert!((0.1..=1.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn fitted_envelope_dominates_samples() {
        let samples = [(0.1, 2.0), (1.0, 0.5), (10.0, 0.01)];
        let e = Envelope::fit(&samples, 0.25).unwrap();
        assert!(e.worst_ratio(&samples, 0.25) <= 1.0 + 1e-12);
    }
}
