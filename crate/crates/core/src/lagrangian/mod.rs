//! Flow maps of sample points, total distortion and the asymptotic map.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::interp::{interpolate_vector_blend, spectral_point_values};
use crate::fields::ops::grad_norm_inf;
use crate::fields::{Grid, VectorField};
use crate::patch::Point;
use crate::solver::rk2_points;

/// Samples `(t, X(t, seed), u(t, X))` in unwrapped coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: Point,
    pub times: Vec<f64>,
    pub positions: Vec<Point>,
    pub velocities: Vec<Point>,
}

impl Trajectory {
    pub fn end(&self) -> Point {
        *self.positions.last().expect("trajectory has a sample")
    }
}

#[derive(Clone, Debug)]
pub struct FlowMap {
    pub trajectories: Vec<Trajectory>,
    /// Some trajectory came within four cells of the box edge.
    pub margin_exceeded: bool,
}

fn check_history(u_history: &[VectorField], dt: f64) -> Result<Grid> {
    let first = u_history
        .first()
        .ok_or_else(|| Error::InvalidParameter("empty velocity history".into()))?;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let g = *first.grid();
    if u_history.iter().any(|u| *u.grid() != g) {
        return Err(Error::GridMismatch);
    }
    Ok(g)
}

/// Streaming midpoint RK2 of sample points, fed one velocity slice at a time.
#[derive(Clone, Debug)]
pub struct FlowTracker {
    trajectories: Vec<Trajectory>,
    limit: f64,
    margin_exceeded: bool,
}

impl FlowTracker {
    /// Record the seeds at time `t0` in velocity `u0`.
    pub fn new(seeds: &[Point], u0: &VectorField, t0: f64) -> Result<Self> {
        let g = *u0.grid();
        let half = 0.5 * g.box_length();
        if seeds
            .iter()
            .any(|p| p[0].abs() >= half || p[1].abs() >= half)
        {
            return Err(Error::InvalidParameter("seed outside the box".into()));
        }
        let trajectories = seeds
            .iter()
            .map(|&seed| Trajectory {
                seed,
                times: vec![t0],
                positions: vec![seed],
                velocities: vec![interpolate_vector_blend(u0, u0, 0.0, seed)],
            })
            .collect();
        let mut tracker = Self {
            trajectories,
            limit: half - 4.0 * g.spacing(),
            margin_exceeded: false,
        };
        tracker.check_margin();
        Ok(tracker)
    }

    fn check_margin(&mut self) {
        let limit = self.limit;
        self.margin_exceeded |= self.trajectories.iter().any(|t| {
            let p = t.end();
            p[0].abs() > limit || p[1].abs() > limit
        });
    }

    /// Advance every point from `u_prev` at `t` to `u_next` at `t + dt`.
    pub fn advance(&mut self, u_prev: &VectorField, u_next: &VectorField, dt: f64) {
        self.trajectories.par_iter_mut().for_each(|tr| {
            let x = rk2_points(&[tr.end()], u_prev, u_next, dt)[0];
            let t = tr.times.last().copied().unwrap_or(0.0) + dt;
            tr.times.push(t);
            tr.positions.push(x);
            tr.velocities
                .push(interpolate_vector_blend(u_next, u_next, 0.0, x));
        });
        self.check_margin();
    }

    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    pub fn finish(self) -> FlowMap {
        FlowMap {
            trajectories: self.trajectories,
            margin_exceeded: self.margin_exceeded,
        }
    }
}

/// Midpoint RK2 through a velocity history sampled every `dt`, with bicubic
/// interpolation and linear blending in time.
pub fn integrate_flow(seeds: &[Point], u_history: &[VectorField], dt: f64) -> Result<FlowMap> {
    check_history(u_history, dt)?;
    let mut tracker = FlowTracker::new(seeds, &u_history[0], 0.0)?;
    for w in u_history.windows(2) {
        tracker.advance(&w[0], &w[1], dt);
    }
    Ok(tracker.finish())
}

/// Largest bicubic-versus-spectral velocity discrepancy at the given points.
pub fn interpolation_audit(u: &VectorField, points: &[Point]) -> f64 {
    let exact = spectral_point_values(u, points);
    points.iter().zip(exact).fold(0.0, |m, (&p, e)| {
        let b = interpolate_vector_blend(u, u, 0.0, p);
        m.max((b[0] - e[0]).hypot(b[1] - e[1]))
    })
}

/// Running `∫₀ᵗ ‖∇u‖_∞` and `L_∞ = exp` of it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionLedger {
    pub times: Vec<f64>,
    pub grad_inf: Vec<f64>,
    pub integral_linf_grad: Vec<f64>,
    pub l_infty: Vec<f64>,
}

impl DistortionLedger {
    pub fn total(&self) -> f64 {
        *self.integral_linf_grad.last().unwrap_or(&0.0)
    }
}

pub fn distortion(u_history: &[VectorField], dt: f64) -> Result<DistortionLedger> {
    check_history(u_history, dt)?;
    let grad_inf: Vec<f64> = u_history
        .par_iter()
        .map(grad_norm_inf)
        .collect::<Result<_>>()?;
    let mut integral = Vec::with_capacity(grad_inf.len());
    let mut acc = 0.0;
    integral.push(0.0);
    for w in grad_inf.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        integral.push(acc);
    }
    Ok(DistortionLedger {
        times: (0..grad_inf.len()).map(|k| k as f64 * dt).collect(),
        l_infty: integral.iter().map(|s| s.exp()).collect(),
        integral_linf_grad: integral,
        grad_inf,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticMap {
    /// `X(T, x) − M T`.
    pub endpoint: Vec<Point>,
    /// `x + ∫₀ᵀ (u(s, X(s, x)) − M) ds` by the trapezoid rule.
    pub direct: Vec<Point>,
    /// `(t, max_x |X(t, x) − M t − (X(T, x) − M T)|)`.
    pub cauchy_tail: Vec<(f64, f64)>,
    /// Per-seed tail at 90% of the run.
    pub seed_tail: Vec<f64>,
    /// Cauchy tail at 90% of the run.
    pub error_bar: f64,
}

pub fn asymptotic_map(trajectories: &[Trajectory], m: [f64; 2]) -> Result<AsymptoticMap> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidParameter("no trajectories".into()))?;
    let samples = first.times.len();
    if samples < 3 {
        return Err(Error::InvalidParameter(format!(
            "need at least 3 time samples, got {samples}"
        )));
    }
    if trajectories
        .iter()
        .any(|t| t.times.len() != samples || t.positions.len() != samples)
    {
        return Err(Error::InvalidParameter(
            "trajectories sampled at different times".into(),
        ));
    }
    let times = &first.times;
    let t_end = times[samples - 1];
    let shifted = |tr: &Trajectory, k: usize| {
        let p = tr.positions[k];
        [p[0] - m[0] * times[k], p[1] - m[1] * times[k]]
    };
    let endpoint: Vec<Point> = trajectories
        .iter()
        .map(|t| shifted(t, samples - 1))
        .collect();
    let direct = trajectories
        .iter()
        .map(|tr| {
            let mut x = tr.seed;
            for k in 1..samples {
                let h = times[k] - times[k - 1];
                for c in 0..2 {
                    x[c] += 0.5 * h * (tr.velocities[k - 1][c] + tr.velocities[k][c] - 2.0 * m[c]);
                }
            }
            x
        })
        .collect();
    let dist = |tr: &Trajectory, e: &Point, k: usize| {
        let s = shifted(tr, k);
        (s[0] - e[0]).hypot(s[1] - e[1])
    };
    let cauchy_tail: Vec<(f64, f64)> = (0..samples)
        .map(|k| {
            (
                times[k],
                trajectories
                    .iter()
                    .zip(&endpoint)
                    .fold(0.0f64, |a, (tr, e)| a.max(dist(tr, e, k))),
            )
        })
        .collect();
    let k90 = times
        .iter()
        .position(|&t| t >= 0.9 * t_end)
        .unwrap_or(samples - 1);
    let seed_tail = trajectories
        .iter()
        .zip(&endpoint)
        .map(|(tr, e)| dist(tr, e, k90))
        .collect();
    Ok(AsymptoticMap {
        endpoint,
        direct,
        error_bar: cauchy_tail[k90].1,
        cauchy_tail,
        seed_tail,
    })
}

/// `∫_t^T e^{−λs/2} ‖∇u(s)‖_∞^{1/2} ds` at every sample, trapezoid rule.
pub fn tail_majorant(times: &[f64], grad_inf: &[f64], lambda: f64) -> Vec<f64> {
    let f: Vec<f64> = times
        .iter()
        .zip(grad_inf)
        .map(|(&t, &g)| (-0.5 * lambda * t).exp() * g.sqrt())
        .collect();
    let mut out = vec![0.0; times.len()];
    for k in (0..times.len().saturating_sub(1)).rev() {
        out[k] = out[k + 1] + 0.5 * (times[k + 1] - times[k]) * (f[k] + f[k + 1]);
    }
    out
}

/// `max_x |X(t, x) − x| / √t` at each positive sample time.
pub fn displacement_constants(trajectories: &[Trajectory]) -> Vec<(f64, f64)> {
    let Some(first) = trajectories.first() else {
        return Vec::new();
    };
    (0..first.times.len())
        .filter(|&k| first.times[k] > 0.0)
        .map(|k| {
            let d = trajectories.iter().fold(0.0f64, |a, tr| {
                let p = tr.positions[k];
                a.max((p[0] - tr.seed[0]).hypot(p[1] - tr.seed[1]))
            });
            (first.times[k], d / first.times[k].sqrt())
        })
        .collect()
}

/// CSV `seed_id,t,x,y`.
pub fn write_trajectories_csv(path: &Path, trajectories: &[Trajectory]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "seed_id,t,x,y")?;
    for (id, tr) in trajectories.iter().enumerate() {
        for (t, p) in tr.times.iter().zip(&tr.positions) {
            writeln!(w, "{id},{t:.17e},{:.17e},{:.17e}", p[0], p[1])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV `seed_id,x0,y0,xinf,yinf,tail`.
pub fn write_asymptotic_csv(
    path: &Path,
    trajectories: &[Trajectory],
    map: &AsymptoticMap,
) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "seed_id,x0,y0,xinf,yinf,tail")?;
    for (id, ((tr, e), tail)) in trajectories
        .iter()
        .zip(&map.endpoint)
        .zip(&map.seed_tail)
        .enumerate()
    {
        writeln!(
            w,
            "{id},{:.17e},{:.17e},{:.17e},{:.17e},{tail:.17e}",
            tr.seed[0], tr.seed[1], e[0], e[1]
        )?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patch::Patch;
    use std::f64::consts::PI;

    #[test]
    fn constant_field_translates_exactly() {
        let g = Grid::new(32, 10.0).unwrap();
        let m = [0.3, -0.2];
        let hist = vec![VectorField::constant(g, m); 11];
        let flow = integrate_flow(&[[0.5, 1.0], [-2.0, 0.0]], &hist, 0.1).unwrap();
        for tr in &flow.trajectories {
            let e = tr.end();
            assert!(
                (e[0] - tr.seed[0] - m[0]).abs() < 1e-14
                    && (e[1] - tr.seed[1] - m[1]).abs() < 1e-14
            );
        }
        let a = asymptotic_map(&flow.trajectories, m).unwrap();
        assert!(a.cauchy_tail.iter().all(|&(_, v)| v < 1e-14));
        for (tr, (e, d)) in flow
            .trajectories
            .iter()
            .zip(a.endpoint.iter().zip(&a.direct))
        {
            assert!((e[0] - tr.seed[0]).abs() < 1e-14 && (d[1] - tr.seed[1]).abs() < 1e-14);
        }
        let led = distortion(&hist, 0.1).unwrap();
        assert!(led.l_infty.iter().all(|&l| l == 1.0));
    }

    #[test]
    fn frozen_shear_integral() {
        // frozen field over [0, 1]: the integral is the constant gradient sup
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let u = VectorField::from_fn(g, |_, y| [0.7 * y.sin(), 0.0]).unwrap();
        let sup = grad_norm_inf(&u).unwrap();
        let led = distortion(&vec![u; 21], 0.05).unwrap();
        assert!((led.total() - sup).abs() < 1e-12);
    }

    #[test]
    fn rotation_orbits_close() {
        let g = Grid::new(64, 8.0).unwrap();
        let om = 1.0;
        // smooth periodic field that is solid-body rotation near the origin
        let u = VectorField::from_fn(g, |x, y| {
            let w = (-(x * x + y * y) / 4.0).exp();
            [-om * y * w, om * x * w]
        })
        .unwrap();
        let dt = 1e-3;
        let seed = [0.5, 0.0];
        let r0: f64 = 0.5;
        let w = (-(r0 * r0) / 4.0).exp();
        let period = 2.0 * PI / (om * w);
        let steps = (period / dt).round() as usize;
        let hist = vec![u; steps + 1];
        let flow = integrate_flow(&[seed], &hist, dt).unwrap();
        let drift = flow.trajectories[0]
            .positions
            .iter()
            .fold(0.0f64, |a, p| a.max((p[0].hypot(p[1]) - r0).abs()));
        assert!(drift < 1e-4, "{drift}");
    }

    #[test]
    fn decaying_field_asymptotics() {
        // u = M + e^{−t} c: X_∞ = x + (1 − e^{−T}) c exactly for constant c
        let g = Grid::new(16, 10.0).unwrap();
        let (m, c) = ([0.1, 0.0], [0.0, 0.5]);
        let dt = 0.01;
        let hist: Vec<_> = (0..=500)
            .map(|k| {
                let s = (-(k as f64) * dt).exp();
                VectorField::constant(g, [m[0] + s * c[0], m[1] + s * c[1]])
            })
            .collect();
        let flow = integrate_flow(&[[0.0, 0.0]], &hist, dt).unwrap();
        let a = asymptotic_map(&flow.trajectories, m).unwrap();
        let exact = (1.0 - (-5.0f64).exp()) * c[1];
        assert!((a.endpoint[0][1] - exact).abs() < 1e-5);
        assert!((a.direct[0][1] - exact).abs() < 1e-5);
        let (t1, v1) = a.cauchy_tail[100];
        let (t2, v2) = a.cauchy_tail[200];
        let rate = (v1 / v2).ln() / (t2 - t1);
        assert!((rate - 1.0).abs() < 0.05, "{rate}");
    }

    #[test]
    fn marker_area_is_preserved() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let u = VectorField::from_fn(g, |x, y| [x.cos() * y.sin(), -x.sin() * y.cos()]).unwrap();
        let disk = Patch::disk([0.3, -0.2], 0.8, 0.02).unwrap();
        let dt = 0.01;
        let flow = integrate_flow(disk.markers(), &vec![u; 101], dt).unwrap();
        let end: Vec<Point> = flow.trajectories.iter().map(|t| t.end()).collect();
        let a1 = crate::patch::signed_area_of(&end);
        assert!((a1 / disk.area() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn audit_small_for_resolved_field() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let u = VectorField::from_fn(g, |x, y| [x.cos() * y.sin(), -x.sin() * y.cos()]).unwrap();
        assert!(interpolation_audit(&u, &[[0.1, 0.2], [1.3, -2.2]]) < 1e-3);
    }
}
