use std::f64::consts::PI;

use super::Outcome;
use crate::diagnostics::{
    decay_fit, lambda_bound, momentum, patch_mask, stability_experiment, u_minus_m_l2,
};
use crate::error::{Error, Result};
use crate::fields::{Grid, VectorField};
use crate::lagrangian::{asymptotic_map, FlowTracker, Trajectory};
use crate::patch::{fine_poincare_constant, Patch, Point};
use crate::solver::{run, step, SimConfig, SimState, VelocitySpec};
use crate::transport::SupportProbe;

/// Unit-disk Poincaré–Neumann constant `1/j'₁₁`.
pub const UNIT_DISK_POINCARE: f64 = 0.543_101;

fn unit_disk(g: &Grid) -> Result<Patch> {
    Patch::disk([0.0, 0.0], 1.0, 0.5 * g.spacing())
}

/// `max/min` of `support_excess(t)/√t` over `t ∈ [0.1, 2]` for three
/// distinct jet data.
pub fn support_growth() -> Result<Outcome> {
    let mut out = Outcome::start(4, "support_growth");
    let g = Grid::new(128, 16.0)?;
    let disk = unit_disk(&g)?;
    let stack = |center: [f64; 2], direction: f64, amplitude: f64| VelocitySpec::JetStack {
        center,
        direction,
        width: 2.4,
        shells: 4,
        amplitude,
        decay: 1.0,
    };
    let cases = [
        stack([1.0, 0.0], 0.0, 0.5),
        VelocitySpec::JetStack {
            center: [0.6, 0.8],
            direction: 0.8f64.atan2(0.6),
            width: 2.0,
            shells: 4,
            amplitude: 0.45,
            decay: 1.0,
        },
        VelocitySpec::Sum {
            parts: vec![
                stack([1.0, 0.0], 0.0, 0.45),
                VelocitySpec::GaussianVortex {
                    center: [0.0, 0.0],
                    sigma: 0.7,
                    amplitude: 0.2,
                },
            ],
        },
    ];
    let eps = 0.01;
    for (k, v) in cases.into_iter().enumerate() {
        let cfg = SimConfig::new(g, 1.0, eps, 0.01, 2.0)
            .with_patch(disk.clone())
            .with_velocity(v);
        let probe = SupportProbe::new(&disk, &g);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        run(&cfg, |s| {
            if s.t >= 0.1 - 1e-9 {
                let r = probe.excess(&s.rho.map(|r| r - eps), 0.5)? / s.t.sqrt();
                lo = lo.min(r);
                hi = hi.max(r);
            }
            Ok(())
        })?;
        out.metric(format!("ratio_min_{k}"), lo);
        out.metric(format!("ratio_max_{k}"), hi);
        let band = out.metric(format!("band_{k}"), hi / lo);
        out.require(
            &format!("velocity {k}: band <= 1.5"),
            lo > 0.0 && band <= 1.5,
        );
    }
    Ok(out.done())
}

/// One relaxation run on the unit disk, kept for the decay-rate and
/// asymptotic-map checks.
pub struct RelaxationRun {
    pub cfg: SimConfig,
    pub poincare_constant: f64,
    /// `(t, ‖u − M‖_{L²(D_t)})`.
    pub series: Vec<(f64, f64)>,
    pub m: [f64; 2],
    pub l_infty: f64,
    /// `sup_t ‖u − M‖_∞`.
    pub sup_deviation: f64,
    pub trajectories: Vec<Trajectory>,
    pub wall_seconds: f64,
}

impl RelaxationRun {
    pub fn default_config() -> Result<SimConfig> {
        let g = Grid::new(128, 8.0)?;
        let v = VelocitySpec::Sum {
            parts: vec![
                VelocitySpec::GaussianVortex {
                    center: [0.3, 0.0],
                    sigma: 0.5,
                    amplitude: 0.1,
                },
                VelocitySpec::Dipole {
                    center: [-0.2, 0.3],
                    sigma: 0.4,
                    amplitude: 0.1,
                },
            ],
        };
        Ok(SimConfig::new(g, 1.0, 1e-2, 0.01, 1.5)
            .with_patch(unit_disk(&g)?)
            .with_velocity(v))
    }

    pub fn execute(cfg: &SimConfig) -> Result<Self> {
        let patch = cfg
            .patch
            .clone()
            .ok_or_else(|| Error::InvalidParameter("relaxation needs a patch".into()))?;
        let started = std::time::Instant::now();
        let poincare = fine_poincare_constant(&patch)?;
        let mut s = SimState::initial(cfg)?;
        let m = momentum(&s.rho, &s.u)?;
        let seeds: Vec<Point> = (1..=4)
            .flat_map(|ring| {
                let r = 0.2 * ring as f64;
                (0..8 * ring).map(move |k| {
                    let a = 2.0 * PI * k as f64 / (8 * ring) as f64;
                    [r * a.cos(), r * a.sin()]
                })
            })
            .collect();
        let mut tracker = FlowTracker::new(&seeds, &s.u, 0.0)?;
        let mut series = Vec::with_capacity(cfg.steps() + 1);
        let mut sup_deviation = 0.0f64;
        let mut observe = |s: &SimState| -> Result<()> {
            let region = patch_mask(s.markers.as_ref().unwrap_or(&patch), &cfg.grid)?;
            series.push((s.t, u_minus_m_l2(&s.u, m, Some(&region))?));
            sup_deviation = sup_deviation.max(s.u.shift([-m[0], -m[1]]).max_magnitude());
            Ok(())
        };
        observe(&s)?;
        for _ in 0..cfg.steps() {
            let next = step(&s, cfg)?;
            tracker.advance(&s.u, &next.u, next.t - s.t);
            s = next;
            observe(&s)?;
        }
        Ok(Self {
            cfg: cfg.clone(),
            poincare_constant: poincare,
            series,
            m,
            l_infty: s.ledger.distortion(),
            sup_deviation,
            trajectories: tracker.finish().trajectories,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// Decay of `‖u − M‖_{L²(D_t)}` against `ν / (C_D² L_∞²)`.
pub fn relaxation(run: &RelaxationRun) -> Result<Outcome> {
    let mut out = Outcome::start(5, "relaxation");
    out.metric("run_seconds", run.wall_seconds);
    let cd = out.metric("poincare_constant", run.poincare_constant);
    out.require(
        "C_D within 1% of the unit-disk value",
        (cd / UNIT_DISK_POINCARE - 1.0).abs() <= 0.01,
    );
    let lam = out.metric("lambda_bound", lambda_bound(run.cfg.nu, cd, run.l_infty));
    out.metric("l_infty", run.l_infty);
    let t = run.cfg.t_final;
    let fit = decay_fit(&run.series, (0.2 * t, 0.9 * t), 1e-12)?;
    let lf = out.metric("lambda_fit", fit.lambda_fit);
    out.require("lambda_fit >= lambda_bound", lf >= lam);
    let t_star = out.metric("t_star", 3.0 / lam);
    out.require("run covers 3/lambda_bound", t_star <= t + 1e-9);
    let v0 = run.series[0].1;
    let at = log_interp(&run.series, t_star.min(t));
    let decades = out.metric("decades_dropped", (v0 / at).log10());
    out.require("two decades by 3/lambda_bound", decades >= 2.0);
    Ok(out.done())
}

fn log_interp(series: &[(f64, f64)], t: f64) -> f64 {
    let k = series
        .iter()
        .position(|s| s.0 >= t)
        .unwrap_or(series.len() - 1)
        .max(1);
    let (a, b) = (series[k - 1], series[k]);
    let w = ((t - a.0) / (b.0 - a.0)).clamp(0.0, 1.0);
    (a.1.ln() * (1.0 - w) + b.1.ln() * w).exp()
}

/// Convergence of `X(t) − Mt` on the relaxation run.
pub fn asymptotic_map_run(run: &RelaxationRun) -> Result<Outcome> {
    let mut out = Outcome::start(11, "asymptotic_map");
    let map = asymptotic_map(&run.trajectories, run.m)?;
    let t = run.cfg.t_final;
    let tail_at = |frac: f64| {
        map.cauchy_tail
            .iter()
            .find(|s| s.0 >= frac * t - 1e-9)
            .map_or(f64::NAN, |s| s.1)
    };
    let ratio = out.metric("tail_ratio", tail_at(0.9) / tail_at(0.5));
    out.require("tail(0.9T)/tail(0.5T) <= 0.5", ratio <= 0.5);
    let gap = map
        .endpoint
        .iter()
        .zip(&map.direct)
        .fold(0.0f64, |a, (e, d)| a.max((e[0] - d[0]).hypot(e[1] - d[1])));
    out.metric("endpoint_direct_gap", gap);
    let tol = out.metric("gap_tolerance", 2.0 * run.cfg.dt * run.sup_deviation * t);
    out.require("endpoint and direct estimates agree", gap <= tol);
    Ok(out.done())
}

/// Quadratic scaling of the relative energy and the zero-perturbation case.
pub fn stability() -> Result<Outcome> {
    let mut out = Outcome::start(12, "stability");
    let g = Grid::new(128, 8.0)?;
    let cfg = SimConfig::new(g, 0.5, 1e-2, 0.01, 0.5)
        .with_patch(unit_disk(&g)?)
        .with_velocity(VelocitySpec::GaussianVortex {
            center: [0.2, 0.1],
            sigma: 0.6,
            amplitude: 0.3,
        });
    let delta = VelocitySpec::Dipole {
        center: [-0.3, 0.0],
        sigma: 0.5,
        amplitude: 0.05,
    }
    .build(&g)?;
    let full = stability_experiment(&cfg, &delta)?;
    let half = stability_experiment(&cfg, &delta.scale(0.5))?;
    let zero = stability_experiment(&cfg, &VectorField::zeros(g))?;
    out.require(
        "runs finished",
        !(full.diverged || half.diverged || zero.diverged),
    );
    let last = |r: &crate::diagnostics::StabilityReport| *r.e_rel.last().expect("seeded");
    let ratio = out.metric("e_rel_ratio", last(&half) / last(&full));
    out.require(
        "half amplitude scales E_rel by 0.25 +- 0.05",
        (ratio - 0.25).abs() <= 0.05,
    );
    let z = out.metric(
        "e_rel_zero",
        zero.e_rel.iter().fold(0.0f64, |a, &b| a.max(b)),
    );
    out.require("zero perturbation E_rel <= 1e-14", z <= 1e-14);
    out.metric("c_fit", full.c_fit);
    Ok(out.done())
}

/// `‖u_ε − u_{ε/10}‖_{L²(D_t)}` at `t = 0.5` for `ε = 10⁻¹, 10⁻², 10⁻³`.
pub fn epsilon_convergence() -> Result<Outcome> {
    let mut out = Outcome::start(13, "epsilon_convergence");
    let g = Grid::new(128, 8.0)?;
    let base = SimConfig::new(g, 0.5, 1e-1, 0.01, 0.5)
        .with_patch(unit_disk(&g)?)
        .with_velocity(VelocitySpec::GaussianVortex {
            center: [0.3, 0.1],
            sigma: 0.6,
            amplitude: 0.3,
        });
    let finals = [1e-1, 1e-2, 1e-3, 1e-4]
        .iter()
        .map(|&eps| {
            let mut cfg = base.clone();
            cfg.epsilon = eps;
            run(&cfg, |_| Ok(()))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut gaps = Vec::new();
    for (k, w) in finals.windows(2).enumerate() {
        let fine = w[1].markers.as_ref().expect("patch run");
        let region = patch_mask(fine, &g)?;
        let d = u_minus_m_l2(&w[0].u.sub(&w[1].u)?, [0.0, 0.0], Some(&region))?;
        gaps.push(out.metric(format!("gap_eps_1e-{}", k + 1), d));
    }
    out.require(
        "gaps decrease monotonically",
        gaps.windows(2).all(|w| w[1] < w[0]),
    );
    Ok(out.done())
}
