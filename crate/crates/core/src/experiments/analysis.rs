use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Outcome;
use crate::besov::{
    atomic_decompose, besov_norm, dynamic_interpolation_bound, heat_envelope,
    heat_gradient_integral, l2_critical_constant, Decomposition, GnSweep,
};
use crate::error::Result;
use crate::fields::ops::grad_l2_sq;
use crate::fields::{Grid, ScalarField, VectorField};
use crate::patch::{rasterize, Patch};
use crate::solver::{solve_linearized, step, SimConfig, SimState, VelocitySpec};
use crate::stokes::{farfield_profile, farfield_slopes, gaussian_disk_source, geometric_radii};

const ETA: f64 = 0.3;

fn mean_free(v: VectorField) -> VectorField {
    let m = v.mean();
    v.shift([-m[0], -m[1]])
}

/// Lacunary packets at `k0 2^j`, `j < shells`, equal L² mass per shell.
fn lacunary(g: Grid, k0: f64, width: f64, shells: usize) -> Result<VectorField> {
    VelocitySpec::Lacunary {
        center: [0.0, 0.0],
        k0,
        width,
        shells,
        amplitude: 1.0,
        decay: 1.0,
        direction: 0.3,
    }
    .build(&g)
    .map(mean_free)
}

fn bound_of(d: &Decomposition) -> Result<f64> {
    let env = d
        .atoms
        .iter()
        .map(|a| heat_envelope(&a.field, d.eta))
        .collect::<Result<Vec<_>>>()?;
    dynamic_interpolation_bound(d, &env)
}

/// Heat flow of lacunary data against the per-atom split-time bound, and
/// the L²-only bound on single shells.
pub fn dynamic_interpolation() -> Result<Outcome> {
    let mut out = Outcome::start(6, "dynamic_interpolation");
    let g = Grid::new(256, 2.0 * PI)?;
    let t_end = 1.0;
    let mut ratios = Vec::new();
    for shells in 1..=6 {
        let u = lacunary(g, 2.0, 1.2, shells)?;
        let d = atomic_decompose(&u, ETA)?;
        let bound = bound_of(&d)?;
        ratios.push(out.metric(format!("bound_over_sum_cj_{shells}"), bound / d.sum_cj()));
        if shells == 6 {
            let measured = out.metric(
                "measured_integral",
                heat_gradient_integral(&u, 0.0, t_end, 24)?,
            );
            out.metric("bound", bound);
            out.require("measured <= dynamic bound", measured <= bound);
        }
    }
    let reference = ratios[ratios.len() - 1];
    let spread = ratios
        .iter()
        .fold(0.0f64, |a, r| a.max((r / reference - 1.0).abs()));
    out.check("bound/sum c_j within 30%", "ratio_spread", spread, |v| {
        v <= 0.3
    });

    // single L²-normalized shells at 2^m
    let mut l2_bounds = Vec::new();
    let mut dyn_bounds = Vec::new();
    for m in 2..=5 {
        let k = 2f64.powi(m);
        let u = lacunary(g, k, 2.4 / k, 1)?;
        let u = u.scale(1.0 / u.dot(&u)?.sqrt());
        let a = 2f64.powi(-2 * m);
        let measured = heat_gradient_integral(&u, a, t_end, 24)?;
        let l2b = l2_critical_constant(&u)? * (t_end / a).ln();
        let db = bound_of(&atomic_decompose(&u, ETA)?)?;
        out.metric(format!("shell_{m}_measured"), measured);
        out.metric(format!("shell_{m}_l2_bound"), l2b);
        out.metric(format!("shell_{m}_dynamic_bound"), db);
        out.require(
            &format!("shell {m}: measured <= both bounds"),
            measured <= l2b && measured <= db,
        );
        l2_bounds.push(l2b);
        dyn_bounds.push(db);
    }
    let steps: Vec<f64> = l2_bounds.windows(2).map(|w| w[1] - w[0]).collect();
    let mean_step = steps.iter().sum::<f64>() / steps.len() as f64;
    out.require(
        "L2-only bound grows linearly in m",
        mean_step > 0.0 && steps.iter().all(|s| (s / mean_step - 1.0).abs() <= 0.3),
    );
    let growth = out.metric(
        "l2_bound_growth",
        l2_bounds[l2_bounds.len() - 1] / l2_bounds[0],
    );
    let dyn_ref = dyn_bounds[0];
    let dyn_spread = dyn_bounds
        .iter()
        .fold(0.0f64, |a, b| a.max((b / dyn_ref - 1.0).abs()));
    out.metric("dynamic_bound_spread", dyn_spread);
    out.require(
        "dynamic bound fixed while L2 bound grows",
        dyn_spread <= 0.3 && growth > 1.3,
    );
    Ok(out.done())
}

/// `Σc_j = 2‖u₀‖_{Ḃ⁰₂,₁}`, per-atom balancing and reconstruction.
pub fn atomic_identities() -> Result<Outcome> {
    let mut out = Outcome::start(7, "atomic_identities");
    let g = Grid::new(256, 2.0 * PI)?;
    let u = lacunary(g, 2.0, 1.2, 6)?;
    let d = atomic_decompose(&u, ETA)?;
    out.metric("atoms", d.atoms.len() as f64);
    let b0 = besov_norm(&u, 0.0)?;
    let sum_err = out.metric(
        "sum_cj_rel_error",
        (d.sum_cj() - 2.0 * b0).abs() / (2.0 * b0),
    );
    out.require("sum c_j = 2 besov_norm", sum_err <= 1e-8);
    let balance = d.atoms.iter().fold(0.0f64, |a, at| {
        let (p, m) = at.balance_terms();
        a.max((p + m - at.c_j).abs() / at.c_j)
            .max((p - m).abs() / at.c_j)
    });
    out.check("per-atom balance", "balance_rel_error", balance, |v| {
        v <= 1e-10
    });
    let rec = d.reconstruct().unwrap_or_else(|| VectorField::zeros(g));
    let diff = rec.sub(&u)?;
    let rec_err = out.metric(
        "reconstruction_rel_error",
        (diff.dot(&diff)? / u.dot(&u)?).sqrt(),
    );
    out.require("reconstruction on retained shells", rec_err <= 1e-10);
    Ok(out.done())
}

/// Partial sums of per-atom linearized evolutions against the nonlinear run.
pub fn linearized_gluing() -> Result<Outcome> {
    let mut out = Outcome::start(8, "linearized_gluing");
    let g = Grid::new(128, 8.0)?;
    let eps = 1e-2;
    let mut cfg = SimConfig::new(g, 0.5, eps, 0.01, 0.5).with_patch(Patch::disk(
        [0.0, 0.0],
        1.0,
        0.5 * g.spacing(),
    )?);
    cfg.pressure_tol = 1e-12;
    cfg.diffusion_tol = 1e-13;
    let u0 = VelocitySpec::Lacunary {
        center: [0.1, 0.0],
        k0: 1.5,
        width: 1.0,
        shells: 6,
        amplitude: 0.2,
        decay: 0.8,
        direction: 0.7,
    }
    .build(&g)
    .map(mean_free)?;
    let d = atomic_decompose(&u0, ETA)?;
    out.metric("atoms", d.atoms.len() as f64);
    let mut history = vec![SimState::with_velocity(&cfg, u0.clone())?];
    for _ in 0..cfg.steps() {
        let next = step(history.last().expect("seeded"), &cfg)?;
        history.push(next);
    }
    let count = d.atoms.len().min(6);
    let evolved = d.atoms[..count]
        .iter()
        .map(|a| solve_linearized(&cfg, &history, &a.field))
        .collect::<Result<Vec<_>>>()?;
    for j in [1usize, 3, 6] {
        let j = j.min(count);
        let mut w0 = u0.scale(-1.0);
        for a in &d.atoms[..j] {
            w0 = w0.add(&a.field)?;
        }
        let initial = w0.dot(&w0)?;
        let mut worst = f64::NEG_INFINITY;
        let mut dissipation = 0.0;
        for (k, s) in history.iter().enumerate() {
            let mut w = s.u.scale(-1.0);
            for e in &evolved[..j] {
                w = w.add(&e[k])?;
            }
            // right-endpoint rule, matching the implicit viscous step
            if k > 0 {
                dissipation += (s.t - history[k - 1].t) * grad_l2_sq(&w)?;
            }
            let rw = w.weighted(&s.rho.map(|r| r - eps))?;
            let lhs = rw.dot(&rw)? + 2.0 * cfg.nu * dissipation;
            worst = worst.max(lhs - initial - 5.0 * cfg.dt * s.t);
        }
        out.metric(format!("margin_j{j}"), worst);
        out.require(&format!("domination for J = {j}"), worst <= 0.0);
    }
    // superposition of the first two atoms
    let pair = solve_linearized(&cfg, &history, &d.atoms[0].field.add(&d.atoms[1].field)?)?;
    let mut lin = 0.0f64;
    for (k, p) in pair.iter().enumerate() {
        let diff = p.sub(&evolved[0][k])?.sub(&evolved[1][k])?;
        lin = lin.max((diff.dot(&diff)? / p.dot(p)?).sqrt());
    }
    out.check(
        "superposition to 1e-8",
        "superposition_rel_error",
        lin,
        |v| v <= 1e-8,
    );
    Ok(out.done())
}

/// Seeded band-limited field evaluated exactly, so both grids see the same
/// function.
fn band_limited(g: Grid, seed: u64) -> Result<VectorField> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 2.0 * PI / g.box_length();
    let modes: Vec<(f64, f64, [f64; 4])> = (0..24)
        .map(|_| {
            let kx = rng.gen_range(-4i32..=4) as f64 * k;
            let ky = rng.gen_range(-4i32..=4) as f64 * k;
            let c = [
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            ];
            (kx, ky, c)
        })
        .collect();
    VectorField::from_fn(g, |x, y| {
        modes.iter().fold([0.0, 0.0], |acc, (kx, ky, c)| {
            let (s, co) = (kx * x + ky * y).sin_cos();
            [acc[0] + c[0] * co + c[1] * s, acc[1] + c[2] * co + c[3] * s]
        })
    })
}

fn gn_max_ratio(n: usize) -> Result<f64> {
    let g = Grid::new(n, 8.0)?;
    let patch = Patch::disk([0.0, 0.0], 1.0, 0.5 * g.spacing())?;
    let rho: ScalarField = rasterize(&patch, &g, 0.0)?;
    let v = band_limited(g, 7)?;
    let sweep = GnSweep::new(&patch, &g);
    let mut worst = 0.0f64;
    for p in [2.0, 4.0, 8.0] {
        for t in [0.05, 0.1, 0.2, 0.5, 1.0] {
            for r in [0.0, 1.0, 2.0] {
                let (lhs, rhs) = sweep.check(&v, &rho, t, p, r)?;
                worst = worst.max(lhs / rhs);
            }
        }
    }
    Ok(worst)
}

/// Largest localized Gagliardo–Nirenberg ratio under refinement.
pub fn gn_refinement() -> Result<Outcome> {
    let mut out = Outcome::start(9, "gn_refinement");
    let coarse = out.metric("max_ratio_128", gn_max_ratio(128)?);
    let fine = out.metric("max_ratio_256", gn_max_ratio(256)?);
    out.require("ratio bounded", coarse.is_finite() && fine.is_finite());
    let change = out.metric("refinement_change", (fine / coarse - 1.0).abs());
    out.require("max ratio stable within 10%", change <= 0.1);
    Ok(out.done())
}

/// Far-field decay of the Stokes response to compact sources.
pub fn stokeslet_tails() -> Result<Outcome> {
    let mut out = Outcome::start(10, "stokeslet_tails");
    let radii = geometric_radii(5.0, 300.0, 10);
    let (sw, sq) = farfield_slopes(
        &farfield_profile(
            &gaussian_disk_source(true, 0.3, 1.0, [1.0, 0.3], 64)?,
            [0.0, 0.0],
            &radii,
            64,
        )?,
        1.0,
    )?;
    out.check("dipole slope_w = -1 +- 0.05", "dipole_slope_w", sw, |v| {
        (v + 1.0).abs() <= 0.05
    });
    out.check("dipole slope_Q = -2 +- 0.05", "dipole_slope_q", sq, |v| {
        (v + 2.0).abs() <= 0.05
    });
    let (_, mq) = farfield_slopes(
        &farfield_profile(
            &gaussian_disk_source(false, 0.3, 1.0, [1.0, 0.3], 64)?,
            [0.0, 0.0],
            &radii,
            64,
        )?,
        1.0,
    )?;
    out.check(
        "monopole slope_Q = -1 +- 0.05",
        "monopole_slope_q",
        mq,
        |v| (v + 1.0).abs() <= 0.05,
    );
    Ok(out.done())
}
