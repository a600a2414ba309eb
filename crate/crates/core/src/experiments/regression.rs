use std::f64::consts::PI;

use super::Outcome;
use crate::error::Result;
use crate::fields::Grid;
use crate::patch::{hausdorff, Patch};
use crate::solver::{run, SimConfig, VelocitySpec};

/// `u₀ ≡ M` on a disk patch is transported rigidly.
pub fn rigid_translation() -> Result<Outcome> {
    let mut out = Outcome::start(1, "rigid_translation");
    let g = Grid::new(128, 8.0)?;
    let m = [0.3, -0.2];
    let disk = Patch::disk([0.0, 0.0], 1.0, 0.5 * g.spacing())?;
    let cfg = SimConfig::new(g, 0.1, 1e-2, 0.02, 2.0)
        .with_patch(disk.clone())
        .with_velocity(VelocitySpec::Constant { m });
    let c0 = disk.centroid();
    let (mut dev, mut drift, mut haus) = (0.0f64, 0.0f64, 0.0f64);
    run(&cfg, |s| {
        dev = dev.max(s.u.shift([-m[0], -m[1]]).max_magnitude());
        if let (Some(mk), true) = (&s.markers, s.t > 0.0) {
            let c = mk.centroid();
            let e = (c[0] - c0[0] - m[0] * s.t).hypot(c[1] - c0[1] - m[1] * s.t);
            drift = drift.max(e / s.t);
            haus = haus.max(hausdorff(mk, &disk.translated([m[0] * s.t, m[1] * s.t])));
        }
        Ok(())
    })?;
    let h = g.spacing();
    out.check("|u-M|_inf <= 1e-8", "u_minus_m_inf", dev, |v| v <= 1e-8);
    out.check("centre drift <= 1e-6/t", "centre_drift_rate", drift, |v| {
        v <= 1e-6
    });
    out.check("hausdorff <= 2h", "hausdorff_over_h", haus / h, |v| {
        v <= 2.0
    });
    let mut out = out.done();
    out.require("runtime < 30 s", out.wall_seconds < 30.0);
    Ok(out)
}

/// Decaying Taylor–Green vortex at uniform density.
pub fn taylor_green() -> Result<Outcome> {
    let mut out = Outcome::start(2, "taylor_green");
    let g = Grid::new(128, 2.0 * PI)?;
    let nu = 0.1;
    let mut residuals = Vec::new();
    let mut error = f64::NAN;
    for dt in [0.005, 0.0025] {
        let cfg = SimConfig::new(g, nu, 1.0, dt, 1.0)
            .with_velocity(VelocitySpec::TaylorGreen { amplitude: 1.0 });
        let s = run(&cfg, |_| Ok(()))?;
        let exact = VelocitySpec::TaylorGreen {
            amplitude: (-2.0 * nu * s.t).exp(),
        }
        .build(&g)?;
        let d = s.u.sub(&exact)?;
        error = (d.dot(&d)? / exact.dot(&exact)?).sqrt();
        residuals.push(s.ledger.energy_residual(nu).abs());
    }
    out.check("relative L2 error <= 1e-4", "rel_l2_error", error, |v| {
        v <= 1e-4
    });
    out.metric("energy_residual_dt", residuals[0]);
    out.metric("energy_residual_dt_half", residuals[1]);
    let ratio = out.metric("residual_ratio", residuals[0] / residuals[1]);
    out.require("dt halving reduces residual >= 1.8x", ratio >= 1.8);
    Ok(out.done())
}

/// Mass, momentum and patch area on a multi-scale ellipse run with nonzero
/// mean momentum.
pub fn conservation() -> Result<Outcome> {
    let mut out = Outcome::start(3, "conservation");
    let g = Grid::new(128, 8.0)?;
    let patch = Patch::ellipse([0.0, 0.0], 1.3, 0.8, 0.5 * g.spacing())?;
    let v = VelocitySpec::Sum {
        parts: vec![
            VelocitySpec::Constant { m: [0.2, 0.1] },
            VelocitySpec::Lacunary {
                center: [0.2, -0.1],
                k0: 2.0,
                width: 1.0,
                shells: 4,
                amplitude: 0.3,
                decay: 0.7,
                direction: 0.4,
            },
        ],
    };
    let cfg = SimConfig::new(g, 0.05, 1e-2, 0.01, 1.0)
        .with_patch(patch.clone())
        .with_velocity(v);
    let mut first: Option<(f64, [f64; 2], f64)> = None;
    let (mut dm, mut dp, mut da) = (0.0f64, 0.0f64, 0.0f64);
    run(&cfg, |s| {
        let mass = s.mass();
        let p = s.momentum()?;
        let area = s.markers.as_ref().map_or(0.0, |m| m.area());
        match first {
            None => first = Some((mass, p, area)),
            Some((m0, p0, a0)) if s.t > 0.0 => {
                dm = dm.max(((mass - m0) / m0).abs() / s.t);
                dp = dp.max((p[0] - p0[0]).hypot(p[1] - p0[1]) / p0[0].hypot(p0[1]) / s.t);
                da = da.max(((area - a0) / a0).abs() / s.t);
            }
            _ => {}
        }
        Ok(())
    })?;
    out.check("mass drift <= 1e-8/t", "mass_drift_rate", dm, |v| v <= 1e-8);
    out.check("momentum drift <= 1e-6/t", "momentum_drift_rate", dp, |v| {
        v <= 1e-6
    });
    out.check("area drift <= 1e-3/t", "area_drift_rate", da, |v| v <= 1e-3);
    Ok(out.done())
}
