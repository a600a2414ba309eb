use patchflow::diagnostics::{galilean_shift, momentum, u_minus_m_l2};
use patchflow::fields::Grid;
use patchflow::patch::Patch;
use patchflow::solver::{a_functionals, run, SimConfig, SimState, VelocitySpec};

fn disk_config(n: usize, v: VelocitySpec, dt: f64, t: f64) -> SimConfig {
    let g = Grid::new(n, 8.0).unwrap();
    SimConfig::new(g, 0.1, 0.1, dt, t)
        .with_patch(Patch::disk([0.0, 0.0], 1.0, 0.05).unwrap())
        .with_velocity(v)
}

fn history(cfg: &SimConfig) -> Vec<SimState> {
    let mut out = Vec::new();
    run(cfg, |s| {
        out.push(s.clone());
        Ok(())
    })
    .unwrap();
    out
}

#[test]
fn rigid_translation_keeps_the_velocity_and_moves_the_centroid() {
    let m = [0.3, -0.2];
    let cfg = disk_config(64, VelocitySpec::Constant { m }, 0.02, 0.5);
    let h = history(&cfg);
    let (first, last) = (&h[0], h.last().unwrap());
    for s in &h {
        assert!(u_minus_m_l2(&s.u, m, None).unwrap() <= 1e-10);
    }
    assert!((last.mass() - first.mass()).abs() <= 1e-12 * first.mass());

    // Centroid of the patch part `ρ − ε`.
    let centroid = |s: &SimState| {
        let g = *s.grid();
        let (mut c, mut w) = ([0.0; 2], 0.0);
        for (k, r) in s.rho.values().iter().enumerate() {
            let p = g.point(k);
            let r = r - cfg.epsilon;
            c[0] += r * p[0];
            c[1] += r * p[1];
            w += r;
        }
        [c[0] / w, c[1] / w]
    };
    let (c0, c1) = (centroid(first), centroid(last));
    let t = last.t;
    assert!((c1[0] - c0[0] - m[0] * t).abs() < 1e-3, "{c0:?} {c1:?}");
    assert!((c1[1] - c0[1] - m[1] * t).abs() < 1e-3, "{c0:?} {c1:?}");
    let markers = last.markers.as_ref().unwrap().centroid();
    assert!((markers[0] - m[0] * t).abs() < 1e-10 && (markers[1] - m[1] * t).abs() < 1e-10);
}

#[test]
fn rigid_translation_has_constant_functionals() {
    let m = [0.3, -0.2];
    let cfg = disk_config(32, VelocitySpec::Constant { m }, 0.05, 0.5);
    let h = history(&cfg);
    let a = a_functionals(&h, 0.25).unwrap();
    let mass = h[0].mass();
    let expect = (m[0] * m[0] + m[1] * m[1]) * mass;
    assert!(
        (a.a0 - expect).abs() <= 1e-9 * expect,
        "{} vs {expect}",
        a.a0
    );
    assert!(
        a.a1.abs() <= 1e-12 && a.a2.abs() <= 1e-12 && a.a3.abs() <= 1e-12,
        "{a:?}"
    );
}

#[test]
fn fluid_at_rest_stays_at_rest() {
    let cfg = disk_config(32, VelocitySpec::Constant { m: [0.0, 0.0] }, 0.05, 0.5);
    let h = history(&cfg);
    let last = h.last().unwrap();
    assert!(last.u.max_magnitude() <= 1e-14);
    assert_eq!(last.rho, h[0].rho);
}

#[test]
fn boosted_run_matches_the_rest_frame_run() {
    let dipole = VelocitySpec::Dipole {
        center: [0.0, 0.0],
        sigma: 0.6,
        amplitude: 0.2,
    };
    let mb = [0.25, 0.1];
    let base = disk_config(32, dipole.clone(), 0.02, 0.4);
    let boosted = disk_config(
        32,
        VelocitySpec::Sum {
            parts: vec![dipole, VelocitySpec::Constant { m: mb }],
        },
        0.02,
        0.4,
    );
    let s0 = run(&base, |_| Ok(())).unwrap();
    let s1 = run(&boosted, |_| Ok(())).unwrap();
    let frame = galilean_shift(&s1, mb);

    // Exact within one run: ∫ρ_M u_M = ∫ρu − M ∫ρ.
    let p1 = s1.momentum().unwrap();
    let pf = frame.momentum().unwrap();
    let mass = s1.mass();
    let scale = s1
        .rho
        .values()
        .iter()
        .zip(s1.u.x().iter().zip(s1.u.y()))
        .map(|(r, (a, b))| r * a.hypot(*b))
        .sum::<f64>()
        * s1.grid().cell_area();
    for c in 0..2 {
        assert!(
            (pf[c] - (p1[c] - mb[c] * mass)).abs() <= 1e-9 * scale,
            "{} {}",
            pf[c] - (p1[c] - mb[c] * mass),
            scale
        );
    }
    // Across runs, up to momentum drift.
    let m0 = momentum(&s0.rho, &s0.u).unwrap();
    let mf = [pf[0] / mass, pf[1] / mass];
    assert!(
        (mf[0] - m0[0]).hypot(mf[1] - m0[1]) <= 1e-6,
        "{mf:?} {m0:?}"
    );
    let scale = s0.u.max_magnitude();
    // The discrete transport is not Galilean invariant, so the fields agree
    // only to truncation error.
    let du = frame.u.sub(&s0.u).unwrap().max_magnitude();
    assert!(du <= 0.05 * scale, "{du} vs {scale}");
}
