//! Property tests over randomly drawn band-limited fields, patches and
//! Stokeslet evaluation points.

use std::f64::consts::PI;

use patchflow::besov::dyadic_blocks;
use patchflow::fields::ops::{divergence, spectral_l2_sq, translate_scalar};
use patchflow::fields::{leray_project, norm_lp, Grid, ScalarField, VectorField};
use patchflow::patch::{rasterize, Patch};
use patchflow::stokes::stokeslet;
use patchflow::transport::{admissible_dt, advect_density};
use proptest::prelude::*;

/// Random trigonometric field with modes up to `|k| ≤ 4` on a box of side 4.
fn trig_field(coeffs: &[(i32, i32, f64, f64)], mean_free: bool) -> VectorField {
    let g = Grid::new(32, 4.0).unwrap();
    let w = 2.0 * PI / 4.0;
    VectorField::from_fn(g, |x, y| {
        let mut out = if mean_free { [0.0, 0.0] } else { [0.3, -0.1] };
        for &(kx, ky, a, b) in coeffs {
            let ph = w * (f64::from(kx) * x + f64::from(ky) * y);
            out[0] += a * ph.cos();
            out[1] += b * ph.sin();
        }
        out
    })
    .unwrap()
}

fn modes() -> impl Strategy<Value = Vec<(i32, i32, f64, f64)>> {
    prop::collection::vec((-4i32..=4, 1i32..=4, -1.0f64..1.0, -1.0f64..1.0), 1..6)
}

fn max_diff(a: &VectorField, b: &VectorField) -> f64 {
    a.sub(b).unwrap().max_magnitude()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn leray_projection_is_idempotent_and_solenoidal(c in modes()) {
        let v = trig_field(&c, false);
        let p = leray_project(&v).unwrap();
        let pp = leray_project(&p).unwrap();
        prop_assert!(max_diff(&p, &pp) <= 1e-12 * (1.0 + v.max_magnitude()));
        prop_assert!(divergence(&p).unwrap().max_abs() <= 1e-10);
    }

    #[test]
    fn parseval_matches_midpoint_l2(c in modes()) {
        let v = trig_field(&c, false);
        let phys = norm_lp(&v, 2.0, None).unwrap().powi(2);
        prop_assert!((phys - spectral_l2_sq(&v)).abs() <= 1e-10 * phys);
    }

    #[test]
    fn dyadic_blocks_partition_the_field(c in modes()) {
        let v = trig_field(&c, true);
        let blocks = dyadic_blocks(&v).unwrap();
        let mut sum = VectorField::zeros(*v.grid());
        let mut energy = 0.0;
        for b in &blocks {
            sum = sum.add(b).unwrap();
            energy += b.dot(b).unwrap();
        }
        prop_assert!(max_diff(&sum, &v) <= 1e-12 * (1.0 + v.max_magnitude()));
        let total = v.dot(&v).unwrap();
        prop_assert!((energy - total).abs() <= 1e-10 * total);
    }

    #[test]
    fn stokeslet_is_even_and_rotation_equivariant(
        r in 0.05f64..50.0,
        phi in 0.0f64..(2.0 * PI),
        theta in 0.0f64..(2.0 * PI),
    ) {
        let x = [r * phi.cos(), r * phi.sin()];
        let s = stokeslet(x).unwrap();
        let m = stokeslet([-x[0], -x[1]]).unwrap();
        let (c, sn) = (theta.cos(), theta.sin());
        let rot = [[c, -sn], [sn, c]];
        let rx = [c * x[0] - sn * x[1], sn * x[0] + c * x[1]];
        let sr = stokeslet(rx).unwrap();
        let scale = 1.0 + s.w.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((s.w[i][j] - m.w[i][j]).abs() <= 1e-14 * scale);
                prop_assert!((s.w[i][j] - s.w[j][i]).abs() <= 1e-14 * scale);
                // W(Rx) = R W(x) Rᵀ
                let mut rwr = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        rwr += rot[i][a] * s.w[a][b] * rot[j][b];
                    }
                }
                prop_assert!((sr.w[i][j] - rwr).abs() <= 1e-12 * scale);
            }
            prop_assert!((s.q[i] + m.q[i]).abs() <= 1e-14 / r);
            let rq = rot[i][0] * s.q[0] + rot[i][1] * s.q[1];
            prop_assert!((sr.q[i] - rq).abs() <= 1e-12 / r);
        }
    }

    #[test]
    fn rigid_motions_preserve_patch_area(
        a in 0.4f64..1.5,
        b in 0.4f64..1.5,
        shift in (-2.0f64..2.0, -2.0f64..2.0),
        theta in -PI..PI,
    ) {
        let p = Patch::ellipse([0.0, 0.0], a, b, 0.05).unwrap();
        let q = p.translated([shift.0, shift.1]).rotated(theta, [0.3, -0.2]);
        prop_assert!((q.area() - p.area()).abs() <= 1e-12 * p.area());
        prop_assert!((q.perimeter() - p.perimeter()).abs() <= 1e-12 * p.perimeter());
        prop_assert!(q.signed_area() > 0.0);
        let t = p.translated([shift.0, shift.1]);
        let c = t.centroid();
        prop_assert!((c[0] - shift.0).abs() < 1e-12 && (c[1] - shift.1).abs() < 1e-12);
        prop_assert!(t.contains([shift.0, shift.1]));
    }

    #[test]
    fn whole_cell_translation_is_exact(i in -16isize..16, j in -16isize..16) {
        let g = Grid::new(32, 4.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (x * 0.7).sin() * (1.0 + 0.2 * y).exp()).unwrap();
        let h = g.spacing();
        let t = translate_scalar(&f, [i as f64 * h, j as f64 * h]);
        let err = (0..32isize)
            .flat_map(|q| (0..32isize).map(move |p| (p, q)))
            .map(|(p, q)| (t.at(p, q) - f.at(p + i, q + j)).abs())
            .fold(0.0, f64::max);
        prop_assert!(err <= 1e-12, "{err}");
    }

    #[test]
    fn translation_preserves_inner_products(
        sx in -3.0f64..3.0,
        sy in -3.0f64..3.0,
        seed in 0u64..1000,
    ) {
        // Rough data with Nyquist content.
        let g = Grid::new(32, 4.0).unwrap();
        let noise = |k: usize, s: u64| (((k as u64 + 1) * 2654435761 + s * 97) % 1009) as f64 / 1009.0;
        let f = ScalarField::new(g, (0..g.len()).map(|k| noise(k, seed)).collect()).unwrap();
        let h = ScalarField::new(g, (0..g.len()).map(|k| noise(k, seed + 7) - 0.5).collect()).unwrap();
        let dot = |a: &ScalarField, b: &ScalarField| a.values().iter().zip(b.values()).map(|(x, y)| x * y).sum::<f64>();
        let (tf, th) = (translate_scalar(&f, [sx, sy]), translate_scalar(&h, [sx, sy]));
        let scale = dot(&f, &f).sqrt() * dot(&h, &h).sqrt();
        prop_assert!((dot(&tf, &th) - dot(&f, &h)).abs() <= 1e-12 * scale);
        prop_assert!((tf.integral() - f.integral()).abs() <= 1e-12 * f.integral().abs().max(1.0));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn advection_conserves_mass_under_any_solenoidal_field(c in modes(), r in 0.5f64..1.2) {
        let u = leray_project(&trig_field(&c, false)).unwrap();
        let g = *u.grid();
        let patch = Patch::disk([0.2, -0.1], r, 0.05).unwrap();
        let mut rho = rasterize(&patch, &g, 1.0).unwrap();
        let m0 = rho.integral();
        let dt = 0.8 * admissible_dt(&u);
        for _ in 0..20 {
            rho = advect_density(&rho, &u, dt).unwrap();
        }
        prop_assert!((rho.integral() - m0).abs() <= 1e-12 * m0);
        prop_assert!(rho.min() >= -1e-2 && rho.max() <= 1.0 + 1e-2, "{} {}", rho.min(), rho.max());
    }
}
