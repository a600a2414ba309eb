use std::f64::consts::PI;

use patchflow::fields::{norm_lp, Grid, ScalarField, VectorField};
use patchflow::patch::{dilated_mask, rasterize, Patch};
use patchflow::transport::{admissible_dt, advect_density, support_excess};

/// `Ω(r) x⊥` with `Ω = 1` for `r ≤ 2`, smoothly zero beyond `r = 3.5`.
fn solid_rotation(g: Grid) -> VectorField {
    VectorField::from_fn(g, |x, y| {
        let r = x.hypot(y);
        let s = ((r - 2.0) / 1.5).clamp(0.0, 1.0);
        let omega = 1.0 - s * s * (3.0 - 2.0 * s);
        [-omega * y, omega * x]
    })
    .unwrap()
}

fn advect_for(rho: &ScalarField, u: &VectorField, t: f64) -> ScalarField {
    let steps = (t / (0.8 * admissible_dt(u))).ceil() as usize;
    let dt = t / steps as f64;
    let mut out = rho.clone();
    for _ in 0..steps {
        out = advect_density(&out, u, dt).unwrap();
    }
    out
}

/// `cos²(π r / 2R)` on the disk of radius `R` about `c`, zero outside.
fn disk_bump(g: Grid, c: [f64; 2], radius: f64) -> ScalarField {
    ScalarField::from_fn(g, |x, y| {
        let r = (x - c[0]).hypot(y - c[1]);
        if r < radius {
            (0.5 * PI * r / radius).cos().powi(2)
        } else {
            0.0
        }
    })
    .unwrap()
}

fn return_error(rho0: &ScalarField) -> f64 {
    let rho = advect_for(rho0, &solid_rotation(*rho0.grid()), 2.0 * PI);
    assert!((rho.integral() - rho0.integral()).abs() <= 1e-12 * rho0.integral());
    let diff = rho.zip_map(rho0, |a, b| a - b).unwrap();
    norm_lp(&diff, 1.0, None).unwrap() / norm_lp(rho0, 1.0, None).unwrap()
}

#[test]
fn full_rotation_returns_a_disk_supported_density() {
    let g = Grid::new(256, 8.0).unwrap();
    let rel = return_error(&disk_bump(g, [1.0, 0.0], 1.0));
    assert!(rel <= 0.02, "relative L1 return error {rel}");
}

#[test]
fn sharp_patch_return_error_converges() {
    // A jump only converges like h^(2/3) under a limited scheme.
    let patch = Patch::disk([1.0, 0.0], 0.6, 0.02).unwrap();
    let errs: Vec<f64> = [64, 128, 256]
        .iter()
        .map(|&n| {
            let g = Grid::new(n, 8.0).unwrap();
            return_error(&rasterize(&patch, &g, 1.0).unwrap())
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 0.5, "{errs:?}");
    }
}

#[test]
fn lp_norms_do_not_grow() {
    let g = Grid::new(128, 8.0).unwrap();
    let patch = Patch::ellipse([0.8, 0.3], 0.9, 0.5, 0.05).unwrap();
    let rho0 = rasterize(&patch, &g, 1.0).unwrap();
    let u = solid_rotation(g);
    let t = 1.0;
    let rho = advect_for(&rho0, &u, t);
    for p in [2.0, 4.0, f64::INFINITY] {
        let (a, b) = (
            norm_lp(&rho0, p, None).unwrap(),
            norm_lp(&rho, p, None).unwrap(),
        );
        assert!(b <= a * (1.0 + 0.01 * t), "p = {p}: {a} -> {b}");
    }
}

#[test]
fn support_stays_near_the_transported_patch() {
    let g = Grid::new(128, 8.0).unwrap();
    let h = g.spacing();
    let patch = Patch::rectangle([1.0, 0.0], 0.8, 0.6, 0.05).unwrap();
    let rho0 = rasterize(&patch, &g, 1.0).unwrap();
    let t = PI / 2.0;
    let rho = advect_for(&rho0, &solid_rotation(g), t);
    let moved = patch.rotated(t, [0.0, 0.0]);

    let excess = support_excess(&rho, &moved, 0.4).unwrap();
    assert!(excess <= 2.0 * h, "excess {excess} vs h = {h}");

    // All density above the threshold lies in the patch dilated by two cells.
    let mask = dilated_mask(&moved, &g, 2.0 * h);
    for (k, r) in rho.values().iter().enumerate() {
        assert!(*r <= 0.4 || mask.cells()[k], "cell {k} at {:?}", g.point(k));
    }
}
