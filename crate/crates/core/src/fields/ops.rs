//! Spectral calculus on the periodic grid.

use super::field::{sum, Axis, Mask, ScalarField, VectorField};
use super::grid::Grid;
use super::spectral::{engine_for, C64};
use crate::error::{invalid, Error, Result};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Multiply a spectrum in place by `m(kx_index, ky_index)`.
fn apply(grid: &Grid, spec: &mut [C64], m: impl Fn(usize, usize) -> C64) {
    let n = grid.n();
    for j in 0..n {
        for i in 0..n {
            spec[j * n + i] *= m(i, j);
        }
    }
}

fn same_grid(a: &Grid, b: &Grid) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::GridMismatch)
    }
}

/// `∂f/∂axis` by the Fourier multiplier `i k`.
pub fn spectral_derivative(f: &ScalarField, axis: Axis) -> Result<ScalarField> {
    f.check_finite()?;
    let g = *f.grid();
    let e = engine_for(&g);
    let mut s = e.forward_real(f.values());
    match axis {
        Axis::X => apply(&g, &mut s, |i, _| I * g.derivative_wavenumber(i)),
        Axis::Y => apply(&g, &mut s, |_, j| I * g.derivative_wavenumber(j)),
    }
    Ok(ScalarField::from_raw(g, e.inverse_real(s)))
}

pub fn gradient(f: &ScalarField) -> Result<VectorField> {
    f.check_finite()?;
    let g = *f.grid();
    let e = engine_for(&g);
    let s = e.forward_real(f.values());
    let (sx, sy) = gradient_spectra(&g, &s);
    let (x, y) = e.inverse_pair(&sx, &sy);
    Ok(VectorField::from_raw(g, x, y))
}

pub(crate) fn gradient_spectra(g: &Grid, s: &[C64]) -> (Vec<C64>, Vec<C64>) {
    let n = g.n();
    let mut sx = s.to_vec();
    let mut sy = s.to_vec();
    for j in 0..n {
        let ky = g.derivative_wavenumber(j);
        for i in 0..n {
            let kx = g.derivative_wavenumber(i);
            sx[j * n + i] *= I * kx;
            sy[j * n + i] *= I * ky;
        }
    }
    (sx, sy)
}

pub(crate) fn divergence_spectrum(g: &Grid, sx: &[C64], sy: &[C64]) -> Vec<C64> {
    let n = g.n();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let ky = g.derivative_wavenumber(j);
        for i in 0..n {
            let kx = g.derivative_wavenumber(i);
            let k = j * n + i;
            out[k] = I * (kx * sx[k] + ky * sy[k]);
        }
    }
    out
}

pub fn divergence(v: &VectorField) -> Result<ScalarField> {
    v.check_finite()?;
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    Ok(ScalarField::from_raw(
        g,
        e.inverse_real(divergence_spectrum(&g, &sx, &sy)),
    ))
}

/// Scalar vorticity `∂x v_y − ∂y v_x`.
pub fn vorticity(v: &VectorField) -> Result<ScalarField> {
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    let n = g.n();
    let mut out = vec![C64::new(0.0, 0.0); n * n];
    for j in 0..n {
        let ky = g.derivative_wavenumber(j);
        for i in 0..n {
            let kx = g.derivative_wavenumber(i);
            let k = j * n + i;
            out[k] = I * (kx * sy[k] - ky * sx[k]);
        }
    }
    Ok(ScalarField::from_raw(g, e.inverse_real(out)))
}

/// Velocity gradient components `[∂x vx, ∂y vx, ∂x vy, ∂y vy]`.
pub fn velocity_gradient(v: &VectorField) -> Result<[Vec<f64>; 4]> {
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    let (xx, xy) = gradient_spectra(&g, &sx);
    let (yx, yy) = gradient_spectra(&g, &sy);
    let (a, b) = e.inverse_pair(&xx, &xy);
    let (c, d) = e.inverse_pair(&yx, &yy);
    Ok([a, b, c, d])
}

/// Largest 2-norm of a real 2×2 matrix `[[a, b], [c, d]]`.
#[inline]
pub fn matrix_norm2(a: f64, b: f64, c: f64, d: f64) -> f64 {
    let s = a * a + b * b + c * c + d * d;
    let det = a * d - b * c;
    let disc = (s * s - 4.0 * det * det).max(0.0).sqrt();
    (0.5 * (s + disc)).sqrt()
}

/// `‖∇v‖_∞` with the pointwise operator norm of the velocity gradient.
pub fn grad_norm_inf(v: &VectorField) -> Result<f64> {
    let [a, b, c, d] = velocity_gradient(v)?;
    Ok((0..a.len()).fold(0.0, |m, k| m.max(matrix_norm2(a[k], b[k], c[k], d[k]))))
}

/// `Σ_k w(k) |ŝ(k)|²` scaled so that `w ≡ 1` gives the midpoint L² norm squared.
fn weighted_spectral_sum(g: &Grid, s: &[C64], w: impl Fn(f64, f64) -> f64) -> f64 {
    let n = g.n();
    let scale = g.cell_area() / (n * n) as f64;
    let mut acc = 0.0;
    for j in 0..n {
        let ky = g.wavenumber(j);
        let mut row = 0.0;
        for i in 0..n {
            let kx = g.wavenumber(i);
            row += w(kx, ky) * s[j * n + i].norm_sqr();
        }
        acc += row;
    }
    acc * scale
}

/// `‖∇v‖²_{L²}` from the Fourier side, `Σ |k|² |v̂|²`.
pub fn grad_l2_sq(v: &VectorField) -> Result<f64> {
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    let w = |kx: f64, ky: f64| kx * kx + ky * ky;
    Ok(weighted_spectral_sum(&g, &sx, w) + weighted_spectral_sum(&g, &sy, w))
}

/// `‖∇²v‖²_{L²}` summed over all second derivatives, `Σ |k|⁴ |v̂|²`.
pub fn hessian_l2_sq(v: &VectorField) -> Result<f64> {
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    let w = |kx: f64, ky: f64| (kx * kx + ky * ky).powi(2);
    Ok(weighted_spectral_sum(&g, &sx, w) + weighted_spectral_sum(&g, &sy, w))
}

pub fn laplacian(f: &ScalarField) -> Result<ScalarField> {
    let g = *f.grid();
    let e = engine_for(&g);
    let mut s = e.forward_real(f.values());
    apply(&g, &mut s, |i, j| {
        let (kx, ky) = (g.wavenumber(i), g.wavenumber(j));
        C64::new(-(kx * kx + ky * ky), 0.0)
    });
    Ok(ScalarField::from_raw(g, e.inverse_real(s)))
}

/// Leray projection `Id − k⊗k/|k|²` with the derivative wavenumbers; the zero
/// mode passes through unchanged.
pub fn leray_project(v: &VectorField) -> Result<VectorField> {
    v.check_finite()?;
    let g = *v.grid();
    let e = engine_for(&g);
    let (mut sx, mut sy) = e.forward_pair(v.x(), v.y());
    leray_in_place(&g, &mut sx, &mut sy);
    let (x, y) = e.inverse_pair(&sx, &sy);
    Ok(VectorField::from_raw(g, x, y))
}

pub(crate) fn leray_in_place(g: &Grid, sx: &mut [C64], sy: &mut [C64]) {
    let n = g.n();
    for j in 0..n {
        let ky = g.derivative_wavenumber(j);
        for i in 0..n {
            let kx = g.derivative_wavenumber(i);
            let k2 = kx * kx + ky * ky;
            if k2 == 0.0 {
                continue;
            }
            let k = j * n + i;
            let dot = (kx * sx[k] + ky * sy[k]) / k2;
            sx[k] -= kx * dot;
            sy[k] -= ky * dot;
        }
    }
}

/// `max |div v|`, the solenoidality measure used by the field invariants.
pub fn max_divergence(v: &VectorField) -> Result<f64> {
    Ok(divergence(v)?.max_abs())
}

/// Solenoidal per the field invariant: `max |div v| ≤ 1e-10 · max|v| / h`.
pub fn is_solenoidal(v: &VectorField) -> Result<bool> {
    let scale = v.max_magnitude() / v.grid().spacing();
    Ok(max_divergence(v)? <= 1e-10 * scale.max(f64::MIN_POSITIVE))
}

/// Pointwise magnitude used by [`norm_lp`].
pub trait Pointwise {
    fn grid(&self) -> &Grid;
    fn magnitude_at(&self, k: usize) -> f64;
}

impl Pointwise for ScalarField {
    fn grid(&self) -> &Grid {
        ScalarField::grid(self)
    }
    fn magnitude_at(&self, k: usize) -> f64 {
        self.values()[k].abs()
    }
}

impl Pointwise for VectorField {
    fn grid(&self) -> &Grid {
        VectorField::grid(self)
    }
    fn magnitude_at(&self, k: usize) -> f64 {
        let [a, b] = self.at(k);
        (a * a + b * b).sqrt()
    }
}

/// Midpoint-rule `Lᵖ` norm over an optional mask; `p = ∞` gives the masked max.
pub fn norm_lp<F: Pointwise>(f: &F, p: f64, region: Option<&Mask>) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(invalid(format!("Lp exponent must be >= 1, got {p}")));
    }
    let g = *f.grid();
    if let Some(m) = region {
        same_grid(m.grid(), &g)?;
    }
    let inside = |k: usize| region.map_or(true, |m| m.cells()[k]);
    if p.is_infinite() {
        return Ok((0..g.len())
            .filter(|&k| inside(k))
            .fold(0.0, |m, k| m.max(f.magnitude_at(k))));
    }
    let terms: Vec<f64> = (0..g.len())
        .map(|k| {
            if inside(k) {
                f.magnitude_at(k).powf(p)
            } else {
                0.0
            }
        })
        .collect();
    Ok((sum(&terms) * g.cell_area()).powf(1.0 / p))
}

/// Homogeneous Sobolev norm `(Σ_{k≠0} |k|^{2s} |v̂|²)^{1/2}`, normalised to
/// agree with the L² norm at `s = 0` on mean-free fields.
pub fn sobolev_norm(v: &VectorField, s: f64) -> Result<f64> {
    if !(-1.0..=1.0).contains(&s) {
        return Err(invalid(format!(
            "Sobolev index must lie in [-1, 1], got {s}"
        )));
    }
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    if s < 0.0 {
        let m = v.mean();
        let rms = (weighted_spectral_sum(&g, &sx, |_, _| 1.0)
            + weighted_spectral_sum(&g, &sy, |_, _| 1.0))
        .sqrt()
            / g.box_length();
        if m[0].hypot(m[1]) > 1e-12 * rms.max(1e-300) {
            return Err(invalid(
                "negative-order homogeneous norm requires a mean-free field",
            ));
        }
    }
    let w = |kx: f64, ky: f64| {
        let k2 = kx * kx + ky * ky;
        if k2 == 0.0 {
            0.0
        } else {
            k2.powf(s)
        }
    };
    Ok((weighted_spectral_sum(&g, &sx, w) + weighted_spectral_sum(&g, &sy, w)).sqrt())
}

/// Exact heat flow `v̂(k) e^{−|k|² t}`.
pub fn heat_semigroup(v: &VectorField, t: f64) -> Result<VectorField> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(invalid(format!(
            "heat semigroup time must be >= 0, got {t}"
        )));
    }
    v.check_finite()?;
    if t == 0.0 {
        return Ok(v.clone());
    }
    let g = *v.grid();
    let e = engine_for(&g);
    let (mut sx, mut sy) = e.forward_pair(v.x(), v.y());
    let n = g.n();
    for j in 0..n {
        let ky = g.wavenumber(j);
        for i in 0..n {
            let kx = g.wavenumber(i);
            let f = (-(kx * kx + ky * ky) * t).exp();
            sx[j * n + i] *= f;
            sy[j * n + i] *= f;
        }
    }
    let (x, y) = e.inverse_pair(&sx, &sy);
    Ok(VectorField::from_raw(g, x, y))
}

#[inline]
pub(crate) fn retained_by_two_thirds(g: &Grid, i: usize) -> bool {
    3 * g.mode(i).unsigned_abs() as usize <= g.n()
}

/// Two-thirds rule truncation.
pub fn dealias(v: &VectorField) -> VectorField {
    let g = *v.grid();
    let e = engine_for(&g);
    let (mut sx, mut sy) = e.forward_pair(v.x(), v.y());
    let n = g.n();
    for j in 0..n {
        for i in 0..n {
            if !(retained_by_two_thirds(&g, i) && retained_by_two_thirds(&g, j)) {
                sx[j * n + i] = C64::new(0.0, 0.0);
                sy[j * n + i] = C64::new(0.0, 0.0);
            }
        }
    }
    let (x, y) = e.inverse_pair(&sx, &sy);
    VectorField::from_raw(g, x, y)
}

/// `(a·∇) b`, pseudo-spectral with two-thirds de-aliasing of the product.
pub fn advective_derivative(a: &VectorField, b: &VectorField) -> Result<VectorField> {
    same_grid(a.grid(), b.grid())?;
    let g = *a.grid();
    let [bxx, bxy, byx, byy] = velocity_gradient(b)?;
    let (ax, ay) = a.components();
    let x = (0..g.len())
        .map(|k| ax[k] * bxx[k] + ay[k] * bxy[k])
        .collect();
    let y = (0..g.len())
        .map(|k| ax[k] * byx[k] + ay[k] * byy[k])
        .collect();
    Ok(dealias(&VectorField::from_raw(g, x, y)))
}

/// Spectral translation `f(x + shift)`.
pub fn translate_scalar(f: &ScalarField, shift: [f64; 2]) -> ScalarField {
    let g = *f.grid();
    let e = engine_for(&g);
    let mut s = e.forward_real(f.values());
    apply(&g, &mut s, |i, j| phase(&g, i, j, shift));
    ScalarField::from_raw(g, e.inverse_real(s))
}

pub fn translate_vector(v: &VectorField, shift: [f64; 2]) -> VectorField {
    let g = *v.grid();
    let e = engine_for(&g);
    let (mut sx, mut sy) = e.forward_pair(v.x(), v.y());
    apply(&g, &mut sx, |i, j| phase(&g, i, j, shift));
    apply(&g, &mut sy, |i, j| phase(&g, i, j, shift));
    let (x, y) = e.inverse_pair(&sx, &sy);
    VectorField::from_raw(g, x, y)
}

/// Phase `e^{i k·shift}`. At Nyquist the phase is rounded to `±1`, the
/// nearest whole-cell roll, so the map stays real and orthogonal and
/// `∫ T f · T g = ∫ f g` holds to round-off.
fn phase(g: &Grid, i: usize, j: usize, shift: [f64; 2]) -> C64 {
    let factor = |i: usize, a: f64| {
        if g.is_nyquist(i) {
            C64::new(if a.cos() >= 0.0 { 1.0 } else { -1.0 }, 0.0)
        } else {
            C64::from_polar(1.0, a)
        }
    };
    factor(i, g.wavenumber(i) * shift[0]) * factor(j, g.wavenumber(j) * shift[1])
}

/// Fourier-side `Σ |v̂|²` in the midpoint normalisation (Parseval check).
pub fn spectral_l2_sq(v: &VectorField) -> f64 {
    let g = *v.grid();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    weighted_spectral_sum(&g, &sx, |_, _| 1.0) + weighted_spectral_sum(&g, &sy, |_, _| 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid(n: usize, l: f64) -> Grid {
        Grid::new(n, l).unwrap()
    }

    /// Smooth periodic test field built from a handful of low modes.
    fn band_limited(g: Grid, seed: u64) -> ScalarField {
        let l = g.box_length();
        let mut s = seed;
        let mut next = || {
            s = s
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let modes: Vec<(f64, f64, f64, f64)> = (0..8)
            .map(|_| {
                let mx = (next() * 8.0).round();
                let my = (next() * 8.0).round();
                (mx, my, next(), next() * 2.0 * PI)
            })
            .collect();
        ScalarField::from_fn(g, |x, y| {
            modes
                .iter()
                .map(|&(mx, my, a, ph)| a * (2.0 * PI * (mx * x + my * y) / l + ph).cos())
                .sum()
        })
        .unwrap()
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = grid(32, 3.0);
        let d = spectral_derivative(&ScalarField::constant(g, 4.2), Axis::X).unwrap();
        assert!(d.max_abs() < 1e-13);
    }

    #[test]
    fn derivative_of_sine_is_exact() {
        let g = grid(64, 5.0);
        let l = g.box_length();
        let f = ScalarField::from_fn(g, |x, _| (2.0 * PI * x / l).sin()).unwrap();
        let d = spectral_derivative(&f, Axis::X).unwrap();
        let err = (0..g.len())
            .map(|k| {
                let [x, _] = g.point(k);
                (d.values()[k] - 2.0 * PI / l * (2.0 * PI * x / l).cos()).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "err = {err}");
    }

    #[test]
    fn derivative_matches_fourth_order_differences() {
        // Oracle: centred 4th-order differences converge at O(h⁴).
        let errs: Vec<f64> = [32usize, 64]
            .iter()
            .map(|&n| {
                let g = grid(n, 2.0 * PI);
                let f = band_limited(g, 11);
                let d = spectral_derivative(&f, Axis::Y).unwrap();
                let h = g.spacing();
                let ni = n as isize;
                let mut e: f64 = 0.0;
                for j in 0..ni {
                    for i in 0..ni {
                        let fd = (-f.at(i, j + 2) + 8.0 * f.at(i, j + 1) - 8.0 * f.at(i, j - 1)
                            + f.at(i, j - 2))
                            / (12.0 * h);
                        e = e.max((fd - d.values()[(j * ni + i) as usize]).abs());
                    }
                }
                e
            })
            .collect();
        let ratio = errs[0] / errs[1];
        assert!(ratio > 12.0, "4th-order ratio {ratio} from {errs:?}");
    }

    #[test]
    fn leray_annihilates_gradients_and_keeps_solenoidal() {
        let g = grid(64, 2.0 * PI);
        let phi = band_limited(g, 3);
        let grad = gradient(&phi).unwrap();
        let p = leray_project(&grad).unwrap();
        assert!(p.max_magnitude() < 1e-12 * grad.max_magnitude().max(1.0));

        let psi = band_limited(g, 4);
        let gp = gradient(&psi).unwrap();
        let w = VectorField::new(g, gp.y().to_vec(), gp.x().iter().map(|v| -v).collect()).unwrap();
        let pw = leray_project(&w).unwrap();
        let diff = pw.sub(&w).unwrap().max_magnitude();
        assert!(diff < 1e-12 * w.max_magnitude());
        assert!(is_solenoidal(&pw).unwrap());
    }

    #[test]
    fn leray_recovers_known_split() {
        // Oracle: split built in Fourier space as ∇φ + ∇^⊥ψ.
        let g = grid(64, 4.0);
        let gphi = gradient(&band_limited(g, 21)).unwrap();
        let gpsi = gradient(&band_limited(g, 22)).unwrap();
        let w =
            VectorField::new(g, gpsi.y().to_vec(), gpsi.x().iter().map(|v| -v).collect()).unwrap();
        let v = w.add(&gphi).unwrap();
        let p = leray_project(&v).unwrap();
        let rel =
            p.sub(&w).unwrap().dot(&p.sub(&w).unwrap()).unwrap().sqrt() / w.dot(&w).unwrap().sqrt();
        assert!(rel < 1e-10, "rel = {rel}");
    }

    #[test]
    fn norm_lp_basics() {
        let g = grid(32, 3.0);
        let one = ScalarField::constant(g, 1.0);
        assert!((norm_lp(&one, 2.0, None).unwrap() - 3.0).abs() < 1e-12);
        let half = Mask::from_fn(g, |x, _| x < 0.0);
        let l1 = norm_lp(&one, 1.0, Some(&half)).unwrap();
        assert!((l1 - 4.5).abs() <= 3.0 * g.spacing());
        assert!(norm_lp(&one, 0.5, None).is_err());
        assert_eq!(
            norm_lp(&one.map(|_| -2.0), f64::INFINITY, None).unwrap(),
            2.0
        );
    }

    #[test]
    fn norm_lp_converges_under_refinement() {
        // Oracle: midpoint quadrature at double resolution.
        let l = 2.0;
        let f = |x: f64, y: f64| (1.0 + 0.5 * (PI * x).sin() * (PI * y).cos()).powi(2);
        let coarse = norm_lp(&ScalarField::from_fn(grid(32, l), f).unwrap(), 3.0, None).unwrap();
        let fine = norm_lp(&ScalarField::from_fn(grid(64, l), f).unwrap(), 3.0, None).unwrap();
        let h = l / 32.0;
        assert!((coarse - fine).abs() <= h * h);
    }

    #[test]
    fn parseval_holds() {
        let g = grid(64, 3.0);
        let a = band_limited(g, 5);
        let b = band_limited(g, 6);
        let v = VectorField::new(g, a.values().to_vec(), b.values().to_vec()).unwrap();
        let phys = norm_lp(&v, 2.0, None).unwrap().powi(2);
        let four = spectral_l2_sq(&v);
        assert!((phys - four).abs() <= 1e-10 * phys);
    }

    #[test]
    fn sobolev_single_mode_and_log_convexity() {
        let g = grid(64, 2.0 * PI);
        let a = 0.7;
        let v = VectorField::from_fn(g, |_, y| [a * (3.0 * y).sin(), 0.0]).unwrap();
        let l2 = norm_lp(&v, 2.0, None).unwrap();
        let s0 = sobolev_norm(&v, 0.0).unwrap();
        assert!((s0 - l2).abs() < 1e-12 * l2);
        let eta = 0.3;
        let sp = sobolev_norm(&v, eta).unwrap();
        assert!((sp - l2 * 3f64.powf(eta)).abs() < 1e-12 * sp);
        let sm = sobolev_norm(&v, -eta).unwrap();
        assert!(sp * sm >= s0 * s0 * (1.0 - 1e-12));

        // two modes: |k| = 2 and |k| = 5 with amplitudes 1 and 0.5
        let v2 = VectorField::from_fn(g, |x, y| [(2.0 * y).cos(), 0.5 * (5.0 * x).sin()]).unwrap();
        let area = g.box_length().powi(2);
        let expected = (0.5 * area * (2f64.powf(2.0 * eta) + 0.25 * 5f64.powf(2.0 * eta))).sqrt();
        assert!((sobolev_norm(&v2, eta).unwrap() - expected).abs() < 1e-10 * expected);
    }

    #[test]
    fn sobolev_negative_requires_mean_free() {
        let g = grid(32, 1.0);
        let v = VectorField::constant(g, [1.0, 0.0]);
        assert!(sobolev_norm(&v, -0.2).is_err());
        assert!(sobolev_norm(&v, 0.2).is_ok());
    }

    #[test]
    fn heat_semigroup_properties() {
        let g = grid(64, 2.0 * PI);
        let v = VectorField::from_fn(g, |x, y| [(2.0 * y).sin() + 0.1, (x + y).cos()]).unwrap();
        assert_eq!(heat_semigroup(&v, 0.0).unwrap(), v);
        assert!(heat_semigroup(&v, -1.0).is_err());
        let mode = VectorField::from_fn(g, |_, y| [(2.0 * y).sin(), 0.0]).unwrap();
        let h = heat_semigroup(&mode, 0.3).unwrap();
        let expected = mode.scale((-4.0 * 0.3f64).exp());
        assert!(h.sub(&expected).unwrap().max_magnitude() < 1e-13);
        let st = heat_semigroup(&heat_semigroup(&v, 0.1).unwrap(), 0.2).unwrap();
        let direct = heat_semigroup(&v, 0.3).unwrap();
        assert!(st.sub(&direct).unwrap().max_magnitude() < 1e-12 * direct.max_magnitude());
    }

    #[test]
    fn translation_by_whole_cells_is_a_roll() {
        let g = grid(32, 2.0);
        let f = band_limited(g, 9);
        let t = translate_scalar(&f, [2.0 * g.spacing(), -g.spacing()]);
        for j in 0..32isize {
            for i in 0..32isize {
                let k = (j * 32 + i) as usize;
                assert!((t.values()[k] - f.at(i + 2, j - 1)).abs() < 1e-12);
            }
        }
    }
}
