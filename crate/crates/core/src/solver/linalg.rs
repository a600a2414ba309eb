//! Preconditioned conjugate gradients for the pressure and diffusion solves.
//!
//! Both unknowns live in Fourier space: the pressure as a Hermitian spectrum,
//! the velocity as the spectrum of the packed field `u_x + i u_y`. The inner
//! product is `Re Σ conj(a) b`, which by Parseval is the physical one up to a
//! constant factor.

use crate::error::{Error, Result};
use crate::fields::spectral::{engine_for, C64};
use crate::fields::{Grid, ScalarField, VectorField};

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn rdot(a: &[C64], b: &[C64]) -> f64 {
    let mut acc = 0.0;
    for (ca, cb) in a.chunks(1024).zip(b.chunks(1024)) {
        acc += ca
            .iter()
            .zip(cb)
            .map(|(x, y)| x.re * y.re + x.im * y.im)
            .sum::<f64>();
    }
    acc
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// PCG for `A x = b` from the initial guess in `x`. Converged when
/// `‖b − A x‖ ≤ tol ‖b‖`.
pub(crate) fn pcg(
    mut apply: impl FnMut(&[C64], &mut [C64]),
    mut precondition: impl FnMut(&[C64], &mut [C64]),
    b: &[C64],
    x: &mut [C64],
    tol: f64,
    max_iter: usize,
    solver: &'static str,
) -> Result<SolveStats> {
    let m = b.len();
    let bnorm = rdot(b, b).sqrt();
    if bnorm == 0.0 {
        x.iter_mut().for_each(|v| *v = ZERO);
        return Ok(SolveStats {
            iterations: 0,
            residual: 0.0,
        });
    }
    let mut r = vec![ZERO; m];
    let mut ap = vec![ZERO; m];
    apply(x, &mut ap);
    for i in 0..m {
        r[i] = b[i] - ap[i];
    }
    let mut res = rdot(&r, &r).sqrt() / bnorm;
    if res <= tol {
        return Ok(SolveStats {
            iterations: 0,
            residual: res,
        });
    }
    let mut z = vec![ZERO; m];
    precondition(&r, &mut z);
    let mut p = z.clone();
    let mut rz = rdot(&r, &z);
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = rdot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::NotConverged {
                solver,
                residual: res,
                iterations: it,
            });
        }
        let alpha = rz / pap;
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = rdot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            // guard against drift of the recursive residual
            apply(x, &mut ap);
            for i in 0..m {
                r[i] = b[i] - ap[i];
            }
            res = rdot(&r, &r).sqrt() / bnorm;
            if res <= tol {
                return Ok(SolveStats {
                    iterations: it,
                    residual: res,
                });
            }
        }
        precondition(&r, &mut z);
        let rz_new = rdot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..m {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::NotConverged {
        solver,
        residual: res,
        iterations: max_iter,
    })
}

/// Derivative wavenumbers per FFT index.
fn kd(grid: &Grid) -> Vec<f64> {
    (0..grid.n())
        .map(|i| grid.derivative_wavenumber(i))
        .collect()
}

/// `−div((1/ρ) ∇ P)` with spectral derivatives, acting on Hermitian spectra.
pub(crate) struct PressureOperator {
    grid: Grid,
    beta: Vec<f64>,
    k: Vec<f64>,
    rho_ref: f64,
}

impl PressureOperator {
    pub fn new(rho: &ScalarField, rho_ref: f64) -> Self {
        let grid = *rho.grid();
        Self {
            grid,
            beta: rho.values().iter().map(|r| 1.0 / r).collect(),
            k: kd(&grid),
            rho_ref,
        }
    }

    /// Packed gradient `∂_x P + i ∂_y P` in physical space.
    pub fn packed_gradient(&self, p: &[C64]) -> Vec<C64> {
        let n = self.grid.n();
        let mut g = vec![ZERO; n * n];
        for j in 0..n {
            for i in 0..n {
                let k = j * n + i;
                // i kx P + i (i ky P)
                g[k] = p[k] * C64::new(-self.k[j], self.k[i]);
            }
        }
        engine_for(&self.grid).inverse(&mut g);
        g
    }

    pub fn apply(&self, p: &[C64], out: &mut [C64]) {
        let n = self.grid.n();
        let mut g = self.packed_gradient(p);
        for (v, b) in g.iter_mut().zip(&self.beta) {
            *v *= *b;
        }
        engine_for(&self.grid).forward(&mut g);
        for j in 0..n {
            let jn = (n - j) % n;
            for i in 0..n {
                let inn = (n - i) % n;
                let a = g[j * n + i];
                let c = g[jn * n + inn].conj();
                let gx = 0.5 * (a + c);
                let gy = (a - c) * C64::new(0.0, -0.5);
                out[j * n + i] = -I * (gx * self.k[i] + gy * self.k[j]);
            }
        }
    }

    pub fn precondition(&self, r: &[C64], z: &mut [C64]) {
        let n = self.grid.n();
        for j in 0..n {
            for i in 0..n {
                let k2 = self.k[i] * self.k[i] + self.k[j] * self.k[j];
                let idx = j * n + i;
                z[idx] = if k2 > 0.0 {
                    r[idx] * (self.rho_ref / k2)
                } else {
                    ZERO
                };
            }
        }
    }
}

/// Remove the four modes annihilated by the spectral gradient (mean and the
/// Nyquist checkerboards).
pub(crate) fn project_null_modes(grid: &Grid, s: &mut [C64]) {
    let n = grid.n();
    let h = n / 2;
    for j in [0, h] {
        for i in [0, h] {
            s[j * n + i] = ZERO;
        }
    }
}

/// Solve `div((1/ρ) ∇ P) = rhs` for `P` given as a spectrum; `rhs_hat` is the
/// spectrum of the right-hand side. Returns the spectrum of `P`.
pub(crate) fn pressure_spectral(
    rho: &ScalarField,
    rho_ref: f64,
    rhs_hat: &[C64],
    guess: Option<&[C64]>,
    tol: f64,
) -> Result<(Vec<C64>, SolveStats)> {
    let grid = *rho.grid();
    let op = PressureOperator::new(rho, rho_ref);
    let mut b: Vec<C64> = rhs_hat.iter().map(|v| -v).collect();
    project_null_modes(&grid, &mut b);
    let mut x = match guess {
        Some(g) => g.to_vec(),
        None => vec![ZERO; grid.len()],
    };
    project_null_modes(&grid, &mut x);
    let stats = pcg(
        |p, o| op.apply(p, o),
        |r, z| op.precondition(r, z),
        &b,
        &mut x,
        tol,
        10 * grid.n(),
        "pressure solve",
    )?;
    Ok((x, stats))
}

/// Public pressure solve on physical fields: `div((1/ρ) ∇ P) = rhs` with the
/// constant-density Fourier preconditioner at `1 + ε/2`, `ε = min ρ`.
/// Components of `rhs` in the Nyquist checkerboard modes lie outside the range
/// of the operator and are discarded; the mean must vanish.
pub fn solve_pressure(rho: &ScalarField, rhs: &ScalarField, tol: f64) -> Result<ScalarField> {
    if rho.grid() != rhs.grid() {
        return Err(Error::GridMismatch);
    }
    rho.check_finite()?;
    rhs.check_finite()?;
    let floor = rho.min();
    if !(floor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "density must be positive, min ρ = {floor:e}"
        )));
    }
    let scale = rhs.max_abs().max(f64::MIN_POSITIVE);
    if rhs.mean().abs() > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "pressure right-hand side must be mean-free, mean = {:e}",
            rhs.mean()
        )));
    }
    let grid = *rho.grid();
    let e = engine_for(&grid);
    let rhs_hat = e.forward_real(rhs.values());
    let (p_hat, _) = pressure_spectral(rho, 1.0 + 0.5 * floor, &rhs_hat, None, tol)?;
    Ok(ScalarField::from_raw(grid, e.inverse_real(p_hat)))
}

/// `ρ z − α Δ z` on packed velocity spectra.
pub(crate) struct DiffusionOperator {
    grid: Grid,
    rho: Vec<f64>,
    alpha: f64,
    k2: Vec<f64>,
    rho_ref: f64,
}

impl DiffusionOperator {
    pub fn new(rho: &ScalarField, alpha: f64) -> Self {
        let grid = *rho.grid();
        let n = grid.n();
        let mut k2 = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..n {
                let (kx, ky) = (grid.wavenumber(i), grid.wavenumber(j));
                k2[j * n + i] = kx * kx + ky * ky;
            }
        }
        let rho_ref = rho.mean();
        Self {
            grid,
            rho: rho.values().to_vec(),
            alpha,
            k2,
            rho_ref,
        }
    }

    pub fn apply(&self, z: &[C64], out: &mut [C64]) {
        let e = engine_for(&self.grid);
        let mut w = z.to_vec();
        e.inverse(&mut w);
        for (v, r) in w.iter_mut().zip(&self.rho) {
            *v *= *r;
        }
        e.forward(&mut w);
        for k in 0..w.len() {
            out[k] = w[k] + z[k] * (self.alpha * self.k2[k]);
        }
    }

    pub fn precondition(&self, r: &[C64], z: &mut [C64]) {
        for k in 0..r.len() {
            z[k] = r[k] / (self.rho_ref + self.alpha * self.k2[k]);
        }
    }
}

/// Packed spectrum of a vector field.
pub(crate) fn pack(v: &VectorField) -> Vec<C64> {
    let mut z: Vec<C64> = v
        .x()
        .iter()
        .zip(v.y())
        .map(|(&a, &b)| C64::new(a, b))
        .collect();
    engine_for(v.grid()).forward(&mut z);
    z
}

pub(crate) fn unpack(grid: &Grid, mut z: Vec<C64>) -> VectorField {
    engine_for(grid).inverse(&mut z);
    let (x, y) = z.iter().map(|c| (c.re, c.im)).unzip();
    VectorField::from_raw(*grid, x, y)
}

/// Solve `ρ u − α Δ u = r` for the packed velocity.
pub(crate) fn diffusion_solve(
    rho: &ScalarField,
    alpha: f64,
    rhs: &VectorField,
    guess: &VectorField,
    tol: f64,
) -> Result<(VectorField, SolveStats)> {
    let grid = *rho.grid();
    let op = DiffusionOperator::new(rho, alpha);
    let b = pack(rhs);
    let mut x = pack(guess);
    let stats = pcg(
        |p, o| op.apply(p, o),
        |r, z| op.precondition(r, z),
        &b,
        &mut x,
        tol,
        20 * grid.n(),
        "diffusion solve",
    )?;
    Ok((unpack(&grid, x), stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::ops::{divergence, gradient};

    fn bump(g: Grid, eps: f64) -> ScalarField {
        ScalarField::from_fn(g, |x, y| {
            eps + 1.0 / (1.0 + ((x * x + y * y).sqrt() - 1.0).mul_add(8.0, 0.0).exp())
        })
        .unwrap()
    }

    #[test]
    fn uniform_density_is_a_poisson_solve() {
        let g = Grid::new(32, 2.0 * std::f64::consts::PI).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let rhs = ScalarField::from_fn(g, |x, y| -2.0 * x.sin() * y.cos()).unwrap();
        let p = solve_pressure(&rho, &rhs, 1e-10).unwrap();
        let exact = ScalarField::from_fn(g, |x, y| x.sin() * y.cos()).unwrap();
        let err = p
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn manufactured_variable_density() {
        let g = Grid::new(64, 6.0).unwrap();
        let rho = bump(g, 0.05);
        let k = 2.0 * std::f64::consts::PI / 6.0;
        let pstar =
            ScalarField::from_fn(g, |x, y| ((k * x).sin() + 0.5 * (2.0 * k * y).cos()).exp())
                .unwrap();
        let grad = gradient(&pstar).unwrap();
        let beta = rho.map(|r| 1.0 / r);
        let rhs = divergence(&grad.weighted(&beta).unwrap()).unwrap();
        let p = solve_pressure(&rho, &rhs, 1e-10).unwrap();
        let shift = pstar.mean() - p.mean();
        let err = p
            .values()
            .iter()
            .zip(pstar.values())
            .map(|(a, b)| (a + shift - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
    }

    #[test]
    fn non_mean_free_rhs_is_rejected() {
        let g = Grid::new(16, 1.0).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let rhs = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solve_pressure(&rho, &rhs, 1e-10),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn diffusion_solve_residual() {
        let g = Grid::new(32, 4.0).unwrap();
        let rho = bump(g, 0.01);
        let r = VectorField::from_fn(g, |x, y| [(-(x * x + y * y)).exp(), x.sin() * 0.1]).unwrap();
        let (u, _) = diffusion_solve(&rho, 0.01, &r, &VectorField::zeros(g), 1e-12).unwrap();
        let lap = crate::fields::ops::laplacian(&u.component(crate::fields::Axis::X)).unwrap();
        let res = (0..g.len())
            .map(|k| (rho.values()[k] * u.x()[k] - 0.01 * lap.values()[k] - r.x()[k]).abs())
            .fold(0.0, f64::max);
        assert!(res < 1e-10, "{res}");
    }
}
