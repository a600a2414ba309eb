//! Sharp dyadic decomposition, `Ḃ^s_{2,1}` norms, balanced atoms, the
//! dynamic-interpolation bound and the localized Gagliardo–Nirenberg check.

mod dynamic;
mod gn;

pub use dynamic::{
    dynamic_interpolation_bound, heat_envelope, heat_gradient_integral, heat_gradient_sup,
    l2_critical_constant, Envelope,
};
pub use gn::{localized_gn_check, GnSweep};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::spectral::{engine_for, C64};
use crate::fields::{sobolev_norm, Grid, ScalarField, VectorField};

/// Dyadic shell of FFT mode `(i, j)`: `2^m ≤ |k| L / 2π < 2^{m+1}`, `None` for `k = 0`.
pub fn shell_of(grid: &Grid, i: usize, j: usize) -> Option<i32> {
    let (mx, my) = (grid.mode(i) as f64, grid.mode(j) as f64);
    let r2 = mx * mx + my * my;
    if r2 == 0.0 {
        return None;
    }
    // integer radii squared: compare against powers of four exactly
    let mut m = 0i32;
    while 4f64.powi(m + 1) <= r2 {
        m += 1;
    }
    Some(m)
}

/// Largest shell index present on the grid.
pub fn max_shell(grid: &Grid) -> i32 {
    let h = (grid.n() / 2) as f64;
    ((2.0 * h * h).log2() / 2.0).floor() as i32
}

/// Physical radius `2π 2^m / L` of shell `m`.
pub fn shell_radius(grid: &Grid, m: i32) -> f64 {
    2.0 * std::f64::consts::PI * 2f64.powi(m) / grid.box_length()
}

fn require_mean_free(v: &VectorField) -> Result<()> {
    let mean = v.mean();
    let scale = v.max_magnitude().max(f64::MIN_POSITIVE);
    if mean[0].abs().max(mean[1].abs()) > 1e-12 * scale {
        return Err(Error::InvalidParameter(format!(
            "field must be mean-free, mean = ({:e}, {:e})",
            mean[0], mean[1]
        )));
    }
    Ok(())
}

/// All dyadic blocks `m = 0..=max_shell` in one pass.
pub fn dyadic_blocks(v: &VectorField) -> Result<Vec<VectorField>> {
    require_mean_free(v)?;
    let g = *v.grid();
    let n = g.n();
    let e = engine_for(&g);
    let (sx, sy) = e.forward_pair(v.x(), v.y());
    let top = max_shell(&g);
    let shells: Vec<Option<i32>> = (0..g.len()).map(|k| shell_of(&g, k % n, k / n)).collect();
    let mut out = Vec::with_capacity(top as usize + 1);
    for m in 0..=top {
        let mut bx = vec![C64::new(0.0, 0.0); g.len()];
        let mut by = vec![C64::new(0.0, 0.0); g.len()];
        for k in 0..g.len() {
            if shells[k] == Some(m) {
                bx[k] = sx[k];
                by[k] = sy[k];
            }
        }
        let (x, y) = e.inverse_pair(&bx, &by);
        out.push(VectorField::new(g, x, y)?);
    }
    Ok(out)
}

/// Sharp annulus restriction of `v` to shell `m`.
pub fn dyadic_block(v: &VectorField, m: i32) -> Result<VectorField> {
    require_mean_free(v)?;
    let g = *v.grid();
    let n = g.n();
    let e = engine_for(&g);
    let (mut sx, mut sy) = e.forward_pair(v.x(), v.y());
    for k in 0..g.len() {
        if shell_of(&g, k % n, k / n) != Some(m) {
            sx[k] = C64::new(0.0, 0.0);
            sy[k] = C64::new(0.0, 0.0);
        }
    }
    let (x, y) = e.inverse_pair(&sx, &sy);
    VectorField::new(g, x, y)
}

fn l2(v: &VectorField) -> Result<f64> {
    Ok(v.dot(v)?.sqrt())
}

/// `Σ_m (2π 2^m / L)^s ‖Δ_m v‖₂`.
pub fn besov_norm(v: &VectorField, s: f64) -> Result<f64> {
    let g = *v.grid();
    let blocks = dyadic_blocks(v)?;
    let mut acc = 0.0;
    for (m, b) in blocks.iter().enumerate() {
        acc += shell_radius(&g, m as i32).powf(s) * l2(b)?;
    }
    Ok(acc)
}

#[derive(Clone, Debug)]
pub struct Atom {
    pub shell: i32,
    /// Balancing index `2η log₂(2π 2^m / L)`.
    pub j: f64,
    pub field: VectorField,
    pub l2: f64,
    /// Shell-scale norms `κ_m^{±η} ‖block‖₂`, for which the two halves of
    /// `c_j` balance exactly at index `j`.
    pub h_eta_norm: f64,
    pub h_minus_eta_norm: f64,
    /// True homogeneous Sobolev norms of the block, for reference.
    pub h_eta_exact: f64,
    pub h_minus_eta_exact: f64,
    pub c_j: f64,
    pub momentum: Option<[f64; 2]>,
}

impl Atom {
    /// `2^{−j/2} ‖·‖_{Ḣ^η}` and `2^{j/2} ‖·‖_{Ḣ^{−η}}`.
    pub fn balance_terms(&self) -> (f64, f64) {
        (
            2f64.powf(-self.j / 2.0) * self.h_eta_norm,
            2f64.powf(self.j / 2.0) * self.h_minus_eta_norm,
        )
    }
}

#[derive(Clone, Debug)]
pub struct Decomposition {
    pub eta: f64,
    pub atoms: Vec<Atom>,
    /// Retained shells `[m_min, m_max]`.
    pub truncation: (i32, i32),
    pub besov_norm: f64,
}

/// One atom per non-empty shell. Shells whose L² mass is below `1e-14` of the
/// total are dropped; `truncation` records the retained range.
pub fn atomic_decompose(u0: &VectorField, eta: f64) -> Result<Decomposition> {
    if !(eta > 0.0 && eta < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "eta must lie in (0, 1/2), got {eta}"
        )));
    }
    let g = *u0.grid();
    let blocks = dyadic_blocks(u0)?;
    let masses: Vec<f64> = blocks.iter().map(l2).collect::<Result<_>>()?;
    let total: f64 = masses.iter().map(|m| m * m).sum::<f64>().sqrt();
    let mut atoms = Vec::new();
    for (m, (b, &mass)) in blocks.into_iter().zip(&masses).enumerate() {
        if mass <= 1e-14 * total {
            continue;
        }
        let m = m as i32;
        let kappa = shell_radius(&g, m);
        let j = 2.0 * eta * kappa.log2();
        let h_eta_exact = sobolev_norm(&b, eta)?;
        let h_minus_eta_exact = sobolev_norm(&b, -eta)?;
        atoms.push(Atom {
            shell: m,
            j,
            l2: mass,
            h_eta_norm: kappa.powf(eta) * mass,
            h_minus_eta_norm: kappa.powf(-eta) * mass,
            h_eta_exact,
            h_minus_eta_exact,
            c_j: 2.0 * mass,
            field: b,
            momentum: None,
        });
    }
    let truncation = match (atoms.first(), atoms.last()) {
        (Some(a), Some(b)) => (a.shell, b.shell),
        _ => (0, -1),
    };
    Ok(Decomposition {
        eta,
        atoms,
        truncation,
        besov_norm: masses.iter().sum(),
    })
}

#[derive(Serialize, Deserialize)]
struct ShellReport {
    m: i32,
    j: f64,
    l2: f64,
    c_j: f64,
    #[serde(rename = "M_j")]
    m_j: Option<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct DecompositionReport {
    eta: f64,
    shells: Vec<ShellReport>,
    besov_norm: f64,
    sum_cj: f64,
}

impl Decomposition {
    pub fn sum_cj(&self) -> f64 {
        self.atoms.iter().map(|a| a.c_j).sum()
    }

    /// `M_j = |D|⁻¹ ∫ ρ₀ u_{0,j}` for every atom.
    pub fn with_momenta(mut self, rho0: &ScalarField, area: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::InvalidParameter(
                "patch area must be positive".into(),
            ));
        }
        for a in &mut self.atoms {
            let m = a.field.weighted(rho0)?.integral();
            a.momentum = Some([m[0] / area, m[1] / area]);
        }
        Ok(self)
    }

    /// Sum of the atom fields.
    pub fn reconstruct(&self) -> Option<VectorField> {
        let mut it = self.atoms.iter();
        let first = it.next()?.field.clone();
        Some(it.fold(first, |acc, a| {
            acc.add(&a.field).expect("atoms share a grid")
        }))
    }

    pub fn to_json(&self) -> Result<String> {
        let r = DecompositionReport {
            eta: self.eta,
            shells: self
                .atoms
                .iter()
                .map(|a| ShellReport {
                    m: a.shell,
                    j: a.j,
                    l2: a.l2,
                    c_j: a.c_j,
                    m_j: a.momentum,
                })
                .collect(),
            besov_norm: self.besov_norm,
            sum_cj: self.sum_cj(),
        };
        Ok(serde_json::to_string_pretty(&r)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn mode(g: Grid, kx: f64, ky: f64, a: f64) -> VectorField {
        // stream function a sin(kx x + ky y)/|k| gives |u| = a |cos|
        let k = (kx * kx + ky * ky).sqrt();
        VectorField::from_fn(g, |x, y| {
            let c = (kx * x + ky * y).cos() * a / k;
            [-ky * c, kx * c]
        })
        .unwrap()
    }

    #[test]
    fn shells_partition_the_spectrum() {
        let g = Grid::new(32, 2.0 * PI).unwrap();
        assert_eq!(shell_of(&g, 0, 0), None);
        assert_eq!(shell_of(&g, 1, 0), Some(0));
        assert_eq!(shell_of(&g, 1, 1), Some(0));
        assert_eq!(shell_of(&g, 2, 0), Some(1));
        assert_eq!(shell_of(&g, 3, 0), Some(1));
        assert_eq!(shell_of(&g, 4, 0), Some(2));
        assert_eq!(max_shell(&g), 4);
    }

    #[test]
    fn single_mode_lives_in_one_shell() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let v = mode(g, 5.0, 0.0, 1.0);
        let blocks = dyadic_blocks(&v).unwrap();
        for (m, b) in blocks.iter().enumerate() {
            let e = b.dot(b).unwrap();
            if m == 2 {
                assert!((e - v.dot(&v).unwrap()).abs() < 1e-10);
            } else {
                assert!(e < 1e-20);
            }
        }
        assert!((besov_norm(&v, 0.0).unwrap() - v.dot(&v).unwrap().sqrt()).abs() < 1e-12);
    }

    #[test]
    fn blocks_sum_back_and_balance() {
        let g = Grid::new(64, 2.0 * PI).unwrap();
        let v = mode(g, 1.0, 2.0, 1.0)
            .add(&mode(g, 9.0, -3.0, 0.5))
            .unwrap()
            .add(&mode(g, 20.0, 4.0, 0.25))
            .unwrap();
        let d = atomic_decompose(&v, 0.3).unwrap();
        let r = d.reconstruct().unwrap();
        assert!(r.sub(&v).unwrap().max_magnitude() < 1e-12);
        assert!((d.sum_cj() - 2.0 * besov_norm(&v, 0.0).unwrap()).abs() < 1e-12);
        for a in &d.atoms {
            let (p, q) = a.balance_terms();
            assert!((p - q).abs() <= 1e-12 * p);
            assert!(a.h_eta_exact * a.h_minus_eta_exact >= a.l2 * a.l2 * (1.0 - 1e-12));
        }
    }

    #[test]
    fn nonzero_mean_rejected() {
        let g = Grid::new(16, 1.0).unwrap();
        assert!(atomic_decompose(&VectorField::constant(g, [1.0, 0.0]), 0.2).is_err());
    }
}
