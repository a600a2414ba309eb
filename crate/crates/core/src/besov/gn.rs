use crate::error::{Error, Result};
use crate::fields::ops::grad_l2_sq;
use crate::fields::{norm_lp, Mask, ScalarField, VectorField};
use crate::patch::{signed_distance_field, Patch};

/// Repeated localized Gagliardo–Nirenberg evaluations against one patch,
/// sharing the signed-distance field.
pub struct GnSweep {
    distance: ScalarField,
}

impl GnSweep {
    pub fn new(patch: &Patch, grid: &crate::fields::Grid) -> Self {
        Self {
            distance: signed_distance_field(patch, grid),
        }
    }

    /// `D + B_r` as a cell mask.
    pub fn region(&self, r: f64) -> Mask {
        let g = *self.distance.grid();
        Mask::new(g, self.distance.values().iter().map(|&d| d <= r).collect())
            .expect("grid-sized mask")
    }

    /// `(t^{1/2−1/p} ‖v‖_{Lᵖ(D + B_{R√t})}, t^{1/2} ‖∇v‖₂ + ‖ρv‖₂)`.
    pub fn check(
        &self,
        v: &VectorField,
        rho: &ScalarField,
        t: f64,
        p: f64,
        r: f64,
    ) -> Result<(f64, f64)> {
        if p.is_nan() || p < 2.0 || p.is_infinite() {
            return Err(Error::InvalidParameter(format!(
                "p must lie in [2, ∞), got {p}"
            )));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "t must be positive, got {t}"
            )));
        }
        if !(r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "R must be non-negative, got {r}"
            )));
        }
        if v.grid() != self.distance.grid() || rho.grid() != v.grid() {
            return Err(Error::GridMismatch);
        }
        let region = self.region(r * t.sqrt());
        let lhs = t.powf(0.5 - 1.0 / p) * norm_lp(v, p, Some(&region))?;
        let rv = v.weighted(rho)?;
        let rhs = t.sqrt() * grad_l2_sq(v)?.sqrt() + rv.dot(&rv)?.sqrt();
        Ok((lhs, rhs))
    }
}

/// One-off [`GnSweep::check`].
pub fn localized_gn_check(
    v: &VectorField,
    rho: &ScalarField,
    patch: &Patch,
    t: f64,
    p: f64,
    r: f64,
) -> Result<(f64, f64)> {
    GnSweep::new(patch, v.grid()).check(v, rho, t, p, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::Grid;
    use crate::patch::rasterize;

    #[test]
    fn constant_field_matches_areas() {
        let g = Grid::new(128, 8.0).unwrap();
        let d = Patch::disk([0.0, 0.0], 1.0, 0.05).unwrap();
        let rho = rasterize(&d, &g, 0.0).unwrap();
        let v = VectorField::constant(g, [0.6, 0.8]);
        let sweep = GnSweep::new(&d, &g);
        for &(t, p) in &[(0.05, 2.0), (0.5, 4.0), (1.0, 8.0)] {
            let (lhs, rhs) = sweep.check(&v, &rho, t, p, 1.0).unwrap();
            let area = sweep.region(t.sqrt()).area();
            assert!((lhs - t.powf(0.5 - 1.0 / p) * area.powf(1.0 / p)).abs() < 1e-12);
            assert!(rhs >= 0.95 * std::f64::consts::PI.sqrt());
        }
    }

    #[test]
    fn field_outside_region_is_invisible() {
        let g = Grid::new(64, 8.0).unwrap();
        let d = Patch::disk([0.0, 0.0], 1.0, 0.05).unwrap();
        let rho = ScalarField::constant(g, 1.0);
        let v = VectorField::from_fn(g, |x, _| {
            if x.abs() > 3.0 {
                [1.0, 0.0]
            } else {
                [0.0, 0.0]
            }
        })
        .unwrap();
        let (lhs, _) = localized_gn_check(&v, &rho, &d, 0.25, 4.0, 1.0).unwrap();
        assert_eq!(lhs, 0.0);
    }

    #[test]
    fn small_p_rejected() {
        let g = Grid::new(32, 8.0).unwrap();
        let d = Patch::disk([0.0, 0.0], 1.0, 0.1).unwrap();
        let v = VectorField::zeros(g);
        assert!(localized_gn_check(&v, &ScalarField::constant(g, 1.0), &d, 0.1, 1.5, 1.0).is_err());
    }
}
