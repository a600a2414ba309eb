use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform periodic grid on the box `[-L/2, L/2)²`.
///
/// Nodes sit at cell centres `x_i = -L/2 + (i + 1/2) h`; arrays are stored
/// row-major with `index = j * n + i` (`j` along y, `i` along x).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    box_length: f64,
}

impl Grid {
    pub fn new(n: usize, box_length: f64) -> Result<Self> {
        if n < 16 || n % 2 != 0 {
            return Err(invalid(format!(
                "grid size must be even and >= 16, got {n}"
            )));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(invalid(format!(
                "box length must be positive, got {box_length}"
            )));
        }
        Ok(Self { n, box_length })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    #[inline]
    pub fn spacing(&self) -> f64 {
        self.box_length / self.n as f64
    }

    #[inline]
    pub fn cell_area(&self) -> f64 {
        let h = self.spacing();
        h * h
    }

    /// Number of nodes, `n²`.
    #[inline]
    pub fn len(&self) -> usize {
        self.n * self.n
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        -0.5 * self.box_length + (i as f64 + 0.5) * self.spacing()
    }

    #[inline]
    pub fn point(&self, index: usize) -> [f64; 2] {
        [self.coord(index % self.n), self.coord(index / self.n)]
    }

    /// Signed mode number for FFT index `i`; the Nyquist index maps to `+n/2`.
    #[inline]
    pub fn mode(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Physical wavenumber `2π m / L` for FFT index `i`.
    #[inline]
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * std::f64::consts::PI * self.mode(i) as f64 / self.box_length
    }

    /// Wavenumber used by first-derivative multipliers: zero at Nyquist so that
    /// derivatives of real fields stay real.
    #[inline]
    pub fn derivative_wavenumber(&self, i: usize) -> f64 {
        if i == self.n / 2 {
            0.0
        } else {
            self.wavenumber(i)
        }
    }

    #[inline]
    pub fn is_nyquist(&self, i: usize) -> bool {
        i == self.n / 2
    }

    /// Index of the mode `-k` for FFT index `i`.
    #[inline]
    pub fn negate(&self, i: usize) -> usize {
        (self.n - i) % self.n
    }

    /// Wrap a physical coordinate into the box.
    pub fn wrap(&self, x: f64) -> f64 {
        let l = self.box_length;
        (x + 0.5 * l).rem_euclid(l) - 0.5 * l
    }

    /// Shortest periodic displacement from `a` to `b` along one axis.
    pub fn periodic_delta(&self, a: f64, b: f64) -> f64 {
        let l = self.box_length;
        let d = (b - a).rem_euclid(l);
        if d > 0.5 * l {
            d - l
        } else {
            d
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd() {
        assert!(Grid::new(8, 1.0).is_err());
        assert!(Grid::new(17, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
        assert!(Grid::new(16, 1.0).is_ok());
    }

    #[test]
    fn spacing_times_n_is_box() {
        let g = Grid::new(128, 2.0 * std::f64::consts::PI).unwrap();
        assert_eq!(g.spacing() * g.n() as f64, g.box_length());
        assert!((g.coord(0) + g.box_length() / 2.0 - g.spacing() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn modes_are_fft_ordered() {
        let g = Grid::new(16, 1.0).unwrap();
        let m: Vec<i64> = (0..16).map(|i| g.mode(i)).collect();
        assert_eq!(
            m,
            vec![0, 1, 2, 3, 4, 5, 6, 7, 8, -7, -6, -5, -4, -3, -2, -1]
        );
        assert_eq!(g.derivative_wavenumber(8), 0.0);
        assert_eq!(g.negate(0), 0);
        assert_eq!(g.negate(3), 13);
    }
}
