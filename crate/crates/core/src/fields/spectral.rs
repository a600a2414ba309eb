//! Two-dimensional FFT engine with a per-size plan cache.
//!
//! Real fields are transformed two at a time by packing them into the real
//! and imaginary parts of one complex array.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::grid::Grid;

pub type C64 = Complex64;

pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

static ENGINES: OnceLock<Mutex<HashMap<usize, Arc<Spectral>>>> = OnceLock::new();

/// Shared FFT engine for grids with `n` cells per axis.
pub fn engine(n: usize) -> Arc<Spectral> {
    let cache = ENGINES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().expect("fft plan cache poisoned");
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            Arc::new(Spectral {
                n,
                forward: planner.plan_fft_forward(n),
                inverse: planner.plan_fft_inverse(n),
            })
        })
        .clone()
}

pub fn engine_for(grid: &Grid) -> Arc<Spectral> {
    engine(grid.n())
}

fn transpose(data: &mut [C64], n: usize) {
    for j in 0..n {
        for i in (j + 1)..n {
            data.swap(j * n + i, i * n + j);
        }
    }
}

impl Spectral {
    fn run(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [C64]) {
        let n = self.n;
        debug_assert_eq!(data.len(), n * n);
        let mut scratch = vec![C64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
        plan.process_with_scratch(data, &mut scratch);
        transpose(data, n);
    }

    /// Unnormalised forward transform, in place.
    pub fn forward(&self, data: &mut [C64]) {
        self.run(&self.forward, data);
    }

    /// Inverse transform including the `1/n²` normalisation, in place.
    pub fn inverse(&self, data: &mut [C64]) {
        self.run(&self.inverse, data);
        let s = 1.0 / (self.n * self.n) as f64;
        for z in data.iter_mut() {
            *z *= s;
        }
    }

    pub fn forward_real(&self, a: &[f64]) -> Vec<C64> {
        let mut z: Vec<C64> = a.iter().map(|&x| C64::new(x, 0.0)).collect();
        self.forward(&mut z);
        z
    }

    /// Spectra of two real arrays from a single complex transform.
    pub fn forward_pair(&self, a: &[f64], b: &[f64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.n;
        let mut z: Vec<C64> = a.iter().zip(b).map(|(&x, &y)| C64::new(x, y)).collect();
        self.forward(&mut z);
        let mut ah = vec![C64::new(0.0, 0.0); n * n];
        let mut bh = vec![C64::new(0.0, 0.0); n * n];
        for j in 0..n {
            let jn = (n - j) % n;
            for i in 0..n {
                let inn = (n - i) % n;
                let zk = z[j * n + i];
                let zm = z[jn * n + inn].conj();
                ah[j * n + i] = 0.5 * (zk + zm);
                let d = zk - zm;
                bh[j * n + i] = C64::new(0.5 * d.im, -0.5 * d.re);
            }
        }
        (ah, bh)
    }

    /// Real part of the inverse transform. The spectrum is assumed Hermitian.
    pub fn inverse_real(&self, mut ah: Vec<C64>) -> Vec<f64> {
        self.inverse(&mut ah);
        ah.into_iter().map(|z| z.re).collect()
    }

    /// Inverse of two Hermitian spectra with one complex transform.
    pub fn inverse_pair(&self, ah: &[C64], bh: &[C64]) -> (Vec<f64>, Vec<f64>) {
        let mut z: Vec<C64> = ah
            .iter()
            .zip(bh)
            .map(|(a, b)| C64::new(a.re - b.im, a.im + b.re))
            .collect();
        self.inverse(&mut z);
        let a = z.iter().map(|c| c.re).collect();
        let b = z.iter().map(|c| c.im).collect();
        (a, b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(n: usize, seed: u64) -> Vec<f64> {
        let mut s = seed;
        (0..n * n)
            .map(|_| {
                s = s
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
            })
            .collect()
    }

    #[test]
    fn pair_transform_matches_single() {
        let n = 16;
        let e = engine(n);
        let a = sample(n, 1);
        let b = sample(n, 2);
        let (ah, bh) = e.forward_pair(&a, &b);
        let a1 = e.forward_real(&a);
        let b1 = e.forward_real(&b);
        for k in 0..n * n {
            assert!((ah[k] - a1[k]).norm() < 1e-12);
            assert!((bh[k] - b1[k]).norm() < 1e-12);
        }
        let (a2, b2) = e.inverse_pair(&ah, &bh);
        for k in 0..n * n {
            assert!((a2[k] - a[k]).abs() < 1e-13);
            assert!((b2[k] - b[k]).abs() < 1e-13);
        }
    }

    #[test]
    fn roundtrip() {
        let n = 32;
        let e = engine(n);
        let a = sample(n, 7);
        let back = e.inverse_real(e.forward_real(&a));
        let err = a
            .iter()
            .zip(&back)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-13);
    }
}
