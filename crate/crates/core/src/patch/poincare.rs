use super::{rasterize, Patch};
use crate::error::{Error, Result};
use crate::fields::Grid;

/// Five-point Neumann Laplacian restricted to a set of cells. Only pairs of
/// neighbouring cells that both belong to the set exchange flux.
pub struct NeumannLaplacian {
    inv_h2: f64,
    neighbours: Vec<[u32; 4]>,
    degree: Vec<u8>,
}

const NONE: u32 = u32::MAX;

/// Operator on the cells where `inside` holds, in row-major order of those cells.
pub fn neumann_laplacian(grid: &Grid, inside: &[bool]) -> NeumannLaplacian {
    let n = grid.n();
    let mut id = vec![NONE; grid.len()];
    let mut count = 0u32;
    for (k, &c) in inside.iter().enumerate() {
        if c {
            id[k] = count;
            count += 1;
        }
    }
    let mut neighbours = Vec::with_capacity(count as usize);
    let mut degree = Vec::with_capacity(count as usize);
    for j in 0..n {
        for i in 0..n {
            let k = j * n + i;
            if !inside[k] {
                continue;
            }
            let cand = [
                (i > 0).then(|| k - 1),
                (i + 1 < n).then(|| k + 1),
                (j > 0).then(|| k - n),
                (j + 1 < n).then(|| k + n),
            ];
            let mut nb = [NONE; 4];
            let mut d = 0u8;
            for (s, c) in cand.iter().enumerate() {
                if let Some(c) = *c {
                    if inside[c] {
                        nb[s] = id[c];
                        d += 1;
                    }
                }
            }
            neighbours.push(nb);
            degree.push(d);
        }
    }
    let h = grid.spacing();
    NeumannLaplacian {
        inv_h2: 1.0 / (h * h),
        neighbours,
        degree,
    }
}

impl NeumannLaplacian {
    pub fn len(&self) -> usize {
        self.degree.len()
    }

    pub fn is_empty(&self) -> bool {
        self.degree.is_empty()
    }

    /// `y = −Δ_N x` (positive semi-definite).
    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (c, nb) in self.neighbours.iter().enumerate() {
            let mut acc = self.degree[c] as f64 * x[c];
            for &m in nb {
                if m != NONE {
                    acc -= x[m as usize];
                }
            }
            y[c] = acc * self.inv_h2;
        }
    }

    /// Dense matrix, for small verification problems.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let m = self.len();
        let mut a = vec![vec![0.0; m]; m];
        for (c, nb) in self.neighbours.iter().enumerate() {
            a[c][c] = self.degree[c] as f64 * self.inv_h2;
            for &k in nb {
                if k != NONE {
                    a[c][k as usize] -= self.inv_h2;
                }
            }
        }
        a
    }
}

#[derive(Clone, Copy, Debug)]
pub struct PoincareOptions {
    pub max_outer: usize,
    pub tolerance: f64,
}

impl Default for PoincareOptions {
    fn default() -> Self {
        Self {
            max_outer: 400,
            tolerance: 1e-10,
        }
    }
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `L x = b` on the mean-zero subspace by conjugate gradients.
fn cg(op: &NeumannLaplacian, b: &[f64], x: &mut [f64], tol: f64, max_iter: usize) -> f64 {
    let m = b.len();
    let mut r = vec![0.0; m];
    let mut ap = vec![0.0; m];
    op.apply(x, &mut ap);
    for i in 0..m {
        r[i] = b[i] - ap[i];
    }
    remove_mean(&mut r);
    let bnorm = dot(b, b).sqrt().max(f64::MIN_POSITIVE);
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        if rr.sqrt() <= tol * bnorm {
            break;
        }
        op.apply(&p, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..m {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        remove_mean(&mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..m {
            p[i] = r[i] + beta * p[i];
        }
    }
    remove_mean(x);
    rr.sqrt() / bnorm
}

pub fn poincare_constant(patch: &Patch, grid: &Grid) -> Result<f64> {
    poincare_constant_with(patch, grid, PoincareOptions::default())
}

/// `1/√μ₁` for the first nonzero Neumann eigenvalue of the rasterised patch,
/// by block inverse iteration on the mean-zero subspace with a two-vector
/// Rayleigh–Ritz step. Two vectors keep the rate at `μ₁/μ₃` when the first
/// pair is (nearly) degenerate, as on a disk.
pub fn poincare_constant_with(patch: &Patch, grid: &Grid, opts: PoincareOptions) -> Result<f64> {
    let ind = rasterize(patch, grid, 0.0)?;
    let inside: Vec<bool> = ind.values().iter().map(|&v| v > 0.5).collect();
    let op = neumann_laplacian(grid, &inside);
    let m = op.len();
    if m < 4 {
        return Err(Error::Geometry("patch covers fewer than 4 cells".into()));
    }
    let start = |f: &dyn Fn(f64, f64) -> f64| -> Vec<f64> {
        let mut v: Vec<f64> = (0..grid.len())
            .filter(|&k| inside[k])
            .map(|k| {
                let [x, y] = grid.point(k);
                f(x, y)
            })
            .collect();
        remove_mean(&mut v);
        v
    };
    let mut a = start(&|x, y| x + 0.7 * y + 0.1 * x * y);
    let mut b = start(&|x, y| y - 0.3 * x + 0.05 * (x * x - y * y));
    let (mut la, mut lb) = (vec![0.0; m], vec![0.0; m]);
    let mut mu_old = f64::INFINITY;
    let mut residual = f64::INFINITY;
    let cg_budget = 20 * m.max(100);
    for _ in 0..opts.max_outer {
        let mut ga = a.clone();
        let mut gb = b.clone();
        cg(&op, &a, &mut ga, 1e-12, cg_budget);
        cg(&op, &b, &mut gb, 1e-12, cg_budget);
        // orthonormalize
        let na = dot(&ga, &ga).sqrt();
        ga.iter_mut().for_each(|v| *v /= na);
        let p = dot(&ga, &gb);
        gb.iter_mut().zip(&ga).for_each(|(v, w)| *v -= p * w);
        let nb = dot(&gb, &gb).sqrt();
        gb.iter_mut().for_each(|v| *v /= nb);
        op.apply(&ga, &mut la);
        op.apply(&gb, &mut lb);
        // Ritz pair of the 2×2 projection
        let (h11, h12, h22) = (dot(&ga, &la), dot(&ga, &lb), dot(&gb, &lb));
        let mean = 0.5 * (h11 + h22);
        let rad = (0.25 * (h11 - h22).powi(2) + h12 * h12).sqrt();
        let mu = mean - rad;
        let (c, s) = if h12.abs() > 0.0 {
            let (x, y) = (h12, mu - h11);
            let n = x.hypot(y);
            (x / n, y / n)
        } else if h11 <= h22 {
            (1.0, 0.0)
        } else {
            (0.0, 1.0)
        };
        a = ga.iter().zip(&gb).map(|(u, v)| c * u + s * v).collect();
        b = ga.iter().zip(&gb).map(|(u, v)| -s * u + c * v).collect();
        let lr: Vec<f64> = la.iter().zip(&lb).map(|(u, v)| c * u + s * v).collect();
        residual = lr
            .iter()
            .zip(&a)
            .map(|(l, v)| (l - mu * v).powi(2))
            .sum::<f64>()
            .sqrt()
            / mu;
        if residual <= 1e-7 || ((mu - mu_old).abs() <= opts.tolerance * mu && residual < 1e-4) {
            return Ok(1.0 / mu.sqrt());
        }
        mu_old = mu;
    }
    Err(Error::NotConverged {
        solver: "neumann eigenvalue",
        residual,
        iterations: opts.max_outer,
    })
}

/// `C_D` on a 256² grid just covering the patch, independent of any flow grid.
pub fn fine_poincare_constant(patch: &Patch) -> Result<f64> {
    let b = patch.bounding_box();
    let c = [0.5 * (b[0] + b[1]), 0.5 * (b[2] + b[3])];
    let side = 1.1 * (b[1] - b[0]).max(b[3] - b[2]);
    let g = Grid::new(256, side)?;
    poincare_constant(&patch.translated([-c[0], -c[1]]), &g)
}
