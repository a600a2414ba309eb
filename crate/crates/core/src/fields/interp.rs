//! Periodic bicubic interpolation of nodal fields (Keys kernel, `a = −1/2`).

use super::field::{ScalarField, VectorField};
use super::grid::Grid;
use super::spectral::{engine_for, C64};

#[inline]
fn weights(t: f64) -> [f64; 4] {
    // Catmull–Rom weights for offsets -1, 0, 1, 2
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

#[inline]
fn stencil(grid: &Grid, p: [f64; 2]) -> ([usize; 4], [usize; 4], [f64; 4], [f64; 4]) {
    let n = grid.n() as isize;
    let h = grid.spacing();
    let half = 0.5 * grid.box_length();
    let sx = (p[0] + half) / h - 0.5;
    let sy = (p[1] + half) / h - 0.5;
    let fx = sx.floor();
    let fy = sy.floor();
    let (i0, j0) = (fx as isize, fy as isize);
    let ix = [-1, 0, 1, 2].map(|o| (i0 + o).rem_euclid(n) as usize);
    let iy = [-1, 0, 1, 2].map(|o| (j0 + o).rem_euclid(n) as usize);
    (ix, iy, weights(sx - fx), weights(sy - fy))
}

#[inline]
fn eval(
    values: &[f64],
    n: usize,
    ix: &[usize; 4],
    iy: &[usize; 4],
    wx: &[f64; 4],
    wy: &[f64; 4],
) -> f64 {
    let mut acc = 0.0;
    for b in 0..4 {
        let row = iy[b] * n;
        let mut r = 0.0;
        for a in 0..4 {
            r += wx[a] * values[row + ix[a]];
        }
        acc += wy[b] * r;
    }
    acc
}

/// Value at an arbitrary (unwrapped) point.
pub fn interpolate_scalar(f: &ScalarField, p: [f64; 2]) -> f64 {
    let g = f.grid();
    let (ix, iy, wx, wy) = stencil(g, p);
    eval(f.values(), g.n(), &ix, &iy, &wx, &wy)
}

pub fn interpolate_vector(v: &VectorField, p: [f64; 2]) -> [f64; 2] {
    let g = v.grid();
    let (ix, iy, wx, wy) = stencil(g, p);
    [
        eval(v.x(), g.n(), &ix, &iy, &wx, &wy),
        eval(v.y(), g.n(), &ix, &iy, &wx, &wy),
    ]
}

/// `(1 − θ) a(p) + θ b(p)` with a shared stencil.
pub fn interpolate_vector_blend(
    a: &VectorField,
    b: &VectorField,
    theta: f64,
    p: [f64; 2],
) -> [f64; 2] {
    let g = a.grid();
    let (ix, iy, wx, wy) = stencil(g, p);
    let n = g.n();
    let va = [
        eval(a.x(), n, &ix, &iy, &wx, &wy),
        eval(a.y(), n, &ix, &iy, &wx, &wy),
    ];
    if theta == 0.0 {
        return va;
    }
    let vb = [
        eval(b.x(), n, &ix, &iy, &wx, &wy),
        eval(b.y(), n, &ix, &iy, &wx, &wy),
    ];
    [
        (1.0 - theta) * va[0] + theta * vb[0],
        (1.0 - theta) * va[1] + theta * vb[1],
    ]
}

/// Trigonometric interpolant of `v` evaluated exactly at each point (real part
/// at Nyquist). Costs `O(n²)` per point; meant for audits.
pub fn spectral_point_values(v: &VectorField, points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let g = *v.grid();
    let n = g.n();
    let (sx, sy) = engine_for(&g).forward_pair(v.x(), v.y());
    let origin = g.coord(0);
    let scale = 1.0 / g.len() as f64;
    points
        .iter()
        .map(|p| {
            let ex: Vec<C64> = (0..n)
                .map(|i| C64::from_polar(1.0, g.wavenumber(i) * (p[0] - origin)))
                .collect();
            let mut acc = [C64::new(0.0, 0.0); 2];
            for j in 0..n {
                let ey = C64::from_polar(1.0, g.wavenumber(j) * (p[1] - origin));
                let (mut rx, mut ry) = (C64::new(0.0, 0.0), C64::new(0.0, 0.0));
                for i in 0..n {
                    rx += ex[i] * sx[j * n + i];
                    ry += ex[i] * sy[j * n + i];
                }
                acc[0] += ey * rx;
                acc[1] += ey * ry;
            }
            [acc[0].re * scale, acc[1].re * scale]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_nodes_and_constants() {
        let g = Grid::new(32, 2.0).unwrap();
        let f = ScalarField::from_fn(g, |x, y| (3.0 * x).sin() + y).unwrap();
        let k = 5 * 32 + 7;
        assert!((interpolate_scalar(&f, g.point(k)) - f.values()[k]).abs() < 1e-13);
        let c = VectorField::constant(g, [0.3, -1.7]);
        let v = interpolate_vector(&c, [0.123, 5.9]);
        assert!((v[0] - 0.3).abs() < 1e-15 && (v[1] + 1.7).abs() < 1e-15);
    }

    #[test]
    fn third_order_convergence() {
        let err = |n: usize| {
            let g = Grid::new(n, 2.0 * std::f64::consts::PI).unwrap();
            let f = ScalarField::from_fn(g, |x, y| (x + 0.3).sin() * (2.0 * y).cos()).unwrap();
            let mut e: f64 = 0.0;
            for s in 0..50 {
                let p = [0.37 * s as f64, -0.71 * s as f64 + 0.2];
                e = e.max(
                    (interpolate_scalar(&f, p) - (p[0] + 0.3).sin() * (2.0 * p[1]).cos()).abs(),
                );
            }
            e
        };
        let ratio = err(32) / err(64);
        assert!(ratio > 7.0, "{ratio}");
    }

    #[test]
    fn spectral_evaluation_is_exact_for_band_limited() {
        let g = Grid::new(16, 2.0 * std::f64::consts::PI).unwrap();
        let f = |x: f64, y: f64| [(3.0 * x - y).sin(), (x + 2.0 * y).cos() + 0.5];
        let v = VectorField::from_fn(g, f).unwrap();
        let pts = [[0.123, -2.5], [7.0, 1.1]];
        for (p, e) in pts.iter().zip(spectral_point_values(&v, &pts)) {
            let w = f(p[0], p[1]);
            assert!((e[0] - w[0]).abs() < 1e-12 && (e[1] - w[1]).abs() < 1e-12);
        }
    }
}
