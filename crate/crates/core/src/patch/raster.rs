use rayon::prelude::*;

use super::Patch;
use crate::error::{Error, Result};
use crate::fields::{Grid, Mask, ScalarField};

fn check_margin(patch: &Patch, grid: &Grid) -> Result<()> {
    let [x0, x1, y0, y1] = patch.bounding_box();
    let lim = 0.5 * grid.box_length() - 4.0 * grid.spacing();
    if x0 < -lim || x1 > lim || y0 < -lim || y1 > lim {
        return Err(Error::Geometry(format!(
            "patch bounding box [{x0:.4}, {x1:.4}] x [{y0:.4}, {y1:.4}] leaves less than 4 cells of margin in a box of side {}",
            grid.box_length()
        )));
    }
    Ok(())
}

/// Cell-centre indicator of the patch, optionally smoothed by a signed-distance
/// ramp `clamp(1/2 − sd / (w h), 0, 1)` of width `w = mollify_cells`.
pub fn rasterize(patch: &Patch, grid: &Grid, mollify_cells: f64) -> Result<ScalarField> {
    if !(mollify_cells >= 0.0 && mollify_cells.is_finite()) {
        return Err(Error::InvalidParameter(
            "mollify_cells must be a finite value >= 0".into(),
        ));
    }
    check_margin(patch, grid)?;
    let n = grid.n();
    let h = grid.spacing();
    let m = patch.markers();
    let count = m.len();
    let mut values = vec![0.0; grid.len()];
    // scanline fill with a half-open crossing rule
    values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let y = grid.coord(j);
        let mut xs: Vec<f64> = Vec::new();
        for e in 0..count {
            let a = m[e];
            let b = m[(e + 1) % count];
            if (a[1] > y) != (b[1] > y) {
                xs.push(a[0] + (y - a[1]) * (b[0] - a[0]) / (b[1] - a[1]));
            }
        }
        xs.sort_by(f64::total_cmp);
        for pair in xs.chunks_exact(2) {
            for (i, v) in row.iter_mut().enumerate() {
                let x = grid.coord(i);
                if x > pair[0] && x < pair[1] {
                    *v = 1.0;
                }
            }
        }
    });
    if mollify_cells > 0.0 {
        let width = mollify_cells * h;
        let [x0, x1, y0, y1] = patch.bounding_box();
        let pad = width + 2.0 * h;
        values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
            let y = grid.coord(j);
            if y < y0 - pad || y > y1 + pad {
                return;
            }
            for (i, v) in row.iter_mut().enumerate() {
                let x = grid.coord(i);
                if x < x0 - pad || x > x1 + pad {
                    continue;
                }
                let d = patch.boundary_distance([x, y]);
                if d < 0.5 * width {
                    let sd = if *v > 0.5 { -d } else { d };
                    *v = (0.5 - sd / width).clamp(0.0, 1.0);
                }
            }
        });
    }
    Ok(ScalarField::from_raw(*grid, values))
}

/// Signed distance to the patch boundary at every node (negative inside).
pub fn signed_distance_field(patch: &Patch, grid: &Grid) -> ScalarField {
    let n = grid.n();
    let mut values = vec![0.0; grid.len()];
    values.par_chunks_mut(n).enumerate().for_each(|(j, row)| {
        let y = grid.coord(j);
        for (i, v) in row.iter_mut().enumerate() {
            *v = patch.signed_distance([grid.coord(i), y]);
        }
    });
    ScalarField::from_raw(*grid, values)
}

/// Cells whose centre lies within distance `r` of the patch.
pub fn dilated_mask(patch: &Patch, grid: &Grid, r: f64) -> Mask {
    let sd = signed_distance_field(patch, grid);
    Mask::new(*grid, sd.values().iter().map(|&d| d <= r).collect()).expect("grid-sized mask")
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_area() {
        let g = Grid::new(128, 4.0).unwrap();
        let sq = Patch::rectangle([0.013, -0.021], 1.0, 1.0, 0.02).unwrap();
        let f = rasterize(&sq, &g, 0.0).unwrap();
        assert!((f.integral() - 1.0).abs() <= 4.0 * g.spacing());
    }

    #[test]
    fn disk_area_and_mollified_l1() {
        let g = Grid::new(128, 4.0).unwrap();
        let d = Patch::disk([0.0, 0.0], 1.0, 0.01).unwrap();
        let sharp = rasterize(&d, &g, 0.0).unwrap();
        assert!((sharp.integral() - PI).abs() < 2.0 * PI * g.spacing());
        for w in [1.0, 2.0] {
            let soft = rasterize(&d, &g, w).unwrap();
            assert!(soft.min() >= 0.0 && soft.max() <= 1.0);
            let l1: f64 = sharp
                .values()
                .iter()
                .zip(soft.values())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
                * g.cell_area();
            assert!(l1 <= w * g.spacing() * d.perimeter(), "w={w} l1={l1}");
        }
    }

    #[test]
    fn touching_the_box_is_rejected() {
        let g = Grid::new(32, 2.0).unwrap();
        let d = Patch::disk([0.0, 0.0], 0.95, 0.05).unwrap();
        assert!(matches!(rasterize(&d, &g, 0.0), Err(Error::Geometry(_))));
    }
}
