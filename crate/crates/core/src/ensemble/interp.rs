//! Periodic interpolation of grid fields at walker positions: Catmull-Rom
//! cubic for velocities, linear for log-density gradients.

use crate::grid::Grid;

#[inline]
fn frac_index(grid: &Grid, dim: usize, x: f64) -> (usize, f64) {
    let n = grid.points(dim);
    let s = (x + 0.5 * grid.extent(dim)) / grid.spacing(dim);
    let i = s.floor();
    let t = s - i;
    let i = (i as i64).rem_euclid(n as i64) as usize;
    (i, t)
}

#[inline]
fn catmull_rom(p0: f64, p1: f64, p2: f64, p3: f64, t: f64) -> f64 {
    let t2 = t * t;
    let t3 = t2 * t;
    0.5 * ((2.0 * p1)
        + (-p0 + p2) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t2
        + (-p0 + 3.0 * p1 - 3.0 * p2 + p3) * t3)
}

/// Linear periodic interpolation.
pub fn interp_linear(grid: &Grid, field: &[f64], pos: &[f64]) -> f64 {
    match grid.dims() {
        1 => {
            let n = grid.points(0);
            let (i, t) = frac_index(grid, 0, pos[0]);
            field[i] * (1.0 - t) + field[(i + 1) % n] * t
        }
        _ => {
            let n0 = grid.points(0);
            let n1 = grid.points(1);
            let (i, ti) = frac_index(grid, 0, pos[0]);
            let (j, tj) = frac_index(grid, 1, pos[1]);
            let ip = (i + 1) % n0;
            let jp = (j + 1) % n1;
            let at = |a: usize, b: usize| field[a * n1 + b];
            let lo = at(i, j) * (1.0 - tj) + at(i, jp) * tj;
            let hi = at(ip, j) * (1.0 - tj) + at(ip, jp) * tj;
            lo * (1.0 - ti) + hi * ti
        }
    }
}

/// Catmull-Rom cubic periodic interpolation.
pub fn interp_cubic(grid: &Grid, field: &[f64], pos: &[f64]) -> f64 {
    match grid.dims() {
        1 => {
            let n = grid.points(0);
            let (i, t) = frac_index(grid, 0, pos[0]);
            let im = (i + n - 1) % n;
            let i1 = (i + 1) % n;
            let i2 = (i + 2) % n;
            catmull_rom(field[im], field[i], field[i1], field[i2], t)
        }
        _ => {
            let n0 = grid.points(0);
            let n1 = grid.points(1);
            let (i, ti) = frac_index(grid, 0, pos[0]);
            let (j, tj) = frac_index(grid, 1, pos[1]);
            let mut rows = [0.0; 4];
            for (r, row) in rows.iter_mut().enumerate() {
                let ii = (i + n0 + r - 1) % n0;
                let jm = (j + n1 - 1) % n1;
                let j1 = (j + 1) % n1;
                let j2 = (j + 2) % n1;
                *row = catmull_rom(
                    field[ii * n1 + jm],
                    field[ii * n1 + j],
                    field[ii * n1 + j1],
                    field[ii * n1 + j2],
                    tj,
                );
            }
            catmull_rom(rows[0], rows[1], rows[2], rows[3], ti)
        }
    }
}
