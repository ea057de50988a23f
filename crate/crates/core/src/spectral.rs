//! Fourier-collocation primitives: axis FFTs, spectral derivatives, and
//! momentum-space weights. Exact for band-limited periodic fields.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;

type Plan = Arc<dyn Fft<f64>>;

fn plans(n: usize) -> (Plan, Plan) {
    static CACHE: OnceLock<Mutex<HashMap<usize, (Plan, Plan)>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    map.entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// In-place FFT along one axis of a row-major field. The inverse direction
/// includes the 1/n normalization so forward-then-inverse is the identity.
pub fn fft_axis(grid: &Grid, data: &mut [Complex64], axis: usize, inverse: bool) {
    debug_assert_eq!(data.len(), grid.len());
    let n = grid.points(axis);
    let (fwd, inv) = plans(n);
    let plan = if inverse { inv } else { fwd };
    let mut scratch = vec![Complex64::default(); plan.get_inplace_scratch_len()];

    match (grid.dims(), axis) {
        (1, _) => plan.process_with_scratch(data, &mut scratch),
        (2, 1) => {
            for row in data.chunks_exact_mut(n) {
                plan.process_with_scratch(row, &mut scratch);
            }
        }
        (2, 0) => {
            let n1 = grid.points(1);
            let mut col = vec![Complex64::default(); n];
            for j in 0..n1 {
                for i in 0..n {
                    col[i] = data[i * n1 + j];
                }
                plan.process_with_scratch(&mut col, &mut scratch);
                for i in 0..n {
                    data[i * n1 + j] = col[i];
                }
            }
        }
        _ => unreachable!("grid dims limited to 1 or 2"),
    }
    if inverse {
        let norm = 1.0 / n as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }
}

/// Full N-dimensional FFT (all axes).
pub fn fft_nd(grid: &Grid, data: &mut [Complex64], inverse: bool) {
    for axis in 0..grid.dims() {
        fft_axis(grid, data, axis, inverse);
    }
}

/// Multiply FFT bins along `axis` by i*k, zeroing the Nyquist bin so odd
/// derivatives of real fields stay real.
fn apply_ik(grid: &Grid, data: &mut [Complex64], axis: usize) {
    let k = grid.wavenumbers(axis);
    let n = grid.points(axis);
    let nyquist = if n % 2 == 0 { Some(n / 2) } else { None };
    let weight = |j: usize| -> Complex64 {
        if Some(j) == nyquist {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(0.0, k[j])
        }
    };
    match (grid.dims(), axis) {
        (1, _) => {
            for (j, v) in data.iter_mut().enumerate() {
                *v *= weight(j);
            }
        }
        (2, 1) => {
            for row in data.chunks_exact_mut(n) {
                for (j, v) in row.iter_mut().enumerate() {
                    *v *= weight(j);
                }
            }
        }
        (2, 0) => {
            let n1 = grid.points(1);
            for i in 0..n {
                let w = weight(i);
                for v in &mut data[i * n1..(i + 1) * n1] {
                    *v *= w;
                }
            }
        }
        _ => unreachable!(),
    }
}

/// Spectral partial derivative of a complex field along one axis.
pub fn derivative_complex(grid: &Grid, field: &[Complex64], axis: usize) -> Vec<Complex64> {
    let mut work = field.to_vec();
    fft_axis(grid, &mut work, axis, false);
    apply_ik(grid, &mut work, axis);
    fft_axis(grid, &mut work, axis, true);
    work
}

/// Spectral partial derivative of a real field along one axis.
pub fn derivative(grid: &Grid, field: &[f64], axis: usize) -> Vec<f64> {
    let mut work: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    fft_axis(grid, &mut work, axis, false);
    apply_ik(grid, &mut work, axis);
    fft_axis(grid, &mut work, axis, true);
    work.iter().map(|z| z.re).collect()
}

/// All partial derivatives of a real field.
pub fn gradient(grid: &Grid, field: &[f64]) -> Vec<Vec<f64>> {
    (0..grid.dims()).map(|d| derivative(grid, field, d)).collect()
}

/// Squared angular wavenumber |k|^2 at a flat FFT-bin index.
pub fn k_squared(grid: &Grid, flat: usize) -> f64 {
    let idx = grid.unravel(flat);
    (0..grid.dims())
        .map(|d| {
            let k = grid.wavenumbers(d)[idx[d]];
            k * k
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn grid1d(n: usize, l: f64) -> Grid {
        Grid::build(1, n, l).unwrap()
    }

    #[test]
    fn fft_roundtrip_is_identity() {
        let g = grid1d(64, 10.0);
        let orig: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let mut data = orig.clone();
        fft_nd(&g, &mut data, false);
        fft_nd(&g, &mut data, true);
        for (a, b) in data.iter().zip(&orig) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine_is_exact() {
        let g = grid1d(1024, 40.0);
        let l = 40.0;
        let f: Vec<f64> = (0..1024)
            .map(|i| (2.0 * PI * g.coord(0, i) / l).sin())
            .collect();
        let df = derivative(&g, &f, 0);
        let mut max_err: f64 = 0.0;
        for (i, d) in df.iter().enumerate() {
            let expect = (2.0 * PI / l) * (2.0 * PI * g.coord(0, i) / l).cos();
            max_err = max_err.max((d - expect).abs());
        }
        assert!(max_err < 1e-12, "max error {max_err}");
    }

    #[test]
    fn derivative_of_constant_is_zero() {
        let g = grid1d(128, 7.0);
        let f = vec![3.25; 128];
        let df = derivative(&g, &f, 0);
        assert!(df.iter().all(|&d| d.abs() < 1e-13));
    }

    #[test]
    fn derivative_of_gaussian_matches_analytic() {
        // d/dx exp(-x^2/2) = -x exp(-x^2/2), sigma = 1 on a 40-wide grid
        let g = grid1d(1024, 40.0);
        let f: Vec<f64> = (0..1024)
            .map(|i| {
                let x = g.coord(0, i);
                (-0.5 * x * x).exp()
            })
            .collect();
        let df = derivative(&g, &f, 0);
        let mut max_err: f64 = 0.0;
        for (i, d) in df.iter().enumerate() {
            let x = g.coord(0, i);
            max_err = max_err.max((d - (-x) * (-0.5 * x * x).exp()).abs());
        }
        assert!(max_err < 1e-10, "max error {max_err}");
    }

    #[test]
    fn gradient_2d_separates_axes() {
        let g = Grid::build(2, 64, 8.0).unwrap();
        let l = 8.0;
        let mut f = vec![0.0; g.len()];
        for flat in 0..g.len() {
            let [x, y] = g.position(flat);
            f[flat] = (2.0 * PI * x / l).sin() * (4.0 * PI * y / l).cos();
        }
        let grads = gradient(&g, &f);
        let mut max_err: f64 = 0.0;
        for flat in 0..g.len() {
            let [x, y] = g.position(flat);
            let gx = (2.0 * PI / l) * (2.0 * PI * x / l).cos() * (4.0 * PI * y / l).cos();
            let gy = -(4.0 * PI / l) * (2.0 * PI * x / l).sin() * (4.0 * PI * y / l).sin();
            max_err = max_err.max((grads[0][flat] - gx).abs());
            max_err = max_err.max((grads[1][flat] - gy).abs());
        }
        assert!(max_err < 1e-11, "max error {max_err}");
    }

    #[test]
    fn harmonic_products_differentiate_exactly() {
        // product of 4 low-order harmonics stays band-limited
        let g = grid1d(256, 10.0);
        let w = 2.0 * PI / 10.0;
        let f: Vec<f64> = (0..256)
            .map(|i| {
                let x = g.coord(0, i);
                (w * x).sin() * (2.0 * w * x).cos() * (3.0 * w * x).sin() * (w * x).cos()
            })
            .collect();
        let df = derivative(&g, &f, 0);
        // analytic derivative via product rule
        let mut max_err: f64 = 0.0;
        for (i, d) in df.iter().enumerate() {
            let x = g.coord(0, i);
            let (s1, c1) = ((w * x).sin(), (w * x).cos());
            let (s2, c2) = ((2.0 * w * x).sin(), (2.0 * w * x).cos());
            let (s3, c3) = ((3.0 * w * x).sin(), (3.0 * w * x).cos());
            let expect = w * c1 * c2 * s3 * c1 - 2.0 * w * s1 * s2 * s3 * c1
                + 3.0 * w * s1 * c2 * c3 * c1
                - w * s1 * c2 * s3 * s1;
            max_err = max_err.max((d - expect).abs());
        }
        assert!(max_err < 1e-10, "max error {max_err}");
    }
}
