//! Periodic configuration-space lattice.
//!
//! Fields live on a row-major flat array over the grid; for 2-D grids the
//! second coordinate is contiguous. The box is centered on the origin:
//! coordinate values run over [-extent/2, extent/2).

use serde::{Deserialize, Serialize};

use crate::error::{EdError, Result};

pub const MIN_POINTS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dims: usize,
    points: Vec<usize>,
    extent: Vec<f64>,
    spacing: Vec<f64>,
    /// Angular wavenumbers in FFT bin order, one set per dimension.
    wavenumbers: Vec<Vec<f64>>,
}

impl Grid {
    /// Isotropic grid: the same point count and extent in every dimension.
    pub fn build(dims: usize, points: usize, extent: f64) -> Result<Self> {
        Self::build_per_dim(&vec![points; dims], &vec![extent; dims])
    }

    pub fn build_per_dim(points: &[usize], extent: &[f64]) -> Result<Self> {
        let dims = points.len();
        if dims == 0 || dims > 2 || extent.len() != dims {
            return Err(EdError::BadDims(dims.max(extent.len())));
        }
        for &n in points {
            if n < MIN_POINTS {
                return Err(EdError::TooFewPoints(n));
            }
        }
        for &l in extent {
            if !(l > 0.0) || !l.is_finite() {
                return Err(EdError::NonPositiveExtent(l));
            }
        }
        let spacing: Vec<f64> = points
            .iter()
            .zip(extent)
            .map(|(&n, &l)| l / n as f64)
            .collect();
        let wavenumbers = points
            .iter()
            .zip(extent)
            .map(|(&n, &l)| fft_wavenumbers(n, l))
            .collect();
        Ok(Grid {
            dims,
            points: points.to_vec(),
            extent: extent.to_vec(),
            spacing,
            wavenumbers,
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn points(&self, dim: usize) -> usize {
        self.points[dim]
    }

    pub fn extent(&self, dim: usize) -> f64 {
        self.extent[dim]
    }

    pub fn spacing(&self, dim: usize) -> f64 {
        self.spacing[dim]
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Total number of lattice sites.
    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Volume of one cell; the quadrature weight.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    pub fn wavenumbers(&self, dim: usize) -> &[f64] {
        &self.wavenumbers[dim]
    }

    /// Coordinate of lattice index `i` along `dim`.
    pub fn coord(&self, dim: usize, i: usize) -> f64 {
        -0.5 * self.extent[dim] + i as f64 * self.spacing[dim]
    }

    /// All coordinate values along one dimension.
    pub fn axis(&self, dim: usize) -> Vec<f64> {
        (0..self.points[dim]).map(|i| self.coord(dim, i)).collect()
    }

    /// Decompose a flat index into per-dimension lattice indices.
    pub fn unravel(&self, flat: usize) -> [usize; 2] {
        match self.dims {
            1 => [flat, 0],
            _ => [flat / self.points[1], flat % self.points[1]],
        }
    }

    /// Position of a flat index (second entry is 0 for 1-D grids).
    pub fn position(&self, flat: usize) -> [f64; 2] {
        let idx = self.unravel(flat);
        let mut out = [0.0; 2];
        for d in 0..self.dims {
            out[d] = self.coord(d, idx[d]);
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        match self.dims {
            1 => idx[0],
            _ => idx[0] * self.points[1] + idx[1],
        }
    }

    /// Wrap a physical coordinate into [-extent/2, extent/2).
    pub fn wrap(&self, dim: usize, x: f64) -> f64 {
        let l = self.extent[dim];
        let half = 0.5 * l;
        let mut y = (x + half).rem_euclid(l) - half;
        // rem_euclid can return exactly l for tiny negative inputs
        if y >= half {
            y -= l;
        }
        y
    }

    pub fn check_field_len(&self, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(EdError::FieldSizeMismatch {
                expected: self.len(),
                found: len,
            });
        }
        Ok(())
    }

    /// Rectangle-rule quadrature; exact for periodic band-limited integrands.
    pub fn quadrature(&self, field: &[f64]) -> f64 {
        debug_assert_eq!(field.len(), self.len());
        let sum: f64 = field.iter().sum();
        sum * self.cell_volume()
    }
}

fn fft_wavenumbers(n: usize, extent: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / extent;
    (0..n)
        .map(|j| {
            let signed = if j <= n / 2 { j as isize } else { j as isize - n as isize };
            signed as f64 * dk
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spacing_matches_extent_over_points() {
        let g = Grid::build(1, 1024, 40.0).unwrap();
        assert_eq!(g.spacing(0), 0.0390625);
        let g2 = Grid::build(2, 256, 20.0).unwrap();
        assert_eq!(g2.spacing(0), 0.078125);
        assert_eq!(g2.spacing(1), 0.078125);
        assert_eq!(g2.len(), 256 * 256);
    }

    #[test]
    fn rejects_too_few_points() {
        assert!(matches!(
            Grid::build(1, 4, 10.0),
            Err(EdError::TooFewPoints(4))
        ));
    }

    #[test]
    fn rejects_non_positive_extent() {
        assert!(matches!(
            Grid::build(1, 64, 0.0),
            Err(EdError::NonPositiveExtent(_))
        ));
        assert!(matches!(
            Grid::build(1, 64, -1.0),
            Err(EdError::NonPositiveExtent(_))
        ));
    }

    #[test]
    fn rejects_bad_dims() {
        assert!(matches!(Grid::build(3, 64, 10.0), Err(EdError::BadDims(3))));
        assert!(matches!(Grid::build(0, 64, 10.0), Err(EdError::BadDims(0))));
    }

    #[test]
    fn wavenumbers_are_fft_ordered() {
        let g = Grid::build(1, 8, 8.0).unwrap();
        let dk = 2.0 * std::f64::consts::PI / 8.0;
        let k = g.wavenumbers(0);
        let expected: Vec<f64> = [0, 1, 2, 3, 4, -3, -2, -1]
            .iter()
            .map(|&j| j as f64 * dk)
            .collect();
        for (a, b) in k.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn wrap_stays_in_box() {
        let g = Grid::build(1, 16, 10.0).unwrap();
        assert!((g.wrap(0, 7.0) - (-3.0)).abs() < 1e-12);
        assert!((g.wrap(0, -5.0) - (-5.0)).abs() < 1e-12);
        assert!((g.wrap(0, 5.0) - (-5.0)).abs() < 1e-12);
        for &x in &[123.456, -987.1, 4.999, -5.0001] {
            let w = g.wrap(0, x);
            assert!((-5.0..5.0).contains(&w), "{x} wrapped to {w}");
        }
    }

    #[test]
    fn flat_index_roundtrip() {
        let g = Grid::build(2, 16, 4.0).unwrap();
        for flat in [0usize, 1, 17, 255] {
            let idx = g.unravel(flat);
            assert_eq!(g.flat_index(&idx), flat);
        }
    }

    #[test]
    fn quadrature_of_constant() {
        let g = Grid::build(2, 32, 5.0).unwrap();
        let f = vec![2.0; g.len()];
        assert!((g.quadrature(&f) - 2.0 * 25.0).abs() < 1e-12);
    }
}
