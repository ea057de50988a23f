//! Potential specifications evaluable on the periodic box.
//!
//! The harmonic potential is periodized: its restoring force rolls smoothly
//! to zero between ROLL_START and ROLL_END of the half-extent, so the
//! potential closes over the periodic wrap without a derivative kink.
//! Scenarios keep all probability (and every characteristic that can reach
//! the support before a caustic) well inside the roll radius, where the
//! potential is exactly harmonic.

use serde::{Deserialize, Serialize};

use crate::error::{EdError, Result};
use crate::grid::Grid;

/// Fraction of the half-extent where the harmonic force roll-off begins.
pub const ROLL_START: f64 = 0.8;
/// Fraction of the half-extent where the force has rolled to zero.
pub const ROLL_END: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialSpec {
    Free,
    /// V = sum_d m_d omega_d^2 x_d^2 / 2, force-rolled near the box edge.
    Harmonic { omega: Vec<f64> },
    /// Gaussian bump: height * exp(-sum_d (x_d - center_d)^2 / (2 width^2)).
    Barrier { height: f64, width: f64, center: Vec<f64> },
    /// 1-D barrier with two Gaussian openings at center +- separation/2.
    DoubleGaussianSlit {
        height: f64,
        center: f64,
        barrier_width: f64,
        slit_separation: f64,
        slit_width: f64,
    },
    /// Arbitrary values, one per grid point.
    Tabulated { values: Vec<f64> },
}

impl PotentialSpec {
    /// Short identifier for manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            PotentialSpec::Free => "free",
            PotentialSpec::Harmonic { .. } => "harmonic",
            PotentialSpec::Barrier { .. } => "barrier",
            PotentialSpec::DoubleGaussianSlit { .. } => "double-gaussian-slit",
            PotentialSpec::Tabulated { .. } => "tabulated",
        }
    }

    /// Radius (per dimension) inside which the evaluated potential is exactly
    /// the ideal form, before any edge periodization.
    pub fn pure_radius(&self, grid: &Grid, dim: usize) -> f64 {
        match self {
            PotentialSpec::Harmonic { .. } => ROLL_START * 0.5 * grid.extent(dim),
            _ => 0.5 * grid.extent(dim),
        }
    }

    /// Potential value at an arbitrary position.
    pub fn value_at(&self, grid: &Grid, masses: &[f64], pos: &[f64]) -> Result<f64> {
        match self {
            PotentialSpec::Free => Ok(0.0),
            PotentialSpec::Harmonic { omega } => {
                let mut v = 0.0;
                for d in 0..grid.dims() {
                    let m = masses[d.min(masses.len() - 1)];
                    let w = omega[d.min(omega.len() - 1)];
                    let r0 = ROLL_START * 0.5 * grid.extent(d);
                    let r1 = ROLL_END * 0.5 * grid.extent(d);
                    v += m * w * w * rolled_half_square(pos[d].abs(), r0, r1);
                }
                Ok(v)
            }
            PotentialSpec::Barrier { height, width, center } => {
                if !(*width > 0.0) {
                    return Err(EdError::InvalidInput("barrier width must be positive".into()));
                }
                let mut q = 0.0;
                for d in 0..grid.dims() {
                    let c = center.get(d).copied().unwrap_or(0.0);
                    let dx = pos[d] - c;
                    q += dx * dx;
                }
                Ok(height * (-q / (2.0 * width * width)).exp())
            }
            PotentialSpec::DoubleGaussianSlit {
                height,
                center,
                barrier_width,
                slit_separation,
                slit_width,
            } => {
                if !(*barrier_width > 0.0) || !(*slit_width > 0.0) {
                    return Err(EdError::InvalidInput("slit widths must be positive".into()));
                }
                let x = pos[0];
                let wall = (-(x - center).powi(2) / (2.0 * barrier_width * barrier_width)).exp();
                let s = slit_separation / 2.0;
                let hole = |c: f64| (-(x - c).powi(2) / (2.0 * slit_width * slit_width)).exp();
                Ok(height * wall * (1.0 - hole(center - s) - hole(center + s)))
            }
            PotentialSpec::Tabulated { .. } => Err(EdError::InvalidInput(
                "tabulated potentials are defined on grid points only".into(),
            )),
        }
    }

    /// -dV/dx_d at an arbitrary position (for characteristic integration).
    pub fn force_at(&self, grid: &Grid, masses: &[f64], pos: &[f64], dim: usize) -> Result<f64> {
        match self {
            PotentialSpec::Free => Ok(0.0),
            PotentialSpec::Harmonic { omega } => {
                let m = masses[dim.min(masses.len() - 1)];
                let w = omega[dim.min(omega.len() - 1)];
                let r0 = ROLL_START * 0.5 * grid.extent(dim);
                let r1 = ROLL_END * 0.5 * grid.extent(dim);
                Ok(-m * w * w * pos[dim] * roll_weight(pos[dim].abs(), r0, r1))
            }
            _ => {
                // central difference fallback for the localized bumps
                let h = 1e-6 * grid.extent(dim);
                let mut hi = pos.to_vec();
                let mut lo = pos.to_vec();
                hi[dim] += h;
                lo[dim] -= h;
                let vh = self.value_at(grid, masses, &hi)?;
                let vl = self.value_at(grid, masses, &lo)?;
                Ok(-(vh - vl) / (2.0 * h))
            }
        }
    }

    /// Evaluate on every grid point.
    pub fn evaluate(&self, grid: &Grid, masses: &[f64]) -> Result<Vec<f64>> {
        if let PotentialSpec::Tabulated { values } = self {
            grid.check_field_len(values.len())?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(EdError::InvalidInput("tabulated potential has non-finite entries".into()));
            }
            return Ok(values.clone());
        }
        let mut out = Vec::with_capacity(grid.len());
        for flat in 0..grid.len() {
            let pos = grid.position(flat);
            let v = self.value_at(grid, masses, &pos[..grid.dims()])?;
            if !v.is_finite() {
                return Err(EdError::InvalidInput(format!(
                    "potential not finite at {:?}",
                    &pos[..grid.dims()]
                )));
            }
            out.push(v);
        }
        Ok(out)
    }
}

/// Smooth force roll factor: 1 inside r0, cosine roll to 0 at r1.
fn roll_weight(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        1.0
    } else if r >= r1 {
        0.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * (r - r0) / (r1 - r0)).cos())
    }
}

/// Integral of s * roll_weight(s) from 0 to r: the rolled version of r^2/2.
fn rolled_half_square(r: f64, r0: f64, r1: f64) -> f64 {
    if r <= r0 {
        return 0.5 * r * r;
    }
    let a = std::f64::consts::PI / (r1 - r0);
    // antiderivative of s * (1 + cos(a(s - r0)))/2
    let anti = |s: f64| {
        let u = s - r0;
        0.25 * s * s + 0.5 * ((s * (a * u).sin()) / a + (a * u).cos() / (a * a))
    };
    let w_at = |s: f64| 0.5 * r0 * r0 + anti(s) - anti(r0);
    if r >= r1 {
        w_at(r1)
    } else {
        w_at(r)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_is_exact_inside_roll() {
        let g = Grid::build(1, 1024, 40.0).unwrap();
        let spec = PotentialSpec::Harmonic { omega: vec![1.0] };
        let v = spec.evaluate(&g, &[1.0]).unwrap();
        for i in 0..1024 {
            let x = g.coord(0, i);
            if x.abs() <= 16.0 {
                assert!((v[i] - 0.5 * x * x).abs() < 1e-12, "x={x}");
            }
        }
    }

    #[test]
    fn harmonic_closes_periodically() {
        let g = Grid::build(1, 1024, 40.0).unwrap();
        let spec = PotentialSpec::Harmonic { omega: vec![1.0] };
        let v = spec.evaluate(&g, &[1.0]).unwrap();
        // flat beyond the roll: both edges at the same value, force zero
        assert!((v[0] - v[1]).abs() < 1e-10);
        let f_edge = spec.force_at(&g, &[1.0], &[-19.9], 0).unwrap();
        assert!(f_edge.abs() < 1e-12);
        // potential value is continuous across the wrap
        let left = spec.value_at(&g, &[1.0], &[-20.0]).unwrap();
        let right = spec.value_at(&g, &[1.0], &[20.0]).unwrap();
        assert!((left - right).abs() < 1e-12);
    }

    #[test]
    fn rolled_potential_matches_force_integral() {
        // dV/dr computed by finite differences matches -force
        let g = Grid::build(1, 256, 40.0).unwrap();
        let spec = PotentialSpec::Harmonic { omega: vec![2.0] };
        let m = [1.5];
        for &r in &[1.0, 15.0, 16.5, 17.5, 18.9, 19.5] {
            let h = 1e-6;
            let vp = spec.value_at(&g, &m, &[r + h]).unwrap();
            let vm = spec.value_at(&g, &m, &[r - h]).unwrap();
            let dv = (vp - vm) / (2.0 * h);
            let f = spec.force_at(&g, &m, &[r], 0).unwrap();
            assert!((dv + f).abs() < 1e-6, "r={r}: dV={dv}, F={f}");
        }
    }

    #[test]
    fn barrier_and_slit_finite_everywhere() {
        let g = Grid::build(1, 128, 20.0).unwrap();
        let b = PotentialSpec::Barrier { height: 5.0, width: 0.5, center: vec![1.0] };
        let v = b.evaluate(&g, &[1.0]).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
        assert!(v.iter().cloned().fold(f64::MIN, f64::max) <= 5.0 + 1e-12);
        let s = PotentialSpec::DoubleGaussianSlit {
            height: 10.0,
            center: 0.0,
            barrier_width: 1.0,
            slit_separation: 1.5,
            slit_width: 0.2,
        };
        let v = s.evaluate(&g, &[1.0]).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn tabulated_requires_grid_length() {
        let g = Grid::build(1, 64, 10.0).unwrap();
        let t = PotentialSpec::Tabulated { values: vec![0.0; 63] };
        assert!(t.evaluate(&g, &[1.0]).is_err());
        let t = PotentialSpec::Tabulated { values: vec![1.0; 64] };
        assert_eq!(t.evaluate(&g, &[1.0]).unwrap()[0], 1.0);
    }
}
