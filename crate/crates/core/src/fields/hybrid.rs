//! Classical Hamilton-Jacobi stepper for the hybrid class (xi = 0).
//!
//! Phi advances by the classical HJ equation and rho by the continuity
//! equation in flux form, both with spectral gradients and a shared RK4 in
//! time. The flux-form divergence has an exactly vanishing zero mode, so
//! total probability is conserved to round-off per step.
//!
//! The solution stays valid only while characteristics have not crossed; a
//! compression monitor halts the run with a diagnostic when a caustic is
//! imminent instead of producing multivalued garbage.

use std::sync::Arc;

use crate::error::{EdError, Result};
use crate::grid::Grid;
use crate::params::{DynClass, ModelParams};
use crate::spectral;
use crate::state::{WaveState, BULK_SUPPORT_REL};

/// Compression-per-step limit: |dv/dx| * dt above this trips the detector.
pub const CAUSTIC_COMPRESSION_LIMIT: f64 = 0.5;

/// Fraction of density spectral energy allowed beyond 2/3 of the band.
/// A focusing flow squeezes the support below the grid scale well before
/// the compression detector can fire; this monitor halts the run first.
pub const SPECTRAL_TAIL_LIMIT: f64 = 1e-14;

pub struct HybridStepper {
    grid: Arc<Grid>,
    masses: Vec<f64>,
    potential: Vec<f64>,
    dt: f64,
}

impl HybridStepper {
    pub fn new(grid: Arc<Grid>, params: &ModelParams, potential: &[f64], dt: f64) -> Result<Self> {
        params.validate()?;
        if params.class() != DynClass::Hybrid {
            return Err(EdError::WrongClass { expected: "hybrid", got: "quantum" });
        }
        grid.check_field_len(potential.len())?;
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(EdError::BadParams(format!("dt must be positive, got {dt}")));
        }
        Ok(HybridStepper {
            grid,
            masses: params.masses.clone(),
            potential: potential.to_vec(),
            dt,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn mass(&self, d: usize) -> f64 {
        self.masses[d.min(self.masses.len() - 1)]
    }

    /// Time derivative of (rho, phi_tilde) at fixed slope.
    fn rhs(&self, rho: &[f64], phi_tilde: &[f64], slope: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let grid = &self.grid;
        let n = grid.len();
        let mut drho = vec![0.0; n];
        let mut dphi = vec![0.0; n];
        for (i, v) in dphi.iter_mut().enumerate() {
            *v = -self.potential[i];
        }
        for d in 0..grid.dims() {
            let mut gphi = spectral::derivative(grid, phi_tilde, d);
            for g in gphi.iter_mut() {
                *g += slope[d];
            }
            let m = self.mass(d);
            let flux: Vec<f64> = rho.iter().zip(&gphi).map(|(&r, &g)| r * g / m).collect();
            let div = spectral::derivative(grid, &flux, d);
            for i in 0..n {
                drho[i] -= div[i];
                dphi[i] -= gphi[i] * gphi[i] / (2.0 * m);
            }
        }
        (drho, dphi)
    }

    /// Largest per-step compression |d_d v_d| * dt over the bulk support.
    fn max_compression(&self, rho: &[f64], phi_tilde: &[f64], slope: &[f64]) -> f64 {
        let grid = &self.grid;
        let max_rho = rho.iter().cloned().fold(0.0_f64, f64::max);
        let floor = max_rho * BULK_SUPPORT_REL;
        let mut worst = 0.0_f64;
        for d in 0..grid.dims() {
            let mut gphi = spectral::derivative(grid, phi_tilde, d);
            for g in gphi.iter_mut() {
                *g += slope[d];
            }
            let dv = spectral::derivative(grid, &gphi, d);
            let m = self.mass(d);
            for (i, &r) in rho.iter().enumerate() {
                if r >= floor {
                    worst = worst.max((dv[i] / m).abs() * self.dt);
                }
            }
        }
        worst
    }

    /// Fraction of the density's spectral energy above 2/3 of the band.
    fn spectral_tail_fraction(&self, rho: &[f64]) -> f64 {
        use num_complex::Complex64;
        let grid = &self.grid;
        let mut spec: Vec<Complex64> = rho.iter().map(|&r| Complex64::new(r, 0.0)).collect();
        spectral::fft_nd(grid, &mut spec, false);
        let mut total = 0.0;
        let mut tail = 0.0;
        for (flat, z) in spec.iter().enumerate() {
            let e = z.norm_sqr();
            total += e;
            let idx = grid.unravel(flat);
            for d in 0..grid.dims() {
                let k = grid.wavenumbers(d)[idx[d]].abs();
                let k_cut = 2.0 / 3.0 * std::f64::consts::PI / grid.spacing(d);
                if k > k_cut {
                    tail += e;
                    break;
                }
            }
        }
        tail / total.max(f64::MIN_POSITIVE)
    }

    pub fn step(&self, state: &WaveState) -> Result<WaveState> {
        let (rho, phi_tilde, slope) = state
            .rho_phi_parts()
            .ok_or(EdError::WrongClass { expected: "hybrid", got: "quantum" })?;

        let compression = self.max_compression(rho, phi_tilde, slope);
        if compression > CAUSTIC_COMPRESSION_LIMIT {
            return Err(EdError::CausticDetected { time: state.time(), compression });
        }
        let tail_fraction = self.spectral_tail_fraction(rho);
        if tail_fraction > SPECTRAL_TAIL_LIMIT {
            return Err(EdError::SupportUnderResolved { time: state.time(), tail_fraction });
        }

        let dt = self.dt;
        let n = self.grid.len();
        let add = |a: &[f64], b: &[f64], c: f64| -> Vec<f64> {
            a.iter().zip(b).map(|(&x, &y)| x + c * y).collect()
        };

        let (k1r, k1p) = self.rhs(rho, phi_tilde, slope);
        let (k2r, k2p) = self.rhs(
            &add(rho, &k1r, dt / 2.0),
            &add(phi_tilde, &k1p, dt / 2.0),
            slope,
        );
        let (k3r, k3p) = self.rhs(
            &add(rho, &k2r, dt / 2.0),
            &add(phi_tilde, &k2p, dt / 2.0),
            slope,
        );
        let (k4r, k4p) = self.rhs(&add(rho, &k3r, dt), &add(phi_tilde, &k3p, dt), slope);

        let mut new_rho = vec![0.0; n];
        let mut new_phi = vec![0.0; n];
        for i in 0..n {
            new_rho[i] = rho[i] + dt / 6.0 * (k1r[i] + 2.0 * (k2r[i] + k3r[i]) + k4r[i]);
            new_phi[i] = phi_tilde[i] + dt / 6.0 * (k1p[i] + 2.0 * (k2p[i] + k3p[i]) + k4p[i]);
        }

        if new_rho.iter().chain(new_phi.iter()).any(|v| !v.is_finite()) {
            return Err(EdError::InvalidInput(format!(
                "hybrid step produced non-finite fields at t = {} (dt too large for the flow?)",
                state.time()
            )));
        }
        // advection can undershoot zero at round-off level in the tails
        for r in new_rho.iter_mut() {
            if *r < 0.0 {
                *r = 0.0;
            }
        }
        WaveState::from_rho_phi(
            Arc::clone(&self.grid),
            new_rho,
            new_phi,
            slope.to_vec(),
            state.time() + dt,
        )
    }
}

/// CFL-style step suggestion from an energy-bound velocity scale.
pub fn hybrid_cfl_dt(grid: &Grid, params: &ModelParams, potential: &[f64], state: &WaveState) -> f64 {
    let v_max = potential.iter().cloned().fold(f64::MIN, f64::max);
    let v_min = potential.iter().cloned().fold(f64::MAX, f64::min);
    let m_min = params
        .masses
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let mut v_scale = (2.0 * (v_max - v_min).max(0.0) / m_min).sqrt();
    if let Some((_, _, slope)) = state.rho_phi_parts() {
        for (d, &s) in slope.iter().enumerate() {
            v_scale += (s / params.mass(d)).abs();
        }
    }
    let grad_phi = state.grad_phase();
    for (d, g) in grad_phi.iter().enumerate() {
        let vg = g.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs())) / params.mass(d);
        v_scale = v_scale.max(vg);
    }
    let h = grid.min_spacing();
    if v_scale <= 0.0 {
        // static field: limit by nothing physical; pick a generous default
        return 0.05;
    }
    0.2 * h / v_scale
}
