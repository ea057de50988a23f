//! Strang split-step spectral integrator for the quantum class.
//!
//! One step applies half a potential phase, a full kinetic phase in Fourier
//! space, and the second potential half. Every factor is a unit-modulus
//! multiplication, so the norm is preserved to round-off and stepping with
//! -dt inverts a +dt step exactly.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{EdError, Result};
use crate::grid::Grid;
use crate::params::{DynClass, ModelParams};
use crate::spectral;
use crate::state::WaveState;

pub struct QuantumStepper {
    grid: Arc<Grid>,
    half_potential: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    dt: f64,
}

impl QuantumStepper {
    /// `dt` may be negative for reverse (conjugate) stepping.
    pub fn new(grid: Arc<Grid>, params: &ModelParams, potential: &[f64], dt: f64) -> Result<Self> {
        params.validate()?;
        if params.class() != DynClass::Quantum {
            return Err(EdError::WrongClass { expected: "quantum", got: "hybrid" });
        }
        grid.check_field_len(potential.len())?;
        if dt == 0.0 || !dt.is_finite() {
            return Err(EdError::BadParams(format!("dt must be a nonzero finite number, got {dt}")));
        }
        let hbar = params.hbar;
        let half_potential: Vec<Complex64> = potential
            .iter()
            .map(|&v| Complex64::cis(-v * dt / (2.0 * hbar)))
            .collect();
        let kinetic: Vec<Complex64> = (0..grid.len())
            .map(|flat| {
                let idx = grid.unravel(flat);
                let mut energy = 0.0;
                for d in 0..grid.dims() {
                    let k = grid.wavenumbers(d)[idx[d]];
                    energy += hbar * hbar * k * k / (2.0 * params.mass(d));
                }
                Complex64::cis(-energy * dt / hbar)
            })
            .collect();
        Ok(QuantumStepper { grid, half_potential, kinetic, dt })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_inplace(&self, psi: &mut [Complex64]) {
        for (z, p) in psi.iter_mut().zip(&self.half_potential) {
            *z *= p;
        }
        spectral::fft_nd(&self.grid, psi, false);
        for (z, k) in psi.iter_mut().zip(&self.kinetic) {
            *z *= k;
        }
        spectral::fft_nd(&self.grid, psi, true);
        for (z, p) in psi.iter_mut().zip(&self.half_potential) {
            *z *= p;
        }
    }

    pub fn step(&self, state: &WaveState) -> Result<WaveState> {
        let (psi, hbar) = state
            .psi_with_hbar()
            .ok_or(EdError::WrongClass { expected: "quantum", got: "hybrid" })?;
        let mut next = psi.to_vec();
        self.step_inplace(&mut next);
        WaveState::from_psi(Arc::clone(&self.grid), next, hbar, state.time() + self.dt)
    }
}

/// One split step of the Schroedinger flow.
pub fn step_quantum(
    state: &WaveState,
    params: &ModelParams,
    potential: &[f64],
    dt: f64,
) -> Result<WaveState> {
    QuantumStepper::new(state.grid_arc(), params, potential, dt)?.step(state)
}

/// dt for which the fastest phase in the problem advances at most
/// `budget` radians per step (potential extremes plus the kinetic phase of
/// the occupied bandwidth of `psi0`).
pub fn quantum_phase_budget_dt(
    grid: &Grid,
    params: &ModelParams,
    potential: &[f64],
    psi0: &[Complex64],
    budget: f64,
) -> f64 {
    let hbar = params.hbar;
    let v_scale = potential
        .iter()
        .fold(0.0_f64, |acc, &v| acc.max(v.abs()));

    // occupied bandwidth: largest |k| with spectral amplitude above 1e-10 of peak
    let mut spec = psi0.to_vec();
    spectral::fft_nd(grid, &mut spec, false);
    let peak = spec.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    let mut kin_scale = 0.0_f64;
    for (flat, z) in spec.iter().enumerate() {
        if z.norm() > 1e-10 * peak {
            let idx = grid.unravel(flat);
            let mut energy = 0.0;
            for d in 0..grid.dims() {
                let k = grid.wavenumbers(d)[idx[d]];
                energy += hbar * hbar * k * k / (2.0 * params.mass(d));
            }
            kin_scale = kin_scale.max(energy);
        }
    }
    let scale = (v_scale + kin_scale).max(f64::MIN_POSITIVE);
    budget * hbar / scale
}
