//! Coupled (rho, Phi) field dynamics: the conserved ensemble Hamiltonian,
//! velocity-field decomposition, and the per-class steppers.

mod hybrid;
mod quantum;

pub use hybrid::{hybrid_cfl_dt, HybridStepper, CAUSTIC_COMPRESSION_LIMIT};
pub use quantum::{quantum_phase_budget_dt, step_quantum, QuantumStepper};

use std::sync::Arc;

use crate::error::Result;
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::spectral;
use crate::state::{WaveState, RHO_HARD_FLOOR, RHO_NOISE_FLOOR_REL};

/// Current, osmotic, and drift velocity fields of a state.
///
/// current = grad Phi / m, osmotic = -(epsilon/2m) grad ln rho,
/// drift = current - osmotic. Points below the density floor get zero
/// osmotic velocity, so drift equals current there.
#[derive(Debug, Clone)]
pub struct VelocityFields {
    pub grid: Arc<Grid>,
    pub time: f64,
    pub current: Vec<Vec<f64>>,
    pub osmotic: Vec<Vec<f64>>,
    pub drift: Vec<Vec<f64>>,
}

/// Per-coordinate gradient of ln(rho), clamped to zero below the noise floor.
pub fn grad_ln_rho(grid: &Grid, rho: &[f64]) -> Vec<Vec<f64>> {
    let max_rho = rho.iter().cloned().fold(0.0_f64, f64::max);
    let floor = (max_rho * RHO_NOISE_FLOOR_REL).max(RHO_HARD_FLOOR);
    (0..grid.dims())
        .map(|d| {
            let drho = spectral::derivative(grid, rho, d);
            rho.iter()
                .zip(&drho)
                .map(|(&r, &dr)| if r <= floor { 0.0 } else { dr / r })
                .collect()
        })
        .collect()
}

pub fn velocity_fields(state: &WaveState, params: &ModelParams) -> Result<VelocityFields> {
    params.validate()?;
    let grid = state.grid_arc();
    let grad_phi = state.grad_phase();
    let rho = state.rho();
    let gln = grad_ln_rho(&grid, &rho);

    let dims = grid.dims();
    let mut current = Vec::with_capacity(dims);
    let mut osmotic = Vec::with_capacity(dims);
    let mut drift = Vec::with_capacity(dims);
    for d in 0..dims {
        let m = params.mass(d);
        let v: Vec<f64> = grad_phi[d].iter().map(|&g| g / m).collect();
        let u: Vec<f64> = gln[d]
            .iter()
            .map(|&g| -(params.epsilon / (2.0 * m)) * g)
            .collect();
        let b: Vec<f64> = v.iter().zip(&u).map(|(&v, &u)| v - u).collect();
        current.push(v);
        osmotic.push(u);
        drift.push(b);
    }
    Ok(VelocityFields {
        grid,
        time: state.time(),
        current,
        osmotic,
        drift,
    })
}

/// The conserved functional generating the coupled flow:
/// quadrature of rho * [ sum_d (d_d Phi)^2 / (2 m_d) + V
///                       + xi sum_d (d_d rho)^2 / (m_d rho^2) ].
pub fn ensemble_hamiltonian(
    state: &WaveState,
    params: &ModelParams,
    potential: &[f64],
) -> Result<f64> {
    let grid = state.grid();
    grid.check_field_len(potential.len())?;
    let rho = state.rho();
    let grad_phi = state.grad_phase();
    let max_rho = rho.iter().cloned().fold(0.0_f64, f64::max);
    let floor = (max_rho * RHO_NOISE_FLOOR_REL).max(RHO_HARD_FLOOR);

    let mut integrand = vec![0.0; grid.len()];
    for (i, val) in integrand.iter_mut().enumerate() {
        let mut kinetic = 0.0;
        for d in 0..grid.dims() {
            kinetic += grad_phi[d][i] * grad_phi[d][i] / (2.0 * params.mass(d));
        }
        *val = rho[i] * (kinetic + potential[i]);
    }
    if params.xi > 0.0 {
        for d in 0..grid.dims() {
            let drho = spectral::derivative(grid, &rho, d);
            let m = params.mass(d);
            for (i, val) in integrand.iter_mut().enumerate() {
                if rho[i] > floor {
                    *val += params.xi * drho[i] * drho[i] / (m * rho[i]);
                }
            }
        }
    }
    Ok(grid.quadrature(&integrand))
}
