//! Initial-state construction.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EdError, Result};
use crate::grid::Grid;
use crate::params::{DynClass, ModelParams};
use crate::state::WaveState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scenario {
    /// Gaussian packet: rho = N(x0, sigma^2) per coordinate, Phi = hbar k0 . x.
    Gaussian {
        x0: Vec<f64>,
        sigma: Vec<f64>,
        k0: Vec<f64>,
    },
    /// Harmonic-oscillator coherent state displaced to x0 at rest; the width
    /// is the ground-state width sqrt(hbar / (2 m omega)).
    Coherent { x0: Vec<f64>, omega: Vec<f64> },
    /// Symmetric superposition of packets at -a and +a with opposing boosts
    /// +k0 and -k0 (1-D only).
    TwoGaussianSuperposition { separation: f64, sigma: f64, k0: f64 },
    /// Correlated bivariate Gaussian over a 2-D configuration space, Phi = 0.
    TwoParticleCorrelatedGaussian { sigma: f64, correlation: f64 },
}

impl Scenario {
    pub fn id(&self) -> String {
        match self {
            Scenario::Gaussian { x0, sigma, k0 } => {
                format!("gaussian(x0={x0:?},sigma={sigma:?},k0={k0:?})")
            }
            Scenario::Coherent { x0, omega } => format!("coherent(x0={x0:?},omega={omega:?})"),
            Scenario::TwoGaussianSuperposition { separation, sigma, k0 } => {
                format!("two-gaussian(a={separation},sigma={sigma},k0={k0})")
            }
            Scenario::TwoParticleCorrelatedGaussian { sigma, correlation } => {
                format!("correlated-gaussian(sigma={sigma},c={correlation})")
            }
        }
    }

    /// Narrowest density width the grid has to resolve.
    fn min_width(&self, params: &ModelParams, dims: usize) -> f64 {
        match self {
            Scenario::Gaussian { sigma, .. } => {
                sigma.iter().cloned().fold(f64::INFINITY, f64::min)
            }
            Scenario::Coherent { omega, .. } => (0..dims)
                .map(|d| {
                    let w = omega[d.min(omega.len() - 1)];
                    (params.hbar / (2.0 * params.mass(d) * w)).sqrt()
                })
                .fold(f64::INFINITY, f64::min),
            Scenario::TwoGaussianSuperposition { sigma, .. } => *sigma,
            Scenario::TwoParticleCorrelatedGaussian { sigma, correlation } => {
                sigma * (1.0 - correlation.abs()).max(0.0).sqrt()
            }
        }
    }
}

pub fn init_scenario(
    scenario: &Scenario,
    grid: &Arc<Grid>,
    params: &ModelParams,
) -> Result<WaveState> {
    params.validate()?;
    let dims = grid.dims();
    match scenario {
        Scenario::TwoGaussianSuperposition { .. } if dims != 1 => {
            return Err(EdError::BadDims(dims));
        }
        Scenario::TwoParticleCorrelatedGaussian { .. } if dims != 2 => {
            return Err(EdError::BadDims(dims));
        }
        _ => {}
    }
    let width = scenario.min_width(params, dims);
    let spacing = grid.min_spacing();
    if !(width >= 3.0 * spacing) {
        return Err(EdError::UnderResolved { sigma: width, spacing });
    }

    // density and phase on the grid
    let n = grid.len();
    let mut rho = vec![0.0; n];
    let mut phase = vec![0.0; n];
    let mut slope = vec![0.0; dims];

    match scenario {
        Scenario::Gaussian { x0, sigma, k0 } => {
            for d in 0..dims {
                slope[d] = params.hbar * k0.get(d).copied().unwrap_or(0.0);
            }
            fill_product_gaussian(grid, &mut rho, x0, sigma);
            for flat in 0..n {
                let pos = grid.position(flat);
                phase[flat] = (0..dims).map(|d| slope[d] * pos[d]).sum();
            }
        }
        Scenario::Coherent { x0, omega } => {
            let sigma: Vec<f64> = (0..dims)
                .map(|d| {
                    let w = omega[d.min(omega.len() - 1)];
                    (params.hbar / (2.0 * params.mass(d) * w)).sqrt()
                })
                .collect();
            fill_product_gaussian(grid, &mut rho, x0, &sigma);
        }
        Scenario::TwoGaussianSuperposition { separation, sigma, k0 } => {
            let a = *separation;
            let mut psi: Vec<Complex64> = (0..n)
                .map(|flat| {
                    let x = grid.position(flat)[0];
                    let left = Complex64::from_polar(
                        (-(x + a).powi(2) / (4.0 * sigma * sigma)).exp(),
                        k0 * x,
                    );
                    let right = Complex64::from_polar(
                        (-(x - a).powi(2) / (4.0 * sigma * sigma)).exp(),
                        -k0 * x,
                    );
                    left + right
                })
                .collect();
            let norm: f64 = grid.quadrature(&psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>());
            let s = 1.0 / norm.sqrt();
            for z in psi.iter_mut() {
                *z *= s;
            }
            return match params.class() {
                DynClass::Quantum => {
                    WaveState::from_psi(Arc::clone(grid), psi, params.hbar, 0.0)
                }
                DynClass::Hybrid => {
                    let tmp =
                        WaveState::from_psi(Arc::clone(grid), psi, params.hbar, 0.0)?;
                    let rho = tmp.rho();
                    let phi = tmp.phase();
                    WaveState::from_rho_phi(Arc::clone(grid), rho, phi, vec![0.0], 0.0)
                }
            };
        }
        Scenario::TwoParticleCorrelatedGaussian { sigma, correlation } => {
            let c = *correlation;
            if c.abs() >= 1.0 {
                return Err(EdError::InvalidInput(format!(
                    "correlation must satisfy |c| < 1, got {c}"
                )));
            }
            let det = sigma * sigma * (1.0 - c * c);
            for flat in 0..n {
                let [x1, x2] = grid.position(flat);
                let q = (x1 * x1 - 2.0 * c * x1 * x2 + x2 * x2) / (2.0 * det);
                rho[flat] = (-q).exp();
            }
        }
    }

    // normalize numerically
    let total = grid.quadrature(&rho);
    for r in rho.iter_mut() {
        *r /= total;
    }

    match params.class() {
        DynClass::Quantum => {
            let psi: Vec<Complex64> = rho
                .iter()
                .zip(&phase)
                .map(|(&r, &p)| Complex64::from_polar(r.sqrt(), p / params.hbar))
                .collect();
            WaveState::from_psi(Arc::clone(grid), psi, params.hbar, 0.0)
        }
        DynClass::Hybrid => {
            // the linear part of the phase is carried by the slope
            let phi_tilde = vec![0.0; n];
            WaveState::from_rho_phi(Arc::clone(grid), rho, phi_tilde, slope, 0.0)
        }
    }
}

fn fill_product_gaussian(grid: &Grid, rho: &mut [f64], x0: &[f64], sigma: &[f64]) {
    for flat in 0..grid.len() {
        let pos = grid.position(flat);
        let mut q = 0.0;
        for d in 0..grid.dims() {
            let c = x0.get(d).copied().unwrap_or(0.0);
            let s = sigma[d.min(sigma.len() - 1)];
            let dx = pos[d] - c;
            q += dx * dx / (2.0 * s * s);
        }
        rho[flat] = (-q).exp();
    }
}
