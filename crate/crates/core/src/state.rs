//! The macroscopic state (rho, Phi).
//!
//! Quantum-class states are stored canonically as the complex field Psi with
//! rho = |Psi|^2 and Phi = hbar * (unwrapped arg Psi). Hybrid-class states
//! store (rho, Phi) directly, with Phi split into a linear slope plus a
//! periodic remainder so plane-phase states stay representable on the
//! periodic box.
//!
//! Derivatives of Phi never go through the unwrapped phase: for Psi states
//! grad Phi = hbar * Im(conj(Psi) dPsi) / rho, which is smooth across phase
//! wraps and nodes; for hybrid states the stored remainder is differentiated
//! spectrally and the slope added back.

use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{EdError, Result};
use crate::grid::Grid;
use crate::params::DynClass;
use crate::spectral;

/// Absolute guard so log rho is always evaluable.
pub const RHO_HARD_FLOOR: f64 = 1e-300;

/// Relative floor below which osmotic/log-derivative quantities are clamped
/// to zero. Densities under this fraction of the peak sit at or below the
/// round-off noise floor of the transforms, where log-gradients are
/// meaningless.
pub const RHO_NOISE_FLOOR_REL: f64 = 1e-13;

/// Relative density threshold defining the bulk support used by the caustic
/// detector and walker-support checks.
pub const BULK_SUPPORT_REL: f64 = 1e-12;

#[derive(Debug, Clone)]
enum Repr {
    Psi { psi: Vec<Complex64>, hbar: f64 },
    RhoPhi {
        rho: Vec<f64>,
        phi_tilde: Vec<f64>,
        slope: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct WaveState {
    grid: Arc<Grid>,
    time: f64,
    repr: Repr,
}

impl WaveState {
    pub fn from_psi(grid: Arc<Grid>, psi: Vec<Complex64>, hbar: f64, time: f64) -> Result<Self> {
        grid.check_field_len(psi.len())?;
        if !(hbar > 0.0) {
            return Err(EdError::BadParams(format!("hbar must be positive, got {hbar}")));
        }
        Ok(WaveState {
            grid,
            time,
            repr: Repr::Psi { psi, hbar },
        })
    }

    pub fn from_rho_phi(
        grid: Arc<Grid>,
        rho: Vec<f64>,
        phi_tilde: Vec<f64>,
        slope: Vec<f64>,
        time: f64,
    ) -> Result<Self> {
        grid.check_field_len(rho.len())?;
        grid.check_field_len(phi_tilde.len())?;
        if slope.len() != grid.dims() {
            return Err(EdError::BadDims(slope.len()));
        }
        if rho.iter().any(|&r| r < -1e-12 || !r.is_finite()) {
            return Err(EdError::InvalidInput(
                "rho must be non-negative and finite".into(),
            ));
        }
        Ok(WaveState {
            grid,
            time,
            repr: Repr::RhoPhi { rho, phi_tilde, slope },
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> Arc<Grid> {
        Arc::clone(&self.grid)
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn class(&self) -> DynClass {
        match self.repr {
            Repr::Psi { .. } => DynClass::Quantum,
            Repr::RhoPhi { .. } => DynClass::Hybrid,
        }
    }

    /// The stored complex field, if this is a quantum-class state.
    pub fn psi_ref(&self) -> Option<&[Complex64]> {
        match &self.repr {
            Repr::Psi { psi, .. } => Some(psi),
            Repr::RhoPhi { .. } => None,
        }
    }

    /// Stored complex field together with the hbar it was built with.
    pub fn psi_with_hbar(&self) -> Option<(&[Complex64], f64)> {
        match &self.repr {
            Repr::Psi { psi, hbar } => Some((psi, *hbar)),
            Repr::RhoPhi { .. } => None,
        }
    }

    /// Hybrid-class parts (rho, periodic phase remainder, phase slope).
    pub fn rho_phi_parts(&self) -> Option<(&[f64], &[f64], &[f64])> {
        match &self.repr {
            Repr::RhoPhi { rho, phi_tilde, slope } => Some((rho, phi_tilde, slope)),
            Repr::Psi { .. } => None,
        }
    }

    /// Probability density on the grid.
    pub fn rho(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Psi { psi, .. } => psi.iter().map(|z| z.norm_sqr()).collect(),
            Repr::RhoPhi { rho, .. } => rho.clone(),
        }
    }

    /// Quadrature of rho over the box.
    pub fn norm(&self) -> f64 {
        self.grid.quadrature(&self.rho())
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let n = self.norm();
        if (n - 1.0).abs() > tol {
            return Err(EdError::InvalidInput(format!(
                "state not normalized: quadrature of rho = {n}"
            )));
        }
        Ok(())
    }

    /// Rescale so the quadrature of rho is exactly 1.
    pub fn normalize(&mut self) {
        let n = self.norm();
        match &mut self.repr {
            Repr::Psi { psi, .. } => {
                let s = 1.0 / n.sqrt();
                for z in psi.iter_mut() {
                    *z *= s;
                }
            }
            Repr::RhoPhi { rho, .. } => {
                let s = 1.0 / n;
                for r in rho.iter_mut() {
                    *r *= s;
                }
            }
        }
    }

    /// Assemble Psi = rho^(1/2) exp(i Phi / hbar). For quantum states this is
    /// the stored field; for hybrid states hbar is the independent unit
    /// constant used solely to define the wave function.
    pub fn psi(&self, hbar: f64) -> Vec<Complex64> {
        match &self.repr {
            Repr::Psi { psi, .. } => psi.clone(),
            Repr::RhoPhi { rho, phi_tilde, slope } => {
                let grid = &self.grid;
                (0..grid.len())
                    .map(|flat| {
                        let amp = rho[flat].max(0.0).sqrt();
                        let pos = grid.position(flat);
                        let mut phi = phi_tilde[flat];
                        for d in 0..grid.dims() {
                            phi += slope[d] * pos[d];
                        }
                        Complex64::from_polar(amp, phi / hbar)
                    })
                    .collect()
            }
        }
    }

    /// Per-coordinate gradient of the phase Phi.
    ///
    /// Where rho sits below the noise floor the gradient is clamped to zero.
    pub fn grad_phase(&self) -> Vec<Vec<f64>> {
        match &self.repr {
            Repr::Psi { psi, hbar } => {
                let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
                let floor = rho.iter().cloned().fold(0.0_f64, f64::max) * RHO_NOISE_FLOOR_REL;
                (0..self.grid.dims())
                    .map(|d| {
                        let dpsi = spectral::derivative_complex(&self.grid, psi, d);
                        psi.iter()
                            .zip(&dpsi)
                            .zip(&rho)
                            .map(|((z, dz), &r)| {
                                if r <= floor.max(RHO_HARD_FLOOR) {
                                    0.0
                                } else {
                                    hbar * (z.conj() * dz).im / r
                                }
                            })
                            .collect()
                    })
                    .collect()
            }
            Repr::RhoPhi { phi_tilde, slope, .. } => (0..self.grid.dims())
                .map(|d| {
                    let mut g = spectral::derivative(&self.grid, phi_tilde, d);
                    for v in g.iter_mut() {
                        *v += slope[d];
                    }
                    g
                })
                .collect(),
        }
    }

    /// The phase Phi on the grid. Quantum states are unwrapped along grid
    /// lines starting from the density maximum; hybrid states return
    /// slope . x + remainder directly.
    pub fn phase(&self) -> Vec<f64> {
        match &self.repr {
            Repr::Psi { psi, hbar } => {
                let theta = unwrap_phase(&self.grid, psi);
                theta.iter().map(|&t| t * hbar).collect()
            }
            Repr::RhoPhi { phi_tilde, slope, .. } => (0..self.grid.len())
                .map(|flat| {
                    let pos = self.grid.position(flat);
                    let mut phi = phi_tilde[flat];
                    for d in 0..self.grid.dims() {
                        phi += slope[d] * pos[d];
                    }
                    phi
                })
                .collect(),
        }
    }

    /// Winding numbers of the phase around each periodic direction, measured
    /// along the grid lines through the density maximum. Diagnostic only.
    pub fn phase_winding(&self) -> Vec<i64> {
        match &self.repr {
            Repr::RhoPhi { .. } => vec![0; self.grid.dims()],
            Repr::Psi { psi, .. } => {
                let grid = &self.grid;
                let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
                let imax = argmax(&rho);
                let start = grid.unravel(imax);
                (0..grid.dims())
                    .map(|d| {
                        let n = grid.points(d);
                        let mut total = 0.0;
                        let mut idx = start;
                        let mut prev = psi[grid.flat_index(&idx)].arg();
                        for _ in 0..n {
                            idx[d] = (idx[d] + 1) % n;
                            let cur = psi[grid.flat_index(&idx)].arg();
                            total += wrap_to_pi(cur - prev);
                            prev = cur;
                        }
                        (total / (2.0 * std::f64::consts::PI)).round() as i64
                    })
                    .collect()
            }
        }
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &v) in values.iter().enumerate() {
        if v > best_v {
            best_v = v;
            best = i;
        }
    }
    best
}

fn wrap_to_pi(x: f64) -> f64 {
    use std::f64::consts::PI;
    let mut y = (x + PI).rem_euclid(2.0 * PI) - PI;
    if y <= -PI {
        y += 2.0 * PI;
    }
    y
}

/// Congruence unwrapping of arg(psi) along grid lines from the density
/// maximum. Increments across cells below the density floor carry the last
/// valid value forward.
fn unwrap_phase(grid: &Grid, psi: &[Complex64]) -> Vec<f64> {
    let rho: Vec<f64> = psi.iter().map(|z| z.norm_sqr()).collect();
    let floor = rho.iter().cloned().fold(0.0_f64, f64::max) * RHO_NOISE_FLOOR_REL;
    let imax = argmax(&rho);
    let mut out = vec![0.0; psi.len()];

    match grid.dims() {
        1 => {
            unwrap_line_offset(psi, &rho, floor, 0, imax, 1, psi.len(), &mut out);
        }
        _ => {
            let n1 = grid.points(1);
            let n0 = grid.points(0);
            let [i0max, i1max] = grid.unravel(imax);
            // row through the maximum, along axis 1
            unwrap_line_offset(psi, &rho, floor, i0max * n1, i1max, 1, n1, &mut out);
            // then each column, along axis 0, anchored on that row
            for j in 0..n1 {
                unwrap_line_offset(psi, &rho, floor, j, i0max, n1, n0, &mut out);
            }
        }
    }
    out
}

/// Unwrap along one grid line: `offset + i*stride` for i in 0..count,
/// starting at line position `anchor_pos`, whose unwrapped value is taken
/// from `out` (so columns chain off the anchored row).
#[allow(clippy::too_many_arguments)]
fn unwrap_line_offset(
    psi: &[Complex64],
    rho: &[f64],
    floor: f64,
    offset: usize,
    anchor_pos: usize,
    stride: usize,
    count: usize,
    out: &mut [f64],
) {
    let at = |i: usize| offset + (i % count) * stride;
    let anchor_idx = at(anchor_pos);
    let mut prev_val = out[anchor_idx];
    if prev_val == 0.0 {
        // anchor not yet assigned: use the raw argument
        prev_val = psi[anchor_idx].arg();
        out[anchor_idx] = prev_val;
    }
    let mut prev_arg = psi[anchor_idx].arg();
    // forward sweep with periodic wrap, stopping one before the anchor
    for step in 1..count {
        let i = at(anchor_pos + step);
        let arg = psi[i].arg();
        let delta = if rho[i] <= floor.max(RHO_HARD_FLOOR) {
            0.0
        } else {
            wrap_to_pi(arg - prev_arg)
        };
        out[i] = prev_val + delta;
        prev_val = out[i];
        prev_arg = arg;
    }
}
