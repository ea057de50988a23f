//! Physical constants and model knobs shared by every solver.

use serde::{Deserialize, Serialize};

use crate::error::{EdError, Result};

/// Dynamical class selected by the quantum-potential coefficient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DynClass {
    /// xi = hbar^2/8: linear Schroedinger flow.
    Quantum,
    /// xi = 0: classical Hamilton-Jacobi flow with hbar as an independent unit constant.
    Hybrid,
}

impl DynClass {
    pub fn label(self) -> &'static str {
        match self {
            DynClass::Quantum => "quantum",
            DynClass::Hybrid => "hybrid",
        }
    }
}

/// Model parameters: one mass per configuration-space coordinate, the unit
/// constant hbar, the quantum-potential coefficient xi, the microscopic
/// diffusion scale epsilon, the unit-fixing constant eta_tilde, and the field
/// step dt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub masses: Vec<f64>,
    pub hbar: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub eta_tilde: f64,
    pub dt: f64,
}

impl ModelParams {
    /// Quantum-class parameters; xi is derived as hbar^2/8 so the consistency
    /// relation holds exactly.
    pub fn quantum(masses: &[f64], hbar: f64, epsilon: f64, eta_tilde: f64, dt: f64) -> Result<Self> {
        let params = ModelParams {
            masses: masses.to_vec(),
            hbar,
            xi: hbar * hbar / 8.0,
            epsilon,
            eta_tilde,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    /// Hybrid-class parameters: xi = 0, hbar an independent input.
    pub fn hybrid(masses: &[f64], hbar: f64, epsilon: f64, eta_tilde: f64, dt: f64) -> Result<Self> {
        let params = ModelParams {
            masses: masses.to_vec(),
            hbar,
            xi: 0.0,
            epsilon,
            eta_tilde,
            dt,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if self.masses.is_empty() {
            return Err(EdError::BadParams("at least one mass required".into()));
        }
        if self.masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(EdError::BadParams(format!("masses must be positive and finite: {:?}", self.masses)));
        }
        if !(self.hbar > 0.0) || !self.hbar.is_finite() {
            return Err(EdError::BadParams(format!("hbar must be positive, got {}", self.hbar)));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(EdError::BadParams(format!("dt must be positive, got {}", self.dt)));
        }
        if self.epsilon < 0.0 || !self.epsilon.is_finite() {
            return Err(EdError::NegativeEpsilon(self.epsilon));
        }
        if self.xi < 0.0 || !self.xi.is_finite() {
            return Err(EdError::BadParams(format!("xi must be non-negative, got {}", self.xi)));
        }
        if !(self.eta_tilde > 0.0) || !self.eta_tilde.is_finite() {
            return Err(EdError::BadParams(format!("eta_tilde must be positive, got {}", self.eta_tilde)));
        }
        if self.xi > 0.0 {
            let expected = self.hbar * self.hbar / 8.0;
            if (self.xi - expected).abs() > 4.0 * f64::EPSILON * expected {
                return Err(EdError::XiHbarMismatch { xi: self.xi, expected });
            }
        }
        Ok(())
    }

    pub fn class(&self) -> DynClass {
        if self.xi > 0.0 {
            DynClass::Quantum
        } else {
            DynClass::Hybrid
        }
    }

    pub fn mass(&self, dim: usize) -> f64 {
        self.masses[dim.min(self.masses.len() - 1)]
    }

    /// Drift-fluctuation ratio knob: alpha' = eta_tilde / epsilon.
    /// Returns infinity in the Bohmian limit epsilon = 0.
    pub fn alpha_prime(&self) -> f64 {
        if self.epsilon == 0.0 {
            f64::INFINITY
        } else {
            self.eta_tilde / self.epsilon
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        let mut p = self.clone();
        p.epsilon = epsilon;
        p.validate()?;
        Ok(p)
    }

    pub fn with_dt(&self, dt: f64) -> Result<Self> {
        let mut p = self.clone();
        p.dt = dt;
        p.validate()?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantum_constructor_fixes_xi() {
        let p = ModelParams::quantum(&[1.0], 2.0, 0.5, 1.0, 1e-3).unwrap();
        assert_eq!(p.xi, 0.5);
        assert_eq!(p.class(), DynClass::Quantum);
    }

    #[test]
    fn hybrid_has_independent_hbar() {
        let p = ModelParams::hybrid(&[1.0], 3.7, 0.5, 1.0, 1e-3).unwrap();
        assert_eq!(p.xi, 0.0);
        assert_eq!(p.hbar, 3.7);
        assert_eq!(p.class(), DynClass::Hybrid);
    }

    #[test]
    fn xi_hbar_consistency_enforced() {
        let p = ModelParams {
            masses: vec![1.0],
            hbar: 1.0,
            xi: 0.2,
            epsilon: 1.0,
            eta_tilde: 1.0,
            dt: 1e-3,
        };
        assert!(matches!(p.validate(), Err(EdError::XiHbarMismatch { .. })));
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(ModelParams::quantum(&[0.0], 1.0, 1.0, 1.0, 1e-3).is_err());
        assert!(ModelParams::quantum(&[1.0], -1.0, 1.0, 1.0, 1e-3).is_err());
        assert!(ModelParams::quantum(&[1.0], 1.0, -0.1, 1.0, 1e-3).is_err());
        assert!(ModelParams::quantum(&[1.0], 1.0, 1.0, 1.0, 0.0).is_err());
        assert!(ModelParams::quantum(&[1.0], 1.0, 1.0, 0.0, 1e-3).is_err());
    }

    #[test]
    fn alpha_prime_maps_epsilon() {
        let p = ModelParams::quantum(&[1.0], 1.0, 0.25, 1.0, 1e-3).unwrap();
        assert_eq!(p.alpha_prime(), 4.0);
        let b = p.with_epsilon(0.0).unwrap();
        assert!(b.alpha_prime().is_infinite());
    }
}
