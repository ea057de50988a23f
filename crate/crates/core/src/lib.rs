//! Simulation engine for entropic dynamics at desk scale.
//!
//! The macroscopic state is a pair (rho, Phi) on a periodic grid, evolved
//! either by the linear Schroedinger flow (quantum class, xi = hbar^2/8) or
//! by the classical Hamilton-Jacobi flow (hybrid class, xi = 0). Ensembles
//! of walkers ride the fields with a tunable drift/fluctuation trade-off
//! epsilon; epsilon = 0 recovers deterministic transport along the
//! probability flow. The `maxent` module builds the short-step transition
//! kernel both analytically and by brute-force constrained entropy
//! maximization, and `observables` assembles the uncertainty-relation
//! report that is invariant under both epsilon and the class switch.

pub mod ensemble;
pub mod error;
pub mod fields;
pub mod grid;
pub mod io;
pub mod maxent;
pub mod observables;
pub mod params;
pub mod potential;
pub mod scenario;
pub mod spectral;
pub mod state;
pub mod stats;

pub use error::{EdError, Result};
pub use grid::Grid;
pub use params::{DynClass, ModelParams};
pub use potential::PotentialSpec;
pub use scenario::{init_scenario, Scenario};
pub use state::WaveState;
