//! Stochastic walker ensembles riding the (rho, Phi) fields.
//!
//! Walkers move by drift plus Gaussian fluctuation with variance epsilon/m
//! per unit time; epsilon = 0 degenerates to deterministic integration along
//! the probability flow (the Bohmian member of the family). All randomness
//! comes from counter-based streams, so runs are reproducible bit-exactly
//! for a given (seed, scenario, params) regardless of thread count.

pub mod interp;
pub mod rng;

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{EdError, Result};
use crate::fields::{self, HybridStepper, QuantumStepper};
use crate::grid::Grid;
use crate::params::{DynClass, ModelParams};
use crate::state::{WaveState, BULK_SUPPORT_REL};

pub const MAX_SUBSTEPS: usize = 16;

/// Walker positions plus the stream bookkeeping needed to replay them.
#[derive(Debug, Clone)]
pub struct EnsembleState {
    grid: Arc<Grid>,
    /// M x D row-major coordinates, always wrapped into the box.
    positions: Vec<f64>,
    time: f64,
    seed: u64,
    /// Field-step counter; stream position for every walker.
    step_counter: u64,
    /// Walkers flagged after leaving resolvable support (Bohmian runs).
    frozen: Vec<bool>,
}

impl EnsembleState {
    pub fn with_positions(
        grid: Arc<Grid>,
        mut positions: Vec<f64>,
        seed: u64,
        time: f64,
    ) -> Result<Self> {
        let dims = grid.dims();
        if positions.is_empty() || positions.len() % dims != 0 {
            return Err(EdError::EmptyEnsemble);
        }
        if positions.iter().any(|p| !p.is_finite()) {
            return Err(EdError::InvalidInput("walker positions must be finite".into()));
        }
        let m = positions.len() / dims;
        for w in 0..m {
            for d in 0..dims {
                positions[w * dims + d] = grid.wrap(d, positions[w * dims + d]);
            }
        }
        Ok(EnsembleState {
            grid,
            positions,
            time,
            seed,
            step_counter: 0,
            frozen: vec![false; m],
        })
    }

    pub fn walkers(&self) -> usize {
        self.positions.len() / self.grid.dims()
    }

    pub fn dims(&self) -> usize {
        self.grid.dims()
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn coords_of_dim(&self, dim: usize) -> Vec<f64> {
        let d = self.grid.dims();
        self.positions.iter().skip(dim).step_by(d).copied().collect()
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn frozen(&self) -> &[bool] {
        &self.frozen
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
}

/// Everything walkers interpolate from one field snapshot.
#[derive(Debug, Clone)]
pub struct DriftFields {
    pub grid: Arc<Grid>,
    pub time: f64,
    /// Current velocity v = grad Phi / m, per dimension.
    pub current: Vec<Vec<f64>>,
    /// Clamped grad ln rho, per dimension.
    pub grad_ln_rho: Vec<Vec<f64>>,
    pub rho: Vec<f64>,
    pub max_rho: f64,
}

impl DriftFields {
    pub fn from_state(state: &WaveState, params: &ModelParams) -> Result<Self> {
        let grid = state.grid_arc();
        let rho = state.rho();
        let grad_phi = state.grad_phase();
        let current: Vec<Vec<f64>> = (0..grid.dims())
            .map(|d| {
                let m = params.mass(d);
                grad_phi[d].iter().map(|&g| g / m).collect()
            })
            .collect();
        let grad_ln_rho = fields::grad_ln_rho(&grid, &rho);
        let max_rho = rho.iter().cloned().fold(0.0_f64, f64::max);
        Ok(DriftFields {
            grid,
            time: state.time(),
            current,
            grad_ln_rho,
            rho,
            max_rho,
        })
    }

    #[inline]
    fn in_support(&self, pos: &[f64]) -> bool {
        interp::interp_linear(&self.grid, &self.rho, pos) >= BULK_SUPPORT_REL * self.max_rho
    }

    #[inline]
    fn velocity(&self, pos: &[f64], dim: usize) -> f64 {
        interp::interp_cubic(&self.grid, &self.current[dim], pos)
    }

    #[inline]
    fn grad_ln_rho_at(&self, pos: &[f64], dim: usize) -> f64 {
        interp::interp_linear(&self.grid, &self.grad_ln_rho[dim], pos)
    }
}

/// Draw M walkers i.i.d. from the grid density by inverse CDF (conditional
/// inverse CDF in 2-D). Deterministic in the seed.
pub fn sample_initial(grid: &Arc<Grid>, rho: &[f64], m: usize, seed: u64) -> Result<EnsembleState> {
    if m == 0 {
        return Err(EdError::EmptyEnsemble);
    }
    grid.check_field_len(rho.len())?;
    let dims = grid.dims();
    let mut positions = vec![0.0; m * dims];
    match dims {
        1 => {
            let cdf = crate::stats::MarginalCdf::new(grid, rho, 0);
            for w in 0..m {
                let u = rng::uniform_open(seed, w as u64, rng::SAMPLE_STREAM_STEP, 0);
                positions[w] = grid.wrap(0, cdf.sample(1.0 - u));
            }
        }
        _ => {
            let n0 = grid.points(0);
            let n1 = grid.points(1);
            let marg0 = crate::stats::MarginalCdf::new(grid, rho, 0);
            // conditional CDFs per row of the first coordinate
            let mut row_cum: Vec<Vec<f64>> = Vec::with_capacity(n0);
            for i0 in 0..n0 {
                let mut acc = 0.0;
                let mut cum = Vec::with_capacity(n1);
                for j in 0..n1 {
                    acc += rho[i0 * n1 + j].max(0.0);
                    cum.push(acc);
                }
                let total = acc.max(f64::MIN_POSITIVE);
                for c in cum.iter_mut() {
                    *c /= total;
                }
                row_cum.push(cum);
            }
            let h0 = grid.spacing(0);
            let l0 = grid.extent(0);
            for w in 0..m {
                let u0 = rng::uniform_open(seed, w as u64, rng::SAMPLE_STREAM_STEP, 0);
                let u1 = rng::uniform_open(seed, w as u64, rng::SAMPLE_STREAM_STEP, 1);
                let x0 = marg0.sample(1.0 - u0);
                // nearest cell center picks the conditional row
                let i0 = (((x0 + 0.5 * l0) / h0).round() as i64).rem_euclid(n0 as i64) as usize;
                let x1 = sample_row(&row_cum[i0], grid, 1, 1.0 - u1);
                positions[w * 2] = grid.wrap(0, x0);
                positions[w * 2 + 1] = grid.wrap(1, x1);
            }
        }
    }
    EnsembleState::with_positions(Arc::clone(grid), positions, seed, 0.0)
}

fn sample_row(cumulative: &[f64], grid: &Grid, dim: usize, u: f64) -> f64 {
    let n = cumulative.len();
    let mut lo = 0usize;
    let mut hi = n - 1;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if cumulative[mid] < u {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    let below = if lo == 0 { 0.0 } else { cumulative[lo - 1] };
    let mass = (cumulative[lo] - below).max(f64::MIN_POSITIVE);
    let frac = ((u - below) / mass).clamp(0.0, 1.0 - 1e-15);
    let h = grid.spacing(dim);
    let left = grid.coord(dim, lo) - 0.5 * h;
    left + frac * h
}

/// One drift-plus-fluctuation step for every walker, with the fields held
/// frozen at the step start. Substeps refine the drift integration without
/// refreshing the fields.
pub fn step_walkers(
    ens: &EnsembleState,
    fields: &DriftFields,
    params: &ModelParams,
    dt: f64,
    substeps: usize,
) -> Result<EnsembleState> {
    params.validate()?;
    if params.epsilon < 0.0 {
        return Err(EdError::NegativeEpsilon(params.epsilon));
    }
    if substeps == 0 || substeps > MAX_SUBSTEPS {
        return Err(EdError::BadSubstepCount(substeps));
    }
    if (fields.time - ens.time).abs() > 1e-9 * ens.time.abs().max(1.0) {
        return Err(EdError::TimeMismatch { field_time: fields.time, ensemble_time: ens.time });
    }
    let grid = &ens.grid;
    let dims = grid.dims();
    let eps = params.epsilon;
    let dts = dt / substeps as f64;
    let seed = ens.seed;
    let step_idx = ens.step_counter;

    let mut next = ens.clone();
    next.positions
        .par_chunks_mut(dims)
        .enumerate()
        .for_each(|(w, pos)| {
            let mut p = [0.0_f64; 2];
            p[..dims].copy_from_slice(pos);
            for s in 0..substeps {
                let in_support = fields.in_support(&p[..dims]);
                for d in 0..dims {
                    let m = params.mass(d);
                    let (v, gl) = if in_support {
                        (
                            fields.velocity(&p[..dims], d),
                            fields.grad_ln_rho_at(&p[..dims], d),
                        )
                    } else {
                        (0.0, 0.0)
                    };
                    let drift = v + eps / (2.0 * m) * gl;
                    let mut dx = drift * dts;
                    if eps > 0.0 {
                        let z = rng::normal(seed, w as u64, step_idx, (s * dims + d) as u64);
                        dx += (eps * dts / m).sqrt() * z;
                    }
                    p[d] += dx;
                }
            }
            for d in 0..dims {
                pos[d] = grid.wrap(d, p[d]);
            }
        });
    next.time += dt;
    next.step_counter += 1;
    Ok(next)
}

/// Velocity field pair bracketing one step, linearly interpolated in time.
pub struct VelocitySpan<'a> {
    pub start: &'a DriftFields,
    pub end: &'a DriftFields,
}

impl VelocitySpan<'_> {
    #[inline]
    fn velocity(&self, pos: &[f64], frac: f64, dim: usize) -> f64 {
        let a = self.start.velocity(pos, dim);
        let b = self.end.velocity(pos, dim);
        a + (b - a) * frac
    }
}

/// RK4 integration of dx/dt = v(x, t) for every walker across one step.
/// Walkers whose position has left resolvable support are frozen in place
/// and flagged.
pub fn step_bohmian(ens: &EnsembleState, span: &VelocitySpan, dt: f64) -> Result<EnsembleState> {
    if (span.start.time - ens.time).abs() > 1e-9 * ens.time.abs().max(1.0) {
        return Err(EdError::TimeMismatch {
            field_time: span.start.time,
            ensemble_time: ens.time,
        });
    }
    let grid = &ens.grid;
    let dims = grid.dims();
    let mut next = ens.clone();
    let frozen = std::sync::Mutex::new(Vec::new());
    next.positions
        .par_chunks_mut(dims)
        .enumerate()
        .for_each(|(w, pos)| {
            if ens.frozen[w] {
                return;
            }
            let mut p = [0.0_f64; 2];
            p[..dims].copy_from_slice(pos);
            if !span.start.in_support(&p[..dims]) {
                frozen.lock().unwrap().push(w);
                return;
            }
            let mut k1 = [0.0_f64; 2];
            let mut k2 = [0.0_f64; 2];
            let mut k3 = [0.0_f64; 2];
            let mut k4 = [0.0_f64; 2];
            let mut stage = [0.0_f64; 2];
            for d in 0..dims {
                k1[d] = span.velocity(&p[..dims], 0.0, d);
            }
            for d in 0..dims {
                stage[d] = p[d] + 0.5 * dt * k1[d];
            }
            for d in 0..dims {
                k2[d] = span.velocity(&stage[..dims], 0.5, d);
            }
            for d in 0..dims {
                stage[d] = p[d] + 0.5 * dt * k2[d];
            }
            for d in 0..dims {
                k3[d] = span.velocity(&stage[..dims], 0.5, d);
            }
            for d in 0..dims {
                stage[d] = p[d] + dt * k3[d];
            }
            for d in 0..dims {
                k4[d] = span.velocity(&stage[..dims], 1.0, d);
            }
            for d in 0..dims {
                let v = (k1[d] + 2.0 * (k2[d] + k3[d]) + k4[d]) / 6.0;
                pos[d] = grid.wrap(d, p[d] + dt * v);
            }
        });
    for w in frozen.into_inner().unwrap() {
        next.frozen[w] = true;
    }
    next.time += dt;
    next.step_counter += 1;
    Ok(next)
}

/// Recorded trajectories: positions at every cadence time for every walker.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// times x walkers x dims, row-major.
    pub positions: Vec<f64>,
    pub walkers: usize,
    pub dims: usize,
    pub epsilon: f64,
    pub scenario_id: String,
    pub seed: u64,
}

impl TrajectoryRecord {
    pub fn positions_at(&self, time_index: usize) -> &[f64] {
        let stride = self.walkers * self.dims;
        &self.positions[time_index * stride..(time_index + 1) * stride]
    }

    pub fn coord(&self, time_index: usize, walker: usize, dim: usize) -> f64 {
        self.positions[time_index * self.walkers * self.dims + walker * self.dims + dim]
    }

    pub fn coords_of_dim(&self, time_index: usize, dim: usize) -> Vec<f64> {
        let at = self.positions_at(time_index);
        at.iter().skip(dim).step_by(self.dims).copied().collect()
    }
}

#[derive(Debug, Clone)]
pub struct CoupledRunSpec {
    pub t_final: f64,
    /// Field steps between recordings.
    pub record_every: usize,
    pub walkers: usize,
    pub seed: u64,
    pub substeps: usize,
    pub label: String,
}

#[derive(Debug, Clone)]
pub struct HaltInfo {
    pub time: f64,
    pub reason: String,
}

pub struct CoupledRun {
    pub times: Vec<f64>,
    pub states: Vec<WaveState>,
    pub trajectory: TrajectoryRecord,
    pub norms: Vec<f64>,
    pub energies: Vec<f64>,
    pub halt: Option<HaltInfo>,
}

enum Stepper {
    Quantum(QuantumStepper),
    Hybrid(HybridStepper),
}

impl Stepper {
    fn step(&self, state: &WaveState) -> Result<WaveState> {
        match self {
            Stepper::Quantum(s) => s.step(state),
            Stepper::Hybrid(s) => s.step(state),
        }
    }
}

/// Interleaved evolution: fields advance one dt, then walkers advance one dt
/// using the step-start fields (epsilon > 0) or the bracketing snapshot pair
/// (epsilon = 0). A hybrid caustic halt truncates the run and is reported in
/// `halt` rather than discarding the data collected so far.
pub fn run_coupled(
    initial: &WaveState,
    params: &ModelParams,
    potential: &[f64],
    spec: &CoupledRunSpec,
    initial_positions: Option<&[f64]>,
) -> Result<CoupledRun> {
    params.validate()?;
    if spec.record_every == 0 {
        return Err(EdError::InvalidInput("record_every must be positive".into()));
    }
    let dt = params.dt;
    let n_steps = (spec.t_final / dt).round() as usize;
    if n_steps == 0 {
        return Err(EdError::InvalidInput(format!(
            "t_final {} shorter than one step dt {}",
            spec.t_final, dt
        )));
    }
    let grid = initial.grid_arc();
    let stepper = match params.class() {
        DynClass::Quantum => {
            Stepper::Quantum(QuantumStepper::new(Arc::clone(&grid), params, potential, dt)?)
        }
        DynClass::Hybrid => {
            Stepper::Hybrid(HybridStepper::new(Arc::clone(&grid), params, potential, dt)?)
        }
    };

    let mut ens = match initial_positions {
        Some(pos) => EnsembleState::with_positions(Arc::clone(&grid), pos.to_vec(), spec.seed, 0.0)?,
        None => sample_initial(&grid, &initial.rho(), spec.walkers, spec.seed)?,
    };

    let mut state = initial.clone();
    let mut cur_fields = DriftFields::from_state(&state, params)?;

    let mut times = Vec::new();
    let mut states = Vec::new();
    let mut norms = Vec::new();
    let mut energies = Vec::new();
    let mut traj_positions = Vec::new();
    let mut halt = None;

    let record = |state: &WaveState, ens: &EnsembleState,
                      times: &mut Vec<f64>,
                      states: &mut Vec<WaveState>,
                      norms: &mut Vec<f64>,
                      energies: &mut Vec<f64>,
                      traj: &mut Vec<f64>|
     -> Result<()> {
        times.push(state.time());
        norms.push(state.norm());
        energies.push(fields::ensemble_hamiltonian(state, params, potential)?);
        states.push(state.clone());
        traj.extend_from_slice(ens.positions());
        Ok(())
    };

    record(&state, &ens, &mut times, &mut states, &mut norms, &mut energies, &mut traj_positions)?;

    for step in 1..=n_steps {
        let next_state = match stepper.step(&state) {
            Ok(s) => s,
            Err(EdError::CausticDetected { time, compression }) => {
                halt = Some(HaltInfo {
                    time,
                    reason: format!(
                        "caustic detected: |dv/dx|*dt = {compression:.3} exceeded {} on the bulk support",
                        crate::fields::CAUSTIC_COMPRESSION_LIMIT
                    ),
                });
                break;
            }
            Err(EdError::SupportUnderResolved { time, tail_fraction }) => {
                halt = Some(HaltInfo {
                    time,
                    reason: format!(
                        "density support fell below grid resolution (spectral tail {tail_fraction:.2e}); caustic approaching"
                    ),
                });
                break;
            }
            Err(e) => return Err(e),
        };
        if params.epsilon == 0.0 {
            let next_fields = DriftFields::from_state(&next_state, params)?;
            let span = VelocitySpan { start: &cur_fields, end: &next_fields };
            ens = step_bohmian(&ens, &span, dt)?;
            cur_fields = next_fields;
        } else {
            ens = step_walkers(&ens, &cur_fields, params, dt, spec.substeps)?;
            cur_fields = DriftFields::from_state(&next_state, params)?;
        }
        state = next_state;
        if step % spec.record_every == 0 {
            record(&state, &ens, &mut times, &mut states, &mut norms, &mut energies, &mut traj_positions)?;
        }
    }

    let trajectory = TrajectoryRecord {
        times: times.clone(),
        positions: traj_positions,
        walkers: ens.walkers(),
        dims: grid.dims(),
        epsilon: params.epsilon,
        scenario_id: spec.label.clone(),
        seed: spec.seed,
    };
    Ok(CoupledRun { times, states, trajectory, norms, energies, halt })
}
