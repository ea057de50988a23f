//! Analytic-solution oracles for the split-step quantum flow.

use std::sync::Arc;

use edlab_core::fields::{ensemble_hamiltonian, QuantumStepper};
use edlab_core::observables::uncertainty_report;
use edlab_core::potential::PotentialSpec;
use edlab_core::{init_scenario, Grid, ModelParams, Scenario, WaveState};

fn var_x(state: &WaveState) -> f64 {
    let grid = state.grid();
    let rho = state.rho();
    let mut mean = 0.0;
    let mut second = 0.0;
    for i in 0..grid.len() {
        let x = grid.coord(0, i);
        mean += rho[i] * x;
        second += rho[i] * x * x;
    }
    let vol = grid.cell_volume();
    let mean = mean * vol;
    second * vol - mean * mean
}

fn mean_x(state: &WaveState) -> f64 {
    let grid = state.grid();
    let rho = state.rho();
    let mut mean = 0.0;
    for i in 0..grid.len() {
        mean += rho[i] * grid.coord(0, i);
    }
    mean * grid.cell_volume()
}

#[test]
fn free_packet_variance_matches_analytic_spreading() {
    // Var(x)(t) = sigma0^2 (1 + (hbar t / 2 m sigma0^2)^2); equals 2.0 at t = 2
    let g = Arc::new(Grid::build(1, 1024, 40.0).unwrap());
    let dt = 2e-3;
    let p = ModelParams::quantum(&[1.0], 1.0, 1.0, 1.0, dt).unwrap();
    let st0 = init_scenario(
        &Scenario::Gaussian { x0: vec![0.0], sigma: vec![1.0], k0: vec![0.0] },
        &g,
        &p,
    )
    .unwrap();
    let v = vec![0.0; g.len()];
    let stepper = QuantumStepper::new(Arc::clone(&g), &p, &v, dt).unwrap();
    let mut st = st0;
    for _ in 0..1000 {
        st = stepper.step(&st).unwrap();
    }
    let t = st.time();
    let expect = 1.0 + (t / 2.0) * (t / 2.0);
    let got = var_x(&st);
    assert!(
        (got - expect).abs() < 1e-3 * expect,
        "Var(x)({t}) = {got}, analytic {expect}"
    );
}

#[test]
fn coherent_state_oscillates_at_the_trap_period() {
    let g = Arc::new(Grid::build(1, 1024, 40.0).unwrap());
    let dt = 1e-3;
    let p = ModelParams::quantum(&[1.0], 1.0, 1.0, 1.0, dt).unwrap();
    let spec = PotentialSpec::Harmonic { omega: vec![1.0] };
    let v = spec.evaluate(&g, &p.masses).unwrap();
    let st0 = init_scenario(&Scenario::Coherent { x0: vec![1.0], omega: vec![1.0] }, &g, &p).unwrap();
    let stepper = QuantumStepper::new(Arc::clone(&g), &p, &v, dt).unwrap();
    let mut st = st0;
    let steps_per_check = 628;
    let mut worst = 0.0_f64;
    for _ in 0..10 {
        for _ in 0..steps_per_check {
            st = stepper.step(&st).unwrap();
        }
        let t = st.time();
        let expect = t.cos();
        worst = worst.max((mean_x(&st) - expect).abs());
    }
    // one full period covered; 0.1% of the oscillation amplitude
    assert!(worst < 1e-3, "max |<x> - cos t| = {worst}");
}

#[test]
fn norm_and_energy_conserved_through_long_runs() {
    let g = Arc::new(Grid::build(1, 1024, 40.0).unwrap());
    let dt = 5e-4;
    let p = ModelParams::quantum(&[1.0], 1.0, 1.0, 1.0, dt).unwrap();
    let spec = PotentialSpec::Harmonic { omega: vec![1.0] };
    let v = spec.evaluate(&g, &p.masses).unwrap();
    let st0 = init_scenario(&Scenario::Coherent { x0: vec![1.0], omega: vec![1.0] }, &g, &p).unwrap();
    let h0 = ensemble_hamiltonian(&st0, &p, &v).unwrap();
    let stepper = QuantumStepper::new(Arc::clone(&g), &p, &v, dt).unwrap();
    let mut st = st0;
    for _ in 0..2000 {
        st = stepper.step(&st).unwrap();
    }
    assert!((st.norm() - 1.0).abs() < 1e-10);
    let h1 = ensemble_hamiltonian(&st, &p, &v).unwrap();
    let drift = ((h1 - h0) / h0).abs();
    assert!(drift < 1e-6, "energy drift {drift:e}");
}

#[test]
fn evolved_states_keep_uncertainty_invariants() {
    // interference scenario evolved to fringe formation
    let g = Arc::new(Grid::build(1, 2048, 60.0).unwrap());
    let dt = 1e-3;
    let p = ModelParams::quantum(&[1.0], 1.0, 1.0, 1.0, dt).unwrap();
    let st0 = init_scenario(
        &Scenario::TwoGaussianSuperposition { separation: 5.0, sigma: 1.0, k0: 2.0 },
        &g,
        &p,
    )
    .unwrap();
    let v = vec![0.0; g.len()];
    let stepper = QuantumStepper::new(Arc::clone(&g), &p, &v, dt).unwrap();
    let mut st = st0;
    for check in 0..5 {
        for _ in 0..500 {
            st = stepper.step(&st).unwrap();
        }
        let rep = uncertainty_report(&st, &p, None).unwrap();
        assert!(
            rep.passed,
            "uncertainty invariants failed at t = {} (check {check}): {:#?}",
            st.time(),
            rep.checks.iter().filter(|c| !c.passed).collect::<Vec<_>>()
        );
    }
}

#[test]
fn quantum_spreads_faster_than_hybrid() {
    // same initial data, sigma0 = 0.5 free packet: by t = 2 the quantum
    // variance exceeds the (non-spreading) hybrid variance by far more
    // than 5%
    let g = Arc::new(Grid::build(1, 1024, 40.0).unwrap());
    let dt = 1e-3;
    let qp = ModelParams::quantum(&[1.0], 1.0, 1.0, 1.0, dt).unwrap();
    let hp = ModelParams::hybrid(&[1.0], 1.0, 1.0, 1.0, dt).unwrap();
    let sc = Scenario::Gaussian { x0: vec![0.0], sigma: vec![0.5], k0: vec![0.0] };
    let v = vec![0.0; g.len()];

    let mut q = init_scenario(&sc, &g, &qp).unwrap();
    let qs = QuantumStepper::new(Arc::clone(&g), &qp, &v, dt).unwrap();
    for _ in 0..2000 {
        q = qs.step(&q).unwrap();
    }

    let mut h = init_scenario(&sc, &g, &hp).unwrap();
    let hs = edlab_core::fields::HybridStepper::new(Arc::clone(&g), &hp, &v, dt).unwrap();
    for _ in 0..2000 {
        h = hs.step(&h).unwrap();
    }

    let vq = var_x(&q);
    let vh = var_x(&h);
    // analytic: quantum 0.25*(1+16) = 4.25, hybrid stays 0.25
    assert!((vq - 4.25).abs() < 0.01, "quantum Var {vq}");
    assert!((vh - 0.25).abs() < 1e-6, "hybrid Var {vh}");
    assert!((vq - vh) / vh > 0.05);
}
