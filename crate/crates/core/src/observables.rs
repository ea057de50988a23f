//! Position/momentum observables and the uncertainty-relation report.
//!
//! Two momentum notions are computed on every state: the local (current)
//! momentum grad Phi, and the operator momentum applied spectrally to Psi.
//! Their means coincide identically; their variances differ by the
//! Fisher-information term, and the report checks that identity, the
//! log-density/position covariance, and the Schroedinger and Heisenberg
//! bounds. Everything here is a function of (rho, Phi, hbar) alone - the
//! diffusion scale epsilon never enters.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{EdError, Result};
use crate::fields::grad_ln_rho;
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::spectral;
use crate::state::WaveState;

/// Quadrature-identity tolerance (discrete identities).
pub const TOL_IDENTITY: f64 = 1e-9;
/// Tolerance for derivative-based relations, relative.
pub const TOL_DERIVATIVE_REL: f64 = 1e-6;

/// Per-coordinate local momentum field: p_d(x) = d_d Phi.
pub fn local_momentum(state: &WaveState) -> Vec<Vec<f64>> {
    state.grad_phase()
}

/// Fisher information matrix I_cd = integral rho d_c ln rho d_d ln rho.
pub fn fisher_information(grid: &Grid, rho: &[f64]) -> Vec<Vec<f64>> {
    let gln = grad_ln_rho(grid, rho);
    let dims = grid.dims();
    let mut out = vec![vec![0.0; dims]; dims];
    for c in 0..dims {
        for d in c..dims {
            let integrand: Vec<f64> = (0..grid.len())
                .map(|i| rho[i].max(0.0) * gln[c][i] * gln[d][i])
                .collect();
            let v = grid.quadrature(&integrand);
            out[c][d] = v;
            out[d][c] = v;
        }
    }
    out
}

/// Operator-momentum statistics per coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OperatorMomentum {
    pub mean: f64,
    pub variance: f64,
    /// Symmetrized covariance with position, (1/2)<p x + x p> - <p><x>.
    pub cov_x: f64,
}

/// Spectral application of -i hbar d to Psi: means and variances from the
/// momentum-space weights, covariance from the symmetrized real-space
/// quadrature.
pub fn operator_momentum_stats(state: &WaveState, params: &ModelParams) -> Result<Vec<OperatorMomentum>> {
    let hbar = params.hbar;
    if let Some((_, stored)) = state.psi_with_hbar() {
        if (stored - hbar).abs() > 4.0 * f64::EPSILON * hbar {
            return Err(EdError::BadParams(format!(
                "params.hbar = {hbar} does not match the state's hbar = {stored}"
            )));
        }
    }
    let grid = state.grid();
    let psi = state.psi(hbar);

    let mut spec = psi.clone();
    spectral::fft_nd(grid, &mut spec, false);
    let weights: Vec<f64> = spec.iter().map(|z| z.norm_sqr()).collect();
    let total: f64 = weights.iter().sum();

    let mut out = Vec::with_capacity(grid.dims());
    for d in 0..grid.dims() {
        let mut mean = 0.0;
        let mut second = 0.0;
        for (flat, &w) in weights.iter().enumerate() {
            let idx = grid.unravel(flat);
            let p = hbar * grid.wavenumbers(d)[idx[d]];
            mean += w * p;
            second += w * p * p;
        }
        mean /= total;
        second /= total;
        let variance = second - mean * mean;

        // Re <psi| x_d p_d |psi> by quadrature
        let dpsi = spectral::derivative_complex(grid, &psi, d);
        let mut xp = 0.0;
        let mut mean_x = 0.0;
        let mut norm = 0.0;
        for flat in 0..grid.len() {
            let x = grid.position(flat)[d];
            let rho = psi[flat].norm_sqr();
            // conj(psi) * x * (-i hbar) dpsi, real part
            let val = (psi[flat].conj() * dpsi[flat] * Complex64::new(0.0, -hbar)).re;
            xp += x * val;
            mean_x += rho * x;
            norm += rho;
        }
        let vol = grid.cell_volume();
        let xp = xp * vol / (norm * vol);
        let mean_x = mean_x / norm;
        out.push(OperatorMomentum {
            mean,
            variance,
            cov_x: xp - mean * mean_x,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoordMoments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p_local: f64,
    pub var_p_local: f64,
    pub mean_p_operator: f64,
    pub var_p_operator: f64,
    /// hbar-scaled osmotic momentum mean per unit diffusion scale,
    /// -(hbar/2) <d ln rho>; vanishes identically.
    pub mean_p_osmotic: f64,
    pub var_grad_ln_rho: f64,
    /// Cov(p, x) from the local momentum field.
    pub cov_p_x: f64,
    /// Cov(p-hat, x) from the symmetrized operator route.
    pub cov_p_op_x: f64,
    /// Cov(d ln rho, x); equals -1 per coordinate.
    pub cov_dlnrho_x: f64,
    pub schrodinger_lhs: f64,
    pub schrodinger_rhs: f64,
    pub schrodinger_slack: f64,
    pub heisenberg_product: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UncertaintyReport {
    pub schema: String,
    pub time: f64,
    pub hbar: f64,
    pub coords: Vec<CoordMoments>,
    pub fisher: Vec<Vec<f64>>,
    /// (mean, var) of walker coordinates when an ensemble was supplied.
    pub walker_moments: Option<Vec<(f64, f64)>>,
    pub checks: Vec<CheckResult>,
    pub passed: bool,
}

/// Full uncertainty-relation report. Depends on the parameters only through
/// hbar; supplying parameter sets differing in epsilon yields bit-identical
/// reports.
pub fn uncertainty_report(
    state: &WaveState,
    params: &ModelParams,
    ensemble: Option<&crate::ensemble::EnsembleState>,
) -> Result<UncertaintyReport> {
    report_with_hbar(state, params.hbar, ensemble)
}

pub fn report_with_hbar(
    state: &WaveState,
    hbar: f64,
    ensemble: Option<&crate::ensemble::EnsembleState>,
) -> Result<UncertaintyReport> {
    let grid = state.grid();
    let dims = grid.dims();
    let rho = state.rho();
    let norm = grid.quadrature(&rho);
    let grad_phi = state.grad_phase();
    let gln = grad_ln_rho(grid, &rho);
    let op_stats = {
        // reuse the same spectral machinery regardless of class
        let fake_params = ModelParams {
            masses: vec![1.0; dims],
            hbar,
            xi: 0.0,
            epsilon: 0.0,
            eta_tilde: 1.0,
            dt: 1.0,
        };
        operator_momentum_stats(state, &fake_params)?
    };

    let vol = grid.cell_volume();
    let expect = |f: &dyn Fn(usize) -> f64| -> f64 {
        let mut acc = 0.0;
        for i in 0..grid.len() {
            acc += rho[i].max(0.0) * f(i);
        }
        acc * vol / norm
    };

    let mut coords = Vec::with_capacity(dims);
    let mut checks: Vec<CheckResult> = Vec::new();
    for d in 0..dims {
        let x_of = |i: usize| grid.position(i)[d];
        let mean_x = expect(&|i| x_of(i));
        let var_x = expect(&|i| (x_of(i) - mean_x).powi(2));
        let mean_p_local = expect(&|i| grad_phi[d][i]);
        let var_p_local = expect(&|i| (grad_phi[d][i] - mean_p_local).powi(2));
        let mean_gln = expect(&|i| gln[d][i]);
        let var_grad_ln_rho = expect(&|i| (gln[d][i] - mean_gln).powi(2));
        let mean_p_osmotic = -0.5 * hbar * mean_gln;
        let cov_p_x = expect(&|i| (grad_phi[d][i] - mean_p_local) * (x_of(i) - mean_x));
        let cov_dlnrho_x = expect(&|i| (gln[d][i] - mean_gln) * (x_of(i) - mean_x));
        let op = &op_stats[d];

        let schrodinger_lhs = op.variance * var_x;
        let schrodinger_rhs = op.cov_x * op.cov_x + hbar * hbar / 4.0;
        let schrodinger_slack = schrodinger_lhs - schrodinger_rhs;
        let heisenberg_product = op.variance * var_x;

        let m = CoordMoments {
            mean_x,
            var_x,
            mean_p_local,
            var_p_local,
            mean_p_operator: op.mean,
            var_p_operator: op.variance,
            mean_p_osmotic,
            var_grad_ln_rho,
            cov_p_x,
            cov_p_op_x: op.cov_x,
            cov_dlnrho_x,
            schrodinger_lhs,
            schrodinger_rhs,
            schrodinger_slack,
            heisenberg_product,
        };

        let p_scale = op.variance.sqrt().max(hbar);
        checks.push(CheckResult {
            name: format!("osmotic_mean_zero[{d}]"),
            value: m.mean_p_osmotic.abs(),
            threshold: TOL_IDENTITY * p_scale,
            passed: m.mean_p_osmotic.abs() <= TOL_IDENTITY * p_scale,
        });
        let mean_diff = (m.mean_p_operator - m.mean_p_local).abs();
        checks.push(CheckResult {
            name: format!("operator_mean_matches_local[{d}]"),
            value: mean_diff,
            threshold: TOL_IDENTITY * p_scale,
            passed: mean_diff <= TOL_IDENTITY * p_scale,
        });
        let identity_rhs = m.var_p_local + hbar * hbar / 4.0 * m.var_grad_ln_rho;
        let var_resid = (m.var_p_operator - identity_rhs).abs();
        checks.push(CheckResult {
            name: format!("variance_identity[{d}]"),
            value: var_resid / m.var_p_operator.abs().max(f64::MIN_POSITIVE),
            threshold: TOL_DERIVATIVE_REL,
            passed: var_resid <= TOL_DERIVATIVE_REL * m.var_p_operator.abs(),
        });
        let cov_resid = (m.cov_dlnrho_x + 1.0).abs();
        checks.push(CheckResult {
            name: format!("dlnrho_x_covariance[{d}]"),
            value: cov_resid,
            threshold: TOL_IDENTITY,
            passed: cov_resid <= TOL_IDENTITY,
        });
        let slack_floor = -TOL_IDENTITY * schrodinger_lhs.max(hbar * hbar / 4.0);
        checks.push(CheckResult {
            name: format!("schrodinger_slack_nonneg[{d}]"),
            value: schrodinger_slack,
            threshold: slack_floor,
            passed: schrodinger_slack >= slack_floor,
        });
        let bound = hbar * hbar / 4.0 * (1.0 - TOL_IDENTITY);
        checks.push(CheckResult {
            name: format!("heisenberg_bound[{d}]"),
            value: heisenberg_product,
            threshold: bound,
            passed: heisenberg_product >= bound,
        });
        coords.push(m);
    }

    let fisher = fisher_information(grid, &rho);
    let walker_moments = ensemble.map(|e| {
        (0..dims)
            .map(|d| crate::stats::mean_var(&e.coords_of_dim(d)))
            .collect()
    });
    let passed = checks.iter().all(|c| c.passed);
    Ok(UncertaintyReport {
        schema: "edlab/uncertainty-report/1".into(),
        time: state.time(),
        hbar,
        coords,
        fisher,
        walker_moments,
        checks,
        passed,
    })
}
