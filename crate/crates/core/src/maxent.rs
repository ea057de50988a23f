//! Short-step transition kernels from constrained entropy maximization.
//!
//! The analytic route completes the square: each coordinate gets a Gaussian
//! with mean (alpha'/alpha_n) * dphi_n and variance 1/alpha_n. The numeric
//! route maximizes the discrete relative entropy on a step lattice subject
//! to the per-particle squared-step constraints and the single drift-overlap
//! constraint, by damped Newton on the convex dual, and recovers the
//! multipliers independently. The two must agree; that agreement is the
//! check, so neither side may be expressed through the other.

use serde::Serialize;

use crate::error::{EdError, Result};

/// Gaussian short-step kernel: per-coordinate means and variances plus the
/// multipliers that generated them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransitionKernel {
    pub mean_shift: Vec<f64>,
    pub covariance_diag: Vec<f64>,
    pub alpha: Vec<f64>,
    pub alpha_prime: f64,
}

impl TransitionKernel {
    /// Second moments implied by the kernel: kappa_n = var_n + mean_n^2.
    pub fn kappa(&self) -> Vec<f64> {
        self.covariance_diag
            .iter()
            .zip(&self.mean_shift)
            .map(|(&v, &m)| v + m * m)
            .collect()
    }

    /// Drift-overlap moment kappa' = sum_n mean_n * dphi_n.
    pub fn kappa_prime(&self, grad_phi: &[f64]) -> f64 {
        self.mean_shift
            .iter()
            .zip(grad_phi)
            .map(|(&m, &g)| m * g)
            .sum()
    }
}

/// Completion of the square for the exponential-family kernel.
pub fn analytic_kernel(grad_phi: &[f64], alpha: &[f64], alpha_prime: f64) -> Result<TransitionKernel> {
    if grad_phi.len() != alpha.len() {
        return Err(EdError::InvalidInput(format!(
            "grad_phi has {} entries but alpha has {}",
            grad_phi.len(),
            alpha.len()
        )));
    }
    for &a in alpha {
        if !(a > 0.0) || !a.is_finite() {
            return Err(EdError::NonPositiveMultiplier(a));
        }
    }
    if !alpha_prime.is_finite() {
        return Err(EdError::InvalidInput("alpha_prime must be finite".into()));
    }
    let mean_shift = grad_phi
        .iter()
        .zip(alpha)
        .map(|(&g, &a)| alpha_prime / a * g)
        .collect();
    let covariance_diag = alpha.iter().map(|&a| 1.0 / a).collect();
    Ok(TransitionKernel {
        mean_shift,
        covariance_diag,
        alpha: alpha.to_vec(),
        alpha_prime,
    })
}

/// Step lattice resolution for the numeric maximizer.
#[derive(Debug, Clone, Copy)]
pub struct LatticeSpec {
    /// Half-width of the lattice in units of sqrt(kappa_n), at least 6.
    pub halfwidth_sigmas: f64,
    /// Lattice points per sqrt(kappa_n) interval, at least 64 for the
    /// agreement guarantees to hold.
    pub points_per_sigma: usize,
}

impl Default for LatticeSpec {
    fn default() -> Self {
        LatticeSpec { halfwidth_sigmas: 6.0, points_per_sigma: 64 }
    }
}

/// Discrete maximum-entropy distribution over step offsets.
#[derive(Debug, Clone)]
pub struct DiscreteKernel {
    /// Lattice offsets per coordinate.
    pub axes: Vec<Vec<f64>>,
    /// Probabilities, flattened row-major over the axes.
    pub probabilities: Vec<f64>,
    pub achieved_kappa: Vec<f64>,
    pub achieved_kappa_prime: f64,
    /// Multipliers recovered by the dual solve.
    pub alpha: Vec<f64>,
    pub alpha_prime: f64,
    pub iterations: usize,
}

struct Lattice {
    axes: Vec<Vec<f64>>,
}

impl Lattice {
    fn len(&self) -> usize {
        self.axes.iter().map(|a| a.len()).product()
    }

    fn offset(&self, flat: usize, out: &mut [f64]) {
        let mut rem = flat;
        for d in (0..self.axes.len()).rev() {
            let n = self.axes[d].len();
            out[d] = self.axes[d][rem % n];
            rem /= n;
        }
    }
}

/// Discrete entropy maximization subject to the squared-step moments
/// `kappa` and the drift-overlap moment `kappa_prime`, with a uniform prior
/// on the lattice. Returns the distribution and the recovered multipliers.
pub fn numeric_maxent(
    grad_phi: &[f64],
    kappa: &[f64],
    kappa_prime: f64,
    lattice: &LatticeSpec,
) -> Result<DiscreteKernel> {
    let dims = grad_phi.len();
    if kappa.len() != dims || dims == 0 {
        return Err(EdError::InvalidInput(format!(
            "need matching nonempty grad_phi/kappa, got {} and {}",
            dims,
            kappa.len()
        )));
    }
    if kappa.iter().any(|&k| !(k > 0.0)) {
        return Err(EdError::InfeasibleConstraints(format!(
            "kappa must be positive: {kappa:?}"
        )));
    }
    if lattice.halfwidth_sigmas < 6.0 {
        return Err(EdError::InvalidInput(format!(
            "lattice must cover at least 6 sigma, got {}",
            lattice.halfwidth_sigmas
        )));
    }
    if lattice.points_per_sigma == 0 {
        return Err(EdError::InvalidInput("points_per_sigma must be positive".into()));
    }

    let axes: Vec<Vec<f64>> = kappa
        .iter()
        .map(|&k| {
            let sigma = k.sqrt();
            let half_pts = (lattice.halfwidth_sigmas * lattice.points_per_sigma as f64).ceil() as i64;
            let delta = sigma / lattice.points_per_sigma as f64;
            (-half_pts..=half_pts).map(|i| i as f64 * delta).collect()
        })
        .collect();
    let lat = Lattice { axes };
    let n = lat.len();

    // feature values per lattice point: f_d = dx_d^2, g = dx . grad_phi
    let mut sq = vec![0.0; n * dims];
    let mut ov = vec![0.0; n];
    let mut dx = vec![0.0; dims];
    for i in 0..n {
        lat.offset(i, &mut dx);
        let mut g = 0.0;
        for d in 0..dims {
            sq[i * dims + d] = dx[d] * dx[d];
            g += dx[d] * grad_phi[d];
        }
        ov[i] = g;
    }

    // feasibility of the drift-overlap target on this lattice
    let ov_max = ov.iter().cloned().fold(f64::MIN, f64::max);
    let ov_min = ov.iter().cloned().fold(f64::MAX, f64::min);
    if kappa_prime > 0.95 * ov_max || kappa_prime < 0.95 * ov_min {
        return Err(EdError::InfeasibleConstraints(format!(
            "kappa' = {kappa_prime} outside the reachable range [{ov_min}, {ov_max}] of the lattice"
        )));
    }

    // damped Newton on the dual; unknowns theta = (alpha_1..alpha_D, alpha')
    let mut alpha: Vec<f64> = kappa.iter().map(|&k| 1.0 / k).collect();
    let mut alpha_prime = 0.0_f64;
    let nvar = dims + 1;
    let mut weights = vec![0.0; n];
    let max_iters = 200;
    let tol = 1e-11;

    let mut probs = vec![0.0; n];
    let mut iterations = 0;
    loop {
        iterations += 1;
        // log-weights and normalized probabilities
        let mut wmax = f64::MIN;
        for i in 0..n {
            let mut w = alpha_prime * ov[i];
            for d in 0..dims {
                w -= 0.5 * alpha[d] * sq[i * dims + d];
            }
            weights[i] = w;
            wmax = wmax.max(w);
        }
        let mut z = 0.0;
        for i in 0..n {
            probs[i] = (weights[i] - wmax).exp();
            z += probs[i];
        }
        for p in probs.iter_mut() {
            *p /= z;
        }

        // achieved moments
        let mut e_sq = vec![0.0; dims];
        let mut e_ov = 0.0;
        for i in 0..n {
            for d in 0..dims {
                e_sq[d] += probs[i] * sq[i * dims + d];
            }
            e_ov += probs[i] * ov[i];
        }

        let mut resid = vec![0.0; nvar];
        let mut worst = 0.0_f64;
        for d in 0..dims {
            resid[d] = e_sq[d] - kappa[d];
            worst = worst.max(resid[d].abs());
        }
        resid[dims] = e_ov - kappa_prime;
        worst = worst.max(resid[dims].abs());

        if worst < tol {
            return Ok(DiscreteKernel {
                axes: lat.axes,
                probabilities: probs,
                achieved_kappa: e_sq,
                achieved_kappa_prime: e_ov,
                alpha,
                alpha_prime,
                iterations,
            });
        }
        if iterations >= max_iters {
            return Err(EdError::NoConvergence { iters: iterations, residual: worst });
        }

        // covariance of the features (f_1..f_D, g) under the current p
        let mut cov = vec![0.0; nvar * nvar];
        for i in 0..n {
            let p = probs[i];
            let mut feat = vec![0.0; nvar];
            for d in 0..dims {
                feat[d] = sq[i * dims + d] - e_sq[d];
            }
            feat[dims] = ov[i] - e_ov;
            for a in 0..nvar {
                for b in 0..nvar {
                    cov[a * nvar + b] += p * feat[a] * feat[b];
                }
            }
        }
        // pin degenerate directions (e.g. grad_phi = 0 makes alpha' moot)
        for a in 0..nvar {
            if cov[a * nvar + a] < 1e-30 {
                for b in 0..nvar {
                    cov[a * nvar + b] = 0.0;
                    cov[b * nvar + a] = 0.0;
                }
                cov[a * nvar + a] = 1.0;
                resid[a] = 0.0;
            }
        }

        // Newton direction in theta = (-alpha/2, alpha'):
        // d E[feat] = Cov * d theta, want d E[feat] = -resid
        let dtheta = solve_dense(&mut cov.clone(), &resid.iter().map(|r| -r).collect::<Vec<_>>())
            .ok_or(EdError::NoConvergence { iters: iterations, residual: worst })?;

        // map back: d alpha = -2 d theta_d, d alpha' = d theta_D,
        // with backtracking to keep alpha positive and the residual shrinking
        let mut step = 1.0;
        loop {
            let trial_alpha: Vec<f64> = alpha
                .iter()
                .enumerate()
                .map(|(d, &a)| a - 2.0 * step * dtheta[d])
                .collect();
            let trial_prime = alpha_prime + step * dtheta[dims];
            if trial_alpha.iter().all(|&a| a > 0.0) {
                let trial_worst = moment_residual(
                    &trial_alpha,
                    trial_prime,
                    &sq,
                    &ov,
                    kappa,
                    kappa_prime,
                    dims,
                    n,
                );
                if trial_worst < worst || step < 1e-6 {
                    alpha = trial_alpha;
                    alpha_prime = trial_prime;
                    break;
                }
            }
            step *= 0.5;
            if step < 1e-12 {
                return Err(EdError::NoConvergence { iters: iterations, residual: worst });
            }
        }
    }
}

#[allow(clippy::too_many_arguments)]
fn moment_residual(
    alpha: &[f64],
    alpha_prime: f64,
    sq: &[f64],
    ov: &[f64],
    kappa: &[f64],
    kappa_prime: f64,
    dims: usize,
    n: usize,
) -> f64 {
    let mut wmax = f64::MIN;
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut w = alpha_prime * ov[i];
        for d in 0..dims {
            w -= 0.5 * alpha[d] * sq[i * dims + d];
        }
        weights[i] = w;
        wmax = wmax.max(w);
    }
    let mut z = 0.0;
    let mut e_sq = vec![0.0; dims];
    let mut e_ov = 0.0;
    for i in 0..n {
        let p = (weights[i] - wmax).exp();
        z += p;
        for d in 0..dims {
            e_sq[d] += p * sq[i * dims + d];
        }
        e_ov += p * ov[i];
    }
    let mut worst = (e_ov / z - kappa_prime).abs();
    for d in 0..dims {
        worst = worst.max((e_sq[d] / z - kappa[d]).abs());
    }
    worst
}

/// Gaussian elimination with partial pivoting for the tiny dual systems.
fn solve_dense(a: &mut [f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut x = b.to_vec();
    for col in 0..n {
        let mut pivot = col;
        for row in col + 1..n {
            if a[row * n + col].abs() > a[pivot * n + col].abs() {
                pivot = row;
            }
        }
        if a[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            x.swap(col, pivot);
        }
        let diag = a[col * n + col];
        for row in col + 1..n {
            let factor = a[row * n + col] / diag;
            if factor == 0.0 {
                continue;
            }
            for j in col..n {
                a[row * n + j] -= factor * a[col * n + j];
            }
            x[row] -= factor * x[col];
        }
    }
    for col in (0..n).rev() {
        for j in col + 1..n {
            x[col] -= a[col * n + j] * x[j];
        }
        x[col] /= a[col * n + col];
    }
    Some(x)
}

/// KL divergence of the discrete kernel from the analytic kernel discretized
/// on the same lattice.
pub fn kl_vs_analytic(discrete: &DiscreteKernel, analytic: &TransitionKernel) -> f64 {
    let dims = discrete.axes.len();
    let n: usize = discrete.axes.iter().map(|a| a.len()).product();
    let lat = Lattice { axes: discrete.axes.clone() };
    let mut dx = vec![0.0; dims];
    let mut logq = vec![0.0; n];
    let mut qmax = f64::MIN;
    for i in 0..n {
        lat.offset(i, &mut dx);
        let mut w = 0.0;
        for d in 0..dims {
            let diff = dx[d] - analytic.mean_shift[d];
            w -= 0.5 * diff * diff / analytic.covariance_diag[d];
        }
        logq[i] = w;
        qmax = qmax.max(w);
    }
    let zq: f64 = logq.iter().map(|&w| (w - qmax).exp()).sum();
    let log_zq = zq.ln() + qmax;
    let mut kl = 0.0;
    for i in 0..n {
        let p = discrete.probabilities[i];
        if p > 0.0 {
            kl += p * (p.ln() - (logq[i] - log_zq));
        }
    }
    kl
}

/// Drift and fluctuation rates implied by the model parameters:
/// drift = eta_tilde * grad_phi / m per unit time, fluctuation covariance
/// (diagonal) = epsilon / m per unit time.
pub fn step_statistics(
    params: &crate::params::ModelParams,
    grad_phi: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    if grad_phi.iter().any(|g| !g.is_finite()) {
        return Err(EdError::InvalidInput("grad_phi must be finite".into()));
    }
    let drift = grad_phi
        .iter()
        .enumerate()
        .map(|(d, &g)| params.eta_tilde * g / params.mass(d))
        .collect();
    let fluct = (0..grad_phi.len())
        .map(|d| params.epsilon / params.mass(d))
        .collect();
    Ok((drift, fluct))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::ModelParams;

    #[test]
    fn analytic_kernel_completes_the_square() {
        let k = analytic_kernel(&[1.0], &[4.0], 2.0).unwrap();
        assert_eq!(k.mean_shift, vec![0.5]);
        assert_eq!(k.covariance_diag, vec![0.25]);

        let k2 = analytic_kernel(&[1.0, -2.0], &[10.0, 10.0], 5.0).unwrap();
        assert_eq!(k2.mean_shift, vec![0.5, -1.0]);
        assert_eq!(k2.covariance_diag, vec![0.1, 0.1]);
    }

    #[test]
    fn zero_drift_multiplier_gives_isotropic_diffusion() {
        let k = analytic_kernel(&[3.7, -1.2], &[2.0, 5.0], 0.0).unwrap();
        assert!(k.mean_shift.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn non_positive_alpha_rejected() {
        assert!(matches!(
            analytic_kernel(&[1.0], &[0.0], 1.0),
            Err(EdError::NonPositiveMultiplier(_))
        ));
        assert!(matches!(
            analytic_kernel(&[1.0], &[-2.0], 1.0),
            Err(EdError::NonPositiveMultiplier(_))
        ));
    }

    #[test]
    fn covariance_ignores_drift_inputs() {
        let a = analytic_kernel(&[0.3], &[4.0], 0.7).unwrap();
        let b = analytic_kernel(&[5.1], &[4.0], 2.9).unwrap();
        assert_eq!(a.covariance_diag, b.covariance_diag);
    }

    #[test]
    fn rescaling_symmetry_exact() {
        // (C*phi, alpha'/C) leaves the kernel unchanged
        let base = analytic_kernel(&[0.8, -1.4], &[3.0, 7.0], 2.0).unwrap();
        for c in [0.1, 3.0, 100.0] {
            let scaled = analytic_kernel(&[0.8 * c, -1.4 * c], &[3.0, 7.0], 2.0 / c).unwrap();
            for (a, b) in scaled.mean_shift.iter().zip(&base.mean_shift) {
                assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
            }
            assert_eq!(scaled.covariance_diag, base.covariance_diag);
        }
    }

    #[test]
    fn symmetric_constraints_recover_zero_drift() {
        let dk = numeric_maxent(&[0.0], &[0.25], 0.0, &LatticeSpec::default()).unwrap();
        assert!(dk.alpha_prime.abs() < 1e-8, "alpha' = {}", dk.alpha_prime);
        assert!((dk.alpha[0] - 4.0).abs() < 1e-6, "alpha = {}", dk.alpha[0]);
        let total: f64 = dk.probabilities.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn roundtrip_recovers_multipliers() {
        // generate targets from the analytic kernel, solve back
        let tk = analytic_kernel(&[1.0], &[4.0], 2.0).unwrap();
        let kappa = tk.kappa();
        let kappa_prime = tk.kappa_prime(&[1.0]);
        let dk = numeric_maxent(&[1.0], &kappa, kappa_prime, &LatticeSpec::default()).unwrap();
        assert!((dk.alpha[0] - 4.0).abs() < 1e-6, "alpha = {}", dk.alpha[0]);
        assert!((dk.alpha_prime - 2.0).abs() < 1e-6, "alpha' = {}", dk.alpha_prime);
        assert!(kl_vs_analytic(&dk, &tk) < 1e-8);
    }

    #[test]
    fn two_coordinate_roundtrip() {
        let grad = [0.6, -1.1];
        let tk = analytic_kernel(&grad, &[3.0, 8.0], 1.5).unwrap();
        let kappa = tk.kappa();
        let kp = tk.kappa_prime(&grad);
        let lat = LatticeSpec { halfwidth_sigmas: 6.0, points_per_sigma: 64 };
        let dk = numeric_maxent(&grad, &kappa, kp, &lat).unwrap();
        assert!((dk.alpha[0] - 3.0).abs() < 1e-5);
        assert!((dk.alpha[1] - 8.0).abs() < 1e-5);
        assert!((dk.alpha_prime - 1.5).abs() < 1e-5);
        assert!(kl_vs_analytic(&dk, &tk) < 1e-6);
    }

    #[test]
    fn infeasible_kappa_prime_rejected() {
        let err = numeric_maxent(&[1.0], &[0.25], 50.0, &LatticeSpec::default());
        assert!(matches!(err, Err(EdError::InfeasibleConstraints(_))));
    }

    #[test]
    fn narrow_lattice_rejected() {
        let lat = LatticeSpec { halfwidth_sigmas: 3.0, points_per_sigma: 64 };
        assert!(numeric_maxent(&[1.0], &[0.25], 0.0, &lat).is_err());
    }

    #[test]
    fn step_statistics_match_rates() {
        let p = ModelParams::quantum(&[1.0], 1.0, 0.1, 1.0, 1e-2).unwrap();
        let (drift, fluct) = step_statistics(&p, &[2.0]).unwrap();
        assert_eq!(drift, vec![2.0]);
        assert_eq!(fluct, vec![0.1]);

        let b = p.with_epsilon(0.0).unwrap();
        let (drift, fluct) = step_statistics(&b, &[2.0]).unwrap();
        assert_eq!(drift, vec![2.0]);
        assert_eq!(fluct, vec![0.0]);
    }

    #[test]
    fn halving_epsilon_halves_fluctuation_only() {
        let p = ModelParams::quantum(&[2.0], 1.0, 0.4, 1.0, 1e-2).unwrap();
        let (d1, f1) = step_statistics(&p, &[1.0]).unwrap();
        let half = p.with_epsilon(0.2).unwrap();
        let (d2, f2) = step_statistics(&half, &[1.0]).unwrap();
        assert_eq!(d1, d2);
        assert!((f2[0] - f1[0] / 2.0).abs() < 1e-15);
    }
}
