//! Sample statistics: Kolmogorov-Smirnov distance of walker ensembles
//! against grid densities, moment helpers, and log-log slope fits.

use crate::grid::Grid;

/// 1% critical value of the one-sample KS statistic for n samples.
pub fn ks_critical_1pct(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

/// Marginal density of a grid field along `dim` (summed over the other
/// dimension, weighted by its spacing), clamped non-negative.
pub fn marginal_density(grid: &Grid, rho: &[f64], dim: usize) -> Vec<f64> {
    let n = grid.points(dim);
    let mut out = vec![0.0; n];
    match grid.dims() {
        1 => {
            for (o, &r) in out.iter_mut().zip(rho) {
                *o = r.max(0.0);
            }
        }
        _ => {
            let n1 = grid.points(1);
            let other_h = grid.spacing(1 - dim);
            for flat in 0..grid.len() {
                let idx = [flat / n1, flat % n1];
                out[idx[dim]] += rho[flat].max(0.0) * other_h;
            }
        }
    }
    out
}

/// Piecewise-linear CDF of a marginal density with cells centered on the
/// grid points. Returns the cumulative mass at each cell's right edge,
/// normalized to end at exactly 1.
pub struct MarginalCdf {
    /// cumulative[i] = mass of cells 0..=i
    cumulative: Vec<f64>,
    extent: f64,
    spacing: f64,
}

impl MarginalCdf {
    pub fn new(grid: &Grid, rho: &[f64], dim: usize) -> Self {
        let density = marginal_density(grid, rho, dim);
        let mut cumulative = Vec::with_capacity(density.len());
        let mut acc = 0.0;
        for &d in &density {
            acc += d;
            cumulative.push(acc);
        }
        let total = acc.max(f64::MIN_POSITIVE);
        for c in cumulative.iter_mut() {
            *c /= total;
        }
        MarginalCdf {
            cumulative,
            extent: grid.extent(dim),
            spacing: grid.spacing(dim),
        }
    }

    /// Map a wrapped coordinate into the cell-centered CDF domain
    /// [-L/2 - h/2, L/2 - h/2).
    fn fold(&self, x: f64) -> f64 {
        let top = 0.5 * self.extent - 0.5 * self.spacing;
        if x >= top {
            x - self.extent
        } else {
            x
        }
    }

    /// CDF value at coordinate x (piecewise linear between cell edges).
    pub fn eval(&self, x: f64) -> f64 {
        self.eval_folded(self.fold(x))
    }

    fn eval_folded(&self, y: f64) -> f64 {
        let left = -0.5 * self.extent - 0.5 * self.spacing;
        let s = (y - left) / self.spacing;
        let n = self.cumulative.len();
        if s <= 0.0 {
            return 0.0;
        }
        if s >= n as f64 {
            return 1.0;
        }
        let cell = s.floor() as usize;
        let frac = s - cell as f64;
        let lo = if cell == 0 { 0.0 } else { self.cumulative[cell - 1] };
        let hi = self.cumulative[cell.min(n - 1)];
        lo + (hi - lo) * frac
    }

    /// Inverse CDF: u in [0,1) to a coordinate, uniform within each cell.
    pub fn sample(&self, u: f64) -> f64 {
        let n = self.cumulative.len();
        // binary search for the first cell with cumulative >= u
        let mut lo = 0usize;
        let mut hi = n - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if self.cumulative[mid] < u {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let cell = lo;
        let below = if cell == 0 { 0.0 } else { self.cumulative[cell - 1] };
        let mass = (self.cumulative[cell] - below).max(f64::MIN_POSITIVE);
        let frac = ((u - below) / mass).clamp(0.0, 1.0 - 1e-15);
        let left = -0.5 * self.extent - 0.5 * self.spacing + cell as f64 * self.spacing;
        let mut x = left + frac * self.spacing;
        if x < -0.5 * self.extent {
            x += self.extent;
        }
        x
    }
}

/// One-sample KS distance between coordinates and a marginal grid CDF.
pub fn ks_distance(samples: &[f64], cdf: &MarginalCdf) -> f64 {
    let mut xs: Vec<f64> = samples.iter().map(|&x| cdf.fold(x)).collect();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut worst = 0.0_f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf.eval_folded(x);
        worst = worst.max(((i + 1) as f64 / n - f).abs());
        worst = worst.max((i as f64 / n - f).abs());
    }
    worst
}

/// Least-squares slope of ln(y) against ln(x).
pub fn fit_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let lx: Vec<f64> = xs.iter().map(|&x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|&y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    num / den
}

/// Sample mean and (population) variance.
pub fn mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|&v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var)
}
