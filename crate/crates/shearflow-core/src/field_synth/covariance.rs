//! Covariance kernels on symmetric grids and their empirical estimation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{FieldError, FieldSample, SpectralDensity};
use crate::grid::Grid1;
use crate::numeric::Kahan;

/// An even covariance function sampled on a symmetric grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceKernel {
    pub grid: Grid1,
    /// Values at every grid point; symmetric about the midpoint by
    /// construction.
    pub values: Vec<f64>,
    /// Value at lag zero.
    pub k0: f64,
    /// When set to `L`, the kernel vanishes identically for `|x| > L`.
    pub support_bound: Option<f64>,
}

impl CovarianceKernel {
    /// Sample `K(x) = ∫ e^{iλx} h(λ) dλ` by quadrature of the cosine
    /// transform. One side is computed and mirrored, so evenness is exact.
    pub fn from_density(
        h: &SpectralDensity,
        half_width: f64,
        spacing: f64,
    ) -> Result<Self, FieldError> {
        assert!(half_width > 0.0 && spacing > 0.0);
        let grid = Grid1::symmetric(half_width, spacing);
        let n_half = grid.len / 2;
        let one_side: Vec<f64> = (0..=n_half)
            .into_par_iter()
            .map(|i| h.cosine_transform(i as f64 * spacing, 1e-8))
            .collect::<Result<_, _>>()?;
        Ok(Self::mirror(grid, one_side, None))
    }

    /// Sample a known even function directly.
    pub fn from_fn(half_width: f64, spacing: f64, f: impl Fn(f64) -> f64) -> Self {
        let grid = Grid1::symmetric(half_width, spacing);
        let n_half = grid.len / 2;
        let one_side: Vec<f64> = (0..=n_half).map(|i| f(i as f64 * spacing)).collect();
        Self::mirror(grid, one_side, None)
    }

    pub(crate) fn mirror(grid: Grid1, one_side: Vec<f64>, support_bound: Option<f64>) -> Self {
        let n_half = grid.len / 2;
        debug_assert_eq!(one_side.len(), n_half + 1);
        let mut values = vec![0.0; grid.len];
        for (k, &v) in one_side.iter().enumerate() {
            values[n_half + k] = v;
            values[n_half - k] = v;
        }
        let k0 = one_side[0];
        CovarianceKernel { grid, values, k0, support_bound }
    }

    pub fn half_width(&self) -> f64 {
        self.grid.last()
    }

    pub fn spacing(&self) -> f64 {
        self.grid.spacing
    }

    /// Kernel value at a lag; linear interpolation between grid points,
    /// exact zero beyond a declared support bound.
    pub fn eval(&self, lag: f64) -> f64 {
        let x = lag.abs();
        if let Some(l) = self.support_bound {
            if x > l {
                return 0.0;
            }
        }
        if x > self.half_width() {
            return 0.0;
        }
        self.grid.sample_linear(&self.values, x).0
    }

    /// `∫ K` by the trapezoid rule over the sampled window.
    pub fn mean_integral(&self) -> f64 {
        let mut acc = Kahan::default();
        for (i, &v) in self.values.iter().enumerate() {
            let w = if i == 0 || i + 1 == self.values.len() { 0.5 } else { 1.0 };
            acc.add(w * v);
        }
        acc.total() * self.grid.spacing
    }
}

/// Empirical covariance with standard-error bands.
#[derive(Clone, Debug)]
pub struct EmpiricalCovariance {
    pub kernel: CovarianceKernel,
    /// Standard error of the estimate at each one-sided lag index.
    pub std_err: Vec<f64>,
    pub n_samples: usize,
}

impl EmpiricalCovariance {
    /// One-sided lag index for a physical lag.
    pub fn lag_index(&self, lag: f64) -> usize {
        (lag.abs() / self.kernel.spacing()).round() as usize
    }

    pub fn at_lag(&self, lag: f64) -> (f64, f64) {
        let idx = self.lag_index(lag);
        let mid = self.kernel.grid.len / 2;
        (self.kernel.values[mid + idx], self.std_err[idx])
    }
}

/// Cross-site average estimate of `K` for lags up to `max_lag`, averaged
/// over samples, with per-lag standard errors across samples.
pub fn empirical_covariance(
    samples: &[FieldSample],
    max_lag: f64,
) -> Result<EmpiricalCovariance, FieldError> {
    if samples.len() < 2 {
        return Err(FieldError::TooFewSamples { got: samples.len(), need: 2 });
    }
    let grid = &samples[0].grid;
    if samples.iter().any(|s| s.grid != *grid) {
        return Err(FieldError::GridMismatch);
    }
    let spacing = grid.spacing;
    let n_lags = (max_lag / spacing).floor() as usize;
    if n_lags >= grid.len {
        return Err(FieldError::OutOfExtent { requested: max_lag, available: grid.extent() });
    }

    // per-sample lag averages, then mean and spread across samples
    let per_sample: Vec<Vec<f64>> = samples
        .par_iter()
        .map(|s| {
            (0..=n_lags)
                .map(|m| {
                    let mut acc = Kahan::default();
                    for j in 0..(grid.len - m) {
                        acc.add(s.values[j] * s.values[j + m]);
                    }
                    acc.total() / (grid.len - m) as f64
                })
                .collect()
        })
        .collect();

    let n = samples.len() as f64;
    let mut mean = vec![0.0; n_lags + 1];
    let mut se = vec![0.0; n_lags + 1];
    for m in 0..=n_lags {
        let mut acc = Kahan::default();
        for row in &per_sample {
            acc.add(row[m]);
        }
        mean[m] = acc.total() / n;
        let mut var = Kahan::default();
        for row in &per_sample {
            let d = row[m] - mean[m];
            var.add(d * d);
        }
        se[m] = (var.total() / (n * (n - 1.0))).sqrt();
    }

    let kernel = CovarianceKernel::mirror(
        Grid1::symmetric(n_lags as f64 * spacing, spacing),
        mean,
        None,
    );
    Ok(EmpiricalCovariance { kernel, std_err: se, n_samples: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gaussian_kernel_matches_analytic_form() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let k = CovarianceKernel::from_density(&h, 10.0, 0.01).unwrap();
        assert_relative_eq!(k.k0, 1.0, max_relative = 1e-7);
        let mut worst = 0.0f64;
        for (i, x) in k.grid.points().enumerate() {
            worst = worst.max((k.values[i] - (-0.5 * x * x).exp()).abs());
        }
        assert!(worst < 1e-6, "max abs error {worst}");
    }

    #[test]
    fn kernel_symmetry_and_dominance_are_exact() {
        let h = SpectralDensity::gaussian(0.7).unwrap();
        let k = CovarianceKernel::from_density(&h, 5.0, 0.05).unwrap();
        let n = k.values.len();
        for i in 0..n {
            assert_eq!(k.values[i], k.values[n - 1 - i]);
            assert!(k.values[i].abs() <= k.k0);
        }
    }

    #[test]
    fn cauchy_kernel_at_unit_lag() {
        let h = SpectralDensity::cauchy(1.0).unwrap();
        let k = CovarianceKernel::from_density(&h, 2.0, 0.5).unwrap();
        assert_relative_eq!(k.eval(1.0), (-1.0f64).exp(), epsilon = 2e-5);
        assert_relative_eq!(k.k0, 1.0, epsilon = 2e-5);
    }

    #[test]
    fn degenerate_samples_give_zero_estimate() {
        let grid = Grid1::symmetric(2.0, 0.5);
        let mk = |_: usize| FieldSample {
            grid: grid.clone(),
            values: vec![0.0; grid.len],
            seed: 0,
            index: 0,
            density_id: "zero".into(),
        };
        let samples: Vec<_> = (0..4).map(mk).collect();
        let est = empirical_covariance(&samples, 1.0).unwrap();
        assert!(est.kernel.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let a = FieldSample {
            grid: Grid1::symmetric(2.0, 0.5),
            values: vec![0.0; 9],
            seed: 0,
            index: 0,
            density_id: String::new(),
        };
        let mut b = a.clone();
        b.grid = Grid1::symmetric(2.0, 0.25);
        b.values = vec![0.0; b.grid.len];
        assert!(matches!(
            empirical_covariance(&[a, b], 1.0),
            Err(FieldError::GridMismatch)
        ));
    }
}
