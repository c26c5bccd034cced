//! Quadratic forms: the covariance form `(K ⋆ f², f²)` via FFT
//! convolution, and the Riesz form `(I_β(f²), f²)` with an analytic
//! diagonal cell.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{Profile, VarError};
use crate::field_synth::CovarianceKernel;
use crate::grid::Grid1;
use crate::numeric::Kahan;

/// Discrete convolution against a fixed kernel on a fixed grid,
/// `(K ⋆ g)(x_i) = Σ_j K(x_i - x_j) g_j Δx`, evaluated by padded FFT.
/// The kernel transform is cached, so repeated applications inside an
/// optimiser cost one forward/backward pair each.
pub struct KernelConvolver {
    n: usize,
    m: usize,
    spacing: f64,
    kernel_fft: Vec<Complex<f64>>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k0: f64,
}

impl KernelConvolver {
    pub fn new(kernel: &CovarianceKernel, grid: &Grid1) -> Result<Self, VarError> {
        let needed = grid.extent();
        let available = kernel.half_width();
        if available + 1e-12 < needed {
            return Err(VarError::KernelWindowTooSmall { needed, available });
        }
        let n = grid.len;
        let row: Vec<f64> =
            (0..n).map(|lag| kernel.eval(lag as f64 * grid.spacing)).collect();
        Ok(Self::from_row(&row, grid.spacing))
    }

    /// Build from an explicit one-sided lag row `K(0), K(Δx), ...` of the
    /// grid length (used where the kernel argument is rescaled on the
    /// fly).
    pub fn from_row(row: &[f64], spacing: f64) -> Self {
        let n = row.len();
        let m = (2 * n - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(m);
        let inv = planner.plan_fft_inverse(m);

        // circular layout of lags 0..n-1 then -(n-1)..-1
        let mut k = vec![Complex::new(0.0, 0.0); m];
        for (lag, &v) in row.iter().enumerate() {
            k[lag].re = v;
        }
        for (lag, &v) in row.iter().enumerate().skip(1) {
            k[m - lag].re = v;
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); fwd.get_inplace_scratch_len()];
        fwd.process_with_scratch(&mut k, &mut scratch);
        KernelConvolver { n, m, spacing, kernel_fft: k, fwd, inv, k0: row[0] }
    }

    pub fn k0(&self) -> f64 {
        self.k0
    }

    /// `(K ⋆ g)` sampled on the grid.
    pub fn convolve(&self, g: &[f64]) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.n);
        let mut buf = vec![Complex::new(0.0, 0.0); self.m];
        for (b, &v) in buf.iter_mut().zip(g) {
            b.re = v;
        }
        let mut scratch =
            vec![Complex::new(0.0, 0.0); self.fwd.get_inplace_scratch_len()];
        self.fwd.process_with_scratch(&mut buf, &mut scratch);
        for (b, k) in buf.iter_mut().zip(&self.kernel_fft) {
            *b *= *k;
        }
        self.inv.process_with_scratch(&mut buf, &mut scratch);
        let norm = self.spacing / self.m as f64;
        buf[..self.n].iter().map(|c| c.re * norm).collect()
    }

    /// `(K ⋆ g, g)` in the grid-weighted inner product.
    pub fn quadratic(&self, g: &[f64]) -> (f64, Vec<f64>) {
        let conv = self.convolve(g);
        let mut acc = Kahan::default();
        for (a, b) in conv.iter().zip(g) {
            acc.add(a * b);
        }
        (acc.total() * self.spacing, conv)
    }
}

/// `(K ⋆ f², f²)`: the Gaussian energy captured by a profile.
pub fn quadratic_form(kernel: &CovarianceKernel, f: &Profile) -> Result<f64, VarError> {
    let conv = KernelConvolver::new(kernel, &f.grid)?;
    Ok(conv.quadratic(&f.density()).0)
}

/// `(I_β(f²), f²)` with `I_β(g)(x) = ∫ g(y)/|x-y|^β dy`. Off-diagonal
/// pairs use the grid distance; the diagonal cell integrates the
/// singularity analytically: `∫_{|u|<Δx/2} |u|^{-β} du = 2 (Δx/2)^{1-β}/(1-β)`.
pub fn riesz_quadratic(f: &Profile, beta: f64) -> Result<f64, VarError> {
    if !(0.0 < beta && beta < 1.0) {
        return Err(VarError::BadParams { detail: format!("beta = {beta} must lie in ]0,1[") });
    }
    let d = f.density();
    let n = d.len();
    let dx = f.grid.spacing;
    // precompute |m Δx|^{-β} per lag
    let mut pow = vec![0.0; n];
    for (m, p) in pow.iter_mut().enumerate().skip(1) {
        *p = (m as f64 * dx).powf(-beta);
    }
    let diag_cell = 2.0 * (0.5 * dx).powf(1.0 - beta) / (1.0 - beta);
    let mut acc = Kahan::default();
    for i in 0..n {
        if d[i] == 0.0 {
            continue;
        }
        // off-diagonal, exploit symmetry
        let mut row = 0.0;
        for j in 0..i {
            row += d[j] * pow[i - j];
        }
        acc.add(2.0 * d[i] * row * dx * dx);
        acc.add(d[i] * d[i] * diag_cell * dx);
    }
    Ok(acc.total())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_synth::SpectralDensity;
    use approx::assert_relative_eq;

    fn gaussian_kernel(half_width: f64) -> CovarianceKernel {
        CovarianceKernel::from_fn(half_width, 0.05, |x| (-0.5 * x * x).exp())
    }

    #[test]
    fn constant_kernel_gives_k0() {
        let k = CovarianceKernel::from_fn(16.0, 0.1, |_| 0.7);
        let f = Profile::from_shape(4.0, 1.0 / 32.0, |x| (-x * x).exp());
        let q = quadratic_form(&k, &f).unwrap();
        // (K ⋆ f², f²) = K(0) (∫f²)² for constant kernels
        assert_relative_eq!(q, 0.7, max_relative = 1e-10);
    }

    #[test]
    fn fft_convolution_matches_direct_double_sum() {
        let k = gaussian_kernel(10.0);
        let f = Profile::from_shape(1.0, 1.0 / 64.0, |x| (std::f64::consts::FRAC_PI_2 * x).cos());
        let fast = quadratic_form(&k, &f).unwrap();
        // brute-force O(n²) oracle on the same grid
        let d = f.density();
        let mut slow = 0.0;
        for (i, xi) in f.grid.points().enumerate() {
            for (j, xj) in f.grid.points().enumerate() {
                slow += k.eval(xi - xj) * d[i] * d[j];
            }
        }
        slow *= f.grid.spacing * f.grid.spacing;
        assert_relative_eq!(fast, slow, max_relative = 1e-8);
    }

    #[test]
    fn concentration_drives_the_form_to_k0() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let k = CovarianceKernel::from_density(&h, 20.0, 0.05).unwrap();
        let mut prev = 0.0;
        for &scale in &[1.0, 2.0, 4.0, 8.0] {
            let f = Profile::from_shape(8.0, 1.0 / 64.0, |x| (-0.5 * (scale * x).powi(2)).exp());
            let q = quadratic_form(&k, &f).unwrap();
            assert!(q > prev, "form must increase under concentration: {q} after {prev}");
            assert!(q < k.k0, "form stays below K(0)");
            prev = q;
        }
        assert!(prev > 0.9 * k.k0);
    }

    #[test]
    fn too_small_kernel_window_is_rejected() {
        let k = gaussian_kernel(2.0);
        let f = Profile::from_shape(4.0, 1.0 / 16.0, |x| (-x * x).exp());
        assert!(matches!(
            quadratic_form(&k, &f),
            Err(VarError::KernelWindowTooSmall { .. })
        ));
    }

    #[test]
    fn riesz_dilation_law() {
        let beta = 0.5;
        let base = Profile::from_shape(8.0, 1.0 / 128.0, |x| (-0.5 * x * x).exp());
        let v1 = riesz_quadratic(&base, beta).unwrap();
        for &lam in &[2.0, 4.0] {
            let scaled =
                Profile::from_shape(8.0, 1.0 / 128.0, |x| (-0.5 * (lam * x) * (lam * x)).exp());
            let v = riesz_quadratic(&scaled, beta).unwrap();
            assert_relative_eq!(v / v1, lam.powf(beta), max_relative = 0.01);
        }
    }

    #[test]
    fn riesz_is_reflection_symmetric() {
        let skew = Profile::from_shape(4.0, 1.0 / 64.0, |x| (-(x - 0.7) * (x - 0.7)).exp());
        let mirror = Profile::from_shape(4.0, 1.0 / 64.0, |x| (-(-x - 0.7) * (-x - 0.7)).exp());
        let a = riesz_quadratic(&skew, 0.5).unwrap();
        let b = riesz_quadratic(&mirror, 0.5).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-12);
    }

    #[test]
    fn riesz_box_profile_matches_fine_quadrature() {
        // f² = 1/2 on (-1,1); (I_½(f²), f²) = (1/4)∫∫|x-y|^{-1/2} over the
        // square = 2^{3/2}(1/(1-β) - 1/(2-β))/2 at β = 1/2
        let f = Profile::from_shape(1.0, 1.0 / 256.0, |x| if x.abs() < 1.0 { 1.0 } else { 0.0 });
        let v = riesz_quadratic(&f, 0.5).unwrap();
        let exact = 2.0f64.powf(1.5) * (2.0 - 2.0 / 3.0) / 2.0;
        // fine midpoint double-sum oracle with Richardson step halving
        let oracle = |n: usize| {
            let h = 2.0 / n as f64;
            let mut s = 0.0;
            for i in 0..n {
                let x = -1.0 + (i as f64 + 0.5) * h;
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let y = -1.0 + (j as f64 + 0.5) * h;
                    s += (x - y).abs().powf(-0.5);
                }
                s += 2.0 * (0.5 * h).sqrt() * 2.0 / h; // diagonal cell, analytic
            }
            0.25 * s * h * h
        };
        let q1 = oracle(512);
        let q2 = oracle(1024);
        let refined = q2 + (q2 - q1) / (2.0f64.powf(1.5) - 1.0);
        assert_relative_eq!(refined, exact, max_relative = 2e-3);
        assert_relative_eq!(v, refined, max_relative = 5e-3);
        assert_relative_eq!(v, exact, max_relative = 5e-3);
    }
}
