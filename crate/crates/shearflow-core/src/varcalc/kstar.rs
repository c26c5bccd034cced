//! The Gaussian dual functional
//! `K*_r(u) = sup_μ (u, μ)² / (2 (K ⋆ μ, μ))` over nonnegative measures
//! on `(-r, r)`, with the convention 0/0 = 0.
//!
//! Measures are represented as nonnegative grid densities. The ratio is
//! scale invariant, so iterates live on the probability simplex. For
//! `u = K ⋆ f²` the optimum is `μ = f² dx` with value `(K ⋆ f², f²)/2`,
//! which the tests use as an exact oracle.

use super::opt::{spg_minimize, SpgOptions};
use super::{KernelConvolver, VarError};
use crate::field_synth::CovarianceKernel;
use crate::grid::Grid1;

#[derive(Clone, Debug)]
pub struct KstarResult {
    pub value: f64,
    /// Optimal density (unnormalised direction).
    pub maximizer: Vec<f64>,
    /// Set when `(K ⋆ μ, μ)` can vanish while `(u, μ)` does not; the
    /// maximizer is then a certificate direction.
    pub unbounded: bool,
    pub converged: bool,
}

/// Maximise the ratio by projected gradient on the simplex of nonnegative
/// densities, multistarted from a flat density and from the positive part
/// of `u`.
pub fn kstar(
    kernel: &CovarianceKernel,
    grid: &Grid1,
    u: &[f64],
    opts: &SpgOptions,
) -> Result<KstarResult, VarError> {
    if u.len() != grid.len {
        return Err(VarError::BadParams {
            detail: format!("u has {} entries for a grid of {}", u.len(), grid.len),
        });
    }
    let conv = KernelConvolver::new(kernel, grid)?;
    let dx = grid.spacing;
    let n = grid.len;

    if u.iter().all(|&v| v == 0.0) {
        return Ok(KstarResult {
            value: 0.0,
            maximizer: vec![0.0; n],
            unbounded: false,
            converged: true,
        });
    }

    // degenerate-form detection: (K ⋆ μ, μ) ≡ 0 along some μ >= 0 with
    // (u, μ) ≠ 0 makes the supremum infinite
    let probe: Vec<f64> = u.iter().map(|&v| v.max(0.0)).collect();
    let probe_mass: f64 = probe.iter().sum::<f64>() * dx;
    if probe_mass > 0.0 {
        let m: Vec<f64> = probe.iter().map(|v| v / probe_mass).collect();
        let (q, _) = conv.quadratic(&m);
        let pairing: f64 = u.iter().zip(&m).map(|(a, b)| a * b).sum::<f64>() * dx;
        if q.abs() < 1e-14 * kernel.k0.abs().max(1e-30) && pairing.abs() > 1e-12 {
            return Ok(KstarResult { value: f64::INFINITY, maximizer: m, unbounded: true, converged: true });
        }
    }

    let eval = |m: &[f64]| -> (f64, Vec<f64>) {
        let (q, kconv) = conv.quadratic(m);
        let pairing: f64 = u.iter().zip(m).map(|(a, b)| a * b).sum::<f64>() * dx;
        if q <= 0.0 {
            // outside the quadratic cone: push along u
            let grad: Vec<f64> = u.iter().map(|&v| -v * dx).collect();
            return (0.0, grad);
        }
        let value = pairing * pairing / (2.0 * q);
        // euclid gradient of -value
        let c1 = pairing / q;
        let c2 = pairing * pairing / (q * q);
        let grad: Vec<f64> =
            u.iter().zip(&kconv).map(|(ui, ki)| -(c1 * ui - c2 * ki) * dx).collect();
        (-value, grad)
    };
    let project = move |m: &mut Vec<f64>| {
        for v in m.iter_mut() {
            if !v.is_finite() || *v < 0.0 {
                *v = 0.0;
            }
        }
        let mass: f64 = m.iter().sum::<f64>() * dx;
        if mass > 0.0 {
            for v in m.iter_mut() {
                *v /= mass;
            }
        } else {
            let flat = 1.0 / (dx * m.len() as f64);
            for v in m.iter_mut() {
                *v = flat;
            }
        }
    };

    let flat = vec![1.0; n];
    let pos_u: Vec<f64> = u.iter().map(|&v| v.max(0.0) + 1e-9).collect();
    let abs_u: Vec<f64> = u.iter().map(|&v| v.abs() + 1e-9).collect();

    let mut best: Option<super::opt::SpgOutcome> = None;
    for start in [flat, pos_u, abs_u] {
        let out = spg_minimize(&eval, &project, start, opts);
        if best.as_ref().map(|b| out.value < b.value).unwrap_or(true) {
            best = Some(out);
        }
    }
    let out = best.unwrap();
    Ok(KstarResult {
        value: -out.value,
        maximizer: out.x,
        unbounded: false,
        converged: out.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varcalc::{quadratic_form, Profile};
    use approx::assert_relative_eq;

    fn gaussian_kernel() -> CovarianceKernel {
        CovarianceKernel::from_fn(16.0, 0.05, |t| (-0.5 * t * t).exp())
    }

    fn kstar_opts() -> SpgOptions {
        SpgOptions { max_iter: 3000, ..SpgOptions::default() }
    }

    #[test]
    fn zero_input_is_zero() {
        let k = gaussian_kernel();
        let grid = Grid1::symmetric(3.0, 1.0 / 16.0);
        let r = kstar(&k, &grid, &vec![0.0; grid.len], &kstar_opts()).unwrap();
        assert_eq!(r.value, 0.0);
    }

    #[test]
    fn convolved_density_recovers_half_the_quadratic_form() {
        let k = gaussian_kernel();
        let f = Profile::from_shape(3.0, 1.0 / 16.0, |x| (-0.8 * x * x).exp());
        let conv = KernelConvolver::new(&k, &f.grid).unwrap();
        let u = conv.convolve(&f.density());
        let expect = 0.5 * quadratic_form(&k, &f).unwrap();
        let got = kstar(&k, &f.grid, &u, &kstar_opts()).unwrap();
        assert!(got.converged || (got.value - expect).abs() < 1e-6 * expect);
        assert_relative_eq!(got.value, expect, max_relative = 1e-6);
    }

    #[test]
    fn quadratic_homogeneity() {
        let k = gaussian_kernel();
        let f = Profile::from_shape(3.0, 1.0 / 16.0, |x| (-x * x).exp() * (1.0 + 0.3 * x));
        let conv = KernelConvolver::new(&k, &f.grid).unwrap();
        let u = conv.convolve(&f.density());
        let base = kstar(&k, &f.grid, &u, &kstar_opts()).unwrap().value;
        for &scale in &[-2.0, 3.0] {
            let scaled: Vec<f64> = u.iter().map(|v| v * scale).collect();
            let got = kstar(&k, &f.grid, &scaled, &kstar_opts()).unwrap().value;
            assert_relative_eq!(got, scale * scale * base, max_relative = 1e-7);
        }
    }

    #[test]
    fn degenerate_kernel_reports_unbounded() {
        let k = CovarianceKernel::from_fn(16.0, 0.05, |_| 0.0);
        let grid = Grid1::symmetric(3.0, 1.0 / 16.0);
        let u = vec![1.0; grid.len];
        let r = kstar(&k, &grid, &u, &kstar_opts()).unwrap();
        assert!(r.unbounded);
        assert!(r.value.is_infinite());
    }
}
