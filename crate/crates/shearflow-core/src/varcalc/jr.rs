//! The eigenvalue tail functional
//! `J_r(x) = inf (1/2 ‖f'‖² - x)² / (2 (K ⋆ f², f²))` over unit profiles
//! on `(-r, r)`, zero at and above the free Dirichlet level `π²/(8r²)`.

use super::lambda::project_sphere;
use super::opt::{spg_minimize, SpgOptions};
use super::{KernelConvolver, Profile, VarError};
use crate::field_synth::CovarianceKernel;

/// Threshold below which the infimum is active. The constant `π²/8` is the
/// minimal Dirichlet energy on the unit interval; on `(-r, r)` it scales
/// by `1/r²`.
pub fn jr_threshold(r: f64) -> f64 {
    std::f64::consts::PI.powi(2) / (8.0 * r * r)
}

/// Evaluate `J_r(x)`. Returns 0 on the `x >= π²/(8r²)` branch without
/// optimising.
pub fn j_r(
    kernel: &CovarianceKernel,
    x: f64,
    r: f64,
    spacing: f64,
    opts: &SpgOptions,
) -> Result<f64, VarError> {
    if r <= 0.0 {
        return Err(VarError::BadParams { detail: format!("r = {r} must be positive") });
    }
    if x >= jr_threshold(r) {
        return Ok(0.0);
    }
    let template = Profile::from_shape(r, spacing, |t| (-t * t).exp());
    let grid = template.grid.clone();
    let dx = grid.spacing;
    let conv = KernelConvolver::new(kernel, &grid)?;

    let eval = |f: &[f64]| -> (f64, Vec<f64>) {
        let dens: Vec<f64> = f.iter().map(|v| v * v).collect();
        let (q, kconv) = conv.quadratic(&dens);
        let q = q.max(1e-300);
        let mut e = 0.0;
        for w in f.windows(2) {
            let d = w[1] - w[0];
            e += d * d;
        }
        e = 0.5 * e / dx;
        let d = e - x;
        let value = d * d / (2.0 * q);
        let mut grad = vec![0.0; f.len()];
        for i in 1..f.len() - 1 {
            let ge = (2.0 * f[i] - f[i - 1] - f[i + 1]) / dx;
            let gq = 4.0 * f[i] * kconv[i] * dx;
            grad[i] = (d / q) * ge - (d * d / (2.0 * q * q)) * gq;
        }
        (value, grad)
    };
    let project = project_sphere(dx);

    let mut best = f64::INFINITY;
    for s in Profile::starts(r, spacing) {
        let out = spg_minimize(&eval, &project, s.values, opts);
        best = best.min(out.value);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varcalc::lambda_of_alpha;

    fn gaussian_kernel() -> CovarianceKernel {
        CovarianceKernel::from_fn(24.0, 0.05, |t| (-0.5 * t * t).exp())
    }

    #[test]
    fn zero_branch_above_threshold() {
        let k = gaussian_kernel();
        let r = 3.0;
        let x = jr_threshold(r) + 0.01;
        assert_eq!(j_r(&k, x, r, 1.0 / 32.0, &SpgOptions::default()).unwrap(), 0.0);
    }

    #[test]
    fn monotone_decreasing_with_asymptotic_quadratic_growth() {
        let k = gaussian_kernel();
        let opts = SpgOptions::default();
        let r = 5.0;
        let xs = [-0.3, -1.0, -3.0, -8.0];
        let mut prev = 0.0;
        let mut vals = Vec::new();
        for &x in &xs {
            let v = j_r(&k, x, r, 1.0 / 24.0, &opts).unwrap();
            assert!(v > prev, "J must grow as x drops: J({x}) = {v}");
            prev = v;
            vals.push(v);
        }
        // deep in the tail, J(x)/x² approaches 1/(2 sup Q) with sup Q < K0
        let ratio = vals[3] / (xs[3] * xs[3]);
        assert!(ratio > 0.5 / k.k0 && ratio < 2.0, "quadratic envelope ratio {ratio}");
    }

    #[test]
    fn duality_with_lambda_on_a_spot_grid() {
        // x < -Λ(α, w) exactly when J_w(x) > α², on a common interval
        let k = gaussian_kernel();
        let opts = SpgOptions::default();
        let w = 5.0;
        for &alpha in &[0.5, 1.0] {
            let lam = lambda_of_alpha(&k, alpha, w, 1.0 / 24.0, &opts).unwrap().value;
            for &x in &[-0.2, -0.8, -1.6] {
                let j = j_r(&k, x, w, 1.0 / 24.0, &opts).unwrap();
                let lhs = x < -lam;
                let rhs = j > alpha * alpha;
                // skip the dead band right at the frontier
                if (x + lam).abs() < 0.02 * lam.abs().max(1.0)
                    || (j - alpha * alpha).abs() < 0.02 * (alpha * alpha).max(1e-2)
                {
                    continue;
                }
                assert_eq!(lhs, rhs, "duality failed at α = {alpha}, x = {x}");
            }
        }
    }
}
