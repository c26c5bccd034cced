//! Near-origin scaling of the rate function.
//!
//! For kernels with a power tail `K(x) ~ |x|^{-β}`, `β ∈ ]0,1[`, the rate
//! function behaves like `|y|^{4/β}` near zero; for integrable kernels
//! with `K̄ = ∫K ≠ 0` it is quartic with limit `I/(8 K̄²)` in terms of the
//! Gagliardo–Nirenberg constant.
//!
//! Near the origin the optimal profiles spread far beyond any fixed
//! interval, so the single-profile bound is computed in its dilated form:
//! the L² isometry `f ↦ sqrt(λ) f(λ·)` turns spreading into a scalar, and
//!
//! ```text
//! I_1(y) = inf_f inf_λ { ‖f'‖²/(2λ²) : ∫∫ K(λ(a-b)) f²(a) f²(b) da db > y²/2 }
//! ```
//!
//! with `f` on a small fixed interval. The rate function shares its
//! near-origin behaviour with this bound (its double conjugate), which is
//! what the fits below use.

use super::lambda::project_sphere;
use super::opt::{spg_minimize, SpgOptions};
use super::{Profile, VarError};
use crate::field_synth::CovarianceKernel;
use crate::numeric::linear_fit;

#[derive(Clone, Debug)]
pub struct ScalingOptions {
    /// Half-width of the profile interval (dilation does the spreading).
    pub r: f64,
    pub spacing: f64,
    /// Largest dilation scale explored.
    pub lambda_cap: f64,
    pub spg: SpgOptions,
}

impl Default for ScalingOptions {
    fn default() -> Self {
        ScalingOptions {
            r: 4.0,
            spacing: 1.0 / 32.0,
            lambda_cap: 1e5,
            spg: SpgOptions { max_iter: 800, ..SpgOptions::default() },
        }
    }
}

#[derive(Clone, Debug)]
pub struct ScalingFit {
    /// Log-log slope over the sampled window.
    pub exponent: f64,
    pub prefactor: f64,
    /// `(y, value, lambda_star)` samples that entered the fit.
    pub points: Vec<(f64, f64, f64)>,
    /// Mean of `value/y⁴` over the window, for the quartic regime.
    pub plateau: Option<f64>,
}

/// `∫∫ K(λ(a-b)) f²(a) f²(b)` through a per-dilation convolver.
fn dilated_form(kernel: &CovarianceKernel, dens: &[f64], spacing: f64, lambda: f64) -> f64 {
    let row: Vec<f64> =
        (0..dens.len()).map(|m| kernel.eval(lambda * m as f64 * spacing)).collect();
    super::forms::KernelConvolver::from_row(&row, spacing).quadratic(dens).0
}

/// Constrained inner minimum at a fixed dilation: `min ‖f'‖²/2` subject to
/// the dilated form clearing `t`, by a penalty ramp from a warm start.
fn inner_min(
    kernel: &CovarianceKernel,
    lambda: f64,
    t: f64,
    starts: &[Profile],
    opts: &SpgOptions,
) -> (f64, Profile, bool) {
    let grid = starts[0].grid.clone();
    let dx = grid.spacing;
    let n = grid.len;
    let project = project_sphere(dx);
    let row: Vec<f64> = (0..n).map(|m| kernel.eval(lambda * m as f64 * dx)).collect();
    let conv = super::forms::KernelConvolver::from_row(&row, dx);

    let run = |start: &Profile| -> (f64, Profile, bool) {
        let mut f = start.values.clone();
        for &rho in &[1e2, 1e4, 1e6] {
            let eval = |x: &[f64]| -> (f64, Vec<f64>) {
                let dens: Vec<f64> = x.iter().map(|v| v * v).collect();
                let (q, kconv) = conv.quadratic(&dens);
                let mut e = 0.0;
                for w in x.windows(2) {
                    let d = w[1] - w[0];
                    e += d * d;
                }
                e = 0.5 * e / dx;
                let gap = (t - q).max(0.0);
                let value = e + rho * gap * gap;
                let mut grad = vec![0.0; n];
                for i in 1..n - 1 {
                    let ge = (2.0 * x[i] - x[i - 1] - x[i + 1]) / dx;
                    let mut g = ge;
                    if gap > 0.0 {
                        g -= 2.0 * rho * gap * 4.0 * x[i] * kconv[i] * dx;
                    }
                    grad[i] = g;
                }
                (value, grad)
            };
            let out = spg_minimize(&eval, &project, f, opts);
            f = out.x;
        }
        let mut prof = Profile { grid: grid.clone(), values: f };
        prof.renormalize();
        let q = dilated_form(kernel, &prof.density(), dx, lambda);
        let ok = q >= t - 1e-9;
        let energy = if ok { prof.dirichlet_energy() } else { f64::INFINITY };
        (energy, prof, ok)
    };

    let mut best: Option<(f64, Profile, bool)> = None;
    for s in starts {
        let cand = run(s);
        let better = match &best {
            None => true,
            Some((be, _, bok)) => (cand.2 && !bok) || (cand.2 == *bok && cand.0 < *be),
        };
        if better {
            best = Some(cand);
        }
    }
    best.unwrap()
}

/// `I_1(y)` through the dilated formulation; returns `(value, λ*)`.
pub fn i_one_dilated(
    kernel: &CovarianceKernel,
    y: f64,
    options: &ScalingOptions,
) -> Result<(f64, f64), VarError> {
    if y <= 0.0 {
        return Err(VarError::BadParams { detail: "y must be positive".into() });
    }
    let t = 0.5 * y * y + 1e-9;
    let r = options.r;
    let spacing = options.spacing;
    // two caps: stay inside the sampled window (unless the kernel is
    // effectively compact) and keep the dilated kernel resolved on the
    // grid, so the diagonal cell cannot fake the quadratic form
    let window_cap = if kernel.support_bound.is_some()
        || kernel.eval(kernel.half_width()).abs() < 1e-10 * kernel.k0.abs()
    {
        options.lambda_cap
    } else {
        options.lambda_cap.min(kernel.half_width() / (2.0 * r))
    };
    let half_lag = {
        let mut lag = kernel.spacing();
        while lag < kernel.half_width() && kernel.eval(lag).abs() > 0.5 * kernel.k0.abs() {
            lag += kernel.spacing();
        }
        lag
    };
    let window_cap = window_cap.min(2.0 * half_lag / spacing);

    let starts_for = |warm: &Profile| -> Vec<Profile> {
        vec![
            warm.clone(),
            Profile::from_shape(r, spacing, |x| (-0.5 * (8.0 * x / r).powi(2)).exp()),
            Profile::from_shape(r, spacing, |x| (-0.5 * (20.0 * x / r).powi(2)).exp()),
        ]
    };
    let start = Profile::from_shape(r, spacing, |x| (-0.5 * (2.0 * x / r).powi(2)).exp());

    // cost at a dilation, warm-started along the λ walk
    let mut warm = start.clone();
    let mut evaluate = |lambda: f64, warm: &mut Profile| -> Option<f64> {
        let (energy, prof, feasible) =
            inner_min(kernel, lambda, t, &starts_for(warm), &options.spg);
        if feasible {
            *warm = prof;
            Some(energy / (lambda * lambda))
        } else {
            None
        }
    };

    // coarse log walk until the cost turns upward
    let mut best: Option<(f64, f64)> = None;
    let mut lam = 1.0;
    let mut seen_rise = 0;
    while lam <= window_cap {
        if let Some(cost) = evaluate(lam, &mut warm) {
            match best {
                Some((b, _)) if cost > b => {
                    seen_rise += 1;
                    if seen_rise >= 2 {
                        break;
                    }
                }
                _ => {
                    if best.map(|(b, _)| cost < b).unwrap_or(true) {
                        best = Some((cost, lam));
                        seen_rise = 0;
                    }
                }
            }
        }
        lam *= 1.6;
    }
    let (_, lam_best) = best.ok_or(VarError::BadParams {
        detail: format!("no feasible dilation for y = {y} within the kernel window"),
    })?;

    // golden refinement in log λ around the best coarse point
    let phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let (mut lo, mut hi) = ((lam_best / 1.6f64.powi(2)).max(1.0).ln(), (lam_best * 1.6f64.powi(2)).min(window_cap).ln());
    let mut cache_warm = warm.clone();
    let mut value_at = |ll: f64, w: &mut Profile| -> f64 {
        evaluate(ll.exp(), w).unwrap_or(f64::INFINITY)
    };
    for _ in 0..10 {
        let m1 = hi - phi * (hi - lo);
        let m2 = lo + phi * (hi - lo);
        let v1 = value_at(m1, &mut cache_warm);
        let v2 = value_at(m2, &mut cache_warm);
        if v1 < v2 {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let lam_star = (0.5 * (lo + hi)).exp();
    let final_cost = value_at(0.5 * (lo + hi), &mut cache_warm);
    let (best_cost, best_lam) = if final_cost < best.unwrap().0 {
        (final_cost, lam_star)
    } else {
        best.unwrap()
    };
    Ok((best_cost, best_lam))
}

/// Fit the near-origin exponent and prefactor of the rate function (via
/// its single-profile bound, which shares the near-origin behaviour) on
/// the positive `y` samples.
pub fn scaling_analysis(
    kernel: &CovarianceKernel,
    y_grid: &[f64],
    options: &ScalingOptions,
) -> Result<ScalingFit, VarError> {
    if y_grid.iter().any(|&y| y <= 0.0) {
        return Err(VarError::BadParams { detail: "y samples must be positive".into() });
    }
    let mut points = Vec::new();
    for &y in y_grid {
        if let Ok((value, lam)) = i_one_dilated(kernel, y, options) {
            if value.is_finite() && value > 0.0 {
                points.push((y, value, lam));
            }
        }
    }
    if points.len() < 4 {
        return Err(VarError::TooFewPoints { got: points.len(), need: 4 });
    }
    let xs: Vec<f64> = points.iter().map(|(y, _, _)| y.ln()).collect();
    let js: Vec<f64> = points.iter().map(|(_, j, _)| j.ln()).collect();
    let (slope, intercept) = linear_fit(&xs, &js);
    let plateau = Some(
        points.iter().map(|(y, j, _)| j / y.powi(4)).sum::<f64>() / points.len() as f64,
    );
    Ok(ScalingFit { exponent: slope, prefactor: intercept.exp(), points, plateau })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nonpositive_samples() {
        let k = CovarianceKernel::from_fn(16.0, 0.05, |x| (-0.5 * x * x).exp());
        assert!(scaling_analysis(&k, &[0.5, -0.1], &ScalingOptions::default()).is_err());
    }

    #[test]
    fn dilated_and_direct_bounds_agree_at_moderate_y() {
        // isometry check: the dilated value on a small interval matches
        // the direct constrained minimum on a wide one
        let k = CovarianceKernel::from_fn(70.0, 0.05, |x| (-0.5 * x * x).exp());
        let y = 0.9;
        let o = ScalingOptions::default();
        let (dilated, _) = i_one_dilated(&k, y, &o).unwrap();
        let direct = crate::varcalc::i_n(&k, y, 1, 16.0, 1.0 / 16.0, &SpgOptions::default())
            .unwrap()
            .value;
        assert!(
            (dilated - direct).abs() < 0.08 * direct.abs().max(0.01),
            "dilated {dilated} vs direct {direct}"
        );
    }
}
