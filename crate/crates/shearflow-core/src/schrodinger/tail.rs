//! Monte Carlo statistics of the eigenvalue tail
//! `P[λ(α v / sqrt(log T), I_r) <= x]` over independent field draws, with
//! the fitted `log p / log T` exponent across a ladder of horizons.

use rayon::prelude::*;

use super::{principal_eigenvalue, Potential, SchrodingerError};
use crate::field_synth::{SpectralDensity, SynthesisPlan};
use crate::grid::Grid1;
use crate::numeric::{linear_fit, wilson_interval};
use crate::rng::StreamKind;

#[derive(Clone, Debug)]
pub struct TailPoint {
    pub t: f64,
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
    /// `log p̂ / log T`; `None` on zero hits.
    pub log_ratio: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TailMcResult {
    pub points: Vec<TailPoint>,
    /// Least-squares slope of `log p̂` against `log T`; `None` when no
    /// horizon produced hits.
    pub fitted_exponent: Option<f64>,
    /// One-sided exponent bound `log(1/n)/log T_max` reported when every
    /// horizon came up empty.
    pub exponent_bound: Option<f64>,
}

/// Estimate the tail probability per horizon and fit its `log T` exponent.
///
/// Draw `i` of horizon index `j` uses the stream `(seed, EigenTail,
/// j * n_fields + i)`, so the estimates are reproducible for any worker
/// count and fresh across horizons.
#[allow(clippy::too_many_arguments)]
pub fn eigenvalue_tail_mc(
    h: &SpectralDensity,
    alpha: f64,
    r: f64,
    t_list: &[f64],
    x: f64,
    n_fields: usize,
    seed: u64,
    eigen_grid: usize,
) -> Result<TailMcResult, SchrodingerError> {
    if alpha == 0.0 {
        return Err(SchrodingerError::BadParams { detail: "alpha must be nonzero".into() });
    }
    if t_list.iter().any(|&t| t < 3.0) {
        return Err(SchrodingerError::BadParams { detail: "horizons must satisfy T >= 3".into() });
    }
    if n_fields < 100 {
        return Err(SchrodingerError::BadParams {
            detail: format!("need at least 100 field draws, got {n_fields}"),
        });
    }

    // fields sampled a touch beyond the box so interpolation stays interior
    let spacing = 2.0 * r / (eigen_grid + 1) as f64;
    let grid = Grid1::symmetric(r + 2.0 * spacing, spacing);
    let plan = SynthesisPlan::new(h, &grid)?;

    let mut points = Vec::with_capacity(t_list.len());
    for (j, &t) in t_list.iter().enumerate() {
        let scale = alpha / t.ln().sqrt();
        let hits: u64 = (0..n_fields)
            .into_par_iter()
            .map(|i| {
                let field =
                    plan.sample_one(seed, StreamKind::EigenTail, (j * n_fields + i) as u64);
                let v = Potential::from_field(&field, -r, r, eigen_grid, scale);
                let lambda = principal_eigenvalue(&v, eigen_grid)
                    .map(|e| e.lambda)
                    .unwrap_or(f64::INFINITY);
                u64::from(lambda <= x)
            })
            .collect::<Vec<u64>>()
            .iter()
            .sum();
        let p_hat = hits as f64 / n_fields as f64;
        let (lo, hi) = wilson_interval(hits, n_fields as u64);
        points.push(TailPoint {
            t,
            hits,
            n: n_fields as u64,
            p_hat,
            wilson_lo: lo,
            wilson_hi: hi,
            log_ratio: (hits > 0).then(|| p_hat.ln() / t.ln()),
        });
    }

    let usable: Vec<&TailPoint> = points.iter().filter(|p| p.hits > 0).collect();
    let (fitted_exponent, exponent_bound) = if usable.len() >= 2 {
        let xs: Vec<f64> = usable.iter().map(|p| p.t.ln()).collect();
        let ys: Vec<f64> = usable.iter().map(|p| p.p_hat.ln()).collect();
        (Some(linear_fit(&xs, &ys).0), None)
    } else if usable.len() == 1 {
        (usable[0].log_ratio, None)
    } else {
        let t_max = t_list.iter().cloned().fold(f64::MIN, f64::max);
        (None, Some((1.0 / n_fields as f64).ln() / t_max.ln()))
    };

    Ok(TailMcResult { points, fitted_exponent, exponent_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian() -> SpectralDensity {
        SpectralDensity::gaussian(1.0).unwrap()
    }

    #[test]
    fn threshold_above_free_level_fills_up_as_alpha_shrinks() {
        // x above π²/(8r²): the free eigenvalue already sits below x, so a
        // weak potential barely moves it and the probability approaches 1
        let r = 2.0;
        let x = std::f64::consts::PI.powi(2) / (8.0 * r * r) + 0.05;
        let res =
            eigenvalue_tail_mc(&gaussian(), 0.05, r, &[100.0], x, 200, 9, 64).unwrap();
        assert!(res.points[0].p_hat > 0.95, "p = {}", res.points[0].p_hat);
    }

    #[test]
    fn impossible_threshold_reports_bound() {
        let res =
            eigenvalue_tail_mc(&gaussian(), 0.5, 2.0, &[100.0, 1000.0], -40.0, 100, 9, 64)
                .unwrap();
        assert!(res.fitted_exponent.is_none());
        let bound = res.exponent_bound.unwrap();
        assert!(bound < 0.0);
        assert!(res.points.iter().all(|p| p.hits == 0));
    }

    #[test]
    fn parameter_validation() {
        assert!(eigenvalue_tail_mc(&gaussian(), 0.0, 2.0, &[100.0], 0.0, 100, 1, 64).is_err());
        assert!(eigenvalue_tail_mc(&gaussian(), 1.0, 2.0, &[2.0], 0.0, 100, 1, 64).is_err());
        assert!(eigenvalue_tail_mc(&gaussian(), 1.0, 2.0, &[100.0], 0.0, 10, 1, 64).is_err());
    }
}
