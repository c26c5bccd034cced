//! Rate-curve and exit-time estimation.

use rayon::prelude::*;

use super::paths::PathConfig;
use super::PathError;
use crate::field_synth::{sample_field, SpectralDensity};
use crate::grid::Grid1;
use crate::numeric::{normal_tail, wilson_interval, Kahan};
use crate::rng::{Stream, StreamKind};

/// One `(y, T)` cell of the empirical rate curve.
#[derive(Clone, Debug)]
pub struct RateCell {
    pub y: f64,
    pub t: f64,
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    /// `(1/T) ln p̂`; `None` on zero hits.
    pub rate: Option<f64>,
    /// One-sided bound `(1/T) ln(1/n)` reported instead of a rate when the
    /// cell is empty.
    pub rate_bound: f64,
    pub wilson_lo: f64,
    pub wilson_hi: f64,
}

#[derive(Clone, Debug)]
pub struct RateCurveEstimate {
    pub epsilon: f64,
    pub cells: Vec<RateCell>,
    pub coverage_warning: bool,
}

/// Empirical `(1/T) log P[|Y_T - y| <= ε]` per horizon on a quenched field
/// draw (one fixed realisation per horizon, paths independent).
pub fn estimate_rate_curve(
    h: &SpectralDensity,
    y_grid: &[f64],
    epsilon: f64,
    t_list: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<RateCurveEstimate, PathError> {
    if epsilon <= 0.0 {
        return Err(PathError::BadConfig { detail: "epsilon must be positive".into() });
    }
    let mut cells = Vec::new();
    let mut warn = false;
    for (j, &t) in t_list.iter().enumerate() {
        // field extent 6 sqrt(T): excursions beyond are clipped and flagged
        let extent = 6.0 * t.sqrt();
        let grid = Grid1::symmetric(extent, 0.25);
        let field = &sample_field(h, &grid, seed ^ ((j as u64) << 32), 1)?[0];
        let cfg = PathConfig::new(t, t / 16384.0, 1.0, seed, n_paths)?;
        let batch = super::paths::simulate_y_samples(field, &cfg)?;
        warn |= batch.coverage_warning;
        for &y in y_grid {
            let hits = batch.values.iter().filter(|&&v| (v - y).abs() <= epsilon).count() as u64;
            let p_hat = hits as f64 / n_paths as f64;
            let (lo, hi) = wilson_interval(hits, n_paths as u64);
            cells.push(RateCell {
                y,
                t,
                hits,
                n: n_paths as u64,
                p_hat,
                rate: (hits > 0).then(|| p_hat.ln() / t),
                rate_bound: (1.0 / n_paths as f64).ln() / t,
                wilson_lo: lo,
                wilson_hi: hi,
            });
        }
    }
    Ok(RateCurveEstimate { epsilon, cells, coverage_warning: warn })
}

/// Exit-time tail of the Brownian sup over a horizon:
/// MC estimate of `(1/T) log P[sup |B| >= R T]` with the reflection
/// principle value for cross-checking.
#[derive(Clone, Debug)]
pub struct ExitRatePoint {
    pub r: f64,
    pub t: f64,
    pub hits: u64,
    pub n: u64,
    pub p_hat: f64,
    pub rate_mc: Option<f64>,
    pub rate_bound: f64,
    /// `-R²/2`, the asymptotic rate.
    pub rate_analytic: f64,
    /// `4 Φ̄(R sqrt(T))`, the leading reflection estimate of the
    /// probability itself.
    pub reflection_p: f64,
}

pub fn exit_time_rate(
    r_list: &[f64],
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
) -> Result<Vec<ExitRatePoint>, PathError> {
    let cfg = PathConfig::new(t, dt, 1.0, seed, n_paths)?;
    let n_steps = cfg.n_steps();
    let sqrt_dt = dt.sqrt();
    let levels: Vec<f64> = r_list.iter().map(|&r| r * t).collect();

    // count per-path whether the running |B| clears each level
    let counts: Vec<u64> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::new(seed, StreamKind::Path, i as u64);
            let mut b: f64 = 0.0;
            let mut max_abs: f64 = 0.0;
            for _ in 0..n_steps {
                b += sqrt_dt * stream.normal();
                max_abs = max_abs.max(b.abs());
            }
            let mut mask = 0u64;
            for (k, &lvl) in levels.iter().enumerate() {
                if max_abs >= lvl {
                    mask |= 1 << k;
                }
            }
            mask
        })
        .collect();

    Ok(r_list
        .iter()
        .enumerate()
        .map(|(k, &r)| {
            let hits = counts.iter().filter(|&&m| m & (1 << k) != 0).count() as u64;
            let p_hat = hits as f64 / n_paths as f64;
            ExitRatePoint {
                r,
                t,
                hits,
                n: n_paths as u64,
                p_hat,
                rate_mc: (hits > 0).then(|| p_hat.ln() / t),
                rate_bound: (1.0 / n_paths as f64).ln() / t,
                rate_analytic: -0.5 * r * r,
                reflection_p: 4.0 * normal_tail(r * t.sqrt()),
            }
        })
        .collect())
}

/// Aggregate variance check of the Brownian increments: mean of
/// `(ΔB)²/dt` over a batch, which should sit within normal fluctuation of
/// one.
pub fn increment_variance_statistic(seed: u64, n_increments: usize) -> f64 {
    let mut stream = Stream::new(seed, StreamKind::Generic, 7);
    let mut acc = Kahan::default();
    for _ in 0..n_increments {
        let z = stream.normal();
        acc.add(z * z);
    }
    acc.total() / n_increments as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_curve_is_order_one_at_zero() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let est = estimate_rate_curve(&h, &[0.0], 0.2, &[200.0], 2000, 17).unwrap();
        let cell = &est.cells[0];
        let rate = cell.rate.expect("y = 0 must be hit at desk scale");
        assert!(rate.abs() < 0.05, "|rate| at y = 0 is {}", rate.abs());
    }

    #[test]
    fn far_cells_report_bounds() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let est = estimate_rate_curve(&h, &[1.8], 0.05, &[200.0], 500, 17).unwrap();
        let cell = &est.cells[0];
        assert_eq!(cell.hits, 0);
        assert!(cell.rate.is_none());
        assert!(cell.rate_bound < 0.0);
    }

    #[test]
    fn exit_rates_order_and_match_reflection() {
        let pts = exit_time_rate(&[0.2, 0.4], 100.0, 0.05, 200_000, 23).unwrap();
        // monotone: larger boxes are harder to leave
        let r0 = pts[0].rate_mc.unwrap();
        if let Some(r1) = pts[1].rate_mc {
            assert!(r0 > r1, "rate({}) = {r0} vs rate({}) = {r1}", pts[0].r, pts[1].r);
        }
        // at R sqrt(T) = 2 the reflection value is still prefactor-heavy;
        // compare the probability itself, not the exponent
        let p = pts[0].p_hat;
        assert!(
            (p - pts[0].reflection_p).abs() < 0.15 * pts[0].reflection_p + 3.0 / 200_000.0f64,
            "p = {p} vs reflection {}",
            pts[0].reflection_p
        );
    }

    #[test]
    fn increments_pass_the_aggregate_variance_check() {
        let m = 100_000;
        let stat = increment_variance_statistic(3, m);
        // 1% two-sided level for a chi-square mean: 2.576 sqrt(2/m)
        let band = 2.576 * (2.0 / m as f64).sqrt();
        assert!((stat - 1.0).abs() < band, "stat {stat}, band {band}");
    }
}
