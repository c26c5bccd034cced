//! The confinement strategy probe: travel fast to a box, stay there, and
//! measure the exponential cost of staying.
//!
//! Paths are conditioned on reaching `z + (-1, 1)` within the travel
//! window `Δ = T / log T` by rejection resampling; survivors are the
//! conditioned paths that then never leave `z + (-r, r)` before `T`. The
//! per-unit-time decay of the survivor fraction estimates the free
//! Dirichlet level `π²/(8 r²)` when the field is flat, and the
//! field-tilted level otherwise.

use rayon::prelude::*;

use super::PathError;
use crate::field_synth::FieldSample;
use crate::grid::Grid1;
use crate::numeric::Kahan;
use crate::rng::{Stream, StreamKind};

/// Normalised spatial occupation over a time window.
#[derive(Clone, Debug)]
pub struct OccupationMeasure {
    pub bins: Grid1,
    pub mass: Vec<f64>,
}

impl OccupationMeasure {
    /// Fraction of mass inside `[lo, hi]`.
    pub fn mass_within(&self, lo: f64, hi: f64) -> f64 {
        let mut acc = 0.0;
        for (i, x) in self.bins.points().enumerate() {
            if x >= lo && x <= hi {
                acc += self.mass[i];
            }
        }
        acc
    }
}

/// Histogram of positions over `[s, t]` of a stored path with step `dt`.
pub fn occupation_measure(
    path: &[f64],
    dt: f64,
    s: f64,
    t: f64,
    bin_width: f64,
) -> Result<OccupationMeasure, PathError> {
    let horizon = (path.len() - 1) as f64 * dt;
    if !(0.0 <= s && s < t && t <= horizon + 1e-9) {
        return Err(PathError::EmptyWindow { s, t });
    }
    let i0 = (s / dt).floor() as usize;
    let i1 = ((t / dt).ceil() as usize).min(path.len() - 1);
    let window = &path[i0..=i1];
    let lo = window.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = window.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let center = 0.5 * (lo + hi);
    let half = (0.5 * (hi - lo)).max(bin_width);
    let mut bins = Grid1::symmetric(half + bin_width, bin_width);
    bins.offset_steps += (center / bin_width).round();
    let mut mass = vec![0.0; bins.len];
    let weight = 1.0 / window.len() as f64;
    for &x in window {
        let idx = ((x / bin_width - bins.offset_steps).round() as isize)
            .clamp(0, bins.len as isize - 1) as usize;
        mass[idx] += weight;
    }
    Ok(OccupationMeasure { bins, mass })
}

#[derive(Clone, Debug)]
pub struct StrategyOutcome {
    /// `log(survivor fraction) / (T - Δ)`: per-unit-time confinement cost,
    /// comparable to `-π²/(8 r²)` on flat fields. `None` without
    /// survivors.
    pub confinement_log_rate: Option<f64>,
    /// `log(survivor fraction) / T` over the whole horizon.
    pub success_log_rate: Option<f64>,
    /// One-sided bound used when nothing survives.
    pub rate_bound: f64,
    pub survivors: u64,
    pub arrivals: u64,
    /// Paths whose rejection budget ran out during the travel phase.
    pub travel_failures: u64,
    /// Mean of the field along survivor paths inside the window.
    pub field_mean_seen: f64,
    /// Survivor occupation mass inside the box after the travel window.
    pub occupation_in_box: f64,
    pub delta: f64,
}

/// Run the single-box confinement scenario.
#[allow(clippy::too_many_arguments)]
pub fn strategy_lower_bound(
    field: &FieldSample,
    z: f64,
    r: f64,
    t: f64,
    dt: f64,
    n_paths: usize,
    seed: u64,
    travel_fraction: Option<f64>,
) -> Result<StrategyOutcome, PathError> {
    if r < 1.0 {
        return Err(PathError::BadConfig { detail: format!("box size r = {r} must be >= 1") });
    }
    let delta = travel_fraction.map(|f| f * t).unwrap_or(t / t.ln());
    if z.abs() > t / t.ln() {
        return Err(PathError::BadConfig {
            detail: format!("box center {z} outside the reachable window ±{:.3}", t / t.ln()),
        });
    }
    let travel_steps = (delta / dt).round().max(1.0) as usize;
    let confine_steps = ((t - delta) / dt).round().max(1.0) as usize;
    let sqrt_dt = dt.sqrt();
    const TRAVEL_BUDGET: u64 = 400;

    struct PathResult {
        arrived: bool,
        survived: bool,
        field_seen: f64,
        in_box_frac: f64,
    }

    let results: Vec<PathResult> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            // travel phase: resample until B_Δ lands in z + (-1, 1)
            for attempt in 0..TRAVEL_BUDGET {
                let mut stream =
                    Stream::new(seed, StreamKind::Strategy, i as u64 * TRAVEL_BUDGET + attempt);
                let mut b = 0.0;
                for _ in 0..travel_steps {
                    b += sqrt_dt * stream.normal();
                }
                if (b - z).abs() <= 1.0 {
                    // confinement phase continues on the same stream
                    let mut alive = true;
                    let mut acc = Kahan::default();
                    let mut inside = 0usize;
                    let mut pos = b;
                    for _ in 0..confine_steps {
                        pos += sqrt_dt * stream.normal();
                        if (pos - z).abs() >= r {
                            alive = false;
                            break;
                        }
                        acc.add(field.grid.sample_linear(&field.values, pos).0);
                        inside += 1;
                    }
                    return PathResult {
                        arrived: true,
                        survived: alive,
                        field_seen: if alive && inside > 0 {
                            acc.total() / inside as f64
                        } else {
                            0.0
                        },
                        in_box_frac: if alive { 1.0 } else { inside as f64 / confine_steps as f64 },
                    };
                }
            }
            PathResult { arrived: false, survived: false, field_seen: 0.0, in_box_frac: 0.0 }
        })
        .collect();

    let arrivals = results.iter().filter(|r| r.arrived).count() as u64;
    let survivors = results.iter().filter(|r| r.survived).count() as u64;
    let travel_failures = n_paths as u64 - arrivals;
    let (mut mean_field, mut mean_occ) = (0.0, 0.0);
    if survivors > 0 {
        for r in results.iter().filter(|r| r.survived) {
            mean_field += r.field_seen;
            mean_occ += r.in_box_frac;
        }
        mean_field /= survivors as f64;
        mean_occ /= survivors as f64;
    }
    let p_conf = survivors as f64 / arrivals.max(1) as f64;
    Ok(StrategyOutcome {
        confinement_log_rate: (survivors > 0).then(|| p_conf.ln() / (t - delta)),
        success_log_rate: (survivors > 0)
            .then(|| (survivors as f64 / n_paths as f64).ln() / t),
        rate_bound: (1.0 / arrivals.max(1) as f64).ln() / (t - delta),
        survivors,
        arrivals,
        travel_failures,
        field_mean_seen: mean_field,
        occupation_in_box: mean_occ,
        delta,
    })
}
