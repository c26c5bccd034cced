//! Compact-support / remainder splitting of the field, and the
//! `max |v| / sqrt(2 K(0) log L)` envelope statistic.
//!
//! The field is realised through its moving-average form `v = g ⋆ dZ`.
//! A smooth even cutoff ψ (plateau on [-1/4, 1/4], support in ]-1/2, 1/2[)
//! scaled to length `L` splits the kernel as `g = ψ_L g + (1 - ψ_L) g`,
//! hence `v = v_L + ṽ_L` driven by the same white noise. The covariance of
//! `v_L` is `g_L ⋆ g_L`, supported in `[-L, L]` exactly.

use super::{CovarianceKernel, FieldError, FieldSample, SpectralDensity};
use crate::grid::Grid1;
use crate::numeric::{quantile, Kahan};
use crate::rng::{Stream, StreamKind};

/// The cutoff and the split moving-average kernels, sampled one-sided.
#[derive(Clone, Debug)]
pub struct CutoffSplit {
    pub l: f64,
    /// Shape parameter of the bump; larger is sharper. The theorems do not
    /// depend on the choice, so it is recorded for reproducibility.
    pub sharpness: f64,
    /// One-sided radius of the sampled kernels, in grid steps.
    pub radius: usize,
    pub g: Vec<f64>,
    pub g_l: Vec<f64>,
    pub g_tilde: Vec<f64>,
}

/// A split realisation: the unsplit field, the compact-support part, the
/// remainder, the covariance of the compact part and the remainder
/// variance at zero.
#[derive(Clone, Debug)]
pub struct SplitField {
    pub split: CutoffSplit,
    pub v: FieldSample,
    pub v_l: FieldSample,
    pub v_tilde: FieldSample,
    pub k_l: CovarianceKernel,
    pub k_tilde0: f64,
}

fn bump_edge(t: f64, sharpness: f64) -> f64 {
    // C-infinity transition from 1 at t=0 to 0 at t=1
    if t <= 0.0 {
        return 1.0;
    }
    if t >= 1.0 {
        return 0.0;
    }
    let phi = |s: f64| (-sharpness / s).exp();
    phi(1.0 - t) / (phi(1.0 - t) + phi(t))
}

/// Smooth even cutoff: 1 on [-1/4, 1/4], 0 outside ]-1/2, 1/2[.
pub fn psi(t: f64, sharpness: f64) -> f64 {
    let a = t.abs();
    if a <= 0.25 {
        1.0
    } else if a >= 0.5 {
        0.0
    } else {
        bump_edge((a - 0.25) * 4.0, sharpness)
    }
}

/// Discrete one-sided autocorrelation `(a ⋆ b)(m Δ)` of two symmetric
/// kernels given one-sided.
fn one_sided_conv(a: &[f64], b: &[f64], spacing: f64, m: usize) -> f64 {
    // full index range [-r, r]; a[|i|], b[|i - m|]
    let r = a.len() as i64 - 1;
    let mut acc = Kahan::default();
    for i in -r..=r {
        let j = i - m as i64;
        if j.abs() <= r {
            acc.add(a[i.unsigned_abs() as usize] * b[j.unsigned_abs() as usize]);
        }
    }
    acc.total() * spacing
}

/// Split one realisation of the field driven by `h` into compact-support
/// and remainder parts sharing the same noise.
pub fn split_field(
    h: &SpectralDensity,
    l: f64,
    grid: &Grid1,
    seed: u64,
    sharpness: f64,
) -> Result<SplitField, FieldError> {
    if l < 4.0 * grid.spacing {
        return Err(FieldError::CutoffUnresolvable { l, spacing: grid.spacing });
    }
    let spacing = grid.spacing;

    // one-sided sample of g out to where it is negligible, and at least to
    // the cutoff support L/2
    let g0 = h.amplitude_transform(0.0, 1e-9)?;
    let mut reach = 0.5 * l;
    let mut probe = reach;
    for _ in 0..16 {
        let tail = h.amplitude_transform(probe, 1e-9)?.abs();
        if tail < 1e-9 * g0.abs().max(1e-12) {
            reach = reach.max(probe);
            break;
        }
        probe *= 1.5;
        reach = probe;
    }
    let radius = (reach / spacing).ceil() as usize;
    let g: Vec<f64> = (0..=radius)
        .map(|i| h.amplitude_transform(i as f64 * spacing, 1e-9))
        .collect::<Result<_, _>>()?;
    let g_l: Vec<f64> =
        g.iter().enumerate().map(|(i, &v)| psi(i as f64 * spacing / l, sharpness) * v).collect();
    let g_tilde: Vec<f64> = g.iter().zip(&g_l).map(|(a, b)| a - b).collect();

    // shared white noise over the grid extended by the kernel radius
    let noise_len = grid.len + 2 * radius;
    let mut stream = Stream::new(seed, StreamKind::FieldSplit, 0);
    let sqrt_dy = spacing.sqrt();
    let noise: Vec<f64> = (0..noise_len).map(|_| stream.normal() * sqrt_dy).collect();

    let convolve = |kernel: &[f64]| -> Vec<f64> {
        (0..grid.len)
            .map(|i| {
                let mut acc = Kahan::default();
                for m in -(radius as i64)..=(radius as i64) {
                    let k = kernel[m.unsigned_abs() as usize];
                    let idx = (i as i64 + radius as i64 - m) as usize;
                    acc.add(k * noise[idx]);
                }
                acc.total()
            })
            .collect()
    };

    let density_id = h.id();
    let mk = |values: Vec<f64>| FieldSample {
        grid: grid.clone(),
        values,
        seed,
        index: 0,
        density_id: density_id.clone(),
    };
    let v_l = mk(convolve(&g_l));
    let v_tilde = mk(convolve(&g_tilde));
    let v = mk(convolve(&g));

    // K_L = g_L ⋆ g_L: exactly zero beyond L because g_L vanishes beyond L/2
    let half_lags = ((l / spacing).ceil() as usize + 2).min(2 * radius);
    let k_vals: Vec<f64> =
        (0..=half_lags).map(|m| one_sided_conv(&g_l, &g_l, spacing, m)).collect();
    let k_l = CovarianceKernel::mirror(
        Grid1::symmetric(half_lags as f64 * spacing, spacing),
        k_vals,
        Some(l),
    );

    // remainder variance at zero: ∫ (1 - ψ_L)² g²
    let mut kt = Kahan::default();
    for (i, &gt) in g_tilde.iter().enumerate() {
        let w = if i == 0 { 1.0 } else { 2.0 };
        kt.add(w * gt * gt);
    }
    let k_tilde0 = kt.total() * spacing;

    Ok(SplitField {
        split: CutoffSplit { l, sharpness, radius, g, g_l, g_tilde },
        v,
        v_l,
        v_tilde,
        k_l,
        k_tilde0,
    })
}

impl CutoffSplit {
    /// Lattice covariance `g ⋆ g` at a lag index, for reconstruction
    /// checks.
    pub fn lattice_covariance(&self, spacing: f64, m: usize) -> f64 {
        one_sided_conv(&self.g, &self.g, spacing, m)
    }

    pub fn cross_covariance(&self, spacing: f64, m: usize) -> f64 {
        one_sided_conv(&self.g_l, &self.g_tilde, spacing, m)
    }

    pub fn remainder_covariance(&self, spacing: f64, m: usize) -> f64 {
        one_sided_conv(&self.g_tilde, &self.g_tilde, spacing, m)
    }

    pub fn compact_covariance(&self, spacing: f64, m: usize) -> f64 {
        one_sided_conv(&self.g_l, &self.g_l, spacing, m)
    }
}

/// Per-window envelope statistics of a batch of samples.
#[derive(Clone, Debug)]
pub struct EnvelopeStat {
    pub l: f64,
    /// `max |v| over [-L, L] / sqrt(2 K(0) log L)` per sample.
    pub ratios: Vec<f64>,
    pub median: f64,
    pub q95: f64,
}

/// Envelope ratios over a ladder of window half-widths.
pub fn envelope_ratio(
    samples: &[FieldSample],
    k0: f64,
    l_list: &[f64],
) -> Result<Vec<EnvelopeStat>, FieldError> {
    if samples.is_empty() {
        return Err(FieldError::TooFewSamples { got: 0, need: 1 });
    }
    let grid = &samples[0].grid;
    if samples.iter().any(|s| s.grid != *grid) {
        return Err(FieldError::GridMismatch);
    }
    let mut out = Vec::with_capacity(l_list.len());
    for &l in l_list {
        if l < std::f64::consts::E {
            return Err(FieldError::OutOfExtent { requested: l, available: f64::NAN });
        }
        let reach = grid.last().min(-grid.origin());
        if l > reach {
            return Err(FieldError::OutOfExtent { requested: l, available: reach });
        }
        let norm = (2.0 * k0 * l.ln()).sqrt();
        let ratios: Vec<f64> = samples
            .iter()
            .map(|s| {
                let mut max = 0.0f64;
                for (i, x) in s.grid.points().enumerate() {
                    if x.abs() <= l {
                        max = max.max(s.values[i].abs());
                    }
                }
                max / norm
            })
            .collect();
        let mut sorted = ratios.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(EnvelopeStat {
            l,
            median: quantile(&sorted, 0.5),
            q95: quantile(&sorted, 0.95),
            ratios,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn psi_has_plateau_and_support() {
        for &s in &[0.5, 1.0, 3.0] {
            assert_eq!(psi(0.0, s), 1.0);
            assert_eq!(psi(0.25, s), 1.0);
            assert_eq!(psi(0.5, s), 0.0);
            assert_eq!(psi(0.8, s), 0.0);
            let mid = psi(0.375, s);
            assert!(mid > 0.0 && mid < 1.0);
            assert_eq!(psi(-0.3, s), psi(0.3, s));
        }
    }

    #[test]
    fn split_reconstructs_field_exactly() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(10.0, 0.1);
        let sf = split_field(&h, 4.0, &grid, 11, 1.0).unwrap();
        for i in 0..grid.len {
            let resid = sf.v.values[i] - (sf.v_l.values[i] + sf.v_tilde.values[i]);
            assert!(resid.abs() < 1e-12, "additivity broke at {i}: {resid}");
        }
    }

    #[test]
    fn compact_covariance_vanishes_beyond_l() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(12.0, 0.1);
        let sf = split_field(&h, 8.0, &grid, 3, 1.0).unwrap();
        assert_eq!(sf.k_l.support_bound, Some(8.0));
        for (i, x) in sf.k_l.grid.points().enumerate() {
            if x.abs() > 8.0 {
                assert_eq!(sf.k_l.values[i], 0.0, "K_L({x}) must be exactly zero");
            }
        }
        assert_eq!(sf.k_l.eval(9.0), 0.0);
    }

    #[test]
    fn remainder_variance_decreases_with_l() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(20.0, 0.1);
        let mut prev = f64::INFINITY;
        for &l in &[4.0, 8.0, 16.0] {
            let sf = split_field(&h, l, &grid, 5, 1.0).unwrap();
            assert!(sf.k_tilde0 < prev, "K̃({l}) = {} not below {prev}", sf.k_tilde0);
            assert!(sf.k_tilde0 >= 0.0);
            prev = sf.k_tilde0;
        }
        assert!(prev < 1e-6, "remainder variance should be tiny at L = 16: {prev}");
    }

    #[test]
    fn covariance_splits_bilinearly() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(10.0, 0.1);
        let sf = split_field(&h, 6.0, &grid, 5, 1.0).unwrap();
        let sp = grid.spacing;
        for m in [0usize, 5, 17, 40] {
            let total = sf.split.lattice_covariance(sp, m);
            let parts = sf.split.compact_covariance(sp, m)
                + 2.0 * sf.split.cross_covariance(sp, m)
                + sf.split.remainder_covariance(sp, m);
            assert_relative_eq!(total, parts, epsilon = 1e-12, max_relative = 1e-12);
        }
        // and the lattice covariance approximates the true kernel
        for m in [0usize, 10, 20] {
            let x = m as f64 * sp;
            assert_relative_eq!(
                sf.split.lattice_covariance(sp, m),
                (-0.5 * x * x).exp(),
                epsilon = 5e-3
            );
        }
    }

    #[test]
    fn unresolvable_cutoff_is_rejected() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(10.0, 0.5);
        assert!(matches!(
            split_field(&h, 1.0, &grid, 1, 1.0),
            Err(FieldError::CutoffUnresolvable { .. })
        ));
    }

    #[test]
    fn envelope_of_zero_field_is_zero() {
        let grid = Grid1::symmetric(10.0, 0.5);
        let s = FieldSample {
            grid: grid.clone(),
            values: vec![0.0; grid.len],
            seed: 0,
            index: 0,
            density_id: String::new(),
        };
        let stats = envelope_ratio(&[s], 1.0, &[4.0]).unwrap();
        assert_eq!(stats[0].ratios, vec![0.0]);
    }

    #[test]
    fn envelope_rejects_windows_beyond_grid() {
        let grid = Grid1::symmetric(10.0, 0.5);
        let s = FieldSample {
            grid: grid.clone(),
            values: vec![0.0; grid.len],
            seed: 0,
            index: 0,
            density_id: String::new(),
        };
        assert!(matches!(
            envelope_ratio(&[s], 1.0, &[40.0]),
            Err(FieldError::OutOfExtent { .. })
        ));
    }
}
