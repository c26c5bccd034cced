//! Euler simulation of `Y_T` batches and of the shear pair.

use rayon::prelude::*;

use super::PathError;
use crate::field_synth::FieldSample;
use crate::numeric::Kahan;
use crate::rng::{Stream, StreamKind};

/// Horizon, step, box parameter and batch size of a path run.
#[derive(Clone, Debug)]
pub struct PathConfig {
    pub t: f64,
    pub dt: f64,
    /// Box parameter of the confinement window `(-R T, R T)` used by the
    /// exit-rate probes.
    pub r: f64,
    pub seed: u64,
    pub n_paths: usize,
}

impl PathConfig {
    pub fn new(t: f64, dt: f64, r: f64, seed: u64, n_paths: usize) -> Result<Self, PathError> {
        if t <= std::f64::consts::E {
            return Err(PathError::BadConfig { detail: format!("T = {t} must exceed e") });
        }
        if dt <= 0.0 || dt > t / 100.0 {
            return Err(PathError::BadConfig {
                detail: format!("dt = {dt} must be positive and at most T/100"),
            });
        }
        let steps = t / dt;
        if (steps - steps.round()).abs() > 1e-9 * steps {
            return Err(PathError::BadConfig {
                detail: format!("T/dt = {steps} must be an integer step count"),
            });
        }
        Ok(PathConfig { t, dt, r, seed, n_paths })
    }

    pub fn n_steps(&self) -> usize {
        (self.t / self.dt).round() as usize
    }
}

/// A batch of independent `Y_T` draws against one frozen field.
#[derive(Clone, Debug)]
pub struct YSampleBatch {
    pub values: Vec<f64>,
    /// Paths that left the tabulated field at least once (clipped, not
    /// aborted).
    pub flagged_offgrid: usize,
    /// Raised when more than 1% of paths were clipped.
    pub coverage_warning: bool,
}

/// Simulate `n_paths` independent values of
/// `(1/(T sqrt(log T))) Σ v(B_{t_k}) dt` with `v` interpolated linearly on
/// the field grid. Path `i` is a pure function of `(seed, i)`.
pub fn simulate_y_samples(
    field: &FieldSample,
    cfg: &PathConfig,
) -> Result<YSampleBatch, PathError> {
    let n_steps = cfg.n_steps();
    let sqrt_dt = cfg.dt.sqrt();
    let norm = cfg.dt / (cfg.t * cfg.t.ln().sqrt());

    let results: Vec<(f64, bool)> = (0..cfg.n_paths)
        .into_par_iter()
        .map(|i| {
            let mut stream = Stream::new(cfg.seed, StreamKind::Path, i as u64);
            let mut b = 0.0;
            let mut clipped = false;
            let mut acc = Kahan::default();
            for _ in 0..n_steps {
                let (v, off) = field.grid.sample_linear(&field.values, b);
                clipped |= off;
                acc.add(v);
                b += sqrt_dt * stream.normal();
            }
            (acc.total() * norm, clipped)
        })
        .collect();

    let flagged = results.iter().filter(|(_, c)| *c).count();
    Ok(YSampleBatch {
        values: results.into_iter().map(|(v, _)| v).collect(),
        flagged_offgrid: flagged,
        coverage_warning: flagged as f64 > 0.01 * cfg.n_paths as f64,
    })
}

/// One full shear trajectory; the drift coordinate keeps its Brownian and
/// drift-integral parts separately.
#[derive(Clone, Debug)]
pub struct ShearPath {
    pub dt: f64,
    pub x1: Vec<f64>,
    pub x2_brownian: Vec<f64>,
    pub x2_drift: Vec<f64>,
    pub flagged_offgrid: bool,
}

impl ShearPath {
    pub fn x2(&self, k: usize) -> f64 {
        self.x2_brownian[k] + self.x2_drift[k]
    }

    pub fn len(&self) -> usize {
        self.x1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x1.is_empty()
    }
}

/// Simulate the pair `X_1 = W_1`, `X_2 = W_2 + ∫ v(W_1) ds` on a fixed
/// step, storing every step (use for diagnostics, not bulk Monte Carlo).
pub fn shear_trajectory(
    field: &FieldSample,
    t: f64,
    dt: f64,
    seed: u64,
) -> Result<ShearPath, PathError> {
    let cfg = PathConfig::new(t, dt, 1.0, seed, 1)?;
    let n_steps = cfg.n_steps();
    let sqrt_dt = dt.sqrt();
    let mut stream = Stream::new(seed, StreamKind::Path, 0);
    let mut x1 = Vec::with_capacity(n_steps + 1);
    let mut wb = Vec::with_capacity(n_steps + 1);
    let mut drift = Vec::with_capacity(n_steps + 1);
    let mut clipped = false;
    let (mut w1, mut w2) = (0.0, 0.0);
    let mut acc = Kahan::default();
    x1.push(w1);
    wb.push(w2);
    drift.push(0.0);
    for _ in 0..n_steps {
        let (v, off) = field.grid.sample_linear(&field.values, w1);
        clipped |= off;
        acc.add(v * dt);
        w1 += sqrt_dt * stream.normal();
        w2 += sqrt_dt * stream.normal();
        x1.push(w1);
        wb.push(w2);
        drift.push(acc.total());
    }
    Ok(ShearPath { dt, x1, x2_brownian: wb, x2_drift: drift, flagged_offgrid: clipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field_synth::{sample_field, SpectralDensity};
    use crate::grid::Grid1;

    fn flat_field(c: f64, half: f64) -> FieldSample {
        let grid = Grid1::symmetric(half, 0.5);
        FieldSample {
            values: vec![c; grid.len],
            grid,
            seed: 0,
            index: 0,
            density_id: "const".into(),
        }
    }

    #[test]
    fn zero_field_gives_zero_samples() {
        let cfg = PathConfig::new(100.0, 0.01, 1.0, 3, 50).unwrap();
        let batch = simulate_y_samples(&flat_field(0.0, 100.0), &cfg).unwrap();
        assert!(batch.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_field_identity() {
        // Y_T = c / sqrt(log T) exactly for constant integrands
        let c = 0.37;
        let cfg = PathConfig::new(200.0, 0.01, 1.0, 3, 20).unwrap();
        let batch = simulate_y_samples(&flat_field(c, 500.0), &cfg).unwrap();
        let expect = c / 200.0f64.ln().sqrt();
        for &v in &batch.values {
            assert!((v - expect).abs() <= 1e-13 * expect.abs(), "{v} vs {expect}");
        }
        assert_eq!(batch.flagged_offgrid, 0);
    }

    #[test]
    fn centered_field_means_are_centered() {
        // the quenched mean is a random tilt of order the field scale; the
        // annealed mean over independent fields is what vanishes, so
        // average per-field means across draws
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(200.0, 0.25);
        let fields = sample_field(&h, &grid, 11, 24).unwrap();
        let mut field_means = Vec::new();
        for (j, field) in fields.iter().enumerate() {
            let cfg = PathConfig::new(1000.0, 0.1, 1.0, 5 + j as u64, 400).unwrap();
            let batch = simulate_y_samples(field, &cfg).unwrap();
            assert!(!batch.coverage_warning, "6 sqrt(T) coverage should be enough");
            field_means
                .push(batch.values.iter().sum::<f64>() / batch.values.len() as f64);
        }
        let m = field_means.len() as f64;
        let mean = field_means.iter().sum::<f64>() / m;
        let sd = (field_means.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>()
            / (m - 1.0))
            .sqrt();
        assert!(mean.abs() < 3.0 * sd / m.sqrt(), "mean {mean}, field sd {sd}");
    }

    #[test]
    fn determinism_and_offgrid_flagging() {
        let cfg = PathConfig::new(100.0, 0.01, 1.0, 42, 64).unwrap();
        let narrow = flat_field(1.0, 2.0);
        let a = simulate_y_samples(&narrow, &cfg).unwrap();
        let b = simulate_y_samples(&narrow, &cfg).unwrap();
        assert_eq!(a.values, b.values);
        assert!(a.flagged_offgrid > 0, "a 2-unit grid cannot hold T = 100 paths");
        assert!(a.coverage_warning);
    }

    #[test]
    fn shear_pair_decomposes() {
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(60.0, 0.25);
        let field = &sample_field(&h, &grid, 4, 1).unwrap()[0];
        let path = shear_trajectory(field, 64.0, 0.04, 9).unwrap();
        assert_eq!(path.len(), path.x2_drift.len());
        let last = path.len() - 1;
        assert_eq!(path.x2(last), path.x2_brownian[last] + path.x2_drift[last]);
    }

    #[test]
    fn drift_integral_self_converges_under_coupled_halving() {
        // coupled-noise oracle: build B at dt, dt/2, dt/4 from one fine
        // increment sequence, compare the drift integrals pathwise; the
        // error should shrink roughly like sqrt(dt)
        let h = SpectralDensity::gaussian(1.0).unwrap();
        let grid = Grid1::symmetric(80.0, 0.25);
        let field = &sample_field(&h, &grid, 4, 1).unwrap()[0];
        let t = 64.0;
        let dt_fine = 0.01f64;
        let n_fine = (t / dt_fine).round() as usize;

        let integral_at = |increments: &[f64], stride: usize| -> f64 {
            let dt = dt_fine * stride as f64;
            let mut b = 0.0;
            let mut acc = Kahan::default();
            for chunk in increments.chunks(stride) {
                acc.add(field.grid.sample_linear(&field.values, b).0 * dt);
                b += chunk.iter().sum::<f64>();
            }
            acc.total()
        };

        let mut e_coarse = Vec::new();
        let mut e_fine = Vec::new();
        for seed in 0..48u64 {
            let mut stream = Stream::new(seed, StreamKind::Generic, 0);
            let increments: Vec<f64> =
                (0..n_fine).map(|_| dt_fine.sqrt() * stream.normal()).collect();
            let i4 = integral_at(&increments, 4);
            let i2 = integral_at(&increments, 2);
            let i1 = integral_at(&increments, 1);
            e_coarse.push((i4 - i2).abs());
            e_fine.push((i2 - i1).abs());
        }
        let med = |v: &mut Vec<f64>| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            v[v.len() / 2]
        };
        let ratio = med(&mut e_coarse) / med(&mut e_fine).max(1e-12);
        // strong order 1/2 gives sqrt(2) ≈ 1.41; accept a broad band
        assert!(ratio > 1.05 && ratio < 2.8, "halving error ratio {ratio}");
    }
}
