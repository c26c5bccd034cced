//! Field synthesis by truncated spectral superposition.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use super::{FieldError, SpectralDensity};
use crate::grid::Grid1;
use crate::rng::{Stream, StreamKind};

/// One realisation of the field on a uniform grid, tied to the seed and
/// density that produced it. Regeneration from `(seed, density, grid)`
/// reproduces the values bit for bit.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub grid: Grid1,
    pub values: Vec<f64>,
    pub seed: u64,
    pub index: u64,
    pub density_id: String,
}

impl FieldSample {
    /// CSV with a header carrying the regeneration metadata.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "# origin={} spacing={} count={} seed={} index={} density={}\n",
            self.grid.origin(), self.grid.spacing, self.grid.len, self.seed, self.index,
            self.density_id
        ));
        out.push_str("x,v\n");
        for (i, x) in self.grid.points().enumerate() {
            out.push_str(&format!("{x},{}\n", self.values[i]));
        }
        out
    }
}

/// Shared discretisation of the spectral superposition: midpoint
/// frequencies `λ_k = (k - 1/2) Δλ` up to the cutoff, with per-band masses
/// integrated exactly so the lattice variance matches `K(0)`.
pub struct SynthesisPlan {
    pub grid: Grid1,
    pub d_lambda: f64,
    pub cutoff: f64,
    pub freqs: Vec<f64>,
    /// `sqrt(2 * band mass)` per frequency.
    pub amps: Vec<f64>,
    fft_len: usize,
    fft: Arc<dyn Fft<f64>>,
    density_id: String,
}

impl SynthesisPlan {
    pub fn new(h: &SpectralDensity, grid: &Grid1) -> Result<Self, FieldError> {
        let mass = h.total_mass()?;
        let cutoff = h
            .frequency_cutoff(1e-6 * mass)
            .ok_or_else(|| FieldError::NonIntegrable {
                detail: "no finite frequency cutoff captures the requested tail mass".into(),
            })?;
        let nyquist = std::f64::consts::PI / grid.spacing;
        if cutoff > nyquist {
            return Err(FieldError::Aliasing { lambda_max: cutoff, nyquist });
        }
        // Δλ = 2π/(M Δx) <= π / extent, M a power of two
        let m = (2 * (grid.len - 1)).next_power_of_two();
        let d_lambda = std::f64::consts::TAU / (m as f64 * grid.spacing);
        let n_modes = (cutoff / d_lambda).ceil() as usize;
        let freqs: Vec<f64> = (1..=n_modes).map(|k| (k as f64 - 0.5) * d_lambda).collect();
        let amps: Vec<f64> = (1..=n_modes)
            .map(|k| {
                let lo = (k - 1) as f64 * d_lambda;
                let hi = k as f64 * d_lambda;
                (2.0 * h.band_mass(lo, hi)).sqrt()
            })
            .collect();
        let fft = FftPlanner::new().plan_fft_inverse(m);
        Ok(SynthesisPlan {
            grid: grid.clone(),
            d_lambda,
            cutoff,
            freqs,
            amps,
            fft_len: m,
            fft,
            density_id: h.id(),
        })
    }

    /// Draw the Gaussian pair per mode from a dedicated stream.
    fn draw_coeffs(&self, stream: &mut Stream) -> Vec<(f64, f64)> {
        self.freqs.iter().map(|_| (stream.normal(), stream.normal())).collect()
    }

    fn field_from_coeffs(&self, coeffs: &[(f64, f64)]) -> Vec<f64> {
        let m = self.fft_len;
        let x0 = self.grid.origin();
        let mut spectrum = vec![Complex::new(0.0, 0.0); m];
        for (k, ((&(xi, eta), &amp), &lam)) in
            coeffs.iter().zip(&self.amps).zip(&self.freqs).enumerate()
        {
            // c_k e^{i λ_k x_0} placed at bin k+1 (λ = (k+1/2) Δλ)
            let c = Complex::new(amp * xi, -amp * eta);
            let phase = Complex::from_polar(1.0, lam * x0);
            spectrum[k + 1] = c * phase;
        }
        let mut scratch = vec![Complex::new(0.0, 0.0); self.fft.get_inplace_scratch_len()];
        self.fft.process_with_scratch(&mut spectrum, &mut scratch);
        // half-bin twist: λ_k = (k - 1/2) Δλ was stored at integer bin k
        (0..self.grid.len)
            .map(|j| {
                let twist = Complex::from_polar(1.0, -std::f64::consts::PI * j as f64 / m as f64);
                (twist * spectrum[j]).re
            })
            .collect()
    }

    /// Generate the field addressed by `(seed, kind, index)`.
    pub fn sample_one(&self, seed: u64, kind: StreamKind, index: u64) -> FieldSample {
        let mut stream = Stream::new(seed, kind, index);
        let coeffs = self.draw_coeffs(&mut stream);
        FieldSample {
            grid: self.grid.clone(),
            values: self.field_from_coeffs(&coeffs),
            seed,
            index,
            density_id: self.density_id.clone(),
        }
    }

    /// O(modes * points) reference evaluation of the same superposition;
    /// kept for equivalence checks against the FFT path.
    pub fn sample_one_direct(&self, seed: u64, kind: StreamKind, index: u64) -> FieldSample {
        let mut stream = Stream::new(seed, kind, index);
        let coeffs = self.draw_coeffs(&mut stream);
        let values = self
            .grid
            .points()
            .map(|x| {
                let mut acc = 0.0;
                for ((&(xi, eta), &amp), &lam) in
                    coeffs.iter().zip(&self.amps).zip(&self.freqs)
                {
                    let (s, c) = (lam * x).sin_cos();
                    acc += amp * (xi * c + eta * s);
                }
                acc
            })
            .collect();
        FieldSample {
            grid: self.grid.clone(),
            values,
            seed,
            index,
            density_id: self.density_id.clone(),
        }
    }
}

/// `n` independent stationary Gaussian samples on the grid. Sample `i` is
/// a pure function of `(seed, i)`, so any worker count produces identical
/// output.
pub fn sample_field(
    h: &SpectralDensity,
    grid: &Grid1,
    seed: u64,
    n: usize,
) -> Result<Vec<FieldSample>, FieldError> {
    let plan = SynthesisPlan::new(h, grid)?;
    Ok((0..n)
        .into_par_iter()
        .map(|i| plan.sample_one(seed, StreamKind::FieldSample, i as u64))
        .collect())
}
