//! Stationary centered Gaussian fields on the line.
//!
//! The primitive object is a spectral density `h ≥ 0`, even, with
//! `∫ (1 + |λ|^a) h(λ) dλ < ∞`. Its cosine transform is the covariance
//! `K(x) = ∫ e^{iλx} h(λ) dλ`, and fields are realised on uniform grids by
//! truncated spectral superposition
//!
//! ```text
//! v(x) = Σ_k sqrt(2 h(λ_k) Δλ) (ξ_k cos λ_k x + η_k sin λ_k x)
//! ```
//!
//! with independent standard Gaussians ξ, η and midpoint frequencies
//! λ_k = (k - 1/2) Δλ. The module also provides the compact-support /
//! remainder splitting of the field through a smooth cutoff of the moving
//! average representation `v = g ⋆ dZ`, and the `max |v| / sqrt(2 K(0) log L)`
//! envelope statistic.

mod covariance;
mod density;
mod sample;
mod split;

pub use covariance::{empirical_covariance, CovarianceKernel, EmpiricalCovariance};
pub use density::{DensityFamily, SpectralDensity};
pub use sample::{sample_field, FieldSample, SynthesisPlan};
pub use split::{envelope_ratio, split_field, CutoffSplit, EnvelopeStat, SplitField};

/// Errors for field construction and sampling.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldError {
    /// The moment integral `∫ (1+|λ|^a) h dλ` diverges or quadrature on it
    /// failed to converge.
    NonIntegrable { detail: String },
    /// Invalid family parameters.
    BadParams { detail: String },
    /// The target grid cannot carry the frequency content of `h`.
    Aliasing { lambda_max: f64, nyquist: f64 },
    /// Operation requires samples on one common grid.
    GridMismatch,
    /// Fewer samples than the estimator needs.
    TooFewSamples { got: usize, need: usize },
    /// Requested lag or window extends beyond available data.
    OutOfExtent { requested: f64, available: f64 },
    /// The cutoff length is not resolvable on the grid.
    CutoffUnresolvable { l: f64, spacing: f64 },
    /// Quadrature failure with context.
    Quadrature { detail: String },
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            FieldError::NonIntegrable { detail } => write!(f, "non-integrable density: {detail}"),
            FieldError::BadParams { detail } => write!(f, "bad density parameters: {detail}"),
            FieldError::Aliasing { lambda_max, nyquist } => write!(
                f,
                "grid too coarse: density carries frequencies up to {lambda_max:.3} but the grid Nyquist limit is {nyquist:.3}"
            ),
            FieldError::GridMismatch => write!(f, "samples do not share a common grid"),
            FieldError::TooFewSamples { got, need } => {
                write!(f, "need at least {need} samples, got {got}")
            }
            FieldError::OutOfExtent { requested, available } => write!(
                f,
                "requested window {requested:.3} exceeds available extent {available:.3}"
            ),
            FieldError::CutoffUnresolvable { l, spacing } => write!(
                f,
                "cutoff length {l:.3} is below four grid spacings ({spacing:.3} each)"
            ),
            FieldError::Quadrature { detail } => write!(f, "quadrature failed: {detail}"),
        }
    }
}

impl std::error::Error for FieldError {}
