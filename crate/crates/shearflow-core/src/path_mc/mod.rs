//! Path simulation and rare-event estimation.
//!
//! The observable throughout is the normalised additive functional
//! `Y_T = (1/(T sqrt(log T))) ∫_0^T v(B_s) ds` of a Brownian motion `B`
//! moving through a frozen field `v`, plus the full shear pair
//! `X = (W_1, W_2 + ∫ v(W_1) ds)`. Paths use Euler steps with exact
//! Gaussian increments and per-path counter streams, so batches are
//! reproducible for any worker count.

mod paths;
mod rates;
mod strategy;

pub use paths::{shear_trajectory, simulate_y_samples, PathConfig, ShearPath, YSampleBatch};
pub use rates::{estimate_rate_curve, exit_time_rate, ExitRatePoint, RateCell, RateCurveEstimate};
pub use strategy::{occupation_measure, strategy_lower_bound, OccupationMeasure, StrategyOutcome};

#[derive(Clone, Debug, PartialEq)]
pub enum PathError {
    BadConfig { detail: String },
    /// Requested occupation window lies outside the path horizon.
    EmptyWindow { s: f64, t: f64 },
    Field(crate::field_synth::FieldError),
}

impl std::fmt::Display for PathError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            PathError::BadConfig { detail } => write!(f, "bad path config: {detail}"),
            PathError::EmptyWindow { s, t } => write!(f, "empty occupation window [{s}, {t}]"),
            PathError::Field(e) => write!(f, "field synthesis: {e}"),
        }
    }
}

impl std::error::Error for PathError {}

impl From<crate::field_synth::FieldError> for PathError {
    fn from(e: crate::field_synth::FieldError) -> Self {
        PathError::Field(e)
    }
}
