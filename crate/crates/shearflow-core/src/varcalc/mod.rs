//! The variational layer.
//!
//! Everything here optimises functionals of unit-L² profiles `f` on
//! symmetric intervals: the log-Laplace functional
//! `Λ(α, r) = sup |α| sqrt(2 (K ⋆ f², f²)) - 1/2 ‖f'‖²`, its Legendre
//! transform, the eigenvalue-tail functional `J_r`, the Gaussian dual
//! `K*_r` over nonnegative measures, the mixture hierarchy `I_n`, the
//! Riesz quadratic form and the Gagliardo–Nirenberg ratio.
//!
//! Discrete conventions: forward differences with Dirichlet padding, all
//! inner products carry the grid spacing, so every identity checked in
//! tests holds at the matrix level.

mod forms;
mod gn;
mod jr;
mod kstar;
mod lambda;
mod mixture;
mod opt;
mod scaling;

pub use forms::{quadratic_form, riesz_quadratic, KernelConvolver};
pub use gn::{gn_constant, sech_ratio_on, GnResult};
pub use jr::j_r;
pub use kstar::{kstar, KstarResult};
pub use lambda::{
    build_rate_table, lambda_of_alpha, legendre_transform, LambdaValue, LegendreValue, RateTable,
};
pub use mixture::{i_n, optimal_profiles, MixtureProblem, MixtureValue, OptimalProfiles};
pub use opt::{SpgOptions, SpgOutcome};
pub use scaling::{i_one_dilated, scaling_analysis, ScalingFit, ScalingOptions};

use crate::grid::Grid1;
use crate::numeric::Kahan;

#[derive(Clone, Debug, PartialEq)]
pub enum VarError {
    /// Kernel window does not cover the lags the form needs.
    KernelWindowTooSmall { needed: f64, available: f64 },
    BadParams { detail: String },
    /// Legendre input tables must be even and sorted.
    BadTable { detail: String },
    /// Too few usable points for a fit.
    TooFewPoints { got: usize, need: usize },
}

impl std::fmt::Display for VarError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VarError::KernelWindowTooSmall { needed, available } => write!(
                f,
                "kernel window covers lags to {available:.3}, the form needs {needed:.3}"
            ),
            VarError::BadParams { detail } => write!(f, "bad parameters: {detail}"),
            VarError::BadTable { detail } => write!(f, "bad table: {detail}"),
            VarError::TooFewPoints { got, need } => {
                write!(f, "need at least {need} usable points, got {got}")
            }
        }
    }
}

impl std::error::Error for VarError {}

/// A grid function on a symmetric interval with exact zeros at both ends
/// and unit discrete L² norm.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub grid: Grid1,
    pub values: Vec<f64>,
}

impl Profile {
    /// Build from a shape function: sample, pin the endpoints to zero,
    /// normalise.
    pub fn from_shape(half_width: f64, spacing: f64, f: impl Fn(f64) -> f64) -> Profile {
        let grid = Grid1::symmetric(half_width, spacing);
        let mut values: Vec<f64> = grid.points().map(&f).collect();
        values[0] = 0.0;
        let n = values.len();
        values[n - 1] = 0.0;
        let mut p = Profile { grid, values };
        p.renormalize();
        p
    }

    /// Pin endpoints and rescale to unit discrete L² norm.
    pub fn renormalize(&mut self) {
        self.values[0] = 0.0;
        let n = self.values.len();
        self.values[n - 1] = 0.0;
        let norm = self.l2_norm();
        assert!(norm > 0.0, "cannot normalise the zero profile");
        for v in self.values.iter_mut() {
            *v /= norm;
        }
    }

    pub fn l2_norm(&self) -> f64 {
        let mut acc = Kahan::default();
        for &v in &self.values {
            acc.add(v * v);
        }
        (acc.total() * self.grid.spacing).sqrt()
    }

    /// `1/2 ‖f'‖²` with forward differences (endpoints are zero, so the
    /// boundary steps are included).
    pub fn dirichlet_energy(&self) -> f64 {
        let mut acc = Kahan::default();
        for w in self.values.windows(2) {
            let d = w[1] - w[0];
            acc.add(d * d);
        }
        0.5 * acc.total() / self.grid.spacing
    }

    /// Pointwise square, the density the quadratic forms act on.
    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|v| v * v).collect()
    }

    pub fn l4_pow4(&self) -> f64 {
        let mut acc = Kahan::default();
        for &v in &self.values {
            acc.add(v * v * v * v);
        }
        acc.total() * self.grid.spacing
    }

    /// Half width of the supporting interval.
    pub fn r(&self) -> f64 {
        self.grid.last()
    }

    /// The standard multistart family: centered bump, tight bump, flat
    /// plateau with smooth shoulders.
    pub fn starts(half_width: f64, spacing: f64) -> Vec<Profile> {
        let r = half_width;
        vec![
            Profile::from_shape(r, spacing, |x| (-0.5 * (4.0 * x / r).powi(2)).exp()),
            Profile::from_shape(r, spacing, |x| (-0.5 * (8.0 * x / r).powi(2)).exp()),
            Profile::from_shape(r, spacing, |x| {
                let t = x.abs() / r;
                if t < 0.75 {
                    1.0
                } else {
                    let u = (t - 0.75) / 0.25;
                    0.5 * (1.0 + (std::f64::consts::PI * u).cos())
                }
            }),
        ]
    }
}
