//! Numerical toolkit for the quenched large-deviation behaviour of a
//! diffusion dragged by a one-dimensional Gaussian shear-flow drift.
//!
//! The crate is organised around four subsystems:
//!
//! * [`field_synth`] — stationary centered Gaussian fields built from a
//!   spectral density: covariance kernels, sampling by truncated spectral
//!   superposition, compact-support splitting and envelope statistics.
//! * [`schrodinger`] — principal Dirichlet eigenvalues of `-1/2 Δ - V` on
//!   intervals, minima over sliding sub-boxes, and Monte Carlo statistics
//!   of eigenvalue tails under random potentials.
//! * [`varcalc`] — the variational layer: quadratic forms `(K ⋆ f², f²)`,
//!   the log-Laplace functional `Λ(α)` and its Legendre transform, the
//!   eigenvalue tail functional `J_r`, the Gaussian dual `K*_r`, mixture
//!   lower bounds `I_n`, Riesz forms and scaling fits near the origin.
//! * [`path_mc`] — Brownian and shear-flow path simulation, rare-event
//!   rate estimation, exit-time rates and the confinement strategy probe.
//!
//! Everything is deterministic given a master seed: randomness flows
//! through counter-based streams ([`rng::Stream`]) so results are
//! independent of evaluation order and worker count.

pub mod field_synth;
pub mod grid;
pub mod numeric;
pub mod path_mc;
pub mod rng;
pub mod schrodinger;
pub mod varcalc;
