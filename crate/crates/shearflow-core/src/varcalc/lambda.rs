//! The log-Laplace functional `Λ(α, r)`, its interval ladder, and the
//! Legendre transform producing the rate function.

use rayon::prelude::*;

use super::opt::{spg_minimize, SpgOptions};
use super::{KernelConvolver, Profile, VarError};
use crate::field_synth::CovarianceKernel;
use crate::schrodinger::{principal_eigenvalue, Potential};

/// Result of one `Λ(α, r)` maximisation.
#[derive(Clone, Debug)]
pub struct LambdaValue {
    pub value: f64,
    pub profile: Profile,
    pub converged: bool,
    pub start_index: usize,
    /// Norm of the sphere-tangential gradient at the maximiser.
    pub stationarity: f64,
}

/// Grid spacing fine enough for the concentration scale of a given `α`.
pub(crate) fn spacing_for(alpha: f64, base: f64) -> f64 {
    let a = alpha.abs();
    if a <= 1.0 {
        base
    } else {
        base.min((a * std::f64::consts::SQRT_2).powf(-0.25) / 10.0)
    }
}

fn laplacian_grad(values: &[f64], spacing: f64, out: &mut [f64]) {
    let n = values.len();
    for i in 0..n {
        let left = if i > 0 { values[i - 1] } else { 0.0 };
        let right = if i + 1 < n { values[i + 1] } else { 0.0 };
        out[i] = (2.0 * values[i] - left - right) / spacing;
    }
    out[0] = 0.0;
    out[n - 1] = 0.0;
}

pub(crate) fn project_sphere(spacing: f64) -> impl Fn(&mut Vec<f64>) {
    move |x: &mut Vec<f64>| {
        x[0] = 0.0;
        let n = x.len();
        x[n - 1] = 0.0;
        let norm = (x.iter().map(|v| v * v).sum::<f64>() * spacing).sqrt();
        if norm > 0.0 {
            for v in x.iter_mut() {
                *v /= norm;
            }
        } else {
            // restart from a shallow bump rather than dividing by zero
            let r = (n - 1) as f64 * spacing / 2.0;
            for (i, v) in x.iter_mut().enumerate() {
                let t = i as f64 * spacing - r;
                *v = (-t * t / (r * r)).exp();
            }
            x[0] = 0.0;
            x[n - 1] = 0.0;
            let m = (x.iter().map(|v| v * v).sum::<f64>() * spacing).sqrt();
            for v in x.iter_mut() {
                *v /= m;
            }
        }
    }
}

/// Maximise `|α| sqrt(2 (K ⋆ f², f²)) - 1/2 ‖f'‖²` over unit profiles on
/// `(-r, r)` by projected gradient ascent with multistart. At `α = 0` the
/// supremum is the free Dirichlet ground level, taken from the eigensolver
/// directly.
pub fn lambda_of_alpha(
    kernel: &CovarianceKernel,
    alpha: f64,
    r: f64,
    spacing: f64,
    opts: &SpgOptions,
) -> Result<LambdaValue, VarError> {
    if r <= 0.0 {
        return Err(VarError::BadParams { detail: format!("r = {r} must be positive") });
    }
    let template = Profile::from_shape(r, spacing, |x| (-x * x).exp());
    let grid = template.grid.clone();
    let dx = grid.spacing;

    if alpha == 0.0 {
        let n = grid.len - 2;
        let eig = principal_eigenvalue(&Potential::zero(-r, r, n), n)
            .map_err(|e| VarError::BadParams { detail: e.to_string() })?;
        let mut values = vec![0.0; grid.len];
        values[1..=n].copy_from_slice(&eig.eigenfunction);
        let mut profile = Profile { grid, values };
        profile.renormalize();
        return Ok(LambdaValue {
            value: -eig.lambda,
            profile,
            converged: true,
            start_index: 0,
            stationarity: eig.residual,
        });
    }

    let conv = KernelConvolver::new(kernel, &grid)?;
    let a = alpha.abs();
    let eval = |x: &[f64]| -> (f64, Vec<f64>) {
        let d: Vec<f64> = x.iter().map(|v| v * v).collect();
        let (q, kconv) = conv.quadratic(&d);
        let root = (2.0 * q).max(1e-300).sqrt();
        let mut grad = vec![0.0; x.len()];
        laplacian_grad(x, dx, &mut grad);
        // value = E - |α| sqrt(2Q) (minimised); euclid gradient
        for i in 1..x.len() - 1 {
            grad[i] -= a * 4.0 * x[i] * kconv[i] * dx / root;
        }
        let e: f64 = {
            let mut acc = 0.0;
            for w in x.windows(2) {
                let dlt = w[1] - w[0];
                acc += dlt * dlt;
            }
            0.5 * acc / dx
        };
        (e - a * root, grad)
    };
    let project = project_sphere(dx);

    let mut starts = Profile::starts(r, spacing);
    // a spread plateau helps small α where the maximiser fills the box
    starts.push(Profile::from_shape(r, spacing, |x| {
        (std::f64::consts::FRAC_PI_2 * x / r).cos()
    }));

    let mut best: Option<(usize, super::opt::SpgOutcome)> = None;
    for (idx, s) in starts.into_iter().enumerate() {
        let out = spg_minimize(&eval, &project, s.values, opts);
        if best.as_ref().map(|(_, b)| out.value < b.value).unwrap_or(true) {
            best = Some((idx, out));
        }
    }
    let (start_index, out) = best.unwrap();

    // tangential stationarity in the weighted norm
    let (_, g) = eval(&out.x);
    let gw: Vec<f64> = g.iter().map(|v| v / dx).collect();
    let inner: f64 = gw.iter().zip(&out.x).map(|(a, b)| a * b).sum::<f64>() * dx;
    let mut tang2 = 0.0;
    for (gi, xi) in gw.iter().zip(&out.x) {
        let t = gi - inner * xi;
        tang2 += t * t * dx;
    }

    let mut profile = Profile { grid, values: out.x };
    profile.renormalize();
    Ok(LambdaValue {
        value: -out.value,
        profile,
        converged: out.converged,
        start_index,
        stationarity: tang2.sqrt(),
    })
}

/// A Legendre transform sample: either a finite supremum or a divergence
/// flag when the supremum was still climbing at the table edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LegendreValue {
    pub value: f64,
    pub diverged: bool,
}

/// `sup_α (α y - Λ(α))` over a sampled symmetric table, with local
/// parabolic refinement around the arg max. Reports divergence instead of
/// a truncated finite value when the supremum sits on the boundary with
/// positive slope.
pub fn legendre_transform(
    alphas: &[f64],
    lambdas: &[f64],
    y: f64,
) -> Result<LegendreValue, VarError> {
    if alphas.len() != lambdas.len() || alphas.len() < 3 {
        return Err(VarError::BadTable { detail: "need matching tables of length >= 3".into() });
    }
    if alphas.windows(2).any(|w| w[1] <= w[0]) {
        return Err(VarError::BadTable { detail: "alphas must be strictly increasing".into() });
    }
    // evenness: tolerate one-sided tables starting at 0, otherwise check
    let has_negative = alphas[0] < 0.0;
    if has_negative {
        let n = alphas.len();
        for i in 0..n {
            let j = n - 1 - i;
            if (alphas[i] + alphas[j]).abs() > 1e-12
                || (lambdas[i] - lambdas[j]).abs()
                    > 1e-9 * lambdas[i].abs().max(1.0)
            {
                return Err(VarError::BadTable {
                    detail: "table must be even in alpha".into(),
                });
            }
        }
    } else if alphas[0] != 0.0 {
        return Err(VarError::BadTable {
            detail: "one-sided tables must start at alpha = 0".into(),
        });
    }

    // Λ is even, so the transform is even: work with |y| on α >= 0
    let ya = y.abs();
    let (aa, ll): (Vec<f64>, Vec<f64>) = if has_negative {
        let mid = alphas.len() / 2;
        (alphas[mid..].to_vec(), lambdas[mid..].to_vec())
    } else {
        (alphas.to_vec(), lambdas.to_vec())
    };
    let phi: Vec<f64> = aa.iter().zip(&ll).map(|(a, l)| a * ya - l).collect();
    let (mut arg, mut best) = (0usize, f64::MIN);
    for (i, &v) in phi.iter().enumerate() {
        if v > best {
            best = v;
            arg = i;
        }
    }
    if arg == phi.len() - 1 {
        let k = phi.len() - 1;
        if phi[k] > phi[k - 1] {
            return Ok(LegendreValue { value: f64::INFINITY, diverged: true });
        }
    }
    let mut value = best;
    if arg > 0 && arg + 1 < phi.len() {
        // interpolating parabola through the three samples around the max
        let (x0, x1, x2) = (aa[arg - 1], aa[arg], aa[arg + 1]);
        let (f0, f1, f2) = (phi[arg - 1], phi[arg], phi[arg + 1]);
        let d1 = (f1 - f0) / (x1 - x0);
        let d2 = (f2 - f1) / (x2 - x1);
        let curv = (d2 - d1) / (0.5 * (x2 - x0));
        if curv < 0.0 {
            let vertex = 0.5 * (x0 + x1) - d1 / curv;
            if vertex >= x0 && vertex <= x2 {
                let parabola = |x: f64| {
                    f0 * ((x - x1) * (x - x2)) / ((x0 - x1) * (x0 - x2))
                        + f1 * ((x - x0) * (x - x2)) / ((x1 - x0) * (x1 - x2))
                        + f2 * ((x - x0) * (x - x1)) / ((x2 - x0) * (x2 - x1))
                };
                value = value.max(parabola(vertex));
            }
        }
    }
    Ok(LegendreValue { value, diverged: false })
}

/// Paired samples of `Λ(α, r)` over an interval ladder and of the rate
/// function on a symmetric `y` grid.
#[derive(Clone, Debug)]
pub struct RateTable {
    /// Symmetric, sorted.
    pub alphas: Vec<f64>,
    pub r_ladder: Vec<f64>,
    /// `lambda[j][i]` = Λ(alphas[i], r_ladder[j]); even in α by
    /// construction.
    pub lambda: Vec<Vec<f64>>,
    /// Ladder limit per α (Aitken-accelerated when the ladder is clean).
    pub lambda_limit: Vec<f64>,
    /// Ladder convergence flag per α.
    pub converged: Vec<bool>,
    pub ys: Vec<f64>,
    pub j_vals: Vec<LegendreValue>,
}

fn aitken_limit(ladder: &[f64]) -> f64 {
    let n = ladder.len();
    if n < 3 {
        return ladder[n - 1];
    }
    let (a, b, c) = (ladder[n - 3], ladder[n - 2], ladder[n - 1]);
    let denom = c - 2.0 * b + a;
    if denom.abs() < 1e-12 * c.abs().max(1.0) {
        return c;
    }
    let accel = c - (c - b) * (c - b) / denom;
    // reject wild extrapolations
    if (accel - c).abs() > (c - b).abs() * 2.0 {
        c
    } else {
        accel
    }
}

/// Build the full table: Λ over `alphas_abs × r_ladder` (mirrored to
/// negative α), ladder limits, and the transform on the `y` grid
/// (mirrored likewise, so evenness is exact).
pub fn build_rate_table(
    kernel: &CovarianceKernel,
    alphas_abs: &[f64],
    ys_abs: &[f64],
    r_ladder: &[f64],
    base_spacing: f64,
    opts: &SpgOptions,
) -> Result<RateTable, VarError> {
    if alphas_abs.is_empty() || r_ladder.is_empty() {
        return Err(VarError::BadParams { detail: "empty ladder".into() });
    }
    if alphas_abs.windows(2).any(|w| w[1] <= w[0]) || alphas_abs[0] != 0.0 {
        return Err(VarError::BadParams {
            detail: "alpha grid must be increasing and start at 0".into(),
        });
    }

    // Λ over the nonnegative side, parallel over α
    let rows: Vec<Vec<f64>> = r_ladder
        .iter()
        .map(|&r| {
            alphas_abs
                .par_iter()
                .map(|&a| {
                    lambda_of_alpha(kernel, a, r, spacing_for(a, base_spacing), opts)
                        .map(|v| v.value)
                })
                .collect::<Result<Vec<f64>, VarError>>()
        })
        .collect::<Result<_, _>>()?;

    let n_a = alphas_abs.len();
    let mut limit_abs = Vec::with_capacity(n_a);
    let mut conv_abs = Vec::with_capacity(n_a);
    for i in 0..n_a {
        let ladder: Vec<f64> = rows.iter().map(|row| row[i]).collect();
        let last = ladder[ladder.len() - 1];
        let prev = if ladder.len() >= 2 { ladder[ladder.len() - 2] } else { last };
        conv_abs.push((last - prev).abs() <= 1e-3 * last.abs().max(1e-2));
        limit_abs.push(aitken_limit(&ladder));
    }

    // mirror to the symmetric table
    let mut alphas = Vec::with_capacity(2 * n_a - 1);
    for &a in alphas_abs.iter().skip(1).rev() {
        alphas.push(-a);
    }
    alphas.extend_from_slice(alphas_abs);
    let mirror = |row: &[f64]| -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * n_a - 1);
        for &v in row.iter().skip(1).rev() {
            out.push(v);
        }
        out.extend_from_slice(row);
        out
    };
    let lambda: Vec<Vec<f64>> = rows.iter().map(|r| mirror(r)).collect();
    let lambda_limit = mirror(&limit_abs);
    let converged: Vec<bool> = {
        let mut out: Vec<bool> = conv_abs.iter().skip(1).rev().cloned().collect();
        out.extend_from_slice(&conv_abs);
        out
    };

    // transform on |y|, mirrored, so J(-y) == J(y) bitwise
    let j_abs: Vec<LegendreValue> = ys_abs
        .iter()
        .map(|&y| legendre_transform(&alphas, &lambda_limit, y))
        .collect::<Result<_, _>>()?;
    let mut ys = Vec::with_capacity(2 * ys_abs.len() - 1);
    let mut j_vals = Vec::with_capacity(2 * ys_abs.len() - 1);
    for (&y, &j) in ys_abs.iter().zip(&j_abs).skip(1).rev() {
        ys.push(-y);
        j_vals.push(j);
    }
    for (&y, &j) in ys_abs.iter().zip(&j_abs) {
        ys.push(y);
        j_vals.push(j);
    }

    Ok(RateTable { alphas, r_ladder: r_ladder.to_vec(), lambda, lambda_limit, converged, ys, j_vals })
}

impl RateTable {
    /// Largest midpoint-convexity violation of the finite part of the rate
    /// function on its sampled grid.
    pub fn convexity_violation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        let n = self.ys.len();
        for i in 0..n {
            for j in (i + 2..n).step_by(2) {
                let mid = (i + j) / 2;
                let (a, m, b) = (self.j_vals[i], self.j_vals[mid], self.j_vals[j]);
                if a.diverged || b.diverged || m.diverged {
                    continue;
                }
                worst = worst.max(m.value - 0.5 * (a.value + b.value));
            }
        }
        worst
    }

    pub fn j_at(&self, y: f64) -> Option<LegendreValue> {
        self.ys
            .iter()
            .position(|&v| (v - y).abs() < 1e-12)
            .map(|i| self.j_vals[i])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn gaussian_kernel() -> CovarianceKernel {
        CovarianceKernel::from_fn(40.0, 0.05, |x| (-0.5 * x * x).exp())
    }

    #[test]
    fn alpha_zero_is_the_free_dirichlet_level() {
        let k = gaussian_kernel();
        for &r in &[2.0, 4.0] {
            let v = lambda_of_alpha(&k, 0.0, r, 1.0 / 64.0, &SpgOptions::default()).unwrap();
            let expect = -std::f64::consts::PI.powi(2) / (8.0 * r * r);
            assert_relative_eq!(v.value, expect, max_relative = 1e-4);
        }
    }

    #[test]
    fn lambda_respects_the_gaussian_bound_and_sign_symmetry() {
        let k = gaussian_kernel();
        let opts = SpgOptions::default();
        for &a in &[0.5, 2.0] {
            let plus = lambda_of_alpha(&k, a, 8.0, 1.0 / 32.0, &opts).unwrap();
            let minus = lambda_of_alpha(&k, -a, 8.0, 1.0 / 32.0, &opts).unwrap();
            assert_eq!(plus.value, minus.value, "Λ depends on |α| only");
            assert!(plus.value <= a * std::f64::consts::SQRT_2, "Λ(α) <= |α| sqrt(2 K0)");
            assert!(plus.stationarity < 1e-4, "stationarity {}", plus.stationarity);
        }
    }

    #[test]
    fn lambda_grows_with_the_interval() {
        let k = gaussian_kernel();
        let opts = SpgOptions::default();
        let mut prev = f64::MIN;
        for &r in &[4.0, 8.0, 16.0] {
            let v = lambda_of_alpha(&k, 1.0, r, 1.0 / 32.0, &opts).unwrap().value;
            assert!(v >= prev - 1e-6, "ladder must be non-decreasing: {v} after {prev}");
            prev = v;
        }
    }

    #[test]
    fn legendre_of_injected_quadratic() {
        // Λ = a α² has transform y²/(4a)
        let a = 0.8;
        let alphas: Vec<f64> = (-40..=40).map(|i| i as f64 * 0.1).collect();
        let lambdas: Vec<f64> = alphas.iter().map(|&x| a * x * x).collect();
        for &y in &[0.3, 1.0, 2.4] {
            let v = legendre_transform(&alphas, &lambdas, y).unwrap();
            assert!(!v.diverged);
            assert_relative_eq!(v.value, y * y / (4.0 * a), max_relative = 1e-3);
        }
        // beyond the table's slope range the sup is still climbing
        let v = legendre_transform(&alphas, &lambdas, 10.0).unwrap();
        assert!(v.diverged);
    }

    #[test]
    fn transform_rejects_uneven_tables() {
        let alphas = vec![-1.0, 0.0, 1.0];
        let lambdas = vec![1.0, 0.0, 2.0];
        assert!(legendre_transform(&alphas, &lambdas, 0.5).is_err());
    }
}
