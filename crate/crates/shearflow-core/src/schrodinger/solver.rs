//! Tridiagonal ground-state solver: Sturm-sequence bisection for the
//! smallest eigenvalue, inverse iteration for the eigenvector.

use super::SchrodingerError;
use crate::field_synth::FieldSample;
use crate::numeric::Kahan;

/// A potential `V` on the open interval `(a, b)`, sampled at the interior
/// points of a uniform grid (spacing `(b-a)/(n+1)`).
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub a: f64,
    pub b: f64,
    pub values: Vec<f64>,
}

impl Potential {
    pub fn new(a: f64, b: f64, values: Vec<f64>) -> Result<Self, SchrodingerError> {
        if !(a < b) {
            return Err(SchrodingerError::BadPotential {
                detail: format!("interval ({a}, {b}) is empty"),
            });
        }
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(SchrodingerError::BadPotential {
                detail: "potential needs finitely many finite interior values".into(),
            });
        }
        Ok(Potential { a, b, values })
    }

    pub fn zero(a: f64, b: f64, n: usize) -> Self {
        Potential { a, b, values: vec![0.0; n] }
    }

    pub fn from_fn(a: f64, b: f64, n: usize, f: impl Fn(f64) -> f64) -> Self {
        let s = (b - a) / (n + 1) as f64;
        Potential { a, b, values: (1..=n).map(|i| f(a + i as f64 * s)).collect() }
    }

    /// Bridge a sampled field onto the interior eigen grid by linear
    /// interpolation, scaled by `scale` (desk-scale approximation of the
    /// continuum potential).
    pub fn from_field(field: &FieldSample, a: f64, b: f64, n: usize, scale: f64) -> Self {
        let s = (b - a) / (n + 1) as f64;
        let values = (1..=n)
            .map(|i| scale * field.grid.sample_linear(&field.values, a + i as f64 * s).0)
            .collect();
        Potential { a, b, values }
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.values.len() + 1) as f64
    }

    /// Interior node positions.
    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        let s = self.spacing();
        (1..=self.values.len()).map(move |i| self.a + i as f64 * s)
    }

    /// Resample onto `n` interior points by linear interpolation (identity
    /// when `n` matches).
    pub fn resample(&self, n: usize) -> Potential {
        if n == self.values.len() {
            return self.clone();
        }
        let s_old = self.spacing();
        let s_new = (self.b - self.a) / (n + 1) as f64;
        let values = (1..=n)
            .map(|i| {
                let x = self.a + i as f64 * s_new;
                let t = ((x - self.a) / s_old - 1.0).clamp(0.0, (self.values.len() - 1) as f64);
                let j = t.floor() as usize;
                let w = t - j as f64;
                if j + 1 < self.values.len() {
                    self.values[j] * (1.0 - w) + self.values[j + 1] * w
                } else {
                    self.values[j]
                }
            })
            .collect();
        Potential { a: self.a, b: self.b, values }
    }
}

/// Ground state of the discretised operator.
#[derive(Clone, Debug)]
pub struct EigenResult {
    pub lambda: f64,
    /// Interior values, strictly positive, unit discrete L² norm
    /// (`Σ f_i² s = 1`).
    pub eigenfunction: Vec<f64>,
    /// `‖(T - λ) f‖₂` in the discrete norm.
    pub residual: f64,
    pub n_grid: usize,
}

impl EigenResult {
    /// `1/2 Σ (f_{i+1}-f_i)²/s - Σ V_i f_i² s` with Dirichlet padding; for
    /// the discrete matrix this equals λ identically.
    pub fn rayleigh(&self, v: &Potential) -> f64 {
        let s = (v.b - v.a) / (self.n_grid + 1) as f64;
        let f = &self.eigenfunction;
        let mut kin = Kahan::default();
        kin.add(f[0] * f[0]);
        for w in f.windows(2) {
            let d = w[1] - w[0];
            kin.add(d * d);
        }
        kin.add(f[f.len() - 1] * f[f.len() - 1]);
        let mut pot = Kahan::default();
        let vv = v.resample(self.n_grid);
        for (fi, vi) in f.iter().zip(&vv.values) {
            pot.add(vi * fi * fi);
        }
        0.5 * kin.total() / s - pot.total() * s
    }
}

/// Number of eigenvalues of the tridiagonal matrix strictly below `x`,
/// from the Sturm sequence of the shifted LDLᵀ factorisation.
fn sturm_count(diag: &[f64], off2: f64, x: f64) -> usize {
    let mut count = 0;
    let mut q = diag[0] - x;
    if q < 0.0 {
        count += 1;
    }
    for &d in &diag[1..] {
        if q == 0.0 {
            q = 1e-300;
        }
        q = (d - x) - off2 / q;
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Solve `(T - shift) w = rhs` in place for the tridiagonal matrix with
/// constant off-diagonal, by LU with partial pivoting.
fn tridiag_shifted_solve(diag: &[f64], off: f64, shift: f64, rhs: &mut [f64]) {
    let n = diag.len();
    // forward elimination with row swaps
    let mut d: Vec<f64> = diag.iter().map(|&v| v - shift).collect();
    let mut e = vec![off; n.saturating_sub(1)]; // superdiagonal
    let mut f2 = vec![0.0; n.saturating_sub(2).max(0)]; // fill-in second superdiagonal
    let mut lower = vec![0.0; n.saturating_sub(1)]; // multipliers
    let mut swapped = vec![false; n.saturating_sub(1)];
    for k in 0..n - 1 {
        let sub = off;
        if d[k].abs() >= sub.abs() {
            let m = sub / d[k];
            lower[k] = m;
            d[k + 1] -= m * e[k];
            if k + 2 < n {
                // no fill beyond the existing band when not swapping
            }
        } else {
            swapped[k] = true;
            // swap rows k and k+1
            let (dk, ek) = (d[k], e[k]);
            d[k] = sub;
            e[k] = d[k + 1];
            let fk = if k + 2 < n { off } else { 0.0 };
            d[k + 1] = ek - (dk / sub) * d[k + 1];
            if k + 2 < n {
                f2[k] = fk;
                e[k + 1] = -(dk / sub) * off;
            }
            lower[k] = dk / sub;
            rhs.swap(k, k + 1);
        }
        let m = lower[k];
        let r = rhs[k];
        rhs[k + 1] -= m * r;
    }
    // back substitution
    for k in (0..n).rev() {
        let mut acc = rhs[k];
        if k + 1 < n {
            acc -= e[k] * rhs[k + 1];
        }
        if k + 2 < n && swapped[k] {
            acc -= f2[k] * rhs[k + 2];
        }
        let piv = if d[k] != 0.0 { d[k] } else { 1e-300 };
        rhs[k] = acc / piv;
    }
}

/// Smallest Dirichlet eigenvalue of `-1/2 Δ - V` with its positive,
/// normalised ground state. Converges at second order in the spacing.
pub fn principal_eigenvalue(
    v: &Potential,
    n_grid: usize,
) -> Result<EigenResult, SchrodingerError> {
    if n_grid < 16 {
        return Err(SchrodingerError::GridTooCoarse { n_grid });
    }
    let vv = v.resample(n_grid);
    let s = vv.spacing();
    let inv_s2 = 1.0 / (s * s);
    let diag: Vec<f64> = vv.values.iter().map(|&p| inv_s2 - p).collect();
    let off = -0.5 * inv_s2;
    let off2 = off * off;

    // Gershgorin bracket, then bisect until the interval is tight
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &d in &diag {
        lo = lo.min(d - 2.0 * off.abs());
        hi = hi.max(d + 2.0 * off.abs());
    }
    let scale = hi.abs().max(lo.abs()).max(1.0);
    let tol = 1e-14 * scale;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sturm_count(&diag, off2, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= tol {
            break;
        }
    }
    let lambda_bisect = 0.5 * (lo + hi);

    // inverse iteration from a positive vector; the shift sits just below
    // the eigenvalue so the factorisation stays nonsingular
    let shift = lambda_bisect - 10.0 * tol.max(1e-13 * scale);
    let n = diag.len();
    let mut f: Vec<f64> = (0..n)
        .map(|i| {
            let x = (i + 1) as f64 / (n + 1) as f64;
            (std::f64::consts::PI * x).sin()
        })
        .collect();
    for _ in 0..3 {
        tridiag_shifted_solve(&diag, off, shift, &mut f);
        let norm = f.iter().map(|z| z * z).sum::<f64>().sqrt();
        for z in f.iter_mut() {
            *z /= norm;
        }
    }
    // sign fix: largest-magnitude entry positive (ground state is nodeless)
    let max_at = f
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
        .map(|(i, _)| i)
        .unwrap();
    if f[max_at] < 0.0 {
        for z in f.iter_mut() {
            *z = -*z;
        }
    }

    // Rayleigh quotient sharpens the bisection value
    let apply = |f: &[f64], out: &mut Vec<f64>| {
        out.clear();
        for i in 0..n {
            let mut acc = diag[i] * f[i];
            if i > 0 {
                acc += off * f[i - 1];
            }
            if i + 1 < n {
                acc += off * f[i + 1];
            }
            out.push(acc);
        }
    };
    let mut tf = Vec::with_capacity(n);
    apply(&f, &mut tf);
    let lambda = f.iter().zip(&tf).map(|(a, b)| a * b).sum::<f64>();
    let mut resid2 = 0.0;
    for (a, b) in f.iter().zip(&tf) {
        let r = b - lambda * a;
        resid2 += r * r;
    }
    let residual = resid2.sqrt();

    // normalise in the grid-weighted norm
    let w = 1.0 / s.sqrt();
    let eigenfunction: Vec<f64> = f.iter().map(|z| z * w).collect();

    Ok(EigenResult { lambda, eigenfunction, residual, n_grid })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const PI2_8: f64 = std::f64::consts::PI * std::f64::consts::PI / 8.0;

    #[test]
    fn free_ground_state_on_unit_interval() {
        let v = Potential::zero(-1.0, 1.0, 2000);
        let r = principal_eigenvalue(&v, 2000).unwrap();
        assert!((r.lambda - PI2_8).abs() < 1e-4, "λ = {}", r.lambda);
        assert!(r.residual < 1e-8, "residual {}", r.residual);
        // ground state positive and normalised
        assert!(r.eigenfunction.iter().all(|&z| z > 0.0));
        let s = v.spacing();
        let norm: f64 = r.eigenfunction.iter().map(|z| z * z * s).sum();
        assert_relative_eq!(norm, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_shift_is_exact() {
        let bump = Potential::from_fn(-2.0, 2.0, 400, |x| (x * 0.9).sin() + 0.3 * x);
        let base = principal_eigenvalue(&bump, 400).unwrap();
        let mut shifted = bump.clone();
        for v in shifted.values.iter_mut() {
            *v += 2.5;
        }
        let r = principal_eigenvalue(&shifted, 400).unwrap();
        assert!((r.lambda - (base.lambda - 2.5)).abs() < 1e-10, "shift identity broke");
    }

    #[test]
    fn monotone_in_potential_and_domain() {
        let v1 = Potential::from_fn(-2.0, 2.0, 300, |x| (-x * x).exp());
        let mut v2 = v1.clone();
        for v in v2.values.iter_mut() {
            *v += 0.5 * (1.0 + (3.2 * *v).cos()).abs();
        }
        let l1 = principal_eigenvalue(&v1, 300).unwrap().lambda;
        let l2 = principal_eigenvalue(&v2, 300).unwrap().lambda;
        assert!(l2 <= l1 + 1e-12, "bigger potential must not raise λ");

        // nested domains: (-1,1) inside (-2,2), same V
        let inner = Potential::from_fn(-1.0, 1.0, 300, |x| (-x * x).exp());
        let li = principal_eigenvalue(&inner, 300).unwrap().lambda;
        assert!(li >= l1 - 1e-12, "smaller domain must not lower λ");
    }

    #[test]
    fn second_order_grid_convergence() {
        let v = Potential::from_fn(-1.0, 1.0, 4000, |x| (2.0 * x).cos());
        let l1 = principal_eigenvalue(&v, 250).unwrap().lambda;
        let l2 = principal_eigenvalue(&v, 500).unwrap().lambda;
        let l4 = principal_eigenvalue(&v, 1000).unwrap().lambda;
        let ratio = (l1 - l2) / (l2 - l4);
        assert!((ratio - 4.0).abs() < 0.6, "convergence ratio {ratio}");
    }

    #[test]
    fn rayleigh_identity_holds_on_returned_state() {
        let v = Potential::from_fn(-3.0, 3.0, 600, |x| 1.5 * (-x * x / 2.0).exp());
        let r = principal_eigenvalue(&v, 600).unwrap();
        let ray = r.rayleigh(&v);
        assert!((ray - r.lambda).abs() < 1e-9, "rayleigh {ray} vs λ {}", r.lambda);
    }

    #[test]
    fn coarse_grids_are_rejected() {
        let v = Potential::zero(-1.0, 1.0, 8);
        assert!(matches!(
            principal_eigenvalue(&v, 8),
            Err(SchrodingerError::GridTooCoarse { .. })
        ));
    }
}
