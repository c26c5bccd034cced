//! Mixture lower bounds: for weights `α` on the simplex and unit profiles
//! `f_i`,
//!
//! ```text
//! I_n(y) = inf { 1/2 Σ α_i ‖f_i'‖² : |y|/√2 < Σ α_i sqrt((K ⋆ f_i², f_i²)) }
//! ```
//!
//! solved by alternating a penalised profile descent with an exact linear
//! program in the weights, plus a feasibility restoration pass. The
//! companion closed form gives the profiles `ū_i` realising
//! `inf Max_i K*_r(u_i)` at a prescribed pairing target.

use super::lambda::project_sphere;
use super::opt::{spg_minimize, SpgOptions};
use super::{KernelConvolver, Profile, VarError};
use crate::field_synth::CovarianceKernel;

/// Strictness margin: the strict constraint is implemented as a closed
/// constraint shifted inward by this amount.
const STRICT_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug)]
pub struct MixtureProblem {
    /// Simplex weights, `Σ α_i = 1`, each `>= 0`.
    pub weights: Vec<f64>,
    pub profiles: Vec<Profile>,
    pub target: f64,
}

impl MixtureProblem {
    pub fn new(weights: Vec<f64>, profiles: Vec<Profile>, target: f64) -> Result<Self, VarError> {
        if weights.len() != profiles.len() || weights.is_empty() {
            return Err(VarError::BadParams { detail: "weights/profiles mismatch".into() });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > 1e-12 {
            return Err(VarError::BadParams {
                detail: format!("weights must lie on the simplex (sum {sum})"),
            });
        }
        Ok(MixtureProblem { weights, profiles, target })
    }

    /// `1/2 Σ α_i ‖f_i'‖²`.
    pub fn energy(&self) -> f64 {
        self.weights
            .iter()
            .zip(&self.profiles)
            .map(|(a, f)| a * f.dirichlet_energy())
            .sum()
    }

    /// `Σ α_i sqrt(Q_i)`.
    pub fn mixture_root(&self, kernel: &CovarianceKernel) -> Result<f64, VarError> {
        let mut s = 0.0;
        for (a, f) in self.weights.iter().zip(&self.profiles) {
            if *a == 0.0 {
                continue;
            }
            s += a * super::quadratic_form(kernel, f)?.max(0.0).sqrt();
        }
        Ok(s)
    }
}

#[derive(Clone, Debug)]
pub struct MixtureValue {
    pub value: f64,
    pub mixture: Option<MixtureProblem>,
    /// Set when no grid profile can reach the constraint (`|y|` at or
    /// beyond the sqrt(2 K(0)) frontier).
    pub infeasible: bool,
    pub converged: bool,
}

/// Exact minimiser of the linear weight problem
/// `min Σ α_i c_i  s.t.  α ∈ simplex, Σ α_i s_i >= t`.
fn weight_lp(costs: &[f64], roots: &[f64], t: f64) -> Option<Vec<f64>> {
    let n = costs.len();
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |value: f64, w: Vec<f64>| {
        if best.as_ref().map(|(b, _)| value < *b).unwrap_or(true) {
            best = Some((value, w));
        }
    };
    for i in 0..n {
        if roots[i] >= t {
            let mut w = vec![0.0; n];
            w[i] = 1.0;
            consider(costs[i], w);
        }
        for j in 0..n {
            if i == j || (roots[i] - roots[j]).abs() < 1e-15 {
                continue;
            }
            let a = (t - roots[j]) / (roots[i] - roots[j]);
            if (0.0..=1.0).contains(&a) {
                let mut w = vec![0.0; n];
                w[i] = a;
                w[j] = 1.0 - a;
                consider(a * costs[i] + (1.0 - a) * costs[j], w);
            }
        }
    }
    best.map(|(_, w)| w)
}

/// Resample a profile concentrated by `kappa > 1` (values pulled toward
/// the origin), renormalised.
fn concentrate(p: &Profile, kappa: f64) -> Profile {
    let vals: Vec<f64> = p
        .grid
        .points()
        .map(|x| p.grid.sample_linear(&p.values, x * kappa).0)
        .collect();
    let mut out = Profile { grid: p.grid.clone(), values: vals };
    out.renormalize();
    out
}

/// Alternating descent from a given mixture. Returns the best feasible
/// value found; the iteration never worsens a feasible seed.
pub fn refine_mixture(
    kernel: &CovarianceKernel,
    seed: &MixtureProblem,
    opts: &SpgOptions,
) -> Result<MixtureValue, VarError> {
    let y = seed.target;
    let t = y.abs() / std::f64::consts::SQRT_2 + STRICT_MARGIN;
    let n = seed.weights.len();
    let grid = seed.profiles[0].grid.clone();
    let dx = grid.spacing;
    let conv = KernelConvolver::new(kernel, &grid)?;
    let project = project_sphere(dx);

    let mut weights = seed.weights.clone();
    let mut profiles = seed.profiles.clone();
    let mut best: Option<(f64, MixtureProblem)> = None;

    let evaluate = |weights: &[f64], profiles: &[Profile]| -> (f64, f64) {
        let mut energy = 0.0;
        let mut root = 0.0;
        for (a, f) in weights.iter().zip(profiles) {
            energy += a * f.dirichlet_energy();
            let (q, _) = conv.quadratic(&f.density());
            root += a * q.max(0.0).sqrt();
        }
        (energy, root)
    };

    let mut rho = 10.0;
    for _outer in 0..8 {
        // profile step: penalised joint descent, one block per component
        for i in 0..n {
            if weights[i] == 0.0 {
                continue;
            }
            let others: f64 = weights
                .iter()
                .zip(&profiles)
                .enumerate()
                .filter(|(k, _)| *k != i)
                .map(|(_, (a, f))| {
                    let (q, _) = conv.quadratic(&f.density());
                    a * q.max(0.0).sqrt()
                })
                .sum();
            let ai = weights[i];
            let eval = |f: &[f64]| -> (f64, Vec<f64>) {
                let dens: Vec<f64> = f.iter().map(|v| v * v).collect();
                let (q, kconv) = conv.quadratic(&dens);
                let q = q.max(1e-300);
                let root = q.sqrt();
                let mut e = 0.0;
                for w in f.windows(2) {
                    let d = w[1] - w[0];
                    e += d * d;
                }
                e = 0.5 * e / dx;
                let gap = (t - (others + ai * root)).max(0.0);
                let value = ai * e + rho * gap * gap;
                let mut grad = vec![0.0; f.len()];
                for k in 1..f.len() - 1 {
                    let ge = (2.0 * f[k] - f[k - 1] - f[k + 1]) / dx;
                    let mut g = ai * ge;
                    if gap > 0.0 {
                        // d root / d f_k = 2 f_k (K⋆f²)_k Δx / root
                        g -= 2.0 * rho * gap * ai * 2.0 * f[k] * kconv[k] * dx / root;
                    }
                    grad[k] = g;
                }
                (value, grad)
            };
            let out = spg_minimize(&eval, &project, profiles[i].values.clone(), opts);
            profiles[i] = Profile { grid: grid.clone(), values: out.x };
            profiles[i].renormalize();
        }

        // weight step: exact LP against current costs and roots
        let costs: Vec<f64> = profiles.iter().map(|f| f.dirichlet_energy()).collect();
        let roots: Vec<f64> = profiles
            .iter()
            .map(|f| conv.quadratic(&f.density()).0.max(0.0).sqrt())
            .collect();
        if let Some(w) = weight_lp(&costs, &roots, t) {
            weights = w;
        }

        // bookkeeping of the best feasible iterate
        let (energy, root) = evaluate(&weights, &profiles);
        if root > y.abs() / std::f64::consts::SQRT_2
            && best.as_ref().map(|(b, _)| energy < *b).unwrap_or(true)
        {
            best = Some((
                energy,
                MixtureProblem { weights: weights.clone(), profiles: profiles.clone(), target: y },
            ));
        }
        rho *= 10.0;
    }

    // feasibility restoration: concentrate all profiles until the strict
    // constraint holds
    if best.is_none() {
        let mut kappa = 1.0;
        for _ in 0..60 {
            kappa *= 1.1;
            let cand: Vec<Profile> = profiles.iter().map(|p| concentrate(p, kappa)).collect();
            let (energy, root) = evaluate(&weights, &cand);
            if root > y.abs() / std::f64::consts::SQRT_2 {
                best = Some((
                    energy,
                    MixtureProblem { weights: weights.clone(), profiles: cand, target: y },
                ));
                break;
            }
        }
    }

    match best {
        Some((value, mix)) => {
            Ok(MixtureValue { value, mixture: Some(mix), infeasible: false, converged: true })
        }
        None => Ok(MixtureValue {
            value: f64::INFINITY,
            mixture: None,
            infeasible: true,
            converged: false,
        }),
    }
}

/// `I_n(y)` on `(-r, r)`: alternating minimisation from spread seeds, plus
/// a duplicated `I_1` seed for `n > 1` so the hierarchy is monotone by
/// construction.
pub fn i_n(
    kernel: &CovarianceKernel,
    y: f64,
    n: usize,
    r: f64,
    spacing: f64,
    opts: &SpgOptions,
) -> Result<MixtureValue, VarError> {
    if n == 0 {
        return Err(VarError::BadParams { detail: "n must be at least 1".into() });
    }
    // grid-level feasibility probe: the most concentrated resolvable bump
    let probe = Profile::from_shape(r, spacing, |x| (-(x / (6.0 * spacing)).powi(2)).exp());
    let q_max = super::quadratic_form(kernel, &probe)?;
    if y.abs() / std::f64::consts::SQRT_2 + STRICT_MARGIN >= q_max.max(0.0).sqrt() {
        return Ok(MixtureValue {
            value: f64::INFINITY,
            mixture: None,
            infeasible: true,
            converged: true,
        });
    }

    let mut seeds: Vec<MixtureProblem> = Vec::new();
    let spread = Profile::from_shape(r, spacing, |x| {
        (std::f64::consts::FRAC_PI_2 * x / r).cos()
    });
    let bump = Profile::from_shape(r, spacing, |x| (-0.5 * (4.0 * x / r).powi(2)).exp());
    let uniform = vec![1.0 / n as f64; n];
    seeds.push(MixtureProblem::new(uniform.clone(), vec![spread.clone(); n], y)?);
    seeds.push(MixtureProblem::new(uniform, vec![bump; n], y)?);
    if n > 1 {
        let one = i_n(kernel, y, 1, r, spacing, opts)?;
        if let Some(mix) = one.mixture {
            let mut w = vec![0.0; n];
            w[0] = 1.0;
            let mut profs = vec![mix.profiles[0].clone()];
            profs.extend(std::iter::repeat(spread).take(n - 1));
            seeds.push(MixtureProblem::new(w, profs, y)?);
        }
    }

    let mut best: Option<MixtureValue> = None;
    for seed in &seeds {
        let out = refine_mixture(kernel, seed, opts)?;
        if best
            .as_ref()
            .map(|b| out.value < b.value && !out.infeasible)
            .unwrap_or(true)
        {
            best = Some(out);
        }
    }
    Ok(best.unwrap())
}

/// The closed-form minimising profiles of `inf Max_i K*_r(u_i)` subject to
/// `Σ α_i (u_i, f_i²) = y`.
#[derive(Clone, Debug)]
pub struct OptimalProfiles {
    pub u_bars: Vec<Vec<f64>>,
    /// `Σ α_i (ū_i, f_i²)`, which equals the target by construction.
    pub constraint_sum: f64,
    /// `y² / (2 (Σ α_i sqrt(Q_i))²)`, the value both sides must match.
    pub closed_form_value: f64,
    pub infinite: bool,
}

pub fn optimal_profiles(
    mix: &MixtureProblem,
    kernel: &CovarianceKernel,
) -> Result<OptimalProfiles, VarError> {
    let y = mix.target;
    let n = mix.weights.len();
    let grid = &mix.profiles[0].grid;
    let dx = grid.spacing;
    let conv = KernelConvolver::new(kernel, grid)?;

    let mut convs = Vec::with_capacity(n);
    let mut roots = Vec::with_capacity(n);
    for f in &mix.profiles {
        let (q, kconv) = conv.quadratic(&f.density());
        roots.push(q.max(0.0).sqrt());
        convs.push(kconv);
    }
    let s: f64 = mix.weights.iter().zip(&roots).map(|(a, q)| a * q).sum();

    let (u_bars, infinite) = if s > 0.0 {
        let u: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if mix.weights[i] == 0.0 {
                    vec![0.0; grid.len]
                } else {
                    let c = y / (s * roots[i]);
                    convs[i].iter().map(|v| c * v).collect()
                }
            })
            .collect();
        (u, false)
    } else {
        // every active component has a vanishing form; constants split the
        // target across them and the dual value is infinite unless y = 0
        let active = mix.weights.iter().filter(|&&a| a > 0.0).count().max(1);
        let u: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                if mix.weights[i] == 0.0 {
                    vec![0.0; grid.len]
                } else {
                    vec![y / (mix.weights[i] * active as f64); grid.len]
                }
            })
            .collect();
        (u, y != 0.0)
    };

    let mut constraint_sum = 0.0;
    for ((a, f), u) in mix.weights.iter().zip(&mix.profiles).zip(&u_bars) {
        if *a == 0.0 {
            continue;
        }
        let pairing: f64 = u.iter().zip(f.density()).map(|(ui, d)| ui * d).sum::<f64>() * dx;
        constraint_sum += a * pairing;
    }
    let closed_form_value = if infinite {
        f64::INFINITY
    } else if y == 0.0 {
        0.0
    } else {
        y * y / (2.0 * s * s)
    };
    Ok(OptimalProfiles { u_bars, constraint_sum, closed_form_value, infinite })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::varcalc::{kstar, quadratic_form};
    use approx::assert_relative_eq;

    fn gaussian_kernel() -> CovarianceKernel {
        CovarianceKernel::from_fn(20.0, 0.05, |t| (-0.5 * t * t).exp())
    }

    fn opts() -> SpgOptions {
        SpgOptions { max_iter: 400, ..SpgOptions::default() }
    }

    #[test]
    fn zero_target_decays_with_the_interval() {
        // at y = 0 the constraint is free, so the value is the Dirichlet
        // ground level of the interval and vanishes along the ladder
        let k = gaussian_kernel();
        let mut prev = f64::INFINITY;
        for &r in &[4.0, 8.0] {
            let v = i_n(&k, 0.0, 1, r, 1.0 / 16.0, &opts()).unwrap();
            assert!(!v.infeasible);
            let floor = std::f64::consts::PI.powi(2) / (8.0 * r * r);
            assert!(v.value < prev, "value must fall with r");
            assert!(
                v.value <= floor * 1.2 + 1e-9,
                "I_1(0) on r = {r}: {} vs free level {floor}",
                v.value
            );
            prev = v.value;
        }
    }

    #[test]
    fn frontier_targets_are_infeasible() {
        let k = gaussian_kernel();
        let v = i_n(&k, 1.6, 1, 8.0, 1.0 / 16.0, &opts()).unwrap();
        assert!(v.infeasible);
        assert!(v.value.is_infinite());
    }

    #[test]
    fn hierarchy_is_monotone() {
        let k = gaussian_kernel();
        for &y in &[0.5, 1.0] {
            let one = i_n(&k, y, 1, 8.0, 1.0 / 16.0, &opts()).unwrap();
            let two = i_n(&k, y, 2, 8.0, 1.0 / 16.0, &opts()).unwrap();
            assert!(
                two.value <= one.value + 1e-3,
                "I_2({y}) = {} exceeds I_1({y}) = {}",
                two.value,
                one.value
            );
        }
    }

    #[test]
    fn doubling_convexity_combination() {
        let k = gaussian_kernel();
        let (y1, y2) = (0.4, 1.0);
        let a = 0.5;
        let one_a = i_n(&k, y1, 1, 8.0, 1.0 / 16.0, &opts()).unwrap();
        let one_b = i_n(&k, y2, 1, 8.0, 1.0 / 16.0, &opts()).unwrap();
        let combined = MixtureProblem::new(
            vec![a, 1.0 - a],
            vec![
                one_a.mixture.as_ref().unwrap().profiles[0].clone(),
                one_b.mixture.as_ref().unwrap().profiles[0].clone(),
            ],
            a * y1 + (1.0 - a) * y2,
        )
        .unwrap();
        let two = refine_mixture(&k, &combined, &opts()).unwrap();
        let bound = a * one_a.value + (1.0 - a) * one_b.value;
        assert!(
            two.value <= bound + 1e-9,
            "I_2 at the mixture point: {} must not exceed {}",
            two.value,
            bound
        );
    }

    #[test]
    fn closed_form_profiles_meet_the_constraint_exactly() {
        let k = gaussian_kernel();
        let grid_r = 4.0;
        let sp = 1.0 / 16.0;
        let f1 = Profile::from_shape(grid_r, sp, |x| (-x * x).exp());
        let f2 = Profile::from_shape(grid_r, sp, |x| (-0.3 * x * x).exp() * (1.0 + 0.2 * x));
        let y = 0.7;
        let mix = MixtureProblem::new(vec![0.6, 0.4], vec![f1.clone(), f2], y).unwrap();
        let res = optimal_profiles(&mix, &k).unwrap();
        assert!(!res.infinite);
        assert_relative_eq!(res.constraint_sum, y, epsilon = 1e-10);

        // n = 1 closed form: ū = y (K⋆f²)/(K⋆f², f²)
        let single = MixtureProblem::new(vec![1.0], vec![f1.clone()], y).unwrap();
        let res1 = optimal_profiles(&single, &k).unwrap();
        let conv = KernelConvolver::new(&k, &f1.grid).unwrap();
        let q = quadratic_form(&k, &f1).unwrap();
        let expect: Vec<f64> = conv.convolve(&f1.density()).iter().map(|v| y * v / q).collect();
        for (a, b) in res1.u_bars[0].iter().zip(&expect) {
            assert_relative_eq!(a, b, epsilon = 1e-10);
        }
        assert_relative_eq!(res1.closed_form_value, y * y / (2.0 * q), max_relative = 1e-12);
    }

    #[test]
    fn zero_target_gives_zero_profiles() {
        let k = gaussian_kernel();
        let f = Profile::from_shape(4.0, 1.0 / 16.0, |x| (-x * x).exp());
        let mix = MixtureProblem::new(vec![1.0], vec![f], 0.0).unwrap();
        let res = optimal_profiles(&mix, &k).unwrap();
        assert!(res.u_bars[0].iter().all(|&v| v == 0.0));
        assert_eq!(res.closed_form_value, 0.0);
    }

    #[test]
    fn dual_value_matches_kstar_on_a_two_component_mixture() {
        let k = gaussian_kernel();
        let sp = 1.0 / 16.0;
        let f1 = Profile::from_shape(4.0, sp, |x| (-x * x).exp());
        let f2 = Profile::from_shape(4.0, sp, |x| (-0.4 * (x - 0.5) * (x - 0.5)).exp());
        let y = 0.6;
        let mix = MixtureProblem::new(vec![0.5, 0.5], vec![f1.clone(), f2], y).unwrap();
        let res = optimal_profiles(&mix, &k).unwrap();
        let kopts = SpgOptions { max_iter: 3000, ..SpgOptions::default() };
        let mut max_kstar = 0.0f64;
        for u in &res.u_bars {
            let v = kstar(&k, &f1.grid, u, &kopts).unwrap().value;
            max_kstar = max_kstar.max(v);
        }
        assert_relative_eq!(max_kstar, res.closed_form_value, max_relative = 1e-6);
    }
}
