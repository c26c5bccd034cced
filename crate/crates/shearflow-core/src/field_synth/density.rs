//! Spectral density families and their cosine transforms.

use serde::{Deserialize, Serialize};

use super::FieldError;
use crate::numeric::{gamma, trapezoid_refine};

/// Built-in density families. All are normalised so that `K(0) = ∫ h = 1`
/// at unit parameters.
///
/// * `Gaussian { width }`: `h(λ) = width/√(2π) e^{-width²λ²/2}`, covariance
///   `e^{-x²/(2 width²)}`.
/// * `Cauchy { decay }`: `h(λ) = (decay/π)/(decay² + λ²)`, covariance
///   `e^{-decay |x|}`.
/// * `MaternPower { beta }` (0 < beta < 1): `h(λ) = |λ|^{beta-1} e^{-|λ|} / (2 Γ(beta))`,
///   covariance `cos(beta · arctan x) / (1+x²)^{beta/2}`, which decays like
///   `|x|^{-beta}`.
/// * `Table`: knots with linear interpolation, zero outside the last knot.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DensityFamily {
    Gaussian { width: f64 },
    Cauchy { decay: f64 },
    MaternPower { beta: f64 },
    Table { lambda: Vec<f64>, h: Vec<f64> },
}

/// A spectral density together with the exponent of its moment condition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDensity {
    #[serde(flatten)]
    pub family: DensityFamily,
    /// Exponent `a` of the integrability requirement
    /// `∫ (1 + |λ|^a) h(λ) dλ < ∞`; checked by quadrature at construction.
    #[serde(default = "default_alpha_moment")]
    pub alpha_moment: f64,
}

fn default_alpha_moment() -> f64 {
    0.5
}

const QUAD_TOL: f64 = 1e-10;
const QUAD_FLOOR: f64 = 1e-300;
/// Oscillatory transforms cancel to machine noise in far tails; values
/// below this are reported as quadrature-level zero.
const ZERO_FLOOR: f64 = 1e-13;
const MAX_LEVEL: u32 = 22;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    debug_assert!(n % 2 == 0);
    if b <= a {
        return 0.0;
    }
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + i as f64 * h);
    }
    acc * h / 3.0
}

impl SpectralDensity {
    pub fn new(family: DensityFamily, alpha_moment: f64) -> Result<Self, FieldError> {
        if alpha_moment <= 0.0 {
            return Err(FieldError::BadParams { detail: "alpha_moment must be positive".into() });
        }
        match &family {
            DensityFamily::Gaussian { width } if *width <= 0.0 => {
                return Err(FieldError::BadParams { detail: "gaussian width must be positive".into() })
            }
            DensityFamily::Cauchy { decay } if *decay <= 0.0 => {
                return Err(FieldError::BadParams { detail: "cauchy decay must be positive".into() })
            }
            DensityFamily::MaternPower { beta } if !(0.0 < *beta && *beta < 1.0) => {
                return Err(FieldError::BadParams { detail: "matern_power beta must lie in ]0,1[".into() })
            }
            DensityFamily::Table { lambda, h } => {
                if lambda.len() != h.len() || lambda.len() < 2 {
                    return Err(FieldError::BadParams { detail: "table needs matching knot arrays of length >= 2".into() });
                }
                if lambda.windows(2).any(|w| w[1] <= w[0]) || lambda[0] < 0.0 {
                    return Err(FieldError::BadParams { detail: "table knots must be nonnegative and increasing".into() });
                }
                if h.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                    return Err(FieldError::BadParams { detail: "table values must be finite and nonnegative".into() });
                }
            }
            _ => {}
        }
        let density = SpectralDensity { family, alpha_moment };
        density.moment_integral()?;
        Ok(density)
    }

    pub fn gaussian(width: f64) -> Result<Self, FieldError> {
        Self::new(DensityFamily::Gaussian { width }, default_alpha_moment())
    }

    pub fn cauchy(decay: f64) -> Result<Self, FieldError> {
        Self::new(DensityFamily::Cauchy { decay }, default_alpha_moment())
    }

    pub fn matern_power(beta: f64) -> Result<Self, FieldError> {
        Self::new(DensityFamily::MaternPower { beta }, default_alpha_moment())
    }

    /// Parse the JSON file format `{"family": ..., ...params}`.
    pub fn from_json(text: &str) -> Result<Self, FieldError> {
        let raw: SpectralDensity = serde_json::from_str(text)
            .map_err(|e| FieldError::BadParams { detail: format!("json: {e}") })?;
        Self::new(raw.family, raw.alpha_moment)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("density serialises")
    }

    /// Short content-derived identifier used in sample headers.
    pub fn id(&self) -> String {
        let text = serde_json::to_string(self).expect("density serialises");
        // FNV-1a, enough to tie samples to the density that produced them
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for b in text.bytes() {
            hash ^= b as u64;
            hash = hash.wrapping_mul(0x1000_0000_01b3);
        }
        format!("{hash:016x}")
    }

    /// Pointwise evaluation; even by construction.
    pub fn eval(&self, lambda: f64) -> f64 {
        let l = lambda.abs();
        match &self.family {
            DensityFamily::Gaussian { width } => {
                width / (std::f64::consts::TAU).sqrt() * (-0.5 * width * width * l * l).exp()
            }
            DensityFamily::Cauchy { decay } => {
                decay / std::f64::consts::PI / (decay * decay + l * l)
            }
            DensityFamily::MaternPower { beta } => {
                if l == 0.0 {
                    // integrable singularity
                    f64::INFINITY
                } else {
                    l.powf(beta - 1.0) * (-l).exp() / (2.0 * gamma(*beta))
                }
            }
            DensityFamily::Table { lambda, h } => {
                if l <= lambda[0] {
                    return h[0];
                }
                match lambda.binary_search_by(|a| a.partial_cmp(&l).unwrap()) {
                    Ok(i) => h[i],
                    Err(i) => {
                        if i >= lambda.len() {
                            0.0
                        } else {
                            let w = (l - lambda[i - 1]) / (lambda[i] - lambda[i - 1]);
                            h[i - 1] * (1.0 - w) + h[i] * w
                        }
                    }
                }
            }
        }
    }

    /// A frequency beyond which the two-sided tail mass of `h` is below
    /// `tail` in absolute terms. `None` when no finite cutoff exists for
    /// the requested mass (heavy tails).
    pub fn frequency_cutoff(&self, tail: f64) -> Option<f64> {
        match &self.family {
            DensityFamily::Gaussian { width } => {
                // 2∫_Λ h = erfc(wΛ/√2) <= e^{-w²Λ²/2}
                let z = (2.0 * (1.0 / tail).ln()).sqrt().max(1.0);
                Some((z / width).max(1.0))
            }
            DensityFamily::Cauchy { decay } => {
                // 2∫_Λ h = (2/π) arctan(decay/Λ) <= 2 decay/(π Λ)
                let need = 2.0 * decay / (std::f64::consts::PI * tail);
                if need > 1e9 {
                    None
                } else {
                    Some(need.max(8.0 * decay))
                }
            }
            DensityFamily::MaternPower { beta } => {
                // tail ~ Λ^{β-1} e^{-Λ}/Γ(β): solve crudely
                let mut l = 5.0f64;
                for _ in 0..80 {
                    let t = l.powf(beta - 1.0) * (-l).exp() / gamma(*beta);
                    if t < tail {
                        return Some(l);
                    }
                    l += 1.0;
                }
                Some(l)
            }
            DensityFamily::Table { lambda, .. } => Some(lambda[lambda.len() - 1]),
        }
    }

    /// Two-sided mass `∫ h dλ = K(0)` computed by refining quadrature in a
    /// family-adapted coordinate.
    pub fn total_mass(&self) -> Result<f64, FieldError> {
        self.cosine_transform(0.0, QUAD_TOL)
    }

    /// `K(x) = 2 ∫_0^∞ h(λ) cos(λ x) dλ` by composite trapezoid with
    /// interval halving until successive refinements agree to `rel_tol`.
    ///
    /// Singular or slowly decaying families are integrated in a substituted
    /// coordinate: `u = λ^β` removes the Matérn-power endpoint singularity,
    /// and `λ = decay·tan θ` compactifies the Cauchy mass integral. The
    /// oscillatory Cauchy transform at `x ≠ 0` keeps the raw coordinate and
    /// pays for its tail with an integration-by-parts bound.
    pub fn cosine_transform(&self, x: f64, rel_tol: f64) -> Result<f64, FieldError> {
        let quad = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            trapezoid_refine(f, a, b, rel_tol, ZERO_FLOOR, MAX_LEVEL)
                .map_err(|e| FieldError::Quadrature { detail: e.to_string() })
        };
        match &self.family {
            DensityFamily::Gaussian { width } => {
                let w = *width;
                let upper = 14.0 / w;
                let f = move |l: f64| {
                    (w / (std::f64::consts::TAU).sqrt())
                        * (-0.5 * w * w * l * l).exp()
                        * (l * x).cos()
                };
                Ok(2.0 * quad(&f, 0.0, upper)?)
            }
            DensityFamily::Cauchy { decay } => {
                let s = *decay;
                if x == 0.0 {
                    // λ = s tan θ turns the integrand into a constant
                    let f = move |th: f64| {
                        let t = th.tan();
                        (s / std::f64::consts::PI) / (s * s) / (1.0 + t * t)
                            * (s / th.cos().powi(2))
                    };
                    return Ok(2.0 * quad(&f, 0.0, std::f64::consts::FRAC_PI_2 - 1e-9)?);
                }
                // |∫_Λ^∞ h cos(λx)| <= 2 h(Λ)/|x| for monotone h
                let ax = x.abs();
                let target = 0.25 * rel_tol.max(1e-12);
                let lambda_max = (2.0 * s / (std::f64::consts::PI * target * ax)).sqrt();
                if lambda_max > 5e6 {
                    return Err(FieldError::Quadrature {
                        detail: format!(
                            "cauchy transform at lag {x:.3} needs cutoff {lambda_max:.3e}"
                        ),
                    });
                }
                let lambda_max = lambda_max.max(16.0 * s);
                let f = move |l: f64| {
                    s / std::f64::consts::PI / (s * s + l * l) * (l * x).cos()
                };
                Ok(2.0 * quad(&f, 0.0, lambda_max)?)
            }
            DensityFamily::MaternPower { beta } => {
                let b = *beta;
                let norm = 1.0 / (2.0 * gamma(b) * b);
                // u = λ^β: h dλ = e^{-u^{1/β}}/(2 Γ(β) β) du, smooth at 0
                let upper = 46.0f64.powf(b);
                let f = move |u: f64| {
                    let l = u.powf(1.0 / b);
                    norm * (-l).exp() * (l * x).cos()
                };
                Ok(2.0 * quad(&f, 0.0, upper)?)
            }
            DensityFamily::Table { lambda, .. } => {
                let top = lambda[lambda.len() - 1];
                let f = move |l: f64| self.eval(l) * (l * x).cos();
                Ok(2.0 * quad(&f, 0.0, top)?)
            }
        }
    }

    /// Moving-average kernel `g(x) = (1/2π) ∫ e^{iλx} sqrt(2π h(λ)) dλ`,
    /// the function with `g ⋆ g = K`. Heavy-tailed densities whose
    /// `sqrt(h)` is not integrable (Cauchy) are rejected here: their `g`
    /// has a logarithmic singularity the grid cannot carry.
    pub fn amplitude_transform(&self, x: f64, rel_tol: f64) -> Result<f64, FieldError> {
        let quad = |f: &dyn Fn(f64) -> f64, a: f64, b: f64| {
            trapezoid_refine(f, a, b, rel_tol, ZERO_FLOOR, MAX_LEVEL)
                .map_err(|e| FieldError::Quadrature { detail: e.to_string() })
        };
        let tau = std::f64::consts::TAU;
        match &self.family {
            DensityFamily::Gaussian { width } => {
                let w = *width;
                let amp = (tau).powf(0.25) * w.sqrt();
                let f = move |l: f64| amp * (-0.25 * w * w * l * l).exp() * (l * x).cos();
                Ok(quad(&f, 0.0, 22.0 / w)? / std::f64::consts::PI)
            }
            DensityFamily::Cauchy { .. } => Err(FieldError::Quadrature {
                detail: "sqrt of a cauchy density is not integrable; the moving-average kernel diverges at 0".into(),
            }),
            DensityFamily::MaternPower { beta } => {
                let b = *beta;
                let norm = (tau / (2.0 * gamma(b))).sqrt();
                // u = λ^{(1+β)/2} removes the λ^{(β-1)/2} endpoint singularity
                let p = 0.5 * (1.0 + b);
                let upper = 95.0f64.powf(p);
                let f = move |u: f64| {
                    let l = u.powf(1.0 / p);
                    norm / p * (-0.5 * l).exp() * (l * x).cos()
                };
                Ok(quad(&f, 0.0, upper)? / std::f64::consts::PI)
            }
            DensityFamily::Table { lambda, .. } => {
                let top = lambda[lambda.len() - 1];
                let f = move |l: f64| (tau * self.eval(l)).sqrt() * (l * x).cos();
                Ok(quad(&f, 0.0, top)? / std::f64::consts::PI)
            }
        }
    }

    /// `∫ (1 + |λ|^a) h dλ`; rejects divergent combinations (e.g. Cauchy
    /// with `a >= 1`).
    pub fn moment_integral(&self) -> Result<f64, FieldError> {
        let a = self.alpha_moment;
        if let DensityFamily::Cauchy { .. } = self.family {
            if a >= 1.0 {
                return Err(FieldError::NonIntegrable {
                    detail: format!("cauchy density has no moment of order {a}"),
                });
            }
        }
        let quad = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            trapezoid_refine(f, lo, hi, 1e-8, QUAD_FLOOR, MAX_LEVEL)
                .map_err(|e| FieldError::NonIntegrable { detail: e.to_string() })
        };
        match &self.family {
            DensityFamily::Gaussian { width } => {
                let w = *width;
                let f = move |l: f64| {
                    (1.0 + l.powf(a)) * w / (std::f64::consts::TAU).sqrt()
                        * (-0.5 * w * w * l * l).exp()
                };
                Ok(2.0 * quad(&f, 0.0, 16.0 / w)?)
            }
            DensityFamily::Cauchy { decay } => {
                let s = *decay;
                let f = move |l: f64| {
                    (1.0 + l.powf(a)) * s / std::f64::consts::PI / (s * s + l * l)
                };
                // head at the density's own scale, then the λ^{a-2} tail in
                // log coordinates out to a remainder below 1e-6
                let head = 64.0 * s;
                let lambda_max = (2.0 * s / (std::f64::consts::PI * 1e-6 * (1.0 - a)))
                    .powf(1.0 / (1.0 - a))
                    .max(2.0 * head);
                let tail = move |t: f64| {
                    let l = t.exp();
                    f(l) * l
                };
                let value =
                    quad(&f, 0.0, head)? + quad(&tail, head.ln(), lambda_max.ln())?;
                Ok(2.0 * value)
            }
            DensityFamily::MaternPower { beta } => {
                let b = *beta;
                let norm = 1.0 / (2.0 * gamma(b) * b);
                let f = move |u: f64| {
                    let l = u.powf(1.0 / b);
                    norm * (1.0 + l.powf(a)) * (-l).exp()
                };
                Ok(2.0 * quad(&f, 0.0, 60.0f64.powf(b))?)
            }
            DensityFamily::Table { lambda, .. } => {
                let top = lambda[lambda.len() - 1];
                let f = move |l: f64| (1.0 + l.powf(a)) * self.eval(l);
                Ok(2.0 * quad(&f, 0.0, top)?)
            }
        }
    }

    /// One-sided band mass `∫_lo^hi h dλ`. Closed forms where available,
    /// Simpson in the singularity-removing coordinate otherwise.
    pub fn band_mass(&self, lo: f64, hi: f64) -> f64 {
        debug_assert!(0.0 <= lo && lo < hi);
        match &self.family {
            DensityFamily::Gaussian { width } => {
                let s = width / std::f64::consts::SQRT_2;
                0.5 * (crate::numeric::erfc(s * lo) - crate::numeric::erfc(s * hi))
            }
            DensityFamily::Cauchy { decay } => {
                ((hi / decay).atan() - (lo / decay).atan()) / std::f64::consts::PI
            }
            DensityFamily::MaternPower { beta } => {
                let b = *beta;
                let norm = 1.0 / (2.0 * gamma(b) * b);
                simpson(
                    |u| norm * (-u.powf(1.0 / b)).exp(),
                    lo.powf(b),
                    hi.powf(b),
                    32,
                )
            }
            DensityFamily::Table { .. } => simpson(|l| self.eval(l), lo, hi, 64),
        }
    }

    /// Exact covariance where a closed form exists (used by tests and by
    /// kernels built directly from a known function).
    pub fn analytic_covariance(&self, x: f64) -> Option<f64> {
        match &self.family {
            DensityFamily::Gaussian { width } => Some((-0.5 * x * x / (width * width)).exp()),
            DensityFamily::Cauchy { decay } => Some((-(decay * x).abs()).exp()),
            DensityFamily::MaternPower { beta } => {
                Some((beta * x.atan()).cos() / (1.0 + x * x).powf(beta / 2.0))
            }
            DensityFamily::Table { .. } => None,
        }
    }
}
