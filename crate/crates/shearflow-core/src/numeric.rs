//! Small numerical utilities shared across the crate: compensated
//! summation, refining trapezoid quadrature, special functions, simple
//! statistics.

/// Kahan compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct Kahan {
    sum: f64,
    carry: f64,
}

impl Kahan {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum QuadError {
    /// The refinement loop hit its interval budget before the requested
    /// tolerance was met.
    NoConvergence { achieved: f64, requested: f64 },
}

impl std::fmt::Display for QuadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            QuadError::NoConvergence { achieved, requested } => write!(
                f,
                "quadrature did not converge: reached {achieved:.3e}, wanted {requested:.3e}"
            ),
        }
    }
}

impl std::error::Error for QuadError {}

/// Composite trapezoid on `[a, b]`, halving the step until two successive
/// refinements differ by less than `rel_tol` relative (with a small
/// absolute floor for integrals near zero).
pub fn trapezoid_refine(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_floor: f64,
    max_level: u32,
) -> Result<f64, QuadError> {
    assert!(b > a);
    let mut n: usize = 64;
    let mut h = (b - a) / n as f64;
    let mut acc = Kahan::default();
    acc.add(0.5 * f(a));
    acc.add(0.5 * f(b));
    for i in 1..n {
        acc.add(f(a + i as f64 * h));
    }
    let mut integral = acc.total() * h;
    for _ in 0..max_level {
        // midpoints of the current intervals
        let mut mid = Kahan::default();
        for i in 0..n {
            mid.add(f(a + (i as f64 + 0.5) * h));
        }
        let refined = 0.5 * integral + 0.5 * h * mid.total();
        let err = (refined - integral).abs();
        n *= 2;
        h *= 0.5;
        integral = refined;
        if err <= (rel_tol * integral.abs()).max(abs_floor) {
            return Ok(integral);
        }
    }
    Err(QuadError::NoConvergence { achieved: f64::NAN, requested: rel_tol })
}

/// Lanczos approximation of the gamma function (g = 7, n = 9).
pub fn gamma(x: f64) -> f64 {
    const G: f64 = 7.0;
    const COEF: [f64; 9] = [
        0.999_999_999_999_809_93,
        676.520_368_121_885_1,
        -1259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // reflection
        std::f64::consts::PI / ((std::f64::consts::PI * x).sin() * gamma(1.0 - x))
    } else {
        let x = x - 1.0;
        let mut a = COEF[0];
        let t = x + G + 0.5;
        for (i, &c) in COEF.iter().enumerate().skip(1) {
            a += c / (x + i as f64);
        }
        (2.0 * std::f64::consts::PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * a
    }
}

/// Complementary error function, ~1e-12 relative accuracy. Series for
/// small arguments, backward-evaluated continued fraction in the tail.
pub fn erfc(x: f64) -> f64 {
    if x < 0.0 {
        return 2.0 - erfc(-x);
    }
    if x < 2.5 {
        // erf via its Taylor series
        let mut term = x;
        let mut sum = x;
        let x2 = x * x;
        let mut n = 0u32;
        while term.abs() > 1e-18 * sum.abs() {
            n += 1;
            term *= -x2 / n as f64;
            sum += term / (2 * n + 1) as f64;
        }
        1.0 - 2.0 / std::f64::consts::PI.sqrt() * sum
    } else {
        // erfc(x) = exp(-x²)/(x√π) / (1 + a₁/(1 + a₂/(1 + ...))), a_k = k/(2x²)
        let x2 = 2.0 * x * x;
        let mut t = 1.0;
        for k in (1..=160).rev() {
            t = 1.0 + k as f64 / x2 / t;
        }
        (-x * x).exp() / (x * std::f64::consts::PI.sqrt()) / t
    }
}

/// Upper tail of the standard normal distribution.
pub fn normal_tail(z: f64) -> f64 {
    0.5 * erfc(z / std::f64::consts::SQRT_2)
}

/// Ordinary least squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        sxy += (a - mx) * (b - my);
    }
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Wilson score interval for a binomial proportion at ~95% coverage.
pub fn wilson_interval(hits: u64, n: u64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let z = 1.96;
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = p + z2 / (2.0 * nf);
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    (((center - half) / denom).max(0.0), ((center + half) / denom).min(1.0))
}

/// Empirical quantile (linear interpolation between order statistics).
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    if i + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let w = pos - i as f64;
    sorted[i] * (1.0 - w) + sorted[i + 1] * w
}
