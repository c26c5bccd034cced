//! Projected gradient descent with Barzilai–Borwein steps and a
//! nonmonotone Armijo line search, on arbitrary projected sets.
//!
//! All the variational problems in this crate are nonconvex over the unit
//! sphere, so callers run several starts and keep the best outcome.

/// Options for the projected solver.
#[derive(Clone, Debug)]
pub struct SpgOptions {
    pub max_iter: usize,
    /// Stop when the projected step `‖P(x - g) - x‖∞` falls below this.
    pub step_tol: f64,
    /// Nonmonotone memory length.
    pub memory: usize,
    pub bb_min: f64,
    pub bb_max: f64,
}

impl Default for SpgOptions {
    fn default() -> Self {
        SpgOptions { max_iter: 2500, step_tol: 1e-10, memory: 8, bb_min: 1e-8, bb_max: 1e6 }
    }
}

#[derive(Clone, Debug)]
pub struct SpgOutcome {
    pub x: Vec<f64>,
    pub value: f64,
    pub iters: usize,
    pub converged: bool,
    /// Sup norm of the final projected step.
    pub residual: f64,
}

/// Minimise `f` over the set enforced by `project`.
///
/// `eval` returns the value and gradient; `project` maps an arbitrary
/// point back to the feasible set (renormalisation to the L² sphere,
/// clamping to the nonnegative cone, ...).
pub fn spg_minimize(
    eval: &dyn Fn(&[f64]) -> (f64, Vec<f64>),
    project: &dyn Fn(&mut Vec<f64>),
    x0: Vec<f64>,
    opts: &SpgOptions,
) -> SpgOutcome {
    let mut x = x0;
    project(&mut x);
    let (mut fx, mut grad) = eval(&x);
    let mut best_x = x.clone();
    let mut best_f = fx;
    let mut history = vec![fx];
    let mut bb_step = 1.0;
    let mut residual = f64::INFINITY;

    for iter in 0..opts.max_iter {
        // projected direction at the BB scale
        let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(a, g)| a - bb_step * g).collect();
        project(&mut trial);
        let dir: Vec<f64> = trial.iter().zip(&x).map(|(t, a)| t - a).collect();
        residual = dir.iter().fold(0.0f64, |m, d| m.max(d.abs()));
        if residual <= opts.step_tol {
            return SpgOutcome { x: best_x, value: best_f, iters: iter, converged: true, residual };
        }
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let f_ref = history.iter().cloned().fold(f64::MIN, f64::max);

        // backtracking on the step fraction
        let mut t = 1.0;
        let mut accepted = false;
        let mut x_new = Vec::new();
        for _ in 0..40 {
            x_new = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
            project(&mut x_new);
            let f_new = eval(&x_new).0;
            if f_new <= f_ref + 1e-4 * t * slope || f_new < best_f {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return SpgOutcome {
                x: best_x,
                value: best_f,
                iters: iter,
                converged: residual <= opts.step_tol * 100.0,
                residual,
            };
        }

        let (f_next, grad_next) = eval(&x_new);
        // BB1 step from the accepted move
        let mut ss = 0.0;
        let mut sy = 0.0;
        for ((xn, xo), (gn, go)) in x_new.iter().zip(&x).zip(grad_next.iter().zip(&grad)) {
            let s = xn - xo;
            let y = gn - go;
            ss += s * s;
            sy += s * y;
        }
        bb_step = if sy > 0.0 { (ss / sy).clamp(opts.bb_min, opts.bb_max) } else { opts.bb_max };

        x = x_new;
        fx = f_next;
        grad = grad_next;
        if fx < best_f {
            best_f = fx;
            best_x = x.clone();
        }
        history.push(fx);
        if history.len() > opts.memory {
            history.remove(0);
        }
    }
    SpgOutcome { x: best_x, value: best_f, iters: opts.max_iter, converged: false, residual }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimises_a_quadratic_on_the_simplex_face() {
        // min ‖x - c‖² over the nonnegative orthant
        let c = [0.3, -0.2, 1.4];
        let eval = move |x: &[f64]| {
            let mut v = 0.0;
            let mut g = Vec::with_capacity(3);
            for (xi, ci) in x.iter().zip(&c) {
                v += (xi - ci) * (xi - ci);
                g.push(2.0 * (xi - ci));
            }
            (v, g)
        };
        let project = |x: &mut Vec<f64>| {
            for v in x.iter_mut() {
                *v = v.max(0.0);
            }
        };
        let out = spg_minimize(&eval, &project, vec![1.0, 1.0, 1.0], &SpgOptions::default());
        assert!(out.converged);
        assert!((out.x[0] - 0.3).abs() < 1e-8);
        assert!(out.x[1].abs() < 1e-8);
        assert!((out.x[2] - 1.4).abs() < 1e-8);
    }

    #[test]
    fn minimises_rayleigh_quotient_on_sphere() {
        // smallest eigenvalue of diag(1, 2, 5) over the unit sphere
        let d = [1.0, 2.0, 5.0];
        let eval = move |x: &[f64]| {
            let v: f64 = x.iter().zip(&d).map(|(xi, di)| di * xi * xi).sum();
            let g: Vec<f64> = x.iter().zip(&d).map(|(xi, di)| 2.0 * di * xi).collect();
            (v, g)
        };
        let project = |x: &mut Vec<f64>| {
            let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
            for v in x.iter_mut() {
                *v /= n;
            }
        };
        let out = spg_minimize(&eval, &project, vec![0.5, 0.5, 0.7], &SpgOptions::default());
        assert!((out.value - 1.0).abs() < 1e-9, "value {}", out.value);
    }
}
