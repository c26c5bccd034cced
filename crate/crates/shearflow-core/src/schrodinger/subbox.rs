//! Minimum of the principal eigenvalue over a sliding family of sub-boxes
//! `z + (-(2r+1), 2r+1)`, `z` on the lattice `2rZ` clipped to the data
//! window. The small boxes overlap by construction; boxes that collide
//! with the window edge are flagged and excluded from the minimum unless
//! explicitly included.

use rayon::prelude::*;

use super::{principal_eigenvalue, Potential, SchrodingerError};

#[derive(Clone, Debug)]
pub struct BoxEigen {
    pub z: f64,
    pub lambda: f64,
    pub clipped: bool,
    pub n_grid: usize,
}

#[derive(Clone, Debug)]
pub struct SubBoxScan {
    pub min_lambda: f64,
    pub argmin_z: f64,
    pub per_box: Vec<BoxEigen>,
}

/// Scan principal eigenvalues over the sub-box family and take the
/// minimum. `r` must be at least 2; the box half-width is `2r + 1`.
pub fn min_subbox_eigenvalue(
    v: &Potential,
    r: f64,
    include_clipped: bool,
) -> Result<SubBoxScan, SchrodingerError> {
    if r < 2.0 {
        return Err(SchrodingerError::BadParams {
            detail: format!("box parameter r = {r} must be at least 2"),
        });
    }
    let big_r = v.b.min(-v.a);
    if big_r <= r {
        return Err(SchrodingerError::NoAdmissibleBoxes { r, big_r });
    }
    let half = 2.0 * r + 1.0;
    let spacing = v.spacing();
    let k_max = ((big_r + r) / (2.0 * r)).floor() as i64;

    let centers: Vec<f64> = (-k_max..=k_max).map(|k| k as f64 * 2.0 * r).collect();
    let per_box: Vec<BoxEigen> = centers
        .par_iter()
        .map(|&z| {
            let lo = (z - half).max(v.a);
            let hi = (z + half).min(v.b);
            let clipped = lo > z - half || hi < z + half;
            // interior nodes of the data grid strictly inside the box; the
            // Dirichlet walls sit one spacing beyond the end nodes
            let mut x_first = f64::NAN;
            let mut x_last = f64::NAN;
            let mut nodes = Vec::new();
            for (x, &val) in v.nodes().zip(v.values.iter()) {
                if x > lo && x < hi {
                    if nodes.is_empty() {
                        x_first = x;
                    }
                    x_last = x;
                    nodes.push(val);
                }
            }
            let n = nodes.len();
            if n < 4 {
                return BoxEigen { z, lambda: f64::INFINITY, clipped, n_grid: n };
            }
            let sub = Potential { a: x_first - spacing, b: x_last + spacing, values: nodes };
            let lambda = principal_eigenvalue(&sub, n.max(16).min(4096))
                .map(|e| e.lambda)
                .unwrap_or(f64::INFINITY);
            BoxEigen { z, lambda, clipped, n_grid: n }
        })
        .collect();

    let mut best: Option<&BoxEigen> = None;
    for b in &per_box {
        if b.clipped && !include_clipped {
            continue;
        }
        if best.map(|c| b.lambda < c.lambda).unwrap_or(true) {
            best = Some(b);
        }
    }
    let best = best.ok_or(SchrodingerError::NoAdmissibleBoxes { r, big_r })?;
    Ok(SubBoxScan { min_lambda: best.lambda, argmin_z: best.z, per_box })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_potential_gives_equal_boxes() {
        let v = Potential::zero(-40.0, 40.0, 3199);
        let scan = min_subbox_eigenvalue(&v, 2.0, false).unwrap();
        let unclipped: Vec<&BoxEigen> =
            scan.per_box.iter().filter(|b| !b.clipped).collect();
        assert!(unclipped.len() >= 3);
        for b in &unclipped {
            assert!(
                (b.lambda - unclipped[0].lambda).abs() < 1e-10,
                "translation invariance: {} vs {}",
                b.lambda,
                unclipped[0].lambda
            );
        }
        // π²/(8 (2r+1)²) with 2r+1 = 5
        let expect = std::f64::consts::PI.powi(2) / (8.0 * 25.0);
        assert!((scan.min_lambda - expect).abs() < 1e-3, "min {}", scan.min_lambda);
    }

    #[test]
    fn domain_monotonicity_against_full_window() {
        let v = Potential::from_fn(-30.0, 30.0, 2400, |x| (0.7 * x).sin() * (0.13 * x).cos());
        let scan = min_subbox_eigenvalue(&v, 2.0, false).unwrap();
        let full = principal_eigenvalue(&v, 2400).unwrap().lambda;
        assert!(
            full <= scan.min_lambda + 1e-9,
            "λ(full) = {full} must not exceed box minimum {}",
            scan.min_lambda
        );
    }

    #[test]
    fn deep_well_pins_the_argmin() {
        let z_star = 8.0;
        let v = Potential::from_fn(-30.0, 30.0, 2400, move |x| {
            5.0 * (-(x - z_star) * (x - z_star)).exp()
        });
        let scan = min_subbox_eigenvalue(&v, 2.0, false).unwrap();
        assert_eq!(scan.argmin_z, 8.0, "well at {z_star} should select box z = 8");
    }

    #[test]
    fn too_small_window_is_rejected() {
        let v = Potential::zero(-3.0, 3.0, 240);
        assert!(matches!(
            min_subbox_eigenvalue(&v, 4.0, false),
            Err(SchrodingerError::NoAdmissibleBoxes { .. })
        ));
    }

    #[test]
    fn r_below_two_is_rejected() {
        let v = Potential::zero(-30.0, 30.0, 240);
        assert!(matches!(
            min_subbox_eigenvalue(&v, 1.0, false),
            Err(SchrodingerError::BadParams { .. })
        ));
    }
}
