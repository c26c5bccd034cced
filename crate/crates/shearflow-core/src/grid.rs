//! Uniform one-dimensional grids.

use serde::{Deserialize, Serialize};

/// A uniform grid `x_i = (offset_steps + i) * spacing`, `i = 0..len`.
///
/// Points are stored as step counts so that symmetric grids have exactly
/// mirrored points: `point(i) == -point(len - 1 - i)` holds bitwise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid1 {
    pub spacing: f64,
    pub offset_steps: f64,
    pub len: usize,
}

impl Grid1 {
    pub fn new(origin: f64, spacing: f64, len: usize) -> Self {
        assert!(spacing > 0.0 && len > 0, "degenerate grid");
        Grid1 { spacing, offset_steps: origin / spacing, len }
    }

    /// Symmetric grid on `[-half_width, half_width]` with the half width
    /// snapped to a whole number of spacings.
    pub fn symmetric(half_width: f64, spacing: f64) -> Self {
        assert!(half_width > 0.0 && spacing > 0.0);
        let n_half = (half_width / spacing).round().max(1.0) as usize;
        Grid1 { spacing, offset_steps: -(n_half as f64), len: 2 * n_half + 1 }
    }

    pub fn origin(&self) -> f64 {
        self.offset_steps * self.spacing
    }

    #[inline]
    pub fn point(&self, i: usize) -> f64 {
        (self.offset_steps + i as f64) * self.spacing
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len).map(move |i| self.point(i))
    }

    pub fn last(&self) -> f64 {
        self.point(self.len - 1)
    }

    /// Total covered length.
    pub fn extent(&self) -> f64 {
        self.spacing * (self.len - 1) as f64
    }

    /// Linear interpolation of `values` at `x`; clamps outside the grid and
    /// reports whether clamping happened.
    pub fn sample_linear(&self, values: &[f64], x: f64) -> (f64, bool) {
        debug_assert_eq!(values.len(), self.len);
        let t = x / self.spacing - self.offset_steps;
        if t <= 0.0 {
            return (values[0], t < 0.0);
        }
        let max = (self.len - 1) as f64;
        if t >= max {
            return (values[self.len - 1], t > max);
        }
        let i = t.floor() as usize;
        let w = t - i as f64;
        (values[i] * (1.0 - w) + values[i + 1] * w, false)
    }
}
