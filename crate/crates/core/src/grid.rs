use serde::{Deserialize, Serialize};

use crate::error::{GmeError, Result};

/// Uniform time grid `t_i = i * dt`, `i = 0..=n_steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    t_max: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t_max: f64, n_steps: usize) -> Result<Self> {
        if !(t_max.is_finite() && t_max > 0.0) {
            return Err(GmeError::InvalidParameter(format!(
                "t_max must be positive, got {t_max}"
            )));
        }
        if n_steps == 0 {
            return Err(GmeError::InvalidParameter("n_steps must be at least 1".into()));
        }
        Ok(Self { t_max, n_steps })
    }

    /// Grid with spacing as close as possible to (and not above) `dt`.
    pub fn with_spacing(t_max: f64, dt: f64) -> Result<Self> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(GmeError::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        let n_steps = (t_max / dt - 1e-9).ceil().max(1.0) as usize;
        Self::new(t_max, n_steps)
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_steps as f64
    }

    /// Number of grid points (`n_steps + 1`).
    pub fn len(&self) -> usize {
        self.n_steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.time(i)).collect()
    }

    /// Index of the grid point at `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let x = t / self.dt();
        let i = x.round();
        if i < 0.0 || i as usize >= self.len() || (x - i).abs() > 1e-9 * x.abs().max(1.0) {
            return None;
        }
        Some(i as usize)
    }

    /// Composite trapezoid weight of node `a` for the integral over `[0, t_upper]`.
    #[inline]
    pub fn trapezoid_weight(&self, upper: usize, a: usize) -> f64 {
        if upper == 0 || a > upper {
            0.0
        } else if a == 0 || a == upper {
            0.5 * self.dt()
        } else {
            self.dt()
        }
    }

    /// Same grid halved in spacing.
    pub fn refined(&self) -> Self {
        Self { t_max: self.t_max, n_steps: 2 * self.n_steps }
    }
}
