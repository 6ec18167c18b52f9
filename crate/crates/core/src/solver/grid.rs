use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseGrid;

/// Periodic grid `[-L, L)` with `n_x` cells and `n_t` time steps on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub half_width: f64,
    pub n_x: usize,
    pub horizon: f64,
    pub n_t: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            half_width: 16.0,
            n_x: 256,
            horizon: 1.0,
            n_t: 100,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return Err(Error::Config(format!("grid half width must be positive, got {}", self.half_width)));
        }
        if self.n_x < 2 || !self.n_x.is_power_of_two() {
            return Err(Error::Config(format!("n_x must be a power of two >= 2, got {}", self.n_x)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) || self.n_t == 0 {
            return Err(Error::Config("grid needs T > 0 and n_t >= 1".into()));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.n_x as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n_t as f64
    }

    /// Cell centres `-L + (j + 1/2) dx`, symmetric about 0.
    pub fn centers(&self) -> Vec<f64> {
        let dx = self.dx();
        (0..self.n_x).map(|j| -self.half_width + (j as f64 + 0.5) * dx).collect()
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    /// Warning when `L < 4 T^{1/alpha}`; heavy tails then wrap noticeably.
    pub fn containment_warning(&self, alpha: f64) -> Option<String> {
        let need = 4.0 * self.horizon.powf(1.0 / alpha);
        (self.half_width < need).then(|| {
            format!("half width {} is below 4 T^(1/alpha) = {need}; wrap-around of the kernel tails is not negligible", self.half_width)
        })
    }

    pub fn noise_grid(&self, seed: u64, replica_index: u64) -> NoiseGrid {
        NoiseGrid {
            dt: self.dt(),
            dx: self.dx(),
            n_t: self.n_t,
            n_x: self.n_x,
            seed,
            replica_index,
        }
    }
}
