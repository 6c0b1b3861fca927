use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::MeasuredPointCloud;

/// Descending geometric grid `r_k = r_max * ratio^k`, `k = 0..count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub r_max: f64,
    pub ratio: f64,
    pub count: usize,
    /// Number of smallest admissible scales standing in for `r -> 0`.
    pub window: usize,
}

pub const DEFAULT_RATIO: f64 = std::f64::consts::FRAC_1_SQRT_2;
pub const DEFAULT_COUNT: usize = 12;
pub const DEFAULT_WINDOW: usize = 3;

impl ScaleGrid {
    pub fn new(r_max: f64, ratio: f64, count: usize, window: usize) -> Result<Self> {
        if !(r_max > 0.0 && r_max.is_finite()) {
            return Err(Error::InvalidParameter(format!("r_max = {r_max}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::InvalidParameter(format!("scale ratio {ratio} not in (0, 1)")));
        }
        if count == 0 || window == 0 {
            return Err(Error::InvalidParameter("scale count and window must be positive".into()));
        }
        Ok(ScaleGrid {
            r_max,
            ratio,
            count,
            window,
        })
    }

    /// `r_max = diam / 4`, ratio `2^{-1/2}`, 12 scales, window 3.
    pub fn default_for(cloud: &MeasuredPointCloud) -> Self {
        ScaleGrid {
            r_max: cloud.diameter() / 4.0,
            ratio: DEFAULT_RATIO,
            count: DEFAULT_COUNT,
            window: DEFAULT_WINDOW,
        }
    }

    /// Grid spanning `[r_min, r_max]` with `count` scales.
    pub fn spanning(r_max: f64, r_min: f64, count: usize, window: usize) -> Result<Self> {
        if count < 2 || !(r_min > 0.0 && r_min < r_max) {
            return Err(Error::InvalidParameter(format!("cannot span [{r_min}, {r_max}] with {count} scales")));
        }
        let ratio = (r_min / r_max).powf(1.0 / (count - 1) as f64);
        Self::new(r_max, ratio, count, window)
    }

    pub fn scales(&self) -> Vec<f64> {
        (0..self.count).map(|k| self.r_max * self.ratio.powi(k as i32)).collect()
    }

    /// Scales at or above the admissibility floor of `cloud`.
    pub fn admissible(&self, cloud: &MeasuredPointCloud) -> Vec<f64> {
        self.scales().into_iter().filter(|&r| cloud.is_admissible(r)).collect()
    }

    /// The `window` smallest admissible scales.
    pub fn window_scales(&self, cloud: &MeasuredPointCloud) -> Result<Vec<f64>> {
        let adm = self.admissible(cloud);
        if adm.is_empty() {
            return Err(Error::EmptyScaleGrid);
        }
        let start = adm.len().saturating_sub(self.window);
        Ok(adm[start..].to_vec())
    }
}
