use std::ops::Index;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::MeasuredPointCloud;

/// Real values sampled on the points of a cloud.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ScalarField(Vec<f64>);

impl ScalarField {
    /// Wraps `values`, rejecting non-finite entries.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(ScalarField(values))
    }

    /// Wraps `values` and checks the length against `cloud`.
    pub fn on(cloud: &MeasuredPointCloud, values: Vec<f64>) -> Result<Self> {
        let f = Self::new(values)?;
        cloud.check_field(&f)?;
        Ok(f)
    }

    pub fn constant(cloud: &MeasuredPointCloud, c: f64) -> Self {
        ScalarField(vec![c; cloud.len()])
    }

    pub fn zeros(n: usize) -> Self {
        ScalarField(vec![0.0; n])
    }

    /// Evaluates `f` at the coordinates of each point.
    pub fn from_coords(cloud: &MeasuredPointCloud, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(cloud.len());
        for i in 0..cloud.len() {
            let p = cloud
                .coords(i)
                .ok_or_else(|| Error::InvalidParameter("cloud has no coordinates".into()))?;
            values.push(f(p));
        }
        Self::new(values)
    }

    pub fn from_ids(cloud: &MeasuredPointCloud, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new((0..cloud.len()).map(f).collect())
    }

    /// Indicator of a single point, scaled by `height`.
    pub fn spike(cloud: &MeasuredPointCloud, at: usize, height: f64) -> Self {
        let mut v = vec![0.0; cloud.len()];
        v[at] = height;
        ScalarField(v)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField(self.0.iter().map(|&v| f(v)).collect())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.map(|v| s * v)
    }

    pub fn shifted(&self, c: f64) -> Self {
        self.map(|v| v + c)
    }

    /// `a * self + b * other`.
    pub fn axpby(&self, a: f64, other: &ScalarField, b: f64) -> Self {
        ScalarField(self.0.iter().zip(&other.0).map(|(x, y)| a * x + b * y).collect())
    }

    /// `min(max(f, 0), 1)`.
    pub fn unit_truncation(&self) -> Self {
        self.map(|v| v.clamp(0.0, 1.0))
    }

    pub fn min(&self) -> f64 {
        self.0.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// True when all values agree up to `tol` relative to the largest magnitude.
    pub fn is_constant(&self, tol: f64) -> bool {
        let spread = self.max() - self.min();
        spread <= tol * self.sup_norm().max(f64::MIN_POSITIVE)
    }
}

impl Index<usize> for ScalarField {
    type Output = f64;
    #[inline]
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}
