//! Korevaar-Schoen energies
//!
//! `E_{d_w/2,U}(f, r) = sum_{x in U} mu_x (1 / mu(B(x,r))) sum_{y in B(x,r)} mu_y |f_x - f_y|^2 / r^{d_w}`
//!
//! together with multiscale sweeps, their `r -> 0` proxies and walk-dimension
//! fits from the raw (unnormalized) nonlocal sums.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::scales::ScaleGrid;
use crate::space::MeasuredPointCloud;
use crate::stats::{fit_line, fit_line_weighted, median};

/// Relative size of the division floor used by ratio diagnostics.
pub const FLOOR_FACTOR: f64 = 1e-14;

/// Set of centers an energy is summed over.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    All,
    Ids(Vec<usize>),
}

impl Region {
    fn ids(&self, n: usize) -> Vec<usize> {
        match self {
            Region::All => (0..n).collect(),
            Region::Ids(v) => v.clone(),
        }
    }

    fn check(&self, n: usize) -> Result<()> {
        if let Region::Ids(v) = self {
            if let Some(&bad) = v.iter().find(|&&i| i >= n) {
                return Err(Error::InvalidParameter(format!("region id {bad} out of range")));
            }
        }
        Ok(())
    }
}

/// `(1 / mu(B(x,r))) sum_{y in B(x,r)} mu_y |f_x - f_y|^2`, no scale normalization.
#[inline]
pub(crate) fn ball_oscillation(cloud: &MeasuredPointCloud, f: &ScalarField, x: usize, r: f64) -> f64 {
    let w = cloud.weights();
    let fx = f[x];
    let (mut acc, mut mass) = (0.0, 0.0);
    cloud.for_each_in_ball(x, r, |y, _| {
        let d = fx - f[y];
        acc += w[y] * d * d;
        mass += w[y];
    });
    acc / mass
}

/// Per-center contributions `mu_x * ball_oscillation(x) / r^{d_w}` for the
/// listed centers, computed in parallel and returned in input order.
pub(crate) fn energy_terms(cloud: &MeasuredPointCloud, f: &ScalarField, r: f64, d_w: f64, centers: &[usize]) -> Vec<f64> {
    let norm = r.powf(-d_w);
    let w = cloud.weights();
    centers
        .par_iter()
        .map(|&x| w[x] * ball_oscillation(cloud, f, x, r) * norm)
        .collect()
}

/// Energy density of every point: `mu_x * ball_oscillation(x) / r^{d_w}`.
pub fn energy_density(cloud: &MeasuredPointCloud, f: &ScalarField, r: f64, d_w: f64) -> Result<Vec<f64>> {
    check_inputs(cloud, f, r, d_w)?;
    let all: Vec<usize> = (0..cloud.len()).collect();
    Ok(energy_terms(cloud, f, r, d_w, &all))
}

fn check_inputs(cloud: &MeasuredPointCloud, f: &ScalarField, r: f64, d_w: f64) -> Result<()> {
    cloud.check_field(f)?;
    cloud.require_admissible(r)?;
    if !(d_w >= 2.0 && d_w.is_finite()) {
        return Err(Error::InvalidParameter(format!("walk dimension {d_w} < 2")));
    }
    Ok(())
}

/// `E_{d_w/2,U}(f, r)`. Refuses scales below the admissibility floor.
pub fn ks_energy(cloud: &MeasuredPointCloud, f: &ScalarField, r: f64, d_w: f64, region: &Region) -> Result<f64> {
    check_inputs(cloud, f, r, d_w)?;
    region.check(cloud.len())?;
    let terms = energy_terms(cloud, f, r, d_w, &region.ids(cloud.len()));
    Ok(terms.iter().sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepProxies {
    /// Min over the window of smallest admissible scales.
    pub liminf_proxy: f64,
    /// Max over the same window.
    pub limsup_proxy: f64,
    pub sup_all: f64,
    /// Intercept at `r = 0` of the line `E ~ a + b r` fitted to every
    /// admissible scale with weights `r`, clamped at zero.
    pub fitted_limit: f64,
    /// Log-log slope of `E` against `r` over the window (0 if some `E` is 0).
    pub log_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergySweep {
    pub d_w: f64,
    pub region: Region,
    /// Admissible scales, descending.
    pub scales: Vec<f64>,
    pub values: Vec<f64>,
    /// Index of the first scale in the limit window.
    pub window_start: usize,
    pub proxies: SweepProxies,
    /// `sum_i mu_i f_i^2`, kept for the comparability floor.
    pub l2_norm_sq: f64,
    pub grid: ScaleGrid,
    pub kappa: f64,
    /// Scales of the grid dropped as inadmissible.
    pub dropped: usize,
}

impl EnergySweep {
    pub fn window(&self) -> &[f64] {
        &self.values[self.window_start..]
    }

    pub fn window_scales(&self) -> &[f64] {
        &self.scales[self.window_start..]
    }

    pub fn r_min(&self) -> f64 {
        *self.scales.last().expect("sweep is never empty")
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "r,energy")?;
        for (r, e) in self.scales.iter().zip(&self.values) {
            writeln!(out, "{r:e},{e:e}")?;
        }
        Ok(())
    }
}

/// Window proxies of a descending list of energies.
pub(crate) fn proxies_of(scales: &[f64], values: &[f64], window: usize) -> (usize, SweepProxies) {
    let start = values.len().saturating_sub(window);
    let win = &values[start..];
    let win_r = &scales[start..];
    let liminf_proxy = win.iter().cloned().fold(f64::INFINITY, f64::min);
    let limsup_proxy = win.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sup_all = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    // Lattice jitter of small balls scales like h / r, so the fit spans the
    // whole sweep and leans on the better resolved scales.
    let fitted_limit = if values.len() >= 2 {
        fit_line_weighted(scales, values, scales).intercept.max(0.0)
    } else {
        values[0]
    };
    let log_slope = if win.len() >= 2 && win.iter().all(|&e| e > 0.0) {
        let lx: Vec<f64> = win_r.iter().map(|r| r.ln()).collect();
        let ly: Vec<f64> = win.iter().map(|e| e.ln()).collect();
        fit_line(&lx, &ly).slope
    } else {
        0.0
    };
    (
        start,
        SweepProxies {
            liminf_proxy,
            limsup_proxy,
            sup_all,
            fitted_limit,
            log_slope,
        },
    )
}

/// Evaluates the energy on every admissible scale of `grid`.
pub fn energy_sweep(
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    d_w: f64,
    region: &Region,
    grid: &ScaleGrid,
) -> Result<EnergySweep> {
    let scales = grid.admissible(cloud);
    if scales.is_empty() {
        return Err(Error::EmptyScaleGrid);
    }
    let values = scales
        .iter()
        .map(|&r| ks_energy(cloud, f, r, d_w, region))
        .collect::<Result<Vec<_>>>()?;
    let (window_start, proxies) = proxies_of(&scales, &values, grid.window);
    Ok(EnergySweep {
        d_w,
        region: region.clone(),
        dropped: grid.count - scales.len(),
        scales,
        values,
        window_start,
        proxies,
        l2_norm_sq: cloud.l2_norm(f).powi(2),
        grid: *grid,
        kappa: cloud.kappa(),
    })
}

/// `sup_r E / max(liminf E, floor)` with
/// `floor = 1e-14 * ||f||^2 / r_min^{d_w}`; constant fields give 1.
pub fn comparability_ratio(sweep: &EnergySweep) -> Result<f64> {
    if sweep.scales.len() < 2 {
        return Err(Error::InvalidParameter("comparability needs at least two admissible scales".into()));
    }
    let floor = FLOOR_FACTOR * sweep.l2_norm_sq / sweep.r_min().powf(sweep.d_w);
    let p = &sweep.proxies;
    if p.sup_all <= floor {
        return Ok(1.0);
    }
    Ok(p.sup_all / p.liminf_proxy.max(floor))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkDimMethod {
    KsScaling,
    EigenRatio,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkDimFit {
    pub d_w_hat: f64,
    pub method: WalkDimMethod,
    pub residual: f64,
    /// `(r_min, r_max)` of the scales used, or mesh sizes for the eigen route.
    pub window: (f64, f64),
    /// Per-field slopes (or per-eigenvalue estimates).
    pub estimates: Vec<f64>,
}

/// Raw nonlocal sum `S(f, r) = sum_x mu_x (1/mu(B(x,r))) sum_{y in B(x,r)} mu_y |f_x - f_y|^2`.
pub fn raw_sum(cloud: &MeasuredPointCloud, f: &ScalarField, r: f64) -> Result<f64> {
    cloud.check_field(f)?;
    cloud.require_admissible(r)?;
    let all: Vec<usize> = (0..cloud.len()).collect();
    Ok(energy_terms(cloud, f, r, 0.0, &all).iter().sum())
}

/// Walk dimension as the median log-log slope of `S(f, r)` in `r` over the
/// admissible scales, one slope per nonconstant field.
pub fn fit_walk_dimension(cloud: &MeasuredPointCloud, fields: &[ScalarField], grid: &ScaleGrid) -> Result<WalkDimFit> {
    let scales = grid.admissible(cloud);
    if scales.len() < 3 {
        return Err(Error::InvalidParameter(format!(
            "walk-dimension fit needs 3 admissible scales, got {}",
            scales.len()
        )));
    }
    let lx: Vec<f64> = scales.iter().map(|r| r.ln()).collect();
    let mut slopes = Vec::new();
    for f in fields {
        cloud.check_field(f)?;
        if f.is_constant(1e-14) {
            continue;
        }
        let sums = scales.iter().map(|&r| raw_sum(cloud, f, r)).collect::<Result<Vec<_>>>()?;
        if sums.iter().any(|&s| s <= 0.0) {
            continue;
        }
        let ly: Vec<f64> = sums.iter().map(|s| s.ln()).collect();
        slopes.push(fit_line(&lx, &ly).slope);
    }
    if slopes.is_empty() {
        return Err(Error::AllFieldsConstant);
    }
    let d_w_hat = median(&slopes);
    let residual = slopes.iter().map(|s| (s - d_w_hat).abs()).fold(0.0, f64::max);
    Ok(WalkDimFit {
        d_w_hat,
        method: WalkDimMethod::KsScaling,
        residual,
        window: (*scales.last().unwrap(), scales[0]),
        estimates: slopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::SpaceSpec;

    #[test]
    fn constant_field_has_zero_energy() {
        let c = SpaceSpec::Gasket(3).build().unwrap();
        let f = ScalarField::constant(&c, 4.2);
        for r in [0.4, 0.5, 0.7] {
            for d_w in [2.0, 2.32] {
                assert_eq!(ks_energy(&c, &f, r, d_w, &Region::All).unwrap(), 0.0);
            }
        }
        let g = ScaleGrid::new(0.8, 0.8, 4, 3).unwrap();
        let s = energy_sweep(&c, &f, 2.0, &Region::All, &g).unwrap();
        assert!(s.values.iter().all(|&e| e == 0.0));
        assert_eq!(s.proxies.fitted_limit, 0.0);
        assert_eq!(comparability_ratio(&s).unwrap(), 1.0);
    }

    #[test]
    fn refuses_inadmissible_scale() {
        let c = SpaceSpec::IntervalGrid(101).build().unwrap();
        let f = ScalarField::from_coords(&c, |p| p[0]).unwrap();
        assert!(matches!(
            ks_energy(&c, &f, 0.02, 2.0, &Region::All),
            Err(Error::InadmissibleScale { .. })
        ));
        assert!(ks_energy(&c, &f, 0.1, 1.5, &Region::All).is_err());
    }

    #[test]
    fn identity_on_interval_matches_closed_form() {
        // int_0^1 avg_{B(x,r)} (x-y)^2 / r^2 dy dx = 1/3 - r/9
        let c = SpaceSpec::IntervalGrid(2001).build().unwrap();
        let f = ScalarField::from_coords(&c, |p| p[0]).unwrap();
        let r = 0.05;
        let e = ks_energy(&c, &f, r, 2.0, &Region::All).unwrap();
        let exact = 1.0 / 3.0 - r / 9.0;
        assert!((e - exact).abs() / exact < 0.01, "{e} vs {exact}");
    }

    #[test]
    fn spike_energy_blows_up() {
        let c = SpaceSpec::IntervalGrid(101).build().unwrap();
        let f = ScalarField::spike(&c, 50, 1.0);
        let g = ScaleGrid::spanning(0.3, 0.03, 8, 3).unwrap();
        let s = energy_sweep(&c, &f, 2.0, &Region::All, &g).unwrap();
        assert!(s.proxies.limsup_proxy > 10.0 * s.values[0]);
        assert!(s.values.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn comparability_needs_two_scales() {
        let c = SpaceSpec::IntervalGrid(101).build().unwrap();
        let f = ScalarField::from_coords(&c, |p| p[0]).unwrap();
        let g = ScaleGrid::new(0.1, 0.5, 1, 1).unwrap();
        let s = energy_sweep(&c, &f, 2.0, &Region::All, &g).unwrap();
        assert!(comparability_ratio(&s).is_err());
    }

    #[test]
    fn walk_dimension_rejects_constant_fields() {
        let c = SpaceSpec::IntervalGrid(101).build().unwrap();
        let g = ScaleGrid::spanning(0.2, 0.04, 4, 3).unwrap();
        let err = fit_walk_dimension(&c, &[ScalarField::constant(&c, 1.0)], &g).unwrap_err();
        assert!(matches!(err, Error::AllFieldsConstant));
    }
}
