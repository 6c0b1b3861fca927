//! Empirical 2-Poincare constants, the localized maximal function and its
//! weak-L^2 and telescoping estimates.
//!
//! The left-hand side of every Poincare sample is the ball variance
//! `sum_{y in B} mu_y |f_y - f_B|^2`. Right-hand sides:
//!
//! * `Lip`: `R^2 sum_{y in lambda B} mu_y (Lip_h f(y))^2`
//! * `Ks`: `R^{d_w}` times the liminf proxy of `E_{d_w/2, lambda B}(f, .)`
//! * `EnergyMeasure`: `R^{d_w} Gamma(f, f)(lambda B)` from a graph form

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_density, energy_sweep, Region, FLOOR_FACTOR};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::graphform::{energy_measure, GraphDirichletForm};
use crate::scales::ScaleGrid;
use crate::smoothing::discrete_lip;
use crate::space::MeasuredPointCloud;

pub const DEFAULT_LAMBDA: f64 = 2.0;
pub const DEFAULT_CENTERS: usize = 50;
pub const RADII_PER_DECADE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareMode {
    Lip,
    Ks,
    EnergyMeasure,
}

impl std::str::FromStr for PoincareMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lip" => Ok(PoincareMode::Lip),
            "ks" => Ok(PoincareMode::Ks),
            "energy_measure" => Ok(PoincareMode::EnergyMeasure),
            other => Err(Error::InvalidParameter(format!("unknown Poincare mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareSample {
    pub center: usize,
    pub r: f64,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs / rhs`, absent when `rhs` is below the floor.
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareReport {
    pub mode: PoincareMode,
    pub d_w: f64,
    pub lambda: f64,
    pub samples: Vec<PoincareSample>,
    pub c_best: f64,
}

impl PoincareReport {
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "center,R,lhs,rhs,ratio")?;
        for s in &self.samples {
            let ratio = s.ratio.map(|q| format!("{q:e}")).unwrap_or_default();
            writeln!(out, "{},{:e},{:e},{:e},{ratio}", s.center, s.r, s.lhs, s.rhs)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareOptions {
    pub mode: PoincareMode,
    pub d_w: f64,
    pub lambda: f64,
    /// Scale grid whose window defines the liminf proxy in `Ks` mode;
    /// defaults to the cloud's grid.
    pub grid: Option<ScaleGrid>,
}

impl PoincareOptions {
    pub fn new(mode: PoincareMode, d_w: f64) -> Self {
        PoincareOptions {
            mode,
            d_w,
            lambda: DEFAULT_LAMBDA,
            grid: None,
        }
    }
}

/// Seeded ball samples: `centers` random points, radii `R_max 10^{-k/4}` from
/// `R_max = diam / (2 lambda)` down to the admissibility floor. With
/// `interior` set, balls whose inflation leaves the hull are skipped.
pub fn sample_balls(
    cloud: &MeasuredPointCloud,
    centers: usize,
    lambda: f64,
    interior: bool,
    seed: u64,
) -> Vec<(usize, f64)> {
    let n = cloud.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<usize> = if centers >= n {
        (0..n).collect()
    } else {
        sample(&mut rng, n, centers).into_vec()
    };
    ids.sort_unstable();
    let r_max = cloud.diameter() / (2.0 * lambda);
    let step = 10f64.powf(-1.0 / RADII_PER_DECADE as f64);
    let mut radii = Vec::new();
    let mut r = r_max;
    while r >= cloud.min_scale() {
        radii.push(r);
        r *= step;
    }
    let mut out = Vec::new();
    for &x in &ids {
        for &r in &radii {
            if !interior || cloud.ball_inside_hull(x, lambda * r) {
                out.push((x, r));
            }
        }
    }
    out
}

fn ball_variance(cloud: &MeasuredPointCloud, f: &ScalarField, x: usize, r: f64) -> f64 {
    let b = cloud.ball(x, r);
    let avg = cloud.ball_average(f, &b);
    b.members.iter().map(|&y| cloud.weight(y) * (f[y] - avg).powi(2)).sum()
}

/// Empirical constant of the 2-Poincare inequality over the given balls.
pub fn poincare_check(
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    opts: &PoincareOptions,
    balls: &[(usize, f64)],
    form: Option<&GraphDirichletForm>,
) -> Result<PoincareReport> {
    cloud.check_field(f)?;
    let lambda = opts.lambda;
    if !(lambda >= 1.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("inflation factor {lambda} < 1")));
    }
    let r_top = cloud.diameter() / (2.0 * lambda);
    for &(x, r) in balls {
        if x >= cloud.len() {
            return Err(Error::InvalidParameter(format!("center {x} out of range")));
        }
        cloud.require_admissible(r)?;
        if r > r_top * (1.0 + 1e-12) {
            return Err(Error::InvalidParameter(format!("radius {r} exceeds diam/(2 lambda) = {r_top}")));
        }
    }
    // per-point density whose sums over inflated balls give the rhs
    let (density, scaled): (Vec<Vec<f64>>, bool) = match opts.mode {
        PoincareMode::Lip => {
            let lip = discrete_lip(cloud, f, cloud.min_scale())?;
            (vec![(0..cloud.len()).map(|y| cloud.weight(y) * lip[y] * lip[y]).collect()], false)
        }
        PoincareMode::Ks => {
            let grid = opts.grid.unwrap_or_else(|| ScaleGrid::default_for(cloud));
            let window = grid.window_scales(cloud)?;
            let dens = window
                .iter()
                .map(|&r| energy_density(cloud, f, r, opts.d_w))
                .collect::<Result<Vec<_>>>()?;
            (dens, true)
        }
        PoincareMode::EnergyMeasure => {
            let form = form.ok_or(Error::MissingForm)?;
            if form.len() != cloud.len() {
                return Err(Error::InvalidParameter("form and cloud sizes differ".into()));
            }
            (vec![energy_measure(form, f)?.density], true)
        }
    };
    let exponent = if scaled { opts.d_w } else { 2.0 };
    let floor = FLOOR_FACTOR * cloud.l2_norm(f).powi(2);
    let samples: Vec<PoincareSample> = balls
        .par_iter()
        .map(|&(x, r)| {
            let lhs = ball_variance(cloud, f, x, r);
            let inflated = cloud.ball(x, lambda * r);
            // liminf proxy: smallest value over the window
            let mass = density
                .iter()
                .map(|d| inflated.members.iter().map(|&y| d[y]).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let rhs = r.powf(exponent) * mass;
            let ratio = (rhs > floor).then(|| lhs / rhs);
            PoincareSample {
                center: x,
                r,
                lhs,
                rhs,
                ratio,
            }
        })
        .collect();
    let c_best = samples.iter().filter_map(|s| s.ratio).fold(0.0, f64::max);
    Ok(PoincareReport {
        mode: opts.mode,
        d_w: opts.d_w,
        lambda,
        samples,
        c_best,
    })
}

/// `M_R f` on every point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaximalField {
    pub r: f64,
    pub values: Vec<f64>,
}

impl MaximalField {
    pub fn max(&self) -> f64 {
        self.values.iter().cloned().fold(0.0, f64::max)
    }
}

/// Fixed radius grid for maximal functions: `(diam/2) 2^{-k/2}` down to the
/// admissibility floor, descending.
pub fn radius_grid(cloud: &MeasuredPointCloud) -> Vec<f64> {
    let mut out = Vec::new();
    let mut r = cloud.diameter() / 2.0;
    while r >= cloud.min_scale() {
        out.push(r);
        r *= std::f64::consts::FRAC_1_SQRT_2;
    }
    out
}

/// Precomputed window densities shared by maximal-function evaluations.
struct WindowDensity {
    dens: Vec<Vec<f64>>,
}

impl WindowDensity {
    fn new(cloud: &MeasuredPointCloud, f: &ScalarField, d_w: f64, grid: &ScaleGrid) -> Result<Self> {
        let window = grid.window_scales(cloud)?;
        let dens = window
            .iter()
            .map(|&r| energy_density(cloud, f, r, d_w))
            .collect::<Result<Vec<_>>>()?;
        Ok(WindowDensity { dens })
    }

    /// `sup_{rho in radii, rho < r} [liminf E_{B(x,rho)} / mu(B(x,rho))]^{1/2}`.
    fn at(&self, cloud: &MeasuredPointCloud, x: usize, r: f64, radii: &[f64]) -> f64 {
        radii
            .iter()
            .filter(|&&rho| rho < r)
            .map(|&rho| {
                let b = cloud.ball(x, rho);
                let e = self
                    .dens
                    .iter()
                    .map(|d| b.members.iter().map(|&y| d[y]).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                (e / b.mass).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

fn admissible_radii(cloud: &MeasuredPointCloud, radii: &[f64], r: f64) -> Result<Vec<f64>> {
    let kept: Vec<f64> = radii
        .iter()
        .copied()
        .filter(|&rho| cloud.is_admissible(rho) && rho < r)
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyScaleGrid);
    }
    Ok(kept)
}

/// `M_R f(x) = sup_{rho < R} [ liminf E_{d_w/2, B(x,rho)}(f, .) / mu(B(x,rho)) ]^{1/2}`
/// over the admissible `radii`; the liminf is the window proxy of `grid`.
pub fn maximal_function(
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    r: f64,
    d_w: f64,
    radii: &[f64],
    grid: &ScaleGrid,
) -> Result<MaximalField> {
    cloud.check_field(f)?;
    let radii = admissible_radii(cloud, radii, r)?;
    let wd = WindowDensity::new(cloud, f, d_w, grid)?;
    let values = (0..cloud.len())
        .into_par_iter()
        .map(|x| wd.at(cloud, x, r, &radii))
        .collect();
    Ok(MaximalField { r, values })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakL2Report {
    pub thresholds: Vec<f64>,
    /// `mu{M_R f > t} t^2 / E` per threshold.
    pub quotients: Vec<f64>,
    pub max_quotient: f64,
    /// Liminf proxy of the global energy.
    pub energy: f64,
}

/// Geometric thresholds from `max M / 1000` up to `max M`.
pub fn default_thresholds(maximal: &MaximalField) -> Vec<f64> {
    let top = maximal.max();
    if top == 0.0 {
        return vec![1.0];
    }
    (0..=24).map(|k| top * 10f64.powf(-3.0 + k as f64 / 8.0)).collect()
}

pub fn weak_l2_check(
    cloud: &MeasuredPointCloud,
    maximal: &MaximalField,
    f: &ScalarField,
    d_w: f64,
    thresholds: &[f64],
    grid: &ScaleGrid,
) -> Result<WeakL2Report> {
    if maximal.values.len() != cloud.len() {
        return Err(Error::InvalidParameter("maximal field does not match the cloud".into()));
    }
    if thresholds.is_empty() || thresholds.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidParameter("thresholds must be positive".into()));
    }
    let energy = energy_sweep(cloud, f, d_w, &Region::All, grid)?.proxies.liminf_proxy;
    if energy == 0.0 && maximal.max() > 0.0 {
        return Err(Error::InconsistentOracle);
    }
    let quotients: Vec<f64> = thresholds
        .iter()
        .map(|&t| {
            let level: f64 = maximal
                .values
                .iter()
                .zip(cloud.weights())
                .filter(|(m, _)| **m > t)
                .map(|(_, w)| w)
                .sum();
            if level == 0.0 {
                0.0
            } else {
                level * t * t / energy
            }
        })
        .collect();
    let max_quotient = quotients.iter().cloned().fold(0.0, f64::max);
    Ok(WeakL2Report {
        thresholds: thresholds.to_vec(),
        quotients,
        max_quotient,
        energy,
    })
}

/// Reported constant above which the telescoping estimate counts as failed.
pub const TELESCOPE_C: f64 = 4.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelescopingReport {
    /// `|f_{B(x,rho)} - f_{B(x,rho_min)}|`.
    pub lhs: f64,
    /// `rho^{d_w/2} M_{lambda rho} f(x)`.
    pub rhs: f64,
    pub c_report: f64,
    /// Dyadic radii `rho, rho/2, ..., rho_min`.
    pub chain: Vec<f64>,
    pub ok: bool,
}

/// Dyadic-chain estimate of `|f_{B(x,rho)} - f(x)|`, with `f(x)` replaced by
/// the average over the smallest admissible ball of the chain.
pub fn telescoping_bound(
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    x: usize,
    rho: f64,
    d_w: f64,
    lambda: f64,
    grid: &ScaleGrid,
) -> Result<TelescopingReport> {
    cloud.check_field(f)?;
    if x >= cloud.len() {
        return Err(Error::InvalidParameter(format!("center {x} out of range")));
    }
    if !(lambda >= 1.0) {
        return Err(Error::InvalidParameter(format!("inflation factor {lambda} < 1")));
    }
    if rho < 4.0 * cloud.min_scale() {
        return Err(Error::InadmissibleScale {
            r: rho,
            min: 4.0 * cloud.min_scale(),
        });
    }
    let mut chain = vec![rho];
    while chain.last().unwrap() / 2.0 >= cloud.min_scale() {
        chain.push(chain.last().unwrap() / 2.0);
    }
    let lhs = (cloud.average_over(f, x, rho) - cloud.average_over(f, x, *chain.last().unwrap())).abs();
    let wd = WindowDensity::new(cloud, f, d_w, grid)?;
    let radii = admissible_radii(cloud, &radius_grid(cloud), lambda * rho)?;
    let m = wd.at(cloud, x, lambda * rho, &radii);
    let rhs = rho.powf(d_w / 2.0) * m;
    let c_report = if lhs == 0.0 {
        0.0
    } else if rhs == 0.0 {
        f64::INFINITY
    } else {
        lhs / rhs
    };
    Ok(TelescopingReport {
        lhs,
        rhs,
        c_report,
        chain,
        ok: c_report <= TELESCOPE_C,
    })
}
