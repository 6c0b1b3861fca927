//! Heat kernels from eigenexpansions and the exponent fits built on them.

use serde::{Deserialize, Serialize};

use super::{spectrum, FormKind, GraphDirichletForm, Spectrum, SpectrumOptions};
use crate::energy::{WalkDimFit, WalkDimMethod};
use crate::error::{Error, Result};
use crate::space::MeasuredPointCloud;
use crate::stats::fit_line;

/// Default for [`TimeWindow::tail_cutoff`].
pub const TAIL_CUTOFF: f64 = 0.1;

fn check_time(t: f64) -> Result<()> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("heat time must be positive, got {t}")));
    }
    Ok(())
}

/// `p_t(x, y) = sum_k exp(-lambda_k t) u_k(x) u_k(y)`, the kernel with respect to `mu`.
pub fn heat_kernel(spec: &Spectrum, t: f64, x: usize, y: usize) -> Result<f64> {
    check_time(t)?;
    let n = spec.measure.len();
    if x >= n || y >= n {
        return Err(Error::InvalidParameter(format!("vertex out of range ({x}, {y})")));
    }
    Ok(spec
        .eigenvalues
        .iter()
        .zip(&spec.vectors)
        .map(|(l, u)| (-l * t).exp() * u[x] * u[y])
        .sum())
}

/// `y -> p_t(x, y)` for all `y`.
pub fn heat_kernel_row(spec: &Spectrum, t: f64, x: usize) -> Result<Vec<f64>> {
    check_time(t)?;
    let n = spec.measure.len();
    if x >= n {
        return Err(Error::InvalidParameter(format!("vertex {x} out of range")));
    }
    let mut row = vec![0.0; n];
    for (l, u) in spec.eigenvalues.iter().zip(&spec.vectors) {
        let w = (-l * t).exp() * u[x];
        for (r, v) in row.iter_mut().zip(u) {
            *r += w * v;
        }
    }
    Ok(row)
}

/// Distance used for the off-diagonal term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMetric {
    /// The metric of the cloud.
    #[default]
    Cloud,
    /// Hop count in the form's graph times its mesh size.
    Geodesic,
}

/// Log-spaced sampling times and sample filters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub t_min: f64,
    pub t_max: f64,
    pub count: usize,
    /// Off-diagonal samples below this fraction of `p_t(x, x)` are dropped:
    /// far in the tail the graph kernel decays like a Poisson law.
    pub tail_cutoff: f64,
    pub metric: PairMetric,
}

impl TimeWindow {
    pub fn times(&self) -> Vec<f64> {
        let (a, b) = (self.t_min.ln(), self.t_max.ln());
        (0..self.count)
            .map(|k| (a + (b - a) * k as f64 / (self.count - 1) as f64).exp())
            .collect()
    }

    fn validate(&self, spec: &Spectrum) -> Result<()> {
        if !(self.t_min > 0.0 && self.t_min < self.t_max && self.t_max.is_finite()) || self.count < 2 {
            return Err(Error::InvalidParameter(format!(
                "time window needs 0 < t_min < t_max and 2 samples, got {self:?}"
            )));
        }
        if !(0.0..1.0).contains(&self.tail_cutoff) {
            return Err(Error::InvalidParameter(format!("tail cutoff {} outside [0, 1)", self.tail_cutoff)));
        }
        let top = *spec.eigenvalues.last().unwrap();
        // a truncated expansion must be negligible beyond its last mode
        if !spec.complete && self.t_min * top < 10.0 {
            return Err(Error::InvalidParameter(format!(
                "t_min = {} too small for a spectrum truncated at lambda = {top:e}",
                self.t_min
            )));
        }
        if let Some(gap) = spec.gap() {
            if self.t_max * gap > 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "t_max = {} saturates at the constant mode (lambda_1 = {gap:e})",
                    self.t_max
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatKernelFit {
    /// Spectral dimension from the on-diagonal decay `p_t(x,x) ~ t^{-d_s/2}`.
    pub d_s_fit: f64,
    /// Walk dimension of the tied sub-Gaussian model with exponent `d_w/(d_w-1)`.
    pub d_w_fit: f64,
    /// Free off-diagonal exponent with `d_w` held at `d_w_fit`.
    pub beta_fit: f64,
    pub c1: f64,
    pub c2: f64,
    /// Max absolute misfit of the tied model on the log scale.
    pub residual: f64,
    pub samples: usize,
    pub dropped: usize,
    pub window: TimeWindow,
}

impl HeatKernelFit {
    /// Exponent the tied model predicts.
    pub fn tied_exponent(&self) -> f64 {
        self.d_w_fit / (self.d_w_fit - 1.0)
    }
}

struct Sample {
    /// Index into the `(center, time)` groups.
    group: usize,
    d: f64,
    log_p: f64,
}

/// Ball masses around one center as a function of the radius.
struct MassProfile {
    dist: Vec<f64>,
    cum: Vec<f64>,
}

impl MassProfile {
    fn new(cloud: &MeasuredPointCloud, x: usize) -> Self {
        let mut pts: Vec<(f64, f64)> = (0..cloud.len()).map(|y| (cloud.dist(x, y), cloud.weight(y))).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut acc = 0.0;
        let cum = pts.iter().map(|p| {
            acc += p.1;
            acc
        });
        let cum = cum.collect();
        MassProfile {
            dist: pts.iter().map(|p| p.0).collect(),
            cum,
        }
    }

    /// `mu(B(x, r))` for the open ball, never below the center's own weight.
    fn mass(&self, r: f64) -> f64 {
        let k = self.dist.partition_point(|&d| d < r);
        self.cum[k.max(1) - 1]
    }
}

/// `(a, c2, sse, max_abs)` of the least-squares fit `y = a - c2 z`.
fn lsq(y: &[f64], z: &[f64]) -> (f64, f64, f64, f64) {
    let f = fit_line(z, y);
    let sse = z.iter().zip(y).map(|(a, b)| (b - f.intercept - f.slope * a).powi(2)).sum();
    (f.intercept, -f.slope, sse, f.max_residual)
}

/// Fits `p_t(x,y) ~ c1 / mu(B(x, t^{1/d_w})) exp(-c2 (d/t^{1/d_w})^beta)` to
/// kernel samples at the given pairs and times.
pub fn fit_subgaussian(
    form: &GraphDirichletForm,
    spec: &Spectrum,
    cloud: &MeasuredPointCloud,
    window: &TimeWindow,
    pairs: &[(usize, usize)],
) -> Result<HeatKernelFit> {
    if spec.measure.len() != cloud.len() || form.len() != cloud.len() {
        return Err(Error::InvalidParameter("form, spectrum and cloud sizes differ".into()));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("no sample pairs".into()));
    }
    window.validate(spec)?;
    let times = window.times();
    let lt: Vec<f64> = times.iter().map(|t| t.ln()).collect();

    let mut centers: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    centers.sort_unstable();
    centers.dedup();

    let mut samples = Vec::new();
    let mut groups = Vec::new();
    let mut profiles = Vec::with_capacity(centers.len());
    let mut dropped = 0;
    let mut slopes = Vec::with_capacity(centers.len());
    for &x in &centers {
        profiles.push(MassProfile::new(cloud, x));
        let hops = match window.metric {
            PairMetric::Geodesic => Some(hop_counts(form, x)),
            PairMetric::Cloud => None,
        };
        let mut diag = Vec::with_capacity(times.len());
        for &t in &times {
            let row = heat_kernel_row(spec, t, x)?;
            let px = row[x];
            if !(px > 0.0) {
                return Err(Error::InvalidParameter(format!("nonpositive on-diagonal kernel at {x}")));
            }
            diag.push(px.ln());
            let group = groups.len();
            groups.push((profiles.len() - 1, t));
            for &(_, y) in pairs.iter().filter(|p| p.0 == x) {
                let p = row[y];
                if p > window.tail_cutoff * px {
                    samples.push(Sample {
                        group,
                        d: match &hops {
                            Some(h) => h[y] as f64 * form.mesh(),
                            None => cloud.dist(x, y),
                        },
                        log_p: p.ln(),
                    });
                } else {
                    dropped += 1;
                }
            }
        }
        slopes.push(fit_line(&lt, &diag).slope);
    }
    let d_s_fit = -2.0 * slopes.iter().sum::<f64>() / slopes.len() as f64;

    let y_of = |d_w: f64| -> (Vec<f64>, Vec<f64>) {
        let scale: Vec<(f64, f64)> = groups
            .iter()
            .map(|&(p, t)| {
                let rt = t.powf(1.0 / d_w);
                (profiles[p].mass(rt).ln(), rt)
            })
            .collect();
        samples
            .iter()
            .map(|s| {
                let (lv, rt) = scale[s.group];
                (s.log_p + lv, s.d / rt)
            })
            .unzip()
    };
    let tied = |d_w: f64| {
        let beta = d_w / (d_w - 1.0);
        let (y, u) = y_of(d_w);
        let z: Vec<f64> = u.iter().map(|v| v.powf(beta)).collect();
        lsq(&y, &z)
    };
    let argmin = |lo: f64, hi: f64, steps: usize, obj: &dyn Fn(f64) -> f64| {
        let mut best = (lo, f64::INFINITY);
        for k in 0..=steps {
            let v = lo + (hi - lo) * k as f64 / steps as f64;
            let o = obj(v);
            if o < best.1 {
                best = (v, o);
            }
        }
        best.0
    };
    let coarse = argmin(1.5, 4.0, 250, &|d| tied(d).2);
    let d_w_fit = argmin((coarse - 0.01).max(1.5), (coarse + 0.01).min(4.0), 40, &|d| tied(d).2);
    let (log_c1, c2, _, residual) = tied(d_w_fit);

    let (y, u) = y_of(d_w_fit);
    let free = |beta: f64| {
        let z: Vec<f64> = u.iter().map(|v| v.powf(beta)).collect();
        lsq(&y, &z).2
    };
    let coarse_b = argmin(1.05, 4.0, 295, &free);
    let beta_fit = argmin((coarse_b - 0.01).max(1.05), (coarse_b + 0.01).min(4.0), 40, &free);

    Ok(HeatKernelFit {
        d_s_fit,
        d_w_fit,
        beta_fit,
        c1: log_c1.exp(),
        c2,
        residual,
        samples: samples.len(),
        dropped,
        window: *window,
    })
}

fn hop_counts(form: &GraphDirichletForm, s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; form.len()];
    d[s] = 0;
    let mut queue = std::collections::VecDeque::from([s]);
    while let Some(x) = queue.pop_front() {
        for &(y, _) in form.neighbors(x) {
            if d[y] == usize::MAX {
                d[y] = d[x] + 1;
                queue.push_back(y);
            }
        }
    }
    d
}

fn hierarchy_ratio(coarse: &GraphDirichletForm, fine: &GraphDirichletForm) -> Result<f64> {
    let bad = |why: String| Error::NonConsecutiveLevels(why);
    match (coarse.kind(), fine.kind()) {
        (FormKind::Gasket { level: a }, FormKind::Gasket { level: b }) => {
            if b != a + 1 {
                return Err(bad(format!("gasket levels {a} and {b}")));
            }
        }
        (FormKind::Grid1d, FormKind::Grid1d) | (FormKind::Grid2d, FormKind::Grid2d) => {}
        (a, b) => return Err(bad(format!("{a} and {b} are not one refinement family"))),
    }
    let ratio = coarse.mesh() / fine.mesh();
    if !(1.5..=3.5).contains(&ratio) {
        return Err(bad(format!("mesh ratio {ratio} is not one refinement step")));
    }
    Ok(ratio)
}

/// Walk dimension from `lambda_k^{(m)} / lambda_k^{(m+1)}` of the simple
/// random walk generators at two consecutive levels, for `k = 1, 2, 3`.
/// `d_w_hat` comes from `k = 1`; the residual is the spread of the others.
pub fn eigen_walk_dimension(coarse: &GraphDirichletForm, fine: &GraphDirichletForm) -> Result<WalkDimFit> {
    let ratio = hierarchy_ratio(coarse, fine)?;
    // four modes do not justify a dense solve on large graphs
    let opts = SpectrumOptions {
        k_max: 4,
        dense_limit: 500,
        ..Default::default()
    };
    let lc = spectrum(&coarse.combinatorial(), &opts)?;
    let lf = spectrum(&fine.combinatorial(), &opts)?;
    if lc.len() < 4 || lf.len() < 4 {
        return Err(Error::InvalidParameter("need at least four modes per level".into()));
    }
    let estimates: Vec<f64> = (1..4)
        .map(|k| (lc.eigenvalues[k] / lf.eigenvalues[k]).ln() / ratio.ln())
        .collect();
    let d_w_hat = estimates[0];
    let residual = estimates.iter().map(|e| (e - d_w_hat).abs()).fold(0.0, f64::max);
    Ok(WalkDimFit {
        d_w_hat,
        method: WalkDimMethod::EigenRatio,
        residual,
        window: (fine.mesh(), coarse.mesh()),
        estimates,
    })
}
