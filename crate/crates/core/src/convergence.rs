//! Mosco-limit diagnostics: recovery sequences, weak liminf probes,
//! asymptotic compactness and Sobolev-type embeddings.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_sweep, ks_energy, Region};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::graphform::{form_energy, GraphDirichletForm, Spectrum};
use crate::scales::ScaleGrid;
use crate::smoothing::{build_net, mollify, partition_of_unity};
use crate::space::MeasuredPointCloud;

/// Slack allowed in monotone trends.
pub const TREND_SLACK: f64 = 0.05;
/// Per-probe bound on `|<u_k, g>|` for the weak-nullity test fields.
pub const WEAK_NULL_TOL: f64 = 0.05;

/// Reference value of `E(f, f)`.
#[derive(Debug, Clone, Copy)]
pub enum Oracle<'a> {
    Form(&'a GraphDirichletForm),
    /// `fitted_limit` of a sweep on the given grid.
    FittedLimit(ScaleGrid),
}

impl Oracle<'_> {
    pub fn value(&self, cloud: &MeasuredPointCloud, f: &ScalarField, d_w: f64) -> Result<f64> {
        match self {
            Oracle::Form(form) => form_energy(form, f),
            Oracle::FittedLimit(grid) => Ok(energy_sweep(cloud, f, d_w, &Region::All, grid)?.proxies.fitted_limit),
        }
    }

    fn checked(&self, cloud: &MeasuredPointCloud, f: &ScalarField, d_w: f64) -> Result<f64> {
        let v = self.value(cloud, f, d_w)?;
        if v <= 0.0 && !f.is_constant(1e-12) {
            return Err(Error::InconsistentOracle);
        }
        Ok(v)
    }
}

fn check_decreasing(name: &str, v: &[f64]) -> Result<()> {
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidParameter(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

fn spread_of(v: &[f64]) -> f64 {
    let hi = v.iter().cloned().fold(0.0, f64::max);
    let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        1.0
    } else {
        hi / lo
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub epsilons: Vec<f64>,
    pub scales: Vec<f64>,
    pub oracle: f64,
    /// `E(f_{eps_n}, r_n)`.
    pub energies: Vec<f64>,
    /// `||f_{eps_n} - f||_{L^2}`.
    pub l2_errors: Vec<f64>,
    /// `energies / oracle`; zero when the oracle vanishes.
    pub margins: Vec<f64>,
    pub recovery_margin: f64,
    /// `max / min` of the margins.
    pub stability: f64,
    pub trend_ok: bool,
}

/// Recovery-sequence check with the mollifiers `f_{eps_n}`.
pub fn recovery_check(
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    d_w: f64,
    pairs: &[(f64, f64)],
    oracle: Oracle<'_>,
) -> Result<RecoveryReport> {
    cloud.check_field(f)?;
    if pairs.len() < 3 {
        return Err(Error::InvalidParameter("recovery check needs at least 3 scale pairs".into()));
    }
    let epsilons: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let scales: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    check_decreasing("epsilon sequence", &epsilons)?;
    check_decreasing("scale sequence", &scales)?;
    let oracle = oracle.checked(cloud, f, d_w)?;
    let mut energies = Vec::with_capacity(pairs.len());
    let mut l2_errors = Vec::with_capacity(pairs.len());
    for &(eps, r) in pairs {
        let pou = partition_of_unity(cloud, &build_net(cloud, eps)?)?;
        let fe = mollify(cloud, f, &pou)?;
        energies.push(ks_energy(cloud, &fe, r, d_w, &Region::All)?);
        l2_errors.push(cloud.l2_distance(&fe, f));
    }
    let margins: Vec<f64> = if oracle > 0.0 {
        energies.iter().map(|e| e / oracle).collect()
    } else {
        vec![0.0; energies.len()]
    };
    let floor = 1e-12 * cloud.l2_norm(f);
    let trend_ok = l2_errors
        .windows(2)
        .all(|w| w[1] <= w[0] * (1.0 + TREND_SLACK) + floor);
    Ok(RecoveryReport {
        recovery_margin: margins.iter().cloned().fold(0.0, f64::max),
        stability: spread_of(&margins),
        epsilons,
        scales,
        oracle,
        energies,
        l2_errors,
        margins,
        trend_ok,
    })
}

/// Amplitude schedule of the perturbations `a_n u_{k_n}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "a")]
pub enum Amplitude {
    Fixed(f64),
    /// `a (oracle / lambda_{k_n})^{1/2}`: each perturbation carries `a^2`
    /// times the reference energy of `f`.
    EnergyNormalized(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiminfReport {
    pub scales: Vec<f64>,
    pub modes: Vec<usize>,
    pub amplitudes: Vec<f64>,
    pub oracle: f64,
    /// `E(f + a_n u_{k_n}, r_n)`.
    pub energies: Vec<f64>,
    /// `energies / oracle`; empty when the oracle vanishes.
    pub margins: Vec<f64>,
    /// `min_n E_n / oracle`, absent when the condition is vacuous.
    pub liminf_margin: Option<f64>,
    pub stability: f64,
    /// Largest `|<u_{k_n}, g_j>_mu|` over probes and unit test fields.
    pub weak_null_max: f64,
    pub weak_null_ok: bool,
}

/// Five fixed unit-norm test fields for the weak-nullity check.
fn test_fields(cloud: &MeasuredPointCloud) -> Vec<Vec<f64>> {
    let n = cloud.len();
    let coord = |i: usize, k: usize| -> f64 {
        match cloud.coords(i) {
            Some(p) => p[k.min(p.len() - 1)],
            None => i as f64 / n as f64,
        }
    };
    let raw: Vec<Vec<f64>> = vec![
        vec![1.0; n],
        (0..n).map(|i| coord(i, 0)).collect(),
        (0..n).map(|i| coord(i, 1)).collect(),
        (0..n).map(|i| cloud.dist(0, i)).collect(),
        (0..n).map(|i| (std::f64::consts::PI * coord(i, 0)).sin()).collect(),
    ];
    raw.into_iter()
        .map(|g| {
            let norm = g.iter().zip(cloud.weights()).map(|(v, w)| w * v * v).sum::<f64>().sqrt();
            g.iter().map(|v| v / norm).collect()
        })
        .collect()
}

/// Weak-liminf probe with `f_n = f + a_n u_{k_0 + n}` at scales `r_n`.
pub fn weak_liminf_probe(
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    d_w: f64,
    spec: &Spectrum,
    scales: &[f64],
    k_start: usize,
    amplitude: Amplitude,
    oracle: Oracle<'_>,
) -> Result<LiminfReport> {
    cloud.check_field(f)?;
    if spec.measure.len() != cloud.len() {
        return Err(Error::InvalidParameter("spectrum does not match the cloud".into()));
    }
    if scales.is_empty() {
        return Err(Error::EmptyScaleGrid);
    }
    check_decreasing("scale sequence", scales)?;
    if k_start == 0 || k_start + scales.len() > spec.len() {
        return Err(Error::InvalidParameter(format!(
            "probes need modes {k_start}..{} but the spectrum has {}",
            k_start + scales.len(),
            spec.len()
        )));
    }
    let oracle = oracle.checked(cloud, f, d_w)?;
    let modes: Vec<usize> = (0..scales.len()).map(|n| k_start + n).collect();
    let amplitudes: Vec<f64> = modes
        .iter()
        .map(|&k| match amplitude {
            Amplitude::Fixed(a) => a,
            Amplitude::EnergyNormalized(a) => a * (oracle / spec.eigenvalues[k]).sqrt(),
        })
        .collect();
    let tests = test_fields(cloud);
    let w = cloud.weights();
    let weak_null_max = modes
        .iter()
        .flat_map(|&k| {
            tests
                .iter()
                .map(move |g| (0..g.len()).map(|i| w[i] * g[i] * spec.vectors[k][i]).sum::<f64>().abs())
        })
        .fold(0.0, f64::max);
    let energies = modes
        .iter()
        .zip(&amplitudes)
        .zip(scales)
        .map(|((&k, &a), &r)| {
            let fk = if a == 0.0 {
                f.clone()
            } else {
                f.axpby(1.0, &ScalarField::new(spec.vectors[k].clone())?, a)
            };
            ks_energy(cloud, &fk, r, d_w, &Region::All)
        })
        .collect::<Result<Vec<_>>>()?;
    let margins: Vec<f64> = if oracle > 0.0 {
        energies.iter().map(|e| e / oracle).collect()
    } else {
        Vec::new()
    };
    let liminf_margin = (!margins.is_empty()).then(|| margins.iter().cloned().fold(f64::INFINITY, f64::min));
    Ok(LiminfReport {
        stability: if margins.is_empty() { 1.0 } else { spread_of(&margins) },
        scales: scales.to_vec(),
        modes,
        amplitudes,
        oracle,
        energies,
        margins,
        liminf_margin,
        weak_null_max,
        weak_null_ok: weak_null_max <= WEAK_NULL_TOL,
    })
}

/// Both Mosco conditions for one field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoscoReport {
    pub recovery: RecoveryReport,
    pub liminf: LiminfReport,
    /// Recovery margins stay within this factor over the sequence.
    pub stability_limit: f64,
    pub pass: bool,
}

impl MoscoReport {
    pub fn new(recovery: RecoveryReport, liminf: LiminfReport, stability_limit: f64) -> Self {
        let rec_ok = recovery.recovery_margin.is_finite() && recovery.stability <= stability_limit && recovery.trend_ok;
        let lim_ok = match liminf.liminf_margin {
            None => true,
            Some(m) => m > 0.0 && m.is_finite() && liminf.stability <= stability_limit && liminf.weak_null_ok,
        };
        MoscoReport {
            pass: rec_ok && lim_ok,
            recovery,
            liminf,
            stability_limit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompactnessProbe {
    pub family_size: usize,
    pub cap: f64,
    pub delta: f64,
    /// Indices of the net members in selection order.
    pub net: Vec<usize>,
    pub net_size: usize,
    /// Largest `||f||^2 + liminf E` in the family.
    pub max_load: f64,
}

/// `||f||^2 + liminf proxy of E(f, .)`.
pub fn energy_load(cloud: &MeasuredPointCloud, f: &ScalarField, d_w: f64, grid: &ScaleGrid) -> Result<f64> {
    let e = energy_sweep(cloud, f, d_w, &Region::All, grid)?.proxies.liminf_proxy;
    Ok(cloud.l2_norm(f).powi(2) + e)
}

/// Greedy farthest-point `delta`-net of a bounded-energy family in `L^2`.
pub fn compactness_probe(
    cloud: &MeasuredPointCloud,
    fields: &[ScalarField],
    d_w: f64,
    cap: f64,
    delta: f64,
    grid: &ScaleGrid,
) -> Result<CompactnessProbe> {
    if fields.is_empty() {
        return Err(Error::InvalidParameter("empty family".into()));
    }
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter(format!("net radius {delta} must be positive")));
    }
    let loads = fields
        .par_iter()
        .map(|f| {
            cloud.check_field(f)?;
            energy_load(cloud, f, d_w, grid)
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some((index, &value)) = loads.iter().enumerate().find(|(_, &l)| l > cap) {
        return Err(Error::CapExceeded { index, value, cap });
    }
    let n = fields.len();
    // distance of every field to the current net
    let mut gap: Vec<f64> = fields.iter().map(|f| cloud.l2_distance(f, &fields[0])).collect();
    let mut net = vec![0];
    loop {
        let (far, &d) = gap
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1).then(b.0.cmp(&a.0)))
            .expect("nonempty family");
        if d <= delta || net.len() == n {
            break;
        }
        net.push(far);
        let center = &fields[far];
        gap.par_iter_mut()
            .zip(fields)
            .for_each(|(g, f)| *g = g.min(cloud.l2_distance(f, center)));
    }
    Ok(CompactnessProbe {
        family_size: n,
        cap,
        delta,
        net_size: net.len(),
        net,
        max_load: loads.iter().cloned().fold(0.0, f64::max),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "branch")]
pub enum EmbeddingBranch {
    /// `Q > d_w`: `||f||_q` with `q = 2Q/(Q - d_w)`.
    Lq { q: f64 },
    /// `Q <= d_w`: `||f||_inf` against the interpolation with `theta = Q/d_w`.
    SupNorm { theta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub q_dim: f64,
    pub d_w: f64,
    pub branch: EmbeddingBranch,
    pub quotients: Vec<f64>,
    pub max_quotient: f64,
}

pub fn sobolev_check(
    cloud: &MeasuredPointCloud,
    fields: &[ScalarField],
    d_w: f64,
    q_dim: f64,
    grid: &ScaleGrid,
) -> Result<SobolevReport> {
    if !(q_dim > 0.0 && q_dim.is_finite()) {
        return Err(Error::InvalidParameter(format!("growth exponent {q_dim} must be positive")));
    }
    if fields.is_empty() {
        return Err(Error::InvalidParameter("no fields".into()));
    }
    let branch = if q_dim > d_w {
        EmbeddingBranch::Lq {
            q: 2.0 * q_dim / (q_dim - d_w),
        }
    } else {
        EmbeddingBranch::SupNorm { theta: q_dim / d_w }
    };
    let quotients = fields
        .iter()
        .map(|f| {
            cloud.check_field(f)?;
            if f.is_constant(1e-12) {
                return Err(Error::InvalidParameter("constant fields are excluded".into()));
            }
            let l2 = cloud.l2_norm(f);
            let e = energy_sweep(cloud, f, d_w, &Region::All, grid)?.proxies.liminf_proxy;
            let full = l2 + e.sqrt();
            Ok(match branch {
                EmbeddingBranch::Lq { q } => cloud.lq_norm(f, q) / full,
                EmbeddingBranch::SupNorm { theta } => f.sup_norm() / (full.powf(theta) * l2.powf(1.0 - theta)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SobolevReport {
        q_dim,
        d_w,
        branch,
        max_quotient: quotients.iter().cloned().fold(0.0, f64::max),
        quotients,
    })
}
