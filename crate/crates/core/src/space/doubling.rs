use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::MeasuredPointCloud;
use crate::error::{Error, Result};

/// Which centers enter a doubling estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CenterPolicy {
    #[default]
    All,
    /// Only centers whose doubled ball stays inside the coordinate hull.
    Interior,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoublingSample {
    pub center: usize,
    pub r: f64,
    pub mass_r: f64,
    pub mass_2r: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoublingProfile {
    pub samples: Vec<DoublingSample>,
    /// Largest observed `mu(B(x, 2r)) / mu(B(x, r))`.
    pub c_doubling: f64,
    /// Growth exponent from the log-log fit of mass ratios against `R / r`.
    pub q_fit: f64,
    /// `min mu(B(x, r)) / r^q_fit` over the samples.
    pub c_low: f64,
    pub seed: u64,
    pub policy: CenterPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MassBoundReport {
    pub q: f64,
    pub holds: bool,
    /// Largest `c` with `mu(B(x, r)) >= c r^q` on every sampled ball.
    pub worst_c: f64,
}

/// `mu(B(x, 2r)) / mu(B(x, r))`.
pub fn doubling_ratio(cloud: &MeasuredPointCloud, x: usize, r: f64) -> f64 {
    cloud.ball_mass(x, 2.0 * r) / cloud.ball_mass(x, r)
}

/// Samples doubling ratios over `(center, scale)` pairs.
///
/// Scales outside `[kappa * h, diam / 2]` are dropped. When `n_samples` is at
/// least the number of points every point is used as a center; otherwise a
/// seeded random subset is drawn.
pub fn estimate_doubling(
    cloud: &MeasuredPointCloud,
    n_samples: usize,
    scales: &[f64],
    seed: u64,
    policy: CenterPolicy,
) -> Result<DoublingProfile> {
    let upper = cloud.diameter() / 2.0;
    let admissible: Vec<f64> = scales
        .iter()
        .copied()
        .filter(|&r| cloud.is_admissible(r) && r <= upper)
        .collect();
    if admissible.is_empty() {
        return Err(Error::EmptyScaleGrid);
    }
    let n = cloud.len();
    let centers: Vec<usize> = if n_samples >= n {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = sample(&mut rng, n, n_samples).into_vec();
        c.sort_unstable();
        c
    };

    let mut samples = Vec::new();
    for &x in &centers {
        for &r in &admissible {
            if policy == CenterPolicy::Interior && !cloud.ball_inside_hull(x, 2.0 * r) {
                continue;
            }
            let mass_r = cloud.ball_mass(x, r);
            let mass_2r = cloud.ball_mass(x, 2.0 * r);
            samples.push(DoublingSample {
                center: x,
                r,
                mass_r,
                mass_2r,
                ratio: mass_2r / mass_r,
            });
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no center satisfies the sampling policy".into()));
    }
    let c_doubling = samples.iter().map(|s| s.ratio).fold(1.0, f64::max);
    // Regression through the origin of log(mass ratio) on log(R / r); every
    // pair here has R / r = 2.
    let q_fit = samples.iter().map(|s| s.ratio.ln()).sum::<f64>() / (samples.len() as f64 * 2f64.ln());
    let c_low = samples
        .iter()
        .map(|s| s.mass_r / s.r.powf(q_fit))
        .fold(f64::INFINITY, f64::min);
    Ok(DoublingProfile {
        samples,
        c_doubling,
        q_fit,
        c_low,
        seed,
        policy,
    })
}

/// Checks `mu(B(x, r)) >= c r^q` on every ball recorded in the profile.
pub fn check_mass_bounds(profile: &DoublingProfile, q: f64) -> Result<MassBoundReport> {
    if !(q >= 0.0 && q.is_finite()) {
        return Err(Error::InvalidParameter(format!("mass-bound exponent {q}")));
    }
    let worst_c = profile
        .samples
        .iter()
        .flat_map(|s| [s.mass_r / s.r.powf(q), s.mass_2r / (2.0 * s.r).powf(q)])
        .fold(f64::INFINITY, f64::min);
    Ok(MassBoundReport {
        q,
        holds: worst_c.is_finite() && worst_c > 0.0,
        worst_c,
    })
}

impl DoublingProfile {
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "center,r,mass_r,mass_2r,ratio")?;
        for s in &self.samples {
            writeln!(out, "{},{:e},{:e},{:e},{:e}", s.center, s.r, s.mass_r, s.mass_2r, s.ratio)?;
        }
        Ok(())
    }
}
