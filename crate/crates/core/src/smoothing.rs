//! Covering nets, subordinated partitions of unity and the ball-average
//! mollifier `f_eps = sum_i (avg_{B(x_i, eps)} f) phi_i`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{ks_energy, Region, FLOOR_FACTOR};
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::scales::ScaleGrid;
use crate::space::MeasuredPointCloud;

/// Maximal `eps`-separated set of points, chosen greedily in id order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoveringNet {
    pub epsilon: f64,
    pub centers: Vec<usize>,
    /// Every point lies in some open ball `B(x_i, eps)`.
    pub cover_ok: bool,
    /// Max over points of the number of balls `B(x_i, 5 eps)` containing it.
    pub overlap_5eps: usize,
}

pub fn build_net(cloud: &MeasuredPointCloud, epsilon: f64) -> Result<CoveringNet> {
    let min = 2.0 * cloud.mesh();
    if !(epsilon >= min) {
        return Err(Error::InadmissibleScale { r: epsilon, min });
    }
    let n = cloud.len();
    let mut is_center = vec![false; n];
    let mut centers = Vec::new();
    for p in 0..n {
        let mut blocked = false;
        cloud.for_each_in_ball(p, epsilon, |y, _| blocked |= is_center[y]);
        if !blocked {
            is_center[p] = true;
            centers.push(p);
        }
    }
    let covered: Vec<bool> = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut hit = false;
            cloud.for_each_in_ball(p, epsilon, |y, _| hit |= is_center[y]);
            hit
        })
        .collect();
    let overlap_5eps = (0..n)
        .into_par_iter()
        .map(|p| {
            let mut k = 0;
            cloud.for_each_in_ball(p, 5.0 * epsilon, |y, _| k += is_center[y] as usize);
            k
        })
        .max()
        .unwrap_or(0);
    Ok(CoveringNet {
        epsilon,
        centers,
        cover_ok: covered.iter().all(|&c| c),
        overlap_5eps,
    })
}

impl CoveringNet {
    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "center,epsilon")?;
        for c in &self.centers {
            writeln!(out, "{c},{:e}", self.epsilon)?;
        }
        Ok(())
    }
}

/// Bump profile `psi(t) = clamp(2 - t, 0, 1)`.
#[inline]
pub fn bump(t: f64) -> f64 {
    (2.0 - t).clamp(0.0, 1.0)
}

/// Partition of unity subordinated to a covering net. Stored per point as
/// `(center index, phi value)` pairs with nonzero values only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionOfUnity {
    pub net: CoveringNet,
    pub per_point: Vec<Vec<(usize, f64)>>,
    /// `eps * max_i max_x Lip_h(phi_i)(x)` at `r_loc = kappa * h`.
    pub lip_constant: f64,
}

pub fn partition_of_unity(cloud: &MeasuredPointCloud, net: &CoveringNet) -> Result<PartitionOfUnity> {
    if !net.cover_ok {
        return Err(Error::InvalidParameter("net does not cover the cloud".into()));
    }
    let n = cloud.len();
    let eps = net.epsilon;
    let mut slot = vec![usize::MAX; n];
    for (k, &c) in net.centers.iter().enumerate() {
        slot[c] = k;
    }
    let per_point = (0..n)
        .into_par_iter()
        .map(|x| {
            let mut entries = Vec::new();
            cloud.for_each_in_ball(x, 2.0 * eps, |y, d| {
                if slot[y] != usize::MAX {
                    let psi = bump(d / eps);
                    if psi > 0.0 {
                        entries.push((slot[y], psi));
                    }
                }
            });
            entries.sort_by_key(|e| e.0);
            let total: f64 = entries.iter().map(|e| e.1).sum();
            if total <= 0.0 {
                return Err(Error::Internal(format!("point {x} is outside every bump")));
            }
            for e in &mut entries {
                e.1 /= total;
            }
            Ok(entries)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut pou = PartitionOfUnity {
        net: net.clone(),
        per_point,
        lip_constant: 0.0,
    };
    pou.lip_constant = pou.max_bump_slope(cloud, cloud.min_scale()) * eps;
    Ok(pou)
}

impl PartitionOfUnity {
    pub fn len(&self) -> usize {
        self.net.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.centers.is_empty()
    }

    fn value(&self, x: usize, k: usize) -> f64 {
        let list = &self.per_point[x];
        match list.binary_search_by_key(&k, |e| e.0) {
            Ok(pos) => list[pos].1,
            Err(_) => 0.0,
        }
    }

    /// Dense field of the `k`-th bump.
    pub fn phi(&self, k: usize) -> ScalarField {
        let v = (0..self.per_point.len()).map(|x| self.value(x, k)).collect();
        ScalarField::new(v).expect("bump values are finite")
    }

    /// `max_i max_x Lip_h(phi_i)(x)` over all bumps.
    fn max_bump_slope(&self, cloud: &MeasuredPointCloud, r_loc: f64) -> f64 {
        (0..cloud.len())
            .into_par_iter()
            .map(|x| {
                let mut best = 0.0f64;
                cloud.for_each_in_ball(x, r_loc, |y, d| {
                    if y == x || d == 0.0 {
                        return;
                    }
                    // bumps touching x or y
                    for &(k, v) in &self.per_point[x] {
                        best = best.max((v - self.value(y, k)).abs() / d);
                    }
                    for &(k, v) in &self.per_point[y] {
                        best = best.max((v - self.value(x, k)).abs() / d);
                    }
                });
                best
            })
            .reduce(|| 0.0, f64::max)
    }

    /// Sparse triplets `point center_id value`, one per line.
    pub fn write_triplets(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "# point center value")?;
        for (x, list) in self.per_point.iter().enumerate() {
            for &(k, v) in list {
                writeln!(out, "{x} {} {v:e}", self.net.centers[k])?;
            }
        }
        Ok(())
    }
}

/// `f_eps = sum_i f_{B(x_i, eps)} phi_i`.
pub fn mollify(cloud: &MeasuredPointCloud, f: &ScalarField, pou: &PartitionOfUnity) -> Result<ScalarField> {
    cloud.check_field(f)?;
    if pou.per_point.len() != cloud.len() {
        return Err(Error::InvalidParameter("partition of unity lives on another cloud".into()));
    }
    let eps = pou.net.epsilon;
    let averages: Vec<f64> = pou
        .net
        .centers
        .par_iter()
        .map(|&c| cloud.average_over(f, c, eps))
        .collect();
    let values = pou
        .per_point
        .iter()
        .map(|list| list.iter().map(|&(k, phi)| phi * averages[k]).sum())
        .collect();
    ScalarField::new(values)
}

/// `(Lip_h f)(x) = max_{y in B(x, r_loc), y != x} |f_x - f_y| / d(x, y)`.
pub fn discrete_lip(cloud: &MeasuredPointCloud, f: &ScalarField, r_loc: f64) -> Result<ScalarField> {
    cloud.check_field(f)?;
    cloud.require_admissible(r_loc)?;
    let values = (0..cloud.len())
        .into_par_iter()
        .map(|x| {
            let mut best = 0.0f64;
            let mut neighbors = 0;
            cloud.for_each_in_ball(x, r_loc, |y, d| {
                if y != x && d > 0.0 {
                    neighbors += 1;
                    best = best.max((f[x] - f[y]).abs() / d);
                }
            });
            if neighbors == 0 {
                Err(Error::InvalidParameter(format!("ball around {x} contains only its center")))
            } else {
                Ok(best)
            }
        })
        .collect::<Result<Vec<_>>>()?;
    ScalarField::new(values)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MollifierReport {
    pub epsilon: f64,
    /// `int (Lip_h f_eps)^2`.
    pub lip_numerator: f64,
    /// `int avg_{B(x, 2 eps)} |f(x) - f(y)|^2 / eps^2`.
    pub lip_denominator: f64,
    pub lip_bound_ratio: f64,
    /// `||f_eps - f||^2`.
    pub l2_numerator: f64,
    /// `int (avg_{B(x, 6 eps)} |f(x) - f(y)|)^2`.
    pub l2_denominator: f64,
    pub l2_bound_ratio: f64,
}

impl MollifierReport {
    pub fn l2_error(&self) -> f64 {
        self.l2_numerator.sqrt()
    }
}

fn guarded_ratio(num: f64, den: f64, floor: f64) -> f64 {
    if den <= floor {
        0.0
    } else {
        num / den
    }
}

/// Both mollifier estimates at one `eps`, as ratios of left to right sides.
pub fn mollifier_estimates(cloud: &MeasuredPointCloud, f: &ScalarField, epsilon: f64) -> Result<MollifierReport> {
    let net = build_net(cloud, epsilon)?;
    let pou = partition_of_unity(cloud, &net)?;
    let smooth = mollify(cloud, f, &pou)?;
    let lip = discrete_lip(cloud, &smooth, cloud.min_scale())?;
    let lip_numerator = cloud.l2_norm(&lip).powi(2);
    // (2 eps)^2 E(f, 2 eps) / eps^2
    let lip_denominator = 4.0 * ks_energy(cloud, f, 2.0 * epsilon, 2.0, &Region::All)?;
    let l2_numerator = cloud.l2_distance(&smooth, f).powi(2);
    let w = cloud.weights();
    let terms: Vec<f64> = (0..cloud.len())
        .into_par_iter()
        .map(|x| {
            let (mut acc, mut mass) = (0.0, 0.0);
            cloud.for_each_in_ball(x, 6.0 * epsilon, |y, _| {
                acc += w[y] * (f[x] - f[y]).abs();
                mass += w[y];
            });
            w[x] * (acc / mass).powi(2)
        })
        .collect();
    let l2_denominator: f64 = terms.iter().sum();
    let norm_sq = cloud.l2_norm(f).powi(2);
    Ok(MollifierReport {
        epsilon,
        lip_numerator,
        lip_denominator,
        lip_bound_ratio: guarded_ratio(lip_numerator, lip_denominator, FLOOR_FACTOR * norm_sq / (epsilon * epsilon)),
        l2_numerator,
        l2_denominator,
        l2_bound_ratio: guarded_ratio(l2_numerator, l2_denominator, FLOOR_FACTOR * norm_sq),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutoffReport {
    pub epsilon: f64,
    pub d_w: f64,
    /// `max_i limsup_proxy E(phi_i) eps^{d_w} / mu(B(x_i, eps))`.
    pub worst: f64,
    pub quotients: Vec<f64>,
}

/// Controlled-cutoff quotients of every bump of `pou`.
pub fn check_controlled_cutoff(
    cloud: &MeasuredPointCloud,
    pou: &PartitionOfUnity,
    d_w: f64,
    grid: &ScaleGrid,
) -> Result<CutoffReport> {
    let window = grid.window_scales(cloud)?;
    let eps = pou.net.epsilon;
    let reach = 2.0 * eps + window.iter().cloned().fold(0.0, f64::max);
    let mut quotients = Vec::with_capacity(pou.len());
    for (k, &c) in pou.net.centers.iter().enumerate() {
        let phi = pou.phi(k);
        // centers farther than `reach` see phi == 0 on their whole ball
        let region = Region::Ids(cloud.ball(c, reach).members);
        let mut limsup = 0.0f64;
        for &r in &window {
            limsup = limsup.max(ks_energy(cloud, &phi, r, d_w, &region)?);
        }
        quotients.push(limsup * eps.powf(d_w) / cloud.ball_mass(c, eps));
    }
    let worst = quotients.iter().cloned().fold(0.0, f64::max);
    Ok(CutoffReport {
        epsilon: eps,
        d_w,
        worst,
        quotients,
    })
}
