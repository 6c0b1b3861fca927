//! Two-sided bounds on the intrinsic metric
//! `d(x, y) = sup { f(x) - f(y) : Gamma(f, f) <= mu }`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::GraphDirichletForm;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntrinsicDistance {
    /// Value of a feasible potential.
    pub lower: f64,
    /// Path length under the per-edge bound `|df| <= sqrt(2 min(mu) / c)`.
    pub upper: f64,
    pub iterations: usize,
}

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source`; `len[k]` is the length of edge `form.edges()[k]`.
fn distances(form: &GraphDirichletForm, len: &[f64], source: usize) -> Vec<f64> {
    let n = form.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for (&(i, j, _), &l) in form.edges().iter().zip(len) {
        adj[i].push((j, l));
        adj[j].push((i, l));
    }
    let mut dist = vec![f64::INFINITY; n];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Item(0.0, source)]);
    while let Some(Item(d, x)) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for &(y, l) in &adj[x] {
            let nd = d + l;
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(Item(nd, y));
            }
        }
    }
    dist
}

/// `max_z Gamma(f,f)(z) / mu_z` and the per-vertex ratios.
fn load(form: &GraphDirichletForm, f: &[f64]) -> Vec<f64> {
    (0..form.len())
        .map(|z| {
            let g: f64 = form.neighbors(z).iter().map(|&(w, c)| c * (f[z] - f[w]).powi(2)).sum();
            0.5 * g / form.measure()[z]
        })
        .collect()
}

/// Bounds on `d(x, y)`. The lower bound starts from a feasible distance
/// potential and is improved by `iterations` rounds of edge-length rescaling.
pub fn intrinsic_metric(form: &GraphDirichletForm, x: usize, y: usize, iterations: usize) -> Result<IntrinsicDistance> {
    let n = form.len();
    if x >= n || y >= n {
        return Err(Error::InvalidParameter(format!("vertex out of range ({x}, {y})")));
    }
    let mu = form.measure();
    let upper_len: Vec<f64> = form
        .edges()
        .iter()
        .map(|&(i, j, c)| (2.0 * mu[i].min(mu[j]) / c).sqrt())
        .collect();
    let upper = distances(form, &upper_len, y)[x];
    if x == y {
        return Ok(IntrinsicDistance {
            lower: 0.0,
            upper: 0.0,
            iterations: 0,
        });
    }

    let cap: Vec<f64> = (0..n).map(|z| mu[z] / form.conductance_at(z)).collect();
    let mut len: Vec<f64> = form
        .edges()
        .iter()
        .map(|&(i, j, _)| (2.0 * cap[i].min(cap[j])).sqrt())
        .collect();
    let mut best = 0.0f64;
    for _ in 0..=iterations {
        let f = distances(form, &len, y);
        let ratio = load(form, &f);
        let worst = ratio.iter().cloned().fold(0.0, f64::max);
        if worst > 0.0 {
            best = best.max(f[x] / worst.sqrt());
        }
        for (l, &(i, j, _)) in len.iter_mut().zip(form.edges()) {
            let s = ratio[i].max(ratio[j]);
            if s > 0.0 {
                *l /= s.sqrt().sqrt();
            }
        }
    }
    Ok(IntrinsicDistance {
        lower: best.min(upper),
        upper,
        iterations,
    })
}
