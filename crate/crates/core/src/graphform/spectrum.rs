//! Eigenpairs of the generator, normalized in `L^2(mu)`.
//!
//! The generator `L = M^{-1} K` is similar to `S = M^{-1/2} K M^{-1/2}`;
//! eigenvectors of `S` are mapped back by `u = M^{-1/2} v`. Small graphs use a
//! dense solver, large ones a Chebyshev-filtered subspace iteration for the
//! lowest modes.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::GraphDirichletForm;
use crate::error::{Error, Result};

/// Largest vertex count handled by the dense solver.
pub const DENSE_LIMIT: usize = 5000;
/// Number of modes kept by default when the partial solver is used.
pub const PARTIAL_K: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    pub dense_limit: usize,
    pub k_max: usize,
    /// Relative residual target for the partial solver.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            dense_limit: DENSE_LIMIT,
            k_max: PARTIAL_K,
            tol: 1e-9,
            max_iter: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Spectrum {
    /// Ascending eigenvalues `0 = lambda_0 <= lambda_1 <= ...`.
    pub eigenvalues: Vec<f64>,
    /// `vectors[k]` is `u_k`, orthonormal in `L^2(mu)`.
    pub vectors: Vec<Vec<f64>>,
    pub measure: Vec<f64>,
    /// `||L u_k - lambda_k u_k||_mu / max(1, lambda_max)`.
    pub residuals: Vec<f64>,
    /// Whether all `n` modes are present.
    pub complete: bool,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Spectral gap `lambda_1`.
    pub fn gap(&self) -> Option<f64> {
        self.eigenvalues.get(1).copied()
    }

    pub fn write_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "k,lambda,residual")?;
        for (k, (l, r)) in self.eigenvalues.iter().zip(&self.residuals).enumerate() {
            writeln!(out, "{k},{l:e},{r:e}")?;
        }
        Ok(())
    }
}

/// Sparse `S = M^{-1/2} K M^{-1/2}` in CSR form, diagonal included.
struct SymOp {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl SymOp {
    fn new(form: &GraphDirichletForm) -> Self {
        let n = form.len();
        let sq: Vec<f64> = form.measure().iter().map(|m| m.sqrt()).collect();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for x in 0..n {
            cols.push(x);
            vals.push(form.conductance_at(x) / form.measure()[x]);
            for &(y, c) in form.neighbors(x) {
                cols.push(y);
                vals.push(-c / (sq[x] * sq[y]));
            }
            offsets.push(cols.len());
        }
        SymOp { offsets, cols, vals }
    }

    fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    fn gershgorin(&self) -> f64 {
        (0..self.n())
            .map(|x| self.vals[self.offsets[x]..self.offsets[x + 1]].iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let (n, p) = x.shape();
        let mut y = DMatrix::zeros(n, p);
        for j in 0..p {
            let xc = x.column(j);
            let mut yc = y.column_mut(j);
            for i in 0..n {
                let mut s = 0.0;
                for k in self.offsets[i]..self.offsets[i + 1] {
                    s += self.vals[k] * xc[self.cols[k]];
                }
                yc[i] = s;
            }
        }
        y
    }

    fn dense(&self) -> DMatrix<f64> {
        let n = self.n();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for k in self.offsets[i]..self.offsets[i + 1] {
                m[(i, self.cols[k])] = self.vals[k];
            }
        }
        m
    }
}

/// Lowest eigenpairs of the generator: all of them when `n <= dense_limit`,
/// otherwise the lowest `k_max`.
pub fn spectrum(form: &GraphDirichletForm, opts: &SpectrumOptions) -> Result<Spectrum> {
    let n = form.len();
    let op = SymOp::new(form);
    let (values, vecs, complete) = if n <= opts.dense_limit {
        let eig = SymmetricEigen::new(op.dense());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vecs: Vec<Vec<f64>> = order.iter().map(|&k| eig.eigenvectors.column(k).iter().copied().collect()).collect();
        (values, vecs, true)
    } else {
        if opts.k_max == 0 {
            return Err(Error::InvalidParameter("k_max must be positive".into()));
        }
        let (values, vecs) = chebyshev_subspace(&op, opts.k_max.min(n), opts.tol, opts.max_iter)?;
        (values, vecs, false)
    };

    let sq: Vec<f64> = form.measure().iter().map(|m| m.sqrt()).collect();
    let lmax = if complete { values[n - 1] } else { op.gershgorin() };
    let scale = lmax.max(1.0);
    let mut eigenvalues = Vec::with_capacity(values.len());
    let mut vectors = Vec::with_capacity(values.len());
    let mut residuals = Vec::with_capacity(values.len());
    for (k, (lam, v)) in values.into_iter().zip(vecs).enumerate() {
        let mut u: Vec<f64> = v.iter().zip(&sq).map(|(a, s)| a / s).collect();
        // sign: the first entry within 1e-6 of the largest |u| is positive
        let top = u.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let pivot = u.iter().position(|a| a.abs() >= top * (1.0 - 1e-6)).unwrap_or(0);
        if u[pivot] < 0.0 {
            u.iter_mut().for_each(|a| *a = -*a);
        }
        // the kernel of a connected form is exactly the constants
        let lam = if k == 0 { lam.max(0.0) } else { lam };
        let lu = form.apply_generator(&u);
        let res: f64 = lu
            .iter()
            .zip(&u)
            .zip(form.measure())
            .map(|((a, b), m)| m * (a - lam * b).powi(2))
            .sum::<f64>()
            .sqrt();
        eigenvalues.push(lam);
        vectors.push(u);
        residuals.push(res / scale);
    }
    Ok(Spectrum {
        eigenvalues,
        vectors,
        measure: form.measure().to_vec(),
        residuals,
        complete,
    })
}

fn orthonormalize(x: DMatrix<f64>) -> DMatrix<f64> {
    // QR twice keeps orthogonality close to machine precision
    let q = x.qr().q();
    q.qr().q()
}

/// Rayleigh-Ritz on the span of `q`; returns ascending Ritz values and vectors.
fn rayleigh_ritz(op: &SymOp, q: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sq = op.apply(q);
    let mut h = q.transpose() * &sq;
    h = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(h);
    let p = q.ncols();
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut w = DMatrix::zeros(p, p);
    for (j, &k) in order.iter().enumerate() {
        w.set_column(j, &eig.eigenvectors.column(k));
    }
    (vals, q * w)
}

/// Degree-`deg` Chebyshev filter damping `[a, b]` and amplifying below `a`.
fn filter(op: &SymOp, x: &DMatrix<f64>, deg: usize, a: f64, b: f64) -> DMatrix<f64> {
    let e = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    let mut y0 = x.clone();
    let mut y1 = (op.apply(x) - x * c) / e;
    for _ in 1..deg {
        let y2 = (op.apply(&y1) - &y1 * c) * (2.0 / e) - &y0;
        y0 = y1;
        y1 = y2;
        // rescale to avoid overflow; only the span matters
        let s = y1.amax();
        if s > 1e100 {
            y1 /= s;
            y0 /= s;
        }
    }
    y1
}

fn chebyshev_subspace(op: &SymOp, k: usize, tol: f64, max_iter: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    const DEGREE: usize = 16;
    let n = op.n();
    let p = (k + (k / 5).max(10)).min(n);
    let upper = op.gershgorin() * 1.01;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.gen::<f64>() - 0.5);
    let mut q = orthonormalize(x);
    let (mut vals, mut ritz) = rayleigh_ritz(op, &q);
    for _ in 0..max_iter {
        let cut = vals[p - 1];
        q = orthonormalize(filter(op, &ritz, DEGREE, cut, upper));
        let (v, r) = rayleigh_ritz(op, &q);
        vals = v;
        ritz = r;
        let sr = op.apply(&ritz.columns(0, k).into_owned());
        let worst = (0..k)
            .map(|j| (sr.column(j) - ritz.column(j) * vals[j]).norm())
            .fold(0.0, f64::max);
        if worst <= tol * upper {
            let vecs = (0..k).map(|j| ritz.column(j).iter().copied().collect()).collect();
            return Ok((vals[..k].to_vec(), vecs));
        }
    }
    Err(Error::EigenNotConverged(format!(
        "{k} lowest modes of a {n}-vertex form after {max_iter} filtered iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn path(n: usize) -> GraphDirichletForm {
        let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1, 1.0)).collect();
        GraphDirichletForm::from_edges(vec![1.0; n], &edges, 1.0).unwrap()
    }

    #[test]
    fn path_spectrum_matches_cosines() {
        let n = 40;
        let s = spectrum(&path(n), &SpectrumOptions::default()).unwrap();
        assert!(s.complete);
        for k in 0..n {
            let exact = 2.0 - 2.0 * (PI * k as f64 / n as f64).cos();
            assert!((s.eigenvalues[k] - exact).abs() < 1e-10, "k={k}");
        }
        assert!(s.max_residual() < 1e-10);
    }

    #[test]
    fn modes_are_mu_orthonormal() {
        let measure = vec![0.5, 1.0, 2.0, 0.25];
        let form =
            GraphDirichletForm::from_edges(measure.clone(), &[(0, 1, 1.0), (1, 2, 3.0), (2, 3, 0.5), (0, 3, 2.0)], 1.0)
                .unwrap();
        let s = spectrum(&form, &SpectrumOptions::default()).unwrap();
        for a in 0..4 {
            for b in 0..4 {
                let ip: f64 = (0..4).map(|i| measure[i] * s.vectors[a][i] * s.vectors[b][i]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((ip - want).abs() < 1e-12);
            }
        }
        assert!(s.eigenvalues[0].abs() < 1e-12);
        let c = s.vectors[0][0];
        assert!(c > 0.0 && s.vectors[0].iter().all(|v| (v - c).abs() < 1e-12));
    }

    #[test]
    fn partial_solver_agrees_with_dense() {
        let n = 300;
        let form = path(n);
        let dense = spectrum(&form, &SpectrumOptions::default()).unwrap();
        let opts = SpectrumOptions {
            dense_limit: 100,
            k_max: 12,
            ..Default::default()
        };
        let part = spectrum(&form, &opts).unwrap();
        assert!(!part.complete);
        assert_eq!(part.len(), 12);
        for k in 0..12 {
            assert!((part.eigenvalues[k] - dense.eigenvalues[k]).abs() < 1e-9, "k={k}");
            if k > 0 {
                let d: f64 = (0..n).map(|i| (part.vectors[k][i] - dense.vectors[k][i]).abs()).fold(0.0, f64::max);
                assert!(d < 1e-6, "mode {k}: {d}");
            }
        }
    }
}
