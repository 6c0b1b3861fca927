//! Reference Dirichlet forms on conductance networks.
//!
//! `E(f, f) = 1/2 sum_{x,y} c_xy (f_x - f_y)^2`, generator
//! `L f(x) = (1/mu_x) sum_y c_xy (f_x - f_y)`, so that the semigroup is
//! symmetric in `L^2(mu)`.

mod heat;
mod metric;
mod spectrum;

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use heat::{eigen_walk_dimension, fit_subgaussian, heat_kernel, heat_kernel_row, HeatKernelFit, PairMetric, TimeWindow, TAIL_CUTOFF};
pub use metric::{intrinsic_metric, IntrinsicDistance};
pub use spectrum::{spectrum, Spectrum, SpectrumOptions, DENSE_LIMIT, PARTIAL_K};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::smoothing::discrete_lip;
use crate::space::{gasket_lattice, CloudOrigin, MeasuredPointCloud};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum FormKind {
    Grid1d,
    Grid2d,
    Gasket { level: u32 },
    Custom,
}

impl fmt::Display for FormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FormKind::Grid1d => write!(f, "grid1d"),
            FormKind::Grid2d => write!(f, "grid2d"),
            FormKind::Gasket { level } => write!(f, "gasket({level})"),
            FormKind::Custom => write!(f, "custom"),
        }
    }
}

/// Symmetric conductance network carrying the measure of its cloud.
#[derive(Debug, Clone)]
pub struct GraphDirichletForm {
    kind: FormKind,
    measure: Vec<f64>,
    /// Undirected edges `(i, j, c)` with `i < j`, sorted.
    edges: Vec<(usize, usize, f64)>,
    /// CSR adjacency: neighbors of `x` are `adj[offsets[x]..offsets[x + 1]]`.
    offsets: Vec<usize>,
    adj: Vec<(usize, f64)>,
    /// Uniform conductance scaling applied at this level.
    renorm: f64,
    /// Mesh size of the underlying cloud.
    mesh: f64,
}

impl GraphDirichletForm {
    /// Builds a form from an explicit edge list. Conductances must be
    /// positive, edges distinct, and the graph connected.
    pub fn from_edges(measure: Vec<f64>, edges: &[(usize, usize, f64)], mesh: f64) -> Result<Self> {
        Self::assemble(FormKind::Custom, measure, edges, 1.0, mesh)
    }

    fn assemble(kind: FormKind, measure: Vec<f64>, edges: &[(usize, usize, f64)], renorm: f64, mesh: f64) -> Result<Self> {
        let n = measure.len();
        if n == 0 || measure.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::InvalidParameter("form measure must be positive".into()));
        }
        let mut list = Vec::with_capacity(edges.len());
        for &(i, j, c) in edges {
            if i == j {
                return Err(Error::InvalidParameter(format!("self-loop at {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::InvalidParameter(format!("edge ({i}, {j}) out of range")));
            }
            if !(c > 0.0 && c.is_finite()) {
                return Err(Error::InvalidParameter(format!("conductance {c} on ({i}, {j})")));
            }
            list.push((i.min(j), i.max(j), c));
        }
        list.sort_by_key(|e| (e.0, e.1));
        if list.windows(2).any(|w| w[0].0 == w[1].0 && w[0].1 == w[1].1) {
            return Err(Error::InvalidParameter("duplicate edge".into()));
        }
        let mut deg = vec![0usize; n + 1];
        for &(i, j, _) in &list {
            deg[i + 1] += 1;
            deg[j + 1] += 1;
        }
        for k in 0..n {
            deg[k + 1] += deg[k];
        }
        let offsets = deg.clone();
        let mut fill = deg;
        let mut adj = vec![(0usize, 0.0f64); 2 * list.len()];
        for &(i, j, c) in &list {
            adj[fill[i]] = (j, c);
            fill[i] += 1;
            adj[fill[j]] = (i, c);
            fill[j] += 1;
        }
        let form = GraphDirichletForm {
            kind,
            measure,
            edges: list,
            offsets,
            adj,
            renorm,
            mesh,
        };
        if let Some(v) = form.unreachable_from(0) {
            return Err(Error::Disconnected(0, v));
        }
        Ok(form)
    }

    fn unreachable_from(&self, s: usize) -> Option<usize> {
        let n = self.len();
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            for &(y, _) in self.neighbors(x) {
                if !seen[y] {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        seen.iter().position(|&s| !s)
    }

    pub fn kind(&self) -> FormKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn renorm(&self) -> f64 {
        self.renorm
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    #[inline]
    pub fn neighbors(&self, x: usize) -> &[(usize, f64)] {
        &self.adj[self.offsets[x]..self.offsets[x + 1]]
    }

    /// `sum_y c_xy`.
    pub fn conductance_at(&self, x: usize) -> f64 {
        self.neighbors(x).iter().map(|e| e.1).sum()
    }

    fn check(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::FieldLength {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }

    /// Same edge set with unit conductances and the degree measure; its
    /// generator is `I - P` for the simple random walk.
    pub fn combinatorial(&self) -> GraphDirichletForm {
        let measure: Vec<f64> = (0..self.len()).map(|x| self.neighbors(x).len() as f64).collect();
        let edges: Vec<(usize, usize, f64)> = self.edges.iter().map(|&(i, j, _)| (i, j, 1.0)).collect();
        GraphDirichletForm::assemble(self.kind, measure, &edges, 1.0, self.mesh).expect("same connected edge set")
    }

    /// Generator applied to a vector: `(L f)(x) = (1/mu_x) sum_y c_xy (f_x - f_y)`.
    pub fn apply_generator(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|x| {
                let s: f64 = self.neighbors(x).iter().map(|&(y, c)| c * (f[x] - f[y])).sum();
                s / self.measure[x]
            })
            .collect()
    }

    pub fn write_edges_csv(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        writeln!(out, "x,y,c")?;
        for &(i, j, c) in &self.edges {
            writeln!(out, "{i},{j},{c:e}")?;
        }
        Ok(())
    }
}

/// Reference form on a grid or gasket cloud.
///
/// * `Grid1d`: nearest neighbors with `c = h / h^2`, so `E(f) -> int f'^2`.
/// * `Grid2d`: nearest neighbors with `c = h^2 / h^2 = 1`.
/// * `Gasket { level }`: level-`m` cell edges with `c = (5/3)^m`.
pub fn build_form(cloud: &MeasuredPointCloud, kind: FormKind) -> Result<GraphDirichletForm> {
    let mismatch = |reason: &str| Error::KindMismatch {
        kind: kind.to_string(),
        reason: format!("{reason}; cloud is {}", cloud.origin()),
    };
    let measure = cloud.weights().to_vec();
    match (kind, cloud.origin()) {
        (FormKind::Grid1d, &CloudOrigin::IntervalGrid { n }) => {
            let h = cloud.mesh();
            let c = 1.0 / h;
            let edges: Vec<_> = (0..n - 1).map(|k| (k, k + 1, c)).collect();
            GraphDirichletForm::assemble(kind, measure, &edges, c, h)
        }
        (FormKind::Grid2d, &CloudOrigin::SquareGrid { n }) => {
            let mut edges = Vec::with_capacity(2 * n * (n - 1));
            for iy in 0..n {
                for ix in 0..n {
                    let id = iy * n + ix;
                    if ix + 1 < n {
                        edges.push((id, id + 1, 1.0));
                    }
                    if iy + 1 < n {
                        edges.push((id, id + n, 1.0));
                    }
                }
            }
            GraphDirichletForm::assemble(kind, measure, &edges, 1.0, cloud.mesh())
        }
        (FormKind::Gasket { level }, &CloudOrigin::Gasket { level: cl }) => {
            if level != cl {
                return Err(mismatch("gasket level differs"));
            }
            let lat = gasket_lattice(level);
            let c = (5.0f64 / 3.0).powi(level as i32);
            let edges: Vec<_> = lat.edges.iter().map(|&(i, j)| (i, j, c)).collect();
            GraphDirichletForm::assemble(kind, measure, &edges, c, cloud.mesh())
        }
        (FormKind::Custom, _) => Err(mismatch("custom forms are built from edge lists")),
        _ => Err(mismatch("cloud does not match")),
    }
}

/// Form matching the origin of a grid or gasket cloud.
pub fn default_form(cloud: &MeasuredPointCloud) -> Result<GraphDirichletForm> {
    let kind = match cloud.origin() {
        CloudOrigin::IntervalGrid { .. } => FormKind::Grid1d,
        CloudOrigin::SquareGrid { .. } => FormKind::Grid2d,
        CloudOrigin::Gasket { level } => FormKind::Gasket { level: *level },
        other => {
            return Err(Error::KindMismatch {
                kind: "default".into(),
                reason: format!("no reference form for {other}"),
            })
        }
    };
    build_form(cloud, kind)
}

/// `E(f, f)`.
pub fn form_energy(form: &GraphDirichletForm, f: &ScalarField) -> Result<f64> {
    form.check(f)?;
    Ok(form.edges.iter().map(|&(i, j, c)| c * (f[i] - f[j]).powi(2)).sum())
}

/// Bilinear `E(f, g) = 1/2 sum c_xy (f_x - f_y)(g_x - g_y)`.
pub fn form_bilinear(form: &GraphDirichletForm, f: &ScalarField, g: &ScalarField) -> Result<f64> {
    form.check(f)?;
    form.check(g)?;
    Ok(form
        .edges
        .iter()
        .map(|&(i, j, c)| c * (f[i] - f[j]) * (g[i] - g[j]))
        .sum())
}

/// Per-vertex energy density `Gamma(f, f)(x) = 1/2 sum_y c_xy (f_x - f_y)^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyMeasure {
    pub density: Vec<f64>,
}

impl EnergyMeasure {
    pub fn total(&self) -> f64 {
        self.density.iter().sum()
    }

    /// Mass of a vertex set.
    pub fn mass_of(&self, ids: &[usize]) -> f64 {
        ids.iter().map(|&i| self.density[i]).sum()
    }
}

pub fn energy_measure(form: &GraphDirichletForm, f: &ScalarField) -> Result<EnergyMeasure> {
    form.check(f)?;
    let density = (0..form.len())
        .map(|x| 0.5 * form.neighbors(x).iter().map(|&(y, c)| c * (f[x] - f[y]).powi(2)).sum::<f64>())
        .collect();
    Ok(EnergyMeasure { density })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaLipReport {
    /// `max_x Gamma(f,f)(x) / (mu_x (Lip_h f(x))^2)` over vertices with positive slope.
    pub c_best: f64,
    pub r_loc: f64,
}

/// Compares the energy density with the squared discrete Lipschitz slope.
/// Only defined for grid forms.
pub fn gamma_vs_lip_check(
    form: &GraphDirichletForm,
    cloud: &MeasuredPointCloud,
    f: &ScalarField,
    r_loc: f64,
) -> Result<GammaLipReport> {
    if !matches!(form.kind(), FormKind::Grid1d | FormKind::Grid2d) {
        return Err(Error::KindMismatch {
            kind: form.kind().to_string(),
            reason: "density-vs-slope comparison applies to grid forms only".into(),
        });
    }
    if form.len() != cloud.len() {
        return Err(Error::InvalidParameter("form and cloud sizes differ".into()));
    }
    let gamma = energy_measure(form, f)?;
    let lip = discrete_lip(cloud, f, r_loc)?;
    let c_best = (0..cloud.len())
        .filter(|&x| lip[x] > 0.0)
        .map(|x| gamma.density[x] / (form.measure()[x] * lip[x] * lip[x]))
        .fold(0.0, f64::max);
    Ok(GammaLipReport { c_best, r_loc })
}

/// Values of the harmonic function on the level-`m` gasket with the given
/// corner values, via the 1/5-2/5 extension rule.
pub fn gasket_harmonic(level: u32, corner_values: [f64; 3]) -> Vec<f64> {
    let lat = gasket_lattice(level);
    let side = 1u64 << level;
    let mut value = std::collections::HashMap::new();
    value.insert((0u64, 0u64), corner_values[0]);
    value.insert((side, 0), corner_values[1]);
    value.insert((0, side), corner_values[2]);
    // cells as (a, b, s) in lattice units
    let mut cells = vec![(0u64, 0u64, side)];
    while cells[0].2 > 1 {
        let mut next = Vec::with_capacity(cells.len() * 3);
        for &(a, b, s) in &cells {
            let h = s / 2;
            let p = value[&(a, b)];
            let q = value[&(a + s, b)];
            let r = value[&(a, b + s)];
            // midpoint opposite to a corner gets 1/5 of it, 2/5 of the others
            value.entry((a + h, b)).or_insert((2.0 * p + 2.0 * q + r) / 5.0);
            value.entry((a, b + h)).or_insert((2.0 * p + q + 2.0 * r) / 5.0);
            value.entry((a + h, b + h)).or_insert((p + 2.0 * q + 2.0 * r) / 5.0);
            next.push((a, b, h));
            next.push((a + h, b, h));
            next.push((a, b + h, h));
        }
        cells = next;
    }
    lat.vertices.iter().map(|v| value[v]).collect()
}
