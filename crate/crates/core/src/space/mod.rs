//! Finite weighted point clouds standing in for compact metric measure
//! spaces, with open-ball queries and volume-regularity diagnostics.

mod build;
mod doubling;
mod index;
pub mod io;

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use build::{gasket_lattice, GasketLattice, SpaceSpec};
pub use doubling::{check_mass_bounds, doubling_ratio, estimate_doubling, CenterPolicy, DoublingProfile, DoublingSample, MassBoundReport};

use crate::error::{Error, Result};
use crate::field::ScalarField;
use index::{BallIndex, CellGrid, SortedRows};

/// Default admissibility factor: scales below `KAPPA * mesh` are refused.
pub const KAPPA: f64 = 3.0;

/// Default number of sampled triples for triangle-inequality validation.
pub const TRIANGLE_SAMPLES: usize = 10_000;

/// How distances are defined on the cloud.
#[derive(Debug, Clone)]
pub enum Geometry {
    /// Points in R^dim, row-major coordinates.
    Euclidean { dim: usize, coords: Vec<f64> },
    /// Explicit symmetric distance matrix, row-major `n x n`.
    Matrix { n: usize, dist: Vec<f64> },
}

/// Where a cloud came from; graph forms use this to recover edge structure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CloudOrigin {
    IntervalGrid { n: usize },
    SquareGrid { n: usize },
    Gasket { level: u32 },
    Carpet { level: u32 },
    Imported,
}

impl fmt::Display for CloudOrigin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CloudOrigin::IntervalGrid { n } => write!(f, "interval_grid({n})"),
            CloudOrigin::SquareGrid { n } => write!(f, "square_grid({n})"),
            CloudOrigin::Gasket { level } => write!(f, "gasket({level})"),
            CloudOrigin::Carpet { level } => write!(f, "carpet({level})"),
            CloudOrigin::Imported => write!(f, "imported"),
        }
    }
}

/// A finite metric measure space: points, a metric, positive weights and a
/// ball-query index. Immutable after construction.
#[derive(Debug, Clone)]
pub struct MeasuredPointCloud {
    geometry: Geometry,
    weights: Vec<f64>,
    mesh: f64,
    diameter: f64,
    kappa: f64,
    origin: CloudOrigin,
    index: BallIndex,
    bbox: Option<(Vec<f64>, Vec<f64>)>,
}

/// An open ball `B(x, r) = { y : d(x, y) < r }` with its members and mass.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    pub center: usize,
    pub radius: f64,
    /// Sorted point ids.
    pub members: Vec<usize>,
    pub mass: f64,
}

impl MeasuredPointCloud {
    /// Builds a Euclidean cloud. `mesh` and `diameter` are computed when not
    /// supplied.
    pub fn euclidean(
        dim: usize,
        coords: Vec<f64>,
        weights: Vec<f64>,
        mesh: Option<f64>,
        diameter: Option<f64>,
        origin: CloudOrigin,
    ) -> Result<Self> {
        if dim == 0 || !coords.len().is_multiple_of(dim) {
            return Err(Error::InvalidSpace(format!(
                "{} coordinates do not split into dimension {dim}",
                coords.len()
            )));
        }
        let n = coords.len() / dim;
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::InvalidSpace(format!("non-finite coordinate at point {}", i / dim)));
        }
        validate_weights(&weights, n)?;
        let geometry = Geometry::Euclidean { dim, coords };
        Self::finish(geometry, weights, mesh, diameter, origin)
    }

    /// Builds an abstract cloud from a full distance matrix. The matrix must be
    /// symmetric with zero diagonal; the triangle inequality is spot-checked
    /// on `triangle_samples` random triples.
    pub fn from_distance_matrix(
        n: usize,
        dist: Vec<f64>,
        weights: Vec<f64>,
        triangle_samples: usize,
        seed: u64,
    ) -> Result<Self> {
        if dist.len() != n * n {
            return Err(Error::InvalidSpace(format!(
                "distance matrix has {} entries, expected {}",
                dist.len(),
                n * n
            )));
        }
        validate_weights(&weights, n)?;
        for i in 0..n {
            if dist[i * n + i] != 0.0 {
                return Err(Error::InvalidMetric(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let (a, b) = (dist[i * n + j], dist[j * n + i]);
                if !(a.is_finite() && a >= 0.0) {
                    return Err(Error::InvalidMetric(format!("invalid distance at ({i}, {j})")));
                }
                if a != b {
                    return Err(Error::AsymmetricDistance { i, j, a, b });
                }
            }
        }
        if n >= 3 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..triangle_samples {
                let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                let lhs = dist[a * n + c];
                let rhs = dist[a * n + b] + dist[b * n + c];
                if lhs > rhs * (1.0 + 1e-12) + 1e-15 {
                    return Err(Error::InvalidMetric(format!(
                        "triangle inequality at ({a}, {b}, {c})"
                    )));
                }
            }
        }
        let geometry = Geometry::Matrix { n, dist };
        Self::finish(geometry, weights, None, None, CloudOrigin::Imported)
    }

    fn finish(
        geometry: Geometry,
        weights: Vec<f64>,
        mesh: Option<f64>,
        diameter: Option<f64>,
        origin: CloudOrigin,
    ) -> Result<Self> {
        let mut cloud = MeasuredPointCloud {
            geometry,
            weights,
            mesh: 0.0,
            diameter: 0.0,
            kappa: KAPPA,
            origin,
            index: BallIndex::Scan,
            bbox: None,
        };
        if let Geometry::Euclidean { dim, coords } = &cloud.geometry {
            let mut lo = vec![f64::INFINITY; *dim];
            let mut hi = vec![f64::NEG_INFINITY; *dim];
            for p in coords.chunks_exact(*dim) {
                for k in 0..*dim {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            cloud.bbox = Some((lo, hi));
        }
        cloud.diameter = match diameter {
            Some(d) => d,
            None => cloud.brute_diameter(),
        };
        cloud.mesh = match mesh {
            Some(h) => h,
            None => cloud.brute_mesh(),
        };
        if !(cloud.mesh > 0.0) {
            return Err(Error::InvalidSpace("cloud needs at least two distinct points".into()));
        }
        cloud.index = match &cloud.geometry {
            Geometry::Euclidean { dim, coords } if *dim <= 3 => {
                BallIndex::Cells(CellGrid::build(*dim, coords, cloud.mesh))
            }
            Geometry::Euclidean { .. } => BallIndex::Scan,
            Geometry::Matrix { n, dist } => BallIndex::Rows(SortedRows::build(*n, dist)),
        };
        Ok(cloud)
    }

    fn brute_diameter(&self) -> f64 {
        let n = self.len();
        let mut best = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                best = best.max(self.dist(i, j));
            }
        }
        best
    }

    /// Largest nearest-neighbor distance.
    fn brute_mesh(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            let mut nearest = f64::INFINITY;
            for j in 0..n {
                if j != i {
                    let d = self.dist(i, j);
                    if d > 0.0 {
                        nearest = nearest.min(d);
                    }
                }
            }
            if nearest.is_finite() {
                worst = worst.max(nearest);
            }
        }
        worst
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn mesh(&self) -> f64 {
        self.mesh
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// Smallest scale accepted by the scale-dependent operators.
    pub fn min_scale(&self) -> f64 {
        self.kappa * self.mesh
    }

    pub fn is_admissible(&self, r: f64) -> bool {
        r >= self.min_scale()
    }

    pub fn require_admissible(&self, r: f64) -> Result<()> {
        if self.is_admissible(r) {
            Ok(())
        } else {
            Err(Error::InadmissibleScale {
                r,
                min: self.min_scale(),
            })
        }
    }

    pub fn origin(&self) -> &CloudOrigin {
        &self.origin
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geometry
    }

    pub fn dim(&self) -> Option<usize> {
        match &self.geometry {
            Geometry::Euclidean { dim, .. } => Some(*dim),
            Geometry::Matrix { .. } => None,
        }
    }

    /// Coordinates of point `i` (Euclidean clouds only).
    pub fn coords(&self, i: usize) -> Option<&[f64]> {
        match &self.geometry {
            Geometry::Euclidean { dim, coords } => Some(&coords[i * dim..(i + 1) * dim]),
            Geometry::Matrix { .. } => None,
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        match &self.geometry {
            Geometry::Euclidean { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt()
            }
            Geometry::Matrix { n, dist } => dist[i * n + j],
        }
    }

    /// Visits every `y` with `d(x, y) < r`, passing `(y, d(x, y))`. Visiting
    /// order is fixed by the index but not sorted.
    #[inline]
    pub fn for_each_in_ball(&self, x: usize, r: f64, mut visit: impl FnMut(usize, f64)) {
        match &self.index {
            BallIndex::Cells(grid) => {
                let center = self.coords(x).expect("cell index implies coordinates");
                grid.for_each_candidate(center, r, |y| {
                    let d = self.dist(x, y);
                    if d < r {
                        visit(y, d);
                    }
                });
            }
            BallIndex::Rows(rows) => {
                for &(d, y) in rows.within(x, r) {
                    visit(y as usize, d);
                }
            }
            BallIndex::Scan => self.for_each_in_ball_brute(x, r, visit),
        }
    }

    /// Linear scan reference for [`Self::for_each_in_ball`].
    pub fn for_each_in_ball_brute(&self, x: usize, r: f64, mut visit: impl FnMut(usize, f64)) {
        for y in 0..self.len() {
            let d = self.dist(x, y);
            if d < r {
                visit(y, d);
            }
        }
    }

    /// Mass of `B(x, r)`.
    pub fn ball_mass(&self, x: usize, r: f64) -> f64 {
        let mut m = 0.0;
        self.for_each_in_ball(x, r, |y, _| m += self.weights[y]);
        m
    }

    /// Open ball `B(x, r)` via the index.
    pub fn ball(&self, x: usize, r: f64) -> Ball {
        let mut members = Vec::new();
        self.for_each_in_ball(x, r, |y, _| members.push(y));
        self.make_ball(x, r, members)
    }

    /// Open ball `B(x, r)` via a linear scan.
    pub fn ball_brute(&self, x: usize, r: f64) -> Ball {
        let mut members = Vec::new();
        self.for_each_in_ball_brute(x, r, |y, _| members.push(y));
        self.make_ball(x, r, members)
    }

    fn make_ball(&self, x: usize, r: f64, mut members: Vec<usize>) -> Ball {
        members.sort_unstable();
        let mass = members.iter().map(|&y| self.weights[y]).sum();
        Ball {
            center: x,
            radius: r,
            members,
            mass,
        }
    }

    /// `(1 / mu(B)) * sum_{y in B} mu_y f_y`.
    pub fn ball_average(&self, f: &ScalarField, b: &Ball) -> f64 {
        let s: f64 = b.members.iter().map(|&y| self.weights[y] * f[y]).sum();
        s / b.mass
    }

    /// Average of `f` over `B(x, r)` without materializing the ball.
    pub fn average_over(&self, f: &ScalarField, x: usize, r: f64) -> f64 {
        let (mut s, mut m) = (0.0, 0.0);
        self.for_each_in_ball(x, r, |y, _| {
            s += self.weights[y] * f[y];
            m += self.weights[y];
        });
        s / m
    }

    /// Returns a copy with weights multiplied by `lambda`.
    pub fn rescaled_weights(&self, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight scale {lambda}")));
        }
        let mut c = self.clone();
        c.weights.iter_mut().for_each(|w| *w *= lambda);
        Ok(c)
    }

    /// True when `B(x, r)` stays inside the coordinate bounding box of the
    /// cloud. Abstract clouds treat every ball as interior.
    pub fn ball_inside_hull(&self, x: usize, r: f64) -> bool {
        match (&self.bbox, self.coords(x)) {
            (Some((lo, hi)), Some(p)) => {
                (0..p.len()).all(|k| p[k] - r >= lo[k] - 1e-12 && p[k] + r <= hi[k] + 1e-12)
            }
            _ => true,
        }
    }

    /// `(sum_i mu_i f_i^2)^(1/2)`.
    pub fn l2_norm(&self, f: &ScalarField) -> f64 {
        self.weights.iter().zip(f.values()).map(|(w, v)| w * v * v).sum::<f64>().sqrt()
    }

    pub fn lq_norm(&self, f: &ScalarField, q: f64) -> f64 {
        self.weights
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * v.abs().powf(q))
            .sum::<f64>()
            .powf(1.0 / q)
    }

    pub fn inner(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        self.weights
            .iter()
            .zip(f.values().iter().zip(g.values()))
            .map(|(w, (a, b))| w * a * b)
            .sum()
    }

    pub fn l2_distance(&self, f: &ScalarField, g: &ScalarField) -> f64 {
        self.weights
            .iter()
            .zip(f.values().iter().zip(g.values()))
            .map(|(w, (a, b))| w * (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Checks that `f` lives on this cloud.
    pub fn check_field(&self, f: &ScalarField) -> Result<()> {
        if f.len() != self.len() {
            return Err(Error::FieldLength {
                expected: self.len(),
                got: f.len(),
            });
        }
        Ok(())
    }
}

fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidSpace(format!("{} weights for {n} points", weights.len())));
    }
    if n == 0 {
        return Err(Error::InvalidSpace("empty cloud".into()));
    }
    if let Some(i) = weights.iter().position(|w| !(*w > 0.0 && w.is_finite())) {
        return Err(Error::InvalidSpace(format!("weight at point {i} is not positive")));
    }
    Ok(())
}
