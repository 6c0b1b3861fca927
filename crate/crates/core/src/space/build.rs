use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{io, CloudOrigin, MeasuredPointCloud};
use crate::error::{Error, Result};

/// Descriptor of a space to discretize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SpaceSpec {
    /// `n` equispaced points on `[0, 1]`.
    IntervalGrid(usize),
    /// `n x n` equispaced points on `[0, 1]^2`.
    SquareGrid(usize),
    /// Vertex set of the level-`m` Sierpinski gasket graph.
    Gasket(u32),
    /// Centers of the `8^m` level-`m` Sierpinski carpet cells.
    Carpet(u32),
    /// Plain-text cloud file.
    File(PathBuf),
}

impl SpaceSpec {
    pub fn build(&self) -> Result<MeasuredPointCloud> {
        match self {
            SpaceSpec::IntervalGrid(n) => interval_grid(*n),
            SpaceSpec::SquareGrid(n) => square_grid(*n),
            SpaceSpec::Gasket(m) => gasket(*m),
            SpaceSpec::Carpet(m) => carpet(*m),
            SpaceSpec::File(path) => io::read_cloud(path),
        }
    }
}

impl fmt::Display for SpaceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpaceSpec::IntervalGrid(n) => write!(f, "interval:{n}"),
            SpaceSpec::SquareGrid(n) => write!(f, "square:{n}"),
            SpaceSpec::Gasket(m) => write!(f, "gasket:{m}"),
            SpaceSpec::Carpet(m) => write!(f, "carpet:{m}"),
            SpaceSpec::File(p) => write!(f, "file:{}", p.display()),
        }
    }
}

impl FromStr for SpaceSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, arg) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpace(format!("expected <kind>:<arg>, got {s:?}")))?;
        let int = |a: &str| -> Result<i64> {
            a.trim()
                .parse::<i64>()
                .map_err(|_| Error::InvalidSpace(format!("not an integer: {a:?}")))
        };
        let spec = match kind.trim() {
            "interval" | "interval_grid" => SpaceSpec::IntervalGrid(non_negative(int(arg)?)? as usize),
            "square" | "square_grid" => SpaceSpec::SquareGrid(non_negative(int(arg)?)? as usize),
            "gasket" => SpaceSpec::Gasket(non_negative(int(arg)?)? as u32),
            "carpet" => SpaceSpec::Carpet(non_negative(int(arg)?)? as u32),
            "file" => SpaceSpec::File(PathBuf::from(arg.trim())),
            other => return Err(Error::InvalidSpace(format!("unknown space kind {other:?}"))),
        };
        Ok(spec)
    }
}

fn non_negative(v: i64) -> Result<i64> {
    if v < 0 {
        Err(Error::InvalidSpace(format!("negative size {v}")))
    } else {
        Ok(v)
    }
}

impl TryFrom<String> for SpaceSpec {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SpaceSpec> for String {
    fn from(s: SpaceSpec) -> String {
        s.to_string()
    }
}

fn interval_grid(n: usize) -> Result<MeasuredPointCloud> {
    if n < 2 {
        return Err(Error::InvalidSpace(format!("interval grid needs n >= 2, got {n}")));
    }
    let h = 1.0 / (n - 1) as f64;
    let coords = (0..n).map(|k| k as f64 * h).collect();
    let weights = vec![1.0 / n as f64; n];
    MeasuredPointCloud::euclidean(1, coords, weights, Some(h), Some(1.0), CloudOrigin::IntervalGrid { n })
}

fn square_grid(n: usize) -> Result<MeasuredPointCloud> {
    if n < 2 {
        return Err(Error::InvalidSpace(format!("square grid needs n >= 2, got {n}")));
    }
    let h = 1.0 / (n - 1) as f64;
    let mut coords = Vec::with_capacity(2 * n * n);
    for iy in 0..n {
        for ix in 0..n {
            coords.push(ix as f64 * h);
            coords.push(iy as f64 * h);
        }
    }
    let weights = vec![1.0 / (n * n) as f64; n * n];
    MeasuredPointCloud::euclidean(
        2,
        coords,
        weights,
        Some(h),
        Some(std::f64::consts::SQRT_2),
        CloudOrigin::SquareGrid { n },
    )
}

/// Integer description of the level-`m` gasket graph.
///
/// A vertex `(a, b)` sits at `a * e1 + b * e2` scaled by `2^-m`, where
/// `e1 = (1, 0)` and `e2 = (1/2, sqrt(3)/2)`. Vertex ids follow the sorted
/// order of `(b, a)`, so the three outer corners are `(0, 0)`, `(2^m, 0)`
/// and `(0, 2^m)`.
#[derive(Debug, Clone)]
pub struct GasketLattice {
    pub level: u32,
    pub vertices: Vec<(u64, u64)>,
    /// Undirected edges of the level-`m` cells, `i < j`, sorted.
    pub edges: Vec<(usize, usize)>,
    /// Ids of the three outer corners.
    pub corners: [usize; 3],
}

pub fn gasket_lattice(level: u32) -> GasketLattice {
    let side = 1u64 << level;
    let mut cells = vec![(0u64, 0u64)];
    let mut s = side;
    while s > 1 {
        let half = s / 2;
        let mut next = Vec::with_capacity(cells.len() * 3);
        for &(a, b) in &cells {
            next.push((a, b));
            next.push((a + half, b));
            next.push((a, b + half));
        }
        cells = next;
        s = half;
    }
    // cells now have unit side
    let mut ids: BTreeMap<(u64, u64), usize> = BTreeMap::new();
    for &(a, b) in &cells {
        for v in [(b, a), (b, a + 1), (b + 1, a)] {
            ids.insert(v, 0);
        }
    }
    for (k, id) in ids.values_mut().enumerate() {
        *id = k;
    }
    let vertices: Vec<(u64, u64)> = ids.keys().map(|&(b, a)| (a, b)).collect();
    let mut edges = Vec::with_capacity(cells.len() * 3);
    for &(a, b) in &cells {
        let p = ids[&(b, a)];
        let q = ids[&(b, a + 1)];
        let r = ids[&(b + 1, a)];
        for (i, j) in [(p, q), (p, r), (q, r)] {
            edges.push((i.min(j), i.max(j)));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    let corners = [ids[&(0, 0)], ids[&(0, side)], ids[&(side, 0)]];
    GasketLattice {
        level,
        vertices,
        edges,
        corners,
    }
}

fn gasket(level: u32) -> Result<MeasuredPointCloud> {
    if level == 0 || level > 12 {
        return Err(Error::InvalidSpace(format!("gasket level must be in 1..=12, got {level}")));
    }
    let lat = gasket_lattice(level);
    let scale = 1.0 / (1u64 << level) as f64;
    let h = 0.75f64.sqrt();
    let mut coords = Vec::with_capacity(2 * lat.vertices.len());
    for &(a, b) in &lat.vertices {
        coords.push((a as f64 + 0.5 * b as f64) * scale);
        coords.push(b as f64 * h * scale);
    }
    let n = lat.vertices.len();
    MeasuredPointCloud::euclidean(
        2,
        coords,
        vec![1.0 / n as f64; n],
        Some(scale),
        Some(1.0),
        CloudOrigin::Gasket { level },
    )
}

fn carpet(level: u32) -> Result<MeasuredPointCloud> {
    if level == 0 || level > 6 {
        return Err(Error::InvalidSpace(format!("carpet level must be in 1..=6, got {level}")));
    }
    let side = 3u64.pow(level);
    let kept = |mut i: u64, mut j: u64| {
        while i > 0 || j > 0 {
            if i % 3 == 1 && j % 3 == 1 {
                return false;
            }
            i /= 3;
            j /= 3;
        }
        true
    };
    let h = 1.0 / side as f64;
    let mut coords = Vec::new();
    for j in 0..side {
        for i in 0..side {
            if kept(i, j) {
                coords.push((i as f64 + 0.5) * h);
                coords.push((j as f64 + 0.5) * h);
            }
        }
    }
    let n = coords.len() / 2;
    let diam = (1.0 - h) * std::f64::consts::SQRT_2;
    MeasuredPointCloud::euclidean(2, coords, vec![1.0 / n as f64; n], Some(h), Some(diam), CloudOrigin::Carpet { level })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_three_points() {
        let c = SpaceSpec::IntervalGrid(3).build().unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.coords(1).unwrap(), &[0.5]);
        assert_eq!(c.mesh(), 0.5);
        for w in c.weights() {
            assert!((w - 1.0 / 3.0).abs() < 1e-16);
        }
    }

    #[test]
    fn gasket_level_one_vertices() {
        let c = SpaceSpec::Gasket(1).build().unwrap();
        assert_eq!(c.len(), 6);
        let h = 0.75f64.sqrt();
        let mut pts: Vec<(f64, f64)> = (0..6).map(|i| (c.coords(i).unwrap()[0], c.coords(i).unwrap()[1])).collect();
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut want = vec![(0.0, 0.0), (1.0, 0.0), (0.5, h), (0.5, 0.0), (0.25, h / 2.0), (0.75, h / 2.0)];
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        for (p, q) in pts.iter().zip(&want) {
            assert!((p.0 - q.0).abs() < 1e-15 && (p.1 - q.1).abs() < 1e-15);
        }
        assert!(c.weights().iter().all(|w| (w - 1.0 / 6.0).abs() < 1e-16));
        assert_eq!(c.mesh(), 0.5);
    }

    #[test]
    fn gasket_vertex_count_recursion() {
        // N_0 = 3, N_{m+1} = 3 N_m - 3
        let mut expected = 3usize;
        for m in 0..=7u32 {
            let lat = gasket_lattice(m);
            assert_eq!(lat.vertices.len(), expected, "level {m}");
            assert_eq!(lat.vertices.len(), 3 * (3usize.pow(m) + 1) / 2);
            assert_eq!(lat.edges.len(), 3usize.pow(m + 1));
            expected = 3 * expected - 3;
        }
    }

    #[test]
    fn gasket_corners_have_degree_two() {
        let lat = gasket_lattice(4);
        let mut deg = vec![0; lat.vertices.len()];
        for &(i, j) in &lat.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        for c in lat.corners {
            assert_eq!(deg[c], 2);
        }
        assert_eq!(deg.iter().filter(|&&d| d == 4).count(), lat.vertices.len() - 3);
    }

    #[test]
    fn carpet_level_one() {
        let c = SpaceSpec::Carpet(1).build().unwrap();
        assert_eq!(c.len(), 8);
        assert!((c.mesh() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn parse_and_display() {
        for s in ["interval:2001", "square:201", "gasket:6", "carpet:3"] {
            let spec: SpaceSpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
        assert!("gasket:-1".parse::<SpaceSpec>().is_err());
        assert!("torus:3".parse::<SpaceSpec>().is_err());
        assert!(SpaceSpec::IntervalGrid(1).build().is_err());
        assert!(SpaceSpec::SquareGrid(0).build().is_err());
    }
}
