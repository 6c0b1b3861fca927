//! Ball-query accelerators.
//!
//! Euclidean clouds are bucketed into a uniform cell grid; abstract clouds
//! keep every row of the distance matrix sorted so that a ball is a prefix.

/// Uniform cell grid over the bounding box of a Euclidean cloud.
#[derive(Debug, Clone)]
pub(crate) struct CellGrid {
    dim: usize,
    lo: Vec<f64>,
    cell: f64,
    shape: Vec<usize>,
    /// CSR layout: points of cell `c` are `ids[offsets[c]..offsets[c + 1]]`.
    offsets: Vec<usize>,
    ids: Vec<u32>,
}

impl CellGrid {
    pub(crate) fn build(dim: usize, coords: &[f64], cell_hint: f64) -> Self {
        let n = coords.len() / dim;
        let mut lo = vec![f64::INFINITY; dim];
        let mut hi = vec![f64::NEG_INFINITY; dim];
        for p in coords.chunks_exact(dim) {
            for k in 0..dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        let extent: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| (b - a).max(0.0)).collect();
        let max_extent = extent.iter().cloned().fold(0.0, f64::max);
        // Keep the cell count within a small multiple of n.
        let mut cell = if cell_hint > 0.0 { cell_hint } else { max_extent.max(1.0) };
        if max_extent == 0.0 {
            cell = 1.0;
        }
        loop {
            let cells: f64 = extent.iter().map(|e| (e / cell).floor() + 1.0).product();
            if cells <= 4.0 * n as f64 + 16.0 {
                break;
            }
            cell *= 1.5;
        }
        let shape: Vec<usize> = extent.iter().map(|e| (e / cell).floor() as usize + 1).collect();
        let total: usize = shape.iter().product();

        let cell_of = |p: &[f64]| -> usize {
            let mut idx = 0;
            for k in 0..dim {
                let c = (((p[k] - lo[k]) / cell).floor() as usize).min(shape[k] - 1);
                idx = idx * shape[k] + c;
            }
            idx
        };
        let mut counts = vec![0usize; total + 1];
        for p in coords.chunks_exact(dim) {
            counts[cell_of(p) + 1] += 1;
        }
        for c in 0..total {
            counts[c + 1] += counts[c];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut ids = vec![0u32; n];
        for (i, p) in coords.chunks_exact(dim).enumerate() {
            let c = cell_of(p);
            ids[fill[c]] = i as u32;
            fill[c] += 1;
        }
        CellGrid {
            dim,
            lo,
            cell,
            shape,
            offsets,
            ids,
        }
    }

    /// Calls `visit(id)` for every point whose cell intersects the
    /// axis-aligned box of half-width `r` around `center`.
    pub(crate) fn for_each_candidate(&self, center: &[f64], r: f64, mut visit: impl FnMut(usize)) {
        let dim = self.dim;
        let mut from = vec![0usize; dim];
        let mut to = vec![0usize; dim];
        for k in 0..dim {
            let a = ((center[k] - r - self.lo[k]) / self.cell).floor();
            let b = ((center[k] + r - self.lo[k]) / self.cell).floor();
            if b < 0.0 || a > (self.shape[k] - 1) as f64 {
                return;
            }
            from[k] = a.max(0.0) as usize;
            to[k] = (b as usize).min(self.shape[k] - 1);
        }
        let mut cur = from.clone();
        loop {
            let mut idx = 0;
            for (s, c) in self.shape.iter().zip(&cur) {
                idx = idx * s + c;
            }
            for &id in &self.ids[self.offsets[idx]..self.offsets[idx + 1]] {
                visit(id as usize);
            }
            // odometer increment, last axis fastest
            let mut k = dim;
            loop {
                if k == 0 {
                    return;
                }
                k -= 1;
                if cur[k] < to[k] {
                    cur[k] += 1;
                    break;
                }
                cur[k] = from[k];
            }
        }
    }
}

/// Per-row sorted neighbor lists for abstract (distance-matrix) clouds.
#[derive(Debug, Clone)]
pub(crate) struct SortedRows {
    n: usize,
    /// Row-major `(distance, id)` pairs, each row sorted by distance then id.
    rows: Vec<(f64, u32)>,
}

impl SortedRows {
    pub(crate) fn build(n: usize, dist: &[f64]) -> Self {
        let mut rows = Vec::with_capacity(n * n);
        for i in 0..n {
            let start = rows.len();
            rows.extend((0..n).map(|j| (dist[i * n + j], j as u32)));
            rows[start..].sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        }
        SortedRows { n, rows }
    }

    /// Entries of row `i` with distance strictly below `r`.
    pub(crate) fn within(&self, i: usize, r: f64) -> &[(f64, u32)] {
        let row = &self.rows[i * self.n..(i + 1) * self.n];
        let end = row.partition_point(|&(d, _)| d < r);
        &row[..end]
    }
}

#[derive(Debug, Clone)]
pub(crate) enum BallIndex {
    Cells(CellGrid),
    Rows(SortedRows),
    Scan,
}
