//! Plain-text cloud import and CSV export.
//!
//! Import format: blank lines and lines starting with `#` are ignored. The
//! first remaining line is a header, either `<n> coords <dim>` or
//! `<n> matrix`, followed by `n` point lines. In `coords` mode a point line
//! holds `dim` coordinates then the weight; in `matrix` mode it holds the
//! `n` entries of the distance-matrix row then the weight.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{CloudOrigin, Geometry, MeasuredPointCloud, TRIANGLE_SAMPLES};
use crate::error::{Error, Result};

pub fn read_cloud(path: &Path) -> Result<MeasuredPointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_cloud(&text)
}

pub fn parse_cloud(text: &str) -> Result<MeasuredPointCloud> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 0,
        msg: "missing header".into(),
    })?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let bad_header = || Error::Parse {
        line: hline,
        msg: format!("expected `<n> coords <dim>` or `<n> matrix`, got {header:?}"),
    };
    let n: usize = tokens.first().and_then(|t| t.parse().ok()).ok_or_else(bad_header)?;
    if n == 0 {
        return Err(Error::InvalidSpace("empty cloud".into()));
    }
    let width = match (tokens.get(1).copied(), tokens.get(2)) {
        (Some("coords"), Some(d)) => d.parse::<usize>().ok().filter(|&d| d > 0).ok_or_else(bad_header)?,
        (Some("matrix"), None) => n,
        _ => return Err(bad_header()),
    };
    let matrix = tokens[1] == "matrix";

    let mut data = Vec::with_capacity(n * width);
    let mut weights = Vec::with_capacity(n);
    for _ in 0..n {
        let (ln, line) = lines.next().ok_or(Error::Parse {
            line: hline,
            msg: format!("expected {n} point lines"),
        })?;
        let vals: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<f64>().map_err(|_| Error::Parse {
                    line: ln,
                    msg: format!("not a number: {t:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if vals.len() != width + 1 {
            return Err(Error::Parse {
                line: ln,
                msg: format!("expected {} values, got {}", width + 1, vals.len()),
            });
        }
        data.extend_from_slice(&vals[..width]);
        weights.push(vals[width]);
    }
    if let Some((ln, _)) = lines.next() {
        return Err(Error::Parse {
            line: ln,
            msg: "trailing data after the last point".into(),
        });
    }
    if matrix {
        MeasuredPointCloud::from_distance_matrix(n, data, weights, TRIANGLE_SAMPLES, 0)
    } else {
        MeasuredPointCloud::euclidean(width, data, weights, None, None, CloudOrigin::Imported)
    }
}

/// Writes `id, x0, .., x{d-1}, weight` (abstract clouds: `id, weight`).
pub fn write_cloud_csv(cloud: &MeasuredPointCloud, out: &mut impl Write) -> std::io::Result<()> {
    match cloud.geometry() {
        Geometry::Euclidean { dim, .. } => {
            let cols: Vec<String> = (0..*dim).map(|k| format!("x{k}")).collect();
            writeln!(out, "id,{},weight", cols.join(","))?;
        }
        Geometry::Matrix { .. } => writeln!(out, "id,weight")?,
    }
    for i in 0..cloud.len() {
        write!(out, "{i}")?;
        if let Some(p) = cloud.coords(i) {
            for c in p {
                write!(out, ",{c:e}")?;
            }
        }
        writeln!(out, ",{:e}", cloud.weight(i))?;
    }
    Ok(())
}
