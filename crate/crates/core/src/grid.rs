//! Time grids and sampled paths.
//!
//! A [`TimeGrid`] is a strictly increasing set of nodes starting at 0; a
//! [`SamplePath`] holds one value row per node. Uniform grids built with the
//! same horizon nest exactly under dyadic refinement (node values are
//! bit-identical), which the restriction machinery relies on.

use crate::error::{Error, Result};
use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

/// Relative tolerance used when matching externally supplied times to nodes.
const NODE_MATCH_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    /// Uniform grid with `n` steps on `[0, horizon]`.
    pub fn uniform(horizon: f64, n: usize) -> Result<Self> {
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Grid(format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::Grid("grid needs at least one step".into()));
        }
        let nodes = (0..=n).map(|i| horizon * i as f64 / n as f64).collect();
        Ok(Self { nodes })
    }

    /// Power-graded grid `t_i = horizon * (i/n)^gamma`, denser near 0 for
    /// `gamma > 1`. Grids of this family nest under dyadic refinement just
    /// like uniform ones.
    pub fn graded(horizon: f64, n: usize, gamma: f64) -> Result<Self> {
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::Grid(format!("grading exponent must be >= 1, got {gamma}")));
        }
        if !(horizon > 0.0 && horizon.is_finite()) {
            return Err(Error::Grid(format!("horizon must be positive, got {horizon}")));
        }
        if n == 0 {
            return Err(Error::Grid("grid needs at least one step".into()));
        }
        let nodes = (0..=n)
            .map(|i| horizon * (i as f64 / n as f64).powf(gamma))
            .collect();
        Ok(Self { nodes })
    }

    /// Grid from explicit nodes; must start at 0 and increase strictly.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::Grid("grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(Error::Grid(format!("first node must be 0, got {}", nodes[0])));
        }
        for w in nodes.windows(2) {
            if !w[1].is_finite() || w[1] <= w[0] {
                return Err(Error::Grid(format!(
                    "nodes must increase strictly, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> f64 {
        self.nodes[i]
    }

    /// Number of nodes (steps + 1).
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn horizon(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    /// Largest spacing between consecutive nodes.
    pub fn mesh(&self) -> f64 {
        self.nodes
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let h = self.horizon() / self.steps() as f64;
        self.nodes
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h).abs() <= NODE_MATCH_TOL * self.horizon())
    }

    /// Index of the node equal to `t` (within a tight relative tolerance).
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let tol = NODE_MATCH_TOL * self.horizon().max(1.0);
        let i = self.nodes.partition_point(|&x| x < t - tol);
        if i < self.nodes.len() && (self.nodes[i] - t).abs() <= tol {
            Ok(i)
        } else {
            Err(Error::NodeNotOnGrid { t })
        }
    }

    /// Largest node index `i` with `t_i <= t` (the left-point projection used
    /// by the Euler scheme).
    pub fn left_index(&self, t: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x <= t);
        i.saturating_sub(1)
    }

    /// Sorted union of two node sets; nodes closer than the matching
    /// tolerance are merged.
    pub fn union(&self, other: &TimeGrid) -> Result<TimeGrid> {
        let tol = NODE_MATCH_TOL * self.horizon().max(other.horizon());
        let mut merged: Vec<f64> = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.len() || j < other.len() {
            let next = match (self.nodes.get(i), other.nodes.get(j)) {
                (Some(&a), Some(&b)) => {
                    if (a - b).abs() <= tol {
                        i += 1;
                        j += 1;
                        a
                    } else if a < b {
                        i += 1;
                        a
                    } else {
                        j += 1;
                        b
                    }
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => break,
            };
            merged.push(next);
        }
        TimeGrid::from_nodes(merged)
    }

    /// For each of `coarse`'s nodes, the index of the matching node in `self`.
    /// Errors if `coarse` is not a subgrid.
    pub fn subgrid_indices(&self, coarse: &TimeGrid) -> Result<Vec<usize>> {
        coarse.nodes.iter().map(|&t| self.index_of(t)).collect()
    }
}

/// Grid facts carried into serialized reports.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Default)]
pub struct GridMeta {
    pub steps: usize,
    pub horizon: f64,
    pub mesh: f64,
}

impl From<&TimeGrid> for GridMeta {
    fn from(g: &TimeGrid) -> Self {
        GridMeta {
            steps: g.steps(),
            horizon: g.horizon(),
            mesh: g.mesh(),
        }
    }
}

/// A (possibly vector-valued) function sampled on a [`TimeGrid`]: row `i`
/// holds the value at node `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    grid: TimeGrid,
    values: Array2<f64>,
}

impl SamplePath {
    pub fn new(grid: TimeGrid, values: Array2<f64>) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} value rows for {} grid nodes",
                values.nrows(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TimeGrid, dim: usize) -> Self {
        let values = Array2::zeros((grid.len(), dim));
        Self { grid, values }
    }

    /// Scalar path sampled from a closure.
    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((grid.len(), 1), |(i, _)| f(grid.node(i)));
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// Euclidean norm of the value at node `i`.
    pub fn row_norm(&self, i: usize) -> f64 {
        self.values.row(i).iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Euclidean norm of `value(i) - value(j)`.
    pub fn increment_norm(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (self.values.row(i), self.values.row(j));
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }

    /// Scalar view; errors unless `dim() == 1`.
    pub fn scalar_values(&self) -> Result<&[f64]> {
        if self.dim() != 1 {
            return Err(Error::DimensionMismatch(format!(
                "scalar view requested for a dim-{} path",
                self.dim()
            )));
        }
        Ok(self.values.as_slice().expect("standard layout"))
    }

    /// Single component as a scalar path (shares the grid).
    pub fn component(&self, j: usize) -> Result<SamplePath> {
        if j >= self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "component {j} of a dim-{} path",
                self.dim()
            )));
        }
        let col = self.values.column(j).insert_axis(ndarray::Axis(1)).to_owned();
        Ok(SamplePath {
            grid: self.grid.clone(),
            values: col,
        })
    }

    /// Restriction to a subgrid. Exact: values are copied at matching nodes.
    pub fn restrict_to(&self, coarse: &TimeGrid) -> Result<SamplePath> {
        let idx = self.grid.subgrid_indices(coarse)?;
        let mut values = Array2::zeros((coarse.len(), self.dim()));
        for (row, &i) in idx.iter().enumerate() {
            values.row_mut(row).assign(&self.values.row(i));
        }
        SamplePath::new(coarse.clone(), values)
    }

    /// The path up to node index `i` inclusive, as a path on `[0, t_i]`.
    pub fn prefix(&self, i: usize) -> Result<SamplePath> {
        if i == 0 || i >= self.grid.len() {
            return Err(Error::Grid(format!(
                "prefix end {i} outside 1..{}",
                self.grid.len() - 1
            )));
        }
        let grid = TimeGrid::from_nodes(self.grid.nodes()[..=i].to_vec())?;
        let values = self.values.slice(ndarray::s![..=i, ..]).to_owned();
        SamplePath::new(grid, values)
    }

    /// Piecewise-linear evaluation at an arbitrary time in `[0, horizon]`.
    pub fn interpolate(&self, t: f64, out: &mut [f64]) {
        let n = self.grid.len() - 1;
        let i = self.grid.left_index(t).min(n - 1);
        let (t0, t1) = (self.grid.node(i), self.grid.node(i + 1));
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        for (j, o) in out.iter_mut().enumerate() {
            *o = (1.0 - w) * self.values[[i, j]] + w * self.values[[i + 1, j]];
        }
    }

    /// Largest Euclidean row norm.
    pub fn sup_norm(&self) -> f64 {
        (0..self.grid.len()).map(|i| self.row_norm(i)).fold(0.0, f64::max)
    }

    /// Largest row-wise distance to `other` (grids must match).
    pub fn sup_distance(&self, other: &SamplePath) -> Result<f64> {
        if self.grid != other.grid || self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(
                "sup distance needs matching grids and dimensions".into(),
            ));
        }
        let mut worst = 0.0f64;
        for i in 0..self.grid.len() {
            let d: f64 = self
                .values
                .row(i)
                .iter()
                .zip(other.values.row(i).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            worst = worst.max(d);
        }
        Ok(worst)
    }

    /// CSV with header `t,x1,...,xd`. Values round-trip exactly: the shortest
    /// decimal representation that parses back to the same f64 is written.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        out.push('t');
        for j in 1..=self.dim() {
            let _ = write!(out, ",x{j}");
        }
        out.push('\n');
        for i in 0..self.grid.len() {
            let _ = write!(out, "{}", self.grid.node(i));
            for j in 0..self.dim() {
                let _ = write!(out, ",{}", self.values[[i, j]]);
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(self.to_csv_string().as_bytes())?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<SamplePath> {
        let reader = BufReader::new(r);
        let mut lines = reader.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Csv("empty csv".into()))??;
        let cols: Vec<&str> = header.trim_end().split(',').collect();
        if cols.first() != Some(&"t") {
            return Err(Error::Csv(format!("expected header starting with t, got `{header}`")));
        }
        let dim = cols.len() - 1;
        let mut nodes = Vec::new();
        let mut flat = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.trim_end().split(',').collect();
            if fields.len() != dim + 1 {
                return Err(Error::Csv(format!(
                    "row {}: {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    dim + 1
                )));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Csv(format!("row {}: {e}", lineno + 2)))
            };
            nodes.push(parse(fields[0])?);
            for f in &fields[1..] {
                flat.push(parse(f)?);
            }
        }
        let grid = TimeGrid::from_nodes(nodes)?;
        let values = Array2::from_shape_vec((grid.len(), dim), flat)
            .map_err(|e| Error::Csv(e.to_string()))?;
        SamplePath::new(grid, values)
    }

    pub fn write_csv_file<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn read_csv_file<P: AsRef<Path>>(path: P) -> Result<SamplePath> {
        let f = std::fs::File::open(path)?;
        Self::read_csv(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_grids_nest_exactly() {
        let fine = TimeGrid::uniform(1.0, 1024).unwrap();
        let coarse = TimeGrid::uniform(1.0, 256).unwrap();
        let idx = fine.subgrid_indices(&coarse).unwrap();
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(i, 4 * k);
            assert_eq!(fine.node(i), coarse.node(k), "dyadic nodes must match bitwise");
        }
    }

    #[test]
    fn graded_grids_nest_exactly() {
        let fine = TimeGrid::graded(2.0, 512, 2.0).unwrap();
        let coarse = TimeGrid::graded(2.0, 128, 2.0).unwrap();
        let idx = fine.subgrid_indices(&coarse).unwrap();
        for (k, &i) in idx.iter().enumerate() {
            assert_eq!(fine.node(i), coarse.node(k));
        }
    }

    #[test]
    fn left_index_is_left_point_projection() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.left_index(0.0), 0);
        assert_eq!(g.left_index(0.25), 1);
        assert_eq!(g.left_index(0.3), 1);
        assert_eq!(g.left_index(1.0), 4);
    }

    #[test]
    fn union_merges_and_dedups() {
        let a = TimeGrid::uniform(1.0, 4).unwrap();
        let b = TimeGrid::graded(1.0, 4, 2.0).unwrap();
        let u = a.union(&b).unwrap();
        assert_eq!(u.nodes().first(), Some(&0.0));
        assert_eq!(u.horizon(), 1.0);
        for &t in a.nodes() {
            u.index_of(t).unwrap();
        }
        for &t in b.nodes() {
            u.index_of(t).unwrap();
        }
        assert!(u.len() <= a.len() + b.len());
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::uniform(0.0, 4).is_err());
        assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 0.5]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let grid = TimeGrid::uniform(1.0, 7).unwrap();
        let mut values = Array2::zeros((8, 2));
        let mut state = 0x9e3779b97f4a7c15u64;
        for v in values.iter_mut() {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            *v = (state >> 11) as f64 / (1u64 << 53) as f64 * 3.7 - 1.3;
        }
        let p = SamplePath::new(grid, values).unwrap();
        let text = p.to_csv_string();
        let q = SamplePath::read_csv(text.as_bytes()).unwrap();
        assert_eq!(p, q, "csv round-trip must be bit-exact");
        assert!(text.starts_with("t,x1,x2\n"));
    }

    #[test]
    fn restriction_copies_matching_nodes() {
        let fine = TimeGrid::uniform(1.0, 64).unwrap();
        let path = SamplePath::from_fn(fine, |t| t * t);
        let coarse = TimeGrid::uniform(1.0, 16).unwrap();
        let r = path.restrict_to(&coarse).unwrap();
        for i in 0..=16 {
            assert_eq!(r.values()[[i, 0]], coarse.node(i) * coarse.node(i));
        }
    }
}
