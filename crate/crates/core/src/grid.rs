//! Space-time cylinders, uniform node-centered grids, grid functions and
//! node sets.
//!
//! The ball `B_R` is embedded in the box `[-R, R]^n`. Every box node with
//! `|x| >= R` is lateral boundary, so interior nodes always have a full
//! nine-point spatial neighborhood inside the box.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance used to decide `|x| >= R` on the lattice.
const LATERAL_RTOL: f64 = 1e-12;

/// The space-time cylinder `B_R x ]0, T[` with its uniform tensor grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CylinderRecord", into = "CylinderRecord")]
pub struct Cylinder {
    dim: usize,
    radius: f64,
    final_time: f64,
    nx: usize,
    nt: usize,
}

/// Serialized form of a [`Cylinder`].
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct CylinderRecord {
    n: usize,
    radius: f64,
    final_time: f64,
    nx: usize,
    nt: usize,
}

impl TryFrom<CylinderRecord> for Cylinder {
    type Error = Error;

    fn try_from(r: CylinderRecord) -> Result<Self> {
        Cylinder::new(r.n, r.radius, r.final_time, r.nx, r.nt)
    }
}

impl From<Cylinder> for CylinderRecord {
    fn from(c: Cylinder) -> Self {
        CylinderRecord {
            n: c.dim,
            radius: c.radius,
            final_time: c.final_time,
            nx: c.nx,
            nt: c.nt,
        }
    }
}

impl Cylinder {
    /// Builds the cylinder `C_{R,T}` in dimension `n` with `nx` nodes per
    /// spatial axis and `nt` time levels.
    pub fn new(n: usize, radius: f64, final_time: f64, nx: usize, nt: usize) -> Result<Self> {
        if n != 1 && n != 2 {
            return Err(Error::InvalidGrid(format!(
                "spatial dimension must be 1 or 2, got {n}"
            )));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "radius must be positive, got {radius}"
            )));
        }
        if !(final_time.is_finite() && final_time > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "final time must be positive, got {final_time}"
            )));
        }
        if nx < 3 {
            return Err(Error::InvalidGrid(format!(
                "need at least 3 nodes per spatial axis, got {nx}"
            )));
        }
        if nt < 2 {
            return Err(Error::InvalidGrid(format!(
                "need at least 2 time levels, got {nt}"
            )));
        }
        Ok(Cylinder {
            dim: n,
            radius,
            final_time,
            nx,
            nt,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn final_time(&self) -> f64 {
        self.final_time
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn nt(&self) -> usize {
        self.nt
    }

    /// Spatial step `2R / (Nx - 1)`.
    pub fn hx(&self) -> f64 {
        2.0 * self.radius / (self.nx - 1) as f64
    }

    /// Time step `T / (Nt - 1)`.
    pub fn ht(&self) -> f64 {
        self.final_time / (self.nt - 1) as f64
    }

    /// Number of spatial nodes, `Nx^n`.
    pub fn n_space(&self) -> usize {
        self.nx.pow(self.dim as u32)
    }

    /// Number of space-time nodes.
    pub fn n_nodes(&self) -> usize {
        self.n_space() * self.nt
    }

    /// Axis coordinate of grid index `i`. Computed as `R (2i - m) / m` so the
    /// grid is exactly symmetric and contains `x = 0` when `Nx` is odd.
    pub fn coord(&self, i: usize) -> f64 {
        let m = (self.nx - 1) as f64;
        self.radius * ((2.0 * i as f64 - m) / m)
    }

    /// Time of level `k`.
    pub fn time(&self, k: usize) -> f64 {
        self.final_time * (k as f64 / (self.nt - 1) as f64)
    }

    /// Global node index of spatial node `s` at time level `k`.
    #[inline]
    pub fn node(&self, s: usize, k: usize) -> usize {
        k * self.n_space() + s
    }

    /// Splits a global node index into (spatial node, time level).
    #[inline]
    pub fn split(&self, node: usize) -> (usize, usize) {
        let ns = self.n_space();
        (node % ns, node / ns)
    }

    /// Spatial node index from axis indices (`j` ignored in 1D).
    #[inline]
    pub fn space_index(&self, i: usize, j: usize) -> usize {
        if self.dim == 1 {
            i
        } else {
            i + self.nx * j
        }
    }

    /// Axis indices of a spatial node (`j = 0` in 1D).
    #[inline]
    pub fn axis_indices(&self, s: usize) -> [usize; 2] {
        if self.dim == 1 {
            [s, 0]
        } else {
            [s % self.nx, s / self.nx]
        }
    }

    /// Coordinates of a spatial node; the second entry is 0 in 1D.
    pub fn point(&self, s: usize) -> [f64; 2] {
        let [i, j] = self.axis_indices(s);
        if self.dim == 1 {
            [self.coord(i), 0.0]
        } else {
            [self.coord(i), self.coord(j)]
        }
    }

    /// Euclidean norm `|x|` of a spatial node.
    pub fn abs_x(&self, s: usize) -> f64 {
        let [x, y] = self.point(s);
        x.hypot(y)
    }

    /// True when `|x| >= R` (up to a relative lattice tolerance).
    pub fn is_lateral(&self, s: usize) -> bool {
        self.abs_x(s) >= self.radius * (1.0 - LATERAL_RTOL)
    }

    /// True when the node lies strictly outside the closed ball.
    pub fn is_exterior(&self, s: usize) -> bool {
        self.abs_x(s) > self.radius * (1.0 + LATERAL_RTOL)
    }

    /// Spatial node at the origin, when the grid contains it.
    pub fn origin(&self) -> Option<usize> {
        if self.nx % 2 == 1 {
            let c = (self.nx - 1) / 2;
            Some(self.space_index(c, c))
        } else {
            None
        }
    }

    /// Neighbor of spatial node `s` shifted by `(di, dj)` axis steps, if it
    /// stays in the box.
    #[inline]
    pub fn shift(&self, s: usize, di: isize, dj: isize) -> Option<usize> {
        let [i, j] = self.axis_indices(s);
        let ni = i as isize + di;
        let nj = j as isize + dj;
        let lim = self.nx as isize;
        if ni < 0 || ni >= lim {
            return None;
        }
        if self.dim == 1 {
            return (dj == 0).then_some(ni as usize);
        }
        if nj < 0 || nj >= lim {
            return None;
        }
        Some(self.space_index(ni as usize, nj as usize))
    }

    /// Trapezoid weight of axis index `i`.
    pub fn axis_weight(&self, i: usize) -> f64 {
        let h = self.hx();
        if i == 0 || i + 1 == self.nx {
            0.5 * h
        } else {
            h
        }
    }

    /// Trapezoid weight of a spatial node (product rule in 2D).
    pub fn space_weight(&self, s: usize) -> f64 {
        let [i, j] = self.axis_indices(s);
        if self.dim == 1 {
            self.axis_weight(i)
        } else {
            self.axis_weight(i) * self.axis_weight(j)
        }
    }

    /// Trapezoid weight of time level `k`.
    pub fn time_weight(&self, k: usize) -> f64 {
        let h = self.ht();
        if k == 0 || k + 1 == self.nt {
            0.5 * h
        } else {
            h
        }
    }

    /// Writes the self-describing JSON record `{n, radius, final_time, nx, nt}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("cylinder serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub(crate) fn check_same(&self, other: &Cylinder, what: &str) -> Result<()> {
        if self != other {
            return Err(Error::GridMismatch(format!(
                "{what}: {self} vs {other}"
            )));
        }
        Ok(())
    }
}

impl fmt::Display for Cylinder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "C(n={}, R={}, T={}, Nx={}, Nt={})",
            self.dim, self.radius, self.final_time, self.nx, self.nt
        )
    }
}

/// Classification of a space-time node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Interior,
    /// `|x| >= R`, including box nodes outside the ball.
    Lateral,
    /// The slice `t = 0`.
    Initial,
    /// `|x| < R` on the slice `t = T`; not part of the parabolic boundary.
    Final,
}

impl NodeKind {
    pub fn is_parabolic_boundary(self) -> bool {
        matches!(self, NodeKind::Lateral | NodeKind::Initial)
    }
}

/// Per-node classification into parabolic boundary and interior.
#[derive(Debug, Clone, PartialEq)]
pub struct ParabolicBoundaryMask {
    grid: Cylinder,
    flags: Vec<NodeKind>,
}

/// Classifies every node of the cylinder.
pub fn parabolic_boundary(grid: &Cylinder) -> ParabolicBoundaryMask {
    let ns = grid.n_space();
    let lateral: Vec<bool> = (0..ns).map(|s| grid.is_lateral(s)).collect();
    let mut flags = Vec::with_capacity(grid.n_nodes());
    for k in 0..grid.nt() {
        for &lat in &lateral {
            let kind = if k == 0 {
                NodeKind::Initial
            } else if lat {
                NodeKind::Lateral
            } else if k + 1 == grid.nt() {
                NodeKind::Final
            } else {
                NodeKind::Interior
            };
            flags.push(kind);
        }
    }
    ParabolicBoundaryMask { grid: *grid, flags }
}

impl ParabolicBoundaryMask {
    pub fn grid(&self) -> &Cylinder {
        &self.grid
    }

    pub fn kind(&self, node: usize) -> NodeKind {
        self.flags[node]
    }

    pub fn flags(&self) -> &[NodeKind] {
        &self.flags
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.flags[node].is_parabolic_boundary()
    }

    /// Nodes where the operator is evaluated: interior plus the final slice.
    pub fn evaluation_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.flags
            .iter()
            .enumerate()
            .filter(|(_, k)| !k.is_parabolic_boundary())
            .map(|(i, _)| i)
    }
}

/// Real values on every node of a cylinder grid.
///
/// An optional support mask gives extension-by-zero semantics: nodes outside
/// the support evaluate to 0 through [`GridFunction::value`] and to `None`
/// through [`GridFunction::get`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Cylinder,
    values: Vec<f64>,
    support: Option<Vec<bool>>,
}

impl GridFunction {
    /// Wraps nodal values; rejects NaN and infinities.
    pub fn new(grid: Cylinder, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_nodes() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} nodes of {grid}",
                values.len(),
                grid.n_nodes()
            )));
        }
        if let Some((node, &value)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { node, value });
        }
        Ok(GridFunction {
            grid,
            values,
            support: None,
        })
    }

    /// Samples `f(x, t)`; `x` has length `n`.
    pub fn from_fn(grid: &Cylinder, f: impl Fn(&[f64], f64) -> f64) -> Result<Self> {
        let n = grid.dim();
        let mut values = Vec::with_capacity(grid.n_nodes());
        for k in 0..grid.nt() {
            let t = grid.time(k);
            for s in 0..grid.n_space() {
                let p = grid.point(s);
                values.push(f(&p[..n], t));
            }
        }
        GridFunction::new(*grid, values)
    }

    pub fn zeros(grid: &Cylinder) -> Self {
        GridFunction {
            grid: *grid,
            values: vec![0.0; grid.n_nodes()],
            support: None,
        }
    }

    pub fn constant(grid: &Cylinder, value: f64) -> Result<Self> {
        GridFunction::new(*grid, vec![value; grid.n_nodes()])
    }

    pub fn grid(&self) -> &Cylinder {
        &self.grid
    }

    /// Raw nodal values, including those outside the support.
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn support(&self) -> Option<&[bool]> {
        self.support.as_deref()
    }

    pub fn in_support(&self, node: usize) -> bool {
        self.support.as_ref().is_none_or(|s| s[node])
    }

    /// Value with extension by zero outside the support.
    #[inline]
    pub fn value(&self, node: usize) -> f64 {
        if self.in_support(node) {
            self.values[node]
        } else {
            0.0
        }
    }

    /// Value, or `None` outside the support.
    pub fn get(&self, node: usize) -> Option<f64> {
        self.in_support(node).then(|| self.values[node])
    }

    pub fn at(&self, s: usize, k: usize) -> f64 {
        self.value(self.grid.node(s, k))
    }

    /// Declares a support mask. Values outside it are zeroed.
    pub fn with_support(mut self, support: Vec<bool>) -> Result<Self> {
        if support.len() != self.values.len() {
            return Err(Error::GridMismatch("support mask length".into()));
        }
        for (v, &inside) in self.values.iter_mut().zip(&support) {
            if !inside {
                *v = 0.0;
            }
        }
        self.support = Some(support);
        Ok(self)
    }

    /// Zero extension outside `set`.
    pub fn restrict(&self, set: &PositivitySet) -> Result<Self> {
        self.grid.check_same(set.grid(), "restriction set")?;
        let mut support = set.membership().to_vec();
        if let Some(own) = &self.support {
            for (m, &o) in support.iter_mut().zip(own) {
                *m &= o;
            }
        }
        GridFunction {
            grid: self.grid,
            values: self.values.clone(),
            support: None,
        }
        .with_support(support)
    }

    /// Nodewise map applied to the zero-extended values.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = (0..self.values.len()).map(|i| f(self.value(i))).collect();
        GridFunction::new(self.grid, values)
    }

    pub fn scale(&self, factor: f64) -> Result<Self> {
        self.map(|v| factor * v)
    }

    /// `alpha * self + beta * other` on zero-extended values.
    pub fn axpby(&self, alpha: f64, other: &GridFunction, beta: f64) -> Result<Self> {
        self.grid.check_same(&other.grid, "linear combination")?;
        let values = (0..self.values.len())
            .map(|i| alpha * self.value(i) + beta * other.value(i))
            .collect();
        GridFunction::new(self.grid, values)
    }

    /// Maximum over the support; `None` when the support is empty.
    pub fn max(&self) -> Option<f64> {
        (0..self.values.len())
            .filter(|&i| self.in_support(i))
            .map(|i| self.values[i])
            .reduce(f64::max)
    }

    pub fn min(&self) -> Option<f64> {
        (0..self.values.len())
            .filter(|&i| self.in_support(i))
            .map(|i| self.values[i])
            .reduce(f64::min)
    }

    /// Writes CSV with columns `node, x1[, x2], t, value`. Nodes outside the
    /// support are omitted.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let g = &self.grid;
        if g.dim() == 1 {
            w.write_record(["node", "x1", "t", "value"])?;
        } else {
            w.write_record(["node", "x1", "x2", "t", "value"])?;
        }
        for node in 0..g.n_nodes() {
            if !self.in_support(node) {
                continue;
            }
            let (s, k) = g.split(node);
            let p = g.point(s);
            let mut rec = vec![node.to_string(), p[0].to_string()];
            if g.dim() == 2 {
                rec.push(p[1].to_string());
            }
            rec.push(g.time(k).to_string());
            rec.push(self.values[node].to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_csv_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let f = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    /// Reads the CSV written by [`GridFunction::write_csv`]. Without an
    /// explicit grid the cylinder is inferred from the coordinate columns.
    /// Missing nodes are outside the support.
    pub fn read_csv<R: Read>(reader: R, grid: Option<Cylinder>) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(reader);
        let headers = rdr.headers()?.clone();
        let dim = match headers.len() {
            4 => 1,
            5 => 2,
            k => {
                return Err(Error::InvalidGrid(format!(
                    "grid-function CSV needs 4 or 5 columns, found {k}"
                )))
            }
        };
        let mut rows: Vec<(usize, f64, f64, f64, f64)> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec[i].trim().parse::<f64>().map_err(|e| {
                    Error::InvalidGrid(format!("bad number `{}`: {e}", &rec[i]))
                })
            };
            let node: usize = rec[0]
                .trim()
                .parse()
                .map_err(|e| Error::InvalidGrid(format!("bad node index `{}`: {e}", &rec[0])))?;
            if dim == 1 {
                rows.push((node, parse(1)?, 0.0, parse(2)?, parse(3)?));
            } else {
                rows.push((node, parse(1)?, parse(2)?, parse(3)?, parse(4)?));
            }
        }
        let grid = match grid {
            Some(g) => {
                if g.dim() != dim {
                    return Err(Error::GridMismatch(format!(
                        "CSV is {dim}-dimensional, grid is {g}"
                    )));
                }
                g
            }
            None => infer_grid(dim, &rows)?,
        };
        let mut values = vec![0.0; grid.n_nodes()];
        let mut support = vec![false; grid.n_nodes()];
        for &(node, x1, x2, t, v) in &rows {
            if node >= grid.n_nodes() {
                return Err(Error::GridMismatch(format!(
                    "node {node} out of range for {grid}"
                )));
            }
            let (s, k) = grid.split(node);
            let p = grid.point(s);
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * (1.0 + b.abs());
            if !close(x1, p[0]) || (dim == 2 && !close(x2, p[1])) || !close(t, grid.time(k)) {
                return Err(Error::GridMismatch(format!(
                    "coordinates of node {node} do not match {grid}"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite { node, value: v });
            }
            values[node] = v;
            support[node] = true;
        }
        let f = GridFunction::new(grid, values)?;
        if support.iter().all(|&b| b) {
            Ok(f)
        } else {
            f.with_support(support)
        }
    }

    pub fn read_csv_file(path: impl AsRef<Path>, grid: Option<Cylinder>) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        GridFunction::read_csv(std::io::BufReader::new(f), grid)
    }
}

fn infer_grid(dim: usize, rows: &[(usize, f64, f64, f64, f64)]) -> Result<Cylinder> {
    let key = |v: f64| v.to_bits();
    let xs: BTreeSet<u64> = rows.iter().map(|r| key(r.1)).collect();
    let ts: BTreeSet<u64> = rows.iter().map(|r| key(r.3)).collect();
    let radius = rows.iter().map(|r| r.1).fold(f64::NEG_INFINITY, f64::max);
    let final_time = rows.iter().map(|r| r.3).fold(f64::NEG_INFINITY, f64::max);
    Cylinder::new(dim, radius, final_time, xs.len(), ts.len())
}

/// A set of space-time nodes; used for positivity sets `{u > tol}` and for
/// restriction of norms.
#[derive(Debug, Clone, PartialEq)]
pub struct PositivitySet {
    grid: Cylinder,
    membership: Vec<bool>,
}

/// `{u > 0}` evaluated on zero-extended values.
pub fn positivity_set(u: &GridFunction) -> PositivitySet {
    positivity_set_with_tol(u, 0.0)
}

/// `{u > tol}` evaluated on zero-extended values.
pub fn positivity_set_with_tol(u: &GridFunction, tol: f64) -> PositivitySet {
    PositivitySet {
        grid: *u.grid(),
        membership: (0..u.grid().n_nodes()).map(|i| u.value(i) > tol).collect(),
    }
}

impl PositivitySet {
    pub fn from_membership(grid: &Cylinder, membership: Vec<bool>) -> Result<Self> {
        if membership.len() != grid.n_nodes() {
            return Err(Error::GridMismatch("membership length".into()));
        }
        Ok(PositivitySet {
            grid: *grid,
            membership,
        })
    }

    pub fn all(grid: &Cylinder) -> Self {
        PositivitySet {
            grid: *grid,
            membership: vec![true; grid.n_nodes()],
        }
    }

    pub fn empty(grid: &Cylinder) -> Self {
        PositivitySet {
            grid: *grid,
            membership: vec![false; grid.n_nodes()],
        }
    }

    /// Nodes of the closed cylinder: `|x| <= R`, every time level.
    pub fn closed_cylinder(grid: &Cylinder) -> Self {
        let inside: Vec<bool> = (0..grid.n_space()).map(|s| !grid.is_exterior(s)).collect();
        let membership = (0..grid.n_nodes())
            .map(|node| inside[grid.split(node).0])
            .collect();
        PositivitySet {
            grid: *grid,
            membership,
        }
    }

    pub fn grid(&self) -> &Cylinder {
        &self.grid
    }

    pub fn membership(&self) -> &[bool] {
        &self.membership
    }

    pub fn contains(&self, node: usize) -> bool {
        self.membership[node]
    }

    pub fn count(&self) -> usize {
        self.membership.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.membership.iter().any(|&b| b)
    }

    pub fn is_subset(&self, other: &PositivitySet) -> bool {
        self.membership
            .iter()
            .zip(&other.membership)
            .all(|(&a, &b)| !a || b)
    }

    pub fn intersection(&self, other: &PositivitySet) -> Result<Self> {
        self.grid.check_same(&other.grid, "set intersection")?;
        Ok(PositivitySet {
            grid: self.grid,
            membership: self
                .membership
                .iter()
                .zip(&other.membership)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }

    /// Reads a membership mask from grid-function CSV: value > 0 means member.
    pub fn read_csv_file(path: impl AsRef<Path>, grid: Option<Cylinder>) -> Result<Self> {
        let f = GridFunction::read_csv_file(path, grid)?;
        Ok(positivity_set(&f))
    }
}
