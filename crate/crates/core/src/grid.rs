//! Uniform structured grids in one and two dimensions.
//!
//! Nodes are numbered lexicographically by their integer coordinates with the
//! last axis varying fastest, so in 2D node `i * ny + j` sits at
//! `(x_i, y_j)`. The same ordering drives every Gauss-Seidel sweep.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A spatial point. In 1D the `y` component is always zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn on_line(x: f64) -> Self {
        Self { x, y: 0.0 }
    }
}

const NO_SLOT: usize = usize::MAX;

/// Uniform grid with equal spacing along every axis and a `2 * dim`
/// neighbor stencil (3-point in 1D, 5-point in 2D).
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    bounds: Vec<(f64, f64)>,
    nodes: Vec<usize>,
    dx: f64,
    boundary: Vec<bool>,
    interior: Vec<usize>,
    slot: Vec<usize>,
    neighbor_table: Vec<usize>,
}

impl GridSpec {
    /// Builds a grid from per-axis bounds and node counts. The dimension is
    /// the number of axes given (1 or 2).
    pub fn new(bounds: &[(f64, f64)], nodes: &[usize]) -> Result<Self> {
        let dim = bounds.len();
        if dim == 0 || dim > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if nodes.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "{dim} axis bounds but {} node counts",
                nodes.len()
            )));
        }
        for (axis, (&(a, b), &n)) in bounds.iter().zip(nodes).enumerate() {
            if n < 3 {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: need at least 3 nodes for an interior node, got {n}"
                )));
            }
            if !(a.is_finite() && b.is_finite()) || b <= a {
                return Err(Error::InvalidGrid(format!(
                    "axis {axis}: bounds [{a}, {b}] do not form a nondegenerate interval"
                )));
            }
        }
        let dx = (bounds[0].1 - bounds[0].0) / (nodes[0] - 1) as f64;
        for axis in 1..dim {
            let dxa = (bounds[axis].1 - bounds[axis].0) / (nodes[axis] - 1) as f64;
            if (dxa - dx).abs() > 1e-12 * dx {
                return Err(Error::InvalidGrid(format!(
                    "spacing must be uniform across axes: axis 0 has {dx}, axis {axis} has {dxa}"
                )));
            }
        }

        let total: usize = nodes.iter().product();
        let mut boundary = vec![false; total];
        let mut interior = Vec::new();
        let mut slot = vec![NO_SLOT; total];
        for node in 0..total {
            let idx = unravel(nodes, node);
            let on_edge = (0..dim).any(|a| idx[a] == 0 || idx[a] == nodes[a] - 1);
            if on_edge {
                boundary[node] = true;
            } else {
                slot[node] = interior.len();
                interior.push(node);
            }
        }

        let k = 2 * dim;
        let strides = strides(nodes);
        let mut neighbor_table = Vec::with_capacity(interior.len() * k);
        for &node in &interior {
            for stride in strides.iter().take(dim) {
                neighbor_table.push(node - stride);
                neighbor_table.push(node + stride);
            }
        }

        Ok(Self {
            bounds: bounds.to_vec(),
            nodes: nodes.to_vec(),
            dx,
            boundary,
            interior,
            slot,
            neighbor_table,
        })
    }

    /// 1D grid on `[a, b]` with `nodes` nodes including both endpoints.
    pub fn line(a: f64, b: f64, nodes: usize) -> Result<Self> {
        Self::new(&[(a, b)], &[nodes])
    }

    /// 2D grid on `[a, b]^2` with `nodes` nodes per axis.
    pub fn square(a: f64, b: f64, nodes: usize) -> Result<Self> {
        Self::new(&[(a, b), (a, b)], &[nodes, nodes])
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Stencil neighbor count `K = 2 * dim`.
    pub fn k(&self) -> usize {
        2 * self.dim()
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    pub fn nodes_per_axis(&self) -> &[usize] {
        &self.nodes
    }

    /// Total node count, boundary included.
    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    /// Interior node ids in sweep order.
    pub fn interior(&self) -> &[usize] {
        &self.interior
    }

    pub fn interior_count(&self) -> usize {
        self.interior.len()
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary[node]
    }

    pub fn boundary_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.boundary
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
    }

    /// Position of an interior node in [`GridSpec::interior`].
    pub fn interior_slot(&self, node: usize) -> Option<usize> {
        match self.slot.get(node) {
            Some(&s) if s != NO_SLOT => Some(s),
            _ => None,
        }
    }

    /// The `K` axis neighbors of an interior node, ordered axis by axis
    /// (minus side first).
    pub fn neighbors(&self, node: usize) -> Result<&[usize]> {
        if node >= self.len() {
            return Err(Error::NodeOutOfRange {
                node,
                len: self.len(),
            });
        }
        let slot = self.interior_slot(node).ok_or(Error::BoundaryNode(node))?;
        Ok(self.slot_neighbors(slot))
    }

    /// Neighbors of the interior node stored at `slot`.
    #[inline]
    pub fn slot_neighbors(&self, slot: usize) -> &[usize] {
        let k = self.k();
        &self.neighbor_table[slot * k..(slot + 1) * k]
    }

    /// Integer coordinates of a node (unused axes are zero).
    pub fn index_of(&self, node: usize) -> [usize; 2] {
        unravel(&self.nodes, node)
    }

    pub fn point(&self, node: usize) -> Point {
        let idx = self.index_of(node);
        let coord = |axis: usize| {
            let (a, b) = self.bounds[axis];
            a + (b - a) * idx[axis] as f64 / (self.nodes[axis] - 1) as f64
        };
        if self.dim() == 1 {
            Point::on_line(coord(0))
        } else {
            Point::new(coord(0), coord(1))
        }
    }

    /// Node at the given integer coordinates, if it exists.
    pub fn node_at(&self, idx: [usize; 2]) -> Option<usize> {
        let dim = self.dim();
        if (0..dim).any(|a| idx[a] >= self.nodes[a]) || (dim == 1 && idx[1] != 0) {
            return None;
        }
        let s = strides(&self.nodes);
        Some((0..dim).map(|a| idx[a] * s[a]).sum())
    }

    /// Pairs of axis-adjacent nodes `(a, b)` with `a < b`, covering every
    /// grid edge once.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let s = strides(&self.nodes);
        let dim = self.dim();
        (0..self.len()).flat_map(move |node| {
            let idx = self.index_of(node);
            (0..dim).filter_map(move |a| (idx[a] + 1 < self.nodes[a]).then_some((node, node + s[a])))
        })
    }
}

fn strides(nodes: &[usize]) -> [usize; 2] {
    match nodes.len() {
        1 => [1, 0],
        _ => [nodes[1], 1],
    }
}

fn unravel(nodes: &[usize], node: usize) -> [usize; 2] {
    match nodes.len() {
        1 => [node, 0],
        _ => [node / nodes[1], node % nodes[1]],
    }
}

/// Uniform partition of `[0, T]` into `steps` intervals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
    dt: f64,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "horizon must be positive and finite, got {horizon}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidTimeGrid("need at least one time step".into()));
        }
        Ok(Self {
            horizon,
            steps,
            dt: horizon / steps as f64,
        })
    }

    /// Smallest step count whose `dt` satisfies `dt <= safety * dx^2 / k`.
    pub fn cfl_limited(horizon: f64, dx: f64, k: usize, safety: f64) -> Result<Self> {
        if !(safety > 0.0 && safety <= 1.0) {
            return Err(Error::InvalidTimeGrid(format!(
                "CFL safety factor must lie in (0, 1], got {safety}"
            )));
        }
        let target = safety * dx * dx / k as f64;
        let mut steps = (horizon / target).ceil().max(1.0) as usize;
        while horizon / steps as f64 > target {
            steps += 1;
        }
        Self::new(horizon, steps)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Time of level `m`; the last level is exactly the horizon.
    pub fn time(&self, m: usize) -> f64 {
        if m == self.steps {
            self.horizon
        } else {
            self.horizon * m as f64 / self.steps as f64
        }
    }
}

/// Real values on every node of a grid, boundary included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    values: Vec<f64>,
}

impl GridFunction {
    /// Wraps values for `grid`, checking length and finiteness.
    pub fn new(grid: &GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        if let Some(node) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                node,
                context: "grid function value".into(),
            });
        }
        Ok(Self { values })
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            values: vec![0.0; grid.len()],
        }
    }

    /// Samples `f` at every node. Errors if `f` returns a non-finite value.
    pub fn from_fn(grid: &GridSpec, mut f: impl FnMut(Point) -> f64) -> Result<Self> {
        let values = (0..grid.len()).map(|n| f(grid.point(n))).collect();
        Self::new(grid, values)
    }

    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max_i |self_i - other_i|`.
    pub fn max_abs_diff(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

impl std::ops::Index<usize> for GridFunction {
    type Output = f64;

    fn index(&self, node: usize) -> &f64 {
        &self.values[node]
    }
}

impl std::ops::IndexMut<usize> for GridFunction {
    fn index_mut(&mut self, node: usize) -> &mut f64 {
        &mut self.values[node]
    }
}
