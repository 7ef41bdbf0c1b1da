//! Time grids on `[0, T]` and vector-valued functions sampled on them.

use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::summation::NeumaierSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
}

/// How the nodes of a [`Grid`] were placed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridKind {
    Uniform,
    /// `t_k = T (k/N)^r`, clustering at `t = 0`.
    Graded { r: f64 },
    /// Graded from both sides toward an interior (or end) node `at`.
    Clustered { at: f64, r: f64 },
    /// Arbitrary strictly increasing nodes.
    Custom,
}

/// Strictly increasing nodes `0 = t_0 < … < t_N = T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    nodes: Vec<f64>,
    kind: GridKind,
}

impl Grid {
    /// `t_k = T (k/N)^r`; `r = 1` gives the uniform grid `t_k = k·T/N`.
    pub fn new(horizon: f64, n: usize, r: f64) -> Result<Self, GridError> {
        check_horizon(horizon)?;
        if n == 0 {
            return Err(GridError::Domain("grid needs N ≥ 1 intervals".into()));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(GridError::Domain(format!("grading exponent must satisfy r ≥ 1, got {r}")));
        }
        let nf = n as f64;
        let mut nodes: Vec<f64> = if r == 1.0 {
            (0..=n).map(|k| k as f64 * horizon / nf).collect()
        } else {
            (0..=n).map(|k| horizon * (k as f64 / nf).powf(r)).collect()
        };
        nodes[n] = horizon;
        let kind = if r == 1.0 { GridKind::Uniform } else { GridKind::Graded { r } };
        Self::checked(nodes, kind)
    }

    /// Nodes graded toward the point `at ∈ (0, T]` from both sides, with
    /// `at` itself a node. Roughly `N·at/T` intervals fall left of `at`.
    pub fn clustered(horizon: f64, n: usize, at: f64, r: f64) -> Result<Self, GridError> {
        check_horizon(horizon)?;
        if n < 2 {
            return Err(GridError::Domain("clustered grid needs N ≥ 2 intervals".into()));
        }
        if !(at > 0.0 && at <= horizon) {
            return Err(GridError::Domain(format!("cluster point {at} outside (0, {horizon}]")));
        }
        if !(r >= 1.0) || !r.is_finite() {
            return Err(GridError::Domain(format!("grading exponent must satisfy r ≥ 1, got {r}")));
        }
        let n_left = if at == horizon {
            n
        } else {
            ((n as f64 * at / horizon).round() as usize).clamp(1, n - 1)
        };
        let n_right = n - n_left;
        let mut nodes = Vec::with_capacity(n + 1);
        for k in 0..n_left {
            let u = 1.0 - k as f64 / n_left as f64;
            nodes.push(at - at * u.powf(r));
        }
        nodes.push(at);
        for k in 1..=n_right {
            nodes.push(at + (horizon - at) * (k as f64 / n_right as f64).powf(r));
        }
        nodes[0] = 0.0;
        nodes[n] = horizon;
        Self::checked(nodes, GridKind::Clustered { at, r })
    }

    /// Validates user-supplied nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self, GridError> {
        if nodes.len() < 2 {
            return Err(GridError::Domain("grid needs at least two nodes".into()));
        }
        if nodes[0] != 0.0 {
            return Err(GridError::Domain("grid must start at t = 0".into()));
        }
        check_horizon(*nodes.last().unwrap())?;
        Self::checked(nodes, GridKind::Custom)
    }

    fn checked(nodes: Vec<f64>, kind: GridKind) -> Result<Self, GridError> {
        if let Some(k) = nodes.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(GridError::Domain(format!(
                "nodes not strictly increasing at index {} ({} then {})",
                k + 1,
                nodes[k],
                nodes[k + 1]
            )));
        }
        Ok(Grid { nodes, kind })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of intervals `N`.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn horizon(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    pub fn kind(&self) -> GridKind {
        self.kind
    }

    pub fn is_uniform(&self) -> bool {
        self.kind == GridKind::Uniform
    }

    /// Width of interval `k`, `t_{k+1} − t_k`.
    pub fn step(&self, k: usize) -> f64 {
        self.nodes[k + 1] - self.nodes[k]
    }

    pub fn max_step(&self) -> f64 {
        self.nodes.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    /// Every `stride`-th node (the last node must be included).
    pub fn subsample(&self, stride: usize) -> Result<Grid, GridError> {
        if stride == 0 || !self.intervals().is_multiple_of(stride) {
            return Err(GridError::Shape(format!(
                "stride {stride} does not divide N = {}",
                self.intervals()
            )));
        }
        let nodes = self.nodes.iter().step_by(stride).copied().collect();
        let kind = match self.kind {
            GridKind::Uniform => GridKind::Uniform,
            _ => GridKind::Custom,
        };
        Self::checked(nodes, kind)
    }
}

fn check_horizon(horizon: f64) -> Result<(), GridError> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(GridError::Domain(format!("horizon must be a positive finite number, got {horizon}")));
    }
    Ok(())
}

/// An `R^n`-valued path sampled at every node of a grid. Samples are stored
/// node-major: the `n` components of node `k` are contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Arc<Grid>,
    dim: usize,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Arc<Grid>, dim: usize, values: Vec<f64>) -> Result<Self, GridError> {
        if dim == 0 {
            return Err(GridError::Shape("dimension must be positive".into()));
        }
        if values.len() != grid.len() * dim {
            return Err(GridError::Shape(format!(
                "expected {} samples of dimension {dim}, got {} values",
                grid.len(),
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(GridError::Domain(format!(
                "non-finite sample at node {} component {}",
                i / dim,
                i % dim
            )));
        }
        Ok(Self { grid, dim, values })
    }

    /// Samples `f(t)` at every node.
    pub fn from_fn<F>(grid: Arc<Grid>, dim: usize, mut f: F) -> Result<Self, GridError>
    where
        F: FnMut(f64, &mut [f64]),
    {
        let mut values = vec![0.0; grid.len() * dim];
        for (k, &t) in grid.nodes().iter().enumerate() {
            f(t, &mut values[k * dim..(k + 1) * dim]);
        }
        Self::new(grid, dim, values)
    }

    /// Scalar path `t ↦ f(t)`.
    pub fn scalar<F: Fn(f64) -> f64>(grid: Arc<Grid>, f: F) -> Result<Self, GridError> {
        Self::from_fn(grid, 1, |t, out| out[0] = f(t))
    }

    /// The constant path `t ↦ c`.
    pub fn constant(grid: Arc<Grid>, c: &[f64]) -> Result<Self, GridError> {
        Self::from_fn(grid, c.len(), |_, out| out.copy_from_slice(c))
    }

    /// Assembles a path from per-component sample vectors.
    pub fn from_components(grid: Arc<Grid>, components: &[Vec<f64>]) -> Result<Self, GridError> {
        let dim = components.len();
        let len = grid.len();
        if components.iter().any(|c| c.len() != len) {
            return Err(GridError::Shape("component length differs from node count".into()));
        }
        let mut values = vec![0.0; len * dim];
        for (j, comp) in components.iter().enumerate() {
            for (k, &v) in comp.iter().enumerate() {
                values[k * dim + j] = v;
            }
        }
        Self::new(grid, dim, values)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The sample at node `k`.
    pub fn sample(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    /// Component `j` at every node.
    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.iter().skip(j).step_by(self.dim).copied().collect()
    }

    /// Restriction to every `stride`-th node.
    pub fn subsample(&self, stride: usize) -> Result<GridFunction, GridError> {
        let grid = Arc::new(self.grid.subsample(stride)?);
        let mut values = Vec::with_capacity(grid.len() * self.dim);
        for k in (0..self.grid.len()).step_by(stride) {
            values.extend_from_slice(self.sample(k));
        }
        Self::new(grid, self.dim, values)
    }

    /// Euclidean norm of the sample at each node.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        (0..self.grid.len()).map(|k| euclid(self.sample(k))).collect()
    }

    fn same_shape(&self, other: &GridFunction) -> Result<(), GridError> {
        if self.dim != other.dim {
            return Err(GridError::Shape(format!("dimensions {} and {} differ", self.dim, other.dim)));
        }
        if !Arc::ptr_eq(&self.grid, &other.grid) && self.grid.nodes() != other.grid.nodes() {
            return Err(GridError::Shape("functions live on different grids".into()));
        }
        Ok(())
    }

    /// CSV with header `t,phi_1,...,phi_n`, one row per node, `\n` endings.
    /// Floats use the shortest representation that parses back exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for j in 1..=self.dim {
            let _ = write!(out, ",phi_{j}");
        }
        out.push('\n');
        for (k, t) in self.grid.nodes().iter().enumerate() {
            let _ = write!(out, "{t:?}");
            for v in self.sample(k) {
                let _ = write!(out, ",{v:?}");
            }
            out.push('\n');
        }
        out
    }
}

pub(crate) fn euclid(v: &[f64]) -> f64 {
    match v {
        [x] => x.abs(),
        _ => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
    }
}

/// `max_k ‖a(t_k) − b(t_k)‖`.
pub fn sup_norm_diff(a: &GridFunction, b: &GridFunction) -> Result<f64, GridError> {
    a.same_shape(b)?;
    let mut sup = 0.0f64;
    let mut diff = vec![0.0; a.dim];
    for k in 0..a.grid.len() {
        for ((d, x), y) in diff.iter_mut().zip(a.sample(k)).zip(b.sample(k)) {
            *d = x - y;
        }
        sup = sup.max(euclid(&diff));
    }
    Ok(sup)
}

/// Composite-trapezoid `L^p` norm of `‖g(t)‖`; `p = ∞` is the sampled max.
pub fn lp_norm(g: &GridFunction, p: f64) -> Result<f64, GridError> {
    lp_norm_of_samples(g.grid.nodes(), &g.pointwise_norms(), p)
}

/// Trapezoid `L^p` norm of nonnegative node samples `m_k` on `nodes`.
pub(crate) fn lp_norm_of_samples(nodes: &[f64], norms: &[f64], p: f64) -> Result<f64, GridError> {
    if !(p >= 1.0) {
        return Err(GridError::Domain(format!("L^p norm needs p ≥ 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(norms.iter().copied().fold(0.0, f64::max));
    }
    let mut acc = NeumaierSum::new();
    for (w, m) in nodes.windows(2).zip(norms.windows(2)) {
        acc.add(0.5 * (w[1] - w[0]) * (m[0].powf(p) + m[1].powf(p)));
    }
    Ok(acc.value().powf(1.0 / p))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(t: f64, n: usize, r: f64) -> Arc<Grid> {
        Arc::new(Grid::new(t, n, r).unwrap())
    }

    #[test]
    fn make_grid_examples() {
        assert_eq!(grid(1.0, 4, 1.0).nodes(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(grid(1.0, 2, 2.0).nodes(), &[0.0, 0.25, 1.0]);
        assert_eq!(grid(16.0, 4, 2.0).nodes(), &[0.0, 1.0, 4.0, 9.0, 16.0]);
    }

    #[test]
    fn make_grid_errors() {
        assert!(matches!(Grid::new(1.0, 4, 0.5), Err(GridError::Domain(_))));
        assert!(matches!(Grid::new(1.0, 0, 1.0), Err(GridError::Domain(_))));
        assert!(matches!(Grid::new(0.0, 4, 1.0), Err(GridError::Domain(_))));
    }

    #[test]
    fn uniform_nodes_are_k_t_over_n() {
        let g = Grid::new(0.3, 7, 1.0).unwrap();
        for (k, &t) in g.nodes().iter().enumerate() {
            if k < 7 {
                assert_eq!(t.to_bits(), (k as f64 * 0.3 / 7.0).to_bits());
            }
        }
        assert_eq!(g.horizon(), 0.3);
    }

    #[test]
    fn clustered_grid_hits_cluster_point() {
        let g = Grid::clustered(1.0, 64, 0.5, 2.0).unwrap();
        assert!(g.nodes().contains(&0.5));
        assert_eq!(g.intervals(), 64);
        let k = g.nodes().iter().position(|&t| t == 0.5).unwrap();
        assert!(g.step(k - 1) < g.step(0));
        assert!(g.step(k) < g.step(g.intervals() - 1));
    }

    #[test]
    fn sup_norm_examples() {
        let gr = grid(2.0, 8, 1.0);
        let a = GridFunction::scalar(gr.clone(), |t| t).unwrap();
        let z = GridFunction::scalar(gr.clone(), |_| 0.0).unwrap();
        assert_eq!(sup_norm_diff(&a, &a).unwrap(), 0.0);
        assert_eq!(sup_norm_diff(&a, &z).unwrap(), 2.0);
        let e1 = GridFunction::constant(gr.clone(), &[1.0, 0.0]).unwrap();
        let e0 = GridFunction::constant(gr, &[0.0, 0.0]).unwrap();
        assert_eq!(sup_norm_diff(&e1, &e0).unwrap(), 1.0);
    }

    #[test]
    fn sup_norm_shape_errors() {
        let a = GridFunction::scalar(grid(1.0, 4, 1.0), |t| t).unwrap();
        let b = GridFunction::scalar(grid(1.0, 5, 1.0), |t| t).unwrap();
        assert!(matches!(sup_norm_diff(&a, &b), Err(GridError::Shape(_))));
        let c = GridFunction::constant(a.grid().clone(), &[0.0, 0.0]).unwrap();
        assert!(matches!(sup_norm_diff(&a, &c), Err(GridError::Shape(_))));
    }

    #[test]
    fn lp_norm_examples() {
        let gr = grid(3.0, 10, 1.0);
        let one = GridFunction::scalar(gr.clone(), |_| 1.0).unwrap();
        for p in [1.0, 2.0, 3.5] {
            assert!((lp_norm(&one, p).unwrap() - 3f64.powf(1.0 / p)).abs() < 1e-14);
        }
        assert_eq!(lp_norm(&one, f64::INFINITY).unwrap(), 1.0);
        let zero = GridFunction::scalar(gr, |_| 0.0).unwrap();
        assert_eq!(lp_norm(&zero, 2.0).unwrap(), 0.0);
        assert!(matches!(lp_norm(&one, 0.5), Err(GridError::Domain(_))));
    }

    #[test]
    fn lp_norm_of_identity_converges() {
        let target = 1.0 / 3f64.sqrt();
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32, 64, 128] {
            let g = GridFunction::scalar(grid(1.0, n, 1.0), |t| t).unwrap();
            let err = (lp_norm(&g, 2.0).unwrap() - target).abs();
            assert!(err < prev);
            prev = err;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn csv_format() {
        let g = GridFunction::constant(grid(1.0, 2, 1.0), &[1.0, -0.1]).unwrap();
        assert_eq!(g.to_csv(), "t,phi_1,phi_2\n0.0,1.0,-0.1\n0.5,1.0,-0.1\n1.0,1.0,-0.1\n");
    }

    #[test]
    fn rejects_non_finite_samples() {
        let r = GridFunction::scalar(grid(1.0, 2, 1.0), |t| 1.0 / (t - 0.5));
        assert!(matches!(r, Err(GridError::Domain(_))));
    }
}
