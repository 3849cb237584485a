//! Finite metric graphs, the boundary-value space and sampled edge functions.
//!
//! The boundary-value space `K = K_E ⊕ K_I⁻ ⊕ K_I⁺` has dimension
//! `d = |E| + 2|I|` and is ordered as: external edges, then the initial
//! endpoints of the internal edges, then their terminal endpoints. Edges keep
//! the orientation given in the input; reversing an internal edge swaps its
//! two boundary indices and nothing else.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::{CVector, C64};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Int(i64),
    Name(String),
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::Name(s.to_string())
    }
}

impl From<i64> for VertexId {
    fn from(i: i64) -> Self {
        VertexId::Int(i)
    }
}

impl std::fmt::Display for VertexId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VertexId::Int(i) => write!(f, "{i}"),
            VertexId::Name(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InternalEdge {
    pub from: VertexId,
    pub to: VertexId,
    pub length: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExternalEdge {
    pub from: VertexId,
}

/// A finite metric graph. Internal edges are intervals `[0, a_i]`, external
/// edges half-lines `[0, ∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGraph", into = "RawGraph")]
pub struct MetricGraph {
    vertices: Vec<VertexId>,
    internal_edges: Vec<InternalEdge>,
    external_edges: Vec<ExternalEdge>,
}

#[derive(Serialize, Deserialize)]
struct RawGraph {
    vertices: Vec<VertexId>,
    #[serde(default)]
    internal_edges: Vec<InternalEdge>,
    #[serde(default)]
    external_edges: Vec<ExternalEdge>,
}

impl TryFrom<RawGraph> for MetricGraph {
    type Error = Error;

    fn try_from(raw: RawGraph) -> Result<Self> {
        MetricGraph::new(raw.vertices, raw.internal_edges, raw.external_edges)
    }
}

impl From<MetricGraph> for RawGraph {
    fn from(g: MetricGraph) -> Self {
        RawGraph {
            vertices: g.vertices,
            internal_edges: g.internal_edges,
            external_edges: g.external_edges,
        }
    }
}

/// One endpoint of an edge, i.e. one coordinate of the boundary-value space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Endpoint {
    External(usize),
    Initial(usize),
    Terminal(usize),
}

impl MetricGraph {
    pub fn new(
        vertices: Vec<VertexId>,
        internal_edges: Vec<InternalEdge>,
        external_edges: Vec<ExternalEdge>,
    ) -> Result<Self> {
        let known = |v: &VertexId| vertices.contains(v);
        for (i, e) in internal_edges.iter().enumerate() {
            if !known(&e.from) || !known(&e.to) {
                return Err(Error::InvalidGraph(format!(
                    "internal edge {i} references an unknown vertex"
                )));
            }
            if !(e.length.is_finite() && e.length > 0.0) {
                return Err(Error::InvalidGraph(format!(
                    "internal edge {i} has non-positive or non-finite length {}",
                    e.length
                )));
            }
        }
        for (i, e) in external_edges.iter().enumerate() {
            if !known(&e.from) {
                return Err(Error::InvalidGraph(format!(
                    "external edge {i} references an unknown vertex"
                )));
            }
        }
        Ok(Self {
            vertices,
            internal_edges,
            external_edges,
        })
    }

    /// A single vertex with `n` external edges.
    pub fn star(n: usize) -> Self {
        Self {
            vertices: vec!["o".into()],
            internal_edges: Vec::new(),
            external_edges: (0..n).map(|_| ExternalEdge { from: "o".into() }).collect(),
        }
    }

    /// The interval `[0, a]` as one internal edge between two vertices.
    pub fn interval(a: f64) -> Result<Self> {
        Self::new(
            vec!["0".into(), "1".into()],
            vec![InternalEdge {
                from: "0".into(),
                to: "1".into(),
                length: a,
            }],
            Vec::new(),
        )
    }

    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn internal_edges(&self) -> &[InternalEdge] {
        &self.internal_edges
    }

    pub fn external_edges(&self) -> &[ExternalEdge] {
        &self.external_edges
    }

    pub fn n_external(&self) -> usize {
        self.external_edges.len()
    }

    pub fn n_internal(&self) -> usize {
        self.internal_edges.len()
    }

    /// Dimension `d = |E| + 2|I|` of the boundary-value space.
    pub fn d(&self) -> usize {
        self.n_external() + 2 * self.n_internal()
    }

    pub fn lengths(&self) -> Vec<f64> {
        self.internal_edges.iter().map(|e| e.length).collect()
    }

    pub fn min_length(&self) -> Option<f64> {
        self.internal_edges.iter().map(|e| e.length).reduce(f64::min)
    }

    pub fn max_length(&self) -> Option<f64> {
        self.internal_edges.iter().map(|e| e.length).reduce(f64::max)
    }

    pub fn is_compact(&self) -> bool {
        self.external_edges.is_empty()
    }

    /// Default truncation length `20 · max(1, max a_i)` for external edges.
    pub fn default_truncation(&self) -> f64 {
        20.0 * self.max_length().unwrap_or(1.0).max(1.0)
    }

    pub fn boundary_index(&self, endpoint: Endpoint) -> usize {
        let ne = self.n_external();
        let ni = self.n_internal();
        match endpoint {
            Endpoint::External(e) => e,
            Endpoint::Initial(i) => ne + i,
            Endpoint::Terminal(i) => ne + ni + i,
        }
    }

    pub fn endpoint(&self, index: usize) -> Endpoint {
        let ne = self.n_external();
        let ni = self.n_internal();
        assert!(index < self.d(), "boundary index {index} out of range");
        if index < ne {
            Endpoint::External(index)
        } else if index < ne + ni {
            Endpoint::Initial(index - ne)
        } else {
            Endpoint::Terminal(index - ne - ni)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EdgeKind {
    Internal,
    External,
}

/// Uniform grid on one edge: `intervals + 1` points on `[0, length]`.
/// External edges are cut at the truncation length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EdgeGrid {
    pub kind: EdgeKind,
    pub length: f64,
    pub intervals: usize,
}

impl EdgeGrid {
    pub fn h(&self) -> f64 {
        self.length / self.intervals as f64
    }

    pub fn points(&self) -> usize {
        self.intervals + 1
    }

    pub fn x(&self, k: usize) -> f64 {
        self.length * k as f64 / self.intervals as f64
    }
}

/// Per-edge grids in edge order: external edges first, then internal ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub edges: Vec<EdgeGrid>,
    pub n_external: usize,
    pub truncation: f64,
}

impl GridSpec {
    pub fn n_internal(&self) -> usize {
        self.edges.len() - self.n_external
    }

    pub fn d(&self) -> usize {
        self.n_external + 2 * self.n_internal()
    }

    pub fn point_counts(&self) -> Vec<usize> {
        self.edges.iter().map(EdgeGrid::points).collect()
    }

    pub fn total_points(&self) -> usize {
        self.edges.iter().map(EdgeGrid::points).sum()
    }

    pub fn max_h(&self) -> f64 {
        self.edges.iter().map(EdgeGrid::h).fold(0.0, f64::max)
    }

    /// `(edge, sample)` location of boundary index `j`.
    pub fn boundary_node(&self, j: usize) -> (usize, usize) {
        // External edges and initial endpoints share their index with the edge.
        let ni = self.n_internal();
        if j < self.n_external + ni {
            (j, 0)
        } else {
            let edge = j - ni;
            (edge, self.edges[edge].intervals)
        }
    }

    /// The same grid refined by an integer factor.
    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec {
            edges: self
                .edges
                .iter()
                .map(|e| EdgeGrid {
                    intervals: e.intervals * factor,
                    ..*e
                })
                .collect(),
            ..self.clone()
        }
    }
}

const MAX_INTERVALS: f64 = 1e7;

/// Builds uniform grids with spacing at most `h`; external edges are cut at `r`.
pub fn make_grid(graph: &MetricGraph, h: f64, r: f64) -> Result<GridSpec> {
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidGrid(format!("grid spacing must be positive, got {h}")));
    }
    if !(r.is_finite() && r > 0.0) {
        return Err(Error::InvalidGrid(format!("truncation must be positive, got {r}")));
    }
    let mut limit = graph.min_length().unwrap_or(f64::INFINITY);
    if graph.n_external() > 0 {
        limit = limit.min(r);
    }
    if h >= limit {
        return Err(Error::InvalidGrid(format!(
            "grid spacing {h} must be smaller than every edge length (min {limit})"
        )));
    }
    let longest = graph.max_length().unwrap_or(0.0).max(if graph.n_external() > 0 { r } else { 0.0 });
    if longest / h > MAX_INTERVALS {
        return Err(Error::InvalidGrid(format!(
            "{longest}/{h} exceeds {MAX_INTERVALS} intervals per edge"
        )));
    }
    let intervals = |len: f64| ((len / h) - 1e-9).ceil().max(1.0) as usize;
    let mut edges = Vec::with_capacity(graph.n_external() + graph.n_internal());
    for _ in graph.external_edges() {
        edges.push(EdgeGrid {
            kind: EdgeKind::External,
            length: r,
            intervals: intervals(r),
        });
    }
    for e in graph.internal_edges() {
        edges.push(EdgeGrid {
            kind: EdgeKind::Internal,
            length: e.length,
            intervals: intervals(e.length),
        });
    }
    Ok(GridSpec {
        edges,
        n_external: graph.n_external(),
        truncation: r,
    })
}

/// Complex samples on every edge of a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeFunction {
    pub grid: GridSpec,
    pub values: Vec<Vec<C64>>,
}

impl EdgeFunction {
    pub fn zeros(grid: &GridSpec) -> Self {
        Self {
            values: grid
                .edges
                .iter()
                .map(|e| vec![C64::new(0.0, 0.0); e.points()])
                .collect(),
            grid: grid.clone(),
        }
    }

    /// Samples `f(edge, x)` at every grid point.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(usize, f64) -> C64) -> Self {
        Self {
            values: grid
                .edges
                .iter()
                .enumerate()
                .map(|(j, e)| (0..e.points()).map(|k| f(j, e.x(k))).collect())
                .collect(),
            grid: grid.clone(),
        }
    }

    pub fn from_values(grid: &GridSpec, values: Vec<Vec<C64>>) -> Result<Self> {
        if values.len() != grid.edges.len() {
            return Err(Error::Dimension(format!(
                "{} edges of samples for a grid with {} edges",
                values.len(),
                grid.edges.len()
            )));
        }
        for (j, (v, e)) in values.iter().zip(&grid.edges).enumerate() {
            if v.len() != e.points() {
                return Err(Error::Dimension(format!(
                    "edge {j}: {} samples for {} grid points",
                    v.len(),
                    e.points()
                )));
            }
        }
        Ok(Self {
            grid: grid.clone(),
            values,
        })
    }

    pub fn scale(&self, alpha: C64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|v| v.iter().map(|z| z * alpha).collect())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.grid, other.grid, "edge functions live on different grids");
        Self {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect())
                .collect(),
        }
    }

    fn check_samples(&self, needed: usize) -> Result<()> {
        for (edge, v) in self.values.iter().enumerate() {
            if v.len() < needed {
                return Err(Error::TooFewSamples {
                    edge,
                    needed,
                    got: v.len(),
                });
            }
        }
        Ok(())
    }

    /// Discrete `L²` norm squared (composite trapezoid).
    pub fn norm_sq(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.grid.edges)
            .map(|(v, e)| trapezoid(v.iter().map(|z| z.norm_sqr()), e.h()))
            .sum()
    }

    /// First-derivative samples: central differences inside, second-order
    /// one-sided differences at both ends.
    pub fn derivative(&self) -> Result<Vec<Vec<C64>>> {
        self.check_samples(3)?;
        Ok(self
            .values
            .iter()
            .zip(&self.grid.edges)
            .map(|(v, e)| first_derivative(v, e.h()))
            .collect())
    }

    /// Second-derivative samples: three-point stencil inside, four-point
    /// one-sided stencil at both ends.
    pub fn second_derivative(&self) -> Result<Vec<Vec<C64>>> {
        self.check_samples(4)?;
        Ok(self
            .values
            .iter()
            .zip(&self.grid.edges)
            .map(|(v, e)| second_derivative(v, e.h()))
            .collect())
    }

    /// `∫_G |f'|²` by the trapezoid rule on finite-difference derivatives.
    pub fn dirichlet_energy(&self) -> Result<f64> {
        let d = self.derivative()?;
        Ok(d
            .iter()
            .zip(&self.grid.edges)
            .map(|(v, e)| trapezoid(v.iter().map(|z| z.norm_sqr()), e.h()))
            .sum())
    }
}

pub(crate) fn trapezoid(values: impl Iterator<Item = f64>, h: f64) -> f64 {
    let v: Vec<f64> = values.collect();
    match v.len() {
        0 => 0.0,
        1 => 0.0,
        n => h * (0.5 * v[0] + v[1..n - 1].iter().sum::<f64>() + 0.5 * v[n - 1]),
    }
}

pub(crate) fn trapezoid_c(values: &[C64], h: f64) -> C64 {
    match values.len() {
        0 | 1 => C64::new(0.0, 0.0),
        n => {
            let inner: C64 = values[1..n - 1].iter().sum();
            (values[0] * 0.5 + inner + values[n - 1] * 0.5) * h
        }
    }
}

/// Inward one-sided derivative at the start of `v`: `(−3v₀ + 4v₁ − v₂) / 2h`.
pub(crate) fn inward_derivative(v0: C64, v1: C64, v2: C64, h: f64) -> C64 {
    (v0 * -3.0 + v1 * 4.0 - v2) / (2.0 * h)
}

fn first_derivative(v: &[C64], h: f64) -> Vec<C64> {
    let n = v.len() - 1;
    (0..=n)
        .map(|k| {
            if k == 0 {
                inward_derivative(v[0], v[1], v[2], h)
            } else if k == n {
                -inward_derivative(v[n], v[n - 1], v[n - 2], h)
            } else {
                (v[k + 1] - v[k - 1]) / (2.0 * h)
            }
        })
        .collect()
}

fn second_derivative(v: &[C64], h: f64) -> Vec<C64> {
    let n = v.len() - 1;
    let h2 = h * h;
    (0..=n)
        .map(|k| {
            if k == 0 {
                (v[0] * 2.0 - v[1] * 5.0 + v[2] * 4.0 - v[3]) / h2
            } else if k == n {
                (v[n] * 2.0 - v[n - 1] * 5.0 + v[n - 2] * 4.0 - v[n - 3]) / h2
            } else {
                (v[k + 1] - v[k] * 2.0 + v[k - 1]) / h2
            }
        })
        .collect()
}

/// Boundary values `ψ` and inward derivatives `ψ'` in boundary-space order.
///
/// At a terminal endpoint the inward derivative is `−f'(a)`, matching the
/// sign convention of the boundary-value space.
pub fn trace(f: &EdgeFunction) -> Result<(CVector, CVector)> {
    f.check_samples(3)?;
    let d = f.grid.d();
    let mut psi = CVector::zeros(d);
    let mut dpsi = CVector::zeros(d);
    for j in 0..d {
        let (edge, node) = f.grid.boundary_node(j);
        let v = &f.values[edge];
        let h = f.grid.edges[edge].h();
        psi[j] = v[node];
        dpsi[j] = if node == 0 {
            inward_derivative(v[0], v[1], v[2], h)
        } else {
            inward_derivative(v[node], v[node - 1], v[node - 2], h)
        };
    }
    Ok((psi, dpsi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn two_edge_graph() -> MetricGraph {
        MetricGraph::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                InternalEdge { from: "a".into(), to: "b".into(), length: 1.5 },
                InternalEdge { from: "b".into(), to: "c".into(), length: 0.7 },
            ],
            vec![ExternalEdge { from: "a".into() }, ExternalEdge { from: "c".into() }],
        )
        .unwrap()
    }

    #[test]
    fn dimension_counts_external_once_internal_twice() {
        let g = two_edge_graph();
        assert_eq!(g.d(), 2 + 2 * 2);
        assert_eq!(MetricGraph::star(3).d(), 3);
        assert_eq!(MetricGraph::interval(1.0).unwrap().d(), 2);
    }

    #[test]
    fn rejects_bad_lengths_and_unknown_vertices() {
        let bad = MetricGraph::new(
            vec!["a".into()],
            vec![InternalEdge { from: "a".into(), to: "a".into(), length: 0.0 }],
            vec![],
        );
        assert!(matches!(bad, Err(Error::InvalidGraph(_))));
        let bad = MetricGraph::new(
            vec!["a".into()],
            vec![InternalEdge { from: "a".into(), to: "a".into(), length: f64::INFINITY }],
            vec![],
        );
        assert!(bad.is_err());
        let bad = MetricGraph::new(vec!["a".into()], vec![], vec![ExternalEdge { from: "z".into() }]);
        assert!(bad.is_err());
    }

    #[test]
    fn boundary_index_round_trips() {
        let g = two_edge_graph();
        for j in 0..g.d() {
            assert_eq!(g.boundary_index(g.endpoint(j)), j);
        }
        assert_eq!(g.endpoint(0), Endpoint::External(0));
        assert_eq!(g.endpoint(2), Endpoint::Initial(0));
        assert_eq!(g.endpoint(5), Endpoint::Terminal(1));
    }

    #[test]
    fn grid_point_counts() {
        let g = MetricGraph::interval(1.0).unwrap();
        let grid = make_grid(&g, 0.25, 10.0).unwrap();
        assert_eq!(grid.point_counts(), vec![5]);

        let star = MetricGraph::star(3);
        let grid = make_grid(&star, 0.1, 10.0).unwrap();
        assert_eq!(grid.point_counts(), vec![101, 101, 101]);

        assert!(matches!(make_grid(&g, 2.0, 10.0), Err(Error::InvalidGrid(_))));
        assert!(make_grid(&g, -0.1, 10.0).is_err());
        assert!(make_grid(&star, 0.1, 0.0).is_err());
    }

    #[test]
    fn grid_spacing_never_exceeds_request() {
        let g = two_edge_graph();
        let grid = make_grid(&g, 0.3, 5.0).unwrap();
        for e in &grid.edges {
            assert!(e.h() <= 0.3 + 1e-12);
        }
    }

    #[test]
    fn trace_of_zero_function() {
        let g = two_edge_graph();
        let grid = make_grid(&g, 0.1, 3.0).unwrap();
        let (psi, dpsi) = trace(&EdgeFunction::zeros(&grid)).unwrap();
        assert_eq!(psi.norm(), 0.0);
        assert_eq!(dpsi.norm(), 0.0);
    }

    #[test]
    fn trace_sign_convention_on_interval() {
        let g = MetricGraph::interval(1.0).unwrap();
        let grid = make_grid(&g, 0.1, 1.0).unwrap();
        let f = EdgeFunction::from_fn(&grid, |_, x| c(x, 0.0));
        let (psi, dpsi) = trace(&f).unwrap();
        assert!((psi[0] - c(0.0, 0.0)).norm() < 1e-14);
        assert!((psi[1] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((dpsi[0] - c(1.0, 0.0)).norm() < 1e-12);
        assert!((dpsi[1] - c(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn trace_of_decaying_exponential_on_two_half_lines() {
        // k = i: e^{ikx} = e^{-x}, inward derivative ik = -1 on both edges.
        let g = MetricGraph::star(2);
        let grid = make_grid(&g, 1e-3, 5.0).unwrap();
        let k = c(0.0, 1.0);
        let f = EdgeFunction::from_fn(&grid, |_, x| (c(0.0, 1.0) * k * x).exp());
        let (psi, dpsi) = trace(&f).unwrap();
        for j in 0..2 {
            assert!((psi[j] - c(1.0, 0.0)).norm() < 1e-14);
            assert!((dpsi[j] - c(-1.0, 0.0)).norm() < 1e-6);
        }
    }

    #[test]
    fn trace_needs_three_samples() {
        let grid = GridSpec {
            edges: vec![EdgeGrid { kind: EdgeKind::Internal, length: 1.0, intervals: 1 }],
            n_external: 0,
            truncation: 1.0,
        };
        let f = EdgeFunction::zeros(&grid);
        assert!(matches!(trace(&f), Err(Error::TooFewSamples { .. })));
    }

    #[test]
    fn trace_derivative_converges_at_second_order() {
        let g = MetricGraph::interval(1.0).unwrap();
        let err = |h: f64| {
            let grid = make_grid(&g, h, 1.0).unwrap();
            let f = EdgeFunction::from_fn(&grid, |_, x| c(x.sin(), 0.0));
            let (_, dpsi) = trace(&f).unwrap();
            (dpsi[0] - c(1.0, 0.0)).norm() + (dpsi[1] + c(1f64.cos(), 0.0)).norm()
        };
        let (e1, e2) = (err(0.02), err(0.01));
        let order = (e1 / e2).log2();
        assert!(order > 1.9 && order < 2.1, "observed order {order}");
    }

    #[test]
    fn graph_json_round_trip() {
        let g = two_edge_graph();
        let s = serde_json::to_string(&g).unwrap();
        let back: MetricGraph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
        let numeric: MetricGraph = serde_json::from_str(
            r#"{"vertices":[1,2],"internal_edges":[{"from":1,"to":2,"length":2.0}],"external_edges":[{"from":2}]}"#,
        )
        .unwrap();
        assert_eq!(numeric.d(), 3);
        let bad = serde_json::from_str::<MetricGraph>(
            r#"{"vertices":[1],"internal_edges":[{"from":1,"to":1,"length":-2.0}]}"#,
        );
        assert!(bad.is_err());
    }
}
