//! Standard vertex conditions: δ and δ′ couplings on a star, the two-edge
//! family `(A_τ, B_τ)`, Dirichlet and Neumann.

use crate::boundary::BoundaryCondition;
use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::{CMatrix, C64};

fn delta_matrices(n: usize, gamma: C64) -> (CMatrix, CMatrix) {
    let one = C64::new(1.0, 0.0);
    let mut a = CMatrix::zeros(n, n);
    for i in 0..n - 1 {
        a[(i, i)] = one;
        a[(i, i + 1)] = -one;
    }
    a[(n - 1, n - 1)] = gamma;
    let mut b = CMatrix::zeros(n, n);
    for j in 0..n {
        b[(n - 1, j)] = one;
    }
    (a, b)
}

/// δ coupling of strength `γ` on a star with `n ≥ 2` half-lines:
/// continuity plus `Σ ψ'_j + γ ψ = 0`.
pub fn gen_delta(n: usize, gamma: C64) -> Result<BoundaryCondition> {
    if n < 2 {
        return Err(Error::Precondition(format!("δ coupling needs degree ≥ 2, got {n}")));
    }
    let (a, b) = delta_matrices(n, gamma);
    BoundaryCondition::new(MetricGraph::star(n), a, b)
}

/// δ′ coupling: the δ matrices with their roles swapped. Needs `γ ≠ 0`.
pub fn gen_delta_prime(n: usize, gamma: C64) -> Result<BoundaryCondition> {
    if n < 2 {
        return Err(Error::Precondition(format!("δ′ coupling needs degree ≥ 2, got {n}")));
    }
    if gamma == C64::new(0.0, 0.0) {
        return Err(Error::Precondition("δ′ coupling needs γ ≠ 0".into()));
    }
    let (a, b) = delta_matrices(n, gamma);
    BoundaryCondition::new(MetricGraph::star(n), b, a)
}

/// `A_τ = [[1, −e^{iτ}], [0, 0]]`, `B_τ = [[0, 0], [1, −e^{−iτ}]]` on two
/// half-lines, `τ ∈ [0, π/2]`.
pub fn gen_counterexample(tau: f64) -> Result<BoundaryCondition> {
    if !(0.0..=std::f64::consts::FRAC_PI_2).contains(&tau) {
        return Err(Error::Precondition(format!("τ must lie in [0, π/2], got {tau}")));
    }
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    let a = CMatrix::from_row_slice(2, 2, &[one, -C64::from_polar(1.0, tau), z, z]);
    let b = CMatrix::from_row_slice(2, 2, &[z, z, one, -C64::from_polar(1.0, -tau)]);
    BoundaryCondition::new(MetricGraph::star(2), a, b)
}

pub fn dirichlet(graph: MetricGraph) -> BoundaryCondition {
    let d = graph.d();
    BoundaryCondition::new(graph, CMatrix::identity(d, d), CMatrix::zeros(d, d))
        .expect("square matrices of the graph dimension")
}

pub fn neumann(graph: MetricGraph) -> BoundaryCondition {
    let d = graph.d();
    BoundaryCondition::new(graph, CMatrix::zeros(d, d), CMatrix::identity(d, d))
        .expect("square matrices of the graph dimension")
}
