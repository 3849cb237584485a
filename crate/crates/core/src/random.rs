//! Seeded random generators for graphs, matrices and boundary conditions.
//!
//! Every generator takes the RNG explicitly. Batches derive one independent
//! stream per item from `(base seed, index)`, so results do not depend on how
//! the batch is scheduled.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::boundary::BoundaryCondition;
use crate::graph::{ExternalEdge, InternalEdge, MetricGraph, VertexId};
use crate::linalg::{self, FullSvd};
use crate::{CMatrix, C64};

pub type Rng = ChaCha8Rng;

pub fn seeded(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for item `index` of a batch with base seed `seed`.
pub fn stream(seed: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn gaussian(rng: &mut Rng) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix(rng: &mut Rng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// Gaussian matrix of rank exactly `rank` (with probability one).
pub fn matrix_of_rank(rng: &mut Rng, d: usize, rank: usize) -> CMatrix {
    if rank == 0 {
        return CMatrix::zeros(d, d);
    }
    gaussian_matrix(rng, d, rank) * gaussian_matrix(rng, rank, d)
}

/// Invertible matrix with condition number below `10⁴`, by rejection.
pub fn random_invertible(rng: &mut Rng, d: usize) -> CMatrix {
    loop {
        let c = gaussian_matrix(rng, d, d);
        let svd = FullSvd::new(&c);
        let smin = svd.singular_values.last().copied().unwrap_or(0.0);
        if smin > 0.0 && svd.sigma_max() / smin < 1e4 {
            return c;
        }
    }
}

/// Random projector of rank `rank` onto a Haar-like subspace.
pub fn random_projector(rng: &mut Rng, d: usize, rank: usize) -> CMatrix {
    if rank == 0 {
        return CMatrix::zeros(d, d);
    }
    let svd = FullSvd::new(&gaussian_matrix(rng, d, rank));
    linalg::projector(&svd.range())
}

/// Connected-by-construction graph with boundary dimension `d`: a random split
/// `d = |E| + 2|I|` with edge lengths in `[0.5, 3]`.
pub fn random_graph(rng: &mut Rng, d: usize) -> MetricGraph {
    let n_internal = rng.random_range(0..=d / 2);
    let n_external = d - 2 * n_internal;
    let n_vertices = (n_internal + 1).max(1);
    let vertices: Vec<VertexId> = (0..n_vertices as i64).map(VertexId::Int).collect();
    let internal: Vec<InternalEdge> = (0..n_internal)
        .map(|i| InternalEdge {
            from: VertexId::Int(i as i64),
            to: VertexId::Int(i as i64 + 1),
            length: rng.random_range(0.5..3.0),
        })
        .collect();
    let external: Vec<ExternalEdge> = (0..n_external)
        .map(|_| ExternalEdge {
            from: VertexId::Int(rng.random_range(0..n_vertices as i64)),
        })
        .collect();
    MetricGraph::new(vertices, internal, external).expect("valid by construction")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// Gaussian `A`, `B` of the requested rank.
    Any,
    /// `Q A P⊥ = 0` enforced; needs no restriction on the rank.
    QuasiAccretive,
    /// `Q A P⊥ ≠ 0`; the rank of `B` is clamped into `1..d−1`.
    Violating,
    /// Normalized pair with `Re L ≤ 0`, scrambled by a random gauge.
    MAccretive,
}

/// Random boundary condition on `graph` whose `B` has rank `rank_b`.
pub fn random_bc(rng: &mut Rng, graph: &MetricGraph, rank_b: usize, kind: BcKind) -> BoundaryCondition {
    let d = graph.d();
    let rank_b = rank_b.min(d);
    let (a, b) = match kind {
        BcKind::Any => (gaussian_matrix(rng, d, d), matrix_of_rank(rng, d, rank_b)),
        BcKind::QuasiAccretive => {
            let b = matrix_of_rank(rng, d, rank_b);
            let pr = crate::boundary::compute_projectors(&b);
            let a0 = gaussian_matrix(rng, d, d);
            let a = &a0 - &pr.q * &a0 * pr.p_perp();
            (a, b)
        }
        BcKind::Violating => {
            let rank_b = rank_b.clamp(1, d.saturating_sub(1).max(1));
            (gaussian_matrix(rng, d, d), matrix_of_rank(rng, d, rank_b))
        }
        BcKind::MAccretive => {
            // Both projectors come from one orthonormal basis, so neither
            // is formed as a difference and both have clean numerical rank.
            let basis = FullSvd::new(&gaussian_matrix(rng, d, d)).u;
            let p_perp = linalg::projector(&basis.columns(0, rank_b).into_owned());
            let p = linalg::projector(&basis.columns(rank_b, d - rank_b).into_owned());
            let g = gaussian_matrix(rng, d, d);
            let n = gaussian_matrix(rng, d, d);
            let skew = (&g - g.adjoint()) * C64::new(0.5, 0.0);
            let l = &p_perp * (skew - &n * n.adjoint() * C64::new(0.5, 0.0)) * &p_perp;
            let c = random_invertible(rng, d);
            (&c * (&p + l), &c * p_perp)
        }
    };
    BoundaryCondition::new(graph.clone(), a, b).expect("square matrices of the graph dimension")
}
