//! Boundary conditions `(A, B)`, their normalization and classification.
//!
//! With `P` the orthogonal projector onto `Ker B` and `Q` the one onto
//! `(Ran B)⊥`, a boundary condition of maximal rank defines a
//! quasi-m-accretive (and then m-sectorial) Laplacian exactly when
//! `Q A P⊥ = 0`. In that case it is equivalent to the normalized pair
//! `(P + L, P⊥)` with `L = (Q⊥ B P⊥)⁻¹ Q⊥ A P⊥`, and the real part of the
//! operator is the self-adjoint Laplacian with `(P + Re L, P⊥)`.
//! m-accretivity is decided by the sign of `Re(AB*) + B M₀(a) B*`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MetricGraph;
use crate::io::cmatrix;
use crate::linalg::{self, FullSvd, Tolerances};
use crate::{CMatrix, C64};

/// A pair `(A, B)` of complex `d × d` matrices on a metric graph.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCondition {
    graph: MetricGraph,
    a: CMatrix,
    b: CMatrix,
}

impl BoundaryCondition {
    pub fn new(graph: MetricGraph, a: CMatrix, b: CMatrix) -> Result<Self> {
        let d = graph.d();
        if a.shape() != (d, d) || b.shape() != (d, d) {
            return Err(Error::Dimension(format!(
                "A is {:?} and B is {:?}, the graph needs {d}x{d}",
                a.shape(),
                b.shape()
            )));
        }
        Ok(Self { graph, a, b })
    }

    pub fn graph(&self) -> &MetricGraph {
        &self.graph
    }

    pub fn a(&self) -> &CMatrix {
        &self.a
    }

    pub fn b(&self) -> &CMatrix {
        &self.b
    }

    pub fn d(&self) -> usize {
        self.a.nrows()
    }

    /// The block map `(A | B)` of size `d × 2d`.
    pub fn stacked(&self) -> CMatrix {
        let d = self.d();
        let mut ab = CMatrix::zeros(d, 2 * d);
        ab.view_mut((0, 0), (d, d)).copy_from(&self.a);
        ab.view_mut((0, d), (d, d)).copy_from(&self.b);
        ab
    }

    /// `(CA, CB)`; equivalent to `self` whenever `C` is invertible.
    pub fn gauge(&self, c: &CMatrix) -> Result<Self> {
        Self::new(self.graph.clone(), c * &self.a, c * &self.b)
    }

    /// Residual `‖Aψ + Bψ'‖` relative to `‖(A | B)‖₂ (‖ψ‖ + ‖ψ'‖)`.
    pub fn relative_residual(&self, psi: &crate::CVector, dpsi: &crate::CVector) -> f64 {
        let r = (&self.a * psi + &self.b * dpsi).norm();
        let scale = linalg::spectral_norm(&self.stacked()) * (psi.norm() + dpsi.norm());
        if scale == 0.0 {
            r
        } else {
            r / scale
        }
    }
}

/// The canonical parametrization: `P ψ = 0` and `L ψ + P⊥ ψ' = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedBC {
    #[serde(rename = "P", with = "cmatrix")]
    pub p: CMatrix,
    #[serde(rename = "L", with = "cmatrix")]
    pub l: CMatrix,
}

impl NormalizedBC {
    pub fn p_perp(&self) -> CMatrix {
        linalg::complement_projector(&self.p)
    }

    /// The equivalent pair `(P + L, P⊥)`.
    pub fn to_bc(&self, graph: MetricGraph) -> Result<BoundaryCondition> {
        BoundaryCondition::new(graph, &self.p + &self.l, self.p_perp())
    }
}

/// Projectors attached to `B`.
#[derive(Debug, Clone)]
pub struct Projectors {
    /// Onto `Ker B`.
    pub p: CMatrix,
    /// Onto `(Ran B)⊥`.
    pub q: CMatrix,
    pub rank_b: usize,
    svd: FullSvd,
}

impl Projectors {
    pub fn p_perp(&self) -> CMatrix {
        linalg::projector(&self.svd.coimage())
    }

    pub fn q_perp(&self) -> CMatrix {
        linalg::projector(&self.svd.range())
    }
}

/// `P` onto `Ker B` and `Q` onto `(Ran B)⊥`, both from the SVD of `B`.
pub fn compute_projectors(b: &CMatrix) -> Projectors {
    let svd = FullSvd::new(b);
    Projectors {
        p: linalg::projector(&svd.kernel()),
        q: linalg::projector(&svd.cokernel()),
        rank_b: svd.rank,
        svd,
    }
}

/// Maximal rank of `(A | B)`.
pub fn check_max_rank(bc: &BoundaryCondition) -> bool {
    FullSvd::new(&bc.stacked()).rank == bc.d()
}

/// `‖Q A P⊥‖_F`.
pub fn qap_perp_norm(bc: &BoundaryCondition) -> f64 {
    let pr = compute_projectors(bc.b());
    (&pr.q * bc.a() * pr.p_perp()).norm()
}

/// Assumption A: `Q A P⊥ = 0` up to `tol.zero · (1 + ‖A‖_F)`.
pub fn check_assumption_a(bc: &BoundaryCondition, tol: &Tolerances) -> bool {
    tol.is_zero_block(qap_perp_norm(bc), bc.a().norm())
}

/// Left multiplication to the form `B' = P⊥` and the resulting `A' = C A`.
///
/// `C = (Q⊥BP⊥)⁻¹ ⊕ U` with the isomorphism `U : Ran Q → Ran P` taken from
/// the singular vectors of `B`. Defined whenever `(A | B)` has maximal rank,
/// with or without Assumption A.
#[derive(Debug, Clone)]
pub struct FullNormalization {
    pub c: CMatrix,
    pub a_prime: CMatrix,
    pub b_prime: CMatrix,
    pub p: CMatrix,
    pub p_perp: CMatrix,
    pub q: CMatrix,
}

pub fn full_normalization(bc: &BoundaryCondition) -> Result<FullNormalization> {
    if !check_max_rank(bc) {
        return Err(Error::RankDeficient);
    }
    let pr = compute_projectors(bc.b());
    let svd = &pr.svd;
    let d = bc.d();
    let r = svd.rank;
    let mut c = CMatrix::zeros(d, d);
    for k in 0..r {
        let vk = svd.v.column(k);
        let uk = svd.u.column(k);
        c += (vk * uk.adjoint()) * C64::new(1.0 / svd.singular_values[k], 0.0);
    }
    for k in r..d {
        c += svd.v.column(k) * svd.u.column(k).adjoint();
    }
    let a_prime = &c * bc.a();
    let b_prime = &c * bc.b();
    let p_perp = pr.p_perp();
    Ok(FullNormalization {
        c,
        a_prime,
        b_prime,
        p: pr.p.clone(),
        p_perp,
        q: pr.q.clone(),
    })
}

/// The normalized pair `(P, L)`. Requires maximal rank and Assumption A.
///
/// The block `P⊥ A' P` is dropped: it never acts on the domain because
/// `P ψ = 0` there.
pub fn normalize(bc: &BoundaryCondition, tol: &Tolerances) -> Result<NormalizedBC> {
    if !check_max_rank(bc) {
        return Err(Error::Precondition(
            "maximal rank of (A | B) fails; normalization undefined".into(),
        ));
    }
    if !check_assumption_a(bc, tol) {
        return Err(Error::Precondition(
            "Assumption A (Q A P_perp = 0) fails; normalization undefined".into(),
        ));
    }
    let n = full_normalization(bc)?;
    let l = &n.p_perp * &n.a_prime * &n.p_perp;
    Ok(NormalizedBC { p: n.p, l })
}

fn kernel_projector(bc: &BoundaryCondition) -> Result<CMatrix> {
    let svd = FullSvd::new(&bc.stacked());
    if svd.rank != bc.d() {
        return Err(Error::RankDeficient);
    }
    Ok(linalg::projector(&svd.kernel()))
}

/// Equality of the subspaces `Ker(A₁ | B₁)` and `Ker(A₂ | B₂)`.
pub fn equivalent(
    bc1: &BoundaryCondition,
    bc2: &BoundaryCondition,
    tol: &Tolerances,
) -> Result<bool> {
    if bc1.d() != bc2.d() {
        return Err(Error::Dimension(format!(
            "boundary spaces of dimension {} and {}",
            bc1.d(),
            bc2.d()
        )));
    }
    let p1 = kernel_projector(bc1)?;
    let p2 = kernel_projector(bc2)?;
    Ok(tol.is_zero_block((&p1 - &p2).norm(), p1.norm()))
}

/// `M₀(a) = [[0, 0, 0], [0, −1/a, 1/a], [0, 1/a, −1/a]]` in boundary-space order.
pub fn m0_matrix(graph: &MetricGraph) -> DMatrix<f64> {
    let d = graph.d();
    let ne = graph.n_external();
    let ni = graph.n_internal();
    let mut m = DMatrix::zeros(d, d);
    for (i, a) in graph.lengths().into_iter().enumerate() {
        let (lo, hi) = (ne + i, ne + ni + i);
        m[(lo, lo)] = -1.0 / a;
        m[(hi, hi)] = -1.0 / a;
        m[(lo, hi)] = 1.0 / a;
        m[(hi, lo)] = 1.0 / a;
    }
    m
}

/// The Hermitian matrix `Re(AB*) + B M₀(a) B*` and its top eigenvalue.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MAccretivityCriterion {
    pub max_eigenvalue: f64,
    pub threshold: f64,
    pub negative_semidefinite: bool,
}

pub fn m_accretivity_criterion(bc: &BoundaryCondition, tol: &Tolerances) -> MAccretivityCriterion {
    let m0 = linalg::complexify(&m0_matrix(bc.graph()));
    let ab = bc.a() * bc.b().adjoint();
    let m = linalg::hermitian_part(&ab) + bc.b() * m0 * bc.b().adjoint();
    let max_eigenvalue = linalg::max_hermitian_eigenvalue(&m);
    let threshold = tol.psd_threshold(linalg::spectral_norm(&m));
    MAccretivityCriterion {
        max_eigenvalue,
        threshold,
        negative_semidefinite: max_eigenvalue <= threshold,
    }
}

/// m-accretivity: maximal rank and `Re(AB*) + B M₀(a) B* ≤ 0`.
pub fn check_m_accretive(bc: &BoundaryCondition, tol: &Tolerances) -> bool {
    check_max_rank(bc) && m_accretivity_criterion(bc, tol).negative_semidefinite
}

/// `(P, Re L)`, parametrizing the self-adjoint real part `−Δ(P + Re L, P⊥)`.
pub fn real_part(bc: &BoundaryCondition, tol: &Tolerances) -> Result<NormalizedBC> {
    let n = normalize(bc, tol)?;
    Ok(NormalizedBC {
        l: linalg::hermitian_part(&n.l),
        p: n.p,
    })
}

/// Self-adjointness, read off the normalized form: quasi-m-accretive with a
/// Hermitian `L`. Equivalently `bc` is equivalent to its own real part.
pub fn check_self_adjoint(bc: &BoundaryCondition, tol: &Tolerances) -> bool {
    match normalize(bc, tol) {
        Ok(n) => tol.is_zero_block((&n.l - n.l.adjoint()).norm(), n.l.norm()),
        Err(_) => false,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QwbVerdict {
    NegativeSemidefinite,
    IndefiniteOrPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QwbReport {
    pub verdict: QwbVerdict,
    pub max_eigenvalue: f64,
    /// What the block criterion predicts: `A ≤ 0` and `B = 0`.
    pub predicted: QwbVerdict,
}

impl QwbReport {
    pub fn consistent(&self) -> bool {
        self.verdict == self.predicted
    }
}

/// Semidefiniteness of `M = [[A, B*], [B, 0]]` with Hermitian `A`.
///
/// `M ≤ 0` holds exactly when `A ≤ 0` and `B = 0`; the report carries both
/// the direct eigenvalue verdict and that prediction.
pub fn qwb_check(a_block: &CMatrix, b_block: &CMatrix, tol: &Tolerances) -> Result<QwbReport> {
    let m = a_block.nrows();
    if a_block.ncols() != m || b_block.ncols() != m {
        return Err(Error::Dimension(format!(
            "A block {:?} and B block {:?}",
            a_block.shape(),
            b_block.shape()
        )));
    }
    if !tol.is_zero_block((a_block - a_block.adjoint()).norm(), a_block.norm()) {
        return Err(Error::Precondition("A block is not Hermitian".into()));
    }
    let k = b_block.nrows();
    let mut full = CMatrix::zeros(m + k, m + k);
    full.view_mut((0, 0), (m, m)).copy_from(a_block);
    full.view_mut((0, m), (m, k)).copy_from(&b_block.adjoint());
    full.view_mut((m, 0), (k, m)).copy_from(b_block);
    let max_eigenvalue = linalg::max_hermitian_eigenvalue(&full);
    let threshold = tol.psd_threshold(linalg::spectral_norm(&full));
    let verdict = if max_eigenvalue <= threshold {
        QwbVerdict::NegativeSemidefinite
    } else {
        QwbVerdict::IndefiniteOrPositive
    };
    let a_nsd = linalg::max_hermitian_eigenvalue(a_block)
        <= tol.psd_threshold(linalg::spectral_norm(a_block));
    let b_zero = tol.is_zero_block(b_block.norm(), a_block.norm());
    let predicted = if a_nsd && b_zero {
        QwbVerdict::NegativeSemidefinite
    } else {
        QwbVerdict::IndefiniteOrPositive
    };
    Ok(QwbReport {
        verdict,
        max_eigenvalue,
        predicted,
    })
}

/// Verdict record for one boundary condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub d: usize,
    pub rank_ok: bool,
    pub assumption_a_ok: bool,
    pub quasi_m_accretive: bool,
    pub m_sectorial: bool,
    pub m_accretive: bool,
    pub self_adjoint: bool,
    pub qap_perp_norm: f64,
    pub criterion: MAccretivityCriterion,
    /// Set when the m-accretivity matrix is `≤ 0` but `Q A P⊥` was judged
    /// nonzero. The theory rules this out; it flags a near-degenerate input.
    pub criterion_without_assumption_a: bool,
    pub normalized: Option<NormalizedBC>,
    pub real_part: Option<NormalizedBC>,
    pub tolerances: Tolerances,
}

impl Classification {
    pub fn same_verdict(&self, other: &Classification) -> bool {
        self.rank_ok == other.rank_ok
            && self.assumption_a_ok == other.assumption_a_ok
            && self.quasi_m_accretive == other.quasi_m_accretive
            && self.m_sectorial == other.m_sectorial
            && self.m_accretive == other.m_accretive
            && self.self_adjoint == other.self_adjoint
    }
}

/// Total classification; ill-posed inputs come back with `rank_ok = false`.
pub fn classify(bc: &BoundaryCondition, tol: &Tolerances) -> Classification {
    let rank_ok = check_max_rank(bc);
    let qap = qap_perp_norm(bc);
    let assumption_a_ok = tol.is_zero_block(qap, bc.a().norm());
    let quasi = rank_ok && assumption_a_ok;
    let criterion = m_accretivity_criterion(bc, tol);
    let normalized = if quasi { normalize(bc, tol).ok() } else { None };
    let real = normalized.as_ref().map(|n| NormalizedBC {
        p: n.p.clone(),
        l: linalg::hermitian_part(&n.l),
    });
    let self_adjoint = normalized
        .as_ref()
        .map(|n| tol.is_zero_block((&n.l - n.l.adjoint()).norm(), n.l.norm()))
        .unwrap_or(false);
    Classification {
        d: bc.d(),
        rank_ok,
        assumption_a_ok,
        quasi_m_accretive: quasi,
        m_sectorial: quasi,
        m_accretive: quasi && criterion.negative_semidefinite,
        self_adjoint,
        qap_perp_norm: qap,
        criterion,
        criterion_without_assumption_a: rank_ok
            && criterion.negative_semidefinite
            && !assumption_a_ok,
        normalized,
        real_part: real,
        tolerances: *tol,
    }
}
