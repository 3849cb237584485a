//! Dense complex linear-algebra helpers.
//!
//! Matrices are `nalgebra` types throughout. The spectral decompositions are
//! delegated to `faer`, whose complex SVD stays backward stable on
//! rank-deficient input. All rank and kernel decisions go through
//! [`FullSvd`] with the threshold `dim · ε · σ_max`, so every subspace the
//! crate builds is consistent with every other one.

use faer::{Mat, Side};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{CMatrix, C64};

/// Declared tolerances for the exact-arithmetic conditions of the theory.
///
/// Rank decisions use `d · ε · σ_max` and are not configurable; `zero` is the
/// relative threshold for "this block vanishes" and `psd` the relative
/// threshold for semidefiniteness, `λ_max ≤ psd · (1 + ‖M‖₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub zero: f64,
    pub psd: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            zero: 1e-10,
            psd: 1e-10,
        }
    }
}

impl Tolerances {
    pub fn psd_threshold(&self, spectral_norm: f64) -> f64 {
        self.psd * (1.0 + spectral_norm)
    }

    pub fn is_zero_block(&self, block_norm: f64, reference_norm: f64) -> bool {
        block_norm <= self.zero * (1.0 + reference_norm)
    }
}

/// Rank threshold `dim · ε · σ_max`.
pub fn rank_threshold(dim: usize, sigma_max: f64) -> f64 {
    dim as f64 * f64::EPSILON * sigma_max
}

/// Singular value decomposition with singular values sorted in descending
/// order and full square factors: `u` spans the codomain and `v` the domain.
#[derive(Debug, Clone)]
pub struct FullSvd {
    pub u: CMatrix,
    pub singular_values: Vec<f64>,
    pub v: CMatrix,
    pub rank: usize,
}

impl FullSvd {
    pub fn new(m: &CMatrix) -> Self {
        let (rows, cols) = m.shape();
        if rows == 0 || cols == 0 {
            return Self {
                u: CMatrix::identity(rows, rows),
                singular_values: Vec::new(),
                v: CMatrix::identity(cols, cols),
                rank: 0,
            };
        }
        let svd = to_faer(m).svd().expect("SVD converges");
        let u = from_faer(svd.U());
        let v = from_faer(svd.V());
        let s: Vec<f64> = (0..rows.min(cols)).map(|i| svd.S()[i].re).collect();
        let sigma_max = s.first().copied().unwrap_or(0.0);
        let threshold = rank_threshold(rows.max(cols), sigma_max);
        let rank = if sigma_max == 0.0 {
            0
        } else {
            s.iter().filter(|&&x| x > threshold).count()
        };
        Self {
            u,
            singular_values: s,
            v,
            rank,
        }
    }

    pub fn sigma_max(&self) -> f64 {
        self.singular_values.first().copied().unwrap_or(0.0)
    }

    /// Orthonormal basis of the kernel, `cols × (cols − rank)`.
    pub fn kernel(&self) -> CMatrix {
        let n = self.v.nrows();
        self.v.columns(self.rank, n - self.rank).into_owned()
    }

    /// Orthonormal basis of the orthogonal complement of the kernel.
    pub fn coimage(&self) -> CMatrix {
        self.v.columns(0, self.rank).into_owned()
    }

    /// Orthonormal basis of the range, `rows × rank`.
    pub fn range(&self) -> CMatrix {
        self.u.columns(0, self.rank).into_owned()
    }

    /// Orthonormal basis of the orthogonal complement of the range.
    pub fn cokernel(&self) -> CMatrix {
        let m = self.u.nrows();
        self.u.columns(self.rank, m - self.rank).into_owned()
    }
}

fn to_faer(m: &CMatrix) -> Mat<faer::c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        faer::c64::new(z.re, z.im)
    })
}

fn from_faer(m: faer::MatRef<'_, faer::c64>) -> CMatrix {
    CMatrix::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        C64::new(z.re, z.im)
    })
}

/// Orthogonal projector `V V*` onto the span of the orthonormal columns of `v`.
pub fn projector(v: &CMatrix) -> CMatrix {
    if v.ncols() == 0 {
        return CMatrix::zeros(v.nrows(), v.nrows());
    }
    v * v.adjoint()
}

/// `I − P` for an orthogonal projector `P`, rebuilt from the eigenvectors of
/// `P` with eigenvalue below one half. Subtracting leaves `O(ε)` noise on
/// `Ran P`, which can straddle the rank threshold; this does not.
pub fn complement_projector(p: &CMatrix) -> CMatrix {
    let n = p.nrows();
    if n == 0 {
        return CMatrix::zeros(0, 0);
    }
    let eig = to_faer(&hermitian_part(p))
        .self_adjoint_eigen(Side::Lower)
        .expect("eigensolver converges");
    let vectors = from_faer(eig.U());
    let cols: Vec<usize> = (0..n).filter(|&k| eig.S()[k].re < 0.5).collect();
    let basis = CMatrix::from_fn(n, cols.len(), |i, j| vectors[(i, cols[j])]);
    projector(&basis)
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::new(0.5, 0.0)
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn spectral_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    to_faer(m)
        .singular_values()
        .expect("SVD converges")
        .into_iter()
        .fold(0.0, f64::max)
}

pub fn is_real(m: &CMatrix) -> bool {
    m.iter().all(|z| z.im == 0.0)
}

/// Eigenvalues of a Hermitian matrix in ascending order.
///
/// The matrix is symmetrized first. Purely real input takes the cheaper real
/// symmetric path.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let h = hermitian_part(m);
    let mut ev: Vec<f64> = if is_real(&h) {
        let re = Mat::<f64>::from_fn(h.nrows(), h.ncols(), |i, j| h[(i, j)].re);
        re.self_adjoint_eigenvalues(Side::Lower).expect("eigensolver converges")
    } else {
        to_faer(&h)
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("eigensolver converges")
    };
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    ev
}

pub fn max_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY)
}

pub fn min_hermitian_eigenvalue(m: &CMatrix) -> f64 {
    hermitian_eigenvalues(m)
        .first()
        .copied()
        .unwrap_or(f64::INFINITY)
}

/// Eigenvalues of a general complex matrix.
pub fn general_eigenvalues(m: &CMatrix) -> Option<Vec<C64>> {
    if m.is_empty() {
        return Some(Vec::new());
    }
    let ev = to_faer(m).eigenvalues().ok()?;
    Some(ev.into_iter().map(|z| C64::new(z.re, z.im)).collect())
}

/// Converts a real matrix into a complex one.
pub fn complexify(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}
