//! Finite-difference Laplacians with the boundary condition imposed exactly
//! on the grid, growth bounds and Crank–Nicolson heat evolution.
//!
//! Unknowns are nodal values; external edges are cut at `R` with a zero
//! value there. The discrete form is
//!
//! `k(u, v) = Σ_cells conj(Δu) Δv / h + ⟨ψ(u), Dψ(v)⟩`
//!
//! with `D` the three-point inward derivative, and the domain is the kernel of
//! `G = A·(values) + B·D`. Only the three nodes next to each endpoint enter
//! `G`, so a basis `Z` of its kernel is an SVD null space on those nodes
//! joined with the identity elsewhere. With `Z*WZ = LL*` (trapezoid weights
//! `W`) the operator acts on coordinates `y` as `T = L⁻¹ Z*KZ L⁻*`, and
//! `‖y‖₂` is the discrete `L²` norm of `u = Z L⁻* y`.

use nalgebra::{Cholesky, DMatrix};
use serde::{Deserialize, Serialize};

use crate::boundary::{self, BoundaryCondition};
use crate::error::{Error, Result};
use crate::graph::{make_grid, EdgeFunction, EdgeKind, GridSpec};
use crate::linalg::{self, FullSvd, Tolerances};
use crate::{CMatrix, CVector, C64};

/// The assembled operator `T` together with the maps between coordinates
/// and nodal values.
#[derive(Debug, Clone)]
pub struct DiscreteOperator {
    pub grid: GridSpec,
    pub t: CMatrix,
    pub hermitian: bool,
    /// Classification flag of the condition the operator was built from.
    pub quasi_m_accretive: bool,
    /// Natural node index of every active node, per edge.
    offsets: Vec<usize>,
    n_nodes: usize,
    s_nodes: Vec<usize>,
    r_nodes: Vec<usize>,
    kernel_s: CMatrix,
    chol_s: CMatrix,
    w_r_sqrt: Vec<f64>,
}

fn active_points(e: &crate::graph::EdgeGrid) -> usize {
    match e.kind {
        EdgeKind::Internal => e.points(),
        EdgeKind::External => e.intervals,
    }
}

/// Three inward nodes (natural numbering) of boundary index `k`.
fn endpoint_nodes(grid: &GridSpec, offsets: &[usize], k: usize) -> [usize; 3] {
    let (edge, node) = grid.boundary_node(k);
    let o = offsets[edge];
    if node == 0 {
        [o, o + 1, o + 2]
    } else {
        [o + node, o + node - 1, o + node - 2]
    }
}

/// Assembles the operator for `bc` with spacing at most `h` and external
/// edges cut at `r`.
pub fn assemble(bc: &BoundaryCondition, h: f64, r: f64) -> Result<DiscreteOperator> {
    if !boundary::check_max_rank(bc) {
        return Err(Error::RankDeficient);
    }
    let grid = make_grid(bc.graph(), h, r)?;
    for (j, e) in grid.edges.iter().enumerate() {
        if e.points() < 5 {
            return Err(Error::TooFewSamples {
                edge: j,
                needed: 5,
                got: e.points(),
            });
        }
    }
    let quasi = boundary::classify(bc, &Tolerances::default()).quasi_m_accretive;

    let mut offsets = Vec::with_capacity(grid.edges.len());
    let mut n_nodes = 0;
    for e in &grid.edges {
        offsets.push(n_nodes);
        n_nodes += active_points(e);
    }

    let mut weights = vec![0.0; n_nodes];
    let mut k = CMatrix::zeros(n_nodes, n_nodes);
    for (e, &o) in grid.edges.iter().zip(&offsets) {
        let hh = e.h();
        let m = active_points(e);
        for i in 0..e.intervals {
            let (a, b) = (o + i, o + i + 1);
            weights[a] += 0.5 * hh;
            if i + 1 < m {
                weights[b] += 0.5 * hh;
                k[(a, a)] += C64::new(1.0 / hh, 0.0);
                k[(b, b)] += C64::new(1.0 / hh, 0.0);
                k[(a, b)] -= C64::new(1.0 / hh, 0.0);
                k[(b, a)] -= C64::new(1.0 / hh, 0.0);
            } else {
                k[(a, a)] += C64::new(1.0 / hh, 0.0);
            }
        }
    }

    let d = bc.d();
    let mut g = CMatrix::zeros(d, n_nodes);
    let mut s_nodes = Vec::with_capacity(3 * d);
    for kk in 0..d {
        let nodes = endpoint_nodes(&grid, &offsets, kk);
        let (edge, _) = grid.boundary_node(kk);
        let hh = grid.edges[edge].h();
        let stencil = [-1.5 / hh, 2.0 / hh, -0.5 / hh];
        for (m, &node) in nodes.iter().enumerate() {
            k[(nodes[0], node)] += C64::new(stencil[m], 0.0);
            for j in 0..d {
                g[(j, node)] += bc.b()[(j, kk)] * stencil[m];
            }
            s_nodes.push(node);
        }
        for j in 0..d {
            g[(j, nodes[0])] += bc.a()[(j, kk)];
        }
    }
    s_nodes.sort_unstable();
    s_nodes.dedup();
    let mut in_s = vec![false; n_nodes];
    for &s in &s_nodes {
        in_s[s] = true;
    }
    let r_nodes: Vec<usize> = (0..n_nodes).filter(|&i| !in_s[i]).collect();

    let g_s = CMatrix::from_fn(d, s_nodes.len(), |i, j| g[(i, s_nodes[j])]);
    let svd = FullSvd::new(&g_s);
    if svd.rank < d {
        return Err(Error::Projection(format!(
            "grid constraint has rank {} < {d}",
            svd.rank
        )));
    }
    let kernel_s = svd.kernel();
    let w_s = CMatrix::from_diagonal(&CVector::from_iterator(
        s_nodes.len(),
        s_nodes.iter().map(|&i| C64::new(weights[i], 0.0)),
    ));
    let m_s = kernel_s.adjoint() * &w_s * &kernel_s;
    let chol_s = Cholesky::new(linalg::hermitian_part(&m_s))
        .ok_or_else(|| Error::Eigen("mass matrix on the endpoint block is not positive".into()))?
        .l();
    let w_r_sqrt: Vec<f64> = r_nodes.iter().map(|&i| weights[i].sqrt()).collect();

    let sub = |rows: &[usize], cols: &[usize]| CMatrix::from_fn(rows.len(), cols.len(), |i, j| k[(rows[i], cols[j])]);
    let k_ss = sub(&s_nodes, &s_nodes);
    let k_sr = sub(&s_nodes, &r_nodes);
    let k_rs = sub(&r_nodes, &s_nodes);
    let k_rr = sub(&r_nodes, &r_nodes);

    let inv_l = |x: &CMatrix| chol_s.solve_lower_triangular(x).expect("triangular factor is nonsingular");
    // X L⁻* = (L⁻¹ X*)*.
    let inv_l_star_right = |x: &CMatrix| inv_l(&x.adjoint()).adjoint();
    let scale_rows = |mut x: CMatrix| {
        for (i, w) in w_r_sqrt.iter().enumerate() {
            x.row_mut(i).scale_mut(1.0 / w);
        }
        x
    };
    let scale_cols = |mut x: CMatrix| {
        for (j, w) in w_r_sqrt.iter().enumerate() {
            x.column_mut(j).scale_mut(1.0 / w);
        }
        x
    };
    let t_ss = inv_l_star_right(&inv_l(&(kernel_s.adjoint() * &k_ss * &kernel_s)));
    let t_sr = scale_cols(inv_l(&(kernel_s.adjoint() * &k_sr)));
    let t_rs = inv_l_star_right(&scale_rows(&k_rs * &kernel_s));
    let t_rr = scale_cols(scale_rows(k_rr));

    let ms = kernel_s.ncols();
    let mr = r_nodes.len();
    let mut t = CMatrix::zeros(ms + mr, ms + mr);
    t.view_mut((0, 0), (ms, ms)).copy_from(&t_ss);
    t.view_mut((0, ms), (ms, mr)).copy_from(&t_sr);
    t.view_mut((ms, 0), (mr, ms)).copy_from(&t_rs);
    t.view_mut((ms, ms), (mr, mr)).copy_from(&t_rr);

    let scale = t.norm().max(f64::MIN_POSITIVE);
    if t.iter().all(|z| z.im.abs() <= 1e-14 * scale) {
        t.apply(|z| *z = C64::new(z.re, 0.0));
    }
    let hermitian = (&t - t.adjoint()).norm() <= 1e-12 * scale;

    Ok(DiscreteOperator {
        grid,
        t,
        hermitian,
        quasi_m_accretive: quasi,
        offsets,
        n_nodes,
        s_nodes,
        r_nodes,
        kernel_s,
        chol_s,
        w_r_sqrt,
    })
}

impl DiscreteOperator {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    fn nodal(&self, f: &EdgeFunction) -> Result<Vec<C64>> {
        if f.grid != self.grid {
            return Err(Error::Dimension("edge function lives on a different grid".into()));
        }
        let mut x = vec![C64::new(0.0, 0.0); self.n_nodes];
        for ((e, &o), v) in self.grid.edges.iter().zip(&self.offsets).zip(&f.values) {
            let n = active_points(e);
            x[o..o + n].copy_from_slice(&v[..n]);
        }
        Ok(x)
    }

    /// Coordinates of the `L²`-orthogonal projection of `f` onto the discrete
    /// domain.
    pub fn project(&self, f: &EdgeFunction) -> Result<CVector> {
        let x = self.nodal(f)?;
        let ms = self.kernel_s.ncols();
        let mut y = CVector::zeros(self.dim());
        let w_s = self.s_weights();
        let x_s = CVector::from_iterator(
            self.s_nodes.len(),
            self.s_nodes.iter().zip(&w_s).map(|(&i, &w)| x[i] * w),
        );
        let rhs = self.kernel_s.adjoint() * x_s;
        let y_s = self
            .chol_s
            .solve_lower_triangular(&rhs)
            .ok_or_else(|| Error::Projection("singular endpoint factor".into()))?;
        y.rows_mut(0, ms).copy_from(&y_s);
        for (k, (&i, w)) in self.r_nodes.iter().zip(&self.w_r_sqrt).enumerate() {
            y[ms + k] = x[i] * *w;
        }
        Ok(y)
    }

    fn s_weights(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.s_nodes.len());
        for &node in &self.s_nodes {
            let edge = self.offsets.iter().rposition(|&o| o <= node).expect("node has an edge");
            let e = &self.grid.edges[edge];
            let local = node - self.offsets[edge];
            let ends = local == 0 || (e.kind == EdgeKind::Internal && local == e.intervals);
            w.push(if ends { 0.5 * e.h() } else { e.h() });
        }
        w
    }

    /// Nodal values `u = Z L⁻* y`; external edges get zero at `R`.
    pub fn to_function(&self, y: &CVector) -> EdgeFunction {
        let ms = self.kernel_s.ncols();
        let y_s = y.rows(0, ms).into_owned();
        let c_s = self
            .chol_s
            .adjoint()
            .solve_upper_triangular(&y_s)
            .expect("triangular factor is nonsingular");
        let u_s = &self.kernel_s * c_s;
        let mut x = vec![C64::new(0.0, 0.0); self.n_nodes];
        for (k, &i) in self.s_nodes.iter().enumerate() {
            x[i] = u_s[k];
        }
        for (k, (&i, w)) in self.r_nodes.iter().zip(&self.w_r_sqrt).enumerate() {
            x[i] = y[ms + k] / *w;
        }
        let values = self
            .grid
            .edges
            .iter()
            .zip(&self.offsets)
            .map(|(e, &o)| {
                let mut v: Vec<C64> = x[o..o + active_points(e)].to_vec();
                if e.kind == EdgeKind::External {
                    v.push(C64::new(0.0, 0.0));
                }
                v
            })
            .collect();
        EdgeFunction::from_values(&self.grid, values).expect("consistent with the grid")
    }

    /// All eigenvalues of `T`.
    pub fn spectrum(&self) -> Result<Vec<C64>> {
        if self.hermitian {
            Ok(linalg::hermitian_eigenvalues(&self.t)
                .into_iter()
                .map(|x| C64::new(x, 0.0))
                .collect())
        } else {
            linalg::general_eigenvalues(&self.t)
                .ok_or_else(|| Error::Eigen("Schur iteration did not converge".into()))
        }
    }

    /// Smallest real part over the spectrum of `T`.
    pub fn min_real_eigenvalue(&self) -> Result<f64> {
        Ok(self
            .spectrum()?
            .iter()
            .map(|z| z.re)
            .fold(f64::INFINITY, f64::min))
    }

    /// Bottom of the numerical range of `T`: the least eigenvalue of `(T + T*)/2`.
    pub fn hermitian_min(&self) -> f64 {
        linalg::min_hermitian_eigenvalue(&self.t)
    }
}

/// Whether Crank–Nicolson steps are contractive: `(T + T*)/2 ⪰ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContractivityReport {
    pub min_hermitian_eigenvalue: f64,
    pub threshold: f64,
    pub contractive: bool,
}

pub fn audit_contractivity(op: &DiscreteOperator, tol: &Tolerances) -> ContractivityReport {
    let min = op.hermitian_min();
    let threshold = tol.psd_threshold(linalg::spectral_norm(&op.t));
    ContractivityReport {
        min_hermitian_eigenvalue: min,
        threshold,
        contractive: min >= -threshold,
    }
}

/// Truncation length for external edges: the default, extended so that a
/// bound state decaying like `e^{−κx}` has dropped by `10⁸` at the cut.
pub fn truncation_for(bc: &BoundaryCondition, tol: &Tolerances) -> f64 {
    let default = bc.graph().default_truncation();
    let Ok(rp) = boundary::real_part(bc, tol) else {
        return default;
    };
    let kappa = linalg::max_hermitian_eigenvalue(&rp.l);
    if kappa > tol.psd_threshold(linalg::spectral_norm(&rp.l)) {
        default.max(1e8f64.ln() / kappa)
    } else {
        default
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GrowthBound {
    /// Richardson extrapolation `(4ω_{h/2} − ω_h)/3`.
    pub omega: f64,
    pub omega_h: f64,
    pub omega_h2: f64,
    pub error_estimate: f64,
    pub h: f64,
    pub truncation: f64,
}

/// `ω = inf σ(Re(−Δ(A, B)))`, so that `‖e^{tΔ}‖ ≤ e^{−ωt}`.
pub fn growth_bound(
    bc: &BoundaryCondition,
    h: f64,
    truncation: Option<f64>,
    tol: &Tolerances,
) -> Result<GrowthBound> {
    let rp = boundary::real_part(bc, tol)?;
    let real_bc = rp.to_bc(bc.graph().clone())?;
    let r = truncation.unwrap_or_else(|| truncation_for(bc, tol));
    let omega_h = assemble(&real_bc, h, r)?.hermitian_min();
    let omega_h2 = assemble(&real_bc, h / 2.0, r)?.hermitian_min();
    Ok(GrowthBound {
        omega: (4.0 * omega_h2 - omega_h) / 3.0,
        omega_h,
        omega_h2,
        error_estimate: (omega_h2 - omega_h).abs() / 3.0,
        h,
        truncation: r,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub dt: f64,
    pub t_end: f64,
    /// Run even when the condition is not quasi-m-accretive.
    pub force: bool,
    /// Keep every `k`-th state (0 keeps none).
    pub snapshot_every: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            force: false,
            snapshot_every: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub snapshots: Vec<(f64, CVector)>,
    pub final_state: CVector,
}

impl Trajectory {
    /// Largest relative one-step increase `(‖y_{k+1}‖ − ‖y_k‖)/‖y_k‖`.
    pub fn max_step_increase(&self) -> f64 {
        self.norms
            .windows(2)
            .map(|w| if w[0] > 0.0 { (w[1] - w[0]) / w[0] } else { 0.0 })
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn rows(&self, omega: Option<f64>) -> Vec<crate::io::TrajectoryRow> {
        let n0 = self.norms.first().copied().unwrap_or(0.0);
        self.times
            .iter()
            .zip(&self.norms)
            .map(|(&t, &norm)| crate::io::TrajectoryRow {
                t,
                norm,
                bound: omega.map_or(f64::NAN, |w| (-w * t).exp() * n0),
            })
            .collect()
    }
}

/// Crank–Nicolson evolution of `ψ' = −Tψ` from the projection of `psi0`.
pub fn evolve(op: &DiscreteOperator, psi0: &EdgeFunction, opts: &EvolveOptions) -> Result<Trajectory> {
    let y0 = op.project(psi0)?;
    evolve_from(op, y0, opts)
}

/// Crank–Nicolson evolution from coordinates `y0`.
pub fn evolve_from(op: &DiscreteOperator, y0: CVector, opts: &EvolveOptions) -> Result<Trajectory> {
    if !op.quasi_m_accretive && !opts.force {
        return Err(Error::NotQuasiAccretive);
    }
    if !(opts.dt > 0.0 && opts.t_end >= 0.0) {
        return Err(Error::Precondition(format!(
            "need dt > 0 and t_end ≥ 0, got dt = {} and t_end = {}",
            opts.dt, opts.t_end
        )));
    }
    let steps = (opts.t_end / opts.dt).round() as usize;
    let n = op.dim();
    let half = C64::new(0.5 * opts.dt, 0.0);
    let implicit = CMatrix::identity(n, n) + &op.t * half;
    let explicit = CMatrix::identity(n, n) - &op.t * half;
    let lu = implicit.lu();
    let mut y = y0;
    let mut times = vec![0.0];
    let mut norms = vec![y.norm()];
    let mut snapshots = Vec::new();
    if opts.snapshot_every > 0 {
        snapshots.push((0.0, y.clone()));
    }
    for step in 1..=steps {
        let rhs = &explicit * &y;
        y = lu.solve(&rhs).ok_or(Error::LinearSolve { step })?;
        let t = step as f64 * opts.dt;
        times.push(t);
        norms.push(y.norm());
        if opts.snapshot_every > 0 && step % opts.snapshot_every == 0 {
            snapshots.push((t, y.clone()));
        }
    }
    Ok(Trajectory {
        times,
        norms,
        snapshots,
        final_state: y,
    })
}

/// Dense real view of a real operator, for callers that want `f64` input.
pub fn real_matrix(op: &DiscreteOperator) -> Option<DMatrix<f64>> {
    linalg::is_real(&op.t).then(|| op.t.map(|z| z.re))
}
