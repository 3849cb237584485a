//! Quadratic forms, the trace estimate, numerical-range sampling and the
//! non-accretivity witness sequence.
//!
//! The form of `-Δ(A, B)` on a domain function is
//! `∫|ψ'|² + ⟨ψ, ψ'⟩` with the boundary pairing antilinear in its first
//! slot. On the closed form domain `Pψ = 0` it equals
//! `∫|ψ'|² − ⟨P⊥ψ, L P⊥ψ⟩`.

use nalgebra::DVector;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::boundary::{self, BoundaryCondition, NormalizedBC};
use crate::error::{Error, Result};
use crate::graph::{self, EdgeFunction, EdgeKind, GridSpec, MetricGraph};
use crate::io::{complex, complex_vec, RayleighRow};
use crate::linalg::{self, FullSvd, Tolerances};
use crate::par::{self, Execution};
use crate::random;
use crate::{CMatrix, CVector, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormValue {
    pub dirichlet_energy: f64,
    #[serde(with = "complex")]
    pub boundary_term: C64,
    #[serde(with = "complex")]
    pub total: C64,
    pub norm_sq: f64,
    /// Relative boundary residual of the sampled function, when checked.
    pub bc_residual: f64,
}

impl FormValue {
    pub fn rayleigh(&self) -> C64 {
        self.total / self.norm_sq
    }
}

/// `∫|f'|² + ⟨ψ, ψ'⟩` for `f` in the operator domain.
///
/// Traces use second-order one-sided differences; `tol_bc` bounds the
/// relative residual `‖Aψ + Bψ'‖ / (‖A‖‖ψ‖ + ‖B‖‖ψ'‖)`.
pub fn quadratic_form(bc: &BoundaryCondition, f: &EdgeFunction, tol_bc: f64) -> Result<FormValue> {
    check_grid(bc.graph(), &f.grid)?;
    let (psi, dpsi) = graph::trace(f)?;
    let residual = bc.relative_residual(&psi, &dpsi);
    if residual > tol_bc {
        return Err(Error::BoundaryResidual {
            residual,
            tolerance: tol_bc,
        });
    }
    let dirichlet_energy = f.dirichlet_energy()?;
    let boundary_term = psi.dotc(&dpsi);
    Ok(FormValue {
        dirichlet_energy,
        boundary_term,
        total: boundary_term + dirichlet_energy,
        norm_sq: f.norm_sq(),
        bc_residual: residual,
    })
}

/// `∫|f'|² − ⟨P⊥ψ, L P⊥ψ⟩` on the form domain `Pψ = 0`.
///
/// `tol_domain` bounds `‖Pψ‖` relative to `1 + ‖ψ‖`.
pub fn quadratic_form_normalized(
    nbc: &NormalizedBC,
    f: &EdgeFunction,
    tol_domain: f64,
) -> Result<FormValue> {
    if f.grid.d() != nbc.p.nrows() {
        return Err(Error::Dimension(format!(
            "grid boundary dimension {} vs normalized condition of size {}",
            f.grid.d(),
            nbc.p.nrows()
        )));
    }
    let (psi, _) = graph::trace(f)?;
    let leak = (&nbc.p * &psi).norm();
    if leak > tol_domain * (1.0 + psi.norm()) {
        return Err(Error::FormDomain(leak));
    }
    let pp = nbc.p_perp() * &psi;
    let boundary_term = -pp.dotc(&(&nbc.l * &pp));
    let dirichlet_energy = f.dirichlet_energy()?;
    Ok(FormValue {
        dirichlet_energy,
        boundary_term,
        total: boundary_term + dirichlet_energy,
        norm_sq: f.norm_sq(),
        bc_residual: leak,
    })
}

/// `⟨f, −f''⟩` by quadrature of the sampled second derivative.
pub fn direct_pairing(f: &EdgeFunction) -> Result<C64> {
    let second = f.second_derivative()?;
    Ok(f.values
        .iter()
        .zip(&second)
        .zip(&f.grid.edges)
        .map(|((v, dd), e)| {
            let prod: Vec<C64> = v.iter().zip(dd).map(|(x, y)| -x.conj() * y).collect();
            graph::trapezoid_c(&prod, e.h())
        })
        .sum())
}

/// `(|f(0)|², (2/l)‖f‖² + l‖f'‖²)` for samples of one edge with spacing `h`.
pub fn trace_inequality_check(values: &[C64], h: f64, l: f64) -> Result<(f64, f64)> {
    if values.len() < 3 {
        return Err(Error::TooFewSamples {
            edge: 0,
            needed: 3,
            got: values.len(),
        });
    }
    let length = h * (values.len() - 1) as f64;
    if !(l > 0.0 && l <= length * (1.0 + 1e-12)) {
        return Err(Error::Precondition(format!(
            "trace estimate needs 0 < l ≤ {length}, got {l}"
        )));
    }
    let grid = GridSpec {
        edges: vec![graph::EdgeGrid {
            kind: EdgeKind::Internal,
            length,
            intervals: values.len() - 1,
        }],
        n_external: 0,
        truncation: length,
    };
    let f = EdgeFunction::from_values(&grid, vec![values.to_vec()])?;
    let lhs = values[0].norm_sqr();
    let rhs = 2.0 / l * f.norm_sq() + l * f.dirichlet_energy()?;
    Ok((lhs, rhs))
}

fn check_grid(graph: &MetricGraph, grid: &GridSpec) -> Result<()> {
    if grid.n_external != graph.n_external() || grid.n_internal() != graph.n_internal() {
        return Err(Error::Dimension(format!(
            "grid has {} external and {} internal edges, graph has {} and {}",
            grid.n_external,
            grid.n_internal(),
            graph.n_external(),
            graph.n_internal()
        )));
    }
    Ok(())
}

const CORRECTION_NODES: usize = 6;

/// Linear map from the correction nodes next to every endpoint to the
/// boundary residual `Aψ + Bψ'`, with the correction nodes themselves.
struct EndpointCorrection {
    pseudo_inverse: CMatrix,
    nodes: Vec<(usize, usize)>,
}

impl EndpointCorrection {
    fn new(bc: &BoundaryCondition, grid: &GridSpec) -> Result<Self> {
        let d = bc.d();
        for (j, e) in grid.edges.iter().enumerate() {
            let needed = match e.kind {
                EdgeKind::External => CORRECTION_NODES,
                EdgeKind::Internal => 2 * CORRECTION_NODES,
            };
            if e.points() < needed {
                return Err(Error::Projection(format!(
                    "edge {j} has {} samples, the endpoint correction needs {needed}",
                    e.points()
                )));
            }
        }
        let mut nodes = Vec::with_capacity(d * CORRECTION_NODES);
        let mut g = CMatrix::zeros(d, d * CORRECTION_NODES);
        for k in 0..d {
            let (edge, node) = grid.boundary_node(k);
            let h = grid.edges[edge].h();
            let stencil = [-1.5 / h, 2.0 / h, -0.5 / h];
            #[allow(clippy::needless_range_loop)]
            for m in 0..CORRECTION_NODES {
                let idx = if node == 0 { m } else { node - m };
                nodes.push((edge, idx));
                let col = k * CORRECTION_NODES + m;
                for j in 0..d {
                    let mut entry = C64::new(0.0, 0.0);
                    if m == 0 {
                        entry += bc.a()[(j, k)];
                    }
                    if m < 3 {
                        entry += bc.b()[(j, k)] * stencil[m];
                    }
                    g[(j, col)] = entry;
                }
            }
        }
        let svd = FullSvd::new(&g);
        if svd.rank < d {
            return Err(Error::Projection(format!(
                "constraint map has rank {} < {d}",
                svd.rank
            )));
        }
        let mut pinv = CMatrix::zeros(g.ncols(), d);
        for k in 0..d {
            let v = svd.v.column(k);
            let u = svd.u.column(k);
            pinv += (v * u.adjoint()) * C64::new(1.0 / svd.singular_values[k], 0.0);
        }
        Ok(Self {
            pseudo_inverse: pinv,
            nodes,
        })
    }

    /// Minimal-norm change of the correction nodes that removes the residual.
    fn apply(&self, bc: &BoundaryCondition, f: &mut EdgeFunction) -> Result<()> {
        let (psi, dpsi) = graph::trace(f)?;
        let r = bc.a() * psi + bc.b() * dpsi;
        let delta = &self.pseudo_inverse * r;
        for (k, &(edge, idx)) in self.nodes.iter().enumerate() {
            f.values[edge][idx] -= delta[k];
        }
        Ok(())
    }
}

/// Smooth random profile on one edge: low modes plus boundary layers,
/// vanishing smoothly at the truncation point of external edges.
fn random_profile(rng: &mut random::Rng, length: f64, h: f64, external: bool) -> Vec<(f64, C64, f64)> {
    // (frequency or decay, coefficient, kind tag) triples; kind 0 = cosine
    // mode, 1 = layer at x = 0, 2 = layer at x = length.
    let mut terms = Vec::new();
    let modes = rng.random_range(1..=5);
    for _ in 0..modes {
        let k = rng.random_range(0..6) as f64;
        terms.push((k * std::f64::consts::PI / length, random::gaussian(rng), 0.0));
    }
    let lo = (3.0 * h).ln();
    let hi = (0.5 * length).max(4.0 * h).ln();
    for tag in [1.0, 2.0] {
        if rng.random_bool(0.6) {
            let sigma = rng.random_range(lo..hi).exp();
            terms.push((sigma, random::gaussian(rng), tag));
        }
    }
    if external {
        let lambda = rng.random_range(0.2..0.5) * length;
        terms.push((lambda, C64::new(0.0, 0.0), 3.0));
    }
    terms
}

fn eval_profile(terms: &[(f64, C64, f64)], x: f64, length: f64) -> C64 {
    let mut value = C64::new(0.0, 0.0);
    let mut envelope = 1.0;
    for &(p, c, tag) in terms {
        match tag as u8 {
            0 => value += c * (p * x + 0.3).cos(),
            1 => value += c * (-x / p).exp(),
            2 => value += c * (-(length - x) / p).exp(),
            _ => {
                let t = x / length;
                envelope = (-x / p).exp() * (1.0 - t) * (1.0 - t);
            }
        }
    }
    value * envelope
}

/// A random smooth function on `grid`, corrected into the operator domain.
fn random_domain_function(
    bc: &BoundaryCondition,
    grid: &GridSpec,
    correction: &EndpointCorrection,
    rng: &mut random::Rng,
) -> Result<EdgeFunction> {
    let profiles: Vec<_> = grid
        .edges
        .iter()
        .map(|e| random_profile(rng, e.length, e.h(), e.kind == EdgeKind::External))
        .collect();
    let mut f = EdgeFunction::from_fn(grid, |j, x| eval_profile(&profiles[j], x, grid.edges[j].length));
    correction.apply(bc, &mut f)?;
    Ok(f)
}

/// Rayleigh quotients of random domain functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumericalRangeSample {
    #[serde(with = "complex_vec")]
    pub points: Vec<C64>,
    pub norms: Vec<f64>,
    pub bc_residuals: Vec<f64>,
    /// Half-plane bound from the trace estimate: `Re z ≥ −2‖L‖/l`.
    pub c_apriori: Option<f64>,
    /// Smallest `C ≥ 0` with `Re z ≥ −C` over the cloud.
    pub c_fitted: f64,
    /// Smallest `k` with `|Im z| ≤ k (Re z + C + 1)` over the cloud, using
    /// `C = c_apriori` when available.
    pub sector_k: f64,
    pub max_bc_residual: f64,
    pub seed: u64,
}

impl NumericalRangeSample {
    pub fn min_re(&self) -> f64 {
        self.points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min)
    }

    pub fn in_half_plane(&self, c: f64) -> bool {
        self.points.iter().all(|z| z.re >= -c)
    }

    pub fn rows(&self) -> Vec<RayleighRow> {
        self.points
            .iter()
            .zip(&self.norms)
            .zip(&self.bc_residuals)
            .enumerate()
            .map(|(n, ((z, &norm), &bc_residual))| RayleighRow {
                n,
                re_rayleigh: z.re,
                im_rayleigh: z.im,
                norm,
                bc_residual,
            })
            .collect()
    }
}

/// `2‖L‖/l` with `l = min(1/(2‖L‖), a_min/2, R/2)`; `None` if Assumption A fails.
pub fn apriori_half_plane(bc: &BoundaryCondition, truncation: f64, tol: &Tolerances) -> Option<f64> {
    let nbc = boundary::normalize(bc, tol).ok()?;
    let norm_l = linalg::spectral_norm(&nbc.l);
    if norm_l == 0.0 {
        return Some(0.0);
    }
    let mut l = 1.0 / (2.0 * norm_l);
    if let Some(a) = bc.graph().min_length() {
        l = l.min(a / 2.0);
    }
    if bc.graph().n_external() > 0 {
        l = l.min(truncation / 2.0);
    }
    Some(2.0 * norm_l / l)
}

/// Samples `n_samples` Rayleigh quotients `q(f)/‖f‖²` of random functions in
/// the operator domain. Sample `i` uses its own stream of `seed`.
pub fn sample_numerical_range(
    bc: &BoundaryCondition,
    grid: &GridSpec,
    n_samples: usize,
    seed: u64,
    exec: Execution,
    tol: &Tolerances,
) -> Result<NumericalRangeSample> {
    if !boundary::check_max_rank(bc) {
        return Err(Error::RankDeficient);
    }
    check_grid(bc.graph(), grid)?;
    let correction = EndpointCorrection::new(bc, grid)?;
    let results = par::map_indexed(exec, n_samples, |i| -> Result<FormValue> {
        let mut rng = random::stream(seed, i as u64);
        let f = random_domain_function(bc, grid, &correction, &mut rng)?;
        quadratic_form(bc, &f, 1e-6)
    });
    let mut points = Vec::with_capacity(n_samples);
    let mut norms = Vec::with_capacity(n_samples);
    let mut bc_residuals = Vec::with_capacity(n_samples);
    for r in results {
        let fv = r?;
        points.push(fv.rayleigh());
        norms.push(fv.norm_sq.sqrt());
        bc_residuals.push(fv.bc_residual);
    }
    let max_bc_residual = bc_residuals.iter().copied().fold(0.0, f64::max);
    let c_apriori = apriori_half_plane(bc, grid.truncation, tol);
    let min_re = points.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let c_fitted = (-min_re).max(0.0);
    let shift = c_apriori.unwrap_or(c_fitted) + 1.0;
    let sector_k = points
        .iter()
        .map(|z| z.im.abs() / (z.re + shift).max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    Ok(NumericalRangeSample {
        points,
        norms,
        bc_residuals,
        c_apriori,
        c_fitted,
        sector_k,
        max_bc_residual,
        seed,
    })
}

// Eight-point Gauss–Legendre rule on [−1, 1].
const GL_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn gauss_legendre(a: f64, b: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut sum = 0.0;
    for (x, w) in GL_NODES.iter().zip(GL_WEIGHTS) {
        sum += w * (f(mid - half * x) + f(mid + half * x));
    }
    sum * half
}

/// The vector profile `s ↦ Φ(s)α` of one witness function in the inward
/// coordinate `s`: `e^{Hs}α` on `[0, a]`, a polynomial bridge with `p' = v tⁿ`
/// on `[a, b]`, a cubic Hermite cut-off on `[b, c]`, zero beyond.
#[derive(Debug, Clone)]
pub struct WitnessProfile {
    pub n: usize,
    pub h: CMatrix,
    pub alpha: CVector,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    v1: CVector,
    g: CVector,
    w: CVector,
}

impl WitnessProfile {
    fn new(n: usize, h: CMatrix, alpha: CVector, a: f64, b: f64, c: f64) -> Self {
        let eha = (&h * C64::new(a, 0.0)).exp();
        let v1 = &h * (&eha * &alpha);
        let w = &v1 * C64::new((b - a) / (n as f64 + 1.0), 0.0);
        let g = &eha * &alpha + &w;
        Self { n, h, alpha, a, b, c, v1, g, w }
    }

    pub fn value(&self, s: f64) -> CVector {
        if s <= self.a {
            (&self.h * C64::new(s, 0.0)).exp() * &self.alpha
        } else if s < self.b {
            let t = (self.b - s) / (self.b - self.a);
            &self.g - &self.w * C64::new(t.powi(self.n as i32 + 1), 0.0)
        } else if s < self.c {
            let tau = (s - self.b) / (self.c - self.b);
            &self.g * C64::new(1.0 - 3.0 * tau * tau + 2.0 * tau.powi(3), 0.0)
        } else {
            CVector::zeros(self.alpha.len())
        }
    }

    pub fn derivative(&self, s: f64) -> CVector {
        if s <= self.a {
            &self.h * ((&self.h * C64::new(s, 0.0)).exp() * &self.alpha)
        } else if s < self.b {
            let t = (self.b - s) / (self.b - self.a);
            &self.v1 * C64::new(t.powi(self.n as i32), 0.0)
        } else if s < self.c {
            let tau = (s - self.b) / (self.c - self.b);
            &self.g * C64::new((6.0 * tau * tau - 6.0 * tau) / (self.c - self.b), 0.0)
        } else {
            CVector::zeros(self.alpha.len())
        }
    }

    /// `(∫|Φ'α|², ∫|Φα|²)` over `[0, c]`, exact except on `[0, a]`.
    pub fn integrals(&self) -> (f64, f64) {
        let n = self.n as f64;
        let (ba, cb) = (self.b - self.a, self.c - self.b);
        let e0 = gauss_legendre(0.0, self.a, |s| self.derivative(s).norm_squared());
        let m0 = gauss_legendre(0.0, self.a, |s| self.value(s).norm_squared());
        let g2 = self.g.norm_squared();
        let e1 = self.v1.norm_squared() * ba / (2.0 * n + 1.0);
        let m1 = ba
            * (g2 - 2.0 * self.g.dotc(&self.w).re / (n + 2.0) + self.w.norm_squared() / (2.0 * n + 3.0));
        let e2 = g2 * 6.0 / (5.0 * cb);
        let m2 = g2 * cb * 13.0 / 35.0;
        (e0 + e1 + e2, m0 + m1 + m2)
    }

    /// Graded inward samples with 91 points in `[0, b]` and 60 in `(b, c]`.
    pub fn graded_points(&self) -> Vec<f64> {
        let mut s: Vec<f64> = (0..=30).map(|k| self.a * k as f64 / 30.0).collect();
        s.extend((1..=60).map(|k| self.a + (self.b - self.a) * (k as f64 / 60.0).powi(3)));
        s.extend((1..=60).map(|k| self.b + (self.c - self.b) * k as f64 / 60.0));
        s
    }

    /// Samples on every edge of `graph` at graded points, as `(x, u(x))` lists.
    /// Internal edges carry the profile at both ends.
    pub fn sample(&self, graph: &MetricGraph) -> Vec<(Vec<f64>, Vec<C64>)> {
        let s = self.graded_points();
        let values: Vec<CVector> = s.iter().map(|&si| self.value(si)).collect();
        let ne = graph.n_external();
        let ni = graph.n_internal();
        let mut out = Vec::with_capacity(ne + ni);
        for j in 0..ne {
            out.push((s.clone(), values.iter().map(|v| v[j]).collect()));
        }
        for (i, len) in graph.lengths().into_iter().enumerate() {
            let (ji, jt) = (ne + i, ne + ni + i);
            let mut xs: Vec<f64> = s.clone();
            let mut ys: Vec<C64> = values.iter().map(|v| v[ji]).collect();
            for (k, &si) in s.iter().enumerate().rev() {
                xs.push(len - si);
                ys.push(values[k][jt]);
            }
            out.push((xs, ys));
        }
        out
    }
}

/// One member `u_n` of a witness sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessEntry {
    pub n: usize,
    pub a_n: f64,
    pub b_n: f64,
    pub c_n: f64,
    pub h_norm: f64,
    #[serde(with = "complex")]
    pub rayleigh: C64,
    pub dirichlet_energy: f64,
    pub norm_sq: f64,
    /// `‖Aα + B H_n α‖` relative to `‖A‖‖α‖ + ‖B‖‖H_nα‖`.
    pub bc_residual: f64,
}

/// Domain functions `u_n` of a condition violating Assumption A whose
/// Rayleigh quotients have real parts tending to `−∞` at bounded norm.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessSequence {
    #[serde(with = "complex_vec")]
    pub alpha: Vec<C64>,
    pub p_alpha_norm: f64,
    pub entries: Vec<WitnessEntry>,
    #[serde(skip)]
    setup: Option<WitnessSetup>,
}

#[derive(Debug, Clone)]
struct WitnessSetup {
    p: CMatrix,
    p_perp_a: CMatrix,
    alpha: CVector,
    c: f64,
}

impl WitnessSetup {
    fn new(bc: &BoundaryCondition, tol: &Tolerances) -> Result<Self> {
        if !boundary::check_max_rank(bc) {
            return Err(Error::Precondition("maximal rank of (A | B) fails".into()));
        }
        if boundary::check_assumption_a(bc, tol) {
            return Err(Error::AssumptionAHolds);
        }
        let norm = boundary::full_normalization(bc)?;
        let pa = &norm.p * &norm.a_prime;
        let kernel = FullSvd::new(&pa).kernel();
        if kernel.ncols() == 0 {
            return Err(Error::NoWitnessDirection("P A' is injective".into()));
        }
        let pn = &norm.p * &kernel;
        let top = FullSvd::new(&pn);
        let x = top.v.column(0).into_owned();
        let alpha = &kernel * x;
        let alpha = &alpha / C64::new(alpha.norm(), 0.0);
        let p_alpha = (&norm.p * &alpha).norm();
        if p_alpha <= tol.zero.sqrt() {
            return Err(Error::NoWitnessDirection(format!(
                "largest |P alpha| on Ker(P A') is {p_alpha:.3e}"
            )));
        }
        let graph = bc.graph();
        let mut c: f64 = 1.0;
        if graph.n_external() > 0 {
            c = c.min(graph.default_truncation() / 2.0);
        }
        if let Some(a) = graph.min_length() {
            c = c.min(a / 2.0);
        }
        Ok(Self {
            p_perp_a: &norm.p_perp * &norm.a_prime,
            p: norm.p,
            alpha,
            c,
        })
    }

    fn h(&self, n: usize) -> CMatrix {
        -(&self.p_perp_a + &self.p * C64::new(n as f64, 0.0))
    }

    fn profile(&self, n: usize) -> WitnessProfile {
        let h = self.h(n);
        let hn = linalg::spectral_norm(&h).max(f64::MIN_POSITIVE);
        let a = ((-2.0 * hn.min(100.0)).exp() / (hn * hn)).min(self.c / 4.0);
        WitnessProfile::new(n, h, self.alpha.clone(), a, 2.0 * a, self.c)
    }

    fn entry(&self, bc: &BoundaryCondition, n: usize) -> WitnessEntry {
        let prof = self.profile(n);
        let (energy, norm_sq) = prof.integrals();
        let h_alpha = &prof.h * &self.alpha;
        let boundary = self.alpha.dotc(&h_alpha);
        WitnessEntry {
            n,
            a_n: prof.a,
            b_n: prof.b,
            c_n: prof.c,
            h_norm: linalg::spectral_norm(&prof.h),
            rayleigh: (boundary + energy) / norm_sq,
            dirichlet_energy: energy,
            norm_sq,
            bc_residual: bc.relative_residual(&self.alpha, &h_alpha),
        }
    }
}

impl WitnessSequence {
    pub fn alpha(&self) -> CVector {
        DVector::from_vec(self.alpha.clone())
    }

    /// The profile behind entry `k`; available on sequences built in this
    /// process (not on deserialized ones).
    pub fn profile(&self, k: usize) -> Option<WitnessProfile> {
        let setup = self.setup.as_ref()?;
        Some(setup.profile(self.entries.get(k)?.n))
    }

    pub fn rows(&self) -> Vec<RayleighRow> {
        self.entries
            .iter()
            .map(|e| RayleighRow {
                n: e.n,
                re_rayleigh: e.rayleigh.re,
                im_rayleigh: e.rayleigh.im,
                norm: e.norm_sq.sqrt(),
                bc_residual: e.bc_residual,
            })
            .collect()
    }

    pub fn norm_ratio(&self) -> f64 {
        let norms = self.entries.iter().map(|e| e.norm_sq.sqrt());
        let (lo, hi) = norms.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
        hi / lo
    }

    /// Whether `Re rayleigh` strictly decreases along the entries.
    pub fn strictly_decreasing(&self) -> bool {
        self.entries
            .windows(2)
            .all(|w| w[1].rayleigh.re < w[0].rayleigh.re)
    }
}

/// Witness functions `u_n` for the given values of `n`.
pub fn build_witness_at(bc: &BoundaryCondition, ns: &[usize], tol: &Tolerances) -> Result<WitnessSequence> {
    let setup = WitnessSetup::new(bc, tol)?;
    let entries = ns.iter().map(|&n| setup.entry(bc, n)).collect();
    Ok(WitnessSequence {
        alpha: setup.alpha.iter().copied().collect(),
        p_alpha_norm: (&setup.p * &setup.alpha).norm(),
        entries,
        setup: Some(setup),
    })
}

/// Witness functions `u_1, …, u_{n_max}`.
pub fn build_witness(bc: &BoundaryCondition, n_max: usize, tol: &Tolerances) -> Result<WitnessSequence> {
    let ns: Vec<usize> = (1..=n_max.max(1)).collect();
    build_witness_at(bc, &ns, tol)
}

/// About `samples` values of `n`, evenly spaced up to 1.2 times the first
/// `n` whose Rayleigh quotient has real part below `target`.
pub fn build_witness_to(
    bc: &BoundaryCondition,
    target: f64,
    samples: usize,
    tol: &Tolerances,
) -> Result<WitnessSequence> {
    let setup = WitnessSetup::new(bc, tol)?;
    let mut n_hit = 1usize;
    while setup.entry(bc, n_hit).rayleigh.re >= target {
        if n_hit > 1 << 40 {
            return Err(Error::NoWitnessDirection(format!(
                "real part never drops below {target}"
            )));
        }
        n_hit *= 2;
    }
    let (mut lo, mut hi) = (n_hit / 2, n_hit);
    while hi - lo > 1 && lo > 0 {
        let mid = lo + (hi - lo) / 2;
        if setup.entry(bc, mid).rayleigh.re < target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let n_end = ((hi as f64) * 1.2).ceil() as usize;
    let samples = samples.max(2);
    let mut ns: Vec<usize> = (0..samples)
        .map(|k| 1 + ((n_end - 1) as f64 * k as f64 / (samples - 1) as f64).round() as usize)
        .collect();
    ns.dedup();
    build_witness_at(bc, &ns, tol)
}
