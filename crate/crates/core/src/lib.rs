//! Classification of Laplacian boundary conditions on finite metric graphs.
//!
//! A boundary condition is a pair of complex `d × d` matrices `(A, B)`
//! acting on the boundary-value space of a metric graph; functions in the
//! operator domain satisfy `A ψ + B ψ' = 0`. This crate decides whether the
//! resulting Laplacian `-Δ(A, B)` is quasi-m-accretive, m-sectorial or
//! m-accretive, computes its normalized parametrization and real part, and
//! backs every verdict with dynamic evidence: quadratic-form sampling of the
//! numerical range, explicit non-accretivity witness sequences, discrete
//! spectra and Crank–Nicolson heat evolution.
//!
//! Module map:
//!
//! - [`graph`]: metric graphs, boundary-space ordering, grids and traces.
//! - [`boundary`]: projectors, assumptions, normalization, classification.
//! - [`forms`]: quadratic forms, the trace estimate, numerical-range samples
//!   and witness sequences.
//! - [`discrete`]: constrained finite-difference operators, growth bounds and
//!   heat evolution.
//! - [`generators`] and [`io`]: example boundary conditions and file formats.
//! - [`cli`]: the `qgraph` command line.

pub mod boundary;
pub mod cli;
pub mod discrete;
pub mod error;
pub mod forms;
pub mod generators;
pub mod graph;
pub mod io;
pub mod linalg;
pub mod par;
pub mod random;

pub use boundary::{
    check_assumption_a, check_m_accretive, check_max_rank, check_self_adjoint, classify,
    compute_projectors, equivalent, m0_matrix, normalize, qwb_check, real_part,
    BoundaryCondition, Classification, NormalizedBC, QwbVerdict,
};
pub use discrete::{
    assemble, audit_contractivity, evolve, growth_bound, ContractivityReport, DiscreteOperator,
    GrowthBound, Trajectory,
};
pub use error::{Error, Result};
pub use forms::{
    build_witness, quadratic_form, quadratic_form_normalized, sample_numerical_range,
    trace_inequality_check, FormValue, WitnessSequence,
};
pub use graph::{make_grid, trace, EdgeFunction, GridSpec, MetricGraph};
pub use linalg::Tolerances;

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex vector.
pub type CVector = nalgebra::DVector<C64>;
