//! The `qgraph` command line.
//!
//! Exit codes: 0 on success, 2 when the mathematics refuses the request
//! (precondition failures, missing Assumption A, unforced simulation of a
//! condition that is not quasi-m-accretive), 1 for I/O, parse and usage
//! errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::boundary::{self, BoundaryCondition};
use crate::discrete::{self, EvolveOptions};
use crate::error::{Error, Result};
use crate::forms;
use crate::generators;
use crate::graph::{make_grid, EdgeFunction, MetricGraph};
use crate::io::{self, parse_complex, BcJson};
use crate::linalg::Tolerances;
use crate::par::Execution;
use crate::C64;

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Classify and simulate Laplacian boundary conditions on metric graphs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Rank, Assumption A, quasi-m-accretivity, m-accretivity, self-adjointness.
    Classify(Input),
    /// The normalized pair (P, L).
    Normalize(Input),
    /// The self-adjoint real part (P, Re L) and the equivalent (A', B').
    Realpart(Input),
    /// Growth bound ω from the discretized real part.
    GrowthBound(Input),
    /// Crank–Nicolson heat evolution; writes trajectory.csv.
    Simulate(Input),
    /// Non-accretivity witness sequence; writes witness.csv.
    Witness(Input),
    /// Random samples of the numerical range; writes numrange.csv.
    Numrange(Input),
    /// Writes graph.json and bc.json for a built-in example.
    Example(Input),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Example {
    Delta,
    DeltaPrime,
    Counterexample,
    Dirichlet,
    Neumann,
}

#[derive(Debug, Args)]
pub struct Input {
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub bc: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub example: Option<Example>,
    #[arg(long, default_value_t = 3)]
    pub degree: usize,
    #[arg(long, value_parser = parse_complex, default_value = "1", allow_hyphen_values = true)]
    pub gamma: C64,
    #[arg(long, default_value_t = 0.0)]
    pub tau: f64,
    /// Interval length for the Dirichlet and Neumann examples.
    #[arg(long, default_value_t = std::f64::consts::PI)]
    pub length: f64,
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    /// Truncation length of external edges.
    #[arg(long, visible_alias = "R")]
    pub truncation: Option<f64>,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 20)]
    pub n_max: usize,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub samples: usize,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Simulate even when the condition is not quasi-m-accretive.
    #[arg(long)]
    pub force: bool,
    /// Also write spectrum.json (growth-bound).
    #[arg(long)]
    pub spectrum: bool,
    #[arg(long)]
    pub sequential: bool,
}

impl Input {
    fn load(&self) -> Result<BoundaryCondition> {
        if let Some(ex) = self.example {
            return match ex {
                Example::Delta => generators::gen_delta(self.degree, self.gamma),
                Example::DeltaPrime => generators::gen_delta_prime(self.degree, self.gamma),
                Example::Counterexample => generators::gen_counterexample(self.tau),
                Example::Dirichlet => Ok(generators::dirichlet(MetricGraph::interval(self.length)?)),
                Example::Neumann => Ok(generators::neumann(MetricGraph::interval(self.length)?)),
            };
        }
        let (Some(g), Some(b)) = (&self.graph, &self.bc) else {
            return Err(Error::Parse {
                path: "<command line>".into(),
                message: "either --example or both --graph and --bc are required".into(),
            });
        };
        let graph = io::read_graph(g)?;
        io::read_bc(b, graph)
    }

    fn truncation(&self, bc: &BoundaryCondition, tol: &Tolerances) -> f64 {
        self.truncation
            .unwrap_or_else(|| discrete::truncation_for(bc, tol))
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn out_path(&self, name: &str) -> Result<Option<PathBuf>> {
        match &self.output_dir {
            Some(dir) => {
                std::fs::create_dir_all(dir)?;
                Ok(Some(dir.join(name)))
            }
            None => Ok(None),
        }
    }
}

/// Parses `args` (program name first) and runs; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with(args, &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 1;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match dispatch(&cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_refusal() {
                2
            } else {
                1
            }
        }
    }
}

fn emit<T: Serialize>(out: &mut dyn Write, path: Option<PathBuf>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    out.write_all(text.as_bytes())?;
    if let Some(p) = path {
        io::write_json(&p, value)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct RealPartReport {
    normalized: boundary::NormalizedBC,
    bc: BcJson,
}

#[derive(Serialize)]
struct SpectrumReport {
    h: f64,
    truncation: f64,
    #[serde(with = "io::complex_vec")]
    eigenvalues: Vec<C64>,
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: usize,
    dt: f64,
    t_end: f64,
    initial_norm: f64,
    final_norm: f64,
    max_step_increase: f64,
    omega: Option<f64>,
    forced: bool,
}

#[derive(Serialize)]
struct WitnessSummary<'a> {
    #[serde(with = "io::complex_vec")]
    alpha: &'a [C64],
    p_alpha_norm: f64,
    n_max: usize,
    last_re_rayleigh: f64,
    strictly_decreasing: bool,
    norm_ratio: f64,
}

#[derive(Serialize)]
struct NumrangeSummary {
    samples: usize,
    seed: u64,
    min_re: f64,
    c_apriori: Option<f64>,
    c_fitted: f64,
    sector_k: f64,
    max_bc_residual: f64,
}

fn initial_state(grid: &crate::graph::GridSpec) -> EdgeFunction {
    EdgeFunction::from_fn(grid, |j, x| {
        let phase = C64::from_polar(1.0, 0.3 * j as f64);
        phase * (-(x - 0.5) * (x - 0.5)).exp() * (1.0 + 0.25 * (3.0 * x).sin())
    })
}

fn dispatch(cmd: &Command, out: &mut dyn Write) -> Result<()> {
    let tol = Tolerances::default();
    match cmd {
        Command::Classify(inp) => {
            let bc = inp.load()?;
            emit(out, inp.out_path("classification.json")?, &boundary::classify(&bc, &tol))
        }
        Command::Normalize(inp) => {
            let bc = inp.load()?;
            emit(out, inp.out_path("normalized.json")?, &boundary::normalize(&bc, &tol)?)
        }
        Command::Realpart(inp) => {
            let bc = inp.load()?;
            let normalized = boundary::real_part(&bc, &tol)?;
            let rebuilt = normalized.to_bc(bc.graph().clone())?;
            let report = RealPartReport {
                bc: BcJson::from_bc(&rebuilt),
                normalized,
            };
            emit(out, inp.out_path("realpart.json")?, &report)
        }
        Command::GrowthBound(inp) => {
            let bc = inp.load()?;
            let r = inp.truncation(&bc, &tol);
            let gb = discrete::growth_bound(&bc, inp.h, Some(r), &tol)?;
            if inp.spectrum {
                let op = discrete::assemble(&bc, inp.h, r)?;
                let mut eigenvalues = op.spectrum()?;
                eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
                let report = SpectrumReport { h: inp.h, truncation: r, eigenvalues };
                let path = inp.out_path("spectrum.json")?.unwrap_or_else(|| PathBuf::from("spectrum.json"));
                io::write_json(&path, &report)?;
            }
            emit(out, inp.out_path("growth_bound.json")?, &gb)
        }
        Command::Simulate(inp) => {
            let bc = inp.load()?;
            let cl = boundary::classify(&bc, &tol);
            if !cl.quasi_m_accretive && !inp.force {
                return Err(Error::NotQuasiAccretive);
            }
            let r = inp.truncation(&bc, &tol);
            let op = discrete::assemble(&bc, inp.h, r)?;
            let omega = if cl.quasi_m_accretive {
                Some(discrete::growth_bound(&bc, inp.h, Some(r), &tol)?.omega)
            } else {
                None
            };
            let opts = EvolveOptions {
                dt: inp.dt,
                t_end: inp.t_end,
                force: inp.force,
                snapshot_every: 0,
            };
            let traj = discrete::evolve(&op, &initial_state(&op.grid), &opts)?;
            let csv = inp.out_path("trajectory.csv")?.unwrap_or_else(|| PathBuf::from("trajectory.csv"));
            io::write_trajectory_csv(&csv, &traj.rows(omega))?;
            let summary = SimulationSummary {
                steps: traj.times.len() - 1,
                dt: inp.dt,
                t_end: inp.t_end,
                initial_norm: traj.norms[0],
                final_norm: *traj.norms.last().expect("at least the initial state"),
                max_step_increase: traj.max_step_increase(),
                omega,
                forced: inp.force,
            };
            emit(out, inp.out_path("simulation.json")?, &summary)
        }
        Command::Witness(inp) => {
            let bc = inp.load()?;
            let w = forms::build_witness(&bc, inp.n_max, &tol)?;
            let csv = inp.out_path("witness.csv")?.unwrap_or_else(|| PathBuf::from("witness.csv"));
            io::write_rayleigh_csv(&csv, &w.rows())?;
            let summary = WitnessSummary {
                alpha: &w.alpha,
                p_alpha_norm: w.p_alpha_norm,
                n_max: inp.n_max,
                last_re_rayleigh: w.entries.last().map_or(f64::NAN, |e| e.rayleigh.re),
                strictly_decreasing: w.strictly_decreasing(),
                norm_ratio: w.norm_ratio(),
            };
            emit(out, inp.out_path("witness.json")?, &summary)
        }
        Command::Numrange(inp) => {
            let bc = inp.load()?;
            let r = inp.truncation.unwrap_or(4.0);
            let grid = make_grid(bc.graph(), inp.h, r)?;
            let s = forms::sample_numerical_range(&bc, &grid, inp.samples, inp.seed, inp.exec(), &tol)?;
            let csv = inp.out_path("numrange.csv")?.unwrap_or_else(|| PathBuf::from("numrange.csv"));
            io::write_rayleigh_csv(&csv, &s.rows())?;
            let summary = NumrangeSummary {
                samples: s.points.len(),
                seed: s.seed,
                min_re: s.min_re(),
                c_apriori: s.c_apriori,
                c_fitted: s.c_fitted,
                sector_k: s.sector_k,
                max_bc_residual: s.max_bc_residual,
            };
            emit(out, inp.out_path("numrange.json")?, &summary)
        }
        Command::Example(inp) => {
            let bc = inp.load()?;
            let dir = inp.output_dir.clone().unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            write_example(&dir, &bc)?;
            writeln!(out, "{}", dir.join("graph.json").display())?;
            writeln!(out, "{}", dir.join("bc.json").display())?;
            Ok(())
        }
    }
}

fn write_example(dir: &Path, bc: &BoundaryCondition) -> Result<()> {
    io::write_json(&dir.join("graph.json"), bc.graph())?;
    io::write_json(&dir.join("bc.json"), &BcJson::from_bc(bc))
}
