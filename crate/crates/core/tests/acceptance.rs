//! Acceptance suite: one line per criterion, `PASS` or `FAIL` with the
//! measured numbers.
//!
//! Criteria listed in `KNOWN_FAILURES` are run in full and reported as
//! failing; the process only exits nonzero on an unexpected failure, or on
//! any failure when `ACCEPTANCE_STRICT=1`.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use qgraph_accretive::boundary::{
    check_m_accretive, classify, m_accretivity_criterion, qwb_check, BoundaryCondition, QwbVerdict,
};
use qgraph_accretive::discrete::{assemble, evolve, evolve_from, growth_bound, EvolveOptions};
use qgraph_accretive::forms::{
    build_witness_to, direct_pairing, quadratic_form, sample_numerical_range, trace_inequality_check,
};
use qgraph_accretive::generators::{dirichlet, gen_counterexample, gen_delta, gen_delta_prime, neumann};
use qgraph_accretive::graph::{make_grid, EdgeFunction, MetricGraph};
use qgraph_accretive::linalg::Tolerances;
use qgraph_accretive::par::{map_indexed, Execution};
use qgraph_accretive::random::{
    gaussian, gaussian_matrix, random_bc, random_graph, random_invertible, stream, BcKind,
};
use qgraph_accretive::{CMatrix, CVector, Error, C64};
use rand::Rng;

/// The spectral clause of criterion 4 cannot hold for this operator; see
/// `criterion_4`.
const KNOWN_FAILURES: &[u32] = &[4];

struct Outcome {
    id: u32,
    pass: bool,
    detail: String,
}

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

fn tol() -> Tolerances {
    Tolerances::default()
}

const KINDS: [BcKind; 4] = [BcKind::Any, BcKind::QuasiAccretive, BcKind::Violating, BcKind::MAccretive];

fn random_pair(seed: u64, i: usize, kind: BcKind) -> BoundaryCondition {
    let mut rng = stream(seed, i as u64);
    let d = 2 + i % 7;
    let rank = rng.random_range(0..=d);
    let g = random_graph(&mut rng, d);
    random_bc(&mut rng, &g, rank, kind)
}

fn criterion_1() -> Outcome {
    let tol = tol();
    let agreements = map_indexed(Execution::Parallel, 1000, |i| {
        let kind = KINDS[i % 4];
        let cl = classify(&random_pair(101, i, kind), &tol);
        let by_construction = match kind {
            BcKind::QuasiAccretive | BcKind::MAccretive => cl.quasi_m_accretive,
            BcKind::Violating => !cl.quasi_m_accretive,
            BcKind::Any => true,
        };
        (cl.quasi_m_accretive == (cl.rank_ok && cl.assumption_a_ok), by_construction)
    });
    let flag_ok = agreements.iter().filter(|a| a.0).count();
    let kind_ok = agreements.iter().filter(|a| a.1).count();

    let witnesses = map_indexed(Execution::Parallel, 50, |i| {
        let bc = random_pair(102, i, BcKind::Violating);
        let w = build_witness_to(&bc, -1e3, 20, &tol).expect("violating pairs admit a witness");
        let min_re = w.entries.iter().map(|e| e.rayleigh.re).fold(f64::INFINITY, f64::min);
        let residual = w.entries.iter().map(|e| e.bc_residual).fold(0.0, f64::max);
        (min_re, w.norm_ratio(), residual)
    });
    let worst_re = witnesses.iter().map(|w| w.0).fold(f64::NEG_INFINITY, f64::max);
    let worst_ratio = witnesses.iter().map(|w| w.1).fold(0.0, f64::max);
    let worst_residual = witnesses.iter().map(|w| w.2).fold(0.0, f64::max);
    let witnesses_ok = witnesses.iter().all(|w| w.0 < -1e3 && w.1 <= 10.0);

    let mut outside = 0usize;
    let mut worst_margin = f64::INFINITY;
    let mut max_c_fitted = 0.0f64;
    for i in 0..50 {
        let bc = random_pair(103, i, BcKind::QuasiAccretive);
        let grid = make_grid(bc.graph(), 0.05, 4.0).expect("valid grid");
        let s = sample_numerical_range(&bc, &grid, 10_000, 1000 + i as u64, Execution::Parallel, &tol)
            .expect("sampling succeeds");
        let c_bound = s.c_apriori.expect("Assumption A holds");
        outside += s.points.iter().filter(|z| z.re < -c_bound).count();
        worst_margin = worst_margin.min(s.min_re() + c_bound);
        max_c_fitted = max_c_fitted.max(s.c_fitted);
    }

    let pass = flag_ok == 1000 && kind_ok == 1000 && witnesses_ok && outside == 0;
    Outcome {
        id: 1,
        pass,
        detail: format!(
            "flag={flag_ok}/1000 construction={kind_ok}/1000; witnesses: max Re={worst_re:.3e} \
             max norm ratio={worst_ratio:.3} max residual={worst_residual:.1e}; \
             numrange: {outside} of 500000 below -C, min margin={worst_margin:.3e}, max fitted C={max_c_fitted:.3}"
        ),
    }
}

fn bump(grid: &qgraph_accretive::GridSpec) -> EdgeFunction {
    EdgeFunction::from_fn(grid, |j, x| c((-(x - 1.0 - 0.3 * j as f64).powi(2)).exp(), 0.0) + (-x).exp())
}

fn criterion_2() -> Outcome {
    let tol = tol();
    let mut verdicts_ok = true;
    let mut worst_increase = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for re in [-4.0, -1.0, 0.0, 1.0, 4.0] {
        let bc = gen_delta(3, c(re, 1.0)).expect("valid δ coupling");
        let m = check_m_accretive(&bc, &tol);
        verdicts_ok &= m == (re <= 0.0);
        if m {
            let op = assemble(&bc, 0.05, 8.0).expect("assembly succeeds");
            let traj = evolve(&op, &bump(&op.grid), &EvolveOptions::default()).expect("evolution runs");
            worst_increase = worst_increase.max(traj.max_step_increase());
        }
    }
    parts.push(format!("m-accretive exactly for Re γ ≤ 0: {verdicts_ok}"));
    parts.push(format!("max CN step increase={worst_increase:.2e}"));

    let bc = gen_delta(3, c(4.0, 1.0)).expect("valid δ coupling");
    let gb = growth_bound(&bc, 0.05, None, &tol).expect("growth bound");
    let exact = -16.0 / 9.0;
    let rel = (gb.omega - exact).abs() / exact.abs();
    let op = assemble(&bc, 0.05, gb.truncation).expect("assembly succeeds");
    let traj = evolve(&op, &bump(&op.grid), &EvolveOptions::default()).expect("evolution runs");
    let n0 = traj.norms[0];
    let worst_bound = traj
        .times
        .iter()
        .zip(&traj.norms)
        .map(|(&t, &n)| n / ((16.0 / 9.0 * t).exp() * n0))
        .fold(0.0, f64::max);
    parts.push(format!("ω={:.6} (rel err {rel:.2e})", gb.omega));
    parts.push(format!("max ‖ψ(t)‖/(e^(16t/9)‖ψ₀‖)={worst_bound:.4}"));

    let pass = verdicts_ok && worst_increase <= 1e-10 && rel <= 0.01 && worst_bound <= 1.01;
    Outcome {
        id: 2,
        pass,
        detail: parts.join("; "),
    }
}

fn criterion_3() -> Outcome {
    let tol = tol();
    let flags = map_indexed(Execution::Parallel, 1000, |i| {
        let bc = random_pair(301, i, KINDS[i % 4]);
        let crit = m_accretivity_criterion(&bc, &tol).negative_semidefinite;
        let a_ok = classify(&bc, &tol).assumption_a_ok;
        (crit, crit && !a_ok)
    });
    let criterion_true = flags.iter().filter(|f| f.0).count();
    let bad = flags.iter().filter(|f| f.1).count();

    let indefinite = map_indexed(Execution::Parallel, 500, |i| {
        let mut rng = stream(302, i as u64);
        let m = rng.random_range(1..=6);
        let k = rng.random_range(1..=4);
        let g = gaussian_matrix(&mut rng, m, m);
        let a = (&g + g.adjoint()) * c(0.5, 0.0);
        let b = gaussian_matrix(&mut rng, k, m);
        let r = qwb_check(&a, &b, &tol).expect("Hermitian block");
        r.verdict == QwbVerdict::IndefiniteOrPositive && r.consistent()
    });
    let nsd = map_indexed(Execution::Parallel, 100, |i| {
        let mut rng = stream(303, i as u64);
        let m = rng.random_range(1..=6);
        let k = rng.random_range(1..=4);
        let n = gaussian_matrix(&mut rng, m, m);
        let a = -(&n * n.adjoint());
        let r = qwb_check(&a, &CMatrix::zeros(k, m), &tol).expect("Hermitian block");
        r.verdict == QwbVerdict::NegativeSemidefinite && r.consistent()
    });
    let ind_ok = indefinite.iter().filter(|&&x| x).count();
    let nsd_ok = nsd.iter().filter(|&&x| x).count();
    Outcome {
        id: 3,
        pass: bad == 0 && ind_ok == 500 && nsd_ok == 100,
        detail: format!(
            "criterion ≤ 0 without Assumption A: {bad}/1000 ({criterion_true} criterion-true pairs); \
             QWB indefinite {ind_ok}/500, semidefinite {nsd_ok}/100"
        ),
    }
}

/// The clause "min Re σ(T_h) decreases with ratio ≥ 2" fails. With the
/// coupling ψ₁ = ψ₂, ψ₁' = ψ₂', every `e^{iks}` with `Im k > 0` is an
/// eigenfunction, and on the truncated edges every `sin(k(R − s))` is one for
/// all complex `k`: the spectrum of the continuous problem is all of ℂ, and a
/// finite matrix can only pick out some of it. The discretization's
/// eigenvalues stay in the right half-plane (min Re ≈ 0 at every h). The
/// unboundedness shows up instead in the numerical range, whose bottom
/// scales like `h⁻²`; it is reported alongside.
fn criterion_4() -> Outcome {
    let tol = tol();
    let bc = gen_counterexample(0.0).expect("valid τ");
    let mut rng = stream(401, 0);
    let mut worst_residual = 0.0f64;
    for _ in 0..20 {
        let k = c(rng.random_range(-3.0..3.0), rng.random_range(0.05..3.0));
        let psi = CVector::from_element(2, c(1.0, 0.0));
        let dpsi = CVector::from_element(2, c(0.0, 1.0) * k);
        worst_residual = worst_residual.max(bc.relative_residual(&psi, &dpsi));
    }

    let mut min_re = Vec::new();
    let mut nr_bottom = Vec::new();
    for h in [0.1, 0.05, 0.025] {
        let op = assemble(&bc, h, 4.0).expect("assembly succeeds");
        min_re.push(op.min_real_eigenvalue().expect("eigenvalues"));
        nr_bottom.push(op.hermitian_min());
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[0] < 0.0 && w[1] < w[0] && w[1] / w[0] >= 2.0);
    let spectrum_ok = decreasing(&min_re);

    let cl = classify(&bc, &tol);
    let op = assemble(&bc, 0.1, 4.0).expect("assembly succeeds");
    let y0 = op.project(&bump(&op.grid)).expect("projection");
    let library_refuses = matches!(
        evolve_from(&op, y0, &EvolveOptions::default()),
        Err(Error::NotQuasiAccretive)
    );
    let dir = tempfile::tempdir().expect("temporary directory");
    let code = qgraph_accretive::cli::run_with(
        [
            "qgraph",
            "simulate",
            "--example",
            "counterexample",
            "--output-dir",
            dir.path().to_str().expect("utf-8 path"),
        ],
        &mut std::io::sink(),
        &mut std::io::sink(),
    );
    let refuses = !cl.quasi_m_accretive && library_refuses && code == 2;

    Outcome {
        id: 4,
        pass: worst_residual <= 1e-12 && spectrum_ok && refuses,
        detail: format!(
            "e^(ikx) residual max={worst_residual:.1e}; min Re σ(T_h) at h,h/2,h/4 = {:.3e}, {:.3e}, {:.3e} \
             (strictly decreasing with ratio ≥ 2: {spectrum_ok}); numerical-range bottom = {:.1}, {:.1}, {:.1} \
             (ratio {:.2}, {:.2}); simulate refused: {refuses} (exit {code})",
            min_re[0],
            min_re[1],
            min_re[2],
            nr_bottom[0],
            nr_bottom[1],
            nr_bottom[2],
            nr_bottom[1] / nr_bottom[0],
            nr_bottom[2] / nr_bottom[1],
        ),
    }
}

fn criterion_5() -> Outcome {
    let tol = tol();
    let h = PI / 200.0;
    let dir = dirichlet(MetricGraph::interval(PI).expect("valid interval"));
    let lam_h = assemble(&dir, h, PI).expect("assembly").hermitian_min();
    let lam_h2 = assemble(&dir, h / 2.0, PI).expect("assembly").hermitian_min();
    let richardson = (4.0 * lam_h2 - lam_h) / 3.0;

    let neu = neumann(MetricGraph::interval(PI).expect("valid interval"));
    let omega_n = growth_bound(&neu, h, None, &tol).expect("growth bound").omega;

    let op = assemble(&dir, h, PI).expect("assembly");
    let sine = EdgeFunction::from_fn(&op.grid, |_, x| c(x.sin(), 0.0));
    let traj = evolve(&op, &sine, &EvolveOptions::default()).expect("evolution runs");
    let decay = traj.norms.last().expect("nonempty") / traj.norms[0];
    let decay_rel = (decay / (-1.0f64).exp() - 1.0).abs();

    let pass = (lam_h - 1.0).abs() <= 1e-3
        && (richardson - 1.0).abs() <= 1e-3
        && omega_n.abs() <= 1e-6
        && decay_rel <= 1e-4;
    Outcome {
        id: 5,
        pass,
        detail: format!(
            "Dirichlet λ_h={lam_h:.8} λ_h/2={lam_h2:.8} Richardson={richardson:.10}; \
             Neumann ω={omega_n:.2e}; heat decay rel err={decay_rel:.2e}"
        ),
    }
}

type Profile = Box<dyn Fn(usize, f64) -> C64>;
type Family = (&'static str, BoundaryCondition, f64, [f64; 3], Vec<Profile>);

/// Five exact domain functions for each family, as `(name, condition,
/// truncation, spacings, profiles)`.
fn form_families() -> Vec<Family> {
    let i = c(0.0, 1.0);
    let interval_h = [PI / 200.0, PI / 400.0, PI / 800.0];
    let star_h = [0.01, 0.005, 0.0025];
    let dirichlet_fns: Vec<Profile> = vec![
        Box::new(|_, x| c(x.sin(), 0.0)),
        Box::new(move |_, x| (2.0 * x).sin() * (i * x).exp()),
        Box::new(|_, x| c(x * (PI - x), 0.0)),
        Box::new(|_, x| c(x * (PI - x) * (x / 2.0).exp(), 0.0)),
        Box::new(|_, x| c(1.0, 1.0) * x.sin() * x.cos().exp()),
    ];
    let neumann_fns: Vec<Profile> = vec![
        Box::new(|_, x| c(x.cos(), 0.0)),
        Box::new(move |_, x| (2.0 * x).cos() + i * (3.0 * x).cos()),
        Box::new(|_, x| c(1.0 + (x * (PI - x)).powi(2), 0.0)),
        Box::new(|_, x| c(x.cos().exp(), 0.0)),
        Box::new(move |_, x| x.cos() * (i * x.cos()).exp()),
    ];

    // δ: f_j = g(x)(1 + β_j x) with g(0) = 1, g'(0) = 0 and Σβ_j = −γ.
    let gamma_d = c(1.0, 2.0);
    let envelopes: [fn(f64) -> C64; 5] = [
        |x| c((-x * x).exp(), 0.0),
        |x| c((-x * x / 2.0).exp() * x.cos(), 0.0),
        |x| c((-x * x).exp() * (1.0 + x * x), 0.0),
        |x| (c(-1.0, 1.0) * x * x).exp(),
        |x| c((-x * x / 3.0).exp() * (2.0 * x).cos(), 0.0),
    ];
    let betas: [[C64; 3]; 5] = [
        [-gamma_d / 3.0; 3],
        [-gamma_d, c(0.0, 0.0), c(0.0, 0.0)],
        [c(1.0, 0.0), c(2.0, 0.0), c(-3.0, 0.0) - gamma_d],
        [c(0.0, 1.0), c(0.5, -1.0), c(-0.5, 0.0) - gamma_d],
        [c(-2.0, 0.0), c(1.0, 1.0), c(1.0, -1.0) - gamma_d],
    ];
    let delta_fns: Vec<Profile> = envelopes
        .iter()
        .zip(betas)
        .map(|(&g, beta)| Box::new(move |j: usize, x: f64| g(x) * (c(1.0, 0.0) + beta[j] * x)) as Profile)
        .collect();

    // δ′: f_j = g(x) v_j + s x e^{−x²}, so ψ'_j = s on every edge and
    // Σ v_j + γ s = 0.
    let gamma_p = c(2.0, 3.0);
    let slopes = [c(1.0, 0.0), c(0.5, -0.5), c(-1.0, 2.0), c(0.0, 1.0), c(2.0, 0.0)];
    let values: [[C64; 2]; 5] = [
        [c(1.0, 0.0), c(1.0, 0.0)],
        [c(0.0, 1.0), c(2.0, 0.0)],
        [c(-1.0, 0.0), c(0.5, 0.5)],
        [c(1.0, 1.0), c(0.0, 0.0)],
        [c(3.0, 0.0), c(-1.0, 1.0)],
    ];
    let delta_prime_fns: Vec<Profile> = envelopes
        .iter()
        .zip(slopes.iter().zip(values))
        .map(|(&g, (&s, v))| {
            let v = [v[0], v[1], -gamma_p * s - v[0] - v[1]];
            Box::new(move |j: usize, x: f64| g(x) * v[j] + s * x * (-x * x).exp()) as Profile
        })
        .collect();

    vec![
        ("Dirichlet", dirichlet(MetricGraph::interval(PI).expect("valid interval")), PI, interval_h, dirichlet_fns),
        ("Neumann", neumann(MetricGraph::interval(PI).expect("valid interval")), PI, interval_h, neumann_fns),
        ("δ", gen_delta(3, gamma_d).expect("valid δ"), 6.0, star_h, delta_fns),
        ("δ′", gen_delta_prime(3, gamma_p).expect("valid δ′"), 6.0, star_h, delta_prime_fns),
    ]
}

fn criterion_6() -> Outcome {
    let mut worst_order = f64::INFINITY;
    let mut worst_name = String::new();
    let mut finest_err = 0.0f64;
    for (name, bc, r, hs, fns) in form_families() {
        for (k, f) in fns.iter().enumerate() {
            let errs: Vec<f64> = hs
                .iter()
                .map(|&h| {
                    let grid = make_grid(bc.graph(), h, r).expect("valid grid");
                    let u = EdgeFunction::from_fn(&grid, f);
                    let fv = quadratic_form(&bc, &u, 0.1).expect("function in the domain");
                    let form = fv.total;
                    (form - direct_pairing(&u).expect("enough samples")).norm()
                })
                .collect();
            let order = errs.windows(2).map(|w| (w[0] / w[1]).log2()).fold(f64::INFINITY, f64::min);
            finest_err = finest_err.max(errs[2]);
            if order < worst_order {
                worst_order = order;
                worst_name = format!("{name} #{}", k + 1);
            }
        }
    }
    Outcome {
        id: 6,
        pass: worst_order >= 1.9,
        detail: format!(
            "20 functions: min observed order={worst_order:.3} ({worst_name}); max finest-grid gap={finest_err:.2e}"
        ),
    }
}

fn criterion_7() -> Outcome {
    let ls = [0.05, 0.5, 2.0];
    let results = map_indexed(Execution::Parallel, 200, |i| {
        let mut rng = stream(701, i as u64);
        let modes: Vec<(C64, f64, f64)> = (0..8)
            .map(|_| (gaussian(&mut rng), rng.random_range(0.0..40.0), rng.random_range(0.0..PI)))
            .collect();
        let layer = (gaussian(&mut rng), rng.random_range(0.02..0.5));
        ls.iter()
            .map(|&l| {
                let n = 4001;
                let h = l / (n - 1) as f64;
                let values: Vec<C64> = (0..n)
                    .map(|k| {
                        let t = k as f64 * h / l;
                        let smooth: C64 = modes.iter().map(|&(a, w, p)| a * (w * t + p).cos()).sum();
                        smooth + layer.0 * (-t / layer.1).exp()
                    })
                    .collect();
                let (lhs, rhs) = trace_inequality_check(&values, h, l).expect("valid samples");
                (lhs <= rhs * (1.0 + 1e-10), lhs / rhs)
            })
            .collect::<Vec<_>>()
    });
    let flat: Vec<(bool, f64)> = results.into_iter().flatten().collect();
    let violations = flat.iter().filter(|r| !r.0).count();
    let tightest = flat.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome {
        id: 7,
        pass: violations == 0,
        detail: format!("{violations} violations in {} checks; max lhs/rhs={tightest:.4}", flat.len()),
    }
}

fn criterion_8() -> Outcome {
    let tol = tol();
    let results = map_indexed(Execution::Parallel, 100, |i| {
        let kind = [BcKind::QuasiAccretive, BcKind::MAccretive, BcKind::Violating, BcKind::Any][i % 4];
        let bc = random_pair(801, i, kind);
        let mut rng = stream(802, i as u64);
        let gauge = random_invertible(&mut rng, bc.d());
        let moved = bc.gauge(&gauge).expect("invertible gauge");
        let (a, b) = (classify(&bc, &tol), classify(&moved, &tol));
        let diff = match (&a.normalized, &b.normalized) {
            (Some(x), Some(y)) => (&x.p - &y.p).norm().max((&x.l - &y.l).norm()),
            (None, None) => 0.0,
            _ => f64::INFINITY,
        };
        (a.same_verdict(&b), diff)
    });
    let same = results.iter().filter(|r| r.0).count();
    let worst = results.iter().map(|r| r.1).fold(0.0, f64::max);
    Outcome {
        id: 8,
        pass: same == 100 && worst <= 1e-10,
        detail: format!("identical verdicts {same}/100; max (P, L) difference={worst:.2e}"),
    }
}

fn main() -> ExitCode {
    let strict = std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    let criteria: [fn() -> Outcome; 8] = [
        criterion_1,
        criterion_2,
        criterion_3,
        criterion_4,
        criterion_5,
        criterion_6,
        criterion_7,
        criterion_8,
    ];
    let mut unexpected = 0;
    let mut failed = 0;
    for run in criteria {
        let start = Instant::now();
        let o = run();
        let status = if o.pass { "PASS" } else { "FAIL" };
        let known = !o.pass && KNOWN_FAILURES.contains(&o.id);
        println!(
            "criterion {} {status}{} [{:.1}s] {}",
            o.id,
            if known { " (known)" } else { "" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
        if !o.pass {
            failed += 1;
            if strict || !known {
                unexpected += 1;
            }
        }
    }
    println!("acceptance: {}/8 pass", 8 - failed);
    if unexpected > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
