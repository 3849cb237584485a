use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qgraph_accretive::boundary::classify;
use qgraph_accretive::forms::sample_numerical_range;
use qgraph_accretive::generators::gen_delta;
use qgraph_accretive::graph::make_grid;
use qgraph_accretive::linalg::Tolerances;
use qgraph_accretive::par::{map_indexed, Execution};
use qgraph_accretive::random::{random_bc, random_graph, stream, BcKind};
use qgraph_accretive::C64;

const MODES: [(&str, Execution); 2] = [("parallel", Execution::Parallel), ("sequential", Execution::Sequential)];

fn numrange(c: &mut Criterion) {
    let tol = Tolerances::default();
    let bc = gen_delta(4, C64::new(1.0, 2.0)).unwrap();
    let grid = make_grid(bc.graph(), 0.02, 4.0).unwrap();
    let mut group = c.benchmark_group("numrange_2000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| sample_numerical_range(&bc, &grid, 2000, 42, exec, &tol).unwrap())
        });
    }
    group.finish();
}

fn classify_batch(c: &mut Criterion) {
    let tol = Tolerances::default();
    let pairs: Vec<_> = (0..1000)
        .map(|i| {
            let mut rng = stream(7, i);
            let d = 2 + (i as usize) % 7;
            let g = random_graph(&mut rng, d);
            random_bc(&mut rng, &g, d / 2, BcKind::Any)
        })
        .collect();
    let mut group = c.benchmark_group("classify_1000");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| map_indexed(exec, pairs.len(), |i| black_box(classify(&pairs[i], &tol)).m_accretive))
        });
    }
    group.finish();
}

criterion_group!(benches, numrange, classify_batch);
criterion_main!(benches);
