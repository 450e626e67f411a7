use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pbdr::benchmark::{run_test, TestSpec};
use pbdr::geometry::{pack_mesh_with, TriMesh};
use pbdr::solver::SolverConfig;
use pbdr::Execution;

const MODES: [(&str, Execution); 2] = [
    ("sequential", Execution::Sequential),
    ("parallel", Execution::Parallel),
];

fn seeds(c: &mut Criterion) {
    let spec = TestSpec {
        frames: 20,
        seeds: vec![0, 1, 2, 3],
        ..TestSpec::defaults(1).unwrap()
    };
    let config = SolverConfig::pbdr();
    let mut group = c.benchmark_group("test1_four_seeds");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_test(&spec, &config, exec).unwrap())
        });
    }
    group.finish();
}

fn packing(c: &mut Criterion) {
    let mesh = TriMesh::stanford_bunny();
    let mut group = c.benchmark_group("pack_bunny");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| pack_mesh_with(&mesh, 0.005, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, seeds, packing);
criterion_main!(benches);
