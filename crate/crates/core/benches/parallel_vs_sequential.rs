//! Sequential against data-parallel execution on the three hot loops:
//! operator assembly, multi-pole Green solves and mask distances.

use std::hint::black_box;
use std::sync::Arc;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use inclusion_core::exec::Execution;
use inclusion_core::geometry::{hausdorff_distance, AugmentedDomain, Grid, InclusionShape, ShapeKind};
use inclusion_core::green::GreenSolver;
use inclusion_core::media::{build_medium, MediumField, MediumSpec, TensorSpec};
use inclusion_core::solver::{assemble, Impedance, SolverOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn bench_assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    let g = Arc::new(Grid::build([0.0; 3], [1.0; 3], 24).unwrap());
    let m = MediumField::homogeneous(&g, [[1.5, 0.3, 0.0], [0.3, 1.0, 0.1], [0.0, 0.1, 2.0]], 0.5);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 24), &exec, |b, &e| b.iter(|| assemble(black_box(&g), &m, Impedance::Plus, e).unwrap()));
    }
    group.finish();
}

fn bench_green_many(c: &mut Criterion) {
    let mut group = c.benchmark_group("green_many");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let aug = AugmentedDomain::from_box([0.0; 3], [1.0; 3], [0.125, 0.125], [0.875, 0.875], 0.375, 16).unwrap();
    let spec = MediumSpec { tensor: TensorSpec::Diagonal([1.5, 1.0, 1.2]), ..MediumSpec::default() };
    let inc = InclusionShape::rasterize(ShapeKind::Ball { center: [0.5, 0.5, 0.5], radius: 0.2 }, aug.grid()).unwrap();
    let m = build_medium(&spec, &aug, &inc).unwrap();
    let poles = [[0.3, 0.4, -0.2], [0.7, 0.6, -0.15], [0.4, 0.6, -0.12], [0.6, 0.3, -0.2]];
    for (name, exec) in MODES {
        let s = GreenSolver::new(&aug, &m, Impedance::Plus, SolverOptions::default(), exec).unwrap();
        group.bench_with_input(BenchmarkId::new(name, poles.len()), &s, |b, s| b.iter(|| s.green_many(black_box(&poles)).unwrap()));
    }
    group.finish();
}

fn bench_hausdorff(c: &mut Criterion) {
    let mut group = c.benchmark_group("hausdorff");
    let g = Grid::build([0.0; 3], [1.0; 3], 48).unwrap();
    let a = InclusionShape::rasterize(ShapeKind::Ball { center: [0.5; 3], radius: 0.3 }, &g).unwrap().mask;
    let e = ShapeKind::Ellipsoid { center: [0.45, 0.5, 0.55], semi_axes: [0.35, 0.25, 0.2] };
    let b = InclusionShape::rasterize(e, &g).unwrap().mask;
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 48), &exec, |bch, &x| bch.iter(|| hausdorff_distance(&g, black_box(&a), &b, x).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, bench_assembly, bench_green_many, bench_hausdorff);
criterion_main!(benches);
