use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use offsetph_bench::instance;
use offsetph_cli::{run_pipeline, Pipeline};
use offsetph_core::persistence::{compute_barcode_with, Reduction};
use offsetph_core::sampling::sample_filtration;
use offsetph_core::{bottleneck_distance, build_voronoi, compute_barcode, restricted_nerve, unrestricted_nerve};

fn pipelines(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(10);
    for n in [10usize, 50, 100] {
        let sites = instance(n);
        let runs = [
            ("restricted", Pipeline::Restricted),
            ("sample_1", Pipeline::Sample { epsilon: 1.0 }),
            ("sample_0.1", Pipeline::Sample { epsilon: 0.1 }),
            ("cech", Pipeline::Cech { cap: 400 }),
        ];
        for (name, p) in runs {
            g.bench_with_input(BenchmarkId::new(name, n), &sites, |b, s| b.iter(|| run_pipeline(black_box(s), p).unwrap()));
        }
    }
    g.finish();
}

fn stages(c: &mut Criterion) {
    let mut g = c.benchmark_group("stage");
    g.sample_size(10);
    for n in [100usize, 250] {
        let sites = instance(n);
        g.bench_with_input(BenchmarkId::new("voronoi", n), &sites, |b, s| b.iter(|| build_voronoi(black_box(s)).unwrap()));
        let diagram = build_voronoi(&sites).unwrap();
        g.bench_with_input(BenchmarkId::new("restricted_nerve", n), &diagram, |b, d| b.iter(|| restricted_nerve(black_box(d))));
    }
    let sites = instance(50);
    g.bench_function("unrestricted_nerve/50", |b| b.iter(|| unrestricted_nerve(black_box(&sites))));
    let (_, fc) = sample_filtration(&sites, 0.1).unwrap();
    for (name, r) in [("standard", Reduction::Standard), ("clearing", Reduction::Clearing)] {
        g.bench_function(format!("reduction_{name}/sample_0.1_n50"), |b| {
            b.iter(|| compute_barcode_with(black_box(&fc), r).unwrap())
        });
    }
    let exact = compute_barcode(&restricted_nerve(&build_voronoi(&sites).unwrap())).unwrap();
    let sampled = compute_barcode(&fc).unwrap();
    g.bench_function("bottleneck/dim1_n50", |b| b.iter(|| bottleneck_distance(black_box(&exact), black_box(&sampled), 1)));
    g.finish();
}

criterion_group!(benches, pipelines, stages);
criterion_main!(benches);
