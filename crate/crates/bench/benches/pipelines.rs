use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use systolab_core::birkhoff::{summarize, BirkhoffGrid, Section};
use systolab_core::geodesic::{
    equator_seed, find_closed_geodesic, integrate_geodesic, GeodesicState,
};
use systolab_core::strip::synthetic::RandomGenerating;
use systolab_core::strip::{
    action, build_from_generating, generating_from_map, StripGrid, CLOSURE_TOL,
};
use systolab_core::{MetricModel, Tolerance};

fn geodesics(c: &mut Criterion) {
    let m = MetricModel::spheroid(1.03).unwrap();
    let s0 = GeodesicState::from_chart(&m, 1.0, 0.2, 0.7).unwrap();
    c.bench_function("geodesic/spheroid_4pi", |b| {
        b.iter(|| integrate_geodesic(&m, black_box(&s0), 4.0 * PI, Tolerance::default()).unwrap())
    });
}

fn return_maps(c: &mut Criterion) {
    let mut group = c.benchmark_group("return_map");
    group.sample_size(10);
    for (name, m) in [
        ("round", MetricModel::round(1.0).unwrap()),
        ("spheroid_1.03", MetricModel::spheroid(1.03).unwrap()),
    ] {
        let orbit = find_closed_geodesic(&m, &equator_seed(&m), 2.0 * PI).unwrap();
        let section = Section::new(&m, &orbit).unwrap();
        let area = m.area(128).unwrap();
        for n in [32usize, 64] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| {
                    let g = BirkhoffGrid::build(&section, n, n).unwrap();
                    summarize(&g, area).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn strip_calculus(c: &mut Criterion) {
    let mut group = c.benchmark_group("strip");
    group.sample_size(20);
    let grid = StripGrid::new(2.0 * PI, 96, 96).unwrap();
    let gen = RandomGenerating::random(11, grid.l, false).sample(grid);
    let map = build_from_generating(&gen).unwrap();
    group.bench_function("build_from_generating", |b| {
        b.iter(|| build_from_generating(black_box(&gen)).unwrap())
    });
    group.bench_function("generating_from_map", |b| {
        b.iter(|| generating_from_map(black_box(&map)).unwrap())
    });
    group.bench_function("action", |b| {
        b.iter(|| action(black_box(&map), CLOSURE_TOL).unwrap())
    });
    group.finish();
}

criterion_group!(benches, geodesics, return_maps, strip_calculus);
criterion_main!(benches);
