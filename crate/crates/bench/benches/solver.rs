use criterion::{criterion_group, criterion_main, Criterion};
use pbg_core::fluctuation::{input_output, propagate_basis, FluctuationOptions};
use pbg_core::mean_field::{solve_bvp, BvpOptions, Grid};
use pbg_core::scan::{emit_figure_recipe, solve_point, ScanSpec};
use pbg_core::C64;

fn base() -> ScanSpec {
    let mut spec = emit_figure_recipe(7).unwrap();
    spec.device.k_p = C64::new(1.4, 0.0);
    spec
}

fn mean_field(c: &mut Criterion) {
    let spec = base();
    let mut g = c.benchmark_group("solve_bvp");
    for points in [201, 1001] {
        let grid = Grid::uniform(spec.device.length, points).unwrap();
        g.bench_function(format!("{points}"), |b| {
            b.iter(|| solve_bvp(&spec.device, &spec.boundary, &grid, &BvpOptions::default()).unwrap())
        });
    }
    g.finish();
}

fn fluctuations(c: &mut Criterion) {
    let spec = base();
    let grid = Grid::uniform(spec.device.length, 1001).unwrap();
    let mf = solve_bvp(&spec.device, &spec.boundary, &grid, &BvpOptions::default()).unwrap();
    let options = FluctuationOptions::default();
    c.bench_function("propagate_basis/1001", |b| {
        b.iter(|| propagate_basis(&spec.device, &mf, &options).unwrap())
    });
    c.bench_function("input_output/1001", |b| {
        b.iter(|| input_output(&spec.device, &mf, &options).unwrap())
    });
}

fn scan_point(c: &mut Criterion) {
    let spec = base();
    let setup = spec.base();
    let mut g = c.benchmark_group("solve_point");
    g.sample_size(20);
    g.bench_function("default", |b| b.iter(|| solve_point(&setup, &spec.solver).unwrap()));
    g.finish();
}

criterion_group!(benches, mean_field, fluctuations, scan_point);
criterion_main!(benches);
