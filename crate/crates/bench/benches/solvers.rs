use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lptsp_bench::{line, random_metric};
use lptsp_core::analysis::{allnorm_lower_bound, simple_lower_bound, NormGrid};
use lptsp_core::{cover, exact, instances, lp, Norm, TreeProvider};

fn exact_dp(c: &mut Criterion) {
    let mut g = c.benchmark_group("exact");
    for n in [8, 10, 12] {
        let inst = random_metric(n);
        g.bench_with_input(BenchmarkId::new("pareto_dp", n), &inst, |b, inst| {
            b.iter(|| exact::exact_lp_tsp(inst, Norm::P(2.0)).unwrap())
        });
    }
    let inst = line(40);
    g.bench_function("line_dp/40", |b| b.iter(|| exact::exact_line_lp_tsp(&inst, Norm::P(2.0)).unwrap()));
    g.finish();
}

fn covering(c: &mut Criterion) {
    let mut g = c.benchmark_group("cover");
    for n in [8, 12] {
        let inst = random_metric(n);
        g.bench_with_input(BenchmarkId::new("all_norm", n), &inst, |b, inst| {
            b.iter(|| cover::all_norm_route(inst, TreeProvider::Exact).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("derandomized_m16", n), &inst, |b, inst| {
            b.iter(|| cover::derandomized_best(inst, Norm::P(2.0), 2.0, 16, TreeProvider::Exact).unwrap())
        });
    }
    let big = random_metric(60);
    g.bench_function("all_norm_heuristic/60", |b| {
        b.iter(|| cover::all_norm_route(&big, TreeProvider::Heuristic).unwrap())
    });
    g.finish();
}

fn tree_lp(c: &mut Criterion) {
    let mut g = c.benchmark_group("tree_lp");
    g.sample_size(10);
    for n in [5, 6] {
        let inst = random_metric(n);
        g.bench_with_input(BenchmarkId::new("solve", n), &inst, |b, inst| {
            b.iter(|| lp::solve_tree_lp(inst, 2.0, 1).unwrap())
        });
    }
    g.finish();
}

fn lower_bounds(c: &mut Criterion) {
    let inst = instances::appendix_a();
    let grid = NormGrid::default();
    c.bench_function("appendix_report", |b| b.iter(|| allnorm_lower_bound(&inst, &grid).unwrap()));
    c.bench_function("simple_bound", |b| b.iter(|| simple_lower_bound(black_box(2100), black_box(1e-3)).unwrap()));
}

criterion_group!(benches, exact_dp, covering, tree_lp, lower_bounds);
criterion_main!(benches);
