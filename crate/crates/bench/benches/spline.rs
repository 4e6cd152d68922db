use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use pspline::fit::{
    jittered_samples, least_squares_fit, project_cubic, FitProblem, SpaceKind, SplineSpace,
};
use pspline::mesh::generate;
use pspline::{
    C1Space, Cubic, CubicPatch, Point2, PsRefinement, ReducedSpace, RefineOptions, SplitStrategy,
};
use std::hint::black_box;

fn refinement(level: usize) -> PsRefinement {
    let base = generate::unit_square().uniform_refine(level);
    PsRefinement::new(
        base,
        &RefineOptions::with_strategy(SplitStrategy::Barycenter),
    )
    .unwrap()
}

fn blossom(c: &mut Criterion) {
    let tri = [
        Point2::new(0.0, 0.0),
        Point2::new(1.0, 0.1),
        Point2::new(0.2, 0.9),
    ];
    let patch = CubicPatch::new(tri, [1.0, -0.5, 0.25, 2.0, 0.0, 0.3, -1.0, 0.7, 0.1, 0.4]);
    let (p1, p2, p3) = (
        Point2::new(0.3, 0.2),
        Point2::new(0.5, 0.4),
        Point2::new(0.1, 0.6),
    );
    c.bench_function("blossom", |b| {
        b.iter(|| black_box(&patch).blossom(black_box(p1), p2, p3))
    });
    c.bench_function("eval", |b| b.iter(|| black_box(&patch).eval(black_box(p1))));
}

fn spaces(c: &mut Criterion) {
    let mut group = c.benchmark_group("space_build");
    for level in [2, 3] {
        let ps = refinement(level);
        let triangles = ps.base().num_triangles();
        group.bench_with_input(BenchmarkId::new("c1", triangles), &ps, |b, ps| {
            b.iter(|| C1Space::new(ps.clone()).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("reduced", triangles), &ps, |b, ps| {
            b.iter(|| ReducedSpace::new(ps.clone()).unwrap())
        });
    }
    group.finish();
}

fn synthesize(c: &mut Criterion) {
    let p = Cubic([0.3, -1.0, 0.5, 0.2, 0.1, -0.7, 0.4, 0.0, 0.9, -0.2]);
    let mut group = c.benchmark_group("synthesize");
    for kind in [SpaceKind::C1, SpaceKind::Reduced] {
        let space = SplineSpace::new(refinement(3), kind).unwrap();
        let coeffs = project_cubic(&space, &p).unwrap();
        group.bench_function(kind.to_string(), |b| {
            b.iter(|| space.synthesize(black_box(&coeffs)).unwrap())
        });
    }
    group.finish();
}

fn fit(c: &mut Criterion) {
    let f = |x: Point2| (3.0 * x.x).sin() * (2.0 * x.y).cos();
    let mut group = c.benchmark_group("least_squares");
    group.sample_size(10);
    for kind in [SpaceKind::C1, SpaceKind::Reduced] {
        let space = SplineSpace::new(refinement(2), kind).unwrap();
        let problem = FitProblem::sample(jittered_samples(space.refinement().base(), 40, 0), f);
        group.bench_function(kind.to_string(), |b| {
            b.iter(|| least_squares_fit(&space, &problem).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, blossom, spaces, synthesize, fit);
criterion_main!(benches);
