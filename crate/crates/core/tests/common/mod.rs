#![allow(dead_code)]

use pspline::mesh::generate;
use pspline::{Cubic, Point2, PsRefinement, RefineOptions, SplitStrategy, Triangulation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub mod oracle;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn refine(base: Triangulation, strategy: SplitStrategy) -> PsRefinement {
    PsRefinement::new(base, &RefineOptions::with_strategy(strategy)).expect("refinement")
}

pub fn single_symmetric() -> PsRefinement {
    refine(generate::unit_triangle(), SplitStrategy::Barycenter)
}

pub fn square_symmetric() -> PsRefinement {
    refine(generate::unit_square(), SplitStrategy::Barycenter)
}

/// A jittered 20-triangle mesh with incenter splits.
pub fn random_incenter() -> PsRefinement {
    let base = generate::jittered_grid(5, 2, 0.3, 7);
    assert_eq!(base.num_triangles(), 20);
    refine(base, SplitStrategy::Incenter)
}

/// Four macro-triangles, some symmetric and some not.
pub fn mixed() -> PsRefinement {
    let base = generate::three_directional(2, 1);
    let mut opts = RefineOptions::with_strategy(SplitStrategy::Barycenter);
    opts.triangle_points.insert(1, Point2::new(0.45, 0.55));
    PsRefinement::new(base, &opts).expect("refinement")
}

pub fn random_cubic(rng: &mut ChaCha8Rng) -> Cubic {
    Cubic(std::array::from_fn(|_| rng.random_range(-1.0..1.0)))
}

/// Uniform random points in the macro-triangles of `ps`.
pub fn sample_points(ps: &PsRefinement, n: usize, rng: &mut ChaCha8Rng) -> Vec<Point2> {
    let base = ps.base();
    (0..n)
        .map(|_| {
            let t = rng.random_range(0..base.num_triangles());
            let [a, b, c] = base.corner_points(t);
            let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
            if u + v > 1.0 {
                u = 1.0 - u;
                v = 1.0 - v;
            }
            a + (b - a) * u + (c - a) * v
        })
        .collect()
}
