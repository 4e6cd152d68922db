mod common;

use common::*;
use pspline::fit::{
    convergence_study, jittered_samples, least_squares_fit, project_cubic, FitProblem, SpaceKind,
    SplineSpace, StudyOptions,
};
use pspline::mesh::generate;
use pspline::reduced::ReducedSpace;
use pspline::{Cubic, Point2, SplitStrategy};
use std::f64::consts::PI;

fn sine(p: Point2) -> f64 {
    (PI * p.x).sin() * (PI * p.y).sin()
}

#[test]
fn sine_converges_at_fourth_order_in_reduced_space() {
    let report =
        convergence_study(&sine, &generate::unit_square(), &StudyOptions::default()).unwrap();
    for l in &report.levels {
        println!(
            "h {:.4} T {} sym {} dofs {} L2 {:e} Linf {:e}",
            l.h, l.triangles, l.symmetric_triangles, l.dofs, l.l2, l.linf
        );
    }
    println!(
        "ratios {:?} orders {:?}",
        report.l2_ratios, report.l2_orders
    );
    for r in &report.l2_ratios {
        assert!((12.0..=20.0).contains(r), "ratio {r}");
    }
    for l in &report.levels {
        let dims = pspline::reduced::dimension_report(&refine(
            generate::unit_square().uniform_refine(l.level),
            SplitStrategy::Barycenter,
        ));
        assert_eq!(l.dofs, dims.reduced);
    }
}

#[test]
fn cubic_study_is_exact() {
    let p = Cubic([0.3, -1.0, 0.5, 0.2, 0.1, -0.7, 0.4, 0.0, 0.9, -0.2]);
    let f = move |x: Point2| p.eval(x);
    let report = convergence_study(
        &f,
        &generate::unit_square(),
        &StudyOptions {
            levels: vec![0, 1],
            ..Default::default()
        },
    )
    .unwrap();
    for l in &report.levels {
        assert!(l.l2 < 1e-11 && l.linf < 1e-10, "{l:?}");
    }
    assert!(report.l2_orders.iter().all(Option::is_none));
}

#[test]
fn projecting_x_gives_greville_abscissae() {
    let space = ReducedSpace::new(mixed()).unwrap();
    let wrapped = SplineSpace::Reduced(space.clone());
    let c = project_cubic(&wrapped, &Cubic::monomial(1)).unwrap();
    for (ci, q) in c.iter().zip(space.greville_points()) {
        assert!((ci - q.x).abs() < 1e-12);
    }
}

#[test]
fn projection_reproduces_cubic() {
    let p = Cubic([0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, -2.0]); // x²y − 2y³
    for kind in [SpaceKind::C1, SpaceKind::Reduced] {
        let space = SplineSpace::new(random_incenter(), kind).unwrap();
        let c = project_cubic(&space, &p).unwrap();
        let s = space.synthesize(&c).unwrap();
        let mut r = rng(4);
        for x in sample_points(space.refinement(), 500, &mut r) {
            assert!((s.eval(x).unwrap() - p.eval(x)).abs() < 1e-9);
        }
    }
}

#[test]
fn least_squares_recovers_cubic_coefficients() {
    let p = Cubic([1.0, 0.5, -0.25, 0.3, 0.0, 0.2, -0.4, 0.1, 0.6, 0.05]);
    for kind in [SpaceKind::C1, SpaceKind::Reduced] {
        let space = SplineSpace::new(mixed(), kind).unwrap();
        let points = jittered_samples(space.refinement().base(), 30, 2);
        let fit = least_squares_fit(&space, &FitProblem::sample(points, |x| p.eval(x))).unwrap();
        let exact = project_cubic(&space, &p).unwrap();
        for (a, b) in fit.coefficients.iter().zip(&exact) {
            assert!((a - b).abs() < 1e-8, "{kind}: {a} vs {b}");
        }
        assert!(fit.residual_max < 1e-8);
    }
}

#[test]
fn reduced_fit_is_no_better_than_full_fit() {
    let ps = refine(
        generate::unit_square().uniform_refine(1),
        SplitStrategy::Barycenter,
    );
    let points = jittered_samples(ps.base(), 40, 8);
    let problem = FitProblem::sample(points, sine);
    let full = least_squares_fit(
        &SplineSpace::new(ps.clone(), SpaceKind::C1).unwrap(),
        &problem,
    )
    .unwrap();
    let red =
        least_squares_fit(&SplineSpace::new(ps, SpaceKind::Reduced).unwrap(), &problem).unwrap();
    assert!(
        red.residual_l2 >= full.residual_l2 * (1.0 - 1e-9),
        "{} < {}",
        red.residual_l2,
        full.residual_l2
    );
    assert!(red.dim < full.dim);
}

#[test]
fn residual_decreases_with_refinement() {
    let mut last = f64::INFINITY;
    for level in 0..3 {
        let ps = refine(
            generate::unit_square().uniform_refine(level),
            SplitStrategy::Barycenter,
        );
        let space = SplineSpace::new(ps, SpaceKind::Reduced).unwrap();
        let points = jittered_samples(space.refinement().base(), 50, 1);
        let fit = least_squares_fit(&space, &FitProblem::sample(points, sine)).unwrap();
        assert!(fit.residual_rms < last);
        last = fit.residual_rms;
    }
}
