//! End-to-end acceptance suite. Runs every criterion, prints one PASS/FAIL line
//! each, and exits non-zero if any criterion fails.

mod common;

use common::oracle::{bernstein_eval, exact_jumps, fd_jumps, polarize};
use common::*;
use pspline::c1space::C1Space;
use pspline::fit::{convergence_study, StudyOptions};
use pspline::mesh::{compute_nu, compute_w_omega, generate};
use pspline::reduced::{dimension_report, ReducedSpace};
use pspline::{
    check_smoothness, Cubic, CubicPatch, Point2, PsRefinement, SplineFunction, SplitStrategy,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: impl Into<String>) -> Self {
        Outcome {
            pass,
            detail: detail.into(),
        }
    }
}

fn test_meshes() -> Vec<(&'static str, PsRefinement)> {
    vec![
        ("single", single_symmetric()),
        ("square", square_symmetric()),
        ("random20", random_incenter()),
    ]
}

fn identity_deviation(m: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for (a, row) in m.iter().enumerate() {
        for (b, v) in row.iter().enumerate() {
            worst = worst.max((v - if a == b { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

fn c1_duality() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ps) in test_meshes() {
        let start = Instant::now();
        let space = C1Space::new(ps).expect("space");
        let b = space.refinement().base();
        let expected = 3 * b.num_vertices() + 4 * b.num_edges();
        let matrix: Vec<Vec<f64>> = (0..space.dim())
            .map(|j| space.analyze_unchecked(&space.basis_function(j)).0)
            .collect();
        let dev = identity_deviation(&matrix);
        let elapsed = start.elapsed();
        pass &= space.dim() == expected && dev < 1e-9 && elapsed < Duration::from_secs(10);
        parts.push(format!(
            "{name}: dim {} dev {dev:.1e} {:.2}s",
            space.dim(),
            elapsed.as_secs_f64()
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn reduced_dim_formula(ps: &PsRefinement) -> usize {
    let b = ps.base();
    let s = ps.num_symmetric();
    3 * b.num_vertices() + s + 3 * (b.num_triangles() - s) + b.num_boundary_edges()
}

fn reduced_duality() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut meshes = test_meshes();
    meshes.push(("square/no-sym", square_symmetric().without_symmetry()));
    for (name, ps) in meshes {
        let expected = reduced_dim_formula(&ps);
        let space = ReducedSpace::new(ps).expect("space");
        let dev = identity_deviation(&space.duality_matrix().expect("duality"));
        pass &= space.dim() == expected && dev < 1e-9;
        parts.push(format!("{name}: dim {} dev {dev:.1e}", space.dim()));
    }
    pass &= ReducedSpace::new(square_symmetric()).unwrap().dim() == 18;
    pass &= ReducedSpace::new(square_symmetric().without_symmetry())
        .unwrap()
        .dim()
        == 22;
    Outcome::new(pass, parts.join("; "))
}

fn smoothness_suites() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut meshes = test_meshes();
    meshes.push(("mixed", mixed()));
    for (name, ps) in meshes {
        let space = ReducedSpace::new(ps).expect("space");
        let r = space.verify_supersmoothness();
        pass &= r.passes(1e-10)
            && !r.control_pairs.is_empty() == (space.refinement().num_symmetric() > 0);
        parts.push(format!(
            "{name}: C1 {:.1e} C2[vij,vijk] {:.1e} C2@split {:.1e} C2 in T_S {:.1e} control {:.1e} ({} pairs); non-T_S corner C2 {:.1e}",
            r.c1,
            r.split_edge_c2,
            r.split_point_c2,
            r.symmetric_interior_c2,
            r.control_deviation,
            r.control_pairs.len(),
            r.nonsymmetric_corner_c2
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn weight_identities() -> Outcome {
    let mut meshes = test_meshes();
    meshes.push(("mixed", mixed()));
    meshes.push((
        "3dir16",
        refine(
            generate::three_directional(16, 16),
            SplitStrategy::Barycenter,
        ),
    ));
    meshes.push((
        "red2",
        refine(
            generate::jittered_grid(2, 2, 0.3, 5).uniform_refine(2),
            SplitStrategy::Barycenter,
        ),
    ));
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for (_, ps) in &meshes {
        for t in (0..ps.base().num_triangles()).filter(|&t| ps.is_symmetric(t)) {
            for side in 0..3 {
                worst = worst.max(ps.weight_identity_residual(t, side).expect("symmetric"));
                checked += 1;
            }
        }
    }

    let tri = single_symmetric();
    let e = tri.base().edge_index(0, 1).unwrap();
    let nu_b = compute_nu(&tri, e, 0).unwrap();
    let omega_b = compute_w_omega(&tri, e).unwrap()[0].omega;
    let sq = square_symmetric();
    let e = sq.base().edge_index(1, 2).unwrap();
    let nu_i = compute_nu(&sq, e, 0).unwrap();
    let w = compute_w_omega(&sq, e).unwrap();
    let examples = [
        (nu_b, -2.0),
        (omega_b, 2.0 / 3.0),
        (nu_i, -1.0),
        (w[0].omega, 1.0 / 3.0),
        (w[1].omega, 1.0 / 3.0),
    ];
    let example_dev = examples
        .iter()
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Outcome::new(
        worst <= 1e-12 && example_dev <= 1e-12 && checked > 0,
        format!(
            "{checked} symmetric sides, worst identity residual {worst:.1e}; boundary nu {nu_b} omega {omega_b:.15}; interior nu {nu_i} omega {:.15}/{:.15}",
            w[0].omega, w[1].omega
        ),
    )
}

fn cubic_reproduction() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, ps) in [("random20", random_incenter()), ("mixed", mixed())] {
        let reduced = ReducedSpace::new(ps).expect("space");
        let c1 = reduced.c1();
        let (mut worst_c1, mut worst_red): (f64, f64) = (0.0, 0.0);
        let mut r = rng(5);
        for _ in 0..20 {
            let p = random_cubic(&mut r);
            let exact = SplineFunction::from_cubic(c1.refinement(), &p);
            let s1 = c1
                .synthesize(&c1.analyze(&exact).expect("analyze"))
                .expect("synthesize");
            let s2 = reduced
                .synthesize(&reduced.analyze(&exact, true).expect("analyze"))
                .expect("synthesize");
            let scale = p.magnitude().max(f64::MIN_POSITIVE);
            for x in sample_points(c1.refinement(), 500, &mut r) {
                let v = p.eval(x);
                worst_c1 = worst_c1.max((s1.eval(x).unwrap() - v).abs() / scale);
                worst_red = worst_red.max((s2.eval(x).unwrap() - v).abs() / scale);
            }
        }
        pass &= worst_c1 <= 1e-9 && worst_red <= 1e-9;
        parts.push(format!("{name}: C1 {worst_c1:.1e} reduced {worst_red:.1e}"));
    }
    Outcome::new(pass, parts.join("; "))
}

/// Barycentric lattice of step `1/n` on every micro-triangle.
fn dense_points(ps: &PsRefinement, n: usize) -> Vec<(usize, usize, Point2)> {
    let mut out = Vec::new();
    for t in 0..ps.base().num_triangles() {
        for m in 0..6 {
            let [a, b, c] = ps.micro_triangle(t, m);
            for i in 0..=n {
                for j in 0..=(n - i) {
                    let (u, v) = (i as f64 / n as f64, j as f64 / n as f64);
                    out.push((t, m, Point2::combine(&[a, b, c], &[1.0 - u - v, u, v])));
                }
            }
        }
    }
    out
}

struct BasisCheck {
    sum: f64,
    greville: f64,
    min: f64,
}

fn basis_check(
    ps: &PsRefinement,
    greville: &[Point2],
    values: impl Fn(Point2) -> Vec<(usize, f64)>,
    values_in: impl Fn(usize, usize, Point2) -> Vec<(usize, f64)>,
    r: &mut ChaCha8Rng,
) -> BasisCheck {
    let mut out = BasisCheck {
        sum: 0.0,
        greville: 0.0,
        min: f64::INFINITY,
    };
    for x in sample_points(ps, 500, r) {
        let row = values(x);
        let sum: f64 = row.iter().map(|(_, v)| v).sum();
        let g = row
            .iter()
            .fold(Point2::ORIGIN, |acc, &(i, v)| acc + greville[i] * v);
        out.sum = out.sum.max((sum - 1.0).abs());
        out.greville = out.greville.max(g.dist(x));
    }
    for (t, m, x) in dense_points(ps, 10) {
        for (_, v) in values_in(t, m, x) {
            out.min = out.min.min(v);
        }
    }
    out
}

fn partition_and_greville() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    let mut meshes = test_meshes();
    meshes.push(("mixed", mixed()));
    for (name, ps) in meshes {
        let reduced = ReducedSpace::new(ps).expect("space");
        let c1 = reduced.c1();
        let mut r = rng(21);
        let full = basis_check(
            c1.refinement(),
            &c1.greville_points(),
            |x| c1.basis_values(x).unwrap(),
            |t, m, x| c1.basis_values_in(t, m, x),
            &mut r,
        );
        let red = basis_check(
            c1.refinement(),
            &reduced.greville_points(),
            |x| reduced.basis_values(x).unwrap(),
            |t, m, x| reduced.basis_values_in(t, m, x),
            &mut r,
        );
        for c in [&full, &red] {
            pass &= c.sum < 1e-10 && c.greville < 1e-10 && c.min >= -1e-12;
        }
        parts.push(format!(
            "{name}: C1 sum {:.1e} greville {:.1e} min {:.1e}, reduced sum {:.1e} greville {:.1e} min {:.1e}",
            full.sum, full.greville, full.min, red.sum, red.greville, red.min
        ));
    }
    Outcome::new(pass, parts.join("; "))
}

fn dimension_accounting() -> Outcome {
    let mut pass = true;
    let mut meshes = test_meshes();
    meshes.push(("mixed", mixed()));
    meshes.push(("square/no-sym", square_symmetric().without_symmetry()));
    meshes.push((
        "3dir16",
        refine(
            generate::three_directional(16, 16),
            SplitStrategy::Barycenter,
        ),
    ));
    let mut big_ratio = 0.0;
    for (name, ps) in meshes {
        let b = ps.base();
        let full_expected = 3 * b.num_vertices() + 4 * b.num_edges();
        let reduced_expected = reduced_dim_formula(&ps);
        let report = dimension_report(&ps);
        let space = ReducedSpace::new(ps).expect("space");
        let ok = space.c1().dim() == full_expected
            && space.dim() == reduced_expected
            && space.recombination().ncols() == reduced_expected
            && space.recombination().nrows() == full_expected
            && report.full == full_expected
            && report.reduced == reduced_expected;
        if !ok {
            println!("  dimension mismatch on {name}");
        }
        pass &= ok;
        if name == "3dir16" {
            pass &= space.refinement().base().num_triangles() == 512;
            big_ratio = report.ratio;
        }
    }
    let trend: Vec<f64> = [2, 4, 8, 16, 32]
        .iter()
        .map(|&n| {
            dimension_report(&refine(
                generate::three_directional(n, n),
                SplitStrategy::Barycenter,
            ))
            .ratio
        })
        .collect();
    let increasing = trend.windows(2).all(|w| w[1] > w[0]) && trend.iter().all(|&r| r < 3.0);
    pass &= big_ratio > 2.0 && big_ratio < 3.0 && increasing;
    Outcome::new(
        pass,
        format!(
            "512-triangle ratio {big_ratio:.4}; ratios n=2..32: {}",
            trend
                .iter()
                .map(|r| format!("{r:.4}"))
                .collect::<Vec<_>>()
                .join(", ")
        ),
    )
}

fn convergence() -> Outcome {
    let start = Instant::now();
    let f = |p: Point2| (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).sin();
    let report = match convergence_study(&f, &generate::unit_square(), &StudyOptions::default()) {
        Ok(r) => r,
        Err(e) => return Outcome::new(false, format!("study failed: {e}")),
    };
    let elapsed = start.elapsed();
    let all_symmetric = report
        .levels
        .iter()
        .all(|l| l.symmetric_triangles == l.triangles);
    let in_band =
        report.l2_ratios.len() == 2 && report.l2_ratios.iter().all(|r| (12.0..=20.0).contains(r));
    Outcome::new(
        in_band && all_symmetric && elapsed < Duration::from_secs(60),
        format!(
            "L2 {} ratios {} ({:.1}s)",
            report
                .levels
                .iter()
                .map(|l| format!("{:.3e}", l.l2))
                .collect::<Vec<_>>()
                .join(" "),
            report
                .l2_ratios
                .iter()
                .map(|r| format!("{r:.2}"))
                .collect::<Vec<_>>()
                .join(" "),
            elapsed.as_secs_f64()
        ),
    )
}

fn random_point(r: &mut ChaCha8Rng, s: f64) -> Point2 {
    Point2::new(r.random_range(-s..s), r.random_range(-s..s))
}

fn oracle_equivalence() -> Outcome {
    let mut r = rng(99);
    let mut worst_blossom: f64 = 0.0;
    for _ in 0..1000 {
        let tri = loop {
            let t = [
                random_point(&mut r, 1.0),
                random_point(&mut r, 1.0),
                random_point(&mut r, 1.0),
            ];
            if (t[1] - t[0]).cross(t[2] - t[0]).abs() > 0.2 {
                break t;
            }
        };
        let patch = CubicPatch::new(tri, std::array::from_fn(|_| r.random_range(-1.0..1.0)));
        let args = [
            random_point(&mut r, 2.0),
            random_point(&mut r, 2.0),
            random_point(&mut r, 2.0),
        ];
        let (expected, magnitude) = polarize(|p| bernstein_eval(&patch, p), args);
        worst_blossom = worst_blossom
            .max((patch.blossom(args[0], args[1], args[2]) - expected).abs() / magnitude.max(1.0));
    }

    // Joins of three kinds: common cubic, C¹ only, and C⁰ only.
    let mut worst_fd: f64 = 0.0;
    let mut classified = true;
    for case in 0..300 {
        let (p1, p2) = (random_point(&mut r, 1.0), random_point(&mut r, 1.0));
        if p1.dist(p2) < 0.3 {
            continue;
        }
        let n = Point2::new(p1.y - p2.y, p2.x - p1.x);
        let mid = p1.lerp(p2, 0.5);
        let (q1, q2) = (
            mid + n * r.random_range(0.3..1.0),
            mid - n * r.random_range(0.3..1.0),
        );
        let base = random_cubic(&mut r);
        // ℓ(p) = n · (p - p1) vanishes on the edge
        let l = Cubic([
            -(n.x * p1.x + n.y * p1.y),
            n.x,
            n.y,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ]);
        let lin = Cubic([
            r.random_range(0.5..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
            0.0,
        ]);
        let kind = case % 3;
        let mut other = base;
        let extra = match kind {
            0 => Cubic::default(),
            1 => mul(&mul(&l, &l), &lin),
            _ => mul(&l, &lin),
        };
        for (o, e) in other.0.iter_mut().zip(extra.0) {
            *o += e;
        }
        let a = CubicPatch::from_polynomial(&base, [p1, p2, q1]);
        let b = CubicPatch::from_polynomial(&other, [p2, p1, q2]);
        let fd = fd_jumps(&a, &b, p1, p2);
        let ex = exact_jumps(&a, &b, p1, p2);
        let scale = ex.scale.max(1.0);
        worst_fd = worst_fd
            .max((fd.gradient - ex.gradient).abs() / scale)
            .max((fd.hessian - ex.hessian).abs() / scale);
        let c1 = check_smoothness(&a, &b, (p1, p2), 1)
            .unwrap()
            .passes_default();
        let c2 = check_smoothness(&a, &b, (p1, p2), 2)
            .unwrap()
            .passes_default();
        let fd_c1 = fd.gradient < 1e-6 * scale;
        let fd_c2 = fd_c1 && fd.hessian < 1e-6 * scale;
        classified &= c1 == fd_c1 && c2 == fd_c2 && c1 == (kind < 2) && c2 == (kind == 0);
    }
    Outcome::new(
        worst_blossom <= 1e-13 && worst_fd <= 1e-6 && classified,
        format!(
            "blossom vs polarization {worst_blossom:.1e} (1000 cases); derivative jumps vs finite differences {worst_fd:.1e}; classification {}",
            if classified { "consistent" } else { "inconsistent" }
        ),
    )
}

/// Product of two polynomials in monomial form, truncated to degree 3.
fn mul(a: &Cubic, b: &Cubic) -> Cubic {
    const POWERS: [(i32, i32); 10] = [
        (0, 0),
        (1, 0),
        (0, 1),
        (2, 0),
        (1, 1),
        (0, 2),
        (3, 0),
        (2, 1),
        (1, 2),
        (0, 3),
    ];
    let mut out = [0.0; 10];
    for (i, &(ax, ay)) in POWERS.iter().enumerate() {
        for (j, &(bx, by)) in POWERS.iter().enumerate() {
            let p = (ax + bx, ay + by);
            if let Some(k) = POWERS.iter().position(|&q| q == p) {
                out[k] += a.0[i] * b.0[j];
            } else {
                assert!(a.0[i] * b.0[j] == 0.0, "product exceeds degree 3");
            }
        }
    }
    Cubic(out)
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("C1 duality", c1_duality),
        ("reduced duality", reduced_duality),
        ("smoothness suites", smoothness_suites),
        ("weight identities", weight_identities),
        ("cubic reproduction", cubic_reproduction),
        (
            "partition of unity and Greville identity",
            partition_and_greville,
        ),
        ("dimension accounting", dimension_accounting),
        ("convergence", convergence),
        ("oracle equivalence", oracle_equivalence),
    ];
    let mut failures = 0;
    for (n, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Outcome::new(false, format!("panicked: {msg}"))
        });
        if !outcome.pass {
            failures += 1;
        }
        println!(
            "{} criterion {}: {name} [{:.2}s] {}",
            if outcome.pass { "PASS" } else { "FAIL" },
            n + 1,
            start.elapsed().as_secs_f64(),
            outcome.detail
        );
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failures,
        criteria.len()
    );
    if failures > 0 {
        std::process::exit(1);
    }
}
