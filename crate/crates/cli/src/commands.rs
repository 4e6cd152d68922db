use crate::args::*;
use crate::input::{
    load_refinement, load_spline, output, read_points, read_samples, write_json_to,
};
use anyhow::{anyhow, bail, Result};
use pspline::bezier::MULTI_INDICES;
use pspline::c1space::{interior_ps_edges, PsEdge, PsEdgeKind};
use pspline::fit::{
    convergence_study, least_squares_fit, ConvergenceReport, FitProblem, SplineSpace, StudyOptions,
};
use pspline::io::{PsFile, SplineFile};
use pspline::mesh::generate;
use pspline::reduced::{dimension_report, DimensionReport};
use pspline::{CubicPatch, Point2, PsRefinement, SpaceKind, SplineFunction};
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;

/// A run that completed but whose result violates a checked property.
#[derive(Debug)]
pub struct ValidationFailure {
    pub message: String,
    pub details: serde_json::Value,
}

impl fmt::Display for ValidationFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for ValidationFailure {}

fn fail(message: String, details: impl Serialize) -> anyhow::Error {
    ValidationFailure {
        message,
        details: serde_json::to_value(details).unwrap_or_default(),
    }
    .into()
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Refine(a) => refine(a),
        Command::Basis(a) => basis(a),
        Command::Check(a) => check(a),
        Command::Fit(a) => fit(a),
        Command::Eval(a) => eval(a),
        Command::Convergence(a) => convergence(a),
        Command::Export(a) => export(a),
    }
}

fn refine(args: RefineArgs) -> Result<()> {
    let ps = load_refinement(&args.mesh.mesh, args.mesh.split)?;
    log::info!(
        "{} triangles, {} symmetric, {} refinement vertices",
        ps.base().num_triangles(),
        ps.num_symmetric(),
        ps.num_ps_vertices()
    );
    write_json_to(&args.out, &PsFile::from_refinement(&ps))
}

#[derive(Serialize)]
struct Duality {
    max_deviation: f64,
    max_diagonal_deviation: f64,
    max_off_diagonal: f64,
    tol: f64,
}

#[derive(Serialize)]
struct FunctionalEntry {
    index: usize,
    functional: String,
    control_point: Point2,
}

#[derive(Serialize)]
struct BasisSummary {
    space: SpaceKind,
    dim: usize,
    dimension_report: DimensionReport,
    duality: Duality,
    max_local_condition: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    functionals: Option<Vec<FunctionalEntry>>,
}

/// Deviation of `[β_a(B_b)]` from the identity, column by column.
fn duality(space: &SplineSpace) -> (f64, f64) {
    (0..space.dim())
        .into_par_iter()
        .map(|b| {
            let s = space.basis_function(b);
            let column = match space {
                SplineSpace::C1(c) => c.analyze_unchecked(&s).0,
                SplineSpace::Reduced(r) => {
                    r.analyze(&s, false)
                        .expect("basis functions lie in the space")
                        .0
                }
            };
            column
                .iter()
                .enumerate()
                .fold((0.0f64, 0.0f64), |(diag, off), (a, v)| {
                    if a == b {
                        (diag.max((v - 1.0).abs()), off)
                    } else {
                        (diag, off.max(v.abs()))
                    }
                })
        })
        .reduce(|| (0.0, 0.0), |x, y| (x.0.max(y.0), x.1.max(y.1)))
}

fn basis(args: BasisArgs) -> Result<()> {
    let ps = load_refinement(&args.mesh.mesh, args.mesh.split)?;
    let report = dimension_report(&ps);
    let space = SplineSpace::new(ps, args.space)?;
    let (diag, off) = duality(&space);
    let functionals = args.report.then(|| {
        let q = space.greville_points();
        (0..space.dim())
            .map(|i| FunctionalEntry {
                index: i,
                functional: match &space {
                    SplineSpace::C1(c) => format!("{:?}", c.functional(i)),
                    SplineSpace::Reduced(r) => format!("{:?}", r.functional(i)),
                },
                control_point: q[i],
            })
            .collect()
    });
    let summary = BasisSummary {
        space: args.space,
        dim: space.dim(),
        dimension_report: report,
        duality: Duality {
            max_deviation: diag.max(off),
            max_diagonal_deviation: diag,
            max_off_diagonal: off,
            tol: args.tol,
        },
        max_local_condition: space.c1().max_condition(),
        functionals,
    };
    write_json_to(&args.out, &summary)?;
    if summary.duality.max_deviation > args.tol {
        return Err(fail(
            format!(
                "duality deviation {:e} exceeds {:e}",
                summary.duality.max_deviation, args.tol
            ),
            &summary.duality,
        ));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
struct EdgeRow {
    edge_id: usize,
    order: u8,
    max_residual: f64,
    kind: &'static str,
    macro_a: usize,
    macro_b: usize,
    /// Whether the space guarantees this order of smoothness across the edge.
    required: bool,
}

#[derive(Serialize)]
struct CheckSummary {
    space: SpaceKind,
    mode: &'static str,
    order: u8,
    tol: f64,
    functions: usize,
    edges: usize,
    max_split_to_edge: f64,
    max_split_to_corner_symmetric: f64,
    max_split_to_corner_nonsymmetric: f64,
    max_macro_edge: f64,
    max_required: f64,
    failures: usize,
}

fn required(space: SpaceKind, kind: PsEdgeKind, symmetric: bool, order: u8) -> bool {
    if order < 2 {
        return true;
    }
    match (space, kind) {
        (SpaceKind::Reduced, PsEdgeKind::SplitToEdge) => true,
        (SpaceKind::Reduced, PsEdgeKind::SplitToCorner) => symmetric,
        _ => false,
    }
}

/// Relative residual of `s` across each listed edge, or `None` where not checked.
fn edge_residuals(
    s: &SplineFunction,
    edges: &[PsEdge],
    order: u8,
    support: Option<&[usize]>,
) -> Vec<Option<f64>> {
    let scale = s.max_abs_coeff().max(f64::MIN_POSITIVE);
    edges
        .iter()
        .map(|&(_, _, (ta, ma), (tb, mb))| {
            if let Some(sup) = support {
                if sup.binary_search(&ta).is_err() && sup.binary_search(&tb).is_err() {
                    return None;
                }
            }
            let (pa, pb) = (s.patch(ta, ma), s.patch(tb, mb));
            let shared: Vec<Point2> = pa
                .triangle
                .iter()
                .filter(|p| pb.triangle.contains(p))
                .copied()
                .collect();
            let r = pspline::check_smoothness(pa, pb, (shared[0], shared[1]), order)
                .expect("refinement edges are shared");
            Some(r.max_residual / scale)
        })
        .collect()
}

fn merge(a: Vec<f64>, b: Vec<f64>) -> Vec<f64> {
    a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect()
}

fn check(args: CheckArgs) -> Result<()> {
    let (space, mode, coefficients) = match &args.spline {
        Some(path) => {
            let (file, ps) = load_spline(path)?;
            (
                SplineSpace::new(ps, file.space)?,
                "spline",
                Some(file.coefficients),
            )
        }
        None => {
            let mesh = args
                .mesh
                .as_ref()
                .ok_or_else(|| anyhow!("--mesh or --spline is required"))?;
            (
                SplineSpace::new(load_refinement(mesh, args.split)?, args.space)?,
                "basis",
                None,
            )
        }
    };
    let ps = space.refinement();
    let edges = interior_ps_edges(ps);
    let zero = || vec![0.0; edges.len()];
    let (residuals, functions) = match &coefficients {
        Some(c) => {
            let s = space.synthesize(c)?;
            (
                edge_residuals(&s, &edges, args.order, None)
                    .into_iter()
                    .map(|r| r.unwrap_or(0.0))
                    .collect(),
                1,
            )
        }
        None => {
            let r = (0..space.dim())
                .into_par_iter()
                .map(|b| {
                    let support = space.support(b);
                    edge_residuals(&space.basis_function(b), &edges, args.order, Some(&support))
                        .into_iter()
                        .map(|r| r.unwrap_or(0.0))
                        .collect::<Vec<f64>>()
                })
                .reduce(zero, merge);
            (r, space.dim())
        }
    };

    let rows: Vec<EdgeRow> = edges
        .iter()
        .zip(&residuals)
        .map(|(&(id, kind, (ta, _), (tb, _)), &r)| EdgeRow {
            edge_id: id,
            order: args.order,
            max_residual: r,
            kind: kind.as_str(),
            macro_a: ta,
            macro_b: tb,
            required: required(space.kind(), kind, ps.is_symmetric(ta), args.order),
        })
        .collect();
    let mut writer = csv::Writer::from_writer(output(&args.out)?);
    for row in &rows {
        writer.serialize(row)?;
    }
    writer.flush()?;

    let max_where = |f: &dyn Fn(&EdgeRow, PsEdgeKind) -> bool| {
        rows.iter()
            .zip(&edges)
            .filter(|(r, e)| f(r, e.1))
            .map(|(r, _)| r.max_residual)
            .fold(0.0, f64::max)
    };
    let summary = CheckSummary {
        space: space.kind(),
        mode,
        order: args.order,
        tol: args.tol,
        functions,
        edges: rows.len(),
        max_split_to_edge: max_where(&|_, k| k == PsEdgeKind::SplitToEdge),
        max_split_to_corner_symmetric: max_where(&|r, k| {
            k == PsEdgeKind::SplitToCorner && ps.is_symmetric(r.macro_a)
        }),
        max_split_to_corner_nonsymmetric: max_where(&|r, k| {
            k == PsEdgeKind::SplitToCorner && !ps.is_symmetric(r.macro_a)
        }),
        max_macro_edge: max_where(&|_, k| k == PsEdgeKind::MacroEdge),
        max_required: max_where(&|r, _| r.required),
        failures: rows
            .iter()
            .filter(|r| r.required && r.max_residual > args.tol)
            .count(),
    };
    if let Some(path) = &args.report {
        write_json_to(&Some(path.clone()), &summary)?;
    }
    log::info!(
        "max required residual {:e} over {} edges",
        summary.max_required,
        summary.edges
    );
    if summary.failures > 0 {
        return Err(fail(
            format!(
                "{} edges violate C{} smoothness (max residual {:e}, tol {:e})",
                summary.failures, args.order, summary.max_required, args.tol
            ),
            &summary,
        ));
    }
    Ok(())
}

#[derive(Serialize)]
struct FitReport {
    space: SpaceKind,
    dim: usize,
    triangles: usize,
    symmetric_triangles: usize,
    samples: usize,
    residual_l2: f64,
    residual_rms: f64,
    residual_max: f64,
    condition_estimate: f64,
    rank: usize,
    ridge: Option<f64>,
}

fn patches_of(s: &SplineFunction) -> Vec<CubicPatch> {
    s.patches().to_vec()
}

fn fit(args: FitArgs) -> Result<()> {
    let ps = load_refinement(&args.mesh.mesh, args.mesh.split)?;
    let (points, values) = read_samples(&args.data)?;
    let space = SplineSpace::new(ps, args.space)?;
    let mut problem = FitProblem::new(points, values);
    problem.ridge = args.ridge;
    let result = least_squares_fit(&space, &problem)?;
    let ps = space.refinement();
    let patches = if args.patches {
        Some(patches_of(&space.synthesize(&result.coefficients)?))
    } else {
        None
    };
    let report = FitReport {
        space: args.space,
        dim: result.dim,
        triangles: ps.base().num_triangles(),
        symmetric_triangles: ps.num_symmetric(),
        samples: result.samples,
        residual_l2: result.residual_l2,
        residual_rms: result.residual_rms,
        residual_max: result.residual_max,
        condition_estimate: result.condition_estimate,
        rank: result.rank,
        ridge: result.ridge,
    };
    let file = SplineFile {
        space: args.space,
        mesh: PsFile::from_refinement(ps),
        coefficients: result.coefficients,
        patches,
    };
    write_json_to(&args.out, &file)?;
    match (&args.report, &args.out) {
        (Some(path), _) => write_json_to(&Some(path.clone()), &report)?,
        (None, Some(_)) => write_json_to(&None, &report)?,
        (None, None) => eprintln!("{}", serde_json::to_string(&report)?),
    }
    Ok(())
}

fn grid_points(ps: &PsRefinement, n: usize) -> Vec<Point2> {
    let v = ps.base().vertices();
    let (mut lo, mut hi) = (v[0], v[0]);
    for p in v {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let n = n.max(2);
    let step = |a: f64, b: f64, i: usize| a + (b - a) * i as f64 / (n - 1) as f64;
    (0..n)
        .flat_map(|j| (0..n).map(move |i| Point2::new(step(lo.x, hi.x, i), step(lo.y, hi.y, j))))
        .collect()
}

#[derive(Serialize)]
struct EvalRow {
    x: f64,
    y: f64,
    value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dx: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dy: Option<f64>,
}

fn eval(args: EvalArgs) -> Result<()> {
    let (file, ps) = load_spline(&args.spline)?;
    let space = SplineSpace::new(ps, file.space)?;
    let s = space.synthesize(&file.coefficients)?;
    let explicit = args.points.is_some();
    let points = match &args.points {
        Some(path) => read_points(path)?,
        None => grid_points(space.refinement(), args.grid),
    };
    let mut writer = csv::Writer::from_writer(output(&args.out)?);
    for (n, p) in points.into_iter().enumerate() {
        let value = match s.eval(p) {
            Ok(v) => v,
            // grid points outside a non-convex domain are skipped
            Err(_) if !explicit => continue,
            Err(_) => bail!("point {n} at ({}, {}) is outside the domain", p.x, p.y),
        };
        let (dx, dy) = if args.gradient {
            let g = s.gradient(p)?;
            (Some(g[0]), Some(g[1]))
        } else {
            (None, None)
        };
        writer.serialize(EvalRow {
            x: p.x,
            y: p.y,
            value,
            dx,
            dy,
        })?;
    }
    writer.flush()?;
    Ok(())
}

fn test_function(f: TestFunction) -> fn(Point2) -> f64 {
    use std::f64::consts::PI;
    match f {
        TestFunction::Sinsin => |p| (PI * p.x).sin() * (PI * p.y).sin(),
        TestFunction::Franke => |p| {
            let (x, y) = (9.0 * p.x, 9.0 * p.y);
            0.75 * (-((x - 2.0).powi(2) + (y - 2.0).powi(2)) / 4.0).exp()
                + 0.75 * (-(x + 1.0).powi(2) / 49.0 - (y + 1.0) / 10.0).exp()
                + 0.5 * (-((x - 7.0).powi(2) + (y - 3.0).powi(2)) / 4.0).exp()
                - 0.2 * (-(x - 4.0).powi(2) - (y - 7.0).powi(2)).exp()
        },
        TestFunction::Cubic => |p| p.x * p.x * p.y - 2.0 * p.y.powi(3),
    }
}

#[derive(Serialize)]
struct LevelRow {
    level: usize,
    h: f64,
    triangles: usize,
    symmetric_triangles: usize,
    dofs: usize,
    samples: usize,
    linf: f64,
    l2: f64,
    l2_ratio: Option<f64>,
    l2_order: Option<f64>,
    linf_order: Option<f64>,
}

fn level_rows(report: &ConvergenceReport) -> Vec<LevelRow> {
    report
        .levels
        .iter()
        .enumerate()
        .map(|(n, l)| {
            let prev = n.checked_sub(1);
            LevelRow {
                level: l.level,
                h: l.h,
                triangles: l.triangles,
                symmetric_triangles: l.symmetric_triangles,
                dofs: l.dofs,
                samples: l.samples,
                linf: l.linf,
                l2: l.l2,
                l2_ratio: prev.map(|p| report.l2_ratios[p]),
                l2_order: prev.and_then(|p| report.l2_orders[p]),
                linf_order: prev.and_then(|p| report.linf_orders[p]),
            }
        })
        .collect()
}

fn convergence(args: ConvergenceArgs) -> Result<()> {
    let base = match &args.mesh {
        Some(path) => pspline::io::read_mesh(path)?,
        None => generate::unit_square(),
    };
    let options = StudyOptions {
        kind: args.space,
        strategy: args.split,
        levels: args.levels.clone(),
        oversampling: args.oversampling,
        seed: args.seed,
    };
    let f = test_function(args.function);
    let report = convergence_study(&f, &base, &options)?;
    let mut writer = csv::Writer::from_writer(output(&args.out)?);
    for row in level_rows(&report) {
        writer.serialize(row)?;
    }
    writer.flush()?;
    if let Some(path) = &args.report {
        write_json_to(&Some(path.clone()), &report)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct NetRow {
    #[serde(rename = "macro")]
    macro_triangle: usize,
    micro: usize,
    i: usize,
    j: usize,
    k: usize,
    x: f64,
    y: f64,
    coefficient: f64,
}

fn export(args: ExportArgs) -> Result<()> {
    let patches: Vec<CubicPatch> = match (&args.spline, &args.mesh, args.basis) {
        (Some(path), _, _) => {
            let (file, ps) = load_spline(path)?;
            let space = SplineSpace::new(ps, file.space)?;
            patches_of(&space.synthesize(&file.coefficients)?)
        }
        (None, Some(mesh), Some(index)) => {
            let space = SplineSpace::new(load_refinement(mesh, args.split)?, args.space)?;
            if index >= space.dim() {
                bail!(
                    "basis index {index} out of range (dimension {})",
                    space.dim()
                );
            }
            patches_of(&space.basis_function(index))
        }
        _ => bail!("export needs --spline, or --mesh with --basis"),
    };
    match args.format {
        ExportFormat::Json => write_json_to(&args.out, &patches),
        ExportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(output(&args.out)?);
            for (n, patch) in patches.iter().enumerate() {
                let [a, b, c] = patch.triangle;
                for (alpha, &coefficient) in MULTI_INDICES.iter().zip(&patch.coeffs) {
                    let p = Point2::combine(&[a, b, c], &alpha.map(|x| x as f64 / 3.0));
                    writer.serialize(NetRow {
                        macro_triangle: n / 6,
                        micro: n % 6,
                        i: alpha[0],
                        j: alpha[1],
                        k: alpha[2],
                        x: p.x,
                        y: p.y,
                        coefficient,
                    })?;
                }
            }
            writer.flush()?;
            Ok(())
        }
    }
}
