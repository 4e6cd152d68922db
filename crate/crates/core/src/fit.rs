//! Cubic projection, discrete least-squares fitting, error norms and convergence studies.

use crate::bezier::Cubic;
use crate::c1space::{C1Space, SpaceError, SplineFunction};
use crate::mesh::{MeshError, Point2, PsRefinement, RefineOptions, SplitStrategy, Triangulation};
use crate::reduced::{ReducedError, ReducedSpace};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Reduced(#[from] ReducedError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{samples} samples for a space of dimension {dim}")]
    TooFewSamples { samples: usize, dim: usize },
    #[error("design matrix has numerical rank {rank} < {dim}; supply a ridge weight")]
    RankDeficient { rank: usize, dim: usize },
    #[error("sample {index} at ({x}, {y}) is outside the domain")]
    OutsideDomain { index: usize, x: f64, y: f64 },
    #[error("{points} points but {values} values")]
    LengthMismatch { points: usize, values: usize },
    #[error("a convergence study needs at least two levels")]
    TooFewLevels,
    #[error("unknown space {0:?}; expected c1 or reduced")]
    UnknownSpace(String),
}

/// Which spline space to work in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpaceKind {
    C1,
    #[default]
    Reduced,
}

impl FromStr for SpaceKind {
    type Err = FitError;
    fn from_str(s: &str) -> Result<Self, FitError> {
        match s {
            "c1" => Ok(SpaceKind::C1),
            "reduced" => Ok(SpaceKind::Reduced),
            other => Err(FitError::UnknownSpace(other.to_string())),
        }
    }
}

impl fmt::Display for SpaceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SpaceKind::C1 => "c1",
            SpaceKind::Reduced => "reduced",
        })
    }
}

/// Either spline space behind one interface.
#[derive(Debug, Clone)]
pub enum SplineSpace {
    C1(C1Space),
    Reduced(ReducedSpace),
}

impl SplineSpace {
    pub fn new(ps: PsRefinement, kind: SpaceKind) -> Result<Self, FitError> {
        Ok(match kind {
            SpaceKind::C1 => SplineSpace::C1(C1Space::new(ps)?),
            SpaceKind::Reduced => SplineSpace::Reduced(ReducedSpace::new(ps)?),
        })
    }

    pub fn kind(&self) -> SpaceKind {
        match self {
            SplineSpace::C1(_) => SpaceKind::C1,
            SplineSpace::Reduced(_) => SpaceKind::Reduced,
        }
    }

    pub fn refinement(&self) -> &PsRefinement {
        match self {
            SplineSpace::C1(s) => s.refinement(),
            SplineSpace::Reduced(s) => s.refinement(),
        }
    }

    pub fn c1(&self) -> &C1Space {
        match self {
            SplineSpace::C1(s) => s,
            SplineSpace::Reduced(s) => s.c1(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            SplineSpace::C1(s) => s.dim(),
            SplineSpace::Reduced(s) => s.dim(),
        }
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Result<SplineFunction<'_>, FitError> {
        Ok(match self {
            SplineSpace::C1(s) => s.synthesize(coeffs)?,
            SplineSpace::Reduced(s) => s.synthesize(coeffs)?,
        })
    }

    pub fn basis_function(&self, index: usize) -> SplineFunction<'_> {
        match self {
            SplineSpace::C1(s) => s.basis_function(index),
            SplineSpace::Reduced(s) => s.basis_function(index),
        }
    }

    /// Coefficients of a spline that lies in the space.
    pub fn analyze(&self, s: &SplineFunction) -> Result<Vec<f64>, FitError> {
        Ok(match self {
            SplineSpace::C1(space) => space.analyze(s)?.0,
            SplineSpace::Reduced(space) => space.analyze(s, true)?.0,
        })
    }

    pub fn basis_values(&self, p: Point2) -> Result<Vec<(usize, f64)>, FitError> {
        Ok(match self {
            SplineSpace::C1(s) => s.basis_values(p)?,
            SplineSpace::Reduced(s) => s.basis_values(p)?,
        })
    }

    /// Sorted macro-triangles on which basis function `index` is nonzero.
    pub fn support(&self, index: usize) -> Vec<usize> {
        match self {
            SplineSpace::C1(s) => s.support(index),
            SplineSpace::Reduced(s) => s.support(index),
        }
    }

    pub fn greville_points(&self) -> Vec<Point2> {
        match self {
            SplineSpace::C1(s) => s.greville_points(),
            SplineSpace::Reduced(s) => s.greville_points(),
        }
    }
}

/// Coefficients of a cubic polynomial in the space (exact by cubic reproduction).
pub fn project_cubic(space: &SplineSpace, p: &Cubic) -> Result<Vec<f64>, FitError> {
    let s = SplineFunction::from_cubic(space.refinement(), p);
    space.analyze(&s)
}

/// Scattered data for [`least_squares_fit`].
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FitProblem {
    pub points: Vec<Point2>,
    pub values: Vec<f64>,
    /// Tikhonov weight used only if the design matrix is rank deficient.
    pub ridge: Option<f64>,
}

impl FitProblem {
    pub fn new(points: Vec<Point2>, values: Vec<f64>) -> Self {
        FitProblem {
            points,
            values,
            ridge: None,
        }
    }

    pub fn sample(points: Vec<Point2>, f: impl Fn(Point2) -> f64) -> Self {
        let values = points.iter().map(|&p| f(p)).collect();
        FitProblem::new(points, values)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub coefficients: Vec<f64>,
    pub samples: usize,
    pub dim: usize,
    /// `sqrt(Σ r_m²)`.
    pub residual_l2: f64,
    pub residual_rms: f64,
    pub residual_max: f64,
    /// `|r_11| / |r_nn|` of the pivoted triangular factor.
    pub condition_estimate: f64,
    pub rank: usize,
    pub ridge: Option<f64>,
}

/// Relative pivot size below which a column counts as dependent.
const RANK_TOL: f64 = 1e-10;

/// Dense design matrix, one row per sample.
pub fn design_matrix(space: &SplineSpace, points: &[Point2]) -> Result<DMatrix<f64>, FitError> {
    let rows = points
        .par_iter()
        .enumerate()
        .map(|(index, &p)| {
            space.basis_values(p).map_err(|_| FitError::OutsideDomain {
                index,
                x: p.x,
                y: p.y,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut a = DMatrix::zeros(points.len(), space.dim());
    for (i, row) in rows.iter().enumerate() {
        for &(j, v) in row {
            a[(i, j)] = v;
        }
    }
    Ok(a)
}

/// Minimizes `Σ (s(p_m) - f_m)²` over the space with a column-pivoted QR factorization.
pub fn least_squares_fit(space: &SplineSpace, problem: &FitProblem) -> Result<FitResult, FitError> {
    let (n, dim) = (problem.points.len(), space.dim());
    if problem.values.len() != n {
        return Err(FitError::LengthMismatch {
            points: n,
            values: problem.values.len(),
        });
    }
    if n < dim && problem.ridge.is_none() {
        return Err(FitError::TooFewSamples { samples: n, dim });
    }
    let a = design_matrix(space, &problem.points)?;
    let b = DVector::from_column_slice(&problem.values);

    let (x, rank, condition, ridge) = match solve_pivoted(&a, &b) {
        Ok((x, condition)) => (x, dim, condition, None),
        Err(rank) => {
            let lambda = problem.ridge.ok_or(FitError::RankDeficient { rank, dim })?;
            log::warn!("design matrix rank {rank} < {dim}; using ridge weight {lambda:e}");
            let mut aug = DMatrix::zeros(n + dim, dim);
            aug.rows_mut(0, n).copy_from(&a);
            aug.rows_mut(n, dim).fill_diagonal(lambda.sqrt());
            let mut rhs = DVector::zeros(n + dim);
            rhs.rows_mut(0, n).copy_from(&b);
            let (x, condition) =
                solve_pivoted(&aug, &rhs).map_err(|rank| FitError::RankDeficient { rank, dim })?;
            (x, rank, condition, Some(lambda))
        }
    };

    let r = &a * &x - &b;
    let residual_l2 = r.norm();
    Ok(FitResult {
        coefficients: x.as_slice().to_vec(),
        samples: n,
        dim,
        residual_l2,
        residual_rms: residual_l2 / (n.max(1) as f64).sqrt(),
        residual_max: r.amax(),
        condition_estimate: condition,
        rank,
        ridge,
    })
}

/// Least-squares solution and condition estimate, or the numerical rank if deficient.
fn solve_pivoted(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(DVector<f64>, f64), usize> {
    let (m, n) = a.shape();
    if m < n {
        return Err(m);
    }
    let qr = a.clone().col_piv_qr();
    let r = qr.r();
    let diag: Vec<f64> = (0..n).map(|i| r[(i, i)].abs()).collect();
    let rmax = diag[0];
    let rank = diag.iter().take_while(|&&d| d > RANK_TOL * rmax).count();
    if rank < n {
        return Err(rank);
    }
    let mut qtb = b.clone();
    qr.q_tr_mul(&mut qtb);
    let r_top = r.view((0, 0), (n, n)).into_owned();
    let mut x = r_top
        .solve_upper_triangular(&qtb.rows(0, n).into_owned())
        .ok_or(n - 1)?;
    qr.p().inv_permute_rows(&mut x);
    Ok((x, rmax / diag[n - 1]))
}

/// 7-point rule exact for degree 5: barycentric points and weights (summing to 1).
pub fn quadrature_rule() -> [([f64; 3], f64); 7] {
    let s15 = 15f64.sqrt();
    let (a1, b1, w1) = (
        (9.0 - 2.0 * s15) / 21.0,
        (6.0 + s15) / 21.0,
        (155.0 + s15) / 1200.0,
    );
    let (a2, b2, w2) = (
        (9.0 + 2.0 * s15) / 21.0,
        (6.0 - s15) / 21.0,
        (155.0 - s15) / 1200.0,
    );
    let third = 1.0 / 3.0;
    [
        ([third, third, third], 0.225),
        ([a1, b1, b1], w1),
        ([b1, a1, b1], w1),
        ([b1, b1, a1], w1),
        ([a2, b2, b2], w2),
        ([b2, a2, b2], w2),
        ([b2, b2, a2], w2),
    ]
}

/// `∫ g` over a triangle with the 7-point rule.
pub fn integrate_triangle(tri: &[Point2; 3], g: impl Fn(Point2) -> f64) -> f64 {
    let area = 0.5 * crate::mesh::orient(tri[0], tri[1], tri[2]).abs();
    area * quadrature_rule()
        .iter()
        .map(|(l, w)| w * g(Point2::combine(tri, l)))
        .sum::<f64>()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorNorms {
    /// Maximum over quadrature points, micro-triangle corners and edge midpoints.
    pub linf: f64,
    pub l2: f64,
}

/// Errors of `s` against `f` with the 7-point rule on every micro-triangle.
pub fn error_norms(s: &SplineFunction, f: &(dyn Fn(Point2) -> f64 + Sync)) -> ErrorNorms {
    let ps = s.refinement();
    let (sq, linf) = (0..ps.num_ps_triangles())
        .into_par_iter()
        .map(|n| {
            let patch = &s.patches()[n];
            let tri = patch.triangle;
            let sq = integrate_triangle(&tri, |p| (patch.eval(p) - f(p)).powi(2));
            let mut pts: Vec<Point2> = quadrature_rule()
                .iter()
                .map(|(l, _)| Point2::combine(&tri, l))
                .collect();
            pts.extend(tri);
            pts.extend((0..3).map(|k| tri[k].lerp(tri[(k + 1) % 3], 0.5)));
            let linf = pts
                .iter()
                .map(|&p| (patch.eval(p) - f(p)).abs())
                .fold(0.0, f64::max);
            (sq, linf)
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
    ErrorNorms {
        linf,
        l2: sq.sqrt(),
    }
}

/// Jittered tensor grid over the bounding box of the mesh, restricted to the domain.
/// Points are uniformly placed inside each of the `n x n` cells.
pub fn jittered_samples(base: &Triangulation, n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (base.vertex(0), base.vertex(0));
    for v in base.vertices() {
        lo = Point2::new(lo.x.min(v.x), lo.y.min(v.y));
        hi = Point2::new(hi.x.max(v.x), hi.y.max(v.y));
    }
    let (hx, hy) = ((hi.x - lo.x) / n as f64, (hi.y - lo.y) / n as f64);
    let mut out = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let p = Point2::new(
                lo.x + (i as f64 + rng.random::<f64>()) * hx,
                lo.y + (j as f64 + rng.random::<f64>()) * hy,
            );
            if inside(base, p) {
                out.push(p);
            }
        }
    }
    out
}

fn inside(base: &Triangulation, p: Point2) -> bool {
    (0..base.num_triangles()).any(|t| {
        crate::mesh::barycentric(&base.corner_points(t), p)
            .iter()
            .all(|&l| l >= -1e-12)
    })
}

/// Settings of [`convergence_study`].
#[derive(Debug, Clone)]
pub struct StudyOptions {
    pub kind: SpaceKind,
    pub strategy: SplitStrategy,
    /// Number of uniform refinements of the base mesh at each level.
    pub levels: Vec<usize>,
    /// Samples per degree of freedom (approximately).
    pub oversampling: f64,
    pub seed: u64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            kind: SpaceKind::Reduced,
            strategy: SplitStrategy::Barycenter,
            levels: vec![1, 2, 3],
            oversampling: 6.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct LevelResult {
    pub level: usize,
    pub h: f64,
    pub triangles: usize,
    pub symmetric_triangles: usize,
    pub dofs: usize,
    pub samples: usize,
    pub linf: f64,
    pub l2: f64,
    pub residual_rms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConvergenceReport {
    pub space: SpaceKind,
    pub levels: Vec<LevelResult>,
    /// `e_l / e_{l+1}` for the L² error.
    pub l2_ratios: Vec<f64>,
    /// Observed orders `log(e_l / e_{l+1}) / log(h_l / h_{l+1})`; `None` when both
    /// errors are at round-off level.
    pub l2_orders: Vec<Option<f64>>,
    pub linf_orders: Vec<Option<f64>>,
}

/// Errors below this are treated as exact reproduction.
const ROUND_OFF: f64 = 1e-11;

fn order(e0: f64, e1: f64, h0: f64, h1: f64) -> Option<f64> {
    (e0.max(e1) > ROUND_OFF).then(|| (e0 / e1).ln() / (h0 / h1).ln())
}

/// Least-squares fits of `f` on successive uniform refinements of `base`.
pub fn convergence_study(
    f: &(dyn Fn(Point2) -> f64 + Sync),
    base: &Triangulation,
    options: &StudyOptions,
) -> Result<ConvergenceReport, FitError> {
    if options.levels.len() < 2 {
        return Err(FitError::TooFewLevels);
    }
    let mut levels = Vec::with_capacity(options.levels.len());
    for &level in &options.levels {
        let mesh = base.uniform_refine(level);
        let h = mesh.mesh_size();
        let ps = PsRefinement::new(mesh, &RefineOptions::with_strategy(options.strategy))?;
        let space = SplineSpace::new(ps, options.kind)?;
        let n = ((options.oversampling * space.dim() as f64).sqrt().ceil() as usize).max(2);
        let points = jittered_samples(
            space.refinement().base(),
            n,
            options.seed.wrapping_add(level as u64),
        );
        let fit = least_squares_fit(&space, &FitProblem::sample(points, f))?;
        let s = space.synthesize(&fit.coefficients)?;
        let err = error_norms(&s, f);
        log::info!(
            "level {level}: h = {h:.4}, dofs = {}, L2 = {:e}",
            space.dim(),
            err.l2
        );
        levels.push(LevelResult {
            level,
            h,
            triangles: space.refinement().base().num_triangles(),
            symmetric_triangles: space.refinement().num_symmetric(),
            dofs: space.dim(),
            samples: fit.samples,
            linf: err.linf,
            l2: err.l2,
            residual_rms: fit.residual_rms,
        });
    }
    let pairs = || levels.windows(2).map(|w| (&w[0], &w[1]));
    Ok(ConvergenceReport {
        space: options.kind,
        l2_ratios: pairs().map(|(a, b)| a.l2 / b.l2).collect(),
        l2_orders: pairs().map(|(a, b)| order(a.l2, b.l2, a.h, b.h)).collect(),
        linf_orders: pairs()
            .map(|(a, b)| order(a.linf, b.linf, a.h, b.h))
            .collect(),
        levels,
    })
}
