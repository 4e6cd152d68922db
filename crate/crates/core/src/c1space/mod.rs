//! The full C¹ cubic spline space on a Powell–Sabin refinement, represented through
//! its dual functionals.
//!
//! Coefficients live in the canonical functional order: all vertex functionals
//! (by vertex, then `r`), then micro-triangle functionals (by macro-triangle, then
//! the micro cycle of [`MICRO_LABELS`]), then boundary half-edge functionals (by
//! sorted boundary edge, the half at the smaller vertex first).

mod local;
mod verify;

pub use local::{LocalMap, LOCAL_DOFS, MAX_CONDITION};
pub(crate) use verify::shared_corners;
pub use verify::{
    interior_ps_edges, verify_global_smoothness, EdgeSmoothness, GlobalSmoothnessReport, PsEdge,
    PsEdgeKind,
};

use crate::bezier::{bernstein_values, CubicPatch};
use crate::mesh::{barycentric, micro_label, MeshError, Point2, PsRefinement, MICRO_LABELS};
use local::LocalFunctionals;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use smallvec::{smallvec, SmallVec};
use std::ops::{Deref, DerefMut};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpaceError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("local system on triangle {triangle} is ill-conditioned (condition {condition:e})")]
    IllConditioned { triangle: usize, condition: f64 },
    #[error("local solve on triangle {triangle} failed: {reason}")]
    LocalSolve { triangle: usize, reason: String },
    #[error("expected {expected} coefficients, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("spline is not C1 (max residual {residual:e}); vertex functionals are ill-defined")]
    NotC1 { residual: f64 },
    #[error("point ({x}, {y}) is outside the domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("functional {0} does not belong to this space")]
    UnknownFunctional(String),
    #[error("spline has {got} patches but the refinement has {expected} micro-triangles")]
    RefinementMismatch { expected: usize, got: usize },
}

/// A dual functional of the C¹ space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum C1Functional {
    /// `β^v_{i,r}`, `r ∈ {0, 1, 2}`.
    Vertex { vertex: usize, r: usize },
    /// `β^t` of micro-triangle `micro` of macro-triangle `triangle`.
    Triangle { triangle: usize, micro: usize },
    /// `β^e` of a boundary half-edge; `half = 0` is the half at the smaller vertex.
    BoundaryEdge { edge: usize, half: usize },
}

/// Coefficients indexed by the dual functionals of a space, in canonical order.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DualVector(pub Vec<f64>);

impl Deref for DualVector {
    type Target = Vec<f64>;
    fn deref(&self) -> &Vec<f64> {
        &self.0
    }
}

impl DerefMut for DualVector {
    fn deref_mut(&mut self) -> &mut Vec<f64> {
        &mut self.0
    }
}

impl From<Vec<f64>> for DualVector {
    fn from(v: Vec<f64>) -> Self {
        DualVector(v)
    }
}

/// A piecewise cubic on a refinement: one patch per micro-triangle (`6 t + m`).
#[derive(Debug, Clone)]
pub struct SplineFunction<'a> {
    ps: &'a PsRefinement,
    patches: Vec<CubicPatch>,
}

impl<'a> SplineFunction<'a> {
    pub fn new(ps: &'a PsRefinement, patches: Vec<CubicPatch>) -> Result<Self, SpaceError> {
        let expected = ps.num_ps_triangles();
        if patches.len() != expected {
            return Err(SpaceError::RefinementMismatch {
                expected,
                got: patches.len(),
            });
        }
        Ok(SplineFunction { ps, patches })
    }

    /// The restriction of a global cubic to every micro-triangle.
    pub fn from_cubic(ps: &'a PsRefinement, p: &crate::bezier::Cubic) -> Self {
        let patches = (0..ps.base().num_triangles())
            .flat_map(|t| (0..6).map(move |m| (t, m)))
            .map(|(t, m)| CubicPatch::from_polynomial(p, ps.micro_triangle(t, m)))
            .collect();
        SplineFunction { ps, patches }
    }

    pub fn refinement(&self) -> &'a PsRefinement {
        self.ps
    }

    pub fn patches(&self) -> &[CubicPatch] {
        &self.patches
    }

    pub fn patch(&self, t: usize, m: usize) -> &CubicPatch {
        &self.patches[6 * t + m]
    }

    /// Macro and micro triangle containing `p` (lowest index on ties).
    pub fn locate(&self, p: Point2) -> Option<(usize, usize)> {
        locate(self.ps, p)
    }

    pub fn eval(&self, p: Point2) -> Result<f64, SpaceError> {
        let (t, m) = self
            .locate(p)
            .ok_or(SpaceError::OutsideDomain { x: p.x, y: p.y })?;
        Ok(self.patch(t, m).eval(p))
    }

    pub fn gradient(&self, p: Point2) -> Result<[f64; 2], SpaceError> {
        let (t, m) = self
            .locate(p)
            .ok_or(SpaceError::OutsideDomain { x: p.x, y: p.y })?;
        Ok(self.patch(t, m).gradient(p))
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.patches
            .iter()
            .map(CubicPatch::max_abs_coeff)
            .fold(0.0, f64::max)
    }

    /// `Σ w_n s_n` over splines on the same refinement.
    pub fn linear_combination(ps: &'a PsRefinement, terms: &[(f64, &SplineFunction)]) -> Self {
        let mut patches: Vec<CubicPatch> = (0..ps.num_ps_triangles())
            .map(|n| CubicPatch::zero(ps.micro_triangle(n / 6, n % 6)))
            .collect();
        for (w, s) in terms {
            for (acc, p) in patches.iter_mut().zip(&s.patches) {
                for n in 0..10 {
                    acc.coeffs[n] += w * p.coeffs[n];
                }
            }
        }
        SplineFunction { ps, patches }
    }
}

/// Global coefficients and weights that determine one local dof.
pub(crate) type Gather = SmallVec<[(usize, f64); 2]>;

const LOCATE_TOL: f64 = 1e-12;

pub(crate) fn locate(ps: &PsRefinement, p: Point2) -> Option<(usize, usize)> {
    let base = ps.base();
    for t in 0..base.num_triangles() {
        let bc = barycentric(&base.corner_points(t), p);
        if bc.iter().all(|&l| l >= -LOCATE_TOL) {
            for m in 0..6 {
                let bm = barycentric(&ps.micro_triangle(t, m), p);
                if bm.iter().all(|&l| l >= -LOCATE_TOL) {
                    return Some((t, m));
                }
            }
        }
    }
    None
}

/// Scale factor applied to the q-triangle circumradius relative to the farthest
/// mandated point; the inradius is half of it, so containment has a 30% margin.
pub const Q_TRIANGLE_RADIUS_FACTOR: f64 = 2.6;

/// The C¹ cubic Powell–Sabin space with its dual basis.
#[derive(Debug, Clone)]
pub struct C1Space {
    ps: PsRefinement,
    q_triangles: Vec<[Point2; 3]>,
    local: Vec<LocalMap>,
    boundary_rank: Vec<Option<usize>>,
    boundary_edges: Vec<usize>,
    vertex_triangles: Vec<Vec<usize>>,
}

impl C1Space {
    pub fn new(ps: PsRefinement) -> Result<Self, SpaceError> {
        let q_triangles = choose_vertex_triangles(&ps);
        let local = (0..ps.base().num_triangles())
            .into_par_iter()
            .map(|t| LocalMap::build(&ps, t, &q_triangles))
            .collect::<Result<Vec<_>, _>>()?;
        let base = ps.base();
        let boundary_rank = base.boundary_edge_rank();
        let boundary_edges = (0..base.num_edges())
            .filter(|&e| base.is_boundary_edge(e))
            .collect();
        let mut vertex_triangles = vec![Vec::new(); base.num_vertices()];
        for t in 0..base.num_triangles() {
            for v in base.corners(t) {
                vertex_triangles[v].push(t);
            }
        }
        Ok(C1Space {
            ps,
            q_triangles,
            local,
            boundary_rank,
            boundary_edges,
            vertex_triangles,
        })
    }

    pub fn refinement(&self) -> &PsRefinement {
        &self.ps
    }

    pub fn q_triangle(&self, v: usize) -> &[Point2; 3] {
        &self.q_triangles[v]
    }

    pub fn q_triangles(&self) -> &[[Point2; 3]] {
        &self.q_triangles
    }

    pub fn local_map(&self, t: usize) -> &LocalMap {
        &self.local[t]
    }

    /// Worst local condition number over all macro-triangles.
    pub fn max_condition(&self) -> f64 {
        self.local.iter().map(|l| l.condition).fold(0.0, f64::max)
    }

    /// `3|V| + 6|T| + 2|E^b|`, which equals `3|V| + 4|E|`.
    pub fn dim(&self) -> usize {
        let b = self.ps.base();
        3 * b.num_vertices() + 6 * b.num_triangles() + 2 * self.boundary_edges.len()
    }

    fn triangle_offset(&self) -> usize {
        3 * self.ps.base().num_vertices()
    }

    fn edge_offset(&self) -> usize {
        self.triangle_offset() + 6 * self.ps.base().num_triangles()
    }

    pub fn index_of(&self, f: C1Functional) -> Option<usize> {
        let b = self.ps.base();
        match f {
            C1Functional::Vertex { vertex, r } => {
                (vertex < b.num_vertices() && r < 3).then(|| 3 * vertex + r)
            }
            C1Functional::Triangle { triangle, micro } => (triangle < b.num_triangles()
                && micro < 6)
                .then(|| self.triangle_offset() + 6 * triangle + micro),
            C1Functional::BoundaryEdge { edge, half } => {
                let rank = (*self.boundary_rank.get(edge)?)?;
                (half < 2).then(|| self.edge_offset() + 2 * rank + half)
            }
        }
    }

    pub fn functional(&self, index: usize) -> C1Functional {
        if index < self.triangle_offset() {
            C1Functional::Vertex {
                vertex: index / 3,
                r: index % 3,
            }
        } else if index < self.edge_offset() {
            let n = index - self.triangle_offset();
            C1Functional::Triangle {
                triangle: n / 6,
                micro: n % 6,
            }
        } else {
            let n = index - self.edge_offset();
            C1Functional::BoundaryEdge {
                edge: self.boundary_edges[n / 2],
                half: n % 2,
            }
        }
    }

    pub fn functionals(&self) -> impl Iterator<Item = C1Functional> + '_ {
        (0..self.dim()).map(|n| self.functional(n))
    }

    /// Micro-triangle index in `t` whose label starts with global vertex `a`
    /// followed by global vertex `b`.
    pub(crate) fn micro_for(&self, t: usize, a: usize, b: usize) -> usize {
        let corners = self.ps.base().corners(t);
        let pa = corners.iter().position(|&v| v == a).expect("a is a corner");
        let pb = corners.iter().position(|&v| v == b).expect("b is a corner");
        micro_label(pa, pb)
    }

    /// `(macro, micro, [p1, p2, p3])`: where and at which arguments a functional
    /// evaluates the blossom.
    pub fn functional_args(&self, f: C1Functional) -> (usize, usize, [Point2; 3]) {
        let b = self.ps.base();
        match f {
            C1Functional::Vertex { vertex, r } => {
                let t = self.vertex_triangles[vertex][0];
                let corners = b.corners(t);
                let p = corners.iter().position(|&v| v == vertex).expect("incident");
                let v = b.vertex(vertex);
                let q = self.q_triangles[vertex][r];
                (t, 2 * p, [v, v, v + (q - v) * 3.0])
            }
            C1Functional::Triangle { triangle, micro } => {
                let corners = b.corner_points(triangle);
                let l = MICRO_LABELS[micro];
                (
                    triangle,
                    micro,
                    [
                        corners[l[0]],
                        corners[l[1]],
                        self.ps.triangle_split_point(triangle),
                    ],
                )
            }
            C1Functional::BoundaryEdge { edge, half } => {
                let [lo, hi] = b.edges()[edge];
                let (a, c) = if half == 0 { (lo, hi) } else { (hi, lo) };
                let (t, _) = b.edge_triangles(edge);
                let m = self.micro_for(t, a, c);
                (
                    t,
                    m,
                    [b.vertex(a), b.vertex(c), self.ps.edge_split_point(edge)],
                )
            }
        }
    }

    /// Control points: the mean of each functional's blossom arguments, so that
    /// `Σ q_b B_b(p) = p`.
    pub fn greville_points(&self) -> Vec<Point2> {
        self.functionals()
            .map(|f| {
                let (_, _, [a, b, c]) = self.functional_args(f);
                (a + b + c) * (1.0 / 3.0)
            })
            .collect()
    }

    /// Applies a dual functional to a spline.
    pub fn apply_dual(&self, s: &SplineFunction, f: C1Functional) -> Result<f64, SpaceError> {
        self.check_refinement(s)?;
        self.index_of(f)
            .ok_or_else(|| SpaceError::UnknownFunctional(format!("{f:?}")))?;
        let (t, m, [x, y, z]) = self.functional_args(f);
        Ok(s.patch(t, m).blossom(x, y, z))
    }

    fn check_refinement(&self, s: &SplineFunction) -> Result<(), SpaceError> {
        if !std::ptr::eq(s.ps, &self.ps) && *s.ps != self.ps {
            return Err(SpaceError::UnknownFunctional(
                "spline lives on a different refinement".into(),
            ));
        }
        Ok(())
    }

    /// Global coefficients (with weights) that determine local dof `d` of triangle `t`.
    pub(crate) fn gather(&self, t: usize, d: usize) -> Gather {
        let base = self.ps.base();
        let to = self.triangle_offset();
        if d < 9 {
            let v = base.corners(t)[d / 3];
            return smallvec![(3 * v + d % 3, 1.0)];
        }
        if d < 15 {
            return smallvec![(to + 6 * t + (d - 9), 1.0)];
        }
        let m = d - 15;
        let e = base.triangle_edges(t)[m / 2];
        let [a, c, _] = self.ps.micro_vertices(t, m);
        match base.neighbor(t, e) {
            None => {
                let half = usize::from(a > c);
                let rank = self.boundary_rank[e].expect("boundary");
                smallvec![(self.edge_offset() + 2 * rank + half, 1.0)]
            }
            Some(t2) => {
                let mu = self.ps.mu_from(e, t).expect("interior edge");
                let m2 = self.micro_for(t2, a, c);
                smallvec![(to + 6 * t + m, 1.0 - mu), (to + 6 * t2 + m2, mu)]
            }
        }
    }

    /// Local dual values of macro-triangle `t` from global coefficients.
    pub fn local_values(&self, t: usize, coeffs: &[f64]) -> [f64; LOCAL_DOFS] {
        std::array::from_fn(|d| self.gather(t, d).iter().map(|(i, w)| w * coeffs[*i]).sum())
    }

    /// The six BB patches of macro-triangle `t` from its 21 local values.
    pub fn local_dual_to_bb(&self, t: usize, local: &[f64; LOCAL_DOFS]) -> [CubicPatch; 6] {
        self.local[t].patches(local)
    }

    /// Evaluates the 21 local functionals of triangle `t` on a spline (the inverse of
    /// [`Self::local_dual_to_bb`]).
    pub fn local_duals_of(&self, t: usize, patches: &[CubicPatch]) -> [f64; LOCAL_DOFS] {
        let lf = LocalFunctionals::new(&self.ps, t, &self.q_triangles);
        std::array::from_fn(|d| {
            let (m, [x, y, z]) = lf.args[d];
            patches[m].blossom(x, y, z)
        })
    }

    /// The spline with the given coefficients in the dual basis.
    pub fn synthesize(&self, coeffs: &[f64]) -> Result<SplineFunction<'_>, SpaceError> {
        if coeffs.len() != self.dim() {
            return Err(SpaceError::DimensionMismatch {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        let patches: Vec<CubicPatch> = (0..self.ps.base().num_triangles())
            .into_par_iter()
            .flat_map_iter(|t| self.local_dual_to_bb(t, &self.local_values(t, coeffs)))
            .collect();
        Ok(SplineFunction {
            ps: &self.ps,
            patches,
        })
    }

    /// Macro-triangles on which the basis function of coefficient `index` can be nonzero.
    pub fn support(&self, index: usize) -> Vec<usize> {
        let base = self.ps.base();
        let mut out = match self.functional(index) {
            C1Functional::Vertex { vertex, .. } => self.vertex_triangles[vertex].clone(),
            C1Functional::Triangle { triangle, micro } => {
                let e = base.triangle_edges(triangle)[micro / 2];
                let mut v = vec![triangle];
                v.extend(base.neighbor(triangle, e));
                v
            }
            C1Functional::BoundaryEdge { edge, .. } => vec![base.edge_triangles(edge).0],
        };
        out.sort_unstable();
        out
    }

    /// Synthesizes a sparse coefficient vector, touching only the affected macro-triangles.
    pub fn synthesize_sparse(
        &self,
        entries: &[(usize, f64)],
    ) -> Result<SplineFunction<'_>, SpaceError> {
        let dim = self.dim();
        if let Some(&(i, _)) = entries.iter().find(|(i, _)| *i >= dim) {
            return Err(SpaceError::DimensionMismatch {
                expected: dim,
                got: i + 1,
            });
        }
        let mut coeffs = vec![0.0; dim];
        let mut touched: Vec<usize> = Vec::new();
        for &(i, w) in entries {
            coeffs[i] += w;
            touched.extend(self.support(i));
        }
        touched.sort_unstable();
        touched.dedup();
        let mut patches: Vec<CubicPatch> = (0..self.ps.num_ps_triangles())
            .map(|n| CubicPatch::zero(self.local[n / 6].micro_triangles[n % 6]))
            .collect();
        for t in touched {
            let local = self.local_dual_to_bb(t, &self.local_values(t, &coeffs));
            patches[6 * t..6 * t + 6].copy_from_slice(&local);
        }
        Ok(SplineFunction {
            ps: &self.ps,
            patches,
        })
    }

    /// The basis function dual to coefficient `index`.
    pub fn basis_function(&self, index: usize) -> SplineFunction<'_> {
        self.synthesize_sparse(&[(index, 1.0)])
            .expect("index in range")
    }

    /// Applies every functional of the space to a C¹ spline.
    pub fn analyze(&self, s: &SplineFunction) -> Result<DualVector, SpaceError> {
        self.check_refinement(s)?;
        let report = self.verify_global_smoothness(s, 1);
        if !report.passes(crate::bezier::SMOOTHNESS_TOL) {
            return Err(SpaceError::NotC1 {
                residual: report.max_residual,
            });
        }
        Ok(self.analyze_unchecked(s))
    }

    /// [`Self::analyze`] without the smoothness precondition check.
    pub fn analyze_unchecked(&self, s: &SplineFunction) -> DualVector {
        DualVector(
            (0..self.dim())
                .map(|n| {
                    let (t, m, [x, y, z]) = self.functional_args(self.functional(n));
                    s.patch(t, m).blossom(x, y, z)
                })
                .collect(),
        )
    }

    /// Values of all basis functions at `p` as a sparse row `(index, value)`.
    pub fn basis_values(&self, p: Point2) -> Result<Vec<(usize, f64)>, SpaceError> {
        let (t, m) = locate(&self.ps, p).ok_or(SpaceError::OutsideDomain { x: p.x, y: p.y })?;
        Ok(self.basis_values_in(t, m, p))
    }

    /// Like [`Self::basis_values`] with the micro-triangle already known.
    pub fn basis_values_in(&self, t: usize, m: usize, p: Point2) -> Vec<(usize, f64)> {
        let map = &self.local[t];
        let bern = bernstein_values(map.micro_triangle(m), p);
        let weights = map.value_weights(m, &bern);
        let mut row: Vec<(usize, f64)> = Vec::with_capacity(LOCAL_DOFS + 6);
        for (d, w) in weights.iter().enumerate() {
            for (i, g) in self.gather(t, d) {
                row.push((i, w * g));
            }
        }
        row.sort_unstable_by_key(|e| e.0);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
        for (i, v) in row {
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => merged.push((i, v)),
            }
        }
        merged
    }

    /// Spline evaluation helper for the canonical coefficient vector.
    pub fn eval_coefficients(&self, coeffs: &[f64], p: Point2) -> Result<f64, SpaceError> {
        Ok(self
            .basis_values(p)?
            .iter()
            .map(|(i, v)| coeffs[*i] * v)
            .sum())
    }
}

/// q-triangles: an equilateral triangle around the centroid of the mandated points
/// (the vertex, `2/3 v_i + 1/3 v_ijk` and `2/3 v_i + 1/3 v_ij`), one corner along +x.
pub fn choose_vertex_triangles(ps: &PsRefinement) -> Vec<[Point2; 3]> {
    (0..ps.base().num_vertices())
        .map(|v| {
            let pts = mandated_points(ps, v);
            let n = pts.len() as f64;
            let c = pts.iter().fold(Point2::ORIGIN, |acc, p| acc + *p) * (1.0 / n);
            let reach = pts.iter().map(|p| p.dist(c)).fold(0.0, f64::max);
            let r = Q_TRIANGLE_RADIUS_FACTOR * reach;
            let s3 = 3f64.sqrt() / 2.0;
            [
                c + Point2::new(r, 0.0),
                c + Point2::new(-0.5 * r, s3 * r),
                c + Point2::new(-0.5 * r, -s3 * r),
            ]
        })
        .collect()
}

/// Points the q-triangle of vertex `v` must contain.
pub fn mandated_points(ps: &PsRefinement, v: usize) -> Vec<Point2> {
    let base = ps.base();
    let vp = base.vertex(v);
    let mut pts = vec![vp];
    for t in 0..base.num_triangles() {
        if base.corners(t).contains(&v) {
            pts.push(vp * (2.0 / 3.0) + ps.triangle_split_point(t) * (1.0 / 3.0));
        }
    }
    for (e, edge) in base.edges().iter().enumerate() {
        if edge.contains(&v) {
            pts.push(vp * (2.0 / 3.0) + ps.edge_split_point(e) * (1.0 / 3.0));
        }
    }
    pts
}
