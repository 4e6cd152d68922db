use super::point::{barycentric, orient, Point2};
use super::triangulation::Triangulation;
use super::weights;
use super::MeshError;
use std::collections::BTreeMap;

/// Relative collinearity tolerance: `|cross| <= tol * |a| * |b|`.
pub const COLLINEAR_TOL: f64 = 1e-10;

/// Micro-triangle labels as positions into the sorted macro corners `[i, j, k]`.
///
/// Label `(a, b, c)` is the micro-triangle `[v_a, v_ab, v_abc]`. The cycle
/// `(i,j,k), (j,i,k), (j,k,i), (k,j,i), (k,i,j), (i,k,j)` walks around the split
/// point, so consecutive entries share an interior edge; micro `m` touches side `m / 2`.
pub const MICRO_LABELS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [1, 0, 2],
    [1, 2, 0],
    [2, 1, 0],
    [2, 0, 1],
    [0, 2, 1],
];

/// Micro index for the ordered corner pair `(a, b)` given as positions into `[i, j, k]`.
pub fn micro_label(a: usize, b: usize) -> usize {
    MICRO_LABELS
        .iter()
        .position(|l| l[0] == a && l[1] == b)
        .expect("a and b must be distinct corner positions")
}

/// How the interior split point of a macro-triangle is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum SplitStrategy {
    #[default]
    Incenter,
    Barycenter,
    Explicit(Point2),
}

impl std::str::FromStr for SplitStrategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "incenter" => Ok(SplitStrategy::Incenter),
            "barycenter" => Ok(SplitStrategy::Barycenter),
            other => Err(format!(
                "unknown split strategy '{other}' (expected incenter or barycenter)"
            )),
        }
    }
}

/// Split point of a single triangle.
pub fn split_point(tri: [Point2; 3], strategy: SplitStrategy) -> Result<Point2, MeshError> {
    let [a, b, c] = tri;
    match strategy {
        SplitStrategy::Barycenter => Ok(Point2::new(
            (a.x + b.x + c.x) / 3.0,
            (a.y + b.y + c.y) / 3.0,
        )),
        SplitStrategy::Incenter => {
            let (la, lb, lc) = (b.dist(c), c.dist(a), a.dist(b));
            let s = la + lb + lc;
            Ok(Point2::combine(&tri, &[la / s, lb / s, lc / s]))
        }
        SplitStrategy::Explicit(p) => {
            let bc = barycentric(&tri, p);
            if bc.iter().all(|&l| l > 1e-12) {
                Ok(p)
            } else {
                Err(MeshError::SplitPointOutside {
                    triangle: usize::MAX,
                    x: p.x,
                    y: p.y,
                })
            }
        }
    }
}

/// Options for [`PsRefinement::new`].
#[derive(Debug, Clone, Default)]
pub struct RefineOptions {
    pub strategy: SplitStrategy,
    /// Explicit split points per macro-triangle index.
    pub triangle_points: BTreeMap<usize, Point2>,
    /// Explicit split points per boundary edge (sorted vertex pair).
    pub boundary_points: BTreeMap<[usize; 2], Point2>,
}

impl RefineOptions {
    pub fn with_strategy(strategy: SplitStrategy) -> Self {
        RefineOptions {
            strategy,
            ..Default::default()
        }
    }
}

/// Collinearity diagnostics of one macro-triangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetryInfo {
    /// Relative cross-product residual per side.
    pub residuals: [f64; 3],
    /// Absolute cross-product residual per side.
    pub raw_residuals: [f64; 3],
    pub symmetric: bool,
    /// All residuals pass the tolerance but at least one is within a factor 10 of it.
    pub borderline: bool,
}

/// ν, ω and the w-point of one (edge, attached triangle) pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SideWeights {
    /// Only defined for symmetrically refined triangles.
    pub nu: Option<f64>,
    pub omega: f64,
    pub w_point: Point2,
}

/// A Powell–Sabin refinement of a triangulation together with its cached geometric weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PsRefinement {
    base: Triangulation,
    triangle_split_points: Vec<Point2>,
    edge_split_points: Vec<Point2>,
    edge_split_ratio: Vec<f64>,
    mu: Vec<Option<f64>>,
    symmetry: Vec<SymmetryInfo>,
    weights: Vec<[SideWeights; 3]>,
}

impl PsRefinement {
    pub fn new(base: Triangulation, options: &RefineOptions) -> Result<Self, MeshError> {
        let nt = base.num_triangles();
        let mut triangle_split_points = Vec::with_capacity(nt);
        for t in 0..nt {
            let corners = base.corner_points(t);
            let strategy = match options.triangle_points.get(&t) {
                Some(p) => SplitStrategy::Explicit(*p),
                None => options.strategy,
            };
            let p = split_point(corners, strategy).map_err(|e| match e {
                MeshError::SplitPointOutside { x, y, .. } => {
                    MeshError::SplitPointOutside { triangle: t, x, y }
                }
                other => other,
            })?;
            triangle_split_points.push(p);
        }

        for edge in options.boundary_points.keys() {
            let e = base
                .edge_index(edge[0], edge[1])
                .ok_or(MeshError::UnknownEdge(*edge))?;
            if !base.is_boundary_edge(e) {
                return Err(MeshError::EdgeSplitNotBoundary { edge: *edge });
            }
        }

        let ne = base.num_edges();
        let mut edge_split_points = Vec::with_capacity(ne);
        let mut edge_split_ratio = Vec::with_capacity(ne);
        let mut mu = Vec::with_capacity(ne);
        for (e, &[a, b]) in base.edges().iter().enumerate() {
            let (va, vb) = (base.vertex(a), base.vertex(b));
            let dir = vb - va;
            let (point, m) = match base.edge_triangles(e) {
                (t0, Some(t1)) => {
                    let (c0, c1) = (triangle_split_points[t0], triangle_split_points[t1]);
                    let (o0, o1) = (orient(va, vb, c0), orient(va, vb, c1));
                    if o0 * o1 >= 0.0 {
                        return Err(MeshError::SplitSegmentMissesEdge {
                            edge: [a, b],
                            triangles: [t0, t1],
                        });
                    }
                    let m = o0 / (o0 - o1);
                    (c0.lerp(c1, m), Some(m))
                }
                (_, None) => {
                    let p = options
                        .boundary_points
                        .get(&[a, b])
                        .copied()
                        .unwrap_or_else(|| va.lerp(vb, 0.5));
                    let off = dir.cross(p - va).abs() / dir.norm();
                    if off > 1e-12 * base.scale() {
                        return Err(MeshError::EdgeSplitOutside { edge: [a, b] });
                    }
                    (p, None)
                }
            };
            let lambda = (point - va).dot(dir) / dir.norm_sq();
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(match m {
                    Some(_) => {
                        let (t0, t1) = base.edge_triangles(e);
                        MeshError::SplitSegmentMissesEdge {
                            edge: [a, b],
                            triangles: [t0, t1.unwrap()],
                        }
                    }
                    None => MeshError::EdgeSplitOutside { edge: [a, b] },
                });
            }
            edge_split_points.push(point);
            edge_split_ratio.push(lambda);
            mu.push(m);
        }

        let mut ps = PsRefinement {
            base,
            triangle_split_points,
            edge_split_points,
            edge_split_ratio,
            mu,
            symmetry: Vec::new(),
            weights: Vec::new(),
        };
        ps.symmetry = (0..nt).map(|t| ps.classify(t)).collect();
        for (t, info) in ps.symmetry.iter().enumerate() {
            if info.borderline {
                log::warn!(
                    "triangle {t} is nearly symmetric (residuals {:?}); excluded from the symmetric set",
                    info.residuals
                );
            }
        }
        ps.weights = weights::compute_all(&ps)?;
        Ok(ps)
    }

    /// The same refinement with every triangle treated as non-symmetric.
    pub fn without_symmetry(&self) -> Self {
        self.restrict_symmetry(&vec![false; self.base.num_triangles()])
            .expect("non-symmetric weights are always valid")
    }

    /// Keeps a triangle in the symmetric set only if it is detected as symmetric and
    /// `keep[t]` holds.
    pub fn restrict_symmetry(&self, keep: &[bool]) -> Result<Self, MeshError> {
        if keep.len() != self.base.num_triangles() {
            return Err(MeshError::Invalid(format!(
                "symmetry mask has {} entries for {} triangles",
                keep.len(),
                self.base.num_triangles()
            )));
        }
        let mut ps = self.clone();
        for (info, &k) in ps.symmetry.iter_mut().zip(keep) {
            info.symmetric &= k;
        }
        ps.weights = weights::compute_all(&ps)?;
        Ok(ps)
    }

    fn classify(&self, t: usize) -> SymmetryInfo {
        let c = self.triangle_split_points[t];
        let corners = self.base.corner_points(t);
        let mut residuals = [0.0; 3];
        let mut raw = [0.0; 3];
        for side in 0..3 {
            let opposite = corners[(side + 2) % 3];
            let a = opposite - c;
            let b = self.side_split_point(t, side) - c;
            raw[side] = a.cross(b).abs();
            residuals[side] = raw[side] / (a.norm() * b.norm());
        }
        let worst = residuals.iter().cloned().fold(0.0, f64::max);
        let passes = worst <= COLLINEAR_TOL;
        let borderline = passes && worst > COLLINEAR_TOL / 10.0;
        SymmetryInfo {
            residuals,
            raw_residuals: raw,
            symmetric: passes && !borderline,
            borderline,
        }
    }

    pub fn base(&self) -> &Triangulation {
        &self.base
    }

    pub fn triangle_split_points(&self) -> &[Point2] {
        &self.triangle_split_points
    }

    pub fn triangle_split_point(&self, t: usize) -> Point2 {
        self.triangle_split_points[t]
    }

    pub fn edge_split_points(&self) -> &[Point2] {
        &self.edge_split_points
    }

    pub fn edge_split_point(&self, e: usize) -> Point2 {
        self.edge_split_points[e]
    }

    /// λ with `v_ij = (1 - λ) v_i + λ v_j`, `i < j`.
    pub fn edge_split_ratio(&self, e: usize) -> f64 {
        self.edge_split_ratio[e]
    }

    /// μ of an interior edge relative to its first attached triangle `t0`:
    /// `v_ij = (1 - μ) v_{t0} + μ v_{t1}`.
    pub fn mu(&self, e: usize) -> Option<f64> {
        self.mu[e]
    }

    /// μ seen from triangle `t`: `v_ij = (1 - μ) v_ijk + μ v_ijk'`.
    pub fn mu_from(&self, e: usize, t: usize) -> Option<f64> {
        let m = self.mu[e]?;
        Some(if self.base.edge_triangles(e).0 == t {
            m
        } else {
            1.0 - m
        })
    }

    /// Split point of the edge on `side` of triangle `t`.
    pub fn side_split_point(&self, t: usize, side: usize) -> Point2 {
        self.edge_split_points[self.base.triangle_edges(t)[side]]
    }

    pub fn symmetry(&self, t: usize) -> &SymmetryInfo {
        &self.symmetry[t]
    }

    pub fn is_symmetric(&self, t: usize) -> bool {
        self.symmetry[t].symmetric
    }

    pub fn symmetric_flags(&self) -> Vec<bool> {
        self.symmetry.iter().map(|s| s.symmetric).collect()
    }

    pub fn num_symmetric(&self) -> usize {
        self.symmetry.iter().filter(|s| s.symmetric).count()
    }

    /// Cached weights of triangle `t` per side.
    pub fn side_weights(&self, t: usize, side: usize) -> &SideWeights {
        &self.weights[t][side]
    }

    /// Side of triangle `t` on which edge `e` lies.
    pub fn side_of(&self, t: usize, e: usize) -> Option<usize> {
        self.base.triangle_edges(t).iter().position(|&x| x == e)
    }

    /// Corners `[v_a, v_ab, v_abc]` of micro-triangle `m` of macro-triangle `t`.
    pub fn micro_triangle(&self, t: usize, m: usize) -> [Point2; 3] {
        let corners = self.base.corner_points(t);
        let [a, _, _] = MICRO_LABELS[m];
        [
            corners[a],
            self.side_split_point(t, m / 2),
            self.triangle_split_points[t],
        ]
    }

    /// Global vertex indices `(a, b, c)` of the label of micro `m` in triangle `t`.
    pub fn micro_vertices(&self, t: usize, m: usize) -> [usize; 3] {
        let corners = self.base.corners(t);
        MICRO_LABELS[m].map(|p| corners[p])
    }

    pub fn num_ps_vertices(&self) -> usize {
        self.base.num_vertices() + self.base.num_triangles() + self.base.num_edges()
    }

    pub fn num_ps_triangles(&self) -> usize {
        6 * self.base.num_triangles()
    }

    pub fn num_ps_edges(&self) -> usize {
        2 * self.base.num_edges() + 6 * self.base.num_triangles()
    }

    pub fn num_ps_boundary_edges(&self) -> usize {
        2 * self.base.num_boundary_edges()
    }

    /// Overrides that rebuild exactly this refinement.
    pub fn explicit_options(&self) -> RefineOptions {
        let triangle_points = self
            .triangle_split_points
            .iter()
            .copied()
            .enumerate()
            .collect();
        let boundary_points = (0..self.base.num_edges())
            .filter(|&e| self.base.is_boundary_edge(e))
            .map(|e| (self.base.edges()[e], self.edge_split_points[e]))
            .collect();
        RefineOptions {
            strategy: SplitStrategy::Incenter,
            triangle_points,
            boundary_points,
        }
    }
}
