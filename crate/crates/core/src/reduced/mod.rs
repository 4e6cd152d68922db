//! The reduced space: C¹ basis functions recombined so that they are C² inside
//! symmetrically refined macro-triangles and across every `[v_ij, v_ijk]` edge.
//!
//! Reduced coefficients are ordered as: vertex functionals (as in the C¹ space),
//! then one per symmetric macro-triangle, then one per (edge, attached
//! non-symmetric triangle) sorted by edge and triangle, then one per boundary edge.

mod map;
mod verify;

pub use map::RecombinationMap;
pub use verify::{ControlPair, MacroSmoothness, SuperSmoothnessReport};

use crate::bezier::CubicPatch;
use crate::c1space::{C1Functional, C1Space, DualVector, SpaceError, SplineFunction};
use crate::mesh::{MeshError, Point2, PsRefinement};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Weight identities must hold to this absolute tolerance on symmetric triangles.
pub const WEIGHT_IDENTITY_TOL: f64 = 1e-10;

/// Relative tolerance for partner functionals in verify mode.
pub const PARTNER_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReducedError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("weights on side {side} of symmetric triangle {triangle} are inconsistent (identity residual {residual:e})")]
    InconsistentWeights {
        triangle: usize,
        side: usize,
        residual: f64,
    },
    #[error("{functional}: partner functionals differ by {deviation:e}; the spline is not in the reduced space")]
    PartnerDeviation { functional: String, deviation: f64 },
    #[error("expected {expected} coefficients, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("functional {0} does not belong to this space")]
    UnknownFunctional(String),
}

/// A dual functional of the reduced space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ReducedFunctional {
    Vertex {
        vertex: usize,
        r: usize,
    },
    /// Symmetric macro-triangle: blossom on micro `(i,j,k)` at its corners.
    SymTriangle {
        triangle: usize,
    },
    /// Edge `e_ij` with an attached non-symmetric triangle.
    EdgeTriangle {
        edge: usize,
        triangle: usize,
    },
    BoundaryEdge {
        edge: usize,
    },
}

/// Full and reduced dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DimensionReport {
    pub full: usize,
    pub reduced: usize,
    pub symmetric_triangles: usize,
    pub ratio: f64,
}

/// The reduced space built on top of the C¹ space of the same refinement.
#[derive(Debug, Clone)]
pub struct ReducedSpace {
    c1: C1Space,
    functionals: Vec<ReducedFunctional>,
    index: HashMap<ReducedFunctional, usize>,
    map: RecombinationMap,
}

impl ReducedSpace {
    pub fn new(ps: PsRefinement) -> Result<Self, ReducedError> {
        check_weight_identities(&ps)?;
        let c1 = C1Space::new(ps)?;
        Ok(Self::from_c1(c1))
    }

    /// Builds the reduced space from an existing C¹ space (whose refinement must have
    /// consistent weights; see [`ReducedSpace::new`]).
    pub fn from_c1(c1: C1Space) -> Self {
        let functionals = reduced_functionals(c1.refinement());
        let index = functionals
            .iter()
            .enumerate()
            .map(|(n, f)| (*f, n))
            .collect();
        let map = build_recombination(&c1, &functionals);
        ReducedSpace {
            c1,
            functionals,
            index,
            map,
        }
    }

    pub fn c1(&self) -> &C1Space {
        &self.c1
    }

    pub fn refinement(&self) -> &PsRefinement {
        self.c1.refinement()
    }

    pub fn recombination(&self) -> &RecombinationMap {
        &self.map
    }

    pub fn dim(&self) -> usize {
        self.functionals.len()
    }

    pub fn functionals(&self) -> &[ReducedFunctional] {
        &self.functionals
    }

    pub fn functional(&self, index: usize) -> ReducedFunctional {
        self.functionals[index]
    }

    pub fn index_of(&self, f: ReducedFunctional) -> Option<usize> {
        self.index.get(&f).copied()
    }

    /// `3|V| + |T_S| + 3|T \ T_S| + |E^b|` against the C¹ dimension.
    pub fn dimension_report(&self) -> DimensionReport {
        dimension_report(self.refinement())
    }

    /// C¹ coefficients of a reduced coefficient vector.
    pub fn to_c1(&self, coeffs: &[f64]) -> Result<Vec<f64>, ReducedError> {
        if coeffs.len() != self.dim() {
            return Err(ReducedError::DimensionMismatch {
                expected: self.dim(),
                got: coeffs.len(),
            });
        }
        Ok(self.map.apply(coeffs))
    }

    pub fn synthesize(&self, coeffs: &[f64]) -> Result<SplineFunction<'_>, ReducedError> {
        let full = self.to_c1(coeffs)?;
        Ok(self.c1.synthesize(&full)?)
    }

    pub fn basis_function(&self, index: usize) -> SplineFunction<'_> {
        self.c1
            .synthesize_sparse(self.map.column(index))
            .expect("column indices are in range")
    }

    /// Macro-triangles on which reduced basis function `index` can be nonzero.
    pub fn support(&self, index: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .map
            .column(index)
            .iter()
            .flat_map(|(i, _)| self.c1.support(*i))
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// The C¹ functional that defines `f`, and its partner that must agree on
    /// splines of the reduced space.
    fn defining_functionals(&self, f: ReducedFunctional) -> (C1Functional, Option<C1Functional>) {
        let base = self.refinement().base();
        match f {
            ReducedFunctional::Vertex { vertex, r } => (C1Functional::Vertex { vertex, r }, None),
            ReducedFunctional::EdgeTriangle { edge, triangle } => {
                let [i, j] = base.edges()[edge];
                (
                    C1Functional::Triangle {
                        triangle,
                        micro: self.c1.micro_for(triangle, i, j),
                    },
                    Some(C1Functional::Triangle {
                        triangle,
                        micro: self.c1.micro_for(triangle, j, i),
                    }),
                )
            }
            ReducedFunctional::BoundaryEdge { edge } => (
                C1Functional::BoundaryEdge { edge, half: 0 },
                Some(C1Functional::BoundaryEdge { edge, half: 1 }),
            ),
            ReducedFunctional::SymTriangle { .. } => {
                unreachable!("symmetric functionals are not C¹ functionals")
            }
        }
    }

    /// Applies a reduced functional; with `verify`, also checks that the partner
    /// functionals agree, as they must on splines of the reduced space.
    pub fn apply_dual(
        &self,
        s: &SplineFunction,
        f: ReducedFunctional,
        verify: bool,
    ) -> Result<f64, ReducedError> {
        self.index_of(f)
            .ok_or_else(|| ReducedError::UnknownFunctional(format!("{f:?}")))?;
        self.apply_with_tol(s, f, verify.then(|| partner_tol(s)))
    }

    fn apply_with_tol(
        &self,
        s: &SplineFunction,
        f: ReducedFunctional,
        tol: Option<f64>,
    ) -> Result<f64, ReducedError> {
        match f {
            ReducedFunctional::SymTriangle { triangle } => {
                let corners = self.refinement().base().corner_points(triangle);
                let [a, b, c] = corners;
                let value = s.patch(triangle, 0).blossom(a, b, c);
                if let Some(tol) = tol {
                    let deviation = (1..6)
                        .map(|m| (s.patch(triangle, m).blossom(a, b, c) - value).abs())
                        .fold(0.0, f64::max);
                    if deviation > tol {
                        return Err(ReducedError::PartnerDeviation {
                            functional: format!("{f:?}"),
                            deviation,
                        });
                    }
                }
                Ok(value)
            }
            _ => {
                let (main, partner) = self.defining_functionals(f);
                let value = self.c1.apply_dual(s, main)?;
                if let (Some(tol), Some(p)) = (tol, partner) {
                    let deviation = (self.c1.apply_dual(s, p)? - value).abs();
                    if deviation > tol {
                        return Err(ReducedError::PartnerDeviation {
                            functional: format!("{f:?}"),
                            deviation,
                        });
                    }
                }
                Ok(value)
            }
        }
    }

    /// All reduced functionals applied to `s`.
    pub fn analyze(&self, s: &SplineFunction, verify: bool) -> Result<DualVector, ReducedError> {
        let tol = verify.then(|| partner_tol(s));
        let values = self
            .functionals
            .par_iter()
            .map(|f| self.apply_with_tol(s, *f, tol))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(DualVector(values))
    }

    /// `[β_a(B_b)]`, row `a`, column `b`.
    pub fn duality_matrix(&self) -> Result<Vec<Vec<f64>>, ReducedError> {
        let n = self.dim();
        let columns = (0..n)
            .into_par_iter()
            .map(|b| {
                let s = self.basis_function(b);
                let tol = Some(partner_tol(&s));
                self.functionals
                    .iter()
                    .map(|f| self.apply_with_tol(&s, *f, tol))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok((0..n)
            .map(|a| (0..n).map(|b| columns[b][a]).collect())
            .collect())
    }

    /// Values of all reduced basis functions at `p` as a sparse row.
    pub fn basis_values(&self, p: Point2) -> Result<Vec<(usize, f64)>, ReducedError> {
        Ok(self.map.transpose_apply(&self.c1.basis_values(p)?))
    }

    /// Like [`Self::basis_values`] with the macro and micro triangle already known.
    pub fn basis_values_in(&self, t: usize, m: usize, p: Point2) -> Vec<(usize, f64)> {
        self.map.transpose_apply(&self.c1.basis_values_in(t, m, p))
    }

    /// Control point per reduced basis function; reproduces `(x, y)`.
    pub fn greville_points(&self) -> Vec<Point2> {
        let ps = self.refinement();
        let base = ps.base();
        self.functionals
            .iter()
            .map(|f| match *f {
                ReducedFunctional::Vertex { vertex, r } => self.c1.q_triangle(vertex)[r],
                ReducedFunctional::SymTriangle { triangle } => {
                    let [a, b, c] = base.corner_points(triangle);
                    (a + b + c) * (1.0 / 3.0)
                }
                ReducedFunctional::EdgeTriangle { edge, triangle } => {
                    let [i, j] = base.edges()[edge];
                    (base.vertex(i) + base.vertex(j) + ps.triangle_split_point(triangle))
                        * (1.0 / 3.0)
                }
                ReducedFunctional::BoundaryEdge { edge } => {
                    let [i, j] = base.edges()[edge];
                    (base.vertex(i) + base.vertex(j) + ps.edge_split_point(edge)) * (1.0 / 3.0)
                }
            })
            .collect()
    }

    /// `B^e_{ij,k}` as C¹ coefficients for any attached triangle `t`, including
    /// symmetric ones where it is not itself a reduced basis function.
    pub fn edge_combination(&self, edge: usize, triangle: usize) -> Vec<(usize, f64)> {
        map::edge_column(&self.c1, edge, triangle)
    }

    /// Evaluates a reduced coefficient vector through sparse basis rows.
    pub fn eval_coefficients(&self, coeffs: &[f64], p: Point2) -> Result<f64, ReducedError> {
        Ok(self
            .basis_values(p)?
            .iter()
            .map(|(i, v)| coeffs[*i] * v)
            .sum())
    }

    /// The BB patches of a reduced basis function on one macro-triangle.
    pub fn basis_patches(&self, index: usize, t: usize) -> [CubicPatch; 6] {
        let c1 = &self.c1;
        let mut full = vec![0.0; c1.dim()];
        for (i, w) in self.map.column(index) {
            full[*i] = *w;
        }
        c1.local_dual_to_bb(t, &c1.local_values(t, &full))
    }
}

fn partner_tol(s: &SplineFunction) -> f64 {
    PARTNER_TOL * s.max_abs_coeff().max(1.0)
}

/// Aborts on symmetric triangles whose ν/ω weights violate the identities the
/// reduced duals rely on.
pub fn check_weight_identities(ps: &PsRefinement) -> Result<(), ReducedError> {
    for t in 0..ps.base().num_triangles() {
        for side in 0..3 {
            if let Some(residual) = ps.weight_identity_residual(t, side) {
                if residual.is_nan() || residual > WEIGHT_IDENTITY_TOL {
                    return Err(ReducedError::InconsistentWeights {
                        triangle: t,
                        side,
                        residual,
                    });
                }
            }
        }
    }
    Ok(())
}

/// Reduced functionals in canonical order.
pub fn reduced_functionals(ps: &PsRefinement) -> Vec<ReducedFunctional> {
    let base = ps.base();
    let mut out = Vec::new();
    for vertex in 0..base.num_vertices() {
        for r in 0..3 {
            out.push(ReducedFunctional::Vertex { vertex, r });
        }
    }
    for triangle in 0..base.num_triangles() {
        if ps.is_symmetric(triangle) {
            out.push(ReducedFunctional::SymTriangle { triangle });
        }
    }
    for edge in 0..base.num_edges() {
        let (t0, t1) = base.edge_triangles(edge);
        for triangle in std::iter::once(t0).chain(t1) {
            if !ps.is_symmetric(triangle) {
                out.push(ReducedFunctional::EdgeTriangle { edge, triangle });
            }
        }
    }
    for edge in 0..base.num_edges() {
        if base.is_boundary_edge(edge) {
            out.push(ReducedFunctional::BoundaryEdge { edge });
        }
    }
    out
}

/// Dimension counts straight from the mesh.
pub fn dimension_report(ps: &PsRefinement) -> DimensionReport {
    let base = ps.base();
    let (v, t, e, eb) = (
        base.num_vertices(),
        base.num_triangles(),
        base.num_edges(),
        base.num_boundary_edges(),
    );
    let ts = ps.num_symmetric();
    let full = 3 * v + 4 * e;
    let reduced = 3 * v + ts + 3 * (t - ts) + eb;
    DimensionReport {
        full,
        reduced,
        symmetric_triangles: ts,
        ratio: full as f64 / reduced as f64,
    }
}

fn build_recombination(c1: &C1Space, functionals: &[ReducedFunctional]) -> RecombinationMap {
    let base = c1.refinement().base();
    let columns = functionals
        .iter()
        .map(|f| match *f {
            ReducedFunctional::Vertex { vertex, r } => {
                vec![(
                    c1.index_of(C1Functional::Vertex { vertex, r })
                        .expect("vertex"),
                    1.0,
                )]
            }
            ReducedFunctional::EdgeTriangle { edge, triangle } => {
                map::edge_column(c1, edge, triangle)
            }
            ReducedFunctional::SymTriangle { triangle } => {
                let mut col: Vec<(usize, f64)> = base
                    .triangle_edges(triangle)
                    .iter()
                    .flat_map(|&e| map::edge_column(c1, e, triangle))
                    .collect();
                map::compress(&mut col);
                col
            }
            ReducedFunctional::BoundaryEdge { edge } => map::boundary_column(c1, edge),
        })
        .collect();
    RecombinationMap::from_columns(c1.dim(), columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate, RefineOptions, SplitStrategy};

    fn square(strategy: SplitStrategy) -> PsRefinement {
        PsRefinement::new(
            generate::unit_square(),
            &RefineOptions::with_strategy(strategy),
        )
        .unwrap()
    }

    #[test]
    fn counts_on_small_meshes() {
        let sym = ReducedSpace::new(square(SplitStrategy::Barycenter)).unwrap();
        assert_eq!(sym.dim(), 18);
        assert_eq!(sym.dimension_report().full, 32);
        let none = ReducedSpace::new(square(SplitStrategy::Barycenter).without_symmetry()).unwrap();
        assert_eq!(none.dim(), 22);
        let single = PsRefinement::new(
            generate::unit_triangle(),
            &RefineOptions::with_strategy(SplitStrategy::Barycenter),
        )
        .unwrap();
        let single = ReducedSpace::new(single).unwrap();
        assert_eq!(single.dim(), 13);
        assert_eq!(single.dimension_report().full, 21);
    }

    #[test]
    fn non_symmetric_map_is_binary() {
        let space =
            ReducedSpace::new(square(SplitStrategy::Barycenter).without_symmetry()).unwrap();
        for j in 0..space.dim() {
            for (_, w) in space.recombination().column(j) {
                assert_eq!(*w, 1.0);
            }
        }
    }

    #[test]
    fn rows_sum_to_one() {
        let space = ReducedSpace::new(square(SplitStrategy::Barycenter)).unwrap();
        let ones = space.recombination().apply(&vec![1.0; space.dim()]);
        for v in ones {
            assert!((v - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn symmetric_square_mixes_neighbour_micros() {
        let space = ReducedSpace::new(square(SplitStrategy::Barycenter)).unwrap();
        let j = space
            .index_of(ReducedFunctional::SymTriangle { triangle: 0 })
            .unwrap();
        let c1 = space.c1();
        // the diagonal edge (1, 2) is shared; the neighbour's micros on it carry ω' = 1/3
        for m in [0, 1] {
            let side = c1
                .refinement()
                .side_of(1, c1.refinement().base().edge_index(1, 2).unwrap())
                .unwrap();
            let micro = 2 * side + m;
            let row = c1
                .index_of(C1Functional::Triangle { triangle: 1, micro })
                .unwrap();
            assert!((space.recombination().entry(row, j) - 1.0 / 3.0).abs() < 1e-12);
        }
    }
}
