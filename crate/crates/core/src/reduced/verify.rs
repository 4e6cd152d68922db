//! Numerical checks of the C² super-smoothness of reduced basis functions.

use super::ReducedSpace;
use crate::bezier::check_smoothness;
use crate::c1space::{interior_ps_edges, SplineFunction};
use crate::mesh::Point2;
use rayon::prelude::*;
use serde::Serialize;

/// Smoothness of one reduced basis function restricted to one macro-triangle.
/// Residuals are relative to the largest BB coefficient of the basis function.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MacroSmoothness {
    pub basis: usize,
    pub triangle: usize,
    pub symmetric: bool,
    /// C² across the three `[v_ij, v_ijk]` edges.
    pub split_edge_c2: f64,
    /// C² across the three `[v_i, v_ijk]` edges.
    pub corner_edge_c2: f64,
    /// Spread of all second-order data at the split point over the six patches.
    pub split_point_c2: f64,
}

/// One evaluation of the blossom pair of `B^e_{ij,k}` on a symmetric triangle:
/// micro `(i,j,k)` and micro `(i,k,j)` at `(v_i, v_j, v_k)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ControlPair {
    pub edge: usize,
    pub triangle: usize,
    /// Global index of the corner playing the role of `v_i`.
    pub corner: usize,
    pub values: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct SuperSmoothnessReport {
    pub macros: Vec<MacroSmoothness>,
    /// Worst relative C¹ residual over all refinement edges and basis functions.
    pub c1: f64,
    pub split_edge_c2: f64,
    pub split_point_c2: f64,
    /// Worst C² residual across corner edges of symmetric triangles.
    pub symmetric_interior_c2: f64,
    /// Worst C² residual across corner edges of non-symmetric triangles; expected
    /// to be nonzero in general.
    pub nonsymmetric_corner_c2: f64,
    pub control_pairs: Vec<ControlPair>,
    /// `max |values - (1, 0)|` over the control pairs.
    pub control_deviation: f64,
}

impl SuperSmoothnessReport {
    /// Whether every super-smoothness property holds to `tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.c1 < tol
            && self.split_edge_c2 < tol
            && self.split_point_c2 < tol
            && self.symmetric_interior_c2 < tol
            && self.control_deviation < tol
    }
}

fn relative(residual: f64, scale: f64) -> f64 {
    residual / scale.max(f64::MIN_POSITIVE)
}

/// Worst difference of `b(c, x, y)`, `x, y` macro corners, across the six micro patches.
pub(crate) fn split_point_spread(s: &SplineFunction, t: usize) -> f64 {
    let ps = s.refinement();
    let c = ps.triangle_split_point(t);
    let corners = ps.base().corner_points(t);
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        for b in a..3 {
            let reference = s.patch(t, 0).blossom(c, corners[a], corners[b]);
            for m in 1..6 {
                worst =
                    worst.max((s.patch(t, m).blossom(c, corners[a], corners[b]) - reference).abs());
            }
        }
    }
    worst
}

/// `(split-edge, corner-edge)` C² residuals inside macro-triangle `t`.
pub(crate) fn interior_c2(s: &SplineFunction, t: usize) -> (f64, f64) {
    let (mut split, mut corner): (f64, f64) = (0.0, 0.0);
    for m in 0..6 {
        let (a, b) = (s.patch(t, m), s.patch(t, (m + 1) % 6));
        let (p1, p2) = crate::c1space::shared_corners(&a.triangle, &b.triangle);
        let r = check_smoothness(a, b, (p1, p2), 2)
            .expect("shared edge")
            .max_residual;
        if m % 2 == 0 {
            split = split.max(r);
        } else {
            corner = corner.max(r);
        }
    }
    (split, corner)
}

impl ReducedSpace {
    /// Checks every reduced basis function on every macro-triangle of its support,
    /// plus the blossom pair of `B^e_{ij,k}` on each side of each symmetric triangle.
    pub fn verify_supersmoothness(&self) -> SuperSmoothnessReport {
        let ps = self.refinement();
        let edges = interior_ps_edges(ps);
        let per_basis: Vec<(Vec<MacroSmoothness>, f64)> = (0..self.dim())
            .into_par_iter()
            .map(|b| {
                let s = self.basis_function(b);
                let scale = s.max_abs_coeff();
                let support = self.support(b);
                let mut c1: f64 = 0.0;
                for &(_, _, (ta, ma), (tb, mb)) in &edges {
                    if support.binary_search(&ta).is_err() && support.binary_search(&tb).is_err() {
                        continue;
                    }
                    let (pa, pb) = (s.patch(ta, ma), s.patch(tb, mb));
                    let (p1, p2) = crate::c1space::shared_corners(&pa.triangle, &pb.triangle);
                    let r = check_smoothness(pa, pb, (p1, p2), 1)
                        .expect("shared edge")
                        .max_residual;
                    c1 = c1.max(relative(r, scale));
                }
                let macros = support
                    .iter()
                    .map(|&t| {
                        let (split, corner) = interior_c2(&s, t);
                        MacroSmoothness {
                            basis: b,
                            triangle: t,
                            symmetric: ps.is_symmetric(t),
                            split_edge_c2: relative(split, scale),
                            corner_edge_c2: relative(corner, scale),
                            split_point_c2: relative(split_point_spread(&s, t), scale),
                        }
                    })
                    .collect();
                (macros, c1)
            })
            .collect();

        let control_pairs = self.control_pairs();
        let control_deviation = control_pairs
            .iter()
            .map(|p| (p.values[0] - 1.0).abs().max(p.values[1].abs()))
            .fold(0.0, f64::max);
        let c1 = per_basis.iter().map(|(_, c)| *c).fold(0.0, f64::max);
        let macros: Vec<MacroSmoothness> = per_basis.into_iter().flat_map(|(m, _)| m).collect();
        let max_of = |f: &dyn Fn(&MacroSmoothness) -> Option<f64>| {
            macros.iter().filter_map(f).fold(0.0, f64::max)
        };
        SuperSmoothnessReport {
            c1,
            split_edge_c2: max_of(&|m| Some(m.split_edge_c2)),
            split_point_c2: max_of(&|m| Some(m.split_point_c2)),
            symmetric_interior_c2: max_of(&|m| m.symmetric.then_some(m.corner_edge_c2)),
            nonsymmetric_corner_c2: max_of(&|m| (!m.symmetric).then_some(m.corner_edge_c2)),
            macros,
            control_pairs,
            control_deviation,
        }
    }

    /// Blossom pairs of `B^e_{ij,k}` on symmetric triangles, for both orientations of each side.
    pub fn control_pairs(&self) -> Vec<ControlPair> {
        let ps = self.refinement();
        let base = ps.base();
        let c1 = self.c1();
        let mut out = Vec::new();
        for t in (0..base.num_triangles()).filter(|&t| ps.is_symmetric(t)) {
            for (side, &e) in base.triangle_edges(t).iter().enumerate() {
                let s = c1
                    .synthesize_sparse(&self.edge_combination(e, t))
                    .expect("valid column");
                let k = base.corners(t)[(side + 2) % 3];
                let [i, j] = base.edges()[e];
                for (a, b) in [(i, j), (j, i)] {
                    let args: [Point2; 3] = [base.vertex(a), base.vertex(b), base.vertex(k)];
                    let on = s
                        .patch(t, c1.micro_for(t, a, b))
                        .blossom(args[0], args[1], args[2]);
                    let off = s
                        .patch(t, c1.micro_for(t, a, k))
                        .blossom(args[0], args[1], args[2]);
                    out.push(ControlPair {
                        edge: e,
                        triangle: t,
                        corner: a,
                        values: [on, off],
                    });
                }
            }
        }
        out
    }

    /// C² report of an arbitrary spline on one macro-triangle, for splines outside
    /// the basis (e.g. fitted ones).
    pub fn macro_smoothness(s: &SplineFunction, t: usize) -> MacroSmoothness {
        let scale = s.max_abs_coeff();
        let (split, corner) = interior_c2(s, t);
        MacroSmoothness {
            basis: usize::MAX,
            triangle: t,
            symmetric: s.refinement().is_symmetric(t),
            split_edge_c2: relative(split, scale),
            corner_edge_c2: relative(corner, scale),
            split_point_c2: relative(split_point_spread(s, t), scale),
        }
    }
}
