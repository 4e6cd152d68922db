//! Per-macro-triangle map from the 21 local dual values to the 60 BB coefficients.

use super::SpaceError;
use crate::bezier::{blossom_weights, CubicPatch};
use crate::mesh::{Point2, PsRefinement, MICRO_LABELS};
use nalgebra::DMatrix;

/// Number of local degrees of freedom on one macro-triangle.
pub const LOCAL_DOFS: usize = 21;
const UNKNOWNS: usize = 60;

/// Conditioning above which the local system is rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// The designated blossom arguments of every local functional, in local order:
/// 9 vertex functionals (corner position `p`, then `r`), 6 micro-triangle
/// functionals `(v_a, v_b, v_abc)`, and 6 edge values `(v_a, v_b, v_ab)`.
#[derive(Debug, Clone)]
pub(crate) struct LocalFunctionals {
    /// `(micro index, [p1, p2, p3])` per local dof.
    pub args: Vec<(usize, [Point2; 3])>,
}

impl LocalFunctionals {
    pub fn new(ps: &PsRefinement, t: usize, q_triangles: &[[Point2; 3]]) -> Self {
        let corners = ps.base().corner_points(t);
        let global = ps.base().corners(t);
        let split = ps.triangle_split_point(t);
        let mut args = Vec::with_capacity(LOCAL_DOFS);
        for p in 0..3 {
            // the micro-triangle whose label starts at corner p: 0 -> m0, 1 -> m2, 2 -> m4
            let m = 2 * p;
            let v = corners[p];
            for q in q_triangles[global[p]] {
                args.push((m, [v, v, v + (q - v) * 3.0]));
            }
        }
        for (m, label) in MICRO_LABELS.iter().enumerate() {
            args.push((m, [corners[label[0]], corners[label[1]], split]));
        }
        for (m, label) in MICRO_LABELS.iter().enumerate() {
            args.push((
                m,
                [
                    corners[label[0]],
                    corners[label[1]],
                    ps.side_split_point(t, m / 2),
                ],
            ));
        }
        LocalFunctionals { args }
    }
}

/// Solution operator of the local C¹ problem on one macro-triangle.
#[derive(Debug, Clone)]
pub struct LocalMap {
    /// 60 x 21: BB coefficients (micro-major, 10 per micro) from local dual values.
    pub(crate) solution: DMatrix<f64>,
    pub(crate) micro_triangles: [[Point2; 3]; 6],
    /// Ratio of extreme singular values of the constraint matrix.
    pub condition: f64,
    /// Largest violation of the constraints by the computed solution operator.
    pub residual: f64,
}

impl LocalMap {
    pub fn build(
        ps: &PsRefinement,
        t: usize,
        q_triangles: &[[Point2; 3]],
    ) -> Result<Self, SpaceError> {
        let micro: [[Point2; 3]; 6] = std::array::from_fn(|m| ps.micro_triangle(t, m));
        let functionals = LocalFunctionals::new(ps, t, q_triangles);

        let mut rows: Vec<[f64; UNKNOWNS]> = Vec::with_capacity(63);
        for a in 0..6 {
            let b = (a + 1) % 6;
            let (p1, p2) = shared_edge(&micro[a], &micro[b]);
            let q = *micro[a]
                .iter()
                .find(|&&c| c != p1 && c != p2)
                .expect("three corners");
            let triples = [
                [p1, p1, p1],
                [p1, p1, p2],
                [p1, p2, p2],
                [p2, p2, p2],
                [p1, p1, q],
                [p1, p2, q],
                [p2, p2, q],
            ];
            for [x, y, z] in triples {
                let mut row = [0.0; UNKNOWNS];
                let wa = blossom_weights(&micro[a], x, y, z);
                let wb = blossom_weights(&micro[b], x, y, z);
                for n in 0..10 {
                    row[10 * a + n] += wa[n];
                    row[10 * b + n] -= wb[n];
                }
                rows.push(row);
            }
        }
        let constraint_rows = rows.len();
        for (m, [x, y, z]) in &functionals.args {
            let mut row = [0.0; UNKNOWNS];
            let w = blossom_weights(&micro[*m], *x, *y, *z);
            row[10 * m..10 * m + 10].copy_from_slice(&w);
            rows.push(row);
        }

        let nrows = rows.len();
        let a = DMatrix::from_fn(nrows, UNKNOWNS, |r, c| rows[r][c]);
        let rhs = DMatrix::from_fn(nrows, LOCAL_DOFS, |r, c| {
            if r == constraint_rows + c {
                1.0
            } else {
                0.0
            }
        });

        let sv = a.singular_values();
        let (smax, smin) = (sv.max(), sv.min());
        let condition = if smin > 0.0 {
            smax / smin
        } else {
            f64::INFINITY
        };
        if condition.is_nan() || condition > MAX_CONDITION {
            return Err(SpaceError::IllConditioned {
                triangle: t,
                condition,
            });
        }
        // Householder QR is markedly more accurate here than the SVD solve.
        let qr = a.clone().qr();
        let solution = qr
            .r()
            .solve_upper_triangular(&(qr.q().transpose() * &rhs))
            .ok_or_else(|| SpaceError::LocalSolve {
                triangle: t,
                reason: "singular triangular factor".into(),
            })?;
        let residual = (&a * &solution - &rhs).amax();
        if residual > 1e-9 {
            return Err(SpaceError::LocalSolve {
                triangle: t,
                reason: format!("residual {residual:e}"),
            });
        }
        Ok(LocalMap {
            solution,
            micro_triangles: micro,
            condition,
            residual,
        })
    }

    /// The six patches for the given local dual values.
    pub fn patches(&self, local: &[f64; LOCAL_DOFS]) -> [CubicPatch; 6] {
        std::array::from_fn(|m| {
            let mut coeffs = [0.0; 10];
            for (n, c) in coeffs.iter_mut().enumerate() {
                let row = self.solution.row(10 * m + n);
                *c = row.iter().zip(local).map(|(a, b)| a * b).sum();
            }
            CubicPatch::new(self.micro_triangles[m], coeffs)
        })
    }

    /// Local dof weights of the value at `p`, given Bernstein values on micro `m`.
    pub fn value_weights(&self, m: usize, bernstein: &[f64; 10]) -> [f64; LOCAL_DOFS] {
        let mut out = [0.0; LOCAL_DOFS];
        for (n, b) in bernstein.iter().enumerate() {
            if *b == 0.0 {
                continue;
            }
            for (d, o) in out.iter_mut().enumerate() {
                *o += b * self.solution[(10 * m + n, d)];
            }
        }
        out
    }

    pub fn micro_triangle(&self, m: usize) -> &[Point2; 3] {
        &self.micro_triangles[m]
    }
}

/// The two common corners of consecutive micro-triangles.
fn shared_edge(a: &[Point2; 3], b: &[Point2; 3]) -> (Point2, Point2) {
    let common: Vec<Point2> = a.iter().filter(|p| b.contains(p)).copied().collect();
    assert_eq!(common.len(), 2, "consecutive micro-triangles share an edge");
    (common[0], common[1])
}
