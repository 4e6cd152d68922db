//! Cubic Bernstein–Bézier patches on triangles, their blossoms, and blossom-based
//! smoothness conditions between neighbouring patches.

use crate::mesh::{barycentric, orient, Point2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Multi-indices `α` with `|α| = 3` in the fixed coefficient order
/// `300, 210, 201, 120, 111, 102, 030, 021, 012, 003`.
pub const MULTI_INDICES: [[usize; 3]; 10] = [
    [3, 0, 0],
    [2, 1, 0],
    [2, 0, 1],
    [1, 2, 0],
    [1, 1, 1],
    [1, 0, 2],
    [0, 3, 0],
    [0, 2, 1],
    [0, 1, 2],
    [0, 0, 3],
];

/// Multi-indices with `|β| = 2`: `200, 110, 101, 020, 011, 002`.
const QUADRATIC_INDICES: [[usize; 3]; 6] = [
    [2, 0, 0],
    [1, 1, 0],
    [1, 0, 1],
    [0, 2, 0],
    [0, 1, 1],
    [0, 0, 2],
];

/// Position of `α` in [`MULTI_INDICES`].
#[inline]
pub fn cubic_index(alpha: [usize; 3]) -> usize {
    // rows of the lexicographic triangle start at 0, 1, 3, 6
    let first = 3 - alpha[0];
    first * (first + 1) / 2 + (first - alpha[1])
}

#[inline]
fn quadratic_index(beta: [usize; 3]) -> usize {
    let first = 2 - beta[0];
    first * (first + 1) / 2 + (first - beta[1])
}

/// Relative tolerance for declaring a smoothness condition satisfied.
pub const SMOOTHNESS_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BezierError {
    #[error("the edge is not an edge of both patches")]
    EdgeNotShared,
    #[error("smoothness order {0} is not supported (0, 1 or 2)")]
    UnsupportedOrder(u8),
}

/// A bivariate cubic in monomial form, coefficients ordered
/// `1, x, y, x², xy, y², x³, x²y, xy², y³`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Cubic(pub [f64; 10]);

impl Cubic {
    pub fn constant(c: f64) -> Self {
        let mut m = [0.0; 10];
        m[0] = c;
        Cubic(m)
    }

    /// The `n`-th monomial (same order as the coefficients).
    pub fn monomial(n: usize) -> Self {
        let mut m = [0.0; 10];
        m[n] = 1.0;
        Cubic(m)
    }

    pub fn eval(&self, p: Point2) -> f64 {
        let c = &self.0;
        let (x, y) = (p.x, p.y);
        c[0] + x * (c[1] + x * (c[3] + x * c[6] + y * c[7]) + y * (c[4] + y * c[8]))
            + y * (c[2] + y * (c[5] + y * c[9]))
    }

    /// Blossom of the cubic: the symmetric multi-affine form agreeing with it on the diagonal.
    pub fn blossom(&self, p1: Point2, p2: Point2, p3: Point2) -> f64 {
        let c = &self.0;
        let (x1, y1, x2, y2, x3, y3) = (p1.x, p1.y, p2.x, p2.y, p3.x, p3.y);
        c[0] + c[1] * (x1 + x2 + x3) / 3.0
            + c[2] * (y1 + y2 + y3) / 3.0
            + c[3] * (x1 * x2 + x1 * x3 + x2 * x3) / 3.0
            + c[4] * (x1 * y2 + x2 * y1 + x1 * y3 + x3 * y1 + x2 * y3 + x3 * y2) / 6.0
            + c[5] * (y1 * y2 + y1 * y3 + y2 * y3) / 3.0
            + c[6] * x1 * x2 * x3
            + c[7] * (x1 * x2 * y3 + x1 * y2 * x3 + y1 * x2 * x3) / 3.0
            + c[8] * (x1 * y2 * y3 + y1 * x2 * y3 + y1 * y2 * x3) / 3.0
            + c[9] * y1 * y2 * y3
    }

    /// Largest absolute monomial coefficient.
    pub fn magnitude(&self) -> f64 {
        self.0.iter().fold(0.0, |m, c| m.max(c.abs()))
    }
}

/// A cubic polynomial in Bernstein–Bézier form over a triangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicPatch {
    pub triangle: [Point2; 3],
    pub coeffs: [f64; 10],
}

impl CubicPatch {
    pub fn new(triangle: [Point2; 3], coeffs: [f64; 10]) -> Self {
        CubicPatch { triangle, coeffs }
    }

    pub fn zero(triangle: [Point2; 3]) -> Self {
        CubicPatch {
            triangle,
            coeffs: [0.0; 10],
        }
    }

    /// BB coefficients of a monomial-form cubic: blossom values at the corner triples.
    pub fn from_polynomial(p: &Cubic, triangle: [Point2; 3]) -> Self {
        let coeffs = MULTI_INDICES.map(|alpha| {
            let args = corner_triple(&triangle, alpha);
            p.blossom(args[0], args[1], args[2])
        });
        CubicPatch { triangle, coeffs }
    }

    pub fn coeff(&self, alpha: [usize; 3]) -> f64 {
        self.coeffs[cubic_index(alpha)]
    }

    /// Blossom via three successive de Casteljau reductions, one per argument.
    pub fn blossom(&self, p1: Point2, p2: Point2, p3: Point2) -> f64 {
        let t1 = barycentric(&self.triangle, p1);
        let t2 = barycentric(&self.triangle, p2);
        let t3 = barycentric(&self.triangle, p3);
        let mut quad = [0.0; 6];
        for (n, beta) in QUADRATIC_INDICES.iter().enumerate() {
            quad[n] = (0..3)
                .map(|l| t1[l] * self.coeffs[cubic_index(bump(*beta, l))])
                .sum();
        }
        let mut lin = [0.0; 3];
        for (n, slot) in lin.iter_mut().enumerate() {
            let gamma = unit(n);
            *slot = (0..3)
                .map(|l| t2[l] * quad[quadratic_index(bump(gamma, l))])
                .sum();
        }
        (0..3).map(|l| t3[l] * lin[l]).sum()
    }

    pub fn eval(&self, p: Point2) -> f64 {
        self.blossom(p, p, p)
    }

    /// Derivative of order 1 or 2 along `d` (the second derivative is `D_d D_d`).
    pub fn directional_derivative(&self, p: Point2, d: Point2, order: u8) -> f64 {
        match order {
            1 => 3.0 * (self.blossom(p, p, p + d) - self.blossom(p, p, p)),
            2 => self.mixed_second_derivative(p, d, d),
            _ => panic!("derivative order must be 1 or 2"),
        }
    }

    /// `D_u D_w P(p)`.
    pub fn mixed_second_derivative(&self, p: Point2, u: Point2, w: Point2) -> f64 {
        6.0 * (self.blossom(p, p + u, p + w)
            - self.blossom(p, p, p + u)
            - self.blossom(p, p, p + w)
            + self.blossom(p, p, p))
    }

    pub fn gradient(&self, p: Point2) -> [f64; 2] {
        [
            self.directional_derivative(p, Point2::new(1.0, 0.0), 1),
            self.directional_derivative(p, Point2::new(0.0, 1.0), 1),
        ]
    }

    /// `[P_xx, P_xy, P_yy]` at `p`.
    pub fn hessian(&self, p: Point2) -> [f64; 3] {
        let (ex, ey) = (Point2::new(1.0, 0.0), Point2::new(0.0, 1.0));
        [
            self.mixed_second_derivative(p, ex, ex),
            self.mixed_second_derivative(p, ex, ey),
            self.mixed_second_derivative(p, ey, ey),
        ]
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Index of the corner of this patch not on the segment `[p1, p2]`, if
    /// `p1`, `p2` are two corners of the patch.
    fn opposite_corner(&self, p1: Point2, p2: Point2) -> Option<Point2> {
        let has = |p: Point2| {
            self.triangle
                .iter()
                .position(|&c| c.dist(p) <= 1e-12 * (1.0 + p.norm()))
        };
        let (a, b) = (has(p1)?, has(p2)?);
        if a == b {
            return None;
        }
        Some(self.triangle[3 - a - b])
    }
}

/// Linear weights `w` such that `patch.blossom(p1, p2, p3) = w · patch.coeffs` on `triangle`.
pub fn blossom_weights(triangle: &[Point2; 3], p1: Point2, p2: Point2, p3: Point2) -> [f64; 10] {
    let t = [
        barycentric(triangle, p1),
        barycentric(triangle, p2),
        barycentric(triangle, p3),
    ];
    let mut w = [0.0; 10];
    for a in 0..3 {
        for b in 0..3 {
            for c in 0..3 {
                let mut alpha = [0usize; 3];
                alpha[a] += 1;
                alpha[b] += 1;
                alpha[c] += 1;
                w[cubic_index(alpha)] += t[0][a] * t[1][b] * t[2][c];
            }
        }
    }
    w
}

/// Bernstein basis values `B_α(p)` on `triangle` in coefficient order.
pub fn bernstein_values(triangle: &[Point2; 3], p: Point2) -> [f64; 10] {
    let [l1, l2, l3] = barycentric(triangle, p);
    MULTI_INDICES.map(|[a, b, c]| {
        let multinomial = 6.0 / (fact(a) * fact(b) * fact(c));
        multinomial * l1.powi(a as i32) * l2.powi(b as i32) * l3.powi(c as i32)
    })
}

fn fact(n: usize) -> f64 {
    [1.0, 1.0, 2.0, 6.0][n]
}

fn corner_triple(triangle: &[Point2; 3], alpha: [usize; 3]) -> [Point2; 3] {
    let mut out = [Point2::ORIGIN; 3];
    let mut n = 0;
    for (corner, &count) in alpha.iter().enumerate() {
        for _ in 0..count {
            out[n] = triangle[corner];
            n += 1;
        }
    }
    out
}

fn bump(mut beta: [usize; 3], l: usize) -> [usize; 3] {
    beta[l] += 1;
    beta
}

fn unit(l: usize) -> [usize; 3] {
    let mut g = [0; 3];
    g[l] = 1;
    g
}

/// Raw blossom residuals of the smoothness conditions across a shared edge.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmoothnessReport {
    pub order: u8,
    /// Absolute deviations: 4 continuity conditions, then 3 for C¹ (order ≥ 1),
    /// then 2 for C² (order 2).
    pub residuals: Vec<f64>,
    pub max_residual: f64,
    /// Largest absolute BB coefficient of the two patches; the scale of the residuals.
    pub scale: f64,
}

impl SmoothnessReport {
    /// Passes at the relative tolerance `tol` (scaled by the coefficient magnitude).
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol * self.scale.max(f64::MIN_POSITIVE)
    }

    pub fn passes_default(&self) -> bool {
        self.passes(SMOOTHNESS_TOL)
    }
}

/// Checks `C^order` smoothness of the join of two patches across `edge`.
///
/// C⁰ compares the four blossom values with all arguments on the edge. C¹ uses
/// `(p1,p1,q), (p1,p2,q), (p2,p2,q)` with `q` the corner of `a` opposite the edge;
/// C² adds `(p1,q1,q2), (p2,q1,q2)` with `q1`, `q2` the corners opposite the edge in
/// `a` and `b`.
pub fn check_smoothness(
    a: &CubicPatch,
    b: &CubicPatch,
    edge: (Point2, Point2),
    order: u8,
) -> Result<SmoothnessReport, BezierError> {
    if order > 2 {
        return Err(BezierError::UnsupportedOrder(order));
    }
    let (p1, p2) = edge;
    let q1 = a
        .opposite_corner(p1, p2)
        .ok_or(BezierError::EdgeNotShared)?;
    let q2 = b
        .opposite_corner(p1, p2)
        .ok_or(BezierError::EdgeNotShared)?;
    if orient(p1, p2, q1) * orient(p1, p2, q2) > 0.0 {
        // the patches would overlap; treated as not sharing the edge
        return Err(BezierError::EdgeNotShared);
    }
    let diff = |x: Point2, y: Point2, z: Point2| (a.blossom(x, y, z) - b.blossom(x, y, z)).abs();
    let mut residuals = vec![
        diff(p1, p1, p1),
        diff(p1, p1, p2),
        diff(p1, p2, p2),
        diff(p2, p2, p2),
    ];
    if order >= 1 {
        residuals.extend([diff(p1, p1, q1), diff(p1, p2, q1), diff(p2, p2, q1)]);
    }
    if order == 2 {
        residuals.extend([diff(p1, q1, q2), diff(p2, q1, q2)]);
    }
    let max_residual = residuals.iter().cloned().fold(0.0, f64::max);
    Ok(SmoothnessReport {
        order,
        residuals,
        max_residual,
        scale: a.max_abs_coeff().max(b.max_abs_coeff()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_tri() -> [Point2; 3] {
        [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn index_order_is_lexicographic() {
        for (n, alpha) in MULTI_INDICES.iter().enumerate() {
            assert_eq!(cubic_index(*alpha), n);
        }
        for (n, beta) in QUADRATIC_INDICES.iter().enumerate() {
            assert_eq!(quadratic_index(*beta), n);
        }
    }

    #[test]
    fn blossom_of_x_cubed_is_product_of_abscissae() {
        let tri = [
            Point2::new(0.3, -0.2),
            Point2::new(2.0, 0.5),
            Point2::new(-0.4, 1.7),
        ];
        let patch = CubicPatch::from_polynomial(&Cubic::monomial(6), tri);
        let v = patch.blossom(
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 5.0),
            Point2::new(3.0, -1.0),
        );
        assert_abs_diff_eq!(v, 6.0, epsilon = 1e-12);
    }

    #[test]
    fn blossom_of_x2y() {
        let patch = CubicPatch::from_polynomial(&Cubic::monomial(7), unit_tri());
        let v = patch.blossom(
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
        );
        assert_abs_diff_eq!(v, 1.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn constant_coefficients_evaluate_to_one() {
        let patch = CubicPatch::new(unit_tri(), [1.0; 10]);
        for p in [
            Point2::new(0.2, 0.3),
            Point2::new(-1.0, 4.0),
            Point2::new(0.5, 0.5),
        ] {
            assert_abs_diff_eq!(patch.eval(p), 1.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn linear_reproduction_and_corner_interpolation() {
        let x = CubicPatch::from_polynomial(&Cubic::monomial(1), unit_tri());
        assert_abs_diff_eq!(x.eval(Point2::new(0.25, 0.5)), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(x.coeff([2, 1, 0]), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.coeff([1, 2, 0]), 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(x.coeff([3, 0, 0]), 0.0);
        assert_abs_diff_eq!(x.coeff([0, 3, 0]), 1.0);
        let p = CubicPatch::new(
            unit_tri(),
            [0.7, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0],
        );
        assert_eq!(p.eval(unit_tri()[0]), 0.7);
    }

    #[test]
    fn constant_from_polynomial_has_unit_coefficients() {
        let p = CubicPatch::from_polynomial(&Cubic::constant(1.0), unit_tri());
        assert!(p.coeffs.iter().all(|&c| (c - 1.0).abs() < 1e-15));
    }

    #[test]
    fn derivative_examples() {
        let x = CubicPatch::from_polynomial(&Cubic::monomial(1), unit_tri());
        assert_abs_diff_eq!(
            x.directional_derivative(Point2::new(0.3, 0.9), Point2::new(1.0, 0.0), 1),
            1.0,
            epsilon = 1e-13
        );
        let x3 = CubicPatch::from_polynomial(&Cubic::monomial(6), unit_tri());
        assert_abs_diff_eq!(
            x3.directional_derivative(Point2::new(1.0, 0.0), Point2::new(1.0, 0.0), 1),
            3.0,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            x3.directional_derivative(Point2::new(1.0, 0.0), Point2::new(1.0, 0.0), 2),
            6.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn bernstein_values_match_blossom_weights_on_diagonal() {
        let tri = [
            Point2::new(0.1, 0.0),
            Point2::new(1.3, 0.2),
            Point2::new(0.4, 0.9),
        ];
        let p = Point2::new(0.5, 0.4);
        let b = bernstein_values(&tri, p);
        let w = blossom_weights(&tri, p, p, p);
        for n in 0..10 {
            assert_abs_diff_eq!(b[n], w[n], epsilon = 1e-15);
        }
    }

    #[test]
    fn smoothness_rejects_unshared_edge() {
        let a = CubicPatch::zero(unit_tri());
        let b = CubicPatch::zero([
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]);
        let err = check_smoothness(&a, &b, (Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)), 1);
        assert_eq!(err, Err(BezierError::EdgeNotShared));
        assert!(
            check_smoothness(&a, &b, (Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)), 3).is_err()
        );
    }
}
