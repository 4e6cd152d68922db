//! Reference computations that do not go through the de Casteljau blossom.

use pspline::bezier::bernstein_values;
use pspline::{CubicPatch, Point2};

/// Value of a patch by direct summation of Bernstein polynomials.
pub fn bernstein_eval(patch: &CubicPatch, p: Point2) -> f64 {
    bernstein_values(&patch.triangle, p)
        .iter()
        .zip(&patch.coeffs)
        .map(|(b, c)| b * c)
        .sum()
}

/// Blossom by polarization of the homogenized cubic `H(x, s) = s³ P(x / s)`,
/// using only point evaluations. Returns the value and the magnitude of the terms.
pub fn polarize(eval: impl Fn(Point2) -> f64, p: [Point2; 3]) -> (f64, f64) {
    let h = |pts: &[Point2]| {
        let s = pts.len() as f64;
        let sum = pts.iter().fold(Point2::ORIGIN, |acc, &q| acc + q);
        s.powi(3) * eval(sum * (1.0 / s))
    };
    let terms = [
        h(&[p[0], p[1], p[2]]),
        -h(&[p[0], p[1]]),
        -h(&[p[0], p[2]]),
        -h(&[p[1], p[2]]),
        h(&[p[0]]),
        h(&[p[1]]),
        h(&[p[2]]),
    ];
    (
        terms.iter().sum::<f64>() / 6.0,
        terms.iter().map(|t| t.abs()).sum::<f64>() / 6.0,
    )
}

pub fn central_gradient(f: impl Fn(Point2) -> f64, p: Point2, h: f64) -> [f64; 2] {
    let (ex, ey) = (Point2::new(h, 0.0), Point2::new(0.0, h));
    [
        (f(p + ex) - f(p - ex)) / (2.0 * h),
        (f(p + ey) - f(p - ey)) / (2.0 * h),
    ]
}

/// `[f_xx, f_xy, f_yy]` by central differences.
pub fn central_hessian(f: impl Fn(Point2) -> f64, p: Point2, h: f64) -> [f64; 3] {
    let (ex, ey) = (Point2::new(h, 0.0), Point2::new(0.0, h));
    let f0 = f(p);
    [
        (f(p + ex) - 2.0 * f0 + f(p - ex)) / (h * h),
        (f(p + ex + ey) - f(p + ex - ey) - f(p - ex + ey) + f(p - ex - ey)) / (4.0 * h * h),
        (f(p + ey) - 2.0 * f0 + f(p - ey)) / (h * h),
    ]
}

/// Gradient and Hessian jumps across `[p1, p2]` at five interior edge points.
#[derive(Debug, Clone, Copy)]
pub struct Jumps {
    pub gradient: f64,
    pub hessian: f64,
    /// Largest derivative magnitude seen; the scale for relative comparisons.
    pub scale: f64,
}

/// Jumps from finite differences of Bernstein sums.
pub fn fd_jumps(a: &CubicPatch, b: &CubicPatch, p1: Point2, p2: Point2) -> Jumps {
    jumps(p1, p2, |p| {
        let fa = |q| bernstein_eval(a, q);
        let fb = |q| bernstein_eval(b, q);
        (
            central_gradient(fa, p, 1e-5),
            central_gradient(fb, p, 1e-5),
            central_hessian(fa, p, 1e-4),
            central_hessian(fb, p, 1e-4),
        )
    })
}

/// Jumps from the patches' own (blossom based) derivatives.
pub fn exact_jumps(a: &CubicPatch, b: &CubicPatch, p1: Point2, p2: Point2) -> Jumps {
    jumps(p1, p2, |p| {
        (a.gradient(p), b.gradient(p), a.hessian(p), b.hessian(p))
    })
}

fn jumps(
    p1: Point2,
    p2: Point2,
    derivs: impl Fn(Point2) -> ([f64; 2], [f64; 2], [f64; 3], [f64; 3]),
) -> Jumps {
    let mut out = Jumps {
        gradient: 0.0,
        hessian: 0.0,
        scale: 0.0,
    };
    for n in 0..5 {
        let p = p1.lerp(p2, (n as f64 + 0.5) / 5.0);
        let (ga, gb, ha, hb) = derivs(p);
        for i in 0..2 {
            out.gradient = out.gradient.max((ga[i] - gb[i]).abs());
            out.scale = out.scale.max(ga[i].abs()).max(gb[i].abs());
        }
        for i in 0..3 {
            out.hessian = out.hessian.max((ha[i] - hb[i]).abs());
            out.scale = out.scale.max(ha[i].abs()).max(hb[i].abs());
        }
    }
    out
}
