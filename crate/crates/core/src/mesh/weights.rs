use super::point::Point2;
use super::refine::{PsRefinement, SideWeights};
use super::MeshError;

/// w-point and convex weight ω for one triangle attached to an edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WPoint {
    pub triangle: usize,
    pub w: Point2,
    pub omega: f64,
}

// ω slightly outside [0, 1] from round-off is snapped; anything larger is an error.
const OMEGA_SLACK: f64 = 1e-12;

/// Affine coefficient `s` with `target = (1 - s) from + s to`, by projection.
fn affine_param(target: Point2, from: Point2, to: Point2) -> Option<f64> {
    let d = to - from;
    let len2 = d.norm_sq();
    (len2 > 0.0).then(|| (target - from).dot(d) / len2)
}

fn edge_key(ps: &PsRefinement, e: usize) -> [usize; 2] {
    ps.base().edges()[e]
}

/// ν of the pair (edge `e`, attached triangle `t`):
/// `v_k = (1 - ν) v_ijk + ν v_ijk'` for interior edges and
/// `v_k = (1 - ν) v_ijk + ν v_ij` for boundary edges.
pub fn compute_nu(ps: &PsRefinement, e: usize, t: usize) -> Result<f64, MeshError> {
    let side = ps.side_of(t, e).ok_or(MeshError::NotAttached {
        triangle: t,
        edge: edge_key(ps, e),
    })?;
    if !ps.is_symmetric(t) {
        return Err(MeshError::NotSymmetric(t));
    }
    nu_unchecked(ps, e, t, side)
}

fn nu_unchecked(ps: &PsRefinement, e: usize, t: usize, side: usize) -> Result<f64, MeshError> {
    let base = ps.base();
    let vk = base.corner_points(t)[(side + 2) % 3];
    let c = ps.triangle_split_point(t);
    let far = match base.neighbor(t, e) {
        Some(t2) => ps.triangle_split_point(t2),
        None => ps.edge_split_point(e),
    };
    affine_param(vk, c, far).ok_or(MeshError::DegenerateDirection {
        edge: edge_key(ps, e),
    })
}

fn w_point(ps: &PsRefinement, t: usize, side: usize) -> Point2 {
    if ps.is_symmetric(t) {
        ps.base().corner_points(t)[(side + 2) % 3]
    } else {
        ps.triangle_split_point(t)
    }
}

fn checked_omega(ps: &PsRefinement, e: usize, raw: f64) -> Result<f64, MeshError> {
    if !(-OMEGA_SLACK..=1.0 + OMEGA_SLACK).contains(&raw) {
        return Err(MeshError::WeightOutOfRange {
            edge: edge_key(ps, e),
            omega: raw,
        });
    }
    Ok(raw.clamp(0.0, 1.0))
}

/// w-points and ω weights for every triangle attached to edge `e`.
pub fn compute_w_omega(ps: &PsRefinement, e: usize) -> Result<Vec<WPoint>, MeshError> {
    let base = ps.base();
    let (t0, t1) = base.edge_triangles(e);
    let side0 = ps.side_of(t0, e).expect("attached");
    let w0 = w_point(ps, t0, side0);
    let c0 = ps.triangle_split_point(t0);
    let degenerate = || MeshError::DegenerateDirection {
        edge: edge_key(ps, e),
    };
    match t1 {
        Some(t1) => {
            let side1 = ps.side_of(t1, e).expect("attached");
            let w1 = w_point(ps, t1, side1);
            let c1 = ps.triangle_split_point(t1);
            let o0 = if w0 == c0 {
                0.0
            } else {
                affine_param(c0, w0, w1).ok_or_else(degenerate)?
            };
            let o1 = if w1 == c1 {
                0.0
            } else {
                affine_param(c1, w1, w0).ok_or_else(degenerate)?
            };
            Ok(vec![
                WPoint {
                    triangle: t0,
                    w: w0,
                    omega: checked_omega(ps, e, o0)?,
                },
                WPoint {
                    triangle: t1,
                    w: w1,
                    omega: checked_omega(ps, e, o1)?,
                },
            ])
        }
        None => {
            let vij = ps.edge_split_point(e);
            let o0 = if w0 == c0 {
                0.0
            } else {
                affine_param(c0, w0, vij).ok_or_else(degenerate)?
            };
            Ok(vec![WPoint {
                triangle: t0,
                w: w0,
                omega: checked_omega(ps, e, o0)?,
            }])
        }
    }
}

pub(super) fn compute_all(ps: &PsRefinement) -> Result<Vec<[SideWeights; 3]>, MeshError> {
    let base = ps.base();
    let mut out = vec![
        [SideWeights {
            nu: None,
            omega: 0.0,
            w_point: Point2::ORIGIN
        }; 3];
        base.num_triangles()
    ];
    for e in 0..base.num_edges() {
        for wp in compute_w_omega(ps, e)? {
            let side = ps.side_of(wp.triangle, e).expect("attached");
            let nu = if ps.is_symmetric(wp.triangle) {
                Some(nu_unchecked(ps, e, wp.triangle, side)?)
            } else {
                None
            };
            out[wp.triangle][side] = SideWeights {
                nu,
                omega: wp.omega,
                w_point: wp.w,
            };
        }
    }
    Ok(out)
}

impl PsRefinement {
    /// Residual of `(1-ν)(1-ω) + ν ω' = 1` (interior) or `(1-ν)(1-ω) = 1` (boundary)
    /// on `side` of a symmetric triangle `t`. `None` for non-symmetric triangles.
    pub fn weight_identity_residual(&self, t: usize, side: usize) -> Option<f64> {
        let w = self.side_weights(t, side);
        let nu = w.nu?;
        let e = self.base().triangle_edges(t)[side];
        let lhs = match self.base().neighbor(t, e) {
            Some(t2) => {
                let s2 = self.side_of(t2, e).expect("attached");
                let omega2 = self.side_weights(t2, s2).omega;
                (1.0 - nu) * (1.0 - w.omega) + nu * omega2
            }
            None => (1.0 - nu) * (1.0 - w.omega),
        };
        Some((lhs - 1.0).abs())
    }
}
