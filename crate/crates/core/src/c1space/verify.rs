use super::{C1Space, SplineFunction};
use crate::bezier::{check_smoothness, SmoothnessReport};
use crate::mesh::{Point2, PsRefinement};
use serde::Serialize;

/// Which family a refinement edge belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsEdgeKind {
    /// `[v_ij, v_ijk]`: edge split point to triangle split point.
    SplitToEdge,
    /// `[v_i, v_ijk]`: macro corner to triangle split point.
    SplitToCorner,
    /// Half `[v_i, v_ij]` of an interior macro edge.
    MacroEdge,
}

impl PsEdgeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PsEdgeKind::SplitToEdge => "split-to-edge",
            PsEdgeKind::SplitToCorner => "split-to-corner",
            PsEdgeKind::MacroEdge => "macro-edge",
        }
    }
}

/// Smoothness of one interior refinement edge.
#[derive(Debug, Clone, Serialize)]
pub struct EdgeSmoothness {
    /// `6 t + m` for the edge between micros `m` and `m + 1` of triangle `t`;
    /// `6 |T| + 2 r + h` for half `h` of the `r`-th interior macro edge.
    pub id: usize,
    pub kind: PsEdgeKind,
    /// `(macro, micro)` on either side.
    pub sides: [(usize, usize); 2],
    pub endpoints: [Point2; 2],
    pub report: SmoothnessReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct GlobalSmoothnessReport {
    pub order: u8,
    pub edges: Vec<EdgeSmoothness>,
    pub max_residual: f64,
    pub scale: f64,
}

impl GlobalSmoothnessReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol * self.scale.max(f64::MIN_POSITIVE)
    }

    /// Largest residual over edges of one kind.
    pub fn max_residual_of(&self, kind: PsEdgeKind) -> f64 {
        self.edges
            .iter()
            .filter(|e| e.kind == kind)
            .map(|e| e.report.max_residual)
            .fold(0.0, f64::max)
    }
}

/// An interior refinement edge: `(id, kind, (macro, micro) on side a, (macro, micro) on side b)`.
pub type PsEdge = (usize, PsEdgeKind, (usize, usize), (usize, usize));

/// All interior edges of the refinement.
pub fn interior_ps_edges(ps: &PsRefinement) -> Vec<PsEdge> {
    let base = ps.base();
    let nt = base.num_triangles();
    let mut out = Vec::with_capacity(6 * nt + 2 * base.num_edges());
    for t in 0..nt {
        for m in 0..6 {
            let kind = if m % 2 == 0 {
                PsEdgeKind::SplitToEdge
            } else {
                PsEdgeKind::SplitToCorner
            };
            out.push((6 * t + m, kind, (t, m), (t, (m + 1) % 6)));
        }
    }
    let mut rank = 0;
    for e in 0..base.num_edges() {
        if let (t0, Some(t1)) = base.edge_triangles(e) {
            let [lo, hi] = base.edges()[e];
            for (h, (a, b)) in [(lo, hi), (hi, lo)].into_iter().enumerate() {
                out.push((
                    6 * nt + 2 * rank + h,
                    PsEdgeKind::MacroEdge,
                    (t0, micro_for(ps, t0, a, b)),
                    (t1, micro_for(ps, t1, a, b)),
                ));
            }
            rank += 1;
        }
    }
    out
}

fn micro_for(ps: &PsRefinement, t: usize, a: usize, b: usize) -> usize {
    let corners = ps.base().corners(t);
    let pa = corners.iter().position(|&v| v == a).expect("corner");
    let pb = corners.iter().position(|&v| v == b).expect("corner");
    crate::mesh::micro_label(pa, pb)
}

/// Common corners of two micro-triangles.
pub(crate) fn shared_corners(a: &[Point2; 3], b: &[Point2; 3]) -> (Point2, Point2) {
    let common: Vec<Point2> = a.iter().filter(|p| b.contains(p)).copied().collect();
    (common[0], common[1])
}

/// Smoothness reports of `s` across every interior refinement edge.
pub fn verify_global_smoothness(s: &SplineFunction, order: u8) -> GlobalSmoothnessReport {
    let ps = s.refinement();
    let edges: Vec<EdgeSmoothness> = interior_ps_edges(ps)
        .into_iter()
        .map(|(id, kind, (ta, ma), (tb, mb))| {
            let (pa, pb) = (s.patch(ta, ma), s.patch(tb, mb));
            let (p1, p2) = shared_corners(&pa.triangle, &pb.triangle);
            let report =
                check_smoothness(pa, pb, (p1, p2), order).expect("refinement edges are shared");
            EdgeSmoothness {
                id,
                kind,
                sides: [(ta, ma), (tb, mb)],
                endpoints: [p1, p2],
                report,
            }
        })
        .collect();
    let max_residual = edges
        .iter()
        .map(|e| e.report.max_residual)
        .fold(0.0, f64::max);
    GlobalSmoothnessReport {
        order,
        edges,
        max_residual,
        scale: s.max_abs_coeff(),
    }
}

impl C1Space {
    pub fn verify_global_smoothness(
        &self,
        s: &SplineFunction,
        order: u8,
    ) -> GlobalSmoothnessReport {
        verify_global_smoothness(s, order)
    }
}
