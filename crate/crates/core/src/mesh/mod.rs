//! Triangulations, the Powell–Sabin 6-split, and the geometric weights that the
//! spline spaces are built from.

pub mod generate;
mod point;
mod refine;
mod triangulation;
mod weights;

pub use point::{barycentric, orient, Point2};
pub use refine::{
    micro_label, split_point, PsRefinement, RefineOptions, SideWeights, SplitStrategy,
    SymmetryInfo, COLLINEAR_TOL, MICRO_LABELS,
};
pub use triangulation::{Triangulation, DEGENERATE_AREA_TOL, DUPLICATE_VERTEX_TOL};
pub use weights::{compute_nu, compute_w_omega, WPoint};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("triangulation has no triangles")]
    Empty,
    #[error("vertex {0} has a non-finite coordinate")]
    NonFiniteVertex(usize),
    #[error("triangle {triangle} references vertex {index} but there are only {len} vertices")]
    IndexOutOfRange {
        triangle: usize,
        index: usize,
        len: usize,
    },
    #[error("triangle {triangle} is degenerate (area {area:e})")]
    DegenerateTriangle { triangle: usize, area: f64 },
    #[error("vertices {0} and {1} coincide")]
    DuplicateVertex(usize, usize),
    #[error("triangles {first} and {second} have the same corners")]
    DuplicateTriangle { first: usize, second: usize },
    #[error("edge {edge:?} is attached to {count} triangles")]
    NonManifoldEdge { edge: [usize; 2], count: usize },
    #[error("triangles {triangles:?} overlap across edge {edge:?}")]
    Overlap {
        edge: [usize; 2],
        triangles: [usize; 2],
    },
    #[error("vertex {vertex} lies inside boundary edge {edge:?}")]
    HangingVertex { vertex: usize, edge: [usize; 2] },
    #[error("split point ({x}, {y}) is not strictly inside triangle {triangle}")]
    SplitPointOutside { triangle: usize, x: f64, y: f64 },
    #[error("segment between the split points of triangles {triangles:?} does not cross the open edge {edge:?}")]
    SplitSegmentMissesEdge {
        edge: [usize; 2],
        triangles: [usize; 2],
    },
    #[error("edge split point for {edge:?} is not strictly inside the edge")]
    EdgeSplitOutside { edge: [usize; 2] },
    #[error("edge {edge:?} is not a boundary edge; its split point is determined by the triangle split points")]
    EdgeSplitNotBoundary { edge: [usize; 2] },
    #[error("no edge {0:?} in the triangulation")]
    UnknownEdge([usize; 2]),
    #[error("triangle {triangle} is not attached to edge {edge:?}")]
    NotAttached { triangle: usize, edge: [usize; 2] },
    #[error("triangle {0} is not symmetrically refined; nu is undefined")]
    NotSymmetric(usize),
    #[error("degenerate direction while solving an affine weight on edge {edge:?}")]
    DegenerateDirection { edge: [usize; 2] },
    #[error("weight omega = {omega} on edge {edge:?} is outside [0, 1]")]
    WeightOutOfRange { edge: [usize; 2], omega: f64 },
    #[error("{0}")]
    Invalid(String),
}
