//! C¹ cubic Powell–Sabin splines and their reduced, C²-super-smooth B-spline basis.
//!
//! The crate is organised bottom-up:
//!
//! * [`mesh`]: triangulations, the Powell–Sabin 6-split, symmetry detection and the
//!   ν/ω weights.
//! * [`bezier`]: cubic Bernstein–Bézier patches, blossoms, smoothness residuals.
//! * [`c1space`]: the full C¹ space through its dual functionals.
//! * [`reduced`]: the recombined super-smooth basis and its duals.
//! * [`fit`]: cubic projection, least-squares fitting, convergence studies.
//! * [`io`]: JSON/CSV exchange formats.

pub mod bezier;
pub mod c1space;
pub mod fit;
pub mod io;
pub mod mesh;
pub mod reduced;

pub use bezier::{check_smoothness, BezierError, Cubic, CubicPatch, SmoothnessReport};
pub use c1space::{C1Functional, C1Space, DualVector, SpaceError, SplineFunction};
pub use fit::{FitError, SpaceKind};
pub use mesh::{MeshError, Point2, PsRefinement, RefineOptions, SplitStrategy, Triangulation};
pub use reduced::{ReducedError, ReducedFunctional, ReducedSpace};
