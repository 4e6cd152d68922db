//! JSON exchange formats.
//!
//! * `mesh.json`: `{"vertices": [[x, y], ...], "triangles": [[i, j, k], ...]}`
//! * `ps.json`: the mesh fields plus `"split_points"` (one per triangle),
//!   `"edge_splits"` (`[{"edge": [i, j], "point": [x, y]}]`, one per edge, sorted)
//!   and `"symmetric"` (one flag per triangle).
//! * `spline.json`: `{"space": "c1" | "reduced", "mesh": <ps.json>, "coefficients": [...]}`
//!   with an optional `"patches"` dump of every micro-triangle's BB net.

use crate::bezier::CubicPatch;
use crate::fit::SpaceKind;
use crate::mesh::{MeshError, Point2, PsRefinement, RefineOptions, Triangulation};
use serde::{Deserialize, Serialize};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: String,
        source: std::io::Error,
    },
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error("{0}")]
    Inconsistent(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
}

impl MeshFile {
    pub fn from_mesh(t: &Triangulation) -> Self {
        MeshFile {
            vertices: t.vertices().to_vec(),
            triangles: t.triangles().to_vec(),
        }
    }

    pub fn to_mesh(&self) -> Result<Triangulation, MeshError> {
        Triangulation::new(self.vertices.clone(), self.triangles.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EdgeSplit {
    pub edge: [usize; 2],
    pub point: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsFile {
    pub vertices: Vec<Point2>,
    pub triangles: Vec<[usize; 3]>,
    pub split_points: Vec<Point2>,
    pub edge_splits: Vec<EdgeSplit>,
    pub symmetric: Vec<bool>,
}

impl PsFile {
    pub fn from_refinement(ps: &PsRefinement) -> Self {
        let base = ps.base();
        PsFile {
            vertices: base.vertices().to_vec(),
            triangles: base.triangles().to_vec(),
            split_points: ps.triangle_split_points().to_vec(),
            edge_splits: base
                .edges()
                .iter()
                .zip(ps.edge_split_points())
                .map(|(&edge, &point)| EdgeSplit { edge, point })
                .collect(),
            symmetric: ps.symmetric_flags(),
        }
    }

    /// Rebuilds the refinement. Interior edge split points are recomputed and must
    /// match the stored ones; a `false` symmetry flag excludes a triangle from the
    /// symmetric set, a `true` flag must be confirmed by the geometry.
    pub fn to_refinement(&self) -> Result<PsRefinement, IoError> {
        let base = Triangulation::new(self.vertices.clone(), self.triangles.clone())?;
        if self.split_points.len() != base.num_triangles() {
            return Err(IoError::Inconsistent(format!(
                "{} split points for {} triangles",
                self.split_points.len(),
                base.num_triangles()
            )));
        }
        let mut options = RefineOptions {
            triangle_points: self.split_points.iter().copied().enumerate().collect(),
            ..Default::default()
        };
        let mut given = Vec::with_capacity(self.edge_splits.len());
        for s in &self.edge_splits {
            let key = [s.edge[0].min(s.edge[1]), s.edge[0].max(s.edge[1])];
            let e = base
                .edge_index(key[0], key[1])
                .ok_or(MeshError::UnknownEdge(key))?;
            if base.is_boundary_edge(e) {
                options.boundary_points.insert(key, s.point);
            }
            given.push((e, s.point));
        }
        let scale = base.scale();
        let ps = PsRefinement::new(base, &options)?;
        for (e, p) in given {
            if ps.edge_split_point(e).dist(p) > 1e-12 * scale {
                return Err(IoError::Inconsistent(format!(
                    "edge split point of {:?} does not lie on the segment between the split points",
                    ps.base().edges()[e]
                )));
            }
        }
        if self.symmetric.is_empty() {
            return Ok(ps);
        }
        for (t, (&flag, detected)) in self.symmetric.iter().zip(ps.symmetric_flags()).enumerate() {
            if flag && !detected {
                return Err(IoError::Inconsistent(format!(
                    "triangle {t} is marked symmetric but is not"
                )));
            }
        }
        Ok(ps.restrict_symmetry(&self.symmetric)?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplineFile {
    pub space: SpaceKind,
    pub mesh: PsFile,
    pub coefficients: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patches: Option<Vec<CubicPatch>>,
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T, IoError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), IoError> {
    let path = path.as_ref();
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|source| IoError::File {
        path: path.display().to_string(),
        source,
    })
}

/// Reads either a plain mesh file or a `ps.json` (whose extra fields are ignored).
pub fn read_mesh(path: impl AsRef<Path>) -> Result<Triangulation, IoError> {
    let m: MeshFile = read_json(path)?;
    Ok(m.to_mesh()?)
}
