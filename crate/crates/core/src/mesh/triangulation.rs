use super::point::{orient, Point2};
use super::MeshError;
use std::collections::HashMap;

/// Relative threshold for degenerate triangles (times the squared bounding-box scale).
pub const DEGENERATE_AREA_TOL: f64 = 1e-14;
/// Relative distance under which two vertices are considered duplicates.
pub const DUPLICATE_VERTEX_TOL: f64 = 1e-12;

/// A conforming triangulation `(V, E, T)` of a polygonal domain.
///
/// Triangle corners are stored as given; all derived data uses the sorted corner
/// triple `[i, j, k]` with `i < j < k`. Side `0` is the edge `(i, j)` opposite `k`,
/// side `1` is `(j, k)` opposite `i`, and side `2` is `(k, i)` opposite `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Triangulation {
    vertices: Vec<Point2>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<[usize; 2]>,
    edge_triangles: Vec<(usize, Option<usize>)>,
    triangle_edges: Vec<[usize; 3]>,
    scale: f64,
}

impl Triangulation {
    /// Validates the input and derives edges, boundary flags and adjacency.
    pub fn new(vertices: Vec<Point2>, triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(MeshError::NonFiniteVertex(i));
        }
        for (t, tri) in triangles.iter().enumerate() {
            for &v in tri {
                if v >= vertices.len() {
                    return Err(MeshError::IndexOutOfRange {
                        triangle: t,
                        index: v,
                        len: vertices.len(),
                    });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::DegenerateTriangle {
                    triangle: t,
                    area: 0.0,
                });
            }
        }

        let scale = bbox_scale(&vertices);
        check_duplicate_vertices(&vertices, scale)?;

        for (t, tri) in triangles.iter().enumerate() {
            let area = 0.5 * orient(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]).abs();
            if area < DEGENERATE_AREA_TOL * scale * scale {
                return Err(MeshError::DegenerateTriangle { triangle: t, area });
            }
        }

        let mut seen = HashMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            if let Some(first) = seen.insert(sorted3(*tri), t) {
                return Err(MeshError::DuplicateTriangle { first, second: t });
            }
        }

        let mut edge_index: HashMap<[usize; 2], usize> = HashMap::new();
        let mut attached: Vec<Vec<usize>> = Vec::new();
        let mut keys: Vec<[usize; 2]> = Vec::new();
        for (t, tri) in triangles.iter().enumerate() {
            let [i, j, k] = sorted3(*tri);
            for e in [[i, j], [j, k], [i, k]] {
                let id = *edge_index.entry(e).or_insert_with(|| {
                    keys.push(e);
                    attached.push(Vec::new());
                    keys.len() - 1
                });
                attached[id].push(t);
            }
        }

        // canonical edge order: lexicographic on the sorted pair
        let mut order: Vec<usize> = (0..keys.len()).collect();
        order.sort_by_key(|&e| keys[e]);
        let mut edges = Vec::with_capacity(keys.len());
        let mut edge_triangles = Vec::with_capacity(keys.len());
        let mut remap = vec![0usize; keys.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
            let e = keys[old];
            let tris = &attached[old];
            match tris.as_slice() {
                [a] => edge_triangles.push((*a, None)),
                [a, b] => {
                    // the two triangles must lie on opposite sides of the edge
                    let (p, q) = (vertices[e[0]], vertices[e[1]]);
                    let oa = orient(p, q, vertices[third(triangles[*a], e)]);
                    let ob = orient(p, q, vertices[third(triangles[*b], e)]);
                    if oa * ob >= 0.0 {
                        return Err(MeshError::Overlap {
                            edge: e,
                            triangles: [*a, *b],
                        });
                    }
                    edge_triangles.push((*a.min(b), Some(*a.max(b))));
                }
                _ => {
                    return Err(MeshError::NonManifoldEdge {
                        edge: e,
                        count: tris.len(),
                    })
                }
            }
            edges.push(e);
        }

        let triangle_edges = triangles
            .iter()
            .map(|tri| {
                let [i, j, k] = sorted3(*tri);
                [
                    remap[edge_index[&[i, j]]],
                    remap[edge_index[&[j, k]]],
                    remap[edge_index[&[i, k]]],
                ]
            })
            .collect();

        let tri = Triangulation {
            vertices,
            triangles,
            edges,
            edge_triangles,
            triangle_edges,
            scale,
        };
        tri.check_hanging_vertices()?;
        Ok(tri)
    }

    // A vertex strictly inside a boundary edge means the incidence is not conforming.
    fn check_hanging_vertices(&self) -> Result<(), MeshError> {
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if !self.is_boundary_edge(e) {
                continue;
            }
            let (p, q) = (self.vertices[a], self.vertices[b]);
            let d = q - p;
            let len2 = d.norm_sq();
            for (v, &x) in self.vertices.iter().enumerate() {
                if v == a || v == b {
                    continue;
                }
                let t = (x - p).dot(d) / len2;
                let off = d.cross(x - p).abs() / len2.sqrt();
                if t > 1e-12 && t < 1.0 - 1e-12 && off <= DUPLICATE_VERTEX_TOL * self.scale {
                    return Err(MeshError::HangingVertex {
                        vertex: v,
                        edge: [a, b],
                    });
                }
            }
        }
        Ok(())
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    /// Triangles as given on input.
    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    /// Sorted corner indices `[i, j, k]` with `i < j < k`.
    pub fn corners(&self, t: usize) -> [usize; 3] {
        sorted3(self.triangles[t])
    }

    pub fn corner_points(&self, t: usize) -> [Point2; 3] {
        self.corners(t).map(|v| self.vertices[v])
    }

    /// Edges as sorted vertex pairs, in lexicographic order.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edge_triangles
            .iter()
            .filter(|(_, b)| b.is_none())
            .count()
    }

    pub fn is_boundary_edge(&self, e: usize) -> bool {
        self.edge_triangles[e].1.is_none()
    }

    /// Triangles attached to edge `e` (the smaller index first).
    pub fn edge_triangles(&self, e: usize) -> (usize, Option<usize>) {
        self.edge_triangles[e]
    }

    /// The other triangle across edge `e`, if any.
    pub fn neighbor(&self, t: usize, e: usize) -> Option<usize> {
        match self.edge_triangles[e] {
            (a, Some(b)) if a == t => Some(b),
            (a, Some(b)) if b == t => Some(a),
            _ => None,
        }
    }

    /// Edge indices of triangle `t` by side (see the type docs).
    pub fn triangle_edges(&self, t: usize) -> [usize; 3] {
        self.triangle_edges[t]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    /// Position of the boundary edge `e` among all boundary edges (canonical order).
    pub fn boundary_edge_rank(&self) -> Vec<Option<usize>> {
        let mut next = 0;
        (0..self.edges.len())
            .map(|e| {
                self.is_boundary_edge(e).then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect()
    }

    /// Largest side of the bounding box; the length unit for relative tolerances.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Longest edge length.
    pub fn mesh_size(&self) -> f64 {
        self.edges
            .iter()
            .map(|&[a, b]| self.vertices[a].dist(self.vertices[b]))
            .fold(0.0, f64::max)
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.corner_points(t);
        0.5 * orient(a, b, c).abs()
    }

    /// Red refinement: every triangle is split into four through its edge midpoints.
    pub fn uniform_refine(&self, levels: usize) -> Triangulation {
        let mut current = self.clone();
        for _ in 0..levels {
            current = current.red_split();
        }
        current
    }

    fn red_split(&self) -> Triangulation {
        let mut vertices = self.vertices.clone();
        let mids: Vec<usize> = self
            .edges
            .iter()
            .map(|&[a, b]| {
                vertices.push(self.vertices[a].lerp(self.vertices[b], 0.5));
                vertices.len() - 1
            })
            .collect();
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for t in 0..self.triangles.len() {
            let [i, j, k] = self.corners(t);
            let [eij, ejk, eki] = self.triangle_edges[t].map(|e| mids[e]);
            triangles.push([i, eij, eki]);
            triangles.push([eij, j, ejk]);
            triangles.push([eki, ejk, k]);
            triangles.push([eij, ejk, eki]);
        }
        Triangulation::new(vertices, triangles).expect("red refinement of a valid mesh is valid")
    }
}

pub(crate) fn sorted3(mut t: [usize; 3]) -> [usize; 3] {
    t.sort_unstable();
    t
}

fn third(tri: [usize; 3], e: [usize; 2]) -> usize {
    *tri.iter()
        .find(|&&v| v != e[0] && v != e[1])
        .expect("edge belongs to triangle")
}

fn bbox_scale(vertices: &[Point2]) -> f64 {
    let (mut lo, mut hi) = (
        Point2::new(f64::INFINITY, f64::INFINITY),
        Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY),
    );
    for p in vertices {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let s = (hi.x - lo.x).max(hi.y - lo.y);
    if s > 0.0 {
        s
    } else {
        1.0
    }
}

fn check_duplicate_vertices(vertices: &[Point2], scale: f64) -> Result<(), MeshError> {
    let tol = DUPLICATE_VERTEX_TOL * scale;
    let mut order: Vec<usize> = (0..vertices.len()).collect();
    order.sort_by(|&a, &b| vertices[a].x.total_cmp(&vertices[b].x));
    for (n, &a) in order.iter().enumerate() {
        for &b in &order[n + 1..] {
            if vertices[b].x - vertices[a].x > tol {
                break;
            }
            if vertices[a].dist(vertices[b]) <= tol {
                return Err(MeshError::DuplicateVertex(a.min(b), a.max(b)));
            }
        }
    }
    Ok(())
}
