use crate::c1space::{C1Functional, C1Space};

/// Sparse matrix mapping reduced coefficients to C¹ coefficients. Column `j` holds
/// the C¹ coefficients of reduced basis function `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecombinationMap {
    nrows: usize,
    columns: Vec<Vec<(usize, f64)>>,
    rows: Vec<Vec<(usize, f64)>>,
}

impl RecombinationMap {
    pub fn from_columns(nrows: usize, columns: Vec<Vec<(usize, f64)>>) -> Self {
        let mut rows = vec![Vec::new(); nrows];
        for (j, col) in columns.iter().enumerate() {
            for &(i, w) in col {
                rows[i].push((j, w));
            }
        }
        RecombinationMap {
            nrows,
            columns,
            rows,
        }
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, j: usize) -> &[(usize, f64)] {
        &self.columns[j]
    }

    pub fn row(&self, i: usize) -> &[(usize, f64)] {
        &self.rows[i]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.columns[j]
            .iter()
            .filter(|(r, _)| *r == i)
            .map(|(_, w)| w)
            .sum()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    /// `M c`.
    pub fn apply(&self, c: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.nrows];
        for (col, cj) in self.columns.iter().zip(c) {
            for &(i, w) in col {
                out[i] += w * cj;
            }
        }
        out
    }

    /// `rᵀ M` for a sparse row `r`, returned sparse and sorted.
    pub fn transpose_apply(&self, r: &[(usize, f64)]) -> Vec<(usize, f64)> {
        let mut out: Vec<(usize, f64)> = r
            .iter()
            .flat_map(|&(i, v)| self.rows[i].iter().map(move |&(j, w)| (j, v * w)))
            .collect();
        compress(&mut out);
        out
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.ncols()]; self.nrows];
        for (j, col) in self.columns.iter().enumerate() {
            for &(i, w) in col {
                out[i][j] += w;
            }
        }
        out
    }
}

/// Sorts by index and merges duplicates.
pub(crate) fn compress(v: &mut Vec<(usize, f64)>) {
    v.sort_unstable_by_key(|e| e.0);
    let mut merged: Vec<(usize, f64)> = Vec::with_capacity(v.len());
    for &(i, w) in v.iter() {
        match merged.last_mut() {
            Some(last) if last.0 == i => last.1 += w,
            _ => merged.push((i, w)),
        }
    }
    *v = merged;
}

/// C¹ rows of the two micro-triangles of `t` that touch `edge`.
fn micro_rows(c1: &C1Space, edge: usize, t: usize) -> [usize; 2] {
    let side = c1
        .refinement()
        .side_of(t, edge)
        .expect("triangle is attached to edge");
    [2 * side, 2 * side + 1].map(|micro| {
        c1.index_of(C1Functional::Triangle { triangle: t, micro })
            .expect("micro")
    })
}

fn omega(c1: &C1Space, edge: usize, t: usize) -> f64 {
    let ps = c1.refinement();
    ps.side_weights(t, ps.side_of(t, edge).expect("attached"))
        .omega
}

/// `B^e_{ij,k}` for edge `e_ij` and attached triangle `t_ijk`.
pub(crate) fn edge_column(c1: &C1Space, edge: usize, t: usize) -> Vec<(usize, f64)> {
    let own = 1.0 - omega(c1, edge, t);
    let mut col: Vec<(usize, f64)> = micro_rows(c1, edge, t).iter().map(|&i| (i, own)).collect();
    if let Some(t2) = c1.refinement().base().neighbor(t, edge) {
        let w = omega(c1, edge, t2);
        col.extend(micro_rows(c1, edge, t2).iter().map(|&i| (i, w)));
    }
    col.retain(|(_, w)| *w != 0.0);
    compress(&mut col);
    col
}

/// `B^e_{ij}` for a boundary edge.
pub(crate) fn boundary_column(c1: &C1Space, edge: usize) -> Vec<(usize, f64)> {
    let (t, _) = c1.refinement().base().edge_triangles(edge);
    let w = omega(c1, edge, t);
    let mut col: Vec<(usize, f64)> = (0..2)
        .map(|half| {
            (
                c1.index_of(C1Functional::BoundaryEdge { edge, half })
                    .expect("boundary edge"),
                1.0,
            )
        })
        .collect();
    col.extend(micro_rows(c1, edge, t).iter().map(|&i| (i, w)));
    col.retain(|(_, w)| *w != 0.0);
    compress(&mut col);
    col
}
