use std::fmt::Write as _;

use crate::complex::SimplicialComplex2;

/// Integer matrix stored by columns; each column is a list of `(row, value)`
/// sorted by row with no zero entries.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseIntMatrix {
    rows: usize,
    columns: Vec<Vec<(u32, i64)>>,
}

impl SparseIntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        SparseIntMatrix {
            rows,
            columns: vec![Vec::new(); cols],
        }
    }

    pub fn from_dense(dense: &[Vec<i64>]) -> Self {
        let rows = dense.len();
        let cols = dense.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (r, row) in dense.iter().enumerate() {
            for (c, &x) in row.iter().enumerate() {
                m.add(r, c, x);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, c: usize) -> &[(u32, i64)] {
        &self.columns[c]
    }

    pub fn columns(&self) -> &[Vec<(u32, i64)>] {
        &self.columns
    }

    pub fn get(&self, r: usize, c: usize) -> i64 {
        self.columns[c]
            .binary_search_by_key(&(r as u32), |&(row, _)| row)
            .map_or(0, |i| self.columns[c][i].1)
    }

    /// Adds `x` to entry `(r, c)`, dropping it if it becomes zero.
    pub fn add(&mut self, r: usize, c: usize, x: i64) {
        assert!(r < self.rows, "row {r} out of range");
        let col = &mut self.columns[c];
        match col.binary_search_by_key(&(r as u32), |&(row, _)| row) {
            Ok(i) => {
                col[i].1 += x;
                if col[i].1 == 0 {
                    col.remove(i);
                }
            }
            Err(i) if x != 0 => col.insert(i, (r as u32, x)),
            Err(_) => {}
        }
    }

    pub fn is_zero(&self) -> bool {
        self.columns.iter().all(Vec::is_empty)
    }

    pub fn to_dense(&self) -> Vec<Vec<i64>> {
        let mut d = vec![vec![0; self.cols()]; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, x) in col {
                d[r as usize][c] = x;
            }
        }
        d
    }

    /// `self * other`, or `None` on a dimension mismatch.
    pub fn mul(&self, other: &SparseIntMatrix) -> Option<SparseIntMatrix> {
        if self.cols() != other.rows {
            return None;
        }
        let mut out = SparseIntMatrix::zeros(self.rows, other.cols());
        for (c, col) in other.columns.iter().enumerate() {
            let mut acc: std::collections::BTreeMap<u32, i64> = Default::default();
            for &(k, y) in col {
                for &(r, x) in &self.columns[k as usize] {
                    *acc.entry(r).or_default() += x * y;
                }
            }
            out.columns[c] = acc.into_iter().filter(|&(_, v)| v != 0).collect();
        }
        Some(out)
    }

    /// Row-major, space-separated text.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for row in self.to_dense() {
            let line: Vec<String> = row.iter().map(i64::to_string).collect();
            let _ = writeln!(s, "{}", line.join(" "));
        }
        s
    }
}

/// Boundary maps of a chain complex concentrated in degrees 0..=2. Rows index
/// the lower-dimensional cells, so `d1 · d2 = 0`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundaryMatrices {
    pub d1: SparseIntMatrix,
    pub d2: SparseIntMatrix,
}

impl BoundaryMatrices {
    pub fn chain_ranks(&self) -> [usize; 3] {
        [self.d1.rows(), self.d1.cols(), self.d2.cols()]
    }

    pub fn composition_vanishes(&self) -> bool {
        self.d1.mul(&self.d2).is_some_and(|p| p.is_zero())
    }
}

/// Simplicial boundary with the orientation induced by increasing vertex ids:
/// `∂[a b] = b − a`, `∂[a b c] = [b c] − [a c] + [a b]`.
pub fn boundary_matrices(k: &SimplicialComplex2) -> BoundaryMatrices {
    let mut d1 = SparseIntMatrix::zeros(k.num_vertices(), k.num_edges());
    for (e, &[a, b]) in k.edges().iter().enumerate() {
        d1.columns[e] = vec![(a, -1), (b, 1)];
    }
    let mut d2 = SparseIntMatrix::zeros(k.num_edges(), k.num_faces());
    for f in 0..k.num_faces() {
        let [ab, ac, bc] = k.face_edges(f);
        let mut col = vec![(ab, 1), (ac, -1), (bc, 1)];
        col.sort_unstable();
        d2.columns[f] = col;
    }
    BoundaryMatrices { d1, d2 }
}
