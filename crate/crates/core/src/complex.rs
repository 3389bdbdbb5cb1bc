//! Finite simplicial complexes of dimension at most two.
//!
//! Cells are identified canonically by their sorted vertex lists and stored
//! per dimension in lexicographic order, so every traversal in the crate is
//! deterministic. Vertex ids are dense (`0..num_vertices`).

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ComplexError {
    #[error("invalid simplex {0:?}: expected 1 to 3 distinct vertices")]
    InvalidSimplex(Vec<u32>),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("closure violated: {0} is listed but its face {1} is missing")]
    NotClosed(Simplex, Simplex),
}

/// A handle to a cell of a [`SimplicialComplex2`]: its dimension and its
/// position in the canonical order of that dimension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Cell {
    pub dim: u8,
    pub index: u32,
}

impl Cell {
    pub const fn vertex(index: u32) -> Self {
        Cell { dim: 0, index }
    }
    pub const fn edge(index: u32) -> Self {
        Cell { dim: 1, index }
    }
    pub const fn face(index: u32) -> Self {
        Cell { dim: 2, index }
    }
    pub fn idx(self) -> usize {
        self.index as usize
    }
}

/// A sorted list of one to three vertex ids.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Simplex {
    len: u8,
    verts: [u32; 3],
}

impl Simplex {
    /// Canonicalizes `verts`; fails on 0 or more than 3 vertices or repeats.
    pub fn new(verts: &[u32]) -> Result<Self, ComplexError> {
        if verts.is_empty() || verts.len() > 3 {
            return Err(ComplexError::InvalidSimplex(verts.to_vec()));
        }
        let mut buf = [0u32; 3];
        buf[..verts.len()].copy_from_slice(verts);
        buf[..verts.len()].sort_unstable();
        if buf[..verts.len()].windows(2).any(|w| w[0] == w[1]) {
            return Err(ComplexError::InvalidSimplex(verts.to_vec()));
        }
        Ok(Simplex {
            len: verts.len() as u8,
            verts: buf,
        })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    pub fn dim(&self) -> u8 {
        self.len - 1
    }
}

impl fmt::Debug for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

/// Spelled as in the mesh text format: `v 3`, `e 3 7`, `t 1 4 9`.
impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = ["v", "e", "t"][self.dim() as usize];
        write!(f, "{tag}")?;
        for v in self.vertices() {
            write!(f, " {v}")?;
        }
        Ok(())
    }
}

/// Compressed adjacency lists: `targets[offsets[i]..offsets[i + 1]]`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Csr {
    offsets: Vec<u32>,
    targets: Vec<u32>,
}

impl Csr {
    fn build(n: usize, pairs: impl Iterator<Item = (u32, u32)> + Clone) -> Self {
        let mut counts = vec![0u32; n + 1];
        for (src, _) in pairs.clone() {
            counts[src as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut targets = vec![0u32; counts[n] as usize];
        for (src, dst) in pairs {
            targets[fill[src as usize] as usize] = dst;
            fill[src as usize] += 1;
        }
        Csr {
            offsets: counts,
            targets,
        }
    }

    fn get(&self, i: usize) -> &[u32] {
        &self.targets[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }
}

/// A finite simplicial complex of dimension at most two with full facet and
/// cofacet incidence. Immutable once built.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimplicialComplex2 {
    num_vertices: usize,
    edges: Vec<[u32; 2]>,
    faces: Vec<[u32; 3]>,
    face_edges: Vec<[u32; 3]>,
    edge_index: HashMap<[u32; 2], u32>,
    vertex_cofacets: Csr,
    edge_cofacets: Csr,
}

impl SimplicialComplex2 {
    /// Builds the closure of `simplices`. Vertex ids must already be dense;
    /// any id below the maximum that never appears becomes an isolated vertex.
    pub fn from_simplices<S: AsRef<[u32]>>(simplices: &[S]) -> Result<Self, ComplexError> {
        let mut max_vertex: Option<u32> = None;
        let mut edges = BTreeSet::new();
        let mut faces = BTreeSet::new();
        for s in simplices {
            let s = Simplex::new(s.as_ref())?;
            let v = s.vertices();
            max_vertex = max_vertex.max(v.iter().copied().max());
            match v.len() {
                2 => {
                    edges.insert([v[0], v[1]]);
                }
                3 => {
                    faces.insert([v[0], v[1], v[2]]);
                    edges.insert([v[0], v[1]]);
                    edges.insert([v[0], v[2]]);
                    edges.insert([v[1], v[2]]);
                }
                _ => {}
            }
        }
        let num_vertices = max_vertex.map_or(0, |m| m as usize + 1);
        Ok(Self::assemble(
            num_vertices,
            edges.into_iter().collect(),
            faces.into_iter().collect(),
        ))
    }

    /// `edges` and `faces` must be sorted, deduplicated and closed.
    fn assemble(num_vertices: usize, edges: Vec<[u32; 2]>, faces: Vec<[u32; 3]>) -> Self {
        let edge_index: HashMap<[u32; 2], u32> = edges
            .iter()
            .enumerate()
            .map(|(i, e)| (*e, i as u32))
            .collect();
        let face_edges: Vec<[u32; 3]> = faces
            .iter()
            .map(|&[a, b, c]| {
                [
                    edge_index[&[a, b]],
                    edge_index[&[a, c]],
                    edge_index[&[b, c]],
                ]
            })
            .collect();
        let vertex_cofacets = Csr::build(
            num_vertices,
            edges
                .iter()
                .enumerate()
                .flat_map(|(i, e)| [(e[0], i as u32), (e[1], i as u32)]),
        );
        // Faces are visited in order, so each edge's cofacet list is sorted.
        let edge_cofacets = Csr::build(
            edges.len(),
            face_edges
                .iter()
                .enumerate()
                .flat_map(|(i, fe)| fe.iter().map(move |&e| (e, i as u32))),
        );
        // Vertex cofacets must be in edge-index order; Csr preserves the
        // enumeration order, which already is.
        SimplicialComplex2 {
            num_vertices,
            edges,
            faces,
            face_edges,
            edge_index,
            vertex_cofacets,
            edge_cofacets,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }
    pub fn num_cells(&self) -> usize {
        self.num_vertices + self.edges.len() + self.faces.len()
    }
    pub fn count(&self, dim: u8) -> usize {
        match dim {
            0 => self.num_vertices,
            1 => self.edges.len(),
            2 => self.faces.len(),
            _ => 0,
        }
    }
    pub fn dimension(&self) -> Option<u8> {
        if !self.faces.is_empty() {
            Some(2)
        } else if !self.edges.is_empty() {
            Some(1)
        } else if self.num_vertices > 0 {
            Some(0)
        } else {
            None
        }
    }

    pub fn edges(&self) -> &[[u32; 2]] {
        &self.edges
    }
    pub fn faces(&self) -> &[[u32; 3]] {
        &self.faces
    }
    pub fn edge(&self, e: usize) -> [u32; 2] {
        self.edges[e]
    }
    pub fn face(&self, f: usize) -> [u32; 3] {
        self.faces[f]
    }
    /// Edge indices of face `f`, ordered `[ab, ac, bc]` for `f = [a, b, c]`.
    pub fn face_edges(&self, f: usize) -> [u32; 3] {
        self.face_edges[f]
    }
    pub fn edge_cofaces(&self, e: usize) -> &[u32] {
        self.edge_cofacets.get(e)
    }
    pub fn vertex_coedges(&self, v: usize) -> &[u32] {
        self.vertex_cofacets.get(v)
    }

    pub fn find_edge(&self, a: u32, b: u32) -> Option<u32> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edge_index.get(&key).copied()
    }

    pub fn find_face(&self, verts: [u32; 3]) -> Option<u32> {
        let mut v = verts;
        v.sort_unstable();
        self.faces.binary_search(&v).ok().map(|i| i as u32)
    }

    /// Looks up a cell by its vertex list.
    pub fn find(&self, s: &Simplex) -> Option<Cell> {
        let v = s.vertices();
        match v.len() {
            1 => ((v[0] as usize) < self.num_vertices).then(|| Cell::vertex(v[0])),
            2 => self.find_edge(v[0], v[1]).map(Cell::edge),
            3 => self.find_face([v[0], v[1], v[2]]).map(Cell::face),
            _ => None,
        }
    }

    pub fn contains(&self, c: Cell) -> bool {
        c.idx() < self.count(c.dim)
    }

    pub fn simplex(&self, c: Cell) -> Simplex {
        let verts: &[u32] = match c.dim {
            0 => return Simplex::new(&[c.index]).expect("single vertex"),
            1 => &self.edges[c.idx()],
            _ => &self.faces[c.idx()],
        };
        Simplex::new(verts).expect("stored cells are canonical")
    }

    /// Codimension-one faces of `c`.
    pub fn facets(&self, c: Cell) -> Vec<Cell> {
        match c.dim {
            1 => self.edges[c.idx()]
                .iter()
                .map(|&v| Cell::vertex(v))
                .collect(),
            2 => self.face_edges[c.idx()]
                .iter()
                .map(|&e| Cell::edge(e))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// Codimension-one cofaces of `c`.
    pub fn cofacets(&self, c: Cell) -> Vec<Cell> {
        match c.dim {
            0 => self
                .vertex_coedges(c.idx())
                .iter()
                .map(|&e| Cell::edge(e))
                .collect(),
            1 => self
                .edge_cofaces(c.idx())
                .iter()
                .map(|&f| Cell::face(f))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// True iff `a` is a codimension-one face of `b`.
    pub fn is_facet(&self, a: Cell, b: Cell) -> bool {
        if a.dim + 1 != b.dim || !self.contains(a) || !self.contains(b) {
            return false;
        }
        match b.dim {
            1 => self.edges[b.idx()].contains(&a.index),
            2 => self.face_edges[b.idx()].contains(&a.index),
            _ => false,
        }
    }

    /// All cells in canonical order: vertices, then edges, then faces.
    pub fn cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..3u8)
            .flat_map(move |d| (0..self.count(d) as u32).map(move |i| Cell { dim: d, index: i }))
    }

    /// The other endpoint of edge `e` seen from `v`.
    pub fn opposite(&self, e: usize, v: u32) -> u32 {
        let [a, b] = self.edges[e];
        if a == v {
            b
        } else {
            a
        }
    }

    /// Checks closure, canonical ordering and incidence consistency.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err("edges not strictly increasing".into());
        }
        if self.faces.windows(2).any(|w| w[0] >= w[1]) {
            return Err("faces not strictly increasing".into());
        }
        for (i, e) in self.edges.iter().enumerate() {
            if e[0] >= e[1] || e[1] as usize >= self.num_vertices {
                return Err(format!("edge {i} is malformed: {e:?}"));
            }
            for &v in e {
                if !self.vertex_coedges(v as usize).contains(&(i as u32)) {
                    return Err(format!("vertex {v} does not list edge {i} as cofacet"));
                }
            }
        }
        for (f, t) in self.faces.iter().enumerate() {
            if t[0] >= t[1] || t[1] >= t[2] {
                return Err(format!("face {f} is malformed: {t:?}"));
            }
            for (k, &e) in self.face_edges[f].iter().enumerate() {
                let expect = [[t[0], t[1]], [t[0], t[2]], [t[1], t[2]]][k];
                if self.edges[e as usize] != expect {
                    return Err(format!("face {f} has wrong edge {e}"));
                }
                if !self.edge_cofaces(e as usize).contains(&(f as u32)) {
                    return Err(format!("edge {e} does not list face {f} as cofacet"));
                }
            }
        }
        let listed: usize = (0..self.edges.len())
            .map(|e| self.edge_cofaces(e).len())
            .sum();
        if listed != 3 * self.faces.len() {
            return Err("edge cofacet lists have extra entries".into());
        }
        let listed: usize = (0..self.num_vertices)
            .map(|v| self.vertex_coedges(v).len())
            .sum();
        if listed != 2 * self.edges.len() {
            return Err("vertex cofacet lists have extra entries".into());
        }
        Ok(())
    }

    /// Relabels vertex `v` as `perm[v]`; `perm` must be a permutation.
    pub fn relabel(&self, perm: &[u32]) -> Self {
        let mut simplices: Vec<Vec<u32>> = Vec::with_capacity(self.num_cells());
        for v in 0..self.num_vertices {
            simplices.push(vec![perm[v]]);
        }
        for e in &self.edges {
            simplices.push(e.iter().map(|&v| perm[v as usize]).collect());
        }
        for t in &self.faces {
            simplices.push(t.iter().map(|&v| perm[v as usize]).collect());
        }
        Self::from_simplices(&simplices).expect("relabeling preserves validity")
    }
}

/// Closure of the given simplices. See [`SimplicialComplex2::from_simplices`].
pub fn build_complex<S: AsRef<[u32]>>(simplices: &[S]) -> Result<SimplicialComplex2, ComplexError> {
    SimplicialComplex2::from_simplices(simplices)
}

pub fn euler_characteristic(k: &SimplicialComplex2) -> i64 {
    k.num_vertices() as i64 - k.num_edges() as i64 + k.num_faces() as i64
}

/// Barycentric subdivision. Original vertices keep their ids; the barycenter
/// of edge `e` gets id `V + e` and that of face `f` gets `V + E + f`.
pub fn barycentric_subdivide(k: &SimplicialComplex2) -> SimplicialComplex2 {
    let nv = k.num_vertices() as u32;
    let ne = k.num_edges() as u32;
    let mut simplices: Vec<Vec<u32>> =
        Vec::with_capacity(6 * k.num_faces() + 2 * k.num_edges() + 1);
    for v in 0..nv {
        simplices.push(vec![v]);
    }
    for (e, &[a, b]) in k.edges().iter().enumerate() {
        let m = nv + e as u32;
        simplices.push(vec![a, m]);
        simplices.push(vec![b, m]);
    }
    for (f, tri) in k.faces().iter().enumerate() {
        let c = nv + ne + f as u32;
        for &e in &k.face_edges(f) {
            let m = nv + e;
            for &v in &k.edge(e as usize) {
                simplices.push(vec![v, m, c]);
            }
        }
        debug_assert_eq!(tri.len(), 3);
    }
    SimplicialComplex2::from_simplices(&simplices).expect("subdivision is valid")
}

/// Parses the mesh text format (`v <id>`, `e <id> <id>`, `t <id> <id> <id>`,
/// `#` comments). Unlike [`build_complex`], every face of every listed cell
/// must itself be listed. Ids are re-indexed densely in increasing order;
/// the returned map sends file ids to new ids.
pub fn parse_mesh(text: &str) -> Result<(SimplicialComplex2, HashMap<u32, u32>), ComplexError> {
    let mut listed: BTreeSet<Simplex> = BTreeSet::new();
    for (lineno, raw) in text.lines().enumerate() {
        let Some(s) = parse_simplex_line(raw, lineno + 1)? else {
            continue;
        };
        listed.insert(s);
    }
    for s in &listed {
        let v = s.vertices();
        for skip in 0..v.len() {
            if v.len() == 1 {
                break;
            }
            let face: Vec<u32> = v
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != skip)
                .map(|(_, &x)| x)
                .collect();
            let face = Simplex::new(&face).expect("subset of a valid simplex");
            if !listed.contains(&face) {
                return Err(ComplexError::NotClosed(*s, face));
            }
        }
    }
    let ids: BTreeSet<u32> = listed
        .iter()
        .filter(|s| s.dim() == 0)
        .map(|s| s.vertices()[0])
        .collect();
    let remap: HashMap<u32, u32> = ids
        .iter()
        .enumerate()
        .map(|(i, &v)| (v, i as u32))
        .collect();
    let simplices: Vec<Vec<u32>> = listed
        .iter()
        .map(|s| s.vertices().iter().map(|v| remap[v]).collect())
        .collect();
    Ok((SimplicialComplex2::from_simplices(&simplices)?, remap))
}

/// Parses one line of the mesh format; `Ok(None)` for blank and comment lines.
pub(crate) fn parse_simplex_line(raw: &str, line: usize) -> Result<Option<Simplex>, ComplexError> {
    let content = raw.split('#').next().unwrap_or("").trim();
    if content.is_empty() {
        return Ok(None);
    }
    let mut toks = content.split_whitespace();
    let tag = toks.next().unwrap_or_default();
    let expected = match tag {
        "v" => 1,
        "e" => 2,
        "t" => 3,
        other => {
            return Err(ComplexError::Parse {
                line,
                msg: format!("unknown record `{other}`"),
            })
        }
    };
    let ids = parse_ids(toks, line)?;
    if ids.len() != expected {
        return Err(ComplexError::Parse {
            line,
            msg: format!("`{tag}` expects {expected} ids, got {}", ids.len()),
        });
    }
    Simplex::new(&ids)
        .map(Some)
        .map_err(|e| ComplexError::Parse {
            line,
            msg: e.to_string(),
        })
}

pub(crate) fn parse_ids<'a>(
    toks: impl Iterator<Item = &'a str>,
    line: usize,
) -> Result<Vec<u32>, ComplexError> {
    toks.map(|t| {
        t.parse::<u32>().map_err(|_| ComplexError::Parse {
            line,
            msg: format!("`{t}` is not a vertex id"),
        })
    })
    .collect()
}

/// Writes every cell in canonical order, one record per line.
pub fn write_mesh(k: &SimplicialComplex2) -> String {
    let mut out = String::with_capacity(16 * k.num_cells());
    for c in k.cells() {
        out.push_str(&k.simplex(c).to_string());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tetrahedron_boundary() -> SimplicialComplex2 {
        build_complex(&[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]).unwrap()
    }

    #[test]
    fn closure_of_single_triangle() {
        let k = build_complex(&[[0, 1, 2]]).unwrap();
        assert_eq!((k.num_vertices(), k.num_edges(), k.num_faces()), (3, 3, 1));
        k.check_invariants().unwrap();
    }

    #[test]
    fn isolated_vertices() {
        let k = build_complex(&[vec![0], vec![1]]).unwrap();
        assert_eq!((k.num_vertices(), k.num_edges(), k.num_faces()), (2, 0, 0));
    }

    #[test]
    fn tetrahedron_counts_and_euler() {
        let k = tetrahedron_boundary();
        assert_eq!((k.num_vertices(), k.num_edges(), k.num_faces()), (4, 6, 4));
        assert_eq!(euler_characteristic(&k), 2);
        k.check_invariants().unwrap();
    }

    #[test]
    fn triangle_boundary_euler() {
        let k = build_complex(&[[0, 1], [1, 2], [0, 2]]).unwrap();
        assert_eq!(euler_characteristic(&k), 0);
    }

    #[test]
    fn invalid_simplices_rejected() {
        assert!(matches!(
            build_complex(&[vec![0, 1, 2, 3]]),
            Err(ComplexError::InvalidSimplex(_))
        ));
        assert!(matches!(
            build_complex(&[Vec::<u32>::new()]),
            Err(ComplexError::InvalidSimplex(_))
        ));
        assert!(build_complex(&[vec![1, 1]]).is_err());
    }

    #[test]
    fn duplicates_are_merged() {
        let k = build_complex(&[vec![2, 1, 0], vec![0, 1, 2], vec![1, 0]]).unwrap();
        assert_eq!(k.num_faces(), 1);
        assert_eq!(k.num_edges(), 3);
    }

    #[test]
    fn subdivide_edge_and_triangle() {
        let k = build_complex(&[[0, 1]]).unwrap();
        let s = barycentric_subdivide(&k);
        assert_eq!((s.num_vertices(), s.num_edges(), s.num_faces()), (3, 2, 0));

        let k = build_complex(&[[0, 1, 2]]).unwrap();
        let s = barycentric_subdivide(&k);
        assert_eq!((s.num_vertices(), s.num_edges(), s.num_faces()), (7, 12, 6));
        s.check_invariants().unwrap();
    }

    #[test]
    fn subdivision_preserves_euler() {
        let k = tetrahedron_boundary();
        assert_eq!(euler_characteristic(&barycentric_subdivide(&k)), 2);
    }

    #[test]
    fn neighbor_order_is_lexicographic() {
        let k = build_complex(&[[0, 2], [1, 2], [2, 3], [2, 5]]).unwrap();
        let nbrs: Vec<u32> = k
            .vertex_coedges(2)
            .iter()
            .map(|&e| k.opposite(e as usize, 2))
            .collect();
        assert_eq!(nbrs, vec![0, 1, 3, 5]);
    }

    #[test]
    fn mesh_text_round_trip() {
        let k = tetrahedron_boundary();
        let text = write_mesh(&k);
        let (back, _) = parse_mesh(&text).unwrap();
        assert_eq!(back, k);
    }

    #[test]
    fn parse_rejects_missing_face_edge() {
        let text = "v 0\nv 1\nv 2\ne 0 1\ne 1 2\nt 0 1 2\n";
        assert!(matches!(parse_mesh(text), Err(ComplexError::NotClosed(..))));
    }

    #[test]
    fn parse_reindexes_and_skips_comments() {
        let text = "# a path\nv 10\nv 20 # tail\ne 10 20\n";
        let (k, map) = parse_mesh(text).unwrap();
        assert_eq!(k.num_vertices(), 2);
        assert_eq!(map[&20], 1);
        assert!(parse_mesh("x 1").is_err());
        assert!(parse_mesh("e 1").is_err());
    }
}
