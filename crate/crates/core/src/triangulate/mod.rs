//! Annotated triangulations of stratifolds.
//!
//! Each surface is triangulated as a polygon whose boundary word is read off
//! the surface's schema followed by, for every attachment, a bridge path `d`,
//! the boundary cycle `e` and `d` reversed. A vertex or edge is *boundary*
//! when it lies on the image of that polygon boundary; circles are the images
//! of the `e` sides under the covering maps.

mod annotation;
mod generate;

use std::fmt;

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{barycentric_subdivide, ComplexError, SimplicialComplex2};

pub use annotation::{import_mesh, parse_annotations, write_annotations};
pub use generate::{triangulate_spec, TriangulateOptions};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TriangulateError {
    #[error("circle {circle:?} has length {length}, needs at least 3")]
    CircleTooShort { circle: String, length: usize },
    #[error("circle length given for unknown circle {0:?}")]
    UnknownCircle(String),
    #[error("invalid stratifold spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("inconsistent structure: {0}")]
    InconsistentStructure(String),
    #[error("annotation line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh: {0}")]
    Mesh(#[from] ComplexError),
    #[error("validation failed: {0}")]
    Validation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexRole {
    PolygonBoundary,
    Internal,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeRole {
    Boundary,
    Crossing,
    Bridge,
    Internal,
}

impl VertexRole {
    pub fn code(self) -> char {
        match self {
            VertexRole::PolygonBoundary => 'B',
            VertexRole::Internal => 'I',
        }
    }
}

impl EdgeRole {
    pub fn code(self) -> char {
        match self {
            EdgeRole::Boundary => 'B',
            EdgeRole::Crossing => 'X',
            EdgeRole::Bridge => 'D',
            EdgeRole::Internal => 'I',
        }
    }

    /// Edges the face-adjacency of a sub-polygon may cross.
    pub fn is_polygon_interior(self) -> bool {
        matches!(self, EdgeRole::Bridge | EdgeRole::Internal)
    }
}

/// Which cells count as boundary when the optimizer runs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryReading {
    /// On the image of the polygon boundary (schema sides, bridge paths, circles).
    #[default]
    Polygon,
    /// On a circle only.
    Circles,
}

impl fmt::Display for BoundaryReading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BoundaryReading::Polygon => "polygon",
            BoundaryReading::Circles => "circles",
        })
    }
}

impl std::str::FromStr for BoundaryReading {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "polygon" => Ok(BoundaryReading::Polygon),
            "circles" => Ok(BoundaryReading::Circles),
            other => Err(format!(
                "unknown boundary reading {other:?} (polygon|circles)"
            )),
        }
    }
}

/// Raw membership data from which [`label_cells`] derives roles and polygons.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshStructure {
    pub circles: Vec<String>,
    pub num_surfaces: usize,
    pub boundary_vertex: Vec<bool>,
    /// Edge lies on the image of a polygon boundary.
    pub boundary_edge: Vec<bool>,
    pub vertex_circle: Vec<Option<u32>>,
    pub edge_circle: Vec<Option<u32>>,
    pub face_surface: Vec<u32>,
}

/// A triangulated stratifold with its polygon structure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratifoldMesh {
    pub mesh: SimplicialComplex2,
    pub circles: Vec<String>,
    pub num_surfaces: usize,
    pub vertex_roles: Vec<VertexRole>,
    pub edge_roles: Vec<EdgeRole>,
    /// `None` exactly for circle cells.
    pub vertex_surface: Vec<Option<u32>>,
    pub edge_surface: Vec<Option<u32>>,
    pub face_surface: Vec<u32>,
    pub vertex_circle: Vec<Option<u32>>,
    pub edge_circle: Vec<Option<u32>>,
    /// Sub-polygon index of each face within its surface.
    pub face_polygon: Vec<u32>,
}

impl StratifoldMesh {
    pub fn faces_of_surface(&self, i: usize) -> impl Iterator<Item = u32> + '_ {
        (0..self.face_surface.len() as u32)
            .filter(move |&f| self.face_surface[f as usize] as usize == i)
    }

    pub fn num_polygons(&self, i: usize) -> usize {
        self.faces_of_surface(i)
            .map(|f| self.face_polygon[f as usize] as usize + 1)
            .max()
            .unwrap_or(0)
    }

    /// Role tables under the requested reading. The polygon reading is the
    /// stored annotation; the circles reading treats only circle cells as
    /// boundary.
    pub fn roles(&self, reading: BoundaryReading) -> (Vec<VertexRole>, Vec<EdgeRole>) {
        match reading {
            BoundaryReading::Polygon => (self.vertex_roles.clone(), self.edge_roles.clone()),
            BoundaryReading::Circles => {
                let vr: Vec<VertexRole> = self
                    .vertex_circle
                    .iter()
                    .map(|c| {
                        if c.is_some() {
                            VertexRole::PolygonBoundary
                        } else {
                            VertexRole::Internal
                        }
                    })
                    .collect();
                let on_circle: Vec<bool> = self.edge_circle.iter().map(Option::is_some).collect();
                let er = edge_roles_from(&self.mesh, &vr, &on_circle);
                (vr, er)
            }
        }
    }

    pub fn crossing_edges(&self, surface: usize) -> usize {
        (0..self.mesh.num_edges())
            .filter(|&e| {
                self.edge_roles[e] == EdgeRole::Crossing
                    && self.edge_surface[e] == Some(surface as u32)
            })
            .count()
    }

    /// Checks every structural invariant; the error names the first failure.
    pub fn validate(&self) -> Result<(), TriangulateError> {
        let fail = |m: String| Err(TriangulateError::Validation(m));
        let k = &self.mesh;
        if let Err(m) = k.check_invariants() {
            return fail(m);
        }
        let (nv, ne, nf) = (k.num_vertices(), k.num_edges(), k.num_faces());
        if self.vertex_roles.len() != nv
            || self.vertex_surface.len() != nv
            || self.vertex_circle.len() != nv
            || self.edge_roles.len() != ne
            || self.edge_surface.len() != ne
            || self.edge_circle.len() != ne
            || self.face_surface.len() != nf
            || self.face_polygon.len() != nf
        {
            return fail("annotation tables do not match the mesh size".into());
        }
        for (e, &[a, b]) in k.edges().iter().enumerate() {
            let ra = self.vertex_roles[a as usize];
            let rb = self.vertex_roles[b as usize];
            let boundary_ends = (ra == VertexRole::PolygonBoundary) as u8
                + (rb == VertexRole::PolygonBoundary) as u8;
            let ok = match self.edge_roles[e] {
                EdgeRole::Boundary | EdgeRole::Crossing => boundary_ends == 2,
                EdgeRole::Bridge => boundary_ends == 1,
                EdgeRole::Internal => boundary_ends == 0,
            };
            if !ok {
                return fail(format!(
                    "edge {a}-{b} is {:?} but has {boundary_ends} boundary endpoints",
                    self.edge_roles[e]
                ));
            }
        }
        for f in 0..nf {
            if self.face_surface[f] as usize >= self.num_surfaces {
                return fail(format!(
                    "face {f} has surface {} out of range",
                    self.face_surface[f]
                ));
            }
        }
        for v in 0..nv {
            match (self.vertex_circle[v], self.vertex_surface[v]) {
                (Some(c), None) => {
                    if c as usize >= self.circles.len() {
                        return fail(format!("vertex {v} on unknown circle {c}"));
                    }
                    if self.vertex_roles[v] != VertexRole::PolygonBoundary {
                        return fail(format!("circle vertex {v} is not a boundary vertex"));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    return fail(format!(
                        "vertex {v} must belong to exactly one circle or one surface"
                    ))
                }
            }
        }
        for e in 0..ne {
            match (self.edge_circle[e], self.edge_surface[e]) {
                (Some(c), None) => {
                    let [a, b] = k.edge(e);
                    if self.vertex_circle[a as usize] != Some(c)
                        || self.vertex_circle[b as usize] != Some(c)
                    {
                        return fail(format!("circle edge {a}-{b} leaves its circle"));
                    }
                    if self.edge_roles[e] != EdgeRole::Boundary {
                        return fail(format!("circle edge {a}-{b} is not a boundary edge"));
                    }
                }
                (None, Some(_)) => {}
                _ => {
                    let [a, b] = k.edge(e);
                    return fail(format!(
                        "edge {a}-{b} must belong to exactly one circle or one surface"
                    ));
                }
            }
        }
        let (vs, es) = derive_surfaces(
            k,
            &self.vertex_circle,
            &self.edge_circle,
            &self.face_surface,
        )?;
        if vs != self.vertex_surface || es != self.edge_surface {
            return fail("cell surface membership disagrees with the faces around it".into());
        }
        for c in 0..self.circles.len() as u32 {
            self.check_circle(c)?;
        }
        let polys = polygon_labels(k, &self.face_surface, &self.edge_roles, self.num_surfaces);
        if polys != self.face_polygon {
            return fail("sub-polygon labels disagree with the crossing-edge decomposition".into());
        }
        Ok(())
    }

    fn check_circle(&self, c: u32) -> Result<(), TriangulateError> {
        let fail = |m: String| Err(TriangulateError::Validation(m));
        let id = &self.circles[c as usize];
        let verts: Vec<u32> = (0..self.mesh.num_vertices() as u32)
            .filter(|&v| self.vertex_circle[v as usize] == Some(c))
            .collect();
        let edges: Vec<usize> = (0..self.mesh.num_edges())
            .filter(|&e| self.edge_circle[e] == Some(c))
            .collect();
        if edges.len() < 3 {
            return fail(format!(
                "circle {id:?} has {} edges, needs at least 3",
                edges.len()
            ));
        }
        if verts.len() != edges.len() {
            return fail(format!(
                "circle {id:?} is not a cycle ({} vertices, {} edges)",
                verts.len(),
                edges.len()
            ));
        }
        let mut uf = UnionFind::new(self.mesh.num_vertices());
        let mut degree = std::collections::HashMap::new();
        for &e in &edges {
            let [a, b] = self.mesh.edge(e);
            uf.union(a as usize, b as usize);
            *degree.entry(a).or_insert(0) += 1;
            *degree.entry(b).or_insert(0) += 1;
        }
        if verts.iter().any(|v| degree.get(v) != Some(&2)) {
            return fail(format!("circle {id:?} is not a simple cycle"));
        }
        if verts
            .iter()
            .any(|&v| !uf.equiv(v as usize, verts[0] as usize))
        {
            return fail(format!("circle {id:?} is disconnected"));
        }
        Ok(())
    }
}

/// Roles of edges from endpoint roles and the "on the boundary image" flags.
fn edge_roles_from(
    k: &SimplicialComplex2,
    vr: &[VertexRole],
    on_boundary: &[bool],
) -> Vec<EdgeRole> {
    k.edges()
        .iter()
        .enumerate()
        .map(|(e, &[a, b])| {
            let ba = vr[a as usize] == VertexRole::PolygonBoundary;
            let bb = vr[b as usize] == VertexRole::PolygonBoundary;
            match (ba, bb) {
                (true, true) if on_boundary[e] => EdgeRole::Boundary,
                (true, true) => EdgeRole::Crossing,
                (false, false) => EdgeRole::Internal,
                _ => EdgeRole::Bridge,
            }
        })
        .collect()
}

type SurfaceTables = (Vec<Option<u32>>, Vec<Option<u32>>);

/// Surface of every non-circle vertex and edge, read off the incident faces.
fn derive_surfaces(
    k: &SimplicialComplex2,
    vertex_circle: &[Option<u32>],
    edge_circle: &[Option<u32>],
    face_surface: &[u32],
) -> Result<SurfaceTables, TriangulateError> {
    let mut vs: Vec<Option<u32>> = vec![None; k.num_vertices()];
    let mut es: Vec<Option<u32>> = vec![None; k.num_edges()];
    let clash = |what: String| {
        TriangulateError::InconsistentStructure(format!("{what} touches two surfaces"))
    };
    for (f, &s) in face_surface.iter().enumerate() {
        for &e in &k.face_edges(f) {
            if edge_circle[e as usize].is_none() {
                match es[e as usize] {
                    Some(t) if t != s => {
                        return Err(clash(format!("edge {:?}", k.edge(e as usize))))
                    }
                    _ => es[e as usize] = Some(s),
                }
            }
        }
        for &v in &k.face(f) {
            if vertex_circle[v as usize].is_none() {
                match vs[v as usize] {
                    Some(t) if t != s => return Err(clash(format!("vertex {v}"))),
                    _ => vs[v as usize] = Some(s),
                }
            }
        }
    }
    if let Some(v) = (0..k.num_vertices()).find(|&v| vertex_circle[v].is_none() && vs[v].is_none())
    {
        return Err(TriangulateError::InconsistentStructure(format!(
            "vertex {v} lies on no face"
        )));
    }
    if let Some(e) = (0..k.num_edges()).find(|&e| edge_circle[e].is_none() && es[e].is_none()) {
        return Err(TriangulateError::InconsistentStructure(format!(
            "edge {:?} lies on no face",
            k.edge(e)
        )));
    }
    Ok((vs, es))
}

/// Per-surface sub-polygon labels: faces are joined across bridge and
/// internal edges, and components are numbered by their smallest face.
pub(crate) fn polygon_labels(
    k: &SimplicialComplex2,
    face_surface: &[u32],
    edge_roles: &[EdgeRole],
    num_surfaces: usize,
) -> Vec<u32> {
    let mut uf = UnionFind::new(k.num_faces());
    for (e, role) in edge_roles.iter().enumerate() {
        if role.is_polygon_interior() {
            let cof = k.edge_cofaces(e);
            for w in cof.windows(2) {
                uf.union(w[0] as usize, w[1] as usize);
            }
        }
    }
    let mut next = vec![0u32; num_surfaces];
    let mut label_of_root: std::collections::HashMap<usize, u32> = Default::default();
    (0..k.num_faces())
        .map(|f| {
            let root = uf.find(f);
            *label_of_root.entry(root).or_insert_with(|| {
                let s = face_surface[f] as usize;
                next[s] += 1;
                next[s] - 1
            })
        })
        .collect()
}

/// Sub-polygons of surface `surface` under the given edge roles, as sorted
/// face lists ordered by their smallest face.
pub fn decompose_polygons(
    sm: &StratifoldMesh,
    surface: usize,
    edge_roles: &[EdgeRole],
) -> Vec<Vec<u32>> {
    let labels = polygon_labels(&sm.mesh, &sm.face_surface, edge_roles, sm.num_surfaces);
    let mut out: Vec<Vec<u32>> = Vec::new();
    for f in sm.faces_of_surface(surface) {
        let l = labels[f as usize] as usize;
        if out.len() <= l {
            out.resize(l + 1, Vec::new());
        }
        out[l].push(f);
    }
    out
}

/// Derives roles, per-cell surfaces and sub-polygons from raw structure and
/// validates the result.
pub fn label_cells(
    mesh: SimplicialComplex2,
    s: MeshStructure,
) -> Result<StratifoldMesh, TriangulateError> {
    let bad = |m: String| Err(TriangulateError::InconsistentStructure(m));
    let (nv, ne, nf) = (mesh.num_vertices(), mesh.num_edges(), mesh.num_faces());
    if s.boundary_vertex.len() != nv
        || s.vertex_circle.len() != nv
        || s.boundary_edge.len() != ne
        || s.edge_circle.len() != ne
        || s.face_surface.len() != nf
    {
        return bad("membership maps do not cover the mesh".into());
    }
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if s.boundary_edge[e] && !(s.boundary_vertex[a as usize] && s.boundary_vertex[b as usize]) {
            return bad(format!("boundary edge {a}-{b} has an internal endpoint"));
        }
        if s.edge_circle[e].is_some() && !s.boundary_edge[e] {
            return bad(format!("circle edge {a}-{b} is not marked boundary"));
        }
    }
    if let Some(v) = (0..nv).find(|&v| s.vertex_circle[v].is_some() && !s.boundary_vertex[v]) {
        return bad(format!("circle vertex {v} is not marked boundary"));
    }
    let vertex_roles: Vec<VertexRole> = s
        .boundary_vertex
        .iter()
        .map(|&b| {
            if b {
                VertexRole::PolygonBoundary
            } else {
                VertexRole::Internal
            }
        })
        .collect();
    let edge_roles = edge_roles_from(&mesh, &vertex_roles, &s.boundary_edge);
    let (vertex_surface, edge_surface) =
        derive_surfaces(&mesh, &s.vertex_circle, &s.edge_circle, &s.face_surface)?;
    let face_polygon = polygon_labels(&mesh, &s.face_surface, &edge_roles, s.num_surfaces);
    let sm = StratifoldMesh {
        mesh,
        circles: s.circles,
        num_surfaces: s.num_surfaces,
        vertex_roles,
        edge_roles,
        vertex_surface,
        edge_surface,
        face_surface: s.face_surface,
        vertex_circle: s.vertex_circle,
        edge_circle: s.edge_circle,
        face_polygon,
    };
    sm.validate()?;
    Ok(sm)
}

/// One barycentric subdivision; roles and memberships are inherited, so
/// halves of boundary edges stay boundary and circle cycles double.
pub fn subdivide(sm: &StratifoldMesh) -> Result<StratifoldMesh, TriangulateError> {
    let k = &sm.mesh;
    let (nv, ne) = (k.num_vertices(), k.num_edges());
    let fine = barycentric_subdivide(k);
    let on_bdry = |e: usize| sm.edge_roles[e] == EdgeRole::Boundary;

    let mut boundary_vertex: Vec<bool> = sm
        .vertex_roles
        .iter()
        .map(|&r| r == VertexRole::PolygonBoundary)
        .collect();
    boundary_vertex.extend((0..ne).map(on_bdry));
    boundary_vertex.resize(fine.num_vertices(), false);
    let mut vertex_circle = sm.vertex_circle.clone();
    vertex_circle.extend(sm.edge_circle.iter().copied());
    vertex_circle.resize(fine.num_vertices(), None);

    let parent_edge = |v: u32| -> Option<usize> {
        let v = v as usize;
        (nv..nv + ne).contains(&v).then(|| v - nv)
    };
    let mut boundary_edge = vec![false; fine.num_edges()];
    let mut edge_circle = vec![None; fine.num_edges()];
    for (e, &[a, b]) in fine.edges().iter().enumerate() {
        // Halves of an old edge join an old vertex to that edge's barycenter.
        if let Some(p) = parent_edge(b) {
            if (a as usize) < nv && k.edge(p).contains(&a) {
                boundary_edge[e] = on_bdry(p);
                edge_circle[e] = sm.edge_circle[p];
            }
        }
    }
    let face_surface: Vec<u32> = fine
        .faces()
        .iter()
        .map(|&[_, _, c]| sm.face_surface[c as usize - nv - ne])
        .collect();
    label_cells(
        fine,
        MeshStructure {
            circles: sm.circles.clone(),
            num_surfaces: sm.num_surfaces,
            boundary_vertex,
            boundary_edge,
            vertex_circle,
            edge_circle,
            face_surface,
        },
    )
}
