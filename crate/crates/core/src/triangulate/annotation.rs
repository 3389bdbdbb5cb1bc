//! Annotation text format, one record per line (`#` starts a comment):
//!
//! ```text
//! vrole <v> B|I
//! erole <a> <b> B|X|D|I
//! surf t <a> <b> <c> <surface>
//! circ v <a> <circle-id>
//! circ e <a> <b> <circle-id>
//! poly t <a> <b> <c> <surface> <polygon>
//! ```
//!
//! `surf` may also name a vertex or an edge; it is then checked against the
//! faces around it. Circles are numbered in order of first appearance.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{
    polygon_labels, EdgeRole, MeshStructure, StratifoldMesh, TriangulateError, VertexRole,
};
use crate::complex::{parse_ids, parse_mesh, Cell, SimplicialComplex2};

pub fn write_annotations(sm: &StratifoldMesh) -> String {
    let k = &sm.mesh;
    let mut out = String::new();
    for (v, r) in sm.vertex_roles.iter().enumerate() {
        let _ = writeln!(out, "vrole {v} {}", r.code());
    }
    for (e, r) in sm.edge_roles.iter().enumerate() {
        let [a, b] = k.edge(e);
        let _ = writeln!(out, "erole {a} {b} {}", r.code());
    }
    for (j, id) in sm.circles.iter().enumerate() {
        for v in (0..k.num_vertices()).filter(|&v| sm.vertex_circle[v] == Some(j as u32)) {
            let _ = writeln!(out, "circ v {v} {id}");
        }
        for e in (0..k.num_edges()).filter(|&e| sm.edge_circle[e] == Some(j as u32)) {
            let [a, b] = k.edge(e);
            let _ = writeln!(out, "circ e {a} {b} {id}");
        }
    }
    for f in 0..k.num_faces() {
        let [a, b, c] = k.face(f);
        let _ = writeln!(out, "surf t {a} {b} {c} {}", sm.face_surface[f]);
    }
    for f in 0..k.num_faces() {
        let [a, b, c] = k.face(f);
        let _ = writeln!(
            out,
            "poly t {a} {b} {c} {} {}",
            sm.face_surface[f], sm.face_polygon[f]
        );
    }
    out
}

#[derive(Default)]
struct Parsed {
    vrole: HashMap<u32, VertexRole>,
    erole: HashMap<[u32; 2], EdgeRole>,
    surf: HashMap<Cell, u32>,
    circ: HashMap<Cell, u32>,
    circles: Vec<String>,
    poly: HashMap<u32, (u32, u32)>,
}

fn perr(line: usize, msg: impl Into<String>) -> TriangulateError {
    TriangulateError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a cell reference `v a` / `e a b` / `t a b c` from the front of
/// `toks`, translating file ids through `remap`.
fn take_cell(
    toks: &[&str],
    k: &SimplicialComplex2,
    remap: &HashMap<u32, u32>,
    line: usize,
) -> Result<(Cell, usize), TriangulateError> {
    let n = match toks.first() {
        Some(&"v") => 1,
        Some(&"e") => 2,
        Some(&"t") => 3,
        _ => return Err(perr(line, "expected a cell (`v`, `e` or `t`)")),
    };
    if toks.len() < n + 1 {
        return Err(perr(line, "truncated cell"));
    }
    let ids =
        parse_ids(toks[1..=n].iter().copied(), line).map_err(|e| perr(line, e.to_string()))?;
    let mapped: Vec<u32> = ids
        .iter()
        .map(|v| {
            remap
                .get(v)
                .copied()
                .ok_or_else(|| perr(line, format!("unknown vertex {v}")))
        })
        .collect::<Result<_, _>>()?;
    let s = crate::complex::Simplex::new(&mapped).map_err(|e| perr(line, e.to_string()))?;
    let cell = k
        .find(&s)
        .ok_or_else(|| perr(line, format!("{s} is not in the mesh")))?;
    Ok((cell, n + 1))
}

fn parse_u32(tok: Option<&&str>, line: usize, what: &str) -> Result<u32, TriangulateError> {
    tok.and_then(|t| t.parse().ok())
        .ok_or_else(|| perr(line, format!("expected {what}")))
}

fn parse_records(
    text: &str,
    k: &SimplicialComplex2,
    remap: &HashMap<u32, u32>,
) -> Result<Parsed, TriangulateError> {
    let mut p = Parsed::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let rest = &toks[1..];
        let vid = |t: Option<&&str>| -> Result<u32, TriangulateError> {
            let v = parse_u32(t, line, "a vertex id")?;
            remap
                .get(&v)
                .copied()
                .ok_or_else(|| perr(line, format!("unknown vertex {v}")))
        };
        match toks[0] {
            "vrole" => {
                let v = vid(rest.first())?;
                let r = match rest.get(1) {
                    Some(&"B") => VertexRole::PolygonBoundary,
                    Some(&"I") => VertexRole::Internal,
                    _ => return Err(perr(line, "vertex role must be B or I")),
                };
                p.vrole.insert(v, r);
            }
            "erole" => {
                let (a, b) = (vid(rest.first())?, vid(rest.get(1))?);
                let r = match rest.get(2) {
                    Some(&"B") => EdgeRole::Boundary,
                    Some(&"X") => EdgeRole::Crossing,
                    Some(&"D") => EdgeRole::Bridge,
                    Some(&"I") => EdgeRole::Internal,
                    _ => return Err(perr(line, "edge role must be B, X, D or I")),
                };
                p.erole.insert([a.min(b), a.max(b)], r);
            }
            "surf" => {
                let (cell, used) = take_cell(rest, k, remap, line)?;
                p.surf
                    .insert(cell, parse_u32(rest.get(used), line, "a surface index")?);
            }
            "circ" => {
                let (cell, used) = take_cell(rest, k, remap, line)?;
                if cell.dim == 2 {
                    return Err(perr(line, "a face cannot lie on a circle"));
                }
                let id = rest
                    .get(used)
                    .ok_or_else(|| perr(line, "expected a circle id"))?;
                let j = match p.circles.iter().position(|c| c == id) {
                    Some(j) => j,
                    None => {
                        p.circles.push(id.to_string());
                        p.circles.len() - 1
                    }
                };
                p.circ.insert(cell, j as u32);
            }
            "poly" => {
                let (cell, used) = take_cell(rest, k, remap, line)?;
                if cell.dim != 2 {
                    return Err(perr(line, "poly records name faces"));
                }
                let s = parse_u32(rest.get(used), line, "a surface index")?;
                let q = parse_u32(rest.get(used + 1), line, "a polygon index")?;
                p.poly.insert(cell.index, (s, q));
            }
            other => return Err(perr(line, format!("unknown record `{other}`"))),
        }
    }
    Ok(p)
}

/// Parses annotations for an already loaded mesh and validates the result.
pub fn parse_annotations(
    k: SimplicialComplex2,
    remap: &HashMap<u32, u32>,
    text: &str,
) -> Result<StratifoldMesh, TriangulateError> {
    let p = parse_records(text, &k, remap)?;
    fn invalid<T>(m: String) -> Result<T, TriangulateError> {
        Err(TriangulateError::Validation(m))
    }
    let vertex_roles: Vec<VertexRole> = (0..k.num_vertices() as u32)
        .map(|v| p.vrole.get(&v).copied().ok_or(v))
        .collect::<Result<_, _>>()
        .or_else(|v| invalid(format!("vertex {v} has no role")))?;
    let edge_roles: Vec<EdgeRole> = k
        .edges()
        .iter()
        .map(|e| p.erole.get(e).copied().ok_or(*e))
        .collect::<Result<_, _>>()
        .or_else(|e| invalid(format!("edge {e:?} has no role")))?;
    let mut face_surface = Vec::with_capacity(k.num_faces());
    for f in 0..k.num_faces() as u32 {
        let s = p.surf.get(&Cell::face(f)).copied();
        let q = p.poly.get(&f).map(|&(s, _)| s);
        match (s, q) {
            (Some(a), Some(b)) if a != b => {
                return invalid(format!("face {f} has surf {a} but poly surface {b}"))
            }
            (Some(a), _) | (None, Some(a)) => face_surface.push(a),
            (None, None) => return invalid(format!("face {f} has no surface")),
        }
    }
    let num_surfaces = face_surface.iter().max().map_or(0, |&s| s as usize + 1);
    let vertex_circle: Vec<Option<u32>> = (0..k.num_vertices() as u32)
        .map(|v| p.circ.get(&Cell::vertex(v)).copied())
        .collect();
    let edge_circle: Vec<Option<u32>> = (0..k.num_edges() as u32)
        .map(|e| p.circ.get(&Cell::edge(e)).copied())
        .collect();
    let structure = MeshStructure {
        circles: p.circles.clone(),
        num_surfaces,
        boundary_vertex: vertex_roles
            .iter()
            .map(|&r| r == VertexRole::PolygonBoundary)
            .collect(),
        boundary_edge: edge_roles
            .iter()
            .map(|&r| r == EdgeRole::Boundary)
            .collect(),
        vertex_circle,
        edge_circle,
        face_surface,
    };
    let sm = super::label_cells(k, structure).map_err(|e| match e {
        TriangulateError::InconsistentStructure(m) => TriangulateError::Validation(m),
        other => other,
    })?;
    if sm.edge_roles != edge_roles {
        let e = (0..edge_roles.len())
            .find(|&e| sm.edge_roles[e] != edge_roles[e])
            .unwrap();
        return invalid(format!(
            "edge {:?} is annotated {:?} but its endpoints make it {:?}",
            sm.mesh.edge(e),
            edge_roles[e],
            sm.edge_roles[e]
        ));
    }
    for (&cell, &s) in &p.surf {
        let derived = match cell.dim {
            0 => sm.vertex_surface[cell.idx()],
            1 => sm.edge_surface[cell.idx()],
            _ => Some(sm.face_surface[cell.idx()]),
        };
        if derived != Some(s) {
            return invalid(format!(
                "{} is annotated on surface {s}",
                sm.mesh.simplex(cell)
            ));
        }
    }
    if !p.poly.is_empty() {
        let labels = polygon_labels(&sm.mesh, &sm.face_surface, &sm.edge_roles, sm.num_surfaces);
        for (&f, &(_, q)) in &p.poly {
            if labels[f as usize] != q {
                return invalid(format!(
                    "face {f} is annotated in polygon {q}, decomposition gives {}",
                    labels[f as usize]
                ));
            }
        }
    }
    Ok(sm)
}

/// Loads a mesh file and its annotation file.
pub fn import_mesh(
    mesh_text: &str,
    annotation_text: &str,
) -> Result<StratifoldMesh, TriangulateError> {
    let (k, remap) = parse_mesh(mesh_text).map_err(|e| match e {
        crate::complex::ComplexError::NotClosed(..) => TriangulateError::Validation(e.to_string()),
        other => TriangulateError::Mesh(other),
    })?;
    parse_annotations(k, &remap, annotation_text)
}
