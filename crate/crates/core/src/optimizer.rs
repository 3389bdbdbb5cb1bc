//! The gradient construction on annotated stratifold meshes.
//!
//! Per surface: a spanning tree of the internal graph of every sub-polygon
//! (grown from one bridge), then a dual tree on the faces that pairs each
//! remaining interior edge with a face. Across surfaces: a spanning tree of
//! the boundary graph. The union leaves one critical vertex, one critical
//! face per surface, and the boundary graph's cycle rank in critical edges.

use std::collections::{HashMap, HashSet, VecDeque};

use petgraph::unionfind::UnionFind;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{euler_characteristic, Cell, SimplicialComplex2};
use crate::exec::Exec;
use crate::homology::{cw_betti, Coefficients, HomologyError};
use crate::morse::{
    bfs_tree_pairs, cancel_critical_pair, check_morse_inequalities, critical_from_partners,
    find_closed_vpath, is_matching, DiscreteVectorField, MorseError, MorseVector, Partners, VPath,
};
use crate::stratifold::{
    classify, euler_from_spec, StratifoldError, StratifoldKind, StratifoldSpec,
};
use crate::triangulate::{polygon_labels, BoundaryReading, EdgeRole, StratifoldMesh, VertexRole};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OptimizerError {
    #[error("dual graph of surface {surface}{} is not a tree: {detail}", polygon.map(|p| format!(" polygon {p}")).unwrap_or_default())]
    DualNotTree {
        surface: usize,
        polygon: Option<usize>,
        detail: String,
    },
    #[error("surface {surface} polygon {polygon}: spanning tree reached {reached} of {total} internal vertices")]
    InternalDisconnected {
        surface: usize,
        polygon: usize,
        reached: usize,
        total: usize,
    },
    #[error("surface {surface} polygon {polygon} has internal vertices but no bridge edge")]
    NoBridge { surface: usize, polygon: usize },
    #[error("constructed field has a closed V-path: {0}")]
    ClosedPathExists(VPath),
    #[error("constructed field is not a matching")]
    NotAMatching,
    #[error("repair pass failed: {0}")]
    RepairFailed(String),
    #[error("post-condition violated: {0}")]
    Invariant(String),
    #[error("mesh does not come from this spec: {0}")]
    MismatchedSpec(String),
    #[error(transparent)]
    Morse(#[from] MorseError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Stratifold(#[from] StratifoldError),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct OptimizerOptions {
    pub reading: BoundaryReading,
    pub exec: Exec,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GradientResult {
    pub field: DiscreteVectorField,
    pub critical: Vec<Cell>,
    pub m: MorseVector,
    pub repair: bool,
    /// Elementary operations performed; used for the linear-time check.
    pub steps: u64,
    pub reading: BoundaryReading,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DualArc {
    pub edge: u32,
    pub faces: [u32; 2],
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DualGraph {
    pub nodes: Vec<u32>,
    pub arcs: Vec<DualArc>,
}

impl DualGraph {
    pub fn is_connected(&self) -> bool {
        if self.nodes.is_empty() {
            return true;
        }
        let local: HashMap<u32, usize> = self
            .nodes
            .iter()
            .enumerate()
            .map(|(i, &f)| (f, i))
            .collect();
        let mut uf = UnionFind::new(self.nodes.len());
        for a in &self.arcs {
            uf.union(local[&a.faces[0]], local[&a.faces[1]]);
        }
        (1..self.nodes.len()).all(|i| uf.equiv(0, i))
    }

    pub fn is_tree(&self) -> bool {
        self.arcs.len() + 1 == self.nodes.len() && self.is_connected()
    }
}

/// Faces of `faces` joined across every shared bridge or internal edge that
/// is not in `tree`.
pub fn dual_graph(
    k: &SimplicialComplex2,
    faces: &[u32],
    edge_roles: &[EdgeRole],
    tree: &HashSet<u32>,
) -> Result<DualGraph, String> {
    let mut steps = 0;
    let members: HashSet<u32> = faces.iter().copied().collect();
    let in_tree = |e: u32| tree.contains(&e);
    let member = |f: u32| members.contains(&f);
    dual_arcs(k, faces, edge_roles, &in_tree, &member, &mut steps).map(|arcs| DualGraph {
        nodes: faces.to_vec(),
        arcs,
    })
}

fn dual_arcs(
    k: &SimplicialComplex2,
    faces: &[u32],
    edge_roles: &[EdgeRole],
    in_tree: &dyn Fn(u32) -> bool,
    member: &dyn Fn(u32) -> bool,
    steps: &mut u64,
) -> Result<Vec<DualArc>, String> {
    let mut arcs = Vec::new();
    for &f in faces {
        for &e in &k.face_edges(f as usize) {
            *steps += 1;
            if !edge_roles[e as usize].is_polygon_interior() || in_tree(e) {
                continue;
            }
            let cof = k.edge_cofaces(e as usize);
            if cof.len() != 2 || !cof.iter().all(|&g| member(g)) {
                return Err(format!(
                    "interior edge {:?} has cofaces {cof:?}",
                    k.edge(e as usize)
                ));
            }
            if cof[0] == f {
                arcs.push(DualArc {
                    edge: e,
                    faces: [cof[0], cof[1]],
                });
            }
        }
    }
    Ok(arcs)
}

struct SurfacePart {
    pairs: Vec<(Cell, Cell)>,
    steps: u64,
}

/// Vertex trees and the joined dual tree of one surface.
fn surface_stage(
    sm: &StratifoldMesh,
    surface: usize,
    polygons: &[Vec<u32>],
    vr: &[VertexRole],
    er: &[EdgeRole],
) -> Result<SurfacePart, OptimizerError> {
    let k = &sm.mesh;
    let mut steps = 0u64;
    let mut pairs = Vec::new();
    let mut visited = vec![false; k.num_vertices()];
    // Per-polygon marks, stamped with the polygon number.
    let mut vertex_mark = vec![u32::MAX; k.num_vertices()];
    let mut face_mark = vec![u32::MAX; k.num_faces()];
    let mut tree_mark = vec![u32::MAX; k.num_edges()];
    let mut all_arcs: Vec<DualArc> = Vec::new();
    let not_tree = |polygon: Option<usize>, detail: String| OptimizerError::DualNotTree {
        surface,
        polygon,
        detail,
    };

    for (p, faces) in polygons.iter().enumerate() {
        let mut internal: Vec<u32> = Vec::new();
        let mut bridge: Option<u32> = None;
        let stamp = p as u32;
        for &f in faces {
            face_mark[f as usize] = stamp;
            for &v in &k.face(f as usize) {
                steps += 1;
                if vr[v as usize] == VertexRole::Internal && vertex_mark[v as usize] != stamp {
                    vertex_mark[v as usize] = stamp;
                    internal.push(v);
                }
            }
            for &e in &k.face_edges(f as usize) {
                if er[e as usize] == EdgeRole::Bridge && bridge.is_none_or(|b| e < b) {
                    bridge = Some(e);
                }
            }
        }
        if !internal.is_empty() {
            let b = bridge.ok_or(OptimizerError::NoBridge {
                surface,
                polygon: p,
            })?;
            let [x, y] = k.edge(b as usize);
            let root = if vr[x as usize] == VertexRole::PolygonBoundary {
                x
            } else {
                y
            };
            let found = bfs_tree_pairs(
                k,
                root,
                |e| e == b || er[e as usize] == EdgeRole::Internal,
                &mut visited,
                &mut steps,
            );
            if found.len() != internal.len() {
                return Err(OptimizerError::InternalDisconnected {
                    surface,
                    polygon: p,
                    reached: found.len(),
                    total: internal.len(),
                });
            }
            for (v, e) in found {
                tree_mark[e as usize] = stamp;
                pairs.push((Cell::vertex(v), Cell::edge(e)));
            }
        }
        let in_tree = |e: u32| tree_mark[e as usize] == stamp;
        let member = |f: u32| face_mark[f as usize] == stamp;
        let arcs = dual_arcs(k, faces, er, &in_tree, &member, &mut steps)
            .map_err(|d| not_tree(Some(p), d))?;
        let g = DualGraph {
            nodes: faces.clone(),
            arcs,
        };
        steps += (g.nodes.len() + g.arcs.len()) as u64;
        if !g.is_tree() {
            return Err(not_tree(
                Some(p),
                format!(
                    "{} faces, {} arcs, connected: {}",
                    g.nodes.len(),
                    g.arcs.len(),
                    g.is_connected()
                ),
            ));
        }
        all_arcs.extend(g.arcs);
    }

    // Join the polygon duals through the crossing edges.
    let faces: Vec<u32> = polygons.iter().flatten().copied().collect();
    let mut crossings: Vec<u32> = Vec::new();
    for &f in &faces {
        for &e in &k.face_edges(f as usize) {
            steps += 1;
            if er[e as usize] == EdgeRole::Crossing {
                let cof = k.edge_cofaces(e as usize);
                if cof.len() != 2 {
                    return Err(not_tree(
                        None,
                        format!(
                            "crossing edge {:?} has {} cofaces",
                            k.edge(e as usize),
                            cof.len()
                        ),
                    ));
                }
                if cof[0] == f {
                    crossings.push(e);
                }
            }
        }
    }
    for e in crossings {
        let cof = k.edge_cofaces(e as usize);
        all_arcs.push(DualArc {
            edge: e,
            faces: [cof[0], cof[1]],
        });
    }
    let joined = DualGraph {
        nodes: faces,
        arcs: all_arcs,
    };
    steps += (joined.nodes.len() + joined.arcs.len()) as u64;
    // Local face numbering, reusing the polygon marks.
    for (i, &f) in joined.nodes.iter().enumerate() {
        face_mark[f as usize] = i as u32;
    }
    let local = |f: u32| face_mark[f as usize] as usize;
    let mut uf = UnionFind::new(joined.nodes.len());
    for a in &joined.arcs {
        uf.union(local(a.faces[0]), local(a.faces[1]));
    }
    let connected = (1..joined.nodes.len()).all(|i| uf.equiv(0, i));
    if joined.arcs.len() + 1 != joined.nodes.len().max(1) || !connected {
        return Err(not_tree(
            None,
            format!(
                "{} faces, {} arcs after joining polygons",
                joined.nodes.len(),
                joined.arcs.len()
            ),
        ));
    }

    let Some(&root) = joined.nodes.iter().min() else {
        return Ok(SurfacePart { pairs, steps });
    };
    let mut adj: Vec<Vec<(u32, u32)>> = vec![Vec::new(); joined.nodes.len()];
    for a in &joined.arcs {
        adj[local(a.faces[0])].push((a.edge, a.faces[1]));
        adj[local(a.faces[1])].push((a.edge, a.faces[0]));
    }
    let mut seen = vec![false; joined.nodes.len()];
    seen[local(root)] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(f) = queue.pop_front() {
        let nbrs = &mut adj[local(f)];
        nbrs.sort_unstable();
        for &(e, g) in nbrs.iter() {
            steps += 1;
            if !seen[local(g)] {
                seen[local(g)] = true;
                pairs.push((Cell::edge(e), Cell::face(g)));
                queue.push_back(g);
            }
        }
    }
    Ok(SurfacePart { pairs, steps })
}

/// Builds the gradient on `sm`. With the polygon reading the result has one
/// critical vertex and one critical face per surface; otherwise a repair
/// pass may cancel surplus critical vertices, which is flagged.
pub fn optimal_gradient(
    sm: &StratifoldMesh,
    opts: &OptimizerOptions,
) -> Result<GradientResult, OptimizerError> {
    let k = &sm.mesh;
    let (vr, er) = sm.roles(opts.reading);
    let labels = match opts.reading {
        BoundaryReading::Polygon => sm.face_polygon.clone(),
        BoundaryReading::Circles => polygon_labels(k, &sm.face_surface, &er, sm.num_surfaces),
    };
    let mut polygons: Vec<Vec<Vec<u32>>> = vec![Vec::new(); sm.num_surfaces];
    for f in 0..k.num_faces() {
        let (s, p) = (sm.face_surface[f] as usize, labels[f] as usize);
        if polygons[s].len() <= p {
            polygons[s].resize(p + 1, Vec::new());
        }
        polygons[s][p].push(f as u32);
    }
    let mut steps = k.num_faces() as u64;

    let parts = opts.exec.map_range(sm.num_surfaces, |i| {
        surface_stage(sm, i, &polygons[i], &vr, &er)
    });
    let mut pairs: Vec<(Cell, Cell)> = Vec::with_capacity(k.num_vertices() + k.num_faces());
    for part in parts {
        let part = part?;
        steps += part.steps;
        pairs.extend(part.pairs);
    }

    // Boundary graph; a forest if it is disconnected.
    let mut visited = vec![false; k.num_vertices()];
    for v in 0..k.num_vertices() as u32 {
        steps += 1;
        if vr[v as usize] != VertexRole::PolygonBoundary || visited[v as usize] {
            continue;
        }
        let found = bfs_tree_pairs(
            k,
            v,
            |e| er[e as usize] == EdgeRole::Boundary,
            &mut visited,
            &mut steps,
        );
        pairs.extend(
            found
                .into_iter()
                .map(|(w, e)| (Cell::vertex(w), Cell::edge(e))),
        );
    }

    let mut field = DiscreteVectorField::from_pairs(pairs);
    steps += field.len() as u64;
    if !is_matching(&field, k)? {
        return Err(OptimizerError::NotAMatching);
    }
    if let Some(path) = find_closed_vpath(&field, k)? {
        return Err(OptimizerError::ClosedPathExists(path));
    }

    let mut repair = false;
    if count_critical_vertices(k, &field) > 1 {
        field = repair_vertices(k, field)?;
        repair = true;
    }
    let partners = Partners::new(k, &field);
    let (critical, m) = critical_from_partners(k, &partners);

    let n = sm.num_surfaces;
    let chi = euler_characteristic(k);
    if m.m0 != 1 {
        return Err(OptimizerError::Invariant(format!(
            "{} critical vertices",
            m.m0
        )));
    }
    if m.m2 != n {
        return Err(OptimizerError::Invariant(format!(
            "{} critical faces for {n} surfaces",
            m.m2
        )));
    }
    if m.m1 as i64 != 1 + n as i64 - chi {
        return Err(OptimizerError::Invariant(format!(
            "{} critical edges, expected {}",
            m.m1,
            1 + n as i64 - chi
        )));
    }
    Ok(GradientResult {
        field,
        critical,
        m,
        repair,
        steps,
        reading: opts.reading,
    })
}

fn count_critical_vertices(k: &SimplicialComplex2, v: &DiscreteVectorField) -> usize {
    let p = Partners::new(k, v);
    (0..k.num_vertices() as u32)
        .filter(|&x| p.is_critical(Cell::vertex(x)))
        .count()
}

/// Cancels critical vertices against critical edges whose endpoints flow to
/// different critical vertices, until one critical vertex remains.
fn repair_vertices(
    k: &SimplicialComplex2,
    mut v: DiscreteVectorField,
) -> Result<DiscreteVectorField, OptimizerError> {
    loop {
        let partners = Partners::new(k, &v);
        let nv = k.num_vertices();
        // sink[x]: the critical vertex reached by following the field down from x.
        let mut sink = vec![u32::MAX; nv];
        for start in 0..nv as u32 {
            let mut trail = Vec::new();
            let mut x = start;
            while sink[x as usize] == u32::MAX {
                match partners.up(Cell::vertex(x)) {
                    Some(e) => {
                        trail.push(x);
                        x = k.opposite(e.idx(), x);
                    }
                    None => {
                        sink[x as usize] = x;
                        break;
                    }
                }
            }
            let s = sink[x as usize];
            for t in trail {
                sink[t as usize] = s;
            }
        }
        let critical: Vec<u32> = (0..nv as u32).filter(|&x| sink[x as usize] == x).collect();
        if critical.len() <= 1 {
            return Ok(v);
        }
        let root = critical[0];
        let candidate = (0..k.num_edges() as u32)
            .filter(|&e| partners.is_critical(Cell::edge(e)))
            .find_map(|e| {
                let [a, b] = k.edge(e as usize);
                let (sa, sb) = (sink[a as usize], sink[b as usize]);
                (sa != sb).then(|| (e, if sa == root { sb } else { sa.max(sb) }))
            });
        let Some((e, target)) = candidate else {
            return Err(OptimizerError::RepairFailed(format!(
                "{} critical vertices but no critical edge joins their basins",
                critical.len()
            )));
        };
        v = cancel_critical_pair(&v, Cell::vertex(target), Cell::edge(e), k)
            .map_err(|err| OptimizerError::RepairFailed(err.to_string()))?;
    }
}

/// Why the reported field is known to be optimal.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OptimalTag {
    TwistedTheorem,
    OracleCertified,
    Unknown,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub coefficients: Coefficients,
    pub betti: [usize; 3],
    pub torsion: Vec<u64>,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MorseReport {
    pub m: MorseVector,
    #[serde(rename = "type")]
    pub kind: StratifoldKind,
    pub witness_prime: Option<u64>,
    pub perfect: Vec<Coefficients>,
    pub optimal: OptimalTag,
    pub repair: bool,
    pub reading: BoundaryReading,
    pub prime_factors: Vec<u64>,
    pub checks: Vec<InequalityCheck>,
    /// Exhaustive minimum from the oracle, when it was run to completion.
    pub oracle_minimum: Option<usize>,
    pub critical: Vec<String>,
}

/// Coefficient systems every report is checked against.
pub const CHECK_COEFFICIENTS: [Coefficients; 5] = [
    Coefficients::Rational,
    Coefficients::Integer,
    Coefficients::Prime(2),
    Coefficients::Prime(3),
    Coefficients::Prime(5),
];

impl MorseReport {
    /// Records an exhaustive oracle minimum; a match certifies optimality
    /// when no theorem already does.
    pub fn record_oracle(&mut self, minimum: usize) {
        self.oracle_minimum = Some(minimum);
        if self.optimal == OptimalTag::Unknown && minimum == self.m.total() {
            self.optimal = OptimalTag::OracleCertified;
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Classifies `spec` and checks the field's critical counts against the
/// cellular Betti numbers of the stratifold.
pub fn verify_report(
    g: &GradientResult,
    sm: &StratifoldMesh,
    spec: &StratifoldSpec,
) -> Result<MorseReport, OptimizerError> {
    let chi = euler_characteristic(&sm.mesh);
    if sm.num_surfaces != spec.n() {
        return Err(OptimizerError::MismatchedSpec(format!(
            "{} surfaces in the mesh, {} in the spec",
            sm.num_surfaces,
            spec.n()
        )));
    }
    if sm.circles != spec.circles {
        return Err(OptimizerError::MismatchedSpec("circle ids differ".into()));
    }
    let spec_chi = euler_from_spec(spec)?;
    if chi != spec_chi {
        return Err(OptimizerError::MismatchedSpec(format!(
            "mesh χ = {chi}, spec χ = {spec_chi}"
        )));
    }
    let t = classify(spec)?;
    let mut systems: Vec<Coefficients> = CHECK_COEFFICIENTS.to_vec();
    for &p in t.prime_factors.iter().chain(&t.witness_prime) {
        if !systems.contains(&Coefficients::Prime(p)) {
            systems.push(Coefficients::Prime(p));
        }
    }
    let mut checks = Vec::new();
    let mut perfect = Vec::new();
    for c in systems {
        let b = cw_betti(spec, c)?;
        if c.is_field() && b.as_array() == g.m.as_array() {
            perfect.push(c);
        }
        checks.push(InequalityCheck {
            coefficients: c,
            betti: b.as_array(),
            holds: check_morse_inequalities(&g.m, &b, chi),
            torsion: b.torsion,
        });
    }
    let optimal = match t.kind {
        StratifoldKind::NotTwisted => OptimalTag::Unknown,
        _ => OptimalTag::TwistedTheorem,
    };
    Ok(MorseReport {
        m: g.m,
        kind: t.kind,
        witness_prime: t.witness_prime,
        perfect,
        optimal,
        repair: g.repair,
        reading: g.reading,
        prime_factors: t.prime_factors,
        checks,
        oracle_minimum: None,
        critical: g
            .critical
            .iter()
            .map(|&c| sm.mesh.simplex(c).to_string())
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::build_complex;
    use crate::stratifold::fixtures::{crosscap, disks_2_3, p3};
    use crate::stratifold::SurfaceSpec;
    use crate::triangulate::{triangulate_spec, TriangulateOptions};

    fn run(spec: &StratifoldSpec, opts: &TriangulateOptions) -> (StratifoldMesh, GradientResult) {
        let sm = triangulate_spec(spec, opts).unwrap();
        let g = optimal_gradient(&sm, &OptimizerOptions::default()).unwrap();
        (sm, g)
    }

    #[test]
    fn fan_dual_is_a_path() {
        // fan of a hexagon from vertex 0, all rim vertices on the boundary
        let k = build_complex(&[[0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5]]).unwrap();
        let roles: Vec<EdgeRole> = k
            .edges()
            .iter()
            .map(|&[a, b]| {
                if b - a == 1 || (a, b) == (0, 5) {
                    EdgeRole::Boundary
                } else {
                    EdgeRole::Internal
                }
            })
            .collect();
        let g = dual_graph(&k, &[0, 1, 2, 3], &roles, &HashSet::new()).unwrap();
        assert!(g.is_tree());
        assert_eq!(g.arcs.len(), 3);
    }

    #[test]
    fn expected_vectors() {
        for (spec, m) in [
            (p3(), [1, 1, 1]),
            (disks_2_3(), [1, 1, 2]),
            (crosscap(&[2, 2]), [1, 3, 1]),
        ] {
            for opts in [TriangulateOptions::default(), TriangulateOptions::compact()] {
                let (_, g) = run(&spec, &opts);
                assert_eq!(g.m.as_array(), m, "{spec}");
                assert!(!g.repair);
            }
        }
    }

    #[test]
    fn p3_report() {
        let (sm, g) = run(&p3(), &TriangulateOptions::default());
        let r = verify_report(&g, &sm, &p3()).unwrap();
        assert_eq!(r.kind, StratifoldKind::Type1);
        assert_eq!(r.witness_prime, Some(3));
        assert_eq!(r.perfect, vec![Coefficients::Prime(3)]);
        assert_eq!(r.optimal, OptimalTag::TwistedTheorem);
        assert!(r.checks.iter().all(|c| c.holds));
        let json: serde_json::Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(json["m"], serde_json::json!([1, 1, 1]));
        assert_eq!(json["type"], "Type1");
        assert_eq!(json["perfect"], serde_json::json!(["F3"]));
        assert_eq!(json["repair"], false);
    }

    #[test]
    fn two_disks_report() {
        let (sm, g) = run(&disks_2_3(), &TriangulateOptions::default());
        let r = verify_report(&g, &sm, &disks_2_3()).unwrap();
        assert!(r.perfect.is_empty());
        assert_eq!(r.optimal, OptimalTag::TwistedTheorem);
    }

    #[test]
    fn untwisted_is_unknown_until_certified() {
        let spec = StratifoldSpec::new(
            &["c1"],
            vec![SurfaceSpec::new(0, &[("c1", 1), ("c1", 1), ("c1", 1)])],
        );
        let (sm, g) = run(&spec, &TriangulateOptions::compact());
        let mut r = verify_report(&g, &sm, &spec).unwrap();
        assert_eq!(r.optimal, OptimalTag::Unknown);
        r.record_oracle(g.m.total());
        assert_eq!(r.optimal, OptimalTag::OracleCertified);
    }

    #[test]
    fn mismatched_spec() {
        let (sm, g) = run(&p3(), &TriangulateOptions::compact());
        assert!(matches!(
            verify_report(&g, &sm, &disks_2_3()),
            Err(OptimizerError::MismatchedSpec(_))
        ));
    }

    #[test]
    fn circles_reading_fails_on_annuli() {
        // Under the circles reading a surface with two boundary circles has an
        // annular interior, so its dual graph has a cycle.
        let spec = StratifoldSpec::new(
            &["a", "b"],
            vec![
                SurfaceSpec::new(0, &[("a", 2), ("b", 3)]),
                SurfaceSpec::new(0, &[("a", 3)]),
                SurfaceSpec::new(0, &[("b", 2)]),
            ],
        );
        let sm = triangulate_spec(&spec, &TriangulateOptions::compact()).unwrap();
        let opts = OptimizerOptions {
            reading: BoundaryReading::Circles,
            ..Default::default()
        };
        assert!(matches!(
            optimal_gradient(&sm, &opts),
            Err(OptimizerError::DualNotTree { surface: 0, .. })
        ));
        assert!(
            !optimal_gradient(&sm, &OptimizerOptions::default())
                .unwrap()
                .repair
        );
    }

    #[test]
    fn circles_reading_on_disks() {
        let sm = triangulate_spec(&p3(), &TriangulateOptions::default()).unwrap();
        let opts = OptimizerOptions {
            reading: BoundaryReading::Circles,
            ..Default::default()
        };
        let g = optimal_gradient(&sm, &opts).unwrap();
        assert_eq!(g.m.as_array(), [1, 1, 1]);
        assert_eq!(g.reading, BoundaryReading::Circles);
    }

    #[test]
    fn repair_joins_a_forest() {
        // path 0-1-2-3 with two trees {0,1} and {2,3}; edge 1-2 is critical
        let k = build_complex(&[[0, 1], [1, 2], [2, 3]]).unwrap();
        let e = |a, b| Cell::edge(k.find_edge(a, b).unwrap());
        let v = DiscreteVectorField::from_pairs([
            (Cell::vertex(1), e(0, 1)),
            (Cell::vertex(3), e(2, 3)),
        ]);
        let fixed = repair_vertices(&k, v).unwrap();
        assert_eq!(count_critical_vertices(&k, &fixed), 1);
        assert!(find_closed_vpath(&fixed, &k).unwrap().is_none());
        // two components can never be joined
        let k = build_complex(&[[0, 1], [2, 3]]).unwrap();
        let v = DiscreteVectorField::from_pairs([
            (Cell::vertex(1), Cell::edge(0)),
            (Cell::vertex(3), Cell::edge(1)),
        ]);
        assert!(matches!(
            repair_vertices(&k, v),
            Err(OptimizerError::RepairFailed(_))
        ));
    }

    #[test]
    fn circles_reading_fails_on_handles() {
        let spec = StratifoldSpec::new(&["c1"], vec![SurfaceSpec::new(1, &[("c1", 3)])]);
        let sm = triangulate_spec(&spec, &TriangulateOptions::compact()).unwrap();
        let opts = OptimizerOptions {
            reading: BoundaryReading::Circles,
            ..Default::default()
        };
        assert!(matches!(
            optimal_gradient(&sm, &opts),
            Err(OptimizerError::DualNotTree { .. })
        ));
    }

    #[test]
    fn sequential_and_parallel_agree() {
        let spec = StratifoldSpec::new(
            &["a", "b"],
            vec![
                SurfaceSpec::new(1, &[("a", 2), ("b", -3)]),
                SurfaceSpec::new(-2, &[("a", 2), ("b", 2)]),
                SurfaceSpec::new(0, &[("a", 2), ("a", 2)]),
            ],
        );
        let sm = triangulate_spec(&spec, &TriangulateOptions::default().with_fineness(1)).unwrap();
        let a = optimal_gradient(
            &sm,
            &OptimizerOptions {
                exec: Exec::Sequential,
                ..Default::default()
            },
        )
        .unwrap();
        let b = optimal_gradient(
            &sm,
            &OptimizerOptions {
                exec: Exec::Parallel,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(a, b);
    }
}
