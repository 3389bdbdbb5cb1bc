use std::collections::{BTreeMap, HashMap, HashSet};

use super::{label_cells, subdivide, MeshStructure, StratifoldMesh, TriangulateError};
use crate::complex::SimplicialComplex2;
use crate::stratifold::{validate_spec, StratifoldSpec};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TriangulateOptions {
    /// Base length per circle id; circles not listed get 3.
    pub circle_lengths: BTreeMap<String, usize>,
    /// Extra barycentric subdivisions applied to the finished mesh.
    pub fineness: u32,
    /// Side lengths are scaled by `2^base_subdivisions`. The default of 2
    /// gives the cycle lengths of two subdivisions of the coarsest polygon;
    /// 0 gives compact meshes for exhaustive search.
    pub base_subdivisions: u32,
    /// Cut one ear off each polygon, producing a crossing edge.
    pub ears: bool,
}

impl Default for TriangulateOptions {
    fn default() -> Self {
        TriangulateOptions {
            circle_lengths: BTreeMap::new(),
            fineness: 0,
            base_subdivisions: 2,
            ears: true,
        }
    }
}

impl TriangulateOptions {
    pub fn compact() -> Self {
        TriangulateOptions {
            base_subdivisions: 0,
            ..Default::default()
        }
    }

    pub fn with_fineness(mut self, fineness: u32) -> Self {
        self.fineness = fineness;
        self
    }
}

/// Incremental vertex bookkeeping for the generator.
#[derive(Default)]
struct Builder {
    boundary: Vec<bool>,
    circle: Vec<Option<u32>>,
    faces: Vec<([u32; 3], u32)>,
}

impl Builder {
    fn vertex(&mut self, boundary: bool, circle: Option<u32>) -> u32 {
        self.boundary.push(boundary);
        self.circle.push(circle);
        (self.boundary.len() - 1) as u32
    }

    fn path(&mut self, from: u32, to: u32, segments: usize) -> Vec<u32> {
        let mut p = vec![from];
        for _ in 1..segments {
            p.push(self.vertex(true, None));
        }
        p.push(to);
        p
    }
}

fn key(a: u32, b: u32) -> [u32; 2] {
    [a.min(b), a.max(b)]
}

pub fn triangulate_spec(
    spec: &StratifoldSpec,
    opts: &TriangulateOptions,
) -> Result<StratifoldMesh, TriangulateError> {
    let errs = validate_spec(spec);
    if !errs.is_empty() {
        return Err(TriangulateError::InvalidSpec(errs));
    }
    for (id, &length) in &opts.circle_lengths {
        if spec.circle_index(id).is_none() {
            return Err(TriangulateError::UnknownCircle(id.clone()));
        }
        if length < 3 {
            return Err(TriangulateError::CircleTooShort {
                circle: id.clone(),
                length,
            });
        }
    }
    let scale = 1usize << opts.base_subdivisions;
    let mut b = Builder::default();

    let circle_verts: Vec<Vec<u32>> = spec
        .circles
        .iter()
        .enumerate()
        .map(|(j, id)| {
            let len = opts.circle_lengths.get(id).copied().unwrap_or(3) * scale;
            (0..len).map(|_| b.vertex(true, Some(j as u32))).collect()
        })
        .collect();
    let mut circle_edges: HashMap<[u32; 2], u32> = HashMap::new();
    for (j, cv) in circle_verts.iter().enumerate() {
        for t in 0..cv.len() {
            circle_edges.insert(key(cv[t], cv[(t + 1) % cv.len()]), j as u32);
        }
    }

    // Boundary rings of all polygons first, so chords can avoid every
    // boundary edge image in the mesh.
    let mut rings: Vec<Vec<u32>> = Vec::with_capacity(spec.n());
    for s in &spec.surfaces {
        let base = b.vertex(true, None);
        let mut sides: Vec<Vec<u32>> = Vec::new();
        let letters: Vec<Vec<u32>> = (0..s.schema_len())
            .map(|_| b.path(base, base, 3 * scale))
            .collect();
        if s.is_orientable() {
            for h in letters.chunks(2) {
                let rev = |p: &Vec<u32>| p.iter().rev().copied().collect::<Vec<u32>>();
                sides.extend([h[0].clone(), h[1].clone(), rev(&h[0]), rev(&h[1])]);
            }
        } else {
            for a in letters {
                sides.extend([a.clone(), a]);
            }
        }
        let mut seen_pairs: HashSet<usize> = HashSet::new();
        for a in &s.attachments {
            let j = spec.circle_index(&a.circle).expect("validated");
            let cv = &circle_verts[j];
            let len = if seen_pairs.insert(j) {
                scale
            } else {
                2 * scale
            };
            let d = b.path(base, cv[0], len);
            let l = cv.len() as i64;
            let e: Vec<u32> = (0..=a.degree.abs() * l)
                .map(|t| cv[(a.degree.signum() * t).rem_euclid(l) as usize])
                .collect();
            let back: Vec<u32> = d.iter().rev().copied().collect();
            sides.extend([d, e, back]);
        }
        let mut ring = Vec::new();
        for side in &sides {
            ring.extend_from_slice(&side[..side.len() - 1]);
        }
        rings.push(ring);
    }
    let mut boundary_edges: HashSet<[u32; 2]> = HashSet::new();
    for ring in &rings {
        for t in 0..ring.len() {
            boundary_edges.insert(key(ring[t], ring[(t + 1) % ring.len()]));
        }
    }

    let mut chords: HashSet<[u32; 2]> = HashSet::new();
    for (i, mut ring) in rings.into_iter().enumerate() {
        let i = i as u32;
        if opts.ears {
            cut_ear(&mut ring, &boundary_edges, &mut chords, &mut b.faces, i);
        }
        fill_disk(&ring, &mut b, i);
    }

    let tris: Vec<[u32; 3]> = b.faces.iter().map(|&(t, _)| t).collect();
    let mesh = SimplicialComplex2::from_simplices(&tris)?;
    if mesh.num_faces() != tris.len() {
        return Err(TriangulateError::InconsistentStructure(
            "generator produced a repeated triangle".into(),
        ));
    }
    let mut face_surface = vec![0u32; mesh.num_faces()];
    for &(t, s) in &b.faces {
        face_surface[mesh.find_face(t).expect("face was inserted") as usize] = s;
    }
    let structure = MeshStructure {
        circles: spec.circles.clone(),
        num_surfaces: spec.n(),
        boundary_vertex: b.boundary.clone(),
        boundary_edge: mesh
            .edges()
            .iter()
            .map(|&[a, c]| boundary_edges.contains(&[a, c]))
            .collect(),
        vertex_circle: b.circle.clone(),
        edge_circle: mesh
            .edges()
            .iter()
            .map(|e| circle_edges.get(e).copied())
            .collect(),
        face_surface,
    };
    let mut sm = label_cells(mesh, structure)?;
    for _ in 0..opts.fineness {
        sm = subdivide(&sm)?;
    }
    Ok(sm)
}

/// Removes the first ear whose three corners have distinct images and whose
/// chord is a fresh edge.
fn cut_ear(
    ring: &mut Vec<u32>,
    boundary_edges: &HashSet<[u32; 2]>,
    chords: &mut HashSet<[u32; 2]>,
    faces: &mut Vec<([u32; 3], u32)>,
    surface: u32,
) {
    let n = ring.len();
    if n <= 3 {
        return;
    }
    for k in 0..n {
        let (a, m, c) = (ring[k], ring[(k + 1) % n], ring[(k + 2) % n]);
        if a == m || m == c || a == c {
            continue;
        }
        let chord = key(a, c);
        if boundary_edges.contains(&chord) || chords.contains(&chord) {
            continue;
        }
        chords.insert(chord);
        faces.push(([a, m, c], surface));
        ring.remove((k + 1) % n);
        return;
    }
}

/// Triangulates the disk bounded by `ring` (a cyclic list of vertex images)
/// with one internal apex per block of consecutive, pairwise distinct images
/// and a fan over the inner ring of apexes.
fn fill_disk(ring: &[u32], b: &mut Builder, surface: u32) {
    let n = ring.len();
    let at = |k: usize| ring[k % n];
    // Block boundaries s_0 = 0 < s_1 < … < s_m = n.
    let mut cuts = vec![0usize];
    while *cuts.last().unwrap() < n {
        let start = *cuts.last().unwrap();
        let mut seen: HashSet<u32> = HashSet::from([at(start)]);
        let mut k = start;
        while k < n && seen.insert(at(k + 1)) {
            k += 1;
        }
        debug_assert!(k > start, "consecutive ring vertices coincide");
        cuts.push(k);
    }
    while cuts.len() < 4 {
        let j = (0..cuts.len() - 1)
            .max_by_key(|&j| (cuts[j + 1] - cuts[j], usize::MAX - j))
            .unwrap();
        cuts.insert(j + 1, (cuts[j] + cuts[j + 1]) / 2);
    }
    let m = cuts.len() - 1;
    let apex: Vec<u32> = (0..m).map(|_| b.vertex(false, None)).collect();
    for j in 0..m {
        for k in cuts[j]..cuts[j + 1] {
            b.faces.push(([at(k), at(k + 1), apex[j]], surface));
        }
        let prev = apex[(j + m - 1) % m];
        b.faces.push(([at(cuts[j]), prev, apex[j]], surface));
    }
    for t in 1..m - 1 {
        b.faces.push(([apex[0], apex[t], apex[t + 1]], surface));
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::euler_characteristic;
    use crate::homology::{betti, cw_betti, Coefficients};
    use crate::stratifold::fixtures::{crosscap, disks_2_3, p3};
    use crate::stratifold::{euler_from_spec, SurfaceSpec};
    use crate::triangulate::{EdgeRole, VertexRole};

    fn circle_len(sm: &StratifoldMesh, c: u32) -> usize {
        sm.edge_circle.iter().filter(|&&x| x == Some(c)).count()
    }

    #[test]
    fn p3_default() {
        let sm = triangulate_spec(&p3(), &TriangulateOptions::default()).unwrap();
        assert_eq!(euler_characteristic(&sm.mesh), 1);
        assert_eq!(circle_len(&sm, 0), 12);
        // the boundary cycle wraps three times: 36 face-edge incidences on the circle
        let incidences: usize = (0..sm.mesh.num_edges())
            .filter(|&e| sm.edge_circle[e].is_some())
            .map(|e| sm.mesh.edge_cofaces(e).len())
            .sum();
        assert_eq!(incidences, 36);
        sm.validate().unwrap();
    }

    #[test]
    fn p3_compact_is_small() {
        let sm = triangulate_spec(&p3(), &TriangulateOptions::compact()).unwrap();
        assert_eq!(euler_characteristic(&sm.mesh), 1);
        assert!(sm.mesh.num_cells() <= 60, "{}", sm.mesh.num_cells());
    }

    #[test]
    fn two_disks() {
        let sm = triangulate_spec(&disks_2_3(), &TriangulateOptions::default()).unwrap();
        assert_eq!(euler_characteristic(&sm.mesh), 2);
        assert_eq!(
            sm.faces_of_surface(0).count() + sm.faces_of_surface(1).count(),
            sm.mesh.num_faces()
        );
        for i in 0..2 {
            assert_eq!(sm.num_polygons(i), sm.crossing_edges(i) + 1);
        }
    }

    #[test]
    fn circle_vertices_are_boundary_apexes_internal() {
        let sm = triangulate_spec(&p3(), &TriangulateOptions::default()).unwrap();
        for v in 0..sm.mesh.num_vertices() {
            if sm.vertex_circle[v].is_some() {
                assert_eq!(sm.vertex_roles[v], VertexRole::PolygonBoundary);
            }
        }
        assert!(sm.vertex_roles.contains(&VertexRole::Internal));
        assert!(sm.edge_roles.contains(&EdgeRole::Bridge));
        assert_eq!(sm.crossing_edges(0), 1);
    }

    #[test]
    fn euler_and_homology_match_the_spec() {
        let specs = [
            p3(),
            disks_2_3(),
            crosscap(&[2, 2]),
            crosscap(&[3]),
            StratifoldSpec::new(
                &["a", "b"],
                vec![
                    SurfaceSpec::new(1, &[("a", 2), ("b", -3)]),
                    SurfaceSpec::new(-2, &[("a", 2), ("b", 2)]),
                    SurfaceSpec::new(0, &[("a", 2), ("a", 2)]),
                ],
            ),
        ];
        for spec in &specs {
            for opts in [TriangulateOptions::default(), TriangulateOptions::compact()] {
                let sm = triangulate_spec(spec, &opts).unwrap();
                assert_eq!(
                    euler_characteristic(&sm.mesh),
                    euler_from_spec(spec).unwrap(),
                    "{spec}"
                );
                for c in [
                    Coefficients::Rational,
                    Coefficients::Prime(2),
                    Coefficients::Integer,
                ] {
                    assert_eq!(
                        betti(&sm.mesh, c).unwrap(),
                        cw_betti(spec, c).unwrap(),
                        "{spec} {c}"
                    );
                }
            }
        }
    }

    #[test]
    fn fineness_preserves_homology() {
        let spec = crosscap(&[2, 2]);
        let a = triangulate_spec(&spec, &TriangulateOptions::compact()).unwrap();
        let b = triangulate_spec(&spec, &TriangulateOptions::compact().with_fineness(1)).unwrap();
        assert_eq!(b.mesh.num_faces(), 6 * a.mesh.num_faces());
        assert_eq!(circle_len(&b, 0), 2 * circle_len(&a, 0));
        for c in [Coefficients::Rational, Coefficients::Prime(2)] {
            assert_eq!(betti(&a.mesh, c).unwrap(), betti(&b.mesh, c).unwrap());
        }
    }

    #[test]
    fn bad_lengths() {
        let mut opts = TriangulateOptions::default();
        opts.circle_lengths.insert("c1".into(), 2);
        assert!(matches!(
            triangulate_spec(&p3(), &opts),
            Err(TriangulateError::CircleTooShort { .. })
        ));
        let mut opts = TriangulateOptions::default();
        opts.circle_lengths.insert("zz".into(), 5);
        assert!(matches!(
            triangulate_spec(&p3(), &opts),
            Err(TriangulateError::UnknownCircle(_))
        ));
    }
}
