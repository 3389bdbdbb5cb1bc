//! Fixed and seeded test inputs: stratifold specs, their meshes, and random
//! connected graphs.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::complex::{build_complex, SimplicialComplex2};
use crate::stratifold::{validate_spec, Attachment, StratifoldSpec, SurfaceSpec};
use crate::triangulate::{triangulate_spec, StratifoldMesh, TriangulateError, TriangulateOptions};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CorpusEntry {
    pub name: String,
    pub spec: StratifoldSpec,
    pub fineness: u32,
}

impl CorpusEntry {
    pub fn options(&self) -> TriangulateOptions {
        TriangulateOptions::default().with_fineness(self.fineness)
    }

    pub fn mesh(&self) -> Result<StratifoldMesh, TriangulateError> {
        triangulate_spec(&self.spec, &self.options())
    }

    /// Smallest mesh the generator makes for this spec.
    pub fn compact_mesh(&self) -> Result<StratifoldMesh, TriangulateError> {
        triangulate_spec(&self.spec, &TriangulateOptions::compact())
    }
}

const FIXED: &[(&str, &str, u32)] = &[
    ("p3", "g0[c1:3]", 0),
    ("p4", "g0[c1:4]", 0),
    ("p5-fine", "g0[c1:5]", 1),
    ("disks-2-3", "g0[c1:2] g0[c1:3]", 0),
    ("disks-2-2", "g0[c1:2] g0[c1:2]", 0),
    ("disks-3-neg3", "g0[c1:3] g0[c1:-3]", 0),
    ("torus-3", "g1[c1:3]", 0),
    ("genus2-4", "g2[c1:4]", 0),
    ("crosscaps-2-2", "g-1[c1:2] g-1[c1:2]", 0),
    ("mobius-3", "g-1[c1:3]", 0),
    ("klein-disk", "g-2[c1:2] g0[c1:2]", 0),
    ("mobius-disk-odd", "g-1[c1:2] g0[c1:3]", 1),
    ("annulus-two-disks", "g0[c1:2,c2:2] g0[c1:2] g0[c2:2]", 0),
    ("three-surfaces", "g0[c1:2,c2:3] g1[c1:2] g0[c2:2]", 0),
    ("annulus-3-3", "g0[c1:3,c2:3]", 0),
    ("torus-annulus", "g1[c1:2,c2:4] g0[c2:2] g0[c1:2]", 0),
    (
        "three-circles",
        "g0[c1:2,c2:2,c3:2] g0[c1:2] g0[c2:2] g0[c3:2]",
        0,
    ),
    ("mixed-two-circles", "g-1[c1:2,c2:2] g-1[c2:2] g0[c1:2]", 0),
    ("disks-5-5-fine", "g0[c1:5] g0[c1:5]", 1),
    ("chain", "g0[c1:2,c2:3] g0[c2:2,c3:4] g-2[c3:2] g0[c1:2]", 0),
    ("genus2-crosscap", "g2[c1:2] g-1[c1:2]", 0),
    ("crosscaps-3-3", "g-2[c1:3] g-1[c1:3]", 0),
    ("disks-4-4-fine", "g0[c1:4] g0[c1:4]", 1),
    ("genus1-mixed-signs", "g1[c1:2,c1:-4]", 0),
];

/// The fixed twisted corpus.
pub fn fixed_corpus() -> Vec<CorpusEntry> {
    FIXED
        .iter()
        .map(|&(name, text, fineness)| CorpusEntry {
            name: name.to_string(),
            spec: text.parse().expect("corpus spec parses"),
            fineness,
        })
        .collect()
}

/// One-disk spec with a single degree-`p` attachment.
pub fn pseudo_projective(p: i64) -> StratifoldSpec {
    StratifoldSpec::new(&["c1"], vec![SurfaceSpec::new(0, &[("c1", p)])])
}

#[derive(Clone, Debug)]
pub struct RandomSpecOptions {
    pub max_circles: usize,
    pub max_surfaces: usize,
    pub genus_range: (i64, i64),
    pub degree_range: (i64, i64),
    /// Chance that all degrees get scaled by a random prime, so that the
    /// divisibility criterion holds more often than by chance.
    pub scale_probability: f64,
    pub allow_nonorientable: bool,
}

impl Default for RandomSpecOptions {
    fn default() -> Self {
        RandomSpecOptions {
            max_circles: 3,
            max_surfaces: 4,
            genus_range: (-2, 2),
            degree_range: (2, 5),
            scale_probability: 0.4,
            allow_nonorientable: true,
        }
    }
}

/// A valid twisted spec; retries until [`validate_spec`] accepts.
pub fn random_spec(rng: &mut impl Rng, opts: &RandomSpecOptions) -> StratifoldSpec {
    loop {
        let nc = rng.gen_range(1..=opts.max_circles);
        let ns = rng.gen_range(1..=opts.max_surfaces);
        let circles: Vec<String> = (1..=nc).map(|j| format!("c{j}")).collect();
        let scale = if rng.gen_bool(opts.scale_probability) {
            *[2i64, 3].choose(rng).unwrap()
        } else {
            1
        };
        let mut surfaces = Vec::with_capacity(ns);
        for i in 0..ns {
            let lo = if opts.allow_nonorientable {
                opts.genus_range.0
            } else {
                0
            };
            let genus = rng.gen_range(lo..=opts.genus_range.1);
            // Surface i always touches circle i mod nc, which keeps the
            // incidence graph connected once every circle is used.
            let mut touch = vec![i % nc];
            if nc > 1 && rng.gen_bool(0.3) {
                touch.push(rng.gen_range(0..nc));
            }
            let attachments = touch
                .into_iter()
                .map(|j| {
                    let mut degree = rng.gen_range(opts.degree_range.0..=opts.degree_range.1);
                    if scale > 1 {
                        degree = scale * (degree / scale).max(1);
                    }
                    if genus >= 0 && rng.gen_bool(0.25) {
                        degree = -degree;
                    }
                    Attachment {
                        circle: circles[j].clone(),
                        degree,
                    }
                })
                .collect();
            surfaces.push(SurfaceSpec { genus, attachments });
        }
        let spec = StratifoldSpec { circles, surfaces };
        if validate_spec(&spec).is_empty() {
            return spec;
        }
    }
}

pub fn random_specs(seed: u64, count: usize, opts: &RandomSpecOptions) -> Vec<StratifoldSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_spec(&mut rng, opts)).collect()
}

/// A connected graph on `2..=max_vertices` vertices: a random spanning tree
/// plus random extra edges.
pub fn random_connected_graph(rng: &mut impl Rng, max_vertices: usize) -> SimplicialComplex2 {
    let n = rng.gen_range(2..=max_vertices.max(2));
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.shuffle(rng);
    let mut edges: Vec<[u32; 2]> = (1..n)
        .map(|i| [order[rng.gen_range(0..i)], order[i]])
        .collect();
    let extra = rng.gen_range(0..=n);
    for _ in 0..extra {
        let (a, b) = (rng.gen_range(0..n as u32), rng.gen_range(0..n as u32));
        if a != b {
            edges.push([a, b]);
        }
    }
    build_complex(&edges).expect("graph edges are valid simplices")
}

pub fn random_graphs(seed: u64, count: usize, max_vertices: usize) -> Vec<SimplicialComplex2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| random_connected_graph(&mut rng, max_vertices))
        .collect()
}

/// Applies a seeded random vertex permutation.
pub fn relabel_randomly(k: &SimplicialComplex2, seed: u64) -> (SimplicialComplex2, Vec<u32>) {
    let mut perm: Vec<u32> = (0..k.num_vertices() as u32).collect();
    perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    (k.relabel(&perm), perm)
}
