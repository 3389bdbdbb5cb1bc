//! Exact minimum number of critical cells over all gradient fields of a
//! small 2-complex.
//!
//! For a gradient with `m₂` critical faces whose matched edges are `D`, the
//! best possible vertex/edge part leaves one critical vertex per component
//! of the graph `G′ = (V, E ∖ D)`, and `m₁` follows from the Euler
//! characteristic. So the total is `2(m₀ + m₂) − χ` and the search only
//! ranges over acyclic face/edge matchings: the critical faces `C` are
//! enumerated by size, `F ∖ C` must collapse through free edges, and a
//! memoized depth-first search over collapse states minimizes the number of
//! components of `G′`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{euler_characteristic, Cell, SimplicialComplex2};
use crate::exec::Exec;
use crate::homology::{betti, Coefficients};
use crate::morse::{bfs_tree_pairs, DiscreteVectorField, MorseVector};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("complex too large for exhaustive search ({faces} faces, {edges} edges, {vertices} vertices)")]
    TooLarge {
        faces: usize,
        edges: usize,
        vertices: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleResult {
    /// Minimal `m₀ + m₁ + m₂` found.
    pub minimum: usize,
    pub m: MorseVector,
    #[serde(skip)]
    pub witness: DiscreteVectorField,
    pub nodes: u64,
    /// The minimum is proven.
    pub exhausted: bool,
    /// Fewest critical faces any gradient can have, if established.
    pub min_m2: Option<usize>,
    pub lower_bound: usize,
}

const CHUNK: usize = 2048;
const MAX_CELLS: usize = 256;

/// Fixed-width bitset over at most [`MAX_CELLS`] indices.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash)]
struct Bits([u64; 4]);

impl Bits {
    fn low(n: usize) -> Self {
        let mut b = Bits::default();
        for i in 0..n {
            b.set(i);
        }
        b
    }
    fn has(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }
    fn set(&mut self, i: usize) {
        self.0[i >> 6] |= 1 << (i & 63);
    }
    fn with(mut self, i: usize) -> Self {
        self.set(i);
        self
    }
    fn without(mut self, i: usize) -> Self {
        self.0[i >> 6] &= !(1 << (i & 63));
        self
    }
    fn and_not(self, o: Bits) -> Self {
        Bits(std::array::from_fn(|w| self.0[w] & !o.0[w]))
    }
    fn is_empty(&self) -> bool {
        self.0 == [0; 4]
    }
    fn iter(self) -> impl Iterator<Item = usize> {
        (0..4).flat_map(move |w| bits(self.0[w]).map(move |i| w * 64 + i))
    }
    /// The set is exactly `{i}` after intersecting with `r`.
    fn meets_only(&self, r: &Bits, i: usize) -> bool {
        (0..4).all(|w| {
            let want = if i >> 6 == w { 1u64 << (i & 63) } else { 0 };
            self.0[w] & r.0[w] == want
        })
    }
}

/// k-subsets of `0..n` in lexicographic order.
struct Combinations {
    idx: Vec<usize>,
    n: usize,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Combinations {
            idx: (0..k).collect(),
            n,
            done: k > n,
        }
    }
}

impl Iterator for Combinations {
    type Item = Bits;
    fn next(&mut self) -> Option<Bits> {
        if self.done {
            return None;
        }
        let out = self.idx.iter().fold(Bits::default(), |b, &i| b.with(i));
        let k = self.idx.len();
        match (0..k).rev().find(|&i| self.idx[i] < self.n - k + i) {
            Some(i) => {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
            }
            None => self.done = true,
        }
        Some(out)
    }
}

struct Tables {
    nv: usize,
    edges: Vec<[u32; 2]>,
    face_edges: Vec<[u32; 3]>,
    cofaces: Vec<Bits>,
}

impl Tables {
    fn is_free(&self, r: &Bits, f: usize, e: u32) -> bool {
        self.cofaces[e as usize].meets_only(r, f)
    }

    fn components(&self, removed: &Bits) -> usize {
        let mut parent: Vec<u32> = (0..self.nv as u32).collect();
        fn find(p: &mut [u32], mut x: u32) -> u32 {
            while p[x as usize] != x {
                p[x as usize] = p[p[x as usize] as usize];
                x = p[x as usize];
            }
            x
        }
        let mut comps = self.nv;
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            if !removed.has(e) {
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra as usize] = rb;
                    comps -= 1;
                }
            }
        }
        comps
    }

    /// Collapses the faces in `r` through free edges; succeeds iff every
    /// face goes. Any order works, so a worklist of free edges suffices.
    fn collapses(&self, r: Bits) -> bool {
        let mut alive = r;
        let mut left = r.iter().count();
        let mut count: Vec<u8> = self
            .cofaces
            .iter()
            .map(|c| c.iter().filter(|&f| r.has(f)).count() as u8)
            .collect();
        let mut stack: Vec<u32> = (0..count.len() as u32)
            .filter(|&e| count[e as usize] == 1)
            .collect();
        while let Some(e) = stack.pop() {
            if count[e as usize] != 1 {
                continue;
            }
            let Some(f) = self.cofaces[e as usize].iter().find(|&f| alive.has(f)) else {
                continue;
            };
            alive = alive.without(f);
            left -= 1;
            for &e2 in &self.face_edges[f] {
                count[e2 as usize] -= 1;
                if count[e2 as usize] == 1 {
                    stack.push(e2);
                }
            }
        }
        left == 0
    }
}

fn bits(mut x: u64) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        (x != 0).then(|| {
            let i = x.trailing_zeros() as usize;
            x &= x - 1;
            i
        })
    })
}

struct Search<'a> {
    t: &'a Tables,
    memo: HashSet<(Bits, Bits)>,
    nodes: u64,
    cap: u64,
    aborted: bool,
    /// Largest component count still worth finding.
    limit: usize,
    path: Vec<(u32, u32)>,
    best: Option<(usize, Vec<(u32, u32)>)>,
}

impl Search<'_> {
    fn dfs(&mut self, r: Bits, d: Bits) {
        if self.aborted {
            return;
        }
        self.nodes += 1;
        if self.nodes > self.cap {
            self.aborted = true;
            return;
        }
        let comps = self.t.components(&d);
        if comps > self.limit {
            return;
        }
        if r.is_empty() {
            self.best = Some((comps, self.path.clone()));
            self.limit = comps.saturating_sub(1);
            return;
        }
        if !self.memo.insert((r, d)) {
            return;
        }
        let mut moves: Vec<(usize, usize, u32)> = Vec::new();
        for f in r.iter() {
            for &e in &self.t.face_edges[f] {
                if !d.has(e as usize) && self.t.is_free(&r, f, e) {
                    moves.push((self.t.components(&d.with(e as usize)), f, e));
                }
            }
        }
        moves.sort_unstable();
        for (c, f, e) in moves {
            if c > self.limit {
                break;
            }
            self.path.push((e, f as u32));
            self.dfs(r.without(f), d.with(e as usize));
            self.path.pop();
            if self.aborted || (self.limit == 0 && self.t.nv > 0) {
                return;
            }
        }
    }
}

struct SubsetOutcome {
    feasible: bool,
    found: Option<(usize, Vec<(u32, u32)>)>,
    nodes: u64,
    aborted: bool,
}

fn try_subset(t: &Tables, all: Bits, critical: Bits, limit: usize, cap: u64) -> SubsetOutcome {
    let r = all.and_not(critical);
    if !t.collapses(r) {
        return SubsetOutcome {
            feasible: false,
            found: None,
            nodes: 1,
            aborted: false,
        };
    }
    let mut s = Search {
        t,
        memo: HashSet::new(),
        nodes: 0,
        cap,
        aborted: false,
        limit,
        path: Vec::new(),
        best: None,
    };
    s.dfs(r, Bits::default());
    SubsetOutcome {
        feasible: true,
        found: s.best,
        nodes: s.nodes + 1,
        aborted: s.aborted,
    }
}

/// Exhaustive search with a node budget. When the budget runs out the best
/// field found so far is returned with `exhausted = false`.
pub fn min_critical_matching(
    k: &SimplicialComplex2,
    budget: u64,
    exec: Exec,
) -> Result<OracleResult, OracleError> {
    let (nv, ne, nf) = (k.num_vertices(), k.num_edges(), k.num_faces());
    if nf > MAX_CELLS || ne > MAX_CELLS {
        return Err(OracleError::TooLarge {
            faces: nf,
            edges: ne,
            vertices: nv,
        });
    }
    let t = Tables {
        nv,
        edges: k.edges().to_vec(),
        face_edges: (0..nf).map(|f| k.face_edges(f)).collect(),
        cofaces: (0..ne)
            .map(|e| {
                k.edge_cofaces(e)
                    .iter()
                    .fold(Bits::default(), |b, &f| b.with(f as usize))
            })
            .collect(),
    };
    let chi = euler_characteristic(k);
    let all = Bits::low(nf);
    let base_comps = t.components(&Bits::default());
    let beta_total = betti(k, Coefficients::Prime(2))
        .expect("2 is prime")
        .total() as i64;
    let lower = {
        let from_betti = (beta_total + chi + 1).div_euclid(2).max(0) as usize;
        from_betti.max(usize::from(nv > 0))
    };

    // best = (m0 + m2, m2, matched pairs); all faces critical is always valid.
    let mut best: (usize, usize, Vec<(u32, u32)>) = (nf + base_comps, nf, Vec::new());
    let mut min_m2: Option<usize> = None;
    let mut nodes = 0u64;
    let mut exhausted = true;
    let floor = usize::from(nv > 0);

    'levels: for size in 0..=nf {
        let mut lower_here = lower;
        if min_m2.is_none() {
            lower_here = lower_here.max(size + floor);
        }
        if best.0 <= lower_here || size + floor >= best.0 {
            break;
        }
        let mut subsets = Combinations::new(nf, size).peekable();
        while subsets.peek().is_some() {
            let chunk: Vec<Bits> = subsets.by_ref().take(CHUNK).collect();
            let limit = best.0 - size - 1;
            let cap = budget.saturating_sub(nodes).max(1);
            let outcomes = exec.map(&chunk, |&c| try_subset(&t, all, c, limit, cap));
            for o in outcomes {
                nodes += o.nodes;
                exhausted &= !o.aborted;
                if o.feasible && min_m2.is_none() {
                    min_m2 = Some(size);
                }
                if let Some((comps, path)) = o.found {
                    if size + comps < best.0 {
                        best = (size + comps, size, path);
                    }
                }
            }
            if !exhausted || nodes > budget {
                exhausted = false;
                break 'levels;
            }
        }
        if min_m2.is_none() && size == nf {
            min_m2 = Some(nf);
        }
    }
    if exhausted && min_m2.is_none() {
        min_m2 = Some(best.1);
    }

    let (m0_plus_m2, m2, matched) = best;
    let mut removed = Bits::default();
    let mut pairs: Vec<(Cell, Cell)> = Vec::with_capacity(nv + nf);
    for &(e, f) in &matched {
        removed.set(e as usize);
        pairs.push((Cell::edge(e), Cell::face(f)));
    }
    // Spanning forest of G′ from the smallest vertex of each component.
    let mut seen = vec![false; nv];
    let mut steps = 0u64;
    for root in 0..nv as u32 {
        if !seen[root as usize] {
            let tree = bfs_tree_pairs(k, root, |e| !removed.has(e as usize), &mut seen, &mut steps);
            pairs.extend(
                tree.into_iter()
                    .map(|(w, e)| (Cell::vertex(w), Cell::edge(e))),
            );
        }
    }
    let m0 = m0_plus_m2 - m2;
    let m1 = (m0_plus_m2 as i64 - chi) as usize;
    Ok(OracleResult {
        minimum: (2 * m0_plus_m2 as i64 - chi) as usize,
        m: MorseVector::from([m0, m1, m2]),
        witness: DiscreteVectorField::from_pairs(pairs),
        nodes,
        exhausted,
        min_m2,
        lower_bound: (2 * lower as i64 - chi).max(0) as usize,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::{build_complex, SimplicialComplex2};
    use crate::morse::{critical_cells, find_closed_vpath};

    fn check(k: &SimplicialComplex2) -> OracleResult {
        let r = min_critical_matching(k, u64::MAX, Exec::Sequential).unwrap();
        assert!(find_closed_vpath(&r.witness, k).unwrap().is_none());
        let (_, m) = critical_cells(&r.witness, k).unwrap();
        assert_eq!(m, r.m);
        assert_eq!(r.m.total(), r.minimum);
        r
    }

    #[test]
    fn circle() {
        let r = check(&build_complex(&[[0, 1], [1, 2], [0, 2]]).unwrap());
        assert_eq!(
            (r.minimum, r.m.as_array(), r.exhausted),
            (2, [1, 1, 0], true)
        );
    }

    #[test]
    fn sphere() {
        let k = build_complex(&[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]).unwrap();
        let r = check(&k);
        assert_eq!(
            (r.minimum, r.m.as_array(), r.exhausted),
            (2, [1, 0, 1], true)
        );
        assert_eq!(r.min_m2, Some(1));
    }

    #[test]
    fn disk_and_points() {
        let r = check(&build_complex(&[[0, 1, 2], [1, 2, 3]]).unwrap());
        assert_eq!(r.m.as_array(), [1, 0, 0]);
        let r = check(&build_complex(&[[0], [1], [2]]).unwrap());
        assert_eq!(r.m.as_array(), [3, 0, 0]);
        let r = check(&build_complex::<[u32; 1]>(&[]).unwrap());
        assert_eq!(r.minimum, 0);
    }

    #[test]
    fn projective_plane() {
        let faces = [
            [0, 1, 3],
            [0, 1, 5],
            [0, 2, 4],
            [0, 2, 5],
            [0, 3, 4],
            [1, 2, 3],
            [1, 2, 4],
            [1, 4, 5],
            [2, 3, 5],
            [3, 4, 5],
        ];
        let k = build_complex(&faces).unwrap();
        assert_eq!(euler_characteristic(&k), 1);
        let r = check(&k);
        assert_eq!((r.m.as_array(), r.exhausted), ([1, 1, 1], true));
    }

    /// Every acyclic matching, by brute force over vertex/edge and edge/face
    /// pairs.
    fn brute_force(k: &SimplicialComplex2) -> usize {
        let mut pairs = Vec::new();
        for e in 0..k.num_edges() as u32 {
            for v in k.edge(e as usize) {
                pairs.push((Cell::vertex(v), Cell::edge(e)));
            }
        }
        for f in 0..k.num_faces() as u32 {
            for e in k.face_edges(f as usize) {
                pairs.push((Cell::edge(e), Cell::face(f)));
            }
        }
        fn go(
            k: &SimplicialComplex2,
            pairs: &[(Cell, Cell)],
            i: usize,
            cur: &mut Vec<(Cell, Cell)>,
            best: &mut usize,
        ) {
            let v = DiscreteVectorField::from_pairs(cur.clone());
            if find_closed_vpath(&v, k).unwrap().is_some() {
                return;
            }
            if i == pairs.len() {
                *best = (*best).min(k.num_cells() - 2 * cur.len());
                return;
            }
            go(k, pairs, i + 1, cur, best);
            let (a, b) = pairs[i];
            if cur
                .iter()
                .all(|&(x, y)| x != a && y != a && x != b && y != b)
            {
                cur.push(pairs[i]);
                go(k, pairs, i + 1, cur, best);
                cur.pop();
            }
        }
        let mut best = usize::MAX;
        go(k, &pairs, 0, &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn agrees_with_brute_force() {
        let cases: Vec<Vec<Vec<u32>>> = vec![
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 2, 3]],
            vec![vec![0, 1, 2], vec![0, 1, 3], vec![0, 1, 4]],
            vec![vec![0, 1, 2], vec![2, 3], vec![3, 4], vec![4, 2]],
            vec![vec![0, 1, 2], vec![1, 2, 3], vec![0, 3], vec![5]],
            vec![vec![0, 1], vec![1, 2], vec![2, 0], vec![2, 3], vec![3, 0]],
        ];
        for faces in cases {
            let k = build_complex(&faces).unwrap();
            for ex in [Exec::Sequential, Exec::Parallel] {
                let r = min_critical_matching(&k, u64::MAX, ex).unwrap();
                assert_eq!(r.minimum, brute_force(&k), "{faces:?}");
            }
        }
    }

    #[test]
    fn budget_exhaustion_keeps_a_valid_witness() {
        let k = build_complex(&[[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]]).unwrap();
        let r = min_critical_matching(&k, 1, Exec::Sequential).unwrap();
        assert!(!r.exhausted);
        assert!(find_closed_vpath(&r.witness, &k).unwrap().is_none());
        assert_eq!(critical_cells(&r.witness, &k).unwrap().1, r.m);
    }

    #[test]
    fn combinations() {
        let all: Vec<Vec<usize>> = Combinations::new(5, 3)
            .map(|b| b.iter().collect())
            .collect();
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], [0, 1, 2]);
        assert_eq!(all[9], [2, 3, 4]);
        assert_eq!(Combinations::new(3, 0).count(), 1);
        assert_eq!(Combinations::new(2, 3).count(), 0);
        let wide: Vec<usize> = Bits::default().with(3).with(70).with(200).iter().collect();
        assert_eq!(wide, [3, 70, 200]);
    }
}
