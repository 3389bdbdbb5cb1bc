//! Discrete vector fields, V-paths and discrete Morse functions.

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_rational::Rational64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::{parse_ids, Cell, Simplex, SimplicialComplex2};
use crate::homology::BettiVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MorseError {
    #[error("cell {0:?} is not in the complex")]
    UnknownCell(Cell),
    #[error("vector field is not a matching: {0}")]
    NotAMatching(String),
    #[error("closed V-path exists: {0}")]
    ClosedPathExists(VPath),
    #[error("function is not a discrete Morse function at {0:?}")]
    NotADmf(Cell),
    #[error("function has no value on {0:?}")]
    MissingValue(Cell),
    #[error("graph is disconnected: {reached} of {total} vertices reachable from the root")]
    Disconnected { reached: usize, total: usize },
    #[error("root vertex {0} is not in the graph")]
    RootMissing(u32),
    #[error("{0:?} is not critical")]
    NotCritical(Cell),
    #[error("{0:?} and {1:?} are not in consecutive dimensions")]
    DimensionMismatch(Cell, Cell),
    #[error("no gradient path joins the pair")]
    NoPath,
    #[error("{0} gradient paths join the pair; cancellation would create a cycle")]
    MultiplePaths(usize),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

/// A set of pairs `(τ, σ)` with `τ` a facet of `σ`. Pairs are kept sorted so
/// two fields compare equal iff they contain the same pairs.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct DiscreteVectorField {
    pairs: Vec<(Cell, Cell)>,
}

impl DiscreteVectorField {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (Cell, Cell)>) -> Self {
        let mut pairs: Vec<_> = pairs.into_iter().collect();
        pairs.sort_unstable();
        pairs.dedup();
        DiscreteVectorField { pairs }
    }

    pub fn pairs(&self) -> &[(Cell, Cell)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn contains(&self, pair: (Cell, Cell)) -> bool {
        self.pairs.binary_search(&pair).is_ok()
    }

    pub fn union(&self, other: &Self) -> Self {
        Self::from_pairs(self.pairs.iter().chain(other.pairs.iter()).copied())
    }
}

/// Partner lookup for a field already known to be a matching.
pub(crate) struct Partners {
    up: [Vec<u32>; 2],
    down: [Vec<u32>; 2],
}

pub(crate) const UNMATCHED: u32 = u32::MAX;

impl Partners {
    pub(crate) fn new(k: &SimplicialComplex2, v: &DiscreteVectorField) -> Self {
        let mut p = Partners {
            up: [vec![UNMATCHED; k.count(0)], vec![UNMATCHED; k.count(1)]],
            down: [vec![UNMATCHED; k.count(1)], vec![UNMATCHED; k.count(2)]],
        };
        for &(a, b) in v.pairs() {
            p.up[a.dim as usize][a.idx()] = b.index;
            p.down[a.dim as usize][b.idx()] = a.index;
        }
        p
    }

    /// The cofacet paired with `c`, if `c` is the lower member of a pair.
    pub(crate) fn up(&self, c: Cell) -> Option<Cell> {
        let p = *self.up.get(c.dim as usize)?.get(c.idx())?;
        (p != UNMATCHED).then_some(Cell {
            dim: c.dim + 1,
            index: p,
        })
    }

    /// The facet paired with `c`, if `c` is the upper member of a pair.
    pub(crate) fn down(&self, c: Cell) -> Option<Cell> {
        if c.dim == 0 {
            return None;
        }
        let p = *self.down.get(c.dim as usize - 1)?.get(c.idx())?;
        (p != UNMATCHED).then_some(Cell {
            dim: c.dim - 1,
            index: p,
        })
    }

    pub(crate) fn is_critical(&self, c: Cell) -> bool {
        self.up(c).is_none() && self.down(c).is_none()
    }
}

/// An alternating sequence `τ₀ < σ₀ > τ₁ < σ₁ > … > τ_r`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VPath {
    pub cells: Vec<Cell>,
}

impl VPath {
    /// Number of pairs traversed.
    pub fn pairs(&self) -> usize {
        self.cells.len() / 2
    }

    pub fn is_closed(&self) -> bool {
        self.cells.len() >= 5 && self.cells.first() == self.cells.last()
    }
}

impl fmt::Display for VPath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.cells.iter().enumerate() {
            if i > 0 {
                write!(f, " {} ", if i % 2 == 1 { "<" } else { ">" })?;
            }
            write!(f, "{}{}", ["v", "e", "t"][c.dim as usize], c.index)?;
        }
        Ok(())
    }
}

/// Critical cell counts per dimension.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "[usize; 3]", into = "[usize; 3]")]
pub struct MorseVector {
    pub m0: usize,
    pub m1: usize,
    pub m2: usize,
}

impl MorseVector {
    pub const fn new(m0: usize, m1: usize, m2: usize) -> Self {
        MorseVector { m0, m1, m2 }
    }
    pub fn total(&self) -> usize {
        self.m0 + self.m1 + self.m2
    }
    pub fn as_array(&self) -> [usize; 3] {
        [self.m0, self.m1, self.m2]
    }
    pub fn euler(&self) -> i64 {
        self.m0 as i64 - self.m1 as i64 + self.m2 as i64
    }
}

impl From<[usize; 3]> for MorseVector {
    fn from(a: [usize; 3]) -> Self {
        MorseVector::new(a[0], a[1], a[2])
    }
}

impl From<MorseVector> for [usize; 3] {
    fn from(m: MorseVector) -> Self {
        m.as_array()
    }
}

impl fmt::Display for MorseVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{},{})", self.m0, self.m1, self.m2)
    }
}

/// Exact cell values of a candidate discrete Morse function.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DiscreteMorseFunctionValues {
    values: HashMap<Cell, Rational64>,
}

impl DiscreteMorseFunctionValues {
    pub fn new() -> Self {
        Self::default()
    }

    /// The dimension function `f(σ) = dim σ`; always a dmf with no pairs.
    pub fn dimension(k: &SimplicialComplex2) -> Self {
        Self::from_fn(k, |c| Rational64::from_integer(c.dim as i64))
    }

    pub fn from_fn(k: &SimplicialComplex2, f: impl Fn(Cell) -> Rational64) -> Self {
        DiscreteMorseFunctionValues {
            values: k.cells().map(|c| (c, f(c))).collect(),
        }
    }

    pub fn set(&mut self, c: Cell, value: Rational64) {
        self.values.insert(c, value);
    }

    pub fn get(&self, c: Cell) -> Option<Rational64> {
        self.values.get(&c).copied()
    }

    fn value(&self, c: Cell) -> Result<Rational64, MorseError> {
        self.get(c).ok_or(MorseError::MissingValue(c))
    }
}

fn check_cells(v: &DiscreteVectorField, k: &SimplicialComplex2) -> Result<(), MorseError> {
    for &(a, b) in v.pairs() {
        for c in [a, b] {
            if !k.contains(c) {
                return Err(MorseError::UnknownCell(c));
            }
        }
    }
    Ok(())
}

/// Explains why `v` is not a matching on `k`, if it is not.
fn matching_violation(v: &DiscreteVectorField, k: &SimplicialComplex2) -> Option<String> {
    let mut seen: [Vec<bool>; 3] = [
        vec![false; k.count(0)],
        vec![false; k.count(1)],
        vec![false; k.count(2)],
    ];
    for &(a, b) in v.pairs() {
        if !k.is_facet(a, b) {
            return Some(format!(
                "{} is not a facet of {}",
                k.simplex(a),
                k.simplex(b)
            ));
        }
        for c in [a, b] {
            let slot = &mut seen[c.dim as usize][c.idx()];
            if *slot {
                return Some(format!("{} appears in more than one pair", k.simplex(c)));
            }
            *slot = true;
        }
    }
    None
}

pub fn is_matching(v: &DiscreteVectorField, k: &SimplicialComplex2) -> Result<bool, MorseError> {
    check_cells(v, k)?;
    Ok(matching_violation(v, k).is_none())
}

fn require_matching(v: &DiscreteVectorField, k: &SimplicialComplex2) -> Result<(), MorseError> {
    check_cells(v, k)?;
    match matching_violation(v, k) {
        Some(msg) => Err(MorseError::NotAMatching(msg)),
        None => Ok(()),
    }
}

/// Looks for a closed V-path, separately on the vertex/edge and edge/face
/// levels. Each level is the digraph on `i`-cells with an arc `τ → τ'`
/// whenever `(τ, σ) ∈ V` and `τ' ≠ τ` is a facet of `σ`.
pub fn find_closed_vpath(
    v: &DiscreteVectorField,
    k: &SimplicialComplex2,
) -> Result<Option<VPath>, MorseError> {
    require_matching(v, k)?;
    let partners = Partners::new(k, v);
    for level in 0..2u8 {
        if let Some(path) = closed_path_at_level(k, &partners, level) {
            return Ok(Some(path));
        }
    }
    Ok(None)
}

/// Iterative three-colour DFS over the `level`-cells.
pub(crate) fn closed_path_at_level(
    k: &SimplicialComplex2,
    partners: &Partners,
    level: u8,
) -> Option<VPath> {
    const WHITE: u8 = 0;
    const GREY: u8 = 1;
    const BLACK: u8 = 2;
    let n = k.count(level);
    let mut colour = vec![WHITE; n];
    let mut parent = vec![u32::MAX; n];
    let successors = |t: u32| -> Vec<u32> {
        let c = Cell {
            dim: level,
            index: t,
        };
        match partners.up(c) {
            Some(s) => k
                .facets(s)
                .into_iter()
                .filter(|&f| f != c)
                .map(|f| f.index)
                .collect(),
            None => Vec::new(),
        }
    };
    for start in 0..n as u32 {
        if colour[start as usize] != WHITE {
            continue;
        }
        let mut stack: Vec<(u32, Vec<u32>, usize)> = vec![(start, successors(start), 0)];
        colour[start as usize] = GREY;
        while let Some(top) = stack.last_mut() {
            let (node, ref succ, ref mut pos) = *top;
            if *pos < succ.len() {
                let next = succ[*pos];
                *pos += 1;
                match colour[next as usize] {
                    WHITE => {
                        colour[next as usize] = GREY;
                        parent[next as usize] = node;
                        let s = successors(next);
                        stack.push((next, s, 0));
                    }
                    GREY => {
                        // Back arc node -> next closes a cycle next -> ... -> node -> next.
                        let mut chain = vec![node];
                        let mut cur = node;
                        while cur != next {
                            cur = parent[cur as usize];
                            chain.push(cur);
                        }
                        chain.reverse();
                        let mut cells = Vec::with_capacity(2 * chain.len() + 1);
                        for &t in &chain {
                            let tc = Cell {
                                dim: level,
                                index: t,
                            };
                            cells.push(tc);
                            cells.push(partners.up(tc).expect("cycle nodes are paired"));
                        }
                        cells.push(Cell {
                            dim: level,
                            index: next,
                        });
                        return Some(VPath { cells });
                    }
                    _ => {}
                }
            } else {
                colour[node as usize] = BLACK;
                stack.pop();
            }
        }
    }
    None
}

/// Builds a dmf whose gradient is exactly `v`: cells take their position in
/// a topological order of the Hasse diagram with the matched arcs reversed.
pub fn induce_dmf_values(
    v: &DiscreteVectorField,
    k: &SimplicialComplex2,
) -> Result<DiscreteMorseFunctionValues, MorseError> {
    if let Some(path) = find_closed_vpath(v, k)? {
        return Err(MorseError::ClosedPathExists(path));
    }
    let partners = Partners::new(k, v);
    let offset = [0usize, k.count(0), k.count(0) + k.count(1)];
    let id = |c: Cell| offset[c.dim as usize] + c.idx();
    let total = k.num_cells();
    let mut indegree = vec![0u32; total];
    let mut out: Vec<Vec<Cell>> = vec![Vec::new(); total];
    for sigma in k.cells().filter(|c| c.dim > 0) {
        for tau in k.facets(sigma) {
            let (from, to) = if partners.up(tau) == Some(sigma) {
                (sigma, tau)
            } else {
                (tau, sigma)
            };
            out[id(from)].push(to);
            indegree[id(to)] += 1;
        }
    }
    let mut queue: VecDeque<Cell> = k.cells().filter(|&c| indegree[id(c)] == 0).collect();
    let mut f = DiscreteMorseFunctionValues::new();
    let mut next = 0i64;
    while let Some(c) = queue.pop_front() {
        f.set(c, Rational64::from_integer(next));
        next += 1;
        for &d in &out[id(c)] {
            indegree[id(d)] -= 1;
            if indegree[id(d)] == 0 {
                queue.push_back(d);
            }
        }
    }
    debug_assert_eq!(
        next as usize, total,
        "acyclic levels imply an acyclic Hasse digraph"
    );
    Ok(f)
}

/// True iff every cell has at most one cofacet with a value not above its own
/// and at most one facet with a value not below its own.
pub fn is_dmf(f: &DiscreteMorseFunctionValues, k: &SimplicialComplex2) -> Result<bool, MorseError> {
    Ok(first_dmf_violation(f, k)?.is_none())
}

fn first_dmf_violation(
    f: &DiscreteMorseFunctionValues,
    k: &SimplicialComplex2,
) -> Result<Option<Cell>, MorseError> {
    for c in k.cells() {
        f.value(c)?;
    }
    for c in k.cells() {
        let fc = f.value(c)?;
        let mut low_cofacets = 0;
        for t in k.cofacets(c) {
            if f.value(t)? <= fc {
                low_cofacets += 1;
            }
        }
        let mut high_facets = 0;
        for t in k.facets(c) {
            if f.value(t)? >= fc {
                high_facets += 1;
            }
        }
        if low_cofacets > 1 || high_facets > 1 {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// `{(τ, σ) : τ < σ, f(τ) ≥ f(σ)}`.
pub fn gradient_of(
    f: &DiscreteMorseFunctionValues,
    k: &SimplicialComplex2,
) -> Result<DiscreteVectorField, MorseError> {
    if let Some(bad) = first_dmf_violation(f, k)? {
        return Err(MorseError::NotADmf(bad));
    }
    let mut pairs = Vec::new();
    for sigma in k.cells().filter(|c| c.dim > 0) {
        let fs = f.value(sigma)?;
        for tau in k.facets(sigma) {
            if f.value(tau)? >= fs {
                pairs.push((tau, sigma));
            }
        }
    }
    Ok(DiscreteVectorField::from_pairs(pairs))
}

/// Unmatched cells in canonical order and their counts per dimension.
pub fn critical_cells(
    v: &DiscreteVectorField,
    k: &SimplicialComplex2,
) -> Result<(Vec<Cell>, MorseVector), MorseError> {
    require_matching(v, k)?;
    let partners = Partners::new(k, v);
    Ok(critical_from_partners(k, &partners))
}

pub(crate) fn critical_from_partners(
    k: &SimplicialComplex2,
    partners: &Partners,
) -> (Vec<Cell>, MorseVector) {
    let cells: Vec<Cell> = k.cells().filter(|&c| partners.is_critical(c)).collect();
    let mut m = [0usize; 3];
    for c in &cells {
        m[c.dim as usize] += 1;
    }
    (cells, m.into())
}

/// Breadth-first spanning tree of the subgraph spanned by the edges for which
/// `edge_allowed` holds, grown from `root` with neighbours in increasing id
/// order. Returns `(child, edge to parent)` pairs in discovery order.
pub(crate) fn bfs_tree_pairs(
    k: &SimplicialComplex2,
    root: u32,
    mut edge_allowed: impl FnMut(u32) -> bool,
    visited: &mut [bool],
    steps: &mut u64,
) -> Vec<(u32, u32)> {
    let mut pairs = Vec::new();
    let mut queue = VecDeque::from([root]);
    visited[root as usize] = true;
    while let Some(u) = queue.pop_front() {
        for &e in k.vertex_coedges(u as usize) {
            *steps += 1;
            if !edge_allowed(e) {
                continue;
            }
            let w = k.opposite(e as usize, u);
            if !visited[w as usize] {
                visited[w as usize] = true;
                pairs.push((w, e));
                queue.push_back(w);
            }
        }
    }
    pairs
}

/// Pairs every edge of a breadth-first spanning tree of the 1-skeleton with
/// its endpoint farther from `root`. Only `root` and the non-tree edges stay
/// critical.
pub fn tree_gradient(g: &SimplicialComplex2, root: u32) -> Result<DiscreteVectorField, MorseError> {
    if root as usize >= g.num_vertices() {
        return Err(MorseError::RootMissing(root));
    }
    let mut visited = vec![false; g.num_vertices()];
    let mut steps = 0;
    let pairs = bfs_tree_pairs(g, root, |_| true, &mut visited, &mut steps);
    if pairs.len() + 1 != g.num_vertices() {
        return Err(MorseError::Disconnected {
            reached: pairs.len() + 1,
            total: g.num_vertices(),
        });
    }
    Ok(DiscreteVectorField::from_pairs(
        pairs
            .into_iter()
            .map(|(v, e)| (Cell::vertex(v), Cell::edge(e))),
    ))
}

/// Weak and strong Morse inequalities plus the Euler identity.
pub fn check_morse_inequalities(m: &MorseVector, betti: &BettiVector, chi: i64) -> bool {
    let m = m.as_array().map(|x| x as i64);
    let b = betti.as_array().map(|x| x as i64);
    let weak = (0..3).all(|i| m[i] >= b[i]);
    let strong = (0..3).all(|i| {
        let alt = |v: &[i64; 3]| -> i64 {
            (0..=i)
                .map(|j| if (i - j) % 2 == 0 { v[j] } else { -v[j] })
                .sum()
        };
        alt(&m) >= alt(&b)
    });
    weak && strong && m[0] - m[1] + m[2] == chi
}

/// Reverses the unique gradient path from the facets of `upper` down to
/// `lower`, removing both from the critical set.
pub fn cancel_critical_pair(
    v: &DiscreteVectorField,
    lower: Cell,
    upper: Cell,
    k: &SimplicialComplex2,
) -> Result<DiscreteVectorField, MorseError> {
    require_matching(v, k)?;
    for c in [lower, upper] {
        if !k.contains(c) {
            return Err(MorseError::UnknownCell(c));
        }
    }
    if lower.dim + 1 != upper.dim {
        return Err(MorseError::DimensionMismatch(lower, upper));
    }
    let partners = Partners::new(k, v);
    for c in [lower, upper] {
        if !partners.is_critical(c) {
            return Err(MorseError::NotCritical(c));
        }
    }
    let path = unique_gradient_path(k, &partners, upper, lower)?;
    // path = upper > x0 < s0 > x1 < s1 > ... > xr = lower
    let mut pairs: Vec<(Cell, Cell)> = v.pairs().to_vec();
    let old: Vec<(Cell, Cell)> = path[1..]
        .chunks(2)
        .filter(|c| c.len() == 2)
        .map(|c| (c[0], c[1]))
        .collect();
    pairs.retain(|p| !old.contains(p));
    let mut uppers = vec![upper];
    uppers.extend(old.iter().map(|p| p.1));
    let lowers: Vec<Cell> = path[1..].iter().step_by(2).copied().collect();
    pairs.extend(lowers.into_iter().zip(uppers));
    Ok(DiscreteVectorField::from_pairs(pairs))
}

/// The cell sequence of the only gradient path from `upper` to `lower`.
pub(crate) fn unique_gradient_path(
    k: &SimplicialComplex2,
    partners: &Partners,
    upper: Cell,
    lower: Cell,
) -> Result<Vec<Cell>, MorseError> {
    // Number of paths from each lower-level cell to `lower`, capped at 2.
    let mut memo: HashMap<Cell, u8> = HashMap::new();
    fn count(
        k: &SimplicialComplex2,
        partners: &Partners,
        target: Cell,
        x: Cell,
        memo: &mut HashMap<Cell, u8>,
    ) -> u8 {
        if x == target {
            return 1;
        }
        if let Some(&n) = memo.get(&x) {
            return n;
        }
        memo.insert(x, 0);
        let n = match partners.up(x) {
            Some(s) => k
                .facets(s)
                .into_iter()
                .filter(|&y| y != x)
                .map(|y| count(k, partners, target, y, memo))
                .fold(0u8, |a, b| a.saturating_add(b).min(2)),
            None => 0,
        };
        memo.insert(x, n);
        n
    }
    let total: usize = k
        .facets(upper)
        .into_iter()
        .map(|x| count(k, partners, lower, x, &mut memo) as usize)
        .sum();
    match total {
        0 => return Err(MorseError::NoPath),
        1 => {}
        n => return Err(MorseError::MultiplePaths(n)),
    }
    let mut path = vec![upper];
    let mut x = k
        .facets(upper)
        .into_iter()
        .find(|&x| count(k, partners, lower, x, &mut memo) == 1)
        .expect("one facet carries the path");
    loop {
        path.push(x);
        if x == lower {
            return Ok(path);
        }
        let s = partners.up(x).expect("path cells are paired");
        path.push(s);
        x = k
            .facets(s)
            .into_iter()
            .find(|&y| y != x && count(k, partners, lower, y, &mut memo) == 1)
            .expect("path continues");
    }
}

/// Writes `pair <cell> <cell>` lines using the mesh cell spelling.
pub fn write_field(v: &DiscreteVectorField, k: &SimplicialComplex2) -> String {
    let mut out = String::new();
    for &(a, b) in v.pairs() {
        out.push_str(&format!("pair {} {}\n", k.simplex(a), k.simplex(b)));
    }
    out
}

/// Parses the vector-field text format against `k`.
pub fn parse_field(text: &str, k: &SimplicialComplex2) -> Result<DiscreteVectorField, MorseError> {
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        let bad = |msg: &str| MorseError::Parse {
            line,
            msg: msg.to_string(),
        };
        if toks.first() != Some(&"pair") {
            return Err(bad("expected `pair`"));
        }
        let mut cells = Vec::new();
        let mut pos = 1;
        while pos < toks.len() {
            let n = match toks[pos] {
                "v" => 1,
                "e" => 2,
                "t" => 3,
                other => return Err(bad(&format!("unknown cell tag `{other}`"))),
            };
            let ids = parse_ids(toks.iter().skip(pos + 1).take(n).copied(), line)
                .map_err(|e| bad(&e.to_string()))?;
            if ids.len() != n {
                return Err(bad("truncated cell"));
            }
            let s = Simplex::new(&ids).map_err(|e| bad(&e.to_string()))?;
            let cell = k
                .find(&s)
                .ok_or_else(|| bad(&format!("cell `{s}` is not in the mesh")))?;
            cells.push(cell);
            pos += n + 1;
        }
        if cells.len() != 2 {
            return Err(bad("a pair needs exactly two cells"));
        }
        pairs.push((cells[0], cells[1]));
    }
    Ok(DiscreteVectorField::from_pairs(pairs))
}
