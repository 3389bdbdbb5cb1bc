//! Stratifold specifications: surfaces with boundary glued onto circles.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_integer::Integer;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::homology::prime_factors;
use crate::morse::MorseVector;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StratifoldError {
    #[error("invalid stratifold spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("spec JSON: {0}")]
    Json(String),
    #[error("predicted m1 is negative ({0})")]
    NegativePrediction(i64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratifoldSpec {
    pub circles: Vec<String>,
    pub surfaces: Vec<SurfaceSpec>,
}

/// `genus ≥ 0` is an orientable surface of that genus, `genus < 0` a sum of
/// `|genus|` projective planes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurfaceSpec {
    pub genus: i64,
    pub attachments: Vec<Attachment>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Attachment {
    pub circle: String,
    pub degree: i64,
}

impl SurfaceSpec {
    pub fn new(genus: i64, attachments: &[(&str, i64)]) -> Self {
        SurfaceSpec {
            genus,
            attachments: attachments
                .iter()
                .map(|&(c, d)| Attachment {
                    circle: c.to_string(),
                    degree: d,
                })
                .collect(),
        }
    }

    pub fn is_orientable(&self) -> bool {
        self.genus >= 0
    }

    /// Number of letters in the closed-surface word (`2g` or `|g|`).
    pub fn schema_len(&self) -> usize {
        if self.genus >= 0 {
            2 * self.genus as usize
        } else {
            self.genus.unsigned_abs() as usize
        }
    }

    pub fn euler(&self) -> i64 {
        let k = self.attachments.len() as i64;
        if self.genus >= 0 {
            2 - 2 * self.genus - k
        } else {
            2 + self.genus - k
        }
    }
}

impl StratifoldSpec {
    pub fn new(circles: &[&str], surfaces: Vec<SurfaceSpec>) -> Self {
        StratifoldSpec {
            circles: circles.iter().map(|c| c.to_string()).collect(),
            surfaces,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, StratifoldError> {
        serde_json::from_str(text).map_err(|e| StratifoldError::Json(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn n(&self) -> usize {
        self.surfaces.len()
    }

    pub fn circle_index(&self, id: &str) -> Option<usize> {
        self.circles.iter().position(|c| c == id)
    }

    fn circle_map(&self) -> HashMap<&str, usize> {
        self.circles
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect()
    }

    /// `(surface, circle index, degree)` for every attachment; assumes ids resolve.
    pub fn attachment_list(&self) -> Vec<(usize, usize, i64)> {
        let map = self.circle_map();
        self.surfaces
            .iter()
            .enumerate()
            .flat_map(|(i, s)| {
                let map = &map;
                s.attachments
                    .iter()
                    .filter_map(move |a| map.get(a.circle.as_str()).map(|&j| (i, j, a.degree)))
            })
            .collect()
    }
}

impl fmt::Display for StratifoldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .surfaces
            .iter()
            .map(|s| {
                let a: Vec<String> = s
                    .attachments
                    .iter()
                    .map(|a| format!("{}:{}", a.circle, a.degree))
                    .collect();
                format!("g{}[{}]", s.genus, a.join(","))
            })
            .collect();
        f.write_str(&parts.join(" "))
    }
}

/// Parses the display form, e.g. `g0[c1:2,c2:3] g-1[c2:2]`. Circles are
/// declared in order of first appearance. Only syntax is checked here.
impl std::str::FromStr for StratifoldSpec {
    type Err = StratifoldError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let bad = |m: String| StratifoldError::InvalidSpec(vec![m]);
        let mut spec = StratifoldSpec {
            circles: Vec::new(),
            surfaces: Vec::new(),
        };
        for word in text.split_whitespace() {
            let body = word
                .strip_prefix('g')
                .and_then(|w| w.strip_suffix(']'))
                .ok_or_else(|| bad(format!("expected g<genus>[...], got {word:?}")))?;
            let (genus, list) = body
                .split_once('[')
                .ok_or_else(|| bad(format!("missing '[' in {word:?}")))?;
            let genus: i64 = genus
                .parse()
                .map_err(|_| bad(format!("bad genus in {word:?}")))?;
            let mut attachments = Vec::new();
            for item in list.split(',').filter(|s| !s.is_empty()) {
                let (circle, degree) = item
                    .split_once(':')
                    .ok_or_else(|| bad(format!("expected circle:degree, got {item:?}")))?;
                let degree: i64 = degree
                    .parse()
                    .map_err(|_| bad(format!("bad degree in {item:?}")))?;
                if !spec.circles.iter().any(|c| c == circle) {
                    spec.circles.push(circle.to_string());
                }
                attachments.push(Attachment {
                    circle: circle.to_string(),
                    degree,
                });
            }
            spec.surfaces.push(SurfaceSpec { genus, attachments });
        }
        Ok(spec)
    }
}

/// Every violated invariant, in a stable order; empty means valid.
pub fn validate_spec(spec: &StratifoldSpec) -> Vec<String> {
    let mut errs = Vec::new();
    if spec.surfaces.is_empty() {
        errs.push("no surfaces".to_string());
    }
    if spec.circles.is_empty() {
        errs.push("no circles".to_string());
    }
    let mut seen = HashMap::new();
    for (j, c) in spec.circles.iter().enumerate() {
        if let Some(prev) = seen.insert(c.as_str(), j) {
            errs.push(format!(
                "circle id {c:?} repeated (positions {prev} and {j})"
            ));
        }
    }
    let map = spec.circle_map();
    let mut sums = vec![0u64; spec.circles.len()];
    for (i, s) in spec.surfaces.iter().enumerate() {
        if s.attachments.is_empty() {
            errs.push(format!("surface {i} has no attachments"));
        }
        for a in &s.attachments {
            match map.get(a.circle.as_str()) {
                Some(&j) => sums[j] += a.degree.unsigned_abs(),
                None => errs.push(format!(
                    "surface {i} attaches to unknown circle {:?}",
                    a.circle
                )),
            }
            if a.degree == 0 {
                errs.push(format!(
                    "surface {i} has a degree-0 attachment to {:?}",
                    a.circle
                ));
            } else if a.degree < 0 && !s.is_orientable() {
                errs.push(format!(
                    "nonorientable surface {i} has negative degree {} on {:?}",
                    a.degree, a.circle
                ));
            }
        }
    }
    for (j, &sum) in sums.iter().enumerate() {
        if sum <= 2 {
            errs.push(format!(
                "circle {:?} has total |degree| {sum}; it must be > 2",
                spec.circles[j]
            ));
        }
    }
    if !spec.surfaces.is_empty() && !incidence_connected(spec) {
        errs.push("surface/circle incidence is disconnected".to_string());
    }
    errs
}

pub fn ensure_valid(spec: &StratifoldSpec) -> Result<(), StratifoldError> {
    let errs = validate_spec(spec);
    if errs.is_empty() {
        Ok(())
    } else {
        Err(StratifoldError::InvalidSpec(errs))
    }
}

fn incidence_connected(spec: &StratifoldSpec) -> bool {
    let n = spec.surfaces.len();
    let total = n + spec.circles.len();
    let mut parent: Vec<usize> = (0..total).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for (i, j, _) in spec.attachment_list() {
        let (a, b) = (find(&mut parent, i), find(&mut parent, n + j));
        parent[a] = b;
    }
    let root = find(&mut parent, 0);
    (0..total).all(|x| find(&mut parent, x) == root)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub surface: usize,
    pub circle: usize,
    pub weight: i64,
}

/// Bicoloured multigraph: white vertices are surfaces (labelled by genus),
/// black vertices are circles.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifoldGraph {
    pub white: Vec<i64>,
    pub black: Vec<String>,
    pub edges: Vec<GraphEdge>,
}

impl StratifoldGraph {
    pub fn num_vertices(&self) -> usize {
        self.white.len() + self.black.len()
    }

    /// `E(i, j)`.
    pub fn edges_between(&self, surface: usize, circle: usize) -> impl Iterator<Item = &GraphEdge> {
        self.edges
            .iter()
            .filter(move |e| e.surface == surface && e.circle == circle)
    }
}

pub fn build_graph(spec: &StratifoldSpec) -> Result<StratifoldGraph, StratifoldError> {
    ensure_valid(spec)?;
    Ok(StratifoldGraph {
        white: spec.surfaces.iter().map(|s| s.genus).collect(),
        black: spec.circles.clone(),
        edges: spec
            .attachment_list()
            .into_iter()
            .map(|(surface, circle, weight)| GraphEdge {
                surface,
                circle,
                weight,
            })
            .collect(),
    })
}

pub fn is_twisted(spec: &StratifoldSpec) -> bool {
    spec.surfaces
        .iter()
        .flat_map(|s| &s.attachments)
        .all(|a| a.degree.abs() >= 2)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StratifoldKind {
    Type1,
    Type2,
    Type3,
    Type4,
    NotTwisted,
}

impl fmt::Display for StratifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairSum {
    pub surface: usize,
    pub circle: usize,
    pub sum: i64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StratifoldType {
    pub kind: StratifoldKind,
    /// Smallest prime dividing every pair sum (Type1), or 2 (Type3).
    pub witness_prime: Option<u64>,
    /// All prime factors of the pair-sum gcd; empty when the gcd is 0 or 1.
    pub prime_factors: Vec<u64>,
    pub gcd: u64,
    pub pair_sums: Vec<PairSum>,
}

/// `s(i, j)` for each pair with at least one attachment, ordered by `(i, j)`.
pub fn pair_sums(spec: &StratifoldSpec) -> Vec<PairSum> {
    let mut acc: BTreeMap<(usize, usize), i64> = BTreeMap::new();
    for (i, j, d) in spec.attachment_list() {
        *acc.entry((i, j)).or_default() += d;
    }
    acc.into_iter()
        .map(|((surface, circle), sum)| PairSum {
            surface,
            circle,
            sum,
        })
        .collect()
}

pub fn classify(spec: &StratifoldSpec) -> Result<StratifoldType, StratifoldError> {
    ensure_valid(spec)?;
    let sums = pair_sums(spec);
    let gcd = sums.iter().fold(0u64, |g, s| g.gcd(&s.sum.unsigned_abs()));
    let factors = if gcd > 1 {
        prime_factors(gcd)
    } else {
        Vec::new()
    };
    let orientable = spec.surfaces.iter().all(SurfaceSpec::is_orientable);
    let (kind, witness_prime) = if !is_twisted(spec) {
        (StratifoldKind::NotTwisted, None)
    } else if orientable {
        match gcd {
            1 => (StratifoldKind::Type2, None),
            0 => (StratifoldKind::Type1, Some(2)),
            _ => (StratifoldKind::Type1, Some(factors[0])),
        }
    } else if sums.iter().all(|s| s.sum % 2 == 0) {
        (StratifoldKind::Type3, Some(2))
    } else {
        (StratifoldKind::Type4, None)
    };
    Ok(StratifoldType {
        kind,
        witness_prime,
        prime_factors: factors,
        gcd,
        pair_sums: sums,
    })
}

pub fn euler_from_spec(spec: &StratifoldSpec) -> Result<i64, StratifoldError> {
    ensure_valid(spec)?;
    Ok(spec.surfaces.iter().map(SurfaceSpec::euler).sum())
}

/// `(1, 1 + n − χ, n)`.
pub fn predicted_morse_vector(spec: &StratifoldSpec) -> Result<MorseVector, StratifoldError> {
    let chi = euler_from_spec(spec)?;
    let n = spec.n() as i64;
    let m1 = 1 + n - chi;
    if m1 < 0 {
        return Err(StratifoldError::NegativePrediction(m1));
    }
    Ok(MorseVector::from([1, m1 as usize, n as usize]))
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn p3() -> StratifoldSpec {
        StratifoldSpec::new(&["c1"], vec![SurfaceSpec::new(0, &[("c1", 3)])])
    }

    pub fn disks_2_3() -> StratifoldSpec {
        StratifoldSpec::new(
            &["c1"],
            vec![
                SurfaceSpec::new(0, &[("c1", 2)]),
                SurfaceSpec::new(0, &[("c1", 3)]),
            ],
        )
    }

    pub fn crosscap(degrees: &[i64]) -> StratifoldSpec {
        let att: Vec<(&str, i64)> = degrees.iter().map(|&d| ("c1", d)).collect();
        StratifoldSpec::new(&["c1"], vec![SurfaceSpec::new(-1, &att)])
    }
}
