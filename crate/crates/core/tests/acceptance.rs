//! Acceptance suite. Prints one pass/fail line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeSet;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use serde::Deserialize;

use stratmorse::complex::build_complex;
use stratmorse::corpus::{
    fixed_corpus, pseudo_projective, random_graphs, random_specs, RandomSpecOptions,
};
use stratmorse::exec::Exec;
use stratmorse::homology::{betti, boundary_matrices, cw_betti, smith_normal_form, Coefficients};
use stratmorse::morse::{critical_cells, find_closed_vpath, is_matching, tree_gradient};
use stratmorse::optimizer::{
    optimal_gradient, verify_report, OptimizerOptions, CHECK_COEFFICIENTS,
};
use stratmorse::oracle::min_critical_matching;
use stratmorse::pipeline::{bench, verify, PipelineOptions};
use stratmorse::stratifold::{classify, pair_sums, StratifoldKind, StratifoldSpec};
use stratmorse::triangulate::{triangulate_spec, TriangulateOptions};

const PSEUDO_PROJECTIVE_PRIMES: [i64; 3] = [3, 5, 7];
const PER_CASE_LIMIT: Duration = Duration::from_secs(5);
const CORPUS_LIMIT: Duration = Duration::from_secs(60);
const MIN_CORPUS: usize = 20;
const ORACLE_LIMIT: Duration = Duration::from_secs(600);
const ORACLE_BUDGET: u64 = 200_000_000;
/// Meshes up to this size must be covered by the oracle check; larger
/// compact meshes are checked too when they fit the oracle.
const ORACLE_REQUIRED_CELLS: usize = 60;
const GRAPH_COUNT: usize = 50;
const GRAPH_MAX_VERTICES: usize = 12;
const GRAPH_SEED: u64 = 0x5eed_0005;
const SPEC_COUNT: usize = 30;
const SPEC_SEED: u64 = 0x5eed_0006;
const CRITERION_PRIMES: [u64; 3] = [2, 3, 5];
const BENCH_SPECS: [&str; 2] = ["g0[c1:3]", "g0[c1:2] g0[c1:3]"];
const BENCH_MAX_FINENESS: u32 = 3;
const BENCH_REPEATS: usize = 9;
const BENCH_SLACK: f64 = 1.5;
const BENCH_LIMIT: Duration = Duration::from_secs(300);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < limit, || format!("took {t:.2?}, limit {limit:?}"))
}

/// Pseudo-projective planes: perfect over F_p with m = (1,1,1).
fn criterion_1() -> Outcome {
    for p in PSEUDO_PROJECTIVE_PRIMES {
        let start = Instant::now();
        let fp = Coefficients::Prime(p as u64);
        let mut opts = PipelineOptions::default();
        opts.coefficients.push(fp);
        let v = verify(&pseudo_projective(p), &opts).map_err(|e| format!("p = {p}: {e}"))?;
        let r = &v.report;
        ensure(r.m.as_array() == [1, 1, 1], || {
            format!("p = {p}: m = {:?}", r.m.as_array())
        })?;
        ensure(
            r.kind == StratifoldKind::Type1 && r.witness_prime == Some(p as u64),
            || {
                format!(
                    "p = {p}: classified {:?} witness {:?}",
                    r.kind, r.witness_prime
                )
            },
        )?;
        ensure(r.perfect.contains(&fp), || {
            format!("p = {p}: perfect over {:?}", r.perfect)
        })?;
        let row = v
            .homology
            .iter()
            .find(|h| h.coefficients == fp)
            .expect("F_p row present");
        ensure(
            row.cellular.as_array() == [1, 1, 1] && v.homology.iter().all(|h| h.agree),
            || format!("p = {p}: cellular/simplicial Betti disagree"),
        )?;
        ensure(v.passed(), || format!("p = {p}: {:?}", v.failures))?;
        within(PER_CASE_LIMIT, start).map_err(|e| format!("p = {p}: {e}"))?;
    }
    Ok(format!("p in {PSEUDO_PROJECTIVE_PRIMES:?}"))
}

fn corpus_coverage() -> Result<(), String> {
    let corpus = fixed_corpus();
    let genera: BTreeSet<i64> = corpus
        .iter()
        .flat_map(|e| e.spec.surfaces.iter().map(|s| s.genus))
        .collect();
    let circles: BTreeSet<usize> = corpus.iter().map(|e| e.spec.circles.len()).collect();
    let degrees: BTreeSet<i64> = corpus
        .iter()
        .flat_map(|e| {
            e.spec
                .surfaces
                .iter()
                .flat_map(|s| s.attachments.iter().map(|a| a.degree.abs()))
        })
        .collect();
    let fineness: BTreeSet<u32> = corpus.iter().map(|e| e.fineness).collect();
    ensure(corpus.len() >= MIN_CORPUS, || {
        format!("only {} corpus meshes", corpus.len())
    })?;
    ensure((-2..=2).all(|g| genera.contains(&g)), || {
        format!("genera {genera:?}")
    })?;
    ensure((1..=3).all(|c| circles.contains(&c)), || {
        format!("circle counts {circles:?}")
    })?;
    ensure((2..=5).all(|d| degrees.contains(&d)), || {
        format!("degrees {degrees:?}")
    })?;
    ensure(fineness == BTreeSet::from([0, 1]), || {
        format!("fineness {fineness:?}")
    })
}

/// The construction leaves one critical vertex and n critical faces.
fn criterion_2() -> Outcome {
    let start = Instant::now();
    corpus_coverage()?;
    let corpus = fixed_corpus();
    let mut cells = 0;
    for e in &corpus {
        let sm = e.mesh().map_err(|err| format!("{}: {err}", e.name))?;
        let g = optimal_gradient(&sm, &OptimizerOptions::default())
            .map_err(|err| format!("{}: {err}", e.name))?;
        let k = &sm.mesh;
        cells += k.num_cells();
        ensure(is_matching(&g.field, k).unwrap_or(false), || {
            format!("{}: not a matching", e.name)
        })?;
        ensure(
            find_closed_vpath(&g.field, k)
                .map(|p| p.is_none())
                .unwrap_or(false),
            || format!("{}: closed V-path", e.name),
        )?;
        let (_, m) = critical_cells(&g.field, k).map_err(|err| err.to_string())?;
        ensure(m.m0 == 1 && m.m2 == e.spec.n() && !g.repair, || {
            format!(
                "{}: m = {:?}, n = {}, repair = {}",
                e.name,
                m.as_array(),
                e.spec.n(),
                g.repair
            )
        })?;
    }
    within(CORPUS_LIMIT, start)?;
    Ok(format!(
        "{} meshes, {cells} cells, {:.2?}",
        corpus.len(),
        start.elapsed()
    ))
}

/// Perfect exactly for Type1/Type3 over the witness; never perfect otherwise.
fn criterion_3() -> Outcome {
    let (mut perfect, mut imperfect) = (0, 0);
    for e in fixed_corpus() {
        let sm = e.mesh().map_err(|err| format!("{}: {err}", e.name))?;
        let g = optimal_gradient(&sm, &OptimizerOptions::default())
            .map_err(|err| format!("{}: {err}", e.name))?;
        let r = verify_report(&g, &sm, &e.spec).map_err(|err| format!("{}: {err}", e.name))?;
        match r.kind {
            StratifoldKind::Type1 | StratifoldKind::Type3 => {
                let p = r
                    .witness_prime
                    .ok_or_else(|| format!("{}: no witness", e.name))?;
                let fp = Coefficients::Prime(p);
                let b = betti(&sm.mesh, fp).map_err(|err| err.to_string())?;
                ensure(
                    r.perfect.contains(&fp) && b.as_array() == g.m.as_array(),
                    || {
                        format!(
                            "{}: m = {:?}, beta over F{p} = {:?}",
                            e.name,
                            g.m.as_array(),
                            b.as_array()
                        )
                    },
                )?;
                perfect += 1;
            }
            StratifoldKind::Type2 | StratifoldKind::Type4 => {
                for c in CHECK_COEFFICIENTS {
                    let b = betti(&sm.mesh, c).map_err(|err| err.to_string())?;
                    ensure(b.total() < g.m.total(), || {
                        format!(
                            "{}: over {c} sum beta = {} vs sum m = {}",
                            e.name,
                            b.total(),
                            g.m.total()
                        )
                    })?;
                }
                imperfect += 1;
            }
            StratifoldKind::NotTwisted => {
                return Err(format!("{}: corpus spec not twisted", e.name))
            }
        }
    }
    ensure(perfect > 0 && imperfect > 0, || {
        format!("{perfect} perfect, {imperfect} imperfect")
    })?;
    Ok(format!(
        "{perfect} Type1/3 perfect, {imperfect} Type2/4 strictly imperfect"
    ))
}

/// The exhaustive oracle agrees with the construction and never beats n
/// critical faces.
fn criterion_4() -> Outcome {
    let start = Instant::now();
    let (mut checked, mut small, mut largest) = (0, 0, 0);
    for e in fixed_corpus() {
        let sm = e
            .compact_mesh()
            .map_err(|err| format!("{}: {err}", e.name))?;
        let g = optimal_gradient(&sm, &OptimizerOptions::default())
            .map_err(|err| format!("{}: {err}", e.name))?;
        let cells = sm.mesh.num_cells();
        let r = match min_critical_matching(&sm.mesh, ORACLE_BUDGET, Exec::default()) {
            Ok(r) => r,
            Err(err) if cells > ORACLE_REQUIRED_CELLS => {
                eprintln!("  {}: {cells} cells skipped ({err})", e.name);
                continue;
            }
            Err(err) => return Err(format!("{}: {err}", e.name)),
        };
        ensure(r.exhausted, || {
            format!("{}: oracle budget exhausted at {cells} cells", e.name)
        })?;
        ensure(r.minimum == g.m.total(), || {
            format!(
                "{}: oracle {} vs construction {}",
                e.name,
                r.minimum,
                g.m.total()
            )
        })?;
        let n = e.spec.n();
        ensure(r.min_m2.is_some_and(|m2| m2 >= n), || {
            format!("{}: min m2 {:?} < n = {n}", e.name, r.min_m2)
        })?;
        checked += 1;
        largest = largest.max(cells);
        if cells <= ORACLE_REQUIRED_CELLS {
            small += 1;
        }
    }
    ensure(small > 0, || "no mesh within the required size".into())?;
    within(ORACLE_LIMIT, start)?;
    Ok(format!(
        "{checked} compact meshes ({small} with <= {ORACLE_REQUIRED_CELLS} cells, largest {largest}), {:.2?}",
        start.elapsed()
    ))
}

/// Spanning-tree gradients on graphs are perfect.
fn criterion_5() -> Outcome {
    let graphs = random_graphs(GRAPH_SEED, GRAPH_COUNT, GRAPH_MAX_VERTICES);
    for (i, g) in graphs.iter().enumerate() {
        let v = tree_gradient(g, 0).map_err(|e| format!("graph {i}: {e}"))?;
        ensure(
            find_closed_vpath(&v, g)
                .map(|p| p.is_none())
                .unwrap_or(false),
            || format!("graph {i}: closed V-path"),
        )?;
        let (_, m) = critical_cells(&v, g).map_err(|e| e.to_string())?;
        let expect = [1, g.num_edges() + 1 - g.num_vertices(), 0];
        ensure(m.as_array() == expect, || {
            format!("graph {i}: m = {:?}, expected {expect:?}", m.as_array())
        })?;
        ensure(g.num_vertices() <= GRAPH_MAX_VERTICES, || {
            format!("graph {i} too large")
        })?;
    }
    Ok(format!("{} graphs", graphs.len()))
}

/// `b2 = n` over F_p exactly when the divisibility criterion holds.
fn divisibility_holds(spec: &StratifoldSpec, p: u64) -> bool {
    let sums = pair_sums(spec);
    let divides = |q: u64| sums.iter().all(|s| s.sum.unsigned_abs() % q == 0);
    if spec.surfaces.iter().all(|s| s.genus >= 0) {
        divides(p)
    } else {
        p == 2 && divides(2)
    }
}

fn criterion_6() -> Outcome {
    let specs = random_specs(SPEC_SEED, SPEC_COUNT, &RandomSpecOptions::default());
    let (mut yes, mut no, mut mixed) = (0, 0, 0);
    for (i, spec) in specs.iter().enumerate() {
        let sm = triangulate_spec(spec, &TriangulateOptions::default())
            .map_err(|e| format!("{spec}: {e}"))?;
        let n = spec.n();
        let t = classify(spec).map_err(|e| e.to_string())?;
        let mut primes: BTreeSet<u64> = CRITERION_PRIMES.into_iter().collect();
        primes.extend(t.prime_factors.iter().copied());
        for p in primes {
            let c = Coefficients::Prime(p);
            let cw = cw_betti(spec, c).map_err(|e| e.to_string())?.b2;
            let simp = betti(&sm.mesh, c).map_err(|e| e.to_string())?.b2;
            let holds = divisibility_holds(spec, p);
            ensure(cw == simp, || {
                format!("spec {i} {spec}: F{p} cellular b2 {cw}, simplicial {simp}")
            })?;
            ensure((cw == n) == holds && cw <= n, || {
                format!("spec {i} {spec}: F{p} b2 = {cw}, n = {n}, criterion {holds}")
            })?;
            if holds {
                yes += 1;
            } else {
                no += 1;
            }
        }
        let orientable = spec.surfaces.iter().filter(|s| s.genus >= 0).count();
        if orientable > 0 && orientable < n {
            mixed += 1;
        }
    }
    ensure(yes > 0 && no > 0, || {
        format!("criterion held {yes} times, failed {no} times")
    })?;
    Ok(format!(
        "{} specs, {yes} (spec, p) with b2 = n, {no} with b2 < n, {mixed} mixed",
        specs.len()
    ))
}

/// Step counter and wall time grow at most linearly with the cell count.
fn criterion_7() -> Outcome {
    let start = Instant::now();
    let mut summary = Vec::new();
    for text in BENCH_SPECS {
        let spec: StratifoldSpec = text.parse().map_err(|e| format!("{e}"))?;
        let r = bench(
            &spec,
            &PipelineOptions::default(),
            BENCH_MAX_FINENESS,
            BENCH_REPEATS,
            BENCH_SLACK,
        )
        .map_err(|e| format!("{text}: {e}"))?;
        for s in &r.steps {
            ensure(s.within, || {
                format!(
                    "{text} fineness {}->{}: cells x{:.2}, steps x{:.2}, time x{:.2}",
                    s.from, s.to, s.cell_ratio, s.step_ratio, s.time_ratio
                )
            })?;
        }
        let worst = r
            .steps
            .iter()
            .map(|s| (s.time_ratio / s.cell_ratio).max(s.step_ratio / s.cell_ratio))
            .fold(0.0, f64::max);
        summary.push(format!(
            "{text}: {} cells, worst growth {worst:.2} x cells",
            r.rows.last().unwrap().cells
        ));
    }
    within(BENCH_LIMIT, start)?;
    Ok(summary.join("; "))
}

#[derive(Deserialize)]
struct HomologyFixture {
    name: String,
    faces: Vec<[u32; 3]>,
    cells: [usize; 3],
    d1_invariant_factors: Vec<u64>,
    d2_invariant_factors: Vec<u64>,
    betti: std::collections::BTreeMap<String, [usize; 3]>,
    #[serde(rename = "torsion_Z")]
    torsion_z: Vec<u64>,
}

fn load_fixture(name: &str) -> Result<HomologyFixture, String> {
    let path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "tests",
        "fixtures",
        &format!("{name}.json"),
    ]
    .iter()
    .collect();
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{name}: {e}"))
}

/// SNF homology against committed, independently reduced fixtures.
fn criterion_8() -> Outcome {
    let expected: [(&str, &str, [usize; 3], &[u64]); 3] = [
        ("rp2_6", "Z", [1, 0, 0], &[2]),
        ("torus_7", "Q", [1, 2, 1], &[]),
        ("klein_3x3", "F2", [1, 2, 1], &[2]),
    ];
    for (name, system, beta, torsion) in expected {
        let fx = load_fixture(name)?;
        let k = build_complex(&fx.faces).map_err(|e| e.to_string())?;
        ensure(
            [k.num_vertices(), k.num_edges(), k.num_faces()] == fx.cells,
            || format!("{name}: cell counts"),
        )?;
        let bm = boundary_matrices(&k);
        for (m, want) in [
            (&bm.d1, &fx.d1_invariant_factors),
            (&bm.d2, &fx.d2_invariant_factors),
        ] {
            let mut got = smith_normal_form(m).divisors;
            got.sort();
            let want: Vec<BigInt> = want.iter().map(|&d| BigInt::from(d)).collect();
            ensure(got == want, || {
                format!("{name}: invariant factors {got:?} vs {want:?}")
            })?;
        }
        for (sys, b) in &fx.betti {
            let c: Coefficients = sys.parse().map_err(|e| format!("{e}"))?;
            let got = betti(&k, c).map_err(|e| e.to_string())?;
            ensure(got.as_array() == *b, || {
                format!("{}: over {sys} {:?} vs {b:?}", fx.name, got.as_array())
            })?;
            if c == Coefficients::Integer {
                ensure(got.torsion == fx.torsion_z, || {
                    format!("{name}: torsion {:?}", got.torsion)
                })?;
            }
        }
        ensure(fx.betti[system] == beta && fx.torsion_z == torsion, || {
            format!("{name}: fixture values")
        })?;
    }
    Ok("rp2 torsion (2), torus beta (1,2,1), Klein torsion (2) and beta1(F2) = 2".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("pseudo-projective planes perfect over F_p", criterion_1),
        (
            "construction leaves 1 critical vertex and n critical faces",
            criterion_2,
        ),
        ("perfect exactly for Type1/Type3", criterion_3),
        (
            "exact oracle matches the construction; min m2 >= n",
            criterion_4,
        ),
        ("spanning-tree gradients on graphs", criterion_5),
        ("b2 = n over F_p iff divisibility", criterion_6),
        ("linear growth of steps and time", criterion_7),
        ("SNF homology matches fixtures", criterion_8),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("criterion {}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| id.ends_with(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("{id}: PASS  {name} [{detail}] ({:.2?})", start.elapsed()),
            Err(why) => {
                failed += 1;
                println!("{id}: FAIL  {name}: {why} ({:.2?})", start.elapsed());
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
