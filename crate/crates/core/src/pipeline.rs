//! End-to-end runs: spec analysis, the full verification pipeline, and the
//! fineness sweep used for the linear-time check.

use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::complex::euler_characteristic;
use crate::homology::{betti, cw_betti, BettiVector, Coefficients, HomologyError};
use crate::morse::{
    check_morse_inequalities, gradient_of, induce_dmf_values, MorseError, MorseVector,
};
use crate::optimizer::{
    optimal_gradient, verify_report, GradientResult, InequalityCheck, MorseReport, OptimizerError,
    OptimizerOptions, CHECK_COEFFICIENTS,
};
use crate::oracle::{min_critical_matching, OracleError, OracleResult};
use crate::stratifold::{
    build_graph, classify, euler_from_spec, predicted_morse_vector, validate_spec, StratifoldError,
    StratifoldGraph, StratifoldKind, StratifoldSpec, StratifoldType,
};
use crate::triangulate::{
    triangulate_spec, BoundaryReading, StratifoldMesh, TriangulateError, TriangulateOptions,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Stratifold(#[from] StratifoldError),
    #[error(transparent)]
    Triangulate(#[from] TriangulateError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Homology(#[from] HomologyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Morse(#[from] MorseError),
}

impl PipelineError {
    /// True when the input was at fault rather than an internal invariant.
    pub fn is_validation(&self) -> bool {
        match self {
            PipelineError::Stratifold(_) => true,
            PipelineError::Homology(e) => matches!(
                e,
                HomologyError::NotPrime(_) | HomologyError::BadCoefficients(_)
            ),
            PipelineError::Triangulate(e) => {
                !matches!(e, TriangulateError::InconsistentStructure(_))
            }
            PipelineError::Optimizer(
                OptimizerError::Stratifold(_) | OptimizerError::MismatchedSpec(_),
            ) => true,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Analysis {
    pub spec: String,
    pub n: usize,
    pub graph: StratifoldGraph,
    #[serde(flatten)]
    pub classification: StratifoldType,
    pub euler_characteristic: i64,
    pub predicted_m: MorseVector,
    pub betti: Vec<BettiVector>,
}

/// Validates and classifies `spec` and tabulates its cellular homology.
pub fn analyze(
    spec: &StratifoldSpec,
    coefficients: &[Coefficients],
) -> Result<Analysis, PipelineError> {
    let errs = validate_spec(spec);
    if !errs.is_empty() {
        return Err(StratifoldError::InvalidSpec(errs).into());
    }
    let betti = coefficients
        .iter()
        .map(|&c| cw_betti(spec, c))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Analysis {
        spec: spec.to_string(),
        n: spec.n(),
        graph: build_graph(spec)?,
        classification: classify(spec)?,
        euler_characteristic: euler_from_spec(spec)?,
        predicted_m: predicted_morse_vector(spec)?,
        betti,
    })
}

#[derive(Clone, Debug)]
pub struct PipelineOptions {
    pub triangulate: TriangulateOptions,
    pub optimizer: OptimizerOptions,
    pub coefficients: Vec<Coefficients>,
    pub oracle_budget: u64,
    /// The oracle runs only on meshes with at most this many cells.
    pub oracle_max_cells: usize,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            triangulate: TriangulateOptions::default(),
            optimizer: OptimizerOptions::default(),
            coefficients: CHECK_COEFFICIENTS.to_vec(),
            oracle_budget: 20_000_000,
            oracle_max_cells: 400,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct OracleSummary {
    pub minimum: usize,
    pub m: MorseVector,
    pub exhausted: bool,
    pub min_m2: Option<usize>,
    pub nodes: u64,
}

impl From<&OracleResult> for OracleSummary {
    fn from(r: &OracleResult) -> Self {
        OracleSummary {
            minimum: r.minimum,
            m: r.m,
            exhausted: r.exhausted,
            min_m2: r.min_m2,
            nodes: r.nodes,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HomologyRow {
    pub coefficients: Coefficients,
    pub cellular: BettiVector,
    pub simplicial: BettiVector,
    pub agree: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub spec: String,
    pub cells: [usize; 3],
    pub report: MorseReport,
    pub predicted_m: MorseVector,
    pub homology: Vec<HomologyRow>,
    pub oracle: Option<OracleSummary>,
    /// Every failed cross-check; empty means the run verified.
    pub failures: Vec<String>,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("verification serializes")
    }
}

/// Triangulates, builds the gradient, and cross-checks it against cellular
/// and simplicial homology and, on small meshes, the exact oracle.
pub fn verify(
    spec: &StratifoldSpec,
    opts: &PipelineOptions,
) -> Result<Verification, PipelineError> {
    let predicted = predicted_morse_vector(spec)?;
    let sm = triangulate_spec(spec, &opts.triangulate)?;
    let g = optimal_gradient(&sm, &opts.optimizer)?;
    verify_mesh(spec, &sm, &g, predicted, opts)
}

pub fn verify_mesh(
    spec: &StratifoldSpec,
    sm: &StratifoldMesh,
    g: &GradientResult,
    predicted: MorseVector,
    opts: &PipelineOptions,
) -> Result<Verification, PipelineError> {
    let k = &sm.mesh;
    let mut report = verify_report(g, sm, spec)?;
    let mut failures = Vec::new();

    if g.m != predicted {
        failures.push(format!(
            "m = {:?}, predicted {:?}",
            g.m.as_array(),
            predicted.as_array()
        ));
    }
    let dmf = induce_dmf_values(&g.field, k)?;
    if gradient_of(&dmf, k)? != g.field {
        failures.push("gradient of the induced dmf differs from the field".into());
    }

    let mut systems = opts.coefficients.clone();
    for c in report.checks.iter().map(|c| c.coefficients) {
        if !systems.contains(&c) {
            systems.push(c);
        }
    }
    let mut homology = Vec::new();
    for c in systems {
        let cellular = cw_betti(spec, c)?;
        let simplicial = betti(k, c)?;
        let agree = cellular == simplicial;
        if !agree {
            failures.push(format!(
                "over {c}: cellular {cellular}, simplicial {simplicial}"
            ));
        }
        homology.push(HomologyRow {
            coefficients: c,
            cellular,
            simplicial,
            agree,
        });
    }

    for check in &report.checks {
        if !check.holds {
            failures.push(format!(
                "Morse inequalities fail over {}",
                check.coefficients
            ));
        }
    }
    let expect_perfect = matches!(report.kind, StratifoldKind::Type1 | StratifoldKind::Type3);
    match (expect_perfect, report.witness_prime) {
        (true, Some(p)) if !report.perfect.contains(&Coefficients::Prime(p)) => {
            failures.push(format!("{} field is not perfect over F{p}", report.kind));
        }
        (false, _) if report.kind != StratifoldKind::NotTwisted && !report.perfect.is_empty() => {
            failures.push(format!(
                "{} field is perfect over {:?}",
                report.kind, report.perfect
            ));
        }
        _ => {}
    }
    if report.repair {
        failures.push("repair pass was needed".into());
    }

    let mut oracle = None;
    if k.num_cells() <= opts.oracle_max_cells {
        let r = min_critical_matching(k, opts.oracle_budget, opts.optimizer.exec)?;
        if r.minimum > g.m.total() {
            failures.push(format!(
                "oracle minimum {} exceeds the field's {}",
                r.minimum,
                g.m.total()
            ));
        }
        if r.exhausted {
            report.record_oracle(r.minimum);
            let twisted = report.kind != StratifoldKind::NotTwisted;
            if twisted && r.minimum != g.m.total() {
                failures.push(format!(
                    "oracle minimum {} below the field's {}",
                    r.minimum,
                    g.m.total()
                ));
            }
            if twisted && r.min_m2.is_some_and(|m2| m2 < spec.n()) {
                failures.push(format!(
                    "oracle found a field with {:?} critical faces < n",
                    r.min_m2
                ));
            }
        }
        oracle = Some(OracleSummary::from(&r));
    }

    Ok(Verification {
        spec: spec.to_string(),
        cells: [k.num_vertices(), k.num_edges(), k.num_faces()],
        report,
        predicted_m: predicted,
        homology,
        oracle,
        failures,
    })
}

/// Report for a mesh without its spec: counts, critical cells, and the Morse
/// inequalities against simplicial homology.
#[derive(Clone, Debug, Serialize)]
pub struct FieldReport {
    pub m: MorseVector,
    pub repair: bool,
    pub reading: BoundaryReading,
    pub checks: Vec<InequalityCheck>,
    pub critical: Vec<String>,
}

pub fn field_report(
    sm: &StratifoldMesh,
    g: &GradientResult,
    coefficients: &[Coefficients],
) -> Result<FieldReport, PipelineError> {
    let chi = euler_characteristic(&sm.mesh);
    let mut checks = Vec::new();
    for &c in coefficients {
        let b = betti(&sm.mesh, c)?;
        checks.push(InequalityCheck {
            coefficients: c,
            betti: b.as_array(),
            holds: check_morse_inequalities(&g.m, &b, chi),
            torsion: b.torsion,
        });
    }
    Ok(FieldReport {
        m: g.m,
        repair: g.repair,
        reading: g.reading,
        checks,
        critical: g
            .critical
            .iter()
            .map(|&c| sm.mesh.simplex(c).to_string())
            .collect(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub fineness: u32,
    pub cells: usize,
    pub steps: u64,
    /// Fastest of the repeated runs.
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchStep {
    pub from: u32,
    pub to: u32,
    pub cell_ratio: f64,
    pub step_ratio: f64,
    pub time_ratio: f64,
    pub within: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub spec: String,
    pub slack: f64,
    pub rows: Vec<BenchRow>,
    pub steps: Vec<BenchStep>,
}

impl BenchReport {
    pub fn linear(&self) -> bool {
        self.steps.iter().all(|s| s.within)
    }
}

const MIN_SAMPLE: Duration = Duration::from_millis(5);

/// Times [`optimal_gradient`] over fineness `0..=max_fineness`, keeping the
/// best of `repeats` samples per level. A step is within bounds when both the
/// step counter and the wall time grow by at most `slack` times the
/// cell-count ratio.
pub fn bench(
    spec: &StratifoldSpec,
    opts: &PipelineOptions,
    max_fineness: u32,
    repeats: usize,
    slack: f64,
) -> Result<BenchReport, PipelineError> {
    struct Level {
        sm: StratifoldMesh,
        steps: u64,
        batch: u32,
        best: Duration,
    }
    let mut levels = Vec::new();
    for fineness in 0..=max_fineness {
        let topts = TriangulateOptions {
            fineness,
            ..opts.triangulate.clone()
        };
        let sm = triangulate_spec(spec, &topts)?;
        // One untimed run to fault in the allocations; it also sizes the
        // batch so that each timed sample lasts at least MIN_SAMPLE.
        let t = Instant::now();
        let steps = optimal_gradient(&sm, &opts.optimizer)?.steps;
        let once = t.elapsed().max(Duration::from_micros(1));
        let batch = (MIN_SAMPLE.as_nanos() / once.as_nanos()).clamp(1, 10_000) as u32;
        levels.push(Level {
            sm,
            steps,
            batch,
            best: Duration::MAX,
        });
    }
    // Round-robin over the levels so that a burst of outside load lands on
    // all of them rather than on one.
    for _ in 0..repeats.max(1) {
        for level in &mut levels {
            let t = Instant::now();
            for _ in 0..level.batch {
                level.steps = optimal_gradient(&level.sm, &opts.optimizer)?.steps;
            }
            level.best = level.best.min(t.elapsed() / level.batch);
        }
    }
    let rows: Vec<BenchRow> = levels
        .iter()
        .enumerate()
        .map(|(i, l)| BenchRow {
            fineness: i as u32,
            cells: l.sm.mesh.num_cells(),
            steps: l.steps,
            seconds: l.best.as_secs_f64(),
        })
        .collect();
    let steps = rows
        .windows(2)
        .map(|w| {
            let cell_ratio = w[1].cells as f64 / w[0].cells as f64;
            let step_ratio = w[1].steps as f64 / w[0].steps as f64;
            let time_ratio = w[1].seconds / w[0].seconds.max(1e-9);
            BenchStep {
                from: w[0].fineness,
                to: w[1].fineness,
                cell_ratio,
                step_ratio,
                time_ratio,
                within: step_ratio <= slack * cell_ratio && time_ratio <= slack * cell_ratio,
            }
        })
        .collect();
    Ok(BenchReport {
        spec: spec.to_string(),
        slack,
        rows,
        steps,
    })
}
