use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use stratmorse::complex::{euler_characteristic, parse_mesh, write_mesh};
use stratmorse::corpus::relabel_randomly;
use stratmorse::exec::Exec;
use stratmorse::homology::{betti, Coefficients};
use stratmorse::morse::write_field;
use stratmorse::optimizer::{optimal_gradient, verify_report, OptimizerOptions};
use stratmorse::oracle::min_critical_matching;
use stratmorse::pipeline::{self, field_report, PipelineError, PipelineOptions};
use stratmorse::stratifold::StratifoldSpec;
use stratmorse::triangulate::{
    import_mesh, triangulate_spec, write_annotations, BoundaryReading, TriangulateOptions,
};

/// Discrete Morse functions on triangulated 2-stratifolds.
#[derive(Parser, Debug)]
#[command(name = "stratmorse", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    config: RunConfig,
}

#[derive(Args, Debug, Clone)]
struct RunConfig {
    /// Base length of a circle, as `<id>=<L>`; repeatable. Unlisted circles get 3.
    #[arg(long = "circle-length", value_name = "ID=L", value_parser = parse_circle_length, global = true)]
    circle_length: Vec<(String, usize)>,
    /// Extra barycentric subdivisions of the generated mesh.
    #[arg(long, default_value_t = 0, global = true)]
    fineness: u32,
    /// Coefficient systems, comma separated.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "Q,Z,F2,F3,F5",
        global = true
    )]
    coeffs: Vec<Coefficients>,
    /// Node limit for the exact oracle.
    #[arg(long = "oracle-budget", default_value_t = 20_000_000, global = true)]
    oracle_budget: u64,
    /// Which cells count as boundary for the optimizer.
    #[arg(long = "boundary-reading", default_value = "polygon", global = true)]
    boundary_reading: BoundaryReading,
    /// Seed for the relabeling check of `oracle`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for written artifacts.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Run without the thread pool.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate and classify a spec; print χ, the predicted vector and cellular Betti numbers.
    Analyze { spec: PathBuf },
    /// Write the mesh and its annotations for a spec.
    Triangulate { spec: PathBuf },
    /// Build the gradient on an annotated mesh; write the field and print a report.
    Morse {
        mesh: PathBuf,
        /// Annotation file; defaults to the mesh path with extension `.ann`.
        #[arg(long)]
        annotations: Option<PathBuf>,
        /// Spec the mesh was generated from; defaults to `<stem>.spec.json` beside the mesh if present.
        #[arg(long)]
        spec: Option<PathBuf>,
    },
    /// Betti numbers and torsion of a mesh.
    Homology { mesh: PathBuf },
    /// Exact minimum number of critical cells of a mesh.
    Oracle { mesh: PathBuf },
    /// Triangulate, build the gradient and cross-check everything.
    Verify {
        spec: PathBuf,
        /// Meshes with more cells skip the oracle.
        #[arg(long = "oracle-max-cells", default_value_t = 400)]
        oracle_max_cells: usize,
    },
    /// Fineness sweep timing the gradient construction.
    Bench {
        spec: PathBuf,
        #[arg(long = "max-fineness", default_value_t = 3)]
        max_fineness: u32,
        /// Timed runs per size; the fastest counts.
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// Allowed growth relative to the cell-count ratio.
        #[arg(long, default_value_t = 1.5)]
        slack: f64,
    },
}

fn parse_circle_length(s: &str) -> Result<(String, usize), String> {
    let (id, len) = s
        .split_once('=')
        .ok_or_else(|| format!("expected <id>=<L>, got {s:?}"))?;
    let len = len.parse().map_err(|_| format!("bad length in {s:?}"))?;
    Ok((id.to_string(), len))
}

/// Exit status 1: bad input. Exit status 2: an internal invariant failed.
enum Failure {
    Validation(anyhow::Error),
    Invariant(anyhow::Error),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        if e.is_validation() {
            Failure::Validation(e.into())
        } else {
            Failure::Invariant(e.into())
        }
    }
}

fn invalid(e: impl Into<anyhow::Error>) -> Failure {
    Failure::Validation(e.into())
}

type Outcome = Result<(), Failure>;

impl RunConfig {
    fn exec(&self) -> Exec {
        if self.sequential {
            Exec::Sequential
        } else {
            Exec::default()
        }
    }

    fn triangulate_options(&self) -> TriangulateOptions {
        TriangulateOptions {
            circle_lengths: self
                .circle_length
                .iter()
                .cloned()
                .collect::<BTreeMap<_, _>>(),
            fineness: self.fineness,
            ..Default::default()
        }
    }

    fn optimizer_options(&self) -> OptimizerOptions {
        OptimizerOptions {
            reading: self.boundary_reading,
            exec: self.exec(),
        }
    }

    fn pipeline_options(&self) -> PipelineOptions {
        PipelineOptions {
            triangulate: self.triangulate_options(),
            optimizer: self.optimizer_options(),
            coefficients: self.coeffs.clone(),
            oracle_budget: self.oracle_budget,
            ..Default::default()
        }
    }

    fn write(&self, name: &str, contents: &str) -> Result<Option<PathBuf>, Failure> {
        let Some(dir) = &self.out else {
            return Ok(None);
        };
        fs::create_dir_all(dir)
            .with_context(|| format!("creating {}", dir.display()))
            .map_err(invalid)?;
        let path = dir.join(name);
        fs::write(&path, contents)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(invalid)?;
        Ok(Some(path))
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(invalid)
}

/// JSON spec, or the compact `g0[c1:3] ...` form.
fn read_spec(path: &Path) -> Result<StratifoldSpec, Failure> {
    let text = read(path)?;
    let spec = if text.trim_start().starts_with('{') {
        StratifoldSpec::from_json(&text)
    } else {
        text.parse()
    };
    spec.with_context(|| format!("in {}", path.display()))
        .map_err(invalid)
}

fn stem(path: &Path) -> String {
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let name = name.strip_suffix(".json").unwrap_or(name);
    let name = name.strip_suffix(".spec").unwrap_or(name);
    Path::new(name)
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or(name)
        .to_string()
}

fn print_json(v: &serde_json::Value) {
    emit(&serde_json::to_string_pretty(v).expect("output serializes"));
}

/// Writes to stdout; a closed pipe (say `| head`) is not an error.
fn emit(text: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn run(cli: Cli) -> Outcome {
    let cfg = &cli.config;
    match &cli.command {
        Command::Analyze { spec } => {
            let spec = read_spec(spec)?;
            let a = pipeline::analyze(&spec, &cfg.coeffs)?;
            let text = serde_json::to_string_pretty(&a).expect("analysis serializes");
            cfg.write("analysis.json", &text)?;
            emit(&text);
        }
        Command::Triangulate { spec: path } => {
            let spec = read_spec(path)?;
            let sm =
                triangulate_spec(&spec, &cfg.triangulate_options()).map_err(PipelineError::from)?;
            let name = stem(path);
            let out = cfg.out.clone().unwrap_or_else(|| PathBuf::from("."));
            let cfg = RunConfig {
                out: Some(out),
                ..cfg.clone()
            };
            let mesh = cfg.write(&format!("{name}.mesh"), &write_mesh(&sm.mesh))?;
            let ann = cfg.write(&format!("{name}.ann"), &write_annotations(&sm))?;
            cfg.write(&format!("{name}.spec.json"), &spec.to_json())?;
            let k = &sm.mesh;
            print_json(&json!({
                "spec": spec.to_string(),
                "mesh": mesh,
                "annotations": ann,
                "cells": [k.num_vertices(), k.num_edges(), k.num_faces()],
                "euler_characteristic": euler_characteristic(k),
            }));
        }
        Command::Morse {
            mesh,
            annotations,
            spec,
        } => {
            let ann_path = annotations
                .clone()
                .unwrap_or_else(|| mesh.with_extension("ann"));
            let sm = import_mesh(&read(mesh)?, &read(&ann_path)?).map_err(PipelineError::from)?;
            let spec_path = spec.clone().or_else(|| {
                let p = mesh.with_file_name(format!("{}.spec.json", stem(mesh)));
                p.exists().then_some(p)
            });
            let g = optimal_gradient(&sm, &cfg.optimizer_options()).map_err(PipelineError::from)?;
            let name = stem(mesh);
            cfg.write(&format!("{name}.field"), &write_field(&g.field, &sm.mesh))?;
            let text = match spec_path {
                Some(p) => {
                    let spec = read_spec(&p)?;
                    verify_report(&g, &sm, &spec)
                        .map_err(PipelineError::from)?
                        .to_json()
                }
                None => serde_json::to_string_pretty(&field_report(&sm, &g, &cfg.coeffs)?)
                    .expect("report serializes"),
            };
            cfg.write(&format!("{name}.report.json"), &text)?;
            emit(&text);
        }
        Command::Homology { mesh } => {
            let (k, _) = parse_mesh(&read(mesh)?).map_err(invalid)?;
            let rows = cfg
                .coeffs
                .iter()
                .map(|&c| betti(&k, c))
                .collect::<Result<Vec<_>, _>>()
                .map_err(PipelineError::from)?;
            let text = serde_json::to_string_pretty(&json!({
                "cells": [k.num_vertices(), k.num_edges(), k.num_faces()],
                "euler_characteristic": euler_characteristic(&k),
                "betti": rows,
            }))
            .expect("homology serializes");
            cfg.write(&format!("{}.homology.json", stem(mesh)), &text)?;
            emit(&text);
        }
        Command::Oracle { mesh } => {
            let (k, _) = parse_mesh(&read(mesh)?).map_err(invalid)?;
            let r = min_critical_matching(&k, cfg.oracle_budget, cfg.exec()).map_err(invalid)?;
            let mut out = serde_json::to_value(&r).expect("oracle result serializes");
            let mut mismatch = None;
            if let Some(seed) = cfg.seed {
                let (relabeled, _) = relabel_randomly(&k, seed);
                let r2 = min_critical_matching(&relabeled, cfg.oracle_budget, cfg.exec())
                    .map_err(invalid)?;
                out["relabeled_minimum"] = json!(r2.minimum);
                if r.exhausted && r2.exhausted && r2.minimum != r.minimum {
                    mismatch = Some((r.minimum, r2.minimum));
                }
            }
            cfg.write(
                &format!("{}.oracle.field", stem(mesh)),
                &write_field(&r.witness, &k),
            )?;
            print_json(&out);
            if let Some((a, b)) = mismatch {
                return Err(Failure::Invariant(anyhow!(
                    "relabeling changed the minimum from {a} to {b}"
                )));
            }
        }
        Command::Verify {
            spec,
            oracle_max_cells,
        } => {
            let spec = read_spec(spec)?;
            let opts = PipelineOptions {
                oracle_max_cells: *oracle_max_cells,
                ..cfg.pipeline_options()
            };
            let v = pipeline::verify(&spec, &opts)?;
            let text = v.to_json();
            cfg.write("verification.json", &text)?;
            emit(&text);
            if !v.passed() {
                return Err(Failure::Invariant(anyhow!(
                    "verification failed: {}",
                    v.failures.join("; ")
                )));
            }
        }
        Command::Bench {
            spec,
            max_fineness,
            repeats,
            slack,
        } => {
            let spec = read_spec(spec)?;
            let r = pipeline::bench(
                &spec,
                &cfg.pipeline_options(),
                *max_fineness,
                *repeats,
                *slack,
            )?;
            let text = serde_json::to_string_pretty(&r).expect("bench serializes");
            cfg.write("bench.json", &text)?;
            emit(&text);
            if !r.linear() {
                return Err(Failure::Invariant(anyhow!(
                    "growth exceeds {slack} times the cell-count ratio"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Invariant(e)) => {
            eprintln!("invariant violated: {e:#}");
            ExitCode::from(2)
        }
    }
}
