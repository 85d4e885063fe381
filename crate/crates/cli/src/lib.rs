//! Batch driver: generate tests for every function under a source tree and
//! write case files and coverage tables.

pub mod export;
pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use smartgen_core::cfg::{build_cfg, Cfg};
use smartgen_core::coverage::{boundary_cases, measure, replay, CoverageReport, ReplayOptions};
use smartgen_core::engine::{generate, Budgets, EngineConfig, ExceptionKind, SchedulerKind, TestCase};
use smartgen_core::frontend::{parse, Program};
use smartgen_core::solver::{Budget, Domains, ExternalSolver};

pub use report::{BatchReport, FunctionRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Format {
    Json,
    Tcf,
    Csv,
    Dot,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "tcf" => Ok(Format::Tcf),
            "csv" => Ok(Format::Csv),
            "dot" => Ok(Format::Dot),
            other => Err(format!("unknown format `{other}` (expected json, tcf, csv or dot)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub source_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Glob over function names.
    pub function_filter: Option<String>,
    pub budgets: Budgets,
    pub symbolic_locals: bool,
    pub inline_depth: u32,
    pub external_solver: Option<String>,
    pub formats: Vec<Format>,
    pub jobs: usize,
    pub strict: bool,
    /// Use the depth-first scheduler instead of flood search.
    pub compare_dfs: bool,
    /// Accepted for reproducibility; exploration has no random choices.
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn new(source_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            source_dir: source_dir.into(),
            output_dir: output_dir.into(),
            function_filter: None,
            budgets: Budgets::default(),
            symbolic_locals: false,
            inline_depth: 0,
            external_solver: None,
            formats: vec![Format::Json, Format::Tcf, Format::Csv],
            jobs: 1,
            strict: false,
            compare_dfs: false,
            seed: None,
        }
    }

    pub fn engine_config(&self) -> EngineConfig {
        EngineConfig {
            budgets: self.budgets,
            symbolic_locals: self.symbolic_locals,
            inline_depth: self.inline_depth,
            external_solver: self.external_solver.as_deref().map(ExternalSolver::new),
            scheduler: if self.compare_dfs { SchedulerKind::DepthFirst } else { SchedulerKind::Flood },
        }
    }

    fn replay_options(&self) -> ReplayOptions {
        ReplayOptions {
            symbolic_locals: self.symbolic_locals,
            inline_depth: self.inline_depth,
            ..ReplayOptions::default()
        }
    }

    fn validate(&self) -> Result<(), BatchError> {
        let b = &self.budgets;
        if b.max_states == 0 || b.wall_clock_ms == 0 || b.solver_ms == 0 {
            return Err(BatchError::Config("budgets must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(BatchError::Config("--jobs must be at least 1".into()));
        }
        if let Some(f) = &self.function_filter {
            glob::Pattern::new(f).map_err(|e| BatchError::Config(format!("bad --func pattern: {e}")))?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BatchError + '_ {
    move |source| BatchError::Io { path: path.to_path_buf(), source }
}

/// `.mc` files below `dir`, sorted by path.
pub fn source_files(dir: &Path) -> Result<Vec<PathBuf>, BatchError> {
    let mut out = Vec::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| BatchError::Io {
            path: e.path().unwrap_or(dir).to_path_buf(),
            source: e.into_io_error().unwrap_or_else(|| std::io::Error::other("directory loop")),
        })?;
        if entry.file_type().is_file() && entry.path().extension().is_some_and(|x| x == "mc") {
            out.push(entry.into_path());
        }
    }
    Ok(out)
}

/// Everything produced for one function.
#[derive(Clone, Debug)]
pub struct FunctionOutcome {
    pub file: String,
    pub function: String,
    pub cfg: Cfg,
    /// Path cases first, then boundary cases; expected returns filled in.
    pub cases: Vec<TestCase>,
    pub report: CoverageReport,
    /// Generated cases whose replay disagreed with the engine.
    pub mismatches: Vec<String>,
    pub diagnostics: Vec<String>,
}

/// parse -> cfg -> explore -> boundary cases -> replay -> measure.
pub fn process_function(program: &Program, file: &str, name: &str, config: &RunConfig) -> FunctionOutcome {
    let func = program.function(name).expect("function of the program");
    let cfg = build_cfg(func);
    let result = generate(program, &cfg, &config.engine_config()).expect("cfg built from this program");
    let mut cases = result.cases.clone();
    let budget = Budget::from_ms(config.budgets.solver_ms);
    let mut skipped = 0;
    for c in &result.cases {
        let extra = boundary_cases(c, &Domains::new(), budget, &cases, cases.len());
        skipped += extra.skipped;
        cases.extend(extra.cases);
    }
    let opts = config.replay_options();
    let mut traces = Vec::new();
    let mut mismatches = Vec::new();
    let mut diagnostics = result.diagnostics.clone();
    for c in &mut cases {
        match replay(program, &cfg, c, &opts) {
            Ok(t) => {
                match (&c.exception, &t.exception) {
                    (None, None) if t.steps != c.generation_path => {
                        mismatches.push(format!("case {}: replay took a different path", c.id))
                    }
                    (Some(a), Some(b)) if (a.kind, a.node, a.stmt) != (b.kind, b.node, b.stmt) => {
                        mismatches.push(format!("case {}: predicted {} but replay raised {}", c.id, a.kind, b.kind))
                    }
                    (Some(a), None) => mismatches.push(format!("case {}: predicted {} did not occur", c.id, a.kind)),
                    (None, Some(b)) => mismatches.push(format!("case {}: unexpected {}", c.id, b.kind)),
                    _ => {}
                }
                c.expected_return = t.return_value;
                traces.push(t);
            }
            Err(e) => diagnostics.push(format!("case {}: {e}", c.id)),
        }
    }
    let mut report = measure(&cfg, &traces);
    report.attribute(&result);
    report.test_cases = cases.len();
    report.boundary_skipped = skipped;
    FunctionOutcome { file: file.to_string(), function: name.to_string(), cfg, cases, report, mismatches, diagnostics }
}

struct Unit {
    file: String,
    program: std::sync::Arc<Program>,
    function: String,
}

/// Run the whole batch and write the requested artifacts.
pub fn run_batch(config: &RunConfig) -> Result<(BatchReport, Vec<FunctionOutcome>), BatchError> {
    config.validate()?;
    if let Some(seed) = config.seed {
        log::debug!("seed {seed} (exploration is deterministic)");
    }
    let filter = config.function_filter.as_deref().map(|f| glob::Pattern::new(f).expect("validated"));
    let mut units = Vec::new();
    let mut errors = Vec::new();
    for path in source_files(&config.source_dir)? {
        let text = fs::read_to_string(&path).map_err(io_err(&path))?;
        let rel = path.strip_prefix(&config.source_dir).unwrap_or(&path).to_string_lossy().replace('\\', "/");
        match parse(&text) {
            Ok(program) => {
                let program = std::sync::Arc::new(program);
                for f in &program.functions {
                    if filter.as_ref().is_none_or(|g| g.matches(&f.name)) {
                        units.push(Unit { file: rel.clone(), program: program.clone(), function: f.name.clone() });
                    }
                }
            }
            Err(d) => {
                let msg = format!("{rel}: {d}");
                if config.strict {
                    return Err(BatchError::Parse(msg));
                }
                log::warn!("{msg}");
                errors.push(msg);
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| BatchError::Config(format!("worker pool: {e}")))?;
    let outcomes: Vec<FunctionOutcome> =
        pool.install(|| units.par_iter().map(|u| process_function(&u.program, &u.file, &u.function, config)).collect());
    let report = BatchReport::new(&outcomes, errors);
    write_artifacts(config, &report, &outcomes)?;
    Ok((report, outcomes))
}

/// File stem shared by a function's artifacts, unique across the batch.
pub fn artifact_stem(file: &str, function: &str) -> String {
    let file = file.strip_suffix(".mc").unwrap_or(file).replace('/', "_");
    format!("{file}.{function}")
}

fn write(path: PathBuf, text: String) -> Result<(), BatchError> {
    fs::write(&path, text).map_err(io_err(&path))
}

pub fn write_artifacts(
    config: &RunConfig,
    report: &BatchReport,
    outcomes: &[FunctionOutcome],
) -> Result<(), BatchError> {
    let out = &config.output_dir;
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut formats = config.formats.clone();
    formats.sort();
    formats.dedup();
    for f in formats {
        match f {
            Format::Json => {
                for o in outcomes {
                    write(
                        out.join(format!("{}.json", artifact_stem(&o.file, &o.function))),
                        export::to_json(&o.function, &o.cases),
                    )?;
                }
            }
            Format::Tcf => {
                for o in outcomes {
                    write(
                        out.join(format!("{}.tcf", artifact_stem(&o.file, &o.function))),
                        export::to_tcf(&o.function, &o.cases),
                    )?;
                }
            }
            Format::Dot => {
                for o in outcomes {
                    write(
                        out.join(format!("{}.dot", artifact_stem(&o.file, &o.function))),
                        smartgen_core::cfg::to_dot(&o.cfg),
                    )?;
                }
            }
            Format::Csv => {
                write(out.join("coverage.csv"), report.bins_csv())?;
                write(out.join("functions.csv"), report.functions_csv())?;
            }
        }
    }
    write(out.join("report.txt"), report.render())
}

/// Count of predicted exceptions per kind.
pub fn exception_counts(outcomes: &[FunctionOutcome]) -> BTreeMap<ExceptionKind, usize> {
    let mut m = BTreeMap::new();
    for c in outcomes.iter().flat_map(|o| &o.cases) {
        if let Some(e) = &c.exception {
            *m.entry(e.kind).or_insert(0) += 1;
        }
    }
    m
}
