//! Dynamic symbolic execution of one function over its CFG.
//!
//! States advance node by node. At a branch node a state forks one copy per
//! short-circuit evaluation path of the decision; the flood-search
//! scheduler keeps the copy heading for the exit by the shortest route and
//! parks the others on its open list (pending edge never taken) or close
//! list (pending edge already taken). Every state that reaches the exit has
//! its path constraint solved into a test case.

mod exec;
mod search;
mod state;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cfg::{distances_to_exit, Cfg, DecisionId, EdgeId, NodeId, Outcome};
use crate::frontend::{walk_stmts, Callee, ExprKind, FunctionDef, Program, StmtKind, SubjectType};
use crate::solver::ExternalSolver;
use crate::symcore::Constraint;

pub use exec::inlinable;
pub use state::{ExecutionState, Frame, StubCall};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Budgets {
    /// States created per exploration, the initial one included.
    pub max_states: usize,
    pub wall_clock_ms: u64,
    /// Close-list states are discharged along an edge only while it has
    /// been taken at most this many times.
    pub loop_bound: u32,
    pub solver_ms: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { max_states: 10_000, wall_clock_ms: 10_000, loop_bound: 2, solver_ms: 500 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchedulerKind {
    #[default]
    Flood,
    /// Plain depth-first exploration, kept for comparison.
    DepthFirst,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct EngineConfig {
    pub budgets: Budgets,
    /// Uninitialised locals start as fresh inputs instead of zero.
    pub symbolic_locals: bool,
    /// Calls to defined functions nested at most this deep are executed
    /// in place; deeper ones (and all external calls) are stubbed.
    pub inline_depth: u32,
    /// Consulted when the built-in solver gives up.
    pub external_solver: Option<ExternalSolver>,
    pub scheduler: SchedulerKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExceptionKind {
    ArrayOutOfBounds,
    DividedByZero,
    FixedMemoryAddress,
    NullDereference,
    UnboundVoidAlias,
}

impl ExceptionKind {
    pub fn name(self) -> &'static str {
        match self {
            ExceptionKind::ArrayOutOfBounds => "ArrayOutOfBounds",
            ExceptionKind::DividedByZero => "DividedByZero",
            ExceptionKind::FixedMemoryAddress => "FixedMemoryAddress",
            ExceptionKind::NullDereference => "NullDereference",
            ExceptionKind::UnboundVoidAlias => "UnboundVoidAlias",
        }
    }

    pub fn from_name(s: &str) -> Option<ExceptionKind> {
        [
            ExceptionKind::ArrayOutOfBounds,
            ExceptionKind::DividedByZero,
            ExceptionKind::FixedMemoryAddress,
            ExceptionKind::NullDereference,
            ExceptionKind::UnboundVoidAlias,
        ]
        .into_iter()
        .find(|k| k.name() == s)
    }
}

impl fmt::Display for ExceptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A runtime fault at statement `stmt` of `node`. Decisions are at index
/// `stmts.len()` of their branch node.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExceptionTag {
    pub kind: ExceptionKind,
    pub node: NodeId,
    pub stmt: usize,
    /// The fault condition that the test case's inputs satisfy.
    pub witness: String,
}

/// A node left along `edge`; the last step of a trace has no edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub node: NodeId,
    pub edge: Option<EdgeId>,
}

/// One evaluation of a decision: the atoms C evaluated (others `None`) and
/// the outcome.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DecisionEval {
    pub decision: DecisionId,
    pub atoms: Vec<Option<bool>>,
    pub outcome: Outcome,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseOrigin {
    Path,
    /// Least or greatest value of an input under another case's path.
    Boundary {
        of: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: usize,
    pub function: String,
    /// Parameter, global and symbolic-local leaves.
    pub inputs: BTreeMap<String, i64>,
    /// Stub symbols in call order.
    pub stub_returns: Vec<(String, i64)>,
    /// Filled in by replay for integer-returning functions.
    pub expected_return: Option<i64>,
    pub covered_edges: BTreeSet<EdgeId>,
    pub decision_outcomes: Vec<DecisionEval>,
    pub exception: Option<ExceptionTag>,
    pub generation_path: Vec<Step>,
    pub origin: CaseOrigin,
    #[serde(skip)]
    pub path: Constraint,
}

impl TestCase {
    /// Value of a symbol as the replay sees it; absent symbols are 0.
    pub fn value(&self, name: &str) -> i64 {
        self.inputs
            .get(name)
            .copied()
            .or_else(|| self.stub_returns.iter().find(|(n, _)| n == name).map(|p| p.1))
            .unwrap_or(0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UncoveredReason {
    /// Every attempt to take the edge had an unsatisfiable path.
    Infeasible,
    /// The solver gave up on some attempt.
    Unknown,
    /// Exploration stopped before settling the edge.
    Budget,
}

impl UncoveredReason {
    pub fn name(self) -> &'static str {
        match self {
            UncoveredReason::Infeasible => "infeasible",
            UncoveredReason::Unknown => "unknown",
            UncoveredReason::Budget => "budget",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stats {
    pub states_created: usize,
    pub node_executions: usize,
    pub solver_calls: usize,
    pub unknown_solves: usize,
    /// Close-list states dropped by the loop bound.
    pub loop_bound_drops: usize,
    /// States dropped for lack of state, step or time budget.
    pub budget_drops: usize,
    /// States abandoned on an unsupported construct or an unknown solve.
    pub abandoned: usize,
    pub exits_unsat: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenerationResult {
    pub function: String,
    pub cases: Vec<TestCase>,
    pub uncovered: Vec<(EdgeId, UncoveredReason)>,
    /// Some budget ran out; the cases are still valid.
    pub partial: bool,
    pub stats: Stats,
    pub edge_visits: Vec<u32>,
    pub diagnostics: Vec<String>,
    pub seconds: f64,
}

impl GenerationResult {
    pub fn covered_edges(&self) -> BTreeSet<EdgeId> {
        self.cases.iter().flat_map(|c| c.covered_edges.iter().copied()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("no function named `{0}`")]
    NoSuchFunction(String),
}

/// Explore `cfg` (built from a function of `program`) and generate tests.
pub fn generate(program: &Program, cfg: &Cfg, config: &EngineConfig) -> Result<GenerationResult, EngineError> {
    let func = program.function(&cfg.function).ok_or_else(|| EngineError::NoSuchFunction(cfg.function.clone()))?;
    let started = Instant::now();
    let dist = distances_to_exit(cfg);
    let mut x = exec::Explorer::new(program, cfg, func, dist, config, started);
    let init = x.initial_state();
    match config.scheduler {
        SchedulerKind::Flood => x.flood(init),
        SchedulerKind::DepthFirst => x.depth_first(init),
    }
    Ok(x.finish_result())
}

/// What the engine substitutes for one called function.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StubSpec {
    pub callee: String,
    pub return_type: SubjectType,
    /// Pointer parameters whose targets the stub overwrites.
    pub out_params: Vec<String>,
}

/// Stubs for the calls `func` makes, in order of first call. With
/// `inline_depth` 0 every callee is stubbed.
pub fn generate_stubs(program: &Program, func: &FunctionDef, inline_depth: u32) -> Vec<StubSpec> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    walk_stmts(&func.body, &mut |s| {
        let mut visit = |e: &crate::frontend::Expr| {
            e.walk(&mut |e| {
                if let ExprKind::Call(callee, _) = &e.kind {
                    let stubbed = match callee {
                        Callee::External(_) => true,
                        Callee::Defined(id) => inline_depth == 0 || !inlinable(&program.functions[*id]),
                    };
                    if stubbed && seen.insert(program.callee_name(*callee)) {
                        let params = match callee {
                            Callee::External(id) => &program.externals[*id].params,
                            Callee::Defined(id) => &program.functions[*id].params,
                        };
                        out.push(StubSpec {
                            callee: program.callee_name(*callee).to_string(),
                            return_type: program.callee_return(*callee).clone(),
                            out_params: params.iter().filter(|p| p.ty.is_pointer()).map(|p| p.name.clone()).collect(),
                        });
                    }
                }
            })
        };
        match &s.kind {
            StmtKind::Decl { init: Some(e), .. } | StmtKind::Expr(e) | StmtKind::Return(Some(e)) => visit(e),
            StmtKind::Assign { target, value } => {
                visit(target);
                visit(value);
            }
            StmtKind::If { cond, .. } | StmtKind::While { cond, .. } => visit(cond),
            StmtKind::For { cond: Some(c), .. } => visit(c),
            StmtKind::Switch { scrutinee, .. } => visit(scrutinee),
            _ => {}
        }
    });
    out
}

#[cfg(test)]
mod tests;
