//! Symbolic execution of statements and decisions within one state.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::cfg::{Cfg, DecisionKind, DistanceMap, EdgeId, NodeId, NodeKind, Outcome};
use crate::frontend::{
    Callee, Expr, ExprKind, FuncId, FunctionDef, LogicOp, Program, Stmt, StmtKind, SubjectType, VarRef,
};
use crate::semantics::{BinOp, IntTy};
use crate::solver::{self, Budget, Domains, Model, SolveResult};
use crate::symcore::plan::{input_plan, leaves, stub_out_name, stub_return_name, symbolic_local_name, Base};
use crate::symcore::{
    leaf_cell, load_symbolic, materialize, store_symbolic, Cell, Constraint, LeafSource, ObjectId, Origin, Provenance,
    PtrTarget, SymMemory, SymPointer, SymValue,
};

use super::state::{ExecutionState, Frame, StubCall};
use super::{
    CaseOrigin, DecisionEval, EngineConfig, ExceptionKind, ExceptionTag, GenerationResult, SchedulerKind, Stats, Step,
    TestCase, UncoveredReason,
};

#[derive(Clone, Debug)]
pub(crate) enum Value {
    Int(SymValue),
    Ptr(SymPointer),
}

impl Value {
    fn int(self) -> Result<SymValue, Stop> {
        match self {
            Value::Int(v) => Ok(v),
            Value::Ptr(_) => Err(Stop::Unsupported("pointer used as an integer".into())),
        }
    }

    fn ptr(self) -> Result<SymPointer, Stop> {
        match self {
            Value::Ptr(p) => Ok(p),
            Value::Int(_) => Err(Stop::Unsupported("integer used as a pointer".into())),
        }
    }
}

/// Why a state stops before the exit.
#[derive(Debug)]
pub(crate) enum Stop {
    /// A fault is certain or the path turned out infeasible.
    Dead,
    Unsupported(String),
    /// The solver could not decide something the state depends on.
    Unknown,
}

struct Place {
    ptr: SymPointer,
    ty: SubjectType,
}

pub(crate) enum NodeResult {
    Exit,
    Dead,
    Next(EdgeId),
    /// Feasible successors of a branch node, in decision-path order.
    Fork(Vec<(EdgeId, ExecutionState)>),
}

#[derive(Clone, Debug, Default)]
pub(crate) struct Attempts {
    pub sat: bool,
    pub unsat: u32,
    pub unknown: u32,
}

struct Inputs<'v> {
    created: &'v mut Vec<String>,
}

impl LeafSource<SymValue> for Inputs<'_> {
    fn int(&mut self, name: &str, ty: IntTy, boolean: bool) -> SymValue {
        self.created.push(name.to_string());
        SymValue::input(name, ty, boolean)
    }

    fn zero(&mut self) -> SymValue {
        SymValue::offset(0)
    }
}

fn env(m: &Model) -> impl Fn(&str) -> Option<i64> + '_ {
    move |n| Some(m.get(n).copied().unwrap_or(0))
}

fn satisfied(v: &SymValue, m: &Model) -> bool {
    matches!(v.eval(&env(m)), Ok(x) if x != 0)
}

fn null_ptr() -> SymPointer {
    SymPointer { target: PtrTarget::Null, offset: SymValue::offset(0), null_flag: None }
}

/// 1 exactly when `p` is a null pointer.
fn is_null(p: &SymPointer) -> SymValue {
    match &p.target {
        PtrTarget::Null => SymValue::int(1),
        PtrTarget::Fixed(a) => SymValue::eq(a.clone(), SymValue::offset(0)),
        _ => p.null_flag.as_ref().map_or_else(|| SymValue::int(0), |f| f.truthy()),
    }
}

fn int_ty(t: &SubjectType) -> Result<IntTy, Stop> {
    t.int_ty().ok_or_else(|| Stop::Unsupported("non-integer value where an integer is needed".into()))
}

fn has_call(e: &Expr) -> bool {
    let mut found = false;
    e.walk(&mut |e| found |= matches!(e.kind, ExprKind::Call(..)));
    found
}

/// Defined functions simple enough to execute in place: straight-line
/// bodies whose only `return` is the last statement.
pub fn inlinable(f: &FunctionDef) -> bool {
    let n = f.body.len();
    f.body.iter().enumerate().all(|(i, s)| match &s.kind {
        StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => true,
        StmtKind::Return(_) => i + 1 == n,
        _ => false,
    })
}

pub(crate) struct Explorer<'a> {
    pub program: &'a Program,
    pub cfg: &'a Cfg,
    pub func: &'a FunctionDef,
    pub dist: DistanceMap,
    pub config: &'a EngineConfig,
    pub started: Instant,
    pub visits: Vec<u32>,
    pub attempts: Vec<Attempts>,
    pub cases: Vec<TestCase>,
    pub stats: Stats,
    pub partial: bool,
    pub step_cap: usize,
    reported: BTreeSet<(NodeId, usize, ExceptionKind)>,
    diagnostics: Vec<String>,
    site: (NodeId, usize),
    /// Conditions under which the operand being evaluated actually runs.
    guards: Vec<SymValue>,
}

impl<'a> Explorer<'a> {
    pub fn new(
        program: &'a Program,
        cfg: &'a Cfg,
        func: &'a FunctionDef,
        dist: DistanceMap,
        config: &'a EngineConfig,
        started: Instant,
    ) -> Self {
        let step_cap = config.budgets.max_states.saturating_mul(cfg.nodes.len().max(8)).saturating_mul(4);
        Explorer {
            program,
            cfg,
            func,
            dist,
            config,
            started,
            visits: vec![0; cfg.edges.len()],
            attempts: vec![Attempts::default(); cfg.edges.len()],
            cases: Vec::new(),
            stats: Stats::default(),
            partial: false,
            step_cap,
            reported: BTreeSet::new(),
            diagnostics: Vec::new(),
            site: (cfg.entry, 0),
            guards: Vec::new(),
        }
    }

    fn func_id(&self) -> FuncId {
        self.program.functions.iter().position(|f| f.name == self.func.name).expect("function of the program")
    }

    pub fn initial_state(&mut self) -> ExecutionState {
        let p = self.program;
        let mut memory = SymMemory::new();
        let mut inputs = Vec::new();
        let mut src = Inputs { created: &mut inputs };
        let globals = p
            .globals
            .iter()
            .map(|g| {
                let plan = input_plan(p, &g.ty, 1, Base::Named(g.name.clone()), 0, 1);
                materialize(&mut memory, p, &plan, Origin::Global, &g.name, &mut src)
            })
            .collect();
        let mut frame = Frame::new(self.func_id(), self.func.locals.len());
        for (i, param) in self.func.params.iter().enumerate() {
            let plan = input_plan(p, &param.ty, 1, Base::Named(param.name.clone()), 0, param.extent);
            frame.vars[i] = Some(materialize(&mut memory, p, &plan, Origin::Param, &param.name, &mut src));
        }
        self.stats.states_created = 1;
        let dfs = self.config.scheduler == SchedulerKind::DepthFirst;
        ExecutionState {
            current: self.cfg.entry,
            pending_edge: None,
            path: Constraint::new(),
            memory,
            frames: vec![frame],
            globals,
            stub_ledger: Vec::new(),
            stub_counts: BTreeMap::new(),
            inputs,
            trace: Vec::new(),
            decisions: Vec::new(),
            model: Some(Model::new()),
            edge_counts: if dfs { vec![0; self.cfg.edges.len()] } else { Vec::new() },
        }
    }

    // ---- bookkeeping ----

    pub fn diag(&mut self, msg: String) {
        let pos = match self.cfg.nodes.get(self.site.0) {
            Some(n) => n.stmts.get(self.site.1).map_or(n.pos, |s| s.pos),
            None => Default::default(),
        };
        let msg = format!("{pos}: {msg}");
        if !self.diagnostics.contains(&msg) {
            self.diagnostics.push(msg);
        }
    }

    pub fn stopped(&mut self, stop: Stop) {
        match stop {
            Stop::Dead => {}
            Stop::Unsupported(m) => {
                self.stats.abandoned += 1;
                self.diag(format!("unsupported construct: {m}"));
            }
            Stop::Unknown => self.stats.abandoned += 1,
        }
    }

    pub fn out_of_time(&self) -> bool {
        self.started.elapsed().as_millis() >= u128::from(self.config.budgets.wall_clock_ms)
    }

    /// The step or time budget is spent.
    pub fn exhausted(&self) -> bool {
        self.stats.node_executions >= self.step_cap
            || (self.stats.node_executions.is_multiple_of(64) && self.out_of_time())
    }

    pub fn take(&mut self, st: &mut ExecutionState, e: EdgeId) {
        self.visits[e] += 1;
        if let Some(c) = st.edge_counts.get_mut(e) {
            *c += 1;
        }
        st.trace.push(Step { node: st.current, edge: Some(e) });
        st.current = self.cfg.edges[e].to;
    }

    // ---- solving ----

    fn solve(&mut self, c: &Constraint) -> SolveResult {
        self.stats.solver_calls += 1;
        let r = solver::solve(c, &Domains::new(), Budget::from_ms(self.config.budgets.solver_ms));
        let r = match (r, &self.config.external_solver) {
            (SolveResult::Unknown(why), Some(ext)) => match ext.solve(c, &Domains::new()) {
                Ok(SolveResult::Sat(m)) if c.holds(&env(&m)) == Ok(true) => SolveResult::Sat(m),
                Ok(r @ SolveResult::Unsat { .. }) => r,
                _ => SolveResult::Unknown(why),
            },
            (r, _) => r,
        };
        if matches!(r, SolveResult::Unknown(_)) {
            self.stats.unknown_solves += 1;
        }
        r
    }

    /// `Some(true)` (and a cached model) when the path is satisfiable.
    fn feasible(&mut self, st: &mut ExecutionState) -> Option<bool> {
        if st.model.is_some() {
            return Some(true);
        }
        match self.solve(&st.path) {
            SolveResult::Sat(m) => {
                st.model = Some(m);
                Some(true)
            }
            SolveResult::Unsat { .. } => Some(false),
            SolveResult::Unknown(_) => None,
        }
    }

    fn push(&self, st: &mut ExecutionState, v: SymValue, origin: Provenance) {
        if let Some(m) = &st.model {
            if !satisfied(&v, m) {
                st.model = None;
            }
        }
        st.path.push(v, origin);
    }

    /// `v` restricted to the current guard: false where the operand does
    /// not run.
    fn when_guarded(&self, v: SymValue) -> SymValue {
        match self.guards.last() {
            None => v,
            Some(g) => SymValue::ite(g.clone(), v.truthy(), SymValue::int(0)),
        }
    }

    /// `guard => v`.
    fn implied(&self, v: SymValue) -> SymValue {
        match self.guards.last() {
            None => v,
            Some(g) => SymValue::ite(g.clone(), v.truthy(), SymValue::int(1)),
        }
    }

    /// A possible fault at the current site: report it once with a
    /// witness, then continue on the fault-free path.
    fn check(&mut self, st: &mut ExecutionState, kind: ExceptionKind, fault: SymValue) -> Result<(), Stop> {
        let fault = self.when_guarded(fault);
        if fault.as_const() == Some(0) {
            return Ok(());
        }
        let (node, stmt) = self.site;
        let origin = Provenance::Guard { node, stmt };
        if !self.reported.contains(&(node, stmt, kind)) {
            let q = st.path.with(fault.clone(), origin.clone());
            let r = match &st.model {
                Some(m) if satisfied(&fault, m) => SolveResult::Sat(m.clone()),
                _ => self.solve(&q),
            };
            match r {
                SolveResult::Sat(m) => {
                    self.reported.insert((node, stmt, kind));
                    let mut witness = fault.to_string();
                    if witness.len() > 240 {
                        let cut = (0..=240).rev().find(|&i| witness.is_char_boundary(i)).unwrap_or(0);
                        witness.truncate(cut);
                        witness.push_str("...");
                    }
                    let tag = ExceptionTag { kind, node, stmt, witness };
                    self.emit(st, &m, Some(tag), q);
                }
                SolveResult::Unsat { .. } => {}
                SolveResult::Unknown(_) => self.diag(format!("could not decide whether {kind} can occur")),
            }
        }
        if fault.as_const().is_some() {
            return Err(Stop::Dead);
        }
        self.push(st, SymValue::not(fault), origin);
        Ok(())
    }

    fn concretize(&mut self, st: &mut ExecutionState, v: &SymValue) -> Result<i64, Stop> {
        if let Some(c) = v.as_const() {
            return Ok(c);
        }
        match self.feasible(st) {
            Some(true) => {}
            Some(false) => return Err(Stop::Dead),
            None => return Err(Stop::Unknown),
        }
        let c = v.eval(&env(st.model.as_ref().expect("feasible"))).map_err(|_| Stop::Dead)?;
        let fix = self.implied(SymValue::eq(v.clone(), SymValue::constant(v.ty(), c)));
        self.push(st, fix, Provenance::Assume);
        Ok(c)
    }

    // ---- test cases ----

    fn emit(&mut self, st: &ExecutionState, m: &Model, exception: Option<ExceptionTag>, path: Constraint) {
        let val = |n: &str| m.get(n).copied().unwrap_or(0);
        let used: BTreeSet<String> = path.inputs().into_iter().map(|i| i.0.to_string()).collect();
        let mut trace = st.trace.clone();
        trace.push(Step { node: st.current, edge: None });
        let stub_returns = st
            .stub_ledger
            .iter()
            .flat_map(|c| c.returns.iter().chain(c.outs.iter().filter(|s| used.contains(*s))))
            .map(|s| (s.clone(), val(s)))
            .collect();
        self.cases.push(TestCase {
            id: self.cases.len(),
            function: self.cfg.function.clone(),
            inputs: st.inputs.iter().map(|n| (n.clone(), val(n))).collect(),
            stub_returns,
            expected_return: None,
            covered_edges: trace.iter().filter_map(|s| s.edge).collect(),
            decision_outcomes: st.decisions.clone(),
            exception,
            generation_path: trace,
            origin: CaseOrigin::Path,
            path,
        });
    }

    /// Solve a state that reached the exit.
    pub fn reach_exit(&mut self, mut st: ExecutionState) {
        match self.feasible(&mut st) {
            Some(true) => {
                let m = st.model.clone().expect("feasible");
                let path = st.path.clone();
                self.emit(&st, &m, None, path);
            }
            Some(false) => self.stats.exits_unsat += 1,
            None => {
                for s in &st.trace {
                    if let Some(e) = s.edge {
                        self.attempts[e].unknown += 1;
                    }
                }
                self.stats.abandoned += 1;
            }
        }
    }

    pub fn finish_result(self) -> GenerationResult {
        let covered: BTreeSet<EdgeId> = self.cases.iter().flat_map(|c| c.covered_edges.iter().copied()).collect();
        let budget_hit = self.partial || self.stats.loop_bound_drops > 0 || self.stats.budget_drops > 0;
        let abandoned = self.stats.abandoned > 0;
        let mut uncovered = Vec::new();
        for e in self.cfg.labeled_edges() {
            if covered.contains(&e.id) {
                continue;
            }
            let a = &self.attempts[e.id];
            // an unsat attempt settles nothing if some state was dropped
            // or abandoned: it might have reached the edge on another path
            let reason = if self.cfg.nodes[e.from].unreachable {
                UncoveredReason::Infeasible
            } else if a.unknown > 0 {
                UncoveredReason::Unknown
            } else if budget_hit {
                UncoveredReason::Budget
            } else if abandoned {
                UncoveredReason::Unknown
            } else if a.sat {
                UncoveredReason::Budget
            } else {
                UncoveredReason::Infeasible
            };
            uncovered.push((e.id, reason));
        }
        GenerationResult {
            function: self.cfg.function.clone(),
            cases: self.cases,
            uncovered,
            partial: self.partial,
            stats: self.stats,
            edge_visits: self.visits,
            diagnostics: self.diagnostics,
            seconds: self.started.elapsed().as_secs_f64(),
        }
    }

    // ---- nodes ----

    pub fn run_node(&mut self, st: &mut ExecutionState) -> NodeResult {
        self.stats.node_executions += 1;
        let cfg = self.cfg;
        let node = &cfg.nodes[st.current];
        if node.kind == NodeKind::Exit {
            return NodeResult::Exit;
        }
        for (i, s) in node.stmts.iter().enumerate() {
            self.site = (node.id, i);
            if let Err(stop) = self.stmt(st, s) {
                self.guards.clear();
                self.stopped(stop);
                return NodeResult::Dead;
            }
        }
        match node.kind {
            NodeKind::Branch => {
                self.site = (node.id, node.stmts.len());
                NodeResult::Fork(self.branch(st))
            }
            _ => match cfg.succ[node.id].first() {
                Some(&e) => NodeResult::Next(e),
                None => NodeResult::Dead,
            },
        }
    }

    fn admit(&mut self, e: EdgeId, mut c: ExecutionState, out: &mut Vec<(EdgeId, ExecutionState)>) {
        match self.feasible(&mut c) {
            Some(true) => {
                self.attempts[e].sat = true;
                out.push((e, c));
            }
            Some(false) => self.attempts[e].unsat += 1,
            None => {
                self.attempts[e].unknown += 1;
                out.push((e, c));
            }
        }
    }

    fn branch(&mut self, st: &mut ExecutionState) -> Vec<(EdgeId, ExecutionState)> {
        let cfg = self.cfg;
        let node = &cfg.nodes[st.current];
        let d = &cfg.decisions[node.decision.expect("branch nodes carry a decision")];
        let mut out = Vec::new();
        if d.kind == DecisionKind::Switch {
            let v = match self.eval(st, &d.expr).and_then(Value::int) {
                Ok(v) => v,
                Err(stop) => {
                    self.guards.clear();
                    self.stopped(stop);
                    return out;
                }
            };
            let cases: Vec<i64> = cfg
                .out_edges(node.id)
                .iter()
                .filter_map(|&e| match cfg.edges[e].label.map(|l| l.outcome) {
                    Some(Outcome::Case(c)) => Some(c),
                    _ => None,
                })
                .collect();
            for &e in cfg.out_edges(node.id) {
                let Some(label) = cfg.edges[e].label else { continue };
                let k = |c: i64| SymValue::constant(v.ty(), c);
                let cond = match label.outcome {
                    Outcome::Case(c) => SymValue::eq(v.clone(), k(c)),
                    _ => cases.iter().fold(SymValue::int(1), |acc, &c| {
                        SymValue::and(acc, SymValue::cmp(BinOp::Ne, v.clone(), k(c)))
                    }),
                };
                let mut c = st.clone();
                self.push(&mut c, cond, Provenance::Case { edge: e, decision: d.id });
                c.decisions.push(DecisionEval { decision: d.id, atoms: Vec::new(), outcome: label.outcome });
                self.admit(e, c, &mut out);
            }
            return out;
        }
        for (steps, outcome) in d.formula.paths() {
            let oc = if outcome { Outcome::True } else { Outcome::False };
            let Some(e) = cfg.edge_for(node.id, oc) else { continue };
            let mut c = st.clone();
            let mut atoms = vec![None; d.atoms.len()];
            let mut alive = true;
            for (a, truth) in steps {
                match self.eval(&mut c, &d.atoms[a]).and_then(Value::int) {
                    Ok(v) => {
                        let cond = if truth { v.truthy() } else { v.falsy() };
                        let dead = cond.as_const() == Some(0);
                        self.push(&mut c, cond, Provenance::Branch { edge: e, decision: d.id, atom: a, truth });
                        atoms[a] = Some(truth);
                        if dead {
                            break;
                        }
                    }
                    Err(stop) => {
                        self.guards.clear();
                        self.stopped(stop);
                        alive = false;
                        break;
                    }
                }
            }
            if alive {
                c.decisions.push(DecisionEval { decision: d.id, atoms, outcome: oc });
                self.admit(e, c, &mut out);
            }
        }
        out
    }

    // ---- statements ----

    fn stmt(&mut self, st: &mut ExecutionState, s: &Stmt) -> Result<(), Stop> {
        match &s.kind {
            StmtKind::Decl { var, init } => {
                let v = match init {
                    Some(e) => Some(self.eval(st, e)?),
                    None => None,
                };
                self.declare(st, *var);
                if let Some(v) = v {
                    let ty = self.local_ty(st, *var).clone();
                    let place = self.var_place(st, VarRef::Local(*var), &ty)?;
                    self.store(st, &place, v)?;
                }
                Ok(())
            }
            StmtKind::Assign { target, value } => {
                let place = self.place(st, target)?;
                let v = self.eval(st, value)?;
                self.store(st, &place, v)
            }
            StmtKind::Expr(e) | StmtKind::Return(Some(e)) => self.eval(st, e).map(|_| ()),
            StmtKind::Return(None) => Ok(()),
            _ => Err(Stop::Unsupported("compound statement inside a block".into())),
        }
    }

    fn local_ty(&self, st: &ExecutionState, var: usize) -> &'a SubjectType {
        &self.program.functions[st.frame().function].locals[var].ty
    }

    /// (Re)initialise a local: zero, or fresh inputs with symbolic locals.
    fn declare(&mut self, st: &mut ExecutionState, var: usize) {
        let p = self.program;
        let lv = &p.functions[st.frame().function].locals[var];
        let symbolic = self.config.symbolic_locals && st.frames.len() == 1;
        let n = {
            let f = st.frame_mut();
            f.decls[var] += 1;
            f.decls[var]
        };
        let ls = leaves(p, &lv.ty, 1, &Base::Named(lv.name.clone()));
        let mut cells = BTreeMap::new();
        for l in &ls {
            let cell = match l.ty.int_ty() {
                None => Cell::Ptr(null_ptr()),
                Some(t) if symbolic => {
                    let name = symbolic_local_name(&l.path, n);
                    st.inputs.push(name.clone());
                    Cell::Int(SymValue::input(&name, t, l.ty == SubjectType::Bool))
                }
                Some(t) => Cell::Int(SymValue::constant(t, 0)),
            };
            cells.insert(l.offset, cell);
        }
        match st.frame().vars[var] {
            Some(id) => st.memory.reinit(id, |off, _| cells[&off].clone()),
            None => {
                let id = st.memory.allocate(p, &lv.ty, 1, Origin::Local, &lv.name, &ls, |l| cells[&l.offset].clone());
                st.frame_mut().vars[var] = Some(id);
            }
        }
    }

    // ---- places and memory ----

    fn var_place(&mut self, st: &ExecutionState, v: VarRef, ty: &SubjectType) -> Result<Place, Stop> {
        let id: ObjectId = match v {
            VarRef::Local(i) => {
                st.frame().vars[i].ok_or_else(|| Stop::Unsupported("variable used before its declaration".into()))?
            }
            VarRef::Global(g) => st.globals[g],
        };
        Ok(Place {
            ptr: SymPointer { target: PtrTarget::Object(id), offset: SymValue::offset(0), null_flag: None },
            ty: ty.clone(),
        })
    }

    fn place(&mut self, st: &mut ExecutionState, e: &Expr) -> Result<Place, Stop> {
        match &e.kind {
            ExprKind::Var(v) => self.var_place(st, *v, &e.ty),
            ExprKind::Index(base, idx) => {
                let p = self.eval(st, base)?.ptr()?;
                let i = self.eval(st, idx)?.int()?;
                let size = i64::from(self.program.size_of(&e.ty));
                let delta = SymValue::bin(BinOp::Mul, IntTy::I64, i.cast(IntTy::I64), SymValue::offset(size));
                let offset = SymValue::bin(BinOp::Add, IntTy::I64, p.offset.clone(), delta);
                Ok(Place { ptr: SymPointer { offset, ..p }, ty: e.ty.clone() })
            }
            ExprKind::Field(base, fi) => {
                let p = self.place(st, base)?;
                let SubjectType::Record(r) = &base.ty else {
                    return Err(Stop::Unsupported("field of a non-record".into()));
                };
                let fo = i64::from(self.program.layout_of(*r).field_offsets[*fi].1);
                let offset = SymValue::bin(BinOp::Add, IntTy::I64, p.ptr.offset.clone(), SymValue::offset(fo));
                Ok(Place { ptr: SymPointer { offset, ..p.ptr }, ty: e.ty.clone() })
            }
            ExprKind::Deref(inner) => {
                let p = self.eval(st, inner)?.ptr()?;
                Ok(Place { ptr: p, ty: e.ty.clone() })
            }
            _ => Err(Stop::Unsupported("assignment to a non-lvalue".into())),
        }
    }

    /// Fault checks for touching `place`; the object and offset, or `None`
    /// when the access can only happen where the current guard is false.
    fn access(&mut self, st: &mut ExecutionState, place: &Place) -> Result<Option<(ObjectId, SymValue)>, Stop> {
        let ptr = st.memory.resolve_void(&place.ptr);
        let certain = match &ptr.target {
            PtrTarget::Null => Some(ExceptionKind::NullDereference),
            PtrTarget::Fixed(_) => Some(ExceptionKind::FixedMemoryAddress),
            PtrTarget::UnboundVoid(_) => Some(ExceptionKind::UnboundVoidAlias),
            PtrTarget::Void(_) => return Err(Stop::Unsupported("dereference of a void pointer".into())),
            PtrTarget::Object(_) => None,
        };
        if let Some(kind) = certain {
            self.check(st, kind, SymValue::int(1))?;
            return Ok(None);
        }
        let PtrTarget::Object(id) = ptr.target else { unreachable!() };
        if let Some(f) = &ptr.null_flag {
            self.check(st, ExceptionKind::NullDereference, f.truthy())?;
        }
        let total = i64::from(st.memory.object(id).total_size);
        let size = i64::from(self.program.size_of(&place.ty));
        let off = ptr.offset;
        let fault = SymValue::or(
            SymValue::cmp(BinOp::Lt, off.clone(), SymValue::offset(0)),
            SymValue::cmp(BinOp::Gt, off.clone(), SymValue::offset(total - size)),
        );
        self.check(st, ExceptionKind::ArrayOutOfBounds, fault)?;
        Ok(Some((id, off)))
    }

    fn load(&mut self, st: &mut ExecutionState, place: &Place) -> Result<Value, Stop> {
        let Some((id, off)) = self.access(st, place)? else {
            return Ok(match place.ty.int_ty() {
                Some(t) => Value::Int(SymValue::constant(t, 0)),
                None => Value::Ptr(null_ptr()),
            });
        };
        let size = self.program.size_of(&place.ty);
        if place.ty.is_pointer() {
            let o = self.concretize(st, &off)?;
            match st.memory.load(id, o, &place.ty, size) {
                Ok(Cell::Ptr(p)) => Ok(Value::Ptr(p.clone())),
                _ => Err(Stop::Unsupported("pointer read from a non-pointer cell".into())),
            }
        } else if place.ty.is_integer() {
            load_symbolic(&st.memory, id, &off, &place.ty, size)
                .map(Value::Int)
                .map_err(|e| Stop::Unsupported(e.to_string()))
        } else {
            Err(Stop::Unsupported("aggregate value".into()))
        }
    }

    fn store(&mut self, st: &mut ExecutionState, place: &Place, v: Value) -> Result<(), Stop> {
        let Some((id, off)) = self.access(st, place)? else { return Ok(()) };
        let size = self.program.size_of(&place.ty);
        let r = match v {
            Value::Int(v) => {
                let t = int_ty(&place.ty)?;
                store_symbolic(&mut st.memory, id, &off, &place.ty, size, v.cast(t))
            }
            Value::Ptr(p) => {
                let o = self.concretize(st, &off)?;
                st.memory.store(id, o, &place.ty, size, Cell::Ptr(p))
            }
        };
        r.map_err(|e| Stop::Unsupported(e.to_string()))
    }

    // ---- expressions ----

    fn eval(&mut self, st: &mut ExecutionState, e: &Expr) -> Result<Value, Stop> {
        match &e.kind {
            ExprKind::Const(v) if e.ty.is_pointer() => Ok(Value::Ptr(if *v == 0 {
                null_ptr()
            } else {
                SymPointer {
                    target: PtrTarget::Fixed(SymValue::offset(*v)),
                    offset: SymValue::offset(0),
                    null_flag: None,
                }
            })),
            ExprKind::Const(v) => Ok(Value::Int(SymValue::constant(int_ty(&e.ty)?, *v))),
            ExprKind::Var(_) | ExprKind::Index(..) | ExprKind::Field(..) | ExprKind::Deref(_) => {
                let p = self.place(st, e)?;
                self.load(st, &p)
            }
            ExprKind::Unary(op, a) => {
                let v = self.eval(st, a)?.int()?;
                Ok(Value::Int(SymValue::un(*op, int_ty(&e.ty)?, v)))
            }
            ExprKind::Binary(op, a, b) => {
                let t = int_ty(&a.ty)?;
                let va = self.eval(st, a)?.int()?;
                let vb = self.eval(st, b)?.int()?;
                if matches!(op, BinOp::Div | BinOp::Rem) {
                    let zero = SymValue::eq(vb.clone(), SymValue::constant(vb.ty(), 0));
                    self.check(st, ExceptionKind::DividedByZero, zero)?;
                }
                Ok(Value::Int(SymValue::bin(*op, t, va, vb).cast(int_ty(&e.ty)?)))
            }
            ExprKind::Logical(op, a, b) => {
                let va = self.eval(st, a)?.int()?.truthy();
                if has_call(b) {
                    return Err(Stop::Unsupported(
                        "call in the right operand of `&&` or `||` outside a condition".into(),
                    ));
                }
                let runs = match op {
                    LogicOp::And => va.clone(),
                    LogicOp::Or => va.falsy(),
                };
                let g = self.when_guarded(runs);
                self.guards.push(g);
                let vb = self.eval(st, b).and_then(Value::int);
                self.guards.pop();
                let vb = vb?.truthy();
                let r = match op {
                    LogicOp::And => SymValue::ite(va, vb, SymValue::int(0)),
                    LogicOp::Or => SymValue::ite(va, SymValue::int(1), vb),
                };
                Ok(Value::Int(r.cast(int_ty(&e.ty)?)))
            }
            ExprKind::LogNot(a) => {
                let c = match self.eval(st, a)? {
                    Value::Int(v) => v.falsy(),
                    Value::Ptr(p) => is_null(&p),
                };
                Ok(Value::Int(c.cast(int_ty(&e.ty)?)))
            }
            ExprKind::Cast(a) => self.cast(st, a, &e.ty),
            ExprKind::Decay(a) | ExprKind::AddrOf(a) => Ok(Value::Ptr(self.place(st, a)?.ptr)),
            ExprKind::PtrOffset { ptr, delta, negate } => {
                let p = self.eval(st, ptr)?.ptr()?;
                let d = self.eval(st, delta)?.int()?;
                let pointee = e.ty.pointee().ok_or_else(|| Stop::Unsupported("arithmetic on a void pointer".into()))?;
                let size = i64::from(self.program.size_of(pointee));
                let scaled = SymValue::bin(BinOp::Mul, IntTy::I64, d.cast(IntTy::I64), SymValue::offset(size));
                let op = if *negate { BinOp::Sub } else { BinOp::Add };
                let offset = SymValue::bin(op, IntTy::I64, p.offset.clone(), scaled);
                Ok(Value::Ptr(SymPointer { offset, ..p }))
            }
            ExprKind::PtrCompare(op, a, b) => {
                let pa = self.eval(st, a)?.ptr()?;
                let pb = self.eval(st, b)?.ptr()?;
                self.ptr_compare(st, *op, &pa, &pb).map(Value::Int)
            }
            ExprKind::Call(callee, args) => self.call(st, *callee, args, &e.ty),
        }
    }

    fn cast(&mut self, st: &mut ExecutionState, a: &Expr, to: &SubjectType) -> Result<Value, Stop> {
        let v = self.eval(st, a)?;
        Ok(match v {
            Value::Int(v) => match to.int_ty() {
                Some(t) => Value::Int(v.cast(t)),
                None => Value::Ptr(SymPointer {
                    target: PtrTarget::Fixed(v.cast(IntTy::I64)),
                    offset: SymValue::offset(0),
                    null_flag: None,
                }),
            },
            Value::Ptr(p) => match (&a.ty, to) {
                (SubjectType::Pointer(elem), SubjectType::VoidPointer) => Value::Ptr(st.memory.to_void(&p, elem)),
                (SubjectType::VoidPointer, SubjectType::Pointer(_)) => Value::Ptr(st.memory.resolve_void(&p)),
                (_, t) if t.is_pointer() => Value::Ptr(p),
                _ => return Err(Stop::Unsupported("cast from pointer to integer".into())),
            },
        })
    }

    fn ptr_compare(
        &mut self,
        st: &ExecutionState,
        op: BinOp,
        a: &SymPointer,
        b: &SymPointer,
    ) -> Result<SymValue, Stop> {
        let a = st.memory.resolve_void(a);
        let b = st.memory.resolve_void(b);
        let same_object = match (&a.target, &b.target) {
            (PtrTarget::Object(x), PtrTarget::Object(y)) => x == y,
            (PtrTarget::UnboundVoid(x), PtrTarget::UnboundVoid(y)) => x == y,
            _ => false,
        };
        let offsets = |op| SymValue::cmp(op, a.offset.clone(), b.offset.clone());
        match op {
            BinOp::Eq | BinOp::Ne => {
                let (na, nb) = (is_null(&a), is_null(&b));
                let same = match (&a.target, &b.target) {
                    _ if same_object => offsets(BinOp::Eq),
                    (PtrTarget::Fixed(x), PtrTarget::Fixed(y)) => SymValue::eq(
                        SymValue::bin(BinOp::Add, IntTy::I64, x.clone(), a.offset.clone()),
                        SymValue::bin(BinOp::Add, IntTy::I64, y.clone(), b.offset.clone()),
                    ),
                    _ => SymValue::int(0),
                };
                let both_null = SymValue::and(na.clone(), nb.clone());
                let neither = SymValue::and(SymValue::not(na), SymValue::not(nb));
                let eq = SymValue::or(both_null, SymValue::and(neither, same));
                Ok(if op == BinOp::Eq { eq } else { SymValue::not(eq) })
            }
            _ if same_object => Ok(offsets(op)),
            _ => Err(Stop::Unsupported("ordering comparison of pointers into different objects".into())),
        }
    }

    fn call(
        &mut self,
        st: &mut ExecutionState,
        callee: Callee,
        args: &[Expr],
        ret: &SubjectType,
    ) -> Result<Value, Stop> {
        if !self.guards.is_empty() {
            return Err(Stop::Unsupported("call inside a conditionally evaluated operand".into()));
        }
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(st, a)?);
        }
        if let Callee::Defined(id) = callee {
            let depth = st.frames.len() as u32 - 1;
            if depth < self.config.inline_depth && inlinable(&self.program.functions[id]) {
                return self.inline(st, id, vals);
            }
        }
        self.stub(st, callee, vals, ret)
    }

    fn inline(&mut self, st: &mut ExecutionState, id: FuncId, vals: Vec<Value>) -> Result<Value, Stop> {
        let p = self.program;
        let f = &p.functions[id];
        let mut frame = Frame::new(id, f.locals.len());
        for (i, (param, v)) in f.params.iter().zip(vals).enumerate() {
            let ls = leaves(p, &param.ty, 1, &Base::Named(param.name.clone()));
            let cell = match v {
                Value::Int(v) => Cell::Int(v.cast(int_ty(&param.ty)?)),
                Value::Ptr(q) => Cell::Ptr(q),
            };
            frame.vars[i] =
                Some(st.memory.allocate(p, &param.ty, 1, Origin::Local, &param.name, &ls, |_| cell.clone()));
        }
        st.frames.push(frame);
        let mut result = Ok(Value::Int(SymValue::int(0)));
        for s in &f.body {
            let r = match &s.kind {
                StmtKind::Return(Some(e)) => self.eval(st, e).map(|v| result = Ok(v)),
                _ => self.stmt(st, s),
            };
            if let Err(stop) = r {
                result = Err(stop);
                break;
            }
        }
        st.frames.pop();
        result
    }

    fn stub(
        &mut self,
        st: &mut ExecutionState,
        callee: Callee,
        vals: Vec<Value>,
        ret: &SubjectType,
    ) -> Result<Value, Stop> {
        let p = self.program;
        let name = p.callee_name(callee).to_string();
        let k = {
            let c = st.stub_counts.entry(name.clone()).or_insert(0);
            *c += 1;
            *c
        };
        let rname = stub_return_name(&name, k);
        let mut returns = Vec::new();
        let result = match ret {
            SubjectType::Void => Value::Int(SymValue::int(0)),
            t if t.is_pointer() => {
                let plan = input_plan(p, t, 1, Base::Named(rname.clone()), 0, 1);
                let mut src = Inputs { created: &mut returns };
                match leaf_cell(&mut st.memory, p, &plan.leaves[0].1, &mut src) {
                    Cell::Ptr(q) => Value::Ptr(q),
                    Cell::Int(_) => unreachable!("pointer leaf"),
                }
            }
            t => {
                returns.push(rname.clone());
                Value::Int(SymValue::input(&rname, int_ty(t)?, *t == SubjectType::Bool))
            }
        };
        let params = match callee {
            Callee::External(i) => &p.externals[i].params,
            Callee::Defined(i) => &p.functions[i].params,
        };
        let mut outs = Vec::new();
        for (param, v) in params.iter().zip(&vals) {
            let Value::Ptr(ptr) = v else { continue };
            let ptr = st.memory.resolve_void(ptr);
            let PtrTarget::Object(id) = ptr.target else { continue };
            let Ok(base) = u32::try_from(self.concretize(st, &ptr.offset)?) else { continue };
            let obj = st.memory.object_mut(id);
            for (&o, (ty, cell)) in obj.cells.range_mut(base..) {
                let (Some(t), Cell::Int(old)) = (ty.int_ty(), &mut *cell) else { continue };
                let sname = stub_out_name(&name, k, &param.name, o - base);
                let fresh = SymValue::input(&sname, t, *ty == SubjectType::Bool);
                *old = match &ptr.null_flag {
                    Some(f) => SymValue::ite(f.truthy(), old.clone(), fresh),
                    None => fresh,
                };
                outs.push(sname);
            }
        }
        st.stub_ledger.push(StubCall { callee: name, k, site: self.site, returns, outs });
        Ok(result)
    }
}
