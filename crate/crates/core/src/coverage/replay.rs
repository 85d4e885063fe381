//! Concrete execution of a test case over the CFG.
//!
//! Inputs are laid out with the same plans the engine uses, so every leaf
//! gets the value the test case assigns to its symbol. Stubs return their
//! recorded values and write their recorded out-values.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cfg::{Cfg, DecisionKind, NodeKind, Outcome};
use crate::engine::{inlinable, DecisionEval, ExceptionKind, ExceptionTag, Step, TestCase};
use crate::frontend::{Callee, Expr, ExprKind, FuncId, LogicOp, Program, Stmt, StmtKind, SubjectType, VarRef};
use crate::semantics::{self, BinOp, IntTy};
use crate::symcore::plan::{input_plan, leaves, stub_out_name, stub_return_name, symbolic_local_name, Base};
use crate::symcore::{
    leaf_cell, materialize, Cell, LeafSource, MemoryState, ObjectId, Origin, PointerValue, PtrTarget,
};

type Ptr = PointerValue<i64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReplayOptions {
    pub symbolic_locals: bool,
    pub inline_depth: u32,
    /// Node executions before the replay gives up.
    pub max_steps: usize,
}

impl Default for ReplayOptions {
    fn default() -> Self {
        ReplayOptions { symbolic_locals: false, inline_depth: 0, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayTrace {
    pub case: usize,
    /// Ends with the exit node, or the faulting node when there is an
    /// exception.
    pub steps: Vec<Step>,
    pub decisions: Vec<DecisionEval>,
    pub return_value: Option<i64>,
    pub exception: Option<ExceptionTag>,
}

impl ReplayTrace {
    pub fn edges(&self) -> std::collections::BTreeSet<usize> {
        self.steps.iter().filter_map(|s| s.edge).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ReplayError {
    #[error("no function named `{0}`")]
    NoSuchFunction(String),
    #[error("unsupported during replay: {0}")]
    Unsupported(String),
    #[error("replay exceeded {0} node executions")]
    StepLimit(usize),
}

#[derive(Clone, Debug)]
enum Val {
    Int(i64),
    Ptr(Ptr),
}

enum Halt {
    Fault(ExceptionKind, String),
    Error(ReplayError),
}

impl From<ReplayError> for Halt {
    fn from(e: ReplayError) -> Self {
        Halt::Error(e)
    }
}

fn unsupported(m: &str) -> Halt {
    Halt::Error(ReplayError::Unsupported(m.into()))
}

impl Val {
    fn int(self) -> Result<i64, Halt> {
        match self {
            Val::Int(v) => Ok(v),
            Val::Ptr(_) => Err(unsupported("pointer used as an integer")),
        }
    }

    fn ptr(self) -> Result<Ptr, Halt> {
        match self {
            Val::Ptr(p) => Ok(p),
            Val::Int(_) => Err(unsupported("integer used as a pointer")),
        }
    }
}

fn int_ty(t: &SubjectType) -> Result<IntTy, Halt> {
    t.int_ty().ok_or_else(|| unsupported("non-integer value where an integer is needed"))
}

fn null_ptr() -> Ptr {
    PointerValue { target: PtrTarget::Null, offset: 0, null_flag: None }
}

fn is_null(p: &Ptr) -> bool {
    match &p.target {
        PtrTarget::Null => true,
        PtrTarget::Fixed(a) => *a == 0,
        _ => p.null_flag.is_some_and(|f| f != 0),
    }
}

fn off_add(a: i64, b: i64) -> i64 {
    IntTy::I64.wrap(i128::from(a) + i128::from(b))
}

fn off_scale(d: i64, size: i64) -> i64 {
    IntTy::I64.wrap(i128::from(d) * i128::from(size))
}

struct Values<'c> {
    case: &'c TestCase,
}

impl LeafSource<i64> for Values<'_> {
    fn int(&mut self, name: &str, ty: IntTy, _boolean: bool) -> i64 {
        ty.wrap(i128::from(self.case.value(name)))
    }

    fn zero(&mut self) -> i64 {
        0
    }
}

struct Frame {
    function: FuncId,
    vars: Vec<Option<ObjectId>>,
    decls: Vec<u32>,
}

struct Machine<'a> {
    program: &'a Program,
    case: &'a TestCase,
    opts: &'a ReplayOptions,
    mem: MemoryState<i64>,
    frames: Vec<Frame>,
    globals: Vec<ObjectId>,
    stub_counts: BTreeMap<String, u32>,
    ret: Option<i64>,
}

/// Run `case` on the function `cfg` was built from.
pub fn replay(program: &Program, cfg: &Cfg, case: &TestCase, opts: &ReplayOptions) -> Result<ReplayTrace, ReplayError> {
    let fid = program
        .functions
        .iter()
        .position(|f| f.name == cfg.function)
        .ok_or_else(|| ReplayError::NoSuchFunction(cfg.function.clone()))?;
    let func = &program.functions[fid];
    let mut m = Machine {
        program,
        case,
        opts,
        mem: MemoryState::new(),
        frames: Vec::new(),
        globals: Vec::new(),
        stub_counts: BTreeMap::new(),
        ret: None,
    };
    let mut src = Values { case };
    for g in &program.globals {
        let plan = input_plan(program, &g.ty, 1, Base::Named(g.name.clone()), 0, 1);
        let id = materialize(&mut m.mem, program, &plan, Origin::Global, &g.name, &mut src);
        m.globals.push(id);
    }
    let mut frame = Frame { function: fid, vars: vec![None; func.locals.len()], decls: vec![0; func.locals.len()] };
    for (i, param) in func.params.iter().enumerate() {
        let plan = input_plan(program, &param.ty, 1, Base::Named(param.name.clone()), 0, param.extent);
        frame.vars[i] = Some(materialize(&mut m.mem, program, &plan, Origin::Param, &param.name, &mut src));
    }
    m.frames.push(frame);

    let mut trace =
        ReplayTrace { case: case.id, steps: Vec::new(), decisions: Vec::new(), return_value: None, exception: None };
    let mut current = cfg.entry;
    let mut executed = 0usize;
    loop {
        let node = &cfg.nodes[current];
        if node.kind == NodeKind::Exit {
            trace.steps.push(Step { node: current, edge: None });
            trace.return_value = if func.return_type.is_integer() { m.ret } else { None };
            return Ok(trace);
        }
        executed += 1;
        if executed > opts.max_steps {
            return Err(ReplayError::StepLimit(opts.max_steps));
        }
        let fault = |kind, stmt, witness| ExceptionTag { kind, node: current, stmt, witness };
        for (i, s) in node.stmts.iter().enumerate() {
            match m.stmt(s) {
                Ok(()) => {}
                Err(Halt::Fault(kind, w)) => {
                    trace.steps.push(Step { node: current, edge: None });
                    trace.exception = Some(fault(kind, i, w));
                    return Ok(trace);
                }
                Err(Halt::Error(e)) => return Err(e),
            }
        }
        let edge = if node.kind == NodeKind::Branch {
            let d = &cfg.decisions[node.decision.expect("branch nodes carry a decision")];
            let r = if d.kind == DecisionKind::Switch {
                m.eval(&d.expr).and_then(Val::int).map(|v| {
                    let e = cfg.switch_edge(current, v);
                    let outcome = cfg.edges[e].label.expect("labeled").outcome;
                    (e, DecisionEval { decision: d.id, atoms: Vec::new(), outcome })
                })
            } else {
                let mut atoms = vec![None; d.atoms.len()];
                d.formula
                    .eval(&mut |a| {
                        let v = m.eval(&d.atoms[a]).and_then(Val::int)? != 0;
                        atoms[a] = Some(v);
                        Ok(v)
                    })
                    .map(|t| {
                        let outcome = if t { Outcome::True } else { Outcome::False };
                        let e = cfg.edge_for(current, outcome).expect("both outcomes have an edge");
                        (e, DecisionEval { decision: d.id, atoms, outcome })
                    })
            };
            match r {
                Ok((e, eval)) => {
                    trace.decisions.push(eval);
                    e
                }
                Err(Halt::Fault(kind, w)) => {
                    trace.steps.push(Step { node: current, edge: None });
                    trace.exception = Some(fault(kind, node.stmts.len(), w));
                    return Ok(trace);
                }
                Err(Halt::Error(e)) => return Err(e),
            }
        } else {
            match cfg.succ[current].first() {
                Some(&e) => e,
                None => return Err(ReplayError::Unsupported("block without a successor".into())),
            }
        };
        trace.steps.push(Step { node: current, edge: Some(edge) });
        current = cfg.edges[edge].to;
    }
}

struct Place {
    ptr: Ptr,
    ty: SubjectType,
}

impl Machine<'_> {
    fn frame(&self) -> &Frame {
        self.frames.last().expect("an active frame")
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), Halt> {
        match &s.kind {
            StmtKind::Decl { var, init } => {
                let v = match init {
                    Some(e) => Some(self.eval(e)?),
                    None => None,
                };
                self.declare(*var);
                if let Some(v) = v {
                    let ty = self.program.functions[self.frame().function].locals[*var].ty.clone();
                    let place = self.var_place(VarRef::Local(*var), &ty)?;
                    self.store(&place, v)?;
                }
                Ok(())
            }
            StmtKind::Assign { target, value } => {
                let place = self.place(target)?;
                let v = self.eval(value)?;
                self.store(&place, v)
            }
            StmtKind::Expr(e) => self.eval(e).map(|_| ()),
            StmtKind::Return(Some(e)) => {
                let v = self.eval(e)?;
                if self.frames.len() == 1 {
                    self.ret = match v {
                        Val::Int(v) => Some(v),
                        Val::Ptr(_) => None,
                    };
                }
                Ok(())
            }
            StmtKind::Return(None) => Ok(()),
            _ => Err(unsupported("compound statement inside a block")),
        }
    }

    fn declare(&mut self, var: usize) {
        let p = self.program;
        let lv = &p.functions[self.frame().function].locals[var];
        let symbolic = self.opts.symbolic_locals && self.frames.len() == 1;
        let frame = self.frames.last_mut().expect("an active frame");
        frame.decls[var] += 1;
        let n = frame.decls[var];
        let ls = leaves(p, &lv.ty, 1, &Base::Named(lv.name.clone()));
        let mut cells = BTreeMap::new();
        for l in &ls {
            let cell = match l.ty.int_ty() {
                None => Cell::Ptr(null_ptr()),
                Some(t) if symbolic => Cell::Int(t.wrap(i128::from(self.case.value(&symbolic_local_name(&l.path, n))))),
                Some(_) => Cell::Int(0),
            };
            cells.insert(l.offset, cell);
        }
        match self.frame().vars[var] {
            Some(id) => self.mem.reinit(id, |off, _| cells[&off].clone()),
            None => {
                let id = self.mem.allocate(p, &lv.ty, 1, Origin::Local, &lv.name, &ls, |l| cells[&l.offset].clone());
                self.frames.last_mut().expect("an active frame").vars[var] = Some(id);
            }
        }
    }

    fn var_place(&self, v: VarRef, ty: &SubjectType) -> Result<Place, Halt> {
        let id = match v {
            VarRef::Local(i) => {
                self.frame().vars[i].ok_or_else(|| unsupported("variable used before its declaration"))?
            }
            VarRef::Global(g) => self.globals[g],
        };
        Ok(Place { ptr: PointerValue { target: PtrTarget::Object(id), offset: 0, null_flag: None }, ty: ty.clone() })
    }

    fn place(&mut self, e: &Expr) -> Result<Place, Halt> {
        match &e.kind {
            ExprKind::Var(v) => self.var_place(*v, &e.ty),
            ExprKind::Index(base, idx) => {
                let p = self.eval(base)?.ptr()?;
                let i = self.eval(idx)?.int()?;
                let size = i64::from(self.program.size_of(&e.ty));
                let offset = off_add(p.offset, off_scale(i, size));
                Ok(Place { ptr: PointerValue { offset, ..p }, ty: e.ty.clone() })
            }
            ExprKind::Field(base, fi) => {
                let p = self.place(base)?;
                let SubjectType::Record(r) = &base.ty else {
                    return Err(unsupported("field of a non-record"));
                };
                let fo = i64::from(self.program.layout_of(*r).field_offsets[*fi].1);
                Ok(Place { ptr: PointerValue { offset: off_add(p.ptr.offset, fo), ..p.ptr }, ty: e.ty.clone() })
            }
            ExprKind::Deref(inner) => {
                let p = self.eval(inner)?.ptr()?;
                Ok(Place { ptr: p, ty: e.ty.clone() })
            }
            _ => Err(unsupported("assignment to a non-lvalue")),
        }
    }

    fn access(&self, place: &Place) -> Result<(ObjectId, i64), Halt> {
        let ptr = self.mem.resolve_void(&place.ptr);
        let id = match &ptr.target {
            PtrTarget::Null => return Err(Halt::Fault(ExceptionKind::NullDereference, "null pointer".into())),
            PtrTarget::Fixed(a) => {
                return Err(Halt::Fault(
                    ExceptionKind::FixedMemoryAddress,
                    format!("address {:#x}", off_add(*a, ptr.offset)),
                ))
            }
            PtrTarget::UnboundVoid(_) => {
                return Err(Halt::Fault(ExceptionKind::UnboundVoidAlias, "void pointer without an alias".into()))
            }
            PtrTarget::Void(_) => return Err(unsupported("dereference of a void pointer")),
            PtrTarget::Object(id) => *id,
        };
        if ptr.null_flag.is_some_and(|f| f != 0) {
            return Err(Halt::Fault(ExceptionKind::NullDereference, "null pointer input".into()));
        }
        let total = i64::from(self.mem.object(id).total_size);
        let size = i64::from(self.program.size_of(&place.ty));
        if ptr.offset < 0 || ptr.offset > total - size {
            let obj = &self.mem.object(id).name;
            return Err(Halt::Fault(
                ExceptionKind::ArrayOutOfBounds,
                format!("byte offset {} in `{obj}` of {total} bytes", ptr.offset),
            ));
        }
        Ok((id, ptr.offset))
    }

    fn load(&self, place: &Place) -> Result<Val, Halt> {
        let (id, off) = self.access(place)?;
        let size = self.program.size_of(&place.ty);
        let cell = self.mem.load(id, off, &place.ty, size).map_err(|e| unsupported(&e.to_string()))?;
        match cell {
            Cell::Ptr(p) if place.ty.is_pointer() => Ok(Val::Ptr(p.clone())),
            Cell::Int(v) if place.ty.is_integer() => Ok(Val::Int(semantics::cast(int_ty(&place.ty)?, *v))),
            _ => Err(unsupported("value of the wrong kind in memory")),
        }
    }

    fn store(&mut self, place: &Place, v: Val) -> Result<(), Halt> {
        let (id, off) = self.access(place)?;
        let size = self.program.size_of(&place.ty);
        let cell = match v {
            Val::Int(v) => Cell::Int(semantics::cast(int_ty(&place.ty)?, v)),
            Val::Ptr(p) => Cell::Ptr(p),
        };
        self.mem.store(id, off, &place.ty, size, cell).map_err(|e| unsupported(&e.to_string()))
    }

    fn eval(&mut self, e: &Expr) -> Result<Val, Halt> {
        match &e.kind {
            ExprKind::Const(v) if e.ty.is_pointer() => Ok(Val::Ptr(if *v == 0 {
                null_ptr()
            } else {
                PointerValue { target: PtrTarget::Fixed(*v), offset: 0, null_flag: None }
            })),
            ExprKind::Const(v) => Ok(Val::Int(semantics::cast(int_ty(&e.ty)?, *v))),
            ExprKind::Var(_) | ExprKind::Index(..) | ExprKind::Field(..) | ExprKind::Deref(_) => {
                let p = self.place(e)?;
                self.load(&p)
            }
            ExprKind::Unary(op, a) => {
                let v = self.eval(a)?.int()?;
                let t = int_ty(&e.ty)?;
                let v = if *op == crate::semantics::UnOp::Not { v } else { semantics::cast(t, v) };
                Ok(Val::Int(semantics::unop(*op, t, v)))
            }
            ExprKind::Binary(op, a, b) => {
                let t = int_ty(&a.ty)?;
                let va = self.eval(a)?.int()?;
                let vb = self.eval(b)?.int()?;
                if matches!(op, BinOp::Div | BinOp::Rem) && vb == 0 {
                    return Err(Halt::Fault(ExceptionKind::DividedByZero, format!("{} {} 0", va, op.symbol())));
                }
                let r = semantics::binop(*op, t, semantics::cast(t, va), semantics::cast(t, vb))
                    .map_err(|_| Halt::Fault(ExceptionKind::DividedByZero, "division by zero".into()))?;
                Ok(Val::Int(semantics::cast(int_ty(&e.ty)?, r)))
            }
            ExprKind::Logical(op, a, b) => {
                let va = self.eval(a)?.int()? != 0;
                let r = match (op, va) {
                    (LogicOp::And, false) => false,
                    (LogicOp::Or, true) => true,
                    _ => self.eval(b)?.int()? != 0,
                };
                Ok(Val::Int(semantics::cast(int_ty(&e.ty)?, i64::from(r))))
            }
            ExprKind::LogNot(a) => {
                let c = match self.eval(a)? {
                    Val::Int(v) => v == 0,
                    Val::Ptr(p) => is_null(&p),
                };
                Ok(Val::Int(semantics::cast(int_ty(&e.ty)?, i64::from(c))))
            }
            ExprKind::Cast(a) => {
                let v = self.eval(a)?;
                Ok(match v {
                    Val::Int(v) => match e.ty.int_ty() {
                        Some(t) => Val::Int(semantics::cast(t, v)),
                        None => Val::Ptr(PointerValue { target: PtrTarget::Fixed(v), offset: 0, null_flag: None }),
                    },
                    Val::Ptr(p) => match (&a.ty, &e.ty) {
                        (SubjectType::Pointer(elem), SubjectType::VoidPointer) => Val::Ptr(self.mem.to_void(&p, elem)),
                        (SubjectType::VoidPointer, SubjectType::Pointer(_)) => Val::Ptr(self.mem.resolve_void(&p)),
                        (_, t) if t.is_pointer() => Val::Ptr(p),
                        _ => return Err(unsupported("cast from pointer to integer")),
                    },
                })
            }
            ExprKind::Decay(a) | ExprKind::AddrOf(a) => Ok(Val::Ptr(self.place(a)?.ptr)),
            ExprKind::PtrOffset { ptr, delta, negate } => {
                let p = self.eval(ptr)?.ptr()?;
                let d = self.eval(delta)?.int()?;
                let pointee = e.ty.pointee().ok_or_else(|| unsupported("arithmetic on a void pointer"))?;
                let scaled = off_scale(d, i64::from(self.program.size_of(pointee)));
                let offset = if *negate {
                    IntTy::I64.wrap(i128::from(p.offset) - i128::from(scaled))
                } else {
                    off_add(p.offset, scaled)
                };
                Ok(Val::Ptr(PointerValue { offset, ..p }))
            }
            ExprKind::PtrCompare(op, a, b) => {
                let pa = self.eval(a)?.ptr()?;
                let pb = self.eval(b)?.ptr()?;
                self.ptr_compare(*op, &pa, &pb).map(|r| Val::Int(i64::from(r)))
            }
            ExprKind::Call(callee, args) => self.call(*callee, args, &e.ty),
        }
    }

    fn ptr_compare(&self, op: BinOp, a: &Ptr, b: &Ptr) -> Result<bool, Halt> {
        let a = self.mem.resolve_void(a);
        let b = self.mem.resolve_void(b);
        let same_object = match (&a.target, &b.target) {
            (PtrTarget::Object(x), PtrTarget::Object(y)) => x == y,
            (PtrTarget::UnboundVoid(x), PtrTarget::UnboundVoid(y)) => x == y,
            _ => false,
        };
        match op {
            BinOp::Eq | BinOp::Ne => {
                let (na, nb) = (is_null(&a), is_null(&b));
                let same = match (&a.target, &b.target) {
                    _ if same_object => a.offset == b.offset,
                    (PtrTarget::Fixed(x), PtrTarget::Fixed(y)) => off_add(*x, a.offset) == off_add(*y, b.offset),
                    _ => false,
                };
                let eq = (na && nb) || (!na && !nb && same);
                Ok(if op == BinOp::Eq { eq } else { !eq })
            }
            _ if same_object => Ok(semantics::binop(op, IntTy::I64, a.offset, b.offset).expect("comparison") != 0),
            _ => Err(unsupported("ordering comparison of pointers into different objects")),
        }
    }

    fn call(&mut self, callee: Callee, args: &[Expr], ret: &SubjectType) -> Result<Val, Halt> {
        let mut vals = Vec::with_capacity(args.len());
        for a in args {
            vals.push(self.eval(a)?);
        }
        if let Callee::Defined(id) = callee {
            let depth = self.frames.len() as u32 - 1;
            if depth < self.opts.inline_depth && inlinable(&self.program.functions[id]) {
                return self.inline(id, vals);
            }
        }
        self.stub(callee, vals, ret)
    }

    fn inline(&mut self, id: FuncId, vals: Vec<Val>) -> Result<Val, Halt> {
        let p = self.program;
        let f = &p.functions[id];
        let mut frame = Frame { function: id, vars: vec![None; f.locals.len()], decls: vec![0; f.locals.len()] };
        for (i, (param, v)) in f.params.iter().zip(vals).enumerate() {
            let ls = leaves(p, &param.ty, 1, &Base::Named(param.name.clone()));
            let cell = match v {
                Val::Int(v) => Cell::Int(semantics::cast(int_ty(&param.ty)?, v)),
                Val::Ptr(q) => Cell::Ptr(q),
            };
            frame.vars[i] = Some(self.mem.allocate(p, &param.ty, 1, Origin::Local, &param.name, &ls, |_| cell.clone()));
        }
        self.frames.push(frame);
        let mut result = Ok(Val::Int(0));
        for s in &f.body {
            let r = match &s.kind {
                StmtKind::Return(Some(e)) => self.eval(e).map(|v| result = Ok(v)),
                _ => self.stmt(s),
            };
            if let Err(h) = r {
                result = Err(h);
                break;
            }
        }
        self.frames.pop();
        result
    }

    fn stub(&mut self, callee: Callee, vals: Vec<Val>, ret: &SubjectType) -> Result<Val, Halt> {
        let p = self.program;
        let name = p.callee_name(callee).to_string();
        let k = {
            let c = self.stub_counts.entry(name.clone()).or_insert(0);
            *c += 1;
            *c
        };
        let rname = stub_return_name(&name, k);
        let result = match ret {
            SubjectType::Void => Val::Int(0),
            t if t.is_pointer() => {
                let plan = input_plan(p, t, 1, Base::Named(rname.clone()), 0, 1);
                let mut src = Values { case: self.case };
                match leaf_cell(&mut self.mem, p, &plan.leaves[0].1, &mut src) {
                    Cell::Ptr(q) => Val::Ptr(q),
                    Cell::Int(_) => unreachable!("pointer leaf"),
                }
            }
            t => Val::Int(int_ty(t)?.wrap(i128::from(self.case.value(&rname)))),
        };
        let params = match callee {
            Callee::External(i) => &p.externals[i].params,
            Callee::Defined(i) => &p.functions[i].params,
        };
        for (param, v) in params.iter().zip(&vals) {
            let Val::Ptr(ptr) = v else { continue };
            let ptr = self.mem.resolve_void(ptr);
            let PtrTarget::Object(id) = ptr.target else { continue };
            if ptr.null_flag.is_some_and(|f| f != 0) {
                continue;
            }
            let Ok(base) = u32::try_from(ptr.offset) else { continue };
            let case = self.case;
            let obj = self.mem.object_mut(id);
            for (&o, (ty, cell)) in obj.cells.range_mut(base..) {
                let (Some(t), Cell::Int(old)) = (ty.int_ty(), &mut *cell) else { continue };
                *old = t.wrap(i128::from(case.value(&stub_out_name(&name, k, &param.name, o - base))));
            }
        }
        Ok(result)
    }
}
