//! Name resolution, typing, implicit conversions and desugaring of the raw
//! syntax tree into the typed AST.

use std::collections::{HashMap, HashSet};

use super::ast::*;
use super::layout::{collect_records, lay_out, size_align_with};
use super::parser::{BaseType, Item, RawArm, RawDeclarator, RawExpr, RawExprKind, RawInit, RawLabel, RawStmt, RawType};
use super::{Diagnostic, Pos};
use crate::semantics::{self, BinOp, IntTy, UnOp};

pub fn check(items: Vec<Item>) -> Result<Program, Diagnostic> {
    let mut c = Checker::default();
    c.declare_tags(&items)?;
    c.declarations(&items)?;
    c.compute_layouts()?;
    c.bodies(&items)?;
    Ok(c.program)
}

#[derive(Default)]
struct Checker {
    program: Program,
    typedefs: HashMap<String, SubjectType>,
    record_ids: HashMap<String, RecordId>,
    record_fields_done: Vec<bool>,
    enum_ids: HashMap<String, EnumId>,
    enum_consts: HashMap<String, i64>,
    globals: HashMap<String, GlobalId>,
    funcs: HashMap<String, Callee>,
    ordinary: HashSet<String>,
    layouts_ready: bool,
    func: Option<FnCtx>,
}

struct FnCtx {
    locals: Vec<LocalVar>,
    scopes: Vec<HashMap<String, VarId>>,
    ret: SubjectType,
    loops: usize,
    switches: usize,
}

fn mk(kind: ExprKind, ty: SubjectType, pos: Pos) -> Expr {
    Expr { kind, ty, pos }
}

fn int_const(v: i64, ty: IntTy, pos: Pos) -> Expr {
    mk(ExprKind::Const(v), SubjectType::Int(ty), pos)
}

fn is_boolean_valued(e: &Expr) -> bool {
    e.ty == SubjectType::Int(IntTy::I32)
        && match &e.kind {
            ExprKind::Binary(op, ..) => op.is_boolean(),
            ExprKind::Logical(..) | ExprKind::LogNot(_) | ExprKind::PtrCompare(..) => true,
            ExprKind::Const(v) => *v == 0 || *v == 1,
            _ => false,
        }
}

fn describe(ty: &SubjectType, p: &Program) -> String {
    match ty {
        SubjectType::Int(t) => t.to_string(),
        SubjectType::Bool => "bool".into(),
        SubjectType::Enum(id) => format!("enum {}", p.enums[*id].name),
        SubjectType::Pointer(t) => format!("{}*", describe(t, p)),
        SubjectType::VoidPointer => "void*".into(),
        SubjectType::Array(t, n) => format!("{}[{n}]", describe(t, p)),
        SubjectType::Record(id) => format!("struct {}", p.records[*id].name),
        SubjectType::Void => "void".into(),
    }
}

impl Checker {
    fn declare_ordinary(&mut self, name: &str, pos: Pos) -> Result<(), Diagnostic> {
        if !self.ordinary.insert(name.to_string()) {
            return Err(Diagnostic::type_error(pos, format!("redefinition of `{name}`")));
        }
        Ok(())
    }

    fn declare_tags(&mut self, items: &[Item]) -> Result<(), Diagnostic> {
        for item in items {
            match item {
                Item::Struct { name, pos, .. } => {
                    if self.record_ids.contains_key(name) {
                        return Err(Diagnostic::type_error(*pos, format!("redefinition of struct `{name}`")));
                    }
                    self.record_ids.insert(name.clone(), self.program.records.len());
                    self.program.records.push(RecordDecl {
                        name: name.clone(),
                        fields: Vec::new(),
                        layout: None,
                        pos: *pos,
                    });
                    self.record_fields_done.push(false);
                }
                Item::Enum { name, pos, .. } => {
                    if self.enum_ids.contains_key(name) {
                        return Err(Diagnostic::type_error(*pos, format!("redefinition of enum `{name}`")));
                    }
                    self.enum_ids.insert(name.clone(), self.program.enums.len());
                    self.program.enums.push(EnumDecl { name: name.clone(), variants: Vec::new(), pos: *pos });
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn declarations(&mut self, items: &[Item]) -> Result<(), Diagnostic> {
        let defined: HashSet<&str> = items
            .iter()
            .filter_map(|i| match i {
                Item::Function { name, body: Some(_), .. } => Some(name.as_str()),
                _ => None,
            })
            .collect();
        let mut sigs: HashMap<String, (Vec<Param>, SubjectType, bool)> = HashMap::new();
        for item in items {
            match item {
                Item::Enum { name, variants, .. } => {
                    let id = self.enum_ids[name];
                    let mut next = 0i64;
                    for (v, value, pos) in variants {
                        self.declare_ordinary(v, *pos)?;
                        if let Some(e) = value {
                            next = self.const_int(e)?;
                        }
                        if !IntTy::I32.contains(i128::from(next)) {
                            return Err(Diagnostic::type_error(*pos, format!("enumerator `{v}` does not fit in int")));
                        }
                        self.program.enums[id].variants.push((v.clone(), next));
                        self.enum_consts.insert(v.clone(), next);
                        next += 1;
                    }
                }
                Item::Typedef { name, ty, pos } => {
                    let t = self.resolve(ty, *pos)?;
                    self.declare_ordinary(name, *pos)?;
                    self.typedefs.insert(name.clone(), t);
                }
                Item::Struct { name, fields, pos } => {
                    let id = self.record_ids[name];
                    if fields.is_empty() {
                        return Err(Diagnostic::type_error(*pos, format!("struct `{name}` has no fields")));
                    }
                    let mut seen = HashSet::new();
                    let mut out = Vec::new();
                    for f in fields {
                        if f.init.is_some() {
                            return Err(Diagnostic::syntax(f.pos, "field cannot have an initializer"));
                        }
                        if !seen.insert(f.name.clone()) {
                            return Err(Diagnostic::type_error(f.pos, format!("duplicate field `{}`", f.name)));
                        }
                        let ty = self.resolve_object(&f.ty, f.pos)?;
                        out.push(FieldDecl { name: f.name.clone(), ty });
                    }
                    self.program.records[id].fields = out;
                    self.record_fields_done[id] = true;
                }
                Item::Global(d) => {
                    if d.init.is_some() {
                        return Err(Diagnostic::unsupported(d.pos, "global initializer"));
                    }
                    let ty = self.resolve_object(&d.ty, d.pos)?;
                    self.declare_ordinary(&d.name, d.pos)?;
                    self.globals.insert(d.name.clone(), self.program.globals.len());
                    self.program.globals.push(VarDecl { name: d.name.clone(), ty, pos: d.pos });
                }
                Item::Function { name, ret, params, body, pos } => {
                    let rt = self.resolve(ret, *pos)?;
                    if matches!(rt, SubjectType::Array(..)) {
                        return Err(Diagnostic::type_error(*pos, "function cannot return an array"));
                    }
                    if matches!(rt, SubjectType::Record(_)) {
                        return Err(Diagnostic::unsupported(*pos, "function returning a record"));
                    }
                    let mut ps = Vec::new();
                    for (i, p) in params.iter().enumerate() {
                        let t = self.resolve(&p.ty, p.pos)?;
                        let (ty, extent) = match t {
                            SubjectType::Array(elem, n) => (pointer_to(*elem), n),
                            SubjectType::Void => return Err(Diagnostic::type_error(p.pos, "parameter has type void")),
                            t => (t, 1),
                        };
                        let pname = match &p.name {
                            Some(n) => n.clone(),
                            None if body.is_some() => {
                                return Err(Diagnostic::syntax(
                                    p.pos,
                                    format!("parameter {} of `{name}` has no name", i + 1),
                                ))
                            }
                            None => String::new(),
                        };
                        ps.push(Param { name: pname, ty, extent });
                    }
                    let has_body = body.is_some();
                    match sigs.get_mut(name) {
                        Some((old_ps, old_rt, old_body)) => {
                            let same = *old_rt == rt
                                && old_ps.len() == ps.len()
                                && old_ps.iter().zip(&ps).all(|(a, b)| a.ty == b.ty);
                            if !same {
                                return Err(Diagnostic::type_error(
                                    *pos,
                                    format!("conflicting declarations of `{name}`"),
                                ));
                            }
                            if *old_body && has_body {
                                return Err(Diagnostic::type_error(*pos, format!("redefinition of `{name}`")));
                            }
                            if has_body {
                                *old_ps = ps.clone();
                                *old_body = true;
                            }
                        }
                        None => {
                            self.declare_ordinary(name, *pos)?;
                            sigs.insert(name.clone(), (ps.clone(), rt.clone(), has_body));
                            if defined.contains(name.as_str()) {
                                self.funcs.insert(name.clone(), Callee::Defined(usize::MAX));
                            } else {
                                self.funcs.insert(name.clone(), Callee::External(self.program.externals.len()));
                                self.program.externals.push(FunctionDecl {
                                    name: name.clone(),
                                    params: ps.clone(),
                                    return_type: rt.clone(),
                                    pos: *pos,
                                });
                            }
                        }
                    }
                }
            }
        }
        // Defined functions are numbered in order of their definitions.
        for item in items {
            if let Item::Function { name, body: Some(_), pos, .. } = item {
                let id = self.program.functions.len();
                self.funcs.insert(name.clone(), Callee::Defined(id));
                let (params, rt, _) = sigs[name].clone();
                self.program.functions.push(FunctionDef {
                    name: name.clone(),
                    params,
                    return_type: rt,
                    body: Vec::new(),
                    locals: Vec::new(),
                    pos: *pos,
                });
            }
        }
        Ok(())
    }

    fn compute_layouts(&mut self) -> Result<(), Diagnostic> {
        // Reject records that contain themselves by value.
        let n = self.program.records.len();
        let mut state = vec![0u8; n];
        fn visit(p: &Program, id: usize, state: &mut Vec<u8>) -> Result<(), Diagnostic> {
            match state[id] {
                1 => {
                    let r = &p.records[id];
                    return Err(Diagnostic::type_error(r.pos, format!("struct `{}` contains itself by value", r.name)));
                }
                2 => return Ok(()),
                _ => {}
            }
            state[id] = 1;
            for f in &p.records[id].fields {
                let mut deps = Vec::new();
                collect_records(&f.ty, &mut deps);
                for d in deps {
                    visit(p, d, state)?;
                }
            }
            state[id] = 2;
            Ok(())
        }
        for id in 0..n {
            visit(&self.program, id, &mut state)?;
        }
        self.program = super::layout::layout(std::mem::take(&mut self.program));
        self.layouts_ready = true;
        Ok(())
    }

    fn bodies(&mut self, items: &[Item]) -> Result<(), Diagnostic> {
        for item in items {
            let Item::Function { name, body: Some(body), .. } = item else { continue };
            let Callee::Defined(id) = self.funcs[name] else { unreachable!("defined function") };
            let f = &self.program.functions[id];
            let mut ctx = FnCtx {
                locals: Vec::new(),
                scopes: vec![HashMap::new()],
                ret: f.return_type.clone(),
                loops: 0,
                switches: 0,
            };
            for (i, p) in f.params.iter().enumerate() {
                if ctx.scopes[0].insert(p.name.clone(), i).is_some() {
                    return Err(Diagnostic::type_error(f.pos, format!("duplicate parameter `{}`", p.name)));
                }
                ctx.locals.push(LocalVar { name: p.name.clone(), ty: p.ty.clone(), pos: f.pos });
            }
            self.func = Some(ctx);
            let block = self.stmts(body)?;
            let ctx = self.func.take().expect("function context");
            let f = &mut self.program.functions[id];
            f.body = block;
            f.locals = ctx.locals;
        }
        Ok(())
    }

    // ---- types ----

    fn resolve(&self, ty: &RawType, pos: Pos) -> Result<SubjectType, Diagnostic> {
        Ok(match ty {
            RawType::Base(b) => match b {
                BaseType::Int(t) => SubjectType::Int(*t),
                BaseType::Bool => SubjectType::Bool,
                BaseType::Void => SubjectType::Void,
                BaseType::Struct(n) => SubjectType::Record(
                    *self
                        .record_ids
                        .get(n)
                        .ok_or_else(|| Diagnostic::type_error(pos, format!("unknown struct `{n}`")))?,
                ),
                BaseType::Enum(n) => SubjectType::Enum(
                    *self.enum_ids.get(n).ok_or_else(|| Diagnostic::type_error(pos, format!("unknown enum `{n}`")))?,
                ),
                BaseType::Named(n) => self
                    .typedefs
                    .get(n)
                    .cloned()
                    .ok_or_else(|| Diagnostic::type_error(pos, format!("unknown type `{n}`")))?,
            },
            RawType::Pointer(t) => pointer_to(self.resolve(t, pos)?),
            RawType::Array(t, n) => {
                let elem = self.resolve(t, pos)?;
                if elem == SubjectType::Void {
                    return Err(Diagnostic::type_error(pos, "array of void"));
                }
                let count = self.const_int(n)?;
                if count <= 0 || count > i64::from(u16::MAX) {
                    return Err(Diagnostic::type_error(n.pos, format!("array size {count} out of range")));
                }
                SubjectType::Array(Box::new(elem), count as u32)
            }
        })
    }

    /// Type of a variable or field; void is rejected.
    fn resolve_object(&self, ty: &RawType, pos: Pos) -> Result<SubjectType, Diagnostic> {
        let t = self.resolve(ty, pos)?;
        if t == SubjectType::Void {
            return Err(Diagnostic::type_error(pos, "variable has type void"));
        }
        Ok(t)
    }

    fn size_of(&self, ty: &SubjectType, pos: Pos) -> Result<u32, Diagnostic> {
        if *ty == SubjectType::Void {
            return Err(Diagnostic::type_error(pos, "sizeof applied to void"));
        }
        if self.layouts_ready {
            return Ok(super::layout::size_align(&self.program, ty).0);
        }
        // Before all layouts exist (array dimensions), compute on demand.
        fn rec_sa(c: &Checker, id: usize, depth: usize, pos: Pos) -> Result<(u32, u32), Diagnostic> {
            if !c.record_fields_done[id] || depth > 64 {
                return Err(Diagnostic::type_error(pos, "sizeof applied to an incomplete struct"));
            }
            let mut fields = Vec::new();
            for f in &c.program.records[id].fields {
                let mut deps = Vec::new();
                collect_records(&f.ty, &mut deps);
                let mut sizes = HashMap::new();
                for d in deps {
                    sizes.insert(d, rec_sa(c, d, depth + 1, pos)?);
                }
                fields.push((f.name.clone(), size_align_with(&f.ty, &|r| sizes[&r])));
            }
            let l = lay_out(&fields);
            Ok((l.total_size, l.alignment))
        }
        let mut deps = Vec::new();
        collect_records(ty, &mut deps);
        let mut sizes = HashMap::new();
        for d in deps {
            sizes.insert(d, rec_sa(self, d, 0, pos)?);
        }
        Ok(size_align_with(ty, &|r| sizes[&r]).0)
    }

    fn const_int(&self, e: &RawExpr) -> Result<i64, Diagnostic> {
        let t = self.expr(e)?;
        match (&t.kind, t.ty.is_integer()) {
            (ExprKind::Const(v), true) => Ok(*v),
            _ => Err(Diagnostic::type_error(e.pos, "expected an integer constant expression")),
        }
    }

    // ---- expressions ----

    fn lookup_var(&self, name: &str) -> Option<(VarRef, SubjectType)> {
        if let Some(ctx) = &self.func {
            for scope in ctx.scopes.iter().rev() {
                if let Some(&id) = scope.get(name) {
                    return Some((VarRef::Local(id), ctx.locals[id].ty.clone()));
                }
            }
        }
        self.globals.get(name).map(|&g| (VarRef::Global(g), self.program.globals[g].ty.clone()))
    }

    fn expr(&self, e: &RawExpr) -> Result<Expr, Diagnostic> {
        let pos = e.pos;
        Ok(match &e.kind {
            RawExprKind::Int(v, unsigned) => {
                let ty = if *unsigned || *v > i32::MAX as u64 { IntTy::U32 } else { IntTy::I32 };
                int_const(*v as i64, ty, pos)
            }
            RawExprKind::Ident(name) => {
                if let Some((r, ty)) = self.lookup_var(name) {
                    mk(ExprKind::Var(r), ty, pos)
                } else if let Some(&v) = self.enum_consts.get(name) {
                    int_const(v, IntTy::I32, pos)
                } else if name == "NULL" {
                    mk(ExprKind::Const(0), SubjectType::VoidPointer, pos)
                } else if self.funcs.contains_key(name) {
                    return Err(Diagnostic::unsupported(pos, format!("function `{name}` used as a value")));
                } else {
                    return Err(Diagnostic::type_error(pos, format!("undeclared identifier `{name}`")));
                }
            }
            RawExprKind::Unary(op, inner) => {
                let a = self.expr(inner)?;
                match *op {
                    "-" | "~" | "+" => {
                        let a = self.promoted(a, op)?;
                        if *op == "+" {
                            return Ok(a);
                        }
                        let uop = if *op == "-" { UnOp::Neg } else { UnOp::BitNot };
                        let t = a.ty.int_ty().expect("promoted integer");
                        match a.kind {
                            ExprKind::Const(v) => int_const(semantics::unop(uop, t, v), t, pos),
                            _ => mk(ExprKind::Unary(uop, Box::new(a)), SubjectType::Int(t), pos),
                        }
                    }
                    "!" => {
                        let a = self.cond(a)?;
                        match a.kind {
                            ExprKind::Const(v) if a.ty.is_integer() => int_const((v == 0) as i64, IntTy::I32, pos),
                            _ => mk(ExprKind::LogNot(Box::new(a)), SubjectType::Int(IntTy::I32), pos),
                        }
                    }
                    "*" => {
                        let a = self.rvalue(a);
                        match &a.ty {
                            SubjectType::Pointer(t) => {
                                let t = (**t).clone();
                                mk(ExprKind::Deref(Box::new(a)), t, pos)
                            }
                            SubjectType::VoidPointer => {
                                return Err(Diagnostic::type_error(pos, "dereference of a void pointer"))
                            }
                            t => {
                                return Err(Diagnostic::type_error(
                                    pos,
                                    format!("dereference of non-pointer type {}", describe(t, &self.program)),
                                ))
                            }
                        }
                    }
                    _ => {
                        if !a.is_lvalue() {
                            return Err(Diagnostic::type_error(pos, "address of a non-lvalue"));
                        }
                        let t = pointer_to(a.ty.clone());
                        mk(ExprKind::AddrOf(Box::new(a)), t, pos)
                    }
                }
            }
            RawExprKind::Binary(op, l, r) => {
                let a = self.rvalue(self.expr(l)?);
                let b = self.rvalue(self.expr(r)?);
                self.binary(*op, a, b, pos)?
            }
            RawExprKind::And(l, r) | RawExprKind::Or(l, r) => {
                let op = if matches!(e.kind, RawExprKind::And(..)) { LogicOp::And } else { LogicOp::Or };
                let a = self.cond(self.expr(l)?)?;
                let b = self.cond(self.expr(r)?)?;
                mk(ExprKind::Logical(op, Box::new(a), Box::new(b)), SubjectType::Int(IntTy::I32), pos)
            }
            RawExprKind::Cast(ty, inner) => {
                let to = self.resolve(ty, pos)?;
                let a = self.rvalue(self.expr(inner)?);
                self.explicit_cast(a, to, pos)?
            }
            RawExprKind::Index(base, idx) => {
                let b = self.rvalue(self.expr(base)?);
                let i = self.rvalue(self.expr(idx)?);
                let (b, i) = if b.ty.is_integer() && i.ty.is_pointer() { (i, b) } else { (b, i) };
                let elem = match &b.ty {
                    SubjectType::Pointer(t) => (**t).clone(),
                    SubjectType::VoidPointer => return Err(Diagnostic::type_error(pos, "indexing a void pointer")),
                    t => {
                        return Err(Diagnostic::type_error(
                            pos,
                            format!("subscript of non-array type {}", describe(t, &self.program)),
                        ))
                    }
                };
                let i = self.promoted(i, "[]")?;
                mk(ExprKind::Index(Box::new(b), Box::new(i)), elem, pos)
            }
            RawExprKind::Member(base, field, arrow) => {
                let b = self.expr(base)?;
                let b = if *arrow {
                    let b = self.rvalue(b);
                    match &b.ty {
                        SubjectType::Pointer(t) => {
                            let t = (**t).clone();
                            mk(ExprKind::Deref(Box::new(b)), t, pos)
                        }
                        _ => return Err(Diagnostic::type_error(pos, "`->` applied to a non-pointer")),
                    }
                } else {
                    b
                };
                let SubjectType::Record(rid) = b.ty else {
                    return Err(Diagnostic::type_error(pos, format!("member access `{field}` on a non-record")));
                };
                let rec = &self.program.records[rid];
                let Some(fi) = rec.fields.iter().position(|f| f.name == *field) else {
                    return Err(Diagnostic::type_error(pos, format!("struct `{}` has no field `{field}`", rec.name)));
                };
                let ty = rec.fields[fi].ty.clone();
                mk(ExprKind::Field(Box::new(b), fi), ty, pos)
            }
            RawExprKind::Call(name, args) => {
                let Some(&callee) = self.funcs.get(name) else {
                    return Err(Diagnostic::type_error(pos, format!("call to undeclared function `{name}`")));
                };
                let (params, ret) = match callee {
                    Callee::Defined(id) => {
                        let f = &self.program.functions[id];
                        (&f.params, f.return_type.clone())
                    }
                    Callee::External(id) => {
                        let f = &self.program.externals[id];
                        (&f.params, f.return_type.clone())
                    }
                };
                if params.len() != args.len() {
                    return Err(Diagnostic::type_error(
                        pos,
                        format!("`{name}` expects {} arguments, got {}", params.len(), args.len()),
                    ));
                }
                let mut out = Vec::new();
                for (p, a) in params.iter().zip(args) {
                    if matches!(p.ty, SubjectType::Record(_)) {
                        return Err(Diagnostic::unsupported(a.pos, "passing a record by value"));
                    }
                    let v = self.rvalue(self.expr(a)?);
                    out.push(self.convert(v, &p.ty, a.pos)?);
                }
                mk(ExprKind::Call(callee, out), ret, pos)
            }
            RawExprKind::SizeofType(ty) => {
                let t = self.resolve(ty, pos)?;
                int_const(i64::from(self.size_of(&t, pos)?), IntTy::U32, pos)
            }
            RawExprKind::SizeofExpr(inner) => {
                let a = self.expr(inner)?;
                int_const(i64::from(self.size_of(&a.ty, pos)?), IntTy::U32, pos)
            }
        })
    }

    /// Arrays used as values become pointers to their first element.
    fn rvalue(&self, e: Expr) -> Expr {
        match &e.ty {
            SubjectType::Array(elem, _) => {
                let t = pointer_to((**elem).clone());
                let pos = e.pos;
                mk(ExprKind::Decay(Box::new(e)), t, pos)
            }
            _ => e,
        }
    }

    fn promoted(&self, e: Expr, what: &str) -> Result<Expr, Diagnostic> {
        let e = self.rvalue(e);
        let Some(t) = e.ty.int_ty() else {
            return Err(Diagnostic::type_error(
                e.pos,
                format!("operand of `{what}` has non-integer type {}", describe(&e.ty, &self.program)),
            ));
        };
        Ok(cast_int(e, SubjectType::Int(t.promote())))
    }

    /// Condition context: pointers compare against null, integers are used
    /// for their truthiness.
    fn cond(&self, e: Expr) -> Result<Expr, Diagnostic> {
        let e = self.rvalue(e);
        if e.ty.is_pointer() {
            let pos = e.pos;
            let null = mk(ExprKind::Const(0), e.ty.clone(), pos);
            return Ok(mk(
                ExprKind::PtrCompare(BinOp::Ne, Box::new(e), Box::new(null)),
                SubjectType::Int(IntTy::I32),
                pos,
            ));
        }
        if !e.ty.is_integer() {
            return Err(Diagnostic::type_error(
                e.pos,
                format!("condition has non-scalar type {}", describe(&e.ty, &self.program)),
            ));
        }
        Ok(e)
    }

    fn binary(&self, op: BinOp, a: Expr, b: Expr, pos: Pos) -> Result<Expr, Diagnostic> {
        let i32t = SubjectType::Int(IntTy::I32);
        if a.ty.is_pointer() || b.ty.is_pointer() {
            if op.is_comparison() {
                let (a, b) = match (a.ty.is_pointer(), b.ty.is_pointer()) {
                    (true, true) => (a, b),
                    (true, false) => {
                        let t = a.ty.clone();
                        let b = self.null_constant(b, &t)?;
                        (a, b)
                    }
                    _ => {
                        let t = b.ty.clone();
                        let a = self.null_constant(a, &t)?;
                        (a, b)
                    }
                };
                return Ok(mk(ExprKind::PtrCompare(op, Box::new(a), Box::new(b)), i32t, pos));
            }
            if matches!(op, BinOp::Add | BinOp::Sub) {
                let ptr_left = a.ty.is_pointer();
                let (p, d) = if ptr_left { (a, b) } else { (b, a) };
                if p.ty == SubjectType::VoidPointer {
                    return Err(Diagnostic::type_error(pos, "arithmetic on a void pointer"));
                }
                if d.ty.is_pointer() {
                    return Err(Diagnostic::unsupported(pos, "pointer difference"));
                }
                if op == BinOp::Sub && !ptr_left {
                    return Err(Diagnostic::type_error(pos, "integer minus pointer"));
                }
                let d = self.promoted(d, op.symbol())?;
                let ty = p.ty.clone();
                return Ok(mk(
                    ExprKind::PtrOffset { ptr: Box::new(p), delta: Box::new(d), negate: op == BinOp::Sub },
                    ty,
                    pos,
                ));
            }
            return Err(Diagnostic::type_error(pos, format!("invalid pointer operand to `{}`", op.symbol())));
        }
        let a = self.promoted(a, op.symbol())?;
        let b = self.promoted(b, op.symbol())?;
        let (ta, tb) = (a.ty.int_ty().unwrap(), b.ty.int_ty().unwrap());
        let t = if matches!(op, BinOp::Shl | BinOp::Shr) { ta } else { IntTy::common(ta, tb) };
        let a = cast_int(a, SubjectType::Int(t));
        let b = cast_int(b, SubjectType::Int(t));
        let rt = semantics::result_ty(op, t);
        if let (ExprKind::Const(x), ExprKind::Const(y)) = (&a.kind, &b.kind) {
            if let Ok(v) = semantics::binop(op, t, *x, *y) {
                return Ok(int_const(v, rt, pos));
            }
        }
        Ok(mk(ExprKind::Binary(op, Box::new(a), Box::new(b)), SubjectType::Int(rt), pos))
    }

    fn null_constant(&self, e: Expr, ty: &SubjectType) -> Result<Expr, Diagnostic> {
        match e.kind {
            ExprKind::Const(0) if e.ty.is_integer() => Ok(mk(ExprKind::Const(0), ty.clone(), e.pos)),
            _ => Err(Diagnostic::type_error(e.pos, "comparison between pointer and integer")),
        }
    }

    /// Implicit conversion for assignment, initialization, arguments and returns.
    fn convert(&self, e: Expr, to: &SubjectType, pos: Pos) -> Result<Expr, Diagnostic> {
        if e.ty == *to {
            return Ok(e);
        }
        let fail = |e: &Expr| {
            Err(Diagnostic::type_error(
                pos,
                format!("cannot convert {} to {}", describe(&e.ty, &self.program), describe(to, &self.program)),
            ))
        };
        match to {
            SubjectType::Bool => self.to_bool(e),
            SubjectType::Int(_) | SubjectType::Enum(_) if e.ty.is_integer() => Ok(cast_int(e, to.clone())),
            SubjectType::Pointer(_) | SubjectType::VoidPointer => {
                if e.ty.is_pointer() {
                    if e.ty == SubjectType::VoidPointer || *to == SubjectType::VoidPointer {
                        Ok(ptr_cast(e, to.clone()))
                    } else {
                        fail(&e)
                    }
                } else if e.ty.is_integer() && e.as_const() == Some(0) {
                    Ok(mk(ExprKind::Const(0), to.clone(), e.pos))
                } else {
                    fail(&e)
                }
            }
            _ => fail(&e),
        }
    }

    fn to_bool(&self, e: Expr) -> Result<Expr, Diagnostic> {
        let pos = e.pos;
        let c = if e.ty.is_pointer() {
            self.cond(e)?
        } else if e.ty == SubjectType::Bool {
            return Ok(e);
        } else if is_boolean_valued(&e) {
            e
        } else {
            let e = self.promoted(e, "bool conversion")?;
            let t = e.ty.int_ty().unwrap();
            self.binary(BinOp::Ne, e, int_const(0, t, pos), pos)?
        };
        Ok(match c.kind {
            ExprKind::Const(v) => mk(ExprKind::Const((v != 0) as i64), SubjectType::Bool, pos),
            _ => mk(ExprKind::Cast(Box::new(c)), SubjectType::Bool, pos),
        })
    }

    fn explicit_cast(&self, e: Expr, to: SubjectType, pos: Pos) -> Result<Expr, Diagnostic> {
        match &to {
            SubjectType::Void => Ok(e),
            SubjectType::Bool => self.to_bool(e),
            SubjectType::Int(_) | SubjectType::Enum(_) => {
                if e.ty.is_pointer() {
                    Err(Diagnostic::unsupported(pos, "cast from pointer to integer"))
                } else if e.ty.is_integer() {
                    Ok(cast_int(e, to))
                } else {
                    Err(Diagnostic::type_error(pos, "invalid cast"))
                }
            }
            SubjectType::Pointer(_) | SubjectType::VoidPointer => {
                if e.ty.is_pointer() {
                    Ok(ptr_cast(e, to))
                } else if e.ty.is_integer() {
                    let e = cast_int(e, SubjectType::Int(IntTy::U32));
                    Ok(match e.kind {
                        ExprKind::Const(v) => mk(ExprKind::Const(v), to, pos),
                        _ => mk(ExprKind::Cast(Box::new(e)), to, pos),
                    })
                } else {
                    Err(Diagnostic::type_error(pos, "invalid cast"))
                }
            }
            _ => Err(Diagnostic::unsupported(pos, "cast to a non-scalar type")),
        }
    }

    // ---- statements ----

    fn ctx(&mut self) -> &mut FnCtx {
        self.func.as_mut().expect("inside a function")
    }

    fn stmts(&mut self, raw: &[RawStmt]) -> Result<Block, Diagnostic> {
        let mut out = Vec::new();
        for s in raw {
            self.stmt(s, &mut out)?;
        }
        Ok(out)
    }

    fn scoped(&mut self, raw: &[RawStmt]) -> Result<Block, Diagnostic> {
        self.ctx().scopes.push(HashMap::new());
        let r = self.stmts(raw);
        self.ctx().scopes.pop();
        r
    }

    fn stmt(&mut self, s: &RawStmt, out: &mut Block) -> Result<(), Diagnostic> {
        match s {
            RawStmt::Decl(ds) => {
                for d in ds {
                    self.decl(d, out)?;
                }
            }
            RawStmt::Assign(target, op, value, pos) => {
                let t = self.expr(target)?;
                let v = self.rvalue(self.expr(value)?);
                let st = self.assign(t, *op, v, *pos)?;
                out.push(st);
            }
            RawStmt::Expr(e) => {
                let e = self.expr(e)?;
                let pos = e.pos;
                out.push(Stmt { kind: StmtKind::Expr(e), pos });
            }
            RawStmt::If(c, t, e, pos) => {
                let cond = self.cond(self.expr(c)?)?;
                let then_branch = self.scoped(t)?;
                let else_branch = match e {
                    Some(e) => Some(self.scoped(e)?),
                    None => None,
                };
                out.push(Stmt { kind: StmtKind::If { cond, then_branch, else_branch }, pos: *pos });
            }
            RawStmt::While(c, b, pos) => {
                let cond = self.cond(self.expr(c)?)?;
                self.ctx().loops += 1;
                let body = self.scoped(b);
                self.ctx().loops -= 1;
                out.push(Stmt { kind: StmtKind::While { cond, body: body? }, pos: *pos });
            }
            RawStmt::For(init, c, step, b, pos) => {
                self.ctx().scopes.push(HashMap::new());
                let r = (|| {
                    let init = self.stmts(init)?;
                    if init.iter().filter(|s| matches!(s.kind, StmtKind::Decl { .. })).count() > 0
                        && init.iter().any(|s| !matches!(s.kind, StmtKind::Decl { .. }))
                    {
                        return Err(Diagnostic::unsupported(*pos, "brace initializer in a for-loop header"));
                    }
                    let cond = match c {
                        Some(c) => Some(self.cond(self.expr(c)?)?),
                        None => None,
                    };
                    let step = self.stmts(step)?;
                    self.ctx().loops += 1;
                    let body = self.scoped(b);
                    self.ctx().loops -= 1;
                    Ok(Stmt { kind: StmtKind::For { init, cond, step, body: body? }, pos: *pos })
                })();
                self.ctx().scopes.pop();
                out.push(r?);
            }
            RawStmt::Switch(scrut, arms, pos) => {
                let scrutinee = self.promoted(self.expr(scrut)?, "switch")?;
                let st = scrutinee.ty.clone();
                self.ctx().switches += 1;
                let arms = self.arms(arms, &st);
                self.ctx().switches -= 1;
                out.push(Stmt { kind: StmtKind::Switch { scrutinee, arms: arms? }, pos: *pos });
            }
            RawStmt::Break(pos) => {
                let c = self.ctx();
                if c.loops == 0 && c.switches == 0 {
                    return Err(Diagnostic::type_error(*pos, "`break` outside of a loop or switch"));
                }
                out.push(Stmt { kind: StmtKind::Break, pos: *pos });
            }
            RawStmt::Continue(pos) => {
                if self.ctx().loops == 0 {
                    return Err(Diagnostic::type_error(*pos, "`continue` outside of a loop"));
                }
                out.push(Stmt { kind: StmtKind::Continue, pos: *pos });
            }
            RawStmt::Return(e, pos) => {
                let ret = self.ctx().ret.clone();
                let value = match (e, &ret) {
                    (None, SubjectType::Void) => None,
                    (None, _) => return Err(Diagnostic::type_error(*pos, "non-void function must return a value")),
                    (Some(_), SubjectType::Void) => {
                        return Err(Diagnostic::type_error(*pos, "void function cannot return a value"))
                    }
                    (Some(e), rt) => {
                        let v = self.rvalue(self.expr(e)?);
                        Some(self.convert(v, rt, *pos)?)
                    }
                };
                out.push(Stmt { kind: StmtKind::Return(value), pos: *pos });
            }
            RawStmt::Block(b) => {
                let b = self.scoped(b)?;
                out.push(Stmt { kind: StmtKind::Block(b), pos: Pos::default() });
            }
        }
        Ok(())
    }

    fn arms(&mut self, arms: &[RawArm], st: &SubjectType) -> Result<Vec<SwitchArm>, Diagnostic> {
        let mut seen = HashSet::new();
        let mut has_default = false;
        let mut out = Vec::new();
        for arm in arms {
            let mut labels = Vec::new();
            for l in &arm.labels {
                match l {
                    RawLabel::Case(e) => {
                        let v = self.expr(e)?;
                        if !v.ty.is_integer() {
                            return Err(Diagnostic::type_error(e.pos, "case label is not an integer"));
                        }
                        let v = cast_int(v, st.clone());
                        let Some(c) = v.as_const() else {
                            return Err(Diagnostic::type_error(e.pos, "case label is not a constant"));
                        };
                        if !seen.insert(c) {
                            return Err(Diagnostic::type_error(e.pos, format!("duplicate case label {c}")));
                        }
                        labels.push(CaseLabel::Case(c));
                    }
                    RawLabel::Default => {
                        if has_default {
                            return Err(Diagnostic::type_error(arm.pos, "duplicate default label"));
                        }
                        has_default = true;
                        labels.push(CaseLabel::Default);
                    }
                }
            }
            let body = self.scoped(&arm.body)?;
            out.push(SwitchArm { labels, body, pos: arm.pos });
        }
        Ok(out)
    }

    fn assign(&self, target: Expr, op: Option<BinOp>, value: Expr, pos: Pos) -> Result<Stmt, Diagnostic> {
        if !target.is_lvalue() {
            return Err(Diagnostic::type_error(pos, "assignment to a non-lvalue"));
        }
        match &target.ty {
            SubjectType::Array(..) => return Err(Diagnostic::type_error(pos, "assignment to an array")),
            SubjectType::Record(_) => return Err(Diagnostic::unsupported(pos, "record assignment")),
            _ => {}
        }
        let value = match op {
            None => value,
            Some(op) => {
                let mut has_call = false;
                target.walk(&mut |e| has_call |= matches!(e.kind, ExprKind::Call(..)));
                if has_call {
                    return Err(Diagnostic::unsupported(pos, "call inside a compound-assignment target"));
                }
                self.binary(op, target.clone(), value, pos)?
            }
        };
        let value = self.convert(value, &target.ty, pos)?;
        Ok(Stmt { kind: StmtKind::Assign { target, value }, pos })
    }

    fn decl(&mut self, d: &RawDeclarator, out: &mut Block) -> Result<(), Diagnostic> {
        let ty = self.resolve_object(&d.ty, d.pos)?;
        // Resolve the initializer before the name is in scope.
        let init = match &d.init {
            Some(RawInit::Expr(e)) => {
                let v = self.rvalue(self.expr(e)?);
                if matches!(ty, SubjectType::Array(..) | SubjectType::Record(_)) {
                    return Err(Diagnostic::type_error(d.pos, "aggregate initialized from an expression"));
                }
                Some(self.convert(v, &ty, d.pos)?)
            }
            _ => None,
        };
        let ctx = self.ctx();
        let id = ctx.locals.len();
        let scope = ctx.scopes.last_mut().expect("scope");
        if scope.insert(d.name.clone(), id).is_some() {
            return Err(Diagnostic::type_error(d.pos, format!("redefinition of `{}`", d.name)));
        }
        ctx.locals.push(LocalVar { name: d.name.clone(), ty: ty.clone(), pos: d.pos });
        out.push(Stmt { kind: StmtKind::Decl { var: id, init }, pos: d.pos });
        if let Some(RawInit::List(items, lpos)) = &d.init {
            let var = mk(ExprKind::Var(VarRef::Local(id)), ty.clone(), *lpos);
            self.brace_init(var, items, *lpos, out)?;
        }
        Ok(())
    }

    /// Expand `= {...}` into element assignments; missing elements are zeroed.
    fn brace_init(&self, target: Expr, items: &[RawInit], pos: Pos, out: &mut Block) -> Result<(), Diagnostic> {
        match target.ty.clone() {
            SubjectType::Array(elem, n) => {
                if items.len() > n as usize {
                    return Err(Diagnostic::type_error(pos, "too many initializers"));
                }
                for i in 0..n as usize {
                    let base = self.rvalue(target.clone());
                    let el = mk(
                        ExprKind::Index(Box::new(base), Box::new(int_const(i as i64, IntTy::I32, pos))),
                        (*elem).clone(),
                        pos,
                    );
                    self.init_one(el, items.get(i), pos, out)?;
                }
            }
            SubjectType::Record(rid) => {
                let fields = &self.program.records[rid].fields;
                if items.len() > fields.len() {
                    return Err(Diagnostic::type_error(pos, "too many initializers"));
                }
                for (i, f) in fields.iter().enumerate() {
                    let el = mk(ExprKind::Field(Box::new(target.clone()), i), f.ty.clone(), pos);
                    self.init_one(el, items.get(i), pos, out)?;
                }
            }
            _ => {
                if items.len() != 1 {
                    return Err(Diagnostic::type_error(pos, "scalar initializer must have one element"));
                }
                self.init_one(target, items.first(), pos, out)?;
            }
        }
        Ok(())
    }

    fn init_one(&self, el: Expr, item: Option<&RawInit>, pos: Pos, out: &mut Block) -> Result<(), Diagnostic> {
        match item {
            Some(RawInit::List(sub, p)) => self.brace_init(el, sub, *p, out),
            Some(RawInit::Expr(e)) if matches!(el.ty, SubjectType::Array(..) | SubjectType::Record(_)) => {
                Err(Diagnostic::type_error(e.pos, "aggregate element needs a braced initializer"))
            }
            Some(RawInit::Expr(e)) => {
                let v = self.rvalue(self.expr(e)?);
                out.push(self.assign(el, None, v, e.pos)?);
                Ok(())
            }
            None => {
                if matches!(el.ty, SubjectType::Array(..) | SubjectType::Record(_)) {
                    return self.brace_init(el, &[], pos, out);
                }
                let zero = int_const(0, IntTy::I32, pos);
                let st = self.assign(el, None, zero, pos)?;
                out.push(st);
                Ok(())
            }
        }
    }
}

fn pointer_to(t: SubjectType) -> SubjectType {
    match t {
        SubjectType::Void => SubjectType::VoidPointer,
        t => SubjectType::Pointer(Box::new(t)),
    }
}

/// Integer conversion to an integer-like type, folded on constants.
fn cast_int(e: Expr, to: SubjectType) -> Expr {
    if e.ty == to {
        return e;
    }
    let t = to.int_ty().expect("integer target");
    let pos = e.pos;
    if to == SubjectType::Bool {
        unreachable!("bool conversion goes through to_bool");
    }
    match e.kind {
        ExprKind::Const(v) => mk(ExprKind::Const(semantics::cast(t, v)), to, pos),
        _ => mk(ExprKind::Cast(Box::new(e)), to, pos),
    }
}

fn ptr_cast(e: Expr, to: SubjectType) -> Expr {
    if e.ty == to {
        return e;
    }
    let pos = e.pos;
    match e.kind {
        ExprKind::Const(v) => mk(ExprKind::Const(v), to, pos),
        _ => mk(ExprKind::Cast(Box::new(e)), to, pos),
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::*;
    use crate::semantics::IntTy;

    fn ret_expr(src: &str) -> Expr {
        let p = parse(src).unwrap();
        let f = p.functions.last().unwrap();
        let mut found = None;
        walk_stmts(&f.body, &mut |s| {
            if let StmtKind::Return(Some(e)) = &s.kind {
                found = Some(e.clone());
            }
        });
        found.unwrap()
    }

    #[test]
    fn constants_fold_with_wraparound() {
        assert_eq!(ret_expr("int f(){ return 2147483647 + 1; }").as_const(), Some(i64::from(i32::MIN)));
        assert_eq!(ret_expr("unsigned f(){ return -1; }").as_const(), Some(u32::MAX as i64));
        assert_eq!(ret_expr("int f(){ return sizeof(int[3]); }").as_const(), Some(12));
    }

    #[test]
    fn division_by_constant_zero_is_not_folded() {
        let e = ret_expr("int f(){ return 1 / 0; }");
        assert!(matches!(e.kind, ExprKind::Binary(..)));
    }

    #[test]
    fn char_operands_promote() {
        let e = ret_expr("int f(char a, char b){ return a + b; }");
        let ExprKind::Binary(_, a, _) = &e.kind else { panic!() };
        assert_eq!(a.ty, SubjectType::Int(IntTy::I32));
        assert!(matches!(a.kind, ExprKind::Cast(_)));
    }

    #[test]
    fn enum_constants_and_typedefs() {
        let src = "typedef enum { RED, GREEN = 5, BLUE } color; typedef unsigned char byte;
                   int f(color c, byte b){ return BLUE + b; }";
        let e = ret_expr(src);
        let ExprKind::Binary(_, a, _) = &e.kind else { panic!() };
        assert_eq!(a.as_const(), Some(6));
    }

    #[test]
    fn array_params_decay_with_extent() {
        let p = parse("int f(int a[10], int *p){ return a[0] + *p; }").unwrap();
        let f = &p.functions[0];
        assert_eq!(f.params[0].extent, 10);
        assert_eq!(f.params[0].ty, SubjectType::Pointer(Box::new(SubjectType::Int(IntTy::I32))));
        assert_eq!(f.params[1].extent, 1);
    }

    #[test]
    fn compound_assignment_desugars() {
        let p = parse("void f(int x){ x += 2; x++; }").unwrap();
        let f = &p.functions[0];
        assert_eq!(f.body.len(), 2);
        for s in &f.body {
            assert!(matches!(s.kind, StmtKind::Assign { .. }));
        }
    }

    #[test]
    fn brace_initializer_expands() {
        let p = parse("int f(){ int a[3] = {1, 2}; return a[2]; }").unwrap();
        // decl + three element assignments + return
        assert_eq!(p.functions[0].body.len(), 5);
    }

    #[test]
    fn externals_and_definitions() {
        let p = parse("int ext(int); int g(int x); int f(int x){ return ext(x) + g(x); } int g(int y){ return y; }")
            .unwrap();
        assert_eq!(p.externals.len(), 1);
        assert_eq!(p.externals[0].name, "ext");
        assert_eq!(p.functions.len(), 2);
    }

    #[test]
    fn type_errors() {
        for src in [
            "int f(){ int *p; int x; p = x; return 0; }",
            "struct s { struct s inner; };",
            "int f(){ break; }",
            "int f(int x){ return y(x); }",
            "void f(){ return 1; }",
            "int f(){ int x; int x; return 0; }",
            "struct s { int a; }; int f(struct s v){ return v.b; }",
        ] {
            let e = parse(src).unwrap_err();
            assert_eq!(e.kind, DiagnosticKind::Type, "{src}: {e}");
        }
    }

    #[test]
    fn fixed_address_literal() {
        let e = ret_expr("int f(){ return *(int*)0x52; }");
        let ExprKind::Deref(p) = &e.kind else { panic!() };
        assert_eq!(p.as_const(), Some(0x52));
        assert!(p.ty.is_pointer());
    }

    #[test]
    fn pointer_conditions_compare_with_null() {
        let e = ret_expr("int f(int *p){ return !p; }");
        let ExprKind::LogNot(inner) = &e.kind else { panic!() };
        assert!(matches!(inner.kind, ExprKind::PtrCompare(..)));
    }
}
