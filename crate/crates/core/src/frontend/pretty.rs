//! Pretty-printer emitting mini-C that parses back to the same program
//! (up to source positions). Implicit conversions are printed as explicit
//! casts, so the output is noisier than the input.

use std::fmt::Write;

use super::ast::*;
use crate::semantics::IntTy;

pub fn print_program(p: &Program) -> String {
    let mut out = String::new();
    for r in &p.records {
        let _ = writeln!(out, "struct {} {{", r.name);
        for f in &r.fields {
            let _ = writeln!(out, "    {};", declaration(p, &f.ty, &f.name));
        }
        out.push_str("};\n");
    }
    for e in &p.enums {
        let vs: Vec<String> =
            e.variants.iter().map(|(n, v)| format!("{n} = {}", int_literal(*v, IntTy::I32))).collect();
        let _ = writeln!(out, "enum {} {{ {} }};", e.name, vs.join(", "));
    }
    for g in &p.globals {
        let _ = writeln!(out, "{};", declaration(p, &g.ty, &g.name));
    }
    for x in &p.externals {
        let _ = writeln!(out, "{};", signature(p, &x.name, &x.params, &x.return_type));
    }
    for f in &p.functions {
        let mut pr = Printer { p, f, out: String::new(), indent: 1 };
        pr.block(&f.body);
        let _ = writeln!(out, "{} {{\n{}}}", signature(p, &f.name, &f.params, &f.return_type), pr.out);
    }
    out
}

fn base_name(p: &Program, ty: &SubjectType) -> String {
    match ty {
        SubjectType::Int(t) => int_name(*t).to_string(),
        SubjectType::Bool => "bool".into(),
        SubjectType::Enum(id) => format!("enum {}", p.enums[*id].name),
        SubjectType::Record(id) => format!("struct {}", p.records[*id].name),
        SubjectType::Void | SubjectType::VoidPointer => "void".into(),
        SubjectType::Pointer(t) | SubjectType::Array(t, _) => base_name(p, t),
    }
}

fn int_name(t: IntTy) -> &'static str {
    match (t.bits, t.signed) {
        (8, true) => "int8_t",
        (8, false) => "uint8_t",
        (16, true) => "int16_t",
        (16, false) => "uint16_t",
        (32, true) => "int32_t",
        (32, false) => "uint32_t",
        _ => "int64_t",
    }
}

/// Pointer depth and array dimensions wrapped around the base type.
fn shape(ty: &SubjectType) -> (usize, Vec<u32>) {
    match ty {
        SubjectType::Array(t, n) => {
            let (s, mut d) = shape(t);
            d.insert(0, *n);
            (s, d)
        }
        SubjectType::Pointer(t) => {
            let (s, d) = shape(t);
            (s + 1, d)
        }
        SubjectType::VoidPointer => (1, Vec::new()),
        _ => (0, Vec::new()),
    }
}

fn declarator(ty: &SubjectType, name: &str) -> String {
    let (stars, dims) = shape(ty);
    let mut s = "*".repeat(stars);
    s.push_str(name);
    for d in dims {
        let _ = write!(s, "[{d}]");
    }
    s
}

fn declaration(p: &Program, ty: &SubjectType, name: &str) -> String {
    format!("{} {}", base_name(p, ty), declarator(ty, name))
}

pub fn type_name(p: &Program, ty: &SubjectType) -> String {
    let (stars, _) = shape(ty);
    format!("{}{}", base_name(p, ty), "*".repeat(stars))
}

fn signature(p: &Program, name: &str, params: &[Param], ret: &SubjectType) -> String {
    let ps: Vec<String> = if params.is_empty() {
        vec!["void".into()]
    } else {
        params
            .iter()
            .map(|q| {
                if q.extent > 1 {
                    let elem = q.ty.pointee().cloned().unwrap_or(SubjectType::Void);
                    declaration(p, &SubjectType::Array(Box::new(elem), q.extent), &q.name)
                } else if q.name.is_empty() {
                    type_name(p, &q.ty)
                } else {
                    declaration(p, &q.ty, &q.name)
                }
            })
            .collect()
    };
    format!("{} {}({})", base_name(p, ret), declarator(ret, name), ps.join(", "))
}

/// A literal of type `int` or `unsigned int` with value `v`.
fn int_literal(v: i64, t: IntTy) -> String {
    if t == IntTy::U32 {
        format!("{v}u")
    } else if v == i64::from(i32::MIN) {
        "((int32_t)2147483648u)".into()
    } else if v < 0 {
        format!("(-{})", -v)
    } else {
        v.to_string()
    }
}

fn const_text(p: &Program, v: i64, ty: &SubjectType) -> String {
    match ty {
        SubjectType::Int(t) if *t == IntTy::I32 || *t == IntTy::U32 => int_literal(v, *t),
        SubjectType::Int(_) | SubjectType::Bool | SubjectType::Enum(_) => {
            format!("(({}){})", type_name(p, ty), int_literal(v, IntTy::I32))
        }
        _ => {
            let lit = if v > i64::from(i32::MAX) { int_literal(v, IntTy::U32) } else { int_literal(v, IntTy::I32) };
            format!("(({}){lit})", type_name(p, ty))
        }
    }
}

struct Printer<'a> {
    p: &'a Program,
    f: &'a FunctionDef,
    out: String,
    indent: usize,
}

impl Printer<'_> {
    fn line(&mut self, s: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(s);
        self.out.push('\n');
    }

    fn nested(&mut self, b: &Block) {
        self.indent += 1;
        self.block(b);
        self.indent -= 1;
    }

    fn block(&mut self, b: &Block) {
        for s in b {
            self.stmt(s);
        }
    }

    fn simple(&self, s: &Stmt) -> String {
        match &s.kind {
            StmtKind::Decl { var, init } => {
                let v = &self.f.locals[*var];
                let mut d = declaration(self.p, &v.ty, &v.name);
                if let Some(e) = init {
                    let _ = write!(d, " = {}", self.expr(e));
                }
                d
            }
            StmtKind::Assign { target, value } => format!("{} = {}", self.expr(target), self.expr(value)),
            StmtKind::Expr(e) => self.expr(e),
            _ => unreachable!("not a simple statement"),
        }
    }

    fn for_header_list(&self, b: &Block) -> String {
        if b.iter().all(|s| matches!(s.kind, StmtKind::Decl { .. })) && !b.is_empty() {
            let mut parts = Vec::new();
            let mut base = String::new();
            for s in b {
                let StmtKind::Decl { var, init } = &s.kind else { unreachable!() };
                let v = &self.f.locals[*var];
                base = base_name(self.p, &v.ty);
                let mut d = declarator(&v.ty, &v.name);
                if let Some(e) = init {
                    let _ = write!(d, " = {}", self.expr(e));
                }
                parts.push(d);
            }
            format!("{base} {}", parts.join(", "))
        } else {
            b.iter().map(|s| self.simple(s)).collect::<Vec<_>>().join(", ")
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                let t = self.simple(s);
                self.line(&format!("{t};"));
            }
            StmtKind::If { cond, then_branch, else_branch } => {
                let c = self.expr(cond);
                self.line(&format!("if ({c}) {{"));
                self.nested(then_branch);
                if let Some(e) = else_branch {
                    self.line("} else {");
                    self.nested(e);
                }
                self.line("}");
            }
            StmtKind::While { cond, body } => {
                let c = self.expr(cond);
                self.line(&format!("while ({c}) {{"));
                self.nested(body);
                self.line("}");
            }
            StmtKind::For { init, cond, step, body } => {
                let i = self.for_header_list(init);
                let c = cond.as_ref().map(|c| self.expr(c)).unwrap_or_default();
                let st = self.for_header_list(step);
                self.line(&format!("for ({i}; {c}; {st}) {{"));
                self.nested(body);
                self.line("}");
            }
            StmtKind::Switch { scrutinee, arms } => {
                let sc = self.expr(scrutinee);
                let st = scrutinee.ty.int_ty().unwrap_or(IntTy::I32);
                self.line(&format!("switch ({sc}) {{"));
                for arm in arms {
                    for l in &arm.labels {
                        match l {
                            CaseLabel::Case(v) => self.line(&format!("case {}:", int_literal(*v, st))),
                            CaseLabel::Default => self.line("default:"),
                        }
                    }
                    self.nested(&arm.body);
                }
                self.line("}");
            }
            StmtKind::Break => self.line("break;"),
            StmtKind::Continue => self.line("continue;"),
            StmtKind::Return(None) => self.line("return;"),
            StmtKind::Return(Some(e)) => {
                let t = self.expr(e);
                self.line(&format!("return {t};"));
            }
            StmtKind::Block(b) => {
                self.line("{");
                self.nested(b);
                self.line("}");
            }
        }
    }

    fn expr(&self, e: &Expr) -> String {
        match &e.kind {
            ExprKind::Const(v) => const_text(self.p, *v, &e.ty),
            ExprKind::Var(VarRef::Local(id)) => self.f.locals[*id].name.clone(),
            ExprKind::Var(VarRef::Global(id)) => self.p.globals[*id].name.clone(),
            ExprKind::Unary(op, a) => format!("({}{})", op.symbol(), self.expr(a)),
            ExprKind::Binary(op, a, b) | ExprKind::PtrCompare(op, a, b) => {
                format!("({} {} {})", self.expr(a), op.symbol(), self.expr(b))
            }
            ExprKind::Logical(op, a, b) => {
                let s = if *op == LogicOp::And { "&&" } else { "||" };
                format!("({} {s} {})", self.expr(a), self.expr(b))
            }
            ExprKind::LogNot(a) => format!("(!{})", self.expr(a)),
            ExprKind::Cast(a) => format!("(({}){})", type_name(self.p, &e.ty), self.expr(a)),
            ExprKind::Decay(a) => self.expr(a),
            ExprKind::Index(b, i) => format!("{}[{}]", self.expr(b), self.expr(i)),
            ExprKind::Field(b, i) => {
                let SubjectType::Record(r) = b.ty else { unreachable!("field of a record") };
                format!("{}.{}", self.expr(b), self.p.records[r].fields[*i].name)
            }
            ExprKind::Deref(a) => format!("(*{})", self.expr(a)),
            ExprKind::AddrOf(a) => format!("(&{})", self.expr(a)),
            ExprKind::PtrOffset { ptr, delta, negate } => {
                format!("({} {} {})", self.expr(ptr), if *negate { "-" } else { "+" }, self.expr(delta))
            }
            ExprKind::Call(c, args) => {
                let a: Vec<String> = args.iter().map(|x| self.expr(x)).collect();
                format!("{}({})", self.p.callee_name(*c), a.join(", "))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn strip(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(m) => {
                m.remove("pos");
                m.values_mut().for_each(strip);
            }
            serde_json::Value::Array(a) => a.iter_mut().for_each(strip),
            _ => {}
        }
    }

    pub(crate) fn same_modulo_positions(a: &Program, b: &Program) -> bool {
        let mut x = serde_json::to_value(a).unwrap();
        let mut y = serde_json::to_value(b).unwrap();
        strip(&mut x);
        strip(&mut y);
        x == y
    }

    #[test]
    fn round_trip_small() {
        let src = "
struct pt { int8_t x; int32_t y; struct pt *next; };
enum mode { OFF, ON = 4 };
int g;
int ext(int *out, char c);
int f(int a[4], struct pt *p, enum mode m, bool b) {
    int i, s = 0;
    char c = 'a';
    unsigned u = 4000000000u;
    for (i = 0; i < 4; i++) { s += a[i]; }
    if (p->next != NULL && !b) { s = s - p->x; }
    switch (m) { case ON: s = -s; break; default: s = s % 3; }
    while (s > 100) s >>= 1;
    b = s;
    { int s = -2147483647 - 1; g = s; }
    return s + ext(&i, c) + (u > 3) + *(int*)0x52;
}
";
        let p = parse(src).unwrap();
        let text = print_program(&p);
        let q = parse(&text).unwrap_or_else(|e| panic!("{e}\n{text}"));
        assert!(same_modulo_positions(&p, &q), "{text}");
    }
}
