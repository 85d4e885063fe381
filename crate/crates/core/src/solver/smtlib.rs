//! SMT-LIB2 (QF_BV) rendering of a constraint, and reading models back.

use std::fmt::Write;

use super::interval::{CNode, Compiled};
use super::sexpr::{parse_sexprs, Sexpr};
use super::{Domains, Model};
use crate::semantics::{BinOp, IntTy, UnOp};
use crate::symcore::Constraint;

fn bv(ty: IntTy, v: i64) -> String {
    let bits = if ty.bits >= 64 { v as u64 } else { (v as u64) & ((1u64 << ty.bits) - 1) };
    format!("(_ bv{bits} {})", ty.bits)
}

fn sort(ty: IntTy) -> String {
    format!("(_ BitVec {})", ty.bits)
}

fn quote(name: &str) -> String {
    format!("|{name}|")
}

/// The constraint as a QF_BV script ending in `(check-sat)` and
/// `(get-model)`. Integer values become bit-vectors of their declared
/// width; boolean-valued operators yield 32-bit 0/1 like the C operators.
/// A division whose divisor is not a constant also asserts the divisor is
/// non-zero, since the internal semantics treats division by zero as an
/// error rather than a value.
pub fn emit_smtlib(constraint: &Constraint, domains: &Domains) -> String {
    let c = Compiled::new(constraint.values());
    let mut s = String::from("(set-logic QF_BV)\n");
    for v in &c.vars {
        let _ = writeln!(s, "(declare-const {} {})", quote(&v.name), sort(v.ty));
    }
    for v in &c.vars {
        let x = quote(&v.name);
        if v.boolean {
            let _ = writeln!(s, "(assert (bvule {x} {}))", bv(v.ty, 1));
        }
        if let Some(&(lo, hi)) = domains.ranges.get(&*v.name) {
            let (le, _) = cmp_ops(v.ty);
            let _ = writeln!(s, "(assert (and ({le} {} {x}) ({le} {x} {})))", bv(v.ty, lo), bv(v.ty, hi));
        }
    }
    let term = |i: usize| match c.nodes[i] {
        CNode::Const(k) => bv(c.tys[i], k),
        CNode::Var(x) => quote(&c.vars[x].name),
        _ => format!("|n{i}|"),
    };
    for (i, n) in c.nodes.iter().enumerate() {
        let ty = c.tys[i];
        let body = match *n {
            CNode::Const(_) | CNode::Var(_) => continue,
            CNode::Bin(op, oty, a, b) => {
                let (x, y) = (term(a), term(b));
                let one = bv(IntTy::I32, 1);
                let zero32 = bv(IntTy::I32, 0);
                let zero = bv(oty, 0);
                let (le, lt) = cmp_ops(oty);
                let pred = |p: String| format!("(ite {p} {one} {zero32})");
                match op {
                    BinOp::Add => format!("(bvadd {x} {y})"),
                    BinOp::Sub => format!("(bvsub {x} {y})"),
                    BinOp::Mul => format!("(bvmul {x} {y})"),
                    BinOp::Div | BinOp::Rem => {
                        if !matches!(c.nodes[b], CNode::Const(_)) {
                            let _ = writeln!(s, "(assert (distinct {y} {zero}))");
                        }
                        let f = match (op, oty.signed) {
                            (BinOp::Div, true) => "bvsdiv",
                            (BinOp::Div, false) => "bvudiv",
                            (_, true) => "bvsrem",
                            (_, false) => "bvurem",
                        };
                        format!("({f} {x} {y})")
                    }
                    BinOp::Shl | BinOp::Shr => {
                        let f = match (op, oty.signed) {
                            (BinOp::Shl, _) => "bvshl",
                            (_, true) => "bvashr",
                            (_, false) => "bvlshr",
                        };
                        format!("({f} {x} (bvurem {y} {}))", bv(oty, i64::from(oty.bits)))
                    }
                    BinOp::BitAnd => format!("(bvand {x} {y})"),
                    BinOp::BitOr => format!("(bvor {x} {y})"),
                    BinOp::BitXor => format!("(bvxor {x} {y})"),
                    BinOp::Lt => pred(format!("({lt} {x} {y})")),
                    BinOp::Le => pred(format!("({le} {x} {y})")),
                    BinOp::Gt => pred(format!("({lt} {y} {x})")),
                    BinOp::Ge => pred(format!("({le} {y} {x})")),
                    BinOp::Eq => pred(format!("(= {x} {y})")),
                    BinOp::Ne => pred(format!("(distinct {x} {y})")),
                    BinOp::LogAnd => pred(format!("(and (distinct {x} {zero}) (distinct {y} {zero}))")),
                    BinOp::LogOr => pred(format!("(or (distinct {x} {zero}) (distinct {y} {zero}))")),
                }
            }
            CNode::Un(op, _, a) => {
                let x = term(a);
                match op {
                    UnOp::Neg => format!("(bvneg {x})"),
                    UnOp::BitNot => format!("(bvnot {x})"),
                    UnOp::Not => {
                        format!("(ite (= {x} {}) {} {})", bv(c.tys[a], 0), bv(IntTy::I32, 1), bv(IntTy::I32, 0))
                    }
                }
            }
            CNode::Cast(to, a) => {
                let from = c.tys[a];
                let x = term(a);
                if to.bits > from.bits {
                    let ext = if from.signed { "sign_extend" } else { "zero_extend" };
                    format!("((_ {ext} {}) {x})", to.bits - from.bits)
                } else if to.bits < from.bits {
                    format!("((_ extract {} 0) {x})", to.bits - 1)
                } else {
                    x
                }
            }
            CNode::Ite(cnd, t, e) => {
                format!("(ite (distinct {} {}) {} {})", term(cnd), bv(c.tys[cnd], 0), term(t), term(e))
            }
        };
        let _ = writeln!(s, "(define-fun |n{i}| () {} {body})", sort(ty));
    }
    if c.roots.is_empty() {
        s.push_str("(assert true)\n");
    }
    for &r in &c.roots {
        let _ = writeln!(s, "(assert (distinct {} {}))", term(r), bv(c.tys[r], 0));
    }
    s.push_str("(check-sat)\n(get-model)\n");
    s
}

fn cmp_ops(ty: IntTy) -> (&'static str, &'static str) {
    if ty.signed {
        ("bvsle", "bvslt")
    } else {
        ("bvule", "bvult")
    }
}

fn bv_value(e: &Sexpr) -> Option<u64> {
    match e {
        Sexpr::Atom(a) => {
            if let Some(h) = a.strip_prefix("#x") {
                u64::from_str_radix(h, 16).ok()
            } else if let Some(b) = a.strip_prefix("#b") {
                u64::from_str_radix(b, 2).ok()
            } else {
                None
            }
        }
        Sexpr::List(items) => match items.as_slice() {
            [Sexpr::Atom(u), Sexpr::Atom(v), Sexpr::Atom(_)] if u == "_" => v.strip_prefix("bv")?.parse().ok(),
            _ => None,
        },
    }
}

/// Values of the constraint's inputs in a `(get-model)` response,
/// reinterpreted at their declared types. Symbols the model omits are
/// left out.
pub fn parse_model(text: &str, constraint: &Constraint) -> Result<Model, String> {
    let exprs = parse_sexprs(text)?;
    let inputs = constraint.inputs();
    let mut model = Model::new();
    let mut visit = |e: &Sexpr| {
        let Some(items) = e.list() else { return };
        if let [Sexpr::Atom(kw), Sexpr::Atom(name), _, _, value] = items {
            if kw != "define-fun" {
                return;
            }
            if let (Some((_, ty, _)), Some(bits)) = (inputs.iter().find(|i| &*i.0 == name), bv_value(value)) {
                model.insert(name.clone(), ty.wrap(i128::from(bits)));
            }
        }
    };
    for e in &exprs {
        if let Some(items) = e.list() {
            for it in items {
                visit(it);
            }
        }
    }
    Ok(model)
}
