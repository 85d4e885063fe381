//! Shapes and names of input objects. The engine and the replay
//! interpreter both build parameter, global and stub objects from these
//! plans, so a test case's input names mean the same thing to both.

use crate::frontend::{Program, SubjectType};
use crate::semantics::IntTy;

/// Pointers nested deeper than this inside inputs are null.
pub const MAX_POINTEE_DEPTH: u32 = 2;

/// How an object's elements are named.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Base {
    /// A variable: `x`, `x[3]`, `x.f`.
    Named(String),
    /// The object a pointer-valued leaf points to: `*p`, `p->f`, `p[2]`.
    Pointee(String),
}

/// A scalar cell of an object.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Leaf {
    pub offset: u32,
    pub ty: SubjectType,
    pub path: String,
}

/// Scalar leaves of `count` consecutive elements of type `ty`.
pub fn leaves(program: &Program, ty: &SubjectType, count: u32, base: &Base) -> Vec<Leaf> {
    let size = program.size_of(ty);
    let mut out = Vec::new();
    for i in 0..count {
        let off = i * size;
        match base {
            Base::Named(n) if count > 1 => walk(program, ty, off, format!("{n}[{i}]"), &mut out),
            Base::Named(n) => walk(program, ty, off, n.clone(), &mut out),
            Base::Pointee(l) if count > 1 => walk(program, ty, off, format!("{l}[{i}]"), &mut out),
            Base::Pointee(l) => match ty {
                SubjectType::Record(r) => {
                    let layout = program.layout_of(*r);
                    for (f, (name, fo)) in program.records[*r].fields.iter().zip(&layout.field_offsets) {
                        walk(program, &f.ty, off + fo, format!("{l}->{name}"), &mut out);
                    }
                }
                SubjectType::Array(..) => walk(program, ty, off, format!("(*{l})"), &mut out),
                _ => walk(program, ty, off, format!("*{l}"), &mut out),
            },
        }
    }
    out
}

fn walk(program: &Program, ty: &SubjectType, off: u32, path: String, out: &mut Vec<Leaf>) {
    match ty {
        SubjectType::Array(e, n) => {
            let es = program.size_of(e);
            for j in 0..*n {
                walk(program, e, off + j * es, format!("{path}[{j}]"), out);
            }
        }
        SubjectType::Record(r) => {
            let layout = program.layout_of(*r);
            for (f, (name, fo)) in program.records[*r].fields.iter().zip(&layout.field_offsets) {
                walk(program, &f.ty, off + fo, format!("{path}.{name}"), out);
            }
        }
        _ => out.push(Leaf { offset: off, ty: ty.clone(), path }),
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LeafInit {
    Int {
        name: String,
        ty: IntTy,
        boolean: bool,
    },
    /// `null_flag` names the boolean input choosing a null pointer; absent
    /// means the pointer is definitely null (depth limit) when `pointee` is
    /// also absent, or definitely non-null otherwise. A void pointer has
    /// neither an element plan nor an alias.
    Pointer {
        null_flag: Option<String>,
        pointee: Option<Box<ObjectPlan>>,
        void: bool,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectPlan {
    pub ty: SubjectType,
    pub count: u32,
    pub base: Base,
    pub leaves: Vec<(Leaf, LeafInit)>,
}

pub fn null_flag_name(path: &str) -> String {
    format!("null({path})")
}

/// Plan for an input object. `extent` sizes the pointee of a top-level
/// pointer (array parameters).
pub fn input_plan(program: &Program, ty: &SubjectType, count: u32, base: Base, depth: u32, extent: u32) -> ObjectPlan {
    let top_scalar = count == 1 && ty.is_pointer();
    let leaves = leaves(program, ty, count, &base)
        .into_iter()
        .map(|leaf| {
            let init = match &leaf.ty {
                SubjectType::Pointer(_) | SubjectType::VoidPointer if depth >= MAX_POINTEE_DEPTH => {
                    LeafInit::Pointer { null_flag: None, pointee: None, void: leaf.ty == SubjectType::VoidPointer }
                }
                SubjectType::VoidPointer => {
                    LeafInit::Pointer { null_flag: Some(null_flag_name(&leaf.path)), pointee: None, void: true }
                }
                SubjectType::Pointer(t) => {
                    let n = if top_scalar { extent.max(1) } else { 1 };
                    let plan = input_plan(program, t, n, Base::Pointee(leaf.path.clone()), depth + 1, 1);
                    LeafInit::Pointer {
                        null_flag: Some(null_flag_name(&leaf.path)),
                        pointee: Some(Box::new(plan)),
                        void: false,
                    }
                }
                SubjectType::Bool => LeafInit::Int { name: leaf.path.clone(), ty: IntTy::U8, boolean: true },
                t => LeafInit::Int { name: leaf.path.clone(), ty: t.int_ty().expect("scalar leaf"), boolean: false },
            };
            (leaf, init)
        })
        .collect();
    ObjectPlan { ty: ty.clone(), count, base, leaves }
}

/// Name of the value returned by the `k`-th (1-based) call to `callee`
/// along a path.
pub fn stub_return_name(callee: &str, k: u32) -> String {
    format!("{callee}#{k}")
}

/// Name of an integer leaf written by a stub through a pointer argument.
pub fn stub_out_name(callee: &str, k: u32, param: &str, byte: u32) -> String {
    format!("{callee}#{k}.{param}+{byte}")
}

/// Name of a symbolic local's leaf on its `n`-th (1-based) declaration
/// along a path.
pub fn symbolic_local_name(path: &str, n: u32) -> String {
    format!("{path}@{n}")
}
