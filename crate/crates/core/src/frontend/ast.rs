//! Typed AST produced by [`super::parse`].

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::semantics::{BinOp, IntTy, UnOp};

pub type RecordId = usize;
pub type EnumId = usize;
pub type VarId = usize;
pub type GlobalId = usize;
pub type FuncId = usize;
pub type ExtId = usize;

/// Source position (1-based).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SubjectType {
    Int(IntTy),
    /// Boolean stored as an unsigned byte holding 0 or 1.
    Bool,
    Enum(EnumId),
    Pointer(Box<SubjectType>),
    VoidPointer,
    Array(Box<SubjectType>, u32),
    Record(RecordId),
    Void,
}

impl SubjectType {
    /// Integer representation of a scalar non-pointer type.
    pub fn int_ty(&self) -> Option<IntTy> {
        match self {
            SubjectType::Int(t) => Some(*t),
            SubjectType::Bool => Some(IntTy::U8),
            SubjectType::Enum(_) => Some(IntTy::I32),
            _ => None,
        }
    }

    pub fn is_integer(&self) -> bool {
        self.int_ty().is_some()
    }

    pub fn is_pointer(&self) -> bool {
        matches!(self, SubjectType::Pointer(_) | SubjectType::VoidPointer)
    }

    pub fn is_scalar(&self) -> bool {
        self.is_integer() || self.is_pointer()
    }

    pub fn pointee(&self) -> Option<&SubjectType> {
        match self {
            SubjectType::Pointer(t) => Some(t),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordLayout {
    pub field_offsets: Vec<(String, u32)>,
    pub total_size: u32,
    pub alignment: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDecl {
    pub name: String,
    pub ty: SubjectType,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordDecl {
    pub name: String,
    pub fields: Vec<FieldDecl>,
    pub layout: Option<RecordLayout>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnumDecl {
    pub name: String,
    pub variants: Vec<(String, i64)>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VarDecl {
    pub name: String,
    pub ty: SubjectType,
    pub pos: Pos,
}

/// A function parameter. Array-declared parameters decay to pointers; the
/// declared element count is kept in `extent` and sizes the object the
/// pointer refers to during generation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Param {
    pub name: String,
    pub ty: SubjectType,
    pub extent: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDecl {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: SubjectType,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalVar {
    pub name: String,
    pub ty: SubjectType,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionDef {
    pub name: String,
    pub params: Vec<Param>,
    pub return_type: SubjectType,
    pub body: Block,
    /// Every variable of the function; parameters occupy the first slots.
    pub locals: Vec<LocalVar>,
    pub pos: Pos,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Program {
    pub functions: Vec<FunctionDef>,
    pub records: Vec<RecordDecl>,
    pub enums: Vec<EnumDecl>,
    pub globals: Vec<VarDecl>,
    pub externals: Vec<FunctionDecl>,
}

impl Program {
    pub fn function(&self, name: &str) -> Option<&FunctionDef> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn layout_of(&self, rec: RecordId) -> &RecordLayout {
        self.records[rec].layout.as_ref().expect("record layouts are computed during parsing")
    }

    pub fn size_of(&self, ty: &SubjectType) -> u32 {
        super::layout::size_align(self, ty).0
    }

    pub fn align_of(&self, ty: &SubjectType) -> u32 {
        super::layout::size_align(self, ty).1
    }

    pub fn callee_name(&self, callee: Callee) -> &str {
        match callee {
            Callee::Defined(id) => &self.functions[id].name,
            Callee::External(id) => &self.externals[id].name,
        }
    }

    pub fn callee_return(&self, callee: Callee) -> &SubjectType {
        match callee {
            Callee::Defined(id) => &self.functions[id].return_type,
            Callee::External(id) => &self.externals[id].return_type,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VarRef {
    Local(VarId),
    Global(GlobalId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Callee {
    Defined(FuncId),
    External(ExtId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LogicOp {
    And,
    Or,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Expr {
    pub kind: ExprKind,
    pub ty: SubjectType,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExprKind {
    Const(i64),
    Var(VarRef),
    /// `-` or `~` at the expression's own integer type.
    Unary(UnOp, Box<Expr>),
    /// Integer arithmetic or comparison; both operands share one integer type.
    Binary(BinOp, Box<Expr>, Box<Expr>),
    /// Short-circuit `&&` / `||`.
    Logical(LogicOp, Box<Expr>, Box<Expr>),
    /// Logical `!` over an integer or pointer operand.
    LogNot(Box<Expr>),
    /// Conversion to `self.ty`.
    Cast(Box<Expr>),
    /// Array lvalue used as a pointer to its first element.
    Decay(Box<Expr>),
    /// `base[index]` where `base` is pointer-valued; an lvalue.
    Index(Box<Expr>, Box<Expr>),
    /// Field of a record lvalue, by field index.
    Field(Box<Expr>, usize),
    Deref(Box<Expr>),
    AddrOf(Box<Expr>),
    /// `ptr + delta` (or `ptr - delta` when `negate`), scaled by the pointee size.
    PtrOffset {
        ptr: Box<Expr>,
        delta: Box<Expr>,
        negate: bool,
    },
    /// Pointer comparison (`==`, `!=`, `<`, ...).
    PtrCompare(BinOp, Box<Expr>, Box<Expr>),
    Call(Callee, Vec<Expr>),
}

impl Expr {
    pub fn is_lvalue(&self) -> bool {
        matches!(self.kind, ExprKind::Var(_) | ExprKind::Index(..) | ExprKind::Field(..) | ExprKind::Deref(_))
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.kind {
            ExprKind::Const(v) => Some(v),
            _ => None,
        }
    }

    /// Pre-order visit of this expression and all subexpressions.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a Expr)) {
        f(self);
        match &self.kind {
            ExprKind::Const(_) | ExprKind::Var(_) => {}
            ExprKind::Unary(_, e)
            | ExprKind::LogNot(e)
            | ExprKind::Cast(e)
            | ExprKind::Decay(e)
            | ExprKind::Field(e, _)
            | ExprKind::Deref(e)
            | ExprKind::AddrOf(e) => e.walk(f),
            ExprKind::Binary(_, a, b)
            | ExprKind::Logical(_, a, b)
            | ExprKind::Index(a, b)
            | ExprKind::PtrCompare(_, a, b) => {
                a.walk(f);
                b.walk(f);
            }
            ExprKind::PtrOffset { ptr, delta, .. } => {
                ptr.walk(f);
                delta.walk(f);
            }
            ExprKind::Call(_, args) => args.iter().for_each(|a| a.walk(f)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CaseLabel {
    Case(i64),
    Default,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SwitchArm {
    pub labels: Vec<CaseLabel>,
    pub body: Block,
    pub pos: Pos,
}

pub type Block = Vec<Stmt>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stmt {
    pub kind: StmtKind,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum StmtKind {
    Decl { var: VarId, init: Option<Expr> },
    Assign { target: Expr, value: Expr },
    Expr(Expr),
    If { cond: Expr, then_branch: Block, else_branch: Option<Block> },
    While { cond: Expr, body: Block },
    For { init: Block, cond: Option<Expr>, step: Block, body: Block },
    Switch { scrutinee: Expr, arms: Vec<SwitchArm> },
    Break,
    Continue,
    Return(Option<Expr>),
    Block(Block),
}

/// Walk every statement (including nested ones) in pre-order.
pub fn walk_stmts<'a>(block: &'a [Stmt], f: &mut impl FnMut(&'a Stmt)) {
    for s in block {
        f(s);
        match &s.kind {
            StmtKind::If { then_branch, else_branch, .. } => {
                walk_stmts(then_branch, f);
                if let Some(e) = else_branch {
                    walk_stmts(e, f);
                }
            }
            StmtKind::While { body, .. } => walk_stmts(body, f),
            StmtKind::For { init, step, body, .. } => {
                walk_stmts(init, f);
                walk_stmts(step, f);
                walk_stmts(body, f);
            }
            StmtKind::Switch { arms, .. } => arms.iter().for_each(|a| walk_stmts(&a.body, f)),
            StmtKind::Block(b) => walk_stmts(b, f),
            _ => {}
        }
    }
}
