//! Symbolic integer expressions over named input symbols.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use crate::semantics::{self, ArithError, BinOp, IntTy, UnOp};

#[derive(Debug, PartialEq, Eq, Hash)]
pub enum SymNode {
    Const {
        ty: IntTy,
        value: i64,
    },
    /// A free input. `boolean` inputs range over {0, 1} only.
    Input {
        name: Arc<str>,
        ty: IntTy,
        boolean: bool,
    },
    /// Binary operator applied at operand type `ty`.
    Bin {
        op: BinOp,
        ty: IntTy,
        lhs: SymValue,
        rhs: SymValue,
    },
    Un {
        op: UnOp,
        ty: IntTy,
        operand: SymValue,
    },
    Cast {
        to: IntTy,
        operand: SymValue,
    },
    /// `cond != 0 ? then : otherwise`
    Ite {
        ty: IntTy,
        cond: SymValue,
        then: SymValue,
        otherwise: SymValue,
    },
}

/// Shared, immutable expression DAG node.
#[derive(Clone, Debug, Eq)]
pub struct SymValue(Arc<SymNode>);

impl PartialEq for SymValue {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Hash for SymValue {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("no value for input `{0}`")]
    MissingInput(String),
}

impl From<ArithError> for EvalError {
    fn from(_: ArithError) -> Self {
        EvalError::DivisionByZero
    }
}

impl SymValue {
    pub fn node(&self) -> &SymNode {
        &self.0
    }

    pub fn id(&self) -> usize {
        Arc::as_ptr(&self.0) as usize
    }

    pub fn constant(ty: IntTy, value: i64) -> SymValue {
        SymValue(Arc::new(SymNode::Const { ty, value: ty.wrap(i128::from(value)) }))
    }

    pub fn int(value: i64) -> SymValue {
        SymValue::constant(IntTy::I32, value)
    }

    pub fn offset(value: i64) -> SymValue {
        SymValue::constant(IntTy::I64, value)
    }

    pub fn input(name: &str, ty: IntTy, boolean: bool) -> SymValue {
        SymValue(Arc::new(SymNode::Input { name: name.into(), ty, boolean }))
    }

    pub fn ty(&self) -> IntTy {
        match self.node() {
            SymNode::Const { ty, .. } | SymNode::Input { ty, .. } | SymNode::Ite { ty, .. } => *ty,
            SymNode::Bin { op, ty, .. } => semantics::result_ty(*op, *ty),
            SymNode::Un { op: UnOp::Not, .. } => IntTy::I32,
            SymNode::Un { ty, .. } => *ty,
            SymNode::Cast { to, .. } => *to,
        }
    }

    pub fn as_const(&self) -> Option<i64> {
        match self.node() {
            SymNode::Const { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        self.as_const().is_some()
    }

    /// Binary operation with constant folding. Division by a constant zero
    /// is left unfolded.
    pub fn bin(op: BinOp, ty: IntTy, lhs: SymValue, rhs: SymValue) -> SymValue {
        let lhs = lhs.cast(ty);
        let rhs = rhs.cast(ty);
        if let (Some(a), Some(b)) = (lhs.as_const(), rhs.as_const()) {
            if let Ok(v) = semantics::binop(op, ty, a, b) {
                return SymValue::constant(semantics::result_ty(op, ty), v);
            }
        }
        match (op, rhs.as_const(), lhs.as_const()) {
            (BinOp::Add | BinOp::Sub | BinOp::BitOr | BinOp::BitXor | BinOp::Shl | BinOp::Shr, Some(0), _) => {
                return lhs
            }
            (BinOp::Mul | BinOp::Div, Some(1), _) => return lhs,
            (BinOp::Add | BinOp::BitOr | BinOp::BitXor, _, Some(0)) => return rhs,
            (BinOp::Mul, _, Some(1)) => return rhs,
            _ => {}
        }
        SymValue(Arc::new(SymNode::Bin { op, ty, lhs, rhs }))
    }

    pub fn un(op: UnOp, ty: IntTy, operand: SymValue) -> SymValue {
        let operand = if op == UnOp::Not { operand } else { operand.cast(ty) };
        let ty = if op == UnOp::Not { operand.ty() } else { ty };
        if let Some(v) = operand.as_const() {
            let rt = if op == UnOp::Not { IntTy::I32 } else { ty };
            return SymValue::constant(rt, semantics::unop(op, ty, v));
        }
        SymValue(Arc::new(SymNode::Un { op, ty, operand }))
    }

    pub fn cast(self, to: IntTy) -> SymValue {
        if self.ty() == to {
            return self;
        }
        if let Some(v) = self.as_const() {
            return SymValue::constant(to, semantics::cast(to, v));
        }
        SymValue(Arc::new(SymNode::Cast { to, operand: self }))
    }

    pub fn ite(cond: SymValue, then: SymValue, otherwise: SymValue) -> SymValue {
        let ty = then.ty();
        let otherwise = otherwise.cast(ty);
        if let Some(c) = cond.as_const() {
            return if c != 0 { then } else { otherwise };
        }
        if then == otherwise {
            return then;
        }
        SymValue(Arc::new(SymNode::Ite { ty, cond, then, otherwise }))
    }

    pub fn cmp(op: BinOp, lhs: SymValue, rhs: SymValue) -> SymValue {
        debug_assert!(op.is_comparison());
        let ty = IntTy::common(lhs.ty(), rhs.ty());
        let ty = if lhs.ty() == rhs.ty() { lhs.ty() } else { ty };
        SymValue::bin(op, ty, lhs, rhs)
    }

    pub fn eq(lhs: SymValue, rhs: SymValue) -> SymValue {
        SymValue::cmp(BinOp::Eq, lhs, rhs)
    }

    /// Comparison node, if this is one.
    fn comparison(&self) -> Option<(BinOp, IntTy, &SymValue, &SymValue)> {
        match self.node() {
            SymNode::Bin { op, ty, lhs, rhs } if op.is_comparison() => Some((*op, *ty, lhs, rhs)),
            _ => None,
        }
    }

    /// A 0/1 value that is 1 exactly when `self` is non-zero.
    pub fn truthy(&self) -> SymValue {
        if self.comparison().is_some() || self.is_boolean_valued() {
            return self.clone();
        }
        let ty = self.ty();
        SymValue::bin(BinOp::Ne, ty, self.clone(), SymValue::constant(ty, 0))
    }

    /// A 0/1 value that is 1 exactly when `self` is zero.
    pub fn falsy(&self) -> SymValue {
        if let Some((op, ty, l, r)) = self.comparison() {
            let neg = op.negate_comparison().expect("comparison");
            return SymValue::bin(neg, ty, l.clone(), r.clone());
        }
        if let SymNode::Un { op: UnOp::Not, operand, .. } = self.node() {
            return operand.truthy();
        }
        let ty = self.ty();
        SymValue::bin(BinOp::Eq, ty, self.clone(), SymValue::constant(ty, 0))
    }

    fn is_boolean_valued(&self) -> bool {
        match self.node() {
            SymNode::Bin { op, .. } => op.is_boolean(),
            SymNode::Un { op: UnOp::Not, .. } => true,
            SymNode::Input { boolean, .. } => *boolean,
            _ => false,
        }
    }

    pub fn and(a: SymValue, b: SymValue) -> SymValue {
        match (a.as_const(), b.as_const()) {
            (Some(0), _) | (_, Some(0)) => SymValue::int(0),
            (Some(_), _) => b.truthy(),
            (_, Some(_)) => a.truthy(),
            _ => SymValue::bin(BinOp::LogAnd, IntTy::I32, a.truthy(), b.truthy()),
        }
    }

    pub fn or(a: SymValue, b: SymValue) -> SymValue {
        match (a.as_const(), b.as_const()) {
            (Some(x), _) if x != 0 => SymValue::int(1),
            (_, Some(x)) if x != 0 => SymValue::int(1),
            (Some(_), _) => b.truthy(),
            (_, Some(_)) => a.truthy(),
            _ => SymValue::bin(BinOp::LogOr, IntTy::I32, a.truthy(), b.truthy()),
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(a: SymValue) -> SymValue {
        a.falsy()
    }

    /// Evaluate under an input assignment.
    pub fn eval(&self, env: &dyn Fn(&str) -> Option<i64>) -> Result<i64, EvalError> {
        let mut memo = HashMap::new();
        self.eval_memo(env, &mut memo)
    }

    pub fn eval_memo(
        &self,
        env: &dyn Fn(&str) -> Option<i64>,
        memo: &mut HashMap<usize, i64>,
    ) -> Result<i64, EvalError> {
        if let Some(v) = memo.get(&self.id()) {
            return Ok(*v);
        }
        let v = match self.node() {
            SymNode::Const { value, .. } => *value,
            SymNode::Input { name, ty, .. } => {
                let v = env(name).ok_or_else(|| EvalError::MissingInput(name.to_string()))?;
                ty.wrap(i128::from(v))
            }
            SymNode::Bin { op, ty, lhs, rhs } => {
                let a = lhs.eval_memo(env, memo)?;
                let b = rhs.eval_memo(env, memo)?;
                semantics::binop(*op, *ty, a, b)?
            }
            SymNode::Un { op, ty, operand } => semantics::unop(*op, *ty, operand.eval_memo(env, memo)?),
            SymNode::Cast { to, operand } => semantics::cast(*to, operand.eval_memo(env, memo)?),
            SymNode::Ite { cond, then, otherwise, .. } => {
                if cond.eval_memo(env, memo)? != 0 {
                    then.eval_memo(env, memo)?
                } else {
                    otherwise.eval_memo(env, memo)?
                }
            }
        };
        memo.insert(self.id(), v);
        Ok(v)
    }

    /// Input symbols in order of first appearance (depth-first, left to right).
    pub fn inputs(&self) -> Vec<(Arc<str>, IntTy, bool)> {
        let mut out = Vec::new();
        let mut seen_nodes = HashSet::new();
        let mut seen_names = HashSet::new();
        self.collect_inputs(&mut out, &mut seen_nodes, &mut seen_names);
        out
    }

    pub(crate) fn collect_inputs(
        &self,
        out: &mut Vec<(Arc<str>, IntTy, bool)>,
        seen_nodes: &mut HashSet<usize>,
        seen_names: &mut HashSet<Arc<str>>,
    ) {
        if !seen_nodes.insert(self.id()) {
            return;
        }
        match self.node() {
            SymNode::Const { .. } => {}
            SymNode::Input { name, ty, boolean } => {
                if seen_names.insert(name.clone()) {
                    out.push((name.clone(), *ty, *boolean));
                }
            }
            SymNode::Bin { lhs, rhs, .. } => {
                lhs.collect_inputs(out, seen_nodes, seen_names);
                rhs.collect_inputs(out, seen_nodes, seen_names);
            }
            SymNode::Un { operand, .. } | SymNode::Cast { operand, .. } => {
                operand.collect_inputs(out, seen_nodes, seen_names)
            }
            SymNode::Ite { cond, then, otherwise, .. } => {
                cond.collect_inputs(out, seen_nodes, seen_names);
                then.collect_inputs(out, seen_nodes, seen_names);
                otherwise.collect_inputs(out, seen_nodes, seen_names);
            }
        }
    }
}

impl fmt::Display for SymValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            SymNode::Const { value, .. } => write!(f, "{value}"),
            SymNode::Input { name, .. } => write!(f, "{name}"),
            SymNode::Bin { op, lhs, rhs, .. } => write!(f, "({lhs} {} {rhs})", op.symbol()),
            SymNode::Un { op, operand, .. } => write!(f, "{}{operand}", op.symbol()),
            SymNode::Cast { to, operand } => write!(f, "({to}){operand}"),
            SymNode::Ite { cond, then, otherwise, .. } => write!(f, "({cond} ? {then} : {otherwise})"),
        }
    }
}
