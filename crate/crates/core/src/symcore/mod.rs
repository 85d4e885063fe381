//! Symbolic values, path constraints and the simulated memory model.

mod access;
mod materialize;
mod memory;
pub mod plan;
mod value;

use std::collections::HashSet;
use std::sync::Arc;

use crate::cfg::{DecisionId, EdgeId, NodeId};
use crate::semantics::IntTy;

pub use access::{load_symbolic, store_symbolic, SymMemory, SymPointer};
pub use materialize::{leaf_cell, materialize, LeafSource};
pub use memory::{
    compatible, Cell, MemFault, MemoryObject, MemoryState, ObjectId, Origin, PointerValue, PtrTarget, RecordBlock,
    VoidMemory, VoidSlot,
};
pub use value::{EvalError, SymNode, SymValue};

/// Why a conjunct is on the path.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Provenance {
    /// An atom of a decision took `truth` on the way to `edge`.
    Branch { edge: EdgeId, decision: DecisionId, atom: usize, truth: bool },
    /// A switch scrutinee matched the case of `edge`.
    Case { edge: EdgeId, decision: DecisionId },
    /// A runtime check passed (or, in a witness, failed) at a statement.
    Guard { node: NodeId, stmt: usize },
    /// Assumption introduced by a stub or input shape.
    Assume,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Conjunct {
    pub value: SymValue,
    pub origin: Provenance,
}

/// Ordered conjunction of boolean values, in collection order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Constraint {
    pub conjuncts: Vec<Conjunct>,
}

impl Constraint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append `value`, dropping constant-true conjuncts.
    pub fn push(&mut self, value: SymValue, origin: Provenance) {
        if matches!(value.as_const(), Some(v) if v != 0) {
            return;
        }
        self.conjuncts.push(Conjunct { value, origin });
    }

    pub fn with(&self, value: SymValue, origin: Provenance) -> Constraint {
        let mut c = self.clone();
        c.push(value, origin);
        c
    }

    pub fn len(&self) -> usize {
        self.conjuncts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }

    /// A conjunct is the constant false.
    pub fn trivially_false(&self) -> bool {
        self.conjuncts.iter().any(|c| c.value.as_const() == Some(0))
    }

    pub fn values(&self) -> impl Iterator<Item = &SymValue> {
        self.conjuncts.iter().map(|c| &c.value)
    }

    /// Input symbols in order of first appearance.
    pub fn inputs(&self) -> Vec<(Arc<str>, IntTy, bool)> {
        let mut out = Vec::new();
        let mut nodes = HashSet::new();
        let mut names = HashSet::new();
        for c in &self.conjuncts {
            c.value.collect_inputs(&mut out, &mut nodes, &mut names);
        }
        out
    }

    /// Every conjunct holds under `env`.
    pub fn holds(&self, env: &dyn Fn(&str) -> Option<i64>) -> Result<bool, EvalError> {
        let mut memo = std::collections::HashMap::new();
        for c in &self.conjuncts {
            if c.value.eval_memo(env, &mut memo)? == 0 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::BinOp;

    #[test]
    fn constraint_order_and_inputs() {
        let x = SymValue::input("x", IntTy::I32, false);
        let y = SymValue::input("y", IntTy::I32, false);
        let mut c = Constraint::new();
        c.push(SymValue::cmp(BinOp::Gt, y.clone(), SymValue::int(0)), Provenance::Assume);
        c.push(SymValue::int(1), Provenance::Assume);
        c.push(SymValue::cmp(BinOp::Lt, x.clone(), y.clone()), Provenance::Assume);
        assert_eq!(c.len(), 2);
        let names: Vec<String> = c.inputs().iter().map(|i| i.0.to_string()).collect();
        assert_eq!(names, ["y", "x"]);
        let env = |n: &str| match n {
            "x" => Some(1),
            "y" => Some(2),
            _ => None,
        };
        assert_eq!(c.holds(&env), Ok(true));
        assert!(!c.trivially_false());
        c.push(SymValue::int(0), Provenance::Assume);
        assert!(c.trivially_false());
    }
}
