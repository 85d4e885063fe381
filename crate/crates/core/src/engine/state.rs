use std::collections::BTreeMap;

use crate::cfg::{EdgeId, NodeId};
use crate::frontend::FuncId;
use crate::solver::Model;
use crate::symcore::{Constraint, ObjectId, SymMemory};

use super::{DecisionEval, Step};

/// Variables of one activation: the object each local lives in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    pub function: FuncId,
    pub vars: Vec<Option<ObjectId>>,
    /// Declarations executed per variable, for naming symbolic locals.
    pub decls: Vec<u32>,
}

impl Frame {
    pub fn new(function: FuncId, nvars: usize) -> Self {
        Frame { function, vars: vec![None; nvars], decls: vec![0; nvars] }
    }
}

/// One stubbed call: where it happened and the symbols it introduced.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StubCall {
    pub callee: String,
    /// 1-based call number of this callee along the path.
    pub k: u32,
    pub site: (NodeId, usize),
    /// Symbols making up the return value.
    pub returns: Vec<String>,
    /// Symbols written through pointer arguments.
    pub outs: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct ExecutionState {
    pub current: NodeId,
    /// `None` while the current node's statements are still to run.
    pub pending_edge: Option<EdgeId>,
    pub path: Constraint,
    pub memory: SymMemory,
    /// Innermost activation last.
    pub frames: Vec<Frame>,
    pub globals: Vec<ObjectId>,
    pub stub_ledger: Vec<StubCall>,
    pub stub_counts: BTreeMap<String, u32>,
    /// Input symbols of parameters, globals and symbolic locals.
    pub inputs: Vec<String>,
    pub trace: Vec<Step>,
    pub decisions: Vec<DecisionEval>,
    /// Satisfies `path` whenever present.
    pub model: Option<Model>,
    /// Per-path edge counts; only the depth-first scheduler keeps them.
    pub edge_counts: Vec<u32>,
}

impl ExecutionState {
    pub fn frame(&self) -> &Frame {
        self.frames.last().expect("an active frame")
    }

    pub fn frame_mut(&mut self) -> &mut Frame {
        self.frames.last_mut().expect("an active frame")
    }
}
