//! Per-function control-flow graphs.
//!
//! Nodes are statement blocks. A branch node ends in a decision and has one
//! labeled outgoing edge per outcome; every other node has exactly one
//! unlabeled outgoing edge, except the exit node which has none.

mod build;
mod decision;
mod distance;
mod dot;

use serde::{Deserialize, Serialize};

use crate::frontend::{Expr, Pos, Stmt};

pub use build::build_cfg;
pub use decision::{decompose, Formula};
pub use distance::{distances_to_exit, DistanceMap};
pub use dot::to_dot;

pub type NodeId = usize;
pub type EdgeId = usize;
pub type DecisionId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    Sequential,
    Branch,
    Exit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub stmts: Vec<Stmt>,
    pub decision: Option<DecisionId>,
    /// No path from the entry reaches this node.
    pub unreachable: bool,
    pub pos: Pos,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Outcome {
    True,
    False,
    Case(i64),
    Default,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeLabel {
    pub decision: DecisionId,
    pub outcome: Outcome,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub from: NodeId,
    pub to: NodeId,
    pub label: Option<EdgeLabel>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecisionKind {
    If,
    While,
    For,
    Switch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub id: DecisionId,
    pub kind: DecisionKind,
    pub node: NodeId,
    /// The controlling expression (the scrutinee for a switch).
    pub expr: Expr,
    pub atoms: Vec<Expr>,
    pub formula: Formula,
    pub pos: Pos,
}

impl Decision {
    /// Decisions with at least two atoms take part in MC/DC.
    pub fn is_compound(&self) -> bool {
        self.kind != DecisionKind::Switch && self.atoms.len() >= 2
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CfgWarning {
    pub pos: Pos,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cfg {
    pub function: String,
    pub nodes: Vec<Node>,
    pub edges: Vec<Edge>,
    pub decisions: Vec<Decision>,
    pub entry: NodeId,
    pub exit: NodeId,
    /// Outgoing edges of each node, in creation order.
    pub succ: Vec<Vec<EdgeId>>,
    pub warnings: Vec<CfgWarning>,
}

impl Cfg {
    pub fn out_edges(&self, n: NodeId) -> &[EdgeId] {
        &self.succ[n]
    }

    pub fn labeled_edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(|e| e.label.is_some())
    }

    /// Nodes counted by statement coverage: reachable blocks other than the
    /// synthetic entry and exit.
    pub fn statement_nodes(&self) -> impl Iterator<Item = &Node> {
        self.nodes.iter().filter(move |n| n.id != self.entry && n.id != self.exit && !n.unreachable)
    }

    /// The outgoing edge of `node` carrying `outcome`.
    pub fn edge_for(&self, node: NodeId, outcome: Outcome) -> Option<EdgeId> {
        self.succ[node].iter().copied().find(|&e| self.edges[e].label.map(|l| l.outcome) == Some(outcome))
    }

    /// For a switch node: the edge a concrete scrutinee value takes.
    pub fn switch_edge(&self, node: NodeId, value: i64) -> EdgeId {
        self.edge_for(node, Outcome::Case(value))
            .or_else(|| self.edge_for(node, Outcome::Default))
            .expect("switch nodes always have a default edge")
    }
}
