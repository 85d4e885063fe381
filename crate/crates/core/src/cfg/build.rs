use std::collections::VecDeque;

use super::*;
use crate::frontend::{CaseLabel, Expr, ExprKind, FunctionDef, Pos, Stmt, StmtKind};

type Dangling = Vec<(NodeId, Option<EdgeLabel>)>;

struct Jumps {
    is_loop: bool,
    breaks: Dangling,
    continues: Dangling,
}

struct Builder {
    cfg: Cfg,
    /// Sequential node still accepting statements.
    open: Option<NodeId>,
    /// Edges waiting for their target.
    dangling: Dangling,
    jumps: Vec<Jumps>,
}

pub fn build_cfg(f: &FunctionDef) -> Cfg {
    let mut b = Builder {
        cfg: Cfg {
            function: f.name.clone(),
            nodes: Vec::new(),
            edges: Vec::new(),
            decisions: Vec::new(),
            entry: 0,
            exit: 1,
            succ: Vec::new(),
            warnings: Vec::new(),
        },
        open: None,
        dangling: Vec::new(),
        jumps: Vec::new(),
    };
    let entry = b.node(NodeKind::Sequential, f.pos);
    let exit = b.node(NodeKind::Exit, f.pos);
    b.cfg.entry = entry;
    b.cfg.exit = exit;
    b.dangling.push((entry, None));
    b.block(&f.body);
    let rest = b.finish();
    b.connect(rest, exit);
    b.mark_unreachable();
    b.cfg
}

impl Builder {
    fn node(&mut self, kind: NodeKind, pos: Pos) -> NodeId {
        let id = self.cfg.nodes.len();
        self.cfg.nodes.push(Node { id, kind, stmts: Vec::new(), decision: None, unreachable: false, pos });
        self.cfg.succ.push(Vec::new());
        id
    }

    fn edge(&mut self, from: NodeId, to: NodeId, label: Option<EdgeLabel>) {
        let id = self.cfg.edges.len();
        self.cfg.edges.push(Edge { id, from, to, label });
        self.cfg.succ[from].push(id);
    }

    fn connect(&mut self, d: Dangling, to: NodeId) {
        for (from, label) in d {
            self.edge(from, to, label);
        }
    }

    /// Current exits as dangling edges; closes the open node.
    fn finish(&mut self) -> Dangling {
        match self.open.take() {
            Some(n) => vec![(n, None)],
            None => std::mem::take(&mut self.dangling),
        }
    }

    fn ensure_open(&mut self, pos: Pos) -> NodeId {
        if let Some(n) = self.open {
            return n;
        }
        let n = self.node(NodeKind::Sequential, pos);
        let d = std::mem::take(&mut self.dangling);
        if d.is_empty() {
            self.cfg.warnings.push(CfgWarning { pos, message: "unreachable code".into() });
        }
        self.connect(d, n);
        self.open = Some(n);
        n
    }

    fn decision(&mut self, node: NodeId, kind: DecisionKind, expr: &Expr, pos: Pos) -> DecisionId {
        let id = self.cfg.decisions.len();
        let (atoms, formula) =
            if kind == DecisionKind::Switch { (vec![expr.clone()], Formula::Atom(0)) } else { decompose(expr) };
        self.cfg.decisions.push(Decision { id, kind, node, expr: expr.clone(), atoms, formula, pos });
        let n = &mut self.cfg.nodes[node];
        n.kind = NodeKind::Branch;
        n.decision = Some(id);
        id
    }

    fn block(&mut self, b: &[Stmt]) {
        for s in b {
            self.stmt(s);
        }
    }

    fn stmt(&mut self, s: &Stmt) {
        match &s.kind {
            StmtKind::Decl { .. } | StmtKind::Assign { .. } | StmtKind::Expr(_) => {
                let n = self.ensure_open(s.pos);
                self.cfg.nodes[n].stmts.push(s.clone());
            }
            StmtKind::Return(_) => {
                let n = self.ensure_open(s.pos);
                self.cfg.nodes[n].stmts.push(s.clone());
                self.open = None;
                let exit = self.cfg.exit;
                self.edge(n, exit, None);
            }
            StmtKind::Block(b) => self.block(b),
            StmtKind::If { cond, then_branch, else_branch } => {
                let n = self.ensure_open(s.pos);
                let d = self.decision(n, DecisionKind::If, cond, s.pos);
                self.open = None;
                self.dangling = vec![(n, Some(EdgeLabel { decision: d, outcome: Outcome::True }))];
                self.block(then_branch);
                let mut out = self.finish();
                self.dangling = vec![(n, Some(EdgeLabel { decision: d, outcome: Outcome::False }))];
                if let Some(e) = else_branch {
                    self.block(e);
                }
                out.extend(self.finish());
                self.dangling = out;
            }
            StmtKind::While { cond, body } => self.looping(Some(cond), &[], body, DecisionKind::While, s.pos),
            StmtKind::For { init, cond, step, body } => {
                self.block(init);
                self.looping(cond.as_ref(), step, body, DecisionKind::For, s.pos);
            }
            StmtKind::Switch { scrutinee, arms } => {
                let n = self.ensure_open(s.pos);
                let d = self.decision(n, DecisionKind::Switch, scrutinee, s.pos);
                self.open = None;
                self.jumps.push(Jumps { is_loop: false, breaks: Vec::new(), continues: Vec::new() });
                let mut has_default = false;
                let mut fall: Dangling = Vec::new();
                for arm in arms {
                    let mut entry = fall;
                    for l in &arm.labels {
                        let outcome = match l {
                            CaseLabel::Case(v) => Outcome::Case(*v),
                            CaseLabel::Default => {
                                has_default = true;
                                Outcome::Default
                            }
                        };
                        entry.push((n, Some(EdgeLabel { decision: d, outcome })));
                    }
                    self.dangling = entry;
                    self.block(&arm.body);
                    fall = self.finish();
                }
                let j = self.jumps.pop().expect("switch context");
                let mut out = fall;
                out.extend(j.breaks);
                if !has_default {
                    out.push((n, Some(EdgeLabel { decision: d, outcome: Outcome::Default })));
                }
                self.dangling = out;
            }
            StmtKind::Break => {
                let d = self.finish();
                let j = self.jumps.last_mut().expect("break inside loop or switch");
                j.breaks.extend(d);
            }
            StmtKind::Continue => {
                let d = self.finish();
                let j = self.jumps.iter_mut().rev().find(|j| j.is_loop).expect("continue inside loop");
                j.continues.extend(d);
            }
        }
    }

    fn looping(&mut self, cond: Option<&Expr>, step: &[Stmt], body: &[Stmt], kind: DecisionKind, pos: Pos) {
        let pre = self.finish();
        let header = self.node(NodeKind::Sequential, pos);
        self.connect(pre, header);
        let always = match cond {
            None => true,
            Some(c) => matches!(c.kind, ExprKind::Const(v) if v != 0),
        };
        let mut after: Dangling = Vec::new();
        if always {
            self.dangling = vec![(header, None)];
        } else {
            let c = cond.expect("non-constant condition");
            let d = self.decision(header, kind, c, pos);
            self.dangling = vec![(header, Some(EdgeLabel { decision: d, outcome: Outcome::True }))];
            after.push((header, Some(EdgeLabel { decision: d, outcome: Outcome::False })));
        }
        self.jumps.push(Jumps { is_loop: true, breaks: Vec::new(), continues: Vec::new() });
        self.block(body);
        let j = self.jumps.pop().expect("loop context");
        let mut back = self.finish();
        back.extend(j.continues);
        if step.is_empty() {
            self.connect(back, header);
        } else {
            self.dangling = back;
            let reachable = !self.dangling.is_empty();
            if reachable {
                self.block(step);
                let d = self.finish();
                self.connect(d, header);
            } else {
                self.dangling.clear();
            }
        }
        after.extend(j.breaks);
        self.open = None;
        self.dangling = after;
    }

    fn mark_unreachable(&mut self) {
        let mut seen = vec![false; self.cfg.nodes.len()];
        let mut q = VecDeque::from([self.cfg.entry]);
        seen[self.cfg.entry] = true;
        while let Some(n) = q.pop_front() {
            for &e in &self.cfg.succ[n] {
                let t = self.cfg.edges[e].to;
                if !seen[t] {
                    seen[t] = true;
                    q.push_back(t);
                }
            }
        }
        for (n, s) in self.cfg.nodes.iter_mut().zip(seen) {
            n.unreachable = !s && n.kind != NodeKind::Exit;
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::frontend::parse;

    pub(crate) const CHECK_SIGN: &str = "
int checkSign(int x) {
    if (x > 0) {
        return 1;
    } else if (x == 0) {
        return 0;
    }
    return -1;
}";

    fn cfg_of(src: &str) -> Cfg {
        let p = parse(src).unwrap();
        build_cfg(p.functions.last().unwrap())
    }

    fn check_invariants(c: &Cfg) {
        assert_eq!(c.nodes[c.exit].kind, NodeKind::Exit);
        assert!(c.succ[c.exit].is_empty());
        for n in &c.nodes {
            match n.kind {
                NodeKind::Sequential if !n.unreachable || !c.succ[n.id].is_empty() => {
                    assert_eq!(c.succ[n.id].len(), 1, "node {}", n.id);
                    assert!(c.edges[c.succ[n.id][0]].label.is_none());
                }
                NodeKind::Branch => {
                    let labels: Vec<_> = c.succ[n.id].iter().map(|&e| c.edges[e].label.unwrap()).collect();
                    assert!(labels.len() >= 2);
                    for (i, a) in labels.iter().enumerate() {
                        assert_eq!(a.decision, n.decision.unwrap());
                        assert!(labels[i + 1..].iter().all(|b| b.outcome != a.outcome));
                    }
                }
                _ => {}
            }
        }
    }

    #[test]
    fn check_sign_graph() {
        let c = cfg_of(CHECK_SIGN);
        check_invariants(&c);
        let branches = c.nodes.iter().filter(|n| n.kind == NodeKind::Branch).count();
        assert_eq!(branches, 2);
        assert_eq!(c.labeled_edges().count(), 4);
        let returns_to_exit = c
            .edges
            .iter()
            .filter(|e| {
                e.to == c.exit && c.nodes[e.from].stmts.last().is_some_and(|s| matches!(s.kind, StmtKind::Return(_)))
            })
            .count();
        assert_eq!(returns_to_exit, 3);
    }

    #[test]
    fn straight_line() {
        let c = cfg_of("int f(int a) { int b = a + 1; return b; }");
        check_invariants(&c);
        assert_eq!(c.labeled_edges().count(), 0);
        // entry -> block -> exit
        assert_eq!(c.nodes.len(), 3);
        assert_eq!(c.edges.len(), 2);
    }

    #[test]
    fn while_loop_shape() {
        let c = cfg_of("int f(int n) { int i = 0; while (i < n) { i = i + 1; } return i; }");
        check_invariants(&c);
        let header = c.nodes.iter().find(|n| n.kind == NodeKind::Branch).unwrap().id;
        let t = c.edge_for(header, Outcome::True).unwrap();
        let body = c.edges[t].to;
        // the body's only edge returns to the header
        assert_eq!(c.edges[c.succ[body][0]].to, header);
        let fe = c.edge_for(header, Outcome::False).unwrap();
        assert_ne!(c.edges[fe].to, header);
        // entry, init block, header, body, return block, exit
        assert_eq!(c.nodes.len(), 6);
        assert_eq!(c.labeled_edges().count(), 2);
    }

    #[test]
    fn switch_has_case_and_default_edges() {
        let c =
            cfg_of("int f(int x) { int r = 0; switch (x) { case 1: r = 1; break; case 2: case 3: r = 2; } return r; }");
        check_invariants(&c);
        assert_eq!(c.labeled_edges().count(), 4);
        let sw = c.nodes.iter().find(|n| n.kind == NodeKind::Branch).unwrap().id;
        assert_eq!(c.edges[c.switch_edge(sw, 3)].to, c.edges[c.switch_edge(sw, 2)].to);
        assert!(c.edge_for(sw, Outcome::Default).is_some());
    }

    #[test]
    fn unreachable_code_is_flagged() {
        let c = cfg_of("int f(int x) { return 1; x = 2; return x; }");
        assert_eq!(c.warnings.len(), 1);
        assert!(c.nodes.iter().any(|n| n.unreachable));
    }

    #[test]
    fn constant_true_loop_has_no_decision() {
        let c = cfg_of("int f(int x) { while (1) { if (x > 3) break; x = x + 1; } return x; }");
        check_invariants(&c);
        assert_eq!(c.decisions.len(), 1);
    }

    #[test]
    fn for_loop_with_continue() {
        let c = cfg_of(
            "int f(int n) { int s = 0; for (int i = 0; i < n; i++) { if (i == 2) continue; s += i; } return s; }",
        );
        check_invariants(&c);
        assert_eq!(c.decisions.len(), 2);
        assert!(c.warnings.is_empty());
    }
}
