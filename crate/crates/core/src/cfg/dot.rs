use std::fmt::Write;

use super::{Cfg, NodeKind, Outcome};

/// Graphviz rendering for debugging.
pub fn to_dot(cfg: &Cfg) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph \"{}\" {{", cfg.function);
    s.push_str("  node [shape=box];\n");
    for n in &cfg.nodes {
        let label = if n.id == cfg.entry {
            "entry".to_string()
        } else if n.kind == NodeKind::Exit {
            "exit".to_string()
        } else {
            let mut l = format!("n{} ({} stmts)", n.id, n.stmts.len());
            if let Some(d) = n.decision {
                let _ = write!(l, "\\nd{d}");
            }
            l
        };
        let shape = if n.kind == NodeKind::Branch { ", shape=diamond" } else { "" };
        let style = if n.unreachable { ", style=dashed" } else { "" };
        let _ = writeln!(s, "  n{} [label=\"{label}\"{shape}{style}];", n.id);
    }
    for e in &cfg.edges {
        match e.label {
            None => {
                let _ = writeln!(s, "  n{} -> n{};", e.from, e.to);
            }
            Some(l) => {
                let o = match l.outcome {
                    Outcome::True => "T".to_string(),
                    Outcome::False => "F".to_string(),
                    Outcome::Case(v) => format!("case {v}"),
                    Outcome::Default => "default".to_string(),
                };
                let _ = writeln!(s, "  n{} -> n{} [label=\"d{} {o}\"];", e.from, e.to, l.decision);
            }
        }
    }
    s.push_str("}\n");
    s
}
