use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{Cfg, CfgWarning, NodeId};

/// Minimum number of edges from each node to the exit; `None` when the exit
/// cannot be reached.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DistanceMap {
    pub dist: Vec<Option<u32>>,
    pub diagnostics: Vec<CfgWarning>,
}

impl DistanceMap {
    pub fn get(&self, n: NodeId) -> Option<u32> {
        self.dist[n]
    }

    /// Ordering key where unreachable-exit sorts last.
    pub fn key(&self, n: NodeId) -> u64 {
        self.dist[n].map_or(u64::MAX, u64::from)
    }
}

/// Reverse breadth-first search from the exit.
pub fn distances_to_exit(cfg: &Cfg) -> DistanceMap {
    let n = cfg.nodes.len();
    let mut preds: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for e in &cfg.edges {
        preds[e.to].push(e.from);
    }
    let mut dist = vec![None; n];
    dist[cfg.exit] = Some(0);
    let mut q = VecDeque::from([cfg.exit]);
    while let Some(v) = q.pop_front() {
        let d = dist[v].expect("queued nodes have a distance");
        for &p in &preds[v] {
            if dist[p].is_none() {
                dist[p] = Some(d + 1);
                q.push_back(p);
            }
        }
    }
    let diagnostics = cfg
        .nodes
        .iter()
        .filter(|node| dist[node.id].is_none() && !node.unreachable)
        .map(|node| CfgWarning { pos: node.pos, message: format!("node {} cannot reach the function exit", node.id) })
        .collect();
    DistanceMap { dist, diagnostics }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfg::build_cfg;
    use crate::frontend::parse;

    fn cfg_of(src: &str) -> Cfg {
        build_cfg(parse(src).unwrap().functions.last().unwrap())
    }

    /// Minimum path length by exhaustive enumeration of simple paths.
    fn brute_force(c: &Cfg, from: NodeId) -> Option<u32> {
        fn go(c: &Cfg, n: NodeId, seen: &mut Vec<bool>, len: u32, best: &mut Option<u32>) {
            if n == c.exit {
                *best = Some(best.map_or(len, |b| b.min(len)));
                return;
            }
            for &e in &c.succ[n] {
                let t = c.edges[e].to;
                if !seen[t] {
                    seen[t] = true;
                    go(c, t, seen, len + 1, best);
                    seen[t] = false;
                }
            }
        }
        let mut seen = vec![false; c.nodes.len()];
        seen[from] = true;
        let mut best = None;
        go(c, from, &mut seen, 0, &mut best);
        best
    }

    #[test]
    fn check_sign_distances() {
        let c = cfg_of(crate::cfg::build::tests::CHECK_SIGN);
        let d = distances_to_exit(&c);
        assert_eq!(d.get(c.exit), Some(0));
        // entry -> branch -> return block -> exit
        assert_eq!(d.get(c.entry), Some(3));
        for n in 0..c.nodes.len() {
            assert_eq!(d.get(n), brute_force(&c, n));
        }
    }

    #[test]
    fn infinite_loop_is_unbounded() {
        let c = cfg_of("void f(int x) { while (1) { x = x + 1; } }");
        let d = distances_to_exit(&c);
        assert_eq!(d.get(c.entry), None);
        assert!(!d.diagnostics.is_empty());
    }

    #[test]
    fn monotone_descent() {
        let c = cfg_of(
            "int f(int n) { int s = 0; for (int i = 0; i < n; i++) { if (i % 2 == 0 && s < 9) s += i; else if (s > 100) break; } while (s > 3) s = s - 3; return s; }",
        );
        let d = distances_to_exit(&c);
        for n in 0..c.nodes.len() {
            assert_eq!(d.get(n), brute_force(&c, n), "node {n}");
            if let Some(k) = d.get(n) {
                if k > 0 {
                    let best = c.succ[n].iter().map(|&e| d.key(c.edges[e].to)).min().unwrap();
                    assert_eq!(best, u64::from(k - 1));
                }
            }
        }
    }
}
