//! Schedulers: flood search and, for comparison, depth-first search.

use std::collections::VecDeque;

use super::exec::{Explorer, NodeResult};
use super::state::ExecutionState;

impl Explorer<'_> {
    pub fn flood(&mut self, init: ExecutionState) {
        let mut open = VecDeque::from([init]);
        let mut close = VecDeque::new();
        loop {
            if self.out_of_time() || self.stats.node_executions >= self.step_cap {
                self.partial = true;
                self.stats.budget_drops += open.len() + close.len();
                break;
            }
            match open.pop_front() {
                Some(s) => self.shortest_to_exit(s, &mut open, &mut close),
                None if close.is_empty() => break,
                None => self.discharge(&mut close, &mut open),
            }
        }
    }

    /// Run `s` towards the exit, forking a copy at every branch for each
    /// other feasible successor.
    fn shortest_to_exit(
        &mut self,
        mut s: ExecutionState,
        open: &mut VecDeque<ExecutionState>,
        close: &mut VecDeque<ExecutionState>,
    ) {
        loop {
            if let Some(e) = s.pending_edge.take() {
                self.take(&mut s, e);
            }
            if self.exhausted() {
                self.partial = true;
                self.stats.budget_drops += 1;
                return;
            }
            match self.run_node(&mut s) {
                NodeResult::Exit => return self.reach_exit(s),
                NodeResult::Dead => return,
                NodeResult::Next(e) => s.pending_edge = Some(e),
                NodeResult::Fork(mut succ) => {
                    if succ.is_empty() {
                        return;
                    }
                    let best = (0..succ.len())
                        .min_by_key(|&i| {
                            let e = succ[i].0;
                            (self.dist.key(self.cfg.edges[e].to), self.visits[e] > 0, i)
                        })
                        .expect("nonempty");
                    let (edge, main) = succ.remove(best);
                    for (e, mut sib) in succ {
                        sib.pending_edge = Some(e);
                        if !self.admit_state() {
                            continue;
                        }
                        if self.visits[e] == 0 && e != edge {
                            open.push_back(sib);
                        } else {
                            close.push_back(sib);
                        }
                    }
                    s = main;
                    s.pending_edge = Some(edge);
                }
            }
        }
    }

    /// Advance every close-list state along its pending edge into open,
    /// dropping those whose edge is past the loop bound.
    fn discharge(&mut self, close: &mut VecDeque<ExecutionState>, open: &mut VecDeque<ExecutionState>) {
        while let Some(mut s) = close.pop_front() {
            let e = s.pending_edge.take().expect("close-list states have a pending edge");
            if self.visits[e] > self.config.budgets.loop_bound {
                self.stats.loop_bound_drops += 1;
                continue;
            }
            self.take(&mut s, e);
            open.push_back(s);
        }
    }

    /// Count a new state against the budget.
    fn admit_state(&mut self) -> bool {
        if self.stats.states_created >= self.config.budgets.max_states {
            self.partial = true;
            self.stats.budget_drops += 1;
            return false;
        }
        self.stats.states_created += 1;
        true
    }

    /// Depth-first: follow the first feasible successor; an edge may be
    /// taken at most `loop_bound + 1` times along one path.
    pub fn depth_first(&mut self, init: ExecutionState) {
        let bound = self.config.budgets.loop_bound;
        let mut stack = vec![init];
        while let Some(mut s) = stack.pop() {
            if self.out_of_time() || self.stats.node_executions >= self.step_cap {
                self.partial = true;
                self.stats.budget_drops += stack.len() + 1;
                break;
            }
            loop {
                if let Some(e) = s.pending_edge.take() {
                    if s.edge_counts[e] > bound {
                        self.stats.loop_bound_drops += 1;
                        break;
                    }
                    self.take(&mut s, e);
                }
                if self.exhausted() {
                    self.partial = true;
                    self.stats.budget_drops += 1;
                    break;
                }
                match self.run_node(&mut s) {
                    NodeResult::Exit => {
                        self.reach_exit(s);
                        break;
                    }
                    NodeResult::Dead => break,
                    NodeResult::Next(e) => s.pending_edge = Some(e),
                    NodeResult::Fork(succ) => {
                        let mut it = succ.into_iter();
                        let Some((first_edge, first)) = it.next() else { break };
                        let rest: Vec<_> = it.collect();
                        for (e, mut sib) in rest.into_iter().rev() {
                            sib.pending_edge = Some(e);
                            if self.admit_state() {
                                stack.push(sib);
                            }
                        }
                        s = first;
                        s.pending_edge = Some(first_edge);
                    }
                }
            }
        }
    }
}
