//! Extra test cases at the least and greatest feasible value of each input.

use std::collections::BTreeMap;

use crate::engine::{CaseOrigin, TestCase};
use crate::solver::{self, bound, Budget, Direction, Domains, SolveResult};
use crate::symcore::{Provenance, SymValue};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BoundaryOutcome {
    pub cases: Vec<TestCase>,
    /// Symbols whose bound the solver could not settle.
    pub skipped: usize,
}

fn key(c: &TestCase) -> (BTreeMap<String, i64>, Vec<(String, i64)>) {
    (c.inputs.clone(), c.stub_returns.clone())
}

/// Boundary cases for `case` under its own path. Cases whose values equal
/// one in `existing` (or one made earlier) are dropped. New ids continue
/// from `next_id`.
pub fn boundary_cases(
    case: &TestCase,
    domains: &Domains,
    budget: Budget,
    existing: &[TestCase],
    next_id: usize,
) -> BoundaryOutcome {
    let mut out = BoundaryOutcome::default();
    if case.exception.is_some() {
        return out;
    }
    let mut seen: Vec<_> = existing.iter().map(key).collect();
    for (name, ty, boolean) in case.path.inputs() {
        if boolean {
            continue;
        }
        for dir in [Direction::Min, Direction::Max] {
            let Some(v) = bound(&case.path, domains, &name, dir, budget) else {
                out.skipped += 1;
                continue;
            };
            let pinned = case
                .path
                .with(SymValue::eq(SymValue::input(&name, ty, false), SymValue::constant(ty, v)), Provenance::Assume);
            let m = match solver::solve(&pinned, domains, budget) {
                SolveResult::Sat(m) => m,
                _ => {
                    out.skipped += 1;
                    continue;
                }
            };
            let val = |n: &str| m.get(n).copied().unwrap_or_else(|| case.value(n));
            let mut extra = case.clone();
            extra.id = next_id + out.cases.len();
            extra.origin = CaseOrigin::Boundary { of: case.id };
            extra.expected_return = None;
            extra.inputs = case.inputs.keys().map(|k| (k.clone(), val(k))).collect();
            extra.stub_returns = case.stub_returns.iter().map(|(k, _)| (k.clone(), val(k))).collect();
            let k = key(&extra);
            if !seen.contains(&k) {
                seen.push(k);
                out.cases.push(extra);
            }
        }
    }
    out
}
