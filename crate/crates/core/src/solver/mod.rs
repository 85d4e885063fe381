//! Decision procedure for path constraints: interval propagation to a
//! fixpoint, then bisection search over the variable box. Every `Sat`
//! answer is checked by concrete evaluation before it is returned.

mod external;
mod interval;
mod sexpr;
mod smtlib;

use std::collections::BTreeMap;

use crate::symcore::Constraint;

pub use external::{ExternalError, ExternalSolver};
pub use interval::{Compiled, Iv};
pub use sexpr::{parse_sexprs, Sexpr};
pub use smtlib::{emit_smtlib, parse_model};

/// Concrete value per input symbol.
pub type Model = BTreeMap<String, i64>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolveResult {
    Sat(Model),
    /// `hint`: length of a prefix of the conjunction already unsatisfiable.
    Unsat {
        hint: Option<usize>,
    },
    Unknown(String),
}

impl SolveResult {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolveResult::Sat(_))
    }

    pub fn is_unsat(&self) -> bool {
        matches!(self, SolveResult::Unsat { .. })
    }
}

/// Interval restrictions on input symbols, on top of their declared range.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Domains {
    pub ranges: BTreeMap<String, (i64, i64)>,
}

impl Domains {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, lo: i64, hi: i64) -> Self {
        self.ranges.insert(name.to_string(), (lo, hi));
        self
    }

    fn restrict(&self, name: &str, iv: Iv) -> Iv {
        match self.ranges.get(name) {
            Some(&(lo, hi)) => iv.meet(Iv::new(i128::from(lo), i128::from(hi))),
            None => iv,
        }
    }
}

/// Work allowance for one call, counted in search nodes so that answers do
/// not depend on machine speed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub nodes: u64,
}

/// Search nodes granted per millisecond of configured solver time.
pub const NODES_PER_MS: u64 = 100;

impl Budget {
    pub fn from_ms(ms: u64) -> Budget {
        Budget { nodes: ms.saturating_mul(NODES_PER_MS).max(1) }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::from_ms(500)
    }
}

/// Nonlinear conjunctions are enumerated outright below this box size.
pub const EXHAUSTIVE_LIMIT: u128 = 1 << 12;

/// When every symbol has at most this many values the search runs to
/// completion whatever the budget.
pub const SMALL_DOMAIN: u128 = 1 << 10;

/// Boxes this small are enumerated rather than split further.
const LEAF_BOX: u128 = 1 << 12;

const PASSES: usize = 24;

enum Search {
    Sat(Vec<i64>),
    Unsat,
    OutOfBudget,
}

pub fn solve(constraint: &Constraint, domains: &Domains, budget: Budget) -> SolveResult {
    if constraint.trivially_false() {
        let k = constraint.conjuncts.iter().position(|c| c.value.as_const() == Some(0)).unwrap_or(0);
        return SolveResult::Unsat { hint: Some(k + 1) };
    }
    let compiled = Compiled::new(constraint.values());
    solve_compiled(&compiled, domains, budget)
}

pub fn solve_compiled(c: &Compiled, domains: &Domains, budget: Budget) -> SolveResult {
    let mut bx: Vec<Iv> = c.vars.iter().map(|v| domains.restrict(&v.name, v.range())).collect();
    if bx.iter().any(|iv| iv.is_empty()) {
        return SolveResult::Unsat { hint: Some(0) };
    }
    let small = bx.iter().all(|iv| iv.size() <= SMALL_DOMAIN);
    if !c.propagate(&mut bx, PASSES) {
        return SolveResult::Unsat { hint: unsat_prefix(c, domains) };
    }
    let size: u128 = bx.iter().fold(1u128, |acc, iv| acc.saturating_mul(iv.size()));
    let result = if c.nonlinear && size <= EXHAUSTIVE_LIMIT {
        enumerate(c, &bx)
    } else {
        let mut steps = 0u64;
        search(c, bx, if small { u64::MAX } else { budget.nodes }, &mut steps)
    };
    match result {
        Search::Sat(values) => {
            assert!(c.holds(&values), "solver produced a model that does not satisfy the constraint");
            SolveResult::Sat(c.vars.iter().zip(values).map(|(v, x)| (v.name.to_string(), x)).collect())
        }
        Search::Unsat => SolveResult::Unsat { hint: None },
        Search::OutOfBudget if c.nonlinear => SolveResult::Unknown("nonlinear".into()),
        Search::OutOfBudget => SolveResult::Unknown("budget".into()),
    }
}

/// Shortest prefix that propagation alone refutes.
fn unsat_prefix(c: &Compiled, domains: &Domains) -> Option<usize> {
    let values_len = c.roots.len();
    for k in 1..=values_len.min(64) {
        let sub = Compiled { roots: c.roots[..k].to_vec(), root_vars: c.root_vars[..k].to_vec(), ..c.clone() };
        let mut bx: Vec<Iv> = sub.vars.iter().map(|v| domains.restrict(&v.name, v.range())).collect();
        if !sub.propagate(&mut bx, PASSES) {
            return Some(k);
        }
    }
    None
}

fn point(bx: &[Iv]) -> Vec<i64> {
    bx.iter().map(|iv| iv.closest_to_zero() as i64).collect()
}

fn enumerate(c: &Compiled, bx: &[Iv]) -> Search {
    let mut cur: Vec<i64> = bx.iter().map(|iv| iv.lo as i64).collect();
    let (mut val, mut ok) = (Vec::new(), Vec::new());
    loop {
        if c.holds_in(&cur, &mut val, &mut ok) {
            return Search::Sat(cur);
        }
        // odometer, last variable fastest
        let mut i = cur.len();
        loop {
            if i == 0 {
                return Search::Unsat;
            }
            i -= 1;
            if i128::from(cur[i]) < bx[i].hi {
                cur[i] += 1;
                break;
            }
            cur[i] = bx[i].lo as i64;
        }
    }
}

fn search(c: &Compiled, root: Vec<Iv>, limit: u64, steps: &mut u64) -> Search {
    let mut stack = vec![root];
    let mut fwd = Vec::new();
    let mut shift = Vec::new();
    let mut exhausted = false;
    while let Some(mut bx) = stack.pop() {
        if *steps >= limit {
            exhausted = true;
            break;
        }
        *steps += 1;
        if !c.propagate(&mut bx, PASSES) {
            continue;
        }
        let probe = point(&bx);
        if c.holds(&probe) {
            return Search::Sat(probe);
        }
        let size = bx.iter().fold(1u128, |acc, iv| acc.saturating_mul(iv.size()));
        if size <= LEAF_BOX {
            // a point costs about a sixteenth of a propagation pass
            *steps = steps.saturating_add((size / 16) as u64);
            match enumerate(c, &bx) {
                Search::Unsat => continue,
                found => return found,
            }
        }
        c.forward(&bx, &mut fwd, &mut shift);
        // split the first variable of the first undecided conjunct
        let var = c
            .roots
            .iter()
            .zip(&c.root_vars)
            .filter(|(&r, _)| fwd[r].contains(0))
            .flat_map(|(_, vs)| vs.iter().copied())
            .find(|&v| !bx[v].is_point())
            .or_else(|| (0..bx.len()).find(|&v| !bx[v].is_point()));
        let Some(v) = var else {
            // a single point that failed the probe
            continue;
        };
        let iv = bx[v];
        let mid = iv.lo + (iv.hi - iv.lo).div_euclid(2);
        let mut upper = bx.clone();
        upper[v] = Iv::new(mid + 1, iv.hi);
        bx[v] = Iv::new(iv.lo, mid);
        stack.push(upper);
        stack.push(bx);
    }
    if exhausted {
        Search::OutOfBudget
    } else {
        Search::Unsat
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Min,
    Max,
}

/// Least or greatest feasible value of `symbol`, or `None` when a probe
/// comes back unknown or the constraint is unsatisfiable.
pub fn bound(constraint: &Constraint, domains: &Domains, symbol: &str, dir: Direction, budget: Budget) -> Option<i64> {
    let compiled = Compiled::new(constraint.values());
    let var = compiled.vars.iter().find(|v| &*v.name == symbol)?;
    let full = domains.restrict(symbol, var.range());
    let mut bx: Vec<Iv> = compiled.vars.iter().map(|v| domains.restrict(&v.name, v.range())).collect();
    if !compiled.propagate(&mut bx, PASSES) {
        return None;
    }
    let idx = compiled.vars.iter().position(|v| &*v.name == symbol).expect("found above");
    let (mut lo, mut hi) = (bx[idx].lo.max(full.lo), bx[idx].hi.min(full.hi));
    let probe = |lo: i128, hi: i128| {
        let d = domains.clone().with(symbol, lo as i64, hi as i64);
        match solve_compiled(&compiled, &d, budget) {
            SolveResult::Sat(m) => Ok(Some(m[symbol])),
            SolveResult::Unsat { .. } => Ok(None),
            SolveResult::Unknown(_) => Err(()),
        }
    };
    // invariant: a feasible value exists in [lo, hi]
    let first = probe(lo, hi).ok()??;
    match dir {
        Direction::Min => {
            hi = i128::from(first);
            while lo < hi {
                let mid = lo + (hi - lo).div_euclid(2);
                match probe(lo, mid).ok()? {
                    Some(v) => hi = i128::from(v),
                    None => lo = mid + 1,
                }
            }
            Some(lo as i64)
        }
        Direction::Max => {
            lo = i128::from(first);
            while lo < hi {
                let mid = lo + (hi - lo + 1).div_euclid(2);
                match probe(mid, hi).ok()? {
                    Some(v) => lo = i128::from(v),
                    None => hi = mid - 1,
                }
            }
            Some(hi as i64)
        }
    }
}
