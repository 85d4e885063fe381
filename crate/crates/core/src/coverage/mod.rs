//! Replay of generated cases and the coverage they achieve: statement
//! blocks, labeled edges and unique-cause MC/DC.

mod boundary;
mod replay;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cfg::{Cfg, Decision, DecisionId, EdgeId, Outcome};
use crate::engine::{GenerationResult, UncoveredReason};

pub use boundary::{boundary_cases, BoundaryOutcome};
pub use replay::{replay, ReplayError, ReplayOptions, ReplayTrace};

/// Table columns, lowest first.
pub const BINS: [Bin; 6] = [Bin::NotApplicable, Bin::Below10, Bin::Below50, Bin::Below90, Bin::Below100, Bin::Full];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Bin {
    NotApplicable,
    Below10,
    Below50,
    Below90,
    Below100,
    Full,
}

impl Bin {
    pub fn label(self) -> &'static str {
        match self {
            Bin::NotApplicable => "N/A",
            Bin::Below10 => "0-10",
            Bin::Below50 => "10-50",
            Bin::Below90 => "50-90",
            Bin::Below100 => "90-100",
            Bin::Full => "100",
        }
    }

    /// Half-open ranges; only exactly 100 lands in the last bin.
    pub fn of(pct: Option<f64>) -> Bin {
        match pct {
            None => Bin::NotApplicable,
            Some(p) if p >= 100.0 => Bin::Full,
            Some(p) if p >= 90.0 => Bin::Below100,
            Some(p) if p >= 50.0 => Bin::Below90,
            Some(p) if p >= 10.0 => Bin::Below50,
            Some(_) => Bin::Below10,
        }
    }
}

impl fmt::Display for Bin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ratio {
    pub covered: usize,
    pub total: usize,
}

impl Ratio {
    /// Percentage; an empty total counts as fully covered once any test ran.
    pub fn pct(self, ran: bool) -> f64 {
        match (self.total, ran) {
            (0, true) => 100.0,
            (0, false) => 0.0,
            (t, _) => 100.0 * self.covered as f64 / t as f64,
        }
    }
}

/// Two evaluations showing that one atom alone flips a decision.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McdcPair {
    pub decision: DecisionId,
    pub atom: usize,
    pub cases: (usize, usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct McdcResult {
    pub covered: Vec<bool>,
    pub pairs: Vec<McdcPair>,
}

impl McdcResult {
    pub fn covered_atoms(&self) -> usize {
        self.covered.iter().filter(|c| **c).count()
    }

    pub fn total_atoms(&self) -> usize {
        self.covered.len()
    }
}

/// The two vectors witness atom `i`: both evaluated it with different
/// values, and no other atom was evaluated by both with different values.
/// An atom skipped by short-circuiting matches anything.
pub fn independence_pair(a: &[Option<bool>], b: &[Option<bool>], i: usize) -> bool {
    matches!((a[i], b[i]), (Some(x), Some(y)) if x != y)
        && a.iter().zip(b).enumerate().all(|(j, (x, y))| j == i || !matches!((x, y), (Some(x), Some(y)) if x != y))
}

/// Unique-cause MC/DC of one decision over the evaluations in `traces`;
/// `None` for decisions with fewer than two atoms.
pub fn mcdc_measure(decision: &Decision, traces: &[ReplayTrace]) -> Option<McdcResult> {
    if !decision.is_compound() {
        return None;
    }
    let n = decision.atoms.len();
    let mut evals: Vec<(&[Option<bool>], Outcome, usize)> = Vec::new();
    for t in traces {
        for d in t.decisions.iter().filter(|d| d.decision == decision.id) {
            if !evals.iter().any(|(a, o, _)| *a == d.atoms.as_slice() && *o == d.outcome) {
                evals.push((&d.atoms, d.outcome, t.case));
            }
        }
    }
    let mut covered = vec![false; n];
    let mut pairs = Vec::new();
    for (i, hit) in covered.iter_mut().enumerate() {
        'search: for (x, (a, oa, ca)) in evals.iter().enumerate() {
            for (b, ob, cb) in &evals[x + 1..] {
                if oa != ob && independence_pair(a, b, i) {
                    *hit = true;
                    pairs.push(McdcPair { decision: decision.id, atom: i, cases: (*ca, *cb) });
                    break 'search;
                }
            }
        }
    }
    Some(McdcResult { covered, pairs })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncoveredEdge {
    pub edge: EdgeId,
    /// As the generator explained it; `None` until attributed.
    pub reason: Option<UncoveredReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub function: String,
    pub statements: Ratio,
    pub branches: Ratio,
    /// `None` when no decision has two or more atoms.
    pub mcdc: Option<Ratio>,
    pub mcdc_pairs: Vec<McdcPair>,
    pub uncovered: Vec<UncoveredEdge>,
    pub test_cases: usize,
    pub generation_seconds: f64,
    /// Boundary probes the solver could not settle.
    pub boundary_skipped: usize,
}

impl CoverageReport {
    pub fn statement_pct(&self) -> f64 {
        self.statements.pct(self.test_cases > 0)
    }

    pub fn branch_pct(&self) -> f64 {
        self.branches.pct(self.test_cases > 0)
    }

    pub fn mcdc_pct(&self) -> Option<f64> {
        self.mcdc.map(|r| r.pct(self.test_cases > 0))
    }

    pub fn bins(&self) -> [Bin; 3] {
        [Bin::of(Some(self.statement_pct())), Bin::of(Some(self.branch_pct())), Bin::of(self.mcdc_pct())]
    }

    /// Take uncovered-edge reasons and timing from the generator.
    pub fn attribute(&mut self, result: &GenerationResult) {
        for u in &mut self.uncovered {
            u.reason =
                Some(result.uncovered.iter().find(|(e, _)| *e == u.edge).map_or(UncoveredReason::Unknown, |(_, r)| *r));
        }
        self.generation_seconds = result.seconds;
    }
}

/// Coverage of `cfg` by the replayed `traces`.
pub fn measure(cfg: &Cfg, traces: &[ReplayTrace]) -> CoverageReport {
    let visited: BTreeSet<usize> = traces.iter().flat_map(|t| t.steps.iter().map(|s| s.node)).collect();
    let taken: BTreeSet<EdgeId> = traces.iter().flat_map(|t| t.steps.iter().filter_map(|s| s.edge)).collect();
    let stmt_nodes: Vec<usize> = cfg.statement_nodes().map(|n| n.id).collect();
    let labeled: Vec<EdgeId> = cfg.labeled_edges().map(|e| e.id).collect();
    let mut mcdc: Option<Ratio> = None;
    let mut mcdc_pairs = Vec::new();
    for d in &cfg.decisions {
        if let Some(r) = mcdc_measure(d, traces) {
            let acc = mcdc.get_or_insert_with(Ratio::default);
            acc.covered += r.covered_atoms();
            acc.total += r.total_atoms();
            mcdc_pairs.extend(r.pairs);
        }
    }
    CoverageReport {
        function: cfg.function.clone(),
        statements: Ratio {
            covered: stmt_nodes.iter().filter(|n| visited.contains(n)).count(),
            total: stmt_nodes.len(),
        },
        branches: Ratio { covered: labeled.iter().filter(|e| taken.contains(e)).count(), total: labeled.len() },
        mcdc,
        mcdc_pairs,
        uncovered: labeled
            .iter()
            .filter(|e| !taken.contains(e))
            .map(|&edge| UncoveredEdge { edge, reason: None })
            .collect(),
        test_cases: traces.len(),
        generation_seconds: 0.0,
        boundary_skipped: 0,
    }
}

#[cfg(test)]
mod tests;
