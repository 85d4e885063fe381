//! End-to-end acceptance checks over the bundled corpus. Prints one line
//! per criterion and fails if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use smartgen_cli::{artifact_stem, run_batch, FunctionOutcome, RunConfig};
use smartgen_core::cfg::{Decision, Outcome};
use smartgen_core::coverage::{mcdc_measure, replay, ReplayOptions, ReplayTrace};
use smartgen_core::engine::{CaseOrigin, ExceptionKind};
use smartgen_core::semantics::{BinOp, IntTy};
use smartgen_core::solver::{solve, Budget, Domains, SolveResult};
use smartgen_core::symcore::{Constraint, Provenance, SymValue};
use support::brute::Oracle;
use support::gen::{random_constraint, VARS};

/// Functions written with a branch no input can take.
const DESIGNED_INFEASIBLE: [&str; 2] = ["contradiction", "redundantCheck"];
const LOOP_HEAVY: &str = "scanFrames";
const COMPARISON_STATES: usize = 20;

fn corpus() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn batch(filter: Option<&str>, out: &std::path::Path) -> Vec<FunctionOutcome> {
    let mut config = RunConfig::new(corpus(), out);
    config.function_filter = filter.map(str::to_string);
    run_batch(&config).expect("batch runs").1
}

type Verdict = Result<String, String>;

fn check_sign() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let out = batch(Some("checkSign"), dir.path());
    let secs = start.elapsed().as_secs_f64();
    let [o] = &out[..] else { return Err(format!("{} functions matched", out.len())) };
    let path_cases: Vec<_> = o.cases.iter().filter(|c| c.origin == CaseOrigin::Path).collect();
    let returns: BTreeSet<i64> = path_cases.iter().filter_map(|c| c.expected_return).collect();
    let detail = format!(
        "{} path cases, statement {:.0}%, branch {:.0}%, returns {:?}, {:.3} s",
        path_cases.len(),
        o.report.statement_pct(),
        o.report.branch_pct(),
        returns,
        secs
    );
    let ok = path_cases.len() == 3
        && o.report.statement_pct() == 100.0
        && o.report.branch_pct() == 100.0
        && returns == BTreeSet::from([-1, 0, 1])
        && secs < 1.0;
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn corpus_coverage(out: &[FunctionOutcome]) -> Verdict {
    let mut full = 0;
    let mut counted = 0;
    let mut misreported = Vec::new();
    let mut short = Vec::new();
    for o in out {
        let r = &o.report;
        if DESIGNED_INFEASIBLE.contains(&o.function.as_str()) {
            let all_infeasible = !r.uncovered.is_empty()
                && r.uncovered.iter().all(|u| u.reason == Some(smartgen_core::engine::UncoveredReason::Infeasible));
            if !all_infeasible {
                misreported.push(o.function.clone());
            }
            continue;
        }
        counted += 1;
        if r.statement_pct() == 100.0 && r.branch_pct() == 100.0 {
            full += 1;
        } else {
            short.push(o.function.clone());
        }
    }
    let share = 100.0 * full as f64 / counted.max(1) as f64;
    let detail = format!(
        "{} functions, {full}/{counted} at 100% statement and branch ({share:.1}%), short: {short:?}, designed infeasible misreported: {misreported:?}",
        out.len()
    );
    if out.len() >= 25 && share >= 90.0 && misreported.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn timing(out: &[FunctionOutcome]) -> Verdict {
    let total: f64 = out.iter().map(|o| o.report.generation_seconds).sum();
    let avg = total / out.len().max(1) as f64;
    let worst = out.iter().map(|o| o.report.generation_seconds).fold(0.0, f64::max);
    let detail = format!("average {avg:.4} s/function, slowest {worst:.4} s");
    if avg <= 10.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn evaluations(d: &Decision, traces: &[ReplayTrace]) -> Vec<(Vec<Option<bool>>, bool)> {
    traces
        .iter()
        .flat_map(|t| t.decisions.iter())
        .filter(|e| e.decision == d.id)
        .map(|e| (e.atoms.clone(), e.outcome == Outcome::True))
        .collect()
}

fn mcdc_oracle(out: &[FunctionOutcome]) -> Verdict {
    let opts = ReplayOptions::default();
    let mut decisions = 0;
    let mut mismatches = Vec::new();
    for o in out {
        let program =
            smartgen_core::frontend::parse(&std::fs::read_to_string(corpus().join(&o.file)).unwrap()).unwrap();
        let traces: Vec<ReplayTrace> = o.cases.iter().filter_map(|c| replay(&program, &o.cfg, c, &opts).ok()).collect();
        for d in o.cfg.decisions.iter().filter(|d| d.is_compound() && d.atoms.len() <= 4) {
            decisions += 1;
            let got = mcdc_measure(d, &traces).expect("compound").covered;
            if got != support::mcdc::covered(&d.formula, d.atoms.len(), &evaluations(d, &traces)) {
                mismatches.push(format!("{}#{}", o.function, d.id));
            }
        }
    }
    let detail = format!("{decisions} compound decisions, {} mismatches {mismatches:?}", mismatches.len());
    if decisions > 0 && mismatches.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn exceptions(out: &[FunctionOutcome]) -> Verdict {
    let find = |f: &str, k: ExceptionKind| {
        out.iter()
            .filter(|o| o.function == f)
            .flat_map(|o| &o.cases)
            .find(|c| c.exception.as_ref().is_some_and(|e| e.kind == k))
            .cloned()
    };
    let div = find("getLocalPayload", ExceptionKind::DividedByZero);
    let a = div.as_ref().is_some_and(|c| c.inputs.get("nUsable") == Some(&4));
    let b = find("lookup", ExceptionKind::ArrayOutOfBounds).is_some();
    let c = find("readStatusRegister", ExceptionKind::FixedMemoryAddress).is_some();
    let detail = format!(
        "(a) DividedByZero with nUsable = {:?}: {a}; (b) ArrayOutOfBounds: {b}; (c) FixedMemoryAddress: {c}",
        div.as_ref().and_then(|c| c.inputs.get("nUsable"))
    );
    if a && b && c {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn solver() -> Verdict {
    let mut bad = Vec::new();
    let (mut sat, mut unsat) = (0, 0);
    for seed in 0..1000u64 {
        let (c, nvars) = random_constraint(seed);
        let oracle = Oracle::new(&c, &VARS[..nvars]);
        let truth = oracle.satisfiable();
        match solve(&c, &Domains::new(), Budget::default()) {
            SolveResult::Sat(m) => {
                sat += 1;
                let holds = c.holds(&|n| Some(m.get(n).copied().unwrap_or(0))) == Ok(true);
                if !holds || !truth {
                    bad.push(seed);
                }
            }
            SolveResult::Unsat { .. } => {
                unsat += 1;
                if truth {
                    bad.push(seed);
                }
            }
            SolveResult::Unknown(_) => bad.push(seed),
        }
    }
    let x = SymValue::input("x", IntTy::I32, false);
    let y = SymValue::input("y", IntTy::I32, false);
    let mut nonlinear = Constraint::new();
    nonlinear.push(SymValue::cmp(BinOp::Ne, y.clone(), SymValue::int(0)), Provenance::Assume);
    let prod =
        SymValue::bin(BinOp::Mul, IntTy::I32, SymValue::bin(BinOp::Sub, IntTy::I32, x, SymValue::int(1)), y.clone());
    nonlinear.push(SymValue::eq(SymValue::bin(BinOp::Rem, IntTy::I32, prod, y), SymValue::int(1)), Provenance::Assume);
    let r = solve(&nonlinear, &Domains::new(), Budget::default());
    let nonlinear_ok = !r.is_sat();
    let detail = format!(
        "1000 sets ({sat} sat, {unsat} unsat), {} disagreements {:?}; nonlinear constraint: {}",
        bad.len(),
        &bad[..bad.len().min(5)],
        match r {
            SolveResult::Sat(_) => "sat".to_string(),
            SolveResult::Unsat { .. } => "unsat".to_string(),
            SolveResult::Unknown(why) => format!("unknown ({why})"),
        }
    );
    if bad.is_empty() && nonlinear_ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence(out: &[FunctionOutcome]) -> Verdict {
    let opts = ReplayOptions::default();
    let mut cases = 0;
    let mut wrong = Vec::new();
    for o in out {
        let program =
            smartgen_core::frontend::parse(&std::fs::read_to_string(corpus().join(&o.file)).unwrap()).unwrap();
        for c in &o.cases {
            cases += 1;
            let t = match replay(&program, &o.cfg, c, &opts) {
                Ok(t) => t,
                Err(e) => {
                    wrong.push(format!("{}#{}: {e}", o.function, c.id));
                    continue;
                }
            };
            let agree = match (&c.exception, &t.exception) {
                (None, None) => t.edges() == c.covered_edges,
                (Some(a), Some(b)) => (a.kind, a.node, a.stmt) == (b.kind, b.node, b.stmt),
                _ => false,
            };
            if !agree {
                wrong.push(format!("{}#{}", o.function, c.id));
            }
        }
        wrong.extend(o.mismatches.iter().map(|m| format!("{}: {m}", o.function)));
    }
    let detail = format!("{cases} cases replayed, {} disagreements {:?}", wrong.len(), &wrong[..wrong.len().min(5)]);
    if wrong.is_empty() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn flood_vs_depth() -> Verdict {
    let dir = tempfile::tempdir().unwrap();
    let run = |dfs: bool| {
        let mut config = RunConfig::new(corpus(), dir.path());
        config.function_filter = Some(LOOP_HEAVY.to_string());
        config.budgets.max_states = COMPARISON_STATES;
        config.compare_dfs = dfs;
        config.formats.clear();
        let out = run_batch(&config).expect("batch runs").1;
        let r = &out[0].report;
        (r.branches.covered, r.branches.total)
    };
    let (flood, total) = run(false);
    let (dfs, _) = run(true);
    let detail = format!(
        "{LOOP_HEAVY} at {COMPARISON_STATES} states: flood {flood}/{total} labeled edges, depth-first {dfs}/{total}"
    );
    if flood == total && dfs < total {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism() -> Verdict {
    let read_all = |dir: &std::path::Path| -> BTreeMap<String, Vec<u8>> {
        std::fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "json" || x == "tcf"))
            .map(|p| (p.file_name().unwrap().to_string_lossy().to_string(), std::fs::read(&p).unwrap()))
            .collect()
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let first = batch(None, a.path());
    batch(None, b.path());
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    let expected = first.len() * 2;
    let stem = artifact_stem(&first[0].file, &first[0].function);
    let detail = format!("{} artifacts per run (e.g. {stem}.json), identical: {}", fa.len(), fa == fb);
    if fa == fb && fa.len() == expected {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_run = batch(None, dir.path());
    let results: Vec<(&str, Verdict)> = vec![
        ("checkSign end-to-end", check_sign()),
        ("corpus coverage", corpus_coverage(&corpus_run)),
        ("timing", timing(&corpus_run)),
        ("MC/DC oracle equivalence", mcdc_oracle(&corpus_run)),
        ("exception detection", exceptions(&corpus_run)),
        ("solver soundness and small-domain completeness", solver()),
        ("replay oracle equivalence", oracle_equivalence(&corpus_run)),
        ("flood search versus depth-first", flood_vs_depth()),
        ("determinism", determinism()),
    ];
    let mut failed = 0;
    for (i, (name, v)) in results.iter().enumerate() {
        match v {
            Ok(d) => println!("criterion {}: PASS  {name}: {d}", i + 1),
            Err(d) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {d}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
