use super::*;
use crate::cfg::{build_cfg, EdgeLabel};
use crate::frontend::parse;

fn run_with(src: &str, name: &str, config: &EngineConfig) -> (Program, Cfg, GenerationResult) {
    let p = parse(src).unwrap();
    let cfg = build_cfg(p.function(name).unwrap());
    let r = generate(&p, &cfg, config).unwrap();
    (p, cfg, r)
}

fn run(src: &str, name: &str) -> (Program, Cfg, GenerationResult) {
    run_with(src, name, &EngineConfig::default())
}

fn labeled(cfg: &Cfg) -> BTreeSet<EdgeId> {
    cfg.labeled_edges().map(|e| e.id).collect()
}

fn edge_with(cfg: &Cfg, outcome: Outcome) -> Vec<EdgeId> {
    cfg.labeled_edges().filter(|e| e.label.map(|l: EdgeLabel| l.outcome) == Some(outcome)).map(|e| e.id).collect()
}

const CHECK_SIGN: &str = "
int checkSign(int x) {
    if (x > 0) {
        return 1;
    } else if (x == 0) {
        return 0;
    }
    return -1;
}
";

#[test]
fn check_sign_three_cases_all_edges() {
    let (_, cfg, r) = run(CHECK_SIGN, "checkSign");
    assert_eq!(r.cases.len(), 3);
    assert!(!r.partial);
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), 4);
    assert!(r.uncovered.is_empty());
    let mut signs: Vec<i64> = r.cases.iter().map(|c| c.inputs["x"].signum()).collect();
    signs.sort();
    assert_eq!(signs, [-1, 0, 1]);
    // the first case follows the shortest route: x > 0 straight to return
    assert!(r.cases[0].inputs["x"] > 0);
    for c in &r.cases {
        assert!(c.exception.is_none());
        assert_eq!(c.generation_path.first().map(|s| s.node), Some(cfg.entry));
        assert_eq!(c.generation_path.last().map(|s| s.node), Some(cfg.exit));
        assert_eq!(c.path.holds(&|n: &str| Some(c.value(n))), Ok(true));
    }
}

#[test]
fn branchless_function_has_one_case() {
    let (_, _, r) = run("int add(int a, int b) { int c = a + b; return c * 2; }", "add");
    assert_eq!(r.cases.len(), 1);
    assert!(r.cases[0].path.is_empty());
    assert_eq!(r.stats.solver_calls, 0);
}

#[test]
fn contradictory_condition_is_infeasible() {
    let src = "int f(int x) { if (x > 0 && x < 0) { return 1; } return 0; }";
    let (_, cfg, r) = run(src, "f");
    let t = edge_with(&cfg, Outcome::True)[0];
    assert!(!r.covered_edges().contains(&t));
    assert_eq!(r.uncovered, vec![(t, UncoveredReason::Infeasible)]);
}

#[test]
fn repeated_external_calls_get_distinct_symbols() {
    let src = "int ext(void); int f(void) { if (ext() != ext()) { return 1; } return 0; }";
    let (p, cfg, r) = run(src, "f");
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), 2);
    let differ = r.cases.iter().find(|c| c.covered_edges.contains(&edge_with(&cfg, Outcome::True)[0])).unwrap();
    let names: Vec<&str> = differ.stub_returns.iter().map(|s| s.0.as_str()).collect();
    assert_eq!(names, ["ext#1", "ext#2"]);
    assert_ne!(differ.stub_returns[0].1, differ.stub_returns[1].1);
    let stubs = generate_stubs(&p, p.function("f").unwrap(), 0);
    assert_eq!(stubs.len(), 1);
    assert_eq!(stubs[0].callee, "ext");
}

#[test]
fn function_without_calls_needs_no_stubs() {
    let p = parse(CHECK_SIGN).unwrap();
    assert!(generate_stubs(&p, &p.functions[0], 0).is_empty());
}

#[test]
fn environment_call_guarding_a_branch() {
    let src = "
int PQcancel(void *conn, char *errbuf, int errbufsize);
int CancelRequested;
void handler(void *cancelConn) {
    char errbuf[256];
    if (PQcancel(cancelConn, errbuf, sizeof(errbuf))) {
        CancelRequested = 1;
    } else {
        CancelRequested = 0;
    }
}
";
    let (_, cfg, r) = run(src, "handler");
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), 2);
    assert!(r.cases.iter().all(|c| c.stub_returns.iter().any(|s| s.0 == "PQcancel#1")));
}

const GET_LOCAL_PAYLOAD: &str = "
static void getLocalPayload(
  int nUsable,
  u8 flags,
  int nTotal,
  int *pnLocal
){
  int nLocal;
  int nMinLocal;
  int nMaxLocal;

  if( flags==0x0D ){
    nMinLocal = (nUsable - 12) * 32 / 255 - 23;
    nMaxLocal = nUsable - 35;
  }else{
    nMinLocal = (nUsable - 12) * 32 / 255 - 23;
    nMaxLocal = (nUsable - 12) * 64 / 255 - 23;
  }

  nLocal = nMinLocal + (nTotal - nMinLocal) % (nUsable - 4);
  if( nLocal>nMaxLocal ) nLocal = nMinLocal;
  *pnLocal = nLocal;
}
";

#[test]
fn divided_by_zero_witness() {
    let (_, _, r) = run(GET_LOCAL_PAYLOAD, "getLocalPayload");
    let div: Vec<&TestCase> =
        r.cases.iter().filter(|c| c.exception.as_ref().map(|e| e.kind) == Some(ExceptionKind::DividedByZero)).collect();
    assert_eq!(div.len(), 1, "one report per site");
    assert_eq!(div[0].inputs["nUsable"], 4);
    let nulls = r.cases.iter().filter(|c| c.exception.as_ref().map(|e| e.kind) == Some(ExceptionKind::NullDereference));
    assert!(nulls.count() >= 1);
}

#[test]
fn constant_and_guarded_divisors() {
    let (_, _, r) = run("int f(int x) { return x / 2; }", "f");
    assert!(r.cases.iter().all(|c| c.exception.is_none()));
    assert_eq!(r.stats.solver_calls, 0);

    let src = "int f(signed char x, signed char y) { if (y > 3) { return x / y; } return 0; }";
    let (_, _, r) = run(src, "f");
    assert!(r.cases.iter().all(|c| c.exception.is_none()));
    // brute force over int8
    assert!((i8::MIN..=i8::MAX).all(|y| !(y > 3 && y == 0)));
}

#[test]
fn array_index_out_of_bounds() {
    let src = "int a[10]; int get(int i) { return a[i]; }";
    let (_, _, r) = run(src, "get");
    let oob: Vec<&TestCase> = r
        .cases
        .iter()
        .filter(|c| c.exception.as_ref().map(|e| e.kind) == Some(ExceptionKind::ArrayOutOfBounds))
        .collect();
    assert_eq!(oob.len(), 1);
    assert!(!(0..10).contains(&oob[0].inputs["i"]));
    let ok: Vec<&TestCase> = r.cases.iter().filter(|c| c.exception.is_none()).collect();
    assert_eq!(ok.len(), 1);
    assert!((0..10).contains(&ok[0].inputs["i"]));
}

#[test]
fn fixed_address_dereference() {
    let (_, _, r) = run("int f(void) { return *(int *)0x52; }", "f");
    assert_eq!(r.cases.len(), 1);
    assert_eq!(r.cases[0].exception.as_ref().unwrap().kind, ExceptionKind::FixedMemoryAddress);
}

#[test]
fn null_pointer_dereference() {
    let (_, _, r) = run("int f(int *p) { return *p + 1; }", "f");
    let kinds: Vec<Option<ExceptionKind>> = r.cases.iter().map(|c| c.exception.as_ref().map(|e| e.kind)).collect();
    assert_eq!(kinds, [Some(ExceptionKind::NullDereference), None]);
    assert_eq!(r.cases[0].inputs["null(p)"], 1);
    assert_eq!(r.cases[1].inputs["null(p)"], 0);
    assert!(r.cases[1].inputs.contains_key("*p"));
}

#[test]
fn guarded_operand_does_not_fault_when_skipped() {
    let src = "int f(int *p) { int ok = p != 0 && *p > 0; if (ok) { return 1; } return 0; }";
    let (_, cfg, r) = run(src, "f");
    assert!(r.cases.iter().all(|c| c.exception.is_none()));
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), 2);
}

#[test]
fn loop_edges_respect_the_bound() {
    let src = "
int count(int n) {
    int i = 0;
    int s = 0;
    while (i < n) {
        if (i % 3 == 0) { s = s + 2; } else { s = s + 1; }
        i = i + 1;
    }
    return s;
}
";
    let (_, cfg, r) = run(src, "count");
    assert!(r.uncovered.is_empty(), "{:?}", r.uncovered);
    assert!(r.stats.loop_bound_drops > 0);
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), labeled(&cfg).len());
    // discharged traversals stop once an edge has been taken K + 1 times
    let k = EngineConfig::default().budgets.loop_bound;
    let back: Vec<EdgeId> = cfg.edges.iter().filter(|e| e.to < e.from && e.label.is_none()).map(|e| e.id).collect();
    assert!(!back.is_empty());
    for e in back {
        assert!(r.edge_visits[e] <= k + 1 + r.cases.len() as u32 * 4, "{e}: {}", r.edge_visits[e]);
    }
}

#[test]
fn while_header_with_visited_edges_goes_to_close() {
    // both header edges are taken by the first state, so the sibling forked
    // at the second arrival waits on the close list
    let src = "int f(int n) { int i = 0; while (i < n) { i = i + 1; } return i; }";
    let (_, _, r) = run(src, "f");
    assert!(r.stats.loop_bound_drops >= 1);
    let lens: BTreeSet<i64> = r.cases.iter().map(|c| c.inputs["n"].clamp(-1, 5)).collect();
    assert!(lens.len() >= 3, "{lens:?}");
}

#[test]
fn compound_decision_evaluation_vectors() {
    let src = "int f(int a, int b) { if (a > 0 && b > 0) { return 1; } return 0; }";
    let (_, _, r) = run(src, "f");
    let mut vecs: Vec<Vec<Option<bool>>> = r.cases.iter().map(|c| c.decision_outcomes[0].atoms.clone()).collect();
    vecs.sort();
    assert_eq!(vecs, vec![vec![Some(false), None], vec![Some(true), Some(false)], vec![Some(true), Some(true)]]);
}

#[test]
fn switch_cases_and_default() {
    let src = "
int f(int k) {
    switch (k) {
    case 1: return 10;
    case 2: return 20;
    default: return 0;
    }
}
";
    let (_, cfg, r) = run(src, "f");
    assert_eq!(r.cases.len(), 3);
    assert!(r.uncovered.is_empty());
    assert_eq!(labeled(&cfg).len(), 3);
}

#[test]
fn records_and_pointer_params() {
    let src = "
struct pt { int x; int y; };
int quad(struct pt *p) {
    if (p->x > 0) {
        if (p->y > 0) { return 1; }
        return 4;
    }
    return 0;
}
";
    let (_, cfg, r) = run(src, "quad");
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), 4);
    let ok = r.cases.iter().find(|c| c.exception.is_none()).unwrap();
    assert!(ok.inputs.contains_key("p->x") && ok.inputs.contains_key("p->y"));
}

#[test]
fn symbolic_locals_become_inputs() {
    let src = "int f(void) { int u; if (u > 5) { return 1; } return 0; }";
    let config = EngineConfig { symbolic_locals: true, ..EngineConfig::default() };
    let (_, cfg, r) = run_with(src, "f", &config);
    assert_eq!(r.covered_edges().intersection(&labeled(&cfg)).count(), 2);
    assert!(r.cases.iter().all(|c| c.inputs.contains_key("u@1")));
    let (_, _, r) = run(src, "f");
    assert_eq!(r.uncovered.len(), 1);
    assert_eq!(r.uncovered[0].1, UncoveredReason::Infeasible);
}

#[test]
fn inlining_straight_line_callees() {
    let src = "int twice(int v) { return v * 2; } int f(int x) { if (twice(x) == 8) { return 1; } return 0; }";
    let config = EngineConfig { inline_depth: 1, ..EngineConfig::default() };
    let (_, _, r) = run_with(src, "f", &config);
    let hit = r.cases.iter().find(|c| {
        c.decision_outcomes[0].outcome == Outcome::True
            && c.stub_returns.is_empty()
            && (c.inputs["x"] as i32).wrapping_mul(2) == 8
    });
    assert!(hit.is_some(), "{:?}", r.cases);
    let (_, _, r) = run(src, "f");
    assert!(r.cases.iter().all(|c| c.stub_returns.iter().any(|s| s.0 == "twice#1")));
}

#[test]
fn depth_first_scheduler_also_covers_small_functions() {
    let config = EngineConfig { scheduler: SchedulerKind::DepthFirst, ..EngineConfig::default() };
    let (_, _, r) = run_with(CHECK_SIGN, "checkSign", &config);
    assert_eq!(r.cases.len(), 3);
    assert!(r.uncovered.is_empty());
}

#[test]
fn state_budget_flags_partial_results() {
    let src = "int f(int a, int b, int c) { int s = 0; if (a > 0) s++; if (b > 0) s++; if (c > 0) s++; return s; }";
    let mut config = EngineConfig::default();
    config.budgets.max_states = 2;
    let (_, _, r) = run_with(src, "f", &config);
    assert!(r.partial);
    assert!(r.stats.states_created <= 2);
    assert!(r.uncovered.iter().all(|u| u.1 == UncoveredReason::Budget));
}
