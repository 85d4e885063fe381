use std::collections::{BTreeMap, BTreeSet};

use super::*;
use crate::cfg::build_cfg;
use crate::engine::{generate, CaseOrigin, DecisionEval, EngineConfig, ExceptionKind, TestCase};
use crate::frontend::{parse, Program};
use crate::semantics::{BinOp, IntTy};
use crate::solver::{Budget, Domains};
use crate::symcore::{Constraint, Provenance, SymValue};

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

fn setup(src: &str, name: &str) -> (Program, Cfg) {
    let p = parse(src).unwrap();
    let cfg = build_cfg(p.function(name).unwrap());
    (p, cfg)
}

fn case(inputs: &[(&str, i64)]) -> TestCase {
    TestCase {
        id: 0,
        function: String::new(),
        inputs: inputs.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        stub_returns: Vec::new(),
        expected_return: None,
        covered_edges: BTreeSet::new(),
        decision_outcomes: Vec::new(),
        exception: None,
        generation_path: Vec::new(),
        origin: CaseOrigin::Path,
        path: Constraint::new(),
    }
}

fn run(p: &Program, cfg: &Cfg, c: &TestCase) -> ReplayTrace {
    replay(p, cfg, c, &ReplayOptions::default()).unwrap()
}

#[test]
fn replay_check_sign_walkthrough() {
    let (p, cfg) = setup(CHECK_SIGN, "checkSign");
    for (x, want) in [(11, 1), (0, 0), (-7, -1)] {
        let t = run(&p, &cfg, &case(&[("x", x)]));
        assert_eq!(t.return_value, Some(want));
        assert!(t.exception.is_none());
        assert_eq!(t.steps.last().unwrap().node, cfg.exit);
    }
    let t = run(&p, &cfg, &case(&[("x", 11)]));
    assert_eq!(t.decisions[0].outcome, Outcome::True);
    let true_edge = cfg.edge_for(cfg.decisions[0].node, Outcome::True).unwrap();
    assert!(t.edges().contains(&true_edge));
}

#[test]
fn replay_reports_division_by_zero_at_the_mod() {
    let src = "
static void getLocalPayload(int nUsable, u8 flags, int nTotal, int *pnLocal){
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
    let (p, cfg) = setup(src, "getLocalPayload");
    let t = run(&p, &cfg, &case(&[("nUsable", 4)]));
    let tag = t.exception.unwrap();
    assert_eq!(tag.kind, ExceptionKind::DividedByZero);
    let stmt = &cfg.nodes[tag.node].stmts[tag.stmt];
    let crate::frontend::StmtKind::Assign { value, .. } = &stmt.kind else { panic!("{stmt:?}") };
    let mut has_rem = false;
    value.walk(&mut |e| has_rem |= matches!(e.kind, crate::frontend::ExprKind::Binary(BinOp::Rem, ..)));
    assert!(has_rem);

    let r = generate(&p, &cfg, &EngineConfig::default()).unwrap();
    let predicted =
        r.cases.iter().find(|c| c.exception.as_ref().is_some_and(|e| e.kind == ExceptionKind::DividedByZero)).unwrap();
    let t = run(&p, &cfg, predicted);
    let (want, got) = (predicted.exception.as_ref().unwrap(), t.exception.unwrap());
    assert_eq!((want.kind, want.node, want.stmt), (got.kind, got.node, got.stmt));
    // nUsable = 5 divides by one, nothing to report until the store
    let t = run(&p, &cfg, &case(&[("nUsable", 5), ("null(pnLocal)", 0)]));
    assert!(t.exception.is_none());
}

#[test]
fn measure_counts_blocks_and_edges() {
    let (p, cfg) = setup(CHECK_SIGN, "checkSign");
    let traces: Vec<ReplayTrace> = [11, 0, -7].iter().map(|&x| run(&p, &cfg, &case(&[("x", x)]))).collect();
    let r = measure(&cfg, &traces);
    assert_eq!(r.statement_pct(), 100.0);
    assert_eq!(r.branch_pct(), 100.0);
    assert_eq!(r.mcdc, None);
    assert_eq!(r.bins(), [Bin::Full, Bin::Full, Bin::NotApplicable]);

    let r = measure(&cfg, &[]);
    assert_eq!((r.statement_pct(), r.branch_pct()), (0.0, 0.0));

    let r = measure(&cfg, &traces[..1]);
    assert_eq!(r.branches, Ratio { covered: 1, total: 4 });
    assert_eq!(r.branch_pct(), 25.0);
    assert_eq!(r.uncovered.len(), 3);
}

#[test]
fn bins_are_half_open() {
    assert_eq!(Bin::of(Some(100.0)), Bin::Full);
    assert_eq!(Bin::of(Some(99.9)), Bin::Below100);
    assert_eq!(Bin::of(Some(90.0)), Bin::Below100);
    assert_eq!(Bin::of(Some(89.99)), Bin::Below90);
    assert_eq!(Bin::of(Some(50.0)), Bin::Below90);
    assert_eq!(Bin::of(Some(10.0)), Bin::Below50);
    assert_eq!(Bin::of(Some(0.0)), Bin::Below10);
    assert_eq!(Bin::of(None), Bin::NotApplicable);
    let labels: Vec<&str> = BINS.iter().map(|b| b.label()).collect();
    assert_eq!(labels.join(","), "N/A,0-10,10-50,50-90,90-100,100");
}

fn traces_with(decision: usize, vectors: &[(&[Option<bool>], bool)]) -> Vec<ReplayTrace> {
    vectors
        .iter()
        .enumerate()
        .map(|(i, (atoms, outcome))| ReplayTrace {
            case: i,
            steps: Vec::new(),
            decisions: vec![DecisionEval {
                decision,
                atoms: atoms.to_vec(),
                outcome: if *outcome { Outcome::True } else { Outcome::False },
            }],
            return_value: None,
            exception: None,
        })
        .collect()
}

#[test]
fn mcdc_examples() {
    let (_, cfg) = setup("int f(int a, int b) { if (a > 0 && b > 0) { return 1; } return 0; }", "f");
    let d = &cfg.decisions[0];
    let (t, f) = (Some(true), Some(false));
    let full = traces_with(0, &[(&[t, t], true), (&[f, t], false), (&[t, f], false)]);
    let r = mcdc_measure(d, &full).unwrap();
    assert_eq!((r.covered_atoms(), r.total_atoms()), (2, 2));
    assert_eq!(r.pairs[0].cases, (0, 1));
    assert_eq!(r.pairs[1].cases, (0, 2));

    let r = mcdc_measure(d, &traces_with(0, &[(&[t, t], true), (&[f, f], false)])).unwrap();
    assert_eq!(r.covered_atoms(), 0);

    // what C actually records for a false first operand
    let short = traces_with(0, &[(&[t, t], true), (&[f, None], false), (&[t, f], false)]);
    assert_eq!(mcdc_measure(d, &short).unwrap().covered_atoms(), 2);

    let (_, single) = setup(CHECK_SIGN, "checkSign");
    assert!(mcdc_measure(&single.decisions[0], &[]).is_none());
}

#[test]
fn mcdc_from_generated_cases() {
    let src = "int f(int a, int b, int c) { if ((a > 0 && b > 0) || c > 0) { return 1; } return 0; }";
    let (p, cfg) = setup(src, "f");
    let r = generate(&p, &cfg, &EngineConfig::default()).unwrap();
    let traces: Vec<ReplayTrace> = r.cases.iter().map(|c| run(&p, &cfg, c)).collect();
    let m = measure(&cfg, &traces);
    assert_eq!(m.mcdc, Some(Ratio { covered: 3, total: 3 }));
}

#[test]
fn engine_claims_match_replay() {
    let sources = [
        (CHECK_SIGN, "checkSign"),
        ("int a[10]; int get(int i) { return a[i]; }", "get"),
        ("int f(int *p) { return *p + 1; }", "f"),
        ("int ext(int *out); int f(void) { int v; if (ext(&v) > 0) { if (v == 3) { return 1; } } return 0; }", "f"),
        (
            "struct pt { int x; int y; }; int q(struct pt *p) { if (p->x > p->y) { return p->x - p->y; } return 0; }",
            "q",
        ),
        ("int f(int n) { int i = 0; int s = 0; while (i < n) { s = s + i; i++; } return s; }", "f"),
        ("int f(int k) { switch (k) { case 1: return 10; case 7: return 70; default: return 0; } }", "f"),
        ("int f(int *p) { int ok = p != 0 && *p > 0; if (ok) { return 1; } return 0; }", "f"),
    ];
    for (src, name) in sources {
        let (p, cfg) = setup(src, name);
        let r = generate(&p, &cfg, &EngineConfig::default()).unwrap();
        assert!(!r.cases.is_empty(), "{name}");
        for c in &r.cases {
            let t = run(&p, &cfg, c);
            match &c.exception {
                None => {
                    assert!(t.exception.is_none(), "{name}: {:?} {:?}", c.inputs, t.exception);
                    assert_eq!(t.steps, c.generation_path, "{name}: {:?}", c.inputs);
                    assert_eq!(t.edges(), c.covered_edges);
                    assert_eq!(t.decisions, c.decision_outcomes);
                }
                Some(want) => {
                    let got = t.exception.as_ref().unwrap_or_else(|| panic!("{name}: no fault for {:?}", c.inputs));
                    assert_eq!((want.kind, want.node, want.stmt), (got.kind, got.node, got.stmt), "{name}");
                }
            }
        }
    }
}

#[test]
fn stub_out_values_reach_the_caller() {
    let src = "int ext(int *out); int f(void) { int v; if (ext(&v) > 0) { if (v == 3) { return 1; } } return 0; }";
    let (p, cfg) = setup(src, "f");
    let r = generate(&p, &cfg, &EngineConfig::default()).unwrap();
    let hit = r.cases.iter().find(|c| c.stub_returns.iter().any(|(n, v)| n == "ext#1.out+0" && *v == 3)).unwrap();
    assert_eq!(run(&p, &cfg, hit).return_value, Some(1));
}

fn pos_path(name: &str, conds: &[(BinOp, i64)]) -> Constraint {
    let x = SymValue::input(name, IntTy::I32, false);
    let mut c = Constraint::new();
    for &(op, k) in conds {
        c.push(SymValue::cmp(op, x.clone(), SymValue::int(k)), Provenance::Assume);
    }
    c
}

#[test]
fn boundary_examples() {
    let mut c = case(&[("x", 5)]);
    c.path = pos_path("x", &[(BinOp::Gt, 0)]);
    let out = boundary_cases(&c, &Domains::new(), Budget::default(), &[c.clone()], 1);
    let xs: Vec<i64> = out.cases.iter().map(|c| c.inputs["x"]).collect();
    assert_eq!(xs, [1, i64::from(i32::MAX)]);
    assert_eq!(out.cases[0].id, 1);
    assert_eq!(out.cases[1].origin, CaseOrigin::Boundary { of: 0 });

    let mut c = case(&[("x", 0)]);
    c.path = pos_path("x", &[(BinOp::Ge, 0), (BinOp::Le, 0)]);
    let out = boundary_cases(&c, &Domains::new(), Budget::default(), &[c.clone()], 1);
    assert!(out.cases.is_empty());
    let out = boundary_cases(&c, &Domains::new(), Budget::default(), &[], 1);
    assert_eq!(out.cases.len(), 1);

    let mut c = case(&[("x", 3)]);
    c.path = pos_path("x", &[(BinOp::Ge, 0), (BinOp::Lt, 10), (BinOp::Ne, 7)]);
    let out = boundary_cases(&c, &Domains::new(), Budget::default(), &[c.clone()], 1);
    let brute_max = (0..10).filter(|&x| x != 7).max().unwrap();
    assert_eq!(out.cases.iter().map(|c| c.inputs["x"]).max(), Some(brute_max));
}

#[test]
fn boundary_cases_replay_along_the_same_path() {
    let (p, cfg) = setup(CHECK_SIGN, "checkSign");
    let r = generate(&p, &cfg, &EngineConfig::default()).unwrap();
    let mut all = r.cases.clone();
    for c in &r.cases {
        let out = boundary_cases(c, &Domains::new(), Budget::default(), &all, all.len());
        all.extend(out.cases);
    }
    let values: BTreeMap<i64, usize> = all.iter().map(|c| (c.inputs["x"], c.id)).collect();
    assert!(values.contains_key(&i64::from(i32::MIN)));
    assert!(values.contains_key(&i64::from(i32::MAX)));
    assert!(values.contains_key(&1) && values.contains_key(&-1) && values.contains_key(&0));
    for c in &all {
        assert_eq!(run(&p, &cfg, c).steps, c.generation_path);
    }
}
