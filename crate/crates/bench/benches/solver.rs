use criterion::{black_box, criterion_group, criterion_main, Criterion};
use smartgen_core::semantics::{BinOp, IntTy};
use smartgen_core::solver::{bound, solve, Budget, Direction, Domains};
use smartgen_core::symcore::{Constraint, Provenance, SymValue};

fn var(n: &str) -> SymValue {
    SymValue::input(n, IntTy::I32, false)
}

fn k(v: i64) -> SymValue {
    SymValue::int(v)
}

fn cons(values: Vec<SymValue>) -> Constraint {
    let mut c = Constraint::new();
    for v in values {
        c.push(v, Provenance::Assume);
    }
    c
}

/// x0 < x1 < ... < x7, each in a window.
fn chain() -> Constraint {
    let mut vs = Vec::new();
    for i in 0..8 {
        let x = var(&format!("x{i}"));
        vs.push(SymValue::cmp(BinOp::Ge, x.clone(), k(-100)));
        vs.push(SymValue::cmp(BinOp::Le, x.clone(), k(100)));
        if i > 0 {
            vs.push(SymValue::cmp(BinOp::Lt, var(&format!("x{}", i - 1)), x));
        }
    }
    cons(vs)
}

fn wrapping() -> Constraint {
    let sum = SymValue::bin(BinOp::Add, IntTy::I32, var("a"), k(1));
    cons(vec![SymValue::cmp(BinOp::Lt, sum, var("a"))])
}

fn nonlinear() -> Constraint {
    let p = SymValue::bin(BinOp::Mul, IntTy::I32, var("x"), var("y"));
    cons(vec![
        SymValue::cmp(BinOp::Gt, p, k(4095)),
        SymValue::cmp(BinOp::Lt, var("x"), k(100)),
        SymValue::cmp(BinOp::Gt, var("x"), k(0)),
    ])
}

fn bench(c: &mut Criterion) {
    let d = Domains::new();
    let b = Budget::default();
    let (ch, wr, nl) = (chain(), wrapping(), nonlinear());
    c.bench_function("solve/chain8", |bn| bn.iter(|| solve(black_box(&ch), &d, b)));
    c.bench_function("solve/wraparound", |bn| bn.iter(|| solve(black_box(&wr), &d, b)));
    c.bench_function("solve/nonlinear", |bn| bn.iter(|| solve(black_box(&nl), &d, b)));
    c.bench_function("bound/chain8_max", |bn| bn.iter(|| bound(black_box(&ch), &d, "x0", Direction::Max, b)));
}

criterion_group!(benches, bench);
criterion_main!(benches);
