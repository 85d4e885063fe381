//! Random constraint sets over at most three 8-bit symbols.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smartgen_core::semantics::{BinOp, IntTy};
use smartgen_core::symcore::{Constraint, Provenance, SymValue};

pub const VARS: [(&str, IntTy); 3] = [("a", IntTy::I8), ("b", IntTy::U8), ("c", IntTy::I8)];

fn leaf(rng: &mut ChaCha8Rng, nvars: usize) -> SymValue {
    if rng.gen_bool(0.6) {
        let (n, t) = VARS[rng.gen_range(0..nvars)];
        SymValue::input(n, t, false).cast(IntTy::I32)
    } else {
        SymValue::int(rng.gen_range(-20..=20))
    }
}

fn term(rng: &mut ChaCha8Rng, nvars: usize, depth: u32) -> SymValue {
    if depth == 0 || rng.gen_bool(0.35) {
        return leaf(rng, nvars);
    }
    let a = term(rng, nvars, depth - 1);
    let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Rem, BinOp::BitAnd, BinOp::BitXor, BinOp::Shr]
        [rng.gen_range(0..8)];
    let b = match op {
        // mostly linear: constant right operands
        BinOp::Mul | BinOp::Div | BinOp::Rem if rng.gen_bool(0.8) => {
            let k = rng.gen_range(1..=7) * if rng.gen_bool(0.5) { -1 } else { 1 };
            SymValue::int(k)
        }
        BinOp::Shr => SymValue::int(rng.gen_range(0..4)),
        _ => term(rng, nvars, depth - 1),
    };
    SymValue::bin(op, IntTy::I32, a, b)
}

fn atom(rng: &mut ChaCha8Rng, nvars: usize) -> SymValue {
    let op = [BinOp::Lt, BinOp::Le, BinOp::Gt, BinOp::Ge, BinOp::Eq, BinOp::Ne][rng.gen_range(0..6)];
    let a = term(rng, nvars, 2);
    let b = term(rng, nvars, 1);
    SymValue::cmp(op, a, b)
}

pub fn random_constraint(seed: u64) -> (Constraint, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nvars = rng.gen_range(1..=3);
    let mut c = Constraint::new();
    for _ in 0..rng.gen_range(1..=4) {
        let v = match rng.gen_range(0..6) {
            0 => SymValue::and(atom(&mut rng, nvars), atom(&mut rng, nvars)),
            1 => SymValue::or(atom(&mut rng, nvars), atom(&mut rng, nvars)),
            2 => SymValue::not(atom(&mut rng, nvars)),
            _ => atom(&mut rng, nvars),
        };
        c.push(v, Provenance::Assume);
    }
    (c, nvars)
}
