//! Exhaustive enumeration oracle for small integer constraints.
//!
//! All but the last two variables are fixed per batch and the rest are
//! evaluated as up to 2^16 lanes; after each
//! conjunct the surviving lanes are compacted so later conjuncts only see
//! candidates that are still feasible. Arithmetic is implemented here
//! independently of the library and cross-checked against it in tests.

use smartgen_core::semantics::{self, BinOp, IntTy, UnOp};
use smartgen_core::symcore::{Constraint, SymNode, SymValue};

#[derive(Clone, Debug)]
enum Op {
    Const(i64),
    Var(usize),
    Bin(BinOp, IntTy),
    Un(UnOp, IntTy),
    Cast(IntTy),
}

fn compile(v: &SymValue, names: &[&str], out: &mut Vec<Op>) {
    match v.node() {
        SymNode::Const { value, .. } => out.push(Op::Const(*value)),
        SymNode::Input { name, .. } => {
            out.push(Op::Var(names.iter().position(|n| *n == &**name).expect("declared variable")))
        }
        SymNode::Bin { op, ty, lhs, rhs } => {
            compile(lhs, names, out);
            compile(rhs, names, out);
            out.push(Op::Bin(*op, *ty));
        }
        SymNode::Un { op, ty, operand } => {
            compile(operand, names, out);
            out.push(Op::Un(*op, *ty));
        }
        SymNode::Cast { to, operand } => {
            compile(operand, names, out);
            out.push(Op::Cast(*to));
        }
        SymNode::Ite { .. } => panic!("the oracle does not handle if-then-else"),
    }
}

pub fn wrap(ty: IntTy, v: i64) -> i64 {
    if ty.bits >= 64 {
        v
    } else if ty.signed {
        let s = 64 - ty.bits;
        (v << s) >> s
    } else {
        v & ((1i64 << ty.bits) - 1)
    }
}

/// `None` on division by zero. Unsigned 64-bit operands defer to the
/// library, which stores them as bit patterns.
pub fn bin(op: BinOp, ty: IntTy, a: i64, b: i64) -> Option<i64> {
    if ty.bits >= 64 && !ty.signed {
        return semantics::binop(op, ty, a, b).ok();
    }
    let w = |v: i64| wrap(ty, v);
    Some(match op {
        BinOp::Add => w(a.wrapping_add(b)),
        BinOp::Sub => w(a.wrapping_sub(b)),
        BinOp::Mul => w(a.wrapping_mul(b)),
        BinOp::Div if b == 0 => return None,
        BinOp::Rem if b == 0 => return None,
        BinOp::Div => w(a.wrapping_div(b)),
        BinOp::Rem => w(a.wrapping_rem(b)),
        BinOp::Shl => w(a.wrapping_shl(b.rem_euclid(i64::from(ty.bits)) as u32)),
        BinOp::Shr => a >> b.rem_euclid(i64::from(ty.bits)),
        BinOp::BitAnd => a & b,
        BinOp::BitOr => a | b,
        BinOp::BitXor => a ^ b,
        BinOp::Lt => (a < b) as i64,
        BinOp::Le => (a <= b) as i64,
        BinOp::Gt => (a > b) as i64,
        BinOp::Ge => (a >= b) as i64,
        BinOp::Eq => (a == b) as i64,
        BinOp::Ne => (a != b) as i64,
        BinOp::LogAnd => (a != 0 && b != 0) as i64,
        BinOp::LogOr => (a != 0 || b != 0) as i64,
    })
}

pub fn un(op: UnOp, ty: IntTy, a: i64) -> i64 {
    match op {
        UnOp::Not => (a == 0) as i64,
        UnOp::Neg => wrap(ty, a.wrapping_neg()),
        UnOp::BitNot => wrap(ty, !a),
    }
}

enum Slot {
    Scalar(Option<i64>),
    Lanes(Vec<i64>),
}

/// Evaluate `prog` on every lane; `cols[v]` holds variable
/// `prefix.len() + v` per lane.
/// Lanes whose value is zero or whose evaluation divides by zero are
/// cleared in `alive`.
fn filter(prog: &[Op], prefix: &[i64], cols: &[Vec<i64>], alive: &mut [bool]) {
    let n = alive.len();
    let mut bad = vec![false; n];
    let mut st: Vec<Slot> = Vec::new();
    for op in prog {
        match *op {
            Op::Const(c) => st.push(Slot::Scalar(Some(c))),
            Op::Var(i) if i < prefix.len() => st.push(Slot::Scalar(Some(prefix[i]))),
            Op::Var(i) => st.push(Slot::Lanes(cols[i - prefix.len()].clone())),
            Op::Bin(o, t) => {
                let y = st.pop().unwrap();
                let x = st.pop().unwrap();
                let r = match (x, y) {
                    (Slot::Scalar(a), Slot::Scalar(b)) => Slot::Scalar(a.zip(b).and_then(|(a, b)| bin(o, t, a, b))),
                    (Slot::Scalar(None), Slot::Lanes(_)) | (Slot::Lanes(_), Slot::Scalar(None)) => Slot::Scalar(None),
                    (Slot::Lanes(mut xs), Slot::Scalar(Some(b))) => {
                        lanes(o, t, &mut xs, |_| b, &mut bad);
                        Slot::Lanes(xs)
                    }
                    (Slot::Scalar(Some(a)), Slot::Lanes(ys)) => {
                        let mut xs = vec![a; n];
                        lanes(o, t, &mut xs, |i| ys[i], &mut bad);
                        Slot::Lanes(xs)
                    }
                    (Slot::Lanes(mut xs), Slot::Lanes(ys)) => {
                        lanes(o, t, &mut xs, |i| ys[i], &mut bad);
                        Slot::Lanes(xs)
                    }
                };
                st.push(r);
            }
            Op::Un(o, t) => match st.last_mut().unwrap() {
                Slot::Scalar(x) => *x = x.map(|v| un(o, t, v)),
                Slot::Lanes(xs) => xs.iter_mut().for_each(|x| *x = un(o, t, *x)),
            },
            Op::Cast(t) => match st.last_mut().unwrap() {
                Slot::Scalar(x) => *x = x.map(|v| wrap(t, v)),
                Slot::Lanes(xs) => xs.iter_mut().for_each(|x| *x = wrap(t, *x)),
            },
        }
    }
    match st.pop().unwrap() {
        Slot::Scalar(Some(v)) if v != 0 => {}
        Slot::Scalar(_) => alive.iter_mut().for_each(|a| *a = false),
        Slot::Lanes(r) => {
            for i in 0..n {
                alive[i] &= !bad[i] && r[i] != 0;
            }
        }
    }
}

#[inline(always)]
fn lanes(o: BinOp, t: IntTy, xs: &mut [i64], y: impl Fn(usize) -> i64, bad: &mut [bool]) {
    macro_rules! each {
        ($f:expr) => {
            for (i, x) in xs.iter_mut().enumerate() {
                *x = $f(*x, y(i));
            }
        };
    }
    let w = |v: i64| wrap(t, v);
    let fast = t.bits < 64 || t.signed;
    match o {
        BinOp::Add if fast => each!(|a: i64, b: i64| w(a.wrapping_add(b))),
        BinOp::Sub if fast => each!(|a: i64, b: i64| w(a.wrapping_sub(b))),
        BinOp::Mul if fast => each!(|a: i64, b: i64| w(a.wrapping_mul(b))),
        BinOp::BitAnd => each!(|a: i64, b: i64| a & b),
        BinOp::BitXor => each!(|a: i64, b: i64| a ^ b),
        BinOp::BitOr => each!(|a: i64, b: i64| a | b),
        BinOp::Lt if fast => each!(|a: i64, b: i64| (a < b) as i64),
        BinOp::Le if fast => each!(|a: i64, b: i64| (a <= b) as i64),
        BinOp::Gt if fast => each!(|a: i64, b: i64| (a > b) as i64),
        BinOp::Ge if fast => each!(|a: i64, b: i64| (a >= b) as i64),
        BinOp::Eq => each!(|a: i64, b: i64| (a == b) as i64),
        BinOp::Ne => each!(|a: i64, b: i64| (a != b) as i64),
        BinOp::LogAnd => each!(|a: i64, b: i64| (a != 0 && b != 0) as i64),
        BinOp::LogOr => each!(|a: i64, b: i64| (a != 0 || b != 0) as i64),
        _ => {
            for (i, x) in xs.iter_mut().enumerate() {
                match bin(o, t, *x, y(i)) {
                    Some(v) => *x = v,
                    None => {
                        bad[i] = true;
                        *x = 0;
                    }
                }
            }
        }
    }
}

fn compact(cols: &[Vec<i64>], alive: &[bool]) -> Vec<Vec<i64>> {
    cols.iter().map(|c| c.iter().zip(alive).filter(|(_, &a)| a).map(|(&v, _)| v).collect()).collect()
}

pub struct Oracle {
    progs: Vec<Vec<Op>>,
    ranges: Vec<(i64, i64)>,
    /// Every assignment of the (at most two) innermost variables, one column
    /// per variable, in lexicographic order.
    grid: Vec<Vec<i64>>,
}

impl Oracle {
    pub fn new(c: &Constraint, vars: &[(&str, IntTy)]) -> Oracle {
        let names: Vec<&str> = vars.iter().map(|v| v.0).collect();
        let mut progs: Vec<Vec<Op>> = c
            .values()
            .map(|v| {
                let mut p = Vec::new();
                compile(v, &names, &mut p);
                p
            })
            .collect();
        progs.sort_by_key(Vec::len);
        let ranges: Vec<(i64, i64)> = vars.iter().map(|v| (v.1.min(), v.1.max())).collect();
        let inner = &ranges[ranges.len().saturating_sub(2)..];
        let mut grid: Vec<Vec<i64>> = vec![Vec::new(); inner.len()];
        match inner {
            [] => {}
            [(lo, hi)] => grid[0].extend(*lo..=*hi),
            [(lo0, hi0), (lo1, hi1)] => {
                for x in *lo0..=*hi0 {
                    for y in *lo1..=*hi1 {
                        grid[0].push(x);
                        grid[1].push(y);
                    }
                }
            }
            _ => unreachable!(),
        }
        // conjuncts over the innermost variables alone prune the grid once
        let outer = ranges.len() - grid.len();
        let (inner_only, progs): (Vec<_>, Vec<_>) =
            progs.into_iter().partition(|p| p.iter().all(|op| !matches!(op, Op::Var(i) if *i < outer)));
        let mut prefix = vec![0; outer];
        if outer > 0 {
            prefix = ranges[..outer].iter().map(|r| r.0).collect();
        }
        for p in &inner_only {
            let mut alive = vec![true; grid.first().map_or(1, Vec::len)];
            filter(p, &prefix, &grid, &mut alive);
            if grid.is_empty() {
                if !alive[0] {
                    // an unsatisfiable closed conjunct
                    return Oracle { progs: vec![vec![Op::Const(0)]], ranges, grid };
                }
                continue;
            }
            grid = compact(&grid, &alive);
        }
        Oracle { progs, ranges, grid }
    }

    /// Calls `visit` on satisfying assignments in lexicographic order until
    /// it returns false. Every variable but the last two is fixed per batch.
    pub fn enumerate(&self, mut visit: impl FnMut(&[i64]) -> bool) {
        let mut prefix = Vec::new();
        self.outer(&mut prefix, &mut visit);
    }

    fn outer(&self, prefix: &mut Vec<i64>, visit: &mut dyn FnMut(&[i64]) -> bool) -> bool {
        if prefix.len() + self.grid.len() == self.ranges.len() {
            return self.batch(prefix, visit);
        }
        let (lo, hi) = self.ranges[prefix.len()];
        for x in lo..=hi {
            prefix.push(x);
            let go = self.outer(prefix, visit);
            prefix.pop();
            if !go {
                return false;
            }
        }
        true
    }

    fn batch(&self, prefix: &[i64], visit: &mut dyn FnMut(&[i64]) -> bool) -> bool {
        let mut cols: Option<Vec<Vec<i64>>> = None;
        let mut live = self.grid.first().map_or(1, Vec::len);
        if live == 0 {
            return false;
        }
        for prog in &self.progs {
            let cur = cols.as_ref().unwrap_or(&self.grid);
            let mut alive = vec![true; live];
            filter(prog, prefix, cur, &mut alive);
            if alive.iter().all(|&a| a) {
                continue;
            }
            let next = compact(cur, &alive);
            live = alive.iter().filter(|&&a| a).count();
            if live == 0 {
                return true;
            }
            cols = Some(next);
        }
        let cur = cols.as_ref().unwrap_or(&self.grid);
        let mut assignment = prefix.to_vec();
        assignment.extend(cur.iter().map(|_| 0));
        for i in 0..live {
            for (v, c) in assignment[prefix.len()..].iter_mut().zip(cur) {
                *v = c[i];
            }
            if !visit(&assignment) {
                return false;
            }
        }
        true
    }

    pub fn satisfiable(&self) -> bool {
        let mut any = false;
        self.enumerate(|_| {
            any = true;
            false
        });
        any
    }
}
