//! Constraint DAG flattened for interval propagation (HC4-style forward
//! evaluation and backward projection).

use std::collections::HashMap;
use std::sync::Arc;

use crate::semantics::{self, BinOp, IntTy, UnOp};
use crate::symcore::{SymNode, SymValue};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Iv {
    pub lo: i128,
    pub hi: i128,
}

impl Iv {
    pub fn new(lo: i128, hi: i128) -> Iv {
        Iv { lo, hi }
    }

    pub fn point(v: i128) -> Iv {
        Iv { lo: v, hi: v }
    }

    pub fn full(ty: IntTy) -> Iv {
        Iv::new(i128::from(ty.min()), i128::from(ty.max()))
    }

    pub fn is_empty(self) -> bool {
        self.lo > self.hi
    }

    pub fn is_point(self) -> bool {
        self.lo == self.hi
    }

    pub fn size(self) -> u128 {
        if self.is_empty() {
            0
        } else {
            (self.hi - self.lo) as u128 + 1
        }
    }

    pub fn meet(self, o: Iv) -> Iv {
        Iv::new(self.lo.max(o.lo), self.hi.min(o.hi))
    }

    pub fn hull(self, o: Iv) -> Iv {
        Iv::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    pub fn contains(self, v: i128) -> bool {
        self.lo <= v && v <= self.hi
    }

    fn excludes_zero(self) -> bool {
        !self.contains(0)
    }

    fn is_zero(self) -> bool {
        self.lo == 0 && self.hi == 0
    }

    /// Remove 0 when it sits at an endpoint.
    fn nonzero(self) -> Iv {
        if self.is_zero() {
            Iv::new(1, 0)
        } else if self.lo == 0 {
            Iv::new(1, self.hi)
        } else if self.hi == 0 {
            Iv::new(self.lo, -1)
        } else {
            self
        }
    }

    /// Value of smallest magnitude, preferring the non-negative one.
    pub fn closest_to_zero(self) -> i128 {
        if self.contains(0) {
            0
        } else if self.lo > 0 {
            self.lo
        } else {
            self.hi
        }
    }
}

#[derive(Clone, Debug)]
pub enum CNode {
    Const(i64),
    Var(usize),
    Bin(BinOp, IntTy, usize, usize),
    Un(UnOp, IntTy, usize),
    Cast(IntTy, usize),
    Ite(usize, usize, usize),
}

#[derive(Clone, Debug)]
pub struct VarInfo {
    pub name: Arc<str>,
    pub ty: IntTy,
    pub boolean: bool,
}

impl VarInfo {
    pub fn range(&self) -> Iv {
        if self.boolean {
            Iv::new(0, 1)
        } else {
            Iv::full(self.ty)
        }
    }
}

/// `lhs - rhs` of a comparison as `k + sum(c * var) - sum(m * shift[node])`,
/// exact wherever every listed node wraps uniformly.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Linear {
    pub k: i128,
    pub vars: Vec<(usize, i128)>,
    pub shifts: Vec<(usize, i128)>,
}

const LINEAR_TERMS: usize = 64;

impl Linear {
    fn add(&mut self, c: &Compiled, n: usize, m: i128, leaves: &mut usize) -> Option<()> {
        *leaves += 1;
        if *leaves > LINEAR_TERMS || m.unsigned_abs() > 1 << 40 {
            return None;
        }
        let konst = |x: usize| match c.nodes[x] {
            CNode::Const(v) => Some(i128::from(v)),
            _ => None,
        };
        match c.nodes[n] {
            CNode::Const(v) => self.k += m * i128::from(v),
            CNode::Var(x) => match self.vars.iter_mut().find(|(y, _)| *y == x) {
                Some((_, cx)) => *cx += m,
                None => self.vars.push((x, m)),
            },
            CNode::Cast(_, a) => {
                self.shifts.push((n, m));
                self.add(c, a, m, leaves)?;
            }
            CNode::Un(UnOp::Neg, _, a) => {
                self.shifts.push((n, m));
                self.add(c, a, -m, leaves)?;
            }
            CNode::Bin(op @ (BinOp::Add | BinOp::Sub), _, a, b) => {
                self.shifts.push((n, m));
                self.add(c, a, m, leaves)?;
                self.add(c, b, if op == BinOp::Add { m } else { -m }, leaves)?;
            }
            CNode::Bin(BinOp::Mul, _, a, b) => {
                self.shifts.push((n, m));
                match (konst(a), konst(b)) {
                    (_, Some(k)) => self.add(c, a, m * k, leaves)?,
                    (Some(k), _) => self.add(c, b, m * k, leaves)?,
                    _ => return None,
                }
            }
            CNode::Bin(BinOp::Shl, ty, a, b) => {
                self.shifts.push((n, m));
                self.add(c, a, m << shift_amount(ty, konst(b)?), leaves)?;
            }
            _ => return None,
        }
        Some(())
    }

    /// Range of the difference over the box, if every shift is known.
    fn range(&self, bx: &[Iv], shift: &[Option<i128>]) -> Option<Iv> {
        let mut d = Iv::point(self.k);
        for &(n, m) in &self.shifts {
            d = Iv::point(d.lo - m * shift[n]?).hull(Iv::point(d.hi - m * shift[n]?));
        }
        for &(x, c) in &self.vars {
            let (p, q) = (c * bx[x].lo, c * bx[x].hi);
            d = Iv::new(d.lo + p.min(q), d.hi + p.max(q));
        }
        Some(d)
    }
}

/// A conjunction of boolean values as one DAG; children precede parents.
#[derive(Clone, Debug)]
pub struct Compiled {
    pub nodes: Vec<CNode>,
    pub tys: Vec<IntTy>,
    pub vars: Vec<VarInfo>,
    /// Node of each variable.
    pub var_nodes: Vec<usize>,
    pub roots: Vec<usize>,
    /// Variables reachable from each root.
    pub root_vars: Vec<Vec<usize>>,
    /// Linear view of comparisons where some variable occurs more than once.
    pub linear: Vec<Option<Linear>>,
    pub nonlinear: bool,
}

impl Compiled {
    pub fn new<'a>(values: impl IntoIterator<Item = &'a SymValue>) -> Compiled {
        let mut c = Compiled {
            nodes: Vec::new(),
            tys: Vec::new(),
            vars: Vec::new(),
            var_nodes: Vec::new(),
            roots: Vec::new(),
            root_vars: Vec::new(),
            linear: Vec::new(),
            nonlinear: false,
        };
        let mut memo: HashMap<SymValue, usize> = HashMap::new();
        let mut var_ids: HashMap<Arc<str>, usize> = HashMap::new();
        for v in values {
            let r = c.add(v, &mut memo, &mut var_ids);
            c.roots.push(r);
        }
        c.root_vars = c.roots.iter().map(|&r| c.vars_of(r)).collect();
        c.linear = (0..c.nodes.len()).map(|i| c.linear_of(i)).collect();
        c
    }

    fn linear_of(&self, i: usize) -> Option<Linear> {
        let CNode::Bin(op, _, a, b) = self.nodes[i] else { return None };
        if !op.is_comparison() {
            return None;
        }
        let mut l = Linear::default();
        let mut leaves = 0;
        l.add(self, a, 1, &mut leaves)?;
        l.add(self, b, -1, &mut leaves)?;
        let mut var_leaves = 0;
        count_var_leaves(self, a, &mut var_leaves);
        count_var_leaves(self, b, &mut var_leaves);
        (var_leaves > l.vars.len()).then_some(l)
    }

    fn add(
        &mut self,
        v: &SymValue,
        memo: &mut HashMap<SymValue, usize>,
        var_ids: &mut HashMap<Arc<str>, usize>,
    ) -> usize {
        if let Some(&i) = memo.get(v) {
            return i;
        }
        let node = match v.node() {
            SymNode::Const { value, .. } => CNode::Const(*value),
            SymNode::Input { name, ty, boolean } => {
                let next = self.vars.len();
                let id = *var_ids.entry(name.clone()).or_insert(next);
                if id == next {
                    self.vars.push(VarInfo { name: name.clone(), ty: *ty, boolean: *boolean });
                    self.var_nodes.push(self.nodes.len());
                }
                CNode::Var(id)
            }
            SymNode::Bin { op, ty, lhs, rhs } => {
                let l = self.add(lhs, memo, var_ids);
                let r = self.add(rhs, memo, var_ids);
                let var_l = !matches!(self.nodes[l], CNode::Const(_));
                let var_r = !matches!(self.nodes[r], CNode::Const(_));
                if var_r && (matches!(op, BinOp::Div | BinOp::Rem) || (*op == BinOp::Mul && var_l)) {
                    self.nonlinear = true;
                }
                CNode::Bin(*op, *ty, l, r)
            }
            SymNode::Un { op, ty, operand } => CNode::Un(*op, *ty, self.add(operand, memo, var_ids)),
            SymNode::Cast { to, operand } => CNode::Cast(*to, self.add(operand, memo, var_ids)),
            SymNode::Ite { cond, then, otherwise, .. } => {
                let c = self.add(cond, memo, var_ids);
                let t = self.add(then, memo, var_ids);
                let e = self.add(otherwise, memo, var_ids);
                CNode::Ite(c, t, e)
            }
        };
        self.nodes.push(node);
        self.tys.push(v.ty());
        let i = self.nodes.len() - 1;
        memo.insert(v.clone(), i);
        i
    }

    fn vars_of(&self, root: usize) -> Vec<usize> {
        let mut seen = vec![false; self.nodes.len()];
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n], true) {
                continue;
            }
            match self.nodes[n] {
                CNode::Const(_) => {}
                CNode::Var(v) => {
                    if !out.contains(&v) {
                        out.push(v)
                    }
                }
                CNode::Bin(_, _, a, b) => stack.extend([b, a]),
                CNode::Un(_, _, a) | CNode::Cast(_, a) => stack.push(a),
                CNode::Ite(c, t, e) => stack.extend([e, t, c]),
            }
        }
        out.sort_unstable();
        out
    }

    /// Concrete evaluation of every root under `model`. Division by zero
    /// makes the conjunction false.
    pub fn holds(&self, model: &[i64]) -> bool {
        self.holds_in(model, &mut Vec::new(), &mut Vec::new())
    }

    /// `holds` with caller-owned scratch space.
    pub fn holds_in(&self, model: &[i64], val: &mut Vec<i64>, ok: &mut Vec<bool>) -> bool {
        val.clear();
        val.resize(self.nodes.len(), 0);
        ok.clear();
        ok.resize(self.nodes.len(), true);
        for (i, n) in self.nodes.iter().enumerate() {
            let (v, good) = match *n {
                CNode::Const(c) => (c, true),
                CNode::Var(x) => (self.vars[x].ty.wrap(i128::from(model[x])), true),
                CNode::Bin(op, ty, a, b) => {
                    if !ok[a] || !ok[b] {
                        (0, false)
                    } else {
                        match semantics::binop(op, ty, val[a], val[b]) {
                            Ok(v) => (v, true),
                            Err(_) => (0, false),
                        }
                    }
                }
                CNode::Un(op, ty, a) => (semantics::unop(op, ty, val[a]), ok[a]),
                CNode::Cast(to, a) => (semantics::cast(to, val[a]), ok[a]),
                // lazily: only the selected branch matters
                CNode::Ite(c, t, e) => {
                    if !ok[c] {
                        (0, false)
                    } else if val[c] != 0 {
                        (val[t], ok[t])
                    } else {
                        (val[e], ok[e])
                    }
                }
            };
            val[i] = v;
            ok[i] = good;
        }
        self.roots.iter().all(|&r| ok[r] && val[r] != 0)
    }

    /// Forward interval of every node under the variable box. `shift[i]`
    /// is the multiple of 2^bits subtracted to bring node `i`'s exact
    /// result into range, when one such multiple fits the whole interval.
    pub fn forward(&self, bx: &[Iv], fwd: &mut Vec<Iv>, shift: &mut Vec<Option<i128>>) {
        fwd.clear();
        shift.clear();
        for (i, n) in self.nodes.iter().enumerate() {
            let ty = self.tys[i];
            let (iv, s) = match *n {
                CNode::Const(c) => (Iv::point(i128::from(c)), Some(0)),
                CNode::Var(x) => (bx[x], Some(0)),
                CNode::Bin(op, oty, a, b) => {
                    let (iv, s) = bin_forward(op, oty, fwd[a], fwd[b]);
                    match self.linear[i].as_ref().and_then(|l| l.range(bx, shift)) {
                        Some(d) => (iv.meet(bin_forward(op, IntTy::I64, d, Iv::point(0)).0), s),
                        None => (iv, s),
                    }
                }
                CNode::Un(op, uty, a) => un_forward(op, uty, fwd[a]),
                CNode::Cast(to, a) => wrap(to, fwd[a]),
                CNode::Ite(c, t, e) => {
                    let ci = fwd[c];
                    if ci.excludes_zero() {
                        (fwd[t], None)
                    } else if ci.is_zero() {
                        (fwd[e], None)
                    } else {
                        (fwd[t].hull(fwd[e]), None)
                    }
                }
            };
            debug_assert!(
                iv.is_empty()
                    || (iv.lo >= i128::from(ty.min()) && iv.hi <= i128::from(ty.max()))
                    || matches!(n, CNode::Ite(..))
            );
            fwd.push(iv);
            shift.push(s);
        }
    }

    /// Narrow `bx` until a fixpoint (or `max_passes`). `false` means no
    /// point of the box satisfies the conjunction.
    pub fn propagate(&self, bx: &mut [Iv], max_passes: usize) -> bool {
        if bx.iter().any(|iv| iv.is_empty()) {
            return false;
        }
        let mut fwd = Vec::with_capacity(self.nodes.len());
        let mut shift = Vec::with_capacity(self.nodes.len());
        let mut req = Vec::with_capacity(self.nodes.len());
        for _ in 0..max_passes {
            self.forward(bx, &mut fwd, &mut shift);
            req.clear();
            req.extend_from_slice(&fwd);
            for &r in &self.roots {
                req[r] = req[r].nonzero();
                if req[r].is_empty() {
                    return false;
                }
            }
            for i in (0..self.nodes.len()).rev() {
                let t = req[i];
                if t.is_empty() {
                    return false;
                }
                if t == fwd[i] {
                    continue;
                }
                self.backward(i, t, &fwd, &shift, &mut req);
            }
            let mut changed = false;
            for (i, n) in self.nodes.iter().enumerate() {
                if let CNode::Var(x) = *n {
                    let m = bx[x].meet(req[i]);
                    if m.is_empty() {
                        return false;
                    }
                    if m != bx[x] {
                        bx[x] = m;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        true
    }

    /// Narrow each variable of `l` so that the difference can land in `want`.
    fn linear_backward(&self, l: &Linear, want: Iv, fwd: &[Iv], shift: &[Option<i128>], req: &mut [Iv]) {
        let bx: Vec<Iv> = self.var_nodes.iter().map(|&n| fwd[n]).collect();
        let Some(d) = l.range(&bx, shift) else { return };
        for &(x, c) in &l.vars {
            if c == 0 {
                continue;
            }
            let (p, q) = (c * bx[x].lo, c * bx[x].hi);
            // range of everything but this variable's term
            let rest = Iv::new(d.lo - p.min(q), d.hi - p.max(q));
            let term = Iv::new(want.lo - rest.hi, want.hi - rest.lo);
            let n = self.var_nodes[x];
            req[n] = req[n].meet(div_range(term, c));
        }
    }

    fn backward(&self, i: usize, t: Iv, fwd: &[Iv], shift: &[Option<i128>], req: &mut [Iv]) {
        let narrow = |req: &mut [Iv], n: usize, iv: Iv| req[n] = req[n].meet(iv);
        match self.nodes[i] {
            CNode::Const(_) | CNode::Var(_) => {}
            CNode::Cast(_, a) => {
                if let Some(s) = shift[i] {
                    narrow(req, a, Iv::new(t.lo + s, t.hi + s));
                }
            }
            CNode::Un(op, _, a) => match op {
                UnOp::Not => {
                    if t == Iv::point(1) {
                        narrow(req, a, Iv::point(0));
                    } else if t == Iv::point(0) {
                        req[a] = req[a].nonzero();
                    }
                }
                UnOp::Neg => {
                    if let Some(s) = shift[i] {
                        narrow(req, a, Iv::new(-(t.hi + s), -(t.lo + s)));
                    }
                }
                UnOp::BitNot => {
                    if let Some(s) = shift[i] {
                        narrow(req, a, Iv::new(-(t.hi + s) - 1, -(t.lo + s) - 1));
                    }
                }
            },
            CNode::Ite(c, th, el) => {
                let ci = fwd[c];
                if ci.excludes_zero() {
                    narrow(req, th, t);
                } else if ci.is_zero() {
                    narrow(req, el, t);
                } else if t.meet(fwd[th]).is_empty() {
                    narrow(req, c, Iv::point(0));
                    narrow(req, el, t);
                } else if t.meet(fwd[el]).is_empty() {
                    req[c] = req[c].nonzero();
                    narrow(req, th, t);
                }
            }
            CNode::Bin(op, _, a, b) => {
                let (av, bv) = (fwd[a], fwd[b]);
                if op.is_comparison() {
                    let truth = if t == Iv::point(1) {
                        true
                    } else if t == Iv::point(0) {
                        false
                    } else {
                        return;
                    };
                    let op = if truth { op } else { op.negate_comparison().expect("comparison") };
                    let (na, nb) = relate(op, av, bv);
                    narrow(req, a, na);
                    narrow(req, b, nb);
                    if let (Some(l), Some(want)) = (&self.linear[i], against_zero(op)) {
                        self.linear_backward(l, want, fwd, shift, req);
                    }
                    return;
                }
                match op {
                    BinOp::LogAnd | BinOp::LogOr => {
                        let truth = if t == Iv::point(1) {
                            true
                        } else if t == Iv::point(0) {
                            false
                        } else {
                            return;
                        };
                        let both = (op == BinOp::LogAnd) == truth;
                        if both {
                            if truth {
                                req[a] = req[a].nonzero();
                                req[b] = req[b].nonzero();
                            } else {
                                narrow(req, a, Iv::point(0));
                                narrow(req, b, Iv::point(0));
                            }
                        } else {
                            // one side decides; if the other is known not to, this one must
                            let decided = |iv: Iv| if truth { iv.is_zero() } else { iv.excludes_zero() };
                            if decided(av) {
                                if truth {
                                    req[b] = req[b].nonzero();
                                } else {
                                    narrow(req, b, Iv::point(0));
                                }
                            } else if decided(bv) {
                                if truth {
                                    req[a] = req[a].nonzero();
                                } else {
                                    narrow(req, a, Iv::point(0));
                                }
                            }
                        }
                    }
                    BinOp::Add | BinOp::Sub | BinOp::Mul | BinOp::Shl => {
                        let Some(s) = shift[i] else { return };
                        let e = Iv::new(t.lo + s, t.hi + s);
                        match op {
                            BinOp::Add => {
                                narrow(req, a, Iv::new(e.lo - bv.hi, e.hi - bv.lo));
                                narrow(req, b, Iv::new(e.lo - av.hi, e.hi - av.lo));
                            }
                            BinOp::Sub => {
                                narrow(req, a, Iv::new(e.lo + bv.lo, e.hi + bv.hi));
                                narrow(req, b, Iv::new(av.lo - e.hi, av.hi - e.lo));
                            }
                            BinOp::Mul => {
                                if bv.is_point() {
                                    narrow(req, a, div_range(e, bv.lo));
                                }
                                if av.is_point() {
                                    narrow(req, b, div_range(e, av.lo));
                                }
                            }
                            _ => {
                                if bv.is_point() {
                                    let k = shift_amount(self.tys[i], bv.lo);
                                    narrow(req, a, div_range(e, 1i128 << k));
                                }
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }
}

fn count_var_leaves(c: &Compiled, n: usize, out: &mut usize) {
    if *out > LINEAR_TERMS {
        return;
    }
    match c.nodes[n] {
        CNode::Const(_) => {}
        CNode::Var(_) => *out += 1,
        CNode::Bin(_, _, a, b) => {
            count_var_leaves(c, a, out);
            count_var_leaves(c, b, out);
        }
        CNode::Un(_, _, a) | CNode::Cast(_, a) => count_var_leaves(c, a, out),
        CNode::Ite(x, t, e) => {
            count_var_leaves(c, x, out);
            count_var_leaves(c, t, out);
            count_var_leaves(c, e, out);
        }
    }
}

/// `d` such that `d op 0` holds.
fn against_zero(op: BinOp) -> Option<Iv> {
    let big = i128::MAX / 4;
    match op {
        BinOp::Lt => Some(Iv::new(-big, -1)),
        BinOp::Le => Some(Iv::new(-big, 0)),
        BinOp::Gt => Some(Iv::new(1, big)),
        BinOp::Ge => Some(Iv::new(0, big)),
        BinOp::Eq => Some(Iv::point(0)),
        _ => None,
    }
}

/// Values `x` with `x * c` inside `e`.
fn div_range(e: Iv, c: i128) -> Iv {
    if c == 0 {
        return Iv::new(i128::MIN / 4, i128::MAX / 4);
    }
    let (lo, hi) = if c > 0 { (e.lo, e.hi) } else { (e.hi, e.lo) };
    Iv::new(div_ceil(lo, c), div_floor(hi, c))
}

fn div_floor(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) != (b < 0)) {
        q - 1
    } else {
        q
    }
}

fn div_ceil(a: i128, b: i128) -> i128 {
    let q = a / b;
    if (a % b != 0) && ((a < 0) == (b < 0)) {
        q + 1
    } else {
        q
    }
}

/// Narrowed operand intervals under `a op b` being true.
fn relate(op: BinOp, a: Iv, b: Iv) -> (Iv, Iv) {
    match op {
        BinOp::Lt => (Iv::new(a.lo, a.hi.min(b.hi - 1)), Iv::new(b.lo.max(a.lo + 1), b.hi)),
        BinOp::Le => (Iv::new(a.lo, a.hi.min(b.hi)), Iv::new(b.lo.max(a.lo), b.hi)),
        BinOp::Gt => {
            let (nb, na) = relate(BinOp::Lt, b, a);
            (na, nb)
        }
        BinOp::Ge => {
            let (nb, na) = relate(BinOp::Le, b, a);
            (na, nb)
        }
        BinOp::Eq => {
            let m = a.meet(b);
            (m, m)
        }
        BinOp::Ne => {
            let cut = |x: Iv, y: Iv| {
                if y.is_point() {
                    if x.lo == y.lo {
                        return Iv::new(x.lo + 1, x.hi);
                    }
                    if x.hi == y.lo {
                        return Iv::new(x.lo, x.hi - 1);
                    }
                }
                x
            };
            (cut(a, b), cut(b, a))
        }
        _ => (a, b),
    }
}

fn shift_amount(ty: IntTy, b: i128) -> u32 {
    b.rem_euclid(i128::from(ty.bits)) as u32
}

/// Bring an exact interval into `ty`'s range.
fn wrap(ty: IntTy, e: Iv) -> (Iv, Option<i128>) {
    let full = Iv::full(ty);
    if e.is_empty() {
        return (e, None);
    }
    let m = 1i128 << ty.bits;
    let k_lo = div_floor(e.lo - full.lo, m);
    let k_hi = div_floor(e.hi - full.lo, m);
    if k_lo == k_hi {
        let s = k_lo * m;
        (Iv::new(e.lo - s, e.hi - s), Some(s))
    } else {
        (full, None)
    }
}

fn bin_forward(op: BinOp, ty: IntTy, a: Iv, b: Iv) -> (Iv, Option<i128>) {
    if op.is_comparison() {
        let (t, f) = match op {
            BinOp::Lt => (a.hi < b.lo, a.lo >= b.hi),
            BinOp::Le => (a.hi <= b.lo, a.lo > b.hi),
            BinOp::Gt => (a.lo > b.hi, a.hi <= b.lo),
            BinOp::Ge => (a.lo >= b.hi, a.hi < b.lo),
            BinOp::Eq => (a.is_point() && b.is_point() && a.lo == b.lo, a.meet(b).is_empty()),
            _ => (a.meet(b).is_empty(), a.is_point() && b.is_point() && a.lo == b.lo),
        };
        return (bool_iv(t, f), None);
    }
    match op {
        BinOp::LogAnd => return (bool_iv(a.excludes_zero() && b.excludes_zero(), a.is_zero() || b.is_zero()), None),
        BinOp::LogOr => return (bool_iv(a.excludes_zero() || b.excludes_zero(), a.is_zero() && b.is_zero()), None),
        _ => {}
    }
    let full = (Iv::full(ty), None);
    let exact = match op {
        BinOp::Add => Iv::new(a.lo + b.lo, a.hi + b.hi),
        BinOp::Sub => Iv::new(a.lo - b.hi, a.hi - b.lo),
        BinOp::Mul => corners(a, b, |x, y| Some(x * y)).expect("products exist"),
        BinOp::Div => {
            let mut acc: Option<Iv> = None;
            for part in [Iv::new(b.lo, b.hi.min(-1)), Iv::new(b.lo.max(1), b.hi)] {
                if part.is_empty() {
                    continue;
                }
                let q = corners(a, part, |x, y| Some(x / y)).expect("non-zero divisor");
                acc = Some(acc.map_or(q, |p| p.hull(q)));
            }
            match acc {
                Some(q) => q,
                None => return full,
            }
        }
        BinOp::Rem => {
            let m = b.lo.abs().max(b.hi.abs()) - 1;
            if m < 0 {
                return full;
            }
            let r = if a.lo >= 0 {
                Iv::new(0, a.hi.min(m))
            } else if a.hi <= 0 {
                Iv::new(a.lo.max(-m), 0)
            } else {
                Iv::new(a.lo.max(-m), a.hi.min(m))
            };
            return (r, None);
        }
        BinOp::Shl => {
            if !b.is_point() {
                return full;
            }
            let k = shift_amount(ty, b.lo);
            Iv::new(a.lo << k, a.hi << k)
        }
        BinOp::Shr => {
            if b.is_point() {
                let k = shift_amount(ty, b.lo);
                return (Iv::new(a.lo >> k, a.hi >> k), None);
            }
            let r = if a.lo >= 0 {
                Iv::new(0, a.hi)
            } else if a.hi < 0 {
                Iv::new(a.lo, -1)
            } else {
                a
            };
            return (r, None);
        }
        BinOp::BitAnd => {
            return match (a.lo >= 0, b.lo >= 0) {
                (true, true) => (Iv::new(0, a.hi.min(b.hi)), None),
                (true, false) => (Iv::new(0, a.hi), None),
                (false, true) => (Iv::new(0, b.hi), None),
                _ => full,
            }
        }
        BinOp::BitOr | BinOp::BitXor => {
            if a.lo >= 0 && b.lo >= 0 {
                let top = pow2_above(a.hi.max(b.hi)) - 1;
                let lo = if op == BinOp::BitOr { a.lo.max(b.lo) } else { 0 };
                return (Iv::new(lo, top), None);
            }
            return full;
        }
        _ => unreachable!("handled above"),
    };
    wrap(ty, exact)
}

fn pow2_above(v: i128) -> i128 {
    let mut p = 1i128;
    while p <= v {
        p <<= 1;
    }
    p
}

fn corners(a: Iv, b: Iv, f: impl Fn(i128, i128) -> Option<i128>) -> Option<Iv> {
    let mut xs = vec![a.lo, a.hi];
    if a.contains(0) {
        xs.push(0);
    }
    let mut acc: Option<Iv> = None;
    for &x in &xs {
        for y in [b.lo, b.hi] {
            if let Some(v) = f(x, y) {
                let p = Iv::point(v);
                acc = Some(acc.map_or(p, |q| q.hull(p)));
            }
        }
    }
    acc
}

fn un_forward(op: UnOp, ty: IntTy, a: Iv) -> (Iv, Option<i128>) {
    match op {
        UnOp::Not => (bool_iv(a.is_zero(), a.excludes_zero()), None),
        UnOp::Neg => wrap(ty, Iv::new(-a.hi, -a.lo)),
        UnOp::BitNot => wrap(ty, Iv::new(-a.hi - 1, -a.lo - 1)),
    }
}

fn bool_iv(definitely_true: bool, definitely_false: bool) -> Iv {
    match (definitely_true, definitely_false) {
        (true, _) => Iv::point(1),
        (_, true) => Iv::point(0),
        _ => Iv::new(0, 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_uniform_and_straddling() {
        assert_eq!(wrap(IntTy::U8, Iv::new(256, 300)), (Iv::new(0, 44), Some(256)));
        assert_eq!(wrap(IntTy::I8, Iv::new(-200, -129)), (Iv::new(56, 127), Some(-256)));
        assert_eq!(wrap(IntTy::I8, Iv::new(100, 200)).1, None);
    }

    #[test]
    fn forward_is_sound_on_small_types() {
        // every concrete result lies inside the forward interval
        let ops = [
            BinOp::Add,
            BinOp::Sub,
            BinOp::Mul,
            BinOp::Div,
            BinOp::Rem,
            BinOp::Shl,
            BinOp::Shr,
            BinOp::BitAnd,
            BinOp::BitOr,
            BinOp::BitXor,
            BinOp::Lt,
            BinOp::Eq,
            BinOp::Ne,
            BinOp::Ge,
        ];
        let ranges =
            [Iv::new(-8, -3), Iv::new(-2, 5), Iv::new(0, 0), Iv::new(3, 9), Iv::new(120, 127), Iv::new(-128, -120)];
        for ty in [IntTy::I8, IntTy::U8] {
            for op in ops {
                for a in ranges {
                    for b in ranges {
                        let (a, b) = (a.meet(Iv::full(ty)), b.meet(Iv::full(ty)));
                        if a.is_empty() || b.is_empty() {
                            continue;
                        }
                        let (f, _) = bin_forward(op, ty, a, b);
                        for x in a.lo..=a.hi {
                            for y in b.lo..=b.hi {
                                if let Ok(v) = semantics::binop(op, ty, x as i64, y as i64) {
                                    assert!(f.contains(i128::from(v)), "{op:?} {ty} {a:?} {b:?} -> {v} not in {f:?}");
                                }
                            }
                        }
                    }
                }
            }
        }
    }
}
