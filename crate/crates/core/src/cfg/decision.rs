//! Decomposition of a decision into atomic conditions and the boolean
//! formula over them.

use serde::{Deserialize, Serialize};

use crate::frontend::{Expr, ExprKind, LogicOp};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Formula {
    Atom(usize),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
}

/// Split `e` at `&&`, `||` and `!`; atoms are numbered in source order.
pub fn decompose(e: &Expr) -> (Vec<Expr>, Formula) {
    fn go(e: &Expr, atoms: &mut Vec<Expr>) -> Formula {
        match &e.kind {
            ExprKind::Logical(op, a, b) => {
                let fa = go(a, atoms);
                let fb = go(b, atoms);
                match op {
                    LogicOp::And => Formula::And(Box::new(fa), Box::new(fb)),
                    LogicOp::Or => Formula::Or(Box::new(fa), Box::new(fb)),
                }
            }
            ExprKind::LogNot(a) => Formula::Not(Box::new(go(a, atoms))),
            _ => {
                atoms.push(e.clone());
                Formula::Atom(atoms.len() - 1)
            }
        }
    }
    let mut atoms = Vec::new();
    let f = go(e, &mut atoms);
    (atoms, f)
}

impl Formula {
    /// Short-circuit evaluation; `atom` is asked only for atoms that C
    /// would evaluate, in evaluation order.
    pub fn eval<E>(&self, atom: &mut impl FnMut(usize) -> Result<bool, E>) -> Result<bool, E> {
        Ok(match self {
            Formula::Atom(i) => atom(*i)?,
            Formula::Not(f) => !f.eval(atom)?,
            Formula::And(a, b) => a.eval(atom)? && b.eval(atom)?,
            Formula::Or(a, b) => a.eval(atom)? || b.eval(atom)?,
        })
    }

    /// Evaluate under a full assignment, returning the outcome and the
    /// atoms actually evaluated (others stay `None`).
    pub fn eval_vector(&self, values: &[bool]) -> (bool, Vec<Option<bool>>) {
        let mut seen = vec![None; values.len()];
        let r = self
            .eval::<()>(&mut |i| {
                seen[i] = Some(values[i]);
                Ok(values[i])
            })
            .unwrap_or(false);
        (r, seen)
    }

    pub fn atom_count(&self) -> usize {
        match self {
            Formula::Atom(_) => 1,
            Formula::Not(f) => f.atom_count(),
            Formula::And(a, b) | Formula::Or(a, b) => a.atom_count() + b.atom_count(),
        }
    }

    /// Every short-circuit evaluation path: the ordered (atom, value)
    /// assignments it consumes and the resulting outcome. The `true` value
    /// of each atom is explored before `false`.
    pub fn paths(&self) -> Vec<(Vec<(usize, bool)>, bool)> {
        let mut out = Vec::new();
        let mut prefix: Vec<(usize, bool)> = Vec::new();
        loop {
            // Replay the prefix; the first atom beyond it defaults to true.
            let mut steps = Vec::new();
            let outcome = self
                .eval::<()>(&mut |i| {
                    let v = prefix.get(steps.len()).map(|p| p.1).unwrap_or(true);
                    steps.push((i, v));
                    Ok(v)
                })
                .unwrap_or(false);
            out.push((steps.clone(), outcome));
            // Advance to the next path: flip the deepest `true` to `false`.
            while let Some((_, v)) = steps.last() {
                if *v {
                    break;
                }
                steps.pop();
            }
            match steps.last_mut() {
                None => return out,
                Some(last) => last.1 = false,
            }
            prefix = steps;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::{parse, walk_stmts, StmtKind};
    use crate::semantics::{binop, BinOp, IntTy};

    fn cond(src: &str) -> Expr {
        let p = parse(&format!("int f(int a, int b, int c, int x) {{ if ({src}) return 1; return 0; }}")).unwrap();
        let mut out = None;
        walk_stmts(&p.functions[0].body, &mut |s| {
            if let StmtKind::If { cond, .. } = &s.kind {
                out = Some(cond.clone());
            }
        });
        out.unwrap()
    }

    fn names(atoms: &[Expr]) -> Vec<String> {
        atoms
            .iter()
            .map(|a| match &a.kind {
                ExprKind::Var(crate::frontend::VarRef::Local(i)) => ["a", "b", "c", "x"][*i].to_string(),
                _ => "cmp".into(),
            })
            .collect()
    }

    #[test]
    fn examples() {
        let (atoms, f) = decompose(&cond("(a && b) || c"));
        assert_eq!(names(&atoms), ["a", "b", "c"]);
        assert_eq!(f.atom_count(), 3);
        let (atoms, _) = decompose(&cond("x > 0"));
        assert_eq!(atoms.len(), 1);
        let (atoms, f) = decompose(&cond("!(a || (b && c))"));
        assert_eq!(names(&atoms), ["a", "b", "c"]);
        assert!(matches!(f, Formula::Not(_)));
    }

    #[test]
    fn paths_of_and() {
        let (_, f) = decompose(&cond("a && b"));
        let ps = f.paths();
        assert_eq!(
            ps,
            vec![(vec![(0, true), (1, true)], true), (vec![(0, true), (1, false)], false), (vec![(0, false)], false),]
        );
    }

    /// Reconstructing the formula from atom truth values agrees with direct
    /// evaluation of the whole condition under C semantics.
    #[test]
    fn reconstruction_matches_direct_evaluation() {
        let e = cond("!(a || (b && c)) || (x > 2 && !b)");
        let (atoms, f) = decompose(&e);
        for a in -1..=1 {
            for b in -1..=1 {
                for c in -1..=1 {
                    for x in 0..4 {
                        let env = [a, b, c, x];
                        let atom_val = |ae: &Expr| -> bool {
                            match &ae.kind {
                                ExprKind::Var(crate::frontend::VarRef::Local(i)) => env[*i] != 0,
                                ExprKind::Binary(BinOp::Gt, l, r) => {
                                    let ExprKind::Var(crate::frontend::VarRef::Local(i)) = l.kind else { panic!() };
                                    binop(BinOp::Gt, IntTy::I32, env[i], r.as_const().unwrap()).unwrap() != 0
                                }
                                _ => panic!("unexpected atom"),
                            }
                        };
                        let vals: Vec<bool> = atoms.iter().map(atom_val).collect();
                        let direct = !(a != 0 || (b != 0 && c != 0)) || (x > 2 && b == 0);
                        assert_eq!(f.eval_vector(&vals).0, direct);
                    }
                }
            }
        }
    }
}
