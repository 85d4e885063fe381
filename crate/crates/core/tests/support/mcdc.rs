//! Truth-table MC/DC: atom `i` is covered when two recorded evaluations
//! have full completions that match their outcomes, differ only at `i`,
//! and give different outcomes.

use smartgen_core::cfg::Formula;

pub fn value(f: &Formula, v: &[bool]) -> bool {
    match f {
        Formula::Atom(i) => v[*i],
        Formula::Not(g) => !value(g, v),
        Formula::And(a, b) => value(a, v) && value(b, v),
        Formula::Or(a, b) => value(a, v) || value(b, v),
    }
}

pub fn completions(partial: &[Option<bool>]) -> Vec<Vec<bool>> {
    let mut out = vec![Vec::new()];
    for p in partial {
        let choices: &[bool] = match p {
            Some(true) => &[true],
            Some(false) => &[false],
            None => &[false, true],
        };
        out = out
            .into_iter()
            .flat_map(|pre: Vec<bool>| choices.iter().map(move |&c| [pre.as_slice(), &[c]].concat()))
            .collect();
    }
    out
}

pub fn covered(formula: &Formula, natoms: usize, evals: &[(Vec<Option<bool>>, bool)]) -> Vec<bool> {
    let mut covered = vec![false; natoms];
    for (x, (u, ou)) in evals.iter().enumerate() {
        for (v, ov) in &evals[x + 1..] {
            if ou == ov {
                continue;
            }
            for cu in completions(u).iter().filter(|c| value(formula, c) == *ou) {
                for cv in completions(v).iter().filter(|c| value(formula, c) == *ov) {
                    let diff: Vec<usize> = (0..natoms).filter(|&j| cu[j] != cv[j]).collect();
                    if let [i] = diff[..] {
                        covered[i] = true;
                    }
                }
            }
        }
    }
    covered
}
