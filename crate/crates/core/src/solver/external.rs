//! Hand a constraint to an external SMT-LIB2 solver process.

use std::io::Write;
use std::process::Command;

use super::smtlib::{emit_smtlib, parse_model};
use super::{Domains, SolveResult};
use crate::symcore::Constraint;

#[derive(Debug, thiserror::Error)]
pub enum ExternalError {
    #[error("empty solver command")]
    EmptyCommand,
    #[error("solver I/O: {0}")]
    Io(#[from] std::io::Error),
    #[error("unreadable solver output: {0}")]
    Output(String),
}

/// A command line such as `z3 -smt2`; the script path is appended as the
/// last argument.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExternalSolver {
    pub command: String,
}

impl ExternalSolver {
    pub fn new(command: &str) -> Self {
        ExternalSolver { command: command.to_string() }
    }

    pub fn solve(&self, constraint: &Constraint, domains: &Domains) -> Result<SolveResult, ExternalError> {
        let mut words = self.command.split_whitespace();
        let program = words.next().ok_or(ExternalError::EmptyCommand)?;
        let mut file = tempfile::Builder::new().suffix(".smt2").tempfile()?;
        file.write_all(emit_smtlib(constraint, domains).as_bytes())?;
        file.flush()?;
        let out = Command::new(program).args(words).arg(file.path()).output()?;
        let text = String::from_utf8_lossy(&out.stdout);
        let mut lines = text.trim_start().splitn(2, '\n');
        let verdict = lines.next().unwrap_or("").trim();
        match verdict {
            "sat" => {
                let mut model = parse_model(lines.next().unwrap_or(""), constraint).map_err(ExternalError::Output)?;
                for (name, _, _) in constraint.inputs() {
                    model.entry(name.to_string()).or_insert(0);
                }
                // the script is stricter about division than needed, never looser,
                // so a model it returns must satisfy the internal semantics
                let ok = constraint.holds(&|n: &str| model.get(n).copied()).unwrap_or(false);
                if ok {
                    Ok(SolveResult::Sat(model))
                } else {
                    Ok(SolveResult::Unknown("external model rejected".into()))
                }
            }
            "unsat" => Ok(SolveResult::Unsat { hint: None }),
            "unknown" | "timeout" => Ok(SolveResult::Unknown("external".into())),
            other => Err(ExternalError::Output(format!("unexpected verdict `{other}`"))),
        }
    }
}
