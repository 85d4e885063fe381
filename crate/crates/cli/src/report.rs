//! Batch summary: one row per function, bin counts per criterion,
//! exceptions by kind and timing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use smartgen_core::coverage::{Bin, BINS};

use crate::FunctionOutcome;

pub const CRITERIA: [&str; 3] = ["statement", "branch", "mcdc"];

#[derive(Clone, Debug, PartialEq)]
pub struct FunctionRow {
    pub file: String,
    pub function: String,
    pub cases: usize,
    pub statement_pct: f64,
    pub branch_pct: f64,
    pub mcdc_pct: Option<f64>,
    pub bins: [Bin; 3],
    /// (edge, reason) for labeled edges no case takes.
    pub uncovered: Vec<(usize, String)>,
    pub exceptions: usize,
    pub mismatches: usize,
    pub seconds: f64,
}

impl FunctionRow {
    /// Every uncovered edge was shown to be infeasible.
    pub fn only_infeasible_gaps(&self) -> bool {
        !self.uncovered.is_empty() && self.uncovered.iter().all(|(_, r)| r == "infeasible")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    pub rows: Vec<FunctionRow>,
    /// Functions per bin, indexed like `CRITERIA` then `BINS`.
    pub bin_counts: [[usize; 6]; 3],
    pub exceptions: BTreeMap<String, usize>,
    pub total_seconds: f64,
    pub parse_errors: Vec<String>,
}

fn pct(v: f64) -> String {
    format!("{v:.1}")
}

impl BatchReport {
    pub fn new(outcomes: &[FunctionOutcome], parse_errors: Vec<String>) -> Self {
        let mut rows = Vec::new();
        let mut bin_counts = [[0; 6]; 3];
        let mut exceptions = BTreeMap::new();
        for o in outcomes {
            let r = &o.report;
            let bins = r.bins();
            for (c, b) in bins.iter().enumerate() {
                bin_counts[c][BINS.iter().position(|x| x == b).expect("known bin")] += 1;
            }
            let mut exc = 0;
            for e in o.cases.iter().filter_map(|c| c.exception.as_ref()) {
                *exceptions.entry(e.kind.name().to_string()).or_insert(0) += 1;
                exc += 1;
            }
            rows.push(FunctionRow {
                file: o.file.clone(),
                function: o.function.clone(),
                cases: o.cases.len(),
                statement_pct: r.statement_pct(),
                branch_pct: r.branch_pct(),
                mcdc_pct: r.mcdc_pct(),
                bins,
                uncovered: r
                    .uncovered
                    .iter()
                    .map(|u| (u.edge, u.reason.map_or("unknown", |x| x.name()).to_string()))
                    .collect(),
                exceptions: exc,
                mismatches: o.mismatches.len(),
                seconds: r.generation_seconds,
            });
        }
        let total_seconds = rows.iter().map(|r| r.seconds).sum();
        BatchReport { rows, bin_counts, exceptions, total_seconds, parse_errors }
    }

    pub fn average_seconds(&self) -> f64 {
        if self.rows.is_empty() {
            0.0
        } else {
            self.total_seconds / self.rows.len() as f64
        }
    }

    /// Functions per coverage range for each criterion.
    pub fn bins_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["criterion".to_string()];
        header.extend(BINS.iter().map(|b| b.label().to_string()));
        w.write_record(&header).expect("in-memory");
        for (c, name) in CRITERIA.iter().enumerate() {
            let mut rec = vec![name.to_string()];
            rec.extend(self.bin_counts[c].iter().map(|n| n.to_string()));
            w.write_record(&rec).expect("in-memory");
        }
        String::from_utf8(w.into_inner().expect("in-memory")).expect("ascii")
    }

    /// Per-function table; `with_time` adds the generation seconds column.
    pub fn table_csv(&self, with_time: bool) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec![
            "file",
            "function",
            "cases",
            "statement",
            "branch",
            "mcdc",
            "statement_bin",
            "branch_bin",
            "mcdc_bin",
            "uncovered",
        ];
        if with_time {
            header.push("seconds");
        }
        w.write_record(&header).expect("in-memory");
        for r in &self.rows {
            let uncovered: Vec<String> = r.uncovered.iter().map(|(e, why)| format!("e{e}:{why}")).collect();
            let mut rec = vec![
                r.file.clone(),
                r.function.clone(),
                r.cases.to_string(),
                pct(r.statement_pct),
                pct(r.branch_pct),
                r.mcdc_pct.map_or("N/A".to_string(), pct),
                r.bins[0].label().to_string(),
                r.bins[1].label().to_string(),
                r.bins[2].label().to_string(),
                uncovered.join(" "),
            ];
            if with_time {
                rec.push(format!("{:.3}", r.seconds));
            }
            w.write_record(&rec).expect("in-memory");
        }
        String::from_utf8(w.into_inner().expect("in-memory")).expect("utf-8")
    }

    pub fn functions_csv(&self) -> String {
        self.table_csv(true)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let width = self.rows.iter().map(|r| r.function.len()).max().unwrap_or(8).max(8);
        let _ = writeln!(
            s,
            "{:<width$}  {:>5}  {:>6}  {:>6}  {:>6}  {:>8}",
            "function", "cases", "stmt%", "br%", "mcdc%", "seconds"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:<width$}  {:>5}  {:>6}  {:>6}  {:>6}  {:>8.3}",
                r.function,
                r.cases,
                pct(r.statement_pct),
                pct(r.branch_pct),
                r.mcdc_pct.map_or("N/A".to_string(), pct),
                r.seconds
            );
        }
        let _ = writeln!(
            s,
            "\n{:<10}{}",
            "criterion",
            BINS.iter().map(|b| format!("{:>8}", b.label())).collect::<String>()
        );
        for (c, name) in CRITERIA.iter().enumerate() {
            let _ =
                writeln!(s, "{:<10}{}", name, self.bin_counts[c].iter().map(|n| format!("{n:>8}")).collect::<String>());
        }
        if !self.exceptions.is_empty() {
            let list: Vec<String> = self.exceptions.iter().map(|(k, n)| format!("{k} {n}")).collect();
            let _ = writeln!(s, "\nexceptions: {}", list.join(", "));
        }
        let _ = writeln!(
            s,
            "\nfunctions: {}  total: {:.3} s  average: {:.3} s/func",
            self.rows.len(),
            self.total_seconds,
            self.average_seconds()
        );
        for e in &self.parse_errors {
            let _ = writeln!(s, "skipped: {e}");
        }
        s
    }
}
