use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use smartgen_cli::{run_batch, Format, RunConfig};
use smartgen_core::engine::Budgets;

/// Generate unit tests for every function in a tree of mini-C sources.
#[derive(Parser, Debug)]
#[command(name = "smartgen", version)]
struct Args {
    /// Directory searched recursively for `.mc` files.
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Only functions whose name matches this glob.
    #[arg(long)]
    func: Option<String>,
    /// Wall-clock budget per function.
    #[arg(long, default_value_t = 10_000)]
    budget_ms: u64,
    #[arg(long, default_value_t = 10_000)]
    max_states: usize,
    #[arg(long, default_value_t = 2)]
    loop_bound: u32,
    #[arg(long, default_value_t = 500)]
    solver_ms: u64,
    /// Uninitialised locals become inputs.
    #[arg(long)]
    symbolic_locals: bool,
    #[arg(long, default_value_t = 0)]
    inline_depth: u32,
    /// SMT-LIB2 solver consulted when the built-in one gives up, e.g. `z3`.
    /// The script path is appended to the command.
    #[arg(long)]
    external_solver: Option<String>,
    #[arg(long, value_delimiter = ',', default_value = "json,tcf,csv")]
    emit: Vec<Format>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Fail on the first file that does not parse.
    #[arg(long)]
    strict: bool,
    /// Explore depth-first instead of by flood search.
    #[arg(long)]
    compare_dfs: bool,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let a = Args::parse();
    let seed = match std::env::var("SMARTGEN_SEED") {
        Ok(s) => match s.parse() {
            Ok(v) => Some(v),
            Err(_) => {
                eprintln!("smartgen: SMARTGEN_SEED must be an unsigned integer");
                return ExitCode::from(2);
            }
        },
        Err(_) => None,
    };
    let config = RunConfig {
        function_filter: a.func,
        budgets: Budgets {
            max_states: a.max_states,
            wall_clock_ms: a.budget_ms,
            loop_bound: a.loop_bound,
            solver_ms: a.solver_ms,
        },
        symbolic_locals: a.symbolic_locals,
        inline_depth: a.inline_depth,
        external_solver: a.external_solver,
        formats: a.emit,
        jobs: a.jobs,
        strict: a.strict,
        compare_dfs: a.compare_dfs,
        seed,
        ..RunConfig::new(a.src, a.out)
    };
    match run_batch(&config) {
        Ok((report, _)) => {
            print!("{}", report.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("smartgen: {e}");
            ExitCode::FAILURE
        }
    }
}
