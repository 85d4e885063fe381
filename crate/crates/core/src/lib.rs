//! Coverage-driven symbolic-execution test generation for mini-C.

pub mod cfg;
pub mod coverage;
pub mod engine;
pub mod frontend;
pub mod semantics;
pub mod solver;
pub mod symcore;
