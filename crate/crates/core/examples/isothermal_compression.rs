//! Solves a problem document end to end and prints the markdown report.
//!
//!     cargo run --example isothermal_compression [problem.yaml]

use std::sync::Arc;

use thermoreason::{solve_problem, KnowledgeBase, ProblemDocument, ProblemInstance};

const DEFAULT: &str = include_str!("../data/problems/a01_isothermal_compression.yaml");

fn main() {
    let text = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path).expect("readable problem file"),
        None => DEFAULT.to_string(),
    };
    let doc = ProblemDocument::from_yaml(&text).unwrap();
    let kb = Arc::new(KnowledgeBase::builtin());
    let problem = ProblemInstance::from_document(kb, &doc).unwrap();
    match solve_problem(&problem) {
        Ok(report) => print!("{}", report.to_markdown()),
        Err(e) => eprintln!("{} [{:?}]: {e}", e.code(), e.stage()),
    }
}
