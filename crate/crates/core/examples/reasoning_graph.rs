//! Shows the reasoning graph of a small problem: the equation instances,
//! the order in which they fire and the extracted solution path.

use std::sync::Arc;

use thermoreason::reasoner::{extract_path, setup_equations, ReasoningGraph};
use thermoreason::{KnowledgeBase, ProblemInstance};

fn main() {
    let kb = Arc::new(KnowledgeBase::builtin());
    let mut p = ProblemInstance::create(kb, "equilibrium_state").unwrap();
    p.set_material("air").unwrap();
    for (n, v) in [
        ("m", 1.0),
        ("R", 287.0391668301868),
        ("T_1", 300.0),
        ("V_1", 1.0),
    ] {
        p.set_value(n, v).unwrap();
    }
    p.set_targets(&["s_1"]).unwrap();

    let eqs = setup_equations(&p).unwrap();
    for e in &eqs {
        println!("{:<34} {}", e.name, e.render_bound());
    }

    let names = p.variable_names();
    let targets = p.resolved_targets();
    let mut graph = ReasoningGraph::build(
        &eqs,
        names.iter().map(String::as_str),
        p.knowns().keys().map(String::as_str),
        &targets,
    );
    graph.reachability();
    for f in &graph.firings {
        println!(
            "fired {} -> {}",
            graph.equations[f.equation].name, f.variable
        );
    }
    let path = extract_path(&graph, &targets).unwrap();
    for (i, s) in path.steps.iter().enumerate() {
        println!("step {}: {} solves {}", i + 1, s.equation, s.variable);
    }
    print!("{}", graph.to_document().to_dot("reasoning"));
}
