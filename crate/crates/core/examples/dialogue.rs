//! Builds a problem step by step the way the interactive dialogue does,
//! printing the open choices after each decision.

use std::sync::Arc;

use thermoreason::problem::Choice;
use thermoreason::{KnowledgeBase, ProblemInstance};

fn show(p: &ProblemInstance) {
    for c in p.pending_choices() {
        match c {
            Choice::Specialization {
                instance, options, ..
            } => {
                println!("  specialize {instance}: {}", options.join(" | "))
            }
            Choice::Attribute {
                instance,
                attribute,
                allowed_values,
            } => {
                println!("  {instance}.{attribute}? {}", allowed_values.join(" | "))
            }
            Choice::Material { options } => println!("  material: {}", options.join(" | ")),
        }
    }
}

fn main() {
    let kb = Arc::new(KnowledgeBase::builtin());
    let mut p = ProblemInstance::create(kb, "single_change_of_state").unwrap();
    println!("open choices:");
    show(&p);

    p.set_material("air").unwrap();
    p.set_attribute("change_12", "adiabatic?", "true").unwrap();
    p.set_attribute("change_12", "reversible?", "true").unwrap();
    let change = p.instance("change_12").unwrap();
    println!("derived: {:?}", change.derived);

    for a in ["isothermal", "isobaric", "isochoric", "polytropic"] {
        p.set_attribute("change_12", a, "false").unwrap();
    }
    p.rename("T_2", "T_end").unwrap();
    p.set_value("T_1", 400.0).unwrap();
    p.set_value("p_1", 2.0e5).unwrap();
    p.set_value("p_2", 1.0e5).unwrap();
    if let Err(e) = p.set_value("T_end", -3.0) {
        println!("rejected: {e}");
    }
    p.set_targets(&["T_end"]).unwrap();
    println!("still open:");
    show(&p);

    let doc = p.finalize().unwrap();
    print!("{}", doc.to_yaml());
}
