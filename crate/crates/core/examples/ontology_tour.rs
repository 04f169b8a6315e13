//! Walks the built-in ontology: concept hierarchy, inherited variables,
//! rules and a filtered graph export.

use std::collections::BTreeSet;

use thermoreason::ontology::export_graph;
use thermoreason::KnowledgeBase;

fn main() {
    let kb = KnowledgeBase::builtin();
    let schema = &kb.schema;
    println!("{} elements", schema.element_count());

    for name in ["ClosedSystem", "IdealGas", "ChangeOfState"] {
        let lineage = schema.lineage(name).unwrap();
        println!("{}", lineage.join(" is_a "));
    }

    let state = schema.resolve_concept("State").unwrap();
    println!("State variables: {}", state.variables.join(", "));

    let change = schema.resolve_concept("ChangeOfState").unwrap();
    println!("ChangeOfState attributes: {}", change.attributes.join(", "));

    for rule in schema.rules.values() {
        println!(
            "{}: {:?} -> {:?}",
            rule.name, rule.condition, rule.consequence
        );
    }

    let filter: BTreeSet<String> = ["ClosedSystem", "System"].map(String::from).into();
    let graph = export_graph(schema, Some(&filter)).unwrap();
    print!("{}", graph.to_dot("closed_system"));
}
