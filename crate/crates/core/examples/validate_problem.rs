//! Checks problem documents against the schema and reports each violation
//! with its path.

use thermoreason::KnowledgeBase;

const GOOD: &str = include_str!("../data/problems/a02_isentropic_expansion.yaml");

const BAD: &str = "\
process_class: single_change_of_state
material: air
attributes:
  change_12: {reversible: maybe, isentropic: true}
given:
  T_1: -20.0
  T_99: 1.0
targets: [T_1, T_1]
";

fn main() {
    let kb = KnowledgeBase::builtin();
    for (name, text) in [("good", GOOD), ("bad", BAD)] {
        let report = kb.validate_problem(text).unwrap();
        println!("{name}: conforms = {}", report.conforms());
        for v in &report.violations {
            println!("  {}: {}", v.path, v.message);
        }
    }
}
