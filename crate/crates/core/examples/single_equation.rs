//! Parses a concept-qualified equation, binds it to variable instances and
//! solves it for each unknown in turn.

use std::sync::Arc;

use thermoreason::equation::{Binding, Slot};
use thermoreason::{EquationInstance, EquationTemplate, Valuation};

fn main() {
    let template = Arc::new(
        EquationTemplate::parse(
            "e_polytropic",
            "p_1@State * V_1@State ^ n_poly@ChangeOfState",
            "p_2@State * V_2@State ^ n_poly@ChangeOfState",
            vec![],
        )
        .unwrap(),
    );
    let binding: Binding = template
        .slots
        .iter()
        .map(|s: &Slot| {
            (
                s.clone(),
                s.to_string().split('@').next().unwrap().to_string(),
            )
        })
        .collect();
    let eq = EquationInstance::new("polytropic", template, binding)
        .unwrap()
        .with_positive(["p_1", "p_2", "V_1", "V_2"].map(String::from));
    println!("{}", eq.render_bound());

    let mut values: Valuation = [("p_1", 1.0e5), ("V_1", 1.0), ("V_2", 0.25), ("n_poly", 1.3)]
        .into_iter()
        .collect();
    let p2 = eq.solve_for("p_2", &values).unwrap();
    println!("p_2 = {} Pa ({:?})", p2.value, p2.method);

    values.insert("p_2", p2.value);
    values.remove("n_poly");
    let n = eq.solve_for("n_poly", &values).unwrap();
    println!(
        "n_poly = {} ({:?}, residual {:e})",
        n.value, n.method, n.residual
    );
}
