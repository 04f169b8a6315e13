use std::sync::Arc;

use thermoreason::reasoner::{setup_equations, solve_with, FirstFound, ReasonerError, Stage};
use thermoreason::{
    solve_problem, KnowledgeBase, ProblemDocument, ProblemInstance, SolutionReport, Valuation,
};

fn kb() -> Arc<KnowledgeBase> {
    Arc::new(KnowledgeBase::builtin())
}

fn load(name: &str) -> ProblemInstance {
    let path = format!("{}/data/problems/{name}.yaml", env!("CARGO_MANIFEST_DIR"));
    let doc = ProblemDocument::from_yaml(&std::fs::read_to_string(path).unwrap()).unwrap();
    ProblemInstance::from_document(kb(), &doc).unwrap()
}

#[test]
fn thermal_eos_instantiated_per_state() {
    let p = load("a01_isothermal_compression");
    let eqs = setup_equations(&p).unwrap();
    let eos: Vec<&str> = eqs
        .iter()
        .filter(|e| e.template.name == "e_thermal_eos")
        .map(|e| e.name.as_str())
        .collect();
    assert_eq!(eos, ["e_thermal_eos@state_1", "e_thermal_eos@state_2"]);
}

#[test]
fn equilibrium_has_no_change_equations() {
    let p = load("a04_equilibrium_state");
    let eqs = setup_equations(&p).unwrap();
    assert!(!eqs.is_empty());
    for e in &eqs {
        assert!(!e.name.contains("change_12"), "{}", e.name);
        assert!(
            !e.variables()
                .iter()
                .any(|v| v.ends_with("_12") || v.ends_with("_2")),
            "{}",
            e.name
        );
    }
}

#[test]
fn guards_select_process_equations() {
    let iso = setup_equations(&load("a01_isothermal_compression")).unwrap();
    let names: Vec<&str> = iso.iter().map(|e| e.template.name.as_str()).collect();
    assert!(names.contains(&"e_isothermal"));
    assert!(!names.contains(&"e_isochoric"));
    assert!(!names.contains(&"e_adiabatic_heat"));

    let adiabatic = setup_equations(&load("a02_isentropic_expansion")).unwrap();
    let names: Vec<&str> = adiabatic.iter().map(|e| e.template.name.as_str()).collect();
    assert!(names.contains(&"e_adiabatic_heat"));
    assert!(names.contains(&"e_isentropic_temperature"));
}

#[test]
fn steps_follow_the_path() {
    for name in [
        "a01_isothermal_compression",
        "a05_isobaric_heating",
        "a12_helium_compression",
    ] {
        let solved = solve_with(&load(name), &FirstFound).unwrap();
        assert_eq!(solved.report.steps.len(), solved.path.len(), "{name}");
        for (step, path) in solved.report.steps.iter().zip(&solved.path.steps) {
            assert_eq!(step.equation, path.equation);
            assert_eq!(step.solved, path.variable);
            assert!(step.residual <= 1e-9);
        }
    }
}

/// Re-evaluates every step from the JSON report alone.
#[test]
fn report_is_replayable() {
    let report = solve_problem(&load("a06_polytropic_compression")).unwrap();
    let report = SolutionReport::from_json(&report.to_json()).unwrap();
    let catalog = KnowledgeBase::builtin();
    let mut val = Valuation::new();
    for k in &report.knowns {
        val.insert(k.name.clone(), k.value);
    }
    for step in &report.steps {
        let template = &catalog.schema.equations[&step.template];
        let binding = template
            .slots
            .iter()
            .map(|s| (s.clone(), step.binding[&s.to_string()].clone()))
            .collect();
        let eq =
            thermoreason::EquationInstance::new(step.equation.clone(), template.clone(), binding)
                .unwrap();
        let out = eq.solve_for(&step.solved, &val).unwrap();
        assert!(
            (out.value - step.value).abs() <= 1e-9 * step.value.abs().max(1.0),
            "{}",
            step.equation
        );
        val.insert(step.solved.clone(), out.value);
    }
    for r in &report.results {
        assert_eq!(val.get(&r.name), Some(r.value));
    }
}

#[test]
fn markdown_sections() {
    let md = solve_problem(&load("a01_isothermal_compression"))
        .unwrap()
        .to_markdown();
    assert_eq!(md.matches("## Solution steps").count(), 1);
    assert!(md.contains("applies by r_isothermal"));
    assert!(md.contains("| W_12 | 59688.1 | J |"));
    assert!(md.contains("`T0` = 293.15 K (constant)"));
}

#[test]
fn errors_carry_stages() {
    let mut p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
    let e = solve_problem(&p).unwrap_err();
    assert_eq!(e.stage(), Stage::Definition);
    assert_eq!(e.code(), "IncompleteDefinition");

    p = load("a10_underdetermined");
    let e = solve_problem(&p).unwrap_err();
    assert_eq!(e.stage(), Stage::Reasoning);

    let e = solve_problem(&load("a09_overdetermined_inconsistent")).unwrap_err();
    assert_eq!(e.stage(), Stage::Audit);
    assert!(matches!(e, ReasonerError::InconsistentInput { .. }));
}

#[test]
fn renamed_variables_flow_through() {
    let path = format!(
        "{}/data/problems/a01_isothermal_compression.yaml",
        env!("CARGO_MANIFEST_DIR")
    );
    let doc = ProblemDocument::from_yaml(&std::fs::read_to_string(path).unwrap()).unwrap();
    let mut p = ProblemInstance::build_from_document(kb(), &doc).unwrap();
    p.rename("W_12", "work").unwrap();
    assert_eq!(p.targets(), ["work", "Q_12", "dU_12"]);
    let r = solve_problem(&p).unwrap();
    assert!((r.value("work").unwrap() - 59688.1).abs() < 0.1);
    assert!(r.value("W_12").is_none());

    let finalized = load("a01_isothermal_compression");
    let mut frozen = finalized.clone();
    assert!(frozen.rename("W_12", "work").is_err());
}
