use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::equation::{
    guards_satisfied, AttributeState, Binding, EquationError, EquationInstance, EquationTemplate,
    GuardError, Slot,
};
use crate::ontology::OntologySchema;
use crate::problem::{ConceptInstance, ProblemInstance};

const CHANGE_OF_STATE: &str = "ChangeOfState";

/// Instantiates every catalog template whose guards hold, once per binding
/// of its concept-qualified slots to the problem's concept instances.
/// Instances are sorted by name.
pub fn setup_equations(problem: &ProblemInstance) -> Result<Vec<EquationInstance>, EquationError> {
    let schema = &problem.knowledge().schema;
    let mut out = Vec::new();
    for template in schema.equations.values() {
        instantiate_template(schema, template, problem.instances(), &mut out)?;
    }
    out.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(out)
}

fn is_instance_of(inst: &ConceptInstance, concept: &str) -> bool {
    inst.lineage.iter().any(|c| c == concept)
}

fn instantiate_template(
    schema: &OntologySchema,
    template: &Arc<EquationTemplate>,
    instances: &[ConceptInstance],
    out: &mut Vec<EquationInstance>,
) -> Result<(), EquationError> {
    let hosted = template
        .slots
        .iter()
        .any(|s| s.role.is_some() || s.qualifier == CHANGE_OF_STATE);
    let hosts: Vec<Option<&ConceptInstance>> = if hosted {
        instances
            .iter()
            .filter(|i| is_instance_of(i, CHANGE_OF_STATE))
            .map(Some)
            .collect()
    } else {
        vec![None]
    };
    for host in hosts {
        // Slots bound through the host: role slots and the host's own slots.
        let mut fixed: BTreeMap<&Slot, &ConceptInstance> = BTreeMap::new();
        let mut open: BTreeSet<&str> = BTreeSet::new();
        let mut ok = true;
        for slot in &template.slots {
            match (slot.role, host) {
                (Some(role), Some(h)) => match h
                    .roles
                    .get(&role)
                    .and_then(|id| instances.iter().find(|i| i.id == *id))
                {
                    Some(state) if is_instance_of(state, &slot.qualifier) => {
                        fixed.insert(slot, state);
                    }
                    _ => ok = false,
                },
                (Some(_), None) => ok = false,
                (None, Some(h)) if is_instance_of(h, &slot.qualifier) => {
                    fixed.insert(slot, h);
                }
                (None, _) => {
                    open.insert(&slot.qualifier);
                }
            }
        }
        if !ok {
            continue;
        }
        let open: Vec<&str> = open.into_iter().collect();
        let candidates: Vec<Vec<&ConceptInstance>> = open
            .iter()
            .map(|q| instances.iter().filter(|i| is_instance_of(i, q)).collect())
            .collect();
        for combo in cartesian(&candidates) {
            let chosen: BTreeMap<&str, &ConceptInstance> =
                open.iter().copied().zip(combo).collect();
            let mut binding = Binding::new();
            let mut scope: Vec<&ConceptInstance> = host.into_iter().collect();
            let mut complete = true;
            for slot in &template.slots {
                let inst = fixed
                    .get(slot)
                    .copied()
                    .unwrap_or_else(|| chosen[slot.qualifier.as_str()]);
                match inst.variables.get(&slot.variable) {
                    Some(name) => {
                        binding.insert(slot.clone(), name.clone());
                    }
                    None => complete = false,
                }
                if !scope.iter().any(|s| s.id == inst.id) {
                    scope.push(inst);
                }
            }
            if !complete {
                continue;
            }
            let state = scope.iter().fold(AttributeState::new(), |st, i| {
                st.with_instance(i.lineage.clone(), i.effective_attributes())
            });
            match guards_satisfied(template, &state, &schema.rules) {
                Ok(true) => {}
                Ok(false) | Err(GuardError::UnknownAttribute { .. }) => continue,
                Err(GuardError::UnknownRule(rule)) => {
                    return Err(EquationError::UnboundSlot {
                        slot: format!("guard `{rule}` of `{}`", template.name),
                    })
                }
            }
            let name = instance_name(&template.name, host, &scope);
            let positive: Vec<String> = template
                .slots
                .iter()
                .filter(|s| schema.is_positive(&s.variable))
                .map(|s| binding[s].clone())
                .collect();
            let inst = match EquationInstance::new(name, template.clone(), binding) {
                Ok(inst) => inst,
                // Two slots landing on one variable instance: not a valid binding.
                Err(EquationError::DuplicateBinding { .. }) => continue,
                Err(e) => return Err(e),
            };
            out.push(inst.with_positive(positive));
        }
    }
    Ok(())
}

/// `template@ids` where ids are the host, or the suffixed instances used.
fn instance_name(
    template: &str,
    host: Option<&ConceptInstance>,
    scope: &[&ConceptInstance],
) -> String {
    let mut ids: BTreeSet<&str> = BTreeSet::new();
    if let Some(h) = host {
        ids.insert(&h.id);
    }
    for inst in scope {
        let via_role = host.is_some_and(|h| h.roles.values().any(|id| *id == inst.id));
        if !inst.suffix.is_empty() && !via_role {
            ids.insert(&inst.id);
        }
    }
    if ids.is_empty() {
        template.to_string()
    } else {
        format!(
            "{template}@{}",
            ids.into_iter().collect::<Vec<_>>().join(",")
        )
    }
}

fn cartesian<T: Copy>(lists: &[Vec<T>]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![Vec::new()];
    for list in lists {
        let mut next = Vec::with_capacity(out.len() * list.len());
        for prefix in &out {
            for item in list {
                let mut v = prefix.clone();
                v.push(*item);
                next.push(v);
            }
        }
        out = next;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::knowledge::KnowledgeBase;

    fn problem(class: &str, attrs: &[(&str, &str)]) -> ProblemInstance {
        let mut p = ProblemInstance::create(Arc::new(KnowledgeBase::builtin()), class).unwrap();
        p.set_material("air").unwrap();
        for (a, v) in attrs {
            p.set_attribute("change_12", a, v).unwrap();
        }
        p
    }

    fn names(eqs: &[EquationInstance]) -> Vec<&str> {
        eqs.iter().map(|e| e.name.as_str()).collect()
    }

    #[test]
    fn thermal_eos_once_per_state() {
        let eqs = setup_equations(&problem("single_change_of_state", &[])).unwrap();
        let eos: Vec<&EquationInstance> = eqs
            .iter()
            .filter(|e| e.template.name == "e_thermal_eos")
            .collect();
        assert_eq!(eos.len(), 2);
        assert_eq!(eos[0].name, "e_thermal_eos@state_1");
        assert_eq!(eos[0].render_bound(), "p_1 * V_1 = m * R * T_1");
        assert_eq!(eos[1].render_bound(), "p_2 * V_2 = m * R * T_2");
        assert!(names(&eqs).contains(&"e_first_law@change_12"));
        assert!(names(&eqs).contains(&"e_gas_constant"));
    }

    #[test]
    fn guards_filter_templates() {
        let eqs = setup_equations(&problem(
            "single_change_of_state",
            &[("adiabatic", "false")],
        ))
        .unwrap();
        assert!(!eqs.iter().any(|e| e.template.name == "e_adiabatic_heat"));
        let eqs =
            setup_equations(&problem("single_change_of_state", &[("adiabatic", "true")])).unwrap();
        assert!(eqs.iter().any(|e| e.template.name == "e_adiabatic_heat"));
    }

    #[test]
    fn equilibrium_has_only_state_equations() {
        let eqs = setup_equations(&problem("equilibrium_state", &[])).unwrap();
        assert!(eqs.iter().all(|e| !e.name.contains("change")));
        for t in [
            "e_thermal_eos",
            "e_state_entropy",
            "e_state_internal_energy",
        ] {
            assert!(eqs.iter().any(|e| e.template.name == t), "{t}");
        }
    }

    #[test]
    fn unspecialized_material_has_no_ideal_gas_equations() {
        let p = ProblemInstance::create(Arc::new(KnowledgeBase::builtin()), "equilibrium_state")
            .unwrap();
        let eqs = setup_equations(&p).unwrap();
        assert!(!eqs.iter().any(|e| e.template.name == "e_thermal_eos"));
    }
}
