//! Process classes: which concept instances a problem consists of and how
//! their variable instances are named.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{OntologySchema, SchemaError};
use crate::equation::StateRole;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceTemplate {
    pub id: String,
    pub concept: String,
    /// Appended to variable names, so `T` of the instance with suffix `_1`
    /// becomes `T_1`.
    #[serde(default)]
    pub suffix: String,
    /// Change-of-state instances: which state instance plays each role.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roles: BTreeMap<StateRole, String>,
}

impl InstanceTemplate {
    pub fn new(id: &str, concept: &str, suffix: &str) -> Self {
        InstanceTemplate {
            id: id.into(),
            concept: concept.into(),
            suffix: suffix.into(),
            roles: BTreeMap::new(),
        }
    }

    pub fn with_role(mut self, role: StateRole, state: &str) -> Self {
        self.roles.insert(role, state.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessClass {
    pub name: String,
    /// The ontology concept describing this class.
    pub concept: String,
    pub description: String,
    pub instances: Vec<InstanceTemplate>,
}

/// A concept instance after specialization, with its variable-instance names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceLayout {
    pub id: String,
    pub concept: String,
    /// `concept` followed by its ancestors.
    pub lineage: Vec<String>,
    pub suffix: String,
    pub roles: BTreeMap<StateRole, String>,
    /// Variable name → default variable-instance name.
    pub variables: BTreeMap<String, String>,
    /// Attributes available on the instance, sorted.
    pub attributes: Vec<String>,
}

impl ProcessClass {
    /// Lays out the instances, each specialized to the concept given in
    /// `specializations` (instance id → concept) or left at its template
    /// concept.
    pub fn instantiate(
        &self,
        schema: &OntologySchema,
        specializations: &BTreeMap<String, String>,
    ) -> Result<Vec<InstanceLayout>, SchemaError> {
        let mut out = Vec::with_capacity(self.instances.len());
        let mut names: BTreeMap<String, String> = BTreeMap::new();
        for t in &self.instances {
            let concept = specializations.get(&t.id).unwrap_or(&t.concept);
            if !schema.is_a(concept, &t.concept) {
                return Err(SchemaError::InvalidElement {
                    element: t.id.clone(),
                    message: format!("`{concept}` is not a specialization of `{}`", t.concept),
                });
            }
            let resolved = schema.resolve_concept(concept)?;
            let mut variables = BTreeMap::new();
            for v in &resolved.variables {
                let instance_name = format!("{v}{}", t.suffix);
                if let Some(other) = names.insert(instance_name.clone(), t.id.clone()) {
                    return Err(SchemaError::InvalidElement {
                        element: self.name.clone(),
                        message: format!(
                            "variable instance `{instance_name}` occurs in `{other}` and `{}`",
                            t.id
                        ),
                    });
                }
                variables.insert(v.clone(), instance_name);
            }
            out.push(InstanceLayout {
                id: t.id.clone(),
                concept: concept.clone(),
                lineage: schema.lineage(concept)?,
                suffix: t.suffix.clone(),
                roles: t.roles.clone(),
                variables,
                attributes: resolved.attributes,
            });
        }
        Ok(out)
    }

    /// Checks the class against a schema: known concepts, unique ids and
    /// suffixes, roles pointing at state instances.
    pub fn check(&self, schema: &OntologySchema) -> Result<(), SchemaError> {
        let invalid = |message: String| SchemaError::InvalidElement {
            element: self.name.clone(),
            message,
        };
        schema.concept(&self.concept)?;
        let mut ids = BTreeSet::new();
        for t in &self.instances {
            schema.concept(&t.concept)?;
            if !ids.insert(t.id.as_str()) {
                return Err(invalid(format!("instance id `{}` is used twice", t.id)));
            }
        }
        for t in &self.instances {
            for (role, state) in &t.roles {
                let target = self
                    .instances
                    .iter()
                    .find(|i| i.id == *state)
                    .ok_or_else(|| {
                        invalid(format!(
                            "role of `{}` names unknown instance `{state}`",
                            t.id
                        ))
                    })?;
                let relation = schema
                    .resolve_concept(&t.concept)?
                    .has
                    .get(role.relation())
                    .cloned()
                    .ok_or_else(|| {
                        invalid(format!(
                            "`{}` has no `{}` relation",
                            t.concept,
                            role.relation()
                        ))
                    })?;
                if !schema.is_a(&target.concept, &relation.concept) {
                    return Err(invalid(format!(
                        "`{state}` is not a `{}`",
                        relation.concept
                    )));
                }
            }
        }
        self.instantiate(schema, &BTreeMap::new())?;
        for t in &self.instances {
            for leaf in schema.descendants(&t.concept) {
                let spec = BTreeMap::from([(t.id.clone(), leaf)]);
                self.instantiate(schema, &spec)?;
            }
        }
        Ok(())
    }
}

/// Registered process classes, keyed by name. New classes can be added with
/// [`ProcessRegistry::register`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProcessRegistry {
    classes: BTreeMap<String, ProcessClass>,
}

impl ProcessRegistry {
    pub fn empty() -> Self {
        Self::default()
    }

    /// The equilibrium state and the single change of state.
    pub fn builtin() -> Self {
        let common = |state: &str| {
            vec![
                InstanceTemplate::new("constants", "UniversalConstants", ""),
                InstanceTemplate::new("material", "Material", ""),
                InstanceTemplate::new("reference", "ReferenceState", ""),
                InstanceTemplate::new(state, "State", "_1"),
                InstanceTemplate::new("system", "ClosedSystem", ""),
            ]
        };
        let mut single = common("state_1");
        single.push(InstanceTemplate::new("state_2", "State", "_2"));
        single.push(
            InstanceTemplate::new("change_12", "ChangeOfState", "_12")
                .with_role(StateRole::Initial, "state_1")
                .with_role(StateRole::Final, "state_2"),
        );
        let mut r = Self::empty();
        r.classes.insert(
            "equilibrium_state".into(),
            ProcessClass {
                name: "equilibrium_state".into(),
                concept: "EquilibriumSystem".into(),
                description: "A closed system in one equilibrium state.".into(),
                instances: common("state_1"),
            },
        );
        r.classes.insert(
            "single_change_of_state".into(),
            ProcessClass {
                name: "single_change_of_state".into(),
                concept: "SingleChangeOfState".into(),
                description: "A closed system changing from state 1 to state 2.".into(),
                instances: single,
            },
        );
        r
    }

    /// Adds a class after checking it against `schema`.
    pub fn register(
        &mut self,
        class: ProcessClass,
        schema: &OntologySchema,
    ) -> Result<(), SchemaError> {
        if self.classes.contains_key(&class.name) {
            return Err(SchemaError::DuplicateElement {
                name: class.name.clone(),
                first: "registered process class".into(),
                second: "new process class".into(),
            });
        }
        class.check(schema)?;
        self.classes.insert(class.name.clone(), class);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Option<&ProcessClass> {
        self.classes.get(name)
    }

    pub fn names(&self) -> Vec<&str> {
        self.classes.keys().map(String::as_str).collect()
    }

    pub fn iter(&self) -> impl Iterator<Item = &ProcessClass> {
        self.classes.values()
    }
}
