//! Problem definition: the dialogue that picks a process class, specializes
//! concept instances, sets attributes, values and targets, and emits the
//! problem document.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::equation::{is_identifier, AttributeState, StateRole, Valuation};
use crate::knowledge::{KnowledgeBase, KnowledgeError, IDEAL_GAS, P0, R_UNIV, T0};
use crate::ontology::{Consequence, Positivity, Scalar, IS_A};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProblemError {
    #[error("unknown process class `{name}`; available: {}", available.join(", "))]
    UnknownProcessClass {
        name: String,
        available: Vec<String>,
    },
    #[error("no concept instance `{0}`")]
    UnknownInstance(String),
    #[error("`{instance}` has no attribute `{attribute}`")]
    UnknownAttribute { instance: String, attribute: String },
    #[error("unknown material `{name}`; available: {}", available.join(", "))]
    UnknownMaterial {
        name: String,
        available: Vec<String>,
    },
    #[error("no variable instance `{0}`")]
    UnknownVariable(String),
    #[error("`{value}` is not allowed for `{attribute}` of `{instance}`; allowed: {}", allowed.join(", "))]
    InvalidValue {
        instance: String,
        attribute: String,
        value: String,
        allowed: Vec<String>,
    },
    #[error("`{name}` must be positive, got {value}")]
    NonPositiveValue { name: String, value: f64 },
    #[error("value of `{0}` is not a finite number")]
    NotANumber(String),
    #[error("`{0}` is known and cannot be a target")]
    TargetIsKnown(String),
    #[error("the problem is finalized")]
    AlreadyFinalized,
    #[error("incomplete definition; missing: {}", missing.join(", "))]
    IncompleteDefinition { missing: Vec<String> },
    #[error("`{0}` is a physical constant")]
    ReadOnly(String),
    #[error("`{attribute}` of `{instance}` is derived by rules")]
    DerivedAttribute { instance: String, attribute: String },
    #[error("name `{0}` is already in use")]
    DuplicateName(String),
    #[error("`{0}` is not a valid name")]
    InvalidName(String),
    #[error("problem document {line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

impl ProblemError {
    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            ProblemError::UnknownProcessClass { .. } => "UnknownProcessClass",
            ProblemError::UnknownInstance(_) => "UnknownInstance",
            ProblemError::UnknownAttribute { .. } => "UnknownAttribute",
            ProblemError::UnknownMaterial { .. } => "UnknownMaterial",
            ProblemError::UnknownVariable(_) => "UnknownVariable",
            ProblemError::InvalidValue { .. } => "InvalidValue",
            ProblemError::NonPositiveValue { .. } => "NonPositiveValue",
            ProblemError::NotANumber(_) => "NotANumber",
            ProblemError::TargetIsKnown(_) => "TargetIsKnown",
            ProblemError::AlreadyFinalized => "AlreadyFinalized",
            ProblemError::IncompleteDefinition { .. } => "IncompleteDefinition",
            ProblemError::ReadOnly(_) => "ReadOnly",
            ProblemError::DerivedAttribute { .. } => "DerivedAttribute",
            ProblemError::DuplicateName(_) => "DuplicateName",
            ProblemError::InvalidName(_) => "InvalidName",
            ProblemError::Parse { .. } => "ParseError",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Building,
    Finalized,
}

/// Where a known value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValueSource {
    Given,
    Constant,
    Material,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Known {
    pub value: f64,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConceptInstance {
    pub id: String,
    /// Current concept, after specialization.
    pub concept: String,
    /// Concept the process class instantiated.
    pub base_concept: String,
    pub lineage: Vec<String>,
    pub suffix: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub roles: BTreeMap<StateRole, String>,
    /// Attributes available on this instance, sorted.
    pub available_attributes: Vec<String>,
    /// Attribute values chosen by the user.
    pub attributes: BTreeMap<String, String>,
    /// Attribute values set by rules.
    pub derived: BTreeMap<String, String>,
    /// Variable name → variable-instance name.
    pub variables: BTreeMap<String, String>,
}

impl ConceptInstance {
    pub fn attribute(&self, name: &str) -> Option<&str> {
        self.attributes
            .get(name)
            .or_else(|| self.derived.get(name))
            .map(String::as_str)
    }

    /// User-set and derived values together.
    pub fn effective_attributes(&self) -> BTreeMap<String, String> {
        let mut all = self.derived.clone();
        all.extend(self.attributes.clone());
        all
    }
}

/// One open decision of the dialogue.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Choice {
    Specialization {
        instance: String,
        concept: String,
        options: Vec<String>,
    },
    Attribute {
        instance: String,
        attribute: String,
        allowed_values: Vec<String>,
    },
    Material {
        options: Vec<String>,
    },
}

/// A variable instance as shown to a user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableInfo {
    pub name: String,
    pub variable: String,
    pub instance: String,
    pub symbol: String,
    pub unit: String,
    pub must_be_positive: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<ValueSource>,
    pub target: bool,
}

/// The batch input format and wire payload of a problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemDocument {
    pub process_class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
    /// instance id → attribute → value. `is_a` selects a specialization.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub attributes: BTreeMap<String, BTreeMap<String, Scalar>>,
    /// Default variable-instance name → chosen name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub names: BTreeMap<String, String>,
    #[serde(default)]
    pub given: BTreeMap<String, f64>,
    /// Empty means every unknown variable instance.
    #[serde(default)]
    pub targets: Vec<String>,
}

impl ProblemDocument {
    pub fn from_yaml(text: &str) -> Result<Self, ProblemError> {
        serde_yaml::from_str(text).map_err(|e| {
            let (line, column) = e
                .location()
                .map(|l| (l.line(), l.column()))
                .unwrap_or((0, 0));
            ProblemError::Parse {
                line,
                column,
                message: e.to_string(),
            }
        })
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("problem document serializes")
    }
}

/// A problem under construction or finalized. Single writer.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    kb: Arc<KnowledgeBase>,
    process_class: String,
    instances: Vec<ConceptInstance>,
    knowns: BTreeMap<String, Known>,
    targets: Vec<String>,
    material: Option<String>,
    status: Status,
    /// Default variable-instance name → current name.
    renames: BTreeMap<String, String>,
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.process_class == other.process_class
            && self.instances == other.instances
            && self.knowns == other.knowns
            && self.targets == other.targets
            && self.material == other.material
            && self.status == other.status
            && self.renames == other.renames
    }
}

fn constant_value(variable: &str) -> Option<f64> {
    match variable {
        "R_univ" => Some(R_UNIV),
        "T0" => Some(T0),
        "p0" => Some(P0),
        _ => None,
    }
}

impl ProblemInstance {
    /// Instantiates the process class and injects the physical constants.
    pub fn create(kb: Arc<KnowledgeBase>, process_class: &str) -> Result<Self, ProblemError> {
        let class =
            kb.processes
                .get(process_class)
                .ok_or_else(|| ProblemError::UnknownProcessClass {
                    name: process_class.to_string(),
                    available: kb.processes.names().iter().map(|s| s.to_string()).collect(),
                })?;
        let mut instances: Vec<ConceptInstance> = class
            .instantiate(&kb.schema, &BTreeMap::new())
            .expect("registered classes instantiate")
            .into_iter()
            .map(|l| ConceptInstance {
                id: l.id,
                base_concept: l.concept.clone(),
                concept: l.concept,
                lineage: l.lineage,
                suffix: l.suffix,
                roles: l.roles,
                available_attributes: l.attributes,
                attributes: BTreeMap::new(),
                derived: BTreeMap::new(),
                variables: l.variables,
            })
            .collect();
        instances.sort_by(|a, b| a.id.cmp(&b.id));
        let mut p = ProblemInstance {
            process_class: class.name.clone(),
            kb,
            instances,
            knowns: BTreeMap::new(),
            targets: Vec::new(),
            material: None,
            status: Status::Building,
            renames: BTreeMap::new(),
        };
        for inst in &p.instances {
            for (var, name) in &inst.variables {
                if let Some(value) = constant_value(var) {
                    p.knowns.insert(
                        name.clone(),
                        Known {
                            value,
                            source: ValueSource::Constant,
                        },
                    );
                }
            }
        }
        p.derive_attributes();
        Ok(p)
    }

    pub fn knowledge(&self) -> &Arc<KnowledgeBase> {
        &self.kb
    }

    pub fn process_class(&self) -> &str {
        &self.process_class
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn material(&self) -> Option<&str> {
        self.material.as_deref()
    }

    /// Sorted by instance id.
    pub fn instances(&self) -> &[ConceptInstance] {
        &self.instances
    }

    pub fn instance(&self, id: &str) -> Option<&ConceptInstance> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn knowns(&self) -> &BTreeMap<String, Known> {
        &self.knowns
    }

    pub fn known_values(&self) -> Valuation {
        self.knowns
            .iter()
            .map(|(k, v)| (k.clone(), v.value))
            .collect()
    }

    /// Targets as set; empty in default-all mode.
    pub fn targets(&self) -> &[String] {
        &self.targets
    }

    pub fn default_all(&self) -> bool {
        self.targets.is_empty()
    }

    /// The explicit targets, or every unknown variable instance in
    /// default-all mode.
    pub fn resolved_targets(&self) -> Vec<String> {
        if self.targets.is_empty() {
            self.variable_names()
                .into_iter()
                .filter(|n| !self.knowns.contains_key(n))
                .collect()
        } else {
            self.targets.clone()
        }
    }

    /// Every variable-instance name, sorted.
    pub fn variable_names(&self) -> Vec<String> {
        let names: BTreeSet<String> = self
            .instances
            .iter()
            .flat_map(|i| i.variables.values().cloned())
            .collect();
        names.into_iter().collect()
    }

    /// (instance, variable) owning a variable-instance name.
    pub fn lookup_variable(&self, name: &str) -> Option<(&ConceptInstance, &str)> {
        self.instances.iter().find_map(|i| {
            i.variables
                .iter()
                .find(|(_, n)| n.as_str() == name)
                .map(|(v, _)| (i, v.as_str()))
        })
    }

    pub fn variables(&self) -> Vec<VariableInfo> {
        let schema = &self.kb.schema;
        let mut out: Vec<VariableInfo> = self
            .instances
            .iter()
            .flat_map(|i| {
                i.variables.iter().map(move |(var, name)| {
                    let def = &schema.variables[var];
                    let known = self.knowns.get(name);
                    VariableInfo {
                        name: name.clone(),
                        variable: var.clone(),
                        instance: i.id.clone(),
                        symbol: def.symbol.clone(),
                        unit: def.si_unit.clone(),
                        must_be_positive: def.positivity == Positivity::MustBePositive,
                        value: known.map(|k| k.value),
                        source: known.map(|k| k.source),
                        target: self.targets.contains(name),
                    }
                })
            })
            .collect();
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }

    fn ensure_building(&self) -> Result<(), ProblemError> {
        match self.status {
            Status::Building => Ok(()),
            Status::Finalized => Err(ProblemError::AlreadyFinalized),
        }
    }

    fn material_instance(&self) -> Option<usize> {
        self.instances
            .iter()
            .position(|i| i.lineage.iter().any(|c| c == "Material"))
    }

    /// Open decisions: per instance (by id) the specialization, then unset
    /// attributes by name; then the material.
    pub fn pending_choices(&self) -> Vec<Choice> {
        let schema = &self.kb.schema;
        let derived = schema.derived_attributes();
        let mut out = Vec::new();
        for inst in &self.instances {
            let options = schema.specializations_of(&inst.concept).unwrap_or_default();
            if !options.is_empty() {
                out.push(Choice::Specialization {
                    instance: inst.id.clone(),
                    concept: inst.concept.clone(),
                    options,
                });
            }
            for attr in &inst.available_attributes {
                if inst.attributes.contains_key(attr) || derived.contains(attr.as_str()) {
                    continue;
                }
                out.push(Choice::Attribute {
                    instance: inst.id.clone(),
                    attribute: attr.clone(),
                    allowed_values: schema.attributes[attr].allowed_values.clone(),
                });
            }
        }
        if self.material.is_none() {
            if let Some(i) = self.material_instance() {
                if schema.is_a(IDEAL_GAS, &self.instances[i].concept) {
                    out.push(Choice::Material {
                        options: self.kb.material_names(),
                    });
                }
            }
        }
        out
    }

    /// Sets an attribute; `is_a` specializes the instance. A trailing `?` in
    /// the attribute name is accepted.
    pub fn set_attribute(
        &mut self,
        instance: &str,
        attribute: &str,
        value: &str,
    ) -> Result<(), ProblemError> {
        self.ensure_building()?;
        let attribute = attribute.strip_suffix('?').unwrap_or(attribute);
        let idx = self
            .instances
            .iter()
            .position(|i| i.id == instance)
            .ok_or_else(|| ProblemError::UnknownInstance(instance.to_string()))?;
        if attribute == IS_A {
            return self.specialize(idx, value);
        }
        let schema = self.kb.schema.clone();
        let inst = &self.instances[idx];
        if !inst.available_attributes.iter().any(|a| a == attribute) {
            return Err(ProblemError::UnknownAttribute {
                instance: instance.to_string(),
                attribute: attribute.to_string(),
            });
        }
        if schema.derived_attributes().contains(attribute) {
            return Err(ProblemError::DerivedAttribute {
                instance: instance.to_string(),
                attribute: attribute.to_string(),
            });
        }
        let allowed = &schema.attributes[attribute].allowed_values;
        if !allowed.iter().any(|a| a == value) {
            return Err(ProblemError::InvalidValue {
                instance: instance.to_string(),
                attribute: attribute.to_string(),
                value: value.to_string(),
                allowed: allowed.clone(),
            });
        }
        self.instances[idx]
            .attributes
            .insert(attribute.to_string(), value.to_string());
        self.derive_attributes();
        Ok(())
    }

    fn specialize(&mut self, idx: usize, concept: &str) -> Result<(), ProblemError> {
        let schema = self.kb.schema.clone();
        let inst = &self.instances[idx];
        let invalid = || ProblemError::InvalidValue {
            instance: inst.id.clone(),
            attribute: IS_A.to_string(),
            value: concept.to_string(),
            allowed: schema.descendants(&inst.concept),
        };
        if concept == inst.concept {
            return Ok(());
        }
        if !schema.concepts.contains_key(concept) || !schema.is_a(concept, &inst.concept) {
            return Err(invalid());
        }
        if self.material.is_some()
            && !schema.is_a(IDEAL_GAS, concept)
            && !schema.is_a(concept, IDEAL_GAS)
        {
            return Err(invalid());
        }
        let resolved = schema.resolve_concept(concept).expect("concept exists");
        let suffix = inst.suffix.clone();
        let mut variables = inst.variables.clone();
        let taken: BTreeSet<String> = self.variable_names().into_iter().collect();
        for v in &resolved.variables {
            if variables.contains_key(v) {
                continue;
            }
            let default = format!("{v}{suffix}");
            let name = self.renames.get(&default).cloned().unwrap_or(default);
            if taken.contains(&name) {
                return Err(ProblemError::DuplicateName(name));
            }
            variables.insert(v.clone(), name);
        }
        let inst = &mut self.instances[idx];
        inst.concept = concept.to_string();
        inst.lineage = schema.lineage(concept).expect("concept exists");
        inst.available_attributes = resolved.attributes;
        inst.variables = variables;
        self.derive_attributes();
        Ok(())
    }

    /// Chooses the material, specializes the material instance to an ideal
    /// gas and enters its table values as knowns.
    pub fn set_material(&mut self, name: &str) -> Result<(), ProblemError> {
        self.ensure_building()?;
        let record = self.kb.material_lookup(name).map_err(|e| match e {
            KnowledgeError::UnknownMaterial { name, available } => {
                ProblemError::UnknownMaterial { name, available }
            }
            other => ProblemError::UnknownMaterial {
                name: other.to_string(),
                available: Vec::new(),
            },
        })?;
        let record = record.clone();
        let idx = self
            .material_instance()
            .ok_or_else(|| ProblemError::UnknownInstance("material".into()))?;
        self.specialize(idx, IDEAL_GAS)?;
        self.knowns.retain(|_, k| k.source != ValueSource::Material);
        let values = [
            ("M", record.molar_mass),
            ("R", record.specific_gas_constant),
            ("cv", record.cv),
            ("cp", record.cp),
            ("kappa", record.kappa()),
        ];
        let vars = self.instances[idx].variables.clone();
        for (var, value) in values {
            if let Some(name) = vars.get(var) {
                if !self.knowns.contains_key(name) {
                    self.knowns.insert(
                        name.clone(),
                        Known {
                            value,
                            source: ValueSource::Material,
                        },
                    );
                    self.targets.retain(|t| t != name);
                }
            }
        }
        self.material = Some(record.name);
        Ok(())
    }

    /// Enters a value in SI units. Overrides a material table value.
    pub fn set_value(&mut self, name: &str, value: f64) -> Result<(), ProblemError> {
        self.ensure_building()?;
        let (_, var) = self
            .lookup_variable(name)
            .ok_or_else(|| ProblemError::UnknownVariable(name.to_string()))?;
        if !value.is_finite() {
            return Err(ProblemError::NotANumber(name.to_string()));
        }
        if self.kb.schema.is_positive(var) && value <= 0.0 {
            return Err(ProblemError::NonPositiveValue {
                name: name.to_string(),
                value,
            });
        }
        if self
            .knowns
            .get(name)
            .is_some_and(|k| k.source == ValueSource::Constant)
        {
            return Err(ProblemError::ReadOnly(name.to_string()));
        }
        self.knowns.insert(
            name.to_string(),
            Known {
                value,
                source: ValueSource::Given,
            },
        );
        self.targets.retain(|t| t != name);
        Ok(())
    }

    /// Removes a given value; a material table value takes its place again.
    pub fn clear_value(&mut self, name: &str) -> Result<(), ProblemError> {
        self.ensure_building()?;
        if self.lookup_variable(name).is_none() {
            return Err(ProblemError::UnknownVariable(name.to_string()));
        }
        match self.knowns.get(name).map(|k| k.source) {
            Some(ValueSource::Constant) => Err(ProblemError::ReadOnly(name.to_string())),
            Some(ValueSource::Given) => {
                self.knowns.remove(name);
                if let Some(m) = self.material.clone() {
                    self.set_material(&m)?;
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Sets the targets. An empty list selects every unknown variable.
    pub fn set_targets<S: AsRef<str>>(&mut self, names: &[S]) -> Result<(), ProblemError> {
        self.ensure_building()?;
        let mut out: Vec<String> = Vec::new();
        for n in names {
            let n = n.as_ref();
            if self.lookup_variable(n).is_none() {
                return Err(ProblemError::UnknownVariable(n.to_string()));
            }
            if self.knowns.contains_key(n) {
                return Err(ProblemError::TargetIsKnown(n.to_string()));
            }
            if !out.iter().any(|t| t == n) {
                out.push(n.to_string());
            }
        }
        self.targets = out;
        Ok(())
    }

    /// Renames a variable instance; knowns and targets follow.
    pub fn rename(&mut self, old: &str, new: &str) -> Result<(), ProblemError> {
        self.ensure_building()?;
        if old == new {
            return Ok(());
        }
        if !is_identifier(new) {
            return Err(ProblemError::InvalidName(new.to_string()));
        }
        if self.lookup_variable(new).is_some() {
            return Err(ProblemError::DuplicateName(new.to_string()));
        }
        let (id, var) = self
            .lookup_variable(old)
            .map(|(i, v)| (i.id.clone(), v.to_string()))
            .ok_or_else(|| ProblemError::UnknownVariable(old.to_string()))?;
        let inst = self
            .instances
            .iter_mut()
            .find(|i| i.id == id)
            .expect("instance exists");
        let default = format!("{var}{}", inst.suffix);
        inst.variables.insert(var, new.to_string());
        if let Some(k) = self.knowns.remove(old) {
            self.knowns.insert(new.to_string(), k);
        }
        for t in &mut self.targets {
            if t == old {
                *t = new.to_string();
            }
        }
        if default == new {
            self.renames.remove(&default);
        } else {
            self.renames.insert(default, new.to_string());
        }
        Ok(())
    }

    /// Recomputes rule-derived attributes from the user's choices.
    fn derive_attributes(&mut self) {
        let schema = self.kb.schema.clone();
        for inst in &mut self.instances {
            inst.derived.clear();
        }
        loop {
            let mut changed = false;
            for rule in schema.rules.values() {
                let Consequence::SetAttribute { attribute, value } = &rule.consequence else {
                    continue;
                };
                for idx in 0..self.instances.len() {
                    let inst = &self.instances[idx];
                    if !inst.available_attributes.contains(attribute)
                        || inst.attributes.contains_key(attribute)
                        || inst.derived.contains_key(attribute)
                    {
                        continue;
                    }
                    let mut state = AttributeState::new()
                        .with_instance(inst.lineage.clone(), inst.effective_attributes());
                    for other in &self.instances {
                        if other.id != inst.id {
                            state = state
                                .with_instance(other.lineage.clone(), other.effective_attributes());
                        }
                    }
                    let holds = rule
                        .condition
                        .iter()
                        .all(|c| state.holds(c).unwrap_or(false));
                    if holds {
                        self.instances[idx]
                            .derived
                            .insert(attribute.clone(), value.clone());
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
    }

    /// Attributes that equation guards depend on and that must be chosen
    /// before solving, as `instance.attribute`.
    pub fn missing_mandatory(&self) -> Vec<String> {
        let schema = &self.kb.schema;
        let mut missing = Vec::new();
        for (concept, attribute) in schema.guard_attributes() {
            if attribute == IS_A {
                continue;
            }
            for inst in &self.instances {
                if inst.lineage.iter().any(|c| c == concept)
                    && inst.available_attributes.iter().any(|a| a == attribute)
                    && inst.attribute(attribute).is_none()
                {
                    missing.push(format!("{}.{attribute}", inst.id));
                }
            }
        }
        missing.sort();
        missing.dedup();
        if self.material.is_none() {
            missing.push("material".into());
        }
        missing
    }

    /// Checks completeness and freezes the problem.
    pub fn finalize(&mut self) -> Result<ProblemDocument, ProblemError> {
        self.ensure_building()?;
        let missing = self.missing_mandatory();
        if !missing.is_empty() {
            return Err(ProblemError::IncompleteDefinition { missing });
        }
        self.status = Status::Finalized;
        Ok(self.to_document())
    }

    pub fn to_document(&self) -> ProblemDocument {
        let mut attributes: BTreeMap<String, BTreeMap<String, Scalar>> = BTreeMap::new();
        for inst in &self.instances {
            let mut attrs: BTreeMap<String, Scalar> = inst
                .attributes
                .iter()
                .map(|(k, v)| (k.clone(), Scalar(v.clone())))
                .collect();
            let auto = self.material.is_some() && inst.concept == IDEAL_GAS;
            if inst.concept != inst.base_concept && !auto {
                attrs.insert(IS_A.to_string(), Scalar(inst.concept.clone()));
            }
            if !attrs.is_empty() {
                attributes.insert(inst.id.clone(), attrs);
            }
        }
        ProblemDocument {
            process_class: self.process_class.clone(),
            material: self.material.clone(),
            attributes,
            names: self.renames.clone(),
            given: self
                .knowns
                .iter()
                .filter(|(_, k)| k.source == ValueSource::Given)
                .map(|(n, k)| (n.clone(), k.value))
                .collect(),
            targets: self.targets.clone(),
        }
    }

    /// Replays a document: specializations, material, attributes, names,
    /// values, targets, then finalizes.
    pub fn from_document(
        kb: Arc<KnowledgeBase>,
        doc: &ProblemDocument,
    ) -> Result<Self, ProblemError> {
        let mut p = Self::build_from_document(kb, doc)?;
        p.finalize()?;
        Ok(p)
    }

    /// Like [`ProblemInstance::from_document`] but leaves the problem open.
    pub fn build_from_document(
        kb: Arc<KnowledgeBase>,
        doc: &ProblemDocument,
    ) -> Result<Self, ProblemError> {
        let mut p = Self::create(kb, &doc.process_class)?;
        for (inst, attrs) in &doc.attributes {
            if let Some(c) = attrs.get(IS_A) {
                p.set_attribute(inst, IS_A, c.as_str())?;
            }
        }
        if let Some(m) = &doc.material {
            p.set_material(m)?;
        }
        for (inst, attrs) in &doc.attributes {
            for (name, value) in attrs {
                if name.trim_end_matches('?') != IS_A {
                    p.set_attribute(inst, name, value.as_str())?;
                }
            }
        }
        for (old, new) in &doc.names {
            p.rename(old, new)?;
        }
        for (name, value) in &doc.given {
            p.set_value(name, *value)?;
        }
        p.set_targets(&doc.targets)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kb() -> Arc<KnowledgeBase> {
        Arc::new(KnowledgeBase::builtin())
    }

    #[test]
    fn single_change_instances_and_names() {
        let p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
        let concepts: Vec<&str> = p.instances().iter().map(|i| i.concept.as_str()).collect();
        for c in ["ClosedSystem", "Material", "State", "ChangeOfState"] {
            assert!(concepts.contains(&c), "{c}");
        }
        assert_eq!(concepts.iter().filter(|c| **c == "State").count(), 2);
        let names = p.variable_names();
        for n in ["T_1", "T_2", "Q_12", "W_12", "m", "R_univ"] {
            assert!(names.contains(&n.to_string()), "{n}");
        }
        assert_eq!(p.knowns()["R_univ"].value, 8.31446261815324);
    }

    #[test]
    fn equilibrium_has_no_change() {
        let p = ProblemInstance::create(kb(), "equilibrium_state").unwrap();
        assert!(p.instances().iter().all(|i| i.concept != "ChangeOfState"));
        assert!(matches!(
            ProblemInstance::create(kb(), "cycle"),
            Err(ProblemError::UnknownProcessClass { .. })
        ));
    }

    #[test]
    fn isentropic_is_derived() {
        let mut p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
        p.set_attribute("change_12", "adiabatic?", "true").unwrap();
        assert_eq!(
            p.instance("change_12").unwrap().attribute("isentropic"),
            None
        );
        p.set_attribute("change_12", "reversible", "true").unwrap();
        assert_eq!(
            p.instance("change_12").unwrap().attribute("isentropic"),
            Some("true")
        );
        assert!(matches!(
            p.set_attribute("change_12", "isentropic", "true"),
            Err(ProblemError::DerivedAttribute { .. })
        ));
        p.set_attribute("change_12", "reversible", "false").unwrap();
        assert_eq!(
            p.instance("change_12").unwrap().attribute("isentropic"),
            None
        );
    }

    #[test]
    fn material_specializes_and_injects() {
        let mut p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
        assert!(p.pending_choices().contains(&Choice::Specialization {
            instance: "material".into(),
            concept: "Material".into(),
            options: vec!["Mixture".into(), "PureMaterial".into()],
        }));
        p.set_material("Luft").unwrap();
        assert_eq!(p.material(), Some("air"));
        assert_eq!(p.instance("material").unwrap().concept, "IdealGas");
        assert_eq!(p.knowns()["R"].source, ValueSource::Material);
        p.set_value("R", 287.0).unwrap();
        assert_eq!(p.knowns()["R"].source, ValueSource::Given);
        p.clear_value("R").unwrap();
        assert_eq!(p.knowns()["R"].source, ValueSource::Material);
    }

    #[test]
    fn value_errors() {
        let mut p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
        p.set_value("T_1", 300.0).unwrap();
        assert!(matches!(
            p.set_value("T_1", -5.0),
            Err(ProblemError::NonPositiveValue { .. })
        ));
        assert!(matches!(
            p.set_value("x_99", 1.0),
            Err(ProblemError::UnknownVariable(_))
        ));
        assert!(matches!(
            p.set_value("Q_12", f64::NAN),
            Err(ProblemError::NotANumber(_))
        ));
        assert!(matches!(
            p.set_value("R_univ", 8.0),
            Err(ProblemError::ReadOnly(_))
        ));
        assert!(matches!(
            p.set_targets(&["T_1"]),
            Err(ProblemError::TargetIsKnown(_))
        ));
        p.set_targets(&["W_12"]).unwrap();
        assert_eq!(p.targets(), ["W_12"]);
        p.set_value("W_12", 1.0).unwrap();
        assert!(p.targets().is_empty());
    }

    #[test]
    fn rename_moves_references() {
        let mut p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
        p.set_value("T_1", 300.0).unwrap();
        p.set_targets(&["T_2"]).unwrap();
        p.rename("T_1", "T_start").unwrap();
        p.rename("T_2", "T_end").unwrap();
        assert_eq!(p.knowns()["T_start"].value, 300.0);
        assert_eq!(p.targets(), ["T_end"]);
        assert!(matches!(
            p.rename("p_1", "T_end"),
            Err(ProblemError::DuplicateName(_))
        ));
        assert!(matches!(
            p.rename("p_1", "1p"),
            Err(ProblemError::InvalidName(_))
        ));
    }

    #[test]
    fn finalize_lists_missing_items() {
        let mut p = ProblemInstance::create(kb(), "single_change_of_state").unwrap();
        match p.finalize() {
            Err(ProblemError::IncompleteDefinition { missing }) => {
                assert!(missing.contains(&"material".to_string()));
                assert!(missing.contains(&"change_12.reversible".to_string()));
                assert!(!missing.iter().any(|m| m.contains("homogeneous")));
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
