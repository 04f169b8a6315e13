//! The ontology element model: concepts, variables, attributes, equation
//! templates and rules, with is_a inheritance and has_a composition.

mod graph;
mod loader;
mod process;
mod units;
mod validate;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::equation::EquationTemplate;

pub(crate) use graph::UNDIRECTED;
pub use graph::{export_graph, GraphDocument, GraphEdge, GraphNode};
pub use loader::{load_schema, load_schema_dir, read_sources, Scalar, SchemaSource};
pub use process::{InstanceLayout, InstanceTemplate, ProcessClass, ProcessRegistry};
pub use units::is_si_unit;
pub use validate::{validate_instance_document, ValidationReport, Violation};

/// Pseudo-attribute naming the specialization of a concept instance.
pub const IS_A: &str = "is_a";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ElementKind {
    Concept,
    Variable,
    Attribute,
    Equation,
    Rule,
}

impl ElementKind {
    pub const ALL: [ElementKind; 5] = [
        ElementKind::Concept,
        ElementKind::Variable,
        ElementKind::Attribute,
        ElementKind::Equation,
        ElementKind::Rule,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::Concept => "concept",
            ElementKind::Variable => "variable",
            ElementKind::Attribute => "attribute",
            ElementKind::Equation => "equation",
            ElementKind::Rule => "rule",
        }
    }
}

impl fmt::Display for ElementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Multiplicity {
    One,
    Many,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HasRelation {
    pub concept: String,
    pub multiplicity: Multiplicity,
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ConceptDef {
    pub name: String,
    pub synonyms: Vec<String>,
    pub comment: String,
    pub parent: Option<String>,
    /// has_a relations keyed by relation name.
    pub has: BTreeMap<String, HasRelation>,
    pub variables: Vec<String>,
    pub attributes: Vec<String>,
}

impl ConceptDef {
    pub fn relation_label(relation: &str) -> String {
        format!("has_a_{relation}")
    }

    /// `has_a_<relation>` labels, sorted.
    pub fn relation_labels(&self) -> Vec<String> {
        self.has.keys().map(|r| Self::relation_label(r)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Positivity {
    MustBePositive,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VariableDef {
    pub name: String,
    pub symbol: String,
    pub si_unit: String,
    pub owner_concept: String,
    pub positivity: Positivity,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AttributeDef {
    pub name: String,
    pub owner_concept: String,
    pub allowed_values: Vec<String>,
    pub comment: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Condition {
    pub concept: String,
    pub attribute: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Consequence {
    EnableEquation(String),
    SetAttribute { attribute: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDef {
    pub name: String,
    /// Conjunction.
    pub condition: Vec<Condition>,
    pub consequence: Consequence,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SchemaError {
    #[error("{source_name}:{line}:{column}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("`{element}` references undefined {expected} `{missing}`")]
    DanglingReference {
        element: String,
        expected: String,
        missing: String,
    },
    #[error("cyclic inheritance: {}", cycle.join(" is_a "))]
    CyclicInheritance { cycle: Vec<String> },
    #[error("`{name}` is defined twice ({first}; {second})")]
    DuplicateElement {
        name: String,
        first: String,
        second: String,
    },
    #[error("invalid element `{element}`: {message}")]
    InvalidElement { element: String, message: String },
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

/// A loaded, referentially closed ontology. Immutable after loading.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OntologySchema {
    pub concepts: BTreeMap<String, ConceptDef>,
    pub variables: BTreeMap<String, VariableDef>,
    pub attributes: BTreeMap<String, AttributeDef>,
    pub equations: BTreeMap<String, Arc<EquationTemplate>>,
    pub rules: BTreeMap<String, RuleDef>,
}

impl OntologySchema {
    pub fn element_count(&self) -> usize {
        self.concepts.len()
            + self.variables.len()
            + self.attributes.len()
            + self.equations.len()
            + self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.element_count() == 0
    }

    pub fn kind_of(&self, name: &str) -> Option<ElementKind> {
        if self.concepts.contains_key(name) {
            Some(ElementKind::Concept)
        } else if self.variables.contains_key(name) {
            Some(ElementKind::Variable)
        } else if self.attributes.contains_key(name) {
            Some(ElementKind::Attribute)
        } else if self.equations.contains_key(name) {
            Some(ElementKind::Equation)
        } else if self.rules.contains_key(name) {
            Some(ElementKind::Rule)
        } else {
            None
        }
    }

    pub fn concept(&self, name: &str) -> Result<&ConceptDef, SchemaError> {
        self.concepts
            .get(name)
            .ok_or_else(|| SchemaError::UnknownElement(name.to_string()))
    }

    /// Canonical concept name for a name or synonym.
    pub fn canonical_concept(&self, name_or_synonym: &str) -> Option<&str> {
        if let Some((k, _)) = self.concepts.get_key_value(name_or_synonym) {
            return Some(k);
        }
        self.concepts
            .values()
            .find(|c| c.synonyms.iter().any(|s| s == name_or_synonym))
            .map(|c| c.name.as_str())
    }

    /// The concept followed by its ancestors, most specific first.
    pub fn lineage(&self, name: &str) -> Result<Vec<String>, SchemaError> {
        let mut out = vec![self.concept(name)?.name.clone()];
        let mut current = name;
        while let Some(parent) = self.concepts.get(current).and_then(|c| c.parent.as_deref()) {
            if out.iter().any(|n| n == parent) {
                break;
            }
            out.push(parent.to_string());
            current = parent;
        }
        Ok(out)
    }

    /// True if `name` is `ancestor` or one of its descendants.
    pub fn is_a(&self, name: &str, ancestor: &str) -> bool {
        self.lineage(name)
            .map(|l| l.iter().any(|c| c == ancestor))
            .unwrap_or(false)
    }

    /// Merges the concept's own relations, variables and attributes with those
    /// of all its ancestors. A child's relation overrides a parent's relation
    /// of the same name.
    pub fn resolve_concept(&self, name: &str) -> Result<ConceptDef, SchemaError> {
        let lineage = self.lineage(name)?;
        let mut resolved = self.concepts[name].clone();
        let mut variables: BTreeSet<String> = BTreeSet::new();
        let mut attributes: BTreeSet<String> = BTreeSet::new();
        resolved.has.clear();
        for concept in lineage.iter().rev() {
            let c = &self.concepts[concept];
            for (rel, target) in &c.has {
                resolved.has.insert(rel.clone(), target.clone());
            }
            variables.extend(c.variables.iter().cloned());
            attributes.extend(c.attributes.iter().cloned());
        }
        resolved.variables = variables.into_iter().collect();
        resolved.attributes = attributes.into_iter().collect();
        Ok(resolved)
    }

    /// Direct is_a children, sorted by name.
    pub fn specializations_of(&self, name: &str) -> Result<Vec<String>, SchemaError> {
        self.concept(name)?;
        Ok(self
            .concepts
            .values()
            .filter(|c| c.parent.as_deref() == Some(name))
            .map(|c| c.name.clone())
            .collect())
    }

    /// All concepts below `name`, sorted by name.
    pub fn descendants(&self, name: &str) -> Vec<String> {
        self.concepts
            .keys()
            .filter(|c| c.as_str() != name && self.is_a(c, name))
            .cloned()
            .collect()
    }

    /// Attributes whose value is set by a rule rather than by the user.
    pub fn derived_attributes(&self) -> BTreeSet<&str> {
        self.rules
            .values()
            .filter_map(|r| match &r.consequence {
                Consequence::SetAttribute { attribute, .. } => Some(attribute.as_str()),
                Consequence::EnableEquation(_) => None,
            })
            .collect()
    }

    /// (concept, attribute) pairs referenced by the conditions of rules that
    /// guard some equation.
    pub fn guard_attributes(&self) -> BTreeSet<(&str, &str)> {
        self.equations
            .values()
            .flat_map(|e| e.guards.iter())
            .filter_map(|g| self.rules.get(g))
            .flat_map(|r| r.condition.iter())
            .map(|c| (c.concept.as_str(), c.attribute.as_str()))
            .collect()
    }

    pub fn is_positive(&self, variable: &str) -> bool {
        self.variables
            .get(variable)
            .map(|v| v.positivity == Positivity::MustBePositive)
            .unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn concept(
        name: &str,
        parent: Option<&str>,
        has: &[(&str, &str)],
        vars: &[&str],
    ) -> ConceptDef {
        ConceptDef {
            name: name.into(),
            parent: parent.map(Into::into),
            has: has
                .iter()
                .map(|(r, c)| {
                    (
                        r.to_string(),
                        HasRelation {
                            concept: c.to_string(),
                            multiplicity: Multiplicity::One,
                        },
                    )
                })
                .collect(),
            variables: vars.iter().map(|v| v.to_string()).collect(),
            ..Default::default()
        }
    }

    fn small() -> OntologySchema {
        let mut s = OntologySchema::default();
        for c in [
            concept("System", None, &[("material", "Material")], &[]),
            concept(
                "ClosedSystem",
                Some("System"),
                &[("state", "State")],
                &["m"],
            ),
            concept("Material", None, &[("eos", "Eos")], &[]),
            concept("PureMaterial", Some("Material"), &[], &["M"]),
            concept("Mixture", Some("Material"), &[], &[]),
            concept(
                "IdealGas",
                Some("PureMaterial"),
                &[("eos", "IdealEos")],
                &["R"],
            ),
            concept("State", None, &[], &[]),
            concept("Eos", None, &[], &[]),
            concept("IdealEos", Some("Eos"), &[], &[]),
        ] {
            s.concepts.insert(c.name.clone(), c);
        }
        s
    }

    #[test]
    fn resolution_inherits_and_overrides() {
        let s = small();
        let cs = s.resolve_concept("ClosedSystem").unwrap();
        assert_eq!(cs.relation_labels(), vec!["has_a_material", "has_a_state"]);
        let gas = s.resolve_concept("IdealGas").unwrap();
        assert_eq!(gas.has["eos"].concept, "IdealEos");
        assert_eq!(gas.variables, vec!["M", "R"]);
        assert_eq!(s.resolve_concept("State").unwrap(), s.concepts["State"]);
        assert!(matches!(
            s.resolve_concept("Nope"),
            Err(SchemaError::UnknownElement(_))
        ));
    }

    #[test]
    fn specializations_are_sorted_direct_children() {
        let s = small();
        assert_eq!(
            s.specializations_of("Material").unwrap(),
            vec!["Mixture", "PureMaterial"]
        );
        assert!(s.specializations_of("IdealGas").unwrap().is_empty());
        assert_eq!(
            s.descendants("Material"),
            vec!["IdealGas", "Mixture", "PureMaterial"]
        );
        assert_eq!(
            s.lineage("IdealGas").unwrap(),
            vec!["IdealGas", "PureMaterial", "Material"]
        );
    }
}
