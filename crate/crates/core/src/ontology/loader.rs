//! The YAML schema format: top-level sections `concepts`, `variables`,
//! `attributes`, `equations` and `rules`, each a mapping from canonical name
//! to fields. Several files are merged by name.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::marker::PhantomData;
use std::path::Path;
use std::sync::Arc;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{
    AttributeDef, ConceptDef, Condition, Consequence, HasRelation, OntologySchema, Positivity,
    RuleDef, SchemaError, VariableDef, IS_A,
};
use crate::equation::{is_identifier, EquationTemplate};

/// One schema document and a name used in error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SchemaSource {
    pub name: String,
    pub text: String,
}

impl SchemaSource {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> Self {
        SchemaSource {
            name: name.into(),
            text: text.into(),
        }
    }
}

/// Reads every `*.yaml` / `*.yml` file of `dir`, sorted by file name,
/// skipping the file names in `exclude`.
pub fn read_sources(dir: &Path, exclude: &[&str]) -> Result<Vec<SchemaSource>, SchemaError> {
    let io = |e: std::io::Error| SchemaError::Io {
        path: dir.display().to_string(),
        message: e.to_string(),
    };
    let mut paths = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let ext = path.extension().and_then(|e| e.to_str());
        let file = path
            .file_name()
            .and_then(|f| f.to_str())
            .unwrap_or_default();
        if matches!(ext, Some("yaml" | "yml")) && !exclude.contains(&file) {
            paths.push(path);
        }
    }
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let text = std::fs::read_to_string(&p).map_err(|e| SchemaError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            })?;
            Ok(SchemaSource::new(p.display().to_string(), text))
        })
        .collect()
}

pub fn load_schema_dir(dir: &Path) -> Result<OntologySchema, SchemaError> {
    load_schema(&read_sources(dir, &[])?)
}

/// Parses, merges and checks a set of schema documents.
pub fn load_schema(sources: &[SchemaSource]) -> Result<OntologySchema, SchemaError> {
    let mut schema = OntologySchema::default();
    let mut seen: BTreeMap<String, String> = BTreeMap::new();
    let mut register = |name: &str, kind: &str, source: &str| -> Result<(), SchemaError> {
        let here = format!("{kind} in {source}");
        match seen.get(name) {
            Some(first) => Err(SchemaError::DuplicateElement {
                name: name.to_string(),
                first: first.clone(),
                second: here,
            }),
            None => {
                seen.insert(name.to_string(), here);
                Ok(())
            }
        }
    };

    for source in sources {
        let file = parse_file(source)?;
        for (name, e) in file.concepts.unwrap_or_default().0 {
            register(&name, "concept", &source.name)?;
            schema.concepts.insert(
                name.clone(),
                ConceptDef {
                    name,
                    synonyms: e.synonyms,
                    comment: e.comment,
                    parent: e.is_a,
                    has: e.has,
                    variables: e.variables,
                    attributes: e.attributes,
                },
            );
        }
        for (name, e) in file.variables.unwrap_or_default().0 {
            register(&name, "variable", &source.name)?;
            schema.variables.insert(
                name.clone(),
                VariableDef {
                    name,
                    symbol: e.symbol,
                    si_unit: e.si_unit,
                    owner_concept: e.owner_concept,
                    positivity: e.positivity,
                    comment: e.comment,
                },
            );
        }
        for (name, e) in file.attributes.unwrap_or_default().0 {
            register(&name, "attribute", &source.name)?;
            schema.attributes.insert(
                name.clone(),
                AttributeDef {
                    name,
                    owner_concept: e.owner_concept,
                    allowed_values: e.allowed_values.into_iter().map(|s| s.0).collect(),
                    comment: e.comment,
                },
            );
        }
        for (name, e) in file.equations.unwrap_or_default().0 {
            register(&name, "equation", &source.name)?;
            let invalid =
                |side: &str, err: crate::equation::EquationError| SchemaError::InvalidElement {
                    element: name.clone(),
                    message: format!("{side}: {err}"),
                };
            let lhs =
                crate::equation::parse_expression(&e.lhs).map_err(|err| invalid("lhs", err))?;
            let rhs =
                crate::equation::parse_expression(&e.rhs).map_err(|err| invalid("rhs", err))?;
            let mut template = EquationTemplate::new(name.clone(), lhs, rhs, e.guards);
            template.comment = e.comment;
            schema.equations.insert(name, Arc::new(template));
        }
        for (name, e) in file.rules.unwrap_or_default().0 {
            register(&name, "rule", &source.name)?;
            let consequence = match (e.consequence.enable_equation, e.consequence.set_attribute) {
                (Some(eq), None) => Consequence::EnableEquation(eq),
                (None, Some(set)) => Consequence::SetAttribute {
                    attribute: set.attribute,
                    value: set.value.0,
                },
                _ => {
                    return Err(SchemaError::InvalidElement {
                        element: name,
                        message: "consequence needs exactly one of enable_equation, set_attribute"
                            .into(),
                    })
                }
            };
            schema.rules.insert(
                name.clone(),
                RuleDef {
                    name,
                    condition: e
                        .condition
                        .into_iter()
                        .map(|c| Condition {
                            concept: c.concept,
                            attribute: c.attribute,
                            value: c.value.0,
                        })
                        .collect(),
                    consequence,
                },
            );
        }
    }
    schema.check()?;
    Ok(schema)
}

fn parse_file(source: &SchemaSource) -> Result<SchemaFile, SchemaError> {
    let has_content = source.text.lines().any(|l| {
        let t = l.trim();
        !t.is_empty() && !t.starts_with('#') && t != "---"
    });
    if !has_content {
        return Ok(SchemaFile::default());
    }
    serde_yaml::from_str(&source.text).map_err(|e| {
        let (line, column) = e
            .location()
            .map(|l| (l.line(), l.column()))
            .unwrap_or((0, 0));
        SchemaError::Parse {
            source_name: source.name.clone(),
            line,
            column,
            message: e.to_string(),
        }
    })
}

impl OntologySchema {
    /// Checks referential closure, acyclicity and the per-element invariants.
    pub fn check(&self) -> Result<(), SchemaError> {
        self.check_names()?;
        self.check_references()?;
        self.check_acyclic()?;
        self.check_semantics()
    }

    /// Serializes to a single schema document. Loading the output yields an
    /// identical schema.
    pub fn to_yaml(&self) -> String {
        let file = SchemaFile {
            concepts: nonempty(self.concepts.values().map(|c| {
                (
                    c.name.clone(),
                    ConceptEntry {
                        is_a: c.parent.clone(),
                        comment: c.comment.clone(),
                        synonyms: c.synonyms.clone(),
                        has: c.has.clone(),
                        variables: c.variables.clone(),
                        attributes: c.attributes.clone(),
                    },
                )
            })),
            variables: nonempty(self.variables.values().map(|v| {
                (
                    v.name.clone(),
                    VariableEntry {
                        symbol: v.symbol.clone(),
                        si_unit: v.si_unit.clone(),
                        owner_concept: v.owner_concept.clone(),
                        positivity: v.positivity,
                        comment: v.comment.clone(),
                    },
                )
            })),
            attributes: nonempty(self.attributes.values().map(|a| {
                (
                    a.name.clone(),
                    AttributeEntry {
                        owner_concept: a.owner_concept.clone(),
                        allowed_values: a.allowed_values.iter().cloned().map(Scalar).collect(),
                        comment: a.comment.clone(),
                    },
                )
            })),
            equations: nonempty(self.equations.values().map(|e| {
                (
                    e.name.clone(),
                    EquationEntry {
                        lhs: e.lhs.to_string(),
                        rhs: e.rhs.to_string(),
                        guards: e.guards.clone(),
                        comment: e.comment.clone(),
                    },
                )
            })),
            rules: nonempty(self.rules.values().map(|r| {
                let consequence = match &r.consequence {
                    Consequence::EnableEquation(e) => ConsequenceEntry {
                        enable_equation: Some(e.clone()),
                        set_attribute: None,
                    },
                    Consequence::SetAttribute { attribute, value } => ConsequenceEntry {
                        enable_equation: None,
                        set_attribute: Some(SetAttributeEntry {
                            attribute: attribute.clone(),
                            value: Scalar(value.clone()),
                        }),
                    },
                };
                (
                    r.name.clone(),
                    RuleEntry {
                        condition: r
                            .condition
                            .iter()
                            .map(|c| ConditionEntry {
                                concept: c.concept.clone(),
                                attribute: c.attribute.clone(),
                                value: Scalar(c.value.clone()),
                            })
                            .collect(),
                        consequence,
                    },
                )
            })),
        };
        serde_yaml::to_string(&file).expect("schema serializes")
    }

    fn check_names(&self) -> Result<(), SchemaError> {
        let invalid = |element: &str, message: String| SchemaError::InvalidElement {
            element: element.to_string(),
            message,
        };
        let names = self
            .concepts
            .keys()
            .chain(self.variables.keys())
            .chain(self.attributes.keys())
            .chain(self.equations.keys())
            .chain(self.rules.keys());
        for name in names {
            if !is_identifier(name) {
                return Err(invalid(name, "name is not an identifier".into()));
            }
        }
        for name in self.variables.keys() {
            if let Some((_, tail)) = name.rsplit_once('_') {
                if !tail.is_empty() && tail.chars().all(|c| c.is_ascii_digit()) {
                    return Err(invalid(
                        name,
                        "variable names may not end in `_<digits>`; that suffix marks instances"
                            .into(),
                    ));
                }
            }
        }
        if self.attributes.contains_key(IS_A) {
            return Err(invalid(
                IS_A,
                "`is_a` is reserved for specialization".into(),
            ));
        }
        let mut synonyms: BTreeMap<&str, &str> = BTreeMap::new();
        for c in self.concepts.values() {
            for rel in c.has.keys() {
                if !is_identifier(rel) {
                    return Err(invalid(
                        &c.name,
                        format!("relation name `{rel}` is not an identifier"),
                    ));
                }
            }
            for s in &c.synonyms {
                if self.kind_of(s).is_some() {
                    return Err(invalid(
                        &c.name,
                        format!("synonym `{s}` is the name of an element"),
                    ));
                }
                if let Some(other) = synonyms.insert(s, &c.name) {
                    return Err(invalid(
                        &c.name,
                        format!("synonym `{s}` is also a synonym of `{other}`"),
                    ));
                }
            }
        }
        Ok(())
    }

    fn check_references(&self) -> Result<(), SchemaError> {
        let dangling =
            |element: &str, expected: &str, missing: &str| SchemaError::DanglingReference {
                element: element.to_string(),
                expected: expected.to_string(),
                missing: missing.to_string(),
            };
        let concept = |element: &str, name: &str| {
            if self.concepts.contains_key(name) {
                Ok(())
            } else {
                Err(dangling(element, "concept", name))
            }
        };
        for c in self.concepts.values() {
            if let Some(p) = &c.parent {
                concept(&c.name, p)?;
            }
            for rel in c.has.values() {
                concept(&c.name, &rel.concept)?;
            }
            for v in &c.variables {
                if !self.variables.contains_key(v) {
                    return Err(dangling(&c.name, "variable", v));
                }
            }
            for a in &c.attributes {
                if !self.attributes.contains_key(a) {
                    return Err(dangling(&c.name, "attribute", a));
                }
            }
        }
        for v in self.variables.values() {
            concept(&v.name, &v.owner_concept)?;
        }
        for a in self.attributes.values() {
            concept(&a.name, &a.owner_concept)?;
        }
        for e in self.equations.values() {
            for g in &e.guards {
                if !self.rules.contains_key(g) {
                    return Err(dangling(&e.name, "rule", g));
                }
            }
            for s in &e.slots {
                concept(&e.name, &s.qualifier)?;
                if !self.variables.contains_key(&s.variable) {
                    return Err(dangling(&e.name, "variable", &s.variable));
                }
            }
        }
        for r in self.rules.values() {
            for c in &r.condition {
                concept(&r.name, &c.concept)?;
                if c.attribute == IS_A {
                    concept(&r.name, &c.value)?;
                } else if !self.attributes.contains_key(&c.attribute) {
                    return Err(dangling(&r.name, "attribute", &c.attribute));
                }
            }
            match &r.consequence {
                Consequence::EnableEquation(e) if !self.equations.contains_key(e) => {
                    return Err(dangling(&r.name, "equation", e))
                }
                Consequence::SetAttribute { attribute, .. }
                    if !self.attributes.contains_key(attribute) =>
                {
                    return Err(dangling(&r.name, "attribute", attribute))
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn check_acyclic(&self) -> Result<(), SchemaError> {
        let mut cleared: BTreeSet<&str> = BTreeSet::new();
        for start in self.concepts.keys() {
            let mut path: Vec<&str> = Vec::new();
            let mut current = Some(start.as_str());
            while let Some(name) = current {
                if cleared.contains(name) {
                    break;
                }
                if let Some(pos) = path.iter().position(|n| *n == name) {
                    let mut cycle: Vec<String> =
                        path[pos..].iter().map(|s| s.to_string()).collect();
                    let min = (0..cycle.len()).min_by_key(|&i| &cycle[i]).unwrap_or(0);
                    cycle.rotate_left(min);
                    cycle.push(cycle[0].clone());
                    return Err(SchemaError::CyclicInheritance { cycle });
                }
                path.push(name);
                current = self.concepts[name].parent.as_deref();
            }
            cleared.extend(path);
        }
        Ok(())
    }

    fn check_semantics(&self) -> Result<(), SchemaError> {
        let invalid = |element: &str, message: String| SchemaError::InvalidElement {
            element: element.to_string(),
            message,
        };
        let related = |a: &str, b: &str| self.is_a(a, b) || self.is_a(b, a);

        for v in self.variables.values() {
            if !super::is_si_unit(&v.si_unit) {
                return Err(invalid(
                    &v.name,
                    format!("`{}` is not an SI unit expression", v.si_unit),
                ));
            }
            if !self.concepts[&v.owner_concept].variables.contains(&v.name) {
                return Err(invalid(
                    &v.name,
                    format!("owner `{}` does not list this variable", v.owner_concept),
                ));
            }
        }
        for a in self.attributes.values() {
            if a.allowed_values.is_empty() {
                return Err(invalid(&a.name, "allowed_values is empty".into()));
            }
            let distinct: BTreeSet<&String> = a.allowed_values.iter().collect();
            if distinct.len() != a.allowed_values.len() {
                return Err(invalid(&a.name, "allowed_values has duplicates".into()));
            }
            if !self.concepts[&a.owner_concept].attributes.contains(&a.name) {
                return Err(invalid(
                    &a.name,
                    format!("owner `{}` does not list this attribute", a.owner_concept),
                ));
            }
        }
        for c in self.concepts.values() {
            for v in &c.variables {
                if self.variables[v].owner_concept != c.name {
                    return Err(invalid(
                        &c.name,
                        format!("variable `{v}` is owned by another concept"),
                    ));
                }
            }
            for a in &c.attributes {
                if self.attributes[a].owner_concept != c.name {
                    return Err(invalid(
                        &c.name,
                        format!("attribute `{a}` is owned by another concept"),
                    ));
                }
            }
        }

        let mut set_by: BTreeMap<&str, (&str, &str)> = BTreeMap::new();
        for r in self.rules.values() {
            if r.condition.is_empty() {
                return Err(invalid(&r.name, "condition is empty".into()));
            }
            for c in &r.condition {
                if c.attribute == IS_A {
                    if !self.is_a(&c.value, &c.concept) {
                        return Err(invalid(
                            &r.name,
                            format!("`{}` is not a specialization of `{}`", c.value, c.concept),
                        ));
                    }
                    continue;
                }
                let a = &self.attributes[&c.attribute];
                if !related(&c.concept, &a.owner_concept) {
                    return Err(invalid(
                        &r.name,
                        format!("`{}` has no attribute `{}`", c.concept, c.attribute),
                    ));
                }
                if !a.allowed_values.contains(&c.value) {
                    return Err(invalid(
                        &r.name,
                        format!(
                            "value `{}` not allowed for `{}` (allowed: {})",
                            c.value,
                            c.attribute,
                            a.allowed_values.join(", ")
                        ),
                    ));
                }
            }
            match &r.consequence {
                Consequence::EnableEquation(e) => {
                    if !self.equations[e].guards.contains(&r.name) {
                        return Err(invalid(
                            &r.name,
                            format!("enables `{e}` but `{e}` is not guarded by it"),
                        ));
                    }
                }
                Consequence::SetAttribute { attribute, value } => {
                    if !self.attributes[attribute].allowed_values.contains(value) {
                        return Err(invalid(
                            &r.name,
                            format!("value `{value}` not allowed for `{attribute}`"),
                        ));
                    }
                    if let Some((other, v)) = set_by.insert(attribute, (&r.name, value)) {
                        if v != value {
                            return Err(invalid(
                                &r.name,
                                format!(
                                    "sets `{attribute}` = `{value}` but `{other}` sets it to `{v}`"
                                ),
                            ));
                        }
                    }
                }
            }
        }

        for e in self.equations.values() {
            for s in &e.slots {
                let owner = &self.variables[&s.variable].owner_concept;
                if !related(&s.qualifier, owner) {
                    return Err(invalid(
                        &e.name,
                        format!(
                            "slot `{s}`: `{}` is not a variable of `{}`",
                            s.variable, s.qualifier
                        ),
                    ));
                }
                if let Some(role) = s.role {
                    let resolvable = self.concepts.values().any(|c| {
                        c.has
                            .get(role.relation())
                            .is_some_and(|r| related(&r.concept, &s.qualifier))
                    });
                    if !resolvable {
                        return Err(invalid(
                            &e.name,
                            format!(
                                "slot `{s}`: no concept has a `{}` relation to `{}`",
                                role.relation(),
                                s.qualifier
                            ),
                        ));
                    }
                }
            }
        }
        Ok(())
    }
}

fn nonempty<T>(items: impl Iterator<Item = (String, T)>) -> Option<Entries<T>> {
    let v: Vec<_> = items.collect();
    (!v.is_empty()).then_some(Entries(v))
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchemaFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    concepts: Option<Entries<ConceptEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    variables: Option<Entries<VariableEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    attributes: Option<Entries<AttributeEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    equations: Option<Entries<EquationEntry>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    rules: Option<Entries<RuleEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConceptEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    is_a: Option<String>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    comment: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    synonyms: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    has: BTreeMap<String, HasRelation>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    variables: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    attributes: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    symbol: String,
    si_unit: String,
    owner_concept: String,
    positivity: Positivity,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    comment: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AttributeEntry {
    owner_concept: String,
    allowed_values: Vec<Scalar>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    comment: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EquationEntry {
    lhs: String,
    rhs: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    guards: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    comment: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RuleEntry {
    condition: Vec<ConditionEntry>,
    consequence: ConsequenceEntry,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConditionEntry {
    concept: String,
    attribute: String,
    value: Scalar,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConsequenceEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    enable_equation: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    set_attribute: Option<SetAttributeEntry>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetAttributeEntry {
    attribute: String,
    value: Scalar,
}

/// A YAML or JSON scalar kept as text; `true` and `false` are written as
/// booleans.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Scalar(pub String);

impl Scalar {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Scalar {
    fn from(s: &str) -> Self {
        Scalar(s.to_string())
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.0.as_str() {
            "true" => s.serialize_bool(true),
            "false" => s.serialize_bool(false),
            other => s.serialize_str(other),
        }
    }
}

impl<'de> Deserialize<'de> for Scalar {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Scalar;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a scalar value")
            }
            fn visit_bool<E>(self, v: bool) -> Result<Scalar, E> {
                Ok(Scalar(v.to_string()))
            }
            fn visit_i64<E>(self, v: i64) -> Result<Scalar, E> {
                Ok(Scalar(v.to_string()))
            }
            fn visit_u64<E>(self, v: u64) -> Result<Scalar, E> {
                Ok(Scalar(v.to_string()))
            }
            fn visit_f64<E>(self, v: f64) -> Result<Scalar, E> {
                Ok(Scalar(v.to_string()))
            }
            fn visit_str<E>(self, v: &str) -> Result<Scalar, E> {
                Ok(Scalar(v.to_string()))
            }
        }
        d.deserialize_any(V)
    }
}

/// A mapping kept in document order that keeps duplicate keys, so they can
/// be reported instead of silently overwritten.
#[derive(Debug)]
struct Entries<T>(Vec<(String, T)>);

impl<T> Default for Entries<T> {
    fn default() -> Self {
        Entries(Vec::new())
    }
}

impl<T: Serialize> Serialize for Entries<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(self.0.iter().map(|(k, v)| (k, v)))
    }
}

impl<'de, T: Deserialize<'de>> Deserialize<'de> for Entries<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V<T>(PhantomData<T>);
        impl<'de, T: Deserialize<'de>> Visitor<'de> for V<T> {
            type Value = Entries<T>;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a mapping from element names to definitions")
            }
            fn visit_unit<E>(self) -> Result<Entries<T>, E> {
                Ok(Entries(Vec::new()))
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Entries<T>, A::Error> {
                let mut out = Vec::new();
                while let Some((k, v)) = map.next_entry::<String, T>()? {
                    out.push((k, v));
                }
                Ok(Entries(out))
            }
        }
        d.deserialize_any(V(PhantomData))
    }
}
