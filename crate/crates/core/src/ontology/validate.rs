//! Conformance of problem documents to the schema.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_yaml::Value;

use super::{OntologySchema, ProcessRegistry, SchemaError, IS_A};
use crate::equation::is_identifier;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    /// Where in the document, e.g. `given.T_99`.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn conforms(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            path: path.into(),
            message: message.into(),
        });
    }
}

const KEYS: &[&str] = &[
    "process_class",
    "material",
    "attributes",
    "given",
    "targets",
    "names",
];

/// Checks a problem document. Only YAML syntax errors are errors; every
/// conformance failure is an entry of the report.
pub fn validate_instance_document(
    schema: &OntologySchema,
    classes: &ProcessRegistry,
    text: &str,
) -> Result<ValidationReport, SchemaError> {
    let doc: Value = serde_yaml::from_str(text).map_err(|e| {
        let (line, column) = e
            .location()
            .map(|l| (l.line(), l.column()))
            .unwrap_or((0, 0));
        SchemaError::Parse {
            source_name: "problem document".into(),
            line,
            column,
            message: e.to_string(),
        }
    })?;
    let mut report = ValidationReport::default();
    let Value::Mapping(map) = &doc else {
        report.push("", "document must be a mapping");
        return Ok(report);
    };
    let mut fields: BTreeMap<String, &Value> = BTreeMap::new();
    for (k, v) in map {
        match k.as_str() {
            Some(k) if KEYS.contains(&k) => {
                fields.insert(k.to_string(), v);
            }
            _ => report.push(
                scalar_text(k),
                format!("unknown key (expected one of {})", KEYS.join(", ")),
            ),
        }
    }

    let class = match fields.get("process_class").map(|v| v.as_str()) {
        None => {
            report.push("process_class", "missing");
            return Ok(report);
        }
        Some(None) => {
            report.push("process_class", "must be a string");
            return Ok(report);
        }
        Some(Some(name)) => match classes.get(name) {
            Some(c) => c,
            None => {
                report.push(
                    "process_class",
                    format!(
                        "unknown process class `{name}` (available: {})",
                        classes.names().join(", ")
                    ),
                );
                return Ok(report);
            }
        },
    };

    if let Some(m) = fields.get("material") {
        if !m.is_string() {
            report.push("material", "must be a string");
        }
    }

    // Specializations first: they decide which attributes and variables exist.
    let attributes = mapping(&mut report, "attributes", fields.get("attributes").copied());
    let mut specializations = BTreeMap::new();
    let templates: BTreeMap<&str, &super::InstanceTemplate> =
        class.instances.iter().map(|t| (t.id.as_str(), t)).collect();
    for (inst, attrs) in &attributes {
        let Some(t) = templates.get(inst.as_str()) else {
            report.push(
                format!("attributes.{inst}"),
                format!("no instance `{inst}` in {}", class.name),
            );
            continue;
        };
        let attrs = mapping(&mut report, &format!("attributes.{inst}"), Some(attrs));
        if let Some(v) = attrs.get(IS_A) {
            let path = format!("attributes.{inst}.{IS_A}");
            match v.as_str() {
                Some(c) if schema.is_a(c, &t.concept) => {
                    specializations.insert(inst.clone(), c.to_string());
                }
                _ => report.push(
                    path,
                    format!(
                        "`{}` is not a specialization of `{}` (options: {})",
                        scalar_text(v),
                        t.concept,
                        schema.descendants(&t.concept).join(", ")
                    ),
                ),
            }
        }
    }
    let layout = match class.instantiate(schema, &specializations) {
        Ok(l) => l,
        Err(e) => {
            report.push("process_class", e.to_string());
            return Ok(report);
        }
    };

    let derived = schema.derived_attributes();
    for (inst, attrs) in &attributes {
        let Some(instance) = layout.iter().find(|l| l.id == *inst) else {
            continue;
        };
        let attrs = mapping(&mut ValidationReport::default(), "", Some(attrs));
        for (name, value) in &attrs {
            let attr = name.strip_suffix('?').unwrap_or(name);
            if attr == IS_A {
                continue;
            }
            let path = format!("attributes.{inst}.{name}");
            if !instance.attributes.iter().any(|a| a == attr) {
                report.push(
                    path,
                    format!("`{}` has no attribute `{attr}`", instance.concept),
                );
                continue;
            }
            if derived.contains(attr) {
                report.push(
                    path,
                    format!("`{attr}` is derived by rules and cannot be set"),
                );
                continue;
            }
            let allowed = &schema.attributes[attr].allowed_values;
            let text = scalar_text(value);
            if !allowed.contains(&text) {
                report.push(
                    path,
                    format!(
                        "`{text}` is not allowed for `{attr}` (allowed: {{{}}})",
                        allowed.join(",")
                    ),
                );
            }
        }
    }

    // Variable instances that exist under the given specializations, or under
    // some specialization of an instance that has not been specialized yet.
    let mut variables: BTreeMap<String, String> = BTreeMap::new();
    for inst in &layout {
        let mut concepts = vec![inst.concept.clone()];
        if !specializations.contains_key(&inst.id) {
            concepts.extend(schema.descendants(&inst.concept));
        }
        for c in concepts {
            for v in schema.resolve_concept(&c)?.variables {
                variables.insert(format!("{v}{}", inst.suffix), v);
            }
        }
    }

    let names = mapping(&mut report, "names", fields.get("names").copied());
    let mut renamed = variables.clone();
    for (old, new) in &names {
        let path = format!("names.{old}");
        let Some(var) = variables.get(old) else {
            report.push(path, format!("no variable instance `{old}`"));
            continue;
        };
        let Some(new) = new.as_str() else {
            report.push(path, "new name must be a string");
            continue;
        };
        if !is_identifier(new) {
            report.push(path, format!("`{new}` is not an identifier"));
            continue;
        }
        renamed.remove(old);
        if renamed.insert(new.to_string(), var.clone()).is_some() {
            report.push(path, format!("`{new}` is already in use"));
        }
    }

    let given = mapping(&mut report, "given", fields.get("given").copied());
    for (name, value) in &given {
        let path = format!("given.{name}");
        let Some(var) = renamed.get(name) else {
            report.push(path, format!("`{name}` is not an instantiated variable"));
            continue;
        };
        let number = match value {
            Value::Number(n) => n.as_f64(),
            _ => None,
        };
        match number {
            None => report.push(path, format!("`{}` is not a number", scalar_text(value))),
            Some(x) if !x.is_finite() => report.push(path, "value is not finite"),
            Some(x) if x <= 0.0 && schema.is_positive(var) => {
                report.push(path, format!("`{name}` must be positive, got {x}"))
            }
            Some(_) => {}
        }
    }

    match fields.get("targets") {
        None | Some(Value::Null) => {}
        Some(Value::Sequence(items)) => {
            let mut seen = BTreeSet::new();
            for (i, item) in items.iter().enumerate() {
                let path = format!("targets[{i}]");
                let Some(name) = item.as_str() else {
                    report.push(path, "target must be a string");
                    continue;
                };
                if !renamed.contains_key(name) {
                    report.push(path, format!("`{name}` is not an instantiated variable"));
                } else if given.contains_key(name) {
                    report.push(path, format!("`{name}` is both given and a target"));
                } else if !seen.insert(name) {
                    report.push(path, format!("`{name}` is listed twice"));
                }
            }
        }
        Some(_) => report.push("targets", "must be a list"),
    }
    Ok(report)
}

fn mapping(
    report: &mut ValidationReport,
    path: &str,
    value: Option<&Value>,
) -> BTreeMap<String, Value> {
    match value {
        None | Some(Value::Null) => BTreeMap::new(),
        Some(Value::Mapping(m)) => m.iter().map(|(k, v)| (scalar_text(k), v.clone())).collect(),
        Some(_) => {
            report.push(path, "must be a mapping");
            BTreeMap::new()
        }
    }
}

fn scalar_text(v: &Value) -> String {
    match v {
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        Value::Null => "null".into(),
        other => serde_yaml::to_string(other)
            .unwrap_or_default()
            .trim()
            .to_string(),
    }
}
