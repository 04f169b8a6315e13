//! Node-link export of the ontology as JSON and Graphviz DOT.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{ConceptDef, OntologySchema, SchemaError, IS_A};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphNode {
    pub id: String,
    pub kind: String,
    /// Set on equation nodes of a reasoning graph that fired.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub fired: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphEdge {
    pub from: String,
    pub to: String,
    pub label: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDocument {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
}

/// Edge label drawn without an arrow head in DOT.
pub(crate) const UNDIRECTED: &str = "undirected";

impl GraphDocument {
    pub fn node(&mut self, id: &str, kind: &str) {
        self.nodes.push(GraphNode {
            id: id.to_string(),
            kind: kind.to_string(),
            fired: false,
        });
    }

    pub fn edge(&mut self, from: &str, to: &str, label: &str) {
        self.edges.push(GraphEdge {
            from: from.to_string(),
            to: to.to_string(),
            label: label.to_string(),
        });
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph serializes")
    }

    pub fn to_dot(&self, name: &str) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "digraph {} {{", quote(name));
        for n in &self.nodes {
            let (shape, color) = match n.kind.as_str() {
                "concept" => ("box", "lightblue"),
                "variable" => ("ellipse", "palegreen"),
                "attribute" => ("diamond", "khaki"),
                "equation" => ("box", "lightsalmon"),
                "rule" => ("hexagon", "plum"),
                _ => ("ellipse", "white"),
            };
            let pen = if n.fired { ", penwidth=2" } else { "" };
            let _ = writeln!(
                out,
                "  {} [shape={shape}, style=filled, fillcolor={color}{pen}];",
                quote(&n.id)
            );
        }
        for e in &self.edges {
            let dir = if e.label == UNDIRECTED {
                ", dir=none"
            } else {
                ""
            };
            let _ = writeln!(
                out,
                "  {} -> {} [label={}{dir}];",
                quote(&e.from),
                quote(&e.to),
                quote(&e.label)
            );
        }
        out.push_str("}\n");
        out
    }
}

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Exports the schema. With a filter, only the named concepts, their own
/// variables and attributes, and the edges among them are kept.
pub fn export_graph(
    schema: &OntologySchema,
    filter: Option<&BTreeSet<String>>,
) -> Result<GraphDocument, SchemaError> {
    let mut full = GraphDocument::default();
    for name in schema.concepts.keys() {
        full.node(name, "concept");
    }
    for name in schema.variables.keys() {
        full.node(name, "variable");
    }
    for name in schema.attributes.keys() {
        full.node(name, "attribute");
    }
    for name in schema.equations.keys() {
        full.node(name, "equation");
    }
    for name in schema.rules.keys() {
        full.node(name, "rule");
    }
    for c in schema.concepts.values() {
        if let Some(p) = &c.parent {
            full.edge(&c.name, p, IS_A);
        }
        for (rel, target) in &c.has {
            full.edge(&c.name, &target.concept, &ConceptDef::relation_label(rel));
        }
        for v in c.variables.iter().chain(&c.attributes) {
            full.edge(&c.name, v, &ConceptDef::relation_label(v));
        }
    }
    for e in schema.equations.values() {
        let vars: BTreeSet<&str> = e.slots.iter().map(|s| s.variable.as_str()).collect();
        for v in vars {
            full.edge(&e.name, v, &ConceptDef::relation_label(v));
        }
        for g in &e.guards {
            full.edge(&e.name, g, &ConceptDef::relation_label(g));
        }
    }
    for r in schema.rules.values() {
        let attrs: BTreeSet<&str> = r
            .condition
            .iter()
            .filter(|c| c.attribute != IS_A)
            .map(|c| c.attribute.as_str())
            .collect();
        for a in attrs {
            full.edge(&r.name, a, &ConceptDef::relation_label(a));
        }
    }

    let Some(filter) = filter else {
        return Ok(full);
    };
    let mut keep: BTreeSet<&str> = BTreeSet::new();
    for name in filter {
        let c = schema.concept(name)?;
        keep.insert(&c.name);
        keep.extend(c.variables.iter().map(String::as_str));
        keep.extend(c.attributes.iter().map(String::as_str));
    }
    Ok(GraphDocument {
        nodes: full
            .nodes
            .into_iter()
            .filter(|n| keep.contains(n.id.as_str()))
            .collect(),
        edges: full
            .edges
            .into_iter()
            .filter(|e| keep.contains(e.from.as_str()) && keep.contains(e.to.as_str()))
            .collect(),
    })
}
