use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::equation::EquationInstance;
use crate::ontology::GraphDocument;

/// Orientation of an equation–variable edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    Undirected,
    VarToEq,
    EqToVar,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquationNode {
    pub name: String,
    /// Distinct variable instances, sorted.
    pub variables: Vec<String>,
}

/// A fired equation and the variable it determined.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Firing {
    pub equation: usize,
    pub variable: String,
}

/// Bipartite graph of equation and variable instances.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReasoningGraph {
    pub variables: BTreeSet<String>,
    pub equations: Vec<EquationNode>,
    pub known: BTreeSet<String>,
    pub targets: Vec<String>,
    /// Known variables plus every variable an equation fired into.
    pub determined: BTreeSet<String>,
    /// In firing order.
    pub firings: Vec<Firing>,
}

impl ReasoningGraph {
    /// Builds the graph. `variables` adds nodes beyond those the equations
    /// mention. Known variables start determined; nothing has fired.
    pub fn build<'a>(
        instances: &[EquationInstance],
        variables: impl IntoIterator<Item = &'a str>,
        known: impl IntoIterator<Item = &'a str>,
        targets: &[String],
    ) -> Self {
        let equations: Vec<EquationNode> = instances
            .iter()
            .map(|e| EquationNode {
                name: e.name.clone(),
                variables: e.variables().into_iter().map(String::from).collect(),
            })
            .collect();
        let mut all: BTreeSet<String> = variables.into_iter().map(String::from).collect();
        all.extend(equations.iter().flat_map(|e| e.variables.iter().cloned()));
        let known: BTreeSet<String> = known.into_iter().map(String::from).collect();
        all.extend(known.iter().cloned());
        all.extend(targets.iter().cloned());
        ReasoningGraph {
            variables: all,
            equations,
            determined: known.clone(),
            known,
            targets: targets.to_vec(),
            firings: Vec::new(),
        }
    }

    /// Fixpoint firing with equations scanned by name.
    pub fn reachability(&mut self) -> &BTreeSet<String> {
        let mut order: Vec<usize> = (0..self.equations.len()).collect();
        order.sort_by(|a, b| self.equations[*a].name.cmp(&self.equations[*b].name));
        self.reachability_in_order(&order)
    }

    /// Fixpoint firing with a caller-chosen scan order over equation
    /// indices. An equation fires when exactly one of its variables is
    /// undetermined; the pass repeats until nothing fires.
    pub fn reachability_in_order(&mut self, order: &[usize]) -> &BTreeSet<String> {
        let mut fired: BTreeSet<usize> = self.firings.iter().map(|f| f.equation).collect();
        loop {
            let mut changed = false;
            for &i in order {
                if fired.contains(&i) {
                    continue;
                }
                let mut unknown = self.equations[i]
                    .variables
                    .iter()
                    .filter(|v| !self.determined.contains(*v));
                let (Some(v), None) = (unknown.next(), unknown.next()) else {
                    continue;
                };
                let v = v.clone();
                self.determined.insert(v.clone());
                self.firings.push(Firing {
                    equation: i,
                    variable: v,
                });
                fired.insert(i);
                changed = true;
            }
            if !changed {
                return &self.determined;
            }
        }
    }

    /// Targets not determined, in target order.
    pub fn unreached(&self) -> Vec<String> {
        self.targets
            .iter()
            .filter(|t| !self.determined.contains(*t))
            .cloned()
            .collect()
    }

    pub fn solvable(&self) -> bool {
        self.unreached().is_empty()
    }

    /// Variable determined by equation `i`, if it fired.
    pub fn fired_into(&self, i: usize) -> Option<&str> {
        self.firings
            .iter()
            .find(|f| f.equation == i)
            .map(|f| f.variable.as_str())
    }

    pub fn orientation(&self, equation: usize, variable: &str) -> Orientation {
        if self.fired_into(equation) == Some(variable) {
            Orientation::EqToVar
        } else if self.determined.contains(variable) {
            Orientation::VarToEq
        } else {
            Orientation::Undirected
        }
    }

    /// Equation index that determined each non-known variable.
    pub fn producers(&self) -> BTreeMap<&str, usize> {
        self.firings
            .iter()
            .map(|f| (f.variable.as_str(), f.equation))
            .collect()
    }

    /// Node-link export. Directed edges point along the information flow;
    /// fired equations are marked.
    pub fn to_document(&self) -> GraphDocument {
        let mut doc = GraphDocument::default();
        for v in &self.variables {
            doc.node(v, "variable");
        }
        for (i, e) in self.equations.iter().enumerate() {
            doc.node(&e.name, "equation");
            doc.nodes.last_mut().expect("just pushed").fired = self.fired_into(i).is_some();
        }
        for (i, e) in self.equations.iter().enumerate() {
            for v in &e.variables {
                match self.orientation(i, v) {
                    Orientation::VarToEq => doc.edge(v, &e.name, "input"),
                    Orientation::EqToVar => doc.edge(&e.name, v, "determines"),
                    Orientation::Undirected => doc.edge(&e.name, v, crate::ontology::UNDIRECTED),
                }
            }
        }
        doc
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    use crate::equation::{Binding, EquationTemplate, Slot};

    fn eq(name: &str, vars: &[&str]) -> EquationInstance {
        let lhs = vars
            .iter()
            .map(|v| format!("{v}@S"))
            .collect::<Vec<_>>()
            .join(" + ");
        let t = Arc::new(EquationTemplate::parse(name, &lhs, "0", vec![]).unwrap());
        let binding: Binding = vars
            .iter()
            .map(|v| (Slot::new(*v, "S"), v.to_string()))
            .collect();
        EquationInstance::new(name, t, binding).unwrap()
    }

    #[test]
    fn single_equation_fires_into_last_unknown() {
        let eqs = [eq("e1", &["p", "V", "m", "R", "T"])];
        let mut g = ReasoningGraph::build(&eqs, [], ["V", "m", "R", "T"], &["p".to_string()]);
        assert_eq!(
            (0..1)
                .flat_map(|i| g.equations[i].variables.iter().map(move |v| (i, v.clone())))
                .filter(|(i, v)| g.orientation(*i, v) == Orientation::VarToEq)
                .count(),
            4
        );
        assert_eq!(g.orientation(0, "p"), Orientation::Undirected);
        g.reachability();
        assert!(g.solvable());
        assert_eq!(g.orientation(0, "p"), Orientation::EqToVar);
    }

    #[test]
    fn chain_needs_two_firings() {
        let eqs = [
            eq("a", &["p", "V", "m", "R", "T"]),
            eq("b", &["s", "p", "T"]),
        ];
        let mut g = ReasoningGraph::build(&eqs, [], ["V", "m", "R", "T"], &["s".to_string()]);
        g.reachability();
        assert_eq!(g.firings.len(), 2);
        assert_eq!(g.firings[1].variable, "s");
    }

    #[test]
    fn nothing_fires_when_all_known_or_underdetermined() {
        let eqs = [eq("a", &["x", "y"])];
        let mut g = ReasoningGraph::build(&eqs, [], ["x", "y"], &[]);
        g.reachability();
        assert!(g.firings.is_empty());
        let mut g = ReasoningGraph::build(&eqs, ["z"], [], &["x".to_string()]);
        g.reachability();
        assert_eq!(g.unreached(), ["x"]);
        assert_eq!(g.variables.len(), 3);
    }

    #[test]
    fn dot_export_marks_fired_equations() {
        let eqs = [eq("a", &["x", "y"])];
        let mut g = ReasoningGraph::build(&eqs, [], ["x"], &["y".to_string()]);
        g.reachability();
        let doc = g.to_document();
        assert!(doc.nodes.iter().any(|n| n.id == "a" && n.fired));
        assert!(doc
            .to_dot("g")
            .contains("\"a\" -> \"y\" [label=\"determines\"]"));
    }
}
