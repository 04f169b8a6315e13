//! Equation setup, reachability over the bipartite reasoning graph, path
//! extraction and step-by-step execution with a residual audit.

mod graph;
mod setup;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use graph::{EquationNode, Firing, Orientation, ReasoningGraph};
pub use setup::setup_equations;

use crate::equation::{EquationError, EquationInstance, SolveMethod, Valuation};
use crate::explain::{render_report, SolutionReport};
use crate::problem::{ProblemError, ProblemInstance, Status};

/// Pipeline stage an error comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Definition,
    Setup,
    Reasoning,
    Execution,
    Audit,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ReasonerError {
    #[error(transparent)]
    Definition(#[from] ProblemError),
    #[error("equation setup: {0}")]
    Setup(EquationError),
    #[error("not solvable; unreached targets: {}", unreached.join(", "))]
    NotSolvable { unreached: Vec<String> },
    #[error("step `{equation}` for `{unknown}`: {source}")]
    Execution {
        equation: String,
        unknown: String,
        source: EquationError,
    },
    #[error("inconsistent input: `{equation}` is violated ({detail})")]
    InconsistentInput {
        equation: String,
        detail: String,
        /// The report of the run, with the violation among its warnings.
        report: Option<Box<SolutionReport>>,
    },
}

impl ReasonerError {
    pub fn stage(&self) -> Stage {
        match self {
            ReasonerError::Definition(_) => Stage::Definition,
            ReasonerError::Setup(_) => Stage::Setup,
            ReasonerError::NotSolvable { .. } => Stage::Reasoning,
            ReasonerError::Execution { .. } => Stage::Execution,
            ReasonerError::InconsistentInput { .. } => Stage::Audit,
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            ReasonerError::Definition(e) => e.code(),
            ReasonerError::Setup(_) => "UnboundSlot",
            ReasonerError::NotSolvable { .. } => "NotSolvable",
            ReasonerError::Execution { source, .. } => match source {
                EquationError::NoSolution { .. } => "NoSolution",
                EquationError::MultipleOccurrenceUnsolved { .. } => "MultipleOccurrenceUnsolved",
                _ => "DomainError",
            },
            ReasonerError::InconsistentInput { .. } => "InconsistentInput",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub equation: String,
    pub variable: String,
}

/// Steps in executable order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolutionPath {
    pub steps: Vec<PathStep>,
}

impl SolutionPath {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn contains(&self, equation: &str) -> bool {
        self.steps.iter().any(|s| s.equation == equation)
    }
}

/// Chooses a solution path from an annotated graph.
pub trait PathStrategy {
    fn extract(
        &self,
        graph: &ReasoningGraph,
        targets: &[String],
    ) -> Result<SolutionPath, ReasonerError>;
}

/// The path the reachability firing order found first: the fired
/// ancestors of the targets, in firing order.
#[derive(Debug, Clone, Copy, Default)]
pub struct FirstFound;

impl PathStrategy for FirstFound {
    fn extract(
        &self,
        graph: &ReasoningGraph,
        targets: &[String],
    ) -> Result<SolutionPath, ReasonerError> {
        let unreached: Vec<String> = targets
            .iter()
            .filter(|t| !graph.determined.contains(*t))
            .cloned()
            .collect();
        if !unreached.is_empty() {
            return Err(ReasonerError::NotSolvable { unreached });
        }
        let producers = graph.producers();
        let mut needed: BTreeSet<usize> = BTreeSet::new();
        let mut stack: Vec<&str> = targets.iter().map(String::as_str).collect();
        while let Some(v) = stack.pop() {
            if graph.known.contains(v) {
                continue;
            }
            let Some(&eq) = producers.get(v) else {
                continue;
            };
            if needed.insert(eq) {
                stack.extend(
                    graph.equations[eq]
                        .variables
                        .iter()
                        .map(String::as_str)
                        .filter(|u| *u != v),
                );
            }
        }
        Ok(SolutionPath {
            steps: graph
                .firings
                .iter()
                .filter(|f| needed.contains(&f.equation))
                .map(|f| PathStep {
                    equation: graph.equations[f.equation].name.clone(),
                    variable: f.variable.clone(),
                })
                .collect(),
        })
    }
}

/// [`FirstFound`] path extraction.
pub fn extract_path(
    graph: &ReasoningGraph,
    targets: &[String],
) -> Result<SolutionPath, ReasonerError> {
    FirstFound.extract(graph, targets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub equation: String,
    pub variable: String,
    pub value: f64,
    pub method: SolveMethod,
    pub residual: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Residual of one fully valued equation instance after execution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub equation: String,
    /// Absent when the equation cannot be evaluated at the values.
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub on_path: bool,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Execution {
    pub valuation: Valuation,
    pub steps: Vec<StepOutcome>,
    /// Sorted by equation name.
    pub audit: Vec<AuditEntry>,
}

impl Execution {
    /// Audit entries off the path that failed.
    pub fn violations(&self) -> impl Iterator<Item = &AuditEntry> {
        self.audit.iter().filter(|a| !a.on_path && !a.ok)
    }
}

/// Solves the path step by step, then audits every equation whose
/// variables are all valued. Does not judge the audit.
pub fn run_path(
    path: &SolutionPath,
    knowns: &Valuation,
    instances: &[EquationInstance],
) -> Result<Execution, ReasonerError> {
    let by_name: BTreeMap<&str, &EquationInstance> =
        instances.iter().map(|e| (e.name.as_str(), e)).collect();
    let mut valuation = knowns.clone();
    let mut steps = Vec::with_capacity(path.len());
    for step in &path.steps {
        let eq = by_name
            .get(step.equation.as_str())
            .ok_or_else(|| ReasonerError::Execution {
                equation: step.equation.clone(),
                unknown: step.variable.clone(),
                source: EquationError::UnknownNotInEquation {
                    equation: step.equation.clone(),
                    unknown: step.variable.clone(),
                },
            })?;
        let outcome = eq.solve_for(&step.variable, &valuation).map_err(|source| {
            ReasonerError::Execution {
                equation: step.equation.clone(),
                unknown: step.variable.clone(),
                source,
            }
        })?;
        valuation.insert(step.variable.clone(), outcome.value);
        steps.push(StepOutcome {
            equation: step.equation.clone(),
            variable: step.variable.clone(),
            value: outcome.value,
            method: outcome.method,
            residual: outcome.residual,
            warnings: outcome.warnings,
        });
    }
    let mut audit = Vec::new();
    for eq in instances {
        if !eq.variables().iter().all(|v| valuation.contains(v)) {
            continue;
        }
        let on_path = path.contains(&eq.name);
        let entry = match eq.residual(&valuation) {
            Ok(r) => AuditEntry {
                equation: eq.name.clone(),
                residual: Some(r),
                error: None,
                on_path,
                ok: r <= eq.residual_tolerance,
            },
            Err(e) => AuditEntry {
                equation: eq.name.clone(),
                residual: None,
                error: Some(e.to_string()),
                on_path,
                ok: false,
            },
        };
        audit.push(entry);
    }
    audit.sort_by(|a, b| a.equation.cmp(&b.equation));
    Ok(Execution {
        valuation,
        steps,
        audit,
    })
}

fn inconsistency(entry: &AuditEntry) -> ReasonerError {
    ReasonerError::InconsistentInput {
        equation: entry.equation.clone(),
        detail: audit_detail(entry),
        report: None,
    }
}

pub(crate) fn audit_detail(entry: &AuditEntry) -> String {
    match (&entry.residual, &entry.error) {
        (_, Some(e)) => e.clone(),
        (Some(r), None) => format!("residual {r:e}"),
        (None, None) => "not evaluable".into(),
    }
}

/// [`run_path`] followed by the audit verdict: any failing equation off the
/// path means the input contradicts the theory.
pub fn execute(
    path: &SolutionPath,
    knowns: &Valuation,
    instances: &[EquationInstance],
) -> Result<Execution, ReasonerError> {
    let exec = run_path(path, knowns, instances)?;
    if let Some(v) = exec.violations().next() {
        return Err(inconsistency(v));
    }
    Ok(exec)
}

/// Everything a solve produced.
#[derive(Debug, Clone, PartialEq)]
pub struct Solved {
    pub report: SolutionReport,
    pub graph: ReasoningGraph,
    pub path: SolutionPath,
    pub instances: Vec<EquationInstance>,
}

/// Full pipeline with the first-found path.
pub fn solve_problem(problem: &ProblemInstance) -> Result<SolutionReport, ReasonerError> {
    solve_with(problem, &FirstFound).map(|s| s.report)
}

/// Full pipeline: setup, graph, reachability, path, execution, report.
/// A problem still being built is accepted when it could be finalized.
/// With default targets, unreachable variables are reported as
/// undetermined instead of failing.
pub fn solve_with(
    problem: &ProblemInstance,
    strategy: &dyn PathStrategy,
) -> Result<Solved, ReasonerError> {
    if problem.status() == Status::Building {
        let missing = problem.missing_mandatory();
        if !missing.is_empty() {
            return Err(ProblemError::IncompleteDefinition { missing }.into());
        }
    }
    let instances = setup_equations(problem).map_err(ReasonerError::Setup)?;
    let targets = problem.resolved_targets();
    let names = problem.variable_names();
    let mut graph = ReasoningGraph::build(
        &instances,
        names.iter().map(String::as_str),
        problem.knowns().keys().map(String::as_str),
        &targets,
    );
    graph.reachability();
    let (reached, undetermined): (Vec<String>, Vec<String>) = targets
        .iter()
        .cloned()
        .partition(|t| graph.determined.contains(t));
    if !problem.default_all() && !undetermined.is_empty() {
        return Err(ReasonerError::NotSolvable {
            unreached: undetermined,
        });
    }
    let path = strategy.extract(&graph, &reached)?;
    let exec = run_path(&path, &problem.known_values(), &instances)?;
    let report = render_report(problem, &instances, &exec, &undetermined);
    if let Some(v) = exec.violations().next() {
        return Err(ReasonerError::InconsistentInput {
            equation: v.equation.clone(),
            detail: audit_detail(v),
            report: Some(Box::new(report)),
        });
    }
    Ok(Solved {
        report,
        graph,
        path,
        instances,
    })
}
