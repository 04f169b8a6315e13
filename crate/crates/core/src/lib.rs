//! Ontology-driven reasoning for closed-system ideal-gas thermodynamics.
//!
//! The crate stores thermodynamic theory as an ontology of concepts,
//! variables, attributes, concept-qualified equations and rules. A problem
//! is defined through a dialogue ([`problem::ProblemInstance`]), the
//! applicable equations are instantiated for it, a bipartite reasoning graph
//! finds a chain of single-unknown equations, and the chain is solved and
//! audited into a step-by-step [`explain::SolutionReport`].
//!
//! ```
//! use std::sync::Arc;
//! use thermoreason::{solve_problem, KnowledgeBase, ProblemInstance};
//!
//! let kb = Arc::new(KnowledgeBase::builtin());
//! let mut p = ProblemInstance::create(kb, "equilibrium_state").unwrap();
//! p.set_material("air").unwrap();
//! p.set_value("m", 1.0).unwrap();
//! p.set_value("T_1", 300.0).unwrap();
//! p.set_value("V_1", 1.0).unwrap();
//! p.set_targets(&["p_1"]).unwrap();
//! let report = solve_problem(&p).unwrap();
//! assert!((report.value("p_1").unwrap() - 86111.75).abs() < 0.01);
//! ```
//!
//! The `examples/` directory has one program per capability:
//! `ontology_tour`, `single_equation`, `dialogue`, `isothermal_compression`,
//! `reasoning_graph`, `validate_problem` and `service_client`.

pub mod cli;
pub mod equation;
pub mod explain;
pub mod knowledge;
pub mod ontology;
pub mod problem;
pub mod reasoner;
pub mod service;

pub use equation::{EquationInstance, EquationTemplate, Valuation};
pub use explain::SolutionReport;
pub use knowledge::KnowledgeBase;
pub use ontology::OntologySchema;
pub use problem::{ProblemDocument, ProblemInstance};
pub use reasoner::{solve_problem, ReasonerError};
