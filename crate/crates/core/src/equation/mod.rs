//! Equation engine: expression trees over concept-qualified slots,
//! evaluation, residuals and solving a single equation for one unknown.

mod eval;
mod expr;
mod parser;
mod solve;
mod template;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

pub use eval::{evaluate, relative_residual};
pub use expr::{Expr, Slot, StateRole};
pub use parser::parse_expression;
pub use solve::{solve_numeric, Domain, SolveMethod, SolveOutcome};
pub use template::{
    guards_satisfied, AttributeState, Binding, EquationInstance, EquationTemplate, GuardError,
    DEFAULT_RESIDUAL_TOLERANCE,
};

pub(crate) use expr::is_identifier;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EquationError {
    #[error("parse error at position {position}: {message}")]
    Parse { position: usize, message: String },
    #[error("unknown function `{name}` at position {position}")]
    UnknownFunction { name: String, position: usize },
    #[error("domain error in `{expression}`: {reason}")]
    Domain { expression: String, reason: String },
    #[error("no value for `{variable}`")]
    MissingValue { variable: String },
    #[error("slot `{slot}` is not bound")]
    UnboundSlot { slot: String },
    #[error("slots {first} and {second} are both bound to `{variable}`")]
    DuplicateBinding {
        first: String,
        second: String,
        variable: String,
    },
    #[error("`{unknown}` does not occur in `{equation}`")]
    UnknownNotInEquation { equation: String, unknown: String },
    #[error("no solution for `{unknown}` in `{equation}` over the admissible domain")]
    NoSolution { equation: String, unknown: String },
    #[error("numeric solve for `{unknown}` in `{equation}` did not converge")]
    MultipleOccurrenceUnsolved { equation: String, unknown: String },
}

/// Values of variable instances, in SI units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Valuation(BTreeMap<String, f64>);

impl Valuation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.contains_key(name)
    }

    pub fn insert(&mut self, name: impl Into<String>, value: f64) -> Option<f64> {
        debug_assert!(value.is_finite());
        self.0.insert(name.into(), value)
    }

    pub fn remove(&mut self, name: &str) -> Option<f64> {
        self.0.remove(name)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn as_map(&self) -> &BTreeMap<String, f64> {
        &self.0
    }
}

impl<S: Into<String>> FromIterator<(S, f64)> for Valuation {
    fn from_iter<I: IntoIterator<Item = (S, f64)>>(iter: I) -> Self {
        Valuation(iter.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }
}

impl<S: Into<String>> Extend<(S, f64)> for Valuation {
    fn extend<I: IntoIterator<Item = (S, f64)>>(&mut self, iter: I) {
        self.0.extend(iter.into_iter().map(|(k, v)| (k.into(), v)));
    }
}
