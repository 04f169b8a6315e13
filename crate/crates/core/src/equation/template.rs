use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::eval::{evaluate, relative_residual};
use super::expr::{Expr, Slot};
use super::parser::parse_expression;
use super::{EquationError, Valuation};
use crate::ontology::{Condition, RuleDef};

pub const DEFAULT_RESIDUAL_TOLERANCE: f64 = 1e-9;

/// Slot → variable-instance name.
pub type Binding = BTreeMap<Slot, String>;

#[derive(Debug, Clone, PartialEq)]
pub struct EquationTemplate {
    pub name: String,
    pub lhs: Expr,
    pub rhs: Expr,
    /// Every slot of `lhs` and `rhs`, sorted.
    pub slots: Vec<Slot>,
    pub guards: Vec<String>,
    pub comment: Option<String>,
}

impl EquationTemplate {
    pub fn new(name: impl Into<String>, lhs: Expr, rhs: Expr, guards: Vec<String>) -> Self {
        let mut slots: BTreeSet<Slot> = lhs.slots();
        slots.extend(rhs.slots());
        EquationTemplate {
            name: name.into(),
            lhs,
            rhs,
            slots: slots.into_iter().collect(),
            guards,
            comment: None,
        }
    }

    pub fn parse(
        name: impl Into<String>,
        lhs: &str,
        rhs: &str,
        guards: Vec<String>,
    ) -> Result<Self, EquationError> {
        Ok(Self::new(
            name,
            parse_expression(lhs)?,
            parse_expression(rhs)?,
            guards,
        ))
    }

    pub fn always_applicable(&self) -> bool {
        self.guards.is_empty()
    }

    pub fn render(&self) -> String {
        format!("{} = {}", self.lhs, self.rhs)
    }
}

/// A template bound to concrete variable instances of one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct EquationInstance {
    pub name: String,
    pub template: Arc<EquationTemplate>,
    pub binding: Binding,
    /// Bound variables that must stay strictly positive.
    pub positive: BTreeSet<String>,
    pub residual_tolerance: f64,
}

impl EquationInstance {
    pub fn new(
        name: impl Into<String>,
        template: Arc<EquationTemplate>,
        binding: Binding,
    ) -> Result<Self, EquationError> {
        for slot in &template.slots {
            if !binding.contains_key(slot) {
                return Err(EquationError::UnboundSlot {
                    slot: slot.to_string(),
                });
            }
        }
        let mut seen: BTreeMap<&str, &Slot> = BTreeMap::new();
        for (slot, var) in &binding {
            if let Some(first) = seen.insert(var, slot) {
                return Err(EquationError::DuplicateBinding {
                    first: first.to_string(),
                    second: slot.to_string(),
                    variable: var.clone(),
                });
            }
        }
        Ok(EquationInstance {
            name: name.into(),
            template,
            binding,
            positive: BTreeSet::new(),
            residual_tolerance: DEFAULT_RESIDUAL_TOLERANCE,
        })
    }

    pub fn with_positive(mut self, names: impl IntoIterator<Item = String>) -> Self {
        self.positive.extend(names);
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.residual_tolerance = tolerance;
        self
    }

    /// Bound variable-instance names, sorted.
    pub fn variables(&self) -> BTreeSet<&str> {
        self.binding.values().map(String::as_str).collect()
    }

    pub fn sides(&self, valuation: &Valuation) -> Result<(f64, f64), EquationError> {
        Ok((
            evaluate(&self.template.lhs, &self.binding, valuation)?,
            evaluate(&self.template.rhs, &self.binding, valuation)?,
        ))
    }

    pub fn residual(&self, valuation: &Valuation) -> Result<f64, EquationError> {
        let (l, r) = self.sides(valuation)?;
        Ok(relative_residual(l, r))
    }

    pub fn render_lhs(&self) -> String {
        self.template.lhs.render_with(&|s| self.binding[s].clone())
    }

    pub fn render_rhs(&self) -> String {
        self.template.rhs.render_with(&|s| self.binding[s].clone())
    }

    /// `lhs = rhs` with bound names, e.g. `p_1 * V_1 = m * R * T_1`.
    pub fn render_bound(&self) -> String {
        format!("{} = {}", self.render_lhs(), self.render_rhs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GuardError {
    #[error("unknown rule `{0}`")]
    UnknownRule(String),
    #[error("attribute `{attribute}` of `{concept}` is not set")]
    UnknownAttribute { concept: String, attribute: String },
}

/// Attribute values of the concept instances an equation is bound to.
/// Each entry is an instance's is_a lineage (most specific first) and its
/// attribute values.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AttributeState {
    scopes: Vec<(Vec<String>, BTreeMap<String, String>)>,
}

impl AttributeState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_instance<L, A, K, V>(mut self, lineage: L, attributes: A) -> Self
    where
        L: IntoIterator,
        L::Item: Into<String>,
        A: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        self.scopes.push((
            lineage.into_iter().map(Into::into).collect(),
            attributes
                .into_iter()
                .map(|(k, v)| (k.into(), v.into()))
                .collect(),
        ));
        self
    }

    pub fn holds(&self, condition: &Condition) -> Result<bool, GuardError> {
        let mut candidates = self
            .scopes
            .iter()
            .filter(|(lineage, _)| lineage.contains(&condition.concept))
            .peekable();
        let unknown = || GuardError::UnknownAttribute {
            concept: condition.concept.clone(),
            attribute: condition.attribute.clone(),
        };
        if candidates.peek().is_none() {
            return Err(unknown());
        }
        if condition.attribute == crate::ontology::IS_A {
            return Ok(candidates.any(|(lineage, _)| lineage.contains(&condition.value)));
        }
        for (_, attrs) in candidates {
            if let Some(v) = attrs.get(&condition.attribute) {
                return Ok(*v == condition.value);
            }
        }
        Err(unknown())
    }
}

/// True iff every guard rule's condition holds.
pub fn guards_satisfied(
    template: &EquationTemplate,
    state: &AttributeState,
    rules: &BTreeMap<String, RuleDef>,
) -> Result<bool, GuardError> {
    for guard in &template.guards {
        let rule = rules
            .get(guard)
            .ok_or_else(|| GuardError::UnknownRule(guard.clone()))?;
        for condition in &rule.condition {
            if !state.holds(condition)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
