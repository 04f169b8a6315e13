use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Which end of a change of state a role-qualified slot refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateRole {
    Initial,
    Final,
}

impl StateRole {
    pub fn suffix(self) -> &'static str {
        match self {
            StateRole::Initial => "_1",
            StateRole::Final => "_2",
        }
    }

    /// Name of the has_a relation on the change-of-state concept that
    /// resolves this role.
    pub fn relation(self) -> &'static str {
        match self {
            StateRole::Initial => "initial_state",
            StateRole::Final => "final_state",
        }
    }
}

/// A concept-qualified variable slot, written `var@Concept` or, for the two
/// states of a change of state, `var_1@State` / `var_2@State`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Slot {
    pub variable: String,
    pub qualifier: String,
    pub role: Option<StateRole>,
}

impl Slot {
    pub fn new(variable: impl Into<String>, qualifier: impl Into<String>) -> Self {
        Slot {
            variable: variable.into(),
            qualifier: qualifier.into(),
            role: None,
        }
    }

    pub fn with_role(
        variable: impl Into<String>,
        qualifier: impl Into<String>,
        role: StateRole,
    ) -> Self {
        Slot {
            variable: variable.into(),
            qualifier: qualifier.into(),
            role: Some(role),
        }
    }

    /// Parses a slot token such as `T_2@State`.
    pub fn parse_token(token: &str) -> Option<Slot> {
        let (name, qualifier) = token.split_once('@')?;
        if !is_identifier(name) || !is_identifier(qualifier) {
            return None;
        }
        let role = if name.len() > 2 && name.ends_with("_1") {
            Some(StateRole::Initial)
        } else if name.len() > 2 && name.ends_with("_2") {
            Some(StateRole::Final)
        } else {
            None
        };
        let variable = match role {
            Some(_) => &name[..name.len() - 2],
            None => name,
        };
        Some(Slot {
            variable: variable.to_string(),
            qualifier: qualifier.to_string(),
            role,
        })
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let suffix = self.role.map(StateRole::suffix).unwrap_or("");
        write!(f, "{}{}@{}", self.variable, suffix, self.qualifier)
    }
}

impl Serialize for Slot {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Slot {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let token = String::deserialize(deserializer)?;
        Slot::parse_token(&token)
            .ok_or_else(|| serde::de::Error::custom(format!("invalid slot token `{token}`")))
    }
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Expression tree over real numbers.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Slot(Slot),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Ln(Box<Expr>),
    Neg(Box<Expr>),
}

impl Expr {
    pub fn slot(variable: &str, qualifier: &str) -> Expr {
        Expr::Slot(Slot::new(variable, qualifier))
    }

    pub fn slots(&self) -> BTreeSet<Slot> {
        let mut out = BTreeSet::new();
        self.visit_slots(&mut |s| {
            out.insert(s.clone());
        });
        out
    }

    pub fn occurrences(&self, slot: &Slot) -> usize {
        let mut n = 0;
        self.visit_slots(&mut |s| {
            if s == slot {
                n += 1;
            }
        });
        n
    }

    pub fn visit_slots(&self, f: &mut impl FnMut(&Slot)) {
        match self {
            Expr::Const(_) => {}
            Expr::Slot(s) => f(s),
            Expr::Add(a, b)
            | Expr::Sub(a, b)
            | Expr::Mul(a, b)
            | Expr::Div(a, b)
            | Expr::Pow(a, b) => {
                a.visit_slots(f);
                b.visit_slots(f);
            }
            Expr::Ln(a) | Expr::Neg(a) => a.visit_slots(f),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            Expr::Neg(..) => 3,
            Expr::Pow(..) => 4,
            Expr::Const(_) | Expr::Slot(_) | Expr::Ln(_) => 5,
        }
    }

    /// Renders the tree in infix form, printing slots with `slot_text`.
    /// Parentheses are emitted exactly where re-parsing needs them to
    /// rebuild the same tree.
    pub fn render_with(&self, slot_text: &dyn Fn(&Slot) -> String) -> String {
        let mut out = String::new();
        self.write_into(&mut out, slot_text);
        out
    }

    fn write_into(&self, out: &mut String, slot_text: &dyn Fn(&Slot) -> String) {
        let child = |out: &mut String, e: &Expr, parens: bool| {
            if parens {
                out.push('(');
            }
            e.write_into(out, slot_text);
            if parens {
                out.push(')');
            }
        };
        match self {
            Expr::Const(c) => out.push_str(&format!("{c}")),
            Expr::Slot(s) => out.push_str(&slot_text(s)),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                let p = self.precedence();
                let op = match self {
                    Expr::Add(..) => " + ",
                    Expr::Sub(..) => " - ",
                    Expr::Mul(..) => " * ",
                    _ => " / ",
                };
                child(out, a, a.precedence() < p);
                out.push_str(op);
                child(out, b, b.precedence() <= p);
            }
            Expr::Pow(a, b) => {
                child(out, a, a.precedence() <= 4);
                out.push_str(" ^ ");
                child(out, b, b.precedence() < 3);
            }
            Expr::Neg(a) => {
                out.push('-');
                child(out, a, a.precedence() < 3);
            }
            Expr::Ln(a) => {
                out.push_str("ln(");
                a.write_into(out, slot_text);
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render_with(&|s| s.to_string()))
    }
}
