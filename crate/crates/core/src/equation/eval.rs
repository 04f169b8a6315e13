use super::expr::{Expr, Slot};
use super::template::Binding;
use super::{EquationError, Valuation};

/// Evaluates `expr` with slots looked up through `binding` in `valuation`.
pub fn evaluate(
    expr: &Expr,
    binding: &Binding,
    valuation: &Valuation,
) -> Result<f64, EquationError> {
    eval_with(expr, &|slot| lookup(slot, binding, valuation))
}

pub(crate) fn lookup(
    slot: &Slot,
    binding: &Binding,
    valuation: &Valuation,
) -> Result<f64, EquationError> {
    let name = binding
        .get(slot)
        .ok_or_else(|| EquationError::UnboundSlot {
            slot: slot.to_string(),
        })?;
    valuation
        .get(name)
        .ok_or_else(|| EquationError::MissingValue {
            variable: name.clone(),
        })
}

/// |lhs - rhs| / max(|lhs|, |rhs|, 1).
pub fn relative_residual(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1.0)
}

fn domain(expr: &Expr, reason: impl Into<String>) -> EquationError {
    EquationError::Domain {
        expression: expr.to_string(),
        reason: reason.into(),
    }
}

pub(crate) fn eval_with(
    expr: &Expr,
    value_of: &dyn Fn(&Slot) -> Result<f64, EquationError>,
) -> Result<f64, EquationError> {
    let result = match expr {
        Expr::Const(c) => *c,
        Expr::Slot(s) => value_of(s)?,
        Expr::Add(a, b) => eval_with(a, value_of)? + eval_with(b, value_of)?,
        Expr::Sub(a, b) => eval_with(a, value_of)? - eval_with(b, value_of)?,
        Expr::Mul(a, b) => eval_with(a, value_of)? * eval_with(b, value_of)?,
        Expr::Div(a, b) => {
            let num = eval_with(a, value_of)?;
            let den = eval_with(b, value_of)?;
            if den == 0.0 {
                return Err(domain(expr, "division by zero"));
            }
            num / den
        }
        Expr::Pow(a, b) => {
            let base = eval_with(a, value_of)?;
            let exponent = eval_with(b, value_of)?;
            if base == 0.0 && exponent < 0.0 {
                return Err(domain(expr, "zero raised to a negative power"));
            }
            let r = base.powf(exponent);
            if r.is_nan() {
                return Err(domain(expr, format!("{base} ^ {exponent} is not real")));
            }
            r
        }
        Expr::Ln(a) => {
            let arg = eval_with(a, value_of)?;
            if arg <= 0.0 {
                return Err(domain(
                    expr,
                    format!("logarithm of non-positive value {arg}"),
                ));
            }
            arg.ln()
        }
        Expr::Neg(a) => -eval_with(a, value_of)?,
    };
    if !result.is_finite() {
        return Err(domain(expr, "result is not finite"));
    }
    Ok(result)
}
