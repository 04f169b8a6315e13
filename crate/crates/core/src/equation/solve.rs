use serde::{Deserialize, Serialize};

use super::eval::{eval_with, relative_residual};
use super::expr::{Expr, Slot};
use super::template::EquationInstance;
use super::{EquationError, Valuation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveMethod {
    Isolation,
    Numeric,
}

/// Admissible values for an unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Positive,
    Unrestricted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub value: f64,
    pub method: SolveMethod,
    pub residual: f64,
    pub warnings: Vec<String>,
}

const GRID_STEP: f64 = 0.25;
const BOUND: f64 = 1e16;
const MAX_ITERATIONS: usize = 100;
const CONVERGED: f64 = 1e-12;

struct Problem<'a> {
    inst: &'a EquationInstance,
    unknown: &'a str,
    slot: Slot,
    valuation: &'a Valuation,
}

impl Problem<'_> {
    fn value_of(&self, slot: &Slot, candidate: Option<f64>) -> Result<f64, EquationError> {
        if *slot == self.slot {
            return candidate.ok_or_else(|| EquationError::MissingValue {
                variable: self.unknown.to_string(),
            });
        }
        super::eval::lookup(slot, &self.inst.binding, self.valuation)
    }

    fn eval(&self, e: &Expr, candidate: Option<f64>) -> Result<f64, EquationError> {
        eval_with(e, &|s| self.value_of(s, candidate))
    }

    fn sides(&self, x: f64) -> Result<(f64, f64), EquationError> {
        let t = &self.inst.template;
        Ok((self.eval(&t.lhs, Some(x))?, self.eval(&t.rhs, Some(x))?))
    }

    fn f(&self, x: f64) -> Option<f64> {
        let (l, r) = self.sides(x).ok()?;
        let d = l - r;
        d.is_finite().then_some(d)
    }

    fn residual(&self, x: f64) -> Option<f64> {
        let (l, r) = self.sides(x).ok()?;
        Some(relative_residual(l, r))
    }

    fn admissible(&self, x: f64) -> bool {
        x.is_finite() && (self.domain() == Domain::Unrestricted || x > 0.0)
    }

    fn domain(&self) -> Domain {
        if self.inst.positive.contains(self.unknown) {
            Domain::Positive
        } else {
            Domain::Unrestricted
        }
    }

    fn no_solution(&self) -> EquationError {
        EquationError::NoSolution {
            equation: self.inst.name.clone(),
            unknown: self.unknown.to_string(),
        }
    }
}

fn prepare<'a>(
    inst: &'a EquationInstance,
    unknown: &'a str,
    valuation: &'a Valuation,
) -> Result<Problem<'a>, EquationError> {
    let slot = inst
        .binding
        .iter()
        .find(|(_, name)| name.as_str() == unknown)
        .map(|(slot, _)| slot.clone())
        .ok_or_else(|| EquationError::UnknownNotInEquation {
            equation: inst.name.clone(),
            unknown: unknown.to_string(),
        })?;
    for (s, name) in &inst.binding {
        if *s != slot && !valuation.contains(name) {
            return Err(EquationError::MissingValue {
                variable: name.clone(),
            });
        }
    }
    Ok(Problem {
        inst,
        unknown,
        slot,
        valuation,
    })
}

impl EquationInstance {
    /// Solves the instance for `unknown`, every other bound variable being
    /// valued. Symbolic isolation when the unknown occurs once, bracketed
    /// root finding otherwise.
    pub fn solve_for(
        &self,
        unknown: &str,
        valuation: &Valuation,
    ) -> Result<SolveOutcome, EquationError> {
        let p = prepare(self, unknown, valuation)?;
        let t = &self.template;
        let in_lhs = t.lhs.occurrences(&p.slot);
        let in_rhs = t.rhs.occurrences(&p.slot);
        if in_lhs + in_rhs == 1 {
            let (side, other) = if in_lhs == 1 {
                (&t.lhs, &t.rhs)
            } else {
                (&t.rhs, &t.lhs)
            };
            let target = p.eval(other, None)?;
            match isolate(&p, side, target)? {
                Some(v) if p.admissible(v) => {
                    if let Some(r) = p.residual(v) {
                        if r <= self.residual_tolerance {
                            return Ok(SolveOutcome {
                                value: v,
                                method: SolveMethod::Isolation,
                                residual: r,
                                warnings: Vec::new(),
                            });
                        }
                    }
                }
                _ => {}
            }
        }
        numeric(&p)
    }
}

/// Numeric root finding only, skipping isolation.
pub fn solve_numeric(
    inst: &EquationInstance,
    unknown: &str,
    valuation: &Valuation,
) -> Result<SolveOutcome, EquationError> {
    numeric(&prepare(inst, unknown, valuation)?)
}

/// Inverts the chain of operations from `e` down to the unknown slot.
/// `Ok(None)` means the chain is not invertible at these values.
fn isolate(p: &Problem<'_>, e: &Expr, target: f64) -> Result<Option<f64>, EquationError> {
    if !target.is_finite() {
        return Ok(None);
    }
    let has = |x: &Expr| x.occurrences(&p.slot) > 0;
    let known = |x: &Expr| p.eval(x, None);
    match e {
        Expr::Slot(s) if *s == p.slot => Ok(Some(target)),
        Expr::Const(_) | Expr::Slot(_) => Ok(None),
        Expr::Add(a, b) => {
            if has(a) {
                isolate(p, a, target - known(b)?)
            } else {
                isolate(p, b, target - known(a)?)
            }
        }
        Expr::Sub(a, b) => {
            if has(a) {
                isolate(p, a, target + known(b)?)
            } else {
                isolate(p, b, known(a)? - target)
            }
        }
        Expr::Mul(a, b) => {
            let (inner, k) = if has(a) {
                (a, known(b)?)
            } else {
                (b, known(a)?)
            };
            if k == 0.0 {
                return Ok(None);
            }
            isolate(p, inner, target / k)
        }
        Expr::Div(a, b) => {
            if has(a) {
                isolate(p, a, target * known(b)?)
            } else {
                if target == 0.0 {
                    return Ok(None);
                }
                isolate(p, b, known(a)? / target)
            }
        }
        Expr::Pow(a, b) => {
            if has(a) {
                let exponent = known(b)?;
                if exponent == 0.0 || target < 0.0 {
                    return Ok(None);
                }
                isolate(p, a, target.powf(1.0 / exponent))
            } else {
                let base = known(a)?;
                if base <= 0.0 || base == 1.0 || target <= 0.0 {
                    return Ok(None);
                }
                isolate(p, b, target.ln() / base.ln())
            }
        }
        Expr::Ln(a) => isolate(p, a, target.exp()),
        Expr::Neg(a) => isolate(p, a, -target),
    }
}

fn numeric(p: &Problem<'_>) -> Result<SolveOutcome, EquationError> {
    let domain = p.domain();
    let (to_x, u_max): (fn(f64) -> f64, f64) = match domain {
        Domain::Positive => (f64::exp, BOUND.ln()),
        Domain::Unrestricted => (f64::sinh, BOUND.asinh()),
    };
    let k_max = (u_max / GRID_STEP).floor() as i64;
    let x_at = |k: i64| to_x(k as f64 * GRID_STEP);

    // Sample outward from u = 0 and record sign changes in discovery order.
    let mut samples: std::collections::BTreeMap<i64, Option<f64>> = Default::default();
    let mut brackets: Vec<(i64, i64)> = Vec::new();
    let mut order = vec![0i64];
    for k in 1..=k_max {
        order.push(k);
        order.push(-k);
    }
    for k in order {
        let fk = p.f(x_at(k));
        samples.insert(k, fk);
        for nb in [k - 1, k + 1] {
            if let (Some(Some(fa)), Some(fb)) = (samples.get(&nb), fk) {
                let (lo, hi) = if nb < k { (nb, k) } else { (k, nb) };
                if fa * fb <= 0.0 && !brackets.contains(&(lo, hi)) {
                    brackets.push((lo, hi));
                }
            }
        }
    }

    let mut roots: Vec<f64> = Vec::new();
    let mut residual = f64::NAN;
    let mut diverged = false;
    for (lo, hi) in brackets {
        let Some(x) = refine(p, x_at(lo), x_at(hi)) else {
            diverged = true;
            continue;
        };
        if !p.admissible(x) {
            continue;
        }
        let Some(r) = p.residual(x) else { continue };
        if r > p.inst.residual_tolerance {
            // Pole or non-converged bracket.
            diverged = true;
            continue;
        }
        if roots.is_empty() {
            residual = r;
        }
        let distinct = roots
            .iter()
            .all(|&y| (x - y).abs() > 1e-6 * x.abs().max(y.abs()).max(1e-300));
        if distinct {
            roots.push(x);
        }
    }

    let Some(&value) = roots.first() else {
        return Err(if diverged {
            EquationError::MultipleOccurrenceUnsolved {
                equation: p.inst.name.clone(),
                unknown: p.unknown.to_string(),
            }
        } else {
            p.no_solution()
        });
    };
    let mut warnings = Vec::new();
    if roots.len() > 1 {
        let others: Vec<String> = roots[1..].iter().map(|r| format!("{r}")).collect();
        warnings.push(format!(
            "`{}` has {} roots for `{}`; using {value}, also found {}",
            p.inst.name,
            roots.len(),
            p.unknown,
            others.join(", ")
        ));
    }
    Ok(SolveOutcome {
        value,
        method: SolveMethod::Numeric,
        residual,
        warnings,
    })
}

/// Bisection with safeguarded Newton steps on a bracket [a, b].
fn refine(p: &Problem<'_>, mut a: f64, mut b: f64) -> Option<f64> {
    let mut fa = p.f(a)?;
    let mut fb = p.f(b)?;
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    let (mut x, mut fx) = if fa.abs() < fb.abs() {
        (a, fa)
    } else {
        (b, fb)
    };
    let mut last_width = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let width = (b - a).abs();
        if width <= CONVERGED * a.abs().max(b.abs()) {
            break;
        }
        let h = 1e-7 * x.abs().max(1e-12);
        let newton = match (p.f(x + h), p.f(x - h)) {
            (Some(f1), Some(f0)) if f1 != f0 => Some(x - fx * 2.0 * h / (f1 - f0)),
            _ => None,
        };
        let (lo, hi) = (a.min(b), a.max(b));
        let c = match newton {
            Some(c) if c > lo && c < hi && width <= 0.5 * last_width => c,
            _ => 0.5 * (a + b),
        };
        last_width = width;
        let fc = p.f(c)?;
        if fc == 0.0 {
            return Some(c);
        }
        let step = (c - x).abs();
        if fa.signum() == fc.signum() {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
        x = c;
        fx = fc;
        if newton.is_some() && step <= CONVERGED * c.abs() {
            break;
        }
    }

    [(a, fa), (b, fb), (x, fx)]
        .into_iter()
        .min_by(|l, r| l.1.abs().total_cmp(&r.1.abs()))
        .map(|(v, _)| v)
}
