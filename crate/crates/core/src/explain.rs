//! Step-by-step solution reports as JSON and markdown.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::equation::{EquationInstance, SolveMethod};
use crate::ontology::IS_A;
use crate::problem::{ProblemInstance, ValueSource};
use crate::reasoner::{AuditEntry, Execution};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownValue {
    pub name: String,
    pub value: f64,
    pub unit: String,
    pub source: ValueSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportStep {
    /// 1-based.
    pub index: usize,
    /// Equation instance name.
    pub equation: String,
    pub template: String,
    /// Template sides in slot form.
    pub lhs: String,
    pub rhs: String,
    /// Slot token → variable instance.
    pub binding: BTreeMap<String, String>,
    /// `lhs = rhs` with bound names.
    pub rendered: String,
    /// Guard rules and the conditions they required.
    pub guards: Vec<GuardCitation>,
    pub solved: String,
    pub value: f64,
    pub unit: String,
    pub method: SolveMethod,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GuardCitation {
    pub rule: String,
    pub conditions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TargetValue {
    pub name: String,
    pub value: f64,
    pub unit: String,
    /// Step that produced the value; absent for knowns.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub process_class: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub material: Option<String>,
    /// instance → attribute → value, derived attributes included.
    pub attributes: BTreeMap<String, BTreeMap<String, String>>,
    pub knowns: Vec<KnownValue>,
    pub targets: Vec<String>,
    /// True when the targets were every unknown variable.
    pub default_targets: bool,
    pub steps: Vec<ReportStep>,
    pub results: Vec<TargetValue>,
    /// Default-target variables no equation chain reaches.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub undetermined: Vec<String>,
    pub audit: Vec<AuditEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl SolutionReport {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.results
            .iter()
            .find(|r| r.name == name)
            .map(|r| r.value)
            .or_else(|| self.knowns.iter().find(|k| k.name == name).map(|k| k.value))
            .or_else(|| {
                self.steps
                    .iter()
                    .find(|s| s.solved == name)
                    .map(|s| s.value)
            })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_markdown(&self) -> String {
        to_markdown(self)
    }
}

/// Builds the report of an execution.
pub fn render_report(
    problem: &ProblemInstance,
    instances: &[EquationInstance],
    exec: &Execution,
    undetermined: &[String],
) -> SolutionReport {
    let schema = &problem.knowledge().schema;
    let unit = |name: &str| -> String {
        problem
            .lookup_variable(name)
            .map(|(_, v)| schema.variables[v].si_unit.clone())
            .unwrap_or_default()
    };
    let by_name: BTreeMap<&str, &EquationInstance> =
        instances.iter().map(|e| (e.name.as_str(), e)).collect();

    let mut attributes = BTreeMap::new();
    for inst in problem.instances() {
        let mut attrs = inst.effective_attributes();
        if inst.concept != inst.base_concept {
            attrs.insert(IS_A.to_string(), inst.concept.clone());
        }
        if !attrs.is_empty() {
            attributes.insert(inst.id.clone(), attrs);
        }
    }

    let knowns = problem
        .knowns()
        .iter()
        .map(|(n, k)| KnownValue {
            name: n.clone(),
            value: k.value,
            unit: unit(n),
            source: k.source,
        })
        .collect();

    let mut warnings = Vec::new();
    let mut steps = Vec::with_capacity(exec.steps.len());
    for (i, s) in exec.steps.iter().enumerate() {
        let eq = by_name[s.equation.as_str()];
        let guards = eq
            .template
            .guards
            .iter()
            .map(|g| GuardCitation {
                rule: g.clone(),
                conditions: schema.rules.get(g).map_or_else(Vec::new, |r| {
                    r.condition
                        .iter()
                        .map(|c| {
                            if c.attribute == IS_A {
                                format!("{} is_a {}", c.concept, c.value)
                            } else {
                                format!("{} = {}", c.attribute, c.value)
                            }
                        })
                        .collect()
                }),
            })
            .collect();
        for w in &s.warnings {
            warnings.push(format!("{}: {w}", s.equation));
        }
        steps.push(ReportStep {
            index: i + 1,
            equation: s.equation.clone(),
            template: eq.template.name.clone(),
            lhs: eq.template.lhs.to_string(),
            rhs: eq.template.rhs.to_string(),
            binding: eq
                .binding
                .iter()
                .map(|(k, v)| (k.to_string(), v.clone()))
                .collect(),
            rendered: eq.render_bound(),
            guards,
            solved: s.variable.clone(),
            value: s.value,
            unit: unit(&s.variable),
            method: s.method,
            residual: s.residual,
        });
    }
    for v in exec.audit.iter().filter(|a| !a.ok) {
        warnings.push(format!(
            "InconsistentInput: {} is violated ({})",
            v.equation,
            crate::reasoner::audit_detail(v)
        ));
    }

    let undetermined: Vec<String> = undetermined.to_vec();
    let targets = problem.resolved_targets();
    let results = targets
        .iter()
        .filter(|t| !undetermined.contains(t))
        .filter_map(|t| {
            let value = exec.valuation.get(t)?;
            Some(TargetValue {
                name: t.clone(),
                value,
                unit: unit(t),
                step: steps.iter().find(|s| s.solved == *t).map(|s| s.index),
            })
        })
        .collect();

    SolutionReport {
        process_class: problem.process_class().to_string(),
        material: problem.material().map(String::from),
        attributes,
        knowns,
        targets,
        default_targets: problem.default_all(),
        steps,
        results,
        undetermined,
        audit: exec.audit.clone(),
        warnings,
    }
}

/// Six significant digits, trailing zeros dropped.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        // Rounding can carry into a new digit, e.g. 999999.5.
        if s.trim_start_matches('-')
            .replace('.', "")
            .trim_start_matches('0')
            .len()
            > 6
        {
            return format_scientific(v);
        }
        s
    } else {
        format_scientific(v)
    }
}

fn format_scientific(v: f64) -> String {
    let s = format!("{v:.5e}");
    let (mantissa, exponent) = s.split_once('e').expect("scientific format");
    let mantissa = mantissa.trim_end_matches('0').trim_end_matches('.');
    format!("{mantissa}e{exponent}")
}

fn with_unit(v: f64, unit: &str) -> String {
    if unit.is_empty() || unit == "1" {
        format_number(v)
    } else {
        format!("{} {unit}", format_number(v))
    }
}

pub fn to_markdown(r: &SolutionReport) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Solution report: {}\n", r.process_class);
    if let Some(m) = &r.material {
        let _ = writeln!(out, "Material: {m}\n");
    }
    out.push_str("## Problem\n\n");
    if !r.attributes.is_empty() {
        out.push_str("| instance | attribute | value |\n|---|---|---|\n");
        for (inst, attrs) in &r.attributes {
            for (a, v) in attrs {
                let _ = writeln!(out, "| {inst} | {a} | {v} |");
            }
        }
        out.push('\n');
    }
    out.push_str("Known values:\n\n");
    for k in &r.knowns {
        let source = match k.source {
            ValueSource::Given => "given",
            ValueSource::Constant => "constant",
            ValueSource::Material => "material table",
        };
        let _ = writeln!(
            out,
            "- `{}` = {} ({source})",
            k.name,
            with_unit(k.value, &k.unit)
        );
    }
    let _ = writeln!(
        out,
        "\nTargets{}: {}\n",
        if r.default_targets {
            " (all unknowns)"
        } else {
            ""
        },
        if r.targets.is_empty() {
            "none".to_string()
        } else {
            r.targets.join(", ")
        }
    );

    out.push_str("## Solution steps\n\n");
    if r.steps.is_empty() {
        out.push_str("No steps needed.\n");
    }
    for s in &r.steps {
        let _ = writeln!(out, "{}. `{}: {}`", s.index, s.equation, s.rendered);
        for g in &s.guards {
            let _ = writeln!(
                out,
                "   - applies by {}: {}",
                g.rule,
                g.conditions.join(", ")
            );
        }
        let method = match s.method {
            SolveMethod::Isolation => "isolated",
            SolveMethod::Numeric => "numeric root",
        };
        let _ = writeln!(
            out,
            "   - {} = {} ({method}, residual {})",
            s.solved,
            with_unit(s.value, &s.unit),
            format_number(s.residual)
        );
    }

    out.push_str("\n## Results\n\n| variable | value | unit | from |\n|---|---|---|---|\n");
    for t in &r.results {
        let from = t
            .step
            .map_or_else(|| "known".to_string(), |i| format!("step {i}"));
        let _ = writeln!(
            out,
            "| {} | {} | {} | {from} |",
            t.name,
            format_number(t.value),
            t.unit
        );
    }
    if !r.undetermined.is_empty() {
        let _ = writeln!(out, "\nUndetermined: {}", r.undetermined.join(", "));
    }

    out.push_str("\n## Audit\n\n| equation | residual | status |\n|---|---|---|\n");
    for a in &r.audit {
        let residual = a.residual.map_or_else(|| "n/a".to_string(), format_number);
        let _ = writeln!(
            out,
            "| {} | {residual} | {} |",
            a.equation,
            if a.ok { "ok" } else { "violated" }
        );
    }
    if !r.warnings.is_empty() {
        out.push_str("\n## Warnings\n\n");
        for w in &r.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}
