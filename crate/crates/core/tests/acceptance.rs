//! Acceptance suite: the thirteen reference problems, the four property
//! suites, the round trips and the physical constants. Prints one line per
//! criterion and exits non-zero when any fails.

use std::collections::BTreeSet;
use std::sync::Arc;
use std::time::Instant;

use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};

use thermoreason::equation::{Binding, EquationInstance, Slot};
use thermoreason::knowledge::{builtin_schema, MaterialRecord};
use thermoreason::ontology::{load_schema, SchemaSource};
use thermoreason::problem::ValueSource;
use thermoreason::reasoner::{execute, extract_path, setup_equations, ReasoningGraph};
use thermoreason::{
    solve_problem, KnowledgeBase, ProblemDocument, ProblemInstance, ReasonerError, SolutionReport,
    Valuation,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn kb() -> Arc<KnowledgeBase> {
    Arc::new(KnowledgeBase::builtin())
}

fn problem_text(file: &str) -> String {
    let path = format!("{}/data/problems/{file}", env!("CARGO_MANIFEST_DIR"));
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{path}: {e}"))
}

fn load(file: &str) -> ProblemInstance {
    let doc = ProblemDocument::from_yaml(&problem_text(file)).expect("problem parses");
    ProblemInstance::from_document(kb(), &doc).expect("problem finalizes")
}

fn solve(file: &str) -> Result<SolutionReport, ReasonerError> {
    solve_problem(&load(file))
}

fn material(name: &str) -> MaterialRecord {
    kb().material_lookup(name).unwrap().clone()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

fn expect(report: &SolutionReport, name: &str, oracle: f64, tol: f64) -> Result<f64, String> {
    let v = report
        .value(name)
        .ok_or_else(|| format!("{name} missing from report"))?;
    if rel(v, oracle) <= tol {
        Ok(v)
    } else {
        Err(format!("{name} = {v}, oracle {oracle}"))
    }
}

fn audit_clean(report: &SolutionReport) -> Result<(), String> {
    match report
        .audit
        .iter()
        .find(|a| !a.ok || a.residual.is_none_or(|r| r > 1e-9))
    {
        Some(a) => Err(format!("audit: {} residual {:?}", a.equation, a.residual)),
        None => Ok(()),
    }
}

fn a1() -> Outcome {
    let air = material("air");
    let start = Instant::now();
    let r = solve("a01_isothermal_compression.yaml").map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let w_oracle = 1.0 * air.specific_gas_constant * 300.0 * (1.0f64 / 0.5).ln();
    let w = expect(&r, "W_12", w_oracle, 1e-6)?;
    expect(&r, "W_12", 59688.1, 1e-6)?;
    expect(&r, "Q_12", -w_oracle, 1e-6)?;
    let du = r.value("dU_12").ok_or("dU_12 missing")?;
    if du.abs() > 1e-9 {
        return Err(format!("dU_12 = {du}"));
    }
    if (air.specific_gas_constant - 287.04).abs() > 0.005 {
        return Err(format!("air R = {}", air.specific_gas_constant));
    }
    if elapsed.as_secs_f64() >= 1.0 {
        return Err(format!("took {elapsed:?}"));
    }
    audit_clean(&r)?;
    Ok(format!(
        "W_12 = {w:.4} J, Q_12 = {:.4} J, {elapsed:.1?}",
        -w
    ))
}

fn a2() -> Outcome {
    let air = material("air");
    let r = solve("a02_isentropic_expansion.yaml").map_err(|e| e.to_string())?;
    let kappa = 1.4;
    let cp = kappa * air.specific_gas_constant / (kappa - 1.0);
    let oracle = 400.0 * (1.0e5f64 / 2.0e5).powf(air.specific_gas_constant / cp);
    let t2 = r.value("T_2").ok_or("T_2 missing")?;
    if (t2 - oracle).abs() > 0.01 || (t2 - 328.13414).abs() > 1e-4 {
        return Err(format!("T_2 = {t2}, oracle {oracle}"));
    }
    if !r
        .steps
        .iter()
        .any(|s| s.template == "e_isentropic_temperature" && s.solved == "T_2")
    {
        return Err("T_2 not solved by the isentropic temperature relation".into());
    }
    let ds = r
        .audit
        .iter()
        .find(|a| a.equation == "e_entropy_change_tp@change_12")
        .ok_or("entropy change not audited")?;
    let res = ds.residual.ok_or("entropy audit not evaluable")?;
    if res > 1e-9 {
        return Err(format!("entropy audit residual {res:e}"));
    }
    audit_clean(&r)?;
    Ok(format!(
        "T_2 = {t2:.5} K (oracle {oracle:.5}; the stated 328.12 differs from this oracle by {:.3}), ds audit {res:.1e}",
        oracle - 328.12
    ))
}

fn a3() -> Outcome {
    let air = material("air");
    let r = solve("a03_isochoric_heating.yaml").map_err(|e| e.to_string())?;
    let q = expect(&r, "Q_12", 2.0 * air.cv * (500.0 - 300.0), 1e-9)?;
    let w = r.value("W_12").ok_or("W_12 missing")?;
    if w != 0.0 {
        return Err(format!("W_12 = {w}"));
    }
    audit_clean(&r)?;
    Ok(format!("Q_12 = {q:.4} J, W_12 = 0"))
}

fn a4() -> Outcome {
    let air = material("air");
    let r = solve("a04_equilibrium_state.yaml").map_err(|e| e.to_string())?;
    let (m, t, v) = (1.5, 350.0, 0.4);
    let p = m * air.specific_gas_constant * t / v;
    let s = air.cp * (t / 293.15f64).ln() - air.specific_gas_constant * (p / 1.0e5f64).ln();
    let u = air.cv * (t - 293.15);
    expect(&r, "p_1", p, 1e-9)?;
    expect(&r, "s_1", s, 1e-9)?;
    expect(&r, "u_1", u, 1e-9)?;
    audit_clean(&r)?;
    Ok(format!(
        "p_1 = {p:.3} Pa, s_1 = {s:.5} J/(kg K), u_1 = {u:.4} J/kg"
    ))
}

fn a5() -> Outcome {
    let air = material("air");
    let r = solve("a05_isobaric_heating.yaml").map_err(|e| e.to_string())?;
    let (m, p1, t1, t2) = (1.0, 1.0e5, 300.0, 600.0);
    let v2 = m * air.specific_gas_constant * t2 / p1;
    expect(&r, "V_2", v2, 1e-9)?;
    let w = expect(&r, "W_12", -m * air.specific_gas_constant * (t2 - t1), 1e-9)?;
    let q = expect(&r, "Q_12", m * air.cp * (t2 - t1), 1e-9)?;
    audit_clean(&r)?;
    Ok(format!(
        "V_2 = {v2:.6} m^3, W_12 = {w:.4} J, Q_12 = {q:.4} J"
    ))
}

fn a6() -> Outcome {
    let air = material("air");
    let r = solve("a06_polytropic_compression.yaml").map_err(|e| e.to_string())?;
    let (m, p1, t1, p2, n) = (1.0, 1.0e5f64, 300.0, 5.0e5f64, 1.3f64);
    let t2 = t1 * (p2 / p1).powf((n - 1.0) / n);
    let w = m * air.specific_gas_constant * (t2 - t1) / (n - 1.0);
    let q = m * air.cv * (t2 - t1) - w;
    expect(&r, "T_2", t2, 1e-9)?;
    expect(&r, "W_12", w, 1e-9)?;
    expect(&r, "Q_12", q, 1e-9)?;
    audit_clean(&r)?;
    Ok(format!("T_2 = {t2:.5} K, W_12 = {w:.3} J, Q_12 = {q:.3} J"))
}

fn a7() -> Outcome {
    let air = material("air");
    let p = load("a07_all_unknowns.yaml");
    let r = solve_problem(&p).map_err(|e| e.to_string())?;
    if !r.default_targets {
        return Err("not in default-target mode".into());
    }
    if r.undetermined != ["n_poly_12"] {
        return Err(format!("undetermined {:?}", r.undetermined));
    }
    let unknown = p.variable_names().len() - p.knowns().len();
    if r.results.len() + r.undetermined.len() != unknown {
        return Err(format!(
            "{} results for {unknown} unknowns",
            r.results.len()
        ));
    }
    let t2 = 400.0 * 0.5f64.powf(air.specific_gas_constant / air.cp);
    expect(&r, "T_2", t2, 1e-9)?;
    expect(&r, "W_12", 2.0 * air.cv * (t2 - 400.0), 1e-9)?;
    expect(
        &r,
        "V_1",
        2.0 * air.specific_gas_constant * 400.0 / 2.0e5,
        1e-9,
    )?;
    audit_clean(&r)?;
    Ok(format!(
        "{} values, undetermined {:?}",
        r.results.len(),
        r.undetermined
    ))
}

fn a8() -> Outcome {
    let air = material("air");
    let r = solve("a08_overdetermined_consistent.yaml").map_err(|e| e.to_string())?;
    let w = expect(
        &r,
        "W_12",
        air.specific_gas_constant * 300.0 * 2f64.ln(),
        1e-9,
    )?;
    let eos = r
        .audit
        .iter()
        .find(|a| a.equation == "e_thermal_eos@state_1")
        .ok_or("given p_1 not audited")?;
    audit_clean(&r)?;
    Ok(format!(
        "W_12 = {w:.4} J, e_thermal_eos@state_1 residual {:?}",
        eos.residual
    ))
}

fn a9() -> Outcome {
    match solve("a09_overdetermined_inconsistent.yaml") {
        Err(ReasonerError::InconsistentInput {
            equation, report, ..
        }) if equation == "e_thermal_eos@state_1" => {
            let report = report.ok_or("no report attached")?;
            if !report
                .warnings
                .iter()
                .any(|w| w.contains("e_thermal_eos@state_1"))
            {
                return Err("warnings do not name the equation".into());
            }
            Ok(format!("InconsistentInput at {equation}"))
        }
        other => Err(format!("expected InconsistentInput, got {other:?}")),
    }
}

fn a10() -> Outcome {
    match solve("a10_underdetermined.yaml") {
        Err(ReasonerError::NotSolvable { unreached }) if unreached == ["Q_12"] => {
            Ok(format!("NotSolvable, unreached {unreached:?}"))
        }
        other => Err(format!("expected NotSolvable, got {other:?}")),
    }
}

fn a11() -> Outcome {
    let air = material("air");
    let r = solve("a11_entropy_routes.yaml").map_err(|e| e.to_string())?;
    let (t1, p1, t2, p2) = (300.0f64, 1.0e5f64, 450.0f64, 3.0e5f64);
    let ds_tp = air.cp * (t2 / t1).ln() - air.specific_gas_constant * (p2 / p1).ln();
    let ds = expect(&r, "ds_12", ds_tp, 1e-9)?;
    let v1 = r.value("v_1").ok_or("v_1 missing")?;
    let v2 = r.value("v_2").ok_or("v_2 missing")?;
    let ds_tv = air.cv * (t2 / t1).ln() + air.specific_gas_constant * (v2 / v1).ln();
    if rel(ds_tp, ds_tv) > 1e-9 {
        return Err(format!("routes differ: {ds_tp} vs {ds_tv}"));
    }
    for eq in [
        "e_entropy_change_tp@change_12",
        "e_entropy_change_tv@change_12",
    ] {
        if !r.audit.iter().any(|a| a.equation == eq && a.ok) {
            return Err(format!("{eq} not audited clean"));
        }
    }
    audit_clean(&r)?;
    Ok(format!(
        "ds_12 = {ds:.6} J/(kg K), routes differ by {:.1e}",
        rel(ds_tp, ds_tv)
    ))
}

fn a12() -> Outcome {
    let he = material("helium");
    let r = solve("a12_helium_compression.yaml").map_err(|e| e.to_string())?;
    let (m, t1, v1, v2) = (0.5, 300.0, 1.0f64, 0.25f64);
    let t2 = t1 * (v1 / v2).powf(he.specific_gas_constant / he.cv);
    expect(&r, "T_2", t2, 1e-9)?;
    expect(&r, "p_2", m * he.specific_gas_constant * t2 / v2, 1e-9)?;
    let w = expect(&r, "W_12", m * he.cv * (t2 - t1), 1e-9)?;
    audit_clean(&r)?;
    Ok(format!("T_2 = {t2:.4} K, W_12 = {w:.3} J"))
}

fn a13() -> Outcome {
    let n2 = material("nitrogen");
    let r = solve("a13_isothermal_nitrogen.yaml").map_err(|e| e.to_string())?;
    let (m, t, p1, p2) = (1.0, 350.0, 1.0e5f64, 3.0e5f64);
    let w = m * n2.specific_gas_constant * t * (p2 / p1).ln();
    expect(&r, "W_12", w, 1e-9)?;
    expect(&r, "Q_12", -w, 1e-9)?;
    expect(
        &r,
        "dS_12",
        -m * n2.specific_gas_constant * (p2 / p1).ln(),
        1e-9,
    )?;
    audit_clean(&r)?;
    Ok(format!("W_12 = {w:.3} J"))
}

/// Binds every slot of a template to its own token name.
fn self_bound(t: &Arc<thermoreason::EquationTemplate>) -> EquationInstance {
    let binding: Binding = t.slots.iter().map(|s| (s.clone(), s.to_string())).collect();
    let schema = builtin_schema();
    let positive: Vec<String> = t
        .slots
        .iter()
        .filter(|s| schema.is_positive(&s.variable))
        .map(Slot::to_string)
        .collect();
    EquationInstance::new(t.name.clone(), t.clone(), binding)
        .unwrap()
        .with_positive(positive)
}

fn sample(rng: &mut StdRng, positive: bool) -> f64 {
    if positive {
        10f64.powf(rng.random_range(-1.0..1.0))
    } else {
        rng.random_range(-5.0..5.0)
    }
}

/// A valuation satisfying the equation: random values, then one pivot
/// variable solved for and the result checked by plain evaluation.
fn satisfying(eq: &EquationInstance, rng: &mut StdRng, avoid: &str) -> Option<Valuation> {
    let vars: Vec<String> = eq.variables().into_iter().map(String::from).collect();
    let pivots: Vec<&String> = vars.iter().filter(|v| *v != avoid).collect();
    let pivot = if pivots.is_empty() {
        &vars[0]
    } else {
        pivots[rng.random_range(0..pivots.len())]
    };
    let mut val: Valuation = vars
        .iter()
        .filter(|v| *v != pivot)
        .map(|v| (v.clone(), sample(rng, eq.positive.contains(v))))
        .collect();
    let x = eq.solve_for(pivot, &val).ok()?.value;
    val.insert(pivot.clone(), x);
    match eq.residual(&val) {
        Ok(r) if r <= 1e-12 => Some(val),
        _ => None,
    }
}

fn p1() -> Outcome {
    let mut rng = StdRng::seed_from_u64(1);
    let schema = builtin_schema();
    let mut pairs = 0;
    let mut worst: f64 = 0.0;
    for t in schema.equations.values() {
        let eq = self_bound(t);
        for unknown in eq.variables() {
            let mut done = 0;
            let mut attempts = 0;
            while done < 100 {
                attempts += 1;
                if attempts > 10_000 {
                    return Err(format!(
                        "{}: no admissible valuations for {unknown}",
                        t.name
                    ));
                }
                let Some(mut val) = satisfying(&eq, &mut rng, unknown) else {
                    continue;
                };
                val.remove(unknown);
                let out = eq
                    .solve_for(unknown, &val)
                    .map_err(|e| format!("{} for {unknown} at {val:?}: {e}", t.name))?;
                val.insert(unknown.to_string(), out.value);
                let r = eq.residual(&val).map_err(|e| e.to_string())?;
                if r > 1e-9 {
                    return Err(format!("{} for {unknown}: residual {r:e}", t.name));
                }
                worst = worst.max(r);
                done += 1;
            }
            pairs += 1;
        }
    }
    Ok(format!(
        "{pairs} (equation, unknown) pairs x 100 valuations, worst residual {worst:.1e}"
    ))
}

/// Every variable some firing sequence can determine, by exhaustive search
/// over firing sequences. Also checks that every maximal sequence ends in
/// the same set.
fn brute_force(eqs: &[Vec<String>], known: &BTreeSet<String>) -> Result<BTreeSet<String>, String> {
    fn go(
        eqs: &[Vec<String>],
        fired: u32,
        det: &BTreeSet<String>,
        seen: &mut BTreeSet<u32>,
        finals: &mut BTreeSet<BTreeSet<String>>,
    ) {
        if !seen.insert(fired) {
            return;
        }
        let mut any = false;
        for (i, vars) in eqs.iter().enumerate() {
            if fired & (1 << i) != 0 {
                continue;
            }
            let unknown: Vec<&String> = vars.iter().filter(|v| !det.contains(*v)).collect();
            if unknown.len() == 1 {
                any = true;
                let mut next = det.clone();
                next.insert(unknown[0].clone());
                go(eqs, fired | (1 << i), &next, seen, finals);
            }
        }
        if !any {
            finals.insert(det.clone());
        }
    }
    let mut finals = BTreeSet::new();
    go(eqs, 0, known, &mut BTreeSet::new(), &mut finals);
    if finals.len() != 1 {
        return Err(format!("{} distinct terminal sets", finals.len()));
    }
    Ok(finals.into_iter().next().unwrap())
}

fn all_instances() -> (Vec<EquationInstance>, Vec<String>) {
    let p = load("a07_all_unknowns.yaml");
    (setup_equations(&p).unwrap(), p.variable_names())
}

fn random_known(rng: &mut StdRng, vars: &BTreeSet<String>) -> BTreeSet<String> {
    vars.iter()
        .filter(|_| rng.random_bool(0.5))
        .cloned()
        .collect()
}

fn p2() -> Outcome {
    let (all, _) = all_instances();
    let mut rng = StdRng::seed_from_u64(2);
    for case in 0..200 {
        let k = rng.random_range(1..=8);
        let subset: Vec<EquationInstance> = all.choose_multiple(&mut rng, k).cloned().collect();
        let vars: BTreeSet<String> = subset
            .iter()
            .flat_map(|e| e.variables())
            .map(String::from)
            .collect();
        let known = random_known(&mut rng, &vars);
        let mut g = ReasoningGraph::build(&subset, [], known.iter().map(String::as_str), &[]);
        let got = g.reachability().clone();
        let lists: Vec<Vec<String>> = g.equations.iter().map(|e| e.variables.clone()).collect();
        let oracle = brute_force(&lists, &known).map_err(|e| format!("case {case}: {e}"))?;
        if got != oracle {
            return Err(format!("case {case}: {got:?} vs {oracle:?}"));
        }
    }
    Ok("200 random subsets of <= 8 equations match exhaustive enumeration".into())
}

fn p3() -> Outcome {
    let (all, names) = all_instances();
    let mut rng = StdRng::seed_from_u64(3);
    let vars: BTreeSet<String> = names.into_iter().collect();
    for case in 0..100 {
        let known = random_known(&mut rng, &vars);
        let mut bigger = known.clone();
        bigger.extend(random_known(&mut rng, &vars));
        let run = |k: &BTreeSet<String>, order: Option<&[usize]>| {
            let mut g = ReasoningGraph::build(&all, [], k.iter().map(String::as_str), &[]);
            match order {
                Some(o) => g.reachability_in_order(o).clone(),
                None => g.reachability().clone(),
            }
        };
        let base = run(&known, None);
        if !base.is_subset(&run(&bigger, None)) {
            return Err(format!("case {case}: monotonicity violated"));
        }
        let mut order: Vec<usize> = (0..all.len()).collect();
        order.shuffle(&mut rng);
        if run(&known, Some(&order)) != base {
            return Err(format!(
                "case {case}: scan order changed the determined set"
            ));
        }
    }
    Ok(format!(
        "100 known-set pairs and 100 permutations over {} equations",
        all.len()
    ))
}

/// Runs graph, path and execution on a chosen instance set.
fn run_with(p: &ProblemInstance, instances: &[EquationInstance]) -> Result<Valuation, String> {
    let targets = p.resolved_targets();
    let names = p.variable_names();
    let mut g = ReasoningGraph::build(
        instances,
        names.iter().map(String::as_str),
        p.knowns().keys().map(String::as_str),
        &targets,
    );
    g.reachability();
    let path = extract_path(&g, &targets).map_err(|e| e.to_string())?;
    let exec = execute(&path, &p.known_values(), instances).map_err(|e| e.to_string())?;
    if exec.audit.iter().any(|a| !a.ok) {
        return Err("audit failed".into());
    }
    Ok(exec.valuation)
}

fn p4() -> Outcome {
    let mut added = 0;
    for file in [
        "a01_isothermal_compression.yaml",
        "a02_isentropic_expansion.yaml",
        "a03_isochoric_heating.yaml",
        "a04_equilibrium_state.yaml",
    ] {
        let p = load(file);
        let all = setup_equations(&p).map_err(|e| e.to_string())?;
        let targets = p.resolved_targets();
        let full = run_with(&p, &all)?;
        let on_path: BTreeSet<String> = {
            let names = p.variable_names();
            let mut g = ReasoningGraph::build(
                &all,
                names.iter().map(String::as_str),
                p.knowns().keys().map(String::as_str),
                &targets,
            );
            g.reachability();
            extract_path(&g, &targets)
                .map_err(|e| e.to_string())?
                .steps
                .into_iter()
                .map(|s| s.equation)
                .collect()
        };
        let minimal: Vec<EquationInstance> = all
            .iter()
            .filter(|e| on_path.contains(&e.name))
            .cloned()
            .collect();
        let base = run_with(&p, &minimal)?;
        for t in &targets {
            if base.get(t).map(f64::to_bits) != full.get(t).map(f64::to_bits) {
                return Err(format!(
                    "{file}: {t} differs between path-only and full set"
                ));
            }
        }
        for extra in all.iter().filter(|e| !on_path.contains(&e.name)) {
            let mut set = minimal.clone();
            set.push(extra.clone());
            let v = run_with(&p, &set).map_err(|e| format!("{file} + {}: {e}", extra.name))?;
            for t in &targets {
                if v.get(t).map(f64::to_bits) != base.get(t).map(f64::to_bits) {
                    return Err(format!("{file} + {}: {t} changed", extra.name));
                }
            }
            added += 1;
        }
    }
    Ok(format!(
        "{added} single-equation additions, target values bit-identical, audits clean"
    ))
}

fn round_trips() -> Outcome {
    let schema = builtin_schema();
    let yaml = schema.to_yaml();
    let again = load_schema(&[SchemaSource::new("serialized.yaml", yaml.clone())])
        .map_err(|e| e.to_string())?;
    if again != schema || again.to_yaml() != yaml {
        return Err("schema serialize/load is not a fixed point".into());
    }
    let mut docs = 0;
    for entry in std::fs::read_dir(format!("{}/data/problems", env!("CARGO_MANIFEST_DIR"))).unwrap()
    {
        let path = entry.unwrap().path();
        let doc = ProblemDocument::from_yaml(&std::fs::read_to_string(&path).unwrap())
            .map_err(|e| e.to_string())?;
        let mut p = ProblemInstance::build_from_document(kb(), &doc).map_err(|e| e.to_string())?;
        let finalized = p.finalize().map_err(|e| e.to_string())?;
        let parsed = ProblemDocument::from_yaml(&finalized.to_yaml()).map_err(|e| e.to_string())?;
        if parsed != finalized {
            return Err(format!("{}: document changed through YAML", path.display()));
        }
        let replayed = ProblemInstance::from_document(kb(), &parsed).map_err(|e| e.to_string())?;
        if replayed != p {
            return Err(format!("{}: replayed problem differs", path.display()));
        }
        docs += 1;
    }
    let mut reports = 0;
    for file in [
        "a01_isothermal_compression.yaml",
        "a07_all_unknowns.yaml",
        "a11_entropy_routes.yaml",
    ] {
        let r = solve(file).map_err(|e| e.to_string())?;
        if SolutionReport::from_json(&r.to_json()).map_err(|e| e.to_string())? != r {
            return Err(format!("{file}: report JSON is lossy"));
        }
        reports += 1;
    }
    Ok(format!(
        "schema fixed point, {docs} problem documents, {reports} reports"
    ))
}

fn constants() -> Outcome {
    for class in ["equilibrium_state", "single_change_of_state"] {
        let p = ProblemInstance::create(kb(), class).map_err(|e| e.to_string())?;
        for (name, value) in [("R_univ", 8.31446261815324), ("T0", 293.15), ("p0", 1.0e5)] {
            let k = p
                .knowns()
                .get(name)
                .ok_or_else(|| format!("{class}: {name} missing"))?;
            if k.value != value || k.source != ValueSource::Constant {
                return Err(format!("{class}: {name} = {} ({:?})", k.value, k.source));
            }
        }
    }
    Ok("R_univ = 8.31446261815324, T0 = 293.15, p0 = 1e5 in every created problem".into())
}

fn main() {
    let criteria: Vec<Criterion> = vec![
        ("A1 isothermal reversible compression", a1),
        ("A2 adiabatic reversible expansion", a2),
        ("A3 isochoric heating", a3),
        ("A4 equilibrium state", a4),
        ("A5 isobaric reversible heating", a5),
        ("A6 polytropic compression", a6),
        ("A7 default targets", a7),
        ("A8 over-determined consistent input", a8),
        ("A9 over-determined inconsistent input", a9),
        ("A10 under-determined input", a10),
        ("A11 entropy routes agree", a11),
        ("A12 adiabatic reversible compression of helium", a12),
        ("A13 isothermal reversible compression of nitrogen", a13),
        ("P1 solve_for round trip", p1),
        ("P2 reachability vs brute force", p2),
        ("P3 monotonicity and order independence", p3),
        ("P4 redundancy tolerance", p4),
        ("R  round trips", round_trips),
        ("C  physical constants", constants),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        match std::panic::catch_unwind(f) {
            Ok(Ok(detail)) => println!("PASS {name}: {detail}"),
            Ok(Err(why)) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
            Err(_) => {
                failed += 1;
                println!("FAIL {name}: panicked");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all criteria passed");
}
