//! Command-line front end. [`run`] holds all logic so it can be driven from
//! tests; the binary only forwards process arguments and streams.
//!
//! Exit codes: 0 success, 1 usage, parse or definition errors, 2 not
//! solvable, 3 inconsistent input. Diagnostics and prompts go to stderr,
//! requested output to stdout.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::io::{BufRead, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::explain::SolutionReport;
use crate::knowledge::KnowledgeBase;
use crate::ontology::{export_graph, GraphDocument};
use crate::problem::{Choice, ProblemDocument, ProblemInstance};
use crate::reasoner::{solve_with, FirstFound, ReasonerError};
use crate::service::{serve, Service, ServiceConfig, DEFAULT_ADDR};

pub const ONTOLOGY_ENV: &str = "THERMOREASON_ONTOLOGY";

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_NOT_SOLVABLE: i32 = 2;
pub const EXIT_INCONSISTENT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "thermoreason",
    version,
    about = "Explainable thermodynamics problem solving"
)]
struct Cli {
    /// Ontology directory (schema YAML files plus materials.yaml); the
    /// built-in ontology when absent.
    #[arg(long, global = true, env = ONTOLOGY_ENV)]
    ontology: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a problem document.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Define a problem in a terminal dialogue, then solve it.
    Interactive {
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Check the `--ontology` directory and/or a problem document.
    Validate {
        #[arg(long)]
        problem: Option<PathBuf>,
    },
    /// List catalog contents.
    List(ListArgs),
    /// Export the ontology graph.
    Graph {
        /// Restrict to these concepts (repeatable).
        #[arg(long)]
        concept: Vec<String>,
        #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
        format: GraphFormat,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, default_value = DEFAULT_ADDR)]
        addr: SocketAddr,
        /// Idle session timeout in seconds.
        #[arg(long, default_value_t = 3600)]
        session_timeout: u64,
        /// Allowed CORS origin (repeatable); any when absent.
        #[arg(long)]
        cors_origin: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Report file; stdout when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Md)]
    format: ReportFormat,
    /// Reasoning-graph file.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = GraphFormat::Dot)]
    graph_format: GraphFormat,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ListArgs {
    #[arg(long)]
    equations: bool,
    #[arg(long)]
    materials: bool,
    #[arg(long)]
    concepts: bool,
    #[arg(long)]
    process_classes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Md,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GraphFormat {
    Dot,
    Json,
}

/// Runs the command line `args` (program name first).
pub fn run<I, T>(
    args: I,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() {
                write!(stderr, "{text}")
            } else {
                write!(stdout, "{text}")
            };
            return code;
        }
    };
    match dispatch(cli, stdin, stdout, stderr) {
        Ok(code) => code,
        Err(message) => {
            let _ = writeln!(stderr, "error: {message}");
            EXIT_ERROR
        }
    }
}

fn load_kb(dir: Option<&Path>) -> Result<Arc<KnowledgeBase>, String> {
    match dir {
        Some(d) => KnowledgeBase::from_dir(d)
            .map(Arc::new)
            .map_err(|e| format!("{}: {e}", d.display())),
        None => Ok(Arc::new(KnowledgeBase::builtin())),
    }
}

fn dispatch(
    cli: Cli,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, String> {
    let io = |e: std::io::Error| e.to_string();
    match cli.command {
        Command::Solve { problem, out } => {
            let kb = load_kb(cli.ontology.as_deref())?;
            let text = std::fs::read_to_string(&problem)
                .map_err(|e| format!("{}: {e}", problem.display()))?;
            let doc = ProblemDocument::from_yaml(&text)
                .map_err(|e| format!("{}: {e}", problem.display()))?;
            let p = ProblemInstance::from_document(kb, &doc)
                .map_err(|e| format!("{}: {e}", problem.display()))?;
            solve_and_write(&p, &out, stdout, stderr)
        }
        Command::Interactive { out } => {
            let kb = load_kb(cli.ontology.as_deref())?;
            match dialogue(kb, stdin, stderr).map_err(io)? {
                Some(p) => solve_and_write(&p, &out, stdout, stderr),
                None => {
                    let _ = writeln!(stderr, "aborted");
                    Ok(EXIT_ERROR)
                }
            }
        }
        Command::Validate { problem } => {
            let dir = cli.ontology;
            if dir.is_none() && problem.is_none() {
                return Err("validate needs --ontology DIR or --problem FILE".into());
            }
            let mut code = EXIT_OK;
            if let Some(d) = &dir {
                match KnowledgeBase::from_dir(d) {
                    Ok(kb) => {
                        let _ = writeln!(
                            stdout,
                            "{}: ok ({} elements)",
                            d.display(),
                            kb.schema.element_count()
                        );
                    }
                    Err(e) => {
                        let _ = writeln!(stderr, "{}: {e}", d.display());
                        code = EXIT_ERROR;
                    }
                }
            }
            if let Some(f) = &problem {
                let kb = load_kb(dir.as_deref())?;
                let text =
                    std::fs::read_to_string(f).map_err(|e| format!("{}: {e}", f.display()))?;
                match kb.validate_problem(&text) {
                    Ok(r) if r.conforms() => {
                        let _ = writeln!(stdout, "{}: ok", f.display());
                    }
                    Ok(r) => {
                        for v in &r.violations {
                            let _ = writeln!(stderr, "{}: {}: {}", f.display(), v.path, v.message);
                        }
                        code = EXIT_ERROR;
                    }
                    Err(e) => {
                        let _ = writeln!(stderr, "{}: {e}", f.display());
                        code = EXIT_ERROR;
                    }
                }
            }
            Ok(code)
        }
        Command::List(what) => {
            let kb = load_kb(cli.ontology.as_deref())?;
            if what.equations {
                for e in kb.equation_catalog() {
                    let guards = if e.guards.is_empty() {
                        "always".to_string()
                    } else {
                        e.guards.join(", ")
                    };
                    writeln!(stdout, "{}: {}  [{guards}]", e.name, e.render()).map_err(io)?;
                }
            } else if what.materials {
                for m in &kb.materials {
                    writeln!(
                        stdout,
                        "{}: M = {} kg/mol, R = {} J/(kg K), cv = {} J/(kg K), cp = {} J/(kg K)",
                        m.name, m.molar_mass, m.specific_gas_constant, m.cv, m.cp
                    )
                    .map_err(io)?;
                }
            } else if what.concepts {
                for c in kb.schema.concepts.values() {
                    match &c.parent {
                        Some(p) => writeln!(stdout, "{} is_a {p}", c.name),
                        None => writeln!(stdout, "{}", c.name),
                    }
                    .map_err(io)?;
                }
            } else {
                for c in kb.processes.iter() {
                    writeln!(stdout, "{}: {}", c.name, c.description).map_err(io)?;
                }
            }
            Ok(EXIT_OK)
        }
        Command::Graph { concept, format } => {
            let kb = load_kb(cli.ontology.as_deref())?;
            let filter: BTreeSet<String> = concept.into_iter().collect();
            let doc = export_graph(&kb.schema, (!filter.is_empty()).then_some(&filter))
                .map_err(|e| e.to_string())?;
            write!(stdout, "{}", render_graph(&doc, format, "ontology")).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Serve {
            addr,
            session_timeout,
            cors_origin,
        } => {
            let kb = load_kb(cli.ontology.as_deref())?;
            let service = Service::new(
                kb,
                ServiceConfig {
                    session_timeout: Duration::from_secs(session_timeout),
                    cors_origins: cors_origin,
                },
            );
            let rt = tokio::runtime::Runtime::new().map_err(io)?;
            rt.block_on(serve(addr, service)).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

fn render_graph(doc: &GraphDocument, format: GraphFormat, name: &str) -> String {
    match format {
        GraphFormat::Dot => doc.to_dot(name),
        GraphFormat::Json => doc.to_json() + "\n",
    }
}

fn render_report(report: &SolutionReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Md => report.to_markdown(),
        ReportFormat::Json => report.to_json() + "\n",
    }
}

fn write_output(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), String> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => stdout.write_all(text.as_bytes()).map_err(|e| e.to_string()),
    }
}

fn solve_and_write(
    problem: &ProblemInstance,
    out: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<i32, String> {
    match solve_with(problem, &FirstFound) {
        Ok(solved) => {
            write_output(
                out.report.as_deref(),
                &render_report(&solved.report, out.format),
                stdout,
            )?;
            if let Some(g) = &out.graph {
                let text = render_graph(&solved.graph.to_document(), out.graph_format, "reasoning");
                write_output(Some(g), &text, stdout)?;
            }
            for w in &solved.report.warnings {
                let _ = writeln!(stderr, "warning: {w}");
            }
            Ok(EXIT_OK)
        }
        Err(e) => {
            let _ = writeln!(stderr, "error [{}]: {e}", e.code());
            Ok(match e {
                ReasonerError::NotSolvable { .. } => EXIT_NOT_SOLVABLE,
                ReasonerError::InconsistentInput { report, .. } => {
                    if let Some(r) = report {
                        write_output(
                            out.report.as_deref(),
                            &render_report(&r, out.format),
                            stdout,
                        )?;
                    }
                    EXIT_INCONSISTENT
                }
                _ => EXIT_ERROR,
            })
        }
    }
}

/// Reads one trimmed line; `None` at end of input.
fn read_line(stdin: &mut dyn BufRead) -> std::io::Result<Option<String>> {
    let mut line = String::new();
    if stdin.read_line(&mut line)? == 0 {
        return Ok(None);
    }
    Ok(Some(line.trim().to_string()))
}

/// Asks for a 1-based menu index; 0 skips when `skippable`. Re-prompts on
/// invalid input.
fn menu(
    title: &str,
    options: &[String],
    skippable: bool,
    stdin: &mut dyn BufRead,
    prompts: &mut dyn Write,
) -> std::io::Result<Option<Option<usize>>> {
    writeln!(prompts, "{title}")?;
    if skippable {
        writeln!(prompts, "  0) skip")?;
    }
    for (i, o) in options.iter().enumerate() {
        writeln!(prompts, "  {}) {o}", i + 1)?;
    }
    loop {
        write!(prompts, "> ")?;
        prompts.flush()?;
        let Some(line) = read_line(stdin)? else {
            return Ok(None);
        };
        match line.parse::<usize>() {
            Ok(0) if skippable => return Ok(Some(None)),
            Ok(i) if (1..=options.len()).contains(&i) => return Ok(Some(Some(i - 1))),
            _ => writeln!(
                prompts,
                "enter a number from {} to {}",
                if skippable { 0 } else { 1 },
                options.len()
            )?,
        }
    }
}

/// The terminal dialogue. Choices are asked in the order the problem lists
/// them. `None` when input ends early.
pub fn dialogue(
    kb: Arc<KnowledgeBase>,
    stdin: &mut dyn BufRead,
    prompts: &mut dyn Write,
) -> std::io::Result<Option<ProblemInstance>> {
    let classes: Vec<String> = kb.processes.names().iter().map(|s| s.to_string()).collect();
    let Some(Some(i)) = menu("Process class:", &classes, false, stdin, prompts)? else {
        return Ok(None);
    };
    let mut p = ProblemInstance::create(kb, &classes[i]).expect("listed class exists");
    let mut skipped: BTreeSet<String> = BTreeSet::new();
    loop {
        let mandatory = p.missing_mandatory();
        let next = p
            .pending_choices()
            .into_iter()
            .find(|c| !skipped.contains(&choice_key(c)));
        let Some(choice) = next else { break };
        let key = choice_key(&choice);
        let (title, options, skippable) = match &choice {
            Choice::Specialization {
                instance,
                concept,
                options,
            } => (
                format!("Specialize {instance} ({concept}):"),
                options.clone(),
                true,
            ),
            Choice::Attribute {
                instance,
                attribute,
                allowed_values,
            } => (
                format!("{instance}: {attribute}?"),
                allowed_values.clone(),
                !mandatory.contains(&key),
            ),
            Choice::Material { options } => ("Material:".to_string(), options.clone(), false),
        };
        let Some(picked) = menu(&title, &options, skippable, stdin, prompts)? else {
            return Ok(None);
        };
        let Some(idx) = picked else {
            skipped.insert(key);
            continue;
        };
        let value = &options[idx];
        let result = match &choice {
            Choice::Specialization { instance, .. } => {
                p.set_attribute(instance, crate::ontology::IS_A, value)
            }
            Choice::Attribute {
                instance,
                attribute,
                ..
            } => p.set_attribute(instance, attribute, value),
            Choice::Material { .. } => p.set_material(value),
        };
        if let Err(e) = result {
            writeln!(prompts, "{e}")?;
        }
    }

    writeln!(prompts, "Variables (SI units):")?;
    for v in p.variables() {
        let state = match v.value {
            Some(x) => format!("= {x}"),
            None => "unknown".to_string(),
        };
        writeln!(prompts, "  {} [{}] {state}", v.name, v.unit)?;
    }
    writeln!(
        prompts,
        "Enter values as `name = number`, an empty line to finish."
    )?;
    loop {
        write!(prompts, "value> ")?;
        prompts.flush()?;
        let Some(line) = read_line(stdin)? else {
            return Ok(None);
        };
        if line.is_empty() {
            break;
        }
        let Some((name, value)) = line.split_once('=') else {
            writeln!(prompts, "expected `name = number`")?;
            continue;
        };
        match value.trim().parse::<f64>() {
            Ok(x) => {
                if let Err(e) = p.set_value(name.trim(), x) {
                    writeln!(prompts, "{e}")?;
                }
            }
            Err(_) => writeln!(prompts, "`{}` is not a number", value.trim())?,
        }
    }
    loop {
        write!(
            prompts,
            "targets (space separated, empty for all unknowns)> "
        )?;
        prompts.flush()?;
        let Some(line) = read_line(stdin)? else {
            return Ok(None);
        };
        let names: Vec<&str> = line.split_whitespace().collect();
        match p.set_targets(&names) {
            Ok(()) => break,
            Err(e) => writeln!(prompts, "{e}")?,
        }
    }
    match p.finalize() {
        Ok(_) => Ok(Some(p)),
        Err(e) => {
            writeln!(prompts, "{e}")?;
            Ok(None)
        }
    }
}

fn choice_key(c: &Choice) -> String {
    match c {
        Choice::Specialization { instance, .. } => format!("{instance}.is_a"),
        Choice::Attribute {
            instance,
            attribute,
            ..
        } => format!("{instance}.{attribute}"),
        Choice::Material { .. } => "material".into(),
    }
}
