use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bytedbg_core::corpus::{corpus_run, load_program, Status};
use bytedbg_core::localize::{parse_probe, select_method};
use bytedbg_core::report::{deps_json, error_json, outcome_of_run_json, render, trace_json, value_json, Report};
use bytedbg_core::spec::{bind_names, parse_spec, Literal, Specification};
use bytedbg_core::{
    assemble, check, diagnose, disassemble, emit_report, extract_deps_opts, run, transitive_closure, value_table,
    write_class, CheckOptions, Error, ExtractOptions, LocalizeOptions, Method, Outcome, Program, Result, Value,
    DEFAULT_STEP_LIMIT,
};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

const CONSISTENT: u8 = 0;
const VIOLATED: u8 = 1;
const USAGE: u8 = 2;
const TRAPPED: u8 = 3;

/// Bytecode debugger: execution traces, dependency pairs and
/// specification-based fault localization.
#[derive(Parser)]
#[command(name = "bytedbg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Compact JSON output (the default).
    #[arg(long, global = true, conflicts_with = "pretty")]
    json: bool,
    /// Indented JSON output.
    #[arg(long, global = true)]
    pretty: bool,
}

#[derive(Args)]
struct Target {
    /// Program file (.bcasm or .class).
    file: PathBuf,
    /// Method to analyse; defaults to the first one.
    #[arg(long)]
    method: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Assemble text into a class file.
    Asm {
        file: PathBuf,
        /// Output path; defaults to the input with a .class extension.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print a program in canonical assembly.
    Disasm { file: PathBuf },
    /// Execute a method and print its trace and value table.
    Trace {
        #[command(flatten)]
        target: Target,
        /// Argument value, in parameter order.
        #[arg(long = "input", allow_negative_numbers = true)]
        inputs: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: usize,
    },
    /// Extract dependency pairs and their closure.
    Deps {
        #[command(flatten)]
        target: Target,
        /// Take local names from this specification.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        control_deps: bool,
    },
    /// Check a program against a specification.
    Check {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: usize,
        #[arg(long)]
        control_deps: bool,
    },
    /// Check, then rank candidate faulty instructions.
    Localize {
        #[command(flatten)]
        target: Target,
        #[arg(long)]
        spec: PathBuf,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: usize,
        #[arg(long)]
        control_deps: bool,
        /// Extra probe values, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        probes: Vec<String>,
    },
    /// Check and localize every program in a directory.
    Corpus {
        dir: PathBuf,
        /// Where `<stem>.spec.json` files live; defaults to the program directory.
        #[arg(long)]
        spec_dir: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_STEP_LIMIT)]
        step_limit: usize,
        #[arg(long)]
        control_deps: bool,
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        probes: Vec<String>,
    },
}

struct Output {
    text: String,
    code: u8,
}

fn read_spec(path: &Path) -> Result<Specification> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Io { path: path.display().to_string(), message: e.to_string() })?;
    parse_spec(&text)
}

fn pick<'a>(program: &'a Program, name: Option<&str>) -> Result<&'a Method> {
    match name {
        Some(name) => program.method(name).ok_or_else(|| Error::UnknownMethod(name.to_owned())),
        None => program.methods.first().ok_or(Error::NoMethod),
    }
}

fn probes(texts: &[String]) -> Result<Vec<Value>> {
    let mut values = Vec::new();
    for t in texts {
        values.extend(parse_probe(t)?);
    }
    Ok(values)
}

fn step_limit(n: usize) -> Result<usize> {
    if n == 0 {
        return Err(Error::Input("--step-limit must be at least 1".into()));
    }
    Ok(n)
}

fn execute(cli: &Cli) -> Result<Output> {
    let pretty = cli.pretty;
    let done = |report: &Report, code: u8| Output { text: emit_report(report, pretty), code };
    match &cli.command {
        Command::Asm { file, output } => {
            let text = fs::read_to_string(file)
                .map_err(|e| Error::Io { path: file.display().to_string(), message: e.to_string() })?;
            let program = assemble(&text)?;
            let bytes = write_class(&program)?;
            let out = output.clone().unwrap_or_else(|| file.with_extension("class"));
            fs::write(&out, &bytes).map_err(|e| Error::Io { path: out.display().to_string(), message: e.to_string() })?;
            let methods: Vec<_> = program
                .methods
                .iter()
                .map(|m| json!({"name": m.name, "descriptor": m.descriptor(), "code_length": m.code_length()}))
                .collect();
            let mut report = Report::new("asm", program.methods.first().map_or("", |m| m.name.as_str()));
            report.set("output", json!(out.display().to_string())).set("bytes", json!(bytes.len()));
            report.set("methods", json!(methods));
            Ok(done(&report, CONSISTENT))
        }
        Command::Disasm { file } => Ok(Output { text: disassemble(&load_program(file)?), code: CONSISTENT }),
        Command::Trace { target, inputs, step_limit: limit } => {
            let program = load_program(&target.file)?;
            let method = pick(&program, target.method.as_deref())?;
            if inputs.len() != method.params.len() {
                return Err(Error::Input(format!(
                    "method `{}` takes {} inputs, {} given",
                    method.name,
                    method.params.len(),
                    inputs.len()
                )));
            }
            let values = inputs
                .iter()
                .zip(&method.params)
                .enumerate()
                .map(|(i, (text, kind))| Literal(text.clone()).resolve(*kind, &format!("--input[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let result = run(method, &values, step_limit(*limit)?)?;
            let mut report = Report::new("trace", &method.name);
            report.set("inputs", json!(values.iter().map(|v| value_json(*v)).collect::<Vec<_>>()));
            report.set("outcome", outcome_of_run_json(&result));
            report.set("return_site", json!(result.return_site));
            report.set("steps", json!(result.trace.len()));
            report.set("trace", trace_json(&result.trace));
            report.with_value_table(&value_table(&result.trace));
            let code = match result.outcome {
                Outcome::Returned(_) => CONSISTENT,
                Outcome::Trapped(_) | Outcome::StepLimit => TRAPPED,
            };
            Ok(done(&report, code))
        }
        Command::Deps { target, spec, control_deps } => {
            let program = load_program(&target.file)?;
            let spec = spec.as_deref().map(read_spec).transpose()?;
            let name = target.method.as_deref().or(spec.as_ref().map(|s| s.method.as_str()));
            let method = pick(&program, name)?;
            let names = spec.as_ref().map(|s| s.names.clone()).unwrap_or_default();
            let binding = bind_names(&names, method)?;
            let base = extract_deps_opts(method, ExtractOptions { control_deps: *control_deps })?;
            let closure = transitive_closure(&base);
            let mut report = Report::new("deps", &method.name);
            report.set("base", deps_json(&base, &binding));
            report.set("closure", deps_json(&closure, &binding));
            Ok(done(&report, CONSISTENT))
        }
        Command::Check { target, spec, step_limit: limit, control_deps } => {
            let program = load_program(&target.file)?;
            let spec = read_spec(spec)?;
            let method = match &target.method {
                Some(_) => pick(&program, target.method.as_deref())?,
                None => select_method(&program, &spec)?,
            };
            let bound = spec.bind(method)?;
            let options = CheckOptions { step_limit: step_limit(*limit)?, control_deps: *control_deps };
            let verdict = check(method, &bound, options)?;
            let mut report = Report::new("check", &method.name);
            report.with_verdict(&verdict, &bound);
            Ok(done(&report, if verdict.is_consistent() { CONSISTENT } else { VIOLATED }))
        }
        Command::Localize { target, spec, step_limit: limit, control_deps, probes: extra } => {
            let program = load_program(&target.file)?;
            let spec = read_spec(spec)?;
            let method = match &target.method {
                Some(_) => pick(&program, target.method.as_deref())?,
                None => select_method(&program, &spec)?,
            };
            let bound = spec.bind(method)?;
            let options = LocalizeOptions {
                check: CheckOptions { step_limit: step_limit(*limit)?, control_deps: *control_deps },
                extra_probes: probes(extra)?,
            };
            let verdict = check(method, &bound, options.check)?;
            let mut report = Report::new("localize", &method.name);
            report.with_verdict(&verdict, &bound);
            if let Some(diagnosis) = diagnose(method, &bound, &verdict, &options)? {
                report.with_diagnosis(&diagnosis);
            }
            Ok(done(&report, if verdict.is_consistent() { CONSISTENT } else { VIOLATED }))
        }
        Command::Corpus { dir, spec_dir, step_limit: limit, control_deps, probes: extra } => {
            let options = LocalizeOptions {
                check: CheckOptions { step_limit: step_limit(*limit)?, control_deps: *control_deps },
                extra_probes: probes(extra)?,
            };
            let summary = corpus_run(dir, spec_dir.as_deref().unwrap_or(dir), &options)?;
            let programs: Vec<_> = summary
                .programs
                .iter()
                .map(|p| {
                    let mut row = json!({"program": p.stem, "status": p.status.as_str(), "candidates": p.candidates});
                    if let Status::Error { kind, message } = &p.status {
                        row["error"] = json!({"kind": kind, "message": message});
                    }
                    if let Some(fault) = p.fault {
                        row["fault"] = json!(fault);
                        row["hit"] = json!(p.hit());
                    }
                    row
                })
                .collect();
            for p in summary.programs.iter().filter(|p| p.status == Status::MissingSpec) {
                eprintln!("warning: no specification for {}", p.stem);
            }
            let (hits, judged) = summary.hits();
            let mut report = Report::new("corpus", "");
            report.set("programs", json!(programs));
            report.set(
                "summary",
                json!({
                    "consistent": summary.consistent(),
                    "faulty": summary.faulty(),
                    "error": summary.errors(),
                    "missing_spec": summary.missing_specs(),
                    "fault_hits": hits,
                    "faults": judged,
                }),
            );
            let code = if summary.faulty() + summary.errors() == 0 { CONSISTENT } else { VIOLATED };
            Ok(done(&report, code))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let body = json!({"error": {"kind": "usage", "message": e.kind().to_string(), "detail": e.to_string()}});
            eprintln!("{}", render(&body, false));
            return ExitCode::from(USAGE);
        }
    };
    match execute(&cli) {
        Ok(out) => {
            // A closed pipe is not an analysis error.
            let _ = writeln!(std::io::stdout(), "{}", out.text.trim_end_matches('\n'));
            ExitCode::from(out.code)
        }
        Err(e) => {
            eprintln!("{}", render(&error_json(&e), cli.pretty));
            ExitCode::from(USAGE)
        }
    }
}
