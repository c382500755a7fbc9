//! Canonical JSON rendering of analysis results.
//!
//! Object keys come out sorted and float32 values use the shortest
//! decimal that parses back to the same bits, so equal reports print to
//! equal bytes. Non-finite floats have no JSON number form and are
//! written as strings (`"NaN"`, `"inf"`, `"-inf"`).

use serde_json::{json, Map, Number, Value as Json};

use crate::depflow::DepSet;
use crate::error::Error;
use crate::interp::{ExecResult, LineCheck, Outcome, TraceEntry, ValueTable};
use crate::localize::{DepVerdict, Diagnosis, SpecOutcome, Verdict};
use crate::spec::{Binding, BoundSpec};
use crate::value::{format_f32, Value};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub fn value_json(value: Value) -> Json {
    match value {
        Value::Int(i) => Json::from(i),
        Value::Float(f) if f.is_finite() => {
            Json::Number(format_f32(f).parse::<Number>().expect("finite float text is a JSON number"))
        }
        Value::Float(f) => Json::String(format_f32(f)),
    }
}

fn values_json(values: &[Value]) -> Json {
    Json::Array(values.iter().copied().map(value_json).collect())
}

fn optional_json(value: Option<Value>) -> Json {
    value.map_or(Json::Null, value_json)
}

pub fn deps_json(deps: &DepSet, binding: &Binding) -> Json {
    Json::Array(deps.iter().map(|p| json!(binding.render(p))).collect())
}

pub fn outcome_json(outcome: &SpecOutcome) -> Json {
    match outcome {
        SpecOutcome::Pass { got } => json!({"status": "pass", "got": optional_json(*got)}),
        SpecOutcome::Fail { expected, got } => {
            json!({"status": "fail", "expected": optional_json(*expected), "got": optional_json(*got)})
        }
        SpecOutcome::Trap(trap) => json!({"status": "trap", "reason": trap.name(), "detail": trap.to_string()}),
        SpecOutcome::StepLimit => json!({"status": "step-limit"}),
    }
}

pub fn dep_verdict_json(verdict: &DepVerdict, binding: &Binding) -> Json {
    match verdict {
        DepVerdict::Consistent => json!({"status": "consistent"}),
        DepVerdict::Inconsistent(diff) => json!({
            "status": "inconsistent",
            "missing": deps_json(&diff.missing, binding),
            "extra": deps_json(&diff.extra, binding),
        }),
    }
}

fn line_json(check: &LineCheck) -> Json {
    match check {
        LineCheck::Ok => json!({"status": "ok"}),
        LineCheck::Mismatch { expected, got } => {
            json!({"status": "mismatch", "expected": values_json(expected), "got": values_json(got)})
        }
        LineCheck::NotExecuted => json!({"status": "not-executed"}),
    }
}

pub fn diagnosis_json(diagnosis: &Diagnosis) -> Json {
    let candidates: Vec<Json> = diagnosis
        .candidates
        .iter()
        .map(|c| {
            let mut row = json!({"offset": c.offset, "score": c.score, "evidence": c.evidence});
            if let Some(probe) = c.probe {
                row["probe"] = value_json(probe);
            }
            row
        })
        .collect();
    json!({"method": diagnosis.method, "mode": diagnosis.mode.as_str(), "candidates": candidates})
}

pub fn value_table_json(table: &ValueTable) -> Json {
    let rows: Map<String, Json> = table
        .iter()
        .map(|(offset, cells)| {
            let cells = cells.iter().map(|c| json!({"step": c.step, "values": values_json(&c.values)})).collect();
            (offset.to_string(), Json::Array(cells))
        })
        .collect();
    Json::Object(rows)
}

pub fn trace_json(trace: &[TraceEntry]) -> Json {
    let rows = trace
        .iter()
        .map(|e| {
            let mut row = json!({
                "step": e.step,
                "offset": e.offset,
                "mnemonic": e.mnemonic(),
                "popped": values_json(&e.popped),
                "pushed": values_json(&e.pushed),
            });
            if let Some((index, value)) = e.local_write {
                row["local_write"] = json!({"index": index, "value": value_json(value)});
            }
            row
        })
        .collect();
    Json::Array(rows)
}

pub fn outcome_of_run_json(result: &ExecResult) -> Json {
    match &result.outcome {
        Outcome::Returned(value) => json!({"status": "returned", "value": optional_json(*value)}),
        Outcome::Trapped(trap) => json!({"status": "trapped", "reason": trap.name(), "detail": trap.to_string()}),
        Outcome::StepLimit => json!({"status": "step-limit"}),
    }
}

pub fn error_json(error: &Error) -> Json {
    let mut body = json!({"kind": error.kind(), "message": error.to_string()});
    if let Some(location) = error.location() {
        body["location"] = Json::String(location);
    }
    json!({ "error": body })
}

/// A command's result, rendered by [`emit_report`].
#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub command: String,
    pub method: String,
    pub verdicts: Vec<Json>,
    pub fields: Map<String, Json>,
}

impl Report {
    pub fn new(command: &str, method: &str) -> Report {
        Report { command: command.to_owned(), method: method.to_owned(), verdicts: Vec::new(), fields: Map::new() }
    }

    pub fn set(&mut self, key: &str, value: Json) -> &mut Self {
        self.fields.insert(key.to_owned(), value);
        self
    }

    pub fn with_verdict(&mut self, verdict: &Verdict, spec: &BoundSpec) -> &mut Self {
        self.verdicts = verdict
            .values
            .iter()
            .zip(&spec.value_specs)
            .map(|(outcome, s)| {
                let mut row = outcome_json(outcome);
                row["inputs"] = values_json(&s.inputs);
                row
            })
            .collect();
        if let Some(deps) = &verdict.deps {
            self.set("dep_verdict", dep_verdict_json(deps, &spec.binding));
        }
        if !verdict.lines.is_empty() {
            let lines = verdict.lines.iter().map(|(o, c)| (o.to_string(), line_json(c))).collect();
            self.set("line_checks", Json::Object(lines));
        }
        if !verdict.blocks.is_empty() {
            let blocks = verdict.blocks.iter().map(|(b, c)| (b.to_string(), line_json(c))).collect();
            self.set("block_checks", Json::Object(blocks));
        }
        self.set("consistent", Json::Bool(verdict.is_consistent()))
    }

    pub fn with_diagnosis(&mut self, diagnosis: &Diagnosis) -> &mut Self {
        self.set("diagnosis", diagnosis_json(diagnosis))
    }

    pub fn with_value_table(&mut self, table: &ValueTable) -> &mut Self {
        self.set("value_table", value_table_json(table))
    }

    pub fn to_json(&self) -> Json {
        let mut map = self.fields.clone();
        map.insert("version".into(), Json::String(VERSION.into()));
        map.insert("command".into(), Json::String(self.command.clone()));
        map.insert("method".into(), Json::String(self.method.clone()));
        map.insert("verdicts".into(), Json::Array(self.verdicts.clone()));
        Json::Object(map)
    }
}

/// Canonical JSON text. `pretty` only adds two-space indentation.
pub fn emit_report(report: &Report, pretty: bool) -> String {
    render(&report.to_json(), pretty)
}

pub fn render(json: &Json, pretty: bool) -> String {
    let text = if pretty { serde_json::to_string_pretty(json) } else { serde_json::to_string(json) };
    text.expect("JSON values always serialize")
}
