//! Checking a method against a bound specification and ranking the
//! instructions that may explain a violation.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use rayon::prelude::*;

use crate::cfg::partition;
use crate::depflow::{
    contributing_pairs, dep_diff, extract_deps_with_origins, DepDiff, DepPair, DepSet, ExtractOptions, VarId,
};
use crate::error::{Error, Result};
use crate::interp::{
    check_lines, executed_offsets, run, run_with, value_table, ExecResult, LineCheck, Outcome, Override, RunOptions,
    TraceEntry, Trap, DEFAULT_STEP_LIMIT,
};
use crate::method::{Method, Program};
use crate::spec::{BoundSpec, BoundValueSpec, Specification};
use crate::value::{parse_f32, Kind, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CheckOptions {
    pub step_limit: usize,
    pub control_deps: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { step_limit: DEFAULT_STEP_LIMIT, control_deps: false }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SpecOutcome {
    Pass { got: Option<Value> },
    Fail { expected: Option<Value>, got: Option<Value> },
    Trap(Trap),
    StepLimit,
}

impl SpecOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, SpecOutcome::Pass { .. })
    }

    fn of(spec: &BoundValueSpec, result: &ExecResult) -> SpecOutcome {
        match &result.outcome {
            Outcome::Returned(got) if spec.accepts(*got) => SpecOutcome::Pass { got: *got },
            Outcome::Returned(got) => SpecOutcome::Fail { expected: spec.expected, got: *got },
            Outcome::Trapped(trap) => SpecOutcome::Trap(trap.clone()),
            Outcome::StepLimit => SpecOutcome::StepLimit,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum DepVerdict {
    Consistent,
    Inconsistent(DepDiff),
}

impl DepVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, DepVerdict::Consistent)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Verdict {
    /// One outcome per value spec, in file order.
    pub values: Vec<SpecOutcome>,
    pub deps: Option<DepVerdict>,
    pub lines: BTreeMap<u32, LineCheck>,
    pub blocks: BTreeMap<usize, LineCheck>,
}

impl Verdict {
    pub fn is_consistent(&self) -> bool {
        self.values.iter().all(SpecOutcome::passed)
            && self.deps.as_ref().is_none_or(DepVerdict::is_consistent)
            && self.lines.values().all(|c| *c == LineCheck::Ok)
            && self.blocks.values().all(|c| *c == LineCheck::Ok)
    }

    pub fn values_fail(&self) -> bool {
        !self.values.iter().all(SpecOutcome::passed)
    }
}

/// The method a specification names.
pub fn select_method<'a>(program: &'a Program, spec: &Specification) -> Result<&'a Method> {
    program.method(&spec.method).ok_or_else(|| Error::UnknownMethod(spec.method.clone()))
}

fn run_spec(method: &Method, spec: &BoundValueSpec, step_limit: usize, over: Option<Override>) -> Result<SpecOutcome> {
    let options = RunOptions { step_limit, override_value: over, record_trace: false };
    Ok(SpecOutcome::of(spec, &run_with(method, &spec.inputs, &options)?))
}

pub fn check_values(method: &Method, spec: &BoundSpec, step_limit: usize) -> Result<Vec<SpecOutcome>> {
    spec.value_specs.iter().map(|s| run_spec(method, s, step_limit, None)).collect()
}

/// Dependency verdict, or `None` when the specification has no
/// dependency part.
pub fn check_deps(method: &Method, spec: &BoundSpec, control_deps: bool) -> Result<Option<DepVerdict>> {
    let Some(expected) = &spec.dep_spec else { return Ok(None) };
    let computed: DepSet = extract_deps_with_origins(method, ExtractOptions { control_deps })?.into_keys().collect();
    let diff = dep_diff(&computed, expected);
    Ok(Some(if diff.is_consistent() { DepVerdict::Consistent } else { DepVerdict::Inconsistent(diff) }))
}

/// Inputs for the run that per-line and per-block expectations refer to.
fn reference_inputs(method: &Method, spec: &BoundSpec) -> Result<Vec<Value>> {
    match spec.value_specs.first() {
        Some(first) => Ok(first.inputs.clone()),
        None if method.params.is_empty() => Ok(Vec::new()),
        None => Err(Error::Input("per-line or per-block expectations need a value spec to supply inputs".into())),
    }
}

/// Values produced by the block's instructions during its last execution.
fn last_block_values(trace: &[TraceEntry], start: u32, end: u32) -> Option<Vec<Value>> {
    let entered = trace.iter().rposition(|e| e.offset == start)?;
    let mut values = Vec::new();
    for e in &trace[entered..] {
        if e.offset < start || e.offset > end {
            break;
        }
        values.extend(e.produced());
        if e.offset == end {
            break;
        }
    }
    Some(values)
}

pub fn check(method: &Method, spec: &BoundSpec, options: CheckOptions) -> Result<Verdict> {
    let values = check_values(method, spec, options.step_limit)?;
    let deps = check_deps(method, spec, options.control_deps)?;
    let mut lines = BTreeMap::new();
    let mut blocks = BTreeMap::new();
    if !spec.per_line.is_empty() || !spec.per_block.is_empty() {
        let inputs = reference_inputs(method, spec)?;
        let result = run(method, &inputs, options.step_limit)?;
        lines = check_lines(&value_table(&result.trace), &spec.per_line);
        let cfg = partition(method);
        for (&id, want) in &spec.per_block {
            let block = &cfg.blocks[id];
            let check = match last_block_values(&result.trace, block.start, block.end) {
                None => LineCheck::NotExecuted,
                Some(got) if &got == want => LineCheck::Ok,
                Some(got) => LineCheck::Mismatch { expected: want.clone(), got },
            };
            blocks.insert(id, check);
        }
    }
    Ok(Verdict { values, deps, lines, blocks })
}

/// Replacement values tried by value localization.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ProbeSet(BTreeSet<Value>);

impl ProbeSet {
    /// Expected outputs, spec inputs, method constants and the unit
    /// values of both kinds.
    pub fn for_spec(method: &Method, spec: &BoundSpec) -> ProbeSet {
        let mut set = BTreeSet::new();
        for s in &spec.value_specs {
            set.extend(s.expected);
            set.extend(s.inputs.iter().copied());
        }
        set.extend(method.code.iter().filter_map(|i| i.constant()));
        set.extend(spec.per_line.values().flatten().copied());
        set.extend(spec.per_block.values().flatten().copied());
        for unit in [-1, 0, 1] {
            set.insert(Value::Int(unit));
            set.insert(Value::Float(unit as f32));
        }
        ProbeSet(set)
    }

    pub fn extend(&mut self, values: impl IntoIterator<Item = Value>) {
        self.0.extend(values);
    }

    pub fn contains(&self, value: Value) -> bool {
        self.0.contains(&value)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn of_kind(&self, kind: Kind) -> impl Iterator<Item = Value> + '_ {
        self.0.iter().copied().filter(move |v| v.kind() == kind)
    }
}

/// Parses one probe literal. Integer text yields both an int and the
/// equal float; anything else must be a float.
pub fn parse_probe(text: &str) -> Result<Vec<Value>> {
    let text = text.trim();
    if let Ok(i) = text.parse::<i32>() {
        return Ok(vec![Value::Int(i), Value::Float(i as f32)]);
    }
    parse_f32(text)
        .map(|f| vec![Value::Float(f)])
        .ok_or_else(|| Error::Input(format!("`{text}` is not a probe value")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Value,
    Dependency,
    Merged,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Value => "value",
            Mode::Dependency => "dependency",
            Mode::Merged => "merged",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Candidate {
    pub offset: u32,
    /// In `[0, 1]`.
    pub score: f64,
    /// The value whose override repaired every failing spec.
    pub probe: Option<Value>,
    pub evidence: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Diagnosis {
    pub method: String,
    pub mode: Mode,
    /// Descending score, then ascending offset.
    pub candidates: Vec<Candidate>,
}

impl Diagnosis {
    fn new(method: &str, mode: Mode, mut candidates: Vec<Candidate>) -> Diagnosis {
        candidates.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.offset.cmp(&b.offset)));
        Diagnosis { method: method.to_owned(), mode, candidates }
    }

    pub fn offsets(&self) -> impl Iterator<Item = u32> + '_ {
        self.candidates.iter().map(|c| c.offset)
    }

    pub fn contains(&self, offset: u32) -> bool {
        self.offsets().any(|o| o == offset)
    }
}

/// Single-fault value localization: an executed instruction is a
/// candidate when replacing the value it produces by one probe, at every
/// execution, makes every failing spec pass and keeps the passing ones.
pub fn localize_value(method: &Method, spec: &BoundSpec, probes: &ProbeSet, step_limit: usize) -> Result<Diagnosis> {
    let baseline = check_values(method, spec, step_limit)?;
    let failing: Vec<&BoundValueSpec> =
        spec.value_specs.iter().zip(&baseline).filter(|(_, o)| !o.passed()).map(|(s, _)| s).collect();
    if failing.is_empty() {
        return Err(Error::NoFailingSpec);
    }
    let passing: Vec<&BoundValueSpec> =
        spec.value_specs.iter().zip(&baseline).filter(|(_, o)| o.passed()).map(|(s, _)| s).collect();

    let mut executed = BTreeSet::new();
    for s in &failing {
        executed.extend(executed_offsets(method, &s.inputs, step_limit)?);
    }
    let sites: Vec<(u32, Kind)> = executed
        .into_iter()
        .filter_map(|offset| Some((offset, method.instruction_at(offset)?.opcode.produced_kind()?)))
        .collect();

    let total = spec.value_specs.len();
    let all_pass = |specs: &[&BoundValueSpec], over: Override| -> Result<bool> {
        for s in specs {
            if !run_spec(method, s, step_limit, Some(over))?.passed() {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let found: Vec<Option<Candidate>> = sites
        .par_iter()
        .map(|&(offset, kind)| -> Result<Option<Candidate>> {
            for value in probes.of_kind(kind) {
                let over = Override { offset, value };
                if all_pass(&failing, over)? && all_pass(&passing, over)? {
                    return Ok(Some(Candidate {
                        offset,
                        score: failing.len() as f64 / total as f64,
                        probe: Some(value),
                        evidence: format!(
                            "producing {value} fixes {} failing spec(s) and breaks none of {} passing",
                            failing.len(),
                            passing.len()
                        ),
                    }));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    Ok(Diagnosis::new(&method.name, Mode::Value, found.into_iter().flatten().collect()))
}

/// Instructions that load, store or return `var`.
fn touching(method: &Method, var: VarId) -> BTreeSet<u32> {
    let sites = method.return_sites();
    method
        .code
        .iter()
        .filter(|i| match var {
            VarId::Local(index) => {
                (i.opcode.is_load() || i.opcode.is_store()) && i.local_index() == Some(index)
            }
            VarId::Output(k) => sites.get(k as usize - 1) == Some(&i.offset),
        })
        .map(|i| i.offset)
        .collect()
}

/// Dependency localization. Every mismatching pair links to a set of
/// instructions: for an extra pair, the generators of the base pairs it
/// is derived from; for a missing pair, the instructions touching its
/// variables and the generators of base pairs sharing one of them. An
/// instruction scores the fraction of mismatches linked to it.
pub fn localize_deps(
    method: &Method,
    spec: &BoundSpec,
    control_deps: bool,
    render: impl Fn(&DepPair) -> String,
) -> Result<Diagnosis> {
    let Some(expected) = &spec.dep_spec else { return Err(Error::ConsistentSpec) };
    let origins = extract_deps_with_origins(method, ExtractOptions { control_deps })?;
    let base: DepSet = origins.keys().copied().collect();
    let diff = dep_diff(&base, expected);
    if diff.is_consistent() {
        return Err(Error::ConsistentSpec);
    }

    let mut links: BTreeMap<u32, Vec<String>> = BTreeMap::new();
    let mut link = |offsets: BTreeSet<u32>, label: String| {
        for o in offsets {
            links.entry(o).or_default().push(label.clone());
        }
    };
    for pair in diff.extra.iter() {
        let offsets = contributing_pairs(&base, pair).into_iter().flat_map(|p| origins[p].iter().copied()).collect();
        link(offsets, format!("extra {}", render(pair)));
    }
    for pair in diff.missing.iter() {
        let vars = [pair.left, pair.right];
        let mut offsets: BTreeSet<u32> = vars.iter().flat_map(|&v| touching(method, v)).collect();
        for (p, from) in &origins {
            if vars.iter().any(|&v| p.mentions(v)) {
                offsets.extend(from);
            }
        }
        link(offsets, format!("missing {}", render(pair)));
    }

    let total = (diff.extra.len() + diff.missing.len()) as f64;
    let candidates = links
        .into_iter()
        .map(|(offset, labels)| Candidate {
            offset,
            score: labels.len() as f64 / total,
            probe: None,
            evidence: labels.join("; "),
        })
        .collect();
    Ok(Diagnosis::new(&method.name, Mode::Dependency, candidates))
}

/// Union of two diagnoses of one method. An offset in both scores
/// `1 - (1 - a)(1 - b)`.
pub fn merge_diagnoses(value: &Diagnosis, deps: &Diagnosis) -> Result<Diagnosis> {
    if value.method != deps.method {
        return Err(Error::MethodMismatch(value.method.clone(), deps.method.clone()));
    }
    if deps.candidates.is_empty() {
        return Ok(value.clone());
    }
    if value.candidates.is_empty() {
        return Ok(deps.clone());
    }
    let mut merged: BTreeMap<u32, Candidate> = value.candidates.iter().map(|c| (c.offset, c.clone())).collect();
    for c in &deps.candidates {
        merged
            .entry(c.offset)
            .and_modify(|m| {
                m.score = 1.0 - (1.0 - m.score) * (1.0 - c.score);
                m.evidence = format!("{}; {}", m.evidence, c.evidence);
                m.probe = m.probe.or(c.probe);
            })
            .or_insert_with(|| c.clone());
    }
    Ok(Diagnosis::new(&value.method, Mode::Merged, merged.into_values().collect()))
}

/// Offsets whose per-line expectation failed; each scores 1.
fn line_candidates(method: &Method, verdict: &Verdict) -> Diagnosis {
    let candidates = verdict
        .lines
        .iter()
        .filter_map(|(&offset, check)| match check {
            LineCheck::Mismatch { expected, got } => Some(Candidate {
                offset,
                score: 1.0,
                probe: None,
                evidence: format!("line produced {} instead of {}", join(got), join(expected)),
            }),
            _ => None,
        })
        .collect();
    Diagnosis::new(&method.name, Mode::Value, candidates)
}

fn join(values: &[Value]) -> String {
    let parts: Vec<String> = values.iter().map(Value::to_string).collect();
    format!("[{}]", parts.join(", "))
}

#[derive(Clone, Debug)]
pub struct LocalizeOptions {
    pub check: CheckOptions,
    /// Added to the default probe set.
    pub extra_probes: Vec<Value>,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        LocalizeOptions { check: CheckOptions::default(), extra_probes: Vec::new() }
    }
}

/// Runs every localization the verdict calls for and merges them.
/// `None` when the verdict is consistent.
pub fn diagnose(method: &Method, spec: &BoundSpec, verdict: &Verdict, options: &LocalizeOptions) -> Result<Option<Diagnosis>> {
    if verdict.is_consistent() {
        return Ok(None);
    }
    let mut result = line_candidates(method, verdict);
    let mut parts = usize::from(!result.candidates.is_empty());
    if verdict.values_fail() {
        parts += 1;
        let mut probes = ProbeSet::for_spec(method, spec);
        probes.extend(options.extra_probes.iter().copied());
        let value = localize_value(method, spec, &probes, options.check.step_limit)?;
        result = merge_diagnoses(&result, &value)?;
    }
    if verdict.deps.as_ref().is_some_and(|d| !d.is_consistent()) {
        parts += 1;
        let binding = &spec.binding;
        let render = |p: &DepPair| {
            let [l, r, k] = binding.render(p);
            format!("({l},{r}) {k}")
        };
        let deps = localize_deps(method, spec, options.check.control_deps, render)?;
        result = merge_diagnoses(&result, &deps)?;
    }
    if parts > 1 {
        result.mode = Mode::Merged;
    }
    Ok(Some(result))
}

impl fmt::Display for Diagnosis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} ({})", self.method, self.mode.as_str())?;
        for c in &self.candidates {
            writeln!(f, "  {:>5}  {:.3}  {}", c.offset, c.score, c.evidence)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::spec::parse_spec;

    fn f(x: f32) -> Value {
        Value::Float(x)
    }

    fn bound(text: &str, method: &Method) -> BoundSpec {
        parse_spec(text).unwrap().bind(method).unwrap()
    }

    fn plain(p: &DepPair) -> String {
        p.to_string()
    }

    fn diag(mode: Mode, items: &[(u32, f64)]) -> Diagnosis {
        let candidates =
            items.iter().map(|&(offset, score)| Candidate { offset, score, probe: None, evidence: String::new() }).collect();
        Diagnosis::new("m", mode, candidates)
    }

    #[test]
    fn maxf_passes_its_spec() {
        let m = fixtures::maxf();
        let spec = bound(fixtures::MAXF_SPEC, &m);
        let verdict = check(&m, &spec, CheckOptions::default()).unwrap();
        assert_eq!(verdict.values[0], SpecOutcome::Pass { got: Some(f(3.0)) });
        assert_eq!(verdict.deps, Some(DepVerdict::Consistent));
        assert!(verdict.is_consistent());
    }

    #[test]
    fn wrong_expectation_fails() {
        let m = fixtures::maxf();
        let spec = bound(r#"{"method":"maxf","value_specs":[{"inputs":[2.0,3.0],"expected":4.0}]}"#, &m);
        let outcomes = check_values(&m, &spec, 100).unwrap();
        assert_eq!(outcomes, vec![SpecOutcome::Fail { expected: Some(f(4.0)), got: Some(f(3.0)) }]);
    }

    #[test]
    fn deps_only_spec_defers_to_dep_verdict() {
        let m = fixtures::maxf();
        let spec = bound(r#"{"method":"maxf","dep_spec":[]}"#, &m);
        let verdict = check(&m, &spec, CheckOptions::default()).unwrap();
        assert!(verdict.values.is_empty());
        assert!(matches!(verdict.deps, Some(DepVerdict::Inconsistent(_))));
        assert!(!verdict.is_consistent());
    }

    #[test]
    fn mutant_deps_are_inconsistent() {
        let m = fixtures::maxf_mutant();
        let spec = bound(fixtures::MAXF_SPEC, &m);
        let Some(DepVerdict::Inconsistent(diff)) = check_deps(&m, &spec, false).unwrap() else { panic!() };
        let (n1, n2, o1) = (VarId::Local(0), VarId::Local(1), VarId::Output(1));
        assert_eq!(diff.missing, [DepPair::assign(o1, n1)].into_iter().collect());
        assert_eq!(diff.extra, [DepPair::assign(o1, n2)].into_iter().collect());
        let d = localize_deps(&m, &spec, false, plain).unwrap();
        assert!(d.contains(6), "{d}");
        assert_eq!(d.mode, Mode::Dependency);
    }

    #[test]
    fn empty_programs_agree_with_empty_spec() {
        let m = fixtures::assemble_one(".method k () I\niconst_1\nireturn\n");
        let spec = bound(r#"{"method":"k","dep_spec":[]}"#, &m);
        assert_eq!(check_deps(&m, &spec, false).unwrap(), Some(DepVerdict::Consistent));
        assert_eq!(localize_deps(&m, &spec, false, plain).unwrap_err(), Error::ConsistentSpec);
    }

    #[test]
    fn chain_missing_pair_implicates_both_stores() {
        let m = fixtures::assemble_one(
            ".method chain (III) V\n.names 0=a 1=b 2=c\niload_1\nistore_0\niload_2\nistore_1\nreturn\n",
        );
        let spec = bound(r#"{"method":"chain","names":{"0":"a","1":"b","2":"c"},"dep_spec":[["a","b","assign"],["b","c","assign"],["a","c","assign"]]}"#, &m);
        // The method already derives (a,c); ask for a spec missing it.
        let mut without = spec.clone();
        without.dep_spec = Some([DepPair::assign(VarId::Local(0), VarId::Local(1))].into_iter().collect());
        let d = localize_deps(&m, &without, false, plain).unwrap();
        assert!(d.contains(1) && d.contains(3), "{d}");
        assert!(check_deps(&m, &spec, false).unwrap().unwrap().is_consistent());
    }

    #[test]
    fn initialisation_bug_is_localised_with_expected_probe() {
        let m = fixtures::maxf_init_buggy();
        let spec = bound(fixtures::MAXF_INIT_SPEC, &m);
        let verdict = check(&m, &spec, CheckOptions::default()).unwrap();
        assert_eq!(verdict.values[0], SpecOutcome::Fail { expected: Some(f(4.0)), got: Some(f(3.0)) });
        let probes = ProbeSet::for_spec(&m, &spec);
        assert!(probes.contains(f(4.0)));
        let d = localize_value(&m, &spec, &probes, 1000).unwrap();
        let c = d.candidates.iter().find(|c| c.offset == 0).expect("offset 0 is a candidate");
        assert!(c.evidence.contains("producing 4.0"), "{}", c.evidence);
    }

    #[test]
    fn consistent_value_spec_has_nothing_to_localise() {
        let m = fixtures::assemble_one(".method k () F\nfconst_2\nfreturn\n");
        let spec = bound(r#"{"method":"k","value_specs":[{"inputs":[],"expected":2.0}]}"#, &m);
        let probes = ProbeSet::for_spec(&m, &spec);
        assert_eq!(localize_value(&m, &spec, &probes, 100).unwrap_err(), Error::NoFailingSpec);
    }

    #[test]
    fn overriding_the_returned_load_fixes_maxf() {
        let m = fixtures::maxf();
        let spec = bound(r#"{"method":"maxf","value_specs":[{"inputs":[2.0,3.0],"expected":4.0}]}"#, &m);
        let d = localize_value(&m, &spec, &ProbeSet::for_spec(&m, &spec), 100).unwrap();
        assert!(d.contains(8), "{d}");
        assert!(!d.contains(6));
        assert!(d.candidates.iter().all(|c| c.score == 1.0));
    }

    #[test]
    fn passing_specs_filter_candidates() {
        let m = fixtures::maxf();
        // Forcing offset 8 to 4.0 would break the second spec.
        let spec = bound(
            r#"{"method":"maxf","value_specs":[{"inputs":[2.0,3.0],"expected":4.0},{"inputs":[1.0,2.0],"expected":2.0}]}"#,
            &m,
        );
        let d = localize_value(&m, &spec, &ProbeSet::for_spec(&m, &spec), 100).unwrap();
        assert!(!d.contains(8), "{d}");
    }

    #[test]
    fn merge_combines_scores() {
        let merged = merge_diagnoses(&diag(Mode::Value, &[(6, 0.5)]), &diag(Mode::Dependency, &[(6, 0.5)])).unwrap();
        assert_eq!(merged.candidates.len(), 1);
        assert_eq!(merged.candidates[0].score, 0.75);
        let x = diag(Mode::Value, &[(3, 0.5), (1, 0.25)]);
        assert_eq!(merge_diagnoses(&x, &diag(Mode::Dependency, &[])).unwrap(), x);
        let both = merge_diagnoses(&diag(Mode::Value, &[(9, 0.5)]), &diag(Mode::Dependency, &[(2, 0.5), (4, 1.0)])).unwrap();
        assert_eq!(both.offsets().collect::<Vec<_>>(), vec![4, 2, 9]);
        let mut other = diag(Mode::Dependency, &[]);
        other.method = "n".into();
        assert!(matches!(merge_diagnoses(&x, &other), Err(Error::MethodMismatch(..))));
    }

    #[test]
    fn probe_literals() {
        assert_eq!(parse_probe("7").unwrap(), vec![Value::Int(7), f(7.0)]);
        assert_eq!(parse_probe("4.0").unwrap(), vec![f(4.0)]);
        assert!(parse_probe("x").is_err());
    }

    #[test]
    fn per_line_and_block_checks() {
        let m = fixtures::maxf();
        let spec = bound(
            r#"{"method":"maxf","value_specs":[{"inputs":[2.0,3.0],"expected":3.0}],
                "block_spec":{"per_line":{"8":[4.0],"2":[-1]},"per_block":{"0":[2.0,3.0,-1],"2":[3.0],"1":[2.0]}}}"#,
            &m,
        );
        let verdict = check(&m, &spec, CheckOptions::default()).unwrap();
        assert_eq!(verdict.lines[&2], LineCheck::Ok);
        assert_eq!(verdict.lines[&8], LineCheck::Mismatch { expected: vec![f(4.0)], got: vec![f(3.0)] });
        assert_eq!(verdict.blocks[&0], LineCheck::Ok);
        assert_eq!(verdict.blocks[&1], LineCheck::NotExecuted);
        assert_eq!(verdict.blocks[&2], LineCheck::Ok);
        let d = diagnose(&m, &spec, &verdict, &LocalizeOptions::default()).unwrap().unwrap();
        assert_eq!(d.candidates[0].offset, 8);
    }

    #[test]
    fn traps_count_as_failures() {
        let m = fixtures::assemble_one(".method d (I) I\n.names 0=x\niconst_1\niload_0\nidiv\nireturn\n");
        let spec = bound(r#"{"method":"d","value_specs":[{"inputs":[0],"expected":1}]}"#, &m);
        let outcomes = check_values(&m, &spec, 100).unwrap();
        assert!(matches!(outcomes[0], SpecOutcome::Trap(Trap::DivideByZero { offset: 2 })));
        let d = localize_value(&m, &spec, &ProbeSet::for_spec(&m, &spec), 100).unwrap();
        assert!(d.contains(1), "{d}");
    }

    #[test]
    fn diagnosis_is_deterministic() {
        let m = fixtures::maxf_mutant();
        let spec = bound(fixtures::MAXF_SPEC, &m);
        let verdict = check(&m, &spec, CheckOptions::default()).unwrap();
        let a = diagnose(&m, &spec, &verdict, &LocalizeOptions::default()).unwrap().unwrap();
        let b = diagnose(&m, &spec, &verdict, &LocalizeOptions::default()).unwrap().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mode, Mode::Merged);
        assert!(a.contains(6));
        for w in a.candidates.windows(2) {
            assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].offset < w[1].offset));
        }
    }
}
