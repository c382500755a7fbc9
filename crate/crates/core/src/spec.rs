//! Program specifications: expected values, dependency pairs and
//! per-line/per-block expectations, plus their JSON file format.
//!
//! ```json
//! {
//!   "method": "maxf",
//!   "names": {"0": "n1", "1": "n2"},
//!   "value_specs": [{"inputs": [2.0, 3.0], "expected": 3.0}],
//!   "dep_spec": [["n1", "n2", "compare"], ["O1", "n1", "assign"], ["O2", "n2", "assign"]],
//!   "block_spec": {"per_line": {"8": [3.0]}}
//! }
//! ```
//!
//! Numbers keep their source text until they are resolved against the
//! kinds of a concrete method, so float32 literals are rounded once.

use std::collections::{BTreeMap, BTreeSet};

use serde_json::{Map, Value as Json};

use crate::cfg::partition;
use crate::depflow::{DepKind, DepPair, DepSet, VarId};
use crate::error::{Error, Result};
use crate::method::Method;
use crate::value::{parse_f32, Kind, Value};

/// A numeric literal as written in the specification.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal(pub String);

impl Literal {
    pub fn resolve(&self, kind: Kind, path: &str) -> Result<Value> {
        let mismatch = |what: &str| Error::KindMismatch {
            path: path.to_owned(),
            message: format!("`{}` is not {what}", self.0),
        };
        match kind {
            Kind::Int => self.0.parse::<i32>().map(Value::Int).map_err(|_| mismatch("an int32 literal")),
            Kind::Float => parse_f32(&self.0).map(Value::Float).ok_or_else(|| mismatch("a float32 literal")),
        }
    }
}

impl From<&str> for Literal {
    fn from(s: &str) -> Self {
        Literal(s.to_owned())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValueSpec {
    pub inputs: Vec<Literal>,
    /// `None` for a void return.
    pub expected: Option<Literal>,
    /// Absolute tolerance for float results; bit-exact when absent.
    pub tolerance: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NamedDep {
    pub left: String,
    pub right: String,
    pub kind: DepKind,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BlockSpec {
    pub per_line: BTreeMap<u32, Vec<Literal>>,
    /// Values produced by a block's instructions on its last execution.
    pub per_block: BTreeMap<usize, Vec<Literal>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Specification {
    pub method: String,
    pub names: BTreeMap<u16, String>,
    pub value_specs: Vec<ValueSpec>,
    pub dep_spec: Option<Vec<NamedDep>>,
    pub block_spec: Option<BlockSpec>,
}

fn schema(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Schema { path: path.into(), message: message.into() }
}

fn literal(json: &Json, path: &str) -> Result<Literal> {
    match json {
        Json::Number(n) => Ok(Literal(n.to_string())),
        // Non-finite floats have no JSON number form.
        Json::String(s) if parse_f32(s).is_some_and(|f| !f.is_finite()) => Ok(Literal(s.clone())),
        _ => Err(schema(path, "expected a number")),
    }
}

fn array<'a>(json: &'a Json, path: &str) -> Result<&'a Vec<Json>> {
    json.as_array().ok_or_else(|| schema(path, "expected an array"))
}

fn object<'a>(json: &'a Json, path: &str, allowed: &[&str]) -> Result<&'a Map<String, Json>> {
    let map = json.as_object().ok_or_else(|| schema(path, "expected an object"))?;
    if let Some(key) = map.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(schema(format!("{path}.{key}"), "unknown key"));
    }
    Ok(map)
}

fn is_output_name(name: &str) -> bool {
    name.strip_prefix('O').is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
}

pub fn parse_spec(text: &str) -> Result<Specification> {
    let root: Json = serde_json::from_str(text).map_err(|e| schema("$", e.to_string()))?;
    let map = object(&root, "$", &["method", "names", "value_specs", "dep_spec", "block_spec"])?;

    let method = map
        .get("method")
        .and_then(Json::as_str)
        .ok_or_else(|| schema("$.method", "expected a method name"))?
        .to_owned();

    let mut names = BTreeMap::new();
    if let Some(json) = map.get("names") {
        let mut seen = BTreeSet::new();
        for (key, name) in object(json, "$.names", &[])
            .or_else(|_| json.as_object().ok_or_else(|| schema("$.names", "expected an object")))?
        {
            let path = format!("$.names.{key}");
            let index: u16 = key.parse().map_err(|_| schema(&path, "key must be a local index"))?;
            let name = name.as_str().ok_or_else(|| schema(&path, "expected a string"))?;
            if name.is_empty() || !name.chars().all(|c| c.is_alphanumeric() || c == '_') {
                return Err(schema(&path, format!("`{name}` is not an identifier")));
            }
            if is_output_name(name) {
                return Err(Error::ReservedName(name.to_owned()));
            }
            if !seen.insert(name.to_owned()) {
                return Err(Error::DuplicateName(name.to_owned()));
            }
            names.insert(index, name.to_owned());
        }
    }

    let mut value_specs = Vec::new();
    if let Some(json) = map.get("value_specs") {
        for (i, spec) in array(json, "$.value_specs")?.iter().enumerate() {
            let path = format!("$.value_specs[{i}]");
            let obj = object(spec, &path, &["inputs", "expected", "tolerance"])?;
            let inputs = match obj.get("inputs") {
                None => Vec::new(),
                Some(json) => array(json, &format!("{path}.inputs"))?
                    .iter()
                    .enumerate()
                    .map(|(j, v)| literal(v, &format!("{path}.inputs[{j}]")))
                    .collect::<Result<_>>()?,
            };
            let expected = match obj.get("expected") {
                None => return Err(schema(&path, "missing `expected` (use null for void)")),
                Some(Json::Null) => None,
                Some(v) => Some(literal(v, &format!("{path}.expected"))?),
            };
            let tolerance = match obj.get("tolerance") {
                None | Some(Json::Null) => None,
                Some(v) => {
                    let t = v.as_f64().filter(|t| *t >= 0.0 && t.is_finite());
                    Some(t.ok_or_else(|| schema(format!("{path}.tolerance"), "expected a non-negative number"))?)
                }
            };
            value_specs.push(ValueSpec { inputs, expected, tolerance });
        }
    }

    let dep_spec = match map.get("dep_spec") {
        None => None,
        Some(json) => Some(
            array(json, "$.dep_spec")?
                .iter()
                .enumerate()
                .map(|(i, triple)| {
                    let path = format!("$.dep_spec[{i}]");
                    let parts = array(triple, &path)?;
                    match parts.as_slice() {
                        [Json::String(l), Json::String(r), Json::String(k)] => {
                            let kind = DepKind::parse(k)
                                .ok_or_else(|| schema(format!("{path}[2]"), "kind must be assign or compare"))?;
                            Ok(NamedDep { left: l.clone(), right: r.clone(), kind })
                        }
                        _ => Err(schema(&path, "expected [left, right, kind]")),
                    }
                })
                .collect::<Result<Vec<_>>>()?,
        ),
    };

    let block_spec = match map.get("block_spec") {
        None => None,
        Some(json) => {
            let obj = object(json, "$.block_spec", &["per_line", "per_block"])?;
            let mut spec = BlockSpec::default();
            if let Some(lines) = obj.get("per_line") {
                let lines = lines.as_object().ok_or_else(|| schema("$.block_spec.per_line", "expected an object"))?;
                for (key, values) in lines {
                    let path = format!("$.block_spec.per_line.{key}");
                    let offset: u32 = key.parse().map_err(|_| schema(&path, "key must be an offset"))?;
                    let values = array(values, &path)?
                        .iter()
                        .enumerate()
                        .map(|(j, v)| literal(v, &format!("{path}[{j}]")))
                        .collect::<Result<_>>()?;
                    spec.per_line.insert(offset, values);
                }
            }
            if let Some(blocks) = obj.get("per_block") {
                let blocks = blocks.as_object().ok_or_else(|| schema("$.block_spec.per_block", "expected an object"))?;
                for (key, values) in blocks {
                    let path = format!("$.block_spec.per_block.{key}");
                    let id: usize = key.parse().map_err(|_| schema(&path, "key must be a block id"))?;
                    let values = array(values, &path)?
                        .iter()
                        .enumerate()
                        .map(|(j, v)| literal(v, &format!("{path}[{j}]")))
                        .collect::<Result<_>>()?;
                    spec.per_block.insert(id, values);
                }
            }
            Some(spec)
        }
    };

    if value_specs.is_empty() && dep_spec.is_none() && block_spec.is_none() {
        return Err(schema("$", "no specification content: expected value_specs, dep_spec or block_spec"));
    }
    Ok(Specification { method, names, value_specs, dep_spec, block_spec })
}

/// Identifier ↔ variable binding for one method.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Binding {
    /// One name per local slot `0..max_locals`.
    locals: Vec<String>,
    /// Return-instruction offsets; output `O<k>` is `outputs[k - 1]`.
    outputs: Vec<u32>,
}

impl Binding {
    pub fn name(&self, var: VarId) -> String {
        match var {
            VarId::Local(i) => self.locals.get(usize::from(i)).cloned().unwrap_or_else(|| format!("L{i}")),
            VarId::Output(k) => format!("O{k}"),
        }
    }

    pub fn resolve(&self, name: &str) -> Option<VarId> {
        if is_output_name(name) {
            let k: u32 = name[1..].parse().ok()?;
            return (k >= 1 && (k as usize) <= self.outputs.len()).then_some(VarId::Output(k));
        }
        self.locals.iter().position(|n| n == name).map(|i| VarId::Local(i as u16))
    }

    /// Offset of the return instruction behind `O<k>`.
    pub fn output_site(&self, k: u32) -> Option<u32> {
        self.outputs.get((k as usize).checked_sub(1)?).copied()
    }

    pub fn render(&self, pair: &DepPair) -> [String; 3] {
        [self.name(pair.left), self.name(pair.right), pair.kind.as_str().to_owned()]
    }

    pub fn resolve_deps(&self, deps: &[NamedDep]) -> Result<DepSet> {
        deps.iter()
            .map(|d| {
                let left = self.resolve(&d.left).ok_or_else(|| Error::UnboundName(d.left.clone()))?;
                let right = self.resolve(&d.right).ok_or_else(|| Error::UnboundName(d.right.clone()))?;
                Ok(DepPair::new(left, right, d.kind))
            })
            .collect()
    }
}

/// Binds `names` (falling back to the method's own local names, then to
/// `L<i>`) to local slots, and `O1..Ok` to return sites in textual order.
pub fn bind_names(names: &BTreeMap<u16, String>, method: &Method) -> Result<Binding> {
    let mut locals: Vec<String> = (0..method.max_locals)
        .map(|i| method.local_names.get(&i).cloned().unwrap_or_else(|| format!("L{i}")))
        .collect();
    for (&index, name) in names {
        if index >= method.max_locals {
            return Err(Error::IndexOutOfRange { index, max_locals: method.max_locals });
        }
        if is_output_name(name) {
            return Err(Error::ReservedName(name.clone()));
        }
        locals[usize::from(index)] = name.clone();
    }
    let mut seen = BTreeSet::new();
    for name in &locals {
        if is_output_name(name) {
            return Err(Error::ReservedName(name.clone()));
        }
        if !seen.insert(name) {
            return Err(Error::DuplicateName(name.clone()));
        }
    }
    Ok(Binding { locals, outputs: method.return_sites() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundValueSpec {
    pub inputs: Vec<Value>,
    pub expected: Option<Value>,
    pub tolerance: Option<f64>,
}

impl BoundValueSpec {
    /// Bit-exact, or within the absolute tolerance for floats.
    pub fn accepts(&self, got: Option<Value>) -> bool {
        match (self.expected, got, self.tolerance) {
            (Some(Value::Float(e)), Some(Value::Float(g)), Some(tol)) => {
                e.to_bits() == g.to_bits() || (f64::from(e) - f64::from(g)).abs() <= tol
            }
            (e, g, _) => e == g,
        }
    }
}

/// A specification resolved against one method.
#[derive(Clone, Debug)]
pub struct BoundSpec {
    pub binding: Binding,
    pub value_specs: Vec<BoundValueSpec>,
    pub dep_spec: Option<DepSet>,
    pub per_line: BTreeMap<u32, Vec<Value>>,
    pub per_block: BTreeMap<usize, Vec<Value>>,
}

impl Specification {
    pub fn bind(&self, method: &Method) -> Result<BoundSpec> {
        let binding = bind_names(&self.names, method)?;
        let value_specs = self
            .value_specs
            .iter()
            .enumerate()
            .map(|(i, spec)| {
                let path = format!("$.value_specs[{i}]");
                if spec.inputs.len() != method.params.len() {
                    return Err(Error::KindMismatch {
                        path: format!("{path}.inputs"),
                        message: format!("expected {} inputs, found {}", method.params.len(), spec.inputs.len()),
                    });
                }
                let inputs = spec
                    .inputs
                    .iter()
                    .zip(&method.params)
                    .enumerate()
                    .map(|(j, (lit, kind))| lit.resolve(*kind, &format!("{path}.inputs[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                let expected = match (&spec.expected, method.returns.value_kind()) {
                    (None, None) => None,
                    (Some(lit), Some(kind)) => Some(lit.resolve(kind, &format!("{path}.expected"))?),
                    (_, _) => {
                        return Err(Error::KindMismatch {
                            path: format!("{path}.expected"),
                            message: format!("method returns {:?}", method.returns),
                        })
                    }
                };
                Ok(BoundValueSpec { inputs, expected, tolerance: spec.tolerance })
            })
            .collect::<Result<Vec<_>>>()?;

        let dep_spec = self.dep_spec.as_deref().map(|d| binding.resolve_deps(d)).transpose()?;

        let mut per_line = BTreeMap::new();
        let mut per_block = BTreeMap::new();
        if let Some(blocks) = &self.block_spec {
            for (&offset, lits) in &blocks.per_line {
                let path = format!("$.block_spec.per_line.{offset}");
                let insn = method.instruction_at(offset).ok_or_else(|| Error::Schema {
                    path: path.clone(),
                    message: format!("{offset} is not an instruction offset"),
                })?;
                let kind = insn.opcode.produced_kind().ok_or_else(|| Error::Schema {
                    path: path.clone(),
                    message: format!("`{}` produces no value", insn.opcode),
                })?;
                let values = lits
                    .iter()
                    .enumerate()
                    .map(|(j, lit)| lit.resolve(kind, &format!("{path}[{j}]")))
                    .collect::<Result<Vec<_>>>()?;
                per_line.insert(offset, values);
            }
            if !blocks.per_block.is_empty() {
                let cfg = partition(method);
                for (&id, lits) in &blocks.per_block {
                    let path = format!("$.block_spec.per_block.{id}");
                    let block = cfg.blocks.get(id).ok_or_else(|| Error::Schema {
                        path: path.clone(),
                        message: format!("method has {} blocks", cfg.blocks.len()),
                    })?;
                    let kinds: Vec<Kind> = method.code[block.first..=block.last]
                        .iter()
                        .filter_map(|i| i.opcode.produced_kind())
                        .collect();
                    if kinds.len() != lits.len() {
                        return Err(Error::KindMismatch {
                            path,
                            message: format!("block produces {} values, {} given", kinds.len(), lits.len()),
                        });
                    }
                    let values = lits
                        .iter()
                        .zip(kinds)
                        .enumerate()
                        .map(|(j, (lit, kind))| lit.resolve(kind, &format!("{path}[{j}]")))
                        .collect::<Result<Vec<_>>>()?;
                    per_block.insert(id, values);
                }
            }
        }
        Ok(BoundSpec { binding, value_specs, dep_spec, per_line, per_block })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn parses_worked_example_spec() {
        let spec = parse_spec(fixtures::MAXF_SPEC).unwrap();
        assert_eq!(spec.method, "maxf");
        assert_eq!(spec.value_specs[0].inputs, vec![Literal::from("2.0"), Literal::from("3.0")]);
        assert_eq!(spec.value_specs[0].expected, Some(Literal::from("3.0")));
        assert_eq!(spec.dep_spec.as_ref().unwrap().len(), 3);
        let bound = spec.bind(&fixtures::maxf()).unwrap();
        assert_eq!(bound.value_specs[0].inputs, vec![Value::Float(2.0), Value::Float(3.0)]);
        assert_eq!(bound.dep_spec.unwrap().len(), 3);
    }

    #[test]
    fn rejects_spec_without_content() {
        let err = parse_spec(r#"{"method":"m"}"#).unwrap_err();
        assert!(matches!(&err, Error::Schema { path, .. } if path == "$"), "{err}");
        assert!(parse_spec(r#"{"method":"m","value_specs":[]}"#).is_err());
        assert!(parse_spec(r#"{"method":"m","dep_spec":[]}"#).is_ok());
        assert!(parse_spec(r#"{"method":"m","block_spec":{}}"#).is_ok());
    }

    #[test]
    fn schema_errors_carry_paths() {
        let err = parse_spec(r#"{"method":"m","value_specs":[{"inputs":[1,"x"],"expected":1}]}"#).unwrap_err();
        assert_eq!(err.location().as_deref(), Some("$.value_specs[0].inputs[1]"));
        let err = parse_spec(r#"{"method":"m","dep_spec":[["a","b","depends"]]}"#).unwrap_err();
        assert_eq!(err.location().as_deref(), Some("$.dep_spec[0][2]"));
        let err = parse_spec(r#"{"method":"m","dep_spec":[],"extra":1}"#).unwrap_err();
        assert_eq!(err.location().as_deref(), Some("$.extra"));
    }

    #[test]
    fn kind_mismatch_on_bind() {
        let spec = parse_spec(r#"{"method":"countdown","value_specs":[{"inputs":[2.5],"expected":3}]}"#).unwrap();
        let err = spec.bind(&fixtures::corpus_method("countdown")).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { .. }));
        assert_eq!(err.location().as_deref(), Some("$.value_specs[0].inputs[0]"));
    }

    #[test]
    fn tolerance_accepts_close_floats() {
        let spec = parse_spec(r#"{"method":"maxf","value_specs":[{"inputs":[2.0,3.0],"expected":3.0,"tolerance":0.001}]}"#)
            .unwrap();
        let bound = spec.bind(&fixtures::maxf()).unwrap();
        assert!(bound.value_specs[0].accepts(Some(Value::Float(3.0004))));
        assert!(!bound.value_specs[0].accepts(Some(Value::Float(3.002))));
        let exact = BoundValueSpec { tolerance: None, ..bound.value_specs[0].clone() };
        assert!(!exact.accepts(Some(Value::Float(3.0004))));
    }

    #[test]
    fn binds_worked_example_names() {
        let m = fixtures::maxf();
        let names = BTreeMap::from([(0, "n1".to_owned()), (1, "n2".to_owned())]);
        let b = bind_names(&names, &m).unwrap();
        assert_eq!(b.resolve("n1"), Some(VarId::Local(0)));
        assert_eq!(b.resolve("n2"), Some(VarId::Local(1)));
        assert_eq!(b.resolve("O1"), Some(VarId::Output(1)));
        assert_eq!(b.output_site(1), Some(7));
        assert_eq!(b.output_site(2), Some(9));
        assert_eq!(b.resolve("O3"), None);
    }

    #[test]
    fn default_local_names() {
        let mut m = fixtures::maxf();
        m.local_names.clear();
        let b = bind_names(&BTreeMap::new(), &m).unwrap();
        assert_eq!(b.name(VarId::Local(0)), "L0");
        assert_eq!(b.name(VarId::Local(1)), "L1");
    }

    #[test]
    fn binding_errors() {
        let m = fixtures::maxf();
        let err = bind_names(&BTreeMap::from([(5, "x".to_owned())]), &m).unwrap_err();
        assert_eq!(err, Error::IndexOutOfRange { index: 5, max_locals: 2 });
        let err = bind_names(&BTreeMap::from([(0, "n2".to_owned())]), &m).unwrap_err();
        assert_eq!(err, Error::DuplicateName("n2".into()));
        let err = parse_spec(r#"{"method":"m","names":{"0":"O1"},"dep_spec":[]}"#).unwrap_err();
        assert_eq!(err, Error::ReservedName("O1".into()));
        let b = bind_names(&BTreeMap::new(), &m).unwrap();
        let deps = [NamedDep { left: "zz".into(), right: "n1".into(), kind: DepKind::Assign }];
        assert_eq!(b.resolve_deps(&deps).unwrap_err(), Error::UnboundName("zz".into()));
    }

    #[test]
    fn binding_is_a_bijection() {
        for (name, m) in fixtures::corpus_methods() {
            let b = bind_names(&BTreeMap::new(), &m).unwrap();
            let vars = (0..m.max_locals)
                .map(VarId::Local)
                .chain((1..=m.return_sites().len() as u32).map(VarId::Output));
            for var in vars {
                assert_eq!(b.resolve(&b.name(var)), Some(var), "{name}");
            }
        }
    }

    #[test]
    fn block_expectations_resolve_by_produced_kind() {
        let spec = parse_spec(
            r#"{"method":"maxf","block_spec":{"per_line":{"2":[-1]},"per_block":{"2":[3.0]}}}"#,
        )
        .unwrap();
        let bound = spec.bind(&fixtures::maxf()).unwrap();
        assert_eq!(bound.per_line[&2], vec![Value::Int(-1)]);
        assert_eq!(bound.per_block[&2], vec![Value::Float(3.0)]);
        let bad = parse_spec(r#"{"method":"maxf","block_spec":{"per_line":{"4":[1]}}}"#).unwrap();
        assert!(matches!(bad.bind(&fixtures::maxf()), Err(Error::Schema { .. })));
    }
}
