//! The problem-file format: JSON with complex entries written as `[re, im]`
//! and matrices as row-major nested arrays.

use std::collections::{BTreeMap, BTreeSet};

use jbwcond::states::State;
use jbwcond::{AtomicAbelian, CMatrix, Event, Hermitian, Tolerances, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

/// A complex scalar as `[re, im]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Entry(pub f64, pub f64);

pub type RawMatrix = Vec<Vec<Entry>>;

/// The file as written, before any numeric validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(rename = "$schema", default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub dimension: usize,
    #[serde(default)]
    pub elements: BTreeMap<String, RawMatrix>,
    #[serde(default)]
    pub events: BTreeMap<String, RawMatrix>,
    #[serde(default)]
    pub atoms: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub states: BTreeMap<String, RawMatrix>,
    #[serde(default)]
    pub tasks: Vec<Task>,
}

/// One computation. Element arguments may name an element or an event.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "lowercase", deny_unknown_fields)]
pub enum Task {
    /// `mu(F|E)`.
    Condprob { state: String, event: String, given: String },
    /// State-independent `P(F|E)`.
    Objprob { event: String, given: String },
    /// `mu(X|M)` with `M` the named atoms, or their commutant.
    Condexp {
        state: String,
        element: String,
        algebra: String,
        #[serde(default)]
        commutant: bool,
    },
    /// State-independent `E(X|M)`.
    Objexp {
        element: String,
        algebra: String,
        #[serde(default)]
        commutant: bool,
    },
    /// `pi(X) = sum_i E_i X E_i`, with its structural checks.
    Globalce { element: String, algebra: String },
    /// Post-measurement state; cells default to the individual atoms.
    Measure {
        state: String,
        algebra: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cells: Option<Vec<Vec<usize>>>,
    },
    /// `M(X|B)`.
    Mofx { element: String, algebra: String },
}

impl Task {
    pub fn op(&self) -> &'static str {
        match self {
            Task::Condprob { .. } => "condprob",
            Task::Objprob { .. } => "objprob",
            Task::Condexp { .. } => "condexp",
            Task::Objexp { .. } => "objexp",
            Task::Globalce { .. } => "globalce",
            Task::Measure { .. } => "measure",
            Task::Mofx { .. } => "mofx",
        }
    }
}

const TOP_LEVEL: [&str; 8] = ["$schema", "description", "dimension", "elements", "events", "atoms", "states", "tasks"];

fn schema(pointer: impl Into<String>, message: impl Into<String>) -> CliError {
    CliError::Schema { pointer: pointer.into(), message: message.into() }
}

fn escape(key: &str) -> String {
    key.replace('~', "~0").replace('/', "~1")
}

fn check_matrix(v: &Value, n: usize, pointer: &str) -> Result<(), CliError> {
    let rows = v.as_array().ok_or_else(|| schema(pointer, "expected an array of rows"))?;
    if rows.len() != n {
        return Err(schema(pointer, format!("expected {n} rows, found {}", rows.len())));
    }
    for (r, row) in rows.iter().enumerate() {
        let p = format!("{pointer}/{r}");
        let cols = row.as_array().ok_or_else(|| schema(&p, "expected an array of entries"))?;
        if cols.len() != n {
            return Err(schema(&p, format!("expected {n} entries, found {}", cols.len())));
        }
        for (c, entry) in cols.iter().enumerate() {
            let p = format!("{p}/{c}");
            let pair = entry.as_array().ok_or_else(|| schema(&p, "expected [re, im]"))?;
            if pair.len() != 2 || !pair.iter().all(Value::is_number) {
                return Err(schema(&p, "expected [re, im] with two numbers"));
            }
        }
    }
    Ok(())
}

fn object<'a>(root: &'a serde_json::Map<String, Value>, key: &str) -> Result<Option<&'a serde_json::Map<String, Value>>, CliError> {
    match root.get(key) {
        None => Ok(None),
        Some(v) => v.as_object().map(Some).ok_or_else(|| schema(format!("/{key}"), "expected an object")),
    }
}

/// Structural validation with JSON-pointer diagnostics, then typed decoding.
pub fn parse(text: &str) -> Result<ProblemFile, CliError> {
    let value: Value = serde_json::from_str(text).map_err(|e| schema("", format!("invalid JSON: {e}")))?;
    let root = value.as_object().ok_or_else(|| schema("", "expected an object"))?;
    for key in root.keys() {
        if !TOP_LEVEL.contains(&key.as_str()) {
            return Err(schema(format!("/{}", escape(key)), "unknown field"));
        }
    }
    let n = root
        .get("dimension")
        .ok_or_else(|| schema("/dimension", "missing required field"))?
        .as_u64()
        .filter(|&n| n > 0)
        .ok_or_else(|| schema("/dimension", "expected a positive integer"))? as usize;

    let mut names = BTreeSet::new();
    for key in ["elements", "events", "states"] {
        if let Some(map) = object(root, key)? {
            for (name, m) in map {
                let p = format!("/{key}/{}", escape(name));
                if !names.insert(name.clone()) {
                    return Err(schema(p, format!("name '{name}' is used twice")));
                }
                check_matrix(m, n, &p)?;
            }
        }
    }
    if let Some(map) = object(root, "atoms")? {
        for (name, list) in map {
            let p = format!("/atoms/{}", escape(name));
            if !names.insert(name.clone()) {
                return Err(schema(p, format!("name '{name}' is used twice")));
            }
            let items = list.as_array().ok_or_else(|| schema(&p, "expected an array of event names"))?;
            for (i, item) in items.iter().enumerate() {
                let s = item.as_str().ok_or_else(|| schema(format!("{p}/{i}"), "expected an event name"))?;
                if !root.get("events").and_then(Value::as_object).is_some_and(|e| e.contains_key(s)) {
                    return Err(schema(format!("{p}/{i}"), format!("'{s}' is not a defined event")));
                }
            }
        }
    }
    if let Some(tasks) = root.get("tasks") {
        let tasks = tasks.as_array().ok_or_else(|| schema("/tasks", "expected an array"))?;
        for (i, t) in tasks.iter().enumerate() {
            let p = format!("/tasks/{i}");
            serde_json::from_value::<Task>(t.clone()).map_err(|e| schema(&p, e.to_string()))?;
        }
    }
    serde_json::from_value(value).map_err(|e| schema("", e.to_string()))
}

/// Validated numeric content.
#[derive(Debug)]
pub struct Problem {
    pub dimension: usize,
    pub elements: BTreeMap<String, Hermitian>,
    pub events: BTreeMap<String, Event>,
    pub algebras: BTreeMap<String, AtomicAbelian>,
    pub states: BTreeMap<String, State>,
    pub tasks: Vec<Task>,
}

fn to_matrix(raw: &RawMatrix) -> CMatrix {
    let n = raw.len();
    CMatrix::from_fn(n, n, |r, c| C64::new(raw[r][c].0, raw[r][c].1))
}

pub fn from_matrix(h: &Hermitian) -> RawMatrix {
    let m = h.matrix();
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| Entry(m[(r, c)].re, m[(r, c)].im)).collect()).collect()
}

fn numeric(name: &str, role: &str, e: jbwcond::Error) -> CliError {
    CliError::Numeric { name: name.to_string(), message: format!("{role} '{name}': {e}") }
}

impl Problem {
    /// Checks every matrix against its role: Hermitian elements, projection
    /// events, density-matrix states, and atoms forming a partition of unity.
    pub fn validate(file: &ProblemFile, tol: &Tolerances) -> Result<Problem, CliError> {
        let hermitian = |name: &str, role: &str, raw: &RawMatrix| {
            Hermitian::with_tolerance(to_matrix(raw), tol).map_err(|e| numeric(name, role, e))
        };
        let mut elements = BTreeMap::new();
        for (name, raw) in &file.elements {
            elements.insert(name.clone(), hermitian(name, "element", raw)?);
        }
        let mut events = BTreeMap::new();
        for (name, raw) in &file.events {
            let h = hermitian(name, "event", raw)?;
            events.insert(name.clone(), Event::with_tolerance(h, tol).map_err(|e| numeric(name, "event", e))?);
        }
        let mut states = BTreeMap::new();
        for (name, raw) in &file.states {
            let h = hermitian(name, "state", raw)?;
            states.insert(name.clone(), State::with_tolerance(h, tol).map_err(|e| numeric(name, "state", e))?);
        }
        let mut algebras = BTreeMap::new();
        for (name, list) in &file.atoms {
            let atoms = list.iter().map(|a| events[a].clone()).collect();
            let b = AtomicAbelian::with_tolerance(atoms, tol).map_err(|e| numeric(name, "atoms", e))?;
            algebras.insert(name.clone(), b);
        }
        Ok(Problem { dimension: file.dimension, elements, events, algebras, states, tasks: file.tasks.clone() })
    }

    pub fn element(&self, name: &str, pointer: &str) -> Result<Hermitian, CliError> {
        self.elements
            .get(name)
            .cloned()
            .or_else(|| self.events.get(name).map(|e| e.as_hermitian().clone()))
            .ok_or_else(|| schema(pointer, format!("'{name}' is not a defined element or event")))
    }

    pub fn event(&self, name: &str, pointer: &str) -> Result<&Event, CliError> {
        self.events.get(name).ok_or_else(|| schema(pointer, format!("'{name}' is not a defined event")))
    }

    pub fn state(&self, name: &str, pointer: &str) -> Result<&State, CliError> {
        self.states.get(name).ok_or_else(|| schema(pointer, format!("'{name}' is not a defined state")))
    }

    pub fn algebra(&self, name: &str, pointer: &str) -> Result<&AtomicAbelian, CliError> {
        self.algebras.get(name).ok_or_else(|| schema(pointer, format!("'{name}' is not a defined atom set")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const QUBIT: &str = r#"{
        "dimension": 2,
        "elements": {"X": [[[0,0],[1,0]],[[1,0],[0,0]]]},
        "events": {"E0": [[[1,0],[0,0]],[[0,0],[0,0]]], "E1": [[[0,0],[0,0]],[[0,0],[1,0]]]},
        "atoms": {"Z": ["E0", "E1"]},
        "states": {"tr": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]},
        "tasks": [{"op": "mofx", "element": "X", "algebra": "Z"}]
    }"#;

    #[test]
    fn parses_and_validates() {
        let f = parse(QUBIT).unwrap();
        let p = Problem::validate(&f, &Tolerances::DEFAULT).unwrap();
        assert_eq!(p.algebras["Z"].ranks(), vec![1, 1]);
        assert_eq!(p.tasks.len(), 1);
    }

    #[test]
    fn schema_errors_carry_pointers() {
        let bad = QUBIT.replace(r#""X": [[[0,0],[1,0]],[[1,0],[0,0]]]"#, r#""X": [[[0,0],[1,0]],[[1,0]]]"#);
        match parse(&bad) {
            Err(CliError::Schema { pointer, .. }) => assert_eq!(pointer, "/elements/X/1"),
            other => panic!("{other:?}"),
        }
        let bad = QUBIT.replace(r#""op": "mofx""#, r#""op": "nope""#);
        assert!(matches!(parse(&bad), Err(CliError::Schema { pointer, .. }) if pointer == "/tasks/0"));
        let bad = QUBIT.replace(r#""E0", "E1""#, r#""E0", "E7""#);
        assert!(matches!(parse(&bad), Err(CliError::Schema { pointer, .. }) if pointer == "/atoms/Z/1"));
    }

    #[test]
    fn numeric_errors_name_the_matrix() {
        let bad = QUBIT.replace(r#""tr": [[[0.5,0],[0,0]],[[0,0],[0.5,0]]]"#, r#""tr": [[[0.5,0],[1,0]],[[0,0],[0.5,0]]]"#);
        let f = parse(&bad).unwrap();
        match Problem::validate(&f, &Tolerances::DEFAULT) {
            Err(CliError::Numeric { name, .. }) => assert_eq!(name, "tr"),
            other => panic!("{other:?}"),
        }
    }
}
