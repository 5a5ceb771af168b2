//! On-disk file formats: models, scenarios, demand vectors, firing vectors and
//! flat technology/environmental problems.
//!
//! JSON is canonical. Every file carries `schema_version`; the only version
//! understood today is `"1"`. Structural checks (non-empty lists, positive
//! quantities, horizon length, durations) run during deserialization so that
//! failures are reported with the line and column at which parsing stopped.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::de::{self, Deserializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{FlowSide, ProcessKind, ResourceKind};

pub const SCHEMA_VERSION: &str = "1";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: syntax error: {message}")]
    Syntax {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}:{line}:{column}: schema violation: {message}")]
    Schema {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: csv record {record}: {message}")]
    Csv {
        path: PathBuf,
        record: u64,
        message: String,
    },
}

impl IngestError {
    pub fn is_io(&self) -> bool {
        matches!(self, IngestError::Io { .. })
    }
}

// ---------------------------------------------------------------------------
// Model file

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    #[serde(deserialize_with = "schema_version")]
    pub schema_version: String,
    #[serde(deserialize_with = "non_empty_operands")]
    pub operands: Vec<OperandSpec>,
    #[serde(deserialize_with = "non_empty_resources")]
    pub resources: Vec<ResourceSpec>,
    #[serde(deserialize_with = "non_empty_processes")]
    pub processes: Vec<ProcessSpec>,
    pub allocations: Vec<AllocationSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub buffer_overrides: Vec<BufferOverrideSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_overrides: Vec<WeightOverrideSpec>,
    /// Operand ids tracked as environmental aspects.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub aspects: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperandSpec {
    pub id: String,
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResourceSpec {
    pub id: String,
    pub name: String,
    pub kind: ResourceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProcessSpec {
    pub id: String,
    pub name: String,
    pub kind: ProcessKind,
    #[serde(default)]
    pub inputs: Vec<FlowSpec>,
    #[serde(default)]
    pub outputs: Vec<FlowSpec>,
    pub primary_output: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSpec {
    pub operand: String,
    #[serde(deserialize_with = "positive_quantity")]
    pub quantity: f64,
    /// Defaults to the operand's declared unit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocationSpec {
    pub process: String,
    pub resource: String,
}

/// Pins one operand of one capability to a buffer other than the executing
/// resource. Without `side` the pin applies to both pulls and injects.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BufferOverrideSpec {
    pub process: String,
    pub resource: String,
    pub operand: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<FlowSide>,
    pub buffer: String,
}

/// Replaces the per-execution quantity of one flow for one capability.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightOverrideSpec {
    pub process: String,
    pub resource: String,
    pub operand: String,
    pub side: FlowSide,
    #[serde(deserialize_with = "positive_quantity")]
    pub quantity: f64,
}

// ---------------------------------------------------------------------------
// Scenario file

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FiringMode {
    Instantaneous,
    Duration,
}

impl fmt::Display for FiringMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FiringMode::Instantaneous => "instantaneous",
            FiringMode::Duration => "duration",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(deserialize_with = "schema_version")]
    pub schema_version: String,
    #[serde(deserialize_with = "horizon")]
    pub horizon: usize,
    #[serde(deserialize_with = "positive_step")]
    pub dt: f64,
    pub mode: FiringMode,
    /// Explicit firings. `amounts` fires instantaneously (U⁺ = U⁻);
    /// `initiate`/`complete` set U⁻ and U⁺ separately.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub firings: Vec<FiringSpec>,
    /// Capability label to duration in steps.
    #[serde(
        default,
        deserialize_with = "durations",
        skip_serializing_if = "BTreeMap::is_empty"
    )]
    pub durations: BTreeMap<String, usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initiations: Vec<InitiationSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gates: Vec<GateSpec>,
    /// Per-step arc weights (time-varying intensities).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub weight_overrides: Vec<StepWeightSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub initial_marking: Vec<MarkingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enforce_nonnegative: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiringSpec {
    pub k: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub amounts: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub initiate: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub complete: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitiationSpec {
    pub k: usize,
    pub capability: String,
    pub amount: f64,
}

/// Initiates `capability` once, at the first step `k ≥ earliest` at which the
/// marking of (`operand`, `buffer`) reaches `threshold`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSpec {
    pub capability: String,
    pub amount: f64,
    pub operand: String,
    pub buffer: String,
    pub threshold: f64,
    #[serde(default = "one")]
    pub earliest: usize,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepWeightSpec {
    pub k: usize,
    pub capability: String,
    pub operand: String,
    pub buffer: String,
    pub side: FlowSide,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarkingSpec {
    pub operand: String,
    pub buffer: String,
    pub value: f64,
}

// ---------------------------------------------------------------------------
// Demand, firing and flat-problem files

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandFile {
    #[serde(deserialize_with = "schema_version")]
    pub schema_version: String,
    pub demand: Vec<DemandEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandEntry {
    pub operand: String,
    pub buffer: String,
    pub amount: f64,
}

/// One firing vector, keyed by capability label (`process@resource`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiringFile {
    #[serde(deserialize_with = "schema_version")]
    pub schema_version: String,
    pub amounts: BTreeMap<String, f64>,
}

/// A classical LCA problem given directly as matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(deserialize_with = "schema_version")]
    pub schema_version: String,
    pub product_labels: Vec<String>,
    pub process_labels: Vec<String>,
    #[serde(default)]
    pub aspect_labels: Vec<String>,
    pub technology: Vec<Vec<f64>>,
    #[serde(default)]
    pub environmental: Vec<Vec<f64>>,
    pub demand: Vec<f64>,
}

// ---------------------------------------------------------------------------
// Readers

fn read_text(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn from_json<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, IngestError> {
    serde_json::from_str(text).map_err(|e| {
        let (line, column, message) = (e.line(), e.column(), strip_position(&e));
        let path = path.to_path_buf();
        match e.classify() {
            serde_json::error::Category::Data => IngestError::Schema {
                path,
                line,
                column,
                message,
            },
            serde_json::error::Category::Io => IngestError::Io {
                path,
                source: std::io::Error::other(message),
            },
            _ => IngestError::Syntax {
                path,
                line,
                column,
                message,
            },
        }
    })
}

fn strip_position(e: &serde_json::Error) -> String {
    let full = e.to_string();
    match full.rfind(" at line ") {
        Some(idx) => full[..idx].to_string(),
        None => full,
    }
}

pub fn parse_model_str(path: &Path, text: &str) -> Result<ModelFile, IngestError> {
    from_json(path, text)
}

pub fn parse_model(path: impl AsRef<Path>) -> Result<ModelFile, IngestError> {
    let path = path.as_ref();
    parse_model_str(path, &read_text(path)?)
}

pub fn parse_scenario_str(path: &Path, text: &str) -> Result<ScenarioFile, IngestError> {
    from_json(path, text)
}

pub fn parse_scenario(path: impl AsRef<Path>) -> Result<ScenarioFile, IngestError> {
    let path = path.as_ref();
    parse_scenario_str(path, &read_text(path)?)
}

pub fn parse_demand(path: impl AsRef<Path>) -> Result<DemandFile, IngestError> {
    let path = path.as_ref();
    from_json(path, &read_text(path)?)
}

pub fn parse_firing(path: impl AsRef<Path>) -> Result<FiringFile, IngestError> {
    let path = path.as_ref();
    from_json(path, &read_text(path)?)
}

/// Reads a flat problem. Files ending in `.csv` use the long form
/// `matrix,row,col,value` where `matrix` is `A`, `B` or `Y`; rows and columns
/// are numbered in order of first appearance, and `Y` rows share the product
/// labels of `A` (its `col` field is ignored). Anything else is parsed as a
/// JSON [`ProblemFile`].
pub fn parse_problem(path: impl AsRef<Path>) -> Result<ProblemFile, IngestError> {
    let path = path.as_ref();
    let text = read_text(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        parse_problem_csv(path, &text)
    } else {
        from_json(path, &text)
    }
}

pub fn parse_problem_csv(path: &Path, text: &str) -> Result<ProblemFile, IngestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let csv_err = |record: u64, message: String| IngestError::Csv {
        path: path.to_path_buf(),
        record,
        message,
    };

    let mut products: Vec<String> = Vec::new();
    let mut processes: Vec<String> = Vec::new();
    let mut aspects: Vec<String> = Vec::new();
    let mut a_entries = Vec::new();
    let mut b_entries = Vec::new();
    let mut y_entries = Vec::new();
    fn intern(list: &mut Vec<String>, label: &str) -> usize {
        match list.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                list.push(label.to_string());
                list.len() - 1
            }
        }
    }

    for (n, record) in reader.records().enumerate() {
        let line = n as u64 + 2;
        let record = record.map_err(|e| csv_err(line, e.to_string()))?;
        if record.len() != 4 {
            return Err(csv_err(line, format!("expected 4 fields, found {}", record.len())));
        }
        let value: f64 = record[3]
            .parse()
            .map_err(|_| csv_err(line, format!("value {:?} is not a number", &record[3])))?;
        match &record[0] {
            "A" => {
                let r = intern(&mut products, &record[1]);
                let c = intern(&mut processes, &record[2]);
                a_entries.push((r, c, value));
            }
            "B" => {
                let r = intern(&mut aspects, &record[1]);
                let c = intern(&mut processes, &record[2]);
                b_entries.push((r, c, value));
            }
            "Y" => {
                let r = intern(&mut products, &record[1]);
                y_entries.push((r, value));
            }
            other => {
                return Err(csv_err(line, format!("unknown matrix {other:?}; expected A, B or Y")))
            }
        }
    }

    let mut technology = vec![vec![0.0; processes.len()]; products.len()];
    for (r, c, v) in a_entries {
        technology[r][c] += v;
    }
    let mut environmental = vec![vec![0.0; processes.len()]; aspects.len()];
    for (r, c, v) in b_entries {
        environmental[r][c] += v;
    }
    let mut demand = vec![0.0; products.len()];
    for (r, v) in y_entries {
        demand[r] += v;
    }
    Ok(ProblemFile {
        schema_version: SCHEMA_VERSION.to_string(),
        product_labels: products,
        process_labels: processes,
        aspect_labels: aspects,
        technology,
        environmental,
        demand,
    })
}

// ---------------------------------------------------------------------------
// Field validators

fn schema_version<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    let v = String::deserialize(d)?;
    if v != SCHEMA_VERSION {
        return Err(de::Error::custom(format!(
            "unknown schema_version {v:?}; supported: {SCHEMA_VERSION:?}"
        )));
    }
    Ok(v)
}

macro_rules! non_empty {
    ($name:ident, $ty:ty, $field:literal) => {
        fn $name<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<$ty>, D::Error> {
            let v = Vec::<$ty>::deserialize(d)?;
            if v.is_empty() {
                return Err(de::Error::custom(concat!(
                    "field `",
                    $field,
                    "` must not be empty"
                )));
            }
            Ok(v)
        }
    };
}

non_empty!(non_empty_operands, OperandSpec, "operands");
non_empty!(non_empty_resources, ResourceSpec, "resources");
non_empty!(non_empty_processes, ProcessSpec, "processes");

fn positive_quantity<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let q = f64::deserialize(d)?;
    if !(q.is_finite() && q > 0.0) {
        return Err(de::Error::custom(format!(
            "quantity must be finite and strictly positive, got {q}"
        )));
    }
    Ok(q)
}

fn positive_step<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    let dt = f64::deserialize(d)?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(de::Error::custom(format!("dt must be finite and positive, got {dt}")));
    }
    Ok(dt)
}

fn horizon<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
    let k = usize::deserialize(d)?;
    if k < 2 {
        return Err(de::Error::custom(format!(
            "horizon must allow at least one transition (K >= 2), got {k}"
        )));
    }
    Ok(k)
}

fn durations<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<String, usize>, D::Error> {
    let map = BTreeMap::<String, usize>::deserialize(d)?;
    if let Some((cap, _)) = map.iter().find(|(_, &v)| v == 0) {
        return Err(de::Error::custom(format!(
            "duration of {cap:?} is 0; zero-duration capabilities belong in instantaneous mode"
        )));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "schema_version": "1",
        "operands": [{"id": "w", "name": "Widget", "unit": "kg"}],
        "resources": [{"id": "f", "name": "Factory", "kind": "transformation"}],
        "processes": [{"id": "p", "name": "Make widget", "kind": "transformation",
                       "outputs": [{"operand": "w", "quantity": 1}], "primary_output": "w"}],
        "allocations": [{"process": "p", "resource": "f"}]
    }"#;

    fn p() -> &'static Path {
        Path::new("test.json")
    }

    #[test]
    fn minimal_model_parses() {
        let m = parse_model_str(p(), MINIMAL).unwrap();
        assert_eq!(m.operands.len(), 1);
        assert!(m.buffer_overrides.is_empty());
    }

    #[test]
    fn empty_operand_list_names_field_with_location() {
        let text = MINIMAL.replace(
            r#"[{"id": "w", "name": "Widget", "unit": "kg"}]"#,
            "[]",
        );
        match parse_model_str(p(), &text).unwrap_err() {
            IngestError::Schema { message, line, .. } => {
                assert!(message.contains("operands"), "{message}");
                assert_eq!(line, 3);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_schema_version_rejected() {
        let text = MINIMAL.replace(r#""schema_version": "1""#, r#""schema_version": "7""#);
        let err = parse_model_str(p(), &text).unwrap_err();
        assert!(err.to_string().contains("unknown schema_version"), "{err}");
    }

    #[test]
    fn syntax_error_has_location() {
        let err = parse_model_str(p(), "{\n  \"schema_version\": \"1\",,\n}").unwrap_err();
        match err {
            IngestError::Syntax { line, column, .. } => {
                assert_eq!(line, 2);
                assert!(column > 0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn nonpositive_quantity_rejected() {
        let text = MINIMAL.replace(r#""quantity": 1"#, r#""quantity": -2"#);
        let err = parse_model_str(p(), &text).unwrap_err();
        assert!(err.to_string().contains("strictly positive"), "{err}");
    }

    #[test]
    fn scientific_notation_accepted() {
        let text = MINIMAL.replace(r#""quantity": 1"#, r#""quantity": 2.515e-3"#);
        let m = parse_model_str(p(), &text).unwrap();
        assert_eq!(m.processes[0].outputs[0].quantity, 2.515e-3);
    }

    #[test]
    fn horizon_of_one_rejected() {
        let text = r#"{"schema_version": "1", "horizon": 1, "dt": 1, "mode": "instantaneous"}"#;
        let err = parse_scenario_str(p(), text).unwrap_err();
        assert!(err.to_string().contains("at least one transition"), "{err}");
    }

    #[test]
    fn zero_duration_directs_to_instantaneous_mode() {
        let text = r#"{"schema_version": "1", "horizon": 4, "dt": 1, "mode": "duration",
                       "durations": {"p@f": 0}}"#;
        let err = parse_scenario_str(p(), text).unwrap_err();
        assert!(err.to_string().contains("instantaneous mode"), "{err}");
    }

    #[test]
    fn csv_problem_long_form() {
        let text = "matrix,row,col,value\nA,steel,smelt,1\nA,ore,smelt,-2\nA,ore,mine,1\nB,co2,smelt,0.5\nY,steel,,10\n";
        let prob = parse_problem_csv(p(), text).unwrap();
        assert_eq!(prob.product_labels, vec!["steel", "ore"]);
        assert_eq!(prob.process_labels, vec!["smelt", "mine"]);
        assert_eq!(prob.technology, vec![vec![1.0, 0.0], vec![-2.0, 1.0]]);
        assert_eq!(prob.environmental, vec![vec![0.5, 0.0]]);
        assert_eq!(prob.demand, vec![10.0, 0.0]);
    }

    #[test]
    fn csv_problem_bad_value() {
        let err = parse_problem_csv(p(), "matrix,row,col,value\nA,x,y,abc\n").unwrap_err();
        assert!(matches!(err, IngestError::Csv { record: 2, .. }));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = parse_model("/nonexistent/model.json").unwrap_err();
        assert!(err.is_io());
    }
}
