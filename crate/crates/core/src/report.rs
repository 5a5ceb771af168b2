//! Serializable result reports and their JSON, CSV and table renderings.
//!
//! Every report holds `f64` values in declared index order so that output is
//! stable across runs. JSON uses the shortest round-tripping float text.

use std::fmt::{self, Write as _};
use std::io;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::equivalence::{
    DecompositionReport, DominanceEntry, EquivalenceReport, RowBlock,
};
use crate::esn::{EngineeringSystemNet, InFlight, Trajectory};
use crate::hfit::IncidenceStructure;
use crate::lca::{Direction, LcaProblem, LcaResult};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(format!("unknown format {other:?}; expected json, csv or table")),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Table => "table",
        })
    }
}

/// A report renderable in every [`Format`].
pub trait Report: Serialize {
    /// Header and records of the CSV rendering.
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>);

    fn table(&self) -> String;

    fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports contain only finite data");
        s.push('\n');
        s
    }

    fn to_csv(&self) -> String {
        let (header, records) = self.csv_records();
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&header).expect("in-memory write");
        for r in records {
            w.write_record(&r).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Csv => self.to_csv(),
            Format::Table => self.table(),
        }
    }
}

/// Renders `report` to `destination`, or standard output when `None`.
pub fn emit_report<R: Report + ?Sized>(
    report: &R,
    format: Format,
    destination: Option<&Path>,
) -> io::Result<()> {
    let text = report.render(format);
    match destination {
        Some(path) => std::fs::write(path, text),
        None => {
            use io::Write;
            let mut out = io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}

/// Maps `-0.0` to `0.0`; other values are unchanged.
fn unsigned_zero(v: f64) -> f64 {
    v + 0.0
}

fn num(v: f64) -> String {
    // `{}` on f64 is the shortest text that parses back to the same value.
    format!("{v}")
}

fn sci(v: f64) -> String {
    format!("{v:.4e}")
}

/// Left-aligned first column, right-aligned rest.
fn grid(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &mut dyn Iterator<Item = &str>, out: &mut String| {
        let parts: Vec<String> = cells
            .enumerate()
            .map(|(i, c)| {
                if i == 0 {
                    format!("{c:<w$}", w = widths[i])
                } else {
                    format!("{c:>w$}", w = widths[i])
                }
            })
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    line(&mut header.iter().copied(), &mut out);
    let rule: Vec<String> = widths.iter().map(|&w| "-".repeat(w)).collect();
    out.push_str(&rule.join("  "));
    out.push('\n');
    for r in rows {
        line(&mut r.iter().map(String::as_str), &mut out);
    }
    out
}

// ---------------------------------------------------------------------------
// LCA

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingEntry {
    pub process: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AspectEntry {
    pub aspect: String,
    /// Signed: consumption negative.
    pub value: f64,
    pub magnitude: f64,
    pub direction: Direction,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DemandEntryReport {
    pub product: String,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LcaReport {
    pub demand: Vec<DemandEntryReport>,
    pub scaling: Vec<ScalingEntry>,
    pub aspects: Vec<AspectEntry>,
    pub residual: f64,
    pub condition_estimate: f64,
    pub reliable: bool,
    pub warnings: Vec<String>,
}

impl LcaReport {
    pub fn new<T: Scalar>(problem: &LcaProblem<T>, result: &LcaResult<T>) -> Self {
        Self {
            demand: problem
                .product_labels
                .iter()
                .zip(&problem.demand)
                .map(|(p, &v)| DemandEntryReport {
                    product: p.clone(),
                    amount: unsigned_zero(v.to_f64_lossy()),
                })
                .collect(),
            scaling: problem
                .process_labels
                .iter()
                .zip(&result.scaling)
                .map(|(p, &v)| ScalingEntry {
                    process: p.clone(),
                    value: unsigned_zero(v.to_f64_lossy()),
                })
                .collect(),
            aspects: problem
                .aspect_labels
                .iter()
                .zip(&result.aspects)
                .map(|(a, &v)| {
                    let value = unsigned_zero(v.to_f64_lossy());
                    AspectEntry {
                        aspect: a.clone(),
                        value,
                        magnitude: value.abs(),
                        direction: Direction::of(value),
                    }
                })
                .collect(),
            residual: result.residual,
            condition_estimate: result.condition_estimate,
            reliable: result.reliable,
            warnings: result.warnings.clone(),
        }
    }
}

fn direction_text(d: Direction) -> &'static str {
    match d {
        Direction::Emitted => "emitted",
        Direction::Consumed => "consumed",
        Direction::None => "none",
    }
}

impl Report for LcaReport {
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let mut rows = Vec::new();
        for d in &self.demand {
            rows.push(vec!["demand".into(), d.product.clone(), num(d.amount), String::new()]);
        }
        for s in &self.scaling {
            rows.push(vec!["scaling".into(), s.process.clone(), num(s.value), String::new()]);
        }
        for a in &self.aspects {
            rows.push(vec![
                "aspect".into(),
                a.aspect.clone(),
                num(a.value),
                direction_text(a.direction).into(),
            ]);
        }
        (vec!["section", "label", "value", "direction"], rows)
    }

    fn table(&self) -> String {
        let mut out = String::new();
        let scaling: Vec<Vec<String>> = self
            .scaling
            .iter()
            .map(|s| vec![s.process.clone(), sci(s.value)])
            .collect();
        out.push_str(&grid(&["process", "scaling X"], &scaling));
        out.push('\n');
        let aspects: Vec<Vec<String>> = self
            .aspects
            .iter()
            .map(|a| {
                vec![
                    a.aspect.clone(),
                    sci(a.value),
                    sci(a.magnitude),
                    direction_text(a.direction).into(),
                ]
            })
            .collect();
        out.push_str(&grid(&["aspect", "E (signed)", "|E|", "direction"], &aspects));
        let _ = writeln!(
            out,
            "\nresidual {}  condition {}  {}",
            sci(self.residual),
            sci(self.condition_estimate),
            if self.reliable { "reliable" } else { "UNRELIABLE" }
        );
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Trajectories

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateReport {
    pub k: usize,
    pub place_marking: Vec<f64>,
    pub transition_marking: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InFlightReport {
    pub transition: String,
    pub initiated_at: usize,
    pub completes_at: usize,
    pub amount: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub places: Vec<String>,
    pub transitions: Vec<String>,
    pub dt: f64,
    pub states: Vec<StateReport>,
    /// `Q_B[K] − Q_B[1]`; empty for an empty trajectory.
    pub delta_place_marking: Vec<f64>,
    /// Per-step weight overrides were applied.
    pub extended: bool,
    pub in_flight: Vec<InFlightReport>,
    pub warnings: Vec<String>,
}

impl TrajectoryReport {
    pub fn new<T: Scalar>(
        net: &EngineeringSystemNet<T>,
        trajectory: &Trajectory<T>,
        in_flight: &[InFlight<T>],
    ) -> Self {
        let f = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect::<Vec<f64>>();
        Self {
            places: net.places.iter().map(|p| p.id.clone()).collect(),
            transitions: net.transitions.clone(),
            dt: trajectory
                .states
                .first()
                .map_or(1.0, |s| s.dt.to_f64_lossy()),
            states: trajectory
                .states
                .iter()
                .map(|s| StateReport {
                    k: s.k,
                    place_marking: f(&s.place_marking),
                    transition_marking: f(&s.transition_marking),
                })
                .collect(),
            delta_place_marking: if trajectory.states.is_empty() {
                Vec::new()
            } else {
                f(&trajectory.delta_place_marking())
            },
            extended: trajectory.extended,
            in_flight: in_flight
                .iter()
                .map(|i| InFlightReport {
                    transition: net.transitions[i.initiation.transition].clone(),
                    initiated_at: i.initiation.k,
                    completes_at: i.completes_at,
                    amount: i.initiation.amount.to_f64_lossy(),
                })
                .collect(),
            warnings: trajectory
                .warnings
                .iter()
                .map(|w| format!("k={}: place {} went negative ({})", w.k, w.place, w.value))
                .collect(),
        }
    }

    /// Only places that are nonzero at some step.
    fn active_places(&self) -> Vec<usize> {
        (0..self.places.len())
            .filter(|&p| self.states.iter().any(|s| s.place_marking[p] != 0.0))
            .collect()
    }
}

impl Report for TrajectoryReport {
    /// Long form: one record per (k, element). Every place and transition is
    /// listed so the output is independent of the data.
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let mut rows = Vec::new();
        for s in &self.states {
            for (label, v) in self.places.iter().zip(&s.place_marking) {
                rows.push(vec![s.k.to_string(), "place".into(), label.clone(), num(*v)]);
            }
            for (label, v) in self.transitions.iter().zip(&s.transition_marking) {
                rows.push(vec![s.k.to_string(), "transition".into(), label.clone(), num(*v)]);
            }
        }
        (vec!["k", "kind", "label", "value"], rows)
    }

    fn table(&self) -> String {
        let active = self.active_places();
        let mut header: Vec<&str> = vec!["k"];
        header.extend(active.iter().map(|&p| self.places[p].as_str()));
        header.extend(self.transitions.iter().map(|t| t.as_str()));
        let rows: Vec<Vec<String>> = self
            .states
            .iter()
            .map(|s| {
                let mut r = vec![s.k.to_string()];
                r.extend(active.iter().map(|&p| sci(s.place_marking[p])));
                r.extend(s.transition_marking.iter().map(|&v| sci(v)));
                r
            })
            .collect();
        let mut out = grid(&header, &rows);
        if self.extended {
            out.push_str("note: time-varying arc weights applied\n");
        }
        for i in &self.in_flight {
            let _ = writeln!(
                out,
                "in flight: {} x {} started k={} completes k={}",
                i.transition,
                num(i.amount),
                i.initiated_at,
                i.completes_at
            );
        }
        for w in &self.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

// ---------------------------------------------------------------------------
// Equivalence and decomposition

impl Report for EquivalenceReport {
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .rows
            .iter()
            .map(|r| {
                let (block, index) = match r.block {
                    RowBlock::Product(i) => ("A", i),
                    RowBlock::Aspect(k) => ("B", k),
                };
                vec![
                    r.place.clone(),
                    block.into(),
                    index.to_string(),
                    num(r.delta_marking),
                    num(r.classical),
                ]
            })
            .collect();
        (vec!["place", "block", "index", "delta_q_b", "classical"], rows)
    }

    fn table(&self) -> String {
        let mut out = String::new();
        let checks = [
            ("one-to-one allocation", &self.assumptions.one_to_one),
            ("K = 2, dt = 1", &self.assumptions.two_point_horizon),
            ("instantaneous firing", &self.assumptions.instantaneous),
        ];
        for (name, c) in checks {
            let _ = writeln!(
                out,
                "[{}] {name}: {}",
                if c.held { "held" } else { "FAILED" },
                c.diagnostic
            );
        }
        out.push('\n');
        if !self.rows.is_empty() {
            let rows: Vec<Vec<String>> = self
                .rows
                .iter()
                .map(|r| {
                    let block = match r.block {
                        RowBlock::Product(i) => format!("Y[{}]", i + 1),
                        RowBlock::Aspect(k) => format!("E[{}]", k + 1),
                    };
                    vec![r.place.clone(), block, sci(r.delta_marking), sci(r.classical)]
                })
                .collect();
            out.push_str(&grid(&["place", "row", "dQ_B", "[Y; E]"], &rows));
            out.push('\n');
        }
        if let (Some(abs), Some(rel)) = (self.max_abs_discrepancy, self.relative_discrepancy) {
            let _ = writeln!(
                out,
                "max |dQ_B - [Y; E]| = {}  relative {}  tolerance {}",
                sci(abs),
                sci(rel),
                sci(self.tolerance)
            );
        }
        let _ = writeln!(out, "verdict: {}", serde_json::to_value(self.verdict).expect("enum").as_str().unwrap_or(""));
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionOutput {
    pub decomposition: DecompositionReport,
    pub threshold: f64,
    pub dominance: Vec<DominanceEntry>,
}

impl Report for DecompositionOutput {
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .decomposition
            .rows
            .iter()
            .map(|r| {
                let d = self.dominance.iter().find(|d| d.place == r.place);
                vec![
                    r.place.clone(),
                    r.aspect.to_string(),
                    num(r.conversion),
                    num(r.transportation),
                    num(r.total),
                    d.map_or(String::new(), |d| num(d.ratio)),
                    d.map_or(String::new(), |d| verdict_text(d)),
                ]
            })
            .collect();
        (
            vec!["place", "aspect", "conversion", "transportation", "total", "ratio", "verdict"],
            rows,
        )
    }

    fn table(&self) -> String {
        let rows: Vec<Vec<String>> = self
            .decomposition
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.place.clone(),
                    sci(r.conversion),
                    sci(r.transportation),
                    sci(r.total),
                ]
            })
            .collect();
        let mut out = grid(&["place", "conversion", "transportation", "M·U"], &rows);
        out.push('\n');
        let dom: Vec<Vec<String>> = self
            .dominance
            .iter()
            .map(|d| vec![d.place.clone(), sci(d.ratio), verdict_text(d)])
            .collect();
        out.push_str(&grid(&["aspect row", "ratio", "verdict"], &dom));
        let _ = writeln!(out, "threshold {}", num(self.threshold));
        for w in &self.decomposition.warnings {
            let _ = writeln!(out, "warning: {w}");
        }
        out
    }
}

fn verdict_text(d: &DominanceEntry) -> String {
    serde_json::to_value(d.verdict)
        .ok()
        .and_then(|v| v.as_str().map(str::to_string))
        .unwrap_or_default()
}

// ---------------------------------------------------------------------------
// Matrix export

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixExport {
    pub rows: usize,
    pub cols: usize,
    /// `(row, col, value)` in column-major order.
    pub triplets: Vec<(usize, usize, f64)>,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
}

impl MatrixExport {
    pub fn new<T: Scalar>(
        matrix: &SparseMatrix<T>,
        row_labels: Vec<String>,
        col_labels: Vec<String>,
    ) -> Self {
        Self {
            rows: matrix.nrows(),
            cols: matrix.ncols(),
            triplets: matrix
                .triplets()
                .map(|(r, c, v)| (r, c, v.to_f64_lossy()))
                .collect(),
            row_labels,
            col_labels,
        }
    }

    /// The full `M` with `operand@buffer` row labels.
    pub fn incidence<T: Scalar>(structure: &IncidenceStructure<T>) -> Self {
        Self::new(
            &structure.net,
            structure.row_labels.iter().map(|l| l.id.clone()).collect(),
            structure.col_labels.clone(),
        )
    }

    /// The zero-row-eliminated `M`.
    pub fn reduced_incidence<T: Scalar>(structure: &IncidenceStructure<T>) -> Self {
        let reduced = structure.eliminate_zero_rows();
        Self::new(
            &reduced.matrix,
            reduced.row_labels.iter().map(|l| l.id.clone()).collect(),
            reduced.col_labels.clone(),
        )
    }
}

impl Report for MatrixExport {
    fn csv_records(&self) -> (Vec<&'static str>, Vec<Vec<String>>) {
        let rows = self
            .triplets
            .iter()
            .map(|&(r, c, v)| vec![self.row_labels[r].clone(), self.col_labels[c].clone(), num(v)])
            .collect();
        (vec!["row", "col", "value"], rows)
    }

    fn table(&self) -> String {
        let mut dense = vec![vec![0.0; self.cols]; self.rows];
        for &(r, c, v) in &self.triplets {
            dense[r][c] = v;
        }
        let mut header: Vec<&str> = vec![""];
        header.extend(self.col_labels.iter().map(String::as_str));
        let rows: Vec<Vec<String>> = dense
            .iter()
            .enumerate()
            .filter(|(_, r)| r.iter().any(|&v| v != 0.0))
            .map(|(i, r)| {
                let mut cells = vec![self.row_labels[i].clone()];
                cells.extend(r.iter().map(|&v| if v == 0.0 { "0".into() } else { num(v) }));
                cells
            })
            .collect();
        grid(&header, &rows)
    }
}
