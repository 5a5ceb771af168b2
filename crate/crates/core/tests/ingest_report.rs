mod common;

use common::*;
use hfgt_lca::equivalence::{
    decompose_conversion_transportation, transportation_dominance, verify_equivalence,
    EquivalenceReport,
};
use hfgt_lca::esn::Trajectory;
use hfgt_lca::ingest::{
    parse_model, parse_model_str, parse_scenario, parse_scenario_str, IngestError, ModelFile,
};
use hfgt_lca::lca::{solve_lca, SolveOptions};
use hfgt_lca::model::{enumerate_capabilities, validate_model, EnumerationOptions, ModelError, SystemModel};
use hfgt_lca::report::{
    emit_report, DecompositionOutput, Format, LcaReport, MatrixExport, Report, TrajectoryReport,
};
use hfgt_lca::scenario::{bind_scenario, run_scenario};
use hfgt_lca::{Analysis, Error, Model};
use std::path::Path;

const MODELS: [&str; 3] = [
    "oil-to-motion.model.json",
    "propane-delivery.model.json",
    "electrolysis-site.model.json",
];
const SCENARIOS: [&str; 3] = [
    "ev-trip.scenario.json",
    "fast-pump.scenario.json",
    "slow-pump.scenario.json",
];

#[test]
fn model_files_round_trip() {
    for name in MODELS {
        let m = parse_model(fixture(name)).unwrap();
        let text = serde_json::to_string(&m).unwrap();
        assert_eq!(parse_model_str(Path::new(name), &text).unwrap(), m, "{name}");
    }
}

#[test]
fn scenario_files_round_trip() {
    for name in SCENARIOS {
        let s = parse_scenario(fixture(name)).unwrap();
        let text = serde_json::to_string_pretty(&s).unwrap();
        assert_eq!(parse_scenario_str(Path::new(name), &text).unwrap(), s, "{name}");
    }
}

#[test]
fn unit_mismatch_names_operand_and_buffer() {
    let mut raw: ModelFile = reference_raw();
    raw.processes[4].outputs[1].unit = Some("g".into());
    let m: SystemModel<f64> = validate_model(&raw).unwrap();
    let e = enumerate_capabilities(&m, EnumerationOptions::default()).unwrap_err();
    match e {
        ModelError::UnitMismatch { operand, buffer, .. } => {
            assert_eq!(operand, "co2");
            assert_eq!(buffer, "atmosphere");
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn unknown_field_is_schema_error_with_location() {
    let text = std::fs::read_to_string(fixture("ev-trip.scenario.json"))
        .unwrap()
        .replace("\"mode\"", "\"mood\"");
    match parse_scenario_str(Path::new("s.json"), &text).unwrap_err() {
        IngestError::Schema { line, column, .. } => assert!(line > 0 && column > 0),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn diagnostics_map_to_exit_codes() {
    let io: Error = parse_model("/nonexistent/model.json").unwrap_err().into();
    assert_eq!(io.exit_code(), 3);
    let schema: Error = parse_model_str(Path::new("m.json"), "{}").unwrap_err().into();
    assert_eq!(schema.exit_code(), 1);
    let singular: Error = hfgt_lca::lca::LcaError::Singular {
        pivot_index: 0,
        pivot_magnitude: 0.0,
        condition_estimate: f64::INFINITY,
    }
    .into();
    assert_eq!(singular.exit_code(), 2);
}

fn ev_report() -> LcaReport {
    let problem = reference().lca_problem().unwrap().with_demand(ev_demand()).unwrap();
    let r = solve_lca(&problem, SolveOptions::default()).unwrap();
    LcaReport::new(&problem, &r)
}

#[test]
fn lca_report_presents_signed_and_magnitude() {
    let rep = ev_report();
    let crude = &rep.aspects[2];
    assert!(crude.value < 0.0);
    assert_eq!(crude.magnitude, -crude.value);
    let json: serde_json::Value = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(json["aspects"][2]["direction"], "consumed");
    assert_eq!(json["aspects"][0]["direction"], "emitted");
    assert!(rep.to_csv().starts_with("section,label,value,direction\n"));
    assert!(rep.table().contains("consumed"));
}

#[test]
fn reports_round_trip_and_are_deterministic() {
    let rep = ev_report();
    assert_eq!(rep.to_json(), ev_report().to_json());
    let back: LcaReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back, rep);

    let a = reference();
    let products = a.product_assignment().unwrap();
    let eq = verify_equivalence(&a.model, &a.capabilities, &a.incidence, &products, &a.model.aspects, &ev_demand())
        .unwrap();
    let back: EquivalenceReport = serde_json::from_str(&eq.to_json()).unwrap();
    assert_eq!(back, eq);
    assert_eq!(eq.to_csv(), eq.to_csv());

    let d = decompose_conversion_transportation(&a.model, &a.capabilities, &a.incidence, &x_ev());
    let out = DecompositionOutput {
        dominance: transportation_dominance(&d, 0.05),
        decomposition: d,
        threshold: 0.05,
    };
    let back: DecompositionOutput = serde_json::from_str(&out.to_json()).unwrap();
    assert_eq!(back, out);
}

#[test]
fn trajectory_report_csv_lists_every_element() {
    let a = reference();
    let file = parse_scenario(fixture("ev-trip.scenario.json")).unwrap();
    let run = run_scenario(&a.net, &bind_scenario(&a.model, &a.capabilities, &a.net, &file).unwrap()).unwrap();
    let rep = TrajectoryReport::new(&a.net, &run.trajectory, &run.in_flight);
    let csv = rep.to_csv();
    assert_eq!(csv.lines().count(), 1 + 2 * (42 + 5));
    assert!(csv.contains("2,place,distance@ev,500\n"));
    let back: TrajectoryReport = serde_json::from_str(&rep.to_json()).unwrap();
    assert_eq!(back, rep);
}

#[test]
fn empty_trajectory_is_header_only() {
    let a = reference();
    let t: Trajectory<f64> = Trajectory {
        states: vec![],
        warnings: vec![],
        extended: false,
    };
    assert_eq!(TrajectoryReport::new(&a.net, &t, &[]).to_csv(), "k,kind,label,value\n");
}

#[test]
fn incidence_export_lists_triplets() {
    let a = reference();
    let m = MatrixExport::reduced_incidence(&a.incidence);
    assert_eq!((m.rows, m.cols), (8, 5));
    assert_eq!(m.row_labels, REFERENCE_ROWS);
    let nonzero = REFERENCE_A.iter().chain(REFERENCE_B.iter()).flatten().filter(|v| **v != 0.0).count();
    assert_eq!(m.triplets.len(), nonzero);
    let csv = m.to_csv();
    assert!(csv.starts_with("row,col,value\n"));
    assert!(csv.contains("refined-oil@refinery,generate-electricity@power-plant,-61.9\n"));
    let full = MatrixExport::incidence(&a.incidence);
    assert_eq!(full.rows, 42);
}

#[test]
fn emit_writes_identical_bytes_twice() {
    let dir = tempfile::tempdir().unwrap();
    let rep = ev_report();
    let p1 = dir.path().join("a.json");
    let p2 = dir.path().join("b.json");
    emit_report(&rep, Format::Json, Some(&p1)).unwrap();
    emit_report(&rep, Format::Json, Some(&p2)).unwrap();
    assert_eq!(std::fs::read(p1).unwrap(), std::fs::read(p2).unwrap());
    let bad = dir.path().join("missing").join("x.json");
    assert!(emit_report(&rep, Format::Csv, Some(&bad)).is_err());
}

#[test]
fn analysis_alias_is_f64() {
    let a: Analysis = reference();
    let _: &Model = &a.model;
}
