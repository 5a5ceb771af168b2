#![allow(dead_code)]

use std::path::PathBuf;

use hfgt_lca::ingest::{parse_model, ModelFile};
use hfgt_lca::Analysis;

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples").join(name)
}

pub fn reference_raw() -> ModelFile {
    parse_model(fixture("oil-to-motion.model.json")).unwrap()
}

pub fn reference() -> Analysis {
    Analysis::new(&reference_raw()).unwrap()
}

pub const REFERENCE_A: [[f64; 5]; 5] = [
    [1.0, -61.9, 0.0, 0.0, 0.0],
    [0.0, 1.0, -3.816, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, -53.3, 1.0],
];

pub const REFERENCE_B: [[f64; 5]; 3] = [
    [1.030e-3, 2.515e-3, 0.0, 2.48e-1, 2e-4],
    [8.4e-4, 2.237e-1, 0.0, 2.17e-1, 5.4e-4],
    [-3.45, 0.0, 0.0, 0.0, -2.22],
];

/// Retained rows of the reference incidence matrix as `operand@buffer` ids.
pub const REFERENCE_ROWS: [&str; 8] = [
    "refined-oil@refinery",
    "electricity@power-plant",
    "distance@ev",
    "distance@icv",
    "gasoline@refinery",
    "co2@atmosphere",
    "nox@atmosphere",
    "crude-oil@earth",
];

/// Reference magnitudes of E for the two 500 km trips.
pub const REFERENCE_E_EV: [f64; 3] = [1.264e2, 5.260e2, 4.075e5];
pub const REFERENCE_E_ICV: [f64; 3] = [1.293e2, 1.228e2, 5.916e4];

pub fn ev_demand() -> Vec<f64> {
    vec![0.0, 0.0, 500.0, 0.0, 0.0]
}

pub fn icv_demand() -> Vec<f64> {
    vec![0.0, 0.0, 0.0, 500.0, 0.0]
}

/// Back-substitution through the expected triangular A.
pub fn x_ev() -> Vec<f64> {
    let x3 = 500.0;
    let x2 = 3.816 * x3;
    let x1 = 61.9 * x2;
    vec![x1, x2, x3, 0.0, 0.0]
}

pub fn x_icv() -> Vec<f64> {
    let x4 = 500.0;
    let x5 = 53.3 * x4;
    vec![0.0, 0.0, 0.0, x4, x5]
}

/// `B·x` by an explicit double loop.
pub fn naive_bx(b: &[[f64; 5]], x: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; b.len()];
    for (k, row) in b.iter().enumerate() {
        for j in 0..5 {
            e[k] += row[j] * x[j];
        }
    }
    e
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}
