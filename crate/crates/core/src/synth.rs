//! Seeded random models and nets for cross-validation.
//!
//! All generators draw from a caller-supplied RNG; use [`rng`] for a
//! reproducible ChaCha stream.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::esn::EngineeringSystemNet;
use crate::ingest::{
    AllocationSpec, BufferOverrideSpec, FlowSpec, ModelFile, OperandSpec, ProcessSpec,
    ResourceSpec, WeightOverrideSpec, SCHEMA_VERSION,
};
use crate::model::{FlowSide, ProcessKind, ResourceKind};
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn operand(id: String, unit: &str) -> OperandSpec {
    OperandSpec {
        name: id.to_uppercase(),
        id,
        unit: unit.into(),
    }
}

fn resource(id: String, kind: ResourceKind) -> ResourceSpec {
    ResourceSpec {
        name: id.to_uppercase(),
        id,
        kind,
        location: None,
    }
}

fn flow(operand: &str, quantity: f64) -> FlowSpec {
    FlowSpec {
        operand: operand.into(),
        quantity,
        unit: None,
    }
}

fn pin(process: &str, resource: &str, operand: &str, side: Option<FlowSide>, buffer: &str) -> BufferOverrideSpec {
    BufferOverrideSpec {
        process: process.into(),
        resource: resource.into(),
        operand: operand.into(),
        side,
        buffer: buffer.into(),
    }
}

fn model(
    operands: Vec<OperandSpec>,
    resources: Vec<ResourceSpec>,
    processes: Vec<ProcessSpec>,
    allocations: Vec<AllocationSpec>,
) -> ModelFile {
    ModelFile {
        schema_version: SCHEMA_VERSION.into(),
        operands,
        resources,
        processes,
        allocations,
        buffer_overrides: Vec::new(),
        weight_overrides: Vec::new(),
        aspects: Vec::new(),
    }
}

/// One-to-one LCA-shaped model.
///
/// Process `j` makes product `pj` at its own stationary resource `rj` and may
/// pull products `pi` (`i > j`) from `ri`, so `A` is upper triangular in
/// process order. Aspect `ak` is emitted to `air` for even `k` and drawn from
/// `earth` for odd `k`. Returns the model and a nonnegative demand in process
/// order.
pub fn triangular_lca_model<R: Rng>(rng: &mut R, n: usize, n_aspects: usize) -> (ModelFile, Vec<f64>) {
    assert!(n >= 1);
    let mut operands: Vec<OperandSpec> = (0..n).map(|i| operand(format!("p{i}"), "u")).collect();
    operands.extend((0..n_aspects).map(|k| operand(format!("a{k}"), "kg")));
    let mut resources: Vec<ResourceSpec> = (0..n)
        .map(|i| resource(format!("r{i}"), ResourceKind::Transformation))
        .collect();
    resources.push(resource("air".into(), ResourceKind::IndependentBuffer));
    resources.push(resource("earth".into(), ResourceKind::IndependentBuffer));

    let mut processes = Vec::with_capacity(n);
    let mut pins = Vec::new();
    for j in 0..n {
        let id = format!("make{j}");
        let res = format!("r{j}");
        let mut inputs = Vec::new();
        let mut outputs = vec![flow(&format!("p{j}"), rng.gen_range(0.5..2.0))];
        for i in j + 1..n {
            if rng.gen_bool(0.5) {
                let p = format!("p{i}");
                inputs.push(flow(&p, rng.gen_range(0.1..3.0)));
                pins.push(pin(&id, &res, &p, Some(FlowSide::Pull), &format!("r{i}")));
            }
        }
        for k in 0..n_aspects {
            if rng.gen_bool(0.6) {
                let a = format!("a{k}");
                let w = rng.gen_range(0.01..5.0);
                if k % 2 == 0 {
                    outputs.push(flow(&a, w));
                    pins.push(pin(&id, &res, &a, None, "air"));
                } else {
                    inputs.push(flow(&a, w));
                    pins.push(pin(&id, &res, &a, None, "earth"));
                }
            }
        }
        processes.push(ProcessSpec {
            id,
            name: format!("Make P{j}"),
            kind: ProcessKind::Transformation,
            inputs,
            outputs,
            primary_output: format!("p{j}"),
        });
    }
    let allocations = (0..n)
        .map(|j| AllocationSpec {
            process: format!("make{j}"),
            resource: format!("r{j}"),
        })
        .collect();
    let mut m = model(operands, resources, processes, allocations);
    m.buffer_overrides = pins;
    m.aspects = (0..n_aspects).map(|k| format!("a{k}")).collect();
    let demand = (0..n)
        .map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..1000.0) } else { 0.0 })
        .collect();
    (m, demand)
}

/// `n_processes` processes, each allocated to `per_process` distinct
/// resources drawn from `n_resources`.
pub fn allocation_model<R: Rng>(
    rng: &mut R,
    n_processes: usize,
    n_resources: usize,
    per_process: usize,
) -> ModelFile {
    assert!(per_process <= n_resources && per_process >= 1);
    let operands = vec![operand("x".into(), "u"), operand("y".into(), "u")];
    let resources = (0..n_resources)
        .map(|i| resource(format!("r{i}"), ResourceKind::Transformation))
        .collect();
    let processes = (0..n_processes)
        .map(|j| ProcessSpec {
            id: format!("p{j}"),
            name: format!("P{j}"),
            kind: ProcessKind::Transformation,
            inputs: vec![flow("x", rng.gen_range(0.1..2.0))],
            outputs: vec![flow("y", 1.0)],
            primary_output: "y".into(),
        })
        .collect();
    let ids: Vec<usize> = (0..n_resources).collect();
    let allocations = (0..n_processes)
        .flat_map(|j| {
            ids.choose_multiple(rng, per_process)
                .map(|&r| AllocationSpec {
                    process: format!("p{j}"),
                    resource: format!("r{r}"),
                })
                .collect::<Vec<_>>()
        })
        .collect();
    model(operands, resources, processes, allocations)
}

/// Conversion and transportation capabilities over a few sites.
///
/// Each `burnK` process turns fuel into heat and CO2 (to `air`) at some site;
/// each `haulK` process moves fuel between two sites on a truck and emits
/// CO2 with a capability-specific weight. Returns the model and a firing
/// vector in capability order.
pub fn mixed_model<R: Rng>(
    rng: &mut R,
    n_sites: usize,
    n_conversion: usize,
    n_transport: usize,
) -> (ModelFile, Vec<f64>) {
    assert!(n_sites >= 2);
    let operands = vec![
        operand("fuel".into(), "kg"),
        operand("heat".into(), "MJ"),
        operand("co2".into(), "kg"),
    ];
    let mut resources: Vec<ResourceSpec> = (0..n_sites)
        .map(|i| resource(format!("s{i}"), ResourceKind::Transformation))
        .collect();
    resources.push(resource("air".into(), ResourceKind::IndependentBuffer));
    resources.extend((0..n_transport).map(|i| resource(format!("truck{i}"), ResourceKind::Transportation)));

    let mut processes = Vec::new();
    let mut allocations = Vec::new();
    let mut pins = Vec::new();
    let mut weights = Vec::new();
    for c in 0..n_conversion {
        let id = format!("burn{c}");
        processes.push(ProcessSpec {
            id: id.clone(),
            name: format!("Burn {c}"),
            kind: ProcessKind::Transformation,
            inputs: vec![flow("fuel", rng.gen_range(0.01..1.0))],
            outputs: vec![flow("heat", 1.0), flow("co2", rng.gen_range(0.01..3.0))],
            primary_output: "heat".into(),
        });
        let site = format!("s{}", rng.gen_range(0..n_sites));
        pins.push(pin(&id, &site, "co2", None, "air"));
        allocations.push(AllocationSpec { process: id, resource: site });
    }
    for t in 0..n_transport {
        let id = format!("haul{t}");
        let truck = format!("truck{t}");
        processes.push(ProcessSpec {
            id: id.clone(),
            name: format!("Haul {t}"),
            kind: ProcessKind::Transportation,
            inputs: vec![flow("fuel", 1.0)],
            outputs: vec![flow("fuel", 1.0), flow("co2", 1e-3)],
            primary_output: "fuel".into(),
        });
        let from = rng.gen_range(0..n_sites);
        let to = (from + rng.gen_range(1..n_sites)) % n_sites;
        pins.push(pin(&id, &truck, "fuel", Some(FlowSide::Pull), &format!("s{from}")));
        pins.push(pin(&id, &truck, "fuel", Some(FlowSide::Inject), &format!("s{to}")));
        pins.push(pin(&id, &truck, "co2", None, "air"));
        weights.push(WeightOverrideSpec {
            process: id.clone(),
            resource: truck.clone(),
            operand: "co2".into(),
            side: FlowSide::Inject,
            quantity: rng.gen_range(1e-3..0.5),
        });
        allocations.push(AllocationSpec { process: id, resource: truck });
    }
    let mut m = model(operands, resources, processes, allocations);
    m.buffer_overrides = pins;
    m.weight_overrides = weights;
    m.aspects = vec!["co2".into()];
    let firing = (0..n_conversion + n_transport)
        .map(|_| rng.gen_range(0.0..100.0))
        .collect();
    (m, firing)
}

/// Net with integer arc weights in `1..=max_weight` at the given density.
/// Converts exactly into every [`Scalar`].
pub fn random_net<T: Scalar, R: Rng>(
    rng: &mut R,
    n_places: usize,
    n_transitions: usize,
    density: f64,
    max_weight: i64,
) -> EngineeringSystemNet<T> {
    let draw = |rng: &mut R| {
        let mut t = Vec::new();
        for r in 0..n_places {
            for c in 0..n_transitions {
                if rng.gen_bool(density) {
                    t.push((r, c, T::from_i64(rng.gen_range(1..=max_weight)).expect("small integer")));
                }
            }
        }
        SparseMatrix::from_triplets(n_places, n_transitions, t)
    };
    let pos = draw(rng);
    let neg = draw(rng);
    EngineeringSystemNet::from_matrices(pos, neg)
}

/// Integer-valued vector with entries in `0..=max`.
pub fn random_counts<T: Scalar, R: Rng>(rng: &mut R, n: usize, max: i64) -> Vec<T> {
    (0..n)
        .map(|_| T::from_i64(rng.gen_range(0..=max)).expect("small integer"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{enumerate_capabilities, validate_model, EnumerationOptions, SystemModel};

    #[test]
    fn generated_models_validate() {
        let mut r = rng(7);
        for n in 1..6 {
            let (m, y) = triangular_lca_model(&mut r, n, 3);
            let model: SystemModel<f64> = validate_model(&m).unwrap();
            enumerate_capabilities(&model, EnumerationOptions::default()).unwrap();
            assert_eq!(y.len(), n);
        }
        let (m, u) = mixed_model(&mut r, 3, 2, 2);
        let model: SystemModel<f64> = validate_model(&m).unwrap();
        let caps = enumerate_capabilities(&model, EnumerationOptions::default()).unwrap();
        assert_eq!(caps.len(), u.len());
    }

    #[test]
    fn same_seed_same_model() {
        let a = triangular_lca_model(&mut rng(3), 5, 2);
        let b = triangular_lca_model(&mut rng(3), 5, 2);
        assert_eq!(a, b);
    }
}
