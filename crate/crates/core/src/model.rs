//! The engineering-system meta-architecture: operands, processes, resources,
//! buffers, and the capabilities obtained by allocating processes to
//! resources.
//!
//! A [`SystemModel`] is produced from a parsed [`ModelFile`] by
//! [`validate_model`], which resolves every textual reference into an index.
//! [`enumerate_capabilities`] then derives one [`Capability`] per allocation,
//! placing each input and output of the process at a buffer.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ingest::ModelFile;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProcessKind {
    Transformation,
    Transportation,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ResourceKind {
    Transformation,
    IndependentBuffer,
    Transportation,
}

impl ResourceKind {
    /// Transformation resources and independent buffers store operands.
    pub fn is_buffer(self) -> bool {
        !matches!(self, ResourceKind::Transportation)
    }
}

/// Which side of a capability a flow sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowSide {
    Pull,
    Inject,
}

impl fmt::Display for FlowSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FlowSide::Pull => "pull",
            FlowSide::Inject => "inject",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Operand {
    pub id: String,
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Flow<T> {
    pub operand: usize,
    pub quantity: T,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Process<T> {
    pub id: String,
    pub name: String,
    pub kind: ProcessKind,
    pub inputs: Vec<Flow<T>>,
    pub outputs: Vec<Flow<T>>,
    pub primary_output: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Resource {
    pub id: String,
    pub name: String,
    pub kind: ResourceKind,
    pub location: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    pub process: usize,
    pub resource: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BufferOverride {
    pub allocation: usize,
    pub operand: usize,
    /// `None` pins both sides.
    pub side: Option<FlowSide>,
    /// Index into the buffer set.
    pub buffer: usize,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightOverride<T> {
    pub allocation: usize,
    pub operand: usize,
    pub side: FlowSide,
    pub quantity: T,
}

/// Resource indices split by kind: `R = M ∪ B ∪ H`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ResourcePartition {
    pub transformation: Vec<usize>,
    pub independent_buffers: Vec<usize>,
    pub transportation: Vec<usize>,
}

/// A place of the system: an operand residing at a buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Place {
    pub operand: usize,
    pub buffer: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SystemModel<T> {
    pub operands: Vec<Operand>,
    pub processes: Vec<Process<T>>,
    pub resources: Vec<Resource>,
    pub allocations: Vec<Allocation>,
    pub buffer_overrides: Vec<BufferOverride>,
    pub weight_overrides: Vec<WeightOverride<T>>,
    /// Operands designated as environmental aspects, in declaration order.
    pub aspects: Vec<usize>,
    pub partition: ResourcePartition,
    /// `B_S = M ∪ B` as resource indices, in resource declaration order.
    pub buffers: Vec<usize>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("{location}: duplicate {kind} id {id:?}")]
    DuplicateId {
        kind: &'static str,
        id: String,
        location: String,
    },
    #[error("{location}: reference to unknown {kind} {id:?}")]
    DanglingReference {
        kind: &'static str,
        id: String,
        location: String,
    },
    #[error("{location}: process {process:?} has no outputs")]
    EmptyOutputs { process: String, location: String },
    #[error("{location}: primary output {operand:?} of process {process:?} is not among its outputs")]
    PrimaryOutputMissing {
        process: String,
        operand: String,
        location: String,
    },
    #[error("{location}: operand {operand:?} has an empty unit label")]
    EmptyUnit { operand: String, location: String },
    #[error("process {process:?} is not allocated to any resource")]
    UnallocatedProcess { process: String },
    #[error("{location}: process {process:?} is allocated to resource {resource:?} more than once")]
    DuplicateAllocation {
        process: String,
        resource: String,
        location: String,
    },
    #[error("{location}: override for {process:?}@{resource:?} does not match any allocation")]
    OverrideWithoutAllocation {
        process: String,
        resource: String,
        location: String,
    },
    #[error("{location}: resource {resource:?} is a transportation resource and cannot act as a buffer")]
    NotABuffer { resource: String, location: String },
    #[error("{location}: process {process:?} has no {side} flow of operand {operand:?} to override")]
    OverrideTargetsMissingFlow {
        process: String,
        operand: String,
        side: FlowSide,
        location: String,
    },
    #[error("transportation process {process:?} allocated to {resource_kind:?} resource {resource:?}")]
    KindMismatch {
        process: String,
        resource: String,
        resource_kind: ResourceKind,
    },
    #[error("capability {capability:?}: no buffer for {side} of operand {operand:?} (executing resource is not a buffer and no override is given)")]
    UnplacedFlow {
        capability: String,
        operand: String,
        side: FlowSide,
    },
    #[error("unit mismatch for operand {operand:?} at buffer {buffer:?}: {first:?} vs {second:?}")]
    UnitMismatch {
        operand: String,
        buffer: String,
        first: String,
        second: String,
    },
}

impl<T: Scalar> SystemModel<T> {
    pub fn operand_index(&self, id: &str) -> Option<usize> {
        self.operands.iter().position(|o| o.id == id)
    }

    pub fn process_index(&self, id: &str) -> Option<usize> {
        self.processes.iter().position(|p| p.id == id)
    }

    pub fn resource_index(&self, id: &str) -> Option<usize> {
        self.resources.iter().position(|r| r.id == id)
    }

    /// Buffer-set index of a resource id, if that resource is a buffer.
    pub fn buffer_index(&self, resource_id: &str) -> Option<usize> {
        let r = self.resource_index(resource_id)?;
        self.buffers.iter().position(|&b| b == r)
    }

    pub fn buffer_of_resource(&self, resource: usize) -> Option<usize> {
        self.buffers.iter().position(|&b| b == resource)
    }

    pub fn buffer_resource(&self, buffer: usize) -> &Resource {
        &self.resources[self.buffers[buffer]]
    }

    pub fn place(&self, operand_id: &str, buffer_id: &str) -> Option<Place> {
        Some(Place {
            operand: self.operand_index(operand_id)?,
            buffer: self.buffer_index(buffer_id)?,
        })
    }

    /// Row-major flat index `operand · |B_S| + buffer`.
    pub fn flat_index(&self, place: Place) -> usize {
        place.operand * self.buffers.len() + place.buffer
    }

    pub fn place_of_flat(&self, flat: usize) -> Place {
        let nb = self.buffers.len();
        Place {
            operand: flat / nb,
            buffer: flat % nb,
        }
    }

    /// Machine-readable place label, `operand@buffer`.
    pub fn place_id(&self, place: Place) -> String {
        format!(
            "{}@{}",
            self.operands[place.operand].id,
            self.buffer_resource(place.buffer).id
        )
    }

    /// Human-readable place label, e.g. "Refined Oil at Oil Refinery".
    pub fn place_name(&self, place: Place) -> String {
        format!(
            "{} at {}",
            self.operands[place.operand].name,
            self.buffer_resource(place.buffer).name
        )
    }

    /// Every stationary model acts as its own buffer set.
    pub fn is_stationary(&self) -> bool {
        self.partition.transportation.is_empty()
    }

    pub fn is_aspect(&self, operand: usize) -> bool {
        self.aspects.contains(&operand)
    }

    /// Number of capabilities allocated per process.
    pub fn allocations_per_process(&self) -> Vec<usize> {
        let mut counts = vec![0; self.processes.len()];
        for a in &self.allocations {
            counts[a.process] += 1;
        }
        counts
    }

    /// Converts every quantity to another scalar type.
    pub fn cast<U: Scalar>(&self) -> SystemModel<U> {
        let cast_flows = |flows: &[Flow<T>]| {
            flows
                .iter()
                .map(|f| Flow {
                    operand: f.operand,
                    quantity: U::from_f64_lossy(f.quantity.to_f64_lossy()),
                    unit: f.unit.clone(),
                })
                .collect()
        };
        SystemModel {
            operands: self.operands.clone(),
            processes: self
                .processes
                .iter()
                .map(|p| Process {
                    id: p.id.clone(),
                    name: p.name.clone(),
                    kind: p.kind,
                    inputs: cast_flows(&p.inputs),
                    outputs: cast_flows(&p.outputs),
                    primary_output: p.primary_output,
                })
                .collect(),
            resources: self.resources.clone(),
            allocations: self.allocations.clone(),
            buffer_overrides: self.buffer_overrides.clone(),
            weight_overrides: self
                .weight_overrides
                .iter()
                .map(|w| WeightOverride {
                    allocation: w.allocation,
                    operand: w.operand,
                    side: w.side,
                    quantity: U::from_f64_lossy(w.quantity.to_f64_lossy()),
                })
                .collect(),
            aspects: self.aspects.clone(),
            partition: self.partition.clone(),
            buffers: self.buffers.clone(),
        }
    }
}

fn index_ids<'a>(
    kind: &'static str,
    section: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<HashMap<&'a str, usize>, ModelError> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id, i).is_some() {
            return Err(ModelError::DuplicateId {
                kind,
                id: id.to_string(),
                location: format!("/{section}/{i}/id"),
            });
        }
    }
    Ok(map)
}

fn resolve(
    map: &HashMap<&str, usize>,
    kind: &'static str,
    id: &str,
    location: impl FnOnce() -> String,
) -> Result<usize, ModelError> {
    map.get(id).copied().ok_or_else(|| ModelError::DanglingReference {
        kind,
        id: id.to_string(),
        location: location(),
    })
}

/// Resolves every cross-reference of a parsed model and partitions its
/// resources. Error locations are JSON pointers into the model file.
pub fn validate_model<T: Scalar>(raw: &ModelFile) -> Result<SystemModel<T>, ModelError> {
    let operand_ix = index_ids("operand", "operands", raw.operands.iter().map(|o| o.id.as_str()))?;
    let resource_ix =
        index_ids("resource", "resources", raw.resources.iter().map(|r| r.id.as_str()))?;
    let process_ix =
        index_ids("process", "processes", raw.processes.iter().map(|p| p.id.as_str()))?;

    let mut operands = Vec::with_capacity(raw.operands.len());
    for (i, o) in raw.operands.iter().enumerate() {
        if o.unit.trim().is_empty() {
            return Err(ModelError::EmptyUnit {
                operand: o.id.clone(),
                location: format!("/operands/{i}/unit"),
            });
        }
        operands.push(Operand {
            id: o.id.clone(),
            name: o.name.clone(),
            unit: o.unit.clone(),
        });
    }

    let mut processes = Vec::with_capacity(raw.processes.len());
    for (pi, p) in raw.processes.iter().enumerate() {
        let convert = |flows: &[crate::ingest::FlowSpec], field: &str| {
            flows
                .iter()
                .enumerate()
                .map(|(fi, f)| {
                    let operand = resolve(&operand_ix, "operand", &f.operand, || {
                        format!("/processes/{pi}/{field}/{fi}/operand")
                    })?;
                    Ok(Flow {
                        operand,
                        quantity: T::from_f64_lossy(f.quantity),
                        unit: f.unit.clone().unwrap_or_else(|| operands[operand].unit.clone()),
                    })
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let inputs = convert(&p.inputs, "inputs")?;
        let outputs = convert(&p.outputs, "outputs")?;
        if outputs.is_empty() {
            return Err(ModelError::EmptyOutputs {
                process: p.id.clone(),
                location: format!("/processes/{pi}/outputs"),
            });
        }
        let primary_output = resolve(&operand_ix, "operand", &p.primary_output, || {
            format!("/processes/{pi}/primary_output")
        })?;
        if !outputs.iter().any(|f| f.operand == primary_output) {
            return Err(ModelError::PrimaryOutputMissing {
                process: p.id.clone(),
                operand: p.primary_output.clone(),
                location: format!("/processes/{pi}/primary_output"),
            });
        }
        processes.push(Process {
            id: p.id.clone(),
            name: p.name.clone(),
            kind: p.kind,
            inputs,
            outputs,
            primary_output,
        });
    }

    let resources: Vec<Resource> = raw
        .resources
        .iter()
        .map(|r| Resource {
            id: r.id.clone(),
            name: r.name.clone(),
            kind: r.kind,
            location: r.location.clone(),
        })
        .collect();
    let mut partition = ResourcePartition::default();
    for (i, r) in resources.iter().enumerate() {
        match r.kind {
            ResourceKind::Transformation => partition.transformation.push(i),
            ResourceKind::IndependentBuffer => partition.independent_buffers.push(i),
            ResourceKind::Transportation => partition.transportation.push(i),
        }
    }
    let buffers: Vec<usize> = (0..resources.len())
        .filter(|&i| resources[i].kind.is_buffer())
        .collect();

    let mut allocations = Vec::with_capacity(raw.allocations.len());
    let mut allocation_ix: HashMap<(usize, usize), usize> = HashMap::new();
    for (ai, a) in raw.allocations.iter().enumerate() {
        let process = resolve(&process_ix, "process", &a.process, || {
            format!("/allocations/{ai}/process")
        })?;
        let resource = resolve(&resource_ix, "resource", &a.resource, || {
            format!("/allocations/{ai}/resource")
        })?;
        if allocation_ix.insert((process, resource), ai).is_some() {
            return Err(ModelError::DuplicateAllocation {
                process: a.process.clone(),
                resource: a.resource.clone(),
                location: format!("/allocations/{ai}"),
            });
        }
        allocations.push(Allocation { process, resource });
    }
    let allocated: HashSet<usize> = allocations.iter().map(|a| a.process).collect();
    if let Some(p) = processes.iter().enumerate().find(|(i, _)| !allocated.contains(i)) {
        return Err(ModelError::UnallocatedProcess {
            process: p.1.id.clone(),
        });
    }

    let lookup_allocation = |process: &str, resource: &str, location: String| {
        let p = resolve(&process_ix, "process", process, || format!("{location}/process"))?;
        let r = resolve(&resource_ix, "resource", resource, || format!("{location}/resource"))?;
        allocation_ix
            .get(&(p, r))
            .copied()
            .ok_or_else(|| ModelError::OverrideWithoutAllocation {
                process: process.to_string(),
                resource: resource.to_string(),
                location,
            })
    };
    let has_flow = |allocation: usize, operand: usize, side: FlowSide| {
        let p = &processes[allocations[allocation].process];
        let flows = match side {
            FlowSide::Pull => &p.inputs,
            FlowSide::Inject => &p.outputs,
        };
        flows.iter().any(|f| f.operand == operand)
    };

    let mut buffer_overrides = Vec::with_capacity(raw.buffer_overrides.len());
    for (oi, o) in raw.buffer_overrides.iter().enumerate() {
        let location = format!("/buffer_overrides/{oi}");
        let allocation = lookup_allocation(&o.process, &o.resource, location.clone())?;
        let operand = resolve(&operand_ix, "operand", &o.operand, || format!("{location}/operand"))?;
        let resource =
            resolve(&resource_ix, "resource", &o.buffer, || format!("{location}/buffer"))?;
        let buffer = buffers.iter().position(|&b| b == resource).ok_or_else(|| {
            ModelError::NotABuffer {
                resource: o.buffer.clone(),
                location: format!("{location}/buffer"),
            }
        })?;
        let sides: &[FlowSide] = match o.side {
            Some(FlowSide::Pull) => &[FlowSide::Pull],
            Some(FlowSide::Inject) => &[FlowSide::Inject],
            None => &[FlowSide::Pull, FlowSide::Inject],
        };
        if !sides.iter().any(|&s| has_flow(allocation, operand, s)) {
            return Err(ModelError::OverrideTargetsMissingFlow {
                process: o.process.clone(),
                operand: o.operand.clone(),
                side: o.side.unwrap_or(FlowSide::Pull),
                location: format!("{location}/operand"),
            });
        }
        buffer_overrides.push(BufferOverride {
            allocation,
            operand,
            side: o.side,
            buffer,
        });
    }

    let mut weight_overrides = Vec::with_capacity(raw.weight_overrides.len());
    for (wi, w) in raw.weight_overrides.iter().enumerate() {
        let location = format!("/weight_overrides/{wi}");
        let allocation = lookup_allocation(&w.process, &w.resource, location.clone())?;
        let operand = resolve(&operand_ix, "operand", &w.operand, || format!("{location}/operand"))?;
        if !has_flow(allocation, operand, w.side) {
            return Err(ModelError::OverrideTargetsMissingFlow {
                process: w.process.clone(),
                operand: w.operand.clone(),
                side: w.side,
                location: format!("{location}/operand"),
            });
        }
        weight_overrides.push(WeightOverride {
            allocation,
            operand,
            side: w.side,
            quantity: T::from_f64_lossy(w.quantity),
        });
    }

    let mut aspects = Vec::with_capacity(raw.aspects.len());
    for (i, a) in raw.aspects.iter().enumerate() {
        let operand = resolve(&operand_ix, "operand", a, || format!("/aspects/{i}"))?;
        if !aspects.contains(&operand) {
            aspects.push(operand);
        }
    }

    Ok(SystemModel {
        operands,
        processes,
        resources,
        allocations,
        buffer_overrides,
        weight_overrides,
        aspects,
        partition,
        buffers,
    })
}

/// One placed flow of a capability: `weight` units of `operand` at `buffer`
/// per unit execution.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedFlow<T> {
    pub operand: usize,
    pub buffer: usize,
    pub weight: T,
    pub unit: String,
}

impl<T> PlacedFlow<T> {
    pub fn place(&self) -> Place {
        Place {
            operand: self.operand,
            buffer: self.buffer,
        }
    }
}

/// "Resource `resource` does process `process`."
#[derive(Clone, Debug, PartialEq)]
pub struct Capability<T> {
    pub index: usize,
    pub resource: usize,
    pub process: usize,
    pub pulls: Vec<PlacedFlow<T>>,
    pub injects: Vec<PlacedFlow<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CapabilitySet<T> {
    capabilities: Vec<Capability<T>>,
    labels: Vec<String>,
    names: Vec<String>,
}

impl<T: Scalar> CapabilitySet<T> {
    pub fn len(&self) -> usize {
        self.capabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.capabilities.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Capability<T>> {
        self.capabilities.iter()
    }

    pub fn get(&self, index: usize) -> &Capability<T> {
        &self.capabilities[index]
    }

    /// `process@resource` labels, in capability order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// "Resource does Process" names, in capability order.
    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// Capabilities that execute `process`, in order.
    pub fn of_process(&self, process: usize) -> Vec<usize> {
        self.capabilities
            .iter()
            .filter(|c| c.process == process)
            .map(|c| c.index)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumerationOptions {
    /// Accept transportation processes on non-transportation resources.
    pub allow_kind_mismatch: bool,
}

/// Derives one capability per allocation, in allocation order.
///
/// Each flow is placed at the executing resource's buffer unless a buffer
/// override pins it elsewhere; weights come from the process unless a weight
/// override replaces them. All flows meeting at one (operand, buffer) place
/// must share a unit label.
pub fn enumerate_capabilities<T: Scalar>(
    model: &SystemModel<T>,
    options: EnumerationOptions,
) -> Result<CapabilitySet<T>, ModelError> {
    let mut capabilities = Vec::with_capacity(model.allocations.len());
    let mut labels = Vec::with_capacity(model.allocations.len());
    let mut names = Vec::with_capacity(model.allocations.len());
    let mut units: BTreeMap<Place, String> = BTreeMap::new();

    for (index, alloc) in model.allocations.iter().enumerate() {
        let process = &model.processes[alloc.process];
        let resource = &model.resources[alloc.resource];
        let label = format!("{}@{}", process.id, resource.id);
        if process.kind == ProcessKind::Transportation
            && resource.kind != ResourceKind::Transportation
            && !options.allow_kind_mismatch
        {
            return Err(ModelError::KindMismatch {
                process: process.id.clone(),
                resource: resource.id.clone(),
                resource_kind: resource.kind,
            });
        }
        let local = model.buffer_of_resource(alloc.resource);

        let place_flows = |flows: &[Flow<T>], side: FlowSide| {
            flows
                .iter()
                .map(|f| {
                    let pinned = model.buffer_overrides.iter().find(|o| {
                        o.allocation == index
                            && o.operand == f.operand
                            && o.side.is_none_or(|s| s == side)
                    });
                    let buffer = pinned.map(|o| o.buffer).or(local).ok_or_else(|| {
                        ModelError::UnplacedFlow {
                            capability: label.clone(),
                            operand: model.operands[f.operand].id.clone(),
                            side,
                        }
                    })?;
                    let weight = model
                        .weight_overrides
                        .iter()
                        .find(|w| w.allocation == index && w.operand == f.operand && w.side == side)
                        .map_or(f.quantity, |w| w.quantity);
                    Ok(PlacedFlow {
                        operand: f.operand,
                        buffer,
                        weight,
                        unit: f.unit.clone(),
                    })
                })
                .collect::<Result<Vec<_>, ModelError>>()
        };
        let pulls = place_flows(&process.inputs, FlowSide::Pull)?;
        let injects = place_flows(&process.outputs, FlowSide::Inject)?;

        for flow in pulls.iter().chain(&injects) {
            let seen = units.entry(flow.place()).or_insert_with(|| flow.unit.clone());
            if *seen != flow.unit {
                return Err(ModelError::UnitMismatch {
                    operand: model.operands[flow.operand].id.clone(),
                    buffer: model.buffer_resource(flow.buffer).id.clone(),
                    first: seen.to_string(),
                    second: flow.unit.clone(),
                });
            }
        }

        names.push(format!("{} does {}", resource.name, process.name));
        labels.push(label);
        capabilities.push(Capability {
            index,
            resource: alloc.resource,
            process: alloc.process,
            pulls,
            injects,
        });
    }
    Ok(CapabilitySet {
        capabilities,
        labels,
        names,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{parse_model_str, AllocationSpec};
    use std::path::Path;

    fn trivial() -> ModelFile {
        parse_model_str(
            Path::new("t.json"),
            r#"{
                "schema_version": "1",
                "operands": [{"id": "w", "name": "Widget", "unit": "kg"}],
                "resources": [{"id": "f", "name": "Factory", "kind": "transformation"}],
                "processes": [{"id": "p", "name": "Make widget", "kind": "transformation",
                               "outputs": [{"operand": "w", "quantity": 1}],
                               "primary_output": "w"}],
                "allocations": [{"process": "p", "resource": "f"}]
            }"#,
        )
        .unwrap()
    }

    #[test]
    fn trivial_model_is_valid() {
        let m: SystemModel<f64> = validate_model(&trivial()).unwrap();
        assert_eq!(m.buffers, vec![0]);
        assert!(m.is_stationary());
        let caps = enumerate_capabilities(&m, EnumerationOptions::default()).unwrap();
        assert_eq!(caps.len(), 1);
        assert_eq!(caps.labels(), ["p@f"]);
        assert_eq!(caps.get(0).injects[0].place(), Place { operand: 0, buffer: 0 });
    }

    #[test]
    fn dangling_operand_names_id_and_location() {
        let mut raw = trivial();
        raw.processes[0].inputs.push(crate::ingest::FlowSpec {
            operand: "steam".into(),
            quantity: 2.0,
            unit: None,
        });
        let err = validate_model::<f64>(&raw).unwrap_err();
        assert_eq!(
            err,
            ModelError::DanglingReference {
                kind: "operand",
                id: "steam".into(),
                location: "/processes/0/inputs/0/operand".into()
            }
        );
    }

    #[test]
    fn duplicate_ids_rejected() {
        let mut raw = trivial();
        raw.resources.push(raw.resources[0].clone());
        assert!(matches!(
            validate_model::<f64>(&raw),
            Err(ModelError::DuplicateId { kind: "resource", .. })
        ));
    }

    #[test]
    fn empty_outputs_rejected() {
        let mut raw = trivial();
        raw.processes[0].outputs.clear();
        assert!(matches!(
            validate_model::<f64>(&raw),
            Err(ModelError::EmptyOutputs { .. })
        ));
    }

    #[test]
    fn unallocated_process_rejected() {
        let mut raw = trivial();
        raw.allocations.clear();
        assert!(matches!(
            validate_model::<f64>(&raw),
            Err(ModelError::UnallocatedProcess { .. })
        ));
    }

    #[test]
    fn transport_on_stationary_resource_is_reported_unless_allowed() {
        let mut raw = trivial();
        raw.processes[0].kind = ProcessKind::Transportation;
        let m: SystemModel<f64> = validate_model(&raw).unwrap();
        assert!(matches!(
            enumerate_capabilities(&m, EnumerationOptions::default()),
            Err(ModelError::KindMismatch { .. })
        ));
        let opts = EnumerationOptions {
            allow_kind_mismatch: true,
        };
        assert_eq!(enumerate_capabilities(&m, opts).unwrap().len(), 1);
    }

    #[test]
    fn transport_resource_needs_buffer_overrides() {
        let mut raw = trivial();
        raw.resources.push(crate::ingest::ResourceSpec {
            id: "truck".into(),
            name: "Truck".into(),
            kind: ResourceKind::Transportation,
            location: None,
        });
        raw.allocations.push(AllocationSpec {
            process: "p".into(),
            resource: "truck".into(),
        });
        let m: SystemModel<f64> = validate_model(&raw).unwrap();
        assert_eq!(m.partition.transportation, vec![1]);
        assert_eq!(m.buffers, vec![0]);
        let opts = EnumerationOptions {
            allow_kind_mismatch: true,
        };
        assert!(matches!(
            enumerate_capabilities(&m, opts),
            Err(ModelError::UnplacedFlow { .. })
        ));
    }

    #[test]
    fn unit_mismatch_at_shared_buffer_names_operand_and_buffer() {
        let mut raw = trivial();
        raw.processes[0].inputs.push(crate::ingest::FlowSpec {
            operand: "w".into(),
            quantity: 1.0,
            unit: Some("g".into()),
        });
        let m: SystemModel<f64> = validate_model(&raw).unwrap();
        let err = enumerate_capabilities(&m, EnumerationOptions::default()).unwrap_err();
        assert_eq!(
            err,
            ModelError::UnitMismatch {
                operand: "w".into(),
                buffer: "f".into(),
                first: "g".into(),
                second: "kg".into()
            }
        );
    }

    #[test]
    fn flat_index_is_row_major() {
        let m: SystemModel<f64> = validate_model(&trivial()).unwrap();
        let p = Place { operand: 0, buffer: 0 };
        assert_eq!(m.flat_index(p), 0);
        assert_eq!(m.place_of_flat(0), p);
        assert_eq!(m.place_name(p), "Widget at Factory");
        assert_eq!(m.place_id(p), "w@f");
    }
}
