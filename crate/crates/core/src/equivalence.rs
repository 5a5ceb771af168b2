//! Classical LCA as a special case of the Engineering System Net.
//!
//! With one capability per process, a two-point horizon of unit step, and
//! instantaneous firing, the net's place update is `ΔQ_B = M·U`. Stacking the
//! product rows above the aspect rows of the zero-row-eliminated `M` gives
//! `[A; B]`; with `U = X` the change in marking is `[Y; E]`.
//!
//! This module checks those conditions, recovers `A` and `B` from `M`, runs
//! both computations side by side, and splits `M·U` into conversion and
//! transportation contributions.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::esn::{build_esn, simulate, EsnState, FiringSchedule, SimError, SimOptions};
use crate::hfit::IncidenceStructure;
use crate::lca::{compute_aspects, solve_scaling, LcaError, LcaProblem, ProductAssignment};
use crate::linalg::DenseMatrix;
use crate::model::{CapabilitySet, ProcessKind, ResourceKind, SystemModel};
use crate::scalar::{max_abs, Scalar};

/// Relative bound on `‖ΔQ_B − [Y; E]‖_∞ / max(1, ‖[Y; E]‖_∞)`.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-6;
/// Default transportation-to-conversion ratio below which transportation is
/// considered negligible.
pub const DEFAULT_DOMINANCE_THRESHOLD: f64 = 0.05;
/// Floor for the conversion contribution in the dominance ratio.
pub const DOMINANCE_EPSILON: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquivalenceError {
    #[error("process {process:?} has {count} capabilities; the reduction needs exactly one")]
    NotOneToOne { process: String, count: usize },
    #[error("row {place:?} of the incidence matrix is neither a product nor an aspect")]
    UnclassifiedRow { place: String },
    #[error(transparent)]
    Lca(#[from] LcaError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionCheck {
    pub held: bool,
    pub diagnostic: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// Each process maps to exactly one capability.
    pub one_to_one: AssumptionCheck,
    /// `K = 2` and `ΔT = 1`.
    pub two_point_horizon: AssumptionCheck,
    /// `U⁺[k] = U⁻[k]` for every `k`.
    pub instantaneous: AssumptionCheck,
}

impl AssumptionReport {
    pub fn all_held(&self) -> bool {
        self.one_to_one.held && self.two_point_horizon.held && self.instantaneous.held
    }
}

pub fn check_assumptions<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
    schedule: &FiringSchedule<T>,
    horizon: usize,
    dt: T,
) -> AssumptionReport {
    let counts: Vec<usize> = (0..model.processes.len())
        .map(|p| capabilities.of_process(p).len())
        .collect();
    let offenders: Vec<String> = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c != 1)
        .map(|(p, &c)| format!("{} ({c} capabilities)", model.processes[p].id))
        .collect();
    let one_to_one = if offenders.is_empty() {
        AssumptionCheck {
            held: true,
            diagnostic: "every process is allocated to exactly one resource".into(),
        }
    } else {
        AssumptionCheck {
            held: false,
            diagnostic: format!("not one-to-one: {}", offenders.join(", ")),
        }
    };

    let horizon_ok = horizon == 2 && dt == T::one();
    let two_point_horizon = AssumptionCheck {
        held: horizon_ok,
        diagnostic: if horizon_ok {
            "K = 2, dt = 1".into()
        } else {
            format!("K = {horizon}, dt = {dt}; need K = 2 and dt = 1")
        },
    };

    let instantaneous = match schedule.first_non_instantaneous() {
        None => AssumptionCheck {
            held: true,
            diagnostic: "U+ = U- at every step".into(),
        },
        Some((k, t)) => AssumptionCheck {
            held: false,
            diagnostic: format!(
                "U+ differs from U- at k = {k} for capability {}",
                capabilities.labels()[t]
            ),
        },
    };

    AssumptionReport {
        one_to_one,
        two_point_horizon,
        instantaneous,
    }
}

/// Which block of `[A; B]` a reduced row of `M` belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "block", content = "index", rename_all = "kebab-case")]
pub enum RowBlock {
    Product(usize),
    Aspect(usize),
}

#[derive(Clone, Debug, PartialEq)]
pub struct LcaReduction<T> {
    pub problem: LcaProblem<T>,
    /// Block of each retained row, in retained-row order.
    pub row_blocks: Vec<RowBlock>,
    pub retained: Vec<usize>,
    pub retained_labels: Vec<String>,
    /// Capability executing process `j`.
    pub capability_of_process: Vec<usize>,
}

fn one_to_one_columns<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
) -> Result<Vec<usize>, EquivalenceError> {
    (0..model.processes.len())
        .map(|p| {
            let caps = capabilities.of_process(p);
            if caps.len() == 1 {
                Ok(caps[0])
            } else {
                Err(EquivalenceError::NotOneToOne {
                    process: model.processes[p].id.clone(),
                    count: caps.len(),
                })
            }
        })
        .collect()
}

/// Reads `A` and `B` off the zero-row-eliminated incidence matrix. Product
/// rows follow the product assignment; aspect rows keep row-major order.
pub fn reduce_to_lca<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
    structure: &IncidenceStructure<T>,
    products: &ProductAssignment,
    aspects: &[usize],
) -> Result<LcaReduction<T>, EquivalenceError> {
    let columns = one_to_one_columns(model, capabilities)?;
    let n = columns.len();
    if products.products.len() != n {
        return Err(LcaError::NonSquare {
            rows: products.products.len(),
            cols: n,
        }
        .into());
    }
    let reduced = structure.eliminate_zero_rows();

    let mut row_blocks = Vec::with_capacity(reduced.len());
    let mut aspect_rows = Vec::new();
    for (r, label) in reduced.row_labels.iter().enumerate() {
        if let Some(i) = products.position(label.place) {
            row_blocks.push(RowBlock::Product(i));
        } else if aspects.contains(&label.place.operand) {
            row_blocks.push(RowBlock::Aspect(aspect_rows.len()));
            aspect_rows.push(r);
        } else {
            return Err(EquivalenceError::UnclassifiedRow {
                place: label.id.clone(),
            });
        }
    }

    let mut a = DenseMatrix::zeros(n, n);
    let mut b = DenseMatrix::zeros(aspect_rows.len(), n);
    for (r, block) in row_blocks.iter().enumerate() {
        for (j, &c) in columns.iter().enumerate() {
            let v = reduced.matrix.get(r, c);
            match *block {
                RowBlock::Product(i) => a[(i, j)] = v,
                RowBlock::Aspect(k) => b[(k, j)] = v,
            }
        }
    }

    let problem = LcaProblem::new(
        a,
        b,
        vec![T::zero(); n],
        products.products.iter().map(|&p| model.place_name(p)).collect(),
        model.processes.iter().map(|p| p.name.clone()).collect(),
        aspect_rows
            .iter()
            .map(|&r| reduced.row_labels[r].name.clone())
            .collect(),
    )?;
    Ok(LcaReduction {
        problem,
        row_blocks,
        retained: reduced.retained.clone(),
        retained_labels: reduced.row_labels.iter().map(|l| l.name.clone()).collect(),
        capability_of_process: columns,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EquivalenceVerdict {
    Equivalent,
    NotEquivalent,
    AssumptionsViolated,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowComparison {
    pub place: String,
    pub block: RowBlock,
    pub delta_marking: f64,
    pub classical: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub assumptions: AssumptionReport,
    pub capabilities: Vec<String>,
    /// `X`, in process order.
    pub scaling: Vec<f64>,
    pub rows: Vec<RowComparison>,
    /// Absent when the simulation was skipped.
    pub max_abs_discrepancy: Option<f64>,
    pub relative_discrepancy: Option<f64>,
    pub tolerance: f64,
    pub verdict: EquivalenceVerdict,
}

/// Zeroes negative entries within the forward-error bound
/// `n · κ · u · ‖x‖_∞` of the solve.
fn clamp_roundoff<T: Scalar>(x: Vec<T>, condition_estimate: f64) -> Vec<T> {
    let bound = x.len() as f64 * condition_estimate * T::unit_roundoff() * max_abs(&x).max(1.0);
    x.into_iter()
        .map(|v| {
            if v < T::zero() && v.abs().to_f64_lossy() <= bound {
                T::zero()
            } else {
                v
            }
        })
        .collect()
}

/// Solves the classical problem recovered from `M` and runs the net with
/// `U = X`, `K = 2`, `ΔT = 1`, then compares `ΔQ_B` with `[Y; E]`.
///
/// When the model is not one-to-one no computation is attempted and the
/// report explains which processes break the assumption.
pub fn verify_equivalence<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
    structure: &IncidenceStructure<T>,
    products: &ProductAssignment,
    aspects: &[usize],
    demand: &[T],
) -> Result<EquivalenceReport, EquivalenceError> {
    let horizon = 2;
    let dt = T::one();
    let labels = capabilities.labels().to_vec();

    let probe = FiringSchedule::zeros(capabilities.len(), 1);
    let pre = check_assumptions(model, capabilities, &probe, horizon, dt);
    if !pre.one_to_one.held {
        return Ok(EquivalenceReport {
            assumptions: pre,
            capabilities: labels,
            scaling: Vec::new(),
            rows: Vec::new(),
            max_abs_discrepancy: None,
            relative_discrepancy: None,
            tolerance: EQUIVALENCE_TOLERANCE,
            verdict: EquivalenceVerdict::AssumptionsViolated,
        });
    }

    let reduction = reduce_to_lca(model, capabilities, structure, products, aspects)?;
    let problem = reduction.problem.clone().with_demand(demand.to_vec())?;
    let scaling = solve_scaling(&problem.technology, &problem.demand)?;
    let x = clamp_roundoff(scaling.x, scaling.condition_estimate);
    let e = compute_aspects(&problem.environmental, &x)?;

    let mut u = vec![T::zero(); capabilities.len()];
    for (j, &c) in reduction.capability_of_process.iter().enumerate() {
        u[c] = x[j];
    }
    let schedule = FiringSchedule::instantaneous(vec![u]);
    let assumptions = check_assumptions(model, capabilities, &schedule, horizon, dt);

    let net = build_esn(structure);
    let trajectory = simulate(
        &net,
        EsnState::zeros(&net, dt),
        &schedule,
        horizon,
        &SimOptions::default(),
    )?;
    let delta = trajectory.delta_place_marking();

    let mut expected = vec![T::zero(); delta.len()];
    let mut rows = Vec::with_capacity(reduction.retained.len());
    for (r, (&flat, block)) in reduction.retained.iter().zip(&reduction.row_blocks).enumerate() {
        let classical = match *block {
            RowBlock::Product(i) => demand[i],
            RowBlock::Aspect(k) => e[k],
        };
        expected[flat] = classical;
        rows.push(RowComparison {
            place: reduction.retained_labels[r].clone(),
            block: *block,
            delta_marking: delta[flat].to_f64_lossy(),
            classical: classical.to_f64_lossy(),
        });
    }
    let diff: Vec<T> = delta.iter().zip(&expected).map(|(&d, &y)| d - y).collect();
    let max_abs_discrepancy = max_abs(&diff);
    let scale = max_abs(&expected).max(1.0);
    let relative_discrepancy = max_abs_discrepancy / scale;
    let verdict = if !assumptions.all_held() {
        EquivalenceVerdict::AssumptionsViolated
    } else if relative_discrepancy <= EQUIVALENCE_TOLERANCE {
        EquivalenceVerdict::Equivalent
    } else {
        EquivalenceVerdict::NotEquivalent
    };

    Ok(EquivalenceReport {
        assumptions,
        capabilities: labels,
        scaling: x.iter().map(|v| v.to_f64_lossy()).collect(),
        rows,
        max_abs_discrepancy: Some(max_abs_discrepancy),
        relative_discrepancy: Some(relative_discrepancy),
        tolerance: EQUIVALENCE_TOLERANCE,
        verdict,
    })
}

// ---------------------------------------------------------------------------
// Conversion / transportation split

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionRow {
    pub place: String,
    pub aspect: bool,
    pub conversion: f64,
    pub transportation: f64,
    /// Row of `M·U`.
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub conversion_capabilities: Vec<String>,
    pub transportation_capabilities: Vec<String>,
    pub conversion_firing: Vec<f64>,
    pub transportation_firing: Vec<f64>,
    pub rows: Vec<DecompositionRow>,
    pub warnings: Vec<String>,
}

/// Aspect operands declared by the model, or, when none are declared,
/// operands that are never a primary output and only occur at independent
/// buffers (sources and sinks). The fallback adds a warning.
pub fn aspect_operands<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
) -> (Vec<usize>, Option<String>) {
    if !model.aspects.is_empty() {
        return (model.aspects.clone(), None);
    }
    let detected: Vec<usize> = (0..model.operands.len())
        .filter(|&o| model.processes.iter().all(|p| p.primary_output != o))
        .filter(|&o| {
            let mut flows = capabilities
                .iter()
                .flat_map(|c| c.pulls.iter().chain(&c.injects))
                .filter(|f| f.operand == o)
                .peekable();
            flows.peek().is_some()
                && flows.all(|f| {
                    model.buffer_resource(f.buffer).kind == ResourceKind::IndependentBuffer
                })
        })
        .collect();
    let names: Vec<&str> = detected.iter().map(|&o| model.operands[o].id.as_str()).collect();
    let warning = format!(
        "no aspects declared; treating source/sink operands as aspects: [{}]",
        names.join(", ")
    );
    (detected, Some(warning))
}

/// Splits `ΔQ_B = M·U` on the retained rows into the contributions of
/// conversion (transformation) and transportation capabilities.
pub fn decompose_conversion_transportation<T: Scalar>(
    model: &SystemModel<T>,
    capabilities: &CapabilitySet<T>,
    structure: &IncidenceStructure<T>,
    firing: &[T],
) -> DecompositionReport {
    assert_eq!(firing.len(), capabilities.len(), "one firing amount per capability");
    let (conv, trans): (Vec<usize>, Vec<usize>) = (0..capabilities.len())
        .partition(|&c| model.processes[capabilities.get(c).process].kind == ProcessKind::Transformation);
    let (aspects, warning) = aspect_operands(model, capabilities);
    let reduced = structure.eliminate_zero_rows();

    let pick = |cols: &[usize]| cols.iter().map(|&c| firing[c]).collect::<Vec<T>>();
    let u_conv = pick(&conv);
    let u_trans = pick(&trans);
    let conv_part = reduced.matrix.select_cols(&conv).mul_vec(&u_conv);
    let trans_part = reduced.matrix.select_cols(&trans).mul_vec(&u_trans);
    let total = reduced.matrix.mul_vec(firing);

    let rows = reduced
        .row_labels
        .iter()
        .enumerate()
        .map(|(r, label)| DecompositionRow {
            place: label.name.clone(),
            aspect: aspects.contains(&label.place.operand),
            conversion: conv_part[r].to_f64_lossy(),
            transportation: trans_part[r].to_f64_lossy(),
            total: total[r].to_f64_lossy(),
        })
        .collect();
    let labels = |cols: &[usize]| cols.iter().map(|&c| capabilities.labels()[c].clone()).collect();
    let floats = |v: &[T]| v.iter().map(|x| x.to_f64_lossy()).collect();

    DecompositionReport {
        conversion_capabilities: labels(&conv),
        transportation_capabilities: labels(&trans),
        conversion_firing: floats(&u_conv),
        transportation_firing: floats(&u_trans),
        rows,
        warnings: warning.into_iter().collect(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DominanceVerdict {
    /// Transportation is small next to conversion; omitting it is sound.
    Negligible,
    MustIncludeTransportation,
    /// Conversion contributes nothing while transportation does.
    DominantTransportation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceEntry {
    pub place: String,
    pub conversion: f64,
    pub transportation: f64,
    pub ratio: f64,
    pub verdict: DominanceVerdict,
}

/// `|transportation| / max(|conversion|, ε)` on every aspect row, with the
/// verdict "negligible" when the ratio is below `threshold`.
pub fn transportation_dominance(report: &DecompositionReport, threshold: f64) -> Vec<DominanceEntry> {
    report
        .rows
        .iter()
        .filter(|r| r.aspect)
        .map(|r| {
            let conv = r.conversion.abs();
            let trans = r.transportation.abs();
            let ratio = trans / conv.max(DOMINANCE_EPSILON);
            let verdict = if ratio < threshold {
                DominanceVerdict::Negligible
            } else if conv <= DOMINANCE_EPSILON {
                DominanceVerdict::DominantTransportation
            } else {
                DominanceVerdict::MustIncludeTransportation
            };
            DominanceEntry {
                place: r.place.clone(),
                conversion: r.conversion,
                transportation: r.transportation,
                ratio,
                verdict,
            }
        })
        .collect()
}
