//! Resolves label-keyed scenario, demand and firing files against a model.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::esn::{
    simulate, simulate_durations, ArcWeightOverride, DurationRunError, Durations,
    EngineeringSystemNet, EsnState, FiringSchedule, Gate, InFlight, Initiation, Nonnegativity,
    SimOptions, Trajectory,
};
use crate::ingest::{DemandFile, FiringFile, FiringMode, ScenarioFile};
use crate::lca::ProductAssignment;
use crate::model::{CapabilitySet, SystemModel};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BindError {
    #[error("{location}: unknown capability {label:?}")]
    UnknownCapability { location: String, label: String },
    #[error("{location}: unknown place {operand:?} at {buffer:?}")]
    UnknownPlace {
        location: String,
        operand: String,
        buffer: String,
    },
    #[error("{location}: step k={k} lies outside 1..={last}")]
    StepOutOfRange { location: String, k: usize, last: usize },
    #[error("{location}: amount {value} must be nonnegative")]
    Negative { location: String, value: f64 },
    #[error("{location}: {message}")]
    ModeConflict { location: String, message: String },
    #[error("{location}: {operand:?} at {buffer:?} is not the primary product of any process")]
    NotAProduct {
        location: String,
        operand: String,
        buffer: String,
    },
    #[error("{location}: value given more than once")]
    Repeated { location: String },
}

/// Which firings a bound scenario applies.
#[derive(Clone, Debug, PartialEq)]
pub enum FiringPlan<T> {
    Explicit(FiringSchedule<T>),
    Durations {
        durations: Durations,
        initiations: Vec<Initiation<T>>,
        gates: Vec<Gate<T>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BoundScenario<T> {
    pub horizon: usize,
    pub dt: T,
    pub mode: FiringMode,
    pub plan: FiringPlan<T>,
    pub initial: EsnState<T>,
    pub options: SimOptions<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioRun<T> {
    pub trajectory: Trajectory<T>,
    pub schedule: FiringSchedule<T>,
    pub in_flight: Vec<InFlight<T>>,
    pub gate_openings: Vec<Option<usize>>,
}

fn capability<T: Scalar>(
    caps: &CapabilitySet<T>,
    label: &str,
    location: String,
) -> Result<usize, BindError> {
    caps.index_of(label).ok_or_else(|| BindError::UnknownCapability {
        location,
        label: label.to_string(),
    })
}

fn place_flat<T: Scalar>(
    model: &SystemModel<T>,
    operand: &str,
    buffer: &str,
    location: String,
) -> Result<usize, BindError> {
    model
        .place(operand, buffer)
        .map(|p| model.flat_index(p))
        .ok_or_else(|| BindError::UnknownPlace {
            location,
            operand: operand.to_string(),
            buffer: buffer.to_string(),
        })
}

fn nonnegative<T: Scalar>(value: f64, location: &str) -> Result<T, BindError> {
    if value < 0.0 || value.is_nan() {
        return Err(BindError::Negative {
            location: location.to_string(),
            value,
        });
    }
    Ok(T::from_f64_lossy(value))
}

fn step_in_range(k: usize, last: usize, location: &str) -> Result<usize, BindError> {
    if k == 0 || k > last {
        return Err(BindError::StepOutOfRange {
            location: location.to_string(),
            k,
            last,
        });
    }
    Ok(k)
}

fn add_amounts<T: Scalar>(
    caps: &CapabilitySet<T>,
    target: &mut [T],
    amounts: &BTreeMap<String, f64>,
    location: &str,
) -> Result<(), BindError> {
    for (label, &value) in amounts {
        let at = format!("{location}/{label}");
        let c = capability(caps, label, at.clone())?;
        target[c] = target[c] + nonnegative::<T>(value, &at)?;
    }
    Ok(())
}

/// Checks a scenario against the model and converts labels to indices.
pub fn bind_scenario<T: Scalar>(
    model: &SystemModel<T>,
    caps: &CapabilitySet<T>,
    net: &EngineeringSystemNet<T>,
    file: &ScenarioFile,
) -> Result<BoundScenario<T>, BindError> {
    let horizon = file.horizon;
    let last = horizon - 1;
    let n = caps.len();
    let dt = T::from_f64_lossy(file.dt);

    let uses_durations =
        !file.durations.is_empty() || !file.initiations.is_empty() || !file.gates.is_empty();
    let plan = match file.mode {
        FiringMode::Instantaneous => {
            if uses_durations {
                return Err(BindError::ModeConflict {
                    location: "/mode".into(),
                    message: "durations, initiations and gates need mode \"duration\"".into(),
                });
            }
            let mut u = vec![vec![T::zero(); n]; last];
            for (i, f) in file.firings.iter().enumerate() {
                let loc = format!("/firings/{i}");
                if !f.initiate.is_empty() || !f.complete.is_empty() {
                    return Err(BindError::ModeConflict {
                        location: loc,
                        message: "separate initiate/complete firings need mode \"duration\"".into(),
                    });
                }
                let k = step_in_range(f.k, last, &format!("{loc}/k"))?;
                add_amounts(caps, &mut u[k - 1], &f.amounts, &format!("{loc}/amounts"))?;
            }
            FiringPlan::Explicit(FiringSchedule::instantaneous(u))
        }
        FiringMode::Duration if !uses_durations => {
            let mut schedule = FiringSchedule::zeros(n, last);
            for (i, f) in file.firings.iter().enumerate() {
                let loc = format!("/firings/{i}");
                let k = step_in_range(f.k, last, &format!("{loc}/k"))?;
                let step = &mut schedule.steps[k - 1];
                add_amounts(caps, &mut step.initiate, &f.amounts, &format!("{loc}/amounts"))?;
                add_amounts(caps, &mut step.complete, &f.amounts, &format!("{loc}/amounts"))?;
                add_amounts(caps, &mut step.initiate, &f.initiate, &format!("{loc}/initiate"))?;
                add_amounts(caps, &mut step.complete, &f.complete, &format!("{loc}/complete"))?;
            }
            FiringPlan::Explicit(schedule)
        }
        FiringMode::Duration => {
            if !file.firings.is_empty() {
                return Err(BindError::ModeConflict {
                    location: "/firings".into(),
                    message: "explicit firings cannot be combined with durations".into(),
                });
            }
            let mut durations = Durations::new();
            for (label, &d) in &file.durations {
                let c = capability(caps, label, format!("/durations/{label}"))?;
                durations.insert(c, d);
            }
            let initiations = file
                .initiations
                .iter()
                .enumerate()
                .map(|(i, s)| {
                    let loc = format!("/initiations/{i}");
                    Ok(Initiation {
                        k: step_in_range(s.k, last, &format!("{loc}/k"))?,
                        transition: capability(caps, &s.capability, format!("{loc}/capability"))?,
                        amount: nonnegative(s.amount, &format!("{loc}/amount"))?,
                    })
                })
                .collect::<Result<Vec<_>, BindError>>()?;
            let gates = file
                .gates
                .iter()
                .enumerate()
                .map(|(i, g)| {
                    let loc = format!("/gates/{i}");
                    Ok(Gate {
                        transition: capability(caps, &g.capability, format!("{loc}/capability"))?,
                        amount: nonnegative(g.amount, &format!("{loc}/amount"))?,
                        place: place_flat(model, &g.operand, &g.buffer, loc.clone())?,
                        threshold: T::from_f64_lossy(g.threshold),
                        earliest: g.earliest,
                    })
                })
                .collect::<Result<Vec<_>, BindError>>()?;
            FiringPlan::Durations {
                durations,
                initiations,
                gates,
            }
        }
    };

    let mut initial = EsnState::zeros(net, dt);
    let mut seen = vec![false; net.n_places()];
    for (i, m) in file.initial_marking.iter().enumerate() {
        let loc = format!("/initial_marking/{i}");
        let p = place_flat(model, &m.operand, &m.buffer, loc.clone())?;
        if std::mem::replace(&mut seen[p], true) {
            return Err(BindError::Repeated { location: loc });
        }
        initial.place_marking[p] = T::from_f64_lossy(m.value);
    }

    let weight_overrides = file
        .weight_overrides
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let loc = format!("/weight_overrides/{i}");
            Ok(ArcWeightOverride {
                k: step_in_range(w.k, last, &format!("{loc}/k"))?,
                transition: capability(caps, &w.capability, format!("{loc}/capability"))?,
                place: place_flat(model, &w.operand, &w.buffer, loc.clone())?,
                side: w.side,
                weight: nonnegative(w.weight, &format!("{loc}/weight"))?,
            })
        })
        .collect::<Result<Vec<_>, BindError>>()?;

    let nonnegativity = if file.enforce_nonnegative.unwrap_or(false) {
        Nonnegativity::Enforce
    } else {
        Nonnegativity::Unbounded
    };

    Ok(BoundScenario {
        horizon,
        dt,
        mode: file.mode,
        plan,
        initial,
        options: SimOptions {
            nonnegativity,
            weight_overrides,
        },
    })
}

/// Runs a bound scenario to its horizon.
pub fn run_scenario<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    scenario: &BoundScenario<T>,
) -> Result<ScenarioRun<T>, DurationRunError> {
    match &scenario.plan {
        FiringPlan::Explicit(schedule) => Ok(ScenarioRun {
            trajectory: simulate(
                net,
                scenario.initial.clone(),
                schedule,
                scenario.horizon,
                &scenario.options,
            )?,
            schedule: schedule.clone(),
            in_flight: Vec::new(),
            gate_openings: Vec::new(),
        }),
        FiringPlan::Durations {
            durations,
            initiations,
            gates,
        } => {
            let run = simulate_durations(
                net,
                scenario.initial.clone(),
                durations,
                initiations,
                gates,
                scenario.horizon,
                &scenario.options,
            )?;
            Ok(ScenarioRun {
                trajectory: run.trajectory,
                schedule: run.schedule,
                in_flight: run.in_flight,
                gate_openings: run.gate_openings,
            })
        }
    }
}

/// Demand vector in product-assignment order. Unlisted products are zero.
pub fn bind_demand<T: Scalar>(
    model: &SystemModel<T>,
    products: &ProductAssignment,
    file: &DemandFile,
) -> Result<Vec<T>, BindError> {
    let mut y = vec![T::zero(); products.products.len()];
    let mut seen = vec![false; y.len()];
    for (i, d) in file.demand.iter().enumerate() {
        let loc = format!("/demand/{i}");
        let place = model
            .place(&d.operand, &d.buffer)
            .ok_or_else(|| BindError::UnknownPlace {
                location: loc.clone(),
                operand: d.operand.clone(),
                buffer: d.buffer.clone(),
            })?;
        let j = products.position(place).ok_or_else(|| BindError::NotAProduct {
            location: loc.clone(),
            operand: d.operand.clone(),
            buffer: d.buffer.clone(),
        })?;
        if std::mem::replace(&mut seen[j], true) {
            return Err(BindError::Repeated { location: loc });
        }
        y[j] = T::from_f64_lossy(d.amount);
    }
    Ok(y)
}

/// Firing vector in capability order. Unlisted capabilities are zero.
pub fn bind_firing<T: Scalar>(
    caps: &CapabilitySet<T>,
    file: &FiringFile,
) -> Result<Vec<T>, BindError> {
    let mut u = vec![T::zero(); caps.len()];
    add_amounts(caps, &mut u, &file.amounts, "/amounts")?;
    Ok(u)
}
