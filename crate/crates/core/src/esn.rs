//! Engineering System Nets and their state-transition function.
//!
//! Places are (operand, buffer) pairs and transitions are capabilities. The
//! marking is `Q = [Q_B; Q_E]`: operand quantities at places and in-flight
//! execution quantities at transitions. One step of length `ΔT` applies
//!
//! ```text
//! Q_B[k+1] = Q_B[k] + (M⁺·U⁺[k] − M⁻·U⁻[k])·ΔT
//! Q_E[k+1] = Q_E[k] + (U⁻[k] − U⁺[k])·ΔT
//! ```
//!
//! When every capability completes the step it starts (`U⁺ ≡ U⁻`) the
//! transition marking never changes and the place update reduces to
//! `Q_B[k+1] = Q_B[k] + M·U[k]·ΔT`. Both update paths evaluate `M·U` as
//! `M⁺·U − M⁻·U`, so they agree bit for bit.
//!
//! Markings are real-valued by default. Instantiating the net over `i64`
//! gives classical integer token counts; over `Rational64`, exact arithmetic.

use std::borrow::Cow;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::hfit::{IncidenceStructure, RowLabel};
use crate::model::FlowSide;
use crate::scalar::Scalar;
use crate::sparse::SparseMatrix;

#[derive(Clone, Debug, PartialEq)]
pub struct EngineeringSystemNet<T> {
    pub places: Vec<RowLabel>,
    /// `process@resource` labels.
    pub transitions: Vec<String>,
    pub transition_names: Vec<String>,
    /// `M⁺`
    pub pos: SparseMatrix<T>,
    /// `M⁻`
    pub neg: SparseMatrix<T>,
    /// `M = M⁺ − M⁻`
    pub net: SparseMatrix<T>,
}

/// Builds the net over the full `|L|·|B_S|` place set.
pub fn build_esn<T: Scalar>(structure: &IncidenceStructure<T>) -> EngineeringSystemNet<T> {
    EngineeringSystemNet {
        places: structure.row_labels.clone(),
        transitions: structure.col_labels.clone(),
        transition_names: structure.col_names.clone(),
        pos: structure.weighted_pos.clone(),
        neg: structure.weighted_neg.clone(),
        net: structure.net.clone(),
    }
}

impl<T: Scalar> EngineeringSystemNet<T> {
    /// Net from raw incidence matrices with generated labels (`p0`, `t0`, …).
    pub fn from_matrices(pos: SparseMatrix<T>, neg: SparseMatrix<T>) -> Self {
        assert_eq!((pos.nrows(), pos.ncols()), (neg.nrows(), neg.ncols()));
        let places = (0..pos.nrows())
            .map(|i| RowLabel {
                place: crate::model::Place {
                    operand: i,
                    buffer: 0,
                },
                id: format!("p{i}"),
                name: format!("p{i}"),
            })
            .collect();
        let transitions: Vec<String> = (0..pos.ncols()).map(|i| format!("t{i}")).collect();
        Self {
            places,
            transition_names: transitions.clone(),
            transitions,
            net: pos.sub(&neg),
            pos,
            neg,
        }
    }

    pub fn n_places(&self) -> usize {
        self.places.len()
    }

    pub fn n_transitions(&self) -> usize {
        self.transitions.len()
    }

    /// Places touched by at least one arc.
    pub fn active_places(&self) -> Vec<usize> {
        let mut rows = self.pos.nonzero_rows();
        rows.extend(self.neg.nonzero_rows());
        rows.sort_unstable();
        rows.dedup();
        rows
    }

    /// `M⁺·U − M⁻·U`
    pub fn net_product(&self, u: &[T]) -> Vec<T> {
        let inflow = self.pos.mul_vec(u);
        let outflow = self.neg.mul_vec(u);
        inflow.into_iter().zip(outflow).map(|(a, b)| a - b).collect()
    }

    pub fn cast<U: Scalar>(&self) -> EngineeringSystemNet<U> {
        let f = |v: T| U::from_f64_lossy(v.to_f64_lossy());
        EngineeringSystemNet {
            places: self.places.clone(),
            transitions: self.transitions.clone(),
            transition_names: self.transition_names.clone(),
            pos: self.pos.map(f),
            neg: self.neg.map(f),
            net: self.net.map(f),
        }
    }

    /// Graphviz description: places as ellipses, transitions as boxes, arcs
    /// labelled with their weights. With `active_only`, untouched places are
    /// omitted.
    pub fn to_dot(&self, active_only: bool) -> String {
        let shown: Vec<usize> = if active_only {
            self.active_places()
        } else {
            (0..self.n_places()).collect()
        };
        let mut out = String::from("digraph esn {\n  rankdir=LR;\n");
        for &p in &shown {
            let _ = writeln!(
                out,
                "  \"{}\" [shape=ellipse, label=\"{}\"];",
                escape(&self.places[p].id),
                escape(&self.places[p].name)
            );
        }
        for (t, label) in self.transitions.iter().enumerate() {
            let _ = writeln!(
                out,
                "  \"{}\" [shape=box, label=\"{}\"];",
                escape(label),
                escape(&self.transition_names[t])
            );
        }
        for (r, c, w) in self.neg.triplets() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(&self.places[r].id),
                escape(&self.transitions[c]),
                w
            );
        }
        for (r, c, w) in self.pos.triplets() {
            let _ = writeln!(
                out,
                "  \"{}\" -> \"{}\" [label=\"{}\"];",
                escape(&self.transitions[c]),
                escape(&self.places[r].id),
                w
            );
        }
        out.push_str("}\n");
        out
    }
}

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

#[derive(Clone, Debug, PartialEq)]
pub struct EsnState<T> {
    /// `Q_B`, one entry per place.
    pub place_marking: Vec<T>,
    /// `Q_E`, one entry per transition.
    pub transition_marking: Vec<T>,
    /// Discrete time index, starting at 1.
    pub k: usize,
    pub dt: T,
}

impl<T: Scalar> EsnState<T> {
    pub fn zeros(net: &EngineeringSystemNet<T>, dt: T) -> Self {
        Self {
            place_marking: vec![T::zero(); net.n_places()],
            transition_marking: vec![T::zero(); net.n_transitions()],
            k: 1,
            dt,
        }
    }
}

/// How negative place markings are treated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Nonnegativity {
    /// Sources may go negative (extraction accounting).
    #[default]
    Unbounded,
    Warn,
    Enforce,
}

/// Replaces one arc weight for one step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ArcWeightOverride<T> {
    pub k: usize,
    pub transition: usize,
    pub place: usize,
    pub side: FlowSide,
    pub weight: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOptions<T> {
    pub nonnegativity: Nonnegativity,
    /// Time-varying arc weights. Not part of the base formalism; runs using
    /// them are marked as extended.
    pub weight_overrides: Vec<ArcWeightOverride<T>>,
}

impl<T> Default for SimOptions<T> {
    fn default() -> Self {
        Self {
            nonnegativity: Nonnegativity::Unbounded,
            weight_overrides: Vec::new(),
        }
    }
}

impl<T> SimOptions<T> {
    pub fn with_nonnegativity(nonnegativity: Nonnegativity) -> Self {
        Self {
            nonnegativity,
            weight_overrides: Vec::new(),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("k={k}: {what} has length {found}, expected {expected}")]
    DimensionMismatch {
        k: usize,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("k={k}: firing of transition {transition:?} is negative ({value})")]
    NegativeFiring {
        k: usize,
        transition: String,
        value: f64,
    },
    #[error("k={k}: transition {transition:?} would complete more than is in flight (Q_E = {value})")]
    NegativeTransitionMarking {
        k: usize,
        transition: String,
        value: f64,
    },
    #[error("k={k}: place {place:?} would go negative ({value})")]
    NegativePlaceMarking { k: usize, place: String, value: f64 },
    #[error("schedule covers {found} steps but horizon {horizon} needs {needed}")]
    ScheduleTooShort {
        horizon: usize,
        needed: usize,
        found: usize,
    },
    #[error("k={k}: weight override for transition {transition:?} targets a place without a {side} arc")]
    OverrideOffSupport {
        k: usize,
        transition: String,
        side: FlowSide,
    },
}

/// A negative place marking tolerated under [`Nonnegativity::Warn`].
#[derive(Clone, Debug, PartialEq)]
pub struct SimWarning {
    pub k: usize,
    pub place: String,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stepped<T> {
    pub state: EsnState<T>,
    pub warnings: Vec<SimWarning>,
}

fn check_firing<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    k: usize,
    what: &'static str,
    u: &[T],
) -> Result<(), SimError> {
    if u.len() != net.n_transitions() {
        return Err(SimError::DimensionMismatch {
            k,
            what,
            expected: net.n_transitions(),
            found: u.len(),
        });
    }
    if let Some((t, v)) = u.iter().enumerate().find(|(_, v)| **v < T::zero()) {
        return Err(SimError::NegativeFiring {
            k,
            transition: net.transitions[t].clone(),
            value: v.to_f64_lossy(),
        });
    }
    Ok(())
}

fn check_state<T: Scalar>(net: &EngineeringSystemNet<T>, state: &EsnState<T>) -> Result<(), SimError> {
    let k = state.k;
    if state.place_marking.len() != net.n_places() {
        return Err(SimError::DimensionMismatch {
            k,
            what: "place marking",
            expected: net.n_places(),
            found: state.place_marking.len(),
        });
    }
    if state.transition_marking.len() != net.n_transitions() {
        return Err(SimError::DimensionMismatch {
            k,
            what: "transition marking",
            expected: net.n_transitions(),
            found: state.transition_marking.len(),
        });
    }
    Ok(())
}

fn screen_places<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    k: usize,
    marking: &[T],
    policy: Nonnegativity,
) -> Result<Vec<SimWarning>, SimError> {
    let mut warnings = Vec::new();
    if policy == Nonnegativity::Unbounded {
        return Ok(warnings);
    }
    for (p, &q) in marking.iter().enumerate() {
        if q < T::zero() {
            let place = net.places[p].id.clone();
            let value = q.to_f64_lossy();
            if policy == Nonnegativity::Enforce {
                return Err(SimError::NegativePlaceMarking { k, place, value });
            }
            warnings.push(SimWarning { k, place, value });
        }
    }
    Ok(warnings)
}

/// One application of the full state-transition function.
pub fn step<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    state: &EsnState<T>,
    initiate: &[T],
    complete: &[T],
    policy: Nonnegativity,
) -> Result<Stepped<T>, SimError> {
    let k = state.k;
    check_state(net, state)?;
    check_firing(net, k, "U⁻", initiate)?;
    check_firing(net, k, "U⁺", complete)?;
    let dt = state.dt;

    let mut transition_marking = Vec::with_capacity(net.n_transitions());
    for (t, &qe) in state.transition_marking.iter().enumerate() {
        let next = qe + (initiate[t] - complete[t]) * dt;
        if next < T::zero() {
            return Err(SimError::NegativeTransitionMarking {
                k,
                transition: net.transitions[t].clone(),
                value: next.to_f64_lossy(),
            });
        }
        transition_marking.push(next);
    }

    let inflow = net.pos.mul_vec(complete);
    let outflow = net.neg.mul_vec(initiate);
    let place_marking: Vec<T> = state
        .place_marking
        .iter()
        .zip(inflow.iter().zip(&outflow))
        .map(|(&q, (&a, &b))| q + (a - b) * dt)
        .collect();
    let warnings = screen_places(net, k, &place_marking, policy)?;

    Ok(Stepped {
        state: EsnState {
            place_marking,
            transition_marking,
            k: k + 1,
            dt,
        },
        warnings,
    })
}

/// The instantaneous-firing step: `Q_B[k+1] = Q_B[k] + M·U·ΔT`, `Q_E`
/// carried over unchanged.
pub fn simplified_step<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    state: &EsnState<T>,
    firing: &[T],
    policy: Nonnegativity,
) -> Result<Stepped<T>, SimError> {
    let k = state.k;
    check_state(net, state)?;
    check_firing(net, k, "U", firing)?;
    let dt = state.dt;
    let delta = net.net_product(firing);
    let place_marking: Vec<T> = state
        .place_marking
        .iter()
        .zip(&delta)
        .map(|(&q, &d)| q + d * dt)
        .collect();
    let warnings = screen_places(net, k, &place_marking, policy)?;
    Ok(Stepped {
        state: EsnState {
            place_marking,
            transition_marking: state.transition_marking.clone(),
            k: k + 1,
            dt,
        },
        warnings,
    })
}

/// `U⁻[k]` and `U⁺[k]` for one step.
#[derive(Clone, Debug, PartialEq)]
pub struct Firing<T> {
    pub initiate: Vec<T>,
    pub complete: Vec<T>,
}

impl<T: Scalar> Firing<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            initiate: vec![T::zero(); n],
            complete: vec![T::zero(); n],
        }
    }

    pub fn instantaneous(u: Vec<T>) -> Self {
        Self {
            complete: u.clone(),
            initiate: u,
        }
    }
}

/// Firings for `k = 1, …, K−1`; `steps[0]` is `k = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct FiringSchedule<T> {
    pub steps: Vec<Firing<T>>,
}

impl<T: Scalar> FiringSchedule<T> {
    pub fn zeros(n_transitions: usize, n_steps: usize) -> Self {
        Self {
            steps: vec![Firing::zeros(n_transitions); n_steps],
        }
    }

    pub fn instantaneous(firings: Vec<Vec<T>>) -> Self {
        Self {
            steps: firings.into_iter().map(Firing::instantaneous).collect(),
        }
    }

    pub fn at(&self, k: usize) -> &Firing<T> {
        &self.steps[k - 1]
    }

    /// First `(k, transition)` at which `U⁺ ≠ U⁻`, if any.
    pub fn first_non_instantaneous(&self) -> Option<(usize, usize)> {
        self.steps.iter().enumerate().find_map(|(i, f)| {
            f.initiate
                .iter()
                .zip(&f.complete)
                .position(|(a, b)| a != b)
                .map(|t| (i + 1, t))
        })
    }

    /// `Σ_k (U⁻[k] − U⁺[k])` per transition.
    pub fn net_initiations(&self, n_transitions: usize) -> Vec<T> {
        let mut total = vec![T::zero(); n_transitions];
        for f in &self.steps {
            for t in 0..n_transitions {
                total[t] = total[t] + (f.initiate[t] - f.complete[t]);
            }
        }
        total
    }
}

/// States `Q[1], …, Q[K]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory<T> {
    pub states: Vec<EsnState<T>>,
    pub warnings: Vec<SimWarning>,
    /// Time-varying arc weights were applied.
    pub extended: bool,
}

impl<T: Scalar> Trajectory<T> {
    pub fn horizon(&self) -> usize {
        self.states.len()
    }

    pub fn initial(&self) -> &EsnState<T> {
        &self.states[0]
    }

    pub fn last(&self) -> &EsnState<T> {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    /// `ΔQ_B = Q_B[K] − Q_B[1]`
    pub fn delta_place_marking(&self) -> Vec<T> {
        self.last()
            .place_marking
            .iter()
            .zip(&self.initial().place_marking)
            .map(|(&a, &b)| a - b)
            .collect()
    }
}

fn step_net<'a, T: Scalar>(
    net: &'a EngineeringSystemNet<T>,
    overrides: &[ArcWeightOverride<T>],
    k: usize,
) -> Result<Cow<'a, EngineeringSystemNet<T>>, SimError> {
    let active: Vec<_> = overrides.iter().filter(|o| o.k == k).collect();
    if active.is_empty() {
        return Ok(Cow::Borrowed(net));
    }
    let mut adjusted = net.clone();
    for o in active {
        let matrix = match o.side {
            FlowSide::Pull => &mut adjusted.neg,
            FlowSide::Inject => &mut adjusted.pos,
        };
        if o.transition >= matrix.ncols()
            || o.place >= matrix.nrows()
            || matrix.get(o.place, o.transition).is_zero()
        {
            return Err(SimError::OverrideOffSupport {
                k,
                transition: net.transitions.get(o.transition).cloned().unwrap_or_default(),
                side: o.side,
            });
        }
        *matrix = matrix.with_entry(o.place, o.transition, o.weight);
    }
    adjusted.net = adjusted.pos.sub(&adjusted.neg);
    Ok(Cow::Owned(adjusted))
}

/// Runs `K − 1` steps from `initial`, handing every state (including the
/// initial one) to `sink` without storing the trajectory. Returns the final
/// state and accumulated warnings.
pub fn simulate_streaming<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    initial: EsnState<T>,
    schedule: &FiringSchedule<T>,
    horizon: usize,
    options: &SimOptions<T>,
    mut sink: impl FnMut(&EsnState<T>),
) -> Result<(EsnState<T>, Vec<SimWarning>), SimError> {
    let needed = horizon.saturating_sub(1);
    if schedule.steps.len() < needed {
        return Err(SimError::ScheduleTooShort {
            horizon,
            needed,
            found: schedule.steps.len(),
        });
    }
    let mut warnings = Vec::new();
    let mut state = initial;
    sink(&state);
    for i in 0..needed {
        let k = state.k;
        let current = step_net(net, &options.weight_overrides, k)?;
        let firing = &schedule.steps[i];
        let stepped = step(
            &current,
            &state,
            &firing.initiate,
            &firing.complete,
            options.nonnegativity,
        )?;
        warnings.extend(stepped.warnings);
        state = stepped.state;
        sink(&state);
    }
    Ok((state, warnings))
}

/// Runs `K − 1` steps and keeps every marking.
pub fn simulate<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    initial: EsnState<T>,
    schedule: &FiringSchedule<T>,
    horizon: usize,
    options: &SimOptions<T>,
) -> Result<Trajectory<T>, SimError> {
    let mut states = Vec::with_capacity(horizon);
    let (_, warnings) =
        simulate_streaming(net, initial, schedule, horizon, options, |s| states.push(s.clone()))?;
    Ok(Trajectory {
        states,
        warnings,
        extended: !options.weight_overrides.is_empty(),
    })
}

/// Runs `K − 1` instantaneous steps with [`simplified_step`].
pub fn simulate_simplified<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    initial: EsnState<T>,
    firings: &[Vec<T>],
    horizon: usize,
    options: &SimOptions<T>,
) -> Result<Trajectory<T>, SimError> {
    let needed = horizon.saturating_sub(1);
    if firings.len() < needed {
        return Err(SimError::ScheduleTooShort {
            horizon,
            needed,
            found: firings.len(),
        });
    }
    let mut warnings = Vec::new();
    let mut states = vec![initial];
    for u in firings.iter().take(needed) {
        let state = states.last().expect("non-empty");
        let current = step_net(net, &options.weight_overrides, state.k)?;
        let stepped = simplified_step(&current, state, u, options.nonnegativity)?;
        warnings.extend(stepped.warnings);
        states.push(stepped.state);
    }
    Ok(Trajectory {
        states,
        warnings,
        extended: !options.weight_overrides.is_empty(),
    })
}

// ---------------------------------------------------------------------------
// Duration-aware schedules

/// `amount` of `transition` starts at step `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Initiation<T> {
    pub k: usize,
    pub transition: usize,
    pub amount: T,
}

/// An execution still running when the horizon ends.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InFlight<T> {
    pub initiation: Initiation<T>,
    pub completes_at: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("transition {transition} has duration 0; zero-duration capabilities belong in instantaneous mode")]
    ZeroDuration { transition: usize },
    #[error("transition {transition} is initiated but has no duration")]
    MissingDuration { transition: usize },
    #[error("initiation at k={k} lies outside the firing steps 1..={last} of horizon {horizon}")]
    OutOfHorizon { k: usize, last: usize, horizon: usize },
    #[error("initiation of transition {transition} at k={k} has negative amount")]
    NegativeAmount { k: usize, transition: usize },
    #[error("transition index {transition} out of range ({n} transitions)")]
    UnknownTransition { transition: usize, n: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DurationSchedule<T> {
    pub schedule: FiringSchedule<T>,
    pub in_flight: Vec<InFlight<T>>,
}

/// Durations in steps, keyed by transition index.
pub type Durations = BTreeMap<usize, usize>;

fn check_durations(durations: &Durations, n: usize) -> Result<(), ScheduleError> {
    for (&t, &d) in durations {
        if t >= n {
            return Err(ScheduleError::UnknownTransition { transition: t, n });
        }
        if d == 0 {
            return Err(ScheduleError::ZeroDuration { transition: t });
        }
    }
    Ok(())
}

/// `U⁻[k]` collects the initiations at `k`; each reappears in
/// `U⁺[k + d]`. Completions past the last firing step are returned as
/// in-flight.
pub fn schedule_from_durations<T: Scalar>(
    n_transitions: usize,
    durations: &Durations,
    initiations: &[Initiation<T>],
    horizon: usize,
) -> Result<DurationSchedule<T>, ScheduleError> {
    check_durations(durations, n_transitions)?;
    let last = horizon.saturating_sub(1);
    let mut schedule = FiringSchedule::zeros(n_transitions, last);
    let mut in_flight = Vec::new();
    for init in initiations {
        validate_initiation(init, n_transitions, horizon)?;
        let d = *durations
            .get(&init.transition)
            .ok_or(ScheduleError::MissingDuration {
                transition: init.transition,
            })?;
        let f = &mut schedule.steps[init.k - 1];
        f.initiate[init.transition] = f.initiate[init.transition] + init.amount;
        let done = init.k + d;
        if done <= last {
            let f = &mut schedule.steps[done - 1];
            f.complete[init.transition] = f.complete[init.transition] + init.amount;
        } else {
            in_flight.push(InFlight {
                initiation: *init,
                completes_at: done,
            });
        }
    }
    Ok(DurationSchedule {
        schedule,
        in_flight,
    })
}

fn validate_initiation<T: Scalar>(
    init: &Initiation<T>,
    n: usize,
    horizon: usize,
) -> Result<(), ScheduleError> {
    let last = horizon.saturating_sub(1);
    if init.transition >= n {
        return Err(ScheduleError::UnknownTransition {
            transition: init.transition,
            n,
        });
    }
    if init.k == 0 || init.k > last {
        return Err(ScheduleError::OutOfHorizon {
            k: init.k,
            last,
            horizon,
        });
    }
    if init.amount < T::zero() {
        return Err(ScheduleError::NegativeAmount {
            k: init.k,
            transition: init.transition,
        });
    }
    Ok(())
}

/// Starts `transition` once, at the first step `k ≥ earliest` whose marking
/// at `place` is at least `threshold`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gate<T> {
    pub transition: usize,
    pub amount: T,
    pub place: usize,
    pub threshold: T,
    pub earliest: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DurationRun<T> {
    pub trajectory: Trajectory<T>,
    /// The firings actually applied, gates included.
    pub schedule: FiringSchedule<T>,
    pub in_flight: Vec<InFlight<T>>,
    /// Step at which each gate opened, in gate order.
    pub gate_openings: Vec<Option<usize>>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DurationRunError {
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Duration-aware simulation with state-dependent (gated) initiations.
///
/// At each step the gates are evaluated on the current place marking, then
/// the step fires the scheduled and gated initiations together with every
/// completion falling due.
pub fn simulate_durations<T: Scalar>(
    net: &EngineeringSystemNet<T>,
    initial: EsnState<T>,
    durations: &Durations,
    initiations: &[Initiation<T>],
    gates: &[Gate<T>],
    horizon: usize,
    options: &SimOptions<T>,
) -> Result<DurationRun<T>, DurationRunError> {
    let n = net.n_transitions();
    check_durations(durations, n)?;
    for init in initiations {
        validate_initiation(init, n, horizon)?;
        if !durations.contains_key(&init.transition) {
            return Err(ScheduleError::MissingDuration {
                transition: init.transition,
            }
            .into());
        }
    }
    for g in gates {
        if g.transition >= n {
            return Err(ScheduleError::UnknownTransition {
                transition: g.transition,
                n,
            }
            .into());
        }
        if !durations.contains_key(&g.transition) {
            return Err(ScheduleError::MissingDuration {
                transition: g.transition,
            }
            .into());
        }
    }

    let last = horizon.saturating_sub(1);
    let mut schedule = FiringSchedule::zeros(n, last);
    let mut pending: Vec<InFlight<T>> = Vec::new();
    let mut gate_openings = vec![None; gates.len()];
    let mut warnings = Vec::new();
    let mut states = vec![initial];

    for k in 1..=last {
        let state = states.last().expect("non-empty");
        let mut started: Vec<Initiation<T>> =
            initiations.iter().filter(|i| i.k == k).copied().collect();
        for (g, gate) in gates.iter().enumerate() {
            if gate_openings[g].is_none()
                && k >= gate.earliest
                && state.place_marking[gate.place] >= gate.threshold
            {
                gate_openings[g] = Some(k);
                started.push(Initiation {
                    k,
                    transition: gate.transition,
                    amount: gate.amount,
                });
            }
        }
        let firing = &mut schedule.steps[k - 1];
        for init in &started {
            firing.initiate[init.transition] = firing.initiate[init.transition] + init.amount;
            pending.push(InFlight {
                initiation: *init,
                completes_at: k + durations[&init.transition],
            });
        }
        pending.retain(|f| {
            if f.completes_at == k {
                let t = f.initiation.transition;
                firing.complete[t] = firing.complete[t] + f.initiation.amount;
                false
            } else {
                true
            }
        });

        let current = step_net(net, &options.weight_overrides, k)?;
        let stepped = step(
            &current,
            state,
            &firing.initiate,
            &firing.complete,
            options.nonnegativity,
        )?;
        warnings.extend(stepped.warnings);
        states.push(stepped.state);
    }

    Ok(DurationRun {
        trajectory: Trajectory {
            states,
            warnings,
            extended: !options.weight_overrides.is_empty(),
        },
        schedule,
        in_flight: pending,
        gate_openings,
    })
}
