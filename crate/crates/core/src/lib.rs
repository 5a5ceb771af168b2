//! Process-based life-cycle inventory and its hetero-functional
//! generalization.
//!
//! A declarative [`ingest::ModelFile`] is validated into a
//! [`model::SystemModel`], whose allocations become capabilities. From those
//! the crate builds the incidence matrices `M⁻`, `M⁺`, `M` ([`hfit`]), the
//! Engineering System Net and its simulator ([`esn`]), the classical
//! `A`/`B` matrices and solver ([`lca`]), and the bridge between the two
//! ([`equivalence`]).
//!
//! Numeric code is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, exact rationals, or integer tokens.
//!
//! ```
//! use hfgt_lca::{Analysis, ingest::parse_model_str};
//! # let text = r#"{"schema_version": "1",
//! #   "operands": [{"id": "w", "name": "Widget", "unit": "u"}],
//! #   "resources": [{"id": "f", "name": "Factory", "kind": "transformation"}],
//! #   "processes": [{"id": "make", "name": "Make", "kind": "transformation",
//! #                  "outputs": [{"operand": "w", "quantity": 1}], "primary_output": "w"}],
//! #   "allocations": [{"process": "make", "resource": "f"}]}"#;
//! let raw = parse_model_str("m.json".as_ref(), text).unwrap();
//! let analysis: Analysis = Analysis::new(&raw).unwrap();
//! assert_eq!(analysis.capabilities.len(), 1);
//! assert_eq!(analysis.net.n_places(), 1);
//! ```

pub mod equivalence;
pub mod esn;
pub mod hfit;
pub mod ingest;
pub mod lca;
pub mod linalg;
pub mod model;
pub mod report;
pub mod scalar;
pub mod scenario;
pub mod sparse;
pub mod synth;

use num_rational::Rational64;
use thiserror::Error;

pub use scalar::Scalar;

pub type Model = model::SystemModel<f64>;
pub type Capabilities = model::CapabilitySet<f64>;
pub type Incidence = hfit::IncidenceStructure<f64>;
pub type Net = esn::EngineeringSystemNet<f64>;
pub type State = esn::EsnState<f64>;
pub type Problem = lca::LcaProblem<f64>;
pub type Solution = lca::LcaResult<f64>;

pub type ExactModel = model::SystemModel<Rational64>;
pub type ExactNet = esn::EngineeringSystemNet<Rational64>;
pub type ExactState = esn::EsnState<Rational64>;

/// Integer token counts, for classical Petri-net checks.
pub type TokenNet = esn::EngineeringSystemNet<i64>;
pub type TokenState = esn::EsnState<i64>;

/// A validated model with everything derived from it.
#[derive(Clone, Debug, PartialEq)]
pub struct Analysis<T = f64> {
    pub model: model::SystemModel<T>,
    pub capabilities: model::CapabilitySet<T>,
    pub incidence: hfit::IncidenceStructure<T>,
    pub net: esn::EngineeringSystemNet<T>,
}

impl<T: Scalar> Analysis<T> {
    pub fn new(raw: &ingest::ModelFile) -> Result<Self, Error> {
        Self::with_options(raw, model::EnumerationOptions::default())
    }

    pub fn with_options(
        raw: &ingest::ModelFile,
        options: model::EnumerationOptions,
    ) -> Result<Self, Error> {
        let model = model::validate_model(raw)?;
        let capabilities = model::enumerate_capabilities(&model, options)?;
        let incidence = hfit::build_incidence(&capabilities, &model)?;
        let net = esn::build_esn(&incidence);
        Ok(Self {
            model,
            capabilities,
            incidence,
            net,
        })
    }

    pub fn product_assignment(&self) -> Result<lca::ProductAssignment, Error> {
        Ok(lca::ProductAssignment::from_primary_outputs(
            &self.model,
            &self.capabilities,
        )?)
    }

    /// Classical problem with zero demand, assembled from the capabilities.
    pub fn lca_problem(&self) -> Result<lca::LcaProblem<T>, Error> {
        let products = self.product_assignment()?;
        Ok(lca::assemble_lca(
            &self.model,
            &self.capabilities,
            &self.model.aspects,
            &products,
        )?)
    }
}

/// Any failure, mapped onto the CLI exit-code classes.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Ingest(#[from] ingest::IngestError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Incidence(#[from] hfit::IncidenceError),
    #[error(transparent)]
    Bind(#[from] scenario::BindError),
    #[error(transparent)]
    Lca(#[from] lca::LcaError),
    #[error(transparent)]
    Sim(#[from] esn::SimError),
    #[error(transparent)]
    Schedule(#[from] esn::ScheduleError),
    #[error(transparent)]
    Equivalence(#[from] equivalence::EquivalenceError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl From<esn::DurationRunError> for Error {
    fn from(e: esn::DurationRunError) -> Self {
        match e {
            esn::DurationRunError::Schedule(s) => Error::Schedule(s),
            esn::DurationRunError::Sim(s) => Error::Sim(s),
        }
    }
}

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_IO: i32 = 3;

fn lca_exit(e: &lca::LcaError) -> i32 {
    match e {
        lca::LcaError::Singular { .. } => EXIT_NUMERICAL,
        _ => EXIT_VALIDATION,
    }
}

fn sim_exit(e: &esn::SimError) -> i32 {
    match e {
        esn::SimError::NegativeTransitionMarking { .. } | esn::SimError::NegativePlaceMarking { .. } => {
            EXIT_NUMERICAL
        }
        _ => EXIT_VALIDATION,
    }
}

impl Error {
    /// 1 validation, 2 numerical failure, 3 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Ingest(e) if e.is_io() => EXIT_IO,
            Error::Io { .. } => EXIT_IO,
            Error::Lca(e) => lca_exit(e),
            Error::Sim(e) => sim_exit(e),
            Error::Equivalence(equivalence::EquivalenceError::Lca(e)) => lca_exit(e),
            Error::Equivalence(equivalence::EquivalenceError::Sim(e)) => sim_exit(e),
            _ => EXIT_VALIDATION,
        }
    }
}
