//! Simulation and verification laboratory for counterfactual quantum
//! computation protocols: un-normalized history trees over switch/output
//! computers, counterfactual-outcome classification, a gallery of reference
//! protocols, and executable forms of the efficiency bounds.

pub mod bounds;
pub mod cf;
pub mod error;
pub mod gallery;
pub mod history;
pub mod protocol;
pub mod tensor;

pub use bounds::{
    check_n1_bounds, check_probability_sum_bound, min_sum_squares, n_lower_bound, random_protocol,
    BoundCheck, RandomProtocolConfig, SweepPoint, SweepResult,
};
pub use cf::{
    classify, classify_approx, ifm_check, ApproxCFOutcome, CFOutcome, CFReport, ClassifyOptions,
};
pub use error::{Error, Result};
pub use history::{expand, BranchLabel, ExpandOptions, History, HistoryTree, OutcomeSequence};
pub use protocol::{
    computational_outcomes, defer_measurements, ComputerModel, MeasurementOutcome, Protocol,
    ProtocolStep, SubspaceLabel, SubspaceSignature, VariantSpec,
};
pub use tensor::{
    apply_on_targets, project, Amp, OperatorMatrix, SpaceLayout, StateVector, ALG_TOL, ZERO_TOL,
};
