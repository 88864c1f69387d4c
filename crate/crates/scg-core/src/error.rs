//! Error types shared across the crate.

use thiserror::Error;

use crate::graph::VariableId;

/// Errors raised by graph construction and graph queries.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("graph contains a cycle: {}", cycle.join(" -> "))]
    CycleDetected { cycle: Vec<String> },
    #[error("unknown variable `{0}`")]
    UnknownVariable(VariableId),
    #[error("duplicate variable id `{0}`")]
    DuplicateVariable(VariableId),
    #[error("edge endpoint `{0}` does not exist")]
    MissingEndpoint(VariableId),
    #[error("variable `{0}` has an empty id")]
    EmptyId(VariableId),
    #[error("variable `{id}` is invalid: {reason}")]
    InvalidVariable { id: VariableId, reason: String },
    #[error("utility variable `{0}` must be a sink but has children")]
    UtilityNotSink(VariableId),
}

/// Errors raised by model queries (inference, expected utility).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("profile is missing a policy for decision `{0}`")]
    IncompleteProfile(VariableId),
    #[error("policy for `{decision}` has wrong shape: {reason}")]
    InvalidPolicyShape {
        decision: VariableId,
        reason: String,
    },
    #[error("outcome variable `{0}` must be a chance variable")]
    OutcomeOnDecision(VariableId),
    #[error("value `{value}` is not in the domain of `{variable}`")]
    ValueNotInDomain { variable: VariableId, value: String },
    #[error("`{0}` is not a decision variable")]
    NotADecision(VariableId),
    #[error("model is invalid: {0}")]
    InvalidModel(String),
}

/// Errors raised by equilibrium enumeration.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EquilibriumError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("profile space of {count} profiles exceeds the cap of {cap}")]
    ProfileSpaceTooLarge { count: u128, cap: u128 },
    #[error("no rational outcome exists {context}")]
    NoRationalOutcome { context: String },
    #[error("explicit weight vector is invalid: {0}")]
    InvalidWeights(String),
}

/// Errors raised by pre-policy search.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error(transparent)]
    Equilibrium(#[from] EquilibriumError),
    #[error(transparent)]
    Model(ModelError),
    #[error("candidate space of {count} candidates exceeds the cap of {cap}")]
    CandidateSpaceTooLarge { count: u128, cap: u128 },
    #[error("evaluation of candidate {index} failed: {source}")]
    CandidateFailed {
        index: usize,
        source: EquilibriumError,
    },
}

impl From<ModelError> for SearchError {
    fn from(e: ModelError) -> Self {
        SearchError::Model(e)
    }
}

/// Errors raised by scenario constructors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("gridworld layout is invalid: {0}")]
    LayoutInvalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}
