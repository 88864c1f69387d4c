//! Finite structural causal games.
//!
//! A game is a DAG over chance, decision, and utility variables together with
//! conditional probability tables and agent ownership. This crate provides:
//!
//! - the graph substrate: typed DAGs, d-separation, mechanised graphs
//!   ([`graph`]);
//! - the game model with exact brute-force inference ([`model`]);
//! - Nash equilibrium enumeration, pure and on a behavioural simplex grid
//!   ([`equilibrium`]);
//! - strategic relevance: s-reachability, the s-relevance graph, and
//!   sufficient recall ([`relevance`]);
//! - pre-policy interventions and their causal effect on a designated
//!   outcome ([`intervention`]);
//! - a score-function search for the pre-policy maximizing the interventional
//!   outcome probability, plus an exhaustive oracle ([`search`]);
//! - built-in scenario games, including a gridworld ([`scenarios`]);
//! - a JSON game-description file format ([`gamefile`]).

pub mod equilibrium;
pub mod error;
pub mod gamefile;
pub mod graph;
pub mod intervention;
pub mod model;
pub mod relevance;
pub mod scenarios;
pub mod search;

pub use error::{EquilibriumError, GraphError, ModelError, ScenarioError, SearchError};
pub use graph::{AgentId, Dag, Domain, VarKind, Variable, VariableId};
pub use model::{
    BehaviouralPolicy, ConditionalTable, OutcomeSpec, PolicyProfile, Scg, Violation, PROB_TOL,
};
